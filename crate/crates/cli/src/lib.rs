//! Front end of the `barysub` binary: argument model, command dispatch and
//! report writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use barysub::grid::{Extension, IndexBox};
use barysub::linear::{
    cascade, contractivity_certificate, linear_convergence_test, partition_of_unity_residual,
    trial_rng, trial_window, ContractivityCertificate, LinearConvergence, RefinableSamples,
};
use barysub::markov::{
    dispersion_gap, kernel_row, lp_moment, nonassociativity_gap, simulate_chain,
    stationary_from_refinable, tv_distance, EmpiricalRow, KernelRow, StationaryReport,
};
use barysub::masks::{default_gauge, validate_mask, Mask, MaskReport};
use barysub::spaces::{distance, geodesic_point, sample_point, SpaceDescriptor, SpacePoint};
use barysub::subdivision::{
    approximation_error, convergence_diagnostic, empirical_gamma, iterate, ApproximationReport,
    ConvergenceDiagnostic, EmpiricalGamma, GridData, IterateTrace,
};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

pub const DEFAULT_CASCADE_LEVELS: u32 = 6;
pub const DEFAULT_CAP: u32 = 8;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_MC_TRIALS: usize = 100_000;
pub const DEFAULT_LP_STEPS: u32 = 8;
pub const DEFAULT_H: f64 = 0.1;
/// Cascade level used to locate the stationary distribution for `lp`.
const LP_CASCADE_LEVEL: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Sum rule, nonnegativity and support checks of a mask.
    Validate,
    /// Refinable function samples and the stationary distribution.
    Cascade,
    /// Weak contractivity certificate of the linear scheme.
    Certify,
    /// Iterate the barycentric scheme on a data file.
    Subdivide,
    /// Decay rates and convergence verdict on random or given data.
    Diagnose,
    /// Kernel row of the characteristic chain, exact or Monte Carlo.
    Chain,
    /// L^p moments of the chain about its stationary point.
    Lp,
    /// Non-associativity gap at one index of a data file.
    Gap,
    /// Approximation error for a sampled Lipschitz curve.
    Approx,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Cascade => "cascade",
            Command::Certify => "certify",
            Command::Subdivide => "subdivide",
            Command::Diagnose => "diagnose",
            Command::Chain => "chain",
            Command::Lp => "lp",
            Command::Gap => "gap",
            Command::Approx => "approx",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

fn parse_space(s: &str) -> Result<SpaceDescriptor, String> {
    s.parse::<SpaceDescriptor>().map_err(|e| e.to_string())
}

/// Barycentric subdivision experiments.
#[derive(Clone, Debug, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "barysub", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Mask JSON file.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Grid data JSON file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target space as `kind:dim`, e.g. `spd:2` or `tripod`.
    #[arg(long, value_parser = parse_space)]
    pub space: Option<SpaceDescriptor>,
    /// Refinement or cascade levels.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Chain steps.
    #[arg(long)]
    pub steps: Option<u32>,
    /// Largest step count of an `lp` curve.
    #[arg(long)]
    pub max_steps: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moment exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Chain start, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<i64>>,
    /// Grid index, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub index: Option<Vec<i64>>,
    /// Level cap of the certificate search.
    #[arg(long)]
    pub cap: Option<u32>,
    /// Sampling step of `approx`.
    #[arg(long)]
    pub h: Option<f64>,
    /// Exact kernel row (default for `chain`).
    #[arg(long, conflicts_with = "mc")]
    #[serde(default)]
    pub exact: bool,
    /// Monte Carlo estimate, optionally `trials=N`.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    pub mc: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    /// Configuration with every optional input unset.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            mask: None,
            data: None,
            space: None,
            levels: None,
            steps: None,
            max_steps: None,
            trials: None,
            seed: 0,
            p: None,
            start: None,
            index: None,
            cap: None,
            h: None,
            exact: false,
            mc: None,
            out: None,
            format: Format::Json,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] barysub::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

/// Machine-readable error report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<Vec<i64>>,
}

impl CliError {
    pub fn report(&self) -> ErrorReport {
        let mut r = ErrorReport {
            kind: self.kind().to_string(),
            message: self.to_string(),
            file: None,
            line: None,
            column: None,
            index: None,
        };
        match self {
            CliError::Io { path, .. } => r.file = Some(path.clone()),
            CliError::Parse {
                path, line, column, ..
            } => {
                r.file = Some(path.clone());
                r.line = Some(*line);
                r.column = Some(*column);
            }
            CliError::Library(barysub::Error::AtIndex { index, .. }) => {
                r.index = Some(index.clone())
            }
            _ => {}
        }
        r
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Usage(_) => "usage",
            CliError::Library(e) => e.kind(),
            CliError::Output(_) => "output",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub barysub: String,
    pub cli: String,
}

/// Self-describing output of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub config: RunConfig,
    pub payload: Payload,
    pub versions: Versions,
    pub duration_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Validate {
        mask: Mask,
        report: MaskReport,
    },
    Cascade {
        samples: RefinableSamples,
        partition_of_unity_residual: f64,
        stationary: StationaryReport,
    },
    Certify {
        certificate: ContractivityCertificate,
    },
    Subdivide {
        trace: IterateTrace,
    },
    Diagnose {
        space: SpaceDescriptor,
        empirical: EmpiricalGamma,
        linear: LinearConvergence,
        diagnostic: ConvergenceDiagnostic,
    },
    Chain {
        exact: KernelRow,
        monte_carlo: Option<EmpiricalRow>,
        tv_distance: Option<f64>,
    },
    Lp {
        start: Vec<i64>,
        center: Vec<i64>,
        p: f64,
        curve: Vec<LpPoint>,
    },
    Gap {
        index: Vec<i64>,
        steps: u32,
        gap: f64,
    },
    Approx {
        space: SpaceDescriptor,
        lipschitz: f64,
        radius: f64,
        h: f64,
        report: ApproximationReport,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpPoint {
    pub n: u32,
    pub moment: f64,
    pub dispersion: f64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn require<'a, T>(value: &'a Option<T>, flag: &str, command: Command) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", command.name())))
}

fn load_mask(config: &RunConfig) -> Result<Mask, CliError> {
    read_json(require(&config.mask, "mask", config.command)?)
}

fn load_data(config: &RunConfig) -> Result<GridData, CliError> {
    read_json(require(&config.data, "data", config.command)?)
}

fn mc_trials(config: &RunConfig) -> Result<Option<usize>, CliError> {
    let Some(spec) = &config.mc else {
        return Ok(None);
    };
    if spec.is_empty() {
        return Ok(Some(config.trials.unwrap_or(DEFAULT_MC_TRIALS)));
    }
    let value = spec.strip_prefix("trials=").unwrap_or(spec);
    value
        .parse()
        .map(Some)
        .map_err(|_| CliError::Usage(format!("--mc expects trials=N, got {spec:?}")))
}

/// Unit-speed curve folded back on itself: `f(t) = g(min(|t - c| / L, 1))`
/// for the geodesic `g` from `p` to `q` of length `L`, with `c = L / 3`.
struct FoldedGeodesic {
    p: SpacePoint,
    q: SpacePoint,
    length: f64,
}

impl FoldedGeodesic {
    fn at(&self, t: f64) -> SpacePoint {
        let c = self.length / 3.0;
        let u = ((t - c).abs() / self.length).min(1.0);
        geodesic_point(&self.p, &self.q, u).expect("parameter in [0, 1]")
    }
}

fn run_approx(config: &RunConfig, a: &Mask) -> Result<Payload, CliError> {
    if a.dim() != 1 {
        return Err(CliError::Usage(
            "approx samples curves and needs a univariate mask".into(),
        ));
    }
    let space = config.space.unwrap_or(SpaceDescriptor::hyperboloid(2));
    let h = config.h.unwrap_or(DEFAULT_H);
    let levels = config.levels.unwrap_or(5);
    let mut rng = trial_rng(config.seed, 0);
    let curve = loop {
        let p = sample_point(space, &mut rng);
        let q = sample_point(space, &mut rng);
        let length = distance(&p, &q)?;
        if length > 0.0 {
            break FoldedGeodesic { p, q, length };
        }
    };
    let radius = default_gauge(a)
        .half_widths()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let margin = trial_window(a, levels).hi[0];
    let last = (curve.length / h).ceil() as i64;
    let window = IndexBox::cube(1, -margin, last + margin);
    let report = approximation_error(a, |t| curve.at(t[0]), 1.0, radius, h, levels, window)?;
    Ok(Payload::Approx {
        space,
        lipschitz: 1.0,
        radius,
        h,
        report,
    })
}

fn dispatch(config: &RunConfig) -> Result<Payload, CliError> {
    let cmd = config.command;
    Ok(match cmd {
        Command::Validate => {
            let mask = load_mask(config)?;
            let report = validate_mask(&mask);
            Payload::Validate { mask, report }
        }
        Command::Cascade => {
            let a = load_mask(config)?;
            let samples = cascade(&a, config.levels.unwrap_or(DEFAULT_CASCADE_LEVELS))?;
            let stationary = stationary_from_refinable(&samples)?;
            Payload::Cascade {
                partition_of_unity_residual: partition_of_unity_residual(&samples),
                samples,
                stationary,
            }
        }
        Command::Certify => {
            let a = load_mask(config)?;
            Payload::Certify {
                certificate: contractivity_certificate(&a, config.cap.unwrap_or(DEFAULT_CAP))?,
            }
        }
        Command::Subdivide => {
            let a = load_mask(config)?;
            let x = load_data(config)?;
            Payload::Subdivide {
                trace: iterate(&a, &x, config.levels.unwrap_or(1))?,
            }
        }
        Command::Diagnose => {
            let a = load_mask(config)?;
            let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
            let n_max = config.levels.unwrap_or(6);
            let (space, x) = match &config.data {
                Some(_) => {
                    let x = load_data(config)?;
                    (config.space.unwrap_or(x.descriptor()), x)
                }
                None => {
                    let space = config.space.unwrap_or(SpaceDescriptor::euclidean(1));
                    let mut rng = trial_rng(config.seed, trials as u64);
                    let window = trial_window(&a, n_max);
                    let x = GridData::random(space, window, Extension::ConstantNearest, &mut rng)?;
                    (space, x)
                }
            };
            Payload::Diagnose {
                space,
                empirical: empirical_gamma(&a, space, trials, n_max, config.seed)?,
                linear: linear_convergence_test(&a, trials, n_max, config.seed)?,
                diagnostic: convergence_diagnostic(&a, &x, n_max)?,
            }
        }
        Command::Chain => {
            let a = load_mask(config)?;
            let start = require(&config.start, "start", cmd)?;
            let steps = *require(&config.steps, "steps", cmd)?;
            let exact = kernel_row(&a, start, steps)?;
            let monte_carlo = match mc_trials(config)? {
                Some(trials) => Some(simulate_chain(&a, start, steps, trials, config.seed)?),
                None => None,
            };
            let tv = monte_carlo
                .as_ref()
                .map(|mc| tv_distance(&mc.freqs, &exact.probs));
            Payload::Chain {
                exact,
                monte_carlo,
                tv_distance: tv,
            }
        }
        Command::Lp => {
            let a = load_mask(config)?;
            let start = config.start.clone().unwrap_or_else(|| vec![0; a.dim()]);
            let p = config.p.unwrap_or(2.0);
            let max_steps = config
                .max_steps
                .or(config.steps)
                .unwrap_or(DEFAULT_LP_STEPS);
            let stationary = stationary_from_refinable(&cascade(&a, LP_CASCADE_LEVEL)?)?;
            let center = match (&config.index, &stationary.interpolatory) {
                (Some(k), _) => k.clone(),
                (None, Some(k)) => k.clone(),
                (None, None) => vec![0; a.dim()],
            };
            let mut curve = Vec::with_capacity(max_steps as usize);
            for n in 1..=max_steps {
                curve.push(LpPoint {
                    n,
                    moment: lp_moment(&a, &start, n, p, &center)?,
                    dispersion: dispersion_gap(&a, &start, n, p)?,
                });
            }
            Payload::Lp {
                start,
                center,
                p,
                curve,
            }
        }
        Command::Gap => {
            let a = load_mask(config)?;
            let x = load_data(config)?;
            let index = require(&config.index, "index", cmd)?.clone();
            let steps = *require(&config.steps, "steps", cmd)?;
            let gap = nonassociativity_gap(&a, &x, &index, steps)?;
            Payload::Gap { index, steps, gap }
        }
        Command::Approx => {
            let a = load_mask(config)?;
            run_approx(config, &a)?
        }
    })
}

/// Runs one command.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let payload = dispatch(config)?;
    Ok(Report {
        command: config.command,
        config: config.clone(),
        payload,
        versions: Versions {
            barysub: barysub::VERSION.to_string(),
            cli: env!("CARGO_PKG_VERSION").to_string(),
        },
        duration_seconds: started.elapsed().as_secs_f64(),
    })
}

fn full(v: f64) -> String {
    format!("{v:.16e}")
}

fn state_columns(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (0..dim).map(|k| format!("{prefix}{k}")).collect()
    }
}

/// Rows of the CSV view of a payload; `None` for payloads without a series.
pub fn csv_rows(payload: &Payload) -> Option<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    match payload {
        Payload::Cascade { samples, .. } => {
            let dim = samples.dim();
            let scale = (1u64 << samples.level) as f64;
            let mut header = state_columns("i", dim);
            header.extend(state_columns("t", dim));
            header.push("phi".into());
            rows.push(header);
            for (i, v) in samples.values.support() {
                let mut row: Vec<String> = i.iter().map(|v| v.to_string()).collect();
                row.extend(i.iter().map(|v| full(*v as f64 / scale)));
                row.push(full(v));
                rows.push(row);
            }
        }
        Payload::Certify { certificate } => {
            rows.push(vec![
                "n".into(),
                "alpha".into(),
                "eps".into(),
                "gamma".into(),
            ]);
            for l in &certificate.levels {
                rows.push(vec![
                    l.level.to_string(),
                    full(l.alpha),
                    full(l.eps),
                    full(l.gamma),
                ]);
            }
        }
        Payload::Subdivide { trace } => {
            rows.push(vec!["n".into(), "d_inf".into(), "d_gauge".into()]);
            for (n, (d, g)) in trace
                .d_inf_series
                .iter()
                .zip(&trace.gauge_series)
                .enumerate()
            {
                rows.push(vec![n.to_string(), full(*d), full(*g)]);
            }
        }
        Payload::Diagnose { diagnostic, .. } => {
            rows.push(vec!["n".into(), "cauchy".into()]);
            for (n, c) in diagnostic.cauchy_series.iter().enumerate() {
                rows.push(vec![n.to_string(), full(*c)]);
            }
        }
        Payload::Chain {
            exact, monte_carlo, ..
        } => {
            let mut header = state_columns("j", exact.start.len());
            header.push("exact".into());
            if monte_carlo.is_some() {
                header.push("empirical".into());
            }
            rows.push(header);
            let mut states: Vec<&Vec<i64>> = exact.probs.keys().collect();
            if let Some(mc) = monte_carlo {
                states.extend(mc.freqs.keys().filter(|k| !exact.probs.contains_key(*k)));
                states.sort();
            }
            for j in states {
                let mut row: Vec<String> = j.iter().map(|v| v.to_string()).collect();
                row.push(full(exact.prob(j)));
                if let Some(mc) = monte_carlo {
                    row.push(full(mc.freqs.get(j).copied().unwrap_or(0.0)));
                }
                rows.push(row);
            }
        }
        Payload::Lp { curve, .. } => {
            rows.push(vec!["n".into(), "moment".into()]);
            for pt in curve {
                rows.push(vec![pt.n.to_string(), full(pt.moment)]);
            }
        }
        _ => return None,
    }
    Some(rows)
}

/// Serializes a report in the configured format.
pub fn render(report: &Report) -> Result<String, CliError> {
    match report.config.format {
        Format::Json => serde_json::to_string_pretty(report)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Output(e.to_string())),
        Format::Csv => {
            let rows = csv_rows(&report.payload).ok_or_else(|| {
                CliError::Usage(format!(
                    "csv output is only available for series; use --format json for {}",
                    report.command.name()
                ))
            })?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.write_record(&row)
                    .map_err(|e| CliError::Output(e.to_string()))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Output(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

/// Runs, renders and writes to `--out` or standard output.
pub fn execute(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = run(config)?;
    let text = render(&report)?;
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}
