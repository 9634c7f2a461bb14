use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use barysub::grid::{Extension, IndexBox};
use barysub::linear::trial_rng;
use barysub::masks::Mask;
use barysub::spaces::SpaceDescriptor;
use barysub::subdivision::{GridData, Verdict};
use barysub_cli::{render, run, Command, Format, Payload, Report, RunConfig};
use tempfile::TempDir;

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn lazy() -> Mask {
    Mask::univariate(0, vec![1.0, 0.0, 0.0, 1.0]).unwrap()
}

fn config(command: Command, mask: &Path) -> RunConfig {
    RunConfig {
        mask: Some(mask.to_path_buf()),
        ..RunConfig::new(command)
    }
}

struct Fixture {
    dir: TempDir,
    hat: PathBuf,
    chaikin: PathBuf,
    lazy: PathBuf,
    data: PathBuf,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let hat = write_json(dir.path(), "b.json", &Mask::hat());
    let chaikin = write_json(dir.path(), "chaikin.json", &Mask::chaikin());
    let lazy = write_json(dir.path(), "lazy.json", &lazy());
    let mut rng = trial_rng(5, 0);
    let x = GridData::random(
        SpaceDescriptor::tripod(),
        IndexBox::cube(1, 0, 10),
        Extension::ConstantNearest,
        &mut rng,
    )
    .unwrap();
    let data = write_json(dir.path(), "data.json", &x);
    Fixture {
        dir,
        hat,
        chaikin,
        lazy,
        data,
    }
}

fn all_configs(f: &Fixture) -> Vec<RunConfig> {
    vec![
        config(Command::Validate, &f.hat),
        RunConfig {
            levels: Some(4),
            ..config(Command::Cascade, &f.chaikin)
        },
        config(Command::Certify, &f.chaikin),
        RunConfig {
            data: Some(f.data.clone()),
            levels: Some(3),
            ..config(Command::Subdivide, &f.chaikin)
        },
        RunConfig {
            space: Some(SpaceDescriptor::spd(2)),
            trials: Some(3),
            levels: Some(5),
            seed: 7,
            ..config(Command::Diagnose, &f.chaikin)
        },
        RunConfig {
            start: Some(vec![1]),
            steps: Some(3),
            mc: Some("trials=5000".into()),
            seed: 3,
            ..config(Command::Chain, &f.chaikin)
        },
        RunConfig {
            start: Some(vec![1]),
            p: Some(1.0),
            ..config(Command::Lp, &f.hat)
        },
        RunConfig {
            data: Some(f.data.clone()),
            index: Some(vec![12]),
            steps: Some(2),
            ..config(Command::Gap, &f.chaikin)
        },
        RunConfig {
            h: Some(0.2),
            seed: 4,
            ..config(Command::Approx, &f.hat)
        },
    ]
}

#[test]
fn validate_reports_sum_rule() {
    let f = fixture();
    let report = run(&config(Command::Validate, &f.hat)).unwrap();
    match report.payload {
        Payload::Validate { report, .. } => assert!(report.sum_rule_ok),
        other => panic!("unexpected payload {other:?}"),
    }
}

#[test]
fn lp_curve_for_hat() {
    let f = fixture();
    let report = run(&RunConfig {
        start: Some(vec![1]),
        p: Some(1.0),
        ..config(Command::Lp, &f.hat)
    })
    .unwrap();
    let Payload::Lp { curve, center, .. } = report.payload else {
        panic!("wrong payload");
    };
    assert_eq!(center, vec![0]);
    assert_eq!(curve.len(), 8);
    for pt in curve {
        assert_eq!(pt.moment, 0.5f64.powi(pt.n as i32));
    }
}

#[test]
fn diagnose_lazy_mask_is_inconclusive() {
    let f = fixture();
    let report = run(&RunConfig {
        trials: Some(3),
        seed: 7,
        ..config(Command::Diagnose, &f.lazy)
    })
    .unwrap();
    let Payload::Diagnose {
        diagnostic, linear, ..
    } = report.payload
    else {
        panic!("wrong payload");
    };
    assert_eq!(diagnostic.verdict, Verdict::Inconclusive);
    assert!(!linear.converges);
}

#[test]
fn json_payloads_round_trip() {
    let f = fixture();
    for c in all_configs(&f) {
        let report = run(&c).unwrap();
        let text = render(&report).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report, "{:?}", c.command);
        assert_eq!(render(&back).unwrap(), text);
    }
}

#[test]
fn runs_are_deterministic() {
    let f = fixture();
    for c in all_configs(&f) {
        let mut a = run(&c).unwrap();
        let mut b = run(&c).unwrap();
        a.duration_seconds = 0.0;
        b.duration_seconds = 0.0;
        assert_eq!(render(&a).unwrap(), render(&b).unwrap(), "{:?}", c.command);
    }
}

#[test]
fn csv_only_for_series() {
    let f = fixture();
    for c in all_configs(&f) {
        let c = RunConfig {
            format: Format::Csv,
            ..c
        };
        let report = run(&c).unwrap();
        let series = matches!(
            c.command,
            Command::Cascade
                | Command::Certify
                | Command::Subdivide
                | Command::Diagnose
                | Command::Chain
                | Command::Lp
        );
        assert_eq!(render(&report).is_ok(), series, "{:?}", c.command);
    }
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_barysub"))
}

#[test]
fn binary_writes_csv_curve() {
    let f = fixture();
    let out = f.dir.path().join("curve.csv");
    let status = binary()
        .args([
            "lp",
            "--start",
            "1",
            "--p",
            "1",
            "--max-steps",
            "4",
            "--format",
            "csv",
        ])
        .arg("--mask")
        .arg(&f.hat)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["n", "moment"]);
    let rows: Vec<(u32, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(1, 0.5), (2, 0.25), (3, 0.125), (4, 0.0625)]);
}

#[test]
fn binary_chain_flags() {
    let f = fixture();
    let output = binary()
        .args([
            "chain",
            "--start",
            "1",
            "--steps",
            "1",
            "--mc",
            "trials=20000",
            "--seed",
            "3",
        ])
        .arg("--mask")
        .arg(&f.hat)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: Report = serde_json::from_slice(&output.stdout).unwrap();
    let Payload::Chain {
        tv_distance, exact, ..
    } = report.payload
    else {
        panic!("wrong payload");
    };
    assert_eq!(exact.prob(&[0]), 0.5);
    assert!(tv_distance.unwrap() <= 0.02);
}

#[test]
fn errors_are_structured() {
    let f = fixture();
    let missing = f.dir.path().join("missing.json");
    let output = binary()
        .arg("validate")
        .arg("--mask")
        .arg(&missing)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");

    let broken = f.dir.path().join("broken.json");
    fs::write(
        &broken,
        "{\n  \"dim\": 1,\n  \"offset\": [0],\n  \"coeffs\": [1, \n",
    )
    .unwrap();
    let output = binary()
        .arg("validate")
        .arg("--mask")
        .arg(&broken)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["line"], 5);

    let bad_mask = write_json(
        f.dir.path(),
        "half.json",
        &Mask::univariate(0, vec![0.5, 0.5]).unwrap(),
    );
    let output = binary()
        .arg("certify")
        .arg("--mask")
        .arg(&bad_mask)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "domain");

    let output = binary()
        .arg("chain")
        .arg("--mask")
        .arg(&f.hat)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("--start"));
}
