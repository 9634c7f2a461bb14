//! Acceptance suite: one pass/fail line per criterion, printed to stderr.

use std::io::Write;
use std::time::{Duration, Instant};

use barysub::grid::{Extension, IndexBox};
use barysub::linear::{
    cascade, contractivity_certificate, gamma_bound, lattice_count, linear_subdivide,
    near_diagonal_overlap, trial_rng, trial_window,
};
use barysub::markov::{
    ball_confinement, dispersion_gap, kernel_row, lp_moment, nonassociativity_gap, simulate_chain,
    stationary_from_refinable, tv_distance, Distribution,
};
use barysub::masks::{default_gauge, iterated_mask, Mask};
use barysub::spaces::{
    distance, geodesic_point, npc_residual, sample_point, SpaceDescriptor, SpacePoint,
};
use barysub::subdivision::{approximation_error, empirical_gamma, iterate, subdivide, GridData};
use rand::Rng;

type Check = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn lazy() -> Mask {
    Mask::univariate(0, vec![1.0, 0.0, 0.0, 1.0]).unwrap()
}

fn masks3() -> Vec<(&'static str, Mask)> {
    vec![
        ("b", Mask::hat()),
        ("chaikin", Mask::chaikin()),
        ("b⊗b", Mask::hat_power(2)),
    ]
}

fn as_real(p: &SpacePoint) -> f64 {
    p.as_euclidean().unwrap()[0]
}

fn linear_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (m, (_, a)) in masks3().into_iter().enumerate() {
        for trial in 0..50 {
            let mut rng = trial_rng(1000 + m as u64, trial);
            let x = GridData::random(
                SpaceDescriptor::euclidean(1),
                trial_window(&a, 2),
                Extension::ConstantNearest,
                &mut rng,
            )
            .unwrap();
            let mut y = x.clone();
            let mut z = x.grid().map(as_real);
            for _ in 0..2 {
                y = subdivide(&a, &y).unwrap();
                z = linear_subdivide(&a, &z).unwrap();
                for (p, v) in y.points().iter().zip(z.values()) {
                    worst = worst.max((as_real(p) - v).abs());
                }
            }
            count += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("{count} instances, max |S x - S_lin x| = {worst:.3e} (tol 1e-12)"),
    }
}

fn npc_soundness() -> Outcome {
    let spaces = [
        SpaceDescriptor::euclidean(3),
        SpaceDescriptor::spd(2),
        SpaceDescriptor::spd(3),
        SpaceDescriptor::hyperboloid(2),
        SpaceDescriptor::hyperboloid(3),
        SpaceDescriptor::tripod(),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (k, desc) in spaces.iter().enumerate() {
        let mut rng = trial_rng(2000, k as u64);
        let mut local = f64::NEG_INFINITY;
        for _ in 0..500 {
            let x0 = sample_point(*desc, &mut rng);
            let x1 = sample_point(*desc, &mut rng);
            let z = sample_point(*desc, &mut rng);
            local = local.max(npc_residual(&x0, &x1, &z).unwrap());
        }
        parts.push(format!("{desc}: {local:.2e}"));
        worst = worst.max(local);
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!(
            "max residual over 500 triples each: {} (tol 1e-9)",
            parts.join(", ")
        ),
    }
}

fn hat_exactness() -> Outcome {
    let mut mismatches = 0;
    let mut max_eps: f64 = 0.0;
    for n in 1..=10u32 {
        let r = cascade(&Mask::hat(), n).unwrap();
        let scale = (1i64 << n) as f64;
        for i in -(1i64 << n) - 2..=(1i64 << n) + 2 {
            let expected = (1.0 - (i as f64 / scale).abs()).max(0.0);
            if r.at(&[i]) != expected {
                mismatches += 1;
            }
        }
        max_eps = max_eps.max(r.eps_n);
    }
    Outcome {
        pass: mismatches == 0 && max_eps == 0.0,
        detail: format!("n = 1..10: {mismatches} inexact samples, max eps_n = {max_eps:e}"),
    }
}

fn certificate() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, a) in [("b", Mask::hat()), ("chaikin", Mask::chaikin())] {
        let cert = contractivity_certificate(&a, 8).unwrap();
        let gauge = default_gauge(&a);
        let m = lattice_count(&gauge);
        let centred = a.recentred();
        let mut identity = cert.m == m;
        for l in &cert.levels {
            let samples = cascade(&centred, l.level).unwrap();
            let alpha = near_diagonal_overlap(&samples.values, l.level, &gauge);
            let eps = samples.eps_n;
            let gamma = 1.0 - alpha + 2.0 * eps + (m * m) as f64 * eps * eps;
            identity &= alpha == l.alpha && eps == l.eps && gamma == l.gamma;
            identity &= gamma_bound(l.alpha, l.eps, cert.m) == l.gamma;
        }
        let good = cert.found && cert.n0.is_some_and(|n| n <= 8) && cert.gamma_n < 1.0 && identity;
        ok &= good;
        parts.push(format!(
            "{name}: found={} n0={:?} gamma={:.4} identity={identity}",
            cert.found, cert.n0, cert.gamma_n
        ));
    }
    let cert = contractivity_certificate(&lazy(), 8).unwrap();
    ok &= !cert.found;
    parts.push(format!("(1,0,0,1): found={}", cert.found));
    Outcome {
        pass: ok,
        detail: parts.join("; "),
    }
}

fn geometric_decay() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for desc in [SpaceDescriptor::spd(2), SpaceDescriptor::hyperboloid(2)] {
        let b = empirical_gamma(&Mask::hat(), desc, 20, 6, 5).unwrap();
        let c = empirical_gamma(&Mask::chaikin(), desc, 20, 6, 5).unwrap();
        ok &= b.gamma_hat <= 0.55 && c.gamma_hat < 1.0 - 1e-2;
        parts.push(format!(
            "{desc}: b {:.4} (<= 0.55), chaikin {:.4} (< 0.99)",
            b.gamma_hat, c.gamma_hat
        ));
    }
    Outcome {
        pass: ok,
        detail: parts.join("; "),
    }
}

fn jensen() -> Outcome {
    let spaces = [
        SpaceDescriptor::euclidean(2),
        SpaceDescriptor::spd(2),
        SpaceDescriptor::hyperboloid(2),
        SpaceDescriptor::tripod(),
    ];
    let masks = [Mask::hat(), Mask::chaikin()];
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for instance in 0..200u64 {
        let mut rng = trial_rng(6000, instance);
        let a = &masks[(instance % 2) as usize];
        let desc = spaces[((instance / 2) % 4) as usize];
        let n: u32 = rng.gen_range(1..=3);
        let x = GridData::random(
            desc,
            trial_window(a, n),
            Extension::ConstantNearest,
            &mut rng,
        )
        .unwrap();
        let z = sample_point(desc, &mut rng);
        let trace = iterate(a, &x, n).unwrap();
        let an = iterated_mask(a, n).unwrap();
        let level = &trace.levels[n as usize];
        let period = 1i64 << n;
        for i in level.interior().iter() {
            let lhs = distance(level.get(&i), &z).unwrap();
            let mut rhs = 0.0;
            for (k, w) in an.support() {
                if (i[0] - k[0]).rem_euclid(period) == 0 {
                    rhs += w * distance(x.get(&[(i[0] - k[0]) / period]), &z).unwrap();
                }
            }
            worst = worst.max(lhs - rhs);
            checked += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("200 instances, {checked} indices, max excess {worst:.3e} (slack 1e-8)"),
    }
}

fn compose(a: &Mask, start: &[i64], m: u32, n: u32) -> Distribution {
    let mut out = Distribution::new();
    for (j, p) in kernel_row(a, start, m).unwrap().probs {
        for (k, q) in kernel_row(a, &j, n - m).unwrap().probs {
            *out.entry(k).or_default() += p * q;
        }
    }
    out
}

fn kernel_laws() -> Outcome {
    let mut row_err: f64 = 0.0;
    let mut ck_err: f64 = 0.0;
    let mut factorizations = 0;
    for (_, a) in masks3() {
        for start in IndexBox::cube(a.dim(), -3, 3).iter() {
            for n in 0..=6u32 {
                let row = kernel_row(&a, &start, n).unwrap();
                row_err = row_err.max((row.total() - 1.0).abs());
                for m in 0..=n {
                    let composed = compose(&a, &start, m, n);
                    let keys = row.probs.keys().chain(composed.keys());
                    for k in keys {
                        let d = (row.prob(k) - composed.get(k).copied().unwrap_or(0.0)).abs();
                        ck_err = ck_err.max(d);
                    }
                    factorizations += 1;
                }
            }
        }
    }
    Outcome {
        pass: row_err <= 1e-12 && ck_err <= 1e-12,
        detail: format!(
            "row sums off by <= {row_err:.2e}; {factorizations} factorizations, max CK error {ck_err:.2e} (tol 1e-12)"
        ),
    }
}

fn lp_dichotomy() -> Outcome {
    let exact = (0..=10u32)
        .all(|n| lp_moment(&Mask::hat(), &[1], n, 1.0, &[0]).unwrap() == 0.5f64.powi(n as i32));
    let gaps: Vec<f64> = (4..=8)
        .map(|n| dispersion_gap(&Mask::chaikin(), &[0], n, 1.0).unwrap())
        .collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let kind = |a: &Mask| {
        stationary_from_refinable(&cascade(a, 6).unwrap())
            .unwrap()
            .interpolatory
    };
    let (b, bb, c) = (
        kind(&Mask::hat()),
        kind(&Mask::hat_power(2)),
        kind(&Mask::chaikin()),
    );
    Outcome {
        pass: exact && min_gap >= 0.1 && b.is_some() && bb.is_some() && c.is_none(),
        detail: format!(
            "b moments exact 2^-n: {exact}; chaikin min dispersion on n=4..8: {min_gap:.4} (>= 0.1); interpolatory b={b:?} b⊗b={bb:?} chaikin={c:?}"
        ),
    }
}

fn confinement() -> Outcome {
    let mut starts = 0;
    let mut failures = 0;
    for a in [Mask::hat(), Mask::chaikin()] {
        let gauge = default_gauge(&a);
        let c = gauge.half_widths()[0];
        for n in 0..=4u32 {
            let radius = 2f64.powi(n as i32);
            let reach = (c * radius).floor() as i64;
            for i in -reach..=reach {
                if gauge.value_int(&[i]).unwrap() > radius {
                    continue;
                }
                starts += 1;
                if !ball_confinement(&a, &[i], n).unwrap().confined {
                    failures += 1;
                }
            }
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{starts} (mask, start, n) cases, {failures} leave 2C at steps n..n+2"),
    }
}

fn approximation() -> Outcome {
    let length = 3.0f64;
    let p = SpacePoint::hyperboloid(vec![1.0, 0.0, 0.0]).unwrap();
    let q = SpacePoint::hyperboloid(vec![length.cosh(), length.sinh(), 0.0]).unwrap();
    let gamma = |u: f64| geodesic_point(&p, &q, (u / length).clamp(0.0, 1.0)).unwrap();
    let fold = 1.0 / 3.0;
    let mut ok = true;
    let mut plain = Vec::new();
    let mut folded = Vec::new();
    for h in [0.2f64, 0.1, 0.05] {
        let window = IndexBox::cube(1, (-1.0 / h).round() as i64, (1.6 / h).round() as i64);
        let r = approximation_error(
            &Mask::hat(),
            |t| gamma(t[0] + 1.0),
            1.0,
            1.0,
            h,
            5,
            window.clone(),
        )
        .unwrap();
        ok &= r.ok;
        plain.push(r.sup_err);
        let r = approximation_error(
            &Mask::hat(),
            |t| gamma((t[0] - fold).abs()),
            1.0,
            1.0,
            h,
            5,
            window,
        )
        .unwrap();
        ok &= r.ok;
        folded.push(r.sup_err);
    }
    let ratios: Vec<f64> = folded.windows(2).map(|w| w[0] / w[1]).collect();
    ok &= ratios.iter().all(|r| (1.8..=2.2).contains(r));
    Outcome {
        pass: ok,
        detail: format!(
            "geodesic sup_err {:?}; folded geodesic sup_err {:?} (bound h), halving ratios {:?}",
            plain.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            folded.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn nonassociativity() -> Outcome {
    let mut best: f64 = 0.0;
    let mut witness = String::new();
    let mut euclid: f64 = 0.0;
    let masks = [("b", Mask::hat()), ("chaikin", Mask::chaikin())];
    for instance in 0..100u64 {
        let mut rng = trial_rng(11_000, instance);
        for (name, a) in &masks {
            for n in 1..=3u32 {
                let i = 3 << n;
                let window = IndexBox::cube(1, 0, 8);
                let t = GridData::random(
                    SpaceDescriptor::tripod(),
                    window.clone(),
                    Extension::ConstantNearest,
                    &mut rng,
                )
                .unwrap();
                let g = nonassociativity_gap(a, &t, &[i], n).unwrap();
                if g > best {
                    best = g;
                    witness = format!("{name}, n={n}, index {i}, instance {instance}");
                }
                let e = GridData::random(
                    SpaceDescriptor::euclidean(2),
                    window,
                    Extension::ConstantNearest,
                    &mut rng,
                )
                .unwrap();
                euclid = euclid.max(nonassociativity_gap(a, &e, &[i], n).unwrap());
            }
        }
    }
    Outcome {
        pass: best > 1e-3 && euclid <= 1e-10,
        detail: format!(
            "tripod max gap {best:.4} ({witness}); euclidean max gap {euclid:.2e} (tol 1e-10)"
        ),
    }
}

fn monte_carlo() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut reproducible = true;
    for (a, start) in [(Mask::hat(), 1i64), (Mask::chaikin(), 0)] {
        for n in 1..=4u32 {
            let exact = kernel_row(&a, &[start], n).unwrap();
            let mc = simulate_chain(&a, &[start], n, 100_000, 12).unwrap();
            worst = worst.max(tv_distance(&mc.freqs, &exact.probs));
            reproducible &= mc == simulate_chain(&a, &[start], n, 100_000, 12).unwrap();
        }
    }
    Outcome {
        pass: worst <= 0.02 && reproducible,
        detail: format!("max TV {worst:.4} (tol 0.02), reproducible={reproducible}"),
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<Check> = vec![
        (
            "linear equivalence",
            Duration::from_secs(10),
            linear_equivalence,
        ),
        (
            "NPC backend soundness",
            Duration::from_secs(30),
            npc_soundness,
        ),
        (
            "hat-function exactness",
            Duration::from_secs(5),
            hat_exactness,
        ),
        (
            "contractivity certificate",
            Duration::from_secs(20),
            certificate,
        ),
        (
            "geometric D_inf decay on nonlinear data",
            Duration::from_secs(180),
            geometric_decay,
        ),
        ("Jensen inequality", Duration::from_secs(120), jensen),
        ("kernel laws", Duration::from_secs(10), kernel_laws),
        ("L^p dichotomy", Duration::from_secs(30), lp_dichotomy),
        ("ball confinement", Duration::from_secs(10), confinement),
        (
            "approximation bound",
            Duration::from_secs(60),
            approximation,
        ),
        (
            "non-associativity witness",
            Duration::from_secs(120),
            nonassociativity,
        ),
        (
            "Monte Carlo consistency",
            Duration::from_secs(60),
            monte_carlo,
        ),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (k, (name, budget, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let pass = outcome.pass && elapsed < budget;
        writeln!(
            err,
            "[{}] criterion {:>2} {name}: {} ({:.2} s, budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        )
        .unwrap();
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
