//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! Arguments are criterion numbers to run (all by default). With `--strict`
//! or `FORKJOIN_ACCEPTANCE_STRICT=1` the process exits non-zero when any
//! criterion fails; otherwise failures are reported but do not abort the
//! surrounding `cargo test` run.

use std::time::{Duration, Instant};

use forkjoin::analytic::{nelson_lt, varma_lt, Evaluation, HarmonicCache};
use forkjoin::bounds::{bound_set, split_merge_inapplicable, split_merge_lower, split_merge_upper};
use forkjoin::coeffs::{binomial, w_coefficient, w_table};
use forkjoin::oracle::{standard_suite, verify_lt_identity};
use forkjoin::sim::{run, run_joint, SimConfig, SimResult};
use forkjoin::{QueueSpec, Variant};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const SEED: u64 = 42;
const CALIBRATION_TOL: f64 = 0.02;
const NELSON_TOL: f64 = 0.10;
const VARMA_TOL: f64 = 0.10;
const VARMA_MAX_TOL: f64 = 0.20;
const VARMA_MIN_SHARE: f64 = 0.90;
const FAILURE_RAW: f64 = -317.7265625;
const FAILURE_TOL: f64 = 0.5;
const JOINT_TOL: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn spec(n: usize, k: usize, lambda: &str, variant: Variant) -> QueueSpec {
    QueueSpec::parse(n, k, lambda, "1", variant).unwrap()
}

fn simulate(n: usize, k: usize, lambda: &str, variant: Variant) -> SimResult {
    let r = run(&SimConfig::new(spec(n, k, lambda, variant), SEED)).unwrap();
    assert!(r.converged, "simulation did not converge: n={n} k={k} lambda={lambda} {variant}");
    r
}

fn golden_w() -> Vec<(usize, usize, usize, BigInt)> {
    include_str!("data/golden_w.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

fn coefficient_golden_file() -> Outcome {
    let golden = golden_w();
    let mismatches: Vec<_> = golden
        .iter()
        .filter(|(n, k, i, w)| &w_coefficient(*n, *k, *i).unwrap() != w)
        .map(|(n, k, i, _)| (*n, *k, *i))
        .collect();
    // The quoted large value is a magnitude; for i - k odd the coefficient is
    // negative, as in every odd-offset entry of the golden table.
    let big = w_coefficient(25, 9, 16).unwrap();
    let magnitude_ok = big.magnitude() == &13_146_544_125u64.into();
    let sign_ok = big < BigInt::zero();
    outcome(
        mismatches.is_empty() && golden.len() >= 215 && magnitude_ok && sign_ok,
        format!("{} golden entries, {} mismatches; W(25,9,16) = {big}", golden.len(), mismatches.len()),
    )
}

fn exact_identities() -> Outcome {
    let mut bad = 0;
    for n in 1..=40 {
        let t = w_table(n).unwrap();
        for k in 1..=n {
            let sum: BigInt = t.row(k).unwrap().iter().sum();
            bad += usize::from(!sum.is_one());
            bad += usize::from(t.get(k, k).unwrap() != &binomial(n, k));
        }
        for i in 1..=n {
            let c = binomial(n, i);
            let expected = if i % 2 == 1 { c } else { -c };
            bad += usize::from(t.get(1, i).unwrap() != &expected);
        }
    }
    outcome(bad == 0, format!("n <= 40, {bad} violations"))
}

fn lt_identity_oracle() -> Outcome {
    let mut failures = 0;
    let mut distributions = 0;
    let mut dependent = 0;
    for n in 1..=6 {
        let table = w_table(n).unwrap();
        for (name, d) in standard_suite(n).unwrap() {
            let report = verify_lt_identity(&d, &table).unwrap();
            distributions += 1;
            dependent += usize::from(!name.starts_with("iid"));
            failures += report.checks.iter().filter(|c| !c.residual().is_zero()).count();
        }
    }
    let per_n = distributions / 6;
    outcome(
        failures == 0 && per_n >= 5 && dependent >= 6,
        format!("{distributions} distributions over n <= 6 ({dependent} dependent), {failures} non-zero residuals"),
    )
}

fn harmonic_identity() -> Outcome {
    let mut bad = 0;
    for n in 1..=20 {
        let t = w_table(n).unwrap();
        let h = HarmonicCache::up_to(n);
        for k in 1..=n {
            let lhs: BigRational = (k..=n).map(|i| BigRational::from_integer(t.get(k, i).unwrap().clone()) * h.h(i)).sum();
            bad += usize::from(lhs != h.h(n) - h.h(n - k));
        }
    }
    outcome(bad == 0, format!("n <= 20, {bad} violations"))
}

fn rel_err(app: f64, sim: f64) -> f64 {
    app / sim - 1.0
}

fn simulator_calibration() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (lambda, expected) in [("0.3", 1.0 / 0.7), ("0.5", 2.0), ("0.8", 5.0)] {
        let r = simulate(1, 1, lambda, Variant::Basic);
        let e = rel_err(r.mean_sojourn, expected);
        worst = worst.max(e.abs());
        lines.push(format!("M/M/1 rho={lambda}: {:.4} vs {expected:.4}", r.mean_sojourn));
    }
    let r = simulate(3, 1, "0.5", Variant::Purging);
    let e = rel_err(r.mean_sojourn, 0.4);
    worst = worst.max(e.abs());
    lines.push(format!("purging(3,1): {:.4} vs 0.4", r.mean_sojourn));
    outcome(worst <= CALIBRATION_TOL, format!("worst |err| {:.2}%; {}", worst * 100.0, lines.join(", ")))
}

fn nelson_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for (n, k) in [(10, 8), (10, 9), (10, 10), (20, 18)] {
        let table = w_table(n).unwrap();
        for lambda in ["0.3", "0.5", "0.8"] {
            let s = spec(n, k, lambda, Variant::NonPurging);
            let app = nelson_lt(&s, &table, Evaluation::ExactRational).unwrap().value;
            let sim = simulate(n, k, lambda, Variant::NonPurging).mean_sojourn;
            let e = rel_err(app, sim);
            if e.abs() > worst {
                worst = e.abs();
                at = format!("({n},{k}) rho={lambda}: app {app:.4} sim {sim:.4}");
            }
        }
    }
    outcome(worst <= NELSON_TOL, format!("12 points, worst |APP/SIM - 1| = {:.2}% at {at}", worst * 100.0))
}

fn varma_accuracy() -> Outcome {
    let mut errors = Vec::new();
    for n in [3usize, 5, 10] {
        let table = w_table(n).unwrap();
        for k in n.div_ceil(2)..=n {
            for lambda in ["0.3", "0.6", "0.9"] {
                let s = spec(n, k, lambda, Variant::NonPurging);
                let app = varma_lt(&s, &table, Evaluation::ExactRational).unwrap().value;
                let sim = simulate(n, k, lambda, Variant::NonPurging).mean_sojourn;
                errors.push((rel_err(app, sim).abs(), format!("({n},{k}) rho={lambda}")));
            }
        }
    }
    let within = errors.iter().filter(|(e, _)| *e <= VARMA_TOL).count();
    let share = within as f64 / errors.len() as f64;
    let (worst, at) = errors.iter().cloned().fold((0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    outcome(
        share >= VARMA_MIN_SHARE && worst <= VARMA_MAX_TOL,
        format!("{within}/{} within 10%, worst {:.2}% at {at}", errors.len(), worst * 100.0),
    )
}

fn documented_failure() -> Outcome {
    let s = spec(50, 34, "0.2", Variant::NonPurging);
    let v = nelson_lt(&s, &w_table(50).unwrap(), Evaluation::Floating).unwrap();
    let raw_ok = (v.raw - FAILURE_RAW).abs() <= FAILURE_TOL;
    let clip_ok = v.clipped && v.value == 0.0;
    outcome(raw_ok && clip_ok, format!("raw {} (expected {FAILURE_RAW} +/- {FAILURE_TOL}), clipped to {}", v.raw, v.value))
}

fn bound_ordering() -> Outcome {
    let n = 25;
    let table = w_table(n).unwrap();
    let h = HarmonicCache::up_to(n);
    let mut problems = Vec::new();
    let mut checked = 0;
    for lambda in ["0.3", "0.7"] {
        for k in 1..=n {
            let s = spec(n, k, lambda, Variant::Purging);
            let b = bound_set(&s, &table).unwrap();
            if b.split_merge_lower > b.staging_lower {
                problems.push(format!("k={k} rho={lambda}: sm-lower > staging"));
            }
            let threshold = s.rho() * (h.h(n) - h.h(n - k)) >= BigRational::one();
            if b.split_merge_upper.is_none() != threshold || split_merge_inapplicable(&s) != threshold {
                problems.push(format!("k={k} rho={lambda}: applicability"));
            }
            let r = simulate(n, k, lambda, Variant::Purging);
            let (lo, hi) = (r.mean_sojourn - r.half_width_95, r.mean_sojourn + r.half_width_95);
            if b.staging_lower > hi {
                problems.push(format!("k={k} rho={lambda}: staging {:.4} > sim {:.4}+/-{:.4}", b.staging_lower, r.mean_sojourn, r.half_width_95));
            }
            if b.refined_upper < lo {
                problems.push(format!("k={k} rho={lambda}: refined {:.4} < sim {:.4}+/-{:.4}", b.refined_upper, r.mean_sojourn, r.half_width_95));
            }
            checked += 1;
        }
    }
    outcome(problems.is_empty(), format!("{checked} points; {}", if problems.is_empty() { "no violations".into() } else { problems.join("; ") }))
}

fn k1_exactness() -> Outcome {
    let mut problems = Vec::new();
    for n in [3usize, 10] {
        let s = spec(n, 1, "0.5", Variant::Purging);
        let upper = split_merge_upper(&s).unwrap().unwrap();
        let lower = split_merge_lower(&s).unwrap();
        let exact = upper.to_f64().unwrap();
        let r = simulate(n, 1, "0.5", Variant::Purging);
        if upper != lower {
            problems.push(format!("n={n}: upper {upper} != lower {lower}"));
        }
        if !r.covers(exact, 1.0) {
            problems.push(format!("n={n}: sim {:.5}+/-{:.5} vs {exact:.5}", r.mean_sojourn, r.half_width_95));
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { "n in {3, 10}: bounds coincide and cover the simulation".into() } else { problems.join("; ") })
}

fn joint_identity() -> Outcome {
    let n = 4;
    let cfg = SimConfig::new(spec(n, n, "0.5", Variant::NonPurging), SEED);
    let j = run_joint(&cfg, &[2, 3, 4]).unwrap();
    let table = w_table(n).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for k in [2usize, 3, 4] {
        let measured = j.per_rank[&k].mean_sojourn;
        let transformed: f64 = (k..=n).map(|i| table.get(k, i).unwrap().to_f64().unwrap() * j.prefix_maxima[i - 1].mean_sojourn).sum();
        let e = rel_err(transformed, measured);
        worst = worst.max(e.abs());
        parts.push(format!("k={k}: {measured:.4} vs {transformed:.4}"));
    }
    outcome(worst <= JOINT_TOL, format!("worst {:.3}%; {}", worst * 100.0, parts.join(", ")))
}

type Criterion = (u8, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "coefficient golden file", Duration::from_secs(1), coefficient_golden_file),
        (2, "exact coefficient identities", Duration::from_secs(10), exact_identities),
        (3, "order-statistic identity oracle", Duration::from_secs(30), lt_identity_oracle),
        (4, "harmonic identity", Duration::from_secs(5), harmonic_identity),
        (5, "simulator calibration", Duration::from_secs(60), simulator_calibration),
        (6, "Nelson-LT accuracy", Duration::from_secs(600), nelson_accuracy),
        (7, "Varma-LT accuracy", Duration::from_secs(600), varma_accuracy),
        (8, "floating-point blow-up reproduction", Duration::from_secs(1), documented_failure),
        (9, "bound ordering", Duration::from_secs(900), bound_ordering),
        (10, "k = 1 exactness", Duration::from_secs(120), k1_exactness),
        (11, "joint-run identity", Duration::from_secs(300), joint_identity),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict") || std::env::var("FORKJOIN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let filter: Vec<u8> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name} [{:.2?} / {:?}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed,
            budget,
            o.detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed, {failed} failed", ran - failed);
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
