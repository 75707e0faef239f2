use std::io::{self, Write};
use std::path::Path;

use forkjoin::analytic::approximate;
use forkjoin::bounds::bound_set;
use forkjoin::coeffs::{w_coefficient, w_table, TableStore, WTable};
use forkjoin::oracle::{standard_suite, verify_lt_identity};
use forkjoin::rate::parse_exact;
use forkjoin::sim::{run, ArrivalProcess, SimConfig};
use forkjoin::{Error, Evaluation, Method, QueueSpec, Rate, Variant};

use crate::failure::{Failure, GENERAL, NON_CONVERGENT};
use crate::SimulateArgs;

pub const APPROX_SCHEMA: &str = "forkjoin.approx.v1";
pub const BOUNDS_SCHEMA: &str = "forkjoin.bounds.v1";
pub const SIM_SCHEMA: &str = "forkjoin.sim.v1";
pub const COEFF_SCHEMA: &str = "forkjoin.coeff.v1";

/// Shortest round-trip form that always shows a decimal point.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn stdout_csv() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn load_table(n: usize, cache: Option<&Path>) -> Result<WTable, Failure> {
    Ok(match cache {
        Some(dir) => TableStore::new(dir).load_or_compute(n)?,
        None => w_table(n)?,
    })
}

pub fn coeff(n: usize, k: Option<usize>, i: Option<usize>, cache: Option<&Path>) -> Result<(), Failure> {
    match (k, i) {
        (Some(k), Some(i)) => {
            let w = match cache {
                Some(_) => {
                    let t = load_table(n, cache)?;
                    t.get(k, i).cloned().ok_or_else(|| Error::Domain(format!("need 1 <= k <= i <= n, got n={n}, k={k}, i={i}")))?
                }
                None => w_coefficient(n, k, i)?,
            };
            println!("{w}");
        }
        (Some(k), None) => {
            let t = load_table(n, cache)?;
            let row = t.row(k).ok_or_else(|| Error::Domain(format!("need 1 <= k <= n, got n={n}, k={k}")))?;
            let mut out = stdout_csv();
            out.write_record(["schema", "n", "k", "i", "w"])?;
            for (off, w) in row.iter().enumerate() {
                out.write_record([COEFF_SCHEMA, &n.to_string(), &k.to_string(), &(k + off).to_string(), &w.to_string()])?;
            }
            out.flush()?;
        }
        _ => {
            let t = load_table(n, cache)?;
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            t.write_to(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

pub fn approx(n: usize, k: usize, lambda: &str, mu: &str, method: Method, float: bool) -> Result<(), Failure> {
    let spec = QueueSpec::parse(n, k, lambda, mu, Variant::NonPurging)?;
    let eval = if float { Evaluation::Floating } else { Evaluation::ExactRational };
    let table = w_table(n)?;
    let v = approximate(method, &spec, &table, eval)?;
    let mut out = stdout_csv();
    out.write_record(["schema", "method", "evaluation", "n", "k", "lambda", "mu", "rho", "value", "raw", "clipped", "exact"])?;
    out.write_record([
        APPROX_SCHEMA,
        method.name(),
        eval.name(),
        &n.to_string(),
        &k.to_string(),
        lambda,
        mu,
        &num(spec.rho_f64()),
        &num(v.value),
        &num(v.raw),
        &v.clipped.to_string(),
        &v.exact.map(|e| e.to_string()).unwrap_or_default(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn bounds(n: usize, k: usize, lambda: &str, mu: &str) -> Result<(), Failure> {
    let spec = QueueSpec::parse(n, k, lambda, mu, Variant::Purging)?;
    let b = bound_set(&spec, &w_table(n)?)?;
    let mut out = stdout_csv();
    out.write_record([
        "schema",
        "n",
        "k",
        "lambda",
        "mu",
        "rho",
        "naive_upper",
        "sm_upper",
        "refined_upper",
        "sm_lower",
        "staging_lower",
        "notes",
    ])?;
    out.write_record([
        BOUNDS_SCHEMA,
        &n.to_string(),
        &k.to_string(),
        lambda,
        mu,
        &num(spec.rho_f64()),
        &b.naive_upper.map(num).unwrap_or_default(),
        &b.split_merge_upper.map(num).unwrap_or_default(),
        &num(b.refined_upper),
        &num(b.split_merge_lower),
        &num(b.staging_lower),
        &b.notes.join("; "),
    ])?;
    out.flush()?;
    Ok(())
}

/// `lambda` given directly, or `rho * mu`.
pub fn arrival_rate(rho: Option<&str>, lambda: Option<&str>, mu: &Rate) -> Result<Rate, Error> {
    match (rho, lambda) {
        (_, Some(l)) => Rate::parse_decimal(l),
        (Some(r), None) => Rate::new(parse_exact(r)? * mu.as_ratio()),
        (None, None) => Err(Error::Domain("give either rho or lambda".into())),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let variant: Variant = a.variant.parse()?;
    let mu = Rate::parse_decimal(&a.mu)?;
    let lambda = arrival_rate(a.rho.as_deref(), a.lambda.as_deref(), &mu)?;
    let spec = QueueSpec::new(a.n, a.k.unwrap_or(a.n), lambda, mu, variant)?.with_service(a.service.parse()?);
    let arrival: ArrivalProcess = a.arrival.parse()?;
    let mut cfg = SimConfig::new(spec, a.seed).with_samples(a.samples).with_sample_rate(a.sample_rate).with_arrival(arrival);
    cfg.warmup_jobs = a.warmup;
    cfg.job_budget = a.budget;
    let r = run(&cfg)?;

    let mut out = stdout_csv();
    out.write_record(SIM_HEADER)?;
    out.write_record(sim_row(&cfg, &r))?;
    out.flush()?;
    if !r.converged {
        return Err(Failure::new(
            NON_CONVERGENT,
            format!("job budget of {} arrivals exhausted after {} of {} samples", cfg.effective_budget(), r.sample_count, cfg.target_samples),
        ));
    }
    Ok(())
}

const SIM_HEADER: [&str; 16] = [
    "schema",
    "variant",
    "n",
    "k",
    "lambda",
    "mu",
    "rho",
    "service",
    "arrival",
    "seed",
    "mean_sojourn",
    "half_width_95",
    "sample_count",
    "job_count_total",
    "warmup_jobs",
    "converged",
];

fn sim_row(cfg: &SimConfig, r: &forkjoin::SimResult) -> Vec<String> {
    let s = &cfg.spec;
    vec![
        SIM_SCHEMA.into(),
        s.variant.to_string(),
        s.n.to_string(),
        s.k.to_string(),
        num(s.lambda.to_f64()),
        num(s.mu.to_f64()),
        num(s.rho_f64()),
        s.service.to_string(),
        cfg.arrival.to_string(),
        r.seed.to_string(),
        num(r.mean_sojourn),
        num(r.half_width_95),
        r.sample_count.to_string(),
        r.job_count_total.to_string(),
        r.warmup_jobs.to_string(),
        r.converged.to_string(),
    ]
}

pub fn verify(max_n: usize) -> Result<(), Failure> {
    if max_n == 0 {
        return Err(Failure::usage("max-n must be at least 1"));
    }
    let mut failed = 0;
    for n in 1..=max_n {
        let table = w_table(n)?;
        for (name, d) in standard_suite(n)? {
            let report = verify_lt_identity(&d, &table)?;
            if report.passed() {
                println!("ok    {name}: {} checks", report.checks.len());
            } else {
                failed += 1;
                println!("FAIL  {report}");
            }
        }
    }
    if failed > 0 {
        return Err(Failure::new(GENERAL, format!("{failed} distributions violate the identity")));
    }
    println!("all identities hold for n <= {max_n}");
    Ok(())
}
