//! Declarative experiment recipes.
//!
//! ```toml
//! name = "nelson-lt"
//! output = "nelson-lt.csv"
//! methods = ["nelson-lt", "simulate:non-purging"]
//!
//! [sim]
//! seed = 42
//! samples = 10000
//!
//! [[grid]]
//! n = [10]
//! k = [8, 9, 10]     # or "all", or "n"
//! rho = [0.3, 0.5, 0.8]
//! ```
//!
//! Every grid block expands to the cartesian product of its lists. Output
//! is one CSV row per (point, method), in grid order. When the recipe has a
//! simulation method, the first one is the reference: its mean fills the
//! `sim` column of every row at that point and analytic rows get
//! `rel_err = value / sim - 1`.

use std::fs;
use std::io;
use std::path::Path;

use forkjoin::analytic::approximate;
use forkjoin::bounds;
use forkjoin::coeffs::w_table;
use forkjoin::rate::parse_exact;
use forkjoin::sim::{run, ArrivalProcess, SimConfig, DEFAULT_SAMPLE_RATE, DEFAULT_TARGET_SAMPLES};
use forkjoin::{Error, Evaluation, Method, QueueSpec, Rate, ServiceDist, Variant};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Deserialize;

use crate::commands::num;
use crate::failure::{Failure, NON_CONVERGENT};

pub const SCHEMA: &str = "forkjoin.experiment.v1";

const HEADER: [&str; 14] =
    ["schema", "recipe", "point", "n", "k", "rho", "lambda", "mu", "method", "value", "half_width", "sim", "rel_err", "note"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default = "default_mu")]
    pub mu: Number,
    #[serde(default)]
    pub evaluation: Option<String>,
    pub methods: Vec<String>,
    #[serde(default)]
    pub sim: SimOverrides,
    pub grid: Vec<GridBlock>,
}

fn default_mu() -> Number {
    Number::Int(1)
}

/// A number written either as a TOML number or as a string such as "1/3".
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn text(&self) -> String {
        match self {
            Number::Int(v) => v.to_string(),
            Number::Float(v) => v.to_string(),
            Number::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOverrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub sample_rate: Option<f64>,
    pub warmup: Option<u64>,
    pub budget: Option<u64>,
    pub service: Option<String>,
    pub arrival: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: Vec<usize>,
    pub k: Ks,
    pub rho: Vec<Number>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Ks {
    List(Vec<usize>),
    Keyword(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Task {
    Approx(Method),
    NaiveUpper,
    SmUpper,
    RefinedUpper,
    SmLower,
    StagingLower,
    Simulate(Variant),
}

impl Task {
    fn parse(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "naive-upper" => Task::NaiveUpper,
            "sm-upper" => Task::SmUpper,
            "refined-upper" => Task::RefinedUpper,
            "sm-lower" => Task::SmLower,
            "staging-lower" => Task::StagingLower,
            _ => match s.strip_prefix("simulate:") {
                Some(v) => Task::Simulate(v.parse()?),
                None => Task::Approx(s.parse()?),
            },
        })
    }
}

#[derive(Clone, Debug)]
struct Point {
    n: usize,
    k: usize,
    rho: String,
}

struct Plan {
    name: String,
    mu: Rate,
    evaluation: Evaluation,
    methods: Vec<(String, Task)>,
    points: Vec<Point>,
    sim: SimSettings,
}

struct SimSettings {
    seed: u64,
    samples: usize,
    sample_rate: f64,
    warmup: Option<u64>,
    budget: Option<u64>,
    service: ServiceDist,
    arrival: ArrivalProcess,
}

#[derive(Clone, Debug, Default)]
struct Cell {
    value: Option<f64>,
    half_width: Option<f64>,
    note: String,
    non_convergent: bool,
}

fn invalid(recipe: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("recipe {recipe}: {msg}"))
}

impl Recipe {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::usage(format!("invalid recipe: {e}")))
    }

    fn plan(&self) -> Result<Plan, Failure> {
        let bad = |m: String| invalid(&self.name, m);
        let mu = Rate::parse_decimal(&self.mu.text()).map_err(|e| bad(e.to_string()))?;
        if mu.is_zero() {
            return Err(bad("mu must be positive".into()));
        }
        let evaluation = match self.evaluation.as_deref() {
            None | Some("exact") => Evaluation::ExactRational,
            Some("float") => Evaluation::Floating,
            Some(other) => return Err(bad(format!("unknown evaluation {other:?}, expected exact or float"))),
        };
        if self.methods.is_empty() {
            return Err(bad("no methods".into()));
        }
        let methods = self
            .methods
            .iter()
            .map(|m| Task::parse(m).map(|t| (m.clone(), t)).map_err(|e| bad(format!("method {m:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;

        let mut points = Vec::new();
        for (b, block) in self.grid.iter().enumerate() {
            for &n in &block.n {
                let ks: Vec<usize> = match &block.k {
                    Ks::List(ks) => ks.clone(),
                    Ks::Keyword(w) if w == "all" => (1..=n).collect(),
                    Ks::Keyword(w) if w == "n" => vec![n],
                    Ks::Keyword(w) => return Err(bad(format!("grid block {}: k must be a list, \"all\" or \"n\", got {w:?}", b + 1))),
                };
                for &k in &ks {
                    if n == 0 || k == 0 || k > n {
                        return Err(bad(format!("grid block {}: need 1 <= k <= n, got n={n}, k={k}", b + 1)));
                    }
                    for rho in &block.rho {
                        let text = rho.text();
                        let value = parse_exact(&text).map_err(|e| bad(format!("grid block {}: {e}", b + 1)))?;
                        if value < num_traits::Zero::zero() {
                            return Err(bad(format!("grid block {}: rho must be non-negative, got {text}", b + 1)));
                        }
                        points.push(Point { n, k, rho: text });
                    }
                }
            }
        }
        if points.is_empty() {
            return Err(bad("empty grid".into()));
        }

        let s = &self.sim;
        let service = match &s.service {
            Some(v) => v.parse().map_err(|e: Error| bad(e.to_string()))?,
            None => ServiceDist::Exponential,
        };
        let arrival = match &s.arrival {
            Some(v) => v.parse().map_err(|e: Error| bad(e.to_string()))?,
            None => ArrivalProcess::Poisson,
        };
        let sim = SimSettings {
            seed: s.seed.unwrap_or(42),
            samples: s.samples.unwrap_or(DEFAULT_TARGET_SAMPLES),
            sample_rate: s.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE),
            warmup: s.warmup,
            budget: s.budget,
            service,
            arrival,
        };
        Ok(Plan { name: self.name.clone(), mu, evaluation, methods, points, sim })
    }
}

impl Plan {
    fn spec(&self, p: &Point, variant: Variant) -> Result<QueueSpec, Error> {
        let lambda = Rate::new(parse_exact(&p.rho)? * self.mu.as_ratio())?;
        Ok(QueueSpec::new(p.n, p.k, lambda, self.mu.clone(), variant)?.with_service(self.sim.service))
    }

    fn evaluate(&self, p: &Point, task: Task) -> Cell {
        match self.try_evaluate(p, task) {
            Ok(cell) => cell,
            Err(e) => Cell { note: e.to_string(), ..Cell::default() },
        }
    }

    fn try_evaluate(&self, p: &Point, task: Task) -> Result<Cell, Error> {
        let exact = |v: num_rational::BigRational| Cell { value: v.to_f64(), ..Cell::default() };
        Ok(match task {
            Task::Approx(method) => {
                let spec = self.spec(p, Variant::NonPurging)?;
                let v = approximate(method, &spec, &w_table(p.n)?, self.evaluation)?;
                let note = if v.clipped { format!("clipped; raw {}", num(v.raw)) } else { String::new() };
                Cell { value: Some(v.value), note, ..Cell::default() }
            }
            Task::NaiveUpper => {
                let v = bounds::naive_upper(&self.spec(p, Variant::Purging)?, &w_table(p.n)?)?;
                if v < num_traits::Zero::zero() {
                    Cell { note: format!("negative Nelson-LT estimate {}", num(v.to_f64().unwrap_or(f64::NAN))), ..Cell::default() }
                } else {
                    exact(v)
                }
            }
            Task::SmUpper => {
                let spec = self.spec(p, Variant::Purging)?;
                spec.check_stable()?;
                match bounds::split_merge_upper(&spec)? {
                    Some(v) => exact(v),
                    None => Cell { note: "inapplicable".into(), ..Cell::default() },
                }
            }
            Task::RefinedUpper => exact(bounds::refined_upper(&self.spec(p, Variant::Purging)?, &w_table(p.n)?)?),
            Task::SmLower => exact(bounds::split_merge_lower(&self.spec(p, Variant::Purging)?)?),
            Task::StagingLower => exact(bounds::staging_lower(&self.spec(p, Variant::Purging)?)?),
            Task::Simulate(variant) => {
                let k = if variant == Variant::Basic { p.n } else { p.k };
                let spec = self.spec(&Point { k, ..p.clone() }, variant)?;
                let s = &self.sim;
                let mut cfg = SimConfig::new(spec, s.seed).with_samples(s.samples).with_sample_rate(s.sample_rate).with_arrival(s.arrival);
                cfg.warmup_jobs = s.warmup;
                cfg.job_budget = s.budget;
                let r = run(&cfg)?;
                Cell {
                    value: Some(r.mean_sojourn),
                    half_width: Some(r.half_width_95),
                    note: if r.converged { String::new() } else { "non-convergent".into() },
                    non_convergent: !r.converged,
                }
            }
        })
    }

    /// Evaluates every (point, method) pair in parallel; rows come back in
    /// grid order.
    fn execute(&self) -> Vec<Vec<Cell>> {
        let jobs: Vec<(usize, usize)> =
            (0..self.points.len()).flat_map(|p| (0..self.methods.len()).map(move |m| (p, m))).collect();
        let cells: Vec<Cell> = jobs.par_iter().map(|&(p, m)| self.evaluate(&self.points[p], self.methods[m].1)).collect();
        cells.chunks(self.methods.len()).map(<[Cell]>::to_vec).collect()
    }

    fn write<W: io::Write>(&self, results: &[Vec<Cell>], out: W) -> Result<(), Failure> {
        let reference = self.methods.iter().position(|(_, t)| matches!(t, Task::Simulate(_)));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for (idx, (p, cells)) in self.points.iter().zip(results).enumerate() {
            let lambda = parse_exact(&p.rho).map(|r| r * self.mu.as_ratio()).ok().and_then(|r| r.to_f64());
            let sim = reference.and_then(|i| cells[i].value);
            for ((label, task), cell) in self.methods.iter().zip(cells) {
                let rel = match (task, cell.value, sim) {
                    (Task::Simulate(_), _, _) => None,
                    (_, Some(v), Some(s)) => Some(v / s - 1.0),
                    _ => None,
                };
                w.write_record([
                    SCHEMA.to_string(),
                    self.name.clone(),
                    idx.to_string(),
                    p.n.to_string(),
                    p.k.to_string(),
                    p.rho.clone(),
                    lambda.map(num).unwrap_or_default(),
                    self.mu.to_string(),
                    label.clone(),
                    cell.value.map(num).unwrap_or_default(),
                    cell.half_width.map(num).unwrap_or_default(),
                    sim.map(num).unwrap_or_default(),
                    rel.map(num).unwrap_or_default(),
                    cell.note.clone(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_file(path: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read recipe {}: {e}", path.display())))?;
    let recipe = Recipe::parse(&text)?;
    let plan = recipe.plan()?;
    let results = plan.execute();

    let destination = output.map(Path::to_path_buf).or_else(|| recipe.output.as_ref().map(Into::into));
    match destination {
        Some(p) if p.as_os_str() != "-" => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            plan.write(&results, fs::File::create(&p)?)?;
            eprintln!("wrote {} rows to {}", results.len() * plan.methods.len(), p.display());
        }
        _ => plan.write(&results, io::stdout().lock())?,
    }

    let stuck = results.iter().flatten().filter(|c| c.non_convergent).count();
    if stuck > 0 {
        return Err(Failure::new(NON_CONVERGENT, format!("{stuck} simulations exhausted their job budget")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(grid: &str, methods: &str) -> Recipe {
        Recipe::parse(&format!("name = \"t\"\nmethods = {methods}\n{grid}")).unwrap()
    }

    #[test]
    fn grid_expands_in_order() {
        let r = recipe("[[grid]]\nn = [3, 4]\nk = \"all\"\nrho = [0.1, \"1/2\"]\n", "[\"nelson-lt\"]");
        let plan = r.plan().unwrap();
        assert_eq!(plan.points.len(), (3 + 4) * 2);
        assert_eq!((plan.points[0].n, plan.points[0].k, plan.points[0].rho.as_str()), (3, 1, "0.1"));
        assert_eq!(plan.points[1].rho, "1/2");
        assert_eq!(plan.points.last().map(|p| (p.n, p.k)), Some((4, 4)));
    }

    #[test]
    fn k_above_n_is_rejected() {
        let r = recipe("[[grid]]\nn = [3]\nk = [4]\nrho = [0.5]\n", "[\"nelson-lt\"]");
        let e = r.plan().err().unwrap();
        assert_eq!(e.code, crate::failure::USAGE);
        assert!(e.message.contains("k <= n"), "{}", e.message);
    }

    #[test]
    fn unknown_method_and_negative_rho_are_rejected() {
        assert!(recipe("[[grid]]\nn = [3]\nk = \"n\"\nrho = [0.5]\n", "[\"magic\"]").plan().is_err());
        assert!(recipe("[[grid]]\nn = [3]\nk = \"n\"\nrho = [-0.5]\n", "[\"nelson-lt\"]").plan().is_err());
        assert!(Recipe::parse("name = \"x\"\nmethods = []\ngrid = []\nbogus = 1\n").is_err());
    }

    #[test]
    fn analytic_cells() {
        let r = recipe("[[grid]]\nn = [25]\nk = [1, 25]\nrho = [0.7]\n", "[\"sm-upper\", \"refined-upper\", \"staging-lower\", \"varma-lt\"]");
        let plan = r.plan().unwrap();
        let res = plan.execute();
        let exact = 1.0 / (25.0 - 0.7);
        assert!((res[0][0].value.unwrap() - exact).abs() < 1e-15);
        assert!(res[1][0].value.is_none());
        assert_eq!(res[1][0].note, "inapplicable");
        assert!(res[1][1].value.unwrap() > res[1][2].value.unwrap());
    }

    #[test]
    fn unstable_points_leave_a_note() {
        let r = recipe("[[grid]]\nn = [2]\nk = [2]\nrho = [1.0]\n", "[\"nelson-lt\"]");
        let plan = r.plan().unwrap();
        let res = plan.execute();
        assert!(res[0][0].value.is_none());
        assert!(res[0][0].note.contains("unstable"), "{}", res[0][0].note);
    }
}
