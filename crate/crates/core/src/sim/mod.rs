//! Discrete-event simulation of fork-join queues.
//!
//! Each sub-queue is a single FCFS server. Purging preempts in-service
//! sub-tasks of a finished job at no cost and drops its queued ones; the
//! split-merge queue serves one job at a time on all servers and discards
//! the remaining sub-tasks at the k-th completion.

mod engine;
pub mod events;
pub mod random;
pub mod stats;

use std::collections::BTreeMap;

pub use engine::TraceEntry;
pub use random::ArrivalProcess;

use crate::analytic::{QueueSpec, Variant};
use crate::error::{Error, Result};
use engine::{EngineParams, Record};
use random::Streams;

pub const DEFAULT_SAMPLE_RATE: f64 = 0.01;
pub const DEFAULT_TARGET_SAMPLES: usize = 10_000;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub spec: QueueSpec,
    pub arrival: ArrivalProcess,
    pub seed: u64,
    pub sample_rate: f64,
    pub target_samples: usize,
    /// Jobs discarded before sampling starts; `None` picks a default from
    /// the load.
    pub warmup_jobs: Option<u64>,
    /// Total arrivals after which the run gives up; `None` picks a default.
    pub job_budget: Option<u64>,
}

impl SimConfig {
    pub fn new(spec: QueueSpec, seed: u64) -> Self {
        SimConfig {
            spec,
            arrival: ArrivalProcess::Poisson,
            seed,
            sample_rate: DEFAULT_SAMPLE_RATE,
            target_samples: DEFAULT_TARGET_SAMPLES,
            warmup_jobs: None,
            job_budget: None,
        }
    }

    pub fn with_samples(mut self, target_samples: usize) -> Self {
        self.target_samples = target_samples;
        self
    }

    pub fn with_sample_rate(mut self, sample_rate: f64) -> Self {
        self.sample_rate = sample_rate;
        self
    }

    pub fn with_warmup(mut self, jobs: u64) -> Self {
        self.warmup_jobs = Some(jobs);
        self
    }

    pub fn with_arrival(mut self, arrival: ArrivalProcess) -> Self {
        self.arrival = arrival;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::Domain(format!("sample rate must lie in (0, 1], got {}", self.sample_rate)));
        }
        if self.target_samples == 0 {
            return Err(Error::Domain("target sample count must be at least 1".into()));
        }
        Ok(())
    }

    /// `ceil(10 n / (1 - rho))`, or `1000 n` when `rho >= 1`.
    pub fn effective_warmup(&self) -> u64 {
        if let Some(w) = self.warmup_jobs {
            return w;
        }
        let n = self.spec.n as f64;
        let rho = self.spec.rho_f64();
        if rho < 1.0 {
            (10.0 * n / (1.0 - rho)).ceil() as u64
        } else {
            1000 * self.spec.n as u64
        }
    }

    /// Warm-up plus twenty times the expected number of arrivals needed.
    pub fn effective_budget(&self) -> u64 {
        if let Some(b) = self.job_budget {
            return b;
        }
        let needed = (self.target_samples as f64 / self.sample_rate).ceil() as u64;
        self.effective_warmup().saturating_add(needed.saturating_mul(20))
    }

    fn params(&self, record: Record, trace: bool) -> EngineParams {
        EngineParams {
            n: self.spec.n,
            k: self.spec.k,
            variant: self.spec.variant,
            sample_rate: self.sample_rate,
            target_samples: self.target_samples,
            warmup_jobs: self.effective_warmup(),
            job_budget: self.effective_budget(),
            record,
            trace,
        }
    }

    fn streams(&self) -> Result<Streams> {
        Streams::new(
            self.seed,
            self.spec.n,
            self.spec.lambda.to_f64(),
            self.spec.mu.to_f64(),
            self.arrival,
            self.spec.service,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub mean_sojourn: f64,
    pub sample_count: usize,
    pub half_width_95: f64,
    pub seed: u64,
    pub job_count_total: u64,
    pub warmup_jobs: u64,
    /// False when the job budget ran out before the target sample count.
    pub converged: bool,
}

impl SimResult {
    fn from_samples(samples: &[f64], cfg: &SimConfig, jobs: u64, converged: bool) -> Self {
        let (mean, hw) = stats::batch_means(samples);
        SimResult {
            mean_sojourn: mean,
            sample_count: samples.len(),
            half_width_95: hw,
            seed: cfg.seed,
            job_count_total: jobs,
            warmup_jobs: cfg.effective_warmup(),
            converged,
        }
    }

    /// Whether `value` lies within the 95% interval, widened by `slack`
    /// half-widths.
    pub fn covers(&self, value: f64, slack: f64) -> bool {
        (self.mean_sojourn - value).abs() <= slack * self.half_width_95
    }
}

pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    run_with_trace(cfg, false).map(|(r, _)| r)
}

/// Like [`run`], also returning every sub-task completion in processing
/// order when `trace` is set.
pub fn run_with_trace(cfg: &SimConfig, trace: bool) -> Result<(SimResult, Vec<TraceEntry>)> {
    cfg.validate()?;
    let mut streams = cfg.streams()?;
    let out = engine::simulate(&cfg.params(Record::Sojourn, trace), &mut streams);
    let result = SimResult::from_samples(&out.sojourns, cfg, out.arrivals, out.converged);
    Ok((result, out.trace))
}

#[derive(Clone, Debug)]
pub struct JointResult {
    /// Mean of the k-th smallest sub-task sojourn, per requested k.
    pub per_rank: BTreeMap<usize, SimResult>,
    /// Entry `i - 1` is the mean of the largest sojourn among sub-queues
    /// `0..i`.
    pub prefix_maxima: Vec<SimResult>,
}

/// One non-purging run yielding every order statistic of the sub-task
/// sojourn times from the same sample paths. The configured `k` is ignored.
pub fn run_joint(cfg: &SimConfig, ranks: &[usize]) -> Result<JointResult> {
    match cfg.spec.variant {
        Variant::Basic | Variant::NonPurging => {}
        other => return Err(Error::Unsupported(format!("joint runs need a basic or non-purging queue, got {other}"))),
    }
    cfg.validate()?;
    let n = cfg.spec.n;
    if let Some(&bad) = ranks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::Domain(format!("rank {bad} outside 1..={n}")));
    }
    let mut streams = cfg.streams()?;
    let mut params = cfg.params(Record::AllSubtasks, false);
    params.k = n;
    let out = engine::simulate(&params, &mut streams);

    let rows = &out.subtask_sojourns;
    let summarize = |values: Vec<f64>| SimResult::from_samples(&values, cfg, out.arrivals, out.converged);

    let sorted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut s = r.clone();
            s.sort_by(f64::total_cmp);
            s
        })
        .collect();
    let per_rank = ranks.iter().map(|&k| (k, summarize(sorted.iter().map(|s| s[k - 1]).collect()))).collect();
    let prefix_maxima = (1..=n)
        .map(|i| summarize(rows.iter().map(|r| r[..i].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()))
        .collect();
    Ok(JointResult { per_rank, prefix_maxima })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ServiceDist;

    fn spec(n: usize, k: usize, lambda: &str, variant: Variant) -> QueueSpec {
        QueueSpec::parse(n, k, lambda, "1", variant).unwrap()
    }

    #[test]
    fn mm1() {
        let r = run(&SimConfig::new(spec(1, 1, "0.5", Variant::Basic), 42)).unwrap();
        assert!(r.converged);
        assert_eq!(r.sample_count, 10_000);
        assert!(r.covers(2.0, 3.0), "{r:?}");
    }

    #[test]
    fn purging_with_one_rank_is_fast_mm1() {
        let r = run(&SimConfig::new(spec(3, 1, "0.5", Variant::Purging), 42)).unwrap();
        assert!(r.covers(0.4, 3.0), "{r:?}");
    }

    #[test]
    fn zero_load_is_max_of_exponentials() {
        let r = run(&SimConfig::new(spec(4, 4, "0", Variant::NonPurging), 3).with_sample_rate(1.0)).unwrap();
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!(r.covers(h4, 3.0), "{r:?}");
    }

    #[test]
    fn joint_zero_load_second_smallest_of_three() {
        let cfg = SimConfig::new(spec(3, 3, "0", Variant::NonPurging), 5).with_sample_rate(1.0);
        let j = run_joint(&cfg, &[2, 3]).unwrap();
        assert!(j.per_rank[&2].covers(5.0 / 6.0, 3.0), "{:?}", j.per_rank[&2]);
        assert_eq!(j.prefix_maxima.len(), 3);
        assert_eq!(j.per_rank[&3].mean_sojourn.to_bits(), j.prefix_maxima[2].mean_sojourn.to_bits());
    }

    #[test]
    fn joint_rank_n_matches_basic_queue() {
        let cfg = SimConfig::new(spec(3, 3, "0.5", Variant::Basic), 11).with_samples(500);
        let basic = run(&cfg).unwrap();
        let joint = run_joint(&cfg, &[3]).unwrap();
        assert_eq!(basic.mean_sojourn, joint.per_rank[&3].mean_sojourn);
    }

    #[test]
    fn joint_rejects_purging_and_bad_ranks() {
        let cfg = SimConfig::new(spec(3, 2, "0.5", Variant::Purging), 1);
        assert!(matches!(run_joint(&cfg, &[2]), Err(Error::Unsupported(_))));
        let cfg = SimConfig::new(spec(3, 2, "0.5", Variant::NonPurging), 1);
        assert!(matches!(run_joint(&cfg, &[4]), Err(Error::Domain(_))));
    }

    #[test]
    fn deterministic() {
        let cfg = SimConfig::new(spec(5, 3, "0.6", Variant::Purging), 9).with_samples(300);
        let (a, ta) = run_with_trace(&cfg, true).unwrap();
        let (b, tb) = run_with_trace(&cfg, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let c = run(&SimConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.mean_sojourn, c.mean_sojourn);
    }

    #[test]
    fn fcfs_per_sub_queue() {
        for variant in [Variant::NonPurging, Variant::Purging] {
            let mut cfg = SimConfig::new(spec(4, 2, "0.7", variant), 2).with_samples(200);
            cfg.spec.service = ServiceDist::Weibull { shape: 0.5 };
            let (_, trace) = run_with_trace(&cfg, true).unwrap();
            let mut last = [None::<u64>; 4];
            for e in trace {
                if let Some(prev) = last[e.queue] {
                    assert!(e.job > prev, "{variant}: queue {} served {} after {}", e.queue, e.job, prev);
                }
                last[e.queue] = Some(e.job);
            }
        }
    }

    #[test]
    fn variant_ordering_with_common_random_numbers() {
        let mean = |v| run(&SimConfig::new(spec(6, 3, "0.5", v), 4).with_samples(2000)).unwrap().mean_sojourn;
        let (p, np, sm) = (mean(Variant::Purging), mean(Variant::NonPurging), mean(Variant::SplitMerge));
        assert!(p <= np, "purging {p} > non-purging {np}");
        assert!(sm >= p, "split-merge {sm} < purging {p}");
    }

    #[test]
    fn sub_queue_marginal_is_mm1() {
        let cfg = SimConfig::new(spec(4, 4, "0.5", Variant::NonPurging), 8);
        let j = run_joint(&cfg, &[]).unwrap();
        assert!(j.prefix_maxima[0].covers(2.0, 3.0), "{:?}", j.prefix_maxima[0]);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut cfg = SimConfig::new(spec(2, 2, "0.5", Variant::NonPurging), 1).with_samples(100);
        cfg.job_budget = Some(500);
        let r = run(&cfg).unwrap();
        assert!(!r.converged);
        assert!(r.sample_count < 100);
        assert_eq!(r.job_count_total, 500);
    }

    #[test]
    fn split_merge_unstable_run_terminates() {
        let mut cfg = SimConfig::new(spec(3, 3, "0.9", Variant::SplitMerge), 1).with_samples(50);
        cfg.job_budget = Some(20_000);
        let r = run(&cfg).unwrap();
        assert!(r.job_count_total <= 20_000);
    }

    #[test]
    fn invalid_config() {
        let cfg = SimConfig::new(spec(1, 1, "0.5", Variant::Basic), 1);
        assert!(run(&cfg.clone().with_sample_rate(0.0)).is_err());
        assert!(run(&cfg.clone().with_sample_rate(1.5)).is_err());
        assert!(run(&cfg.with_samples(0)).is_err());
    }

    #[test]
    fn default_warmup() {
        let cfg = SimConfig::new(spec(5, 2, "0.5", Variant::NonPurging), 1);
        assert_eq!(cfg.effective_warmup(), 100);
        let cfg = SimConfig::new(spec(5, 2, "1.5", Variant::Purging), 1);
        assert_eq!(cfg.effective_warmup(), 5000);
    }
}
