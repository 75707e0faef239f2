//! Bounds on the expected sojourn time `PT_{n,k}` of purging `(n, k)`
//! fork-join queues with Poisson arrivals.
//!
//! Upper bounds:
//! * naive: the non-purging `(n, k)` sojourn time `sum_i W[n,k][i] T_i`
//!   (purging never lengthens sub-queues), evaluated with Nelson's `T_i`;
//! * split-merge: the `(n, k)` split-merge queue is an M/G/1 queue whose
//!   service time is `X_(n,k)`, giving
//!   `E[X] + lambda E[X^2] / (2 (1 - lambda E[X]))` while `lambda E[X] < 1`;
//! * refined: the smaller of the two where both exist.
//!
//! Lower bounds:
//! * split-merge: `E[X_(n,k)] + lambda E[X_(n,1)^2] / (2 (1 - lambda E[X_(n,1)]))`;
//! * staging (exponential only):
//!   `(H_n - H_{n-k})/mu + rho (G_n - G_{n-k}) / mu` with
//!   `G_m = sum_{i=1..m} 1 / (i (i - rho))`.
//!
//! All closed forms are evaluated exactly and converted to `f64` at the end.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::analytic::{nelson_lt, Evaluation, HarmonicCache, QueueSpec};
use crate::coeffs::WTable;
use crate::error::{Error, Result};

/// First two moments of the k-th smallest of `n` iid exponential(mu)
/// service times.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpOrderMoments {
    pub n: usize,
    pub k: usize,
    pub mean: BigRational,
    pub second_moment: BigRational,
}

impl ExpOrderMoments {
    /// `mean = (H_n - H_{n-k})/mu`,
    /// `second = ((H2_n - H2_{n-k}) + (H_n - H_{n-k})^2) / mu^2`.
    pub fn new(n: usize, k: usize, mu: &BigRational) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::Domain(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        let h = HarmonicCache::shared(n);
        let d1 = h.h(n) - h.h(n - k);
        let d2 = h.h2(n) - h.h2(n - k);
        Ok(ExpOrderMoments {
            n,
            k,
            mean: &d1 / mu,
            second_moment: (d2 + &d1 * &d1) / (mu * mu),
        })
    }
}

/// Moments supplied by the caller for non-exponential service.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderMoments {
    pub mean: f64,
    pub second_moment: f64,
}

/// Pollaczek-Khinchine mean sojourn time; `None` when `lambda * mean >= 1`.
fn pk_sojourn(lambda: &BigRational, mean: &BigRational, second: &BigRational) -> Option<BigRational> {
    let load = lambda * mean;
    if load >= BigRational::one() {
        return None;
    }
    Some(mean + lambda * second / (BigRational::from_integer(2.into()) * (BigRational::one() - load)))
}

fn require_exponential(spec: &QueueSpec, what: &str) -> Result<()> {
    if !spec.service.is_exponential() {
        return Err(Error::Inapplicable(format!(
            "{what} needs exponential service, got {}; supply order-statistic moments instead",
            spec.service
        )));
    }
    Ok(())
}

/// Nelson-LT value of the `(lambda, mu)`-equivalent non-purging queue.
pub fn naive_upper(spec: &QueueSpec, table: &WTable) -> Result<BigRational> {
    require_exponential(spec, "the naive upper bound")?;
    let v = nelson_lt(spec, table, Evaluation::ExactRational)?;
    Ok(v.exact.expect("exact evaluation"))
}

/// `None` when `lambda * E[X_(n,k)] >= 1`, where the split-merge queue is
/// unstable and the bound is meaningless.
pub fn split_merge_upper(spec: &QueueSpec) -> Result<Option<BigRational>> {
    require_exponential(spec, "the closed-form split-merge upper bound")?;
    let m = ExpOrderMoments::new(spec.n, spec.k, spec.mu.as_ratio())?;
    Ok(pk_sojourn(spec.lambda.as_ratio(), &m.mean, &m.second_moment))
}

/// Split-merge upper bound from caller-supplied moments of `X_(n,k)`.
pub fn split_merge_upper_from_moments(lambda: f64, kth: OrderMoments) -> Option<f64> {
    let load = lambda * kth.mean;
    (load < 1.0).then(|| kth.mean + lambda * kth.second_moment / (2.0 * (1.0 - load)))
}

/// True when `rho >= 1 / (H_n - H_{n-k})`, i.e. the split-merge upper bound
/// does not exist.
pub fn split_merge_inapplicable(spec: &QueueSpec) -> bool {
    let h = HarmonicCache::shared(spec.n);
    spec.rho() * (h.h(spec.n) - h.h(spec.n - spec.k)) >= BigRational::one()
}

/// The naive bound when the split-merge bound does not exist, otherwise the
/// smaller of the two. For `k = 1` the split-merge value is exact and is
/// returned directly.
pub fn refined_upper(spec: &QueueSpec, table: &WTable) -> Result<BigRational> {
    spec.check_stable()?;
    let sm = split_merge_upper(spec)?;
    if spec.k == 1 {
        if let Some(exact) = sm {
            return Ok(exact);
        }
    }
    let naive = naive_upper(spec, table)?;
    Ok(match sm {
        Some(sm) if sm < naive || naive.is_negative() => sm,
        _ => naive,
    })
}

pub fn split_merge_lower(spec: &QueueSpec) -> Result<BigRational> {
    require_exponential(spec, "the closed-form split-merge lower bound")?;
    spec.check_stable()?;
    let kth = ExpOrderMoments::new(spec.n, spec.k, spec.mu.as_ratio())?;
    let first = ExpOrderMoments::new(spec.n, 1, spec.mu.as_ratio())?;
    let lambda = spec.lambda.as_ratio();
    let queueing = pk_sojourn(lambda, &first.mean, &first.second_moment)
        .map(|s| s - &first.mean)
        .ok_or(Error::Instability { rho: spec.rho_f64() })?;
    Ok(kth.mean + queueing)
}

/// Split-merge lower bound from caller-supplied moments of `X_(n,k)` (mean
/// only) and `X_(n,1)`.
pub fn split_merge_lower_from_moments(lambda: f64, kth_mean: f64, first: OrderMoments) -> Option<f64> {
    split_merge_upper_from_moments(lambda, first).map(|s| kth_mean + s - first.mean)
}

pub fn staging_lower(spec: &QueueSpec) -> Result<BigRational> {
    require_exponential(spec, "the staging lower bound")?;
    spec.check_stable()?;
    let rho = spec.rho();
    let mu = spec.mu.as_ratio();
    let h = HarmonicCache::shared(spec.n);
    let g = |m: usize| -> BigRational {
        (1..=m)
            .map(|i| {
                let i = BigRational::from_integer(i.into());
                BigRational::one() / (&i * (&i - &rho))
            })
            .sum()
    };
    let (n, k) = (spec.n, spec.k);
    Ok((h.h(n) - h.h(n - k)) / mu + &rho * (g(n) - g(n - k)) / mu)
}

/// All bounds for one purging queue.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSet {
    pub spec: QueueSpec,
    /// Absent when the Nelson-LT estimate is negative, which happens at
    /// `k = 1` where the exact `T_1` meets approximate `T_i`.
    pub naive_upper: Option<f64>,
    /// Absent where `rho >= 1 / (H_n - H_{n-k})`.
    pub split_merge_upper: Option<f64>,
    pub refined_upper: f64,
    pub split_merge_lower: f64,
    pub staging_lower: f64,
    pub notes: Vec<String>,
}

impl BoundSet {
    pub fn best_lower(&self) -> f64 {
        self.staging_lower.max(self.split_merge_lower)
    }

    /// Descriptions of violated ordering invariants; empty when consistent.
    pub fn ordering_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(naive) = self.naive_upper {
            if self.refined_upper > naive {
                out.push(format!("refined {} > naive {}", self.refined_upper, naive));
            }
        }
        if let Some(sm) = self.split_merge_upper {
            if self.refined_upper > sm {
                out.push(format!("refined {} > split-merge upper {}", self.refined_upper, sm));
            }
        }
        if self.staging_lower < self.split_merge_lower {
            out.push(format!("staging {} < split-merge lower {}", self.staging_lower, self.split_merge_lower));
        }
        let uppers = [self.naive_upper, self.split_merge_upper, Some(self.refined_upper)];
        for upper in uppers.into_iter().flatten() {
            if self.best_lower() > upper {
                out.push(format!("lower {} > upper {}", self.best_lower(), upper));
            }
        }
        out
    }
}

pub fn bound_set(spec: &QueueSpec, table: &WTable) -> Result<BoundSet> {
    spec.check_stable()?;
    let f = |v: &BigRational| crate::analytic::Scalar::as_f64(v);
    let naive = naive_upper(spec, table)?;
    let sm_upper = split_merge_upper(spec)?;
    let refined = refined_upper(spec, table)?;
    let sm_lower = split_merge_lower(spec)?;
    let staging = staging_lower(spec)?;

    let mut notes = Vec::new();
    let naive = (!naive.is_negative()).then(|| f(&naive));
    if naive.is_none() {
        notes.push("naive upper bound unavailable: Nelson-LT estimate is negative".to_string());
    }
    if sm_upper.is_none() {
        notes.push("split-merge upper bound inapplicable: rho >= 1/(H_n - H_{n-k})".to_string());
    }
    if spec.k == 1 {
        notes.push("k = 1: split-merge value is exact".to_string());
    }
    if spec.k == spec.n {
        notes.push("k = n: purging queue equals the basic queue".to_string());
    }
    if spec.rho().is_zero() {
        notes.push("zero load".to_string());
    }
    Ok(BoundSet {
        spec: spec.clone(),
        naive_upper: naive,
        split_merge_upper: sm_upper.as_ref().map(f),
        refined_upper: f(&refined),
        split_merge_lower: f(&sm_lower),
        staging_lower: f(&staging),
        notes,
    })
}
