//! Closed-form expected sojourn times.
//!
//! For basic `(i, i)` fork-join queues with Poisson arrivals and exponential
//! service two approximations of `T_i` are provided:
//!
//! * Nelson: `T_1 = 1/(mu(1-rho))`, and for `i >= 2`
//!   `T_i = (12-rho)/(88 mu (1-rho)) * (11 H_i + 4 rho (H_2 - H_i)) / H_2`.
//! * Varma (light-traffic interpolation):
//!   `T_i = (H_i + (V_i - H_i) rho) / (mu - lambda)`.
//!
//! A non-purging `(n, k)` queue has the same per-sub-queue sojourn times as
//! the basic `(n, n)` queue, so its expected sojourn time is
//! `NT_{n,k} = sum_{i=k..n} W[n,k][i] T_i`. The LT variants evaluate that sum.
//!
//! Every ingredient is rational, so [`Evaluation::ExactRational`] (the
//! default) avoids the cancellation between the huge alternating `W` terms
//! entirely. [`Evaluation::Floating`] runs the same expression in `f64`,
//! term by term in increasing `i`, and shows that cancellation.

mod harmonic;
mod scalar;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

pub use harmonic::{HarmonicCache, Harmonics};
pub use scalar::Scalar;

use crate::coeffs::WTable;
use crate::error::{Error, Result};
use crate::rate::Rate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `(n, n)`: a job leaves when all sub-tasks finish.
    Basic,
    /// Remaining sub-tasks keep running after the k-th finishes.
    NonPurging,
    /// Remaining sub-tasks are removed at the k-th completion.
    Purging,
    /// All servers work on the head job only.
    SplitMerge,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::NonPurging => "non-purging",
            Variant::Purging => "purging",
            Variant::SplitMerge => "split-merge",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Variant::Basic),
            "non-purging" | "nonpurging" => Ok(Variant::NonPurging),
            "purging" => Ok(Variant::Purging),
            "split-merge" | "splitmerge" => Ok(Variant::SplitMerge),
            other => Err(Error::Domain(format!("unknown queue variant {other:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sub-task service time distribution, always with mean `1/mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ServiceDist {
    Exponential,
    Deterministic,
    Weibull { shape: f64 },
}

impl ServiceDist {
    pub fn is_exponential(self) -> bool {
        matches!(self, ServiceDist::Exponential)
    }
}

impl FromStr for ServiceDist {
    type Err = Error;

    /// `exp`, `det`, or `weibull:<shape>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(ServiceDist::Exponential),
            "det" | "deterministic" => Ok(ServiceDist::Deterministic),
            _ => {
                let shape = s
                    .strip_prefix("weibull:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::Domain(format!("unknown service distribution {s:?}")))?;
                if !(shape.is_finite() && shape > 0.0) {
                    return Err(Error::Domain(format!("weibull shape must be positive, got {shape}")));
                }
                Ok(ServiceDist::Weibull { shape })
            }
        }
    }
}

impl fmt::Display for ServiceDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceDist::Exponential => f.write_str("exp"),
            ServiceDist::Deterministic => f.write_str("det"),
            ServiceDist::Weibull { shape } => write!(f, "weibull:{shape}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueueSpec {
    pub n: usize,
    pub k: usize,
    pub lambda: Rate,
    pub mu: Rate,
    pub variant: Variant,
    pub service: ServiceDist,
}

impl QueueSpec {
    /// Exponential service; use [`QueueSpec::with_service`] to change it.
    pub fn new(n: usize, k: usize, lambda: Rate, mu: Rate, variant: Variant) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::Domain(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        if variant == Variant::Basic && k != n {
            return Err(Error::Domain(format!("a basic queue has k = n, got n={n}, k={k}")));
        }
        if mu.is_zero() {
            return Err(Error::Domain("service rate mu must be positive".into()));
        }
        Ok(QueueSpec { n, k, lambda, mu, variant, service: ServiceDist::Exponential })
    }

    /// Convenience constructor from decimal strings.
    pub fn parse(n: usize, k: usize, lambda: &str, mu: &str, variant: Variant) -> Result<Self> {
        Self::new(n, k, Rate::parse_decimal(lambda)?, Rate::parse_decimal(mu)?, variant)
    }

    pub fn with_service(mut self, service: ServiceDist) -> Self {
        self.service = service;
        self
    }

    pub fn rho(&self) -> BigRational {
        self.lambda.as_ratio() / self.mu.as_ratio()
    }

    pub fn rho_f64(&self) -> f64 {
        self.lambda.to_f64() / self.mu.to_f64()
    }

    pub fn check_stable(&self) -> Result<()> {
        check_stable(&self.lambda, &self.mu)
    }
}

pub(crate) fn check_stable(lambda: &Rate, mu: &Rate) -> Result<()> {
    if mu.is_zero() {
        return Err(Error::Domain("service rate mu must be positive".into()));
    }
    if lambda >= mu {
        return Err(Error::Instability { rho: lambda.to_f64() / mu.to_f64() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    NelsonBasic,
    VarmaBasic,
    NelsonLt,
    VarmaLt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::NelsonBasic => "nelson-basic",
            Method::VarmaBasic => "varma-basic",
            Method::NelsonLt => "nelson-lt",
            Method::VarmaLt => "varma-lt",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nelson-basic" => Ok(Method::NelsonBasic),
            "varma-basic" => Ok(Method::VarmaBasic),
            "nelson-lt" => Ok(Method::NelsonLt),
            "varma-lt" => Ok(Method::VarmaLt),
            other => Err(Error::Domain(format!("unknown approximation method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Evaluation {
    #[default]
    ExactRational,
    Floating,
}

impl Evaluation {
    pub fn name(self) -> &'static str {
        match self {
            Evaluation::ExactRational => "exact-rational",
            Evaluation::Floating => "floating",
        }
    }
}

/// An expected sojourn time estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxValue {
    /// Estimate after clipping; never negative.
    pub value: f64,
    /// Estimate before clipping.
    pub raw: f64,
    /// Exact raw value when evaluated in rational mode.
    pub exact: Option<BigRational>,
    pub method: Method,
    pub evaluation: Evaluation,
    pub clipped: bool,
}

impl ApproxValue {
    fn from_scalar<S: Scalar>(raw: S, method: Method, evaluation: Evaluation, exact: Option<BigRational>) -> Self {
        let clippable = matches!(method, Method::NelsonLt | Method::VarmaLt);
        let raw_f = raw.as_f64();
        let clipped = clippable && raw.below_zero();
        ApproxValue {
            value: if clipped { 0.0 } else { raw_f },
            raw: raw_f,
            exact,
            method,
            evaluation,
            clipped,
        }
    }
}

/// Scalar view of the inputs for one evaluation.
struct Inputs<S> {
    lambda: S,
    mu: S,
    rho: S,
    harmonics: std::sync::Arc<Harmonics<S>>,
}

fn nelson_t<S: Scalar>(i: usize, x: &Inputs<S>) -> S {
    let one = S::from_i64(1);
    let rho = x.rho.clone();
    if i == 1 {
        return one.clone() / (x.mu.clone() * (one - rho));
    }
    let h = &x.harmonics;
    let factor = (S::from_i64(12) - rho.clone()) / (S::from_i64(88) * x.mu.clone() * (one - rho.clone()));
    let bracket = (S::from_i64(11) * h.h(i).clone() + S::from_i64(4) * rho * (h.h(2).clone() - h.h(i).clone())) / h.h(2).clone();
    factor * bracket
}

fn varma_t<S: Scalar>(i: usize, x: &Inputs<S>) -> S {
    let h = &x.harmonics;
    (h.h(i).clone() + (h.v(i).clone() - h.h(i).clone()) * (x.lambda.clone() / x.mu.clone())) / (x.mu.clone() - x.lambda.clone())
}

/// `sum_{i=k..n} W[n,k][i] * t(i)`, accumulated in increasing `i`.
fn lt_sum<S: Scalar>(row: &[BigInt], k: usize, t: impl Fn(usize) -> S) -> S {
    row.iter().enumerate().fold(S::from_i64(0), |acc, (off, w)| acc + S::from_bigint(w) * t(k + off))
}

fn exact_inputs(lambda: &Rate, mu: &Rate, n: usize) -> Inputs<BigRational> {
    Inputs {
        lambda: lambda.as_ratio().clone(),
        mu: mu.as_ratio().clone(),
        rho: lambda.as_ratio() / mu.as_ratio(),
        harmonics: HarmonicCache::shared(n.max(2)),
    }
}

fn float_inputs(lambda: &Rate, mu: &Rate, n: usize) -> Inputs<f64> {
    let (l, m) = (lambda.to_f64(), mu.to_f64());
    Inputs { lambda: l, mu: m, rho: l / m, harmonics: HarmonicCache::shared_floating(n.max(2)) }
}

fn evaluate(
    eval: Evaluation,
    method: Method,
    lambda: &Rate,
    mu: &Rate,
    n: usize,
    exact: impl FnOnce(&Inputs<BigRational>) -> BigRational,
    float: impl FnOnce(&Inputs<f64>) -> f64,
) -> ApproxValue {
    match eval {
        Evaluation::ExactRational => {
            let v = exact(&exact_inputs(lambda, mu, n));
            ApproxValue::from_scalar(v.clone(), method, eval, Some(v))
        }
        Evaluation::Floating => ApproxValue::from_scalar(float(&float_inputs(lambda, mu, n)), method, eval, None),
    }
}

/// Nelson's approximation of the basic `(i, i)` queue; exact M/M/1 for
/// `i = 1` and exact for `i = 2`.
pub fn nelson_basic(i: usize, lambda: &Rate, mu: &Rate, eval: Evaluation) -> Result<ApproxValue> {
    if i == 0 {
        return Err(Error::Domain("fan-out must be at least 1".into()));
    }
    check_stable(lambda, mu)?;
    Ok(evaluate(eval, Method::NelsonBasic, lambda, mu, i, |x| nelson_t(i, x), |x| nelson_t(i, x)))
}

/// Varma's light-traffic interpolation for the basic `(i, i)` queue.
pub fn varma_basic(i: usize, lambda: &Rate, mu: &Rate, eval: Evaluation) -> Result<ApproxValue> {
    if i == 0 {
        return Err(Error::Domain("fan-out must be at least 1".into()));
    }
    check_stable(lambda, mu)?;
    Ok(evaluate(eval, Method::VarmaBasic, lambda, mu, i, |x| varma_t(i, x), |x| varma_t(i, x)))
}

fn check_table(spec: &QueueSpec, table: &WTable) -> Result<()> {
    if table.n() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, actual: table.n() });
    }
    Ok(())
}

/// Nelson-LT estimate of the expected sojourn time of a non-purging
/// `(n, k)` queue. Negative estimates are reported as 0 with `clipped` set.
pub fn nelson_lt(spec: &QueueSpec, table: &WTable, eval: Evaluation) -> Result<ApproxValue> {
    spec.check_stable()?;
    check_table(spec, table)?;
    let row = table.row(spec.k).expect("k validated by QueueSpec");
    let (k, n) = (spec.k, spec.n);
    Ok(evaluate(
        eval,
        Method::NelsonLt,
        &spec.lambda,
        &spec.mu,
        n,
        |x| lt_sum(row, k, |i| nelson_t(i, x)),
        |x| lt_sum(row, k, |i| nelson_t(i, x)),
    ))
}

/// Varma-LT estimate of the expected sojourn time of a non-purging
/// `(n, k)` queue, clipped at 0 like [`nelson_lt`].
pub fn varma_lt(spec: &QueueSpec, table: &WTable, eval: Evaluation) -> Result<ApproxValue> {
    spec.check_stable()?;
    check_table(spec, table)?;
    let row = table.row(spec.k).expect("k validated by QueueSpec");
    let (k, n) = (spec.k, spec.n);
    Ok(evaluate(
        eval,
        Method::VarmaLt,
        &spec.lambda,
        &spec.mu,
        n,
        |x| lt_sum(row, k, |i| varma_t(i, x)),
        |x| lt_sum(row, k, |i| varma_t(i, x)),
    ))
}

/// Dispatch on [`Method`]. The basic methods use `spec.n` as the fan-out.
pub fn approximate(method: Method, spec: &QueueSpec, table: &WTable, eval: Evaluation) -> Result<ApproxValue> {
    match method {
        Method::NelsonBasic => nelson_basic(spec.n, &spec.lambda, &spec.mu, eval),
        Method::VarmaBasic => varma_basic(spec.n, &spec.lambda, &spec.mu, eval),
        Method::NelsonLt => nelson_lt(spec, table, eval),
        Method::VarmaLt => varma_lt(spec, table, eval),
    }
}

/// `E[X_(n,k)]` for iid exponential(mu): `(H_n - H_{n-k}) / mu`.
pub fn exp_order_mean(n: usize, k: usize, mu: &BigRational) -> BigRational {
    let h = HarmonicCache::shared(n);
    (h.h(n) - h.h(n - k)) / mu
}

/// `1 / (mu - lambda)`, the M/M/1 mean sojourn time.
pub fn mm1_sojourn(lambda: &Rate, mu: &Rate) -> Result<BigRational> {
    check_stable(lambda, mu)?;
    Ok(BigRational::one() / (mu.as_ratio() - lambda.as_ratio()))
}
