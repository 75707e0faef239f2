//! Brute-force check of the maxima-to-order-statistics transformation.
//!
//! A [`DiscreteJointDistribution`] is a finite, exchangeable joint pmf over
//! `n`-tuples. Everything here is computed by full enumeration in exact
//! rational arithmetic, independently of how the coefficients were derived,
//! so a zero residual is a genuine check rather than a tautology.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::coeffs::WTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DiscreteJointDistribution {
    n: usize,
    /// Sorted, distinct support values.
    support: Vec<BigRational>,
    /// Outcome tuples as indices into `support`.
    pmf: BTreeMap<Vec<usize>, BigRational>,
}

fn multinomial_permutations(sorted: &[usize]) -> BigInt {
    let mut total = BigInt::one();
    for m in 2..=sorted.len() {
        total *= m;
    }
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            total /= run;
        } else {
            run = 1;
        }
    }
    total
}

impl DiscreteJointDistribution {
    /// Builds a distribution from explicit outcome probabilities.
    ///
    /// Fails unless the probabilities are non-negative, sum to exactly one
    /// and are invariant under permutation of each tuple.
    pub fn from_outcomes(
        n: usize,
        outcomes: impl IntoIterator<Item = (Vec<BigRational>, BigRational)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("distribution needs at least one variable".into()));
        }
        let outcomes: Vec<(Vec<BigRational>, BigRational)> = outcomes.into_iter().collect();
        let mut support: Vec<BigRational> = outcomes.iter().flat_map(|(t, _)| t.iter().cloned()).collect();
        support.sort();
        support.dedup();

        let mut pmf: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for (tuple, p) in outcomes {
            if tuple.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: tuple.len() });
            }
            if p < BigRational::zero() {
                return Err(Error::InvalidDistribution(format!("negative probability {p}")));
            }
            let idx: Vec<usize> = tuple.iter().map(|v| support.binary_search(v).unwrap()).collect();
            *pmf.entry(idx).or_insert_with(BigRational::zero) += p;
        }
        pmf.retain(|_, p| !p.is_zero());

        let total: BigRational = pmf.values().cloned().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let d = DiscreteJointDistribution { n, support, pmf };
        d.check_exchangeable()?;
        Ok(d)
    }

    /// `n` independent copies of a marginal given as `(value, probability)`.
    pub fn iid(n: usize, marginal: &[(BigRational, BigRational)]) -> Result<Self> {
        let mut outcomes: Vec<(Vec<BigRational>, BigRational)> = vec![(Vec::new(), BigRational::one())];
        for _ in 0..n {
            outcomes = outcomes
                .into_iter()
                .flat_map(|(t, p)| {
                    marginal.iter().map(move |(v, q)| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        (t, &p * q)
                    })
                })
                .collect();
        }
        Self::from_outcomes(n, outcomes)
    }

    /// iid uniform over the integers `0..m`.
    pub fn iid_uniform(n: usize, m: usize) -> Result<Self> {
        let p = BigRational::new(BigInt::one(), BigInt::from(m));
        let marginal: Vec<_> = (0..m).map(|v| (BigRational::from_integer(v.into()), p.clone())).collect();
        Self::iid(n, &marginal)
    }

    /// Mixture `sum_j w_j * d_j` of distributions of equal `n`.
    pub fn mixture(components: &[(BigRational, &DiscreteJointDistribution)]) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, d)| d.n)
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?;
        let mut outcomes = Vec::new();
        for (w, d) in components {
            if d.n != n {
                return Err(Error::DimensionMismatch { expected: n, actual: d.n });
            }
            for (idx, p) in &d.pmf {
                let tuple = idx.iter().map(|&j| d.support[j].clone()).collect();
                outcomes.push((tuple, w * p));
            }
        }
        Self::from_outcomes(n, outcomes)
    }

    fn check_exchangeable(&self) -> Result<()> {
        let mut classes: BTreeMap<Vec<usize>, (BigRational, usize)> = BTreeMap::new();
        for (idx, p) in &self.pmf {
            let mut key = idx.clone();
            key.sort_unstable();
            let entry = classes.entry(key.clone()).or_insert_with(|| (p.clone(), 0));
            if &entry.0 != p {
                return Err(Error::InvalidDistribution(format!(
                    "not exchangeable: permutations of {key:?} carry different probabilities"
                )));
            }
            entry.1 += 1;
        }
        for (key, (_, count)) in classes {
            if BigInt::from(count) != multinomial_permutations(&key) {
                return Err(Error::InvalidDistribution(format!(
                    "not exchangeable: some permutations of {key:?} have zero probability"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[BigRational] {
        &self.support
    }

    fn value(&self, j: usize) -> &BigRational {
        &self.support[j]
    }

    /// `P(X_1 <= t, ..., X_i <= t)`.
    pub fn maxima_cdf(&self, i: usize, t: &BigRational) -> Result<BigRational> {
        self.check_rank(i)?;
        Ok(self
            .pmf
            .iter()
            .filter(|(idx, _)| idx[..i].iter().all(|&j| self.value(j) <= t))
            .map(|(_, p)| p.clone())
            .sum())
    }

    /// `P(X_(n,k) <= t)` where `X_(n,k)` is the k-th smallest.
    pub fn order_statistic_cdf(&self, k: usize, t: &BigRational) -> Result<BigRational> {
        self.check_rank(k)?;
        Ok(self
            .pmf
            .iter()
            .filter(|(idx, _)| self.kth_smallest(idx, k) <= t)
            .map(|(_, p)| p.clone())
            .sum())
    }

    /// `E[max(X_1..X_i)]`.
    pub fn maxima_expectation(&self, i: usize) -> Result<BigRational> {
        self.check_rank(i)?;
        Ok(self
            .pmf
            .iter()
            .map(|(idx, p)| p * idx[..i].iter().map(|&j| self.value(j)).max().unwrap())
            .sum())
    }

    /// `E[X_(n,k)]`.
    pub fn order_statistic_expectation(&self, k: usize) -> Result<BigRational> {
        self.check_rank(k)?;
        Ok(self.pmf.iter().map(|(idx, p)| p * self.kth_smallest(idx, k)).sum())
    }

    fn kth_smallest(&self, idx: &[usize], k: usize) -> &BigRational {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        self.value(sorted[k - 1])
    }

    fn check_rank(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.n {
            return Err(Error::Domain(format!("rank {r} outside 1..={}", self.n)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub k: usize,
    /// `None` for the expectation identity.
    pub t: Option<BigRational>,
    pub direct: BigRational,
    pub transformed: BigRational,
}

impl IdentityCheck {
    pub fn residual(&self) -> BigRational {
        &self.direct - &self.transformed
    }

    pub fn holds(&self) -> bool {
        self.direct == self.transformed
    }
}

#[derive(Clone, Debug)]
pub struct LtReport {
    pub n: usize,
    pub checks: Vec<IdentityCheck>,
}

impl LtReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.holds())
    }
}

impl fmt::Display for LtReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.failures().count();
        write!(f, "n={} checks={} failed={}", self.n, self.checks.len(), failed)?;
        for c in self.failures() {
            match &c.t {
                Some(t) => write!(f, "\n  cdf k={} t={}: residual {}", c.k, t, c.residual())?,
                None => write!(f, "\n  mean k={}: residual {}", c.k, c.residual())?,
            }
        }
        Ok(())
    }
}

/// Checks `F_{n,k}(t) = sum_i W[n,k][i] P_i(t)` at every support point and
/// `E_{n,k} = sum_i W[n,k][i] E_i`, for every `k`.
pub fn verify_lt_identity(d: &DiscreteJointDistribution, table: &WTable) -> Result<LtReport> {
    if d.n() != table.n() {
        return Err(Error::DimensionMismatch { expected: d.n(), actual: table.n() });
    }
    let n = d.n();
    let weighted = |k: usize, terms: &[BigRational]| -> BigRational {
        table
            .row(k)
            .unwrap()
            .iter()
            .zip(&terms[k - 1..])
            .map(|(w, x)| BigRational::from_integer(w.clone()) * x)
            .sum()
    };

    let mut checks = Vec::new();
    for t in d.support() {
        let maxima: Vec<BigRational> = (1..=n).map(|i| d.maxima_cdf(i, t)).collect::<Result<_>>()?;
        for k in 1..=n {
            checks.push(IdentityCheck {
                k,
                t: Some(t.clone()),
                direct: d.order_statistic_cdf(k, t)?,
                transformed: weighted(k, &maxima),
            });
        }
    }
    let means: Vec<BigRational> = (1..=n).map(|i| d.maxima_expectation(i)).collect::<Result<_>>()?;
    for k in 1..=n {
        checks.push(IdentityCheck {
            k,
            t: None,
            direct: d.order_statistic_expectation(k)?,
            transformed: weighted(k, &means),
        });
    }
    Ok(LtReport { n, checks })
}

/// A fixed family of exchangeable test distributions used by `verify`:
/// independent ones, a fully dependent one and mixtures.
pub fn standard_suite(n: usize) -> Result<Vec<(String, DiscreteJointDistribution)>> {
    let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let int = |a: i64| BigRational::from_integer(a.into());
    let mut suite = Vec::new();

    suite.push((format!("iid uniform{{0,1}} n={n}"), DiscreteJointDistribution::iid_uniform(n, 2)?));
    suite.push((format!("iid uniform{{0,1,2}} n={n}"), DiscreteJointDistribution::iid_uniform(n, 3)?));
    let skewed = [(int(0), r(1, 6)), (int(1), r(1, 2)), (int(5), r(1, 3))];
    suite.push((format!("iid skewed{{0,1,5}} n={n}"), DiscreteJointDistribution::iid(n, &skewed)?));

    let all_equal = DiscreteJointDistribution::from_outcomes(n, [(vec![int(0); n], r(1, 2)), (vec![int(1); n], r(1, 2))])?;
    suite.push((format!("all-equal coin n={n}"), all_equal.clone()));

    // Exactly one variable is "slow"; which one is uniform over positions.
    let one_slow = DiscreteJointDistribution::from_outcomes(
        n,
        (0..n).map(|pos| {
            let tuple = (0..n).map(|j| if j == pos { int(3) } else { int(1) }).collect();
            (tuple, r(1, n as i64))
        }),
    )?;
    suite.push((format!("one-slow permutation n={n}"), one_slow.clone()));

    let iid4 = DiscreteJointDistribution::iid_uniform(n, 4)?;
    suite.push((
        format!("mixture(iid uniform4, all-equal, one-slow) n={n}"),
        DiscreteJointDistribution::mixture(&[(r(1, 2), &iid4), (r(1, 3), &all_equal), (r(1, 6), &one_slow)])?,
    ));
    Ok(suite)
}
