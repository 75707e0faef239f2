use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scalar::Scalar;
use crate::coeffs::BinomialTable;

/// Harmonic-type sums indexed `0..=n`, with index 0 holding the empty sum.
///
/// * `h(i)  = sum_{j=1..i} 1/j`
/// * `h2(i) = sum_{j=1..i} 1/j^2`
/// * `v(i)  = sum_{r=1..i} C(i,r) (-1)^(r-1) sum_{m=1..r} C(r,m) (m-1)! / r^(m+1)`,
///   the heavy-traffic constant of Varma's interpolation.
#[derive(Clone, Debug)]
pub struct Harmonics<S> {
    h: Vec<S>,
    h2: Vec<S>,
    v: Vec<S>,
}

/// Exact harmonic sums.
pub type HarmonicCache = Harmonics<BigRational>;

impl<S: Scalar> Harmonics<S> {
    pub fn max_index(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self, i: usize) -> &S {
        &self.h[i]
    }

    pub fn h2(&self, i: usize) -> &S {
        &self.h2[i]
    }

    pub fn v(&self, i: usize) -> &S {
        &self.v[i]
    }
}

/// `sum_{m=1..r} C(r,m) (m-1)! / r^(m+1)`.
fn varma_inner(binom: &BinomialTable, r: usize) -> BigRational {
    let r_big = BigInt::from(r);
    let mut fact = BigInt::one(); // (m-1)!
    let mut power = &r_big * &r_big; // r^(m+1)
    let mut acc = <BigRational as Zero>::zero();
    for m in 1..=r {
        if m > 1 {
            fact *= m - 1;
            power *= &r_big;
        }
        acc += BigRational::new(binom.get(r, m) * &fact, power.clone());
    }
    acc
}

impl HarmonicCache {
    pub fn up_to(n: usize) -> Self {
        let binom = BinomialTable::up_to(n);
        let mut h = vec![<BigRational as Zero>::zero()];
        let mut h2 = vec![<BigRational as Zero>::zero()];
        for j in 1..=n {
            let jj = BigInt::from(j);
            h.push(&h[j - 1] + BigRational::new(BigInt::one(), jj.clone()));
            h2.push(&h2[j - 1] + BigRational::new(BigInt::one(), &jj * &jj));
        }
        let inner: Vec<BigRational> = (0..=n).map(|r| if r == 0 { <BigRational as Zero>::zero() } else { varma_inner(&binom, r) }).collect();
        let v = (0..=n)
            .map(|i| {
                (1..=i)
                    .map(|r| {
                        let term = BigRational::from_integer(binom.get(i, r).clone()) * &inner[r];
                        if r % 2 == 1 {
                            term
                        } else {
                            -term
                        }
                    })
                    .sum()
            })
            .collect();
        Harmonics { h, h2, v }
    }

    /// Process-wide memoized `up_to(n)`.
    pub fn shared(n: usize) -> Arc<Self> {
        shared_entry(n).0
    }

    /// Process-wide memoized `up_to(n).to_floating()`.
    pub fn shared_floating(n: usize) -> Arc<Harmonics<f64>> {
        shared_entry(n).1
    }

    /// Floating counterpart: `h` and `h2` accumulated term by term in `f64`
    /// from `j = 1` upwards, `v` rounded from the exact values (its
    /// alternating sum is not safe to evaluate in floating point).
    pub fn to_floating(&self) -> Harmonics<f64> {
        let n = self.max_index();
        let mut h = vec![0.0];
        let mut h2 = vec![0.0];
        for j in 1..=n {
            let jf = j as f64;
            h.push(h[j - 1] + 1.0 / jf);
            h2.push(h2[j - 1] + 1.0 / (jf * jf));
        }
        let v = self.v.iter().map(<f64 as Scalar>::from_ratio).collect();
        Harmonics { h, h2, v }
    }
}

type SharedEntry = (Arc<HarmonicCache>, Arc<Harmonics<f64>>);

fn shared_entry(n: usize) -> SharedEntry {
    static CACHE: OnceLock<RwLock<BTreeMap<usize, SharedEntry>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.read().expect("harmonic cache poisoned").get(&n) {
        return e.clone();
    }
    let exact = HarmonicCache::up_to(n);
    let floating = exact.to_floating();
    let entry = (Arc::new(exact), Arc::new(floating));
    cache.write().expect("harmonic cache poisoned").entry(n).or_insert(entry).clone()
}
