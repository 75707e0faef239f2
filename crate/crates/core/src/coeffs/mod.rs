//! Exact coefficients of the linear transformation from maxima to order
//! statistics.
//!
//! For jointly-identical (exchangeable) variables `X_1..X_n`, write `P_i`
//! for the distribution of `max(X_1..X_i)`. Then
//!
//! ```text
//! P(X_1..X_k <= t, X_{k+1}..X_n > t) = sum_{i=k..n} A[n,k][i] * P_i
//! P(X_(n,k) <= t)                    = sum_{i=k..n} W[n,k][i] * P_i
//! ```
//!
//! where `A[n,k][k] = 1`, `A[n,k][i] = -sum_{j=1..i-k} C(n-i+j, j) A[n,k][i-j]`
//! and `W[n,k][i] = sum_{j=k..i} C(n, j) A[n,j][i]`. All values are exact
//! big integers; they grow past `u64` around `n = 35`.
//!
//! `X_(n,k)` is the k-th *smallest* value (the k-th finished sub-task).

mod binomial;
mod table;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;

pub use binomial::{binomial, BinomialTable};
pub use table::{load_table, save_table, TableStore, WTable};

use crate::error::{Error, Result};

pub(crate) fn check_indices(n: usize, k: usize, i: usize) -> Result<()> {
    if n == 0 || k == 0 || k > i || i > n {
        return Err(Error::Domain(format!(
            "coefficient indices must satisfy 1 <= k <= i <= n, got n={n}, k={k}, i={i}"
        )));
    }
    Ok(())
}

/// The row `A[n,k][k..=n]`, computed directly from the recurrence with no
/// memoization. Entry `r` of the result is `A[n,k][k + r]`.
pub fn a_row_uncached(n: usize, k: usize) -> Result<Vec<BigInt>> {
    check_indices(n, k, k)?;
    Ok(a_row_with(&BinomialTable::up_to(n), n, k))
}

fn a_row_with(binom: &BinomialTable, n: usize, k: usize) -> Vec<BigInt> {
    let mut row: Vec<BigInt> = Vec::with_capacity(n - k + 1);
    row.push(BigInt::from(1));
    for i in (k + 1)..=n {
        let mut acc = BigInt::from(0);
        for j in 1..=(i - k) {
            acc += binom.get(n - i + j, j) * &row[i - j - k];
        }
        row.push(-acc);
    }
    row
}

type RowMap = HashMap<(usize, usize), Arc<[BigInt]>>;

/// Memo of `A` rows keyed by `(n, k)`.
///
/// Rows are inserted fully built, so concurrent readers only ever observe
/// complete rows. Different `n` may be populated from different threads.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    a_rows: RwLock<RowMap>,
    binomials: RwLock<HashMap<usize, Arc<BinomialTable>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by the free functions of this module.
    pub fn global() -> &'static CoefficientCache {
        static GLOBAL: OnceLock<CoefficientCache> = OnceLock::new();
        GLOBAL.get_or_init(CoefficientCache::new)
    }

    fn binomials(&self, n: usize) -> Arc<BinomialTable> {
        if let Some(t) = self.binomials.read().unwrap().get(&n) {
            return Arc::clone(t);
        }
        let table = Arc::new(BinomialTable::up_to(n));
        Arc::clone(self.binomials.write().unwrap().entry(n).or_insert(table))
    }

    /// `A[n,k][k..=n]`, memoized.
    pub fn a_row(&self, n: usize, k: usize) -> Result<Arc<[BigInt]>> {
        check_indices(n, k, k)?;
        if let Some(row) = self.a_rows.read().unwrap().get(&(n, k)) {
            return Ok(Arc::clone(row));
        }
        let row: Arc<[BigInt]> = a_row_with(&self.binomials(n), n, k).into();
        let mut rows = self.a_rows.write().unwrap();
        Ok(Arc::clone(rows.entry((n, k)).or_insert(row)))
    }

    pub fn a_coefficient(&self, n: usize, k: usize, i: usize) -> Result<BigInt> {
        check_indices(n, k, i)?;
        Ok(self.a_row(n, k)?[i - k].clone())
    }

    pub fn w_coefficient(&self, n: usize, k: usize, i: usize) -> Result<BigInt> {
        check_indices(n, k, i)?;
        let binom = self.binomials(n);
        let mut acc = BigInt::from(0);
        for j in k..=i {
            acc += binom.get(n, j) * &self.a_row(n, j)?[i - j];
        }
        Ok(acc)
    }

    /// The full upper-triangular table for `n`.
    ///
    /// Built from the last row upwards with
    /// `W[n,k][i] = W[n,k+1][i] + C(n,k) A[n,k][i]`, which is the defining
    /// sum regrouped by `j`.
    pub fn w_table(&self, n: usize) -> Result<WTable> {
        if n == 0 {
            return Err(Error::Domain("w_table requires n >= 1".into()));
        }
        let binom = self.binomials(n);
        let mut rows: Vec<Vec<BigInt>> = vec![Vec::new(); n];
        rows[n - 1] = vec![BigInt::from(1)];
        for k in (1..n).rev() {
            let a = self.a_row(n, k)?;
            let c = binom.get(n, k);
            let next = &rows[k];
            let mut row = Vec::with_capacity(n - k + 1);
            row.push(c * &a[0]);
            for i in (k + 1)..=n {
                row.push(&next[i - k - 1] + c * &a[i - k]);
            }
            rows[k - 1] = row;
        }
        Ok(WTable::from_rows(n, rows))
    }
}

/// `A[n,k][i]` from the process-wide cache.
pub fn a_coefficient(n: usize, k: usize, i: usize) -> Result<BigInt> {
    CoefficientCache::global().a_coefficient(n, k, i)
}

/// `W[n,k][i]` from the process-wide cache.
pub fn w_coefficient(n: usize, k: usize, i: usize) -> Result<BigInt> {
    CoefficientCache::global().w_coefficient(n, k, i)
}

pub fn w_table(n: usize) -> Result<WTable> {
    CoefficientCache::global().w_table(n)
}
