use num_bigint::BigInt;

/// `C(n, k)` by the multiplicative formula with a running division.
///
/// After step `t` the accumulator holds `C(n - k + t, t)`, so every
/// intermediate division is exact.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1);
    for t in 1..=k {
        acc *= n - k + t;
        acc /= t;
    }
    acc
}

/// Every `C(m, j)` with `0 <= j <= m <= n`, rows built left to right with
/// `C(m, j) = C(m, j - 1) * (m - j + 1) / j`.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    rows: Vec<Vec<BigInt>>,
}

impl BinomialTable {
    pub fn up_to(n: usize) -> Self {
        let rows = (0..=n)
            .map(|m| {
                let mut row = Vec::with_capacity(m + 1);
                let mut acc = BigInt::from(1);
                row.push(acc.clone());
                for j in 1..=m {
                    acc *= m - j + 1;
                    acc /= j;
                    row.push(acc.clone());
                }
                row
            })
            .collect();
        BinomialTable { rows }
    }

    pub fn get(&self, m: usize, j: usize) -> &BigInt {
        &self.rows[m][j]
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }
}
