use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;

use crate::error::{Error, Result};

/// Upper-triangular table of `W[n,k][i]` for `1 <= k <= i <= n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WTable {
    n: usize,
    // rows[k - 1][i - k]
    rows: Vec<Vec<BigInt>>,
}

impl WTable {
    pub(crate) fn from_rows(n: usize, rows: Vec<Vec<BigInt>>) -> Self {
        debug_assert_eq!(rows.len(), n);
        debug_assert!(rows.iter().enumerate().all(|(r, row)| row.len() == n - r));
        WTable { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize) -> Option<&BigInt> {
        if k == 0 || k > i || i > self.n {
            return None;
        }
        Some(&self.rows[k - 1][i - k])
    }

    /// `W[n,k][k..=n]`.
    pub fn row(&self, k: usize) -> Option<&[BigInt]> {
        (1..=self.n).contains(&k).then(|| self.rows[k - 1].as_slice())
    }

    /// `(k, i, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &BigInt)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, v)| (r + 1, r + 1 + c, v)))
    }

    /// Writes the table in the text cache format, one `n k i value` per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# W coefficients for n = {}: n k i value", self.n)?;
        for (k, i, v) in self.entries() {
            writeln!(out, "{} {} {} {}", self.n, k, i, v)?;
        }
        Ok(())
    }

    /// Parses the text cache format. `origin` is only used in error messages.
    pub fn read_from<R: BufRead>(input: R, origin: &Path) -> Result<WTable> {
        let malformed = |line: usize, reason: String| Error::MalformedCache {
            path: origin.to_path_buf(),
            line,
            reason,
        };

        let mut n_seen: Option<usize> = None;
        let mut entries: BTreeMap<(usize, usize), BigInt> = BTreeMap::new();
        let mut last_line = 0;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            last_line = lineno;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(malformed(lineno, format!("expected `n k i value`, found {} fields", fields.len())));
            }
            let index = |s: &str, name: &str| {
                s.parse::<usize>()
                    .map_err(|_| malformed(lineno, format!("{name} must be a positive integer, found {s:?}")))
            };
            let n = index(fields[0], "n")?;
            let k = index(fields[1], "k")?;
            let i = index(fields[2], "i")?;
            // Accept the typographic minus sign as well as ASCII '-'.
            let value: BigInt = fields[3]
                .replace('\u{2212}', "-")
                .parse()
                .map_err(|_| malformed(lineno, format!("value must be an integer, found {:?}", fields[3])))?;

            if n == 0 || k == 0 || k > i || i > n {
                return Err(malformed(lineno, format!("indices must satisfy 1 <= k <= i <= n, got n={n} k={k} i={i}")));
            }
            match n_seen {
                None => n_seen = Some(n),
                Some(prev) if prev != n => {
                    return Err(malformed(lineno, format!("mixed table sizes: n={prev} and n={n}")));
                }
                _ => {}
            }
            if let Some(prev) = entries.insert((k, i), value.clone()) {
                if prev != value {
                    return Err(malformed(lineno, format!("conflicting duplicate entry for k={k} i={i}")));
                }
            }
        }

        let n = n_seen.ok_or_else(|| malformed(last_line, "no entries".into()))?;
        let mut rows = Vec::with_capacity(n);
        for k in 1..=n {
            let mut row = Vec::with_capacity(n - k + 1);
            for i in k..=n {
                let v = entries
                    .remove(&(k, i))
                    .ok_or_else(|| malformed(last_line, format!("missing entry for k={k} i={i}")))?;
                row.push(v);
            }
            rows.push(row);
        }
        Ok(WTable::from_rows(n, rows))
    }
}

pub fn save_table(table: &WTable, destination: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(destination)?);
    table.write_to(&mut file)?;
    file.flush()?;
    Ok(())
}

pub fn load_table(source: &Path) -> Result<WTable> {
    let file = fs::File::open(source)?;
    WTable::read_from(BufReader::new(file), source)
}

/// Directory of cached tables, one `w-<n>.txt` file per `n`.
#[derive(Clone, Debug)]
pub struct TableStore {
    dir: PathBuf,
}

impl TableStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TableStore { dir: dir.into() }
    }

    pub fn path_for(&self, n: usize) -> PathBuf {
        self.dir.join(format!("w-{n}.txt"))
    }

    /// Loads the cached table for `n`, computing and saving it on a miss.
    pub fn load_or_compute(&self, n: usize) -> Result<WTable> {
        let path = self.path_for(n);
        if path.exists() {
            let table = load_table(&path)?;
            if table.n() != n {
                return Err(Error::MalformedCache {
                    path,
                    line: 1,
                    reason: format!("cache holds n={} but n={n} was requested", table.n()),
                });
            }
            return Ok(table);
        }
        let table = super::w_table(n)?;
        fs::create_dir_all(&self.dir)?;
        save_table(&table, &path)?;
        Ok(table)
    }
}
