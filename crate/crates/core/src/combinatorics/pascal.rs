use std::io::Write;

use num_bigint::BigUint;
use num_traits::Zero;

use super::binomial;
use crate::error::{Error, Result};

/// Counts `a(n, i)` of `{C, D}` words of length `n` with exponent `i`, split
/// by class: `a₊` counts diagonal products, `a₋` antidiagonal ones.
#[derive(Clone, Debug)]
pub struct PascalTable {
    depth: usize,
    // row n holds indices i = -n ..= n at offset i + n
    plus: Vec<Vec<BigUint>>,
    minus: Vec<Vec<BigUint>>,
}

/// Builds rows `0..=n_max` from the class-split recursion
/// `a₊(n,i) = a₊(n-1,i-1) + a₋(n-1,i)`, `a₋(n,i) = a₊(n-1,i) + a₋(n-1,i+1)`
/// starting at the identity `a₊(0,0) = 1`.
pub fn pascal_table(n_max: usize) -> Result<PascalTable> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let mut plus = vec![vec![BigUint::from(1u32)]];
    let mut minus = vec![vec![BigUint::zero()]];
    for n in 1..=n_max {
        let width = 2 * n + 1;
        let (pp, pm) = (&plus[n - 1], &minus[n - 1]);
        let prev = |row: &Vec<BigUint>, i: i64| -> BigUint {
            let idx = i + n as i64 - 1;
            if idx < 0 || idx as usize >= row.len() {
                BigUint::zero()
            } else {
                row[idx as usize].clone()
            }
        };
        let mut rp = Vec::with_capacity(width);
        let mut rm = Vec::with_capacity(width);
        for off in 0..width {
            let i = off as i64 - n as i64;
            rp.push(prev(pp, i - 1) + prev(pm, i));
            rm.push(prev(pp, i) + prev(pm, i + 1));
        }
        plus.push(rp);
        minus.push(rm);
    }
    Ok(PascalTable {
        depth: n_max,
        plus,
        minus,
    })
}

impl PascalTable {
    pub fn depth(&self) -> usize {
        self.depth
    }

    fn get(rows: &[Vec<BigUint>], n: usize, i: i64) -> Option<&BigUint> {
        let idx = i + n as i64;
        rows.get(n)
            .and_then(|r| usize::try_from(idx).ok().and_then(|k| r.get(k)))
    }

    pub fn a_plus(&self, n: usize, i: i64) -> BigUint {
        Self::get(&self.plus, n, i).cloned().unwrap_or_default()
    }

    pub fn a_minus(&self, n: usize, i: i64) -> BigUint {
        Self::get(&self.minus, n, i).cloned().unwrap_or_default()
    }

    pub fn a(&self, n: usize, i: i64) -> BigUint {
        self.a_plus(n, i) + self.a_minus(n, i)
    }

    /// `(i, a(n, i))` for `i` in `-n+1 ..= n`, the support of row `n ≥ 1`.
    pub fn row(&self, n: usize) -> Vec<(i64, BigUint)> {
        (1 - n as i64..=n as i64).map(|i| (i, self.a(n, i))).collect()
    }

    pub fn row_sum(&self, n: usize) -> BigUint {
        (-(n as i64)..=n as i64).map(|i| self.a(n, i)).sum()
    }

    /// CSV with header `n,i,a,a_plus,a_minus`, rows `1..=depth`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "i", "a", "a_plus", "a_minus"])?;
        for n in 1..=self.depth {
            for (i, a) in self.row(n) {
                w.write_record([
                    n.to_string(),
                    i.to_string(),
                    a.to_string(),
                    self.a_plus(n, i).to_string(),
                    self.a_minus(n, i).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Export(e.to_string()))
    }
}

/// Binomial closed form of `a(n, i)`:
/// `a(n, 2j) = C(n-1, ⌊(n-1)/2⌋ + j)` and `a(n, 2j+1) = C(n-1, ⌊n/2⌋ + j)`.
pub fn closed_form(n: usize, i: i64) -> BigUint {
    if n == 0 {
        return BigUint::from(u32::from(i == 0));
    }
    let n = n as i64;
    let k = if i.rem_euclid(2) == 0 {
        (n - 1) / 2 + i.div_euclid(2)
    } else {
        n / 2 + i.div_euclid(2)
    };
    if k < 0 || k > n - 1 {
        BigUint::zero()
    } else {
        binomial((n - 1) as u64, k as u64)
    }
}
