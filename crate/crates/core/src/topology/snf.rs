use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::IntMatrix;

/// Smith normal form `D = U·M·V` with `U`, `V` unimodular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    /// Nonzero diagonal entries `d_1 | d_2 | ...`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d.get(i, i).clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Position of the smallest nonzero |entry| in the trailing block.
fn min_pivot(m: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for r in t..m.rows() {
        for c in t..m.cols() {
            let a = m.abs_entry(r, c);
            if !a.is_zero() && best.as_ref().is_none_or(|(_, _, b)| a < *b) {
                best = Some((r, c, a));
            }
        }
    }
    best.map(|(r, c, _)| (r, c))
}

/// Diagonalizes with min-|pivot| elimination, then enforces divisibility.
pub fn smith_normal_form(m: &IntMatrix) -> Smith {
    let (rows, cols) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            let Some((pr, pc)) = min_pivot(&d, t) else {
                return Smith { u, d, v };
            };
            d.swap_rows(t, pr);
            u.swap_rows(t, pr);
            d.swap_cols(t, pc);
            v.swap_cols(t, pc);
            let p = d.get(t, t).clone();
            let mut clean = true;
            for r in t + 1..rows {
                let q = d.get(r, t) / &p;
                if !q.is_zero() {
                    let k = -q;
                    d.add_row(r, t, &k);
                    u.add_row(r, t, &k);
                }
                clean &= d.get(r, t).is_zero();
            }
            for c in t + 1..cols {
                let q = d.get(t, c) / &p;
                if !q.is_zero() {
                    let k = -q;
                    d.add_col(c, t, &k);
                    v.add_col(c, t, &k);
                }
                clean &= d.get(t, c).is_zero();
            }
            if !clean {
                continue;
            }
            // pivot must divide the remaining block
            let bad = (t + 1..rows).find(|&r| (t + 1..cols).any(|c| !(d.get(r, c) % &p).is_zero()));
            match bad {
                Some(r) => {
                    let one = BigInt::from(1);
                    d.add_row(t, r, &one);
                    u.add_row(t, r, &one);
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    Smith { u, d, v }
}
