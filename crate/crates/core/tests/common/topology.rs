use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsim::topology::{smith_normal_form, IntMatrix};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Invariant factors as ratios of determinantal divisors (gcd of all
/// `k × k` minors).
pub fn gcd_of_minors(rows: usize, cols: usize, data: &[i64]) -> Vec<BigInt> {
    let mut divisors = vec![BigInt::one()];
    for k in 1..=rows.min(cols) {
        let mut g = BigInt::zero();
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let sub: Vec<i64> = rs.iter().flat_map(|&r| cs.iter().map(move |&c| data[r * cols + c])).collect();
                let det = IntMatrix::from_i64(k, k, &sub).unwrap().determinant().unwrap();
                g = g.gcd(&det);
            }
        }
        if g.is_zero() {
            break;
        }
        divisors.push(g);
    }
    divisors.windows(2).map(|w| &w[1] / &w[0]).collect()
}

#[derive(Debug, Default)]
pub struct SnfReport {
    pub checked: usize,
    pub factor_mismatch: usize,
    pub product_mismatch: usize,
    pub not_unimodular: usize,
    pub not_normal_form: usize,
    pub elapsed: Duration,
}

impl SnfReport {
    pub fn ok(&self) -> bool {
        self.factor_mismatch + self.product_mismatch + self.not_unimodular + self.not_normal_form == 0
    }
}

fn is_unit(x: &Option<BigInt>) -> bool {
    x.as_ref().is_some_and(|d| d.abs().is_one())
}

/// Checks one matrix; returns (factors ok, product ok, unimodular, normal form).
pub fn check_snf(rows: usize, cols: usize, data: &[i64]) -> (bool, bool, bool, bool) {
    let m = IntMatrix::from_i64(rows, cols, data).unwrap();
    let s = smith_normal_form(&m);
    let factors = s.invariant_factors() == gcd_of_minors(rows, cols, data);
    let product = s.u.checked_mul(&m).and_then(|um| um.checked_mul(&s.v)).is_some_and(|p| p == s.d);
    let unimodular = is_unit(&s.u.determinant()) && is_unit(&s.v.determinant());
    let mut normal = true;
    for r in 0..rows {
        for c in 0..cols {
            let x = s.d.get(r, c);
            if (r != c && !x.is_zero()) || x.is_negative() {
                normal = false;
            }
        }
    }
    let diag: Vec<&BigInt> = (0..rows.min(cols)).map(|i| s.d.get(i, i)).collect();
    for w in diag.windows(2) {
        let divides = if w[0].is_zero() { w[1].is_zero() } else { (w[1] % w[0]).is_zero() };
        normal &= divides;
    }
    (factors, product, unimodular, normal)
}

/// Random matrices up to 4×4 with entries in [-5, 5].
pub fn snf_suite(count: usize, seed: u64) -> SnfReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut rep = SnfReport::default();
    for _ in 0..count {
        let (rows, cols) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let data: Vec<i64> = (0..rows * cols).map(|_| rng.random_range(-5..=5)).collect();
        let (f, p, u, n) = check_snf(rows, cols, &data);
        rep.checked += 1;
        rep.factor_mismatch += usize::from(!f);
        rep.product_mismatch += usize::from(!p);
        rep.not_unimodular += usize::from(!u);
        rep.not_normal_form += usize::from(!n);
    }
    rep.elapsed = start.elapsed();
    rep
}
