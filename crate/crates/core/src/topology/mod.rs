//! Integer chain complexes: validation, homology, cohomology and homology
//! with cyclic coefficients, all via Smith normal form.

mod intmatrix;
mod snf;

pub use intmatrix::IntMatrix;
pub use snf::{smith_normal_form, Smith};

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("d{n} has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape { n: usize, rows: usize, cols: usize, want_rows: usize, want_cols: usize },
    #[error("expected {want} boundary maps for {dims} chain groups, got {got}")]
    Count { dims: usize, want: usize, got: usize },
    #[error("not a chain complex: d{n}·d{} ≠ 0 (product {product}, first nonzero at ({row},{col}) = {value})", n + 1)]
    NotAComplex { n: usize, product: IntMatrix, row: usize, col: usize, value: BigInt },
    #[error("coefficient modulus must be at least 2, got {0}")]
    Modulus(u64),
    #[error("invalid complex file: {0}")]
    Parse(String),
}

/// `dims[n]` is the rank of `C_n`; `boundaries[n-1]` is `d_n: C_n → C_{n-1}`
/// as a `dims[n-1] × dims[n]` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplex {
    dims: Vec<usize>,
    boundaries: Vec<IntMatrix>,
}

#[derive(Deserialize)]
struct ComplexFile {
    dims: Vec<usize>,
    boundaries: Vec<Vec<i64>>,
}

impl ChainComplex {
    /// Checks shapes only; see [`ChainComplex::validate`] for `d∘d = 0`.
    pub fn new(dims: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self, ComplexError> {
        let want = dims.len().saturating_sub(1);
        if boundaries.len() != want {
            return Err(ComplexError::Count { dims: dims.len(), want, got: boundaries.len() });
        }
        for (i, d) in boundaries.iter().enumerate() {
            let (want_rows, want_cols) = (dims[i], dims[i + 1]);
            if d.rows() != want_rows || d.cols() != want_cols {
                return Err(ComplexError::Shape { n: i + 1, rows: d.rows(), cols: d.cols(), want_rows, want_cols });
            }
        }
        Ok(Self { dims, boundaries })
    }

    /// Builds from `dims` and row-major integer boundary data.
    pub fn from_rows(dims: &[usize], boundaries: &[&[i64]]) -> Result<Self, ComplexError> {
        let mut maps = Vec::with_capacity(boundaries.len());
        for (i, data) in boundaries.iter().enumerate() {
            let (r, c) = (dims.get(i).copied().unwrap_or(0), dims.get(i + 1).copied().unwrap_or(0));
            let m = IntMatrix::from_i64(r, c, data).ok_or(ComplexError::Shape {
                n: i + 1,
                rows: data.len(),
                cols: 1,
                want_rows: r,
                want_cols: c,
            })?;
            maps.push(m);
        }
        Self::new(dims.to_vec(), maps)
    }

    /// Parses `{"dims": [...], "boundaries": [[row-major ints], ...]}`.
    pub fn from_json(text: &str) -> Result<Self, ComplexError> {
        let f: ComplexFile = serde_json::from_str(text).map_err(|e| ComplexError::Parse(e.to_string()))?;
        let refs: Vec<&[i64]> = f.boundaries.iter().map(Vec::as_slice).collect();
        Self::from_rows(&f.dims, &refs)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `d_n` for `1 <= n <= N`.
    pub fn boundary(&self, n: usize) -> Option<&IntMatrix> {
        n.checked_sub(1).and_then(|i| self.boundaries.get(i))
    }

    /// Verifies `d_n · d_{n+1} = 0` for every `n`, reporting the first failure.
    pub fn validate(&self) -> Result<(), ComplexError> {
        for n in 1..self.boundaries.len() {
            let product = &self.boundaries[n - 1] * &self.boundaries[n];
            if let Some((row, col, value)) = product.first_nonzero() {
                let value = value.clone();
                return Err(ComplexError::NotAComplex { n, product, row, col, value });
            }
        }
        Ok(())
    }

    fn ranks_and_factors(&self) -> Vec<(usize, Vec<BigInt>)> {
        self.boundaries
            .iter()
            .map(|d| {
                let s = smith_normal_form(d);
                let f = s.invariant_factors();
                (f.len(), f)
            })
            .collect()
    }

    /// `H_0 .. H_N`.
    pub fn homology(&self) -> Result<Vec<AbelianGroup>, ComplexError> {
        self.validate()?;
        let maps = self.ranks_and_factors();
        let n_top = self.dims.len();
        let mut out = Vec::with_capacity(n_top);
        for n in 0..n_top {
            let rank_dn = if n == 0 { 0 } else { maps[n - 1].0 };
            let kernel = self.dims[n] - rank_dn;
            let (rank_up, torsion) = match maps.get(n) {
                Some((r, f)) => (*r, f.iter().filter(|t| !t.is_one()).cloned().collect()),
                None => (0, Vec::new()),
            };
            out.push(AbelianGroup { betti: kernel - rank_up, torsion });
        }
        Ok(out)
    }

    /// `H^0 .. H^N` by universal coefficients: free part of `H^n` is that of
    /// `H_n`, torsion of `H^n` is the torsion of `H_{n-1}`.
    pub fn cohomology(&self) -> Result<Vec<AbelianGroup>, ComplexError> {
        let h = self.homology()?;
        Ok((0..h.len())
            .map(|n| AbelianGroup {
                betti: h[n].betti,
                torsion: if n == 0 { Vec::new() } else { h[n - 1].torsion.clone() },
            })
            .collect())
    }

    /// `H_n(C; Z/m) = (Z/m)^{b_n} ⊕ Z/gcd(t,m) over tors H_n ⊕ Z/gcd(t,m)
    /// over tors H_{n-1}`, returned in invariant-factor form.
    pub fn homology_with_coefficients(&self, m: u64) -> Result<Vec<AbelianGroup>, ComplexError> {
        if m < 2 {
            return Err(ComplexError::Modulus(m));
        }
        let h = self.homology()?;
        let m = BigInt::from(m);
        Ok((0..h.len())
            .map(|n| {
                let mut orders = vec![m.clone(); h[n].betti];
                orders.extend(h[n].torsion.iter().map(|t| t.gcd(&m)));
                if n > 0 {
                    orders.extend(h[n - 1].torsion.iter().map(|t| t.gcd(&m)));
                }
                AbelianGroup::finite(&orders)
            })
            .collect())
    }
}

/// `Z^betti ⊕ Z/t_1 ⊕ ... ⊕ Z/t_k` with `1 < t_1 | t_2 | ... | t_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    pub betti: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianGroup {
    pub fn free(betti: usize) -> Self {
        Self { betti, torsion: Vec::new() }
    }

    /// Normalizes a direct sum of cyclic groups of the given orders into
    /// invariant-factor form.
    pub fn finite(orders: &[BigInt]) -> Self {
        let n = orders.len();
        let mut diag = IntMatrix::zeros(n, n);
        for (i, o) in orders.iter().enumerate() {
            diag.set(i, i, o.clone());
        }
        let torsion = smith_normal_form(&diag).invariant_factors().into_iter().filter(|t| !t.is_one()).collect();
        Self { betti: 0, torsion }
    }

    pub fn is_trivial(&self) -> bool {
        self.betti == 0 && self.torsion.is_empty()
    }

    /// Dimension over `Z/p` of `self ⊗ Z/p` for prime `p`.
    pub fn rank_mod(&self, p: u64) -> usize {
        let p = BigInt::from(p);
        self.betti + self.torsion.iter().filter(|t| (*t % &p).is_zero()).count()
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        match self.betti {
            0 => {}
            1 => parts.push("Z".to_string()),
            b => parts.push(format!("Z^{b}")),
        }
        parts.extend(self.torsion.iter().map(|t| format!("Z/{t}")));
        f.write_str(&parts.join(" + "))
    }
}

/// `"H0=Z; H1=Z/2; ..."` (or `H^n` for cohomology when `upper`).
pub fn format_groups(groups: &[AbelianGroup], upper: bool) -> String {
    let mark = if upper { "H^" } else { "H" };
    groups.iter().enumerate().map(|(n, g)| format!("{mark}{n}={g}")).collect::<Vec<_>>().join("; ")
}

/// Four-cell complex `Z --0--> Z --2--> Z --0--> Z` (top degree first).
pub fn klein_bottle() -> ChainComplex {
    ChainComplex::from_rows(&[1, 1, 1, 1], &[&[0], &[2], &[0]]).expect("static shapes")
}

/// The standard cellular complex of the Klein bottle, one cell in degree 0,
/// two in degree 1, one in degree 2: `d_1 = 0`, `d_2 = (2, 0)ᵀ`.
pub fn klein_bottle_cellular() -> ChainComplex {
    ChainComplex::from_rows(&[1, 2, 1], &[&[0, 0], &[2, 0]]).expect("static shapes")
}

/// Boundary data with `d_1 = (1 1)` and `d_2 = (1, 1)ᵀ`, which does not
/// satisfy `d∘d = 0`; kept as an error-path fixture.
pub fn rp3_inconsistent() -> ChainComplex {
    ChainComplex::from_rows(&[1, 2, 1], &[&[1, 1], &[1, 1]]).expect("static shapes")
}

/// Standard cellular complex of real projective 3-space:
/// `Z --0--> Z --2--> Z --0--> Z`, i.e. `d_1 = 0`, `d_2 = 2`, `d_3 = 0`.
pub fn rp3() -> ChainComplex {
    ChainComplex::from_rows(&[1, 1, 1, 1], &[&[0], &[2], &[0]]).expect("static shapes")
}
