//! LU factorizations for the elliptic systems of both models.
//!
//! Matrices arrive in CSR form. Narrow ones are factored with a banded LU
//! with partial pivoting. Periodic (cyclic-band) matrices are reordered
//! first so that the wrap-around entries end up close to the diagonal.
//! Anything wider falls back to a dense LU.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorOptions {
    /// Largest `kl + ku` (after reordering) for which the banded path is used.
    pub max_bandwidth: usize,
}

impl FactorOptions {
    pub fn for_size(n: usize) -> Self {
        Self {
            max_bandwidth: (n / 3).max(8),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Banded(BandedLu),
    Dense(DenseLu),
}

/// Factors `a` with the default options for its size.
pub fn factor(a: &CsrMatrix) -> Result<Factorization> {
    factor_with(a, FactorOptions::for_size(a.n_rows()))
}

pub fn factor_with(a: &CsrMatrix, opts: FactorOptions) -> Result<Factorization> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension {
            expected: a.n_rows(),
            actual: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let natural = a.bandwidth(None);
    let perm = interleaved_permutation(n);
    let folded = a.bandwidth(Some(&perm));
    let (band, perm) = if folded.0 + folded.1 < natural.0 + natural.1 {
        (folded, Some(perm))
    } else {
        (natural, None)
    };
    if band.0 + band.1 <= opts.max_bandwidth {
        BandedLu::factor(a, band.0, band.1, perm).map(Factorization::Banded)
    } else {
        DenseLu::factor(a.to_dense()).map(Factorization::Dense)
    }
}

/// Solves `A x = rhs` for a factorization of `A`.
pub fn solve(f: &Factorization, rhs: &[f64]) -> Result<Vec<f64>> {
    f.solve(rhs)
}

impl Factorization {
    pub fn len(&self) -> usize {
        match self {
            Self::Banded(b) => b.n,
            Self::Dense(d) => d.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, Self::Banded(_))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_len(self.len(), x.len())?;
        match self {
            Self::Banded(b) => b.solve_in_place(x),
            Self::Dense(d) => d.solve_in_place(x),
        }
        Ok(())
    }
}

/// `perm[old] = new` for the ordering `0, N−1, 1, N−2, …`, which maps a
/// cyclic band of half-width `w` to an ordinary band of half-width `≈ 2w`.
pub fn interleaved_permutation(n: usize) -> Vec<usize> {
    let mut perm = vec![0; n];
    let (mut lo, mut hi) = (0, n);
    let mut k = 0;
    while lo < hi {
        perm[lo] = k;
        k += 1;
        lo += 1;
        if lo < hi {
            hi -= 1;
            perm[hi] = k;
            k += 1;
        }
    }
    perm
}

/// Banded LU with row interchanges, in the style of LAPACK `gbtrf`.
/// Row `i` stores columns `i − kl ..= i + kl + ku`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    perm: Option<Vec<usize>>,
}

impl BandedLu {
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn factor(a: &CsrMatrix, kl: usize, ku: usize, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.n_rows();
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            perm,
        };
        let mut anorm: f64 = 0.0;
        for i in 0..n {
            for (j, v) in a.row(i).filter(|&(_, v)| v != 0.0) {
                let (pi, pj) = match &lu.perm {
                    Some(p) => (p[i], p[j]),
                    None => (i, j),
                };
                let idx = lu.at(pi, pj);
                lu.data[idx] += v;
                anorm = anorm.max(v.abs());
            }
        }
        let reach = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.at(k, k)].abs();
            for i in k + 1..=last {
                let v = lu.data[lu.at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > f64::EPSILON * anorm) {
                return Err(Error::Singular { column: k, pivot: best });
            }
            lu.pivots[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (lu.at(k, j), lu.at(p, j));
                    lu.data.swap(a, b);
                }
            }
            let inv = 1.0 / lu.data[lu.at(k, k)];
            for i in k + 1..=last {
                let ik = lu.at(i, k);
                let l = lu.data[ik] * inv;
                lu.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = lu.data[lu.at(k, j)];
                        let ij = lu.at(i, j);
                        lu.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(lu)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = match &self.perm {
            Some(p) => {
                let mut y = vec![0.0; n];
                for (old, &new) in p.iter().enumerate() {
                    y[new] = x[old];
                }
                y
            }
            None => x.to_vec(),
        };
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    y[i] -= self.data[self.at(i, k)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.data[self.at(k, j)] * y[j];
            }
            y[k] = s / self.data[self.at(k, k)];
        }
        match &self.perm {
            Some(p) => {
                for (old, &new) in p.iter().enumerate() {
                    x[old] = y[new];
                }
            }
            None => x.copy_from_slice(&y),
        }
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }
}

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    pub fn factor(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let anorm = a.amax();
        let lu = a.lu();
        let u = lu.u();
        for k in 0..n {
            let pivot = u[(k, k)].abs();
            if !(pivot > f64::EPSILON * anorm) {
                return Err(Error::Singular { column: k, pivot });
            }
        }
        Ok(Self { n, lu })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let mut b = DVector::from_column_slice(x);
        self.lu.solve_mut(&mut b);
        x.copy_from_slice(b.as_slice());
    }
}
