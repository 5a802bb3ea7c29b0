//! Compressed sparse row matrices used to assemble the elliptic operators.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate columns are summed.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n_cols, "column {c} out of range");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_rows(d.len(), d.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let rows = (0..a.nrows())
            .map(|i| {
                (0..a.ncols())
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (j, a[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(a.ncols(), rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec(x, &mut y);
        y
    }

    /// `self * other`
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let rows = (0..self.n_rows)
            .map(|i| {
                let mut row = Vec::new();
                for (k, a) in self.row(i) {
                    row.extend(other.row(k).map(|(j, b)| (j, a * b)));
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(other.n_cols, rows)
    }

    /// `diag(d) * self`
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n_rows);
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for v in &mut out.vals[self.row_ptr[i]..self.row_ptr[i + 1]] {
                *v *= d[i];
            }
        }
        out
    }

    /// `self * diag(d)`
    pub fn scale_cols(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n_cols);
        let mut out = self.clone();
        for (v, &c) in out.vals.iter_mut().zip(&self.cols) {
            *v *= d[c];
        }
        out
    }

    pub fn scale(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        let rows = (0..self.n_rows)
            .map(|i| self.row(i).chain(other.row(i).map(|(c, v)| (c, s * v))).collect())
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    /// `self + diag(d)`; cheap when every diagonal entry is already stored.
    pub fn plus_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n_rows);
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            match self.cols[range.clone()].binary_search(&i) {
                Ok(k) => out.vals[range.start + k] += di,
                Err(_) => return self.add_scaled(1.0, &CsrMatrix::diagonal(d)),
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                rows[c].push((i, v));
            }
        }
        CsrMatrix::from_rows(self.n_rows, rows)
    }

    /// Replaces the listed rows by rows of the identity matrix.
    pub fn with_identity_rows(&self, which: &[usize]) -> CsrMatrix {
        let rows = (0..self.n_rows)
            .map(|i| {
                if which.contains(&i) {
                    vec![(i, 1.0)]
                } else {
                    self.row(i).collect()
                }
            })
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                a[(i, c)] += v;
            }
        }
        a
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lower and upper bandwidth after relabelling indices through `perm`
    /// (`perm[old] = new`); `None` means the identity ordering.
    pub fn bandwidth(&self, perm: Option<&[usize]>) -> (usize, usize) {
        let p = |i: usize| perm.map_or(i, |p| p[i]);
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                if v == 0.0 {
                    continue;
                }
                let (r, c) = (p(i), p(c));
                if r > c {
                    lower = lower.max(r - c);
                } else {
                    upper = upper.max(c - r);
                }
            }
        }
        (lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let a = CsrMatrix::from_rows(
            3,
            vec![vec![(0, 1.0), (2, 2.0)], vec![(1, 3.0)], vec![(0, -1.0), (2, 1.0)]],
        );
        let b = CsrMatrix::from_rows(3, vec![vec![(1, 1.0)], vec![(0, 2.0), (2, 1.0)], vec![(2, 4.0)]]);
        let dense = a.to_dense() * b.to_dense();
        assert_eq!(a.matmul(&b).to_dense(), dense);
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        let d = [1.0, 2.0, 3.0];
        assert_eq!(
            a.scale_rows(&d).to_dense(),
            DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d)) * a.to_dense()
        );
        assert_eq!(a.add_scaled(-1.0, &a).to_dense(), DMatrix::zeros(3, 3));
        let with_diag = a.plus_diagonal(&d);
        assert_eq!(
            with_diag.to_dense(),
            a.to_dense() + DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d))
        );
    }

    #[test]
    fn bandwidth_with_and_without_permutation() {
        let a = CsrMatrix::from_rows(
            4,
            vec![
                vec![(0, 1.0), (3, 1.0)],
                vec![(1, 1.0)],
                vec![(2, 1.0)],
                vec![(0, 1.0), (3, 1.0)],
            ],
        );
        assert_eq!(a.bandwidth(None), (3, 3));
        // interleave 0,3,1,2
        assert_eq!(a.bandwidth(Some(&[0, 2, 3, 1])), (1, 1));
    }
}
