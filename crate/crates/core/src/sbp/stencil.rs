//! Contiguous finite-difference stencils.

/// Coefficients `coeffs[k]` acting on offset `start + k`, already divided by `dx^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub start: isize,
    pub coeffs: Vec<f64>,
}

impl Stencil {
    pub fn new(start: isize, coeffs: Vec<f64>) -> Self {
        Self { start, coeffs }
    }

    /// Antisymmetric central stencil from its right half `[c_1, c_2, ...]`.
    pub fn antisymmetric(right: &[f64]) -> Self {
        let w = right.len();
        let mut coeffs = vec![0.0; 2 * w + 1];
        for (k, &c) in right.iter().enumerate() {
            coeffs[w + 1 + k] = c;
            coeffs[w - 1 - k] = -c;
        }
        Self::new(-(w as isize), coeffs)
    }

    /// Symmetric central stencil from `[c_0, c_1, ...]`.
    pub fn symmetric(half: &[f64]) -> Self {
        let w = half.len() - 1;
        let mut coeffs = vec![0.0; 2 * w + 1];
        coeffs[w] = half[0];
        for (k, &c) in half.iter().enumerate().skip(1) {
            coeffs[w + k] = c;
            coeffs[w - k] = c;
        }
        Self::new(-(w as isize), coeffs)
    }

    pub fn end(&self) -> isize {
        self.start + self.coeffs.len() as isize - 1
    }

    /// Largest absolute offset.
    pub fn reach(&self) -> usize {
        self.start.unsigned_abs().max(self.end().unsigned_abs())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.start, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.start + k as isize, c))
    }

    pub fn coeff(&self, offset: isize) -> f64 {
        let k = offset - self.start;
        if k < 0 || k as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[k as usize]
        }
    }

    /// Stencil of the product `self ∘ other` of two circulant operators.
    pub fn compose(&self, other: &Stencil) -> Stencil {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Stencil::new(self.start + other.start, coeffs)
    }

    /// `c'_j = s · c_{-j}`: the stencil of `s · Dᵀ` for a circulant `D`.
    pub fn reflected(&self, s: f64) -> Stencil {
        let coeffs = self.coeffs.iter().rev().map(|c| s * c).collect();
        Stencil::new(-self.end(), coeffs)
    }

    /// Fourier symbol `Σ c_j e^{i j θ}` as `(re, im)`, for a stencil scaled to `dx = 1`.
    pub fn symbol(&self, theta: f64) -> (f64, f64) {
        self.iter().fold((0.0, 0.0), |(re, im), (j, c)| {
            let a = j as f64 * theta;
            (re + c * a.cos(), im + c * a.sin())
        })
    }
}

/// Finite-difference weights for the `deriv`-th derivative at `0` on the
/// (integer) offsets `nodes`, via Fornberg's recursion.
pub fn fd_weights(nodes: &[f64], deriv: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_classical_weights() {
        let w = fd_weights(&[-1.0, 0.0, 1.0], 1);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = fd_weights(&[-2.0, -1.0, 0.0], 1);
        for (a, b) in w.iter().zip([0.5, -2.0, 1.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn composition_and_reflection() {
        let fwd = Stencil::new(0, vec![-1.0, 1.0]);
        let bwd = fwd.reflected(-1.0);
        assert_eq!(bwd, Stencil::new(-1, vec![-1.0, 1.0]));
        assert_eq!(fwd.compose(&bwd), Stencil::new(-1, vec![1.0, -2.0, 1.0]));
    }
}
