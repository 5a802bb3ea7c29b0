//! Truncated bivariate Taylor polynomials in `(x, t)` for evaluating exact
//! derivatives of closed-form fields.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest x-derivative that stays exact (exclusive bound on the x degree).
const NX: usize = 4;
const NT: usize = 2;
const MAX_DEGREE: usize = NX + NT - 2;

/// `Σ c[i][j] δxⁱ δtʲ` with `i < 4`, `j < 2`. Each `dx` or `dt` consumes
/// one degree, so up to three x- and one t-derivative are exact at the
/// expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [[f64; NT]; NX],
}

impl Jet {
    pub fn constant(a: f64) -> Self {
        let mut c = [[0.0; NT]; NX];
        c[0][0] = a;
        Self { c }
    }

    /// The coordinate `x` expanded about `x0`.
    pub fn var_x(x0: f64) -> Self {
        let mut j = Self::constant(x0);
        j.c[1][0] = 1.0;
        j
    }

    /// The coordinate `t` expanded about `t0`.
    pub fn var_t(t0: f64) -> Self {
        let mut j = Self::constant(t0);
        j.c[0][1] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    pub fn dx(&self) -> Self {
        let mut c = [[0.0; NT]; NX];
        for i in 0..NX - 1 {
            for j in 0..NT {
                c[i][j] = (i + 1) as f64 * self.c[i + 1][j];
            }
        }
        Self { c }
    }

    pub fn dt(&self) -> Self {
        let mut c = [[0.0; NT]; NX];
        for (row, src) in c.iter_mut().zip(&self.c) {
            for j in 0..NT - 1 {
                row[j] = (j + 1) as f64 * src[j + 1];
            }
        }
        Self { c }
    }

    /// `f(self)` from the derivatives `f⁽ᵏ⁾(a)` at the constant part `a`.
    fn compose(self, derivs: [f64; MAX_DEGREE + 1]) -> Self {
        let mut e = self;
        e.c[0][0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        let mut power = Self::constant(1.0);
        let mut factorial = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1) {
            power = power * e;
            factorial *= k as f64;
            out = out + power * (d / factorial);
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.value().exp();
        self.compose([e; MAX_DEGREE + 1])
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    /// `self^r` for a positive constant part.
    pub fn powf(self, r: f64) -> Self {
        let a = self.value();
        let mut d = [0.0; MAX_DEGREE + 1];
        let mut coeff = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coeff * a.powf(r - k as f64);
            coeff *= r - k as f64;
        }
        self.compose(d)
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().flatten().zip(o.c.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [[0.0; NT]; NX];
        for i1 in 0..NX {
            for j1 in 0..NT {
                let a = self.c[i1][j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..NX - i1 {
                    for j2 in 0..NT - j1 {
                        c[i1 + i2][j1 + j2] += a * o.c[i2][j2];
                    }
                }
            }
        }
        Jet { c }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, s: f64) -> Jet {
        self.c.iter_mut().flatten().for_each(|a| *a *= s);
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, s: f64) -> Jet {
        self * (1.0 / s)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, s: f64) -> Jet {
        self.c[0][0] += s;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, s: f64) -> Jet {
        self + (-s)
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn derivatives_of_elementary_functions() {
        let (x0, t0) = (0.3, 0.7);
        let x = Jet::var_x(x0);
        let t = Jet::var_t(t0);
        // f = e^t sin(2x) (x + 1)^{3/2}
        let f = t.exp() * (x * 2.0).sin() * (x + 1.0).powf(1.5);
        let g = |x: f64| (2.0 * x).sin() * (x + 1.0).powf(1.5);
        let g1 = |x: f64| 2.0 * (2.0 * x).cos() * (x + 1.0).powf(1.5) + 1.5 * (2.0 * x).sin() * (x + 1.0).sqrt();
        let e = t0.exp();
        assert!(close(f.value(), e * g(x0)));
        assert!(close(f.dt().value(), e * g(x0)));
        assert!(close(f.dx().value(), e * g1(x0)));
        assert!(close(f.dx().dt().value(), e * g1(x0)));
        // Third derivative against a central difference of the analytic first derivative.
        let fd = |h: f64| (g1(x0 + h) - 2.0 * g1(x0) + g1(x0 - h)) / (h * h);
        let g3 = (4.0 * fd(5e-4) - fd(1e-3)) / 3.0;
        let d3 = f.dx().dx().dx().value();
        assert!((d3 - e * g3).abs() < 1e-7, "{d3} {}", e * g3);
    }

    #[test]
    fn polynomials_are_exact() {
        let x = Jet::var_x(2.0);
        let p = x * x * x - 4.0 * x;
        assert_eq!(p.value(), 0.0);
        assert_eq!(p.dx().value(), 8.0);
        assert_eq!(p.dx().dx().value(), 12.0);
        assert_eq!(p.dx().dx().dx().value(), 6.0);
        let s = Jet::var_x(4.0).sqrt();
        assert!(close(s.dx().value(), 0.25));
        assert!(close(s.dx().dx().dx().value(), 3.0 / 8.0 * 4f64.powf(-2.5)));
        assert_eq!((1.0 - x).value(), -1.0);
    }
}
