//! Linearized-evolution oracle for the Svärd–Kalisch dispersion relation.

use dispersive_core::time::{integrate, ButcherTableau, IntegratorConfig, Observer};
use dispersive_core::{
    sk_dispersion_omega, sk_parameter_set, BoundaryKind, Grid, SbpOperatorSet, SkParameterSet, SkVariant, SvaerdKalisch,
};
use num_complex::Complex64;

/// Fourier coefficient of `η − η₀` at wavenumber `k` after every step.
struct ModeRecorder {
    k: f64,
    x: Vec<f64>,
    eta0: f64,
    samples: Vec<Complex64>,
}

impl Observer for ModeRecorder {
    fn on_step(&mut self, _t: f64, u: &[f64], _gamma: f64) {
        let c = self
            .x
            .iter()
            .zip(u)
            .map(|(&x, &e)| (e - self.eta0) * Complex64::from_polar(1.0, -self.k * x))
            .sum();
        self.samples.push(c);
    }
}

/// Two-exponential Prony fit `c_j = a z₁ʲ + b z₂ʲ`; returns `(z₁, z₂)`.
fn prony2(c: &[Complex64]) -> (Complex64, Complex64) {
    // Least squares for c_{j+2} = p c_{j+1} + q c_j.
    let (mut a11, mut a12, mut a22) = (
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    let (mut r1, mut r2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for w in c.windows(3) {
        let (u, v, y) = (w[1], w[0], w[2]);
        a11 += u.conj() * u;
        a12 += u.conj() * v;
        a22 += v.conj() * v;
        r1 += u.conj() * y;
        r2 += v.conj() * y;
    }
    let a21 = a12.conj();
    let det = a11 * a22 - a12 * a21;
    let p = (r1 * a22 - a12 * r2) / det;
    let q = (a11 * r2 - a21 * r1) / det;
    let disc = (p * p + 4.0 * q).sqrt();
    ((p + disc) / 2.0, (p - disc) / 2.0)
}

/// Largest `|ω|` of the two roots of the linear dispersion relation at `k`.
pub fn max_frequency(params: &SkParameterSet, k: f64, h0: f64, g: f64) -> f64 {
    let right = sk_dispersion_omega(k, params, h0, g).unwrap();
    let c0 = (g * h0).sqrt();
    let (alpha, beta, gamma) = (
        params.alpha_tilde * c0 * h0 * h0,
        params.beta_tilde * h0.powi(3),
        params.gamma_tilde * c0 * h0.powi(3),
    );
    // The product of the roots is (αγk⁶ − g h₀² k²) / (h₀ + βk²).
    let left = (alpha * gamma * k.powi(6) - g * h0 * h0 * k * k) / (h0 + beta * k * k) / right;
    right.abs().max(left.abs())
}

/// Measured `(right, left)` frequencies divided by `k`; `left` is negative.
pub fn measured_phase_speed(set: &str, k: f64, h0: f64) -> (f64, f64) {
    let g = 9.81;
    let n = 64;
    let grid = Grid::uniform(0.0, 2.0 * std::f64::consts::PI / k, n, BoundaryKind::Periodic).unwrap();
    let ops = SbpOperatorSet::periodic_central(&grid, 6).unwrap();
    let params = sk_parameter_set(set).unwrap();
    let model = SvaerdKalisch::new(&ops, |_| 0.0, g, h0, params, SkVariant::PeriodicCentralSplit).unwrap();
    let amp = 1e-7;
    let mut u: Vec<f64> = grid.nodes().iter().map(|&x| h0 + amp * (k * x).cos()).collect();
    u.extend(std::iter::repeat_n(0.0, n));

    let period = 2.0 * std::f64::consts::PI / (k * (g * h0).sqrt());
    // RK4 is stable for |ωΔt| ≤ 2√2 on the imaginary axis; the grid carries
    // harmonics up to 32k, which are much faster for the third-order terms.
    let fastest = (1..=n / 2)
        .map(|j| max_frequency(&params, j as f64 * k, h0, g))
        .fold(0.0, f64::max);
    let dt = (period / 400.0).min(1.0 / fastest);
    let mut rec = ModeRecorder {
        k,
        x: grid.nodes().to_vec(),
        eta0: h0,
        samples: Vec::new(),
    };
    // Sixty samples spanning 0.15 periods keep the Prony fit well conditioned.
    let stride = ((0.15 * period / 60.0) / dt).ceil().max(1.0) as usize;
    let cfg = IntegratorConfig::fixed(ButcherTableau::rk4(), dt);
    integrate(&model, &u, (0.0, (60 * stride) as f64 * dt), &cfg, None, &mut rec).unwrap();
    let samples: Vec<Complex64> = rec.samples.iter().step_by(stride).copied().collect();
    let dt = stride as f64 * dt;
    let (z1, z2) = prony2(&samples);
    assert!(
        (z1.norm() - 1.0).abs() < 1e-6 && (z2.norm() - 1.0).abs() < 1e-6,
        "{set} k={k}: {z1} {z2}"
    );
    // e^{i(kx − ωt)} contributes z = e^{−iωΔt}; the equations are not
    // reflection symmetric, so the two roots differ in magnitude.
    let (mut w1, mut w2) = (-z1.arg() / dt, -z2.arg() / dt);
    if w1 < w2 {
        std::mem::swap(&mut w1, &mut w2);
    }
    (w1 / k, w2 / k)
}
