//! Manufactured solutions and the matching source terms of both models.

use std::f64::consts::PI;
use std::sync::Arc;

use super::jet::Jet;
use crate::model::SourceTerms;
use crate::svaerd_kalisch::SkParameterSet;

/// Closed-form `η(t, x)`, `v(t, x)` and `b(x)`, written once for jets.
pub trait ManufacturedSolution: Send + Sync {
    fn eta(&self, t: Jet, x: Jet) -> Jet;
    fn velocity(&self, t: Jet, x: Jet) -> Jet;
    fn bathymetry(&self, x: Jet) -> Jet;

    fn eta_at(&self, t: f64, x: f64) -> f64 {
        self.eta(Jet::constant(t), Jet::constant(x)).value()
    }

    fn velocity_at(&self, t: f64, x: f64) -> f64 {
        self.velocity(Jet::constant(t), Jet::constant(x)).value()
    }

    fn bathymetry_at(&self, x: f64) -> f64 {
        self.bathymetry(Jet::constant(x)).value()
    }
}

fn default_bathymetry(x: Jet) -> Jet {
    -5.0 - 2.0 * (x * (2.0 * PI)).cos()
}

/// `η = eᵗ cos(2π(x − 2t))`, `v = e^{t/2} sin(2π(x − t/2))` on the periodic unit interval.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeriodicManufactured;

impl ManufacturedSolution for PeriodicManufactured {
    fn eta(&self, t: Jet, x: Jet) -> Jet {
        t.exp() * ((x - t * 2.0) * (2.0 * PI)).cos()
    }

    fn velocity(&self, t: Jet, x: Jet) -> Jet {
        (t * 0.5).exp() * ((x - t * 0.5) * (2.0 * PI)).sin()
    }

    fn bathymetry(&self, x: Jet) -> Jet {
        default_bathymetry(x)
    }
}

/// `η = e^{2t} cos(πx)`, `v = eᵗ x sin(πx)` on `[−1, 1]` with walls.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReflectingManufactured;

impl ManufacturedSolution for ReflectingManufactured {
    fn eta(&self, t: Jet, x: Jet) -> Jet {
        (t * 2.0).exp() * (x * PI).cos()
    }

    fn velocity(&self, t: Jet, x: Jet) -> Jet {
        t.exp() * x * (x * PI).sin()
    }

    fn bathymetry(&self, x: Jet) -> Jet {
        default_bathymetry(x)
    }
}

pub type SharedSolution = Arc<dyn ManufacturedSolution>;

/// Residuals of the BBM-BBM equations (`η₀ = 0`, `D = −b`) at the nodes.
pub struct BbmSource {
    solution: SharedSolution,
    nodes: Vec<f64>,
    g: f64,
}

impl BbmSource {
    pub fn new(solution: SharedSolution, nodes: Vec<f64>, g: f64) -> Self {
        Self { solution, nodes, g }
    }

    pub fn residuals(&self, t: f64, x: f64) -> (f64, f64) {
        let (t, x) = (Jet::var_t(t), Jet::var_x(x));
        let s = &self.solution;
        let eta = s.eta(t, x);
        let v = s.velocity(t, x);
        let d = -s.bathymetry(x);
        let k = d * d;
        let r_eta = eta.dt() + ((eta + d) * v).dx() - (k * eta.dx().dt()).dx() / 6.0;
        let r_v = v.dt() + self.g * eta.dx() + v * v.dx() - (k * v.dt()).dx().dx() / 6.0;
        (r_eta.value(), r_v.value())
    }
}

impl SourceTerms for BbmSource {
    fn eval(&self, t: f64, s_a: &mut [f64], s_b: &mut [f64]) {
        for (i, &x) in self.nodes.iter().enumerate() {
            (s_a[i], s_b[i]) = self.residuals(t, x);
        }
    }
}

/// Residuals of the Svärd–Kalisch equations in `(h, hv)` at the nodes.
pub struct SkSource {
    solution: SharedSolution,
    nodes: Vec<f64>,
    g: f64,
    eta0: f64,
    params: SkParameterSet,
}

impl SkSource {
    pub fn new(solution: SharedSolution, nodes: Vec<f64>, g: f64, eta0: f64, params: SkParameterSet) -> Self {
        Self {
            solution,
            nodes,
            g,
            eta0,
            params,
        }
    }

    pub fn residuals(&self, t: f64, x: f64) -> (f64, f64) {
        let (t, x) = (Jet::var_t(t), Jet::var_x(x));
        let s = &self.solution;
        let g = self.g;
        let eta = s.eta(t, x);
        let v = s.velocity(t, x);
        let b = s.bathymetry(x);
        let d = self.eta0 - b;
        let h = eta - b;
        let sqrt_gd = (d * g).sqrt();
        let d2 = d * d;
        let d3 = d2 * d;
        let hv = h * v;
        let mut r_h = h.dt() + hv.dx();
        let mut r_p = hv.dt() + (hv * v).dx() + g * h * eta.dx();
        let p = &self.params;
        if p.alpha_tilde != 0.0 {
            let alpha = (p.alpha_tilde * sqrt_gd * d2).sqrt();
            let y = alpha * (alpha * eta.dx()).dx();
            r_h = r_h - y.dx();
            r_p = r_p - (v * y).dx();
        }
        if p.beta_tilde != 0.0 {
            let beta = p.beta_tilde * d3;
            r_p = r_p - (beta * v.dx()).dx().dt();
        }
        if p.gamma_tilde != 0.0 {
            let gamma = p.gamma_tilde * sqrt_gd * d3;
            r_p = r_p - 0.5 * ((gamma * v.dx()).dx().dx() + (gamma * v.dx().dx()).dx());
        }
        (r_h.value(), r_p.value())
    }
}

impl SourceTerms for SkSource {
    fn eval(&self, t: f64, s_a: &mut [f64], s_b: &mut [f64]) {
        for (i, &x) in self.nodes.iter().enumerate() {
            (s_a[i], s_b[i]) = self.residuals(t, x);
        }
    }
}

/// Exact `(η_t, v_t)` of a manufactured solution.
pub fn exact_time_derivative(sol: &dyn ManufacturedSolution, t: f64, x: f64) -> (f64, f64) {
    let (t, x) = (Jet::var_t(t), Jet::var_x(x));
    (sol.eta(t, x).dt().value(), sol.velocity(t, x).dt().value())
}
