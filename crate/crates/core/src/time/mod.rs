//! Explicit Runge–Kutta integration with optional relaxation.

mod controller;
mod integrate;
mod relaxation;
mod tableau;

pub use controller::{error_norm, PiController, StepDecision};
pub use integrate::{integrate, rk_step, IntegratorConfig, Observer, Solution, Stats, StepOutput, Stepping};
pub use relaxation::{relaxation_gamma, RelaxationConfig, RelaxationMode, RelaxationOutcome};
pub use tableau::ButcherTableau;

use crate::error::Result;

/// Right-hand side of `u' = f(t, u)`.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, u: &[f64], du: &mut [f64]) -> Result<()>;
}

/// A scalar functional `J(u)` with its gradient.
pub trait Functional {
    fn value(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64], grad: &mut [f64]);
}

impl<T: OdeRhs + ?Sized> OdeRhs for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, t: f64, u: &[f64], du: &mut [f64]) -> Result<()> {
        (**self).eval(t, u, du)
    }
}
