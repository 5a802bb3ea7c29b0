//! Interface shared by the model discretizations.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{Grid, MassMatrix};
use crate::time::{Functional, OdeRhs};

/// Nodal source terms added to the right-hand side, e.g. from a manufactured solution.
pub trait SourceTerms: Send + Sync {
    /// Writes the sources of the two equations at time `t` into `s_a`, `s_b`.
    fn eval(&self, t: f64, s_a: &mut [f64], s_b: &mut [f64]);
}

pub type SharedSource = Arc<dyn SourceTerms>;

/// Integral invariants of a state. `secondary_linear` is the velocity integral
/// for BBM-BBM and the total discharge for Svärd–Kalisch; `energy` is the
/// physical energy (the entropy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub mass: f64,
    pub secondary_linear: f64,
    pub energy: f64,
    pub modified_entropy: Option<f64>,
}

/// A semidiscretization acting on the flat state `[η; v]`.
pub trait Model: OdeRhs + Send + Sync {
    fn grid(&self) -> &Grid;
    fn mass_matrix(&self) -> &MassMatrix;
    fn bathymetry(&self) -> &[f64];
    fn invariants(&self, u: &[f64]) -> Result<Invariants>;
    /// The functional the scheme conserves or dissipates (energy or modified entropy).
    fn conserved_functional(&self) -> &dyn Functional;
    /// Whether the conserved functional is only dissipated by the semidiscretization.
    fn is_dissipative(&self) -> bool {
        false
    }
}

pub(crate) fn check_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite("state"))
    }
}

/// `⟨∇J(u), f(u)⟩`, the semidiscrete rate of change of `J`.
pub fn functional_rate(j: &dyn Functional, rhs: &dyn OdeRhs, t: f64, u: &[f64]) -> Result<f64> {
    let mut du = vec![0.0; u.len()];
    rhs.eval(t, u, &mut du)?;
    let mut g = vec![0.0; u.len()];
    j.gradient(u, &mut g);
    Ok(g.iter().zip(&du).map(|(a, b)| a * b).sum())
}
