//! Structure-preserving discretizations of dispersive shallow water models.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the stencil formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bbm;
pub mod error;
pub mod grid;
pub mod linear_solve;
pub mod model;
pub mod sbp;
pub mod scenarios;
pub mod sparse;
pub mod svaerd_kalisch;
pub mod time;

pub use bbm::{bbm_phase_speed, bbm_soliton, BbmBbm, BbmVariant};
pub use error::{Error, Result};
pub use grid::{BoundaryKind, Grid, MassMatrix, Representation, State};
pub use model::{Invariants, Model, SourceTerms};
pub use sbp::{DerivativeOperator, SbpOperatorSet, UpwindOperatorPair};
pub use svaerd_kalisch::{
    euler_phase_speed, sk_dispersion_omega, sk_parameter_set, SkParameterSet, SkVariant, SvaerdKalisch,
};
