use nalgebra::{DMatrix, SymmetricEigen};

use super::{DerivativeOperator, UpwindOperatorPair};

const THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// `M D + Dᵀ M = 0`
    PeriodicFirstDerivative,
    /// `M D + Dᵀ M = e_R e_Rᵀ − e_L e_Lᵀ`
    BoundedFirstDerivative,
    /// `M D = Dᵀ M`
    SecondDerivative,
    /// `M D₊ + D₋ᵀ M = 0` (periodic) or `e_R e_Rᵀ − e_L e_Lᵀ` (bounded)
    UpwindPair,
}

/// Residual of one defining identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpReport {
    pub identity: IdentityKind,
    /// Max entrywise residual.
    pub residual: f64,
    /// `‖M‖·‖D‖` (max norms).
    pub scale: f64,
    /// Largest eigenvalue of `½M(D₊ − D₋)`; only for upwind pairs.
    pub max_dissipation_eigenvalue: Option<f64>,
    pub pass: bool,
}

impl SbpReport {
    pub fn threshold(&self) -> f64 {
        THRESHOLD * self.scale
    }
}

fn boundary_matrix(n: usize, periodic: bool) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    if !periodic {
        b[(0, 0)] = -1.0;
        b[(n - 1, n - 1)] = 1.0;
    }
    b
}

fn scale(m: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    m.amax() * d.amax()
}

/// Checks the identity matching the operator's kind.
pub fn verify_sbp_identity(op: &DerivativeOperator) -> SbpReport {
    verify_dense(op, &op.to_csr().to_dense())
}

pub(crate) fn verify_dense(op: &DerivativeOperator, d: &DMatrix<f64>) -> SbpReport {
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(op.mass().diagonal()));
    let md = &m * d;
    let (identity, residual) = if op.kind().derivative() == 2 {
        (IdentityKind::SecondDerivative, (&md - md.transpose()).amax())
    } else {
        let periodic = op.kind().is_periodic();
        let kind = if periodic {
            IdentityKind::PeriodicFirstDerivative
        } else {
            IdentityKind::BoundedFirstDerivative
        };
        let b = boundary_matrix(d.nrows(), periodic);
        (kind, (&md + md.transpose() - b).amax())
    };
    let scale = scale(&m, d);
    SbpReport {
        identity,
        residual,
        scale,
        max_dissipation_eigenvalue: None,
        pass: residual <= THRESHOLD * scale,
    }
}

/// Checks `M D₊ + D₋ᵀ M = B` and negative semidefiniteness of `½M(D₊ − D₋)`.
pub fn verify_upwind_pair(pair: &UpwindOperatorPair) -> SbpReport {
    let dp = pair.plus.to_csr().to_dense();
    let dm = pair.minus.to_csr().to_dense();
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(pair.mass().diagonal()));
    let b = boundary_matrix(dp.nrows(), pair.plus.kind().is_periodic());
    let residual = (&m * &dp + dm.transpose() * &m - b).amax();
    let s = (&m * (&dp - &dm)) * 0.5;
    let s_sym = (&s + s.transpose()) * 0.5;
    let asym = (&s - s.transpose()).amax();
    let lambda_max = SymmetricEigen::new(s_sym).eigenvalues.max();
    let scale = scale(&m, &dp).max(scale(&m, &dm));
    SbpReport {
        identity: IdentityKind::UpwindPair,
        residual: residual.max(asym),
        scale,
        max_dissipation_eigenvalue: Some(lambda_max),
        pass: residual.max(asym) <= THRESHOLD * scale && lambda_max <= THRESHOLD * scale,
    }
}
