//! Summation-by-parts derivative operators on uniform grids.
//!
//! Periodic operators are circulant and stored as a single stencil. Bounded
//! operators store an interior stencil plus dense closures at both ends.
//! All mass matrices are diagonal.

mod bounded;
mod periodic;
mod stencil;
mod verify;

pub use bounded::{build_bounded_central_d1, build_bounded_upwind};
pub use periodic::{build_periodic_central_d1, build_periodic_d2, build_periodic_upwind, D2Flavor};
pub use stencil::{fd_weights, Stencil};
pub use verify::{verify_sbp_identity, verify_upwind_pair, IdentityKind, SbpReport};

use crate::error::{check_len, Result};
use crate::grid::{Grid, MassMatrix};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    PeriodicCentralD1,
    PeriodicD2Narrow,
    PeriodicD2Wide,
    PeriodicD2UpwindComposite,
    PeriodicUpwindPlus,
    PeriodicUpwindMinus,
    BoundedCentralD1,
    BoundedUpwindPlus,
    BoundedUpwindMinus,
}

impl OperatorKind {
    pub fn derivative(self) -> usize {
        match self {
            Self::PeriodicD2Narrow | Self::PeriodicD2Wide | Self::PeriodicD2UpwindComposite => 2,
            _ => 1,
        }
    }

    pub fn is_periodic(self) -> bool {
        !matches!(
            self,
            Self::BoundedCentralD1 | Self::BoundedUpwindPlus | Self::BoundedUpwindMinus
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layout {
    Circulant(Stencil),
    /// `left[i][j] = D[i][j]`, `right[i][j] = D[N-1-i][N-1-j]`; rows outside
    /// the closures use `interior`.
    Bounded {
        interior: Stencil,
        left: Vec<Vec<f64>>,
        right: Vec<Vec<f64>>,
    },
}

/// A derivative matrix together with the mass matrix it is SBP with respect to.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeOperator {
    kind: OperatorKind,
    order: usize,
    layout: Layout,
    mass: MassMatrix,
    grid: Grid,
}

impl DerivativeOperator {
    pub(crate) fn new(kind: OperatorKind, order: usize, layout: Layout, mass: MassMatrix, grid: Grid) -> Self {
        Self {
            kind,
            order,
            layout,
            mass,
            grid,
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn accuracy_order(&self) -> usize {
        self.order
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Interior stencil (scaled by `1/dx^d`).
    pub fn interior_stencil(&self) -> &Stencil {
        match &self.layout {
            Layout::Circulant(s) => s,
            Layout::Bounded { interior, .. } => interior,
        }
    }

    /// `out = D u`, evaluated as `Σ_j d_ij (u_j − u_i)` so that constants are
    /// annihilated without rounding.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(u.len(), n);
        assert_eq!(out.len(), n);
        match &self.layout {
            Layout::Circulant(s) => {
                let r = s.reach();
                let wrap = |i: isize| -> usize { i.rem_euclid(n as isize) as usize };
                let lo = r.min(n);
                let hi = n.saturating_sub(r).max(lo);
                for i in (0..lo).chain(hi..n) {
                    let ui = u[i];
                    out[i] = s.iter().map(|(j, c)| c * (u[wrap(i as isize + j)] - ui)).sum();
                }
                for i in lo..hi {
                    let ui = u[i];
                    let base = (i as isize + s.start) as usize;
                    out[i] = s
                        .coeffs
                        .iter()
                        .zip(&u[base..base + s.coeffs.len()])
                        .map(|(c, uj)| c * (uj - ui))
                        .sum();
                }
            }
            Layout::Bounded { interior, left, right } => {
                let nl = left.len();
                let nr = right.len();
                for (i, row) in left.iter().enumerate() {
                    let ui = u[i];
                    out[i] = row.iter().zip(u).map(|(c, uj)| c * (uj - ui)).sum();
                }
                for (k, row) in right.iter().enumerate() {
                    let i = n - 1 - k;
                    let ui = u[i];
                    out[i] = row.iter().enumerate().map(|(m, c)| c * (u[n - 1 - m] - ui)).sum();
                }
                for i in nl..n - nr {
                    let ui = u[i];
                    let base = (i as isize + interior.start) as usize;
                    out[i] = interior
                        .coeffs
                        .iter()
                        .zip(&u[base..base + interior.coeffs.len()])
                        .map(|(c, uj)| c * (uj - ui))
                        .sum();
                }
            }
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        Ok(out)
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.len();
        let rows = match &self.layout {
            Layout::Circulant(s) => (0..n)
                .map(|i| {
                    s.iter()
                        .map(|(j, c)| ((i as isize + j).rem_euclid(n as isize) as usize, c))
                        .collect()
                })
                .collect(),
            Layout::Bounded { interior, left, right } => (0..n)
                .map(|i| {
                    if i < left.len() {
                        left[i].iter().enumerate().map(|(j, &c)| (j, c)).collect()
                    } else if n - 1 - i < right.len() {
                        right[n - 1 - i]
                            .iter()
                            .enumerate()
                            .map(|(m, &c)| (n - 1 - m, c))
                            .collect()
                    } else {
                        interior.iter().map(|(j, c)| ((i as isize + j) as usize, c)).collect()
                    }
                })
                .collect(),
        };
        CsrMatrix::from_rows(n, rows)
    }

    /// Circulant product `self ∘ other` (both periodic on the same grid).
    pub(crate) fn compose_circulant(
        &self,
        other: &DerivativeOperator,
        kind: OperatorKind,
    ) -> Option<DerivativeOperator> {
        match (&self.layout, &other.layout) {
            (Layout::Circulant(a), Layout::Circulant(b)) => Some(DerivativeOperator::new(
                kind,
                self.order.min(other.order),
                Layout::Circulant(a.compose(b)),
                self.mass.clone(),
                self.grid.clone(),
            )),
            _ => None,
        }
    }
}

/// Pair `(D₊, D₋)` with `M D₊ + D₋ᵀ M = e_R e_Rᵀ − e_L e_Lᵀ` (zero when periodic)
/// and `½ M (D₊ − D₋)` negative semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindOperatorPair {
    pub plus: DerivativeOperator,
    pub minus: DerivativeOperator,
    pub central: DerivativeOperator,
}

impl UpwindOperatorPair {
    pub fn mass(&self) -> &MassMatrix {
        self.plus.mass()
    }

    pub fn accuracy_order(&self) -> usize {
        self.plus.accuracy_order()
    }

    pub fn grid(&self) -> &Grid {
        self.plus.grid()
    }

    /// The same pair with the roles of `D₊` and `D₋` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            plus: self.minus.clone(),
            minus: self.plus.clone(),
            central: self.central.clone(),
        }
    }
}

/// The operators a model discretization draws from, built for one grid and order.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpOperatorSet {
    /// Central first-derivative operator (the pair average for upwind sets).
    pub d1: DerivativeOperator,
    /// Narrow second-derivative operator, where one exists.
    pub d2: Option<DerivativeOperator>,
    pub upwind: Option<UpwindOperatorPair>,
}

impl SbpOperatorSet {
    pub fn periodic_central(grid: &Grid, p: usize) -> Result<Self> {
        Ok(Self {
            d1: build_periodic_central_d1(grid, p)?,
            d2: Some(build_periodic_d2(grid, p, D2Flavor::Narrow)?),
            upwind: None,
        })
    }

    pub fn periodic_upwind(grid: &Grid, p: usize) -> Result<Self> {
        let pair = build_periodic_upwind(grid, p)?;
        let d2 = pair
            .plus
            .compose_circulant(&pair.minus, OperatorKind::PeriodicD2UpwindComposite);
        Ok(Self {
            d1: pair.central.clone(),
            d2: d2.filter(|d| d.interior_stencil().coeffs.len() <= grid.len()),
            upwind: Some(pair),
        })
    }

    pub fn bounded_central(grid: &Grid, p: usize) -> Result<Self> {
        Ok(Self {
            d1: build_bounded_central_d1(grid, p)?,
            d2: None,
            upwind: None,
        })
    }

    pub fn bounded_upwind(grid: &Grid, p: usize) -> Result<Self> {
        let pair = build_bounded_upwind(grid, p)?;
        Ok(Self {
            d1: pair.central.clone(),
            d2: None,
            upwind: Some(pair),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.d1.grid()
    }

    pub fn mass(&self) -> &MassMatrix {
        self.d1.mass()
    }

    pub fn accuracy_order(&self) -> usize {
        self.upwind
            .as_ref()
            .map_or(self.d1.accuracy_order(), |p| p.accuracy_order())
    }
}
