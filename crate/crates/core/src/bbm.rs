//! BBM-BBM equations with variable bathymetry,
//!
//! ```text
//! η_t + ((η + D) v)_x − ⅙ (D² η_xt)_x = 0,
//! v_t + g η_x + v v_x − ⅙ (D² v_t)_xx = 0,
//! ```
//!
//! with still-water level `η₀ = 0` and depth `D = −b`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{Grid, MassMatrix};
use crate::linear_solve::{factor, Factorization};
use crate::model::{check_finite, Invariants, Model, SharedSource};
use crate::sbp::{DerivativeOperator, SbpOperatorSet};
use crate::sparse::CsrMatrix;
use crate::time::{Functional, OdeRhs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbmVariant {
    /// `D₂ = D₁²` in both elliptic operators; energy conservative.
    CentralWide,
    /// Narrow `D₂` in the velocity equation; not energy conservative.
    CentralNarrow,
    /// Narrow `D₂` in both equations; requires constant depth.
    ConstantNarrow,
    Upwind,
    ReflectingCentral,
    ReflectingUpwind,
}

impl BbmVariant {
    pub fn is_reflecting(self) -> bool {
        matches!(self, Self::ReflectingCentral | Self::ReflectingUpwind)
    }

    pub fn conserves_energy(self) -> bool {
        !matches!(self, Self::CentralNarrow)
    }
}

/// Total energy `1ᵀM(½gη² + ½(η + D)v²)`.
#[derive(Debug, Clone)]
pub struct BbmEnergy {
    g: f64,
    depth: Vec<f64>,
    mass: MassMatrix,
}

impl Functional for BbmEnergy {
    fn value(&self, u: &[f64]) -> f64 {
        let n = self.depth.len();
        let (eta, v) = u.split_at(n);
        let m = self.mass.diagonal();
        (0..n)
            .map(|i| m[i] * (0.5 * self.g * eta[i] * eta[i] + 0.5 * (eta[i] + self.depth[i]) * v[i] * v[i]))
            .sum()
    }

    fn gradient(&self, u: &[f64], grad: &mut [f64]) {
        let n = self.depth.len();
        let (eta, v) = u.split_at(n);
        let m = self.mass.diagonal();
        for i in 0..n {
            grad[i] = m[i] * (self.g * eta[i] + 0.5 * v[i] * v[i]);
            grad[n + i] = m[i] * (eta[i] + self.depth[i]) * v[i];
        }
    }
}

pub struct BbmBbm {
    grid: Grid,
    g: f64,
    variant: BbmVariant,
    bathymetry: Vec<f64>,
    depth: Vec<f64>,
    /// Outer derivative of the mass and velocity equation.
    outer_eta: DerivativeOperator,
    outer_v: DerivativeOperator,
    elliptic_eta: Factorization,
    elliptic_v: Factorization,
    /// Quadrature weights when `1ᵀM A = 1ᵀM` holds for the respective system.
    constraint_eta: Option<Vec<f64>>,
    constraint_v: Option<Vec<f64>>,
    energy: BbmEnergy,
    source: Option<SharedSource>,
}

/// Returns the weights `m` if `1ᵀM A = 1ᵀM`. The exact solution of `Ax = b`
/// then satisfies `1ᵀMx = 1ᵀMb`, which is what makes mass (and, for periodic
/// grids, the velocity integral) a linear invariant.
fn mass_constraint(a: &CsrMatrix, m: &[f64]) -> Option<Vec<f64>> {
    let weighted = a.transpose().apply(m);
    let scale = a.max_abs() * m.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let defect = weighted.iter().zip(m).fold(0.0f64, |s, (w, mi)| s.max((w - mi).abs()));
    (defect <= 1e-12 * scale).then(|| m.to_vec())
}

/// LU solve that restores `1ᵀMx = 1ᵀMb` afterwards. A backward-stable solve
/// only meets it up to `ε‖A‖‖x‖`, which would show up as a slow mass drift;
/// the correction is a constant of that size.
fn solve_constrained(lu: &Factorization, weights: Option<&[f64]>, x: &mut [f64]) -> Result<()> {
    let Some(m) = weights else {
        return lu.solve_in_place(x);
    };
    let target: f64 = m.iter().zip(x.iter()).map(|(w, b)| w * b).sum();
    lu.solve_in_place(x)?;
    let actual: f64 = m.iter().zip(x.iter()).map(|(w, b)| w * b).sum();
    let shift = (target - actual) / m.iter().sum::<f64>();
    x.iter_mut().for_each(|xi| *xi += shift);
    Ok(())
}

impl std::fmt::Debug for BbmBbm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BbmBbm")
            .field("variant", &self.variant)
            .field("n", &self.grid.len())
            .field("g", &self.g)
            .finish()
    }
}

fn missing(what: &str, variant: BbmVariant) -> Error {
    Error::Config(format!("variant {variant:?} needs {what}"))
}

impl BbmBbm {
    /// Builds the discretization and factors both elliptic operators.
    /// `swap_upwind` exchanges the roles of `D₊` and `D₋` in the upwind variants.
    pub fn new(
        ops: &SbpOperatorSet,
        bathymetry: impl Fn(f64) -> f64,
        g: f64,
        variant: BbmVariant,
        swap_upwind: bool,
    ) -> Result<Self> {
        let grid = ops.grid().clone();
        let b = grid.sample(bathymetry);
        Self::from_bathymetry(ops, b, g, variant, swap_upwind)
    }

    pub fn from_bathymetry(
        ops: &SbpOperatorSet,
        bathymetry: Vec<f64>,
        g: f64,
        variant: BbmVariant,
        swap_upwind: bool,
    ) -> Result<Self> {
        let grid = ops.grid().clone();
        let n = grid.len();
        check_len(n, bathymetry.len())?;
        if !(g > 0.0) {
            return Err(Error::Config(format!("gravity must be positive, got {g}")));
        }
        if variant.is_reflecting() == grid.is_periodic() {
            return Err(Error::Config(format!(
                "variant {variant:?} does not match a {:?} grid",
                grid.boundary()
            )));
        }
        let depth: Vec<f64> = bathymetry.iter().map(|b| -b).collect();
        if let Some(i) = depth.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Domain(format!(
                "still-water depth must be positive, D = {} at x = {}",
                depth[i],
                grid.nodes()[i]
            )));
        }
        let k: Vec<f64> = depth.iter().map(|d| d * d).collect();
        let id = CsrMatrix::identity(n);
        let sixth = -1.0 / 6.0;
        let mut p_d_k = k.clone();
        p_d_k[0] = 0.0;
        p_d_k[n - 1] = 0.0;
        let boundary = [0, n - 1];

        let pair = match variant {
            BbmVariant::Upwind | BbmVariant::ReflectingUpwind => {
                let p = ops
                    .upwind
                    .as_ref()
                    .ok_or_else(|| missing("upwind operators", variant))?;
                Some(if swap_upwind { p.swapped() } else { p.clone() })
            }
            _ => None,
        };
        let d1 = &ops.d1;
        let d1m = d1.to_csr();
        let (outer_eta, outer_v, e_eta, e_v) = match variant {
            BbmVariant::CentralWide => {
                let e_eta = d1m.matmul(&d1m.scale_rows(&k));
                let e_v = d1m.matmul(&d1m).scale_cols(&k);
                (d1.clone(), d1.clone(), e_eta, e_v)
            }
            BbmVariant::CentralNarrow => {
                let d2 = ops
                    .d2
                    .as_ref()
                    .ok_or_else(|| missing("a narrow second-derivative operator", variant))?;
                let e_eta = d1m.matmul(&d1m.scale_rows(&k));
                let e_v = d2.to_csr().scale_cols(&k);
                (d1.clone(), d1.clone(), e_eta, e_v)
            }
            BbmVariant::ConstantNarrow => {
                let d2 = ops
                    .d2
                    .as_ref()
                    .ok_or_else(|| missing("a narrow second-derivative operator", variant))?;
                let (lo, hi) = depth
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(l, h), &d| (l.min(d), h.max(d)));
                if hi - lo > 1e-14 * hi {
                    return Err(Error::Config(format!(
                        "variant {variant:?} requires constant depth, got D in [{lo}, {hi}]"
                    )));
                }
                let e = d2.to_csr().scale(hi * hi);
                (d1.clone(), d1.clone(), e.clone(), e)
            }
            BbmVariant::Upwind => {
                let p = pair.as_ref().unwrap();
                let (dp, dm) = (p.plus.to_csr(), p.minus.to_csr());
                let e_eta = dm.matmul(&dp.scale_rows(&k));
                let e_v = dp.matmul(&dm).scale_cols(&k);
                (p.minus.clone(), p.plus.clone(), e_eta, e_v)
            }
            BbmVariant::ReflectingCentral => {
                let e_eta = d1m.matmul(&d1m.scale_rows(&p_d_k));
                let e_v = d1m.matmul(&d1m).scale_cols(&k);
                (d1.clone(), d1.clone(), e_eta, e_v)
            }
            BbmVariant::ReflectingUpwind => {
                let p = pair.as_ref().unwrap();
                let (dp, dm) = (p.plus.to_csr(), p.minus.to_csr());
                let e_eta = dm.matmul(&dp.scale_rows(&p_d_k));
                let e_v = dp.matmul(&dm).scale_cols(&k);
                (p.minus.clone(), p.plus.clone(), e_eta, e_v)
            }
        };
        let a_eta = id.add_scaled(sixth, &e_eta);
        let mut a_v = id.add_scaled(sixth, &e_v);
        if variant.is_reflecting() {
            a_v = a_v.with_identity_rows(&boundary);
        }
        let energy = BbmEnergy {
            g,
            depth: depth.clone(),
            mass: ops.mass().clone(),
        };
        Ok(Self {
            constraint_eta: mass_constraint(&a_eta, ops.mass().diagonal()),
            constraint_v: mass_constraint(&a_v, ops.mass().diagonal()),
            elliptic_eta: factor(&a_eta)?,
            elliptic_v: factor(&a_v)?,
            grid,
            g,
            variant,
            bathymetry,
            depth,
            outer_eta,
            outer_v,
            energy,
            source: None,
        })
    }

    pub fn with_source(mut self, source: SharedSource) -> Self {
        self.source = Some(source);
        self
    }

    pub fn variant(&self) -> BbmVariant {
        self.variant
    }

    pub fn gravity(&self) -> f64 {
        self.g
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn energy_functional(&self) -> &BbmEnergy {
        &self.energy
    }

    /// `(η_t, v_t)` for the state `(η, v)`.
    pub fn rhs(&self, t: f64, eta: &[f64], v: &[f64], eta_t: &mut [f64], v_t: &mut [f64]) -> Result<()> {
        let n = self.grid.len();
        for len in [eta.len(), v.len(), eta_t.len(), v_t.len()] {
            check_len(n, len)?;
        }
        check_finite(eta)?;
        check_finite(v)?;
        if self.variant.is_reflecting() && (v[0] != 0.0 || v[n - 1] != 0.0) {
            return Err(Error::Domain(format!(
                "reflecting boundaries need v = 0 at both ends, got {} and {}",
                v[0],
                v[n - 1]
            )));
        }
        let flux: Vec<f64> = (0..n).map(|i| (self.depth[i] + eta[i]) * v[i]).collect();
        let head: Vec<f64> = (0..n).map(|i| self.g * eta[i] + 0.5 * v[i] * v[i]).collect();
        self.outer_eta.apply_into(&flux, eta_t);
        self.outer_v.apply_into(&head, v_t);
        eta_t.iter_mut().for_each(|x| *x = -*x);
        v_t.iter_mut().for_each(|x| *x = -*x);
        if let Some(src) = &self.source {
            let mut s_eta = vec![0.0; n];
            let mut s_v = vec![0.0; n];
            src.eval(t, &mut s_eta, &mut s_v);
            eta_t.iter_mut().zip(&s_eta).for_each(|(a, s)| *a += s);
            v_t.iter_mut().zip(&s_v).for_each(|(a, s)| *a += s);
        }
        if self.variant.is_reflecting() {
            v_t[0] = 0.0;
            v_t[n - 1] = 0.0;
        }
        solve_constrained(&self.elliptic_eta, self.constraint_eta.as_deref(), eta_t)?;
        solve_constrained(&self.elliptic_v, self.constraint_v.as_deref(), v_t)?;
        if self.variant.is_reflecting() {
            v_t[0] = 0.0;
            v_t[n - 1] = 0.0;
        }
        Ok(())
    }

    /// Mass `1ᵀMη`, velocity integral `1ᵀMv` and energy.
    pub fn invariants_of(&self, eta: &[f64], v: &[f64]) -> Result<Invariants> {
        let m = self.energy.mass.clone();
        let mut u = eta.to_vec();
        u.extend_from_slice(v);
        Ok(Invariants {
            mass: m.integral(eta)?,
            secondary_linear: m.integral(v)?,
            energy: self.energy.value(&u),
            modified_entropy: None,
        })
    }
}

impl OdeRhs for BbmBbm {
    fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn eval(&self, t: f64, u: &[f64], du: &mut [f64]) -> Result<()> {
        check_len(self.dim(), u.len())?;
        check_len(self.dim(), du.len())?;
        let n = self.grid.len();
        let (eta, v) = u.split_at(n);
        let (eta_t, v_t) = du.split_at_mut(n);
        self.rhs(t, eta, v, eta_t, v_t)
    }
}

impl Model for BbmBbm {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn mass_matrix(&self) -> &MassMatrix {
        &self.energy.mass
    }

    fn bathymetry(&self) -> &[f64] {
        &self.bathymetry
    }

    fn invariants(&self, u: &[f64]) -> Result<Invariants> {
        check_len(self.dim(), u.len())?;
        let (eta, v) = u.split_at(self.grid.len());
        self.invariants_of(eta, v)
    }

    fn conserved_functional(&self) -> &dyn Functional {
        &self.energy
    }
}

/// Soliton speed `c = (5/2)√(gD)`.
pub fn bbm_soliton_speed(g: f64, depth: f64) -> f64 {
    2.5 * (g * depth).sqrt()
}

/// Exact traveling-wave solution for constant depth `D`.
pub fn bbm_soliton(t: f64, x: f64, g: f64, depth: f64, x0: f64) -> (f64, f64) {
    let rho: f64 = 18.0 / 5.0;
    let c = bbm_soliton_speed(g, depth);
    let theta = 0.5 * rho.sqrt() * (x - c * t - x0) / depth;
    let s2 = 1.0 / theta.cosh().powi(2);
    let eta = 3.75 * depth * (2.0 * s2 - 3.0 * s2 * s2);
    let v = 7.5 * (g * depth).sqrt() * s2;
    (eta, v)
}

/// Linear phase speed `c = √(gh₀) / (1 + (h₀k)²/6)`.
pub fn bbm_phase_speed(k: f64, h0: f64, g: f64) -> f64 {
    (g * h0).sqrt() / (1.0 + (h0 * k).powi(2) / 6.0)
}
