//! Svärd–Kalisch equations with variable bathymetry,
//!
//! ```text
//! h_t + (hv)_x = (α̂(α̂(h + b)_x)_x)_x,
//! (hv)_t + (hv²)_x + gh(h + b)_x = (α̂v(α̂(h + b)_x)_x)_x + (β̂v_x)_xt + ½(γ̂v_x)_xx + ½(γ̂v_xx)_x,
//! ```
//!
//! discretized in primitive variables `(η, v)` with `h = η + D − η₀`, `D = η₀ − b`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{Grid, MassMatrix};
use crate::linear_solve::factor;
use crate::model::{check_finite, Invariants, Model, SharedSource};
use crate::sbp::{DerivativeOperator, SbpOperatorSet};
use crate::sparse::CsrMatrix;
use crate::time::{Functional, OdeRhs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkSetName {
    Set1,
    Set2,
    Set3,
    Set4,
    Set5,
    Custom,
}

/// Dimensionless dispersion coefficients `(α̃, β̃, γ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkParameterSet {
    pub name: SkSetName,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub gamma_tilde: f64,
}

impl SkParameterSet {
    pub fn named(name: SkSetName) -> Option<Self> {
        let (a, b, c) = match name {
            SkSetName::Set1 => (-1.0 / 3.0, 0.0, 0.0),
            SkSetName::Set2 => (0.0004040404040404049, 0.49292929292929294, 0.15707070707070708),
            SkSetName::Set3 => (0.0, 0.27946992481203003, 0.0521077694235589),
            SkSetName::Set4 => (0.0, 0.2308939393939394, 0.04034343434343434),
            SkSetName::Set5 => (0.0, 1.0 / 3.0, 0.0),
            SkSetName::Custom => return None,
        };
        Some(Self {
            name,
            alpha_tilde: a,
            beta_tilde: b,
            gamma_tilde: c,
        })
    }

    pub fn custom(alpha_tilde: f64, beta_tilde: f64, gamma_tilde: f64) -> Self {
        Self {
            name: SkSetName::Custom,
            alpha_tilde,
            beta_tilde,
            gamma_tilde,
        }
    }

    /// `α̃ ≥ 0` is needed for `α̂ = √(α̃√(gD)D²)` to exist with variable depth.
    pub fn valid_for_variable_bathymetry(&self) -> bool {
        self.alpha_tilde >= 0.0
    }
}

/// Looks up `set1` … `set5`.
pub fn sk_parameter_set(name: &str) -> Result<SkParameterSet> {
    let id = match name.trim().to_ascii_lowercase().as_str() {
        "set1" => SkSetName::Set1,
        "set2" => SkSetName::Set2,
        "set3" => SkSetName::Set3,
        "set4" => SkSetName::Set4,
        "set5" => SkSetName::Set5,
        other => {
            return Err(Error::Config(format!(
                "unknown parameter set '{other}', expected set1..set5"
            )))
        }
    };
    Ok(SkParameterSet::named(id).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkVariant {
    /// Central operators with split nonlinear terms; conserves the modified entropy.
    PeriodicCentralSplit,
    /// Upwind operators in the dispersive terms; dissipates the modified entropy.
    PeriodicUpwind,
    /// Reflecting walls, `α̃ = γ̃ = 0`.
    ReflectingBetaOnly,
}

impl SkVariant {
    pub fn is_reflecting(self) -> bool {
        self == Self::ReflectingBetaOnly
    }
}

/// Total entropy `1ᵀM(½hv² + ½gh² + ghb)`, optionally with the modification
/// `½ 1ᵀM β̂ (Dv)²`.
#[derive(Debug, Clone)]
pub struct SkEntropy {
    g: f64,
    bathymetry: Vec<f64>,
    mass: MassMatrix,
    /// `D` and `Dᵀ` of the modification; `None` for the plain entropy.
    modification: Option<(DerivativeOperator, CsrMatrix, Vec<f64>)>,
}

impl SkEntropy {
    pub fn is_modified(&self) -> bool {
        self.modification.is_some()
    }
}

impl Functional for SkEntropy {
    fn value(&self, u: &[f64]) -> f64 {
        let n = self.bathymetry.len();
        let (eta, v) = u.split_at(n);
        let m = self.mass.diagonal();
        let b = &self.bathymetry;
        let mut total: f64 = (0..n)
            .map(|i| {
                let h = eta[i] - b[i];
                m[i] * (0.5 * h * v[i] * v[i] + 0.5 * self.g * h * h + self.g * h * b[i])
            })
            .sum();
        if let Some((d, _, beta)) = &self.modification {
            let mut dv = vec![0.0; n];
            d.apply_into(v, &mut dv);
            total += 0.5 * (0..n).map(|i| m[i] * beta[i] * dv[i] * dv[i]).sum::<f64>();
        }
        total
    }

    fn gradient(&self, u: &[f64], grad: &mut [f64]) {
        let n = self.bathymetry.len();
        let (eta, v) = u.split_at(n);
        let m = self.mass.diagonal();
        for i in 0..n {
            let h = eta[i] - self.bathymetry[i];
            grad[i] = m[i] * (self.g * eta[i] + 0.5 * v[i] * v[i]);
            grad[n + i] = m[i] * h * v[i];
        }
        if let Some((d, dt, beta)) = &self.modification {
            let mut w = vec![0.0; n];
            d.apply_into(v, &mut w);
            for i in 0..n {
                w[i] *= m[i] * beta[i];
            }
            for (i, gi) in dt.apply(&w).into_iter().enumerate() {
                grad[n + i] += gi;
            }
        }
    }
}

pub struct SvaerdKalisch {
    grid: Grid,
    g: f64,
    eta0: f64,
    params: SkParameterSet,
    variant: SkVariant,
    naive: bool,
    bathymetry: Vec<f64>,
    depth: Vec<f64>,
    /// Signed `α̂`: `y = s·|α̂| D(|α̂| D η)` with `s = sign(α̃)`.
    alpha_hat: Vec<f64>,
    alpha_sign: f64,
    beta_hat: Vec<f64>,
    gamma_hat: Vec<f64>,
    d1: DerivativeOperator,
    /// `(D₊, D₋)` of the upwind variant.
    upwind: Option<(DerivativeOperator, DerivativeOperator)>,
    d2: Option<DerivativeOperator>,
    /// `−D β̂ D` with every diagonal entry stored; boundary rows cleared when reflecting.
    beta_matrix: CsrMatrix,
    entropy: SkEntropy,
    modified_entropy: SkEntropy,
    source: Option<SharedSource>,
}

impl std::fmt::Debug for SvaerdKalisch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SvaerdKalisch")
            .field("variant", &self.variant)
            .field("params", &self.params)
            .field("n", &self.grid.len())
            .field("naive", &self.naive)
            .finish()
    }
}

fn has_nonzero(v: &[f64]) -> bool {
    v.iter().any(|&x| x != 0.0)
}

impl SvaerdKalisch {
    pub fn new(
        ops: &SbpOperatorSet,
        bathymetry: impl Fn(f64) -> f64,
        g: f64,
        eta0: f64,
        params: SkParameterSet,
        variant: SkVariant,
    ) -> Result<Self> {
        let b = ops.grid().sample(bathymetry);
        Self::from_bathymetry(ops, b, g, eta0, params, variant)
    }

    pub fn from_bathymetry(
        ops: &SbpOperatorSet,
        bathymetry: Vec<f64>,
        g: f64,
        eta0: f64,
        params: SkParameterSet,
        variant: SkVariant,
    ) -> Result<Self> {
        let grid = ops.grid().clone();
        let n = grid.len();
        check_len(n, bathymetry.len())?;
        if !(g > 0.0) {
            return Err(Error::Config(format!("gravity must be positive, got {g}")));
        }
        for (name, x) in [
            ("alpha", params.alpha_tilde),
            ("beta", params.beta_tilde),
            ("gamma", params.gamma_tilde),
            ("eta0", eta0),
        ] {
            if !x.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {x}")));
            }
        }
        if params.beta_tilde < 0.0 {
            return Err(Error::Config(format!(
                "beta must be nonnegative, got {}",
                params.beta_tilde
            )));
        }
        if variant.is_reflecting() == grid.is_periodic() {
            return Err(Error::Config(format!(
                "variant {variant:?} does not match a {:?} grid",
                grid.boundary()
            )));
        }
        if variant.is_reflecting() && (params.alpha_tilde != 0.0 || params.gamma_tilde != 0.0) {
            return Err(Error::Config(format!(
                "reflecting boundaries need alpha = gamma = 0, got alpha = {}, gamma = {}",
                params.alpha_tilde, params.gamma_tilde
            )));
        }
        let depth: Vec<f64> = bathymetry.iter().map(|b| eta0 - b).collect();
        if let Some(i) = depth.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Domain(format!(
                "still-water depth must be positive, D = {} at x = {}",
                depth[i],
                grid.nodes()[i]
            )));
        }
        let constant_depth = depth.iter().all(|&d| d == depth[0]);
        if params.alpha_tilde < 0.0 && (!constant_depth || variant != SkVariant::PeriodicCentralSplit) {
            return Err(Error::Config(format!(
                "alpha = {} < 0 is only supported for constant depth with the central variant",
                params.alpha_tilde
            )));
        }

        let sqrt_gd = |d: f64| (g * d).sqrt();
        let alpha_hat: Vec<f64> = depth
            .iter()
            .map(|&d| (params.alpha_tilde.abs() * sqrt_gd(d) * d * d).sqrt())
            .collect();
        let beta_hat: Vec<f64> = depth.iter().map(|&d| params.beta_tilde * d.powi(3)).collect();
        let gamma_hat: Vec<f64> = depth
            .iter()
            .map(|&d| params.gamma_tilde * sqrt_gd(d) * d.powi(3))
            .collect();

        let upwind = match variant {
            SkVariant::PeriodicUpwind => {
                let pair = ops
                    .upwind
                    .as_ref()
                    .ok_or_else(|| Error::Config("the upwind variant needs upwind operators".into()))?;
                Some((pair.plus.clone(), pair.minus.clone()))
            }
            _ => None,
        };
        let d1 = match &upwind {
            Some(_) => ops.upwind.as_ref().unwrap().central.clone(),
            None => ops.d1.clone(),
        };
        let d2 = if has_nonzero(&gamma_hat) {
            Some(
                ops.d2
                    .clone()
                    .ok_or_else(|| Error::Config("gamma > 0 needs a second-derivative operator".into()))?,
            )
        } else {
            None
        };

        // Operators in the β term: D₁ᵀ-like pair (outer, inner).
        let (outer, inner) = match &upwind {
            Some((plus, minus)) => (plus.to_csr(), minus.clone()),
            None => (d1.to_csr(), d1.clone()),
        };
        let inner_csr = inner.to_csr();
        let mut beta_matrix = outer
            .matmul(&inner_csr.scale_rows(&beta_hat))
            .scale(-1.0)
            .add_scaled(1.0, &CsrMatrix::diagonal(&vec![0.0; n]));
        if variant.is_reflecting() {
            let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| beta_matrix.row(i).collect()).collect();
            for i in [0, n - 1] {
                rows[i] = vec![(i, 0.0)];
            }
            beta_matrix = CsrMatrix::from_rows(n, rows);
        }

        let entropy = SkEntropy {
            g,
            bathymetry: bathymetry.clone(),
            mass: ops.mass().clone(),
            modification: None,
        };
        let modified_entropy = SkEntropy {
            modification: Some((inner, inner_csr.transpose(), beta_hat.clone())),
            ..entropy.clone()
        };
        Ok(Self {
            grid,
            g,
            eta0,
            params,
            variant,
            naive: false,
            bathymetry,
            depth,
            alpha_hat,
            alpha_sign: if params.alpha_tilde < 0.0 { -1.0 } else { 1.0 },
            beta_hat,
            gamma_hat,
            d1,
            upwind,
            d2,
            beta_matrix,
            entropy,
            modified_entropy,
            source: None,
        })
    }

    pub fn with_source(mut self, source: SharedSource) -> Self {
        self.source = Some(source);
        self
    }

    /// Replaces the split nonlinear terms by their plain conservative forms.
    /// Consistent, but no longer entropy conservative.
    pub fn with_naive_fluxes(mut self, naive: bool) -> Self {
        self.naive = naive;
        self
    }

    pub fn variant(&self) -> SkVariant {
        self.variant
    }

    pub fn parameters(&self) -> SkParameterSet {
        self.params
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn gravity(&self) -> f64 {
        self.g
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    /// Nodal `(α̂², β̂, γ̂)`; `α̂²` carries the sign of `α̃`.
    pub fn coefficient_fields(&self) -> (Vec<f64>, &[f64], &[f64]) {
        let a2 = self.alpha_hat.iter().map(|a| self.alpha_sign * a * a).collect();
        (a2, &self.beta_hat, &self.gamma_hat)
    }

    pub fn entropy_functional(&self) -> &SkEntropy {
        &self.entropy
    }

    pub fn modified_entropy_functional(&self) -> &SkEntropy {
        &self.modified_entropy
    }

    fn water_height(&self, eta: &[f64]) -> Result<Vec<f64>> {
        let h: Vec<f64> = eta.iter().zip(&self.bathymetry).map(|(e, b)| e - b).collect();
        if let Some(i) = h.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Domain(format!(
                "water height must be positive, h = {} at x = {}",
                h[i],
                self.grid.nodes()[i]
            )));
        }
        Ok(h)
    }

    fn apply(op: &DerivativeOperator, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        op.apply_into(u, &mut out);
        out
    }

    /// `y = α̂ D(α̂ D η)` with the variant's operators; `None` when `α̃ = 0`.
    fn alpha_field(&self, eta: &[f64]) -> Option<Vec<f64>> {
        if !has_nonzero(&self.alpha_hat) {
            return None;
        }
        let (first, second) = match &self.upwind {
            Some((plus, minus)) => (plus, minus),
            None => (&self.d1, &self.d1),
        };
        let mut z = Self::apply(first, eta);
        z.iter_mut().zip(&self.alpha_hat).for_each(|(z, a)| *z *= a);
        let mut y = Self::apply(second, &z);
        y.iter_mut()
            .zip(&self.alpha_hat)
            .for_each(|(y, a)| *y *= self.alpha_sign * a);
        Some(y)
    }

    /// Shallow-water part of `(hv)_t`, split form unless naive.
    pub(crate) fn swe_terms(&self, eta: &[f64], h: &[f64], v: &[f64]) -> Vec<f64> {
        let n = h.len();
        let hv: Vec<f64> = (0..n).map(|i| h[i] * v[i]).collect();
        let hv2: Vec<f64> = (0..n).map(|i| hv[i] * v[i]).collect();
        let d_hv2 = Self::apply(&self.d1, &hv2);
        let d_eta = Self::apply(&self.d1, eta);
        if self.naive {
            return (0..n).map(|i| -d_hv2[i] - self.g * h[i] * d_eta[i]).collect();
        }
        let d_v = Self::apply(&self.d1, v);
        let d_hv = Self::apply(&self.d1, &hv);
        (0..n)
            .map(|i| -0.5 * (d_hv2[i] + hv[i] * d_v[i] + v[i] * d_hv[i]) - self.g * h[i] * d_eta[i])
            .collect()
    }

    /// α part of `(hv)_t` given `y`.
    pub(crate) fn alpha_terms(&self, v: &[f64], y: &[f64]) -> Vec<f64> {
        let n = v.len();
        let (outer, right) = match &self.upwind {
            Some((plus, minus)) => (minus, plus),
            None => (&self.d1, &self.d1),
        };
        let vy: Vec<f64> = (0..n).map(|i| v[i] * y[i]).collect();
        let d_vy = Self::apply(outer, &vy);
        if self.naive {
            return d_vy;
        }
        let d_y = Self::apply(outer, y);
        let d_v = Self::apply(right, v);
        (0..n)
            .map(|i| 0.5 * (d_vy[i] + v[i] * d_y[i] + y[i] * d_v[i]))
            .collect()
    }

    /// `½D₂(γ̂D₁v) + ½D₁(γ̂D₂v)`.
    pub(crate) fn gamma_terms(&self, v: &[f64]) -> Option<Vec<f64>> {
        let d2 = self.d2.as_ref()?;
        let n = v.len();
        let mut a = Self::apply(&self.d1, v);
        let mut b = Self::apply(d2, v);
        for i in 0..n {
            a[i] *= self.gamma_hat[i];
            b[i] *= self.gamma_hat[i];
        }
        let da = Self::apply(d2, &a);
        let db = Self::apply(&self.d1, &b);
        Some((0..n).map(|i| 0.5 * (da[i] + db[i])).collect())
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
        let h = self.water_height(eta)?;
        let (mut s_h, mut s_p) = (vec![0.0; n], vec![0.0; n]);
        if let Some(src) = &self.source {
            src.eval(t, &mut s_h, &mut s_p);
        }

        // Mass equation.
        let hv: Vec<f64> = (0..n).map(|i| h[i] * v[i]).collect();
        self.d1.apply_into(&hv, eta_t);
        let y = self.alpha_field(eta);
        let d_y = y.as_ref().map(|y| match &self.upwind {
            Some((_, minus)) => Self::apply(minus, y),
            None => Self::apply(&self.d1, y),
        });
        for i in 0..n {
            eta_t[i] = -eta_t[i] + s_h[i];
            if let Some(dy) = &d_y {
                eta_t[i] += dy[i];
            }
        }

        // Momentum equation, then v_t from (h − DβD) v_t = P_rest − v h_t.
        let mut rhs = self.swe_terms(eta, &h, v);
        if let Some(y) = &y {
            rhs.iter_mut().zip(self.alpha_terms(v, y)).for_each(|(r, a)| *r += a);
        }
        if let Some(gam) = self.gamma_terms(v) {
            rhs.iter_mut().zip(gam).for_each(|(r, c)| *r += c);
        }
        for i in 0..n {
            rhs[i] += s_p[i] - v[i] * eta_t[i];
        }
        let mut diag = h;
        if self.variant.is_reflecting() {
            diag[0] = 1.0;
            diag[n - 1] = 1.0;
            rhs[0] = 0.0;
            rhs[n - 1] = 0.0;
        }
        if has_nonzero(&self.beta_hat) {
            let system = self.beta_matrix.plus_diagonal(&diag);
            factor(&system)?.solve_in_place(&mut rhs)?;
        } else {
            rhs.iter_mut().zip(&diag).for_each(|(r, d)| *r /= d);
        }
        v_t.copy_from_slice(&rhs);
        if self.variant.is_reflecting() {
            v_t[0] = 0.0;
            v_t[n - 1] = 0.0;
        }
        Ok(())
    }

    /// Mass `1ᵀMh`, discharge `1ᵀMhv`, entropy and modified entropy.
    pub fn invariants_of(&self, eta: &[f64], v: &[f64]) -> Result<Invariants> {
        check_len(self.grid.len(), eta.len())?;
        check_len(self.grid.len(), v.len())?;
        let h = self.water_height(eta)?;
        let m = &self.entropy.mass;
        let hv: Vec<f64> = h.iter().zip(v).map(|(h, v)| h * v).collect();
        let mut u = eta.to_vec();
        u.extend_from_slice(v);
        Ok(Invariants {
            mass: m.integral(&h)?,
            secondary_linear: m.integral(&hv)?,
            energy: self.entropy.value(&u),
            modified_entropy: Some(self.modified_entropy.value(&u)),
        })
    }
}

impl OdeRhs for SvaerdKalisch {
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

impl Model for SvaerdKalisch {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn mass_matrix(&self) -> &MassMatrix {
        &self.entropy.mass
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
        &self.modified_entropy
    }

    fn is_dissipative(&self) -> bool {
        self.variant == SkVariant::PeriodicUpwind && has_nonzero(&self.alpha_hat)
    }
}

/// Angular frequency of the right-going linear wave on still water of depth `h0`:
/// the larger root of
/// `(h₀ + βk²)ω² − ((h₀ + βk²)α + γ)k³ω + αγk⁶ − gh₀²k² = 0`.
pub fn sk_dispersion_omega(k: f64, params: &SkParameterSet, h0: f64, g: f64) -> Result<f64> {
    if !(k > 0.0 && h0 > 0.0 && g > 0.0) {
        return Err(Error::Domain(format!(
            "need k, h0, g > 0, got k = {k}, h0 = {h0}, g = {g}"
        )));
    }
    let c0 = (g * h0).sqrt();
    let alpha = params.alpha_tilde * c0 * h0 * h0;
    let beta = params.beta_tilde * h0.powi(3);
    let gamma = params.gamma_tilde * c0 * h0.powi(3);
    let k3 = k.powi(3);
    let a = h0 + beta * k * k;
    let b = -(a * alpha + gamma) * k3;
    let c = alpha * gamma * k3 * k3 - g * h0 * h0 * k * k;
    let disc = b * b - 4.0 * a * c;
    let omega = if disc >= 0.0 && a != 0.0 {
        // Stable evaluation of the larger root.
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (r1, r2) = (q / a, if q != 0.0 { c / q } else { 0.0 });
        r1.max(r2)
    } else {
        f64::NAN
    };
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "no positive frequency for k = {k}, h0 = {h0}, parameters {params:?}"
        )));
    }
    Ok(omega)
}

/// Linear phase speed of the full water wave problem, `√(g tanh(kh₀)/k)`.
pub fn euler_phase_speed(k: f64, h0: f64, g: f64) -> f64 {
    (g * (k * h0).tanh() / k).sqrt()
}
