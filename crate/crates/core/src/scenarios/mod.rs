//! Scenario catalog: initial data, bathymetry, exact or reference solutions,
//! recording, convergence studies and the threshold checks of `--check`.

pub mod config;
pub mod jet;
pub mod manufactured;
pub mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bbm::{bbm_phase_speed, bbm_soliton, bbm_soliton_speed, BbmBbm, BbmVariant};
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid};
use crate::model::{Invariants, Model, SharedSource};
use crate::sbp::SbpOperatorSet;
use crate::svaerd_kalisch::{euler_phase_speed, sk_dispersion_omega, SkVariant, SvaerdKalisch};
use crate::time::{integrate, Observer, Stats};

pub use config::{Boundary, Method, ModelChoice, ModelKind, RunSpec, ScenarioConfig, ScenarioKind, OUTPUT_DIR_ENV};
use manufactured::{BbmSource, PeriodicManufactured, ReflectingManufactured, SharedSolution, SkSource};
pub use output::{read_experimental, read_experimental_file, ExperimentalData};

const SOLITON_DEPTH: f64 = 2.0;
const SOLITON_DOMAIN: (f64, f64) = (-35.0, 35.0);
const TRAVELING_H0: f64 = 0.8;
const TRAVELING_AMPLITUDE: f64 = 0.02;
const DINGEMANS_H0: f64 = 0.8;
const DINGEMANS_AMPLITUDE: f64 = 0.02;
const DINGEMANS_DOMAIN: (f64, f64) = (-138.0, 46.0);

/// Time for the soliton (`D = 2`, `g = 9.81`) to cross the periodic domain once.
pub fn soliton_period() -> f64 {
    (SOLITON_DOMAIN.1 - SOLITON_DOMAIN.0) / bbm_soliton_speed(9.81, SOLITON_DEPTH)
}

/// Root of `ω² = gk tanh(kh₀)` by Newton's method from the deep-water guess.
pub fn euler_wavenumber(omega: f64, h0: f64, g: f64) -> f64 {
    let mut k = (omega * omega / g).max(omega / (g * h0).sqrt());
    for _ in 0..100 {
        let th = (k * h0).tanh();
        let f = g * k * th - omega * omega;
        let df = g * th + g * k * h0 * (1.0 - th * th);
        let step = f / df;
        k -= step;
        if step.abs() <= 1e-15 * k {
            break;
        }
    }
    k
}

/// Trapezoidal bar of the wave flume, heights relative to the flat bottom.
pub fn dingemans_bar(x: f64) -> f64 {
    let (x0, x1, x2, x3, top) = (11.01, 23.04, 27.04, 33.07, 0.6);
    if x <= x0 || x >= x3 {
        0.0
    } else if x < x1 {
        top * (x - x0) / (x1 - x0)
    } else if x <= x2 {
        top
    } else {
        top * (x3 - x) / (x3 - x2)
    }
}

pub fn dingemans_wavenumber(g: f64) -> f64 {
    euler_wavenumber(2.0 * PI / (2.02 * 2f64.sqrt()), DINGEMANS_H0, g)
}

/// Wave packet `η − η₀` of the wave maker, shifted by `x̃`.
pub fn dingemans_packet(x: f64, shift: f64, k: f64) -> f64 {
    let s = x - shift;
    if -34.5 * PI / k < s && s < -4.5 * PI / k {
        DINGEMANS_AMPLITUDE * (k * s).cos()
    } else {
        0.0
    }
}

/// Model time series at a fixed position.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeRecord {
    pub x: f64,
    pub t: Vec<f64>,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub t: f64,
    pub invariants: Invariants,
    /// Relaxation parameter of the step that produced this state.
    pub gamma: f64,
}

/// Nodal fields in physical variables (total surface `η`, bathymetry `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocRow {
    pub n: usize,
    /// Grid spacing, so bounded grids with `N − 1` intervals get exact ratios.
    pub dx: f64,
    pub error_eta: f64,
    pub error_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub order: usize,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    /// Observed orders between rows `i − 1` and `i`, scaled for non-doubling steps.
    pub fn eoc(&self, i: usize) -> Option<(f64, f64)> {
        if i == 0 || i >= self.rows.len() {
            return None;
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        let ratio = (a.dx / b.dx).log2();
        Some((
            (a.error_eta / b.error_eta).log2() / ratio,
            (a.error_v / b.error_v).log2() / ratio,
        ))
    }

    pub fn all_eoc(&self) -> Vec<(f64, f64)> {
        (1..self.rows.len()).filter_map(|i| self.eoc(i)).collect()
    }
}

/// Phase and amplitude of the traveling wave, from the Fourier coefficient
/// of the surface at the forcing wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub measured_speed: f64,
    pub model_speed: f64,
    pub euler_speed: f64,
    pub amplitude_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub n: usize,
    pub dx: f64,
    pub order: usize,
    pub snapshot: Snapshot,
    pub invariants: Vec<InvariantRecord>,
    /// Scale for relative drifts of the mass: `max(|M(0)|, ∫|η|)` at `t = 0`.
    pub mass_scale: f64,
    pub gauges: Vec<GaugeRecord>,
    /// `L²` errors of `(η, v)` against the exact or reference solution at the final time.
    pub error: Option<(f64, f64)>,
    pub phase: Option<PhaseReport>,
    pub stats: Stats,
    /// Whether the recorded functional is only dissipated by the scheme.
    pub dissipative: bool,
}

impl RunOutput {
    fn drift(&self, f: impl Fn(&Invariants) -> f64, scale: f64) -> f64 {
        let first = f(&self.invariants[0].invariants);
        self.invariants
            .iter()
            .map(|r| (f(&r.invariants) - first).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn mass_drift(&self) -> f64 {
        self.drift(|i| i.mass, self.mass_scale)
    }

    /// Relative drift of the physical energy (entropy).
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.invariants[0].invariants.energy.abs();
        self.drift(|i| i.energy, e0)
    }

    /// The functional the scheme conserves: energy for BBM-BBM, modified entropy for Svärd–Kalisch.
    pub fn conserved(&self, i: &Invariants) -> f64 {
        i.modified_entropy.unwrap_or(i.energy)
    }

    pub fn conserved_drift(&self) -> f64 {
        let e0 = self.conserved(&self.invariants[0].invariants).abs();
        self.drift(|i| self.conserved(i), e0)
    }

    /// Largest increase of the conserved functional between consecutive steps, relative.
    pub fn max_conserved_increase(&self) -> f64 {
        let e0 = self.conserved(&self.invariants[0].invariants).abs();
        self.invariants
            .windows(2)
            .map(|w| self.conserved(&w[1].invariants) - self.conserved(&w[0].invariants))
            .fold(f64::NEG_INFINITY, f64::max)
            / e0
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        self.invariants
            .iter()
            .skip(1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.gamma), hi.max(r.gamma))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub gauge: usize,
    pub t: Vec<f64>,
    pub model: Vec<f64>,
    pub measured: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub spec: RunSpec,
    pub run: Option<RunOutput>,
    pub eoc: Vec<EocTable>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition.
    pub condition: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("<= {bound:e}"),
            pass: value <= bound,
        }
    }

    fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("{target} +- {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    fn in_range(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            pass: lo <= value && value <= hi,
        }
    }
}

/// `(t, x) ↦ (η, v)`.
type ExactSolution = Box<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Model, initial state and exact data of one resolution.
struct Setup {
    model: Box<dyn Model>,
    u0: Vec<f64>,
    /// Added to the model surface (and bathymetry) to get physical values.
    eta_offset: f64,
    eta0: f64,
    exact: Option<ExactSolution>,
}

fn domain(spec: &RunSpec) -> (f64, f64) {
    match spec.scenario {
        ScenarioKind::Soliton => SOLITON_DOMAIN,
        ScenarioKind::Manufactured => (0.0, 1.0),
        ScenarioKind::ManufacturedReflecting | ScenarioKind::LakeAtRest | ScenarioKind::ReflectingBump => (-1.0, 1.0),
        ScenarioKind::TravelingWave => (0.0, 5.0 * 2.0 * PI / spec.wavenumber.unwrap()),
        ScenarioKind::Dingemans => DINGEMANS_DOMAIN,
    }
}

fn operators(model: &ModelChoice, grid: &Grid, p: usize) -> Result<SbpOperatorSet> {
    match model {
        ModelChoice::Bbm(BbmVariant::Upwind) | ModelChoice::Sk(SkVariant::PeriodicUpwind, _) => {
            SbpOperatorSet::periodic_upwind(grid, p)
        }
        ModelChoice::Bbm(BbmVariant::ReflectingUpwind) => SbpOperatorSet::bounded_upwind(grid, p),
        ModelChoice::Bbm(BbmVariant::ReflectingCentral) | ModelChoice::Sk(SkVariant::ReflectingBetaOnly, _) => {
            SbpOperatorSet::bounded_central(grid, p)
        }
        _ => SbpOperatorSet::periodic_central(grid, p),
    }
}

/// Still-water level of each scenario in physical variables.
fn still_water_level(spec: &RunSpec) -> f64 {
    match spec.scenario {
        ScenarioKind::LakeAtRest => 2.0,
        ScenarioKind::ReflectingBump => 1.0,
        ScenarioKind::Dingemans => DINGEMANS_H0,
        _ => 0.0,
    }
}

fn build_setup(spec: &RunSpec, n: usize, p: usize) -> Result<Setup> {
    let (a, b) = domain(spec);
    let bc = if spec.is_reflecting() {
        BoundaryKind::Bounded
    } else {
        BoundaryKind::Periodic
    };
    let grid = Grid::uniform(a, b, n, bc)?;
    let ops = operators(&spec.model, &grid, p)?;
    let g = spec.g;
    let eta0 = still_water_level(spec);
    let x = grid.nodes().to_vec();

    // Physical bathymetry, surface and velocity at t = 0.
    let manufactured: Option<SharedSolution> = match spec.scenario {
        ScenarioKind::Manufactured => Some(Arc::new(PeriodicManufactured)),
        ScenarioKind::ManufacturedReflecting => Some(Arc::new(ReflectingManufactured)),
        _ => None,
    };
    let (bathy, mut eta, mut v): (Vec<f64>, Vec<f64>, Vec<f64>) = match spec.scenario {
        ScenarioKind::Soliton => {
            let (e, u): (Vec<f64>, Vec<f64>) = x.iter().map(|&xi| bbm_soliton(0.0, xi, g, SOLITON_DEPTH, 0.0)).unzip();
            (vec![-SOLITON_DEPTH; n], e, u)
        }
        ScenarioKind::Manufactured | ScenarioKind::ManufacturedReflecting => {
            let s = manufactured.as_ref().unwrap();
            (
                x.iter().map(|&xi| s.bathymetry_at(xi)).collect(),
                x.iter().map(|&xi| s.eta_at(0.0, xi)).collect(),
                x.iter().map(|&xi| s.velocity_at(0.0, xi)).collect(),
            )
        }
        ScenarioKind::LakeAtRest => {
            let b = x
                .iter()
                .map(|&xi| {
                    if (0.5..=0.75).contains(&xi) {
                        1.5 + 0.5 * (2.0 * PI * xi).sin()
                    } else {
                        1.0
                    }
                })
                .collect();
            (b, vec![eta0; n], vec![0.0; n])
        }
        ScenarioKind::ReflectingBump => (
            x.iter().map(|&xi| 0.3 * (PI * xi).cos()).collect(),
            x.iter().map(|&xi| 1.0 + (-50.0 * xi * xi).exp()).collect(),
            vec![0.0; n],
        ),
        ScenarioKind::TravelingWave => {
            let k = spec.wavenumber.unwrap();
            let e: Vec<f64> = x
                .iter()
                .map(|&xi| eta0 + TRAVELING_AMPLITUDE * (k * xi).cos())
                .collect();
            let c = euler_phase_speed(k, TRAVELING_H0, g);
            let u = e.iter().map(|&ei| c * (ei - eta0) / TRAVELING_H0).collect();
            (vec![eta0 - TRAVELING_H0; n], e, u)
        }
        ScenarioKind::Dingemans => {
            let k = dingemans_wavenumber(g);
            let shift = match spec.model {
                ModelChoice::Bbm(_) => 2.7,
                ModelChoice::Sk(..) => 2.2,
            };
            let e: Vec<f64> = x.iter().map(|&xi| eta0 + dingemans_packet(xi, shift, k)).collect();
            let c = euler_phase_speed(k, DINGEMANS_H0, g);
            let u = e.iter().map(|&ei| c * (ei - eta0) / DINGEMANS_H0).collect();
            (x.iter().map(|&xi| dingemans_bar(xi)).collect(), e, u)
        }
    };
    if spec.is_reflecting() {
        v[0] = 0.0;
        v[n - 1] = 0.0;
    }

    let mut exact: Option<ExactSolution> = None;
    let (model, eta_offset): (Box<dyn Model>, f64) = match spec.model {
        ModelChoice::Bbm(variant) => {
            // The BBM-BBM discretization is written for η₀ = 0; shift by the still-water level.
            let b_model: Vec<f64> = bathy.iter().map(|b| b - eta0).collect();
            eta.iter_mut().for_each(|e| *e -= eta0);
            let mut m = BbmBbm::from_bathymetry(&ops, b_model, g, variant, spec.swap_upwind)?;
            if let Some(sol) = &manufactured {
                let src: SharedSource = Arc::new(BbmSource::new(sol.clone(), x.clone(), g));
                m = m.with_source(src);
            }
            (Box::new(m), eta0)
        }
        ModelChoice::Sk(variant, params) => {
            let mut m = SvaerdKalisch::from_bathymetry(&ops, bathy.clone(), g, eta0, params, variant)?
                .with_naive_fluxes(spec.naive);
            if let Some(sol) = &manufactured {
                let src: SharedSource = Arc::new(SkSource::new(sol.clone(), x.clone(), g, eta0, params));
                m = m.with_source(src);
            }
            (Box::new(m), 0.0)
        }
    };

    match spec.scenario {
        ScenarioKind::Soliton => {
            let len = SOLITON_DOMAIN.1 - SOLITON_DOMAIN.0;
            let c = bbm_soliton_speed(g, SOLITON_DEPTH);
            exact = Some(Box::new(move |t, x| {
                let xi = (x - c * t - SOLITON_DOMAIN.0).rem_euclid(len) + SOLITON_DOMAIN.0;
                bbm_soliton(0.0, xi, g, SOLITON_DEPTH, 0.0)
            }));
        }
        ScenarioKind::Manufactured | ScenarioKind::ManufacturedReflecting => {
            let sol = manufactured.clone().unwrap();
            let shift = eta_offset;
            exact = Some(Box::new(move |t, x| (sol.eta_at(t, x) - shift, sol.velocity_at(t, x))));
        }
        ScenarioKind::LakeAtRest => {
            let level = eta0 - eta_offset;
            exact = Some(Box::new(move |_, _| (level, 0.0)));
        }
        ScenarioKind::TravelingWave => {
            let k = spec.wavenumber.unwrap();
            let omega = k * euler_phase_speed(k, TRAVELING_H0, g);
            let c = omega / k;
            let level = eta0 - eta_offset;
            exact = Some(Box::new(move |t, x| {
                let d = TRAVELING_AMPLITUDE * (k * x - omega * t).cos();
                (level + d, c * d / TRAVELING_H0)
            }));
        }
        _ => {}
    }

    let mut u0 = eta;
    u0.extend_from_slice(&v);
    Ok(Setup {
        model,
        u0,
        eta_offset,
        eta0,
        exact,
    })
}

/// Fourth-order Lagrange interpolation weights for a point on the grid.
fn interpolation_stencil(grid: &Grid, x: f64) -> Result<Vec<(usize, f64)>> {
    let n = grid.len();
    let dx = grid.dx();
    let (lo, hi) = (grid.x_min(), grid.x_max());
    let xr = if grid.is_periodic() {
        (x - lo).rem_euclid(hi - lo)
    } else {
        if x < lo || x > hi {
            return Err(Error::Config(format!("gauge at x = {x} lies outside [{lo}, {hi}]")));
        }
        x - lo
    };
    let s = xr / dx;
    let mut first = s.floor() as isize - 1;
    if !grid.is_periodic() {
        first = first.clamp(0, n as isize - 4);
    }
    Ok((0..4)
        .map(|j| {
            let node = first + j;
            let w: f64 = (0..4)
                .filter(|&m| m != j)
                .map(|m| (s - (first + m) as f64) / ((j - m) as f64))
                .product();
            (node.rem_euclid(n as isize) as usize, w)
        })
        .collect())
}

/// Samples the Fourier coefficient of `η − η₀` at the wavenumber `k` on a
/// uniform time grid.
struct ModeTracker {
    k: f64,
    x: Vec<f64>,
    eta0: f64,
    times: Vec<f64>,
    samples: Vec<Complex64>,
}

/// Number of uniform intervals on which the traveling-wave mode is sampled.
const MODE_SAMPLES: usize = 400;

impl ModeTracker {
    fn coefficient(&self, eta: &[f64]) -> Complex64 {
        self.x
            .iter()
            .zip(eta)
            .map(|(&x, &e)| (e - self.eta0) * Complex64::from_polar(1.0, -self.k * x))
            .sum()
    }

    fn record(&mut self, t: f64, eta: &[f64]) {
        let next = self.samples.len();
        if next < self.times.len() && (t - self.times[next]).abs() <= 1e-12 * t.abs().max(1.0) {
            let c = self.coefficient(eta);
            self.samples.push(c);
        }
    }

    /// `(speed, amplitude ratio)` of the right-going mode. The Euler initial
    /// data are not an eigenmode of the model, so the coefficient is a sum
    /// `a z₁ⁿ + b z₂ⁿ` of a right- and a left-going wave; a two-term Prony fit
    /// separates them. `e^{i(kx − ωt)}` rotates the coefficient by `−ωΔt` per sample.
    fn result(&self) -> Option<(f64, f64)> {
        let c = &self.samples;
        if c.len() < 8 || c.len() != self.times.len() {
            return None;
        }
        let dt = self.times[1] - self.times[0];
        let (z, amp) = prony2(c)?;
        let right = (0..2)
            .filter(|&i| z[i].arg() < 0.0)
            .max_by(|&i, &j| amp[i].norm().total_cmp(&amp[j].norm()))?;
        let speed = -z[right].arg() / (self.k * dt);
        let last = c.len() - 1;
        let ratio = (amp[right] * z[right].powu(last as u32)).norm() / amp[right].norm();
        Some((speed, ratio))
    }
}

/// Least-squares fit `cₙ ≈ a₁z₁ⁿ + a₂z₂ⁿ`; returns `([z₁, z₂], [a₁, a₂])`.
fn prony2(c: &[Complex64]) -> Option<([Complex64; 2], [Complex64; 2])> {
    // Linear prediction cₙ₊₂ = p cₙ₊₁ + q cₙ.
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut r = [Complex64::new(0.0, 0.0); 2];
    for w in c.windows(3) {
        let basis = [w[1], w[0]];
        for a in 0..2 {
            for b in 0..2 {
                g[a][b] += basis[a].conj() * basis[b];
            }
            r[a] += basis[a].conj() * w[2];
        }
    }
    let [p, q] = solve2(g, r)?;
    let disc = (p * p + 4.0 * q).sqrt();
    let z = [(p + disc) / 2.0, (p - disc) / 2.0];
    let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut s = [Complex64::new(0.0, 0.0); 2];
    let mut powers = [Complex64::new(1.0, 0.0); 2];
    for &cn in c {
        for a in 0..2 {
            for b in 0..2 {
                h[a][b] += powers[a].conj() * powers[b];
            }
            s[a] += powers[a].conj() * cn;
        }
        powers[0] *= z[0];
        powers[1] *= z[1];
    }
    let amp = solve2(h, s).unwrap_or([c[0], Complex64::new(0.0, 0.0)]);
    Some((z, amp))
}

fn solve2(a: [[Complex64; 2]; 2], b: [Complex64; 2]) -> Option<[Complex64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].norm() * a[1][1].norm();
    if det.norm() <= 1e-14 * scale || !det.is_finite() {
        return None;
    }
    Some([
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - b[0] * a[1][0]) / det,
    ])
}

struct Recorder<'a> {
    model: &'a dyn Model,
    n: usize,
    eta_offset: f64,
    invariants: Vec<InvariantRecord>,
    gauges: Vec<(Vec<(usize, f64)>, GaugeRecord)>,
    output_times: Vec<f64>,
    mode: Option<ModeTracker>,
    error: Option<Error>,
}

impl Observer for Recorder<'_> {
    fn output_times(&self) -> Vec<f64> {
        self.output_times.clone()
    }

    fn on_output(&mut self, t: f64, u: &[f64]) {
        if let Some(mode) = &mut self.mode {
            mode.record(t, &u[..self.n]);
        }
        for (stencil, rec) in &mut self.gauges {
            let eta: f64 = stencil.iter().map(|&(i, w)| w * u[i]).sum();
            rec.t.push(t);
            rec.eta.push(eta + self.eta_offset);
        }
    }

    fn on_step(&mut self, t: f64, u: &[f64], gamma: f64) {
        if self.error.is_some() {
            return;
        }
        match self.model.invariants(u) {
            Ok(invariants) => self.invariants.push(InvariantRecord { t, invariants, gamma }),
            Err(e) => self.error = Some(e),
        }
    }
}

fn l2_error(model: &dyn Model, u: &[f64], t: f64, exact: &dyn Fn(f64, f64) -> (f64, f64)) -> (f64, f64) {
    let grid = model.grid();
    let n = grid.len();
    let m = model.mass_matrix().diagonal();
    let (mut e_eta, mut e_v) = (0.0, 0.0);
    for (i, &x) in grid.nodes().iter().enumerate() {
        let (eta, v) = exact(t, x);
        e_eta += m[i] * (u[i] - eta).powi(2);
        e_v += m[i] * (u[n + i] - v).powi(2);
    }
    (e_eta.sqrt(), e_v.sqrt())
}

fn output_grid(t_end: f64, interval: f64, extra: &[f64]) -> Vec<f64> {
    let steps = (t_end / interval).floor() as usize;
    let mut times: Vec<f64> = (0..=steps)
        .map(|i| i as f64 * interval)
        .filter(|&t| t <= t_end)
        .collect();
    if times.last().is_some_and(|&t| t < t_end) {
        times.push(t_end);
    }
    times.extend(extra.iter().copied().filter(|&t| (0.0..=t_end).contains(&t)));
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    times
}

fn simulate(spec: &RunSpec, n: usize, p: usize, extra_times: &[f64]) -> Result<RunOutput> {
    let setup = build_setup(spec, n, p)?;
    let model = setup.model.as_ref();
    let grid = model.grid().clone();
    let mut gauges = Vec::new();
    for &x in &spec.gauges {
        gauges.push((
            interpolation_stencil(&grid, x)?,
            GaugeRecord {
                x,
                t: Vec::new(),
                eta: Vec::new(),
            },
        ));
    }
    let mut output_times = if gauges.is_empty() {
        Vec::new()
    } else {
        output_grid(spec.t_end, spec.sample_interval, extra_times)
    };
    let mode = (spec.scenario == ScenarioKind::TravelingWave).then(|| {
        let dt = spec.t_end / MODE_SAMPLES as f64;
        let times: Vec<f64> = (0..=MODE_SAMPLES).map(|i| i as f64 * dt).collect();
        output_times.extend(&times);
        ModeTracker {
            k: spec.wavenumber.unwrap(),
            x: grid.nodes().to_vec(),
            eta0: setup.eta0 - setup.eta_offset,
            times,
            samples: Vec::new(),
        }
    });
    output_times.sort_by(|a, b| a.total_cmp(b));
    output_times.dedup();
    let mut recorder = Recorder {
        model,
        n,
        eta_offset: setup.eta_offset,
        invariants: Vec::new(),
        gauges,
        output_times,
        mode,
        error: None,
    };
    let mut integrator = spec.integrator();
    integrator.relaxation = spec.relaxation_config(model.is_dissipative());
    let functional = integrator.relaxation.map(|_| model.conserved_functional());
    log::info!(
        "{} {:?}: N = {n}, p = {p}, t_end = {}, relaxation = {}",
        spec.scenario.name(),
        spec.model,
        spec.t_end,
        spec.relaxation
    );
    let sol = integrate(
        model,
        &setup.u0,
        (0.0, spec.t_end),
        &integrator,
        functional,
        &mut recorder,
    )?;
    if let Some(e) = recorder.error.take() {
        return Err(e);
    }
    let m0 = recorder.invariants[0].invariants.mass;
    let l1: f64 = model
        .mass_matrix()
        .diagonal()
        .iter()
        .zip(&setup.u0[..n])
        .map(|(w, e)| w * e.abs())
        .sum();
    let error = setup.exact.as_ref().map(|f| l2_error(model, &sol.u, sol.t, f.as_ref()));
    let phase = recorder.mode.as_ref().and_then(|m| m.result()).map(|(speed, amp)| {
        let k = spec.wavenumber.unwrap();
        let model_speed = match spec.model {
            ModelChoice::Bbm(_) => bbm_phase_speed(k, TRAVELING_H0, spec.g),
            ModelChoice::Sk(_, params) => {
                sk_dispersion_omega(k, &params, TRAVELING_H0, spec.g).map_or(f64::NAN, |w| w / k)
            }
        };
        PhaseReport {
            measured_speed: speed,
            model_speed,
            euler_speed: euler_phase_speed(k, TRAVELING_H0, spec.g),
            amplitude_ratio: amp,
        }
    });
    let b: Vec<f64> = model.bathymetry().iter().map(|b| b + setup.eta_offset).collect();
    let snapshot = Snapshot {
        t: sol.t,
        x: grid.nodes().to_vec(),
        eta: sol.u[..n].iter().map(|e| e + setup.eta_offset).collect(),
        v: sol.u[n..].to_vec(),
        b,
    };
    Ok(RunOutput {
        n,
        dx: grid.dx(),
        order: p,
        snapshot,
        invariants: recorder.invariants,
        mass_scale: m0.abs().max(l1),
        gauges: recorder.gauges.into_iter().map(|(_, g)| g).collect(),
        error,
        phase,
        stats: sol.stats,
        dissipative: model.is_dissipative(),
    })
}

/// Convergence study over `spec.eoc_n` for every order in `spec.orders`;
/// resolutions run in parallel.
pub fn run_eoc(spec: &RunSpec) -> Result<Vec<EocTable>> {
    spec.orders
        .iter()
        .map(|&p| {
            let rows = spec
                .eoc_n
                .par_iter()
                .map(|&n| {
                    let out = simulate(spec, n, p, &[])?;
                    let (error_eta, error_v) = out.error.expect("EOC scenarios have exact solutions");
                    Ok(EocRow {
                        n,
                        dx: out.dx,
                        error_eta,
                        error_v,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(EocTable { order: p, rows })
        })
        .collect()
}

/// Runs a resolved scenario: a convergence study when `spec.eoc` is set,
/// otherwise a single simulation.
pub fn run(spec: &RunSpec) -> Result<ScenarioReport> {
    if spec.eoc {
        return Ok(ScenarioReport {
            spec: spec.clone(),
            run: None,
            eoc: run_eoc(spec)?,
            comparisons: Vec::new(),
        });
    }
    let measured = match &spec.experimental_data {
        Some(path) => Some(read_experimental_file(path)?),
        None => None,
    };
    if let Some(data) = &measured {
        if let Some(&id) = data.gauges.keys().find(|&&id| id >= spec.gauges.len()) {
            return Err(Error::Config(format!(
                "experimental data refers to gauge {id}, but only {} gauges are configured",
                spec.gauges.len()
            )));
        }
    }
    let extra: Vec<f64> = measured.as_ref().map(|d| d.times().collect()).unwrap_or_default();
    let out = simulate(spec, spec.n, spec.order, &extra)?;
    let mut comparisons = Vec::new();
    if let Some(data) = &measured {
        for (&id, (t, eta)) in &data.gauges {
            let rec = &out.gauges[id];
            let mut ct = Vec::new();
            let mut model = Vec::new();
            let mut meas = Vec::new();
            for (&ti, &ei) in t.iter().zip(eta) {
                if let Ok(j) = rec.t.binary_search_by(|a| a.total_cmp(&ti)) {
                    ct.push(ti);
                    model.push(rec.eta[j]);
                    meas.push(ei);
                }
            }
            comparisons.push(Comparison {
                gauge: id,
                t: ct,
                model,
                measured: meas,
            });
        }
    }
    Ok(ScenarioReport {
        spec: spec.clone(),
        run: Some(out),
        eoc: Vec::new(),
        comparisons,
    })
}

/// Scenario-specific acceptance thresholds evaluated on a report.
pub fn checks(report: &ScenarioReport) -> Vec<Check> {
    let spec = &report.spec;
    let mut out = Vec::new();
    if spec.eoc {
        for table in &report.eoc {
            // The observed order is the rate of the finest refinement; coarser
            // pairs may still be pre-asymptotic and are reported in the table only.
            let last = table.rows.len() - 1;
            let Some((a, b)) = table.eoc(last) else { continue };
            let label = format!("p={} N={}->{}", table.order, table.rows[last - 1].n, table.rows[last].n);
            if spec.scenario == ScenarioKind::ManufacturedReflecting {
                // Boundary closures reduce the order; only require convergence.
                out.push(Check::in_range(format!("eoc eta {label}"), a, 0.5, f64::INFINITY));
                out.push(Check::in_range(format!("eoc v {label}"), b, 0.5, f64::INFINITY));
            } else {
                let p = table.order as f64;
                out.push(Check::within(format!("eoc eta {label}"), a, p, 0.3));
                out.push(Check::within(format!("eoc v {label}"), b, p, 0.3));
            }
        }
        return out;
    }
    let Some(run) = &report.run else {
        return out;
    };
    let conserved_name = match spec.model {
        ModelChoice::Bbm(_) => "energy",
        ModelChoice::Sk(..) => "modified entropy",
    };
    match spec.scenario {
        ScenarioKind::Soliton => {
            out.push(Check::at_most("mass drift", run.mass_drift(), 1e-13));
            if spec.relaxation {
                out.push(Check::at_most("energy drift", run.energy_drift(), 1e-12));
                let (lo, hi) = run.gamma_range();
                out.push(Check::in_range("min gamma", lo, 1.0, 1.0 + 1e-6));
                out.push(Check::in_range("max gamma", hi, 1.0, 1.0 + 1e-6));
            }
        }
        ScenarioKind::Manufactured | ScenarioKind::ManufacturedReflecting => {
            let (a, b) = run.error.unwrap();
            out.push(Check::in_range("l2 error eta", a, 0.0, 1.0));
            out.push(Check::in_range("l2 error v", b, 0.0, 1.0));
        }
        ScenarioKind::LakeAtRest => {
            let (a, b) = run.error.unwrap();
            out.push(Check::at_most("l2 error eta", a, 1e-12));
            out.push(Check::at_most("l2 error v", b, 1e-12));
        }
        ScenarioKind::ReflectingBump => {
            out.push(Check::at_most("mass drift", run.mass_drift(), 1e-13));
            // Without relaxation the drift is time-integration error and scales with the tolerances.
            if spec.relaxation {
                out.push(Check::at_most(
                    format!("{conserved_name} drift"),
                    run.conserved_drift(),
                    1e-12,
                ));
            }
        }
        ScenarioKind::TravelingWave => {
            if let Some(ph) = run.phase {
                // Same tolerance as the linearized-evolution oracle of the dispersion
                // relation; at A/h₀ = 0.025 the nonlinear speed shift is about 0.1 %.
                let rel = (ph.measured_speed - ph.model_speed).abs() / ph.model_speed;
                out.push(Check::at_most("relative phase speed error", rel, 5e-3));
            }
        }
        ScenarioKind::Dingemans => {
            out.push(Check::at_most("mass drift", run.mass_drift(), 1e-13));
            if run.dissipative {
                out.push(Check::at_most(
                    format!("largest {conserved_name} increase"),
                    run.max_conserved_increase(),
                    1e-13,
                ));
            } else if spec.relaxation {
                out.push(Check::at_most(
                    format!("{conserved_name} drift"),
                    run.conserved_drift(),
                    1e-12,
                ));
            } else if matches!(spec.model, ModelChoice::Sk(..)) {
                // Without relaxation only the modified entropy of the split form is bounded;
                // the BBM-BBM energy drift is pure time-integration error.
                out.push(Check::at_most(
                    format!("{conserved_name} drift"),
                    run.conserved_drift(),
                    1e-6,
                ));
            }
        }
    }
    let finite = run.snapshot.eta.iter().chain(&run.snapshot.v).all(|x| x.is_finite());
    out.push(Check {
        name: "finite solution".into(),
        value: if finite { 1.0 } else { 0.0 },
        condition: "all values finite".into(),
        pass: finite,
    });
    out
}

/// Writes the CSV files of a report into `dir` and returns their paths.
pub fn write_outputs(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if !report.eoc.is_empty() {
        let path = dir.join("eoc.csv");
        output::write_eoc(&path, &report.eoc)?;
        written.push(path);
    }
    if let Some(run) = &report.run {
        let path = dir.join("invariants.csv");
        output::write_invariants(&path, &run.invariants)?;
        written.push(path);
        if report.spec.snapshot {
            let path = dir.join("snapshot.csv");
            output::write_snapshot(&path, &run.snapshot)?;
            written.push(path);
        }
        for (i, g) in run.gauges.iter().enumerate() {
            let path = dir.join(format!("gauge_{i}.csv"));
            output::write_gauge(&path, g)?;
            written.push(path);
        }
    }
    for c in &report.comparisons {
        let path = dir.join(format!("gauge_{}_comparison.csv", c.gauge));
        output::write_comparison(&path, &c.t, &c.model, &c.measured)?;
        written.push(path);
    }
    Ok(written)
}
