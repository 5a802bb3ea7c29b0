//! Problem setups shared by the benchmarks.

use dispersive_core::sparse::CsrMatrix;
use dispersive_core::time::OdeRhs;
use dispersive_core::{
    sk_parameter_set, BbmBbm, BbmVariant, BoundaryKind, Grid, SbpOperatorSet, SkVariant, SvaerdKalisch,
};

/// Periodic grid on `[-35, 35)` with a smooth, positive initial state `(η, v)` stacked.
pub fn periodic_state(n: usize) -> (Grid, Vec<f64>) {
    let grid = Grid::uniform(-35.0, 35.0, n, BoundaryKind::Periodic).expect("valid grid");
    let mut u = grid.sample(|x| 0.1 * (-(x * x) / 10.0).exp());
    u.extend(grid.sample(|x| 0.05 * (2.0 * std::f64::consts::PI * x / 70.0).sin()));
    (grid, u)
}

pub fn bbm(n: usize, p: usize) -> (BbmBbm, Vec<f64>) {
    let (grid, u) = periodic_state(n);
    let ops = SbpOperatorSet::periodic_central(&grid, p).expect("operators");
    let model = BbmBbm::new(&ops, |_| -1.0, 9.81, BbmVariant::CentralWide, false).expect("model");
    (model, u)
}

pub fn svaerd_kalisch(n: usize, p: usize, variant: SkVariant) -> (SvaerdKalisch, Vec<f64>) {
    let (grid, u) = periodic_state(n);
    let ops = match variant {
        SkVariant::PeriodicUpwind => SbpOperatorSet::periodic_upwind(&grid, p),
        _ => SbpOperatorSet::periodic_central(&grid, p),
    }
    .expect("operators");
    let params = sk_parameter_set("set4").expect("parameter set");
    let model = SvaerdKalisch::new(&ops, |_| -1.0, 9.81, 0.0, params, variant).expect("model");
    (model, u)
}

/// `I − D₂` for the periodic narrow second-derivative operator.
pub fn elliptic_matrix(n: usize, p: usize) -> CsrMatrix {
    let (grid, _) = periodic_state(n);
    let ops = SbpOperatorSet::periodic_central(&grid, p).expect("operators");
    let d2 = ops.d2.expect("narrow second derivative").to_csr();
    let rows = (0..n)
        .map(|i| d2.row(i).map(|(j, a)| (j, if i == j { 1.0 - a } else { -a })).collect())
        .collect();
    CsrMatrix::from_rows(n, rows)
}

pub fn eval(rhs: &dyn OdeRhs, u: &[f64], du: &mut [f64]) {
    rhs.eval(0.0, u, du).expect("finite right-hand side");
}
