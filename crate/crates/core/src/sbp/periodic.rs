use super::{fd_weights, DerivativeOperator, Layout, OperatorKind, Stencil, UpwindOperatorPair};
use crate::error::{Error, Result};
use crate::grid::{Grid, MassMatrix};

fn require_periodic(grid: &Grid) -> Result<()> {
    if !grid.is_periodic() {
        return Err(Error::Config("periodic operator requested on a bounded grid".into()));
    }
    Ok(())
}

fn require_width(grid: &Grid, s: &Stencil) -> Result<()> {
    // Every offset must hit a distinct node.
    if s.coeffs.len() > grid.len() {
        return Err(Error::Config(format!(
            "{} nodes are too few for a stencil of width {}",
            grid.len(),
            s.coeffs.len()
        )));
    }
    Ok(())
}

/// Right halves of the classical central first-derivative stencils.
fn central_d1_coefficients(p: usize) -> Option<&'static [f64]> {
    Some(match p {
        2 => &[1.0 / 2.0],
        4 => &[2.0 / 3.0, -1.0 / 12.0],
        6 => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        8 => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        _ => return None,
    })
}

/// `[c_0, c_1, ...]` of the narrow central second-derivative stencils.
fn central_d2_coefficients(p: usize) -> Option<&'static [f64]> {
    Some(match p {
        2 => &[-2.0, 1.0],
        4 => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        6 => &[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        8 => &[-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
        _ => return None,
    })
}

pub(crate) fn central_d1_stencil(p: usize) -> Result<Stencil> {
    central_d1_coefficients(p)
        .map(Stencil::antisymmetric)
        .ok_or_else(|| Error::Config(format!("central first-derivative order {p} not in {{2, 4, 6, 8}}")))
}

/// Periodic central first-derivative operator of even order `p ∈ {2, 4, 6, 8}`, `M = Δx I`.
pub fn build_periodic_central_d1(grid: &Grid, p: usize) -> Result<DerivativeOperator> {
    require_periodic(grid)?;
    let s = central_d1_stencil(p)?;
    require_width(grid, &s)?;
    Ok(DerivativeOperator::new(
        OperatorKind::PeriodicCentralD1,
        p,
        Layout::Circulant(s.scaled(1.0 / grid.dx())),
        MassMatrix::uniform(grid.len(), grid.dx()),
        grid.clone(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D2Flavor {
    /// Classical `2p+1`-point central stencil.
    Narrow,
    /// Square of the central first-derivative operator.
    Wide,
    /// `D₊ D₋` of the upwind pair of the same order.
    UpwindComposite,
}

/// Periodic second-derivative operator with `M D₂ = D₂ᵀ M`.
pub fn build_periodic_d2(grid: &Grid, p: usize, flavor: D2Flavor) -> Result<DerivativeOperator> {
    require_periodic(grid)?;
    match flavor {
        D2Flavor::Narrow => {
            let half = central_d2_coefficients(p)
                .ok_or_else(|| Error::Config(format!("narrow second-derivative order {p} not in {{2, 4, 6, 8}}")))?;
            let s = Stencil::symmetric(half);
            require_width(grid, &s)?;
            Ok(DerivativeOperator::new(
                OperatorKind::PeriodicD2Narrow,
                p,
                Layout::Circulant(s.scaled(1.0 / (grid.dx() * grid.dx()))),
                MassMatrix::uniform(grid.len(), grid.dx()),
                grid.clone(),
            ))
        }
        D2Flavor::Wide => {
            let d1 = build_periodic_central_d1(grid, p)?;
            require_width(grid, &d1.interior_stencil().compose(d1.interior_stencil()))?;
            Ok(d1.compose_circulant(&d1, OperatorKind::PeriodicD2Wide).unwrap())
        }
        D2Flavor::UpwindComposite => {
            let pair = build_periodic_upwind(grid, p)?;
            require_width(
                grid,
                &pair.plus.interior_stencil().compose(pair.minus.interior_stencil()),
            )?;
            Ok(pair
                .plus
                .compose_circulant(&pair.minus, OperatorKind::PeriodicD2UpwindComposite)
                .unwrap())
        }
    }
}

pub const MAX_UPWIND_ORDER: usize = 8;

/// Backward-biased stencil of order `p` on the `p + 1` offsets `-(p/2 + 1) ..= p - p/2 - 1`.
pub(crate) fn upwind_minus_stencil(p: usize) -> Result<Stencil> {
    if !(1..=MAX_UPWIND_ORDER).contains(&p) {
        return Err(Error::Config(format!("upwind order {p} not in 1..={MAX_UPWIND_ORDER}")));
    }
    let start = -((p / 2) as isize + 1);
    let nodes: Vec<f64> = (0..=p).map(|k| (start + k as isize) as f64).collect();
    let mut coeffs = fd_weights(&nodes, 1);
    // Exact consistency: the centre weight absorbs rounding.
    let centre = (-start) as usize;
    let others: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != centre)
        .map(|(_, c)| c)
        .sum();
    coeffs[centre] = -others;
    let s = Stencil::new(start, coeffs);
    // Real part of the symbol of D₋ must be nonnegative, i.e. ½M(D₊ − D₋) ⪯ 0.
    let worst = (0..=2048)
        .map(|k| s.symbol(std::f64::consts::PI * k as f64 / 2048.0).0)
        .fold(f64::INFINITY, f64::min);
    if worst < -1e-13 {
        return Err(Error::Config(format!(
            "upwind stencil of order {p} is not dissipative (min Re symbol {worst:e})"
        )));
    }
    Ok(s)
}

/// Periodic upwind pair of order `p` with `D₊ = −D₋ᵀ` and `M = Δx I`.
pub fn build_periodic_upwind(grid: &Grid, p: usize) -> Result<UpwindOperatorPair> {
    require_periodic(grid)?;
    let minus = upwind_minus_stencil(p)?;
    let plus = minus.reflected(-1.0);
    require_width(grid, &plus.compose(&minus))?;
    let mut central = Stencil::new(minus.start, vec![0.0; (plus.end() - minus.start + 1) as usize]);
    for j in minus.start..=plus.end() {
        central.coeffs[(j - minus.start) as usize] = 0.5 * (plus.coeff(j) + minus.coeff(j));
    }
    let inv_dx = 1.0 / grid.dx();
    let mass = MassMatrix::uniform(grid.len(), grid.dx());
    let make = |kind, s: Stencil, order| {
        DerivativeOperator::new(
            kind,
            order,
            Layout::Circulant(s.scaled(inv_dx)),
            mass.clone(),
            grid.clone(),
        )
    };
    // The average of the pair is antisymmetric, which lifts odd orders by one.
    let central_order = p + p % 2;
    Ok(UpwindOperatorPair {
        plus: make(OperatorKind::PeriodicUpwindPlus, plus, p),
        minus: make(OperatorKind::PeriodicUpwindMinus, minus, p),
        central: make(OperatorKind::PeriodicCentralD1, central, central_order),
    })
}
