use nalgebra::{DMatrix, DVector};

use super::periodic::central_d1_stencil;
use super::{DerivativeOperator, Layout, OperatorKind, Stencil, UpwindOperatorPair};
use crate::error::{Error, Result};
use crate::grid::{Grid, MassMatrix};

/// Number of rows with modified quadrature weights for each supported order.
fn closure_rows(p: usize) -> Result<usize> {
    match p {
        2 => Ok(1),
        4 => Ok(4),
        6 => Ok(6),
        _ => Err(Error::Config(format!("bounded operator order {p} not in {{2, 4, 6}}"))),
    }
}

const WEIGHT_DENOMINATOR: f64 = 86400.0;

/// Solves the boundary order conditions `Q xᵏ = M k xᵏ⁻¹`, `k ≤ p/2`, for the
/// weights and the antisymmetric part of the `r × r` corner of `Q = M D` (dx = 1).
/// The conditions leave one free parameter for `p = 6`; the minimum-norm
/// solution is taken.
fn central_closure(p: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let r = closure_rows(p)?;
    let interior = central_d1_stencil(p)?;
    let w = (p / 2) as isize;
    let pair_index = |i: usize, j: usize| -> usize {
        // (i, j) with i < j, row-major over the strict upper triangle
        r + i * r - i * (i + 1) / 2 + (j - i - 1)
    };
    let n_unknowns = r + r * (r - 1) / 2;
    let n_eq = r * (p / 2 + 1);
    let mut a = DMatrix::zeros(n_eq, n_unknowns);
    let mut rhs = DVector::zeros(n_eq);
    for i in 0..r {
        for k in 0..=p / 2 {
            let e = i * (p / 2 + 1) + k;
            let mono = |j: usize| (j as f64).powi(k as i32);
            let mut known = 0.0;
            if i == 0 {
                known += -0.5 * mono(0);
            }
            for j in 0..r {
                if j > i {
                    a[(e, pair_index(i, j))] += mono(j);
                } else if j < i {
                    a[(e, pair_index(j, i))] -= mono(j);
                }
            }
            for j in r..(i as isize + w + 1).max(r as isize) as usize {
                known += interior.coeff(j as isize - i as isize) * mono(j);
            }
            if k > 0 {
                a[(e, i)] -= k as f64 * (i as f64).powi(k as i32 - 1);
            }
            rhs[e] = -known;
        }
    }
    let svd = a.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let x = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Config(format!("order conditions for p = {p}: {e}")))?;
    let residual = (&a * &x - &rhs).amax();
    if residual > 1e-10 {
        return Err(Error::Config(format!(
            "order conditions for p = {p} are inconsistent (residual {residual:e})"
        )));
    }
    // The weights are unique and rational; snapping them removes the SVD
    // rounding so that e.g. the second-order closure is reproduced exactly.
    let weights: Vec<f64> = x
        .rows(0, r)
        .iter()
        .map(|&m| {
            let snapped = (m * WEIGHT_DENOMINATOR).round() / WEIGHT_DENOMINATOR;
            if (snapped - m).abs() < 1e-10 {
                snapped
            } else {
                m
            }
        })
        .collect();
    if weights.iter().any(|&m| m <= 0.0) {
        return Err(Error::Config(format!("non-positive quadrature weight for p = {p}")));
    }
    let mut q = DMatrix::zeros(r, r);
    q[(0, 0)] = -0.5;
    for i in 0..r {
        for j in i + 1..r {
            q[(i, j)] = x[pair_index(i, j)];
            q[(j, i)] = -x[pair_index(i, j)];
        }
    }
    Ok((weights, q))
}

/// Dense `Q` and weights on a template grid of `n` nodes with dx = 1.
fn central_template(p: usize, n: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (weights, corner) = central_closure(p)?;
    let r = weights.len();
    let interior = central_d1_stencil(p)?;
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for (off, c) in interior.iter() {
            let j = i as isize + off;
            if (0..n as isize).contains(&j) {
                q[(i, j as usize)] = c;
            }
        }
    }
    for i in 0..r {
        for j in 0..r {
            q[(i, j)] = corner[(i, j)];
            q[(n - 1 - i, n - 1 - j)] = -corner[(i, j)];
        }
    }
    let mut m = vec![1.0; n];
    for (i, &w) in weights.iter().enumerate() {
        m[i] = w;
        m[n - 1 - i] = w;
    }
    Ok((q, m))
}

/// `Δᵐ` applied as `(Δᵐ)ᵀ Δᵐ`, the symmetric positive semidefinite
/// dissipation kernel on `n` nodes.
fn difference_gram(m: usize, n: usize) -> DMatrix<f64> {
    let mut binom = vec![1.0; m + 1];
    for k in 1..=m {
        binom[k] = binom[k - 1] * (m + 1 - k) as f64 / k as f64;
    }
    let mut delta = DMatrix::zeros(n - m, n);
    for row in 0..n - m {
        for (l, b) in binom.iter().enumerate() {
            let sign = if (m - l).is_multiple_of(2) { 1.0 } else { -1.0 };
            delta[(row, row + l)] = sign * b;
        }
    }
    delta.transpose() * delta
}

/// Splits a dense template operator into closures and interior stencil.
#[allow(clippy::type_complexity)]
fn extract_layout(d: &DMatrix<f64>, rows: usize, reach: usize) -> Result<(Stencil, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = d.nrows();
    let mid = n / 2;
    let interior = Stencil::new(
        -(reach as isize),
        (0..=2 * reach).map(|k| d[(mid, mid + k - reach)]).collect(),
    );
    for i in rows..n - rows {
        for j in 0..n {
            let off = j as isize - i as isize;
            let expect = interior.coeff(off);
            if (d[(i, j)] - expect).abs() > 1e-13 * (1.0 + expect.abs()) {
                return Err(Error::Config(format!(
                    "internal: template row {i} deviates from the interior stencil"
                )));
            }
        }
    }
    let width = rows + reach;
    let left = (0..rows).map(|i| (0..width).map(|j| d[(i, j)]).collect()).collect();
    let right = (0..rows)
        .map(|i| (0..width).map(|j| d[(n - 1 - i, n - 1 - j)]).collect())
        .collect();
    Ok((interior, left, right))
}

fn require_bounded(grid: &Grid, min_nodes: usize, p: usize) -> Result<()> {
    if grid.is_periodic() {
        return Err(Error::Config("bounded operator requested on a periodic grid".into()));
    }
    if grid.len() < min_nodes {
        return Err(Error::Config(format!(
            "bounded operator of order {p} needs at least {min_nodes} nodes, got {}",
            grid.len()
        )));
    }
    Ok(())
}

fn assemble(
    grid: &Grid,
    kind: OperatorKind,
    p: usize,
    dense: &DMatrix<f64>,
    weights: &[f64],
    rows: usize,
    reach: usize,
) -> Result<DerivativeOperator> {
    let (interior, left, right) = extract_layout(dense, rows, reach)?;
    let n = grid.len();
    let inv_dx = 1.0 / grid.dx();
    let scale_rows = |b: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        b.into_iter()
            .map(|row| row.into_iter().map(|c| c * inv_dx).collect())
            .collect()
    };
    let mut m = vec![grid.dx(); n];
    for (i, &w) in weights.iter().enumerate() {
        m[i] = w * grid.dx();
        m[n - 1 - i] = w * grid.dx();
    }
    Ok(DerivativeOperator::new(
        kind,
        p,
        Layout::Bounded {
            interior: interior.scaled(inv_dx),
            left: scale_rows(left),
            right: scale_rows(right),
        },
        MassMatrix::new(m)?,
        grid.clone(),
    ))
}

fn template_size(rows: usize, reach: usize) -> usize {
    4 * (rows + reach) + 1
}

/// Bounded diagonal-norm central first-derivative operator, order `p` in the
/// interior and `p/2` at the closures, `p ∈ {2, 4, 6}`.
pub fn build_bounded_central_d1(grid: &Grid, p: usize) -> Result<DerivativeOperator> {
    let rows = closure_rows(p)?;
    let reach = p / 2;
    require_bounded(grid, 2 * (rows + reach), p)?;
    let n_t = template_size(rows, reach);
    let (q, m) = central_template(p, n_t)?;
    let d = DMatrix::from_fn(n_t, n_t, |i, j| q[(i, j)] / m[i]);
    assemble(grid, OperatorKind::BoundedCentralD1, p, &d, &m[..rows], rows, reach)
}

/// Bounded upwind pair `D± = D₁ ± M⁻¹S` built on the central operator of the
/// same order, with `S = −σ (Δᵐ)ᵀΔᵐ`, `m = p/2 + 1`, `σ = 2^{1−2m}`.
/// The added dissipation is of order `p + 1` in the interior, so `D±`
/// keep the accuracy of `D₁`.
pub fn build_bounded_upwind(grid: &Grid, p: usize) -> Result<UpwindOperatorPair> {
    let r = closure_rows(p)?;
    let m_diff = p / 2 + 1;
    let rows = r.max(m_diff);
    let reach = m_diff;
    require_bounded(grid, 2 * (rows + reach), p)?;
    let central = build_bounded_central_d1(grid, p)?;
    let n_t = template_size(rows, reach);
    let (q, m) = central_template(p, n_t)?;
    let sigma = 2f64.powi(1 - 2 * m_diff as i32);
    let s = difference_gram(m_diff, n_t) * (-sigma);
    let plus = DMatrix::from_fn(n_t, n_t, |i, j| (q[(i, j)] + s[(i, j)]) / m[i]);
    let minus = DMatrix::from_fn(n_t, n_t, |i, j| (q[(i, j)] - s[(i, j)]) / m[i]);
    Ok(UpwindOperatorPair {
        plus: assemble(grid, OperatorKind::BoundedUpwindPlus, p, &plus, &m[..r], rows, reach)?,
        minus: assemble(grid, OperatorKind::BoundedUpwindMinus, p, &minus, &m[..r], rows, reach)?,
        central,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind;

    fn grid(n: usize) -> Grid {
        Grid::uniform(-1.0, 1.0, n, BoundaryKind::Bounded).unwrap()
    }

    #[test]
    fn second_order_matches_textbook_matrices() {
        let g = grid(9);
        let d = build_bounded_central_d1(&g, 2).unwrap();
        let a = d.to_csr().to_dense() * g.dx();
        assert_eq!(a[(0, 0)], -1.0);
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(4, 3)], -0.5);
        assert_eq!(a[(4, 5)], 0.5);
        assert_eq!(a[(8, 7)], -1.0);
        assert_eq!(a[(8, 8)], 1.0);
        let m = d.mass().diagonal();
        assert_eq!(m[0], 0.5 * g.dx());
        assert_eq!(m[8], 0.5 * g.dx());
        assert_eq!(m[3], g.dx());
    }

    #[test]
    fn fourth_order_weights_are_the_classical_ones() {
        let (w, _) = central_closure(4).unwrap();
        let expect = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn sixth_order_weights() {
        let (w, _) = central_closure(6).unwrap();
        let expect = [
            13649.0 / 43200.0,
            12013.0 / 8640.0,
            2711.0 / 4320.0,
            5359.0 / 4320.0,
            7877.0 / 8640.0,
            43801.0 / 43200.0,
        ];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn monomials_are_differentiated_exactly() {
        for p in [2, 4, 6] {
            let g = grid(41);
            let ops = [
                build_bounded_central_d1(&g, p).unwrap(),
                build_bounded_upwind(&g, p).unwrap().plus,
                build_bounded_upwind(&g, p).unwrap().minus,
            ];
            for d in &ops {
                let rows = match &d.layout {
                    Layout::Bounded { left, .. } => left.len(),
                    _ => unreachable!(),
                };
                for k in 0..=p {
                    let u = g.sample(|x| x.powi(k as i32));
                    let du = d.apply(&u).unwrap();
                    for (i, (&x, di)) in g.nodes().iter().zip(&du).enumerate() {
                        let boundary = i < rows || i >= g.len() - rows;
                        if boundary && k > p / 2 {
                            continue;
                        }
                        let exact = if k == 0 { 0.0 } else { k as f64 * x.powi(k as i32 - 1) };
                        assert!(
                            (di - exact).abs() < 1e-10,
                            "{:?} p={p} k={k} row {i}: {di} vs {exact}",
                            d.kind()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn closures_mirror() {
        let g = grid(30);
        let d = build_bounded_central_d1(&g, 4).unwrap().to_csr().to_dense();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                assert!((d[(n - 1 - i, n - 1 - j)] + d[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn telescoping_sum() {
        let g = grid(37);
        let u = g.sample(|x| (3.0 * x).sin() + x * x);
        for p in [2, 4, 6] {
            let d = build_bounded_central_d1(&g, p).unwrap();
            let lhs = d.mass().integral(&d.apply(&u).unwrap()).unwrap();
            assert!((lhs - (u[36] - u[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn small_grids_and_wrong_kinds_are_rejected() {
        assert!(build_bounded_central_d1(&grid(10), 6).is_err());
        assert!(build_bounded_central_d1(&grid(40), 8).is_err());
        let periodic = Grid::uniform(0.0, 1.0, 40, BoundaryKind::Periodic).unwrap();
        assert!(build_bounded_central_d1(&periodic, 2).is_err());
        assert!(build_bounded_upwind(&periodic, 2).is_err());
    }
}
