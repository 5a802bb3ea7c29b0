//! Uniform one-dimensional grids, diagonal quadrature and the two-field state.

use crate::error::{check_len, Error, Result};

/// Boundary treatment of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `x_max` is identified with `x_min` and is not a node.
    Periodic,
    /// Both endpoints are nodes.
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    dx: f64,
    bc: BoundaryKind,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn uniform(x_min: f64, x_max: f64, n_nodes: usize, bc: BoundaryKind) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Config(format!("degenerate interval [{x_min}, {x_max}]")));
        }
        if n_nodes < 3 {
            return Err(Error::Config(format!("a grid needs at least 3 nodes, got {n_nodes}")));
        }
        let len = x_max - x_min;
        let (dx, nodes) = match bc {
            BoundaryKind::Periodic => {
                let dx = len / n_nodes as f64;
                (dx, (0..n_nodes).map(|i| x_min + i as f64 * dx).collect())
            }
            BoundaryKind::Bounded => {
                let dx = len / (n_nodes - 1) as f64;
                let mut nodes: Vec<f64> = (0..n_nodes).map(|i| x_min + i as f64 * dx).collect();
                nodes[n_nodes - 1] = x_max;
                (dx, nodes)
            }
        };
        Ok(Self {
            x_min,
            x_max,
            dx,
            bc,
            nodes,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.bc
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == BoundaryKind::Periodic
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Length of the domain.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// Diagonal quadrature (norm) matrix of an SBP operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    weights: Vec<f64>,
}

impl MassMatrix {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("mass matrix weight {w} is not positive")));
        }
        Ok(Self { weights })
    }

    /// `M = dx * I`, the weights of every periodic operator on a uniform grid.
    pub fn uniform(n: usize, dx: f64) -> Self {
        Self { weights: vec![dx; n] }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest weight, i.e. the spectral norm of `M`.
    pub fn norm(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, &w| m.max(w))
    }

    /// `1ᵀ M u`
    pub fn integral(&self, u: &[f64]) -> Result<f64> {
        check_len(self.len(), u.len())?;
        Ok(self.integral_unchecked(u))
    }

    /// `uᵀ M v`
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_len(self.len(), u.len())?;
        check_len(self.len(), v.len())?;
        Ok(self.inner_unchecked(u, v))
    }

    pub fn l2_norm(&self, u: &[f64]) -> Result<f64> {
        self.inner(u, u).map(f64::sqrt)
    }

    pub(crate) fn integral_unchecked(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, u)| w * u).sum()
    }

    pub(crate) fn inner_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (u, v))| w * (u * v))
            .sum()
    }
}

/// Free-function forms matching the usual notation.
pub fn integral(u: &[f64], mass: &MassMatrix) -> Result<f64> {
    mass.integral(u)
}

pub fn weighted_inner_product(u: &[f64], v: &[f64], mass: &MassMatrix) -> Result<f64> {
    mass.inner(u, v)
}

pub fn l2_norm(u: &[f64], mass: &MassMatrix) -> Result<f64> {
    mass.l2_norm(u)
}

pub fn linf_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Which pair of fields a [`State`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Total water height `η` and velocity `v`.
    Primitive,
    /// Water height `h` and discharge `P = h v`.
    Conservative,
}

/// Smallest water height accepted when dividing by `h`.
pub const H_FLOOR: f64 = 1e-12;

/// Two-field nodal solution stored contiguously as `[a; b]`.
///
/// Time integrators operate on the flat buffer; models read the two halves.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    data: Vec<f64>,
    repr: Representation,
}

impl State {
    pub fn new(field_a: Vec<f64>, field_b: Vec<f64>, repr: Representation) -> Result<Self> {
        check_len(field_a.len(), field_b.len())?;
        let mut data = field_a;
        data.extend_from_slice(&field_b);
        Ok(Self { data, repr })
    }

    pub fn primitive(eta: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Self::new(eta, v, Representation::Primitive)
    }

    pub fn zeros(n: usize, repr: Representation) -> Self {
        Self {
            data: vec![0.0; 2 * n],
            repr,
        }
    }

    /// Wraps a flat `[a; b]` buffer of even length.
    pub fn from_flat(data: Vec<f64>, repr: Representation) -> Result<Self> {
        if !data.len().is_multiple_of(2) {
            return Err(Error::Config(format!("flat state length {} is odd", data.len())));
        }
        Ok(Self { data, repr })
    }

    pub fn n(&self) -> usize {
        self.data.len() / 2
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn field_a(&self) -> &[f64] {
        &self.data[..self.n()]
    }

    pub fn field_b(&self) -> &[f64] {
        &self.data[self.n()..]
    }

    pub fn fields_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.n();
        self.data.split_at_mut(n)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// `(η, v) -> (h, P)` with `h = η + offset`, where `offset = D − η₀` nodewise.
    pub fn to_conservative(&self, depth_offset: &[f64]) -> Result<Self> {
        match self.repr {
            Representation::Conservative => Ok(self.clone()),
            Representation::Primitive => {
                check_len(self.n(), depth_offset.len())?;
                let h: Vec<f64> = self
                    .field_a()
                    .iter()
                    .zip(depth_offset)
                    .map(|(eta, d)| eta + d)
                    .collect();
                let p = h.iter().zip(self.field_b()).map(|(h, v)| h * v).collect();
                Self::new(h, p, Representation::Conservative)
            }
        }
    }

    /// `(h, P) -> (η, v)`; fails if any `h` is below [`H_FLOOR`].
    pub fn to_primitive(&self, depth_offset: &[f64]) -> Result<Self> {
        match self.repr {
            Representation::Primitive => Ok(self.clone()),
            Representation::Conservative => {
                check_len(self.n(), depth_offset.len())?;
                let (h, p) = (self.field_a(), self.field_b());
                if let Some(i) = h.iter().position(|&h| !(h > H_FLOOR)) {
                    return Err(Error::Domain(format!(
                        "water height {} at node {i} is not positive",
                        h[i]
                    )));
                }
                let eta = h.iter().zip(depth_offset).map(|(h, d)| h - d).collect();
                let v = h.iter().zip(p).map(|(h, p)| p / h).collect();
                Self::new(eta, v, Representation::Primitive)
            }
        }
    }
}
