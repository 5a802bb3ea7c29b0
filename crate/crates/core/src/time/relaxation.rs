use super::Functional;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationMode {
    /// `J(u + γΔu) = J(u)`.
    Conservative,
    /// `J(u + γΔu) = J(u) + γ e` with `e` the stage estimate of the change of `J`.
    Dissipative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationConfig {
    pub mode: RelaxationMode,
    /// Tolerance on `|r(γ)|`, relative to `max(1, |J(u)|)`.
    pub tolerance: f64,
    /// The root is searched in `[1 − half_width, 1 + half_width]`.
    pub half_width: f64,
    pub max_iterations: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            mode: RelaxationMode::Conservative,
            tolerance: 1e-14,
            half_width: 1e-2,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOutcome {
    pub gamma: f64,
    pub iterations: usize,
    /// No sign change in the bracket; `γ = 1` was used.
    pub fallback: bool,
}

/// Solves `r(γ) = J(u + γΔu) − J(u) − γ·estimate = 0` near `γ = 1` by a
/// Newton iteration safeguarded with bisection.
pub fn relaxation_gamma(
    j: &dyn Functional,
    u: &[f64],
    du: &[f64],
    estimate: f64,
    cfg: &RelaxationConfig,
) -> RelaxationOutcome {
    let j0 = j.value(u);
    let mut trial = vec![0.0; u.len()];
    let mut grad = vec![0.0; u.len()];
    let mut eval = |gamma: f64, with_slope: bool| -> (f64, f64) {
        for ((t, a), d) in trial.iter_mut().zip(u).zip(du) {
            *t = a + gamma * d;
        }
        let r = j.value(&trial) - j0 - gamma * estimate;
        if !with_slope {
            return (r, f64::NAN);
        }
        j.gradient(&trial, &mut grad);
        let slope: f64 = grad.iter().zip(du).map(|(g, d)| g * d).sum::<f64>() - estimate;
        (r, slope)
    };
    let tol = cfg.tolerance * j0.abs().max(1.0);
    let (mut a, mut b) = (1.0 - cfg.half_width, 1.0 + cfg.half_width);
    let (ra, _) = eval(a, false);
    let (rb, _) = eval(b, false);
    let fallback = RelaxationOutcome {
        gamma: 1.0,
        iterations: 0,
        fallback: true,
    };
    if !(ra.is_finite() && rb.is_finite()) || ra.signum() == rb.signum() && ra != 0.0 && rb != 0.0 {
        return fallback;
    }
    let increasing = rb > ra;
    let mut x = 1.0;
    for it in 1..=cfg.max_iterations {
        let (r, slope) = eval(x, true);
        if r.abs() <= tol || r == 0.0 {
            // One more Newton correction, free of charge, leaves only rounding in r.
            let polished = x - r / slope;
            return RelaxationOutcome {
                gamma: if r != 0.0 && polished > a && polished < b {
                    polished
                } else {
                    x
                },
                iterations: it,
                fallback: false,
            };
        }
        if (r > 0.0) == increasing {
            b = x;
        } else {
            a = x;
        }
        if b - a <= 4.0 * f64::EPSILON {
            return RelaxationOutcome {
                gamma: x,
                iterations: it,
                fallback: false,
            };
        }
        let newton = x - r / slope;
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    RelaxationOutcome {
        gamma: x,
        iterations: cfg.max_iterations,
        fallback: false,
    }
}
