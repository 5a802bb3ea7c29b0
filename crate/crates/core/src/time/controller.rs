/// Weighted RMS norm of an error estimate.
pub fn error_norm(u: &[f64], u_new: &[f64], err: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = u
        .iter()
        .zip(u_new)
        .zip(err)
        .map(|((a, b), e)| {
            let w = abs_tol + rel_tol * a.abs().max(b.abs());
            (e / w).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    pub accept: bool,
    pub dt_next: f64,
}

/// Proportional-integral step size controller for a 5(4) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub beta1: f64,
    pub beta2: f64,
    err_prev: f64,
}

impl Default for PiController {
    fn default() -> Self {
        Self {
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 5.0,
            beta1: 0.7 / 5.0,
            beta2: 0.4 / 5.0,
            err_prev: 1.0,
        }
    }
}

impl PiController {
    /// Accepts iff `err ≤ 1` and proposes the next step size.
    pub fn propose(&mut self, err: f64, dt: f64) -> StepDecision {
        if !err.is_finite() {
            return StepDecision {
                accept: false,
                dt_next: dt * self.fac_min,
            };
        }
        if err <= 1.0 {
            let fac = if err == 0.0 {
                self.fac_max
            } else {
                self.safety * err.powf(-self.beta1) * self.err_prev.powf(self.beta2)
            };
            self.err_prev = err.max(1e-4);
            StepDecision {
                accept: true,
                dt_next: dt * fac.clamp(self.fac_min, self.fac_max),
            }
        } else {
            let fac = self.safety * err.powf(-self.beta1);
            StepDecision {
                accept: false,
                dt_next: dt * fac.clamp(self.fac_min, 1.0),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_grows_by_the_cap() {
        let mut c = PiController::default();
        let d = c.propose(0.0, 0.1);
        assert!(d.accept);
        assert!((d.dt_next - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_error_keeps_dt() {
        let mut c = PiController::default();
        let d = c.propose(1.0, 0.1);
        assert!(d.accept);
        assert!((d.dt_next / 0.1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn large_error_rejects_and_shrinks() {
        let mut c = PiController::default();
        let d = c.propose(50.0, 0.1);
        assert!(!d.accept);
        assert!(d.dt_next < 0.1 && d.dt_next >= 0.02);
        assert!(!c.propose(f64::NAN, 0.1).accept);
    }

    #[test]
    fn weighted_norm() {
        let e = error_norm(&[1.0, 1.0], &[1.0, 1.0], &[2e-6, 2e-6], 1e-6, 1e-6);
        assert!((e - 1.0).abs() < 1e-12);
    }
}
