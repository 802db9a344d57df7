//! Damped Gauss–Newton (Levenberg–Marquardt) for small dense problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub max_iterations: usize,
    /// Converged when every relative parameter step is below this.
    pub step_tolerance: f64,
    /// Converged when an accepted step lowers the cost by less than this
    /// fraction.
    pub cost_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        GaussNewtonOptions {
            max_iterations: 500,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-14,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonSolution {
    pub params: DVector<f64>,
    /// `‖r‖₂` at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    /// `σ²·(JᵀJ)⁻¹` with `σ² = ‖r‖² / (m − p)`; `None` if `JᵀJ` is singular.
    pub covariance: Option<DMatrix<f64>>,
}

impl GaussNewtonSolution {
    /// One-sigma parameter errors (zero when the covariance is unavailable).
    pub fn stderr(&self) -> Vec<f64> {
        match &self.covariance {
            Some(c) => (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
            None => vec![0.0; self.params.len()],
        }
    }
}

/// Minimises `‖r(x)‖²`.
///
/// `model` returns the residual vector and its Jacobian, or `None` when `x`
/// is outside the model's domain (the step is then rejected and the damping
/// raised).
pub fn gauss_newton<F>(
    model: F,
    x0: DVector<f64>,
    options: &GaussNewtonOptions,
) -> Result<GaussNewtonSolution>
where
    F: Fn(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let p = x0.len();
    let (mut r, mut j) = model(&x0)
        .ok_or_else(|| Error::invalid("initial parameters outside the model domain"))?;
    if r.len() < p {
        return Err(Error::invalid(format!(
            "{} residuals cannot determine {p} parameters",
            r.len()
        )));
    }
    let mut x = x0;
    let mut cost = r.norm_squared();
    let mut lambda = options.initial_damping;

    for iteration in 1..=options.max_iterations {
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * &r;
        let mut accepted = false;
        let mut converged = cost == 0.0;

        while !converged && lambda < 1e20 {
            let mut damped = a.clone();
            for i in 0..p {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial = &x + &step;
            match model(&trial) {
                Some((rt, jt_new)) if rt.norm_squared().is_finite() => {
                    let trial_cost = rt.norm_squared();
                    if trial_cost <= cost {
                        let small_step = step
                            .iter()
                            .zip(trial.iter())
                            .all(|(d, v)| d.abs() <= options.step_tolerance * (v.abs() + 1e-300));
                        let small_gain = cost - trial_cost <= options.cost_tolerance * cost;
                        x = trial;
                        r = rt;
                        j = jt_new;
                        cost = trial_cost;
                        lambda = (lambda / 10.0).max(1e-12);
                        accepted = true;
                        converged = small_step || small_gain || cost == 0.0;
                        break;
                    }
                    lambda *= 10.0;
                }
                _ => lambda *= 10.0,
            }
        }

        // No damping level improves the cost: the current point is a
        // minimum to working precision.
        if converged || !accepted {
            return Ok(finish(x, r, j, iteration));
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iterations,
        residual_norm: cost.sqrt(),
    })
}

fn finish(
    x: DVector<f64>,
    r: DVector<f64>,
    j: DMatrix<f64>,
    iterations: usize,
) -> GaussNewtonSolution {
    let m = r.len();
    let p = x.len();
    let cost = r.norm_squared();
    let sigma2 = if m > p { cost / (m - p) as f64 } else { 0.0 };
    let covariance = (j.transpose() * &j)
        .try_inverse()
        .map(|inv| inv * sigma2);
    GaussNewtonSolution {
        params: x,
        residual_norm: cost.sqrt(),
        iterations,
        covariance,
    }
}
