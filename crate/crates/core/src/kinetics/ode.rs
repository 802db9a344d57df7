//! Classical RK4 with step-doubling error control and Richardson
//! extrapolation, for the small nonstiff systems of this crate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-12,
            initial_step: 1e-3,
            max_steps: 5_000_000,
        }
    }
}

fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], s: f64| {
        let mut o = *a;
        for i in 0..N {
            o[i] += s * k[i];
        }
        o
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    let mut o = *y;
    for i in 0..N {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each of the
/// increasing `t_out` (all ≥ `t0`).
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_out: &[f64],
    options: &OdeOptions,
) -> Result<Vec<[f64; N]>> {
    if t_out.first().is_some_and(|t| *t < t0) || t_out.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("output times must be increasing and >= t0"));
    }
    let mut out = Vec::with_capacity(t_out.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = options.initial_step;
    let mut steps = 0usize;

    for &target in t_out {
        while t < target {
            if steps >= options.max_steps {
                return Err(Error::Integration {
                    t,
                    message: format!("step limit {} reached", options.max_steps),
                });
            }
            steps += 1;
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            let full = rk4_step(&f, t, &y, hs);
            let mid = rk4_step(&f, t, &y, 0.5 * hs);
            let two = rk4_step(&f, t + 0.5 * hs, &mid, 0.5 * hs);
            let mut err = 0.0_f64;
            for i in 0..N {
                let scale = options.atol + options.rtol * y[i].abs().max(two[i].abs());
                err = err.max((two[i] - full[i]).abs() / 15.0 / scale);
            }
            if !err.is_finite() || two.iter().chain(&full).any(|v| !v.is_finite()) {
                return Err(Error::Integration {
                    t,
                    message: "non-finite state".into(),
                });
            }
            if err <= 1.0 {
                for i in 0..N {
                    y[i] = two[i] + (two[i] - full[i]) / 15.0;
                }
                t = if last { target } else { t + hs };
                let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 4.0 };
                if !last {
                    h = hs * grow.clamp(0.2, 4.0);
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).max(0.1);
                if h <= f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        message: format!("step size underflow (error ratio {err:.3e})"),
                    });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let ts: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let ys = integrate(|_, y: &[f64; 1]| [-0.7 * y[0]], 0.0, [1.0], &ts, &OdeOptions::default()).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            let exact = (-0.7 * t).exp();
            assert!((y[0] - exact).abs() <= 1e-8 * exact + 1e-11, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_keeps_phase() {
        let ts = [2.0 * std::f64::consts::PI * 5.0];
        let ys = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            &ts,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((ys[0][0] - 1.0).abs() < 1e-7);
        assert!(ys[0][1].abs() < 1e-7);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[2.0], &OdeOptions::default());
        assert!(matches!(r, Err(Error::Integration { .. })), "{r:?}");
    }
}
