//! Curve fits and feature extraction: exponential decays, Lorentzian peaks,
//! numerical linewidths and power-law scaling.

pub mod gauss_newton;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::domain::{argmax, DecayTrace, Spectrum};
use crate::error::{Error, Result};
pub use gauss_newton::{gauss_newton, GaussNewtonOptions, GaussNewtonSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    fn new(names: &[&str], values: &[f64], stderr: &[f64], residual_norm: f64, iterations: usize) -> Self {
        FitResult {
            parameters: names
                .iter()
                .zip(values)
                .zip(stderr)
                .map(|((n, v), e)| FitParameter {
                    name: n.to_string(),
                    value: *v,
                    stderr: e.abs(),
                })
                .collect(),
            residual_norm,
            converged: true,
            iterations,
        }
    }

    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics if the fit has no such parameter.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("fit has no parameter `{name}`"))
            .value
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "converged after {} iterations, residual norm {:.6e}\n",
            self.iterations, self.residual_norm
        );
        for p in &self.parameters {
            let _ = writeln!(s, "  {:<14} {:>16.8e} ± {:.3e}", p.name, p.value, p.stderr);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    /// Height above the baseline at the centre.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakModel {
    pub peaks: Vec<Peak>,
    pub baseline: f64,
}

impl PeakModel {
    pub fn eval(&self, x: f64) -> f64 {
        self.baseline
            + self
                .peaks
                .iter()
                .map(|p| p.amplitude * lorentz_profile(x, p.center_nm, p.fwhm_nm))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakFit {
    /// Peaks sorted by centre.
    pub model: PeakModel,
    pub fit: FitResult,
    /// Signs that more peaks were requested than the data resolve.
    pub warnings: Vec<String>,
}

/// Unit-height Lorentzian.
fn lorentz_profile(x: f64, c: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    h * h / ((x - c) * (x - c) + h * h)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of the outer 5 % of samples on each side (at least one each).
pub fn wing_baseline(values: &[f64]) -> f64 {
    let n = values.len();
    let k = ((n as f64 * 0.05).round() as usize).max(1).min(n / 2).max(1);
    let mut wings: Vec<f64> = values[..k.min(n)]
        .iter()
        .chain(&values[n.saturating_sub(k)..])
        .copied()
        .collect();
    median(&mut wings)
}

/// Full width at half of `(max − baseline)`, crossings found by linear
/// interpolation. The baseline is the median of the outer 10 % of the grid.
pub fn numerical_fwhm(spectrum: &Spectrum) -> Result<f64> {
    let x = spectrum.wavelength_nm();
    let y = spectrum.intensity();
    if y.len() < 3 {
        return Err(Error::UnboundedLine);
    }
    let base = wing_baseline(y);
    let ip = argmax(y).ok_or(Error::UnboundedLine)?;
    if !(y[ip] > base) {
        return Err(Error::NoPeak("maximum does not rise above the baseline".into()));
    }
    let half = base + 0.5 * (y[ip] - base);
    let left = (0..ip).rev().find(|&i| y[i] < half).ok_or(Error::UnboundedLine)?;
    let right = (ip + 1..y.len()).find(|&i| y[i] < half).ok_or(Error::UnboundedLine)?;
    let cross = |i: usize, k: usize| x[i] + (half - y[i]) * (x[k] - x[i]) / (y[k] - y[i]);
    Ok(cross(right - 1, right) - cross(left, left + 1))
}

/// Least-squares fit of `A·exp(−(t − t₀)/τ) + B` over `window`, where `t₀` is
/// the window start (so `A` is the amplitude there).
///
/// Without a window the fit runs over `[t_peak, t_peak + 5·τ_guess]`, with
/// `τ_guess` the time the trace takes to fall from its peak to `1/e` of it.
pub fn fit_single_exponential(trace: &DecayTrace, window: Option<(f64, f64)>) -> Result<FitResult> {
    let t = trace.time_ns();
    let y = trace.counts();
    let ip = trace.peak_index().ok_or_else(|| Error::NoDecay("empty trace".into()))?;
    let (lo_y, hi_y) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(hi_y > lo_y) {
        return Err(Error::NoDecay("all counts are equal".into()));
    }
    let (w0, w1) = match window {
        Some((a, b)) => {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::invalid("fit window must satisfy start < end"));
            }
            (a, b)
        }
        None => {
            let target = y[ip] / std::f64::consts::E;
            let fall = (ip..y.len()).find(|&i| y[i] < target);
            match fall {
                Some(i) => (t[ip], t[ip] + 5.0 * (t[i] - t[ip])),
                None => (t[ip], t[t.len() - 1]),
            }
        }
    };
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= w0 - 1e-12 && t[i] <= w1 + 1e-12).collect();
    if idx.len() < 10 {
        return Err(Error::invalid(format!(
            "fit window [{w0}, {w1}] ns holds {} points, need at least 10",
            idx.len()
        )));
    }
    let t0 = t[idx[0]];
    let ts: Vec<f64> = idx.iter().map(|&i| t[i] - t0).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let (wmin, wmax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(wmax > wmin) {
        return Err(Error::NoDecay("counts are constant inside the fit window".into()));
    }

    // log-linear start on the upper part of the baseline-subtracted data
    let b0 = wmin;
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(&ys)
        .filter(|(_, v)| **v - b0 > 0.1 * (wmax - b0))
        .map(|(t, v)| (*t, (v - b0).ln()))
        .collect();
    let (slope, intercept) = linear_regression(&pts).ok_or_else(|| Error::NoDecay("too few points above baseline".into()))?.0;
    if !(slope < 0.0) {
        return Err(Error::NoDecay("counts do not decrease inside the window".into()));
    }
    let x0 = DVector::from_vec(vec![intercept.exp(), -1.0 / slope, b0]);

    let m = ts.len();
    let model = |p: &DVector<f64>| {
        let (a, tau, b) = (p[0], p[1], p[2]);
        if !(tau > 0.0) {
            return None;
        }
        let mut r = DVector::zeros(m);
        let mut j = DMatrix::zeros(m, 3);
        for i in 0..m {
            let e = (-ts[i] / tau).exp();
            r[i] = a * e + b - ys[i];
            j[(i, 0)] = e;
            j[(i, 1)] = a * e * ts[i] / (tau * tau);
            j[(i, 2)] = 1.0;
        }
        Some((r, j))
    };
    let sol = gauss_newton(model, x0, &GaussNewtonOptions::default())?;
    if !(sol.params[0] > 0.0) {
        return Err(Error::NoDecay("fitted amplitude is not positive".into()));
    }
    let se = sol.stderr();
    Ok(FitResult::new(
        &["tau_ns", "amplitude", "baseline"],
        &[sol.params[1], sol.params[0], sol.params[2]],
        &[se[1], se[0], se[2]],
        sol.residual_norm,
        sol.iterations,
    ))
}

/// OLS line through `(x, y)`; returns `((slope, intercept), (se_slope, se_intercept))`.
fn linear_regression(pts: &[(f64, f64)]) -> Option<((f64, f64), (f64, f64))> {
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (se_s, se_i) = if n > 2 {
        let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        let s2 = ssr / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Some(((slope, intercept), (se_s, se_i)))
}

/// `I = prefactor·Φ^exponent` by least squares on `(ln Φ, ln I)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::invalid("power-law fit needs at least 2 points"));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!(
            "power-law fit needs positive values, got ({}, {})",
            p.0, p.1
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let ((slope, intercept), (se_s, se_i)) = linear_regression(&logs)
        .ok_or_else(|| Error::Domain("power-law fit needs at least two distinct fluences".into()))?;
    let ssr: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let prefactor = intercept.exp();
    Ok(FitResult::new(
        &["exponent", "prefactor"],
        &[slope, prefactor],
        &[se_s, prefactor * se_i],
        ssr.sqrt(),
        1,
    ))
}

/// Mean of the linearly interpolated trace over `[t_peak, t_peak + window]`.
pub fn transient_initial_intensity(trace: &DecayTrace, window_ns: f64) -> Result<f64> {
    if !(window_ns.is_finite() && window_ns > 0.0) {
        return Err(Error::invalid("transient window must be positive"));
    }
    let t = trace.time_ns();
    let y = trace.counts();
    let ip = trace.peak_index().ok_or_else(|| Error::invalid("empty trace"))?;
    let (a, b) = (t[ip], t[ip] + window_ns);
    let end = t[t.len() - 1];
    if b > end + 1e-12 {
        return Err(Error::OutOfRange {
            what: "transient window end (ns)".into(),
            value: b,
            min: t[0],
            max: end,
        });
    }
    let interp = |x: f64| -> f64 {
        let k = t.partition_point(|v| *v <= x).clamp(1, t.len() - 1);
        let (t0, t1) = (t[k - 1], t[k]);
        y[k - 1] + (x - t0) * (y[k] - y[k - 1]) / (t1 - t0)
    };
    // trapezoid over the grid nodes inside (a, b) plus both ends
    let mut xs = vec![a];
    xs.extend(t.iter().copied().filter(|v| *v > a && *v < b));
    xs.push(b.min(end));
    let area: f64 = xs
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (interp(w[0]) + interp(w[1])))
        .sum();
    Ok(area / window_ns)
}

/// Multi-Lorentzian fit with a constant baseline. Peaks are seeded one at a
/// time at the highest point of the remaining residual.
pub fn fit_peaks(spectrum: &Spectrum, n_peaks: usize) -> Result<PeakFit> {
    if n_peaks == 0 {
        return Err(Error::invalid("n_peaks must be >= 1"));
    }
    let x = spectrum.wavelength_nm();
    let y = spectrum.intensity();
    let m = x.len();
    if m < 3 * n_peaks + 2 {
        return Err(Error::invalid("spectrum has too few samples for the requested peaks"));
    }
    let base = wing_baseline(y);
    let ymax = y.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    let span = ymax - y.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if !(ymax - base > 1e-12 * ymax.abs().max(1e-300)) || !(span > 0.0) {
        return Err(Error::NoPeak("spectrum is flat".into()));
    }
    let min_step = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    let mut resid: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mut seeds: Vec<Peak> = Vec::new();
    for k in 0..n_peaks {
        let ip = argmax(&resid).unwrap_or(0);
        let amp = resid[ip];
        if !(amp > 0.0) {
            return Err(Error::NoPeak(format!(
                "only {k} resolvable features for {n_peaks} requested peaks"
            )));
        }
        let half = 0.5 * amp;
        let left = (0..ip).rev().find(|&i| resid[i] < half);
        let right = (ip + 1..m).find(|&i| resid[i] < half);
        let width = match (left, right) {
            (Some(l), Some(r)) => x[r] - x[l],
            (Some(l), None) => 2.0 * (x[ip] - x[l]),
            (None, Some(r)) => 2.0 * (x[r] - x[ip]),
            (None, None) => 0.1 * (x[m - 1] - x[0]),
        }
        .max(2.0 * min_step);
        let p = Peak {
            center_nm: x[ip],
            fwhm_nm: width,
            amplitude: amp,
        };
        for (r, xi) in resid.iter_mut().zip(x) {
            *r -= p.amplitude * lorentz_profile(*xi, p.center_nm, p.fwhm_nm);
        }
        seeds.push(p);
    }

    // Parameters scaled to O(1): centres relative to the first sample in units
    // of the spectral span, intensities in units of the data range.
    let x_ref = x[0];
    let x_scale = x[m - 1] - x[0];
    let y_scale = span;
    let np = 3 * n_peaks + 1;
    let mut x0 = DVector::zeros(np);
    for (k, p) in seeds.iter().enumerate() {
        x0[3 * k] = (p.center_nm - x_ref) / x_scale;
        x0[3 * k + 1] = p.fwhm_nm / x_scale;
        x0[3 * k + 2] = p.amplitude / y_scale;
    }
    x0[np - 1] = base / y_scale;
    let u: Vec<f64> = x.iter().map(|v| (v - x_ref) / x_scale).collect();
    let ys: Vec<f64> = y.iter().map(|v| v / y_scale).collect();

    let model = |p: &DVector<f64>| {
        let mut r = DVector::from_element(m, p[np - 1]);
        let mut j = DMatrix::zeros(m, np);
        for k in 0..n_peaks {
            let (c, w, a) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            if !(w > 0.0) {
                return None;
            }
            let h = 0.5 * w;
            for i in 0..m {
                let d = u[i] - c;
                let den = d * d + h * h;
                let l = h * h / den;
                r[i] += a * l;
                j[(i, 3 * k)] = a * 2.0 * d * h * h / (den * den);
                j[(i, 3 * k + 1)] = a * h * d * d / (den * den);
                j[(i, 3 * k + 2)] = l;
            }
        }
        for i in 0..m {
            r[i] -= ys[i];
            j[(i, np - 1)] = 1.0;
        }
        Some((r, j))
    };
    let sol = gauss_newton(model, x0, &GaussNewtonOptions::default())?;
    let se = sol.stderr();

    let mut order: Vec<usize> = (0..n_peaks).collect();
    order.sort_by(|&a, &b| sol.params[3 * a].total_cmp(&sol.params[3 * b]));
    let mut peaks = Vec::with_capacity(n_peaks);
    let mut names: Vec<String> = Vec::with_capacity(np);
    let mut values = Vec::with_capacity(np);
    let mut errors = Vec::with_capacity(np);
    for (rank, &k) in order.iter().enumerate() {
        let peak = Peak {
            center_nm: x_ref + sol.params[3 * k] * x_scale,
            fwhm_nm: sol.params[3 * k + 1].abs() * x_scale,
            amplitude: sol.params[3 * k + 2] * y_scale,
        };
        for (suffix, v, e) in [
            ("center_nm", peak.center_nm, se[3 * k] * x_scale),
            ("fwhm_nm", peak.fwhm_nm, se[3 * k + 1] * x_scale),
            ("amplitude", peak.amplitude, se[3 * k + 2] * y_scale),
        ] {
            names.push(format!("peak{}.{suffix}", rank + 1));
            values.push(v);
            errors.push(e);
        }
        peaks.push(peak);
    }
    let baseline = sol.params[np - 1] * y_scale;
    names.push("baseline".into());
    values.push(baseline);
    errors.push(se[np - 1] * y_scale);

    let mut warnings = Vec::new();
    for w in peaks.windows(2) {
        if w[1].center_nm - w[0].center_nm < 0.25 * w[0].fwhm_nm.min(w[1].fwhm_nm) {
            warnings.push(format!(
                "peaks at {:.4} and {:.4} nm are not resolved from each other",
                w[0].center_nm, w[1].center_nm
            ));
        }
    }
    for p in &peaks {
        if p.amplitude <= 1e-6 * ymax {
            warnings.push(format!("peak at {:.4} nm has negligible amplitude", p.center_nm));
        }
        if p.center_nm < x[0] || p.center_nm > x[m - 1] {
            warnings.push(format!("peak at {:.4} nm lies outside the data", p.center_nm));
        }
    }

    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(PeakFit {
        model: PeakModel { peaks, baseline },
        fit: FitResult::new(&name_refs, &values, &errors, sol.residual_norm * y_scale, sol.iterations),
        warnings,
    })
}
