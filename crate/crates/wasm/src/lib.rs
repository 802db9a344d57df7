//! Browser bindings: ensemble spectra, two-line composition and PL decay.

use wasm_bindgen::prelude::*;

use defect_spectra::ensemble::{
    sample, synthesize_lines, synthesize_spectrum, wavelength_offsets, SamplerMode, SamplerSpec,
    WavelengthGrid,
};
use defect_spectra::fitting::{fit_single_exponential, numerical_fwhm};
use defect_spectra::kinetics::{decompose_lifetimes, simulate_decay, DecayModelParams};
use defect_spectra::zplmap::ZplResponseTable;
use defect_spectra::{EmitterConfig, Spectrum};

fn js_err(e: defect_spectra::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    fwhm_nm: f64,
    retention: f64,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// NaN when the line is not bounded on the grid.
    #[wasm_bindgen(getter)]
    pub fn fwhm_nm(&self) -> f64 {
        self.fwhm_nm
    }

    #[wasm_bindgen(getter)]
    pub fn retention(&self) -> f64 {
        self.retention
    }
}

fn emitter(fwhm_nm: f64) -> Result<EmitterConfig, JsError> {
    let e = EmitterConfig {
        homogeneous_fwhm_nm: fwhm_nm,
        ..EmitterConfig::default()
    };
    e.validate().map_err(js_err)?;
    Ok(e)
}

fn curve(s: Spectrum, retention: f64) -> Curve {
    let fwhm_nm = numerical_fwhm(&s).unwrap_or(f64::NAN);
    Curve {
        x: s.wavelength_nm().to_vec(),
        y: s.intensity().to_vec(),
        fwhm_nm,
        retention,
    }
}

/// Strain-broadened spectrum of `n_samples` emitters drawn with sampler
/// `mode` ("uniform" or "biased-z") from the placeholder response table.
#[wasm_bindgen]
pub fn ensemble_spectrum(
    mode: &str,
    n_samples: usize,
    strain_range: f64,
    fwhm_nm: f64,
    seed: u64,
) -> Result<Curve, JsError> {
    let mode: SamplerMode = mode.parse().map_err(js_err)?;
    if mode == SamplerMode::DefectField {
        return Err(JsError::new("defect-field mode is not available in the demo"));
    }
    let em = emitter(fwhm_nm)?;
    let spec = SamplerSpec {
        mode,
        n_samples,
        strain_range,
        seed,
        xy_threshold: SamplerSpec::default().xy_threshold.min(0.5 * strain_range),
        ..SamplerSpec::default()
    };
    let ens = sample(&spec, &ZplResponseTable::placeholder(), None).map_err(js_err)?;
    let max = wavelength_offsets(&ens, &em)
        .map_err(js_err)?
        .iter()
        .fold(0.0_f64, |m, o| m.max(o.abs()));
    // keep the grid near 4000 points
    let half = max + 10.0 * fwhm_nm;
    let step = (half / 2000.0).min(fwhm_nm / 5.0);
    let grid = WavelengthGrid::covering(&em, max, step);
    let s = synthesize_spectrum(&ens, &em, &grid).map_err(js_err)?;
    Ok(curve(s, ens.retention_fraction()))
}

/// Two equal lines at `±half_split_nm` around the ZPL.
#[wasm_bindgen]
pub fn two_line_spectrum(half_split_nm: f64, fwhm_nm: f64) -> Result<Curve, JsError> {
    let em = emitter(fwhm_nm)?;
    let d = half_split_nm.abs();
    let grid = WavelengthGrid::covering(&em, d, fwhm_nm / 100.0);
    let s = synthesize_lines(&[(-d, 1.0), (d, 1.0)], &em, &grid).map_err(js_err)?;
    Ok(curve(s, 1.0))
}

#[wasm_bindgen]
pub struct Decay {
    time_ns: Vec<f64>,
    counts: Vec<f64>,
    tau_eff_ns: f64,
    tau_nr_ns: f64,
    qe: f64,
}

#[wasm_bindgen]
impl Decay {
    #[wasm_bindgen(getter)]
    pub fn time_ns(&self) -> Vec<f64> {
        self.time_ns.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn counts(&self) -> Vec<f64> {
        self.counts.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn tau_eff_ns(&self) -> f64 {
        self.tau_eff_ns
    }

    #[wasm_bindgen(getter)]
    pub fn tau_nr_ns(&self) -> f64 {
        self.tau_nr_ns
    }

    #[wasm_bindgen(getter)]
    pub fn qe(&self) -> f64 {
        self.qe
    }
}

/// PL decay after a pump pulse, with its single-exponential fit.
#[wasm_bindgen]
pub fn pl_decay(trap_density_cm3: f64, pump_mw: f64, tau_r_ns: f64) -> Result<Decay, JsError> {
    let p = DecayModelParams {
        trap_density_cm3,
        pump_mw,
        tau_r_ns,
        ..DecayModelParams::default()
    };
    let sim = simulate_decay(&p).map_err(js_err)?;
    let fit = fit_single_exponential(&sim.trace, None).map_err(js_err)?;
    let tau = fit.value("tau_ns");
    let lt = decompose_lifetimes(tau.min(tau_r_ns), tau_r_ns).map_err(js_err)?;
    Ok(Decay {
        time_ns: sim.trace.time_ns().to_vec(),
        counts: sim.trace.counts().to_vec(),
        tau_eff_ns: tau,
        tau_nr_ns: lt.tau_nr_ns,
        qe: lt.qe,
    })
}
