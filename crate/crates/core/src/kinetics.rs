//! Rate-equation models: PL decay of an optically pumped G-center ensemble,
//! and G-center formation and trap accumulation under irradiation.
//!
//! Decay model, per unit volume after a pump pulse creating `n₀` carriers:
//!
//! ```text
//! k_T(m) = c_T·N_T / (1 + m/N_sat)          saturable trap capture rate
//! dn/dt  = −(c_G·N_G + k_T(m))·n            free carriers
//! dm/dt  =  k_T(m)·n                        filled traps
//! dX/dt  =  c_G·N_G·n − X/τ_r − k_T(m)·X    excited G-centers
//! ```
//!
//! The detected signal is the radiative rate `X/τ_r`. In the linear regime
//! (`m ≪ N_sat`) the tail decays with `1/τ_eff = 1/τ_r + c_T·N_T`.

pub mod damage;
pub mod ode;

use crate::domain::DecayTrace;
use crate::error::{Error, Result};
pub use damage::{
    integrate_damage, sweep_fluence, DamageHistory, DamageParams, DamagePoint,
    IrradiationSchedule, IrradiationSegment, SweepRow,
};
use ode::{integrate, OdeOptions};
use rand_distr::{Distribution, Poisson};

use crate::rng::{streams, SeededRng};

/// Radiative and nonradiative lifetimes with `1/τ_eff = 1/τ_r + 1/τ_nr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeSet {
    pub tau_r_ns: f64,
    /// `f64::INFINITY` when there is no nonradiative channel.
    pub tau_nr_ns: f64,
    pub tau_eff_ns: f64,
    /// `τ_eff / τ_r`.
    pub qe: f64,
}

impl LifetimeSet {
    pub fn from_channels(tau_r_ns: f64, tau_nr_ns: f64) -> Result<Self> {
        if !(tau_r_ns.is_finite() && tau_r_ns > 0.0) || !(tau_nr_ns > 0.0) {
            return Err(Error::invalid("lifetimes must be positive"));
        }
        let tau_eff_ns = 1.0 / (1.0 / tau_r_ns + 1.0 / tau_nr_ns);
        Ok(LifetimeSet {
            tau_r_ns,
            tau_nr_ns,
            tau_eff_ns,
            qe: tau_eff_ns / tau_r_ns,
        })
    }
}

pub fn decompose_lifetimes(tau_eff_ns: f64, tau_r_ns: f64) -> Result<LifetimeSet> {
    if !(tau_eff_ns.is_finite() && tau_eff_ns > 0.0 && tau_r_ns.is_finite() && tau_r_ns > 0.0) {
        return Err(Error::invalid("lifetimes must be finite and positive"));
    }
    if tau_eff_ns > tau_r_ns {
        return Err(Error::Inconsistent(format!(
            "tau_eff = {tau_eff_ns} ns exceeds tau_r = {tau_r_ns} ns"
        )));
    }
    let rate_nr = 1.0 / tau_eff_ns - 1.0 / tau_r_ns;
    let tau_nr_ns = if rate_nr > 0.0 { 1.0 / rate_nr } else { f64::INFINITY };
    Ok(LifetimeSet {
        tau_r_ns,
        tau_nr_ns,
        tau_eff_ns,
        qe: tau_eff_ns / tau_r_ns,
    })
}

/// PL figures of merit of a G-center population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlProxy {
    /// `n_G·qe`.
    pub integrated_intensity: f64,
    /// `n_G/τ_r`.
    pub transient_initial_intensity: f64,
}

pub fn pl_proxy(n_g: f64, lifetimes: &LifetimeSet) -> Result<PlProxy> {
    if !(n_g.is_finite() && n_g >= 0.0) {
        return Err(Error::invalid("n_G must be finite and >= 0"));
    }
    Ok(PlProxy {
        integrated_intensity: n_g * lifetimes.qe,
        transient_initial_intensity: n_g / lifetimes.tau_r_ns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModelParams {
    pub tau_r_ns: f64,
    pub g_density_cm3: f64,
    pub trap_density_cm3: f64,
    /// cm³/ns; `f64::INFINITY` for instantaneous capture.
    pub capture_coefficient_g: f64,
    /// cm³/ns.
    pub capture_coefficient_trap: f64,
    /// `f64::INFINITY` disables saturation.
    pub trap_saturation_density_cm3: f64,
    pub pump_mw: f64,
    /// Carriers per cm³ generated per mW of pump.
    pub carriers_per_mw_cm3: f64,
    pub t_end_ns: f64,
    pub dt_ns: f64,
    pub rtol: f64,
}

impl Default for DecayModelParams {
    fn default() -> Self {
        DecayModelParams {
            tau_r_ns: 45.0,
            g_density_cm3: 1e15,
            trap_density_cm3: 1.1e17,
            capture_coefficient_g: 1e-15,
            capture_coefficient_trap: 1e-18,
            trap_saturation_density_cm3: 1e16,
            pump_mw: 0.3,
            carriers_per_mw_cm3: 2e16,
            t_end_ns: 150.0,
            dt_ns: 0.02,
            rtol: 1e-8,
        }
    }
}

impl DecayModelParams {
    pub fn initial_carriers_cm3(&self) -> f64 {
        self.pump_mw * self.carriers_per_mw_cm3
    }

    fn g_capture_rate(&self) -> Option<f64> {
        if self.g_density_cm3 == 0.0 {
            Some(0.0)
        } else if self.capture_coefficient_g.is_infinite() {
            None
        } else {
            Some(self.capture_coefficient_g * self.g_density_cm3)
        }
    }

    /// Trap capture and quench rate with empty traps, 1/ns.
    pub fn linear_trap_rate(&self) -> f64 {
        self.capture_coefficient_trap * self.trap_density_cm3
    }

    /// Linear-regime effective lifetime `1/(1/τ_r + c_T·N_T)`.
    pub fn linear_tau_eff_ns(&self) -> f64 {
        1.0 / (1.0 / self.tau_r_ns + self.linear_trap_rate())
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let n = (self.t_end_ns / self.dt_ns).round() as usize;
        (0..=n).map(|i| i as f64 * self.dt_ns).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("g_density_cm3", self.g_density_cm3),
            ("trap_density_cm3", self.trap_density_cm3),
            ("capture_coefficient_trap", self.capture_coefficient_trap),
            ("pump_mw", self.pump_mw),
            ("carriers_per_mw_cm3", self.carriers_per_mw_cm3),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.capture_coefficient_g >= 0.0) {
            return Err(Error::invalid("capture_coefficient_g must be >= 0"));
        }
        if !(self.trap_saturation_density_cm3 > 0.0) {
            return Err(Error::invalid("trap_saturation_density_cm3 must be > 0"));
        }
        for (name, v) in [
            ("tau_r_ns", self.tau_r_ns),
            ("t_end_ns", self.t_end_ns),
            ("dt_ns", self.dt_ns),
            ("rtol", self.rtol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0")));
            }
        }
        if self.dt_ns * 10.0 > self.t_end_ns {
            return Err(Error::invalid("time grid needs at least 10 steps"));
        }
        let mut shortest = self.tau_r_ns;
        let kt = self.linear_trap_rate();
        if kt > 0.0 {
            shortest = shortest.min(1.0 / kt);
        }
        if let Some(kg) = self.g_capture_rate() {
            if kg + kt > 0.0 {
                shortest = shortest.min(1.0 / (kg + kt));
            }
        }
        if self.dt_ns > shortest / 10.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "dt_ns = {} does not resolve the shortest time constant {shortest:.4} ns (need dt <= {:.4})",
                self.dt_ns,
                shortest / 10.0
            )));
        }
        Ok(())
    }
}

/// Where the generated excitations ended up by `t_end`, per cm³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationBudget {
    pub generated: f64,
    pub radiative: f64,
    /// Excited G-centers quenched by traps.
    pub quenched: f64,
    /// Free carriers captured by traps.
    pub trapped: f64,
    /// Free carriers and excited G-centers left at `t_end`.
    pub remaining: f64,
}

impl ExcitationBudget {
    pub fn accounted(&self) -> f64 {
        self.radiative + self.quenched + self.trapped + self.remaining
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySimulation {
    /// Radiative rate `X/τ_r`, cm⁻³·ns⁻¹.
    pub trace: DecayTrace,
    pub budget: ExcitationBudget,
}

pub fn simulate_decay(params: &DecayModelParams) -> Result<DecaySimulation> {
    params.validate()?;
    let grid = params.time_grid();
    let n0 = params.initial_carriers_cm3();
    if n0 == 0.0 {
        let zeros = vec![0.0; grid.len()];
        return Ok(DecaySimulation {
            trace: DecayTrace::new(grid, zeros)?,
            budget: ExcitationBudget {
                generated: 0.0,
                radiative: 0.0,
                quenched: 0.0,
                trapped: 0.0,
                remaining: 0.0,
            },
        });
    }

    // state scaled by n0: [n, m, X, radiative, quenched]
    let kt0 = params.linear_trap_rate();
    let sat = n0 / params.trap_saturation_density_cm3;
    let inv_tr = 1.0 / params.tau_r_ns;
    let kg = params.g_capture_rate();
    let y0 = match kg {
        Some(_) => [1.0, 0.0, 0.0, 0.0, 0.0],
        None => [0.0, 0.0, 1.0, 0.0, 0.0],
    };
    let kg = kg.unwrap_or(0.0);
    let rhs = |_t: f64, y: &[f64; 5]| {
        let kt = kt0 / (1.0 + y[1] * sat);
        [
            -(kg + kt) * y[0],
            kt * y[0],
            kg * y[0] - (inv_tr + kt) * y[2],
            inv_tr * y[2],
            kt * y[2],
        ]
    };
    let opts = OdeOptions {
        rtol: params.rtol,
        atol: params.rtol * 1e-4,
        initial_step: params.dt_ns * 0.1,
        ..OdeOptions::default()
    };
    let states = integrate(rhs, 0.0, y0, &grid, &opts)?;
    if let Some((i, s)) = states.iter().enumerate().find(|(_, s)| s.iter().any(|v| *v < -1e-6)) {
        return Err(Error::Integration {
            t: grid[i],
            message: format!("negative population {s:?}"),
        });
    }
    let counts = states.iter().map(|s| (s[2] * inv_tr * n0).max(0.0)).collect();
    let last = states[states.len() - 1];
    Ok(DecaySimulation {
        trace: DecayTrace::new(grid, counts)?,
        budget: ExcitationBudget {
            generated: n0,
            radiative: last[3] * n0,
            quenched: last[4] * n0,
            trapped: last[1] * n0,
            remaining: (last[0] + last[2]) * n0,
        },
    })
}

/// Rescales `trace` to a maximum of `peak_counts` and replaces every sample
/// by a Poisson draw with that mean. Sample `i` uses its own keyed generator.
pub fn with_counting_noise(trace: &DecayTrace, peak_counts: f64, seed: u64) -> Result<DecayTrace> {
    if !(peak_counts.is_finite() && peak_counts > 0.0) {
        return Err(Error::invalid("peak_counts must be finite and > 0"));
    }
    let max = trace.counts().iter().fold(0.0_f64, |m, v| m.max(*v));
    if !(max > 0.0) {
        return Err(Error::NoDecay("trace has no positive samples".into()));
    }
    let rng = SeededRng::new(seed, streams::COUNTING_NOISE);
    let counts = trace
        .counts()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mean = v.max(0.0) / max * peak_counts;
            if mean > 0.0 {
                Poisson::new(mean)
                    .map(|d| d.sample(&mut rng.for_index(i as u64)))
                    .map_err(|e| Error::Domain(e.to_string()))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    DecayTrace::new(trace.time_ns().to_vec(), counts)
}

/// Time from excitation (t = 0) to the maximum of the trace.
///
/// A trace whose maximum is its last sample never turns over and has no
/// defined rise.
pub fn rise_time(trace: &DecayTrace) -> Result<f64> {
    let c = trace.counts();
    let ip = trace.peak_index().ok_or(Error::NoRise)?;
    let flat = c.iter().all(|v| *v == c[0]);
    if flat || (ip == c.len() - 1 && c.len() > 1) {
        return Err(Error::NoRise);
    }
    Ok(trace.time_ns()[ip])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::fit_single_exponential;

    #[test]
    fn lifetime_decomposition_examples() {
        let a = decompose_lifetimes(13.0, 45.0).unwrap();
        assert!((a.tau_nr_ns - 18.28125).abs() < 1e-9);
        assert!((a.qe - 0.288889).abs() < 1e-6);
        let b = decompose_lifetimes(6.0, 45.0).unwrap();
        assert!((b.tau_nr_ns - 6.923077).abs() < 1e-6);
        assert!((b.qe - 0.133333).abs() < 1e-6);
        let c = decompose_lifetimes(45.0, 45.0).unwrap();
        assert_eq!((c.tau_nr_ns, c.qe), (f64::INFINITY, 1.0));
        assert!(matches!(decompose_lifetimes(50.0, 45.0), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn pl_proxy_examples() {
        let l7 = decompose_lifetimes(7.0, 45.0).unwrap();
        let l85 = decompose_lifetimes(8.5, 45.0).unwrap();
        assert_eq!(pl_proxy(0.0, &l7).unwrap().integrated_intensity, 0.0);
        let a = pl_proxy(1e12, &l7).unwrap();
        let b = pl_proxy(1e12, &l85).unwrap();
        assert_eq!(a.transient_initial_intensity, b.transient_initial_intensity);
        assert!((a.integrated_intensity / b.integrated_intensity - 7.0 / 8.5).abs() < 1e-12);
        let d = pl_proxy(2e12, &l7).unwrap();
        assert!((d.integrated_intensity / a.integrated_intensity - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_traps_gives_radiative_lifetime() {
        let p = DecayModelParams {
            trap_density_cm3: 0.0,
            capture_coefficient_g: f64::INFINITY,
            t_end_ns: 300.0,
            dt_ns: 0.05,
            ..DecayModelParams::default()
        };
        let sim = simulate_decay(&p).unwrap();
        let f = fit_single_exponential(&sim.trace, None).unwrap();
        assert!((f.value("tau_ns") / 45.0 - 1.0).abs() < 1e-3, "{}", f.summary());
    }

    #[test]
    fn excitations_are_conserved() {
        let sim = simulate_decay(&DecayModelParams::default()).unwrap();
        let b = sim.budget;
        assert!((b.accounted() / b.generated - 1.0).abs() < 1e-7, "{b:?}");
        assert!(sim.trace.counts().iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn rise_time_cases() {
        let t: Vec<f64> = (0..5).map(|i| 0.5 + i as f64).collect();
        let falling = DecayTrace::new(t.clone(), vec![5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(rise_time(&falling).unwrap(), 0.5);
        let rising = DecayTrace::new(t.clone(), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(rise_time(&rising), Err(Error::NoRise)));
        let peaked = DecayTrace::new(t, vec![1.0, 3.0, 2.0, 1.0, 0.5]).unwrap();
        assert_eq!(rise_time(&peaked).unwrap(), 1.5);
    }

    #[test]
    fn counting_noise_is_keyed_by_seed() {
        let trace = simulate_decay(&DecayModelParams::default()).unwrap().trace;
        let a = with_counting_noise(&trace, 1e4, 1).unwrap();
        assert_eq!(a, with_counting_noise(&trace, 1e4, 1).unwrap());
        assert_ne!(a, with_counting_noise(&trace, 1e4, 2).unwrap());
        let peak = a.counts().iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1e4).abs() < 500.0, "{peak}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = DecayModelParams {
            dt_ns: 0.5,
            ..DecayModelParams::default()
        };
        assert!(simulate_decay(&p).is_err());
    }
}
