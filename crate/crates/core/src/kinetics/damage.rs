//! G-center formation, destruction and trap accumulation under a proton
//! beam, with all densities per unit area (cm⁻²).
//!
//! While the beam delivers flux `F`:
//!
//! ```text
//! D       = damage_rate · damage_depth                 damage events per proton
//! η(F)    = 1 + β·F/(F + F_f)                          flux-enhanced formation
//! dn_G/dt = c_f·η(F)·D·F·(C/2 − n_G)
//!           − c_d·exp(−E_a/k_B T)·F·n_G / (1 + F/F_q)
//! dn_T/dt = c_T·D·F·(1 + F/F_cl) − a_DA·n_T
//! ```
//!
//! `C` is the carbon areal density, so `C/2` bounds the number of carbon
//! pairs. During gaps between segments the state is frozen.

use super::ode::{integrate, OdeOptions};
use super::{decompose_lifetimes, pl_proxy, simulate_decay, DecayModelParams};
use crate::error::{Error, Result};
use crate::fitting::fit_single_exponential;
use crate::par;

pub const BOLTZMANN_EV_K: f64 = 8.617333262e-5;

const MAX_SEGMENTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrradiationSegment {
    pub flux_cm2_s: f64,
    pub duration_s: f64,
    pub gap_s: f64,
}

impl IrradiationSegment {
    pub fn fluence_cm2(&self) -> f64 {
        self.flux_cm2_s * self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrradiationSchedule {
    segments: Vec<IrradiationSegment>,
}

impl IrradiationSchedule {
    pub fn new(segments: Vec<IrradiationSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("irradiation schedule is empty"));
        }
        for (i, s) in segments.iter().enumerate() {
            for (name, v) in [
                ("flux_cm2_s", s.flux_cm2_s),
                ("duration_s", s.duration_s),
                ("gap_s", s.gap_s),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!(
                        "schedule segment {i}: {name} must be finite and >= 0, got {v}"
                    )));
                }
            }
        }
        Ok(IrradiationSchedule { segments })
    }

    /// Identical pulses of `fluence_per_pulse` delivered over `pulse_s`,
    /// followed by `gap_s` of beam-off time.
    pub fn pulsed(fluence_per_pulse: f64, pulse_s: f64, gap_s: f64, pulses: usize) -> Result<Self> {
        if !(pulse_s > 0.0) {
            return Err(Error::invalid("pulse length must be positive"));
        }
        let seg = IrradiationSegment {
            flux_cm2_s: fluence_per_pulse / pulse_s,
            duration_s: pulse_s,
            gap_s,
        };
        Self::new(vec![seg; pulses.max(1)])
    }

    /// A single continuous exposure at `flux` delivering `fluence`.
    pub fn continuous(flux_cm2_s: f64, fluence_cm2: f64) -> Result<Self> {
        if !(flux_cm2_s > 0.0) {
            return Err(Error::invalid("cw flux must be positive"));
        }
        Self::new(vec![IrradiationSegment {
            flux_cm2_s,
            duration_s: fluence_cm2 / flux_cm2_s,
            gap_s: 0.0,
        }])
    }

    pub fn segments(&self) -> &[IrradiationSegment] {
        &self.segments
    }

    /// `Σ flux·duration`.
    pub fn fluence_cm2(&self) -> f64 {
        self.segments.iter().map(|s| s.fluence_cm2()).sum()
    }

    pub fn max_flux_cm2_s(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.flux_cm2_s))
    }

    /// Repeats the template rows cyclically until `target` fluence is
    /// delivered, shortening the final beam segment. A template that
    /// delivers no fluence is returned unchanged.
    pub fn repeated_to_fluence(&self, target_cm2: f64) -> Result<Self> {
        if !(target_cm2.is_finite() && target_cm2 >= 0.0) {
            return Err(Error::invalid("target fluence must be finite and >= 0"));
        }
        if self.fluence_cm2() == 0.0 {
            return Ok(self.clone());
        }
        let mut out = Vec::new();
        let mut delivered = 0.0;
        for seg in self.segments.iter().cycle() {
            if delivered >= target_cm2 * (1.0 - 1e-12) {
                break;
            }
            if out.len() >= MAX_SEGMENTS {
                return Err(Error::invalid(format!(
                    "reaching {target_cm2:e} cm^-2 needs more than {MAX_SEGMENTS} segments"
                )));
            }
            let f = seg.fluence_cm2();
            if delivered + f > target_cm2 {
                let duration_s = (target_cm2 - delivered) / seg.flux_cm2_s;
                out.push(IrradiationSegment { duration_s, ..*seg });
                delivered = target_cm2;
            } else {
                out.push(*seg);
                delivered += f;
            }
        }
        if out.is_empty() {
            out.push(IrradiationSegment {
                duration_s: 0.0,
                ..self.segments[0]
            });
        }
        Self::new(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageParams {
    /// Damage events per proton per nm of path.
    pub damage_rate_per_nm: f64,
    /// Depth over which damage and G-centers are counted, nm.
    pub damage_depth_nm: f64,
    pub carbon_areal_density_cm2: f64,
    /// `c_f`, cm².
    pub g_formation_coefficient: f64,
    /// `β`.
    pub formation_flux_enhancement: f64,
    /// `F_f`, cm⁻²·s⁻¹.
    pub formation_flux_scale: f64,
    /// Arrhenius prefactor `c_d`, cm².
    pub g_destruction_coefficient: f64,
    pub activation_energy_ev: f64,
    pub temperature_k: f64,
    /// `F_q`, cm⁻²·s⁻¹.
    pub destruction_quench_flux: f64,
    /// `c_T`, traps per damage event.
    pub trap_formation_coefficient: f64,
    /// `F_cl`, cm⁻²·s⁻¹.
    pub clustering_threshold_flux: f64,
    /// `a_DA`, 1/s.
    pub dynamic_annealing_rate: f64,
}

impl Default for DamageParams {
    fn default() -> Self {
        let activation_energy_ev = 0.15;
        let temperature_k = 300.0;
        DamageParams {
            damage_rate_per_nm: 2e-4,
            damage_depth_nm: 1000.0,
            carbon_areal_density_cm2: 2e14,
            g_formation_coefficient: 1.1e-15,
            formation_flux_enhancement: 0.5,
            formation_flux_scale: 1e17,
            // effective destruction cross-section of 1e-12 cm² at 300 K
            g_destruction_coefficient: 1e-12
                * (activation_energy_ev / (BOLTZMANN_EV_K * temperature_k)).exp(),
            activation_energy_ev,
            temperature_k,
            destruction_quench_flux: 2.7e17,
            trap_formation_coefficient: 0.445,
            clustering_threshold_flux: 2e19,
            dynamic_annealing_rate: 1e-3,
        }
    }
}

impl DamageParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("damage_rate_per_nm", self.damage_rate_per_nm),
            ("damage_depth_nm", self.damage_depth_nm),
            ("carbon_areal_density_cm2", self.carbon_areal_density_cm2),
            ("g_formation_coefficient", self.g_formation_coefficient),
            ("formation_flux_enhancement", self.formation_flux_enhancement),
            ("g_destruction_coefficient", self.g_destruction_coefficient),
            ("trap_formation_coefficient", self.trap_formation_coefficient),
            ("dynamic_annealing_rate", self.dynamic_annealing_rate),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        let positive = [
            ("activation_energy_ev", self.activation_energy_ev),
            ("temperature_k", self.temperature_k),
            ("formation_flux_scale", self.formation_flux_scale),
            ("destruction_quench_flux", self.destruction_quench_flux),
            ("clustering_threshold_flux", self.clustering_threshold_flux),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0")));
            }
        }
        if self.damage_depth_nm == 0.0 {
            return Err(Error::invalid("damage_depth_nm must be > 0"));
        }
        Ok(())
    }

    /// Damage events per proton within the damage depth.
    pub fn damage_per_proton(&self) -> f64 {
        self.damage_rate_per_nm * self.damage_depth_nm
    }

    pub fn damage_depth_cm(&self) -> f64 {
        self.damage_depth_nm * 1e-7
    }

    /// `c_f·η(F)·D`, cm².
    pub fn formation_cross_section(&self, flux: f64) -> f64 {
        let eta = 1.0 + self.formation_flux_enhancement * flux / (flux + self.formation_flux_scale);
        self.g_formation_coefficient * eta * self.damage_per_proton()
    }

    /// `c_d·exp(−E_a/k_B T)/(1 + F/F_q)`, cm².
    pub fn destruction_cross_section(&self, flux: f64) -> f64 {
        self.g_destruction_coefficient
            * (-self.activation_energy_ev / (BOLTZMANN_EV_K * self.temperature_k)).exp()
            / (1.0 + flux / self.destruction_quench_flux)
    }

    /// Traps generated per proton, `c_T·D·(1 + F/F_cl)`.
    pub fn trap_yield(&self, flux: f64) -> f64 {
        self.trap_formation_coefficient
            * self.damage_per_proton()
            * (1.0 + flux / self.clustering_threshold_flux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamagePoint {
    /// Time at the end of the segment, including its gap.
    pub time_s: f64,
    pub fluence_cm2: f64,
    /// Instantaneous flux of the segment that just ended.
    pub flux_cm2_s: f64,
    pub n_g_cm2: f64,
    pub n_trap_cm2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DamageHistory {
    /// Initial state followed by one point per segment.
    pub points: Vec<DamagePoint>,
}

impl DamageHistory {
    pub fn last(&self) -> &DamagePoint {
        &self.points[self.points.len() - 1]
    }
}

/// Integrates the damage model segment by segment with adaptive RK4.
pub fn integrate_damage(schedule: &IrradiationSchedule, params: &DamageParams) -> Result<DamageHistory> {
    params.validate()?;
    let half_c = 0.5 * params.carbon_areal_density_cm2;
    let trap_scale = (params.trap_yield(schedule.max_flux_cm2_s()) * schedule.fluence_cm2()).max(1.0);
    let g_scale = half_c.max(1.0);

    let mut points = Vec::with_capacity(schedule.segments().len() + 1);
    let mut state = DamagePoint {
        time_s: 0.0,
        fluence_cm2: 0.0,
        flux_cm2_s: 0.0,
        n_g_cm2: 0.0,
        n_trap_cm2: 0.0,
    };
    points.push(state);

    for seg in schedule.segments() {
        let beam = seg.flux_cm2_s > 0.0 && seg.duration_s > 0.0;
        if beam {
            let f = seg.flux_cm2_s;
            // time in units of the segment length, densities scaled to O(1)
            let a = params.formation_cross_section(f) * f * seg.duration_s;
            let d = params.destruction_cross_section(f) * f * seg.duration_s;
            let src = params.trap_yield(f) * f * seg.duration_s / trap_scale;
            let ann = params.dynamic_annealing_rate * seg.duration_s;
            let hc = half_c / g_scale;
            let rhs = |_t: f64, y: &[f64; 2]| [a * (hc - y[0]) - d * y[0], src - ann * y[1]];
            let y0 = [state.n_g_cm2 / g_scale, state.n_trap_cm2 / trap_scale];
            let opts = OdeOptions {
                rtol: 1e-10,
                atol: 1e-14,
                initial_step: 1e-3 / (1.0 + a + d + ann),
                ..OdeOptions::default()
            };
            let y = integrate(rhs, 0.0, y0, &[1.0], &opts)?[0];
            if y[0] < -1e-12 || y[1] < -1e-12 {
                return Err(Error::Integration {
                    t: state.time_s,
                    message: format!("negative density n_G={}, n_trap={}", y[0], y[1]),
                });
            }
            state.n_g_cm2 = y[0].max(0.0) * g_scale;
            state.n_trap_cm2 = y[1].max(0.0) * trap_scale;
        }
        state.time_s += seg.duration_s + seg.gap_s;
        state.fluence_cm2 += seg.fluence_cm2();
        state.flux_cm2_s = seg.flux_cm2_s;
        points.push(state);
    }
    Ok(DamageHistory { points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub fluence_cm2: f64,
    pub n_g_cm2: f64,
    pub n_trap_cm2: f64,
    /// Fitted from a simulated decay with the accumulated trap density.
    pub tau_eff_ns: f64,
    /// `n_G·qe`.
    pub intensity: f64,
}

/// Irradiates with `template` repeated up to each target fluence, then
/// probes the PL: the decay model runs with trap density
/// `background + n_trap/depth` and its fitted lifetime sets the quantum
/// efficiency applied to `n_G`.
pub fn sweep_fluence(
    template: &IrradiationSchedule,
    fluences_cm2: &[f64],
    damage: &DamageParams,
    decay: &DecayModelParams,
    background_trap_density_cm3: f64,
) -> Result<Vec<SweepRow>> {
    damage.validate()?;
    decay.validate()?;
    if !(background_trap_density_cm3.is_finite() && background_trap_density_cm3 >= 0.0) {
        return Err(Error::invalid("background trap density must be finite and >= 0"));
    }
    let rows = par::map_collect(fluences_cm2, |&phi| -> Result<SweepRow> {
        let schedule = template.repeated_to_fluence(phi)?;
        let end = *integrate_damage(&schedule, damage)?.last();
        let traps = background_trap_density_cm3 + end.n_trap_cm2 / damage.damage_depth_cm();
        let probe = DecayModelParams {
            trap_density_cm3: traps,
            ..*decay
        };
        let sim = simulate_decay(&probe)?;
        let tau = fit_single_exponential(&sim.trace, None)?.value("tau_ns");
        let lifetimes = decompose_lifetimes(tau.min(decay.tau_r_ns), decay.tau_r_ns)?;
        Ok(SweepRow {
            fluence_cm2: end.fluence_cm2,
            n_g_cm2: end.n_g_cm2,
            n_trap_cm2: end.n_trap_cm2,
            tau_eff_ns: tau,
            intensity: pl_proxy(end.n_g_cm2, &lifetimes)?.integrated_intensity,
        })
    });
    rows.into_iter().collect()
}

/// Reads `flux_cm2_s,duration_s,gap_s` rows.
pub fn parse_schedule_csv(text: &str) -> Result<IrradiationSchedule> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["flux_cm2_s", "duration_s", "gap_s"] {
        return Err(Error::Parse(format!(
            "schedule header must be `flux_cm2_s,duration_s,gap_s`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut segments = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut v = [0.0; 3];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = record
                .get(k)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse(format!("schedule line {line}: bad number")))?;
        }
        segments.push(IrradiationSegment {
            flux_cm2_s: v[0],
            duration_s: v[1],
            gap_s: v[2],
        });
    }
    IrradiationSchedule::new(segments)
}
