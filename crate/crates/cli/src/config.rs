//! Run configuration read from a TOML file. Every key is optional and falls
//! back to the library default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use defect_spectra::ensemble::{DefectFieldSpec, DefectPlacement, SamplerMode, SamplerSpec};
use defect_spectra::kinetics::{DamageParams, DecayModelParams, IrradiationSchedule};
use defect_spectra::strainfield::{DefectKind, ElasticParams, RelaxationVolumes, DEFAULT_CHARGE};
use defect_spectra::EmitterConfig;

use crate::CliError;

pub const CONFIG_KEYS: &str = "\
CONFIG FILE (TOML, every key optional, unknown keys are errors)
  seed = <u64>                      required by simulate-* unless --seed is given
  output_dir = <path>               default \".\"; overridden by --out-dir
  response_table = <path>           ZPL response CSV; default built-in placeholder
  schedule = <path>                 irradiation schedule CSV (flux_cm2_s,duration_s,gap_s)

  [emitter]    lambda0_nm = 1278.3, homogeneous_fwhm_nm = 0.073, temperature_k = 4
  [sampler]    mode = \"uniform\" | \"biased-z\" | \"defect-field\", samples = 100000,
               strain_range = 0.01, xy_threshold = 0.001, keep_fraction = 0.1,
               max_draws = <u64>, grid_step_nm = 0.01, bin_width_mev = 0.1
  [elastic]    atomic_volume_nm3 = 0.02, core_cutoff_nm = 0.25
               (section required for defect-field mode)
  [defect_field]
               placement = \"single\" | \"density\", kind = \"vacancy\" | \"interstitial\",
               vacancy_cm3 = 0, interstitial_cm3 = 0, inner_radius_nm = 0.9,
               outer_radius_nm = 1.6, charge = 2,
               vacancy_volumes = [5 values, charge -2..2], interstitial_volumes = [5 values]
  [decay]      tau_r_ns = 45, g_density_cm3 = 1e15, trap_density_cm3 = 1.1e17,
               capture_coefficient_g = 1e-15 (\"inf\" = instantaneous),
               capture_coefficient_trap = 1e-18, trap_saturation_density_cm3 = 1e16,
               pump_mw = 0.3, carriers_per_mw_cm3 = 2e16, t_end_ns = 150, dt_ns = 0.02,
               rtol = 1e-8, noise_peak_counts = <f64> (Poisson noise, off by default),
               fit_window_ns = [start, end] (default [t_peak, t_peak + 5 tau_guess])
  [damage]     damage_rate_per_nm = 2e-4, damage_depth_nm = 1000,
               carbon_areal_density_cm2 = 2e14, g_formation_coefficient = 1.1e-15,
               formation_flux_enhancement = 0.5, formation_flux_scale = 1e17,
               g_destruction_coefficient, activation_energy_ev = 0.15, temperature_k = 300,
               destruction_quench_flux = 2.7e17, trap_formation_coefficient = 0.445,
               clustering_threshold_flux = 2e19, dynamic_annealing_rate = 1e-3
  [sweep]      fluences_cm2 = [1e11, 1e12, 1e13, 1e14], background_trap_cm3 = 5.46e16
  [[sweep.templates]]
               label = <name>, and one of:
                 schedule = <path>
                 pulse_fluence_cm2 = 7.9e10, pulse_s = 1e-8, gap_s = 45
                 flux_cm2_s = 8e11 (continuous)
               default: pulsed and cw templates as above, or `schedule` if given";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub response_table: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
    #[serde(default)]
    pub emitter: EmitterSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    pub elastic: Option<ElasticSection>,
    pub defect_field: Option<DefectFieldSection>,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub damage: DamageSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterSection {
    pub lambda0_nm: f64,
    pub homogeneous_fwhm_nm: f64,
    pub temperature_k: f64,
}

impl Default for EmitterSection {
    fn default() -> Self {
        let e = EmitterConfig::default();
        EmitterSection {
            lambda0_nm: e.lambda0_nm,
            homogeneous_fwhm_nm: e.homogeneous_fwhm_nm,
            temperature_k: e.temperature_k,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub mode: String,
    pub samples: usize,
    pub strain_range: f64,
    pub xy_threshold: f64,
    pub keep_fraction: f64,
    pub max_draws: Option<u64>,
    pub grid_step_nm: f64,
    pub bin_width_mev: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerSpec::default();
        SamplerSection {
            mode: s.mode.as_str().into(),
            samples: s.n_samples,
            strain_range: s.strain_range,
            xy_threshold: s.xy_threshold,
            keep_fraction: s.keep_fraction,
            max_draws: None,
            grid_step_nm: 0.01,
            bin_width_mev: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElasticSection {
    pub atomic_volume_nm3: f64,
    pub core_cutoff_nm: f64,
}

impl Default for ElasticSection {
    fn default() -> Self {
        let e = ElasticParams::default();
        ElasticSection {
            atomic_volume_nm3: e.atomic_volume_nm3,
            core_cutoff_nm: e.core_cutoff_nm,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefectFieldSection {
    pub placement: String,
    pub kind: String,
    pub vacancy_cm3: f64,
    pub interstitial_cm3: f64,
    pub inner_radius_nm: f64,
    pub outer_radius_nm: f64,
    pub charge: i8,
    pub vacancy_volumes: [f64; 5],
    pub interstitial_volumes: [f64; 5],
}

impl Default for DefectFieldSection {
    fn default() -> Self {
        let v = RelaxationVolumes::default();
        DefectFieldSection {
            placement: "single".into(),
            kind: "vacancy".into(),
            vacancy_cm3: 0.0,
            interstitial_cm3: 0.0,
            inner_radius_nm: 0.9,
            outer_radius_nm: 1.6,
            charge: DEFAULT_CHARGE,
            vacancy_volumes: v.vacancy,
            interstitial_volumes: v.interstitial,
        }
    }
}

/// `f64` that also accepts the strings "inf" / "infinity".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Number(f64),
    Text(String),
}

impl Rate {
    fn value(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Rate::Number(v) => Ok(*v),
            Rate::Text(s) if matches!(s.as_str(), "inf" | "infinity") => Ok(f64::INFINITY),
            Rate::Text(s) => Err(CliError::Validation(format!(
                "[decay] {key}: expected a number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    pub tau_r_ns: f64,
    pub g_density_cm3: f64,
    pub trap_density_cm3: f64,
    pub capture_coefficient_g: Rate,
    pub capture_coefficient_trap: f64,
    pub trap_saturation_density_cm3: Rate,
    pub pump_mw: f64,
    pub carriers_per_mw_cm3: f64,
    pub t_end_ns: f64,
    pub dt_ns: f64,
    pub rtol: f64,
    pub noise_peak_counts: Option<f64>,
    pub fit_window_ns: Option<[f64; 2]>,
}

impl Default for DecaySection {
    fn default() -> Self {
        let d = DecayModelParams::default();
        DecaySection {
            tau_r_ns: d.tau_r_ns,
            g_density_cm3: d.g_density_cm3,
            trap_density_cm3: d.trap_density_cm3,
            capture_coefficient_g: Rate::Number(d.capture_coefficient_g),
            capture_coefficient_trap: d.capture_coefficient_trap,
            trap_saturation_density_cm3: Rate::Number(d.trap_saturation_density_cm3),
            pump_mw: d.pump_mw,
            carriers_per_mw_cm3: d.carriers_per_mw_cm3,
            t_end_ns: d.t_end_ns,
            dt_ns: d.dt_ns,
            rtol: d.rtol,
            noise_peak_counts: None,
            fit_window_ns: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DamageSection {
    pub damage_rate_per_nm: f64,
    pub damage_depth_nm: f64,
    pub carbon_areal_density_cm2: f64,
    pub g_formation_coefficient: f64,
    pub formation_flux_enhancement: f64,
    pub formation_flux_scale: f64,
    pub g_destruction_coefficient: f64,
    pub activation_energy_ev: f64,
    pub temperature_k: f64,
    pub destruction_quench_flux: f64,
    pub trap_formation_coefficient: f64,
    pub clustering_threshold_flux: f64,
    pub dynamic_annealing_rate: f64,
}

impl Default for DamageSection {
    fn default() -> Self {
        let d = DamageParams::default();
        DamageSection {
            damage_rate_per_nm: d.damage_rate_per_nm,
            damage_depth_nm: d.damage_depth_nm,
            carbon_areal_density_cm2: d.carbon_areal_density_cm2,
            g_formation_coefficient: d.g_formation_coefficient,
            formation_flux_enhancement: d.formation_flux_enhancement,
            formation_flux_scale: d.formation_flux_scale,
            g_destruction_coefficient: d.g_destruction_coefficient,
            activation_energy_ev: d.activation_energy_ev,
            temperature_k: d.temperature_k,
            destruction_quench_flux: d.destruction_quench_flux,
            trap_formation_coefficient: d.trap_formation_coefficient,
            clustering_threshold_flux: d.clustering_threshold_flux,
            dynamic_annealing_rate: d.dynamic_annealing_rate,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub fluences_cm2: Vec<f64>,
    pub background_trap_cm3: f64,
    pub templates: Vec<TemplateSection>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            fluences_cm2: vec![1e11, 1e12, 1e13, 1e14],
            background_trap_cm3: 5.46e16,
            templates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSection {
    pub label: String,
    pub schedule: Option<PathBuf>,
    pub pulse_fluence_cm2: Option<f64>,
    pub pulse_s: Option<f64>,
    pub gap_s: Option<f64>,
    pub flux_cm2_s: Option<f64>,
}

fn section_err(section: &str) -> impl Fn(defect_spectra::Error) -> CliError + '_ {
    move |e| CliError::Validation(format!("[{section}] {e}"))
}

impl RunConfig {
    /// Parses `path` and resolves relative file references against its
    /// directory. All referenced files must exist.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.response_table.as_mut().map(resolve);
        cfg.schedule.as_mut().map(resolve);
        cfg.output_dir.as_mut().map(resolve);
        for t in &mut cfg.sweep.templates {
            t.schedule.as_mut().map(resolve);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn check_files(&self) -> Result<(), CliError> {
        let mut refs: Vec<(&str, &PathBuf)> = Vec::new();
        if let Some(p) = &self.response_table {
            refs.push(("response_table", p));
        }
        if let Some(p) = &self.schedule {
            refs.push(("schedule", p));
        }
        for t in &self.sweep.templates {
            if let Some(p) = &t.schedule {
                refs.push(("sweep.templates.schedule", p));
            }
        }
        for (key, p) in refs {
            if !p.is_file() {
                return Err(CliError::Validation(format!(
                    "{key}: file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn emitter(&self) -> Result<EmitterConfig, CliError> {
        let e = &self.emitter;
        let em = EmitterConfig {
            lambda0_nm: e.lambda0_nm,
            homogeneous_fwhm_nm: e.homogeneous_fwhm_nm,
            temperature_k: e.temperature_k,
        };
        em.validate().map_err(section_err("emitter"))?;
        Ok(em)
    }

    pub fn elastic(&self) -> Result<Option<ElasticParams>, CliError> {
        let Some(e) = &self.elastic else {
            return Ok(None);
        };
        let p = ElasticParams {
            atomic_volume_nm3: e.atomic_volume_nm3,
            core_cutoff_nm: e.core_cutoff_nm,
        };
        p.validate().map_err(section_err("elastic"))?;
        Ok(Some(p))
    }

    pub fn sampler(&self, mode: SamplerMode, seed: u64) -> Result<SamplerSpec, CliError> {
        let s = &self.sampler;
        let defect_field = match (mode, &self.defect_field) {
            (SamplerMode::DefectField, None) => {
                return Err(CliError::Validation(
                    "defect-field mode needs a [defect_field] section".into(),
                ))
            }
            (_, Some(d)) => Some(defect_field_spec(d)?),
            (_, None) => None,
        };
        let spec = SamplerSpec {
            mode,
            n_samples: s.samples,
            strain_range: s.strain_range,
            xy_threshold: s.xy_threshold,
            keep_fraction: s.keep_fraction,
            defect_field,
            seed,
            max_draws: s.max_draws,
        };
        spec.validate().map_err(section_err("sampler"))?;
        Ok(spec)
    }

    pub fn decay(&self) -> Result<DecayModelParams, CliError> {
        let d = &self.decay;
        let p = DecayModelParams {
            tau_r_ns: d.tau_r_ns,
            g_density_cm3: d.g_density_cm3,
            trap_density_cm3: d.trap_density_cm3,
            capture_coefficient_g: d.capture_coefficient_g.value("capture_coefficient_g")?,
            capture_coefficient_trap: d.capture_coefficient_trap,
            trap_saturation_density_cm3: d
                .trap_saturation_density_cm3
                .value("trap_saturation_density_cm3")?,
            pump_mw: d.pump_mw,
            carriers_per_mw_cm3: d.carriers_per_mw_cm3,
            t_end_ns: d.t_end_ns,
            dt_ns: d.dt_ns,
            rtol: d.rtol,
        };
        p.validate().map_err(section_err("decay"))?;
        if let Some(n) = d.noise_peak_counts {
            if !(n.is_finite() && n > 0.0) {
                return Err(CliError::Validation(
                    "[decay] noise_peak_counts must be finite and > 0".into(),
                ));
            }
        }
        if let Some([a, b]) = d.fit_window_ns {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(CliError::Validation(
                    "[decay] fit_window_ns must be [start, end] with end > start".into(),
                ));
            }
        }
        Ok(p)
    }

    pub fn damage(&self) -> Result<DamageParams, CliError> {
        let d = &self.damage;
        let p = DamageParams {
            damage_rate_per_nm: d.damage_rate_per_nm,
            damage_depth_nm: d.damage_depth_nm,
            carbon_areal_density_cm2: d.carbon_areal_density_cm2,
            g_formation_coefficient: d.g_formation_coefficient,
            formation_flux_enhancement: d.formation_flux_enhancement,
            formation_flux_scale: d.formation_flux_scale,
            g_destruction_coefficient: d.g_destruction_coefficient,
            activation_energy_ev: d.activation_energy_ev,
            temperature_k: d.temperature_k,
            destruction_quench_flux: d.destruction_quench_flux,
            trap_formation_coefficient: d.trap_formation_coefficient,
            clustering_threshold_flux: d.clustering_threshold_flux,
            dynamic_annealing_rate: d.dynamic_annealing_rate,
        };
        p.validate().map_err(section_err("damage"))?;
        Ok(p)
    }

    /// Labelled schedule templates for a sweep.
    pub fn templates(&self) -> Result<Vec<(String, IrradiationSchedule)>, CliError> {
        if self.sweep.templates.is_empty() {
            if let Some(path) = &self.schedule {
                return Ok(vec![("schedule".into(), read_schedule("schedule", path)?)]);
            }
            return Ok(vec![
                ("pulsed".into(), pulsed(7.9e10, 1e-8, 45.0)?),
                ("cw".into(), continuous(8e11)?),
            ]);
        }
        let mut out = Vec::new();
        for (i, t) in self.sweep.templates.iter().enumerate() {
            let key = format!("sweep.templates[{i}]");
            if t.label.is_empty() || t.label.contains([',', '"', '\n']) {
                return Err(CliError::Validation(format!(
                    "{key}.label must be non-empty without commas or quotes"
                )));
            }
            let pulse = [t.pulse_fluence_cm2, t.pulse_s, t.gap_s];
            let schedule = match (&t.schedule, pulse, t.flux_cm2_s) {
                (Some(p), [None, None, None], None) => read_schedule(&key, p)?,
                (None, [Some(f), Some(d), Some(g)], None) => pulsed(f, d, g)
                    .map_err(|e| CliError::Validation(format!("{key}: {e}")))?,
                (None, [None, None, None], Some(f)) => {
                    continuous(f).map_err(|e| CliError::Validation(format!("{key}: {e}")))?
                }
                _ => {
                    return Err(CliError::Validation(format!(
                        "{key}: give exactly one of `schedule`, \
                         `pulse_fluence_cm2`+`pulse_s`+`gap_s`, or `flux_cm2_s`"
                    )))
                }
            };
            out.push((t.label.clone(), schedule));
        }
        Ok(out)
    }
}

fn pulsed(fluence: f64, pulse_s: f64, gap_s: f64) -> Result<IrradiationSchedule, CliError> {
    IrradiationSchedule::pulsed(fluence, pulse_s, gap_s, 1).map_err(section_err("sweep"))
}

fn continuous(flux: f64) -> Result<IrradiationSchedule, CliError> {
    // one second of beam; the sweep repeats it up to each target fluence
    IrradiationSchedule::continuous(flux, flux).map_err(section_err("sweep"))
}

pub fn read_schedule(key: &str, path: &Path) -> Result<IrradiationSchedule, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{key}: {}: {e}", path.display())))?;
    defect_spectra::kinetics::damage::parse_schedule_csv(&text)
        .map_err(|e| CliError::Validation(format!("{key}: {}: {e}", path.display())))
}

fn defect_field_spec(d: &DefectFieldSection) -> Result<DefectFieldSpec, CliError> {
    let kind = match d.kind.as_str() {
        "vacancy" => DefectKind::Vacancy,
        "interstitial" => DefectKind::SelfInterstitial,
        other => {
            return Err(CliError::Validation(format!(
                "[defect_field] kind: unknown `{other}` (vacancy, interstitial)"
            )))
        }
    };
    let placement = match d.placement.as_str() {
        "single" => DefectPlacement::Single(kind),
        "density" => DefectPlacement::Density {
            vacancy_cm3: d.vacancy_cm3,
            interstitial_cm3: d.interstitial_cm3,
        },
        other => {
            return Err(CliError::Validation(format!(
                "[defect_field] placement: unknown `{other}` (single, density)"
            )))
        }
    };
    Ok(DefectFieldSpec {
        placement,
        inner_radius_nm: d.inner_radius_nm,
        outer_radius_nm: d.outer_radius_nm,
        charge: d.charge,
        volumes: RelaxationVolumes {
            vacancy: d.vacancy_volumes,
            interstitial: d.interstitial_volumes,
        },
    })
}
