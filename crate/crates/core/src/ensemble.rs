//! Monte Carlo ZPL-shift ensembles and the spectra and histograms built from
//! them.
//!
//! Draw `i` of a sampler uses its own generator keyed by `(seed, stream, i)`.
//! Draws are evaluated in parallel blocks but kept in index order, and the
//! first `n_samples` retained draws form the ensemble, so results do not
//! depend on the number of threads.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::domain::{argmax, EmitterConfig, Spectrum, StrainVector, ZplShift};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{streams, SeededRng};
use crate::strainfield::{superpose, DefectKind, DefectSite, ElasticParams, RelaxationVolumes};
use crate::zplmap::ZplResponseTable;

const BLOCK: u64 = 8192;
const NM3_TO_CM3: f64 = 1e-21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerMode {
    Uniform,
    BiasedZ,
    DefectField,
}

impl SamplerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerMode::Uniform => "uniform",
            SamplerMode::BiasedZ => "biased-z",
            SamplerMode::DefectField => "defect-field",
        }
    }
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerMode::Uniform),
            "biased-z" => Ok(SamplerMode::BiasedZ),
            "defect-field" => Ok(SamplerMode::DefectField),
            _ => Err(Error::invalid(format!(
                "unknown sampler mode `{s}` (uniform, biased-z, defect-field)"
            ))),
        }
    }
}

/// How defects are scattered around each emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefectPlacement {
    /// Exactly one defect per emitter.
    Single(DefectKind),
    /// Poisson-distributed counts from volume densities, cm⁻³.
    Density {
        vacancy_cm3: f64,
        interstitial_cm3: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectFieldSpec {
    pub placement: DefectPlacement,
    /// Defects are placed uniformly by volume between the two radii; equal
    /// radii give a fixed separation.
    pub inner_radius_nm: f64,
    pub outer_radius_nm: f64,
    pub charge: i8,
    pub volumes: RelaxationVolumes,
}

impl DefectFieldSpec {
    pub fn single(kind: DefectKind, inner_radius_nm: f64, outer_radius_nm: f64) -> Self {
        DefectFieldSpec {
            placement: DefectPlacement::Single(kind),
            inner_radius_nm,
            outer_radius_nm,
            charge: crate::strainfield::DEFAULT_CHARGE,
            volumes: RelaxationVolumes::default(),
        }
    }

    pub fn validate(&self, elastic: &ElasticParams) -> Result<()> {
        elastic.validate()?;
        self.volumes.validate()?;
        self.volumes.get(DefectKind::Vacancy, self.charge)?;
        if !(self.inner_radius_nm.is_finite() && self.outer_radius_nm.is_finite()) {
            return Err(Error::invalid("shell radii must be finite"));
        }
        if self.inner_radius_nm < elastic.core_cutoff_nm {
            return Err(Error::invalid(format!(
                "shell inner radius {} nm is inside the core cutoff {} nm",
                self.inner_radius_nm, elastic.core_cutoff_nm
            )));
        }
        if self.outer_radius_nm < self.inner_radius_nm {
            return Err(Error::invalid("shell outer radius must be >= inner radius"));
        }
        if let DefectPlacement::Density {
            vacancy_cm3,
            interstitial_cm3,
        } = self.placement
        {
            for (name, d) in [("vacancy", vacancy_cm3), ("interstitial", interstitial_cm3)] {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::invalid(format!(
                        "{name} density must be finite and >= 0"
                    )));
                }
            }
        }
        Ok(())
    }

    fn shell_volume_nm3(&self) -> f64 {
        4.0 / 3.0
            * std::f64::consts::PI
            * (self.outer_radius_nm.powi(3) - self.inner_radius_nm.powi(3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    pub mode: SamplerMode,
    pub n_samples: usize,
    /// Half-width of the uniform strain box.
    pub strain_range: f64,
    pub xy_threshold: f64,
    pub keep_fraction: f64,
    pub defect_field: Option<DefectFieldSpec>,
    pub seed: u64,
    /// Raw draws allowed before giving up; `None` means `1000·n_samples + 10⁶`.
    pub max_draws: Option<u64>,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            mode: SamplerMode::Uniform,
            n_samples: 100_000,
            strain_range: 0.01,
            xy_threshold: 0.001,
            keep_fraction: 0.1,
            defect_field: None,
            seed: 0,
            max_draws: None,
        }
    }
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be >= 1"));
        }
        if !(self.strain_range.is_finite() && self.strain_range >= 0.0) {
            return Err(Error::invalid("strain_range must be finite and >= 0"));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::invalid("keep_fraction must be in (0, 1]"));
        }
        if self.mode == SamplerMode::BiasedZ
            && !(self.xy_threshold >= 0.0 && self.xy_threshold < self.strain_range)
        {
            return Err(Error::invalid(
                "xy_threshold must be >= 0 and below strain_range",
            ));
        }
        Ok(())
    }

    fn draw_limit(&self) -> u64 {
        self.max_draws
            .unwrap_or(1000 * self.n_samples as u64 + 1_000_000)
    }
}

/// Per-sample annotation in defect-field mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTag {
    /// Kind of the defect closest to the emitter, if any was placed.
    pub dominant_kind: Option<DefectKind>,
    pub nearest_separation_nm: Option<f64>,
    pub defect_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEnsemble {
    pub spec: SamplerSpec,
    pub strains: Vec<StrainVector>,
    pub shifts: Vec<ZplShift>,
    /// Present in defect-field mode.
    pub tags: Option<Vec<SampleTag>>,
    /// Raw draws consumed, retained or not.
    pub draws: u64,
    /// Defect-field draws discarded because a defect fell inside the core or
    /// the strain left the table range.
    pub rejected_core_or_range: u64,
}

impl ShiftEnsemble {
    /// Ensemble built directly from shifts, e.g. for spectrum synthesis of
    /// hand-picked populations.
    pub fn from_shifts(shifts: Vec<ZplShift>) -> Self {
        let n = shifts.len();
        ShiftEnsemble {
            spec: SamplerSpec {
                n_samples: n.max(1),
                ..SamplerSpec::default()
            },
            strains: vec![StrainVector::ZERO; n],
            shifts,
            tags: None,
            draws: n as u64,
            rejected_core_or_range: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shifts_mev(&self) -> Vec<f64> {
        self.shifts.iter().map(|s| s.delta_e_mev).collect()
    }

    /// Retained samples over raw draws.
    pub fn retention_fraction(&self) -> f64 {
        self.len() as f64 / self.draws as f64
    }
}

struct Sample {
    strain: StrainVector,
    shift: ZplShift,
    tag: Option<SampleTag>,
}

/// Runs `draw` over indices 0, 1, 2, ... until `n` draws return a sample.
fn run_blocks<F>(spec: &SamplerSpec, draw: F) -> Result<(Vec<Sample>, u64, u64)>
where
    F: Fn(u64) -> Result<Option<Sample>> + Sync + Send,
{
    let n = spec.n_samples;
    let limit = spec.draw_limit();
    let mut kept: Vec<Sample> = Vec::with_capacity(n);
    let mut next = 0u64;
    let mut rejected = 0u64;
    while kept.len() < n {
        if next >= limit {
            return Err(Error::SamplerExhausted(format!(
                "{} of {n} samples retained after {next} draws",
                kept.len()
            )));
        }
        let end = (next + BLOCK).min(limit);
        let block = par::map_range(next, end, &draw);
        for (offset, result) in block.into_iter().enumerate() {
            match result? {
                Some(s) => {
                    kept.push(s);
                    if kept.len() == n {
                        return Ok((kept, next + offset as u64 + 1, rejected));
                    }
                }
                None => rejected += 1,
            }
        }
        next = end;
    }
    Ok((kept, next, rejected))
}

fn uniform_strain(rng: &mut impl Rng, range: f64) -> StrainVector {
    let mut u = || range * (2.0 * rng.random::<f64>() - 1.0);
    let (xx, yy, zz) = (u(), u(), u());
    StrainVector {
        xx,
        yy,
        zz,
        ..StrainVector::ZERO
    }
}

fn check_table_covers(spec: &SamplerSpec, table: &ZplResponseTable) -> Result<()> {
    if spec.strain_range > table.strain_range() + 1e-12 {
        return Err(Error::OutOfRange {
            what: "sampler strain_range".into(),
            value: spec.strain_range,
            min: 0.0,
            max: table.strain_range(),
        });
    }
    Ok(())
}

fn into_ensemble(spec: &SamplerSpec, out: (Vec<Sample>, u64, u64), tagged: bool) -> ShiftEnsemble {
    let (samples, draws, rejected) = out;
    let mut strains = Vec::with_capacity(samples.len());
    let mut shifts = Vec::with_capacity(samples.len());
    let mut tags = Vec::new();
    for s in samples {
        strains.push(s.strain);
        shifts.push(s.shift);
        if let Some(t) = s.tag {
            tags.push(t);
        }
    }
    ShiftEnsemble {
        spec: spec.clone(),
        strains,
        shifts,
        tags: tagged.then_some(tags),
        draws,
        rejected_core_or_range: rejected,
    }
}

/// Independent uniform `e_xx, e_yy, e_zz` in `±strain_range`, zero shear.
pub fn sample_uniform(spec: &SamplerSpec, table: &ZplResponseTable) -> Result<ShiftEnsemble> {
    spec.validate()?;
    check_table_covers(spec, table)?;
    let rng = SeededRng::new(spec.seed, streams::UNIFORM_STRAIN);
    let out = run_blocks(spec, |i| {
        let mut r = rng.for_index(i);
        let strain = uniform_strain(&mut r, spec.strain_range);
        let shift = table.shift_for_strain(&strain)?;
        Ok(Some(Sample {
            strain,
            shift,
            tag: None,
        }))
    })?;
    Ok(into_ensemble(spec, out, false))
}

/// Uniform draws thinned to favour strain along z: a draw is kept outright
/// when `max(|e_xx|, |e_yy|) ≤ xy_threshold`, otherwise with probability
/// `keep_fraction`.
pub fn sample_biased_z(spec: &SamplerSpec, table: &ZplResponseTable) -> Result<ShiftEnsemble> {
    spec.validate()?;
    check_table_covers(spec, table)?;
    let rng = SeededRng::new(spec.seed, streams::BIASED_Z_STRAIN);
    let out = run_blocks(spec, |i| {
        let mut r = rng.for_index(i);
        let strain = uniform_strain(&mut r, spec.strain_range);
        let u: f64 = r.random();
        if !biased_z_keeps(&strain, spec.xy_threshold, spec.keep_fraction, u) {
            return Ok(None);
        }
        let shift = table.shift_for_strain(&strain)?;
        Ok(Some(Sample {
            strain,
            shift,
            tag: None,
        }))
    })?;
    let mut ens = into_ensemble(spec, out, false);
    ens.rejected_core_or_range = 0;
    Ok(ens)
}

/// Acceptance rule of the biased-z sampler for a uniform variate `u ∈ [0, 1)`.
pub fn biased_z_keeps(strain: &StrainVector, xy_threshold: f64, keep_fraction: f64, u: f64) -> bool {
    strain.xx.abs().max(strain.yy.abs()) <= xy_threshold || u < keep_fraction
}

fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn shell_point(rng: &mut impl Rng, inner: f64, outer: f64) -> [f64; 3] {
    let d = random_direction(rng);
    let r = if outer > inner {
        let u: f64 = rng.random();
        (inner.powi(3) + u * (outer.powi(3) - inner.powi(3))).cbrt()
    } else {
        inner
    };
    [r * d[0], r * d[1], r * d[2]]
}

fn poisson_count(rng: &mut impl Rng, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(p.sample(rng) as u64)
}

/// Emitter at the origin with defects scattered in a shell around it. Draws
/// whose defects fall inside the core cutoff, or whose strain leaves the
/// table range, are discarded and counted.
pub fn sample_defect_field(
    spec: &SamplerSpec,
    table: &ZplResponseTable,
    elastic: &ElasticParams,
) -> Result<ShiftEnsemble> {
    spec.validate()?;
    let field = spec
        .defect_field
        .ok_or_else(|| Error::invalid("defect-field mode needs a defect field specification"))?;
    field.validate(elastic)?;
    let rng = SeededRng::new(spec.seed, streams::DEFECT_FIELD);
    let out = run_blocks(spec, |i| {
        let mut r = rng.for_index(i);
        let mut defects: Vec<DefectSite> = Vec::new();
        let mut place = |kind: DefectKind, r: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
            let p = shell_point(r, field.inner_radius_nm, field.outer_radius_nm);
            let v = field.volumes.get(kind, field.charge)?;
            defects.push(DefectSite::new(kind, p, field.charge, v)?);
            Ok(())
        };
        match field.placement {
            DefectPlacement::Single(kind) => place(kind, &mut r)?,
            DefectPlacement::Density {
                vacancy_cm3,
                interstitial_cm3,
            } => {
                let vol_cm3 = field.shell_volume_nm3() * NM3_TO_CM3;
                let nv = poisson_count(&mut r, vacancy_cm3 * vol_cm3)?;
                let ni = poisson_count(&mut r, interstitial_cm3 * vol_cm3)?;
                for _ in 0..nv {
                    place(DefectKind::Vacancy, &mut r)?;
                }
                for _ in 0..ni {
                    place(DefectKind::SelfInterstitial, &mut r)?;
                }
            }
        }
        let strain = match superpose(&defects, [0.0; 3], elastic) {
            Ok(s) => s,
            Err(Error::CoreRegion { .. } | Error::OutOfRange { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let shift = match table.shift_for_strain(&strain) {
            Ok(s) => s,
            Err(Error::OutOfRange { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let nearest = defects
            .iter()
            .map(|d| (d.kind, norm(d.position_nm)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        Ok(Some(Sample {
            strain,
            shift,
            tag: Some(SampleTag {
                dominant_kind: nearest.map(|n| n.0),
                nearest_separation_nm: nearest.map(|n| n.1),
                defect_count: defects.len(),
            }),
        }))
    })?;
    Ok(into_ensemble(spec, out, true))
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Dispatches on `spec.mode`.
pub fn sample(
    spec: &SamplerSpec,
    table: &ZplResponseTable,
    elastic: Option<&ElasticParams>,
) -> Result<ShiftEnsemble> {
    match spec.mode {
        SamplerMode::Uniform => sample_uniform(spec, table),
        SamplerMode::BiasedZ => sample_biased_z(spec, table),
        SamplerMode::DefectField => {
            let elastic = elastic
                .ok_or_else(|| Error::invalid("defect-field mode needs elastic parameters"))?;
            sample_defect_field(spec, table, elastic)
        }
    }
}

/// Uniform wavelength grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub end_nm: f64,
    pub step_nm: f64,
}

impl WavelengthGrid {
    /// Smallest grid on `step_nm` that satisfies the coverage rule of
    /// [`synthesize_spectrum`] for offsets up to `max_abs_offset_nm`.
    pub fn covering(emitter: &EmitterConfig, max_abs_offset_nm: f64, step_nm: f64) -> Self {
        let half = max_abs_offset_nm + 10.0 * emitter.homogeneous_fwhm_nm;
        let n = (half / step_nm).ceil();
        WavelengthGrid {
            start_nm: emitter.lambda0_nm - n * step_nm,
            end_nm: emitter.lambda0_nm + n * step_nm,
            step_nm,
        }
    }

    pub fn len(&self) -> usize {
        ((self.end_nm - self.start_nm) / self.step_nm + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.start_nm + i as f64 * self.step_nm)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.start_nm.is_finite()
            && self.end_nm.is_finite()
            && self.step_nm.is_finite()
            && self.step_nm > 0.0
            && self.end_nm > self.start_nm;
        if !ok {
            return Err(Error::invalid(
                "wavelength grid needs finite start < end and step > 0",
            ));
        }
        if self.len() > 50_000_000 {
            return Err(Error::invalid("wavelength grid has too many points"));
        }
        Ok(())
    }
}

/// Unit-area Lorentzian of full width `fwhm` centred at `center`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let g = 0.5 * fwhm;
    let d = x - center;
    g / (std::f64::consts::PI * (d * d + g * g))
}

/// Sum of weighted unit-area Lorentzians at absolute wavelengths, not
/// normalised. Each grid point sums its lines in input order.
pub fn lorentzian_sum(lines: &[(f64, f64)], fwhm: f64, grid: &[f64]) -> Vec<f64> {
    par::map_collect(grid, |&x| {
        lines
            .iter()
            .map(|&(c, w)| w * lorentzian(x, c, fwhm))
            .sum::<f64>()
    })
}

/// Spectrum of weighted lines, offsets `Δλ` in nm from `λ₀`, normalised to a
/// peak of 1.
pub fn synthesize_lines(
    offsets_nm: &[(f64, f64)],
    emitter: &EmitterConfig,
    grid: &WavelengthGrid,
) -> Result<Spectrum> {
    emitter.validate()?;
    grid.validate()?;
    if offsets_nm.is_empty() {
        return Err(Error::invalid("no lines to synthesise"));
    }
    if let Some((o, w)) = offsets_nm
        .iter()
        .find(|(o, w)| !o.is_finite() || !w.is_finite() || *w < 0.0)
    {
        return Err(Error::invalid(format!(
            "line offset {o} / weight {w} must be finite with weight >= 0"
        )));
    }
    let limit = emitter.homogeneous_fwhm_nm / 5.0;
    if grid.step_nm > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution {
            step: grid.step_nm,
            limit,
        });
    }
    let max_off = offsets_nm.iter().fold(0.0_f64, |m, (o, _)| m.max(o.abs()));
    let half = max_off + 10.0 * emitter.homogeneous_fwhm_nm;
    let tol = 1e-9 * emitter.lambda0_nm;
    if grid.start_nm > emitter.lambda0_nm - half + tol
        || grid.end_nm < emitter.lambda0_nm + half - tol
    {
        return Err(Error::invalid(format!(
            "wavelength grid [{}, {}] nm must cover {} ± {half} nm",
            grid.start_nm, grid.end_nm, emitter.lambda0_nm
        )));
    }
    let lines: Vec<(f64, f64)> = offsets_nm
        .iter()
        .map(|&(o, w)| (emitter.lambda0_nm + o, w))
        .collect();
    let wl = grid.points();
    let raw = lorentzian_sum(&lines, emitter.homogeneous_fwhm_nm, &wl);
    let peak = argmax(&raw).map(|i| raw[i]).unwrap_or(0.0);
    if !(peak > 0.0) {
        return Err(Error::invalid("all line weights are zero"));
    }
    Spectrum::new(wl, raw.iter().map(|v| v / peak).collect())
}

/// Equal-weight Lorentzian per ensemble member at `λ₀ + Δλ_i`.
pub fn synthesize_spectrum(
    ensemble: &ShiftEnsemble,
    emitter: &EmitterConfig,
    grid: &WavelengthGrid,
) -> Result<Spectrum> {
    let offsets = wavelength_offsets(ensemble, emitter)?;
    let lines: Vec<(f64, f64)> = offsets.into_iter().map(|o| (o, 1.0)).collect();
    synthesize_lines(&lines, emitter, grid)
}

pub fn wavelength_offsets(ensemble: &ShiftEnsemble, emitter: &EmitterConfig) -> Result<Vec<f64>> {
    ensemble
        .shifts
        .iter()
        .map(|s| s.delta_lambda_nm(emitter.lambda0_nm))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width_mev: f64,
    /// Bin `j` is centred on `(first_bin + j)·bin_width_mev`.
    pub first_bin: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers_mev(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|j| (self.first_bin + j as i64) as f64 * self.bin_width_mev)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn histogram(ensemble: &ShiftEnsemble, bin_width_mev: f64) -> Result<Histogram> {
    histogram_values(&ensemble.shifts_mev(), bin_width_mev)
}

/// Bins centred on integer multiples of `bin_width_mev`, spanning the data.
pub fn histogram_values(values: &[f64], bin_width_mev: f64) -> Result<Histogram> {
    if !(bin_width_mev.is_finite() && bin_width_mev > 0.0) {
        return Err(Error::invalid("bin width must be positive"));
    }
    if values.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite shift in ensemble"));
    }
    let bin = |v: f64| (v / bin_width_mev).round() as i64;
    let lo = values.iter().map(|v| bin(*v)).min().unwrap_or(0);
    let hi = values.iter().map(|v| bin(*v)).max().unwrap_or(0);
    let span = (hi - lo) as u64 + 1;
    if span > 10_000_000 {
        return Err(Error::invalid(format!(
            "bin width {bin_width_mev} meV gives {span} bins"
        )));
    }
    let mut counts = vec![0u64; span as usize];
    for v in values {
        counts[(bin(*v) - lo) as usize] += 1;
    }
    Ok(Histogram {
        bin_width_mev,
        first_bin: lo,
        counts,
    })
}

/// Sample skewness `m₃ / m₂^{3/2}`.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(a, b), v| {
        let d = v - mean;
        (a + d * d, b + d * d * d)
    });
    (m3 / n) / (m2 / n).powf(1.5)
}

/// Linear-interpolated quantile, `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let p = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = p.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    v[i] + (p - i as f64) * (v[j] - v[i])
}
