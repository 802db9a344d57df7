use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use defect_spectra::ensemble::{
    histogram, sample, synthesize_spectrum, wavelength_offsets, SamplerMode, WavelengthGrid,
};
use defect_spectra::fitting::{
    fit_peaks, fit_power_law, fit_single_exponential, numerical_fwhm, FitParameter, FitResult,
};
use defect_spectra::io::{self, fmt_num};
use defect_spectra::kinetics::{
    decompose_lifetimes, rise_time, simulate_decay as run_decay, sweep_fluence as run_sweep,
    with_counting_noise,
};
use defect_spectra::lattice::{
    build_supercell, enumerate_candidates, write_xyz, EnumerationOptions, GCenterOptions,
    GCenterPlacement, SiteKind, SILICON_LATTICE_CONSTANT_NM,
};
use defect_spectra::zplmap::{load_response_table, ZplResponseTable};
use defect_spectra::{energy_shift_to_wavelength_shift, wavelength_shift_to_energy_shift};

use crate::config::RunConfig;
use crate::svg::{line_plot, Series};
use crate::{
    CliError, Common, ConvertArgs, DecayArgs, FitArgs, FitModel, SiteArg, SitesArgs, SpectrumArgs,
    SweepArgs,
};

/// Writes each file whole: contents go to a temporary file in the target
/// directory, which is then renamed into place.
struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir })
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let err = |e: std::io::Error| CliError::Io(format!("{}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        tmp.write_all(contents.as_bytes()).map_err(err)?;
        tmp.as_file().sync_all().map_err(err)?;
        tmp.persist(&target).map_err(|e| err(e.error))?;
        println!("wrote {}", target.display());
        Ok(())
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn output(common: &Common, cfg: &RunConfig) -> Result<Output, CliError> {
    let dir = common
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Output::new(dir)
}

fn require_seed(common: &Common, cfg: &RunConfig) -> Result<u64, CliError> {
    common.seed.or(cfg.seed).ok_or_else(|| {
        CliError::Validation("seed: required; pass --seed or set `seed` in the config".into())
    })
}

pub fn simulate_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.common)?;
    let seed = require_seed(&args.common, &cfg)?;
    if let Some(n) = args.samples {
        cfg.sampler.samples = n;
    }
    let mode_text = args.mode.clone().unwrap_or_else(|| cfg.sampler.mode.clone());
    let mode: SamplerMode = mode_text
        .parse()
        .map_err(|e| CliError::Validation(format!("sampler.mode: {e}")))?;
    let emitter = cfg.emitter()?;
    let elastic = cfg.elastic()?;
    if mode == SamplerMode::DefectField && elastic.is_none() {
        return Err(CliError::Validation(
            "elastic: defect-field mode needs an [elastic] section".into(),
        ));
    }
    let spec = cfg.sampler(mode, seed)?;
    if !(cfg.sampler.bin_width_mev > 0.0) {
        return Err(CliError::Validation("sampler.bin_width_mev must be > 0".into()));
    }
    let table = match &cfg.response_table {
        Some(p) => load_response_table(p)
            .map_err(|e| CliError::Validation(format!("response_table: {e}")))?,
        None => ZplResponseTable::placeholder(),
    };
    let out = output(&args.common, &cfg)?;

    let ens = sample(&spec, &table, elastic.as_ref())?;
    let offsets = wavelength_offsets(&ens, &emitter)?;
    let max = offsets.iter().fold(0.0_f64, |m, o| m.max(o.abs()));
    let grid = WavelengthGrid::covering(&emitter, max, cfg.sampler.grid_step_nm);
    let spectrum = synthesize_spectrum(&ens, &emitter, &grid)
        .map_err(|e| CliError::Validation(format!("sampler.grid_step_nm: {e}")))?;
    let hist = histogram(&ens, cfg.sampler.bin_width_mev)?;

    let centers = hist.centers_mev();
    let counts: Vec<f64> = hist.counts.iter().map(|c| *c as f64).collect();
    let fwhm = numerical_fwhm(&spectrum).ok();
    let plot = line_plot(
        &format!("{} ensemble, {} samples", mode.as_str(), ens.len()),
        "wavelength (nm)",
        "intensity (norm.)",
        &[Series {
            label: "spectrum",
            x: spectrum.wavelength_nm(),
            y: spectrum.intensity(),
        }],
        false,
        false,
    );
    out.write("spectrum.csv", &io::spectrum_to_csv(&spectrum))?;
    out.write("histogram.csv", &io::histogram_to_csv(&hist))?;
    out.write("spectrum.svg", &plot)?;
    if args.write_ensemble {
        out.write("ensemble.csv", &io::ensemble_to_csv(&ens))?;
    }
    let hist_plot = line_plot("ZPL shift histogram", "shift (meV)", "count", &[Series { label: "", x: &centers, y: &counts }], false, false);
    out.write("histogram.svg", &hist_plot)?;
    println!(
        "{} samples from {} draws (retention {:.5}), {} discarded",
        ens.len(),
        ens.draws,
        ens.retention_fraction(),
        ens.rejected_core_or_range
    );
    match fwhm {
        Some(w) => println!("spectrum FWHM {w:.4} nm"),
        None => println!("spectrum FWHM undefined on this grid"),
    }
    Ok(())
}

fn derived(name: &str, value: f64, stderr: f64) -> FitParameter {
    FitParameter {
        name: name.into(),
        value,
        stderr,
    }
}

pub fn simulate_decay(args: &DecayArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common)?;
    let seed = require_seed(&args.common, &cfg)?;
    let params = cfg.decay()?;
    let out = output(&args.common, &cfg)?;

    let sim = run_decay(&params)?;
    let trace = match cfg.decay.noise_peak_counts {
        Some(peak) => with_counting_noise(&sim.trace, peak, seed)?,
        None => sim.trace,
    };
    let window = cfg.decay.fit_window_ns.map(|[a, b]| (a, b));
    let fit = fit_single_exponential(&trace, window)?;
    let tau = fit.get("tau_ns").map(|p| (p.value, p.stderr)).unwrap_or_default();
    let lt = if tau.0 >= params.tau_r_ns {
        eprintln!(
            "warning: fitted lifetime {:.4} ns is not below tau_r = {} ns ({:+.3}%); \
             reporting no nonradiative channel",
            tau.0,
            params.tau_r_ns,
            100.0 * (tau.0 / params.tau_r_ns - 1.0)
        );
        decompose_lifetimes(params.tau_r_ns, params.tau_r_ns)?
    } else {
        decompose_lifetimes(tau.0, params.tau_r_ns)?
    };
    // first-order error propagation from the fitted lifetime
    let nr_err = if lt.tau_nr_ns.is_finite() {
        tau.1 * (lt.tau_nr_ns / tau.0).powi(2)
    } else {
        f64::INFINITY
    };
    let mut params_out = vec![
        derived("tau_eff_ns", tau.0, tau.1),
        derived("tau_nr_ns", lt.tau_nr_ns, nr_err),
        derived("qe", lt.qe, tau.1 / params.tau_r_ns),
    ];
    if let Ok(r) = rise_time(&trace) {
        params_out.push(derived("rise_time_ns", r, 0.5 * params.dt_ns));
    }
    let lifetimes = FitResult {
        parameters: params_out,
        residual_norm: fit.residual_norm,
        converged: fit.converged,
        iterations: fit.iterations,
    };

    let t0 = window.map_or_else(
        || trace.peak_index().map_or(0.0, |i| trace.time_ns()[i]),
        |w| w.0,
    );
    let amp = fit.value("amplitude");
    let base = fit.value("baseline");
    let fx: Vec<f64> = trace.time_ns().iter().copied().filter(|t| *t >= t0).collect();
    let fy: Vec<f64> = fx.iter().map(|t| amp * (-(t - t0) / tau.0).exp() + base).collect();
    let plot = line_plot(
        &format!("PL decay, tau_eff = {:.3} ns", tau.0),
        "time (ns)",
        "counts",
        &[
            Series { label: "trace", x: trace.time_ns(), y: trace.counts() },
            Series { label: "fit", x: &fx, y: &fy },
        ],
        false,
        true,
    );
    out.write("trace.csv", &io::trace_to_csv(&trace))?;
    out.write("trace.svg", &plot)?;
    out.write("fit_report.csv", &io::fit_report_to_csv(&[&fit, &lifetimes]))?;
    print!("{}", fit.summary());
    println!(
        "tau_nr = {:.4} ns, QE = {:.2}%; excitations: radiative {:.4e}, quenched {:.4e}, trapped {:.4e}",
        lt.tau_nr_ns,
        100.0 * lt.qe,
        sim.budget.radiative,
        sim.budget.quenched,
        sim.budget.trapped
    );
    Ok(())
}

pub fn sweep_fluence(args: &SweepArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common)?;
    let fluences = args.fluences.clone().unwrap_or_else(|| cfg.sweep.fluences_cm2.clone());
    if fluences.len() < 2 {
        return Err(CliError::Validation(format!(
            "sweep.fluences_cm2: need at least 2 fluence points, got {}",
            fluences.len()
        )));
    }
    if let Some(f) = fluences.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(CliError::Validation(format!(
            "sweep.fluences_cm2: fluence {f} must be finite and > 0"
        )));
    }
    let templates = cfg.templates()?;
    let damage = cfg.damage()?;
    let decay = cfg.decay()?;
    let out = output(&args.common, &cfg)?;

    let mut rows = Vec::new();
    for (label, t) in &templates {
        for r in run_sweep(t, &fluences, &damage, &decay, cfg.sweep.background_trap_cm3)? {
            rows.push((label.clone(), r));
        }
    }
    let curves: Vec<(String, Vec<f64>, Vec<f64>)> = templates
        .iter()
        .map(|(label, _)| {
            let (x, y) = rows
                .iter()
                .filter(|(l, _)| l == label)
                .map(|(_, r)| (r.fluence_cm2, r.intensity))
                .unzip();
            (label.clone(), x, y)
        })
        .collect();
    let series: Vec<Series> = curves
        .iter()
        .map(|(l, x, y)| Series { label: l, x, y })
        .collect();
    out.write("sweep.csv", &io::sweep_to_csv(&rows))?;
    out.write(
        "sweep.svg",
        &line_plot("PL intensity vs fluence", "fluence (cm^-2)", "n_G x QE", &series, true, true),
    )?;

    let mut fits = Vec::new();
    for (label, x, y) in &curves {
        let pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        let mut f = fit_power_law(&pts).map_err(|e| match e {
            defect_spectra::Error::Domain(m) => CliError::Numerical(format!("template `{label}`: power-law fit: {m}")),
            other => CliError::from(other),
        })?;
        for p in &mut f.parameters {
            p.name = format!("{label}.{}", p.name);
        }
        println!("{label}: exponent {:.4}", f.value(&format!("{label}.exponent")));
        fits.push(f);
    }
    let refs: Vec<&FitResult> = fits.iter().collect();
    out.write("scaling_fit.csv", &io::fit_report_to_csv(&refs))?;
    Ok(())
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let bad = |e: defect_spectra::Error| match e {
        defect_spectra::Error::Parse(m) => CliError::Validation(format!("{}: {m}", args.input.display())),
        other => other.into(),
    };
    let report = match args.model {
        FitModel::Exponential => {
            let trace = io::parse_trace_csv(&text).map_err(bad)?;
            let window = match args.window.as_deref() {
                None => None,
                Some(&[a, b]) => Some((a, b)),
                Some(w) => {
                    return Err(CliError::Validation(format!(
                        "--window takes `start,end`, got {} values",
                        w.len()
                    )))
                }
            };
            fit_single_exponential(&trace, window)?
        }
        FitModel::Peaks => {
            if args.peaks == 0 {
                return Err(CliError::Validation("--peaks must be >= 1".into()));
            }
            let spectrum = io::parse_spectrum_csv(&text).map_err(bad)?;
            let pf = fit_peaks(&spectrum, args.peaks)?;
            for w in &pf.warnings {
                eprintln!("warning: {w}");
            }
            pf.fit
        }
        FitModel::PowerLaw => {
            let cols = io::read_columns(&text, "fluence_cm2,intensity").map_err(bad)?;
            let pts: Vec<(f64, f64)> = cols[0].iter().copied().zip(cols[1].iter().copied()).collect();
            fit_power_law(&pts)?
        }
    };
    let out = Output::new(args.out_dir.clone())?;
    out.write("fit_report.csv", &io::fit_report_to_csv(&[&report]))?;
    print!("{}", report.summary());
    Ok(())
}

pub const SITES_HEADER: &str = "kind,x_frac,y_frac,z_frac,x_nm,y_nm,z_nm,separation_nm";

pub fn enumerate_sites(args: &SitesArgs) -> Result<(), CliError> {
    let geom = build_supercell(args.repeats, SILICON_LATTICE_CONSTANT_NM)?;
    let gcb = if args.pristine {
        None
    } else {
        let c = GCenterPlacement::centered(&geom)?;
        Some(GCenterPlacement::new(
            &geom,
            c.carbon_site_a,
            c.carbon_site_b,
            args.orientation,
            GCenterOptions::default(),
        )?)
    };
    let kind = match args.kind {
        SiteArg::Vacancy => SiteKind::Vacancy,
        SiteArg::Void => SiteKind::InterstitialVoid,
    };
    let opts = EnumerationOptions {
        exclusion_radius_nm: args.exclusion_radius,
    };
    let sites = enumerate_candidates(&geom, gcb.as_ref(), kind, &opts)?;
    let mut csv = format!("{SITES_HEADER}\n");
    for s in &sites {
        let c = geom.to_cartesian(s.position);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            s.kind.as_str(),
            fmt_num(s.position[0]),
            fmt_num(s.position[1]),
            fmt_num(s.position[2]),
            fmt_num(c[0]),
            fmt_num(c[1]),
            fmt_num(c[2]),
            fmt_num(s.separation_nm)
        );
    }
    let out = Output::new(args.out_dir.clone())?;
    out.write("sites.csv", &csv)?;
    if args.xyz {
        out.write("structure.xyz", &write_xyz(&geom, gcb.as_ref()))?;
    }
    println!("{} {} candidates", sites.len(), kind.as_str());
    Ok(())
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    match (args.input.mev, args.input.nm) {
        (Some(e), _) => {
            let d = energy_shift_to_wavelength_shift(e, args.lambda0)?;
            println!("delta_lambda_nm = {}", fmt_num(d));
        }
        (None, Some(d)) => {
            let e = wavelength_shift_to_energy_shift(d, args.lambda0)?;
            println!("delta_e_mev = {}", fmt_num(e));
        }
        (None, None) => unreachable!("clap requires one input"),
    }
    Ok(())
}
