//! Acceptance suite: one line per criterion, exit code 1 on any unexpected
//! result.
//!
//! Criteria listed in `EXPECTED_FAIL` are run at their stated tolerance and
//! reported as FAIL; they only break the run if they start passing, so a
//! fixed input shows up immediately.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use defect_spectra::ensemble::{
    histogram, quantile, sample_biased_z, sample_defect_field, sample_uniform, skewness,
    synthesize_lines, synthesize_spectrum, DefectFieldSpec, SamplerMode, SamplerSpec,
    WavelengthGrid,
};
use defect_spectra::fitting::{fit_peaks, fit_power_law, fit_single_exponential, numerical_fwhm};
use defect_spectra::io;
use defect_spectra::kinetics::{
    decompose_lifetimes, simulate_decay, sweep_fluence, DamageParams, DecayModelParams,
    IrradiationSchedule, SweepRow,
};
use defect_spectra::lattice::{
    build_supercell, enumerate_candidates, min_image_separation, EnumerationOptions,
    GCenterPlacement, SiteKind, SILICON_LATTICE_CONSTANT_NM,
};
use defect_spectra::strainfield::{DefectKind, ElasticParams};
use defect_spectra::zplmap::ZplResponseTable;
use defect_spectra::{DecayTrace, EmitterConfig, Spectrum};

/// Two equal Lorentzians of 0.073 nm at ±0.05 nm have a composite FWHM of
/// 0.174 nm, outside the stated 0.130 ± 0.005 nm.
const EXPECTED_FAIL: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "lifetime arithmetic", 1.0, c1_lifetimes),
        (2, "site enumeration", 1.0, c2_sites),
        (3, "biased-z retention", 5.0, c3_biased_z),
        (4, "linewidth composition", 1.0, c4_linewidth),
        (5, "shift-distribution shapes", 10.0, c5_shapes),
        (6, "redshifted shoulder", 5.0, c6_shoulder),
        (7, "fit recovery suite", 30.0, c7_fits),
        (8, "kinetics directional claims", 60.0, c8_kinetics),
        (9, "determinism across thread caps", 30.0, c9_determinism),
    ];
    let mut unexpected = 0;
    for (id, name, budget_s, run) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        // runtime budgets are for optimised builds
        let slow = cfg!(not(debug_assertions)) && secs > budget_s;
        let pass = result.pass && !slow;
        let xfail = EXPECTED_FAIL.contains(&id);
        let tag = match (pass, xfail) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected, see notes)",
            (true, true) => "PASS (unexpected)",
        };
        if pass == xfail {
            unexpected += 1;
        }
        println!(
            "[{tag}] criterion {id}: {name} ({secs:.2} s, budget {budget_s} s) {}",
            result.detail
        );
    }
    if unexpected > 0 {
        println!("{unexpected} criteria with unexpected outcome");
        std::process::exit(1);
    }
}

fn c1_lifetimes() -> Outcome {
    let a = decompose_lifetimes(13.0, 45.0).unwrap();
    let b = decompose_lifetimes(6.0, 45.0).unwrap();
    let pass = (a.tau_nr_ns - 18.3).abs() <= 0.1
        && (100.0 * a.qe - 28.9).abs() <= 0.2
        && (b.tau_nr_ns - 6.9).abs() <= 0.1
        && (100.0 * b.qe - 13.3).abs() <= 0.2;
    outcome(
        pass,
        format!(
            "13 ns: tau_nr={:.3} ns qe={:.2}%; 6 ns: tau_nr={:.3} ns qe={:.2}%",
            a.tau_nr_ns,
            100.0 * a.qe,
            b.tau_nr_ns,
            100.0 * b.qe
        ),
    )
}

/// Independent void oracle: every point of the quarter-lattice with all
/// coordinates in {1/4, 3/4} (per conventional cell) that is not an atom and
/// has exactly four atoms at the bond length.
fn brute_force_voids(n: usize) -> Vec<[f64; 3]> {
    let g = build_supercell(n, SILICON_LATTICE_CONSTANT_NM).unwrap();
    let bond = SILICON_LATTICE_CONSTANT_NM * 3f64.sqrt() / 4.0;
    let mut out = Vec::new();
    let quarter = 4 * n;
    for i in 0..quarter {
        for j in 0..quarter {
            for k in 0..quarter {
                if i % 2 == 0 || j % 2 == 0 || k % 2 == 0 {
                    continue;
                }
                let p = [i, j, k].map(|v| v as f64 / quarter as f64);
                let dists: Vec<f64> = g
                    .atom_positions()
                    .iter()
                    .map(|a| min_image_separation(&g, p, *a))
                    .collect();
                let occupied = dists.iter().any(|d| *d < 1e-9);
                let tetra = dists.iter().filter(|d| (**d - bond).abs() < 1e-9).count() == 4;
                if !occupied && tetra {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn c2_sites() -> Outcome {
    let g = build_supercell(3, SILICON_LATTICE_CONSTANT_NM).unwrap();
    let opts = EnumerationOptions::default();
    let gcb = GCenterPlacement::centered(&g).unwrap();
    let vac = enumerate_candidates(&g, Some(&gcb), SiteKind::Vacancy, &opts).unwrap().len();
    let pristine = enumerate_candidates(&g, None, SiteKind::Vacancy, &opts).unwrap().len();
    let pristine_voids = enumerate_candidates(&g, None, SiteKind::InterstitialVoid, &opts)
        .unwrap()
        .len();
    let voids = enumerate_candidates(&g, Some(&gcb), SiteKind::InterstitialVoid, &opts)
        .unwrap()
        .len();
    let oracle = brute_force_voids(3);
    let mut lib: Vec<[f64; 3]> = g.tetrahedral_voids();
    let same_set = lib.len() == oracle.len()
        && lib.iter_mut().all(|v| oracle.iter().any(|o| min_image_separation(&g, *v, *o) < 1e-9));
    outcome(
        vac == 215 && pristine == 216 && pristine_voids == 108 && oracle.len() == 108 && same_set && voids == 106,
        format!(
            "GCB vacancies={vac}, pristine sites={pristine}, pristine voids={pristine_voids} (oracle {}), GCB voids={voids}",
            oracle.len()
        ),
    )
}

fn c3_biased_z() -> Outcome {
    let spec = SamplerSpec {
        mode: SamplerMode::BiasedZ,
        n_samples: 109_000,
        seed: 3,
        ..SamplerSpec::default()
    };
    let e = sample_biased_z(&spec, &ZplResponseTable::placeholder()).unwrap();
    let frac = e.retention_fraction();
    outcome(
        (frac - 0.109).abs() <= 0.005 && e.draws >= 900_000,
        format!("retention {frac:.5} over {} raw draws (target 0.109 ± 0.005)", e.draws),
    )
}

fn c4_linewidth() -> Outcome {
    let em = EmitterConfig::default();
    let grid = WavelengthGrid::covering(&em, 0.05, 0.0002);
    let two = synthesize_lines(&[(-0.05, 1.0), (0.05, 1.0)], &em, &grid).unwrap();
    let one = synthesize_lines(&[(0.0, 1.0)], &em, &grid).unwrap();
    let w2 = numerical_fwhm(&two).unwrap();
    let w1 = numerical_fwhm(&one).unwrap();
    outcome(
        (w2 - 0.130).abs() <= 0.005 && (w1 - 0.073).abs() <= 0.001,
        format!("two-line FWHM {w2:.4} nm (target 0.130 ± 0.005), single line {w1:.4} nm (target 0.073 ± 0.001)"),
    )
}

fn shell_ensemble(kind: DefectKind, seed: u64) -> Vec<f64> {
    let spec = SamplerSpec {
        mode: SamplerMode::DefectField,
        n_samples: 10_000,
        seed,
        defect_field: Some(DefectFieldSpec::single(kind, 0.9, 1.6)),
        ..SamplerSpec::default()
    };
    sample_defect_field(&spec, &ZplResponseTable::placeholder(), &ElasticParams::default())
        .unwrap()
        .shifts_mev()
}

fn c5_shapes() -> Outcome {
    let vac = shell_ensemble(DefectKind::Vacancy, 5);
    let int = shell_ensemble(DefectKind::SelfInterstitial, 6);
    let n = vac.len() as f64;
    let blue = vac.iter().filter(|s| **s > 0.0).count() as f64 / n;
    let red = vac.iter().filter(|s| **s < 0.0).count() as f64 / n;
    let int_red = int.iter().filter(|s| **s < 0.0).count() as f64 / int.len() as f64;
    outcome(
        blue >= 0.10 && red >= 0.10 && int_red >= 0.95,
        format!(
            "vacancy shell 0.9-1.6 nm: {:.1}% blue / {:.1}% red; interstitial: {:.1}% red",
            100.0 * blue,
            100.0 * red,
            100.0 * int_red
        ),
    )
}

fn c6_shoulder() -> Outcome {
    let spec = SamplerSpec {
        n_samples: 100_000,
        seed: 6,
        ..SamplerSpec::default()
    };
    let s = sample_uniform(&spec, &ZplResponseTable::placeholder()).unwrap().shifts_mev();
    let skew = skewness(&s);
    let (q10, q50, q90) = (quantile(&s, 0.1), quantile(&s, 0.5), quantile(&s, 0.9));
    outcome(
        skew < 0.0 && q50 - q10 > q90 - q50,
        format!(
            "skewness {skew:.3}; median-q10 {:.3} meV vs q90-median {:.3} meV",
            q50 - q10,
            q90 - q50
        ),
    )
}

fn poisson_noise(values: &[f64], peak: f64, seed: u64) -> Vec<f64> {
    let max = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    values
        .iter()
        .map(|v| {
            let mean = v / max * peak;
            if mean > 0.0 {
                Poisson::new(mean).unwrap().sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn c7_fits() -> Outcome {
    let mut worst_clean = 0.0_f64;
    let mut worst_noisy = 0.0_f64;
    let mut log = Vec::new();

    let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.025).collect();
    for (k, tau) in [6.0, 8.1, 9.3, 13.0].into_iter().enumerate() {
        let clean: Vec<f64> = t.iter().map(|x| 1e4 * (-x / tau).exp()).collect();
        let f = fit_single_exponential(&DecayTrace::new(t.clone(), clean.clone()).unwrap(), None)
            .unwrap();
        worst_clean = worst_clean.max(rel(f.value("tau_ns"), tau));
        let noisy = poisson_noise(&clean, 1e4, 70 + k as u64);
        let g = fit_single_exponential(&DecayTrace::new(t.clone(), noisy).unwrap(), None).unwrap();
        worst_noisy = worst_noisy.max(rel(g.value("tau_ns"), tau));
        log.push(format!("tau {tau}: {:.4}/{:.3}", f.value("tau_ns"), g.value("tau_ns")));
    }

    let fluences = [1e11, 3e11, 1e12, 3e12, 1e13, 3e13, 1e14];
    for (k, exponent) in [0.17, 0.65].into_iter().enumerate() {
        let clean: Vec<f64> = fluences.iter().map(|f: &f64| f.powf(exponent)).collect();
        let pts: Vec<(f64, f64)> = fluences.iter().copied().zip(clean.iter().copied()).collect();
        let f = fit_power_law(&pts).unwrap();
        worst_clean = worst_clean.max(rel(f.value("exponent"), exponent));
        let noisy = poisson_noise(&clean, 1e4, 80 + k as u64);
        let npts: Vec<(f64, f64)> = fluences.iter().copied().zip(noisy).collect();
        let g = fit_power_law(&npts).unwrap();
        worst_noisy = worst_noisy.max(rel(g.value("exponent"), exponent));
        log.push(format!("exp {exponent}: {:.5}/{:.4}", f.value("exponent"), g.value("exponent")));
    }

    let x: Vec<f64> = (0..=1600).map(|i| 1277.5 + i as f64 * 0.001).collect();
    let profile = |v: f64| {
        let h: f64 = 0.0365;
        h * h / ((v - 1278.3) * (v - 1278.3) + h * h)
    };
    let clean: Vec<f64> = x.iter().map(|v| profile(*v)).collect();
    let f = fit_peaks(&Spectrum::new(x.clone(), clean.clone()).unwrap(), 1).unwrap();
    let p = f.model.peaks[0];
    worst_clean = worst_clean.max(rel(p.center_nm, 1278.3)).max(rel(p.fwhm_nm, 0.073));
    let noisy = poisson_noise(&clean, 1e4, 90);
    let g = fit_peaks(&Spectrum::new(x, noisy).unwrap(), 1).unwrap();
    let q = g.model.peaks[0];
    worst_noisy = worst_noisy.max(rel(q.center_nm, 1278.3)).max(rel(q.fwhm_nm, 0.073));
    log.push(format!(
        "lorentzian: {:.5}/{:.5} nm, fwhm {:.5}/{:.5} nm",
        p.center_nm, q.center_nm, p.fwhm_nm, q.fwhm_nm
    ));

    outcome(
        worst_clean <= 0.005 && worst_noisy <= 0.05,
        format!(
            "worst relative error noiseless {worst_clean:.2e} (<= 0.5%), Poisson {worst_noisy:.2e} (<= 5%); {}",
            log.join("; ")
        ),
    )
}

const SWEEP_FLUENCES: [f64; 4] = [1e11, 1e12, 1e13, 1e14];
const BACKGROUND_TRAPS_CM3: f64 = 5.46e16;

fn pulsed_template() -> IrradiationSchedule {
    IrradiationSchedule::pulsed(7.9e10, 1e-8, 45.0, 1).unwrap()
}

fn cw_template() -> IrradiationSchedule {
    IrradiationSchedule::continuous(8e11, 1e14).unwrap()
}

fn run_sweep(template: &IrradiationSchedule) -> Vec<SweepRow> {
    sweep_fluence(
        template,
        &SWEEP_FLUENCES,
        &DamageParams::default(),
        &DecayModelParams::default(),
        BACKGROUND_TRAPS_CM3,
    )
    .unwrap()
}

fn exponent(rows: &[SweepRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.fluence_cm2, r.intensity)).collect();
    fit_power_law(&pts).unwrap().value("exponent")
}

fn fitted_tau(p: &DecayModelParams) -> f64 {
    let sim = simulate_decay(p).unwrap();
    fit_single_exponential(&sim.trace, None).unwrap().value("tau_ns")
}

fn c8_kinetics() -> Outcome {
    let pulsed = run_sweep(&pulsed_template());
    let cw = run_sweep(&cw_template());
    let (ep, ec) = (exponent(&pulsed), exponent(&cw));
    let decreasing = |rows: &[SweepRow]| rows.windows(2).all(|w| w[1].tau_eff_ns < w[0].tau_eff_ns);
    let taus = |rows: &[SweepRow]| {
        rows.iter()
            .map(|r| format!("{:.2}", r.tau_eff_ns))
            .collect::<Vec<_>>()
            .join(",")
    };
    let pump: Vec<f64> = [0.3, 0.6, 0.9, 1.2]
        .iter()
        .map(|mw| {
            fitted_tau(&DecayModelParams {
                pump_mw: *mw,
                ..DecayModelParams::default()
            })
        })
        .collect();
    let increasing = pump.windows(2).all(|w| w[1] > w[0]);
    outcome(
        ep > ec && decreasing(&pulsed) && decreasing(&cw) && increasing,
        format!(
            "(a) exponent pulsed {ep:.3} vs cw {ec:.3}; (b) tau_eff pulsed [{}] cw [{}] ns; (c) tau_eff at 0.3..1.2 mW [{}] ns",
            taus(&pulsed),
            taus(&cw),
            pump.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>().join(",")
        ),
    )
}

/// CSV outputs of the spectrum, decay and sweep pipelines.
fn simulate_all() -> Vec<String> {
    let table = ZplResponseTable::placeholder();
    let em = EmitterConfig::default();
    let spec = SamplerSpec {
        mode: SamplerMode::BiasedZ,
        n_samples: 20_000,
        seed: 9,
        ..SamplerSpec::default()
    };
    let ens = sample_biased_z(&spec, &table).unwrap();
    let offsets = defect_spectra::ensemble::wavelength_offsets(&ens, &em).unwrap();
    let max = offsets.iter().fold(0.0_f64, |m, o| m.max(o.abs()));
    let grid = WavelengthGrid::covering(&em, max, 0.01);
    let spectrum = synthesize_spectrum(&ens, &em, &grid).unwrap();
    let hist = histogram(&ens, 0.1).unwrap();
    let trace = simulate_decay(&DecayModelParams::default()).unwrap().trace;
    let sweep: Vec<(String, SweepRow)> = run_sweep(&pulsed_template())
        .into_iter()
        .map(|r| ("pulsed".to_string(), r))
        .collect();
    vec![
        io::spectrum_to_csv(&spectrum),
        io::histogram_to_csv(&hist),
        io::ensemble_to_csv(&ens),
        io::trace_to_csv(&trace),
        io::sweep_to_csv(&sweep),
    ]
}

fn c9_determinism() -> Outcome {
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(simulate_all)
    };
    let one = run_with(1);
    let four = run_with(4);
    let again = run_with(4);
    let bytes: usize = one.iter().map(String::len).sum();
    outcome(
        one == four && four == again,
        format!("5 CSV outputs, {bytes} bytes, identical for 1 and 4 threads and on repeat"),
    )
}
