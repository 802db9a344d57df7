use std::path::Path;
use std::process::{Command, Output};

use defect_spectra::ensemble::lorentzian_sum;
use defect_spectra::io::{self, parse_fit_report};
use defect_spectra::Spectrum;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_defect-spectra"));
    c.env_remove("DEFECT_SPECTRA_THREADS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn report_value(path: impl AsRef<Path>, name: &str) -> f64 {
    parse_fit_report(&read(path))
        .unwrap()
        .into_iter()
        .find(|r| r.0 == name)
        .unwrap_or_else(|| panic!("no `{name}` in report"))
        .1
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SPECTRUM_FILES: [&str; 2] = ["spectrum.csv", "histogram.csv"];

#[test]
fn spectrum_smoke_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec!["simulate-spectrum", "--mode", "biased-z", "--samples", "20000", "--seed", "7", "--write-ensemble", "--out-dir", out]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let mut outputs = Vec::new();
    for (out, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let o = bin().args(args(out)).env("DEFECT_SPECTRA_THREADS", threads).current_dir(tmp.path()).output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(out);
    }
    let hist = read(tmp.path().join("a/histogram.csv"));
    assert!(hist.lines().count() > 1);
    assert!(read(tmp.path().join("a/spectrum.svg")).contains("<polyline"));
    for f in SPECTRUM_FILES.iter().chain(&["ensemble.csv"]) {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        for other in &outputs[1..] {
            assert_eq!(a, std::fs::read(tmp.path().join(other).join(f)).unwrap(), "{f} differs in {other}");
        }
    }
}

#[test]
fn defect_field_needs_elastic_section() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "df.toml", "seed = 3\n[defect_field]\nkind = \"interstitial\"\n");
    let o = run(&["simulate-spectrum", "--config", &cfg, "--mode", "defect-field"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("elastic"), "{}", stderr(&o));
    assert!(!tmp.path().join("spectrum.csv").exists());

    let cfg = write(
        tmp.path(),
        "df2.toml",
        "seed = 3\noutput_dir = \"out\"\n[sampler]\nsamples = 2000\n[elastic]\n[defect_field]\nkind = \"interstitial\"\n",
    );
    let o = run(&["simulate-spectrum", "--config", &cfg, "--mode", "defect-field"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("out/spectrum.csv").exists());
}

#[test]
fn config_validation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("seed = 1\n[sampler]\nsampels = 10\n", "sampels"),
        ("seed = 1\nbogus = 2\n", "bogus"),
        ("seed = 1\n[decay]\ndt_ns = 5.0\n", "dt_ns"),
        ("seed = 1\n[sampler]\nmode = \"gaussian\"\n", "gaussian"),
        ("[sampler]\nsamples = 10\n", "seed"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{i}.toml"), text);
        let cmd = if key == &"dt_ns" { "simulate-decay" } else { "simulate-spectrum" };
        let o = run(&[cmd, "--config", &cfg], tmp.path());
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn help_documents_config_keys() {
    let o = bin().arg("--help").output().unwrap();
    let help = String::from_utf8(o.stdout).unwrap();
    for key in [
        "seed", "output_dir", "response_table", "schedule", "[emitter]", "lambda0_nm", "homogeneous_fwhm_nm",
        "[sampler]", "strain_range", "xy_threshold", "keep_fraction", "max_draws", "grid_step_nm",
        "bin_width_mev", "[elastic]", "atomic_volume_nm3", "core_cutoff_nm", "[defect_field]", "placement",
        "inner_radius_nm", "outer_radius_nm", "charge", "vacancy_volumes", "interstitial_volumes", "[decay]",
        "tau_r_ns", "g_density_cm3", "trap_density_cm3", "capture_coefficient_g", "capture_coefficient_trap",
        "trap_saturation_density_cm3", "pump_mw", "carriers_per_mw_cm3", "t_end_ns", "dt_ns", "rtol",
        "noise_peak_counts", "fit_window_ns", "[damage]", "damage_rate_per_nm", "damage_depth_nm",
        "carbon_areal_density_cm2", "g_formation_coefficient", "formation_flux_enhancement",
        "formation_flux_scale", "g_destruction_coefficient", "activation_energy_ev", "destruction_quench_flux",
        "trap_formation_coefficient", "clustering_threshold_flux", "dynamic_annealing_rate", "[sweep]",
        "fluences_cm2", "background_trap_cm3", "[[sweep.templates]]", "label", "pulse_fluence_cm2", "pulse_s",
        "gap_s", "flux_cm2_s",
    ] {
        assert!(help.contains(key), "--help does not mention `{key}`");
    }
}

#[test]
fn decay_report_and_trap_free_lifetime() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["simulate-decay", "--seed", "1", "--out-dir", "d"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let qe = report_value(tmp.path().join("d/fit_report.csv"), "qe");
    assert!(qe > 0.0 && qe <= 1.0, "{qe}");

    let cfg = write(tmp.path(), "free.toml", "seed = 1\n[decay]\ntrap_density_cm3 = 0\nt_end_ns = 400\n");
    let o = run(&["simulate-decay", "--config", &cfg, "--out-dir", "free"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tau = report_value(tmp.path().join("free/fit_report.csv"), "tau_eff_ns");
    assert!((tau / 45.0 - 1.0).abs() < 5e-3, "{tau}");
}

#[test]
fn missing_schedule_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", "seed = 1\nschedule = \"nope.csv\"\n");
    for cmd in ["simulate-decay", "sweep-fluence"] {
        let o = run(&[cmd, "--config", &cfg], tmp.path());
        assert_eq!(code(&o), 2, "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("schedule"));
    }
}

#[test]
fn fit_reproduces_embedded_lifetime() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "n.toml", "seed = 5\n[decay]\nnoise_peak_counts = 1e4\n");
    assert_eq!(code(&run(&["simulate-decay", "--config", &cfg, "--out-dir", "d"], tmp.path())), 0);
    let o = run(&["fit", "d/trace.csv", "--model", "exponential", "--out-dir", "f"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = report_value(tmp.path().join("d/fit_report.csv"), "tau_ns");
    let b = report_value(tmp.path().join("f/fit_report.csv"), "tau_ns");
    assert_eq!(a, b);
}

#[test]
fn fit_window_takes_two_values() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["simulate-decay", "--seed", "1", "--out-dir", "d"], tmp.path())), 0);
    let ok = run(&["fit", "d/trace.csv", "--model", "exponential", "--window", "5,60"], tmp.path());
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let bad = run(&["fit", "d/trace.csv", "--model", "exponential", "--window", "5,60,70"], tmp.path());
    assert_eq!(code(&bad), 2, "{}", stderr(&bad));
}

#[test]
fn fit_rejects_malformed_header() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "bad.csv", "time,counts\n0,1\n1,0.5\n");
    let o = run(&["fit", &f, "--model", "exponential"], tmp.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!tmp.path().join("fit_report.csv").exists());
}

#[test]
fn fit_resolves_isotope_side_peaks() {
    let tmp = tempfile::tempdir().unwrap();
    let x: Vec<f64> = (0..=3000).map(|i| 1277.8 + i as f64 * 0.0005).collect();
    let lines = [(1278.30, 1.0), (1278.55, 0.12), (1278.78, 0.06)];
    let raw = lorentzian_sum(&lines.map(|(c, h)| (c, h * std::f64::consts::PI * 0.0365)), 0.073, &x);
    let f = write(tmp.path(), "iso.csv", &io::spectrum_to_csv(&Spectrum::new(x, raw).unwrap()));
    let o = run(&["fit", &f, "--model", "peaks", "--peaks", "3"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = parse_fit_report(&read(tmp.path().join("fit_report.csv"))).unwrap();
    let mut centers: Vec<f64> = report.iter().filter(|r| r.0.ends_with(".center_nm")).map(|r| r.1).collect();
    centers.sort_by(f64::total_cmp);
    assert_eq!(centers.len(), 3);
    for (c, (want, _)) in centers.iter().zip(lines) {
        assert!((c - want).abs() < 1e-3, "{centers:?}");
    }
}

#[test]
fn sweep_orders_pulsed_above_cw() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["sweep-fluence", "--out-dir", "w"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = tmp.path().join("w/scaling_fit.csv");
    assert!(report_value(&path, "pulsed.exponent") > report_value(&path, "cw.exponent"));
    let sweep = read(tmp.path().join("w/sweep.csv"));
    assert_eq!(sweep.lines().next().unwrap(), io::SWEEP_HEADER);
    assert_eq!(sweep.lines().count(), 9);
}

#[test]
fn sweep_needs_two_fluences() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["sweep-fluence", "--fluences", "1e12"], tmp.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn zero_flux_template_surfaces_fit_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(tmp.path(), "zero.csv", "flux_cm2_s,duration_s,gap_s\n0,1,0\n");
    let cfg = write(tmp.path(), "z.toml", &format!("schedule = \"{s}\"\n"));
    let o = run(&["sweep-fluence", "--config", &cfg, "--out-dir", "z"], tmp.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let sweep = read(tmp.path().join("z/sweep.csv"));
    let rows: Vec<&str> = sweep.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{sweep}");
    assert!(!tmp.path().join("z/scaling_fit.csv").exists());
    // nothing half-written is left behind
    let names: Vec<String> = std::fs::read_dir(tmp.path().join("z"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| n == "sweep.csv" || n == "sweep.svg"), "{names:?}");
}

#[test]
fn enumerate_sites_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for (args, n) in [
        (vec!["--kind", "vacancy"], 215),
        (vec!["--kind", "void"], 106),
        (vec!["--kind", "vacancy", "--pristine"], 216),
        (vec!["--kind", "void", "--pristine"], 108),
    ] {
        let mut a = vec!["enumerate-sites", "--xyz"];
        a.extend(args);
        let o = run(&a, tmp.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(read(tmp.path().join("sites.csv")).lines().count(), n + 1);
    }
    assert!(read(tmp.path().join("structure.xyz")).starts_with("216\n"));
}

#[test]
fn convert_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["convert", "--mev", "-1"], tmp.path());
    let text = String::from_utf8(o.stdout).unwrap();
    let nm: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((nm - 1278.3f64.powi(2) * 1e-3 / 1239.842).abs() < 1e-3 * nm, "{text}");
    let o = run(&["convert", "--nm", &nm.to_string()], tmp.path());
    let text = String::from_utf8(o.stdout).unwrap();
    let mev: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((mev + 1.0).abs() < 1e-9, "{text}");
    assert_eq!(code(&run(&["convert"], tmp.path())), 2);
}

#[test]
fn bad_thread_cap_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().args(["convert", "--mev", "1"]).env("DEFECT_SPECTRA_THREADS", "zero").current_dir(tmp.path()).output().unwrap();
    assert_eq!(code(&o), 2);
}
