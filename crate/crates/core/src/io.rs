//! CSV readers and writers for the exchange formats.
//!
//! | content      | header                                                   |
//! |--------------|----------------------------------------------------------|
//! | spectrum     | `wavelength_nm,intensity`                                |
//! | histogram    | `shift_mev,count`                                        |
//! | ensemble     | `sample_id,e_xx,e_yy,e_zz,e_xy,e_xz,e_yz,shift_mev`      |
//! | decay trace  | `time_ns,counts`                                         |
//! | sweep        | `template,fluence_cm2,n_G,n_trap,tau_eff_ns,intensity`   |
//! | fit report   | `parameter,value,stderr`                                 |
//! | schedule     | `flux_cm2_s,duration_s,gap_s`                            |
//!
//! Numbers are written with Rust's shortest round-trip formatting, switching
//! to exponent notation outside `1e-4 ≤ |x| < 1e7`.

use std::fmt::Write as _;

use crate::domain::{DecayTrace, Spectrum};
use crate::ensemble::{Histogram, ShiftEnsemble};
use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::kinetics::SweepRow;

pub const SPECTRUM_HEADER: &str = "wavelength_nm,intensity";
pub const HISTOGRAM_HEADER: &str = "shift_mev,count";
pub const ENSEMBLE_HEADER: &str = "sample_id,e_xx,e_yy,e_zz,e_xy,e_xz,e_yz,shift_mev";
pub const TRACE_HEADER: &str = "time_ns,counts";
pub const SWEEP_HEADER: &str = "template,fluence_cm2,n_G,n_trap,tau_eff_ns,intensity";
pub const FIT_HEADER: &str = "parameter,value,stderr";

pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) || !x.is_finite() {
        let s = format!("{x}");
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:e}")
    }
}

fn two_columns(header: &str, a: &[f64], b: &[f64]) -> String {
    let mut out = String::with_capacity(a.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (x, y) in a.iter().zip(b) {
        let _ = writeln!(out, "{},{}", fmt_num(*x), fmt_num(*y));
    }
    out
}

pub fn spectrum_to_csv(s: &Spectrum) -> String {
    two_columns(SPECTRUM_HEADER, s.wavelength_nm(), s.intensity())
}

pub fn trace_to_csv(t: &DecayTrace) -> String {
    two_columns(TRACE_HEADER, t.time_ns(), t.counts())
}

pub fn histogram_to_csv(h: &Histogram) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for (c, n) in h.centers_mev().iter().zip(&h.counts) {
        let _ = writeln!(out, "{},{n}", fmt_num(*c));
    }
    out
}

pub fn ensemble_to_csv(e: &ShiftEnsemble) -> String {
    let mut out = String::from(ENSEMBLE_HEADER);
    out.push('\n');
    for (i, (s, z)) in e.strains.iter().zip(&e.shifts).enumerate() {
        let _ = write!(out, "{i}");
        for c in s.components() {
            let _ = write!(out, ",{}", fmt_num(c));
        }
        let _ = writeln!(out, ",{}", fmt_num(z.delta_e_mev));
    }
    out
}

pub fn sweep_to_csv(rows: &[(String, SweepRow)]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{}",
            fmt_num(r.fluence_cm2),
            fmt_num(r.n_g_cm2),
            fmt_num(r.n_trap_cm2),
            fmt_num(r.tau_eff_ns),
            fmt_num(r.intensity)
        );
    }
    out
}

pub fn fit_report_to_csv(fits: &[&FitResult]) -> String {
    let mut out = String::from(FIT_HEADER);
    out.push('\n');
    for f in fits {
        for p in &f.parameters {
            let _ = writeln!(out, "{},{},{}", p.name, fmt_num(p.value), fmt_num(p.stderr));
        }
    }
    out
}

/// Reads a numeric CSV with exactly the expected header, column by column.
pub fn read_columns(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::Parse(format!(
            "expected header `{header}`, got `{got}`"
        )));
    }
    let ncol = header.split(',').count();
    let mut cols = vec![Vec::new(); ncol];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (k, col) in cols.iter_mut().enumerate() {
            let v: f64 = record
                .get(k)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}, column {}: not a number", k + 1)))?;
            col.push(v);
        }
    }
    Ok(cols)
}

pub fn parse_spectrum_csv(text: &str) -> Result<Spectrum> {
    let mut c = read_columns(text, SPECTRUM_HEADER)?;
    let y = c.pop().unwrap_or_default();
    let x = c.pop().unwrap_or_default();
    Spectrum::new(x, y)
}

pub fn parse_trace_csv(text: &str) -> Result<DecayTrace> {
    let mut c = read_columns(text, TRACE_HEADER)?;
    let y = c.pop().unwrap_or_default();
    let x = c.pop().unwrap_or_default();
    DecayTrace::new(x, y)
}

/// `(parameter, value, stderr)` rows of a fit report.
pub fn parse_fit_report(text: &str) -> Result<Vec<(String, f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != FIT_HEADER {
        return Err(Error::Parse(format!("expected header `{FIT_HEADER}`, got `{got}`")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |k: usize| -> Result<f64> {
            record
                .get(k)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Parse("fit report: bad number".into()))
        };
        rows.push((record.get(0).unwrap_or("").to_string(), num(1)?, num(2)?));
    }
    Ok(rows)
}
