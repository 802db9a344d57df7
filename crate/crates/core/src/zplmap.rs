//! Strain → ZPL energy shift through tabulated per-axis response curves.
//!
//! The G-center's mirror symmetry makes `y` equivalent to `x` and `yz`
//! equivalent to `xz`, so a table carries five curves: `x`, `z`, `xy`, `xz`
//! and the isotropic `iso` curve. The shift of a general strain is the sum of
//! the per-component curves; `iso` is only used as a consistency check
//! against `2·f_x + f_z`.
//!
//! All curves live on the same 21-node grid, strain −0.01..=0.01 in steps of
//! 0.001. Values between nodes are interpolated linearly; nothing is
//! extrapolated.

use std::path::Path;

use crate::domain::{StrainVector, ZplShift};
use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 21;
pub const GRID_STEP: f64 = 0.001;
pub const STRAIN_LIMIT: f64 = 0.01;

const NODE_TOL: f64 = 1e-9;

/// Placeholder curves shipped with the crate. They encode only the qualitative
/// behaviour (x redshifts more than z, shear red and even) and are not a
/// calibration.
pub const PLACEHOLDER_CSV: &str = include_str!("../data/zpl_response_placeholder.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Z,
    Xy,
    Xz,
    Iso,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::X, Axis::Z, Axis::Xy, Axis::Xz, Axis::Iso];

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Z => "z",
            Axis::Xy => "xy",
            Axis::Xz => "xz",
            Axis::Iso => "iso",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

/// Strain at grid node `i`.
pub fn grid_strain(i: usize) -> f64 {
    (i as f64 - 10.0) * GRID_STEP
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZplResponseTable {
    curves: [[f64; GRID_POINTS]; 5],
}

impl ZplResponseTable {
    /// Curves in [`Axis::ALL`] order, each sampled at [`grid_strain`].
    pub fn from_curves(curves: [[f64; GRID_POINTS]; 5]) -> Result<Self> {
        for axis in Axis::ALL {
            let c = &curves[axis.index()];
            if let Some(v) = c.iter().find(|v| !v.is_finite()) {
                return Err(table_err(axis.as_str(), format!("non-finite shift {v}")));
            }
            if c[10] != 0.0 {
                return Err(table_err(
                    axis.as_str(),
                    format!("curve must pass through (0, 0), got {}", c[10]),
                ));
            }
        }
        Ok(ZplResponseTable { curves })
    }

    /// A table mapping every strain to zero.
    pub fn zero() -> Self {
        ZplResponseTable {
            curves: [[0.0; GRID_POINTS]; 5],
        }
    }

    pub fn placeholder() -> Self {
        parse_response_table(PLACEHOLDER_CSV).expect("shipped placeholder table is valid")
    }

    pub fn curve(&self, axis: Axis) -> &[f64; GRID_POINTS] {
        &self.curves[axis.index()]
    }

    /// Half-width of the strain range covered by the table.
    pub fn strain_range(&self) -> f64 {
        STRAIN_LIMIT
    }

    /// Linearly interpolated curve value; exact at nodes.
    pub fn eval(&self, axis: Axis, strain: f64) -> Result<f64> {
        if !(strain.abs() <= STRAIN_LIMIT + 1e-12) {
            return Err(Error::OutOfRange {
                what: format!("strain on response axis {}", axis.as_str()),
                value: strain,
                min: -STRAIN_LIMIT,
                max: STRAIN_LIMIT,
            });
        }
        let c = self.curve(axis);
        let p = ((strain + STRAIN_LIMIT) / GRID_STEP).clamp(0.0, (GRID_POINTS - 1) as f64);
        let nearest = p.round();
        if (p - nearest).abs() < NODE_TOL {
            return Ok(c[nearest as usize]);
        }
        let i = (p.floor() as usize).min(GRID_POINTS - 2);
        let t = p - i as f64;
        Ok(c[i] + t * (c[i + 1] - c[i]))
    }

    /// `f_x(e_xx) + f_x(e_yy) + f_z(e_zz) + f_xy(e_xy) + f_xz(e_xz) + f_xz(e_yz)`.
    pub fn shift_for_strain(&self, strain: &StrainVector) -> Result<ZplShift> {
        let terms = [
            (Axis::X, strain.xx),
            (Axis::X, strain.yy),
            (Axis::Z, strain.zz),
            (Axis::Xy, strain.xy),
            (Axis::Xz, strain.xz),
            (Axis::Xz, strain.yz),
        ];
        let mut total = 0.0;
        for (axis, e) in terms {
            total += self.eval(axis, e)?;
        }
        Ok(ZplShift::from_mev(total))
    }

    /// Deviation `f_iso(e) − (2·f_x(e) + f_z(e))` at every node.
    pub fn iso_consistency(&self) -> IsoConsistency {
        let x = self.curve(Axis::X);
        let z = self.curve(Axis::Z);
        let iso = self.curve(Axis::Iso);
        let deviations: Vec<(f64, f64)> = (0..GRID_POINTS)
            .map(|i| (grid_strain(i), iso[i] - (2.0 * x[i] + z[i])))
            .collect();
        let max_abs_deviation_mev = deviations.iter().fold(0.0_f64, |m, d| m.max(d.1.abs()));
        IsoConsistency {
            deviations,
            max_abs_deviation_mev,
        }
    }

    /// CSV in the loader's format, five axes only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,strain,shift_mev\n");
        for axis in Axis::ALL {
            for (i, v) in self.curve(axis).iter().enumerate() {
                out.push_str(&format!("{},{:.3},{}\n", axis.as_str(), grid_strain(i), v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoConsistency {
    /// `(strain, iso − (2x + z))` per node.
    pub deviations: Vec<(f64, f64)>,
    pub max_abs_deviation_mev: f64,
}

fn table_err(axis: &str, message: impl Into<String>) -> Error {
    Error::TableValidation {
        axis: axis.to_string(),
        message: message.into(),
    }
}

pub fn load_response_table(path: impl AsRef<Path>) -> Result<ZplResponseTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_response_table(&text)
}

/// Parses `axis,strain,shift_mev` rows. Lines starting with `#` are comments.
pub fn parse_response_table(text: &str) -> Result<ZplResponseTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["axis", "strain", "shift_mev"] {
        return Err(Error::Parse(format!(
            "response table header must be `axis,strain,shift_mev`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    const NAMES: [&str; 7] = ["x", "z", "xy", "xz", "iso", "y", "yz"];
    let mut rows: [Vec<(f64, f64)>; 7] = Default::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let axis = record.get(0).unwrap_or("");
        let Some(slot) = NAMES.iter().position(|n| *n == axis) else {
            return Err(table_err(axis, format!("unknown axis on line {line}")));
        };
        let num = |field: usize, what: &str| -> Result<f64> {
            record
                .get(field)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| table_err(axis, format!("bad {what} on line {line}")))
        };
        rows[slot].push((num(1, "strain")?, num(2, "shift_mev")?));
    }

    let mut curves = [[0.0; GRID_POINTS]; 7];
    for (slot, name) in NAMES.iter().enumerate() {
        let optional = slot >= 5;
        if rows[slot].is_empty() {
            if optional {
                continue;
            }
            return Err(table_err(name, "curve missing"));
        }
        curves[slot] = grid_curve(name, &rows[slot])?;
    }

    for (mirror, source) in [(5, 0), (6, 3)] {
        if !rows[mirror].is_empty() {
            let differs = curves[mirror]
                .iter()
                .zip(&curves[source])
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()));
            if differs {
                return Err(table_err(
                    NAMES[mirror],
                    format!(
                        "must equal the {} curve by symmetry",
                        NAMES[source]
                    ),
                ));
            }
        }
    }

    ZplResponseTable::from_curves([curves[0], curves[1], curves[2], curves[3], curves[4]])
}

fn grid_curve(axis: &str, rows: &[(f64, f64)]) -> Result<[f64; GRID_POINTS]> {
    if let Some((s, _)) = rows.iter().find(|(s, _)| !(s.abs() <= STRAIN_LIMIT + NODE_TOL)) {
        return Err(table_err(
            axis,
            format!("strain {s} outside [-{STRAIN_LIMIT}, {STRAIN_LIMIT}]"),
        ));
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(table_err(axis, "strain grid must be strictly increasing"));
    }
    if !rows.iter().any(|(s, _)| s.abs() < NODE_TOL) {
        return Err(table_err(axis, "missing zero-strain point"));
    }
    if rows.len() != GRID_POINTS {
        return Err(table_err(
            axis,
            format!("expected {GRID_POINTS} points, found {}", rows.len()),
        ));
    }
    let mut curve = [0.0; GRID_POINTS];
    for (i, (s, v)) in rows.iter().enumerate() {
        if (s - grid_strain(i)).abs() > NODE_TOL {
            return Err(table_err(
                axis,
                format!(
                    "strain {s} is not on the grid (expected {:.3})",
                    grid_strain(i)
                ),
            ));
        }
        curve[i] = *v;
    }
    Ok(curve)
}
