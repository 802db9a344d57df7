//! Shared value types and the energy/wavelength conversion.
//!
//! Unit conventions used throughout the crate:
//!
//! | quantity            | unit            |
//! |---------------------|-----------------|
//! | strain              | dimensionless (1.0 = 100 %) |
//! | ZPL energy shift    | meV, positive = blueshift   |
//! | wavelength          | nm              |
//! | time (decays)       | ns              |
//! | time (irradiation)  | s               |
//! | areal density       | cm⁻²            |
//! | volume density      | cm⁻³            |
//!
//! Energy is the internal unit for ZPL shifts; wavelengths only appear when a
//! spectrum is rendered.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// hc in eV·nm.
pub const HC_EV_NM: f64 = 1239.842;

/// Largest strain component accepted by [`StrainVector::new`]. The point-defect
/// and response-table models are perturbative; anything larger is an error.
pub const STRAIN_SANITY_CAP: f64 = 0.05;

/// Symmetric strain tensor in Voigt-like order `xx, yy, zz, xy, xz, yz`.
///
/// Shear entries are tensor components (not engineering shear), so the
/// Frobenius norm counts each of them twice.
///
/// Fields are public for arithmetic; [`StrainVector::new`] and
/// [`StrainVector::validate`] enforce the finiteness and sanity-cap invariant
/// where a strain crosses a module boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StrainVector {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl StrainVector {
    pub const ZERO: StrainVector = StrainVector {
        xx: 0.0,
        yy: 0.0,
        zz: 0.0,
        xy: 0.0,
        xz: 0.0,
        yz: 0.0,
    };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Result<Self> {
        let s = StrainVector {
            xx,
            yy,
            zz,
            xy,
            xz,
            yz,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Result<Self> {
        Self::new(xx, yy, zz, 0.0, 0.0, 0.0)
    }

    pub fn from_components(c: [f64; 6]) -> Result<Self> {
        Self::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 6] = ["e_xx", "e_yy", "e_zz", "e_xy", "e_xz", "e_yz"];
        for (name, v) in NAMES.iter().zip(self.components()) {
            if !v.is_finite() || v.abs() > STRAIN_SANITY_CAP {
                return Err(Error::OutOfRange {
                    what: format!("strain component {name}"),
                    value: v,
                    min: -STRAIN_SANITY_CAP,
                    max: STRAIN_SANITY_CAP,
                });
            }
        }
        Ok(())
    }

    /// Full 3×3 tensor.
    pub fn tensor(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn from_tensor(t: &[[f64; 3]; 3]) -> Self {
        StrainVector {
            xx: t[0][0],
            yy: t[1][1],
            zz: t[2][2],
            xy: 0.5 * (t[0][1] + t[1][0]),
            xz: 0.5 * (t[0][2] + t[2][0]),
            yz: 0.5 * (t[1][2] + t[2][1]),
        }
    }

    /// `R ε Rᵀ` for a rotation (or any orthogonal) matrix `r`.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        let e = self.tensor();
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        acc += r[i][k] * e[k][l] * r[j][l];
                    }
                }
                *v = acc;
            }
        }
        Self::from_tensor(&out)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Frobenius norm of the tensor.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn zip_with(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        StrainVector {
            xx: f(self.xx, o.xx),
            yy: f(self.yy, o.yy),
            zz: f(self.zz, o.zz),
            xy: f(self.xy, o.xy),
            xz: f(self.xz, o.xz),
            yz: f(self.yz, o.yz),
        }
    }
}

impl Add for StrainVector {
    type Output = StrainVector;
    fn add(self, o: Self) -> Self {
        self.zip_with(o, |a, b| a + b)
    }
}

impl Sub for StrainVector {
    type Output = StrainVector;
    fn sub(self, o: Self) -> Self {
        self.zip_with(o, |a, b| a - b)
    }
}

impl Neg for StrainVector {
    type Output = StrainVector;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for StrainVector {
    type Output = StrainVector;
    fn mul(self, k: f64) -> Self {
        self.zip_with(self, |a, _| a * k)
    }
}

/// Shift of the zero-phonon line energy, meV. Positive is a blueshift.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ZplShift {
    pub delta_e_mev: f64,
}

impl ZplShift {
    pub const ZERO: ZplShift = ZplShift { delta_e_mev: 0.0 };

    pub fn from_mev(delta_e_mev: f64) -> Self {
        ZplShift { delta_e_mev }
    }

    /// Builds the energy shift that corresponds to a wavelength offset.
    pub fn from_wavelength_shift(delta_lambda_nm: f64, lambda0_nm: f64) -> Result<Self> {
        wavelength_shift_to_energy_shift(delta_lambda_nm, lambda0_nm).map(Self::from_mev)
    }

    /// Wavelength offset in nm (positive = redshift).
    pub fn delta_lambda_nm(&self, lambda0_nm: f64) -> Result<f64> {
        energy_shift_to_wavelength_shift(self.delta_e_mev, lambda0_nm)
    }
}

/// First-order conversion of a ZPL energy shift (meV) to a wavelength shift
/// (nm): `Δλ = −λ₀²·ΔE / hc`.
pub fn energy_shift_to_wavelength_shift(delta_e_mev: f64, lambda0_nm: f64) -> Result<f64> {
    check_conversion_inputs(delta_e_mev, lambda0_nm)?;
    Ok(-lambda0_nm * lambda0_nm * delta_e_mev * 1e-3 / HC_EV_NM)
}

/// Inverse of [`energy_shift_to_wavelength_shift`].
pub fn wavelength_shift_to_energy_shift(delta_lambda_nm: f64, lambda0_nm: f64) -> Result<f64> {
    check_conversion_inputs(delta_lambda_nm, lambda0_nm)?;
    Ok(-delta_lambda_nm * HC_EV_NM / (lambda0_nm * lambda0_nm * 1e-3))
}

fn check_conversion_inputs(shift: f64, lambda0_nm: f64) -> Result<()> {
    if !shift.is_finite() || !lambda0_nm.is_finite() {
        return Err(Error::invalid("conversion inputs must be finite"));
    }
    if lambda0_nm <= 0.0 {
        return Err(Error::invalid(format!(
            "lambda0 must be positive, got {lambda0_nm}"
        )));
    }
    Ok(())
}

/// Emission line of a single (unstrained) emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterConfig {
    pub lambda0_nm: f64,
    pub homogeneous_fwhm_nm: f64,
    /// Metadata only; no temperature dependence is modelled.
    pub temperature_k: f64,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig {
            lambda0_nm: 1278.3,
            homogeneous_fwhm_nm: 0.073,
            temperature_k: 4.0,
        }
    }
}

impl EmitterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0_nm.is_finite() && self.lambda0_nm > 0.0) {
            return Err(Error::invalid("emitter lambda0 must be positive"));
        }
        if !(self.homogeneous_fwhm_nm.is_finite() && self.homogeneous_fwhm_nm > 0.0) {
            return Err(Error::invalid("emitter homogeneous_fwhm must be positive"));
        }
        Ok(())
    }
}

/// Intensity sampled on a strictly increasing wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelength_nm: Vec<f64>,
    intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelength_nm: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        check_sampled("spectrum", &wavelength_nm, &intensity)?;
        Ok(Spectrum {
            wavelength_nm,
            intensity,
        })
    }

    pub fn wavelength_nm(&self) -> &[f64] {
        &self.wavelength_nm
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Spectrum::new(
            self.wavelength_nm.clone(),
            self.intensity.iter().map(|v| v * k).collect(),
        )
    }
}

/// Photon counts (or rate) sampled on a strictly increasing time grid, t ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    time_ns: Vec<f64>,
    counts: Vec<f64>,
}

impl DecayTrace {
    pub fn new(time_ns: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        check_sampled("decay trace", &time_ns, &counts)?;
        if time_ns.first().is_some_and(|t| *t < 0.0) {
            return Err(Error::invalid("decay trace must start at t >= 0"));
        }
        Ok(DecayTrace { time_ns, counts })
    }

    pub fn time_ns(&self) -> &[f64] {
        &self.time_ns
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Index of the first global maximum.
    pub fn peak_index(&self) -> Option<usize> {
        argmax(&self.counts)
    }
}

pub(crate) fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        match best {
            Some(b) if v[b] >= *x => {}
            _ => best = Some(i),
        }
    }
    best
}

fn check_sampled(what: &str, grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::invalid(format!(
            "{what}: grid has {} samples but values have {}",
            grid.len(),
            values.len()
        )));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid(format!("{what}: non-finite grid value")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "{what}: grid must be strictly increasing"
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(format!(
            "{what}: values must be finite and non-negative"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn conversion_examples() {
        assert_eq!(energy_shift_to_wavelength_shift(0.0, 1278.3).unwrap(), 0.0);
        // 1278.3^2 * 1e-3 / 1239.842 = 1.317951 nm per meV
        let red = energy_shift_to_wavelength_shift(-1.0, 1278.3).unwrap();
        assert!((red - 1.318).abs() < 5e-4, "{red}");
        let blue = energy_shift_to_wavelength_shift(1.0, 1278.3).unwrap();
        assert_eq!(blue, -red);
    }

    #[test]
    fn conversion_rejects_bad_inputs() {
        assert!(energy_shift_to_wavelength_shift(f64::NAN, 1278.3).is_err());
        assert!(energy_shift_to_wavelength_shift(1.0, f64::INFINITY).is_err());
        assert!(energy_shift_to_wavelength_shift(1.0, 0.0).is_err());
        assert!(wavelength_shift_to_energy_shift(1.0, -5.0).is_err());
    }

    #[test]
    fn strain_cap_enforced() {
        assert!(StrainVector::diagonal(0.01, 0.0, 0.0).is_ok());
        assert!(StrainVector::diagonal(0.051, 0.0, 0.0).is_err());
        assert!(StrainVector::new(0.0, 0.0, 0.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn containers_validate() {
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0, 1.0]).is_ok());
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0, -1.0]).is_err());
        assert!(DecayTrace::new(vec![-1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DecayTrace::new(vec![0.0, 0.1], vec![1.0, 0.5]).is_ok());
    }

    #[test]
    fn rotation_preserves_norm_and_trace() {
        let s = StrainVector::new(0.001, -0.002, 0.0005, 0.0003, -0.0001, 0.0002).unwrap();
        // 90° about z
        let r = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let t = s.rotated(&r);
        assert_relative_eq!(t.norm(), s.norm(), max_relative = 1e-14);
        assert_relative_eq!(t.trace(), s.trace(), max_relative = 1e-14);
        assert_relative_eq!(t.xx, s.yy, max_relative = 1e-14);
        assert_relative_eq!(t.xy, -s.xy, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn conversion_is_linear_and_antisymmetric(
            a in -50.0f64..50.0, b in -50.0f64..50.0, lambda0 in 500.0f64..2000.0
        ) {
            let fa = energy_shift_to_wavelength_shift(a, lambda0).unwrap();
            let fb = energy_shift_to_wavelength_shift(b, lambda0).unwrap();
            let fab = energy_shift_to_wavelength_shift(a + b, lambda0).unwrap();
            prop_assert!((fab - (fa + fb)).abs() <= 1e-12 * (fa.abs() + fb.abs() + 1.0));
            prop_assert_eq!(energy_shift_to_wavelength_shift(-a, lambda0).unwrap(), -fa);
        }

        #[test]
        fn wavelength_round_trip(dl in -5.0f64..5.0, lambda0 in 500.0f64..2000.0) {
            let de = wavelength_shift_to_energy_shift(dl, lambda0).unwrap();
            let back = energy_shift_to_wavelength_shift(de, lambda0).unwrap();
            prop_assert!((back - dl).abs() <= 1e-12 * dl.abs().max(1e-300));
        }
    }
}
