//! Strain at an emitter from surrounding point defects, modelled as isotropic
//! centres of dilatation and superposed linearly.
//!
//! For a defect of relaxation volume `v·Ω₀` at separation `r`,
//!
//! ```text
//! ε_ij = A/r³ · (δ_ij − 3 r̂_i r̂_j),   A = v·Ω₀ / 4π
//! ```
//!
//! which is traceless outside the core. A vacancy (`v < 0`) stretches the
//! lattice along `r̂` and compresses it transversely; an interstitial does
//! the opposite.

use std::f64::consts::PI;

use crate::domain::StrainVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefectKind {
    Vacancy,
    SelfInterstitial,
}

impl DefectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DefectKind::Vacancy => "vacancy",
            DefectKind::SelfInterstitial => "interstitial",
        }
    }
}

pub const MIN_CHARGE: i8 = -2;
pub const MAX_CHARGE: i8 = 2;
pub const DEFAULT_CHARGE: i8 = 2;

/// Relaxation volume per charge state, in units of Ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationVolumes {
    /// Indexed by `charge + 2`.
    pub vacancy: [f64; 5],
    pub interstitial: [f64; 5],
}

impl Default for RelaxationVolumes {
    fn default() -> Self {
        RelaxationVolumes {
            vacancy: [-0.25; 5],
            interstitial: [0.60; 5],
        }
    }
}

impl RelaxationVolumes {
    pub fn get(&self, kind: DefectKind, charge: i8) -> Result<f64> {
        check_charge(charge)?;
        let i = (charge - MIN_CHARGE) as usize;
        Ok(match kind {
            DefectKind::Vacancy => self.vacancy[i],
            DefectKind::SelfInterstitial => self.interstitial[i],
        })
    }

    pub fn validate(&self) -> Result<()> {
        for charge in MIN_CHARGE..=MAX_CHARGE {
            for kind in [DefectKind::Vacancy, DefectKind::SelfInterstitial] {
                check_volume_sign(kind, self.get(kind, charge)?)?;
            }
        }
        Ok(())
    }
}

fn check_charge(charge: i8) -> Result<()> {
    if !(MIN_CHARGE..=MAX_CHARGE).contains(&charge) {
        return Err(Error::OutOfRange {
            what: "defect charge".into(),
            value: charge as f64,
            min: MIN_CHARGE as f64,
            max: MAX_CHARGE as f64,
        });
    }
    Ok(())
}

fn check_volume_sign(kind: DefectKind, v: f64) -> Result<()> {
    let ok = v.is_finite()
        && match kind {
            DefectKind::Vacancy => v < 0.0,
            DefectKind::SelfInterstitial => v > 0.0,
        };
    if !ok {
        return Err(Error::invalid(format!(
            "{} relaxation volume must be {}, got {v}",
            kind.as_str(),
            match kind {
                DefectKind::Vacancy => "negative",
                DefectKind::SelfInterstitial => "positive",
            }
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectSite {
    pub kind: DefectKind,
    /// Cartesian position, nm.
    pub position_nm: [f64; 3],
    pub charge: i8,
    /// Signed, in units of Ω₀.
    pub relaxation_volume: f64,
}

impl DefectSite {
    pub fn new(
        kind: DefectKind,
        position_nm: [f64; 3],
        charge: i8,
        relaxation_volume: f64,
    ) -> Result<Self> {
        check_charge(charge)?;
        check_volume_sign(kind, relaxation_volume)?;
        if position_nm.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("defect position must be finite"));
        }
        Ok(DefectSite {
            kind,
            position_nm,
            charge,
            relaxation_volume,
        })
    }

    /// Defect in the default +2 charge state with the tabulated volume.
    pub fn with_volumes(
        kind: DefectKind,
        position_nm: [f64; 3],
        volumes: &RelaxationVolumes,
    ) -> Result<Self> {
        let v = volumes.get(kind, DEFAULT_CHARGE)?;
        Self::new(kind, position_nm, DEFAULT_CHARGE, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    pub atomic_volume_nm3: f64,
    pub core_cutoff_nm: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        ElasticParams {
            atomic_volume_nm3: 0.02,
            core_cutoff_nm: 0.25,
        }
    }
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.atomic_volume_nm3.is_finite() && self.atomic_volume_nm3 > 0.0) {
            return Err(Error::invalid("atomic_volume_nm3 must be positive"));
        }
        if !(self.core_cutoff_nm.is_finite() && self.core_cutoff_nm > 0.0) {
            return Err(Error::invalid("core_cutoff_nm must be positive"));
        }
        Ok(())
    }
}

/// Field of one defect without the cutoff or sanity checks.
fn dipole_field(defect: &DefectSite, point: [f64; 3], omega0: f64) -> (f64, StrainVector) {
    let d = [
        point[0] - defect.position_nm[0],
        point[1] - defect.position_nm[1],
        point[2] - defect.position_nm[2],
    ];
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let r = r2.sqrt();
    let a = defect.relaxation_volume * omega0 / (4.0 * PI);
    let k = a / (r2 * r);
    let u = [d[0] / r, d[1] / r, d[2] / r];
    let e = StrainVector {
        xx: k * (1.0 - 3.0 * u[0] * u[0]),
        yy: k * (1.0 - 3.0 * u[1] * u[1]),
        zz: k * (1.0 - 3.0 * u[2] * u[2]),
        xy: -3.0 * k * u[0] * u[1],
        xz: -3.0 * k * u[0] * u[2],
        yz: -3.0 * k * u[1] * u[2],
    };
    (r, e)
}

pub fn defect_strain_at(
    defect: &DefectSite,
    point_nm: [f64; 3],
    params: &ElasticParams,
) -> Result<StrainVector> {
    superpose(std::slice::from_ref(defect), point_nm, params)
}

/// Sum of the individual defect fields at `point_nm`.
///
/// A defect closer than the core cutoff yields [`Error::CoreRegion`] carrying
/// its index; a total strain beyond the sanity cap yields
/// [`Error::OutOfRange`].
pub fn superpose(
    defects: &[DefectSite],
    point_nm: [f64; 3],
    params: &ElasticParams,
) -> Result<StrainVector> {
    params.validate()?;
    if point_nm.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("evaluation point must be finite"));
    }
    let mut total = StrainVector::ZERO;
    for (index, defect) in defects.iter().enumerate() {
        let (r, e) = dipole_field(defect, point_nm, params.atomic_volume_nm3);
        if !(r >= params.core_cutoff_nm) {
            return Err(Error::CoreRegion {
                index,
                distance_nm: r,
                cutoff_nm: params.core_cutoff_nm,
            });
        }
        total = total + e;
    }
    total.validate()?;
    Ok(total)
}
