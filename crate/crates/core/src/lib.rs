//! Forward models and analysis routines for strain-broadened G-center
//! emission in silicon.
//!
//! The pipeline runs lattice geometry → point-defect strain → ZPL shift →
//! Monte Carlo ensembles → broadened spectra. Alongside it sit the rate
//! equation models for PL decay and irradiation damage, and the fitting
//! routines used to analyse their output.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod ensemble;
pub mod error;
pub mod fitting;
pub mod io;
pub mod kinetics;
pub mod lattice;
pub mod rng;
pub mod strainfield;
pub mod zplmap;

mod par;

pub use domain::{
    energy_shift_to_wavelength_shift, wavelength_shift_to_energy_shift, DecayTrace, EmitterConfig,
    Spectrum, StrainVector, ZplShift,
};
pub use error::{Error, Result};
pub use rng::SeededRng;
