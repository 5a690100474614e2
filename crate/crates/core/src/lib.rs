//! Interaction-driven quantum heat engine with a Lieb-Liniger working medium.
//!
//! Three levels of description:
//! * [`bethe`] and [`gibbs`]: exact finite-N spectra and canonical ensembles;
//! * [`tba`] and [`cycle`]: Yang-Yang thermodynamics in the thermodynamic limit;
//! * [`luttinger`]: universal low-temperature closed forms.
//!
//! Units throughout: hbar = 2m = kB = 1.

pub mod bethe;
pub mod cycle;
pub mod error;
pub mod gibbs;
pub mod luttinger;
pub mod roots;
pub mod tba;

pub use error::{Error, Result};

pub const UNITS: &str = "hbar=2m=kB=1";
