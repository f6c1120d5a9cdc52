//! Numerical toolkit for a time-multiplexed heralded single-photon source
//! based on spontaneous parametric down-conversion.
//!
//! The crate models the chain from crystal dispersion up to the delivered
//! single-photon probability:
//!
//! * [`dispersion`] — Sellmeier refractive indices, wavevectors, group
//!   indices and quasi-phase-matching mismatch for the pump/signal/idler
//!   polarizations.
//! * [`jsa`] — joint spectral amplitude of the photon pair on a frequency
//!   grid, including the Gaussian-beam overlap kernel and the diagnostics
//!   for the constant-parameter approximation.
//! * [`heralding`] — closed-form pair/single collection probabilities,
//!   heralding efficiencies and the wavelength / focal-parameter sweeps.
//! * [`purity`] — Schmidt decomposition of the discretized JSA, spectral
//!   filters and the purity vs. heralding trade-off sweep.
//! * [`poling`] — Gaussian-apodized domain engineering of the poled crystal
//!   and purity evaluation from plane-wave phase-matching functions.
//! * [`multiplexing`] — analytic time-multiplexing probability model, a
//!   Monte Carlo pulse-train simulator and least-squares fitters.
//! * [`config`] / [`io`] — run configuration, presets and file output.

pub mod config;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod fit;
pub mod grid;
pub mod heralding;
pub mod io;
pub mod jsa;
pub mod multiplexing;
pub mod poling;
pub mod purity;
pub mod quad;

pub use error::{Error, Result};
