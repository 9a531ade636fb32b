//! Vision-guided SFCW MIMO radar toolkit.
//!
//! The crate covers the full chain from synthetic echoes to per-subject vital
//! signs:
//!
//! - [`waveform`]: stepped-frequency signalling, bistatic echo synthesis and
//!   range profiles.
//! - [`array`]: Tx/Rx apertures, the virtual array, steering weights,
//!   beamforming and beampatterns.
//! - [`scene`]: breathing subjects, clutter, data-cube synthesis and a
//!   camera forward model.
//! - [`calibration`]: affine camera-to-radar alignment by least squares.
//! - [`imaging`]: wavenumber-domain (Stolt) 3-D reconstruction plus a
//!   brute-force backprojection oracle.
//! - [`vitals`]: vision-steered beamforming, phase extraction and
//!   respiration / heart-rate estimation.
//! - [`experiment`]: configuration-driven runners used by the CLI.

pub mod array;
pub mod calibration;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod imaging;
pub mod io;
pub mod scene;
pub mod vitals;
pub mod waveform;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;

/// Points and directions in a sensor frame, meters.
pub type Vec3 = nalgebra::Vector3<f64>;
