//! Multi-beam coding and link evaluation for reconfigurable metasurfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`surface`]: unit-cell grid, phase-state codebooks and quantization.
//! - [`coding`]: single- and multi-beam reflection profiles, SDM and TDM.
//! - [`farfield`]: array-factor patterns, directivity, gain and lobe metrics.
//! - [`link`]: pathloss, link budgets, noise, fading and throughput.
//! - [`scenario`]: indoor and urban-microcell deployments, sweeps and calibration.
//! - [`io`]: CSV and JSON formats.
//!
//! Pattern evaluation and sweeps run on rayon when the `parallel` feature is
//! enabled (default); [`Execution::Sequential`] forces a single thread.

pub mod coding;
pub mod error;
pub mod farfield;
pub mod io;
pub mod link;
pub mod par;
pub mod scenario;
pub mod surface;

pub use coding::{BeamTarget, CodingMethod, IncidentWave};
pub use error::{Error, Result};
pub use farfield::{AngleGrid, Aperture, Pattern, PatternMetrics};
pub use par::Execution;
pub use scenario::{Scenario, ThroughputReport};
pub use surface::{PhaseProfile, StateCodebook, UnitCellGrid};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
