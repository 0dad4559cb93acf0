//! Reflection-profile synthesis for one or several beam directions.
//!
//! Phase gradients follow the momentum-matching rule: a cell at 1-based
//! index `(m, n)` carries
//! `Φ_mn = k₀·D_u·[m(cosφ_r sinθ_r − cosφ_i sinθ_i) + n(sinφ_r sinθ_r − sinφ_i sinθ_i)]`.
//! Multi-beam profiles are derived from the per-cell phasor sum
//! `S_mn = Σ_k A_k·e^{jΦ_mn(θ_k, φ_k)}`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::surface::{wrap_phase, ComplexProfile, PhaseProfile, UnitCellGrid};

/// Phasor sums below this magnitude have no defined phase; they are assigned 0.
pub const DESTRUCTIVE_THRESHOLD: f64 = 1e-12;

/// 5G NR subframe length.
pub const NR_SUBFRAME: Duration = Duration::from_millis(1);

fn check_direction(what: &str, theta: f64, phi: f64) -> Result<f64> {
    ensure_finite(what, theta)?;
    ensure_finite(what, phi)?;
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::invalid(format!(
            "{what} polar angle must lie in [0, π/2), got {theta}"
        )));
    }
    Ok(wrap_phase(phi))
}

/// Desired reflection direction `(θ_r, φ_r)` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamTarget {
    theta: f64,
    phi: f64,
}

impl BeamTarget {
    /// `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let phi = check_direction("beam target", theta, phi)?;
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Transverse direction cosines `(sinθ cosφ, sinθ sinφ)`.
    pub fn transverse(&self) -> (f64, f64) {
        let s = self.theta.sin();
        (s * self.phi.cos(), s * self.phi.sin())
    }

    /// Unit vector in the surface frame (z along the normal).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (u, v) = self.transverse();
        [u, v, self.theta.cos()]
    }

    /// Great-circle separation from another direction, in radians.
    pub fn angular_distance(&self, other: &BeamTarget) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }
}

/// Direction of the impinging plane wave `(θ_i, φ_i)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IncidentWave {
    theta_i: f64,
    phi_i: f64,
}

impl IncidentWave {
    pub fn new(theta_i: f64, phi_i: f64) -> Result<Self> {
        let phi_i = check_direction("incident wave", theta_i, phi_i)?;
        Ok(Self { theta_i, phi_i })
    }

    /// Normal incidence (`θ_i = 0`).
    pub fn normal() -> Self {
        Self::default()
    }

    pub fn theta(&self) -> f64 {
        self.theta_i
    }

    pub fn phi(&self) -> f64 {
        self.phi_i
    }

    pub fn transverse(&self) -> (f64, f64) {
        let s = self.theta_i.sin();
        (s * self.phi_i.cos(), s * self.phi_i.sin())
    }
}

/// Per-cell phase increments along m and n for steering `incidence` into `target`.
fn gradient(grid: &UnitCellGrid, target: &BeamTarget, incidence: &IncidentWave) -> (f64, f64) {
    let scale = grid.wavenumber() * grid.cell_size();
    let (ur, vr) = target.transverse();
    let (ui, vi) = incidence.transverse();
    (scale * (ur - ui), scale * (vr - vi))
}

/// Unwrapped gradient phase at the 1-based cell `(m, n)`.
fn gradient_phase(step: (f64, f64), m: usize, n: usize) -> f64 {
    step.0 * m as f64 + step.1 * n as f64
}

/// Linear phase gradient that reflects `incidence` into `target`.
pub fn single_beam_profile(
    grid: &UnitCellGrid,
    target: &BeamTarget,
    incidence: &IncidentWave,
) -> PhaseProfile {
    let step = gradient(grid, target, incidence);
    let phase = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        wrap_phase(gradient_phase(step, i + 1, j + 1))
    });
    PhaseProfile::new(*grid, phase).expect("gradient phases are finite and sized to the grid")
}

/// Options shared by the multi-beam coders.
#[derive(Debug, Clone, Default)]
pub struct SynthesisOptions {
    pub incidence: IncidentWave,
    /// Per-beam weights `A_k`; `None` means equal weights.
    pub weights: Option<Vec<f64>>,
}

/// The per-cell phasor sum behind the multi-beam coders.
#[derive(Debug, Clone)]
pub struct MultiBeam {
    grid: UnitCellGrid,
    targets: Vec<BeamTarget>,
    sum: Array2<Complex64>,
    single: Option<PhaseProfile>,
}

fn validate_targets(targets: &[BeamTarget]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::invalid("at least one beam target is required"));
    }
    for (i, a) in targets.iter().enumerate() {
        for b in &targets[..i] {
            if a.angular_distance(b) < 1e-9 {
                return Err(Error::invalid(format!(
                    "beam targets must be distinct; ({}, {}) appears twice",
                    a.theta.to_degrees(),
                    a.phi.to_degrees()
                )));
            }
        }
    }
    Ok(())
}

/// Forms `S_mn` for the given targets.
pub fn synthesize(
    grid: &UnitCellGrid,
    targets: &[BeamTarget],
    options: &SynthesisOptions,
) -> Result<MultiBeam> {
    validate_targets(targets)?;
    let weights = match &options.weights {
        Some(w) => {
            if w.len() != targets.len() {
                return Err(Error::invalid(format!(
                    "{} weights given for {} targets",
                    w.len(),
                    targets.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
                return Err(Error::invalid(
                    "beam weights must be non-negative, finite and not all zero",
                ));
            }
            w.clone()
        }
        None => vec![1.0; targets.len()],
    };
    let steps: Vec<(f64, f64)> = targets
        .iter()
        .map(|t| gradient(grid, t, &options.incidence))
        .collect();
    let sum = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        steps
            .iter()
            .zip(&weights)
            .map(|(&step, &w)| Complex64::from_polar(w, gradient_phase(step, i + 1, j + 1)))
            .sum()
    });
    // a single positively weighted beam is exactly the gradient profile
    let single =
        (targets.len() == 1).then(|| single_beam_profile(grid, &targets[0], &options.incidence));
    Ok(MultiBeam {
        grid: *grid,
        targets: targets.to_vec(),
        sum,
        single,
    })
}

impl MultiBeam {
    pub fn targets(&self) -> &[BeamTarget] {
        &self.targets
    }

    /// Raw phasor sum, un-normalized.
    pub fn sum(&self) -> &Array2<Complex64> {
        &self.sum
    }

    /// Cells whose phasors cancel (`|S_mn|` below [`DESTRUCTIVE_THRESHOLD`]).
    pub fn destructive_cells(&self) -> usize {
        self.sum
            .iter()
            .filter(|s| s.norm() < DESTRUCTIVE_THRESHOLD)
            .count()
    }

    fn phase_matrix(&self) -> Array2<f64> {
        if let Some(single) = &self.single {
            return single.phase().clone();
        }
        self.sum.mapv(|s| {
            if s.norm() < DESTRUCTIVE_THRESHOLD {
                0.0
            } else {
                wrap_phase(s.arg())
            }
        })
    }

    /// Amplitude and phase of `S_mn`, amplitude normalized to its aperture maximum.
    pub fn complex_profile(&self) -> Result<ComplexProfile> {
        if self.single.is_some() {
            return ComplexProfile::new(
                self.grid,
                Array2::ones(self.grid.shape()),
                self.phase_matrix(),
            );
        }
        let peak = self.sum.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if peak < DESTRUCTIVE_THRESHOLD {
            return Err(Error::Numeric("beam phasors cancel on every cell".into()));
        }
        let amplitude = self.sum.mapv(|s| {
            let a = s.norm();
            if a < DESTRUCTIVE_THRESHOLD {
                0.0
            } else {
                (a / peak).min(1.0)
            }
        });
        ComplexProfile::new(self.grid, amplitude, self.phase_matrix())
    }

    /// `arg(S_mn)` with every amplitude forced to one.
    pub fn phase_only(&self) -> PhaseProfile {
        PhaseProfile::new(self.grid, self.phase_matrix()).expect("phases are finite")
    }
}

/// Amplitude/phase superposition of the per-beam gradients (equal weights).
pub fn superpose(grid: &UnitCellGrid, targets: &[BeamTarget]) -> Result<ComplexProfile> {
    synthesize(grid, targets, &SynthesisOptions::default())?.complex_profile()
}

/// Phase-only multi-beam profile `Ψ_mn = arg(Σ_k e^{jΦ_mn,k})` (equal weights).
pub fn phase_only_profile(grid: &UnitCellGrid, targets: &[BeamTarget]) -> Result<PhaseProfile> {
    Ok(synthesize(grid, targets, &SynthesisOptions::default())?.phase_only())
}

/// Axis along which an SDM coder splits the aperture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdmAxis {
    /// Bands of consecutive m indices.
    Row,
    /// Bands of consecutive n indices.
    Column,
}

impl FromStr for SdmAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(SdmAxis::Row),
            "column" | "col" => Ok(SdmAxis::Column),
            other => Err(Error::invalid(format!("unknown SDM axis '{other}'"))),
        }
    }
}

/// Band index for each of `len` rows/columns split into `bands` contiguous
/// groups. Earlier bands absorb the remainder.
pub fn sdm_band_assignment(len: usize, bands: usize) -> Result<Vec<usize>> {
    if bands == 0 || bands > len {
        return Err(Error::invalid(format!(
            "cannot split {len} cells into {bands} bands"
        )));
    }
    let base = len / bands;
    let extra = len % bands;
    let mut out = Vec::with_capacity(len);
    for band in 0..bands {
        let width = base + usize::from(band < extra);
        out.extend(std::iter::repeat_n(band, width));
    }
    Ok(out)
}

/// Splits the aperture into one band per target, each band steering its own beam.
pub fn sdm_partition_profile(
    grid: &UnitCellGrid,
    targets: &[BeamTarget],
    axis: SdmAxis,
    incidence: &IncidentWave,
) -> Result<PhaseProfile> {
    validate_targets(targets)?;
    let len = match axis {
        SdmAxis::Row => grid.m_count(),
        SdmAxis::Column => grid.n_count(),
    };
    let bands = sdm_band_assignment(len, targets.len())?;
    let steps: Vec<(f64, f64)> = targets
        .iter()
        .map(|t| gradient(grid, t, incidence))
        .collect();
    let phase = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let band = match axis {
            SdmAxis::Row => bands[i],
            SdmAxis::Column => bands[j],
        };
        wrap_phase(gradient_phase(steps[band], i + 1, j + 1))
    });
    PhaseProfile::new(*grid, phase)
}

/// Multi-beam coding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingMethod {
    PhaseOnly,
    AmpPhs,
    Sdm,
}

impl CodingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CodingMethod::PhaseOnly => "phase_only",
            CodingMethod::AmpPhs => "amp_phs",
            CodingMethod::Sdm => "sdm",
        }
    }
}

impl fmt::Display for CodingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase_only" => Ok(CodingMethod::PhaseOnly),
            "amp_phs" => Ok(CodingMethod::AmpPhs),
            "sdm" => Ok(CodingMethod::Sdm),
            other => Err(Error::invalid(format!(
                "unknown coding method '{other}' (expected phase_only, amp_phs or sdm)"
            ))),
        }
    }
}

/// Time-division schedule: N user groups, each needing its own delay plus a
/// surface reconfiguration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TdmBudget {
    user_groups: u32,
    user_group_delay: Duration,
    reconfiguration_time: Duration,
}

impl TdmBudget {
    pub fn new(
        user_groups: u32,
        user_group_delay: Duration,
        reconfiguration_time: Duration,
    ) -> Result<Self> {
        if user_groups == 0 {
            return Err(Error::invalid(
                "a TDM schedule needs at least one user group",
            ));
        }
        if user_group_delay.is_zero() && reconfiguration_time.is_zero() {
            return Err(Error::invalid(
                "user group delay and reconfiguration time are both zero",
            ));
        }
        Ok(Self {
            user_groups,
            user_group_delay,
            reconfiguration_time,
        })
    }

    pub fn user_groups(&self) -> u32 {
        self.user_groups
    }

    /// `SL = N × (UGD + R)`.
    pub fn subframe_length(&self) -> Duration {
        (self.user_group_delay + self.reconfiguration_time) * self.user_groups
    }

    pub fn exceeds(&self, limit: Duration) -> bool {
        self.subframe_length() > limit
    }

    /// Longest reconfiguration time that still fits `limit` with the current delay.
    pub fn max_reconfiguration_time(&self, limit: Duration) -> Option<Duration> {
        (limit / self.user_groups).checked_sub(self.user_group_delay)
    }
}

/// Convenience alias for [`TdmBudget::subframe_length`].
pub fn tdm_subframe_length(budget: &TdmBudget) -> Duration {
    budget.subframe_length()
}
