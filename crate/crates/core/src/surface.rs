//! Aperture geometry, realizable reflection states and phase quantization.
//!
//! All phases are stored wrapped into `[0, 2π)` and compared with the
//! circular (wrap-around) distance.

use std::f64::consts::TAU;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::SPEED_OF_LIGHT;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Shortest distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// An M×N grid of square unit cells.
///
/// Cell `(m, n)` (1-based) is centred at `((m − ½)·D_u, (n − ½)·D_u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCellGrid {
    m_count: usize,
    n_count: usize,
    cell_size: f64,
    wavelength: f64,
    frequency: f64,
}

impl UnitCellGrid {
    /// Builds a grid whose cell side is `cell_size_in_wavelengths · c/f`.
    ///
    /// Cells must stay below half a wavelength so that each one can be treated
    /// as a point scatterer.
    pub fn new(
        m_count: usize,
        n_count: usize,
        cell_size_in_wavelengths: f64,
        frequency: f64,
    ) -> Result<Self> {
        if m_count == 0 || n_count == 0 {
            return Err(Error::invalid(format!(
                "grid needs at least one cell per axis, got {m_count}x{n_count}"
            )));
        }
        ensure_finite("cell size", cell_size_in_wavelengths)?;
        ensure_finite("frequency", frequency)?;
        if cell_size_in_wavelengths <= 0.0 || cell_size_in_wavelengths >= 0.5 {
            return Err(Error::invalid(format!(
                "cell size must lie in (0, 0.5) wavelengths, got {cell_size_in_wavelengths}"
            )));
        }
        if frequency <= 0.0 {
            return Err(Error::invalid(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        let wavelength = SPEED_OF_LIGHT / frequency;
        Ok(Self {
            m_count,
            n_count,
            cell_size: cell_size_in_wavelengths * wavelength,
            wavelength,
            frequency,
        })
    }

    pub fn m_count(&self) -> usize {
        self.m_count
    }

    pub fn n_count(&self) -> usize {
        self.n_count
    }

    /// Cell side `D_u` in metres.
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Free-space wavelength in metres.
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Free-space wavenumber `2π/λ₀`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m_count, self.n_count)
    }

    pub fn cell_count(&self) -> usize {
        self.m_count * self.n_count
    }

    /// Centre of the 1-based cell `(m, n)` in metres.
    pub fn cell_center(&self, m: usize, n: usize) -> (f64, f64) {
        (
            (m as f64 - 0.5) * self.cell_size,
            (n as f64 - 0.5) * self.cell_size,
        )
    }

    /// Aperture side lengths `(M·D_u, N·D_u)` in metres.
    pub fn aperture(&self) -> (f64, f64) {
        (
            self.m_count as f64 * self.cell_size,
            self.n_count as f64 * self.cell_size,
        )
    }

    pub(crate) fn check_shape(&self, found: (usize, usize)) -> Result<()> {
        if found == self.shape() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.shape(),
                found,
            })
        }
    }
}

/// Convenience alias for [`UnitCellGrid::new`].
pub fn build_grid(
    m_count: usize,
    n_count: usize,
    cell_size_in_wavelengths: f64,
    frequency: f64,
) -> Result<UnitCellGrid> {
    UnitCellGrid::new(m_count, n_count, cell_size_in_wavelengths, frequency)
}

/// The discrete reflection phases a unit cell can realize.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCodebook {
    phases: Vec<f64>,
}

impl StateCodebook {
    /// Builds a codebook from arbitrary phases; they must be distinct modulo 2π.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::invalid(format!(
                "a codebook needs at least 2 states, got {}",
                phases.len()
            )));
        }
        for &p in &phases {
            ensure_finite("codebook phase", p)?;
        }
        let phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        for (i, &a) in phases.iter().enumerate() {
            for &b in &phases[..i] {
                if circular_distance(a, b) < 1e-9 {
                    return Err(Error::invalid(format!(
                        "codebook phases must be distinct modulo 2π ({a} repeats)"
                    )));
                }
            }
        }
        Ok(Self { phases })
    }

    /// Uniform codebook `2πs/N_s`, `s = 0..N_s`.
    pub fn canonical(state_count: usize) -> Result<Self> {
        if state_count < 2 {
            return Err(Error::invalid(format!(
                "a codebook needs at least 2 states, got {state_count}"
            )));
        }
        let step = TAU / state_count as f64;
        Ok(Self {
            phases: (0..state_count).map(|s| s as f64 * step).collect(),
        })
    }

    pub fn state_count(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase(&self, state: usize) -> f64 {
        self.phases[state]
    }

    /// Index of the state nearest to `phase` on the circle. Ties go to the
    /// lower index.
    pub fn nearest(&self, phase: f64) -> usize {
        let mut best = 0;
        let mut best_dist = circular_distance(phase, self.phases[0]);
        for (s, &p) in self.phases.iter().enumerate().skip(1) {
            let d = circular_distance(phase, p);
            if d < best_dist - 1e-12 {
                best = s;
                best_dist = d;
            }
        }
        best
    }
}

/// Convenience alias for [`StateCodebook::canonical`].
pub fn canonical_codebook(state_count: usize) -> Result<StateCodebook> {
    StateCodebook::canonical(state_count)
}

/// Per-cell reflection phase with unit amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    grid: UnitCellGrid,
    phase: Array2<f64>,
}

impl PhaseProfile {
    /// Wraps every entry into `[0, 2π)`; rejects non-finite values.
    pub fn new(grid: UnitCellGrid, phase: Array2<f64>) -> Result<Self> {
        grid.check_shape(phase.dim())?;
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phase profile contains non-finite entries"));
        }
        Ok(Self {
            grid,
            phase: phase.mapv(wrap_phase),
        })
    }

    pub fn uniform(grid: UnitCellGrid, phase: f64) -> Result<Self> {
        Self::new(grid, Array2::from_elem(grid.shape(), phase))
    }

    pub fn grid(&self) -> &UnitCellGrid {
        &self.grid
    }

    /// Phase matrix indexed `[m − 1, n − 1]`.
    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }
}

/// Per-cell reflection coefficient `Γ·e^{jΨ}` with `Γ ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexProfile {
    grid: UnitCellGrid,
    amplitude: Array2<f64>,
    phase: Array2<f64>,
}

impl ComplexProfile {
    pub fn new(grid: UnitCellGrid, amplitude: Array2<f64>, phase: Array2<f64>) -> Result<Self> {
        grid.check_shape(amplitude.dim())?;
        grid.check_shape(phase.dim())?;
        if amplitude
            .iter()
            .any(|a| !a.is_finite() || *a < 0.0 || *a > 1.0)
        {
            return Err(Error::invalid("amplitudes must lie in [0, 1]"));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phase profile contains non-finite entries"));
        }
        Ok(Self {
            grid,
            amplitude,
            phase: phase.mapv(wrap_phase),
        })
    }

    pub fn grid(&self) -> &UnitCellGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &Array2<f64> {
        &self.amplitude
    }

    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    /// The phase part alone, amplitudes dropped.
    pub fn to_phase_profile(&self) -> PhaseProfile {
        PhaseProfile {
            grid: self.grid,
            phase: self.phase.clone(),
        }
    }

    /// Same amplitudes, phases snapped to `codebook`.
    pub fn quantize_phase(&self, codebook: &StateCodebook) -> (ComplexProfile, StateMatrix) {
        let (phase, states) = quantize_profile(&self.to_phase_profile(), codebook);
        (
            ComplexProfile {
                grid: self.grid,
                amplitude: self.amplitude.clone(),
                phase: phase.phase,
            },
            states,
        )
    }
}

/// Integer state index per cell, as consumed by a surface controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMatrix {
    n_states: usize,
    states: Array2<usize>,
}

impl StateMatrix {
    pub fn new(states: Array2<usize>, n_states: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::invalid(format!(
                "n_states must be at least 2, got {n_states}"
            )));
        }
        if let Some(bad) = states.iter().find(|&&s| s >= n_states) {
            return Err(Error::invalid(format!(
                "state index {bad} out of range for {n_states} states"
            )));
        }
        if states.is_empty() {
            return Err(Error::invalid("state matrix is empty"));
        }
        Ok(Self { n_states, states })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn states(&self) -> &Array2<usize> {
        &self.states
    }

    pub fn shape(&self) -> (usize, usize) {
        self.states.dim()
    }

    /// Rebuilds the phase profile the states encode.
    pub fn to_profile(&self, grid: UnitCellGrid, codebook: &StateCodebook) -> Result<PhaseProfile> {
        if codebook.state_count() != self.n_states {
            return Err(Error::invalid(format!(
                "codebook has {} states, matrix expects {}",
                codebook.state_count(),
                self.n_states
            )));
        }
        grid.check_shape(self.shape())?;
        PhaseProfile::new(grid, self.states.mapv(|s| codebook.phase(s)))
    }
}

/// Snaps every cell to the nearest codebook phase.
///
/// The per-cell error never exceeds half the largest gap between adjacent
/// codebook phases (`π/N_s` for a canonical codebook).
pub fn quantize_profile(
    profile: &PhaseProfile,
    codebook: &StateCodebook,
) -> (PhaseProfile, StateMatrix) {
    let states = profile.phase.mapv(|p| codebook.nearest(p));
    let phase = states.mapv(|s| codebook.phase(s));
    (
        PhaseProfile {
            grid: profile.grid,
            phase,
        },
        StateMatrix {
            n_states: codebook.state_count(),
            states,
        },
    )
}

/// A homogeneous dielectric slab of thickness `l` and permittivity `ε_r`
/// backed by a ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricState {
    relative_permittivity: f64,
    slab_thickness: f64,
}

impl DielectricState {
    pub fn new(relative_permittivity: f64, slab_thickness: f64) -> Result<Self> {
        ensure_finite("relative permittivity", relative_permittivity)?;
        ensure_finite("slab thickness", slab_thickness)?;
        if relative_permittivity < 1.0 {
            return Err(Error::invalid(format!(
                "relative permittivity must be >= 1, got {relative_permittivity}"
            )));
        }
        if slab_thickness <= 0.0 {
            return Err(Error::invalid(format!(
                "slab thickness must be positive, got {slab_thickness}"
            )));
        }
        Ok(Self {
            relative_permittivity,
            slab_thickness,
        })
    }

    pub fn relative_permittivity(&self) -> f64 {
        self.relative_permittivity
    }

    pub fn slab_thickness(&self) -> f64 {
        self.slab_thickness
    }
}

/// Round-trip propagation phase through the slab, `2·k₀·√ε_r·l mod 2π`.
///
/// This is the magnitude of the phase of `e^{−2jkl}`; the sign and any common
/// offset drop out once phases are taken relative to a reference state.
pub fn dielectric_reflection_phase(state: &DielectricState, frequency: f64) -> f64 {
    let k0 = TAU * frequency / SPEED_OF_LIGHT;
    wrap_phase(2.0 * k0 * state.relative_permittivity.sqrt() * state.slab_thickness)
}

/// Builds a codebook from slab states, phases taken relative to the first one.
pub fn dielectric_codebook(states: &[DielectricState], frequency: f64) -> Result<StateCodebook> {
    let Some(first) = states.first() else {
        return Err(Error::invalid("no dielectric states given"));
    };
    ensure_finite("frequency", frequency)?;
    let reference = dielectric_reflection_phase(first, frequency);
    StateCodebook::new(
        states
            .iter()
            .map(|s| wrap_phase(dielectric_reflection_phase(s, frequency) - reference))
            .collect(),
    )
}

/// Largest quantization error a codebook can produce (half the widest gap).
pub fn max_quantization_error(codebook: &StateCodebook) -> f64 {
    let mut sorted = codebook.phases().to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut widest: f64 = sorted[0] + TAU - sorted[sorted.len() - 1];
    for pair in sorted.windows(2) {
        widest = widest.max(pair[1] - pair[0]);
    }
    widest / 2.0
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn grid24() -> UnitCellGrid {
        build_grid(24, 24, 1.0 / 3.0, 28e9).unwrap()
    }

    #[test]
    fn grid_matches_eight_wavelength_aperture() {
        let g = grid24();
        let lambda = SPEED_OF_LIGHT / 28e9;
        assert_abs_diff_eq!(g.cell_size(), lambda / 3.0, epsilon = 1e-15);
        // 3.569 mm per cell
        assert_abs_diff_eq!(g.cell_size() * 1e3, 3.5690, epsilon = 5e-4);
        let (ax, ay) = g.aperture();
        assert_abs_diff_eq!(ax / lambda, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ay / lambda, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(build_grid(1, 1, 1.0 / 3.0, 28e9).is_ok());
        assert!(build_grid(24, 24, 0.6, 28e9).is_err());
        assert!(build_grid(24, 24, 0.5, 28e9).is_err());
        assert!(build_grid(0, 24, 0.3, 28e9).is_err());
        assert!(build_grid(24, 24, 0.0, 28e9).is_err());
        assert!(build_grid(24, 24, 0.3, -1.0).is_err());
    }

    #[test]
    fn cell_centres_are_offset_by_half_a_cell() {
        let g = grid24();
        let (x, y) = g.cell_center(1, 1);
        assert_abs_diff_eq!(x, 0.5 * g.cell_size());
        assert_abs_diff_eq!(y, 0.5 * g.cell_size());
        let (x, _) = g.cell_center(24, 1);
        assert_abs_diff_eq!(x, 23.5 * g.cell_size());
    }

    #[test]
    fn canonical_codebooks() {
        let cb = canonical_codebook(4).unwrap();
        assert_eq!(cb.phases(), &[0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]);
        assert_eq!(canonical_codebook(2).unwrap().phases(), &[0.0, PI]);
        let cb8 = canonical_codebook(8).unwrap();
        for (s, p) in cb8.phases().iter().enumerate() {
            assert_abs_diff_eq!(*p, s as f64 * PI / 4.0, epsilon = 1e-15);
        }
        assert!(canonical_codebook(1).is_err());
        assert!(canonical_codebook(0).is_err());
    }

    #[test]
    fn codebook_rejects_duplicates() {
        assert!(StateCodebook::new(vec![0.0, TAU]).is_err());
        assert!(StateCodebook::new(vec![0.0]).is_err());
        assert!(StateCodebook::new(vec![0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn slab_states_give_quarter_turn_steps() {
        let f = 28e9;
        let l = SPEED_OF_LIGHT / f / 6.0;
        // relative phase (2π/3)(√ε_r − 1), evaluated by hand
        let expected_deg = [0.0, 91.2818, 180.7190, 271.0594];
        let eps = [1.0, 3.1, 6.28, 10.62];
        let reference = dielectric_reflection_phase(&DielectricState::new(1.0, l).unwrap(), f);
        for (e, want) in eps.iter().zip(expected_deg) {
            let p = dielectric_reflection_phase(&DielectricState::new(*e, l).unwrap(), f);
            let rel = wrap_phase(p - reference).to_degrees();
            assert_abs_diff_eq!(rel, want, epsilon = 1e-3);
        }
        // common offset of the ε_r = 1 state is 120°
        assert_abs_diff_eq!(reference.to_degrees(), 120.0, epsilon = 1e-9);
    }

    #[test]
    fn slab_codebook_is_within_two_degrees_of_canonical() {
        let f = 28e9;
        let l = SPEED_OF_LIGHT / f / 6.0;
        let states: Vec<_> = [1.0, 3.1, 6.28, 10.62]
            .iter()
            .map(|e| DielectricState::new(*e, l).unwrap())
            .collect();
        let cb = dielectric_codebook(&states, f).unwrap();
        let canon = canonical_codebook(4).unwrap();
        for (a, b) in cb.phases().iter().zip(canon.phases()) {
            assert!(circular_distance(*a, *b).to_degrees() < 2.0);
        }
    }

    #[test]
    fn dielectric_state_validation() {
        assert!(DielectricState::new(0.5, 1e-3).is_err());
        assert!(DielectricState::new(2.0, 0.0).is_err());
        assert!(DielectricState::new(f64::NAN, 1e-3).is_err());
    }

    #[test]
    fn quantizer_examples() {
        let g = build_grid(1, 3, 0.3, 28e9).unwrap();
        let cb = canonical_codebook(4).unwrap();
        let p = PhaseProfile::new(
            g,
            Array2::from_shape_vec((1, 3), vec![PI / 3.0, 0.0, TAU - 0.01]).unwrap(),
        )
        .unwrap();
        let (q, s) = quantize_profile(&p, &cb);
        assert_eq!(s.states().as_slice().unwrap(), &[1, 0, 0]);
        assert_abs_diff_eq!(q.phase()[[0, 0]], FRAC_PI_2);
        // distances to all four states from π/3: π/3, π/6, 2π/3, 5π/6
        assert_abs_diff_eq!(
            circular_distance(PI / 3.0, FRAC_PI_2),
            PI / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quantizer_tie_goes_to_lower_index() {
        let cb = canonical_codebook(4).unwrap();
        assert_eq!(cb.nearest(PI / 4.0), 0);
        assert_eq!(cb.nearest(3.0 * PI / 4.0), 1);
        assert_eq!(cb.nearest(7.0 * PI / 4.0), 0);
    }

    #[test]
    fn state_matrix_round_trip_and_validation() {
        let g = build_grid(2, 2, 0.3, 28e9).unwrap();
        let cb = canonical_codebook(4).unwrap();
        let states =
            StateMatrix::new(Array2::from_shape_vec((2, 2), vec![0, 1, 2, 3]).unwrap(), 4).unwrap();
        let p = states.to_profile(g, &cb).unwrap();
        assert_eq!(quantize_profile(&p, &cb).1, states);
        assert!(StateMatrix::new(Array2::from_elem((2, 2), 4), 4).is_err());
        assert!(states
            .to_profile(g, &canonical_codebook(8).unwrap())
            .is_err());
    }

    #[test]
    fn profile_validation() {
        let g = build_grid(2, 2, 0.3, 28e9).unwrap();
        assert!(PhaseProfile::new(g, Array2::zeros((2, 3))).is_err());
        assert!(PhaseProfile::new(g, Array2::from_elem((2, 2), f64::INFINITY)).is_err());
        let p = PhaseProfile::new(g, Array2::from_elem((2, 2), -FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(p.phase()[[0, 0]], 3.0 * FRAC_PI_2);
        assert!(
            ComplexProfile::new(g, Array2::from_elem((2, 2), 1.5), Array2::zeros((2, 2))).is_err()
        );
    }

    #[test]
    fn wrap_handles_edges() {
        assert_eq!(wrap_phase(TAU), 0.0);
        assert_eq!(wrap_phase(-1e-18), 0.0);
        assert_abs_diff_eq!(wrap_phase(-FRAC_PI_2), 3.0 * FRAC_PI_2);
        assert_abs_diff_eq!(
            max_quantization_error(&canonical_codebook(4).unwrap()),
            PI / 4.0
        );
    }
}
