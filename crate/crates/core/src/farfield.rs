//! Scattered far field of a coded aperture and the metrics derived from it.
//!
//! The field is the array factor
//! `E(θ, φ) = Σ_m Σ_n C_mn · e^{−j k₀ ζ_mn(θ, φ)}` with
//! `ζ_mn = D_u sinθ [(m − ½) cosφ + (n − ½) sinφ]`, where `C_mn` is the
//! complex reflection coefficient times the incident illumination at cell
//! `(m, n)`. Only the front hemisphere is evaluated.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coding::{BeamTarget, IncidentWave};
use crate::error::{ensure_finite, Error, Result};
use crate::par::{self, Execution};
use crate::surface::{ComplexProfile, PhaseProfile, UnitCellGrid};

/// Substitute for `log(0)` in reported levels.
pub const LOG_FLOOR_DB: f64 = -120.0;

/// Default angular sampling step.
pub const DEFAULT_RESOLUTION_DEG: f64 = 0.5;

pub(crate) fn to_db(power_ratio: f64) -> f64 {
    if power_ratio > 0.0 {
        (10.0 * power_ratio.log10()).max(LOG_FLOOR_DB)
    } else {
        LOG_FLOOR_DB
    }
}

/// Sampling of the front hemisphere: θ in `[0, π/2]`, φ in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl AngleGrid {
    /// Uniform grid whose step is the closest divisor of 90° to `resolution_deg`.
    pub fn hemisphere(resolution_deg: f64) -> Result<Self> {
        ensure_finite("angular resolution", resolution_deg)?;
        if !(resolution_deg > 0.0 && resolution_deg <= 45.0) {
            return Err(Error::invalid(format!(
                "angular resolution must lie in (0, 45] degrees, got {resolution_deg}"
            )));
        }
        let theta_steps = (90.0 / resolution_deg).round().max(1.0) as usize;
        let step = FRAC_PI_2 / theta_steps as f64;
        let theta = (0..=theta_steps).map(|i| i as f64 * step).collect();
        let phi = (0..4 * theta_steps).map(|j| j as f64 * step).collect();
        Ok(Self { theta, phi })
    }

    /// Arbitrary sample sets; both must be strictly increasing with at least two entries.
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        for (name, samples, hi, closed) in [
            ("theta", &theta, FRAC_PI_2, true),
            ("phi", &phi, TAU, false),
        ] {
            if samples.len() < 2 {
                return Err(Error::invalid(format!("{name} needs at least two samples")));
            }
            if samples
                .windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
            {
                return Err(Error::invalid(format!(
                    "{name} samples must be strictly increasing"
                )));
            }
            let last = *samples.last().unwrap();
            let in_range = samples[0] >= 0.0
                && if closed {
                    last <= hi + 1e-12
                } else {
                    last < hi
                };
            if !in_range {
                return Err(Error::invalid(format!("{name} samples out of range")));
            }
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.theta.len(), self.phi.len())
    }

    /// True when the first θ sample is the surface normal.
    pub fn includes_normal(&self) -> bool {
        self.theta[0] == 0.0
    }

    /// Trapezoid weights in θ.
    fn theta_weights(&self) -> Vec<f64> {
        let t = &self.theta;
        let n = t.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { t[0] } else { t[i - 1] };
                let hi = if i + 1 == n { t[n - 1] } else { t[i + 1] };
                0.5 * (hi - lo)
            })
            .collect()
    }

    /// Periodic trapezoid weights in φ.
    fn phi_weights(&self) -> Vec<f64> {
        let p = &self.phi;
        let n = p.len();
        (0..n)
            .map(|j| {
                let prev = if j == 0 { p[n - 1] - TAU } else { p[j - 1] };
                let next = if j + 1 == n { p[0] + TAU } else { p[j + 1] };
                0.5 * (next - prev)
            })
            .collect()
    }
}

/// Radiation pattern of a single unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementPattern {
    #[default]
    Isotropic,
    /// Field multiplied by `cosθ`.
    Cosine,
}

/// A coded surface ready for far-field evaluation.
#[derive(Debug, Clone)]
pub struct Aperture {
    grid: UnitCellGrid,
    amplitude: Array2<f64>,
    phase: Array2<f64>,
    excitation: Array2<Complex64>,
    element: ElementPattern,
    incidence: IncidentWave,
}

impl Aperture {
    fn build(
        grid: UnitCellGrid,
        amplitude: Array2<f64>,
        phase: Array2<f64>,
        incidence: IncidentWave,
        element: ElementPattern,
    ) -> Self {
        let scale = grid.wavenumber() * grid.cell_size();
        let (ui, vi) = incidence.transverse();
        let excitation = Array2::from_shape_fn(grid.shape(), |(i, j)| {
            let illum = scale * ((i as f64 + 0.5) * ui + (j as f64 + 0.5) * vi);
            Complex64::from_polar(amplitude[[i, j]], phase[[i, j]] + illum)
        });
        Self {
            grid,
            amplitude,
            phase,
            excitation,
            element,
            incidence,
        }
    }

    /// Unit-amplitude aperture under normal incidence.
    pub fn from_phase(profile: &PhaseProfile) -> Self {
        let grid = *profile.grid();
        Self::build(
            grid,
            Array2::ones(grid.shape()),
            profile.phase().clone(),
            IncidentWave::normal(),
            ElementPattern::Isotropic,
        )
    }

    pub fn from_complex(profile: &ComplexProfile) -> Self {
        Self::build(
            *profile.grid(),
            profile.amplitude().clone(),
            profile.phase().clone(),
            IncidentWave::normal(),
            ElementPattern::Isotropic,
        )
    }

    /// Re-illuminates the same coding from another direction.
    pub fn with_incidence(self, incidence: IncidentWave) -> Self {
        Self::build(
            self.grid,
            self.amplitude,
            self.phase,
            incidence,
            self.element,
        )
    }

    pub fn with_element(mut self, element: ElementPattern) -> Self {
        self.element = element;
        self
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

    /// Reflection coefficient times incident illumination per cell.
    pub fn excitation(&self) -> &Array2<Complex64> {
        &self.excitation
    }

    pub fn element(&self) -> ElementPattern {
        self.element
    }

    pub fn incidence(&self) -> IncidentWave {
        self.incidence
    }

    /// `Σ|A_mn|² / (M·N)`.
    pub fn power_fill(&self) -> f64 {
        self.amplitude.iter().map(|a| a * a).sum::<f64>() / self.grid.cell_count() as f64
    }
}

/// `10·log₁₀(Σ|A_mn|² / (M·N))`, zero for phase-only apertures.
pub fn amplitude_loss_db(aperture: &Aperture) -> f64 {
    to_db(aperture.power_fill())
}

/// Reusable buffers for evaluating the array factor direction by direction.
///
/// Excitations are kept split into real and imaginary planes so the inner
/// products run on independent lanes.
struct FieldKernel<'a> {
    aperture: &'a Aperture,
    scale: f64,
    cells_re: Vec<f64>,
    cells_im: Vec<f64>,
    row: Vec<Complex64>,
    col_re: Vec<f64>,
    col_im: Vec<f64>,
}

const LANES: usize = 4;

impl<'a> FieldKernel<'a> {
    fn new(aperture: &'a Aperture) -> Self {
        let g = &aperture.grid;
        let n = g.n_count();
        let padded = n.div_ceil(LANES) * LANES;
        let mut cells_re = vec![0.0; g.m_count() * padded];
        let mut cells_im = vec![0.0; g.m_count() * padded];
        for ((i, j), c) in aperture.excitation.indexed_iter() {
            cells_re[i * padded + j] = c.re;
            cells_im[i * padded + j] = c.im;
        }
        Self {
            aperture,
            scale: g.wavenumber() * g.cell_size(),
            cells_re,
            cells_im,
            row: vec![Complex64::default(); g.m_count()],
            col_re: vec![0.0; padded],
            col_im: vec![0.0; padded],
        }
    }

    /// `e^{−j·step·(i + ½)}` by recurrence from two evaluations of sin/cos.
    fn phasors(step: f64, count: usize, mut put: impl FnMut(usize, Complex64)) {
        let (s, c) = step.sin_cos();
        let (sh, ch) = (0.5 * step).sin_cos();
        let rot = Complex64::new(c, -s);
        let mut z = Complex64::new(ch, -sh);
        for i in 0..count {
            put(i, z);
            z *= rot;
        }
    }

    fn eval(&mut self, theta: f64, phi: f64) -> Complex64 {
        let kd = self.scale * theta.sin();
        let (sp, cp) = phi.sin_cos();
        let n = self.aperture.grid.n_count();
        let row = &mut self.row;
        Self::phasors(kd * cp, row.len(), |i, z| row[i] = z);
        let (col_re, col_im) = (&mut self.col_re, &mut self.col_im);
        Self::phasors(kd * sp, n, |i, z| {
            col_re[i] = z.re;
            col_im[i] = z.im;
        });
        let padded = self.col_re.len();
        let mut e = Complex64::default();
        for (m, a) in self.row.iter().enumerate() {
            let cr = &self.cells_re[m * padded..(m + 1) * padded];
            let ci = &self.cells_im[m * padded..(m + 1) * padded];
            let mut re = [0.0; LANES];
            let mut im = [0.0; LANES];
            for k in (0..padded).step_by(LANES) {
                for l in 0..LANES {
                    let (xr, xi) = (cr[k + l], ci[k + l]);
                    let (br, bi) = (self.col_re[k + l], self.col_im[k + l]);
                    re[l] += xr * br - xi * bi;
                    im[l] += xr * bi + xi * br;
                }
            }
            let acc = Complex64::new(re.iter().sum(), im.iter().sum());
            e += a * acc;
        }
        match self.aperture.element {
            ElementPattern::Isotropic => e,
            ElementPattern::Cosine => e * theta.cos(),
        }
    }
}

/// Far field in one direction.
pub fn field_at(aperture: &Aperture, theta: f64, phi: f64) -> Complex64 {
    FieldKernel::new(aperture).eval(theta, phi)
}

/// Sampled far field plus the hemisphere power integral.
#[derive(Debug, Clone)]
pub struct Pattern {
    angles: AngleGrid,
    field: Array2<Complex64>,
    grid: UnitCellGrid,
    targets: Vec<BeamTarget>,
    radiated_power: f64,
    peak_power: f64,
    peak_index: (usize, usize),
}

impl Pattern {
    /// Wraps an externally computed field sampled on `angles`.
    pub fn new(angles: AngleGrid, field: Array2<Complex64>, grid: UnitCellGrid) -> Result<Self> {
        if field.dim() != angles.shape() {
            return Err(Error::DimensionMismatch {
                expected: angles.shape(),
                found: field.dim(),
            });
        }
        if field.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::Numeric(
                "far field contains non-finite samples".into(),
            ));
        }
        let tw = angles.theta_weights();
        let pw = angles.phi_weights();
        let mut radiated_power = 0.0;
        let mut peak_power = 0.0;
        let mut peak_index = (0, 0);
        for (i, row) in field.outer_iter().enumerate() {
            let mut row_sum = 0.0;
            for (j, e) in row.iter().enumerate() {
                let p = e.norm_sqr();
                row_sum += p * pw[j];
                if p > peak_power {
                    peak_power = p;
                    peak_index = (i, j);
                }
            }
            radiated_power += row_sum * tw[i] * angles.theta[i].sin();
        }
        Ok(Self {
            angles,
            field,
            grid,
            targets: Vec::new(),
            radiated_power,
            peak_power,
            peak_index,
        })
    }

    /// Attaches the beam targets the profile was coded for.
    pub fn with_targets(mut self, targets: &[BeamTarget]) -> Self {
        self.targets = targets.to_vec();
        self
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ok(Pattern::new(
            self.angles.clone(),
            self.field.mapv(|e| e * factor),
            self.grid,
        )?
        .with_targets(&self.targets))
    }

    pub fn angles(&self) -> &AngleGrid {
        &self.angles
    }

    pub fn field(&self) -> &Array2<Complex64> {
        &self.field
    }

    pub fn grid(&self) -> &UnitCellGrid {
        &self.grid
    }

    pub fn targets(&self) -> &[BeamTarget] {
        &self.targets
    }

    /// `∫∫ |E|² sinθ dθ dφ` over the sampled hemisphere.
    pub fn radiated_power(&self) -> f64 {
        self.radiated_power
    }

    pub fn peak_power(&self) -> f64 {
        self.peak_power
    }

    /// Direction of the largest sample.
    pub fn peak_direction(&self) -> (f64, f64) {
        let (i, j) = self.peak_index;
        (self.angles.theta[i], self.angles.phi[j])
    }

    /// Nominal beamwidth `λ / (max(M, N)·D_u)` in radians.
    pub fn beamwidth(&self) -> f64 {
        let cells = self.grid.m_count().max(self.grid.n_count()) as f64;
        self.grid.wavelength() / (cells * self.grid.cell_size())
    }

    /// `|E|²` relative to the peak, in dB.
    pub fn normalized_db(&self) -> Array2<f64> {
        let peak = self.peak_power;
        self.field.mapv(|e| {
            if peak > 0.0 {
                to_db(e.norm_sqr() / peak)
            } else {
                LOG_FLOOR_DB
            }
        })
    }
}

/// Samples the far field of `aperture` on `angles` using the default execution mode.
pub fn radiation_pattern(aperture: &Aperture, angles: &AngleGrid) -> Result<Pattern> {
    radiation_pattern_with(aperture, angles, Execution::default())
}

pub fn radiation_pattern_with(
    aperture: &Aperture,
    angles: &AngleGrid,
    exec: Execution,
) -> Result<Pattern> {
    let (nt, np) = angles.shape();
    let rows = par::map_range(exec, nt, |i| {
        let theta = angles.theta[i];
        let mut kernel = FieldKernel::new(aperture);
        angles
            .phi
            .iter()
            .map(|&phi| kernel.eval(theta, phi))
            .collect::<Vec<_>>()
    });
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let field = Array2::from_shape_vec((nt, np), flat).expect("one row per theta sample");
    Pattern::new(angles.clone(), field, aperture.grid)
}

/// Convenience wrapper for a phase profile under normal incidence.
pub fn phase_pattern(profile: &PhaseProfile, angles: &AngleGrid) -> Result<Pattern> {
    radiation_pattern(&Aperture::from_phase(profile), angles)
}

fn check_energy(pattern: &Pattern) -> Result<()> {
    if pattern.radiated_power > 0.0 && pattern.peak_power > 0.0 {
        Ok(())
    } else {
        Err(Error::Numeric(
            "far field vanishes on the whole hemisphere".into(),
        ))
    }
}

/// Peak directivity `4π·max|E|² / P_rad`, linear.
pub fn directivity_linear(pattern: &Pattern) -> Result<f64> {
    check_energy(pattern)?;
    Ok(4.0 * PI * pattern.peak_power / pattern.radiated_power)
}

/// Peak directivity in dBi.
pub fn directivity(pattern: &Pattern) -> Result<f64> {
    Ok(to_db(directivity_linear(pattern)?))
}

/// Directive gain toward an arbitrary direction, evaluated exactly rather than on the grid, in dBi.
pub fn directive_gain_toward(
    aperture: &Aperture,
    pattern: &Pattern,
    target: &BeamTarget,
) -> Result<f64> {
    check_energy(pattern)?;
    let e = field_at(aperture, target.theta(), target.phi());
    Ok(to_db(4.0 * PI * e.norm_sqr() / pattern.radiated_power))
}

/// Directive gain toward `target` plus the amplitude-loss term, in dBi.
pub fn beam_gain(aperture: &Aperture, pattern: &Pattern, target: &BeamTarget) -> Result<f64> {
    Ok(directive_gain_toward(aperture, pattern, target)? + amplitude_loss_db(aperture))
}

fn check_efficiency(efficiency: f64) -> Result<()> {
    if efficiency > 0.0 && efficiency <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "efficiency must lie in (0, 1], got {efficiency}"
        )))
    }
}

/// Directivity plus efficiency and amplitude losses, in dBi.
pub fn realized_gain(pattern: &Pattern, aperture: &Aperture, efficiency: f64) -> Result<f64> {
    check_efficiency(efficiency)?;
    Ok(directivity(pattern)? + 10.0 * efficiency.log10() + amplitude_loss_db(aperture))
}

/// A local maximum of `|E|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub theta: f64,
    pub phi: f64,
    /// Level relative to the global maximum, dB.
    pub level_db: f64,
}

impl Peak {
    pub fn direction(&self) -> BeamTarget {
        BeamTarget::new(self.theta.min(FRAC_PI_2 - 1e-12), self.phi)
            .expect("sampled directions are valid")
    }
}

/// Result of a peak search; `incomplete` is set when fewer peaks exist than were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSearch {
    pub peaks: Vec<Peak>,
    pub incomplete: bool,
}

fn great_circle(t1: f64, p1: f64, t2: f64, p2: f64) -> f64 {
    let dot = t1.cos() * t2.cos() + t1.sin() * t2.sin() * (p1 - p2).cos();
    dot.clamp(-1.0, 1.0).acos()
}

/// All local maxima of `|E|²` (8-neighbourhood, φ periodic), unsorted.
fn local_maxima(pattern: &Pattern) -> Vec<(usize, usize, f64)> {
    let power = pattern.field.mapv(|e| e.norm_sqr());
    let (nt, np) = power.dim();
    let pole = pattern.angles.includes_normal();
    let mut out = Vec::new();
    if pole {
        let p0 = power[[0, 0]];
        let ring_ok = nt < 2 || power.row(1).iter().all(|&q| p0 >= q);
        if p0 > 0.0 && ring_ok {
            out.push((0, 0, p0));
        }
    }
    let start = usize::from(pole);
    for i in start..nt {
        for j in 0..np {
            let p = power[[i, j]];
            if p <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'scan: for di in [-1isize, 0, 1] {
                let ii = i as isize + di;
                if ii < 0 || ii >= nt as isize {
                    continue;
                }
                let ii = ii as usize;
                if pole && ii == 0 {
                    if power[[0, 0]] > p {
                        is_max = false;
                        break;
                    }
                    continue;
                }
                for dj in [-1isize, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = (j as isize + dj).rem_euclid(np as isize) as usize;
                    if power[[ii, jj]] > p {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                out.push((i, j, p));
            }
        }
    }
    out
}

/// Up to `count` strongest local maxima, pairwise at least `min_separation` apart (great-circle).
pub fn peak_search(pattern: &Pattern, count: usize, min_separation: f64) -> Result<PeakSearch> {
    if count == 0 {
        return Err(Error::invalid("peak count must be at least 1"));
    }
    check_energy(pattern)?;
    let mut candidates = local_maxima(pattern);
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut peaks: Vec<Peak> = Vec::new();
    for (i, j, p) in candidates {
        let (theta, phi) = (pattern.angles.theta[i], pattern.angles.phi[j]);
        if peaks
            .iter()
            .all(|q| great_circle(theta, phi, q.theta, q.phi) >= min_separation)
        {
            peaks.push(Peak {
                theta,
                phi,
                level_db: to_db(p / pattern.peak_power),
            });
            if peaks.len() == count {
                break;
            }
        }
    }
    Ok(PeakSearch {
        incomplete: peaks.len() < count,
        peaks,
    })
}

/// Up to `count` strongest lobes separated by one nominal beamwidth, strongest first.
pub fn peak_directions(pattern: &Pattern, count: usize) -> Result<PeakSearch> {
    peak_search(pattern, count, pattern.beamwidth())
}

/// `20·log₁₀(|E(0)| / max|E|)`; requires θ = 0 to be sampled.
pub fn specular_level(pattern: &Pattern) -> Result<f64> {
    if !pattern.angles.includes_normal() {
        return Err(Error::invalid(
            "angle grid does not sample the surface normal",
        ));
    }
    check_energy(pattern)?;
    Ok(to_db(pattern.field[[0, 0]].norm_sqr() / pattern.peak_power))
}

/// Strongest local maximum at least one beamwidth away from every target and
/// from the global peak, relative to the global peak. Returns the log floor
/// when no such lobe exists.
pub fn sidelobe_level(pattern: &Pattern, targets: &[BeamTarget]) -> Result<f64> {
    check_energy(pattern)?;
    let bw = pattern.beamwidth();
    let (pt, pp) = pattern.peak_direction();
    let level = local_maxima(pattern)
        .into_iter()
        .filter(|&(i, j, _)| {
            let (t, p) = (pattern.angles.theta[i], pattern.angles.phi[j]);
            great_circle(t, p, pt, pp) >= bw
                && targets
                    .iter()
                    .all(|tg| great_circle(t, p, tg.theta(), tg.phi()) >= bw)
        })
        .map(|(_, _, p)| p)
        .fold(0.0, f64::max);
    Ok(to_db(level / pattern.peak_power).min(0.0))
}

/// Summary record for one coded aperture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub directivity_dbi: f64,
    pub realized_gain_dbi: f64,
    pub efficiency: f64,
    pub amplitude_loss_db: f64,
    /// Peak directions in degrees as `(θ, φ)`.
    pub peak_directions: Vec<(f64, f64)>,
    pub peak_levels_db: Vec<f64>,
    pub peaks_incomplete: bool,
    pub sidelobe_level_db: f64,
    pub specular_level_db: f64,
    /// Per-target beam gain (directive gain plus amplitude loss), dBi.
    pub target_gains_dbi: Vec<f64>,
}

impl PatternMetrics {
    /// Evaluates every metric; `peak_count` defaults to the number of targets (at least one).
    pub fn evaluate(
        aperture: &Aperture,
        pattern: &Pattern,
        efficiency: f64,
        peak_count: Option<usize>,
    ) -> Result<Self> {
        let targets = pattern.targets();
        let count = peak_count.unwrap_or(targets.len().max(1));
        let search = peak_directions(pattern, count)?;
        let specular = if pattern.angles.includes_normal() {
            specular_level(pattern)?
        } else {
            let e0 = field_at(aperture, 0.0, 0.0);
            to_db(e0.norm_sqr() / pattern.peak_power).min(0.0)
        };
        Ok(Self {
            directivity_dbi: directivity(pattern)?,
            realized_gain_dbi: realized_gain(pattern, aperture, efficiency)?,
            efficiency,
            amplitude_loss_db: amplitude_loss_db(aperture),
            peak_directions: search
                .peaks
                .iter()
                .map(|p| (p.theta.to_degrees(), p.phi.to_degrees()))
                .collect(),
            peak_levels_db: search.peaks.iter().map(|p| p.level_db).collect(),
            peaks_incomplete: search.incomplete,
            sidelobe_level_db: sidelobe_level(pattern, targets)?,
            specular_level_db: specular,
            target_gains_dbi: targets
                .iter()
                .map(|t| beam_gain(aperture, pattern, t))
                .collect::<Result<_>>()?,
        })
    }
}
