//! Indoor-office and urban-microcell deployments, throughput evaluation and sweeps.
//!
//! The surface frame has its normal `n̂` pointing horizontally from the
//! surface toward the serving base station, `ŷ` pointing up and
//! `x̂ = ŷ × n̂`. A UE at distance `r`, azimuth `α` and elevation `e` sits at
//! `RIS + r(cos e sin α x̂ + sin e ŷ + cos e cos α n̂)`; its beam direction in
//! surface coordinates is that same unit vector.

use serde::{Deserialize, Serialize};

use crate::coding::{
    sdm_partition_profile, synthesize, BeamTarget, CodingMethod, IncidentWave, SdmAxis,
    SynthesisOptions,
};
use crate::error::{ensure_finite, Error, Result};
use crate::farfield::{
    beam_gain, directivity, radiation_pattern_with, AngleGrid, Aperture, DEFAULT_RESOLUTION_DEG,
};
use crate::link::{
    cascade_ris_link, direct_link, fading_db, fading_sample, fading_stream, shannon_throughput,
    FadingSpec, HopFading, HopModels, LinkResult, NoiseSpec, PathlossModel, Position, RadioNode,
    RisNode,
};
use crate::par::{self, Execution};
use crate::surface::{build_grid, canonical_codebook, quantize_profile, UnitCellGrid};

/// Version tag carried by scenario files and reports.
pub const SCHEMA_VERSION: u32 = 1;

/// UE distances from the surface, in deployment order.
pub const DEFAULT_UE_DISTANCES_M: [f64; 8] = [5.0, 4.0, 3.0, 3.0, 4.0, 5.0, 6.0, 7.0];

/// Default carrier bandwidth of 28 GHz links.
pub const DEFAULT_SCBS_BANDWIDTH_HZ: f64 = 400e6;

/// Default carrier bandwidth of the 3.55 GHz macro link.
pub const DEFAULT_MCBS_BANDWIDTH_HZ: f64 = 100e6;

/// Number of Monte-Carlo drops when fading is enabled.
pub const DEFAULT_FADING_DROPS: usize = 10_000;

const INDOOR_SCENARIO: &str = include_str!("../scenarios/indoor.json");
const UMI_SCENARIO: &str = include_str!("../scenarios/umi.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Indoor,
    Umi,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::Indoor => "indoor",
            ScenarioKind::Umi => "umi",
        })
    }
}

/// The reflecting surface: placement, aperture and phase-state hardware.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub position: Position,
    pub m_count: usize,
    pub n_count: usize,
    pub cell_size_wavelengths: f64,
    pub n_states: usize,
    pub efficiency: f64,
    #[serde(default)]
    pub rx_gain_dbi: f64,
}

impl SurfaceConfig {
    pub fn grid(&self, frequency_hz: f64) -> Result<UnitCellGrid> {
        build_grid(
            self.m_count,
            self.n_count,
            self.cell_size_wavelengths,
            frequency_hz,
        )
    }

    fn node(&self) -> RisNode {
        RisNode {
            position: self.position,
            rx_gain_dbi: self.rx_gain_dbi,
            efficiency: self.efficiency,
        }
    }
}

/// One user terminal, placed relative to the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    pub distance_m: f64,
    pub azimuth_deg: f64,
    #[serde(default)]
    pub elevation_deg: f64,
    #[serde(default)]
    pub rx_gain_dbi: f64,
}

/// Pathloss exponents per link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossExponents {
    pub indoor_los: f64,
    pub indoor_nlos: f64,
    pub umi_scbs_los: f64,
    pub umi_scbs_nlos: f64,
    pub mcbs_los: f64,
    pub mcbs_nlos: f64,
}

impl Default for PathlossExponents {
    fn default() -> Self {
        Self {
            indoor_los: 1.7,
            indoor_nlos: 3.8,
            umi_scbs_los: 2.1,
            umi_scbs_nlos: 3.2,
            mcbs_los: 2.0,
            mcbs_nlos: 2.9,
        }
    }
}

/// How the carrier bandwidth is shared between served UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// Every UE receives the full carrier.
    #[default]
    Broadcast,
    /// The carrier is divided equally among the K served UEs.
    EqualSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingConfig {
    pub enabled: bool,
    pub ricean_k_db: f64,
    pub drops: usize,
    pub seed: u64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            ricean_k_db: 10.0,
            drops: DEFAULT_FADING_DROPS,
            seed: 0,
        }
    }
}

/// Record of a bandwidth calibration against a reference throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub reference: String,
    pub target_throughput_bps: f64,
    pub bandwidth_hz: f64,
}

/// A complete deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub kind: ScenarioKind,
    /// Serving mmWave base station (indoor BS or outdoor SCBS).
    pub base_station: RadioNode,
    /// Sub-6 GHz macro cell; present only in the UMi deployment.
    #[serde(default)]
    pub macro_cell: Option<RadioNode>,
    pub surface: SurfaceConfig,
    pub ues: Vec<UeConfig>,
    #[serde(default)]
    pub pathloss_exponents: PathlossExponents,
    /// When false, the direct base-station path is added incoherently.
    pub direct_path_blocked: bool,
    #[serde(default)]
    pub bandwidth_mode: BandwidthMode,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub fading: FadingConfig,
    #[serde(default)]
    pub calibration: Option<Calibration>,
}

/// Optional adjustments applied on top of a default deployment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub ue_count: Option<usize>,
    pub bandwidth_hz: Option<f64>,
    pub grid_cells: Option<(usize, usize)>,
    pub n_states: Option<usize>,
    pub efficiency: Option<f64>,
    pub bandwidth_mode: Option<BandwidthMode>,
    pub fading: Option<FadingConfig>,
}

/// Evenly spaced azimuths in `[−60°, 60°]`.
pub fn default_ue_azimuths_deg(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -60.0 + 120.0 * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn default_ues() -> Vec<UeConfig> {
    DEFAULT_UE_DISTANCES_M
        .iter()
        .zip(default_ue_azimuths_deg(DEFAULT_UE_DISTANCES_M.len()))
        .map(|(&distance_m, azimuth_deg)| UeConfig {
            distance_m,
            azimuth_deg,
            elevation_deg: 0.0,
            rx_gain_dbi: 0.0,
        })
        .collect()
}

fn default_surface(x: f64, y: f64) -> SurfaceConfig {
    SurfaceConfig {
        position: Position::new(x, y, 5.0),
        m_count: 24,
        n_count: 24,
        cell_size_wavelengths: 1.0 / 3.0,
        n_states: 4,
        efficiency: 0.9,
        rx_gain_dbi: 0.0,
    }
}

fn mmwave_station(x: f64, y: f64, height: f64) -> RadioNode {
    RadioNode {
        position: Position::new(x, y, height),
        tx_power_dbm: 37.0,
        tx_gain_dbi: 30.0,
        rx_gain_dbi: 0.0,
        frequency_hz: 28e9,
        bandwidth_hz: DEFAULT_SCBS_BANDWIDTH_HZ,
    }
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) -> Result<()> {
        if let Some(k) = self.ue_count {
            if k == 0 || k > s.ues.len() {
                return Err(Error::invalid(format!(
                    "UE count must lie in 1..={}, got {k}",
                    s.ues.len()
                )));
            }
            s.ues.truncate(k);
        }
        if let Some(b) = self.bandwidth_hz {
            s.base_station.bandwidth_hz = b;
        }
        if let Some((m, n)) = self.grid_cells {
            s.surface.m_count = m;
            s.surface.n_count = n;
        }
        if let Some(ns) = self.n_states {
            s.surface.n_states = ns;
        }
        if let Some(e) = self.efficiency {
            s.surface.efficiency = e;
        }
        if let Some(mode) = self.bandwidth_mode {
            s.bandwidth_mode = mode;
        }
        if let Some(f) = self.fading {
            s.fading = f;
        }
        s.validate()
    }
}

/// Indoor office: BS at (0, 0, 10 m), surface at (10, 100, 5 m), blocked direct path.
pub fn build_indoor(overrides: &Overrides) -> Result<Scenario> {
    let mut s = Scenario {
        schema_version: SCHEMA_VERSION,
        kind: ScenarioKind::Indoor,
        base_station: mmwave_station(0.0, 0.0, 10.0),
        macro_cell: None,
        surface: default_surface(10.0, 100.0),
        ues: default_ues(),
        pathloss_exponents: PathlossExponents::default(),
        direct_path_blocked: true,
        bandwidth_mode: BandwidthMode::Broadcast,
        noise: NoiseSpec::default(),
        fading: FadingConfig::default(),
        calibration: None,
    };
    overrides.apply(&mut s)?;
    Ok(s)
}

/// Urban microcell: MCBS at the origin, SCBS at (10, 2000, 10 m), surface at (20, 2100, 5 m).
pub fn build_umi(overrides: &Overrides) -> Result<Scenario> {
    let mut s = Scenario {
        schema_version: SCHEMA_VERSION,
        kind: ScenarioKind::Umi,
        base_station: mmwave_station(10.0, 2000.0, 10.0),
        macro_cell: Some(RadioNode {
            position: Position::new(0.0, 0.0, 25.0),
            tx_power_dbm: 49.0,
            tx_gain_dbi: 17.0,
            rx_gain_dbi: 0.0,
            frequency_hz: 3.55e9,
            bandwidth_hz: DEFAULT_MCBS_BANDWIDTH_HZ,
        }),
        surface: default_surface(20.0, 2100.0),
        ues: default_ues(),
        pathloss_exponents: PathlossExponents::default(),
        direct_path_blocked: true,
        bandwidth_mode: BandwidthMode::Broadcast,
        noise: NoiseSpec::default(),
        fading: FadingConfig::default(),
        calibration: None,
    };
    overrides.apply(&mut s)?;
    Ok(s)
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The shipped indoor deployment, bandwidth already calibrated.
    pub fn bundled_indoor() -> Result<Self> {
        Self::from_json(INDOOR_SCENARIO)
    }

    /// The shipped UMi deployment, bandwidth already calibrated.
    pub fn bundled_umi() -> Result<Self> {
        Self::from_json(UMI_SCENARIO)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.base_station.validate()?;
        match (self.kind, &self.macro_cell) {
            (ScenarioKind::Indoor, Some(_)) => {
                return Err(Error::invalid("an indoor scenario has no macro cell"));
            }
            (ScenarioKind::Umi, None) => {
                return Err(Error::invalid(
                    "a UMi scenario needs exactly one macro cell",
                ));
            }
            (_, Some(mc)) => mc.validate()?,
            _ => {}
        }
        self.surface.node().validate()?;
        self.surface.grid(self.base_station.frequency_hz)?;
        canonical_codebook(self.surface.n_states)?;
        if self.ues.is_empty() {
            return Err(Error::invalid("at least one UE is required"));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            ensure_finite("UE distance", ue.distance_m)?;
            ensure_finite("UE azimuth", ue.azimuth_deg)?;
            ensure_finite("UE elevation", ue.elevation_deg)?;
            ensure_finite("UE rx gain", ue.rx_gain_dbi)?;
            if ue.distance_m < crate::link::MIN_DISTANCE_M {
                return Err(Error::invalid(format!(
                    "UE {i} is closer than 1 m to the surface"
                )));
            }
            ue_target(ue).map_err(|e| Error::invalid(format!("UE {i}: {e}")))?;
        }
        let p = &self.pathloss_exponents;
        for (name, v) in [
            ("indoor_los", p.indoor_los),
            ("indoor_nlos", p.indoor_nlos),
            ("umi_scbs_los", p.umi_scbs_los),
            ("umi_scbs_nlos", p.umi_scbs_nlos),
            ("mcbs_los", p.mcbs_los),
            ("mcbs_nlos", p.mcbs_nlos),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "pathloss exponent {name} must be positive"
                )));
            }
        }
        ensure_finite("noise density", self.noise.density_dbm_hz)?;
        ensure_finite("noise figure", self.noise.noise_figure_db)?;
        if self.fading.enabled && self.fading.drops == 0 {
            return Err(Error::invalid("fading needs at least one drop"));
        }
        if self.fading.ricean_k_db.is_nan() {
            return Err(Error::invalid("Ricean K-factor is NaN"));
        }
        let horizontal = self.normal();
        if horizontal.is_none() {
            return Err(Error::invalid(
                "base station and surface share a horizontal position",
            ));
        }
        Ok(())
    }

    /// Horizontal unit normal from the surface toward the serving base station.
    fn normal(&self) -> Option<[f64; 3]> {
        let dx = self.base_station.position.x_m - self.surface.position.x_m;
        let dy = self.base_station.position.y_m - self.surface.position.y_m;
        let len = dx.hypot(dy);
        (len > 0.0).then(|| [dx / len, dy / len, 0.0])
    }

    /// Position of `ue` with its distance extended by `offset_m`.
    pub fn ue_position(&self, ue: &UeConfig, offset_m: f64) -> Position {
        let n = self.normal().expect("validated scenario");
        let up = [0.0, 0.0, 1.0];
        // x̂ = ŷ × n̂
        let x = [
            up[1] * n[2] - up[2] * n[1],
            up[2] * n[0] - up[0] * n[2],
            up[0] * n[1] - up[1] * n[0],
        ];
        let (a, e) = (ue.azimuth_deg.to_radians(), ue.elevation_deg.to_radians());
        let r = ue.distance_m + offset_m;
        let (cx, cy, cz) = (e.cos() * a.sin(), e.sin(), e.cos() * a.cos());
        let p = self.surface.position;
        Position::new(
            p.x_m + r * (cx * x[0] + cy * up[0] + cz * n[0]),
            p.y_m + r * (cx * x[1] + cy * up[1] + cz * n[1]),
            p.height_m + r * (cx * x[2] + cy * up[2] + cz * n[2]),
        )
    }

    fn grid(&self) -> Result<UnitCellGrid> {
        self.surface.grid(self.base_station.frequency_hz)
    }

    fn hop_models(&self) -> HopModels {
        let model = match self.kind {
            ScenarioKind::Indoor => PathlossModel::InhLos,
            ScenarioKind::Umi => PathlossModel::CloseIn {
                exponent: self.pathloss_exponents.umi_scbs_los,
            },
        };
        HopModels {
            incoming: model,
            outgoing: model,
        }
    }

    fn ue_bandwidth(&self, ue_count: usize) -> f64 {
        match self.bandwidth_mode {
            BandwidthMode::Broadcast => self.base_station.bandwidth_hz,
            BandwidthMode::EqualSplit => self.base_station.bandwidth_hz / ue_count as f64,
        }
    }

    /// Sets the mmWave bandwidth and records where it came from.
    pub fn apply_calibration(&mut self, calibration: Calibration) {
        self.base_station.bandwidth_hz = calibration.bandwidth_hz;
        self.calibration = Some(calibration);
    }
}

/// Beam direction of a UE in surface coordinates.
pub fn ue_target(ue: &UeConfig) -> Result<BeamTarget> {
    let (a, e) = (ue.azimuth_deg.to_radians(), ue.elevation_deg.to_radians());
    let (u, v, w) = (e.cos() * a.sin(), e.sin(), e.cos() * a.cos());
    if w <= 0.0 {
        return Err(Error::invalid(
            "UE lies behind or in the plane of the surface",
        ));
    }
    let theta = w.clamp(-1.0, 1.0).acos();
    let phi = if theta < 1e-12 { 0.0 } else { v.atan2(u) };
    BeamTarget::new(theta, phi)
}

/// Knobs that do not belong to the deployment itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub angle_resolution_deg: f64,
    /// Overrides the scenario's fading seed when set.
    pub seed: Option<u64>,
    pub sdm_axis: SdmAxis,
    pub execution: Execution,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            angle_resolution_deg: DEFAULT_RESOLUTION_DEG,
            seed: None,
            sdm_axis: SdmAxis::Row,
            execution: Execution::default(),
        }
    }
}

/// Surface coding for the first K UEs and the gain each UE sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPlan {
    pub method: CodingMethod,
    pub ue_count: usize,
    /// Per-UE beam gain (directive gain plus amplitude loss), dBi.
    pub beam_gains_dbi: Vec<f64>,
    /// Peak directivity of the coded surface, dBi.
    pub directivity_dbi: f64,
}

/// Codes the surface for the first `ue_count` UEs and evaluates each UE's beam gain.
pub fn plan_beams(
    scenario: &Scenario,
    method: CodingMethod,
    ue_count: usize,
    settings: &EvalSettings,
) -> Result<BeamPlan> {
    if ue_count == 0 || ue_count > scenario.ues.len() {
        return Err(Error::invalid(format!(
            "UE count must lie in 1..={}, got {ue_count}",
            scenario.ues.len()
        )));
    }
    let grid = scenario.grid()?;
    let codebook = canonical_codebook(scenario.surface.n_states)?;
    let targets = scenario.ues[..ue_count]
        .iter()
        .map(ue_target)
        .collect::<Result<Vec<_>>>()?;
    let aperture = code_surface(&grid, &targets, method, &codebook, settings.sdm_axis)?;
    let angles = AngleGrid::hemisphere(settings.angle_resolution_deg)?;
    let pattern = radiation_pattern_with(&aperture, &angles, settings.execution)?;
    let beam_gains_dbi = targets
        .iter()
        .map(|t| beam_gain(&aperture, &pattern, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamPlan {
        method,
        ue_count,
        beam_gains_dbi,
        directivity_dbi: directivity(&pattern)?,
    })
}

/// Synthesizes and quantizes a K-beam coding.
pub fn code_surface(
    grid: &UnitCellGrid,
    targets: &[BeamTarget],
    method: CodingMethod,
    codebook: &crate::surface::StateCodebook,
    sdm_axis: SdmAxis,
) -> Result<Aperture> {
    Ok(match method {
        CodingMethod::PhaseOnly => {
            let profile = synthesize(grid, targets, &SynthesisOptions::default())?.phase_only();
            Aperture::from_phase(&quantize_profile(&profile, codebook).0)
        }
        CodingMethod::AmpPhs => {
            let profile =
                synthesize(grid, targets, &SynthesisOptions::default())?.complex_profile()?;
            Aperture::from_complex(&profile.quantize_phase(codebook).0)
        }
        CodingMethod::Sdm => {
            let profile = sdm_partition_profile(grid, targets, sdm_axis, &IncidentWave::normal())?;
            Aperture::from_phase(&quantize_profile(&profile, codebook).0)
        }
    })
}

/// Per-UE entry of a throughput report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeReport {
    pub ue_index: usize,
    pub distance_m: f64,
    pub azimuth_deg: f64,
    pub beam_gain_dbi: f64,
    /// Surface-assisted mmWave link.
    pub ris_link: LinkResult,
    /// Macro-cell link, UMi only.
    pub macro_link: Option<LinkResult>,
    pub throughput_bps: f64,
}

/// Context recorded alongside every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub scbs_bandwidth_hz: f64,
    pub ue_bandwidth_hz: f64,
    pub calibration: Option<Calibration>,
    pub n_states: usize,
    pub angle_resolution_deg: f64,
    pub fading_enabled: bool,
    pub fading_drops: usize,
    pub seed: u64,
}

/// Throughput of one (method, K, offset) configuration.
///
/// With fading enabled, `throughput_bps` is the mean over the drops while the
/// power and SNR fields describe the fading-free budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    pub method: CodingMethod,
    pub ue_count: usize,
    pub offset_m: f64,
    pub ues: Vec<UeReport>,
    pub ris_throughput_bps: f64,
    pub macro_throughput_bps: f64,
    pub total_throughput_bps: f64,
    pub metadata: ReportMetadata,
}

/// Evaluates with default settings.
pub fn evaluate(
    scenario: &Scenario,
    method: CodingMethod,
    ue_count: usize,
    offset_m: f64,
) -> Result<ThroughputReport> {
    evaluate_with(
        scenario,
        method,
        ue_count,
        offset_m,
        &EvalSettings::default(),
    )
}

pub fn evaluate_with(
    scenario: &Scenario,
    method: CodingMethod,
    ue_count: usize,
    offset_m: f64,
    settings: &EvalSettings,
) -> Result<ThroughputReport> {
    scenario.validate()?;
    let plan = plan_beams(scenario, method, ue_count, settings)?;
    let seed = settings.seed.unwrap_or(scenario.fading.seed);
    evaluate_plan(scenario, &plan, offset_m, seed, settings)
}

/// Link evaluation for a precomputed beam plan.
pub fn evaluate_plan(
    scenario: &Scenario,
    plan: &BeamPlan,
    offset_m: f64,
    seed: u64,
    settings: &EvalSettings,
) -> Result<ThroughputReport> {
    ensure_finite("distance offset", offset_m)?;
    if offset_m < 0.0 {
        return Err(Error::invalid(format!(
            "distance offset must be non-negative, got {offset_m}"
        )));
    }
    let k = plan.ue_count;
    let bs = &scenario.base_station;
    let ris = scenario.surface.node();
    let models = scenario.hop_models();
    let bandwidth = scenario.ue_bandwidth(k);
    let fading = &scenario.fading;
    let mut ues = Vec::with_capacity(k);
    for (i, (ue, &gain)) in scenario.ues[..k]
        .iter()
        .zip(&plan.beam_gains_dbi)
        .enumerate()
    {
        let position = scenario.ue_position(ue, offset_m);
        let rx = RadioNode::receiver(position, ue.rx_gain_dbi, bs.frequency_hz, bandwidth);
        let ris_link = cascade_ris_link(
            bs,
            &ris,
            &rx,
            gain,
            &models,
            HopFading::none(),
            &scenario.noise,
        )?;
        let direct = if scenario.direct_path_blocked {
            None
        } else {
            let model = match scenario.kind {
                ScenarioKind::Indoor => PathlossModel::InhLos,
                ScenarioKind::Umi => PathlossModel::CloseIn {
                    exponent: scenario.pathloss_exponents.umi_scbs_los,
                },
            };
            Some(direct_link(bs, &rx, &model, 1.0, &scenario.noise)?)
        };
        let ris_link = combine_direct(ris_link, direct.as_ref(), bandwidth)?;
        let macro_link = match &scenario.macro_cell {
            Some(mc) => {
                let rx =
                    RadioNode::receiver(position, ue.rx_gain_dbi, mc.frequency_hz, mc.bandwidth_hz);
                let model = PathlossModel::CloseIn {
                    exponent: scenario.pathloss_exponents.mcbs_nlos,
                };
                Some(direct_link(mc, &rx, &model, 1.0, &scenario.noise)?)
            }
            None => None,
        };
        let (ris_tp, macro_tp) = if fading.enabled {
            monte_carlo(
                scenario,
                i as u64,
                seed,
                &ris_link,
                direct.as_ref(),
                macro_link.as_ref(),
                bandwidth,
            )?
        } else {
            (
                ris_link.throughput_bps,
                macro_link.map_or(0.0, |l| l.throughput_bps),
            )
        };
        let ris_link = LinkResult {
            throughput_bps: ris_tp,
            ..ris_link
        };
        let macro_link = macro_link.map(|l| LinkResult {
            throughput_bps: macro_tp,
            ..l
        });
        ues.push(UeReport {
            ue_index: i,
            distance_m: ue.distance_m + offset_m,
            azimuth_deg: ue.azimuth_deg,
            beam_gain_dbi: gain,
            ris_link,
            macro_link,
            throughput_bps: ris_tp + macro_tp,
        });
    }
    let ris_throughput_bps = ues.iter().map(|u| u.ris_link.throughput_bps).sum();
    let macro_throughput_bps = ues
        .iter()
        .map(|u| u.macro_link.map_or(0.0, |l| l.throughput_bps))
        .sum();
    let total_throughput_bps = ues.iter().map(|u| u.throughput_bps).sum();
    Ok(ThroughputReport {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.kind,
        method: plan.method,
        ue_count: k,
        offset_m,
        ues,
        ris_throughput_bps,
        macro_throughput_bps,
        total_throughput_bps,
        metadata: ReportMetadata {
            scbs_bandwidth_hz: bs.bandwidth_hz,
            ue_bandwidth_hz: bandwidth,
            calibration: scenario.calibration.clone(),
            n_states: scenario.surface.n_states,
            angle_resolution_deg: settings.angle_resolution_deg,
            fading_enabled: fading.enabled,
            fading_drops: if fading.enabled { fading.drops } else { 0 },
            seed,
        },
    })
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Adds an unblocked direct path to the surface link as an incoherent power sum.
fn combine_direct(
    ris: LinkResult,
    direct: Option<&LinkResult>,
    bandwidth: f64,
) -> Result<LinkResult> {
    let Some(d) = direct else {
        return Ok(ris);
    };
    let received =
        10.0 * (dbm_to_mw(ris.received_power_dbm) + dbm_to_mw(d.received_power_dbm)).log10();
    let snr_db = received - ris.noise_power_dbm;
    Ok(LinkResult {
        received_power_dbm: received,
        snr_db,
        throughput_bps: shannon_throughput(bandwidth, snr_db)?,
        ..ris
    })
}

/// Mean throughput over fading drops.
///
/// UE `i` draws its incoming-hop, outgoing-hop and direct/macro fading from
/// streams `3i`, `3i + 1` and `3i + 2` of `seed`.
fn monte_carlo(
    scenario: &Scenario,
    ue: u64,
    seed: u64,
    ris: &LinkResult,
    direct: Option<&LinkResult>,
    macro_link: Option<&LinkResult>,
    bandwidth: f64,
) -> Result<(f64, f64)> {
    let cfg = &scenario.fading;
    let los = FadingSpec::los(cfg.ricean_k_db, seed);
    let nlos = FadingSpec::nlos(seed);
    let mut s_in = fading_stream(seed, 3 * ue);
    let mut s_out = fading_stream(seed, 3 * ue + 1);
    let mut s_side = fading_stream(seed, 3 * ue + 2);
    // without a direct path, `ris` already holds the pure cascade budget
    let (cascade_mw, direct_mw) = match direct {
        Some(d) => {
            let d_mw = dbm_to_mw(d.received_power_dbm);
            (dbm_to_mw(ris.received_power_dbm) - d_mw, d_mw)
        }
        None => (dbm_to_mw(ris.received_power_dbm), 0.0),
    };
    let noise_mw = dbm_to_mw(ris.noise_power_dbm);
    let mut ris_sum = 0.0;
    let mut macro_sum = 0.0;
    for _ in 0..cfg.drops {
        let h = fading_sample(&los, &mut s_in) * fading_sample(&los, &mut s_out);
        let mut p = cascade_mw * h;
        if direct.is_some() {
            p += direct_mw * fading_sample(&los, &mut s_side);
        }
        ris_sum += bandwidth * (p / noise_mw).ln_1p() / std::f64::consts::LN_2;
        if let Some(m) = macro_link {
            let g = fading_sample(&nlos, &mut s_side);
            let snr = m.snr_db + fading_db(g);
            macro_sum += shannon_throughput(scenario.macro_cell.expect("UMi").bandwidth_hz, snr)?;
        }
    }
    let n = cfg.drops as f64;
    Ok((ris_sum / n, macro_sum / n))
}

/// Cartesian product of methods × UE counts × offsets, ordered in that nesting.
///
/// Cell `c` (its position in that order) uses fading seed `seed + c`.
pub fn sweep(
    scenario: &Scenario,
    methods: &[CodingMethod],
    ue_counts: &[usize],
    offsets_m: &[f64],
    settings: &EvalSettings,
) -> Result<Vec<ThroughputReport>> {
    if methods.is_empty() || ue_counts.is_empty() || offsets_m.is_empty() {
        return Err(Error::invalid("sweep ranges must be non-empty"));
    }
    scenario.validate()?;
    let base_seed = settings.seed.unwrap_or(scenario.fading.seed);
    let combos: Vec<(CodingMethod, usize)> = methods
        .iter()
        .flat_map(|&m| ue_counts.iter().map(move |&k| (m, k)))
        .collect();
    // each plan's pattern is itself parallel over angles
    let plans = combos
        .iter()
        .map(|&(m, k)| plan_beams(scenario, m, k, settings))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> = (0..plans.len())
        .flat_map(|p| offsets_m.iter().map(move |&o| (p, o)))
        .collect();
    par::map_range(settings.execution, cells.len(), |c| {
        let (p, offset) = cells[c];
        evaluate_plan(
            scenario,
            &plans[p],
            offset,
            base_seed.wrapping_add(c as u64),
            settings,
        )
    })
    .into_iter()
    .collect()
}

/// RIS-path throughput of the reference case: one UE, no offset, phase-only coding.
pub fn reference_throughput(scenario: &Scenario, settings: &EvalSettings) -> Result<f64> {
    let plan = plan_beams(scenario, CodingMethod::PhaseOnly, 1, settings)?;
    let mut s = scenario.clone();
    s.fading.enabled = false;
    Ok(evaluate_plan(&s, &plan, 0.0, 0, settings)?.ris_throughput_bps)
}

/// Finds the mmWave bandwidth at which the reference case reaches `target_bps`.
pub fn calibrate_bandwidth(
    scenario: &Scenario,
    target_bps: f64,
    settings: &EvalSettings,
) -> Result<Calibration> {
    ensure_finite("target throughput", target_bps)?;
    if target_bps <= 0.0 {
        return Err(Error::invalid("target throughput must be positive"));
    }
    let plan = plan_beams(scenario, CodingMethod::PhaseOnly, 1, settings)?;
    let mut s = scenario.clone();
    s.fading.enabled = false;
    let mut at = |log_b: f64| -> Result<f64> {
        s.base_station.bandwidth_hz = 10f64.powf(log_b);
        Ok(evaluate_plan(&s, &plan, 0.0, 0, settings)?.ris_throughput_bps)
    };
    let (mut lo, mut hi) = (0.0f64, 13.0f64);
    if at(lo)? > target_bps || at(hi)? < target_bps {
        return Err(Error::Numeric(format!(
            "target throughput {target_bps} bit/s is outside the reachable range"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? < target_bps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(Calibration {
        reference: format!("{} phase_only K=1 offset 0 m", scenario.kind),
        target_throughput_bps: target_bps,
        bandwidth_hz: 10f64.powf(0.5 * (lo + hi)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick() -> EvalSettings {
        EvalSettings {
            angle_resolution_deg: 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn indoor_defaults() {
        let s = build_indoor(&Overrides::default()).unwrap();
        assert_eq!(s.ues.len(), 8);
        assert!(s.macro_cell.is_none());
        assert!(s.direct_path_blocked);
        assert_eq!(s.base_station.bandwidth_hz, DEFAULT_SCBS_BANDWIDTH_HZ);
        let one = build_indoor(&Overrides {
            ue_count: Some(1),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(one.ues.len(), 1);
        assert_eq!(one.ues[0].distance_m, 5.0);
        assert!(build_indoor(&Overrides {
            grid_cells: Some((1, 1)),
            ..Default::default()
        })
        .is_ok());
    }

    #[test]
    fn umi_requires_macro_cell() {
        let mut s = build_umi(&Overrides::default()).unwrap();
        assert!(s.validate().is_ok());
        s.macro_cell = None;
        assert!(s.validate().is_err());
        let s = build_umi(&Overrides {
            ue_count: Some(7),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(
            s.ues.iter().map(|u| u.distance_m).collect::<Vec<_>>(),
            DEFAULT_UE_DISTANCES_M[..7]
        );
    }

    #[test]
    fn ue_geometry() {
        let s = build_indoor(&Overrides::default()).unwrap();
        for ue in &s.ues {
            let p = s.ue_position(ue, 0.0);
            assert_abs_diff_eq!(
                p.distance(&s.surface.position),
                ue.distance_m,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(p.height_m, s.surface.position.height_m, epsilon = 1e-12);
            let t = ue_target(ue).unwrap();
            assert_abs_diff_eq!(t.theta().to_degrees(), ue.azimuth_deg.abs(), epsilon = 1e-9);
        }
        // zero azimuth points straight at the base station
        let ue = UeConfig {
            distance_m: 10.0,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            rx_gain_dbi: 0.0,
        };
        let p = s.ue_position(&ue, 2.0);
        let bs = s.base_station.position;
        let to_bs = [
            bs.x_m - s.surface.position.x_m,
            bs.y_m - s.surface.position.y_m,
        ];
        let to_ue = [
            p.x_m - s.surface.position.x_m,
            p.y_m - s.surface.position.y_m,
        ];
        assert_abs_diff_eq!(
            to_bs[0] * to_ue[1] - to_bs[1] * to_ue[0],
            0.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(to_ue[0].hypot(to_ue[1]), 12.0, epsilon = 1e-9);
    }

    #[test]
    fn report_totals_are_exact_sums() {
        let s = build_umi(&Overrides::default()).unwrap();
        let r = evaluate_with(&s, CodingMethod::PhaseOnly, 3, 0.0, &quick()).unwrap();
        let total: f64 = r.ues.iter().map(|u| u.throughput_bps).sum();
        assert_eq!(r.total_throughput_bps, total);
        assert!(r.macro_throughput_bps > 0.0);
        assert_eq!(r.ues.len(), 3);
    }

    #[test]
    fn invalid_requests() {
        let s = build_indoor(&Overrides::default()).unwrap();
        assert!(evaluate_with(&s, CodingMethod::PhaseOnly, 0, 0.0, &quick()).is_err());
        assert!(evaluate_with(&s, CodingMethod::PhaseOnly, 9, 0.0, &quick()).is_err());
        assert!(evaluate_with(&s, CodingMethod::PhaseOnly, 1, -1.0, &quick()).is_err());
        assert!(sweep(&s, &[], &[1], &[0.0], &quick()).is_err());
        assert!(build_indoor(&Overrides {
            ue_count: Some(0),
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let s = build_umi(&Overrides::default()).unwrap();
        let text = s.to_json().unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(Scenario::from_json(&v.to_string()).is_err());
        v.as_object_mut().unwrap().remove("surprise");
        v["schema_version"] = serde_json::json!(99);
        assert!(Scenario::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn equal_split_divides_bandwidth() {
        let s = build_indoor(&Overrides {
            bandwidth_mode: Some(BandwidthMode::EqualSplit),
            ..Default::default()
        })
        .unwrap();
        let r = evaluate_with(&s, CodingMethod::PhaseOnly, 4, 0.0, &quick()).unwrap();
        assert_eq!(r.metadata.ue_bandwidth_hz, DEFAULT_SCBS_BANDWIDTH_HZ / 4.0);
    }

    #[test]
    fn unblocked_direct_path_adds_power() {
        let mut s = build_indoor(&Overrides::default()).unwrap();
        let blocked = evaluate_with(&s, CodingMethod::PhaseOnly, 2, 0.0, &quick()).unwrap();
        s.direct_path_blocked = false;
        let open = evaluate_with(&s, CodingMethod::PhaseOnly, 2, 0.0, &quick()).unwrap();
        for (a, b) in blocked.ues.iter().zip(&open.ues) {
            assert!(b.ris_link.received_power_dbm > a.ris_link.received_power_dbm);
        }
    }

    #[test]
    fn calibration_hits_target() {
        let s = build_indoor(&Overrides::default()).unwrap();
        let cal = calibrate_bandwidth(&s, 0.5e9, &quick()).unwrap();
        let mut c = s.clone();
        c.apply_calibration(cal.clone());
        let got = reference_throughput(&c, &quick()).unwrap();
        assert!((got / 0.5e9 - 1.0).abs() < 1e-9, "{got}");
        assert_eq!(c.calibration, Some(cal));
    }

    #[test]
    fn fading_runs_are_reproducible() {
        let s = build_umi(&Overrides {
            fading: Some(FadingConfig {
                enabled: true,
                drops: 500,
                ..Default::default()
            }),
            ..Default::default()
        })
        .unwrap();
        let a = evaluate_with(&s, CodingMethod::PhaseOnly, 2, 0.0, &quick()).unwrap();
        let b = evaluate_with(&s, CodingMethod::PhaseOnly, 2, 0.0, &quick()).unwrap();
        assert_eq!(a, b);
        let other = EvalSettings {
            seed: Some(7),
            ..quick()
        };
        let c = evaluate_with(&s, CodingMethod::PhaseOnly, 2, 0.0, &other).unwrap();
        assert_ne!(a.total_throughput_bps, c.total_throughput_bps);
    }

    #[test]
    fn bundled_scenarios_parse() {
        let i = Scenario::bundled_indoor().unwrap();
        let u = Scenario::bundled_umi().unwrap();
        assert_eq!(i.kind, ScenarioKind::Indoor);
        assert_eq!(u.kind, ScenarioKind::Umi);
        assert!(i.calibration.is_some());
        assert_eq!(i.base_station.bandwidth_hz, u.base_station.bandwidth_hz);
    }
}
