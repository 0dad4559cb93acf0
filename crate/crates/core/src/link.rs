//! Pathloss models, link budgets, noise, fading and Shannon throughput.
//!
//! Frequencies enter the close-in model in Hz and the indoor-office models in
//! GHz. Distances are 3-D and must be at least [`MIN_DISTANCE_M`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::SPEED_OF_LIGHT;

pub const MIN_DISTANCE_M: f64 = 1.0;

/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DENSITY_DBM_HZ: f64 = -174.0;

/// Fading power gains are floored here before conversion to dB.
const FADING_FLOOR: f64 = 1e-30;

fn check_distance(distance_m: f64) -> Result<()> {
    ensure_finite("distance", distance_m)?;
    if distance_m < MIN_DISTANCE_M {
        return Err(Error::invalid(format!(
            "distance {distance_m} m is below the {MIN_DISTANCE_M} m model limit"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value <= 0.0 {
        return Err(Error::invalid(format!(
            "{name} must be positive, got {value}"
        )));
    }
    Ok(())
}

/// Close-in free-space reference model: `20log₁₀(4πf/c) + 10·n·log₁₀(d)`, `f` in Hz.
pub fn pathloss_umi(frequency_hz: f64, distance_m: f64, exponent: f64) -> Result<f64> {
    check_positive("frequency", frequency_hz)?;
    check_positive("pathloss exponent", exponent)?;
    check_distance(distance_m)?;
    let fspl = 20.0 * (4.0 * std::f64::consts::PI * frequency_hz / SPEED_OF_LIGHT).log10();
    Ok(fspl + 10.0 * exponent * distance_m.log10())
}

/// Indoor office line of sight: `32.4 + 20log₁₀(f) + 17.3log₁₀(d)`, `f` in GHz.
pub fn pathloss_inh_los(frequency_ghz: f64, distance_m: f64) -> Result<f64> {
    check_positive("frequency", frequency_ghz)?;
    check_distance(distance_m)?;
    Ok(32.4 + 20.0 * frequency_ghz.log10() + 17.3 * distance_m.log10())
}

/// Indoor office non line of sight, never below the LoS value; `f` in GHz.
pub fn pathloss_inh_nlos(frequency_ghz: f64, distance_m: f64) -> Result<f64> {
    let los = pathloss_inh_los(frequency_ghz, distance_m)?;
    let nlos = 38.3 * distance_m.log10() + 17.30 + 24.9 * frequency_ghz.log10();
    Ok(los.max(nlos))
}

/// Pathloss model attached to a hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathlossModel {
    CloseIn { exponent: f64 },
    InhLos,
    InhNlos,
}

impl PathlossModel {
    pub fn pathloss(&self, frequency_hz: f64, distance_m: f64) -> Result<f64> {
        match *self {
            PathlossModel::CloseIn { exponent } => pathloss_umi(frequency_hz, distance_m, exponent),
            PathlossModel::InhLos => pathloss_inh_los(frequency_hz * 1e-9, distance_m),
            PathlossModel::InhNlos => pathloss_inh_nlos(frequency_hz * 1e-9, distance_m),
        }
    }
}

/// `P_r = P_t + G_t + G_r − PL − L_o`, all in dB units.
pub fn link_budget(
    tx_power_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    pathloss_db: f64,
    other_losses_db: f64,
) -> f64 {
    tx_power_dbm + tx_gain_dbi + rx_gain_dbi - pathloss_db - other_losses_db
}

/// `density + 10log₁₀(B) + NF`, dBm.
pub fn noise_power(bandwidth_hz: f64, density_dbm_hz: f64, noise_figure_db: f64) -> Result<f64> {
    check_positive("bandwidth", bandwidth_hz)?;
    Ok(density_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

/// `B·log₂(1 + SNR)`, bits/s.
pub fn shannon_throughput(bandwidth_hz: f64, snr_db: f64) -> Result<f64> {
    check_positive("bandwidth", bandwidth_hz)?;
    if snr_db.is_nan() {
        return Err(Error::invalid("SNR is NaN"));
    }
    Ok(bandwidth_hz * (10f64.powf(snr_db / 10.0)).ln_1p() / std::f64::consts::LN_2)
}

/// Receiver noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub density_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            density_dbm_hz: THERMAL_NOISE_DENSITY_DBM_HZ,
            noise_figure_db: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn power_dbm(&self, bandwidth_hz: f64) -> Result<f64> {
        noise_power(bandwidth_hz, self.density_dbm_hz, self.noise_figure_db)
    }
}

/// Cartesian position; `height` is the z coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
    pub height_m: f64,
}

impl Position {
    pub fn new(x_m: f64, y_m: f64, height_m: f64) -> Self {
        Self { x_m, y_m, height_m }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let d = [
            self.x_m - other.x_m,
            self.y_m - other.y_m,
            self.height_m - other.height_m,
        ];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("x", self.x_m)?;
        ensure_finite("y", self.y_m)?;
        ensure_finite("height", self.height_m)?;
        if self.height_m < 0.0 {
            return Err(Error::invalid(format!(
                "height must be non-negative, got {}",
                self.height_m
            )));
        }
        Ok(())
    }
}

/// A transmitter or receiver with its radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioNode {
    pub position: Position,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
}

impl RadioNode {
    /// A receive-only node (transmit fields zeroed).
    pub fn receiver(
        position: Position,
        rx_gain_dbi: f64,
        frequency_hz: f64,
        bandwidth_hz: f64,
    ) -> Self {
        Self {
            position,
            tx_power_dbm: 0.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi,
            frequency_hz,
            bandwidth_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        ensure_finite("tx power", self.tx_power_dbm)?;
        ensure_finite("tx gain", self.tx_gain_dbi)?;
        ensure_finite("rx gain", self.rx_gain_dbi)?;
        check_positive("frequency", self.frequency_hz)?;
        check_positive("bandwidth", self.bandwidth_hz)
    }
}

/// The reflecting surface as a passive relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisNode {
    pub position: Position,
    /// Receive gain of the surface toward the transmitter.
    #[serde(default)]
    pub rx_gain_dbi: f64,
    pub efficiency: f64,
}

impl RisNode {
    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        ensure_finite("RIS rx gain", self.rx_gain_dbi)?;
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid(format!(
                "RIS efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        Ok(())
    }
}

/// Outcome of one link evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    /// Total pathloss over all hops.
    pub pathloss_db: f64,
    pub received_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_db: f64,
    pub throughput_bps: f64,
}

impl LinkResult {
    fn new(
        pathloss_db: f64,
        received_power_dbm: f64,
        noise_power_dbm: f64,
        bandwidth_hz: f64,
    ) -> Result<Self> {
        let snr_db = received_power_dbm - noise_power_dbm;
        Ok(Self {
            pathloss_db,
            received_power_dbm,
            noise_power_dbm,
            snr_db,
            throughput_bps: shannon_throughput(bandwidth_hz, snr_db)?,
        })
    }
}

/// Small-scale fading class of a hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingKind {
    /// Ricean.
    Los,
    /// Rayleigh.
    Nlos,
}

/// Fading configuration.
///
/// Random streams are split deterministically: stream `i` of a `FadingSpec` is a
/// ChaCha8 generator seeded with `seed` and switched to stream number `i`.
/// Streams with different indices never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    pub kind: FadingKind,
    /// Ricean K-factor; `+∞` gives a deterministic unit gain.
    pub ricean_k_db: f64,
    pub seed: u64,
}

impl FadingSpec {
    pub fn los(ricean_k_db: f64, seed: u64) -> Self {
        Self {
            kind: FadingKind::Los,
            ricean_k_db,
            seed,
        }
    }

    pub fn nlos(seed: u64) -> Self {
        Self {
            kind: FadingKind::Nlos,
            ricean_k_db: f64::NEG_INFINITY,
            seed,
        }
    }

    /// Independent random stream number `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        fading_stream(self.seed, index)
    }
}

/// Stream `index` derived from `seed`.
pub fn fading_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One unit-mean fading power gain.
pub fn fading_sample<R: Rng + ?Sized>(spec: &FadingSpec, rng: &mut R) -> f64 {
    match spec.kind {
        FadingKind::Nlos => rng.sample::<f64, _>(Exp1),
        FadingKind::Los => {
            if spec.ricean_k_db == f64::INFINITY {
                return 1.0;
            }
            let k = 10f64.powf(spec.ricean_k_db / 10.0);
            let los = (k / (k + 1.0)).sqrt();
            let scatter = (1.0 / (2.0 * (k + 1.0))).sqrt();
            let re = los + scatter * rng.sample::<f64, _>(StandardNormal);
            let im = scatter * rng.sample::<f64, _>(StandardNormal);
            re * re + im * im
        }
    }
}

/// Linear fading power gain on each hop of a cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopFading {
    pub incoming: f64,
    pub outgoing: f64,
}

impl Default for HopFading {
    fn default() -> Self {
        Self::none()
    }
}

impl HopFading {
    pub fn none() -> Self {
        Self {
            incoming: 1.0,
            outgoing: 1.0,
        }
    }

    pub fn total_db(&self) -> f64 {
        fading_db(self.incoming) + fading_db(self.outgoing)
    }
}

/// Fading gain in dB, floored to keep results finite.
pub fn fading_db(gain: f64) -> f64 {
    10.0 * gain.max(FADING_FLOOR).log10()
}

/// Pathloss models for the two hops of a surface-assisted link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopModels {
    pub incoming: PathlossModel,
    pub outgoing: PathlossModel,
}

/// Two-hop budget through the surface:
/// `P_r = P_t + G_t − PL₁ + G_ris + 10log₁₀η + G_beam − PL₂ + G_ue + fading`.
pub fn cascade_ris_link(
    tx: &RadioNode,
    ris: &RisNode,
    ue: &RadioNode,
    ris_beam_gain_dbi: f64,
    models: &HopModels,
    fading: HopFading,
    noise: &NoiseSpec,
) -> Result<LinkResult> {
    tx.validate()?;
    ris.validate()?;
    ue.validate()?;
    ensure_finite("beam gain", ris_beam_gain_dbi)?;
    let pl1 = models
        .incoming
        .pathloss(tx.frequency_hz, tx.position.distance(&ris.position))?;
    let pl2 = models
        .outgoing
        .pathloss(tx.frequency_hz, ris.position.distance(&ue.position))?;
    let received = tx.tx_power_dbm + tx.tx_gain_dbi - pl1
        + ris.rx_gain_dbi
        + 10.0 * ris.efficiency.log10()
        + ris_beam_gain_dbi
        - pl2
        + ue.rx_gain_dbi
        + fading.total_db();
    LinkResult::new(
        pl1 + pl2,
        received,
        noise.power_dbm(ue.bandwidth_hz)?,
        ue.bandwidth_hz,
    )
}

/// Single-hop budget from `tx` to `rx`; `fading` is a linear power gain.
pub fn direct_link(
    tx: &RadioNode,
    rx: &RadioNode,
    model: &PathlossModel,
    fading: f64,
    noise: &NoiseSpec,
) -> Result<LinkResult> {
    tx.validate()?;
    rx.validate()?;
    let pl = model.pathloss(tx.frequency_hz, tx.position.distance(&rx.position))?;
    let received =
        link_budget(tx.tx_power_dbm, tx.tx_gain_dbi, rx.rx_gain_dbi, pl, 0.0) + fading_db(fading);
    LinkResult::new(
        pl,
        received,
        noise.power_dbm(rx.bandwidth_hz)?,
        rx.bandwidth_hz,
    )
}
