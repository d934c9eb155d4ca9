//! mmWave link budgets: close-in path loss, sectored antenna gains,
//! FITU-R tree foliage loss, Rayleigh fading, interference and SINR.
//!
//! All losses and gains are combined in the dB domain:
//!
//! ```text
//! P_r[dBm] = P_t[dBm] + G_tx[dBi] + G_rx[dBi] - PL(r)[dB] - kappa[dB]
//! ```
//!
//! with `PL(r) = 32.4 + 10 a log10(r) + 20 log10(f_GHz)` (5GCM UMa
//! close-in model, exponent `a` depending on the LoS state) and `kappa`
//! the summed FITU-R foliage loss of the tree lines crossing the link.
//! Small-scale Rayleigh fading multiplies the linear power by an
//! exponential(1) draw.

use crate::geometry::{self, Point, TreeLine, Wall};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("propagation distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("bandwidth must be positive, got {0} Hz")]
    NonPositiveBandwidth(f64),
    #[error("serving index {serving} out of range for {count} stations")]
    ServingNotPresent { serving: usize, count: usize },
    #[error("invalid channel parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
}

/// Node classes; UEs are omni (0 dBi) by model assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Mbs,
    Sbs,
    Ue,
}

/// Channel model parameters. Defaults are the dense-urban baseline used
/// throughout the experiment recipes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub g0_mbs_dbi: f64,
    pub g0_sbs_dbi: f64,
    pub g_side_mbs_dbi: f64,
    pub g_side_sbs_dbi: f64,
    pub hpbw_deg: f64,
    /// Receiver noise figure over the -174 dBm/Hz thermal floor.
    pub noise_figure_db: f64,
    /// If set, the noise power in dBm is fixed to this value regardless
    /// of the allocated bandwidth.
    pub noise_override_dbm: Option<f64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            carrier_ghz: 28.0,
            alpha_los: 3.0,
            alpha_nlos: 4.0,
            g0_mbs_dbi: 18.0,
            g0_sbs_dbi: 18.0,
            g_side_mbs_dbi: -2.0,
            g_side_sbs_dbi: -2.0,
            hpbw_deg: 30.0,
            noise_figure_db: 5.0,
            noise_override_dbm: None,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.carrier_ghz <= 0.0 {
            return Err(ChannelError::InvalidParameter(format!(
                "carrier_ghz must be positive, got {}",
                self.carrier_ghz
            )));
        }
        if self.alpha_los <= 0.0 {
            return Err(ChannelError::InvalidParameter(format!(
                "alpha_los must be positive, got {}",
                self.alpha_los
            )));
        }
        if self.alpha_nlos < self.alpha_los {
            return Err(ChannelError::InvalidParameter(format!(
                "alpha_nlos ({}) must be >= alpha_los ({})",
                self.alpha_nlos, self.alpha_los
            )));
        }
        if self.hpbw_deg <= 0.0 || self.hpbw_deg >= 360.0 {
            return Err(ChannelError::InvalidParameter(format!(
                "hpbw_deg must lie in (0, 360), got {}",
                self.hpbw_deg
            )));
        }
        Ok(())
    }

    /// (main lobe, side lobe) gains of a node class, in dBi.
    pub fn gains_dbi(&self, class: NodeClass) -> (f64, f64) {
        match class {
            NodeClass::Mbs => (self.g0_mbs_dbi, self.g_side_mbs_dbi),
            NodeClass::Sbs => (self.g0_sbs_dbi, self.g_side_sbs_dbi),
            NodeClass::Ue => (0.0, 0.0),
        }
    }
}

/// Budget of one directed link, fading-averaged.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub los: bool,
    pub path_loss_db: f64,
    pub foliage_loss_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub avg_rx_power_dbm: f64,
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Close-in path loss in dB. Distances below 1 m are clamped to the 1 m
/// reference; the LoS flag selects the exponent.
pub fn path_loss_db(r_m: f64, los: bool, params: &ChannelParams) -> Result<f64, ChannelError> {
    if r_m <= 0.0 || !r_m.is_finite() {
        return Err(ChannelError::NonPositiveDistance(r_m));
    }
    let r = r_m.max(1.0);
    let alpha = if los { params.alpha_los } else { params.alpha_nlos };
    Ok(32.4 + 10.0 * alpha * r.log10() + 20.0 * params.carrier_ghz.log10())
}

/// Wraps an angle into (-pi, pi].
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// Sectored antenna pattern: main-lobe gain inside the half-power
/// beamwidth (boundary included), side-lobe gain outside.
pub fn antenna_gain_dbi(
    boresight_rad: f64,
    target_rad: f64,
    g0_dbi: f64,
    g_side_dbi: f64,
    hpbw_deg: f64,
) -> f64 {
    let offset = wrap_angle(target_rad - boresight_rad).abs();
    if offset <= hpbw_deg.to_radians() / 2.0 {
        g0_dbi
    } else {
        g_side_dbi
    }
}

/// Per-crossing FITU-R loss in dB; frequency in MHz, depth in meters.
#[inline]
pub fn fitu_r_loss_db(f_mhz: f64, depth_m: f64, in_leaf: bool) -> f64 {
    if in_leaf {
        0.39 * f_mhz.powf(0.39) * depth_m.powf(0.25)
    } else {
        0.37 * f_mhz.powf(0.18) * depth_m.powf(0.59)
    }
}

/// Total foliage loss over a set of crossed tree lines. The FITU-R fit
/// takes the frequency in MHz, so the carrier is converted from GHz.
pub fn foliage_loss_db(crossings: &[&TreeLine], carrier_ghz: f64) -> f64 {
    let f_mhz = carrier_ghz * 1000.0;
    crossings
        .iter()
        .map(|t| fitu_r_loss_db(f_mhz, t.depth_m, t.in_leaf))
        .sum()
}

/// Fading-averaged received power in dBm (E|h|^2 = 1 for Rayleigh).
pub fn avg_rx_power_dbm(
    tx_power_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    path_loss_db: f64,
    foliage_loss_db: f64,
) -> f64 {
    tx_power_dbm + tx_gain_dbi + rx_gain_dbi - path_loss_db - foliage_loss_db
}

/// One Rayleigh-faded power draw in mW: the amplitude is Rayleigh, so the
/// power multiplier is exponential(1).
pub fn instantaneous_rx_power_mw<R: Rng>(avg_rx_power_dbm: f64, rng: &mut R) -> f64 {
    let h: f64 = rng.sample(Exp1);
    dbm_to_mw(avg_rx_power_dbm) * h
}

/// Thermal noise power over `bandwidth_hz` plus the noise figure, in dBm,
/// unless overridden in the parameters.
pub fn noise_power_dbm(bandwidth_hz: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    if let Some(dbm) = params.noise_override_dbm {
        return Ok(dbm);
    }
    if bandwidth_hz <= 0.0 {
        return Err(ChannelError::NonPositiveBandwidth(bandwidth_hz));
    }
    Ok(-174.0 + 10.0 * bandwidth_hz.log10() + params.noise_figure_db)
}

/// signal / (interference + noise), all in mW.
pub fn sinr(
    signal_mw: f64,
    interference_mw: f64,
    bandwidth_hz: f64,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let noise_mw = dbm_to_mw(noise_power_dbm(bandwidth_hz, params)?);
    Ok(signal_mw / (interference_mw + noise_mw))
}

/// A transmitting station seen as an interference source. `boresight_rad`
/// is the direction its beam currently points; `None` marks an idle
/// station with nothing scheduled, which does not transmit.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceSource {
    pub position: Point,
    pub tx_power_dbm: f64,
    pub g0_dbi: f64,
    pub g_side_dbi: f64,
    pub boresight_rad: Option<f64>,
}

fn interference_sum<R: Rng>(
    target: Point,
    rx_gain: impl Fn(Point) -> f64,
    serving: usize,
    sources: &[InterferenceSource],
    walls: &[Wall],
    trees: &[TreeLine],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    if serving >= sources.len() {
        return Err(ChannelError::ServingNotPresent {
            serving,
            count: sources.len(),
        });
    }
    let mut total = 0.0;
    for (i, src) in sources.iter().enumerate() {
        if i == serving {
            continue;
        }
        let boresight = match src.boresight_rad {
            Some(b) => b,
            None => continue,
        };
        let dist = src.position.distance(target);
        let los = geometry::is_los(src.position, target, walls)?;
        let pl = path_loss_db(dist, los, params)?;
        let kappa = foliage_loss_db(
            &geometry::tree_crossings(src.position, target, trees)?,
            params.carrier_ghz,
        );
        let tx_gain = antenna_gain_dbi(
            boresight,
            src.position.angle_to(target),
            src.g0_dbi,
            src.g_side_dbi,
            params.hpbw_deg,
        );
        let avg = avg_rx_power_dbm(src.tx_power_dbm, tx_gain, rx_gain(src.position), pl, kappa);
        total += instantaneous_rx_power_mw(avg, rng);
    }
    Ok(total)
}

/// Aggregated access-link interference at a UE, in mW: every station
/// except the serving one contributes one faded draw, with its transmit
/// gain evaluated from its own boresight toward the UE. UE receive gain
/// is 0 dBi.
pub fn interference_access<R: Rng>(
    ue: Point,
    serving: usize,
    sources: &[InterferenceSource],
    walls: &[Wall],
    trees: &[TreeLine],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    interference_sum(ue, |_| 0.0, serving, sources, walls, trees, params, rng)
}

/// Aggregated backhaul interference at an SBS, in mW. Both ends are
/// directional: the SBS listens along `rx_boresight_rad` (toward its
/// donor) with the given gains.
#[allow(clippy::too_many_arguments)]
pub fn interference_backhaul<R: Rng>(
    sbs: Point,
    rx_boresight_rad: f64,
    rx_g0_dbi: f64,
    rx_g_side_dbi: f64,
    serving: usize,
    sources: &[InterferenceSource],
    walls: &[Wall],
    trees: &[TreeLine],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    let hpbw = params.hpbw_deg;
    interference_sum(
        sbs,
        |src_pos: Point| {
            antenna_gain_dbi(
                rx_boresight_rad,
                sbs.angle_to(src_pos),
                rx_g0_dbi,
                rx_g_side_dbi,
                hpbw,
            )
        },
        serving,
        sources,
        walls,
        trees,
        params,
        rng,
    )
}
