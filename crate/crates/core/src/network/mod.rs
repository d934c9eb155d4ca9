//! Association, bandwidth partition, per-UE rates and service coverage.
//!
//! UEs attach to the station with the highest fading-averaged received
//! power; IAB-backhauled SBSs attach to the MBS with the lowest total
//! path loss. The spectrum splits into a backhaul share `psi * B` (divided
//! per donor among its IAB children proportionally to load) and an access
//! share `(1 - psi) * B` (divided equally among a node's UEs); an SBS with
//! a dedicated non-IAB backhaul keeps the full band `B` for access. A UE
//! behind an IAB-backhauled SBS is capped by that SBS's backhaul rate.

mod eval;

pub use eval::{CoverageStats, EvalContext, EvalParams, LinkTables};

use crate::channel::{self, ChannelError, ChannelParams, NodeClass};
use crate::geometry::{GeometryError, NetworkInstance, Point};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("deployment has no base stations")]
    NoBaseStations,
    #[error("coverage is undefined without UEs")]
    NoUes,
    #[error("IAB-backhauled SBS present but no MBS to serve as donor")]
    NoDonor,
    #[error("invalid deployment: {0}")]
    InvalidDeployment(String),
    #[error("invalid evaluation parameters: {0}")]
    InvalidEvaluation(String),
    #[error("association state incomplete: {0}")]
    IncompleteAssociation(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Reference to a base station: index within its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BsRef {
    Mbs(usize),
    Sbs(usize),
}

impl BsRef {
    pub fn class(self) -> NodeClass {
        match self {
            BsRef::Mbs(_) => NodeClass::Mbs,
            BsRef::Sbs(_) => NodeClass::Sbs,
        }
    }
}

/// Downlink transmit powers per node class, in dBm. The UE power is kept
/// for configuration completeness; only the downlink is modeled.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TxPowers {
    pub mbs_dbm: f64,
    pub sbs_dbm: f64,
    pub ue_dbm: f64,
}

/// The decision variables of a deployment: SBS coordinates, the subset of
/// SBSs with dedicated non-IAB backhaul, and the radio resource split.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub sbs_positions: Vec<Point>,
    pub non_iab: BTreeSet<usize>,
    /// Fraction of the total bandwidth reserved for IAB backhaul.
    pub psi: f64,
    pub total_bw_hz: f64,
    pub tx: TxPowers,
}

impl Deployment {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(NetworkError::InvalidDeployment(format!(
                "psi must lie in [0, 1], got {}",
                self.psi
            )));
        }
        if self.total_bw_hz <= 0.0 {
            return Err(NetworkError::InvalidDeployment(format!(
                "total_bw_hz must be positive, got {}",
                self.total_bw_hz
            )));
        }
        if let Some(&j) = self.non_iab.iter().next_back() {
            if j >= self.sbs_positions.len() {
                return Err(NetworkError::InvalidDeployment(format!(
                    "non-IAB index {} out of range for {} SBSs",
                    j,
                    self.sbs_positions.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_non_iab(&self, sbs: usize) -> bool {
        self.non_iab.contains(&sbs)
    }
}

/// UE and backhaul association maps, per-node loads and, once allocated,
/// per-link bandwidth shares.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationState {
    /// Serving station per UE.
    pub ue_assoc: Vec<BsRef>,
    /// Donor MBS per SBS; `None` for non-IAB SBSs (and when no MBS exists).
    pub sbs_donor: Vec<Option<usize>>,
    pub mbs_load: Vec<usize>,
    pub sbs_load: Vec<usize>,
    /// Access bandwidth per UE, Hz. Empty until allocation.
    pub ue_access_hz: Vec<f64>,
    /// Backhaul bandwidth per SBS, Hz (zero for non-IAB SBSs). Empty until
    /// allocation.
    pub sbs_backhaul_hz: Vec<f64>,
}

impl AssociationState {
    fn loads_from(ue_assoc: &[BsRef], n_mbs: usize, n_sbs: usize) -> (Vec<usize>, Vec<usize>) {
        let mut mbs_load = vec![0usize; n_mbs];
        let mut sbs_load = vec![0usize; n_sbs];
        for &a in ue_assoc {
            match a {
                BsRef::Mbs(m) => mbs_load[m] += 1,
                BsRef::Sbs(j) => sbs_load[j] += 1,
            }
        }
        (mbs_load, sbs_load)
    }
}

/// Bandwidth shares implied by an association, following the per-donor
/// proportional backhaul split and the equal access split.
pub(crate) fn compute_shares(
    ue_assoc: &[BsRef],
    mbs_load: &[usize],
    sbs_load: &[usize],
    sbs_donor: &[Option<usize>],
    non_iab: &[bool],
    psi: f64,
    total_bw_hz: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n_mbs = mbs_load.len();
    let n_sbs = sbs_load.len();
    // Per-donor total load of IAB children.
    let mut donor_total = vec![0usize; n_mbs];
    for j in 0..n_sbs {
        if !non_iab[j] {
            if let Some(d) = sbs_donor[j] {
                donor_total[d] += sbs_load[j];
            }
        }
    }
    let mut sbs_backhaul_hz = vec![0.0; n_sbs];
    for j in 0..n_sbs {
        if non_iab[j] || sbs_load[j] == 0 {
            continue;
        }
        if let Some(d) = sbs_donor[j] {
            if donor_total[d] > 0 {
                sbs_backhaul_hz[j] =
                    psi * total_bw_hz * sbs_load[j] as f64 / donor_total[d] as f64;
            }
        }
    }
    let ue_access_hz = ue_assoc
        .iter()
        .map(|&a| match a {
            BsRef::Mbs(m) => (1.0 - psi) * total_bw_hz / mbs_load[m] as f64,
            BsRef::Sbs(j) if non_iab[j] => total_bw_hz / sbs_load[j] as f64,
            BsRef::Sbs(j) => (1.0 - psi) * total_bw_hz / sbs_load[j] as f64,
        })
        .collect();
    (ue_access_hz, sbs_backhaul_hz)
}

fn non_iab_mask(deployment: &Deployment) -> Vec<bool> {
    let mut mask = vec![false; deployment.sbs_positions.len()];
    for &j in &deployment.non_iab {
        mask[j] = true;
    }
    mask
}

/// Attaches every UE to the station with the highest fading-averaged
/// received power. Ties break toward the lowest index, MBSs first.
pub fn associate_ues(
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
) -> Result<AssociationState, NetworkError> {
    let tables = LinkTables::build(instance, deployment, params)?;
    let ue_assoc = tables.associate_ues()?;
    let (mbs_load, sbs_load) =
        AssociationState::loads_from(&ue_assoc, tables.n_mbs, tables.n_sbs);
    Ok(AssociationState {
        ue_assoc,
        sbs_donor: vec![None; tables.n_sbs],
        mbs_load,
        sbs_load,
        ..Default::default()
    })
}

/// Attaches every IAB-backhauled SBS to the MBS with the lowest total
/// path loss (including foliage and the LoS/NLoS exponent). Non-IAB SBSs
/// get no backhaul association.
pub fn associate_backhaul(
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
) -> Result<AssociationState, NetworkError> {
    let tables = LinkTables::build(instance, deployment, params)?;
    let donors = tables.donor_candidates();
    let mask = non_iab_mask(deployment);
    let has_iab = mask.iter().any(|&f| !f) && tables.n_sbs > 0;
    if has_iab && tables.n_mbs == 0 {
        return Err(NetworkError::NoDonor);
    }
    let sbs_donor = (0..tables.n_sbs)
        .map(|j| if mask[j] { None } else { donors[j] })
        .collect();
    Ok(AssociationState {
        sbs_donor,
        mbs_load: vec![0; tables.n_mbs],
        sbs_load: vec![0; tables.n_sbs],
        ..Default::default()
    })
}

/// Both association maps plus loads, without bandwidth shares.
pub fn associate(
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
) -> Result<AssociationState, NetworkError> {
    let mut state = associate_ues(instance, deployment, params)?;
    let backhaul = associate_backhaul(instance, deployment, params)?;
    state.sbs_donor = backhaul.sbs_donor;
    Ok(state)
}

/// Fills the bandwidth shares of a completed association.
pub fn allocate_bandwidth(
    assoc: &mut AssociationState,
    deployment: &Deployment,
) -> Result<(), NetworkError> {
    deployment.validate()?;
    let n_sbs = deployment.sbs_positions.len();
    if assoc.sbs_donor.len() != n_sbs || assoc.sbs_load.len() != n_sbs {
        return Err(NetworkError::IncompleteAssociation(
            "backhaul association missing or sized inconsistently".into(),
        ));
    }
    let mask = non_iab_mask(deployment);
    let (ue_access_hz, sbs_backhaul_hz) = compute_shares(
        &assoc.ue_assoc,
        &assoc.mbs_load,
        &assoc.sbs_load,
        &assoc.sbs_donor,
        &mask,
        deployment.psi,
        deployment.total_bw_hz,
    );
    assoc.ue_access_hz = ue_access_hz;
    assoc.sbs_backhaul_hz = sbs_backhaul_hz;
    Ok(())
}

/// Shannon rate of the access link, bps.
#[inline]
pub(crate) fn access_rate_bps(bandwidth_hz: f64, sinr: f64) -> f64 {
    if bandwidth_hz <= 0.0 {
        return 0.0;
    }
    bandwidth_hz * (1.0 + sinr).log2()
}

/// One faded rate draw for a single UE, using the allocated association.
///
/// Interferer beams each point at one of their own associated UEs, picked
/// uniformly from `rng` (stations without UEs stay idle); the serving link
/// is beamformed. IAB-attached UEs are capped by their SBS's noise-limited
/// backhaul rate.
pub fn ue_rate<R: Rng>(
    ue: usize,
    assoc: &AssociationState,
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64, NetworkError> {
    if assoc.ue_access_hz.len() != instance.ues.len() {
        return Err(NetworkError::IncompleteAssociation(
            "bandwidth shares not allocated".into(),
        ));
    }
    let tables = LinkTables::build(instance, deployment, params)?;
    let n_bs = tables.n_mbs + tables.n_sbs;
    // UE pools per station, in flat station order (MBSs then SBSs).
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); n_bs];
    for (u, &a) in assoc.ue_assoc.iter().enumerate() {
        pools[tables.flat_index(a)].push(u);
    }
    // One pick per station, idle stations consume a draw too so the
    // stream does not depend on the load pattern.
    let mut sources = Vec::with_capacity(n_bs);
    for bs in 0..n_bs {
        let r = rng.next_u64();
        let boresight = if pools[bs].is_empty() {
            None
        } else {
            let pick = pools[bs][(r % pools[bs].len() as u64) as usize];
            Some(tables.access_angle(bs, pick))
        };
        let (g0, g_side) = params.gains_dbi(tables.class_of(bs));
        sources.push(channel::InterferenceSource {
            position: tables.station_position(bs),
            tx_power_dbm: tables.tx_power_dbm(bs, deployment),
            g0_dbi: g0,
            g_side_dbi: g_side,
            boresight_rad: boresight,
        });
    }
    let serving = assoc.ue_assoc[ue];
    let serving_flat = tables.flat_index(serving);
    let signal_mw =
        channel::instantaneous_rx_power_mw(tables.access_avg_dbm(serving_flat, ue), rng);
    let walls: Vec<_> = instance.all_walls().copied().collect();
    let interference_mw = channel::interference_access(
        instance.ues[ue],
        serving_flat,
        &sources,
        &walls,
        &instance.trees,
        params,
        rng,
    )?;
    let access_hz = assoc.ue_access_hz[ue];
    if access_hz <= 0.0 {
        return Ok(0.0);
    }
    let sinr = channel::sinr(signal_mw, interference_mw, access_hz, params)?;
    let access = access_rate_bps(access_hz, sinr);
    match serving {
        BsRef::Mbs(_) => Ok(access),
        BsRef::Sbs(j) if deployment.is_non_iab(j) => Ok(access),
        BsRef::Sbs(j) => {
            let donor = assoc.sbs_donor[j].ok_or(NetworkError::NoDonor)?;
            let bh_hz = assoc.sbs_backhaul_hz[j];
            if bh_hz <= 0.0 {
                return Ok(0.0);
            }
            let snr = channel::sinr(
                channel::dbm_to_mw(tables.backhaul_avg_dbm(donor, j)),
                0.0,
                bh_hz,
                params,
            )?;
            Ok(access.min(access_rate_bps(bh_hz, snr)))
        }
    }
}

/// Service coverage over UEs and fading draws with per-UE rate statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    /// Fraction of (UE, draw) pairs whose rate meets the threshold.
    pub rho: f64,
    pub eta_bps: f64,
    pub mean_rate_bps: f64,
    pub p5_rate_bps: f64,
    pub p95_rate_bps: f64,
    /// Mean rate per UE across fading draws.
    pub per_ue_rate_bps: Vec<f64>,
    /// Mean access SINR per UE, dB.
    pub per_ue_sinr_db: Vec<f64>,
    /// Backhaul SINR per SBS, dB (NaN for non-IAB or unloaded SBSs).
    pub per_sbs_backhaul_sinr_db: Vec<f64>,
    pub seed: u64,
    pub params_hash: u64,
}

/// Evaluates the service coverage probability of a deployment on one
/// network instance: the fraction of (UE, fading draw) pairs whose rate
/// reaches `eval.eta_bps`. Deterministic given `eval.seed`.
pub fn coverage(
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
    eval: &EvalParams,
) -> Result<CoverageReport, NetworkError> {
    let ctx = EvalContext::build(instance, deployment, params, eval)?;
    let non_iab: Vec<usize> = deployment.non_iab.iter().copied().collect();
    ctx.report(&non_iab)
}
