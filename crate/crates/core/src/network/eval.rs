//! Link tables and the batched coverage evaluator.
//!
//! [`LinkTables`] holds the geometry-derived budget of every station-UE
//! and MBS-SBS pair (LoS state, path loss, foliage, fading-averaged
//! power). [`EvalContext`] adds the per-draw fading realizations and
//! interference sums for a fixed association, after which coverage can be
//! re-evaluated for many non-IAB subsets cheaply — the subset only moves
//! bandwidth shares, not geometry or fading. This is what makes the
//! genetic search affordable: optimizer candidates share one context and
//! identical random draws (common random numbers).

use super::{
    access_rate_bps, compute_shares, AssociationState, BsRef, CoverageReport, Deployment,
    NetworkError,
};
use crate::channel::{self, ChannelParams, NodeClass};
use crate::geometry::{segments_intersect, NetworkInstance, Point, SegmentIndex};
use crate::rng::{child_seed, stream, tag};
use rand::{Rng, RngCore};
use rand_distr::Exp1;

/// Coverage evaluation knobs. `seed` fixes the fading and beam-direction
/// streams; evaluations with equal seeds share their randomness.
#[derive(Debug, Clone, Copy)]
pub struct EvalParams {
    pub eta_bps: f64,
    pub n_fading_draws: usize,
    pub seed: u64,
    /// Evaluate backhaul SINR with inter-MBS interference instead of the
    /// default noise-limited assumption.
    pub backhaul_interference: bool,
}

impl EvalParams {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.n_fading_draws == 0 {
            return Err(NetworkError::InvalidEvaluation(
                "n_fading_draws must be at least 1".into(),
            ));
        }
        if self.eta_bps < 0.0 || !self.eta_bps.is_finite() {
            return Err(NetworkError::InvalidEvaluation(format!(
                "eta_bps must be nonnegative, got {}",
                self.eta_bps
            )));
        }
        Ok(())
    }
}

/// Pairwise link budgets for one instance and one set of SBS positions.
/// Stations are flat-indexed with MBSs first, then SBSs.
#[derive(Debug, Clone)]
pub struct LinkTables {
    pub n_mbs: usize,
    pub n_sbs: usize,
    pub n_ue: usize,
    mbs_pos: Vec<Point>,
    sbs_pos: Vec<Point>,
    /// [bs * n_ue + u]: fading-averaged serving power (boresight gain),
    /// dBm and linear mW.
    acc_avg_dbm: Vec<f64>,
    acc_avg_mw: Vec<f64>,
    /// [bs * n_ue + u]: linear average power without the transmit beam
    /// gain; interference terms multiply in the pattern gain per draw.
    acc_base_mw: Vec<f64>,
    /// [bs * n_ue + u]: direction station -> UE.
    acc_angle: Vec<f64>,
    /// [m * n_sbs + j]: backhaul path loss incl. foliage, dB.
    bh_pl_db: Vec<f64>,
    /// [m * n_sbs + j]: both-ends-beamformed average power, dBm.
    bh_avg_dbm: Vec<f64>,
    /// [m * n_sbs + j]: linear average power without either beam gain.
    bh_base_mw: Vec<f64>,
    /// [m * n_sbs + j]: direction MBS -> SBS.
    bh_angle: Vec<f64>,
    /// Per-station pattern gains, linear.
    g0_lin: Vec<f64>,
    g_side_lin: Vec<f64>,
    half_beam_rad: f64,
    tx_mbs_dbm: f64,
    tx_sbs_dbm: f64,
}

impl LinkTables {
    pub fn build(
        instance: &NetworkInstance,
        deployment: &Deployment,
        params: &ChannelParams,
    ) -> Result<Self, NetworkError> {
        params.validate()?;
        deployment.validate()?;
        let mbs_pos = instance.mbs.clone();
        let sbs_pos = deployment.sbs_positions.clone();
        let ue_pos = &instance.ues;
        let n_mbs = mbs_pos.len();
        let n_sbs = sbs_pos.len();
        let n_ue = ue_pos.len();
        let n_bs = n_mbs + n_sbs;

        let walls = SegmentIndex::build(
            instance.region,
            instance.all_walls().map(|w| w.endpoints()),
        );
        let f_mhz = params.carrier_ghz * 1000.0;
        let kappa_of = |a: Point, b: Point| -> f64 {
            if a == b {
                return 0.0;
            }
            let mut kappa = 0.0;
            for t in &instance.trees {
                let (p, q) = t.endpoints();
                if segments_intersect(a, b, p, q) {
                    kappa += channel::fitu_r_loss_db(f_mhz, t.depth_m, t.in_leaf);
                }
            }
            kappa
        };

        let mut acc_avg_dbm = vec![0.0; n_bs * n_ue];
        let mut acc_avg_mw = vec![0.0; n_bs * n_ue];
        let mut acc_base_mw = vec![0.0; n_bs * n_ue];
        let mut acc_angle = vec![0.0; n_bs * n_ue];
        let mut g0_lin = Vec::with_capacity(n_bs);
        let mut g_side_lin = Vec::with_capacity(n_bs);

        let station = |bs: usize| -> (Point, NodeClass, f64) {
            if bs < n_mbs {
                (mbs_pos[bs], NodeClass::Mbs, deployment.tx.mbs_dbm)
            } else {
                (sbs_pos[bs - n_mbs], NodeClass::Sbs, deployment.tx.sbs_dbm)
            }
        };

        for bs in 0..n_bs {
            let (pos, class, tx_dbm) = station(bs);
            let (g0, g_side) = params.gains_dbi(class);
            g0_lin.push(channel::db_to_linear(g0));
            g_side_lin.push(channel::db_to_linear(g_side));
            for (u, &up) in ue_pos.iter().enumerate() {
                let idx = bs * n_ue + u;
                let dist = pos.distance(up);
                let los = if pos == up { true } else { !walls.blocked(pos, up) };
                let pl = channel::path_loss_db(dist.max(1e-9), los, params)?;
                let kappa = kappa_of(pos, up);
                // UE receive gain is 0 dBi.
                let base_dbm = tx_dbm - pl - kappa;
                acc_base_mw[idx] = channel::dbm_to_mw(base_dbm);
                let avg = base_dbm + g0;
                acc_avg_dbm[idx] = avg;
                acc_avg_mw[idx] = channel::dbm_to_mw(avg);
                acc_angle[idx] = if pos == up { 0.0 } else { pos.angle_to(up) };
            }
        }

        let mut bh_pl_db = vec![0.0; n_mbs * n_sbs];
        let mut bh_avg_dbm = vec![0.0; n_mbs * n_sbs];
        let mut bh_base_mw = vec![0.0; n_mbs * n_sbs];
        let mut bh_angle = vec![0.0; n_mbs * n_sbs];
        let (g0_m, _) = params.gains_dbi(NodeClass::Mbs);
        let (g0_s, _) = params.gains_dbi(NodeClass::Sbs);
        for (m, &mp) in mbs_pos.iter().enumerate() {
            for (j, &sp) in sbs_pos.iter().enumerate() {
                let idx = m * n_sbs + j;
                let dist = mp.distance(sp);
                let los = if mp == sp { true } else { !walls.blocked(mp, sp) };
                let pl = channel::path_loss_db(dist.max(1e-9), los, params)?;
                let kappa = kappa_of(mp, sp);
                bh_pl_db[idx] = pl + kappa;
                let base_dbm = deployment.tx.mbs_dbm - pl - kappa;
                bh_base_mw[idx] = channel::dbm_to_mw(base_dbm);
                bh_avg_dbm[idx] = base_dbm + g0_m + g0_s;
                bh_angle[idx] = if mp == sp { 0.0 } else { mp.angle_to(sp) };
            }
        }

        Ok(LinkTables {
            n_mbs,
            n_sbs,
            n_ue,
            mbs_pos,
            sbs_pos,
            acc_avg_dbm,
            acc_avg_mw,
            acc_base_mw,
            acc_angle,
            bh_pl_db,
            bh_avg_dbm,
            bh_base_mw,
            bh_angle,
            g0_lin,
            g_side_lin,
            half_beam_rad: params.hpbw_deg.to_radians() / 2.0,
            tx_mbs_dbm: deployment.tx.mbs_dbm,
            tx_sbs_dbm: deployment.tx.sbs_dbm,
        })
    }

    #[inline]
    pub fn flat_index(&self, bs: BsRef) -> usize {
        match bs {
            BsRef::Mbs(m) => m,
            BsRef::Sbs(j) => self.n_mbs + j,
        }
    }

    #[inline]
    pub fn bs_ref(&self, flat: usize) -> BsRef {
        if flat < self.n_mbs {
            BsRef::Mbs(flat)
        } else {
            BsRef::Sbs(flat - self.n_mbs)
        }
    }

    #[inline]
    pub fn class_of(&self, flat: usize) -> NodeClass {
        if flat < self.n_mbs {
            NodeClass::Mbs
        } else {
            NodeClass::Sbs
        }
    }

    pub fn station_position(&self, flat: usize) -> Point {
        if flat < self.n_mbs {
            self.mbs_pos[flat]
        } else {
            self.sbs_pos[flat - self.n_mbs]
        }
    }

    pub fn tx_power_dbm(&self, flat: usize, _deployment: &Deployment) -> f64 {
        if flat < self.n_mbs {
            self.tx_mbs_dbm
        } else {
            self.tx_sbs_dbm
        }
    }

    #[inline]
    pub fn access_avg_dbm(&self, flat: usize, ue: usize) -> f64 {
        self.acc_avg_dbm[flat * self.n_ue + ue]
    }

    #[inline]
    pub fn access_angle(&self, flat: usize, ue: usize) -> f64 {
        self.acc_angle[flat * self.n_ue + ue]
    }

    #[inline]
    pub fn backhaul_avg_dbm(&self, m: usize, j: usize) -> f64 {
        self.bh_avg_dbm[m * self.n_sbs + j]
    }

    #[inline]
    pub fn backhaul_pl_db(&self, m: usize, j: usize) -> f64 {
        self.bh_pl_db[m * self.n_sbs + j]
    }

    /// Serving station per UE by maximum average received power; ties go
    /// to the lowest flat index (MBSs precede SBSs).
    pub fn associate_ues(&self) -> Result<Vec<BsRef>, NetworkError> {
        let n_bs = self.n_mbs + self.n_sbs;
        if n_bs == 0 {
            return Err(NetworkError::NoBaseStations);
        }
        Ok((0..self.n_ue)
            .map(|u| {
                let mut best = 0usize;
                let mut best_dbm = self.acc_avg_dbm[u];
                for bs in 1..n_bs {
                    let v = self.acc_avg_dbm[bs * self.n_ue + u];
                    if v > best_dbm {
                        best = bs;
                        best_dbm = v;
                    }
                }
                self.bs_ref(best)
            })
            .collect())
    }

    /// Minimum-path-loss donor per SBS regardless of backhaul type;
    /// `None` when no MBS exists. Ties go to the lowest MBS index.
    pub fn donor_candidates(&self) -> Vec<Option<usize>> {
        (0..self.n_sbs)
            .map(|j| {
                if self.n_mbs == 0 {
                    return None;
                }
                let mut best = 0usize;
                let mut best_pl = self.bh_pl_db[j];
                for m in 1..self.n_mbs {
                    let v = self.bh_pl_db[m * self.n_sbs + j];
                    if v < best_pl {
                        best = m;
                        best_pl = v;
                    }
                }
                Some(best)
            })
            .collect()
    }
}

/// Aggregate coverage statistics of one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CoverageStats {
    pub rho: f64,
    pub mean_rate_bps: f64,
    pub p5_rate_bps: f64,
    pub p95_rate_bps: f64,
}

/// Link tables plus per-draw fading and interference realizations under a
/// fixed association. Immutable once built; coverage queries for
/// different non-IAB subsets and thresholds are read-only and cheap.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub tables: LinkTables,
    pub channel: ChannelParams,
    pub deployment: Deployment,
    pub eval: EvalParams,
    pub ue_assoc: Vec<BsRef>,
    /// Min-path-loss donor per SBS (or the frozen donor when built from a
    /// prior association).
    pub sbs_donor: Vec<Option<usize>>,
    pub mbs_load: Vec<usize>,
    pub sbs_load: Vec<usize>,
    /// [u * n_draws + t]: faded serving power, mW.
    sig_mw: Vec<f64>,
    /// [u * n_draws + t]: summed access interference, mW.
    acc_int_mw: Vec<f64>,
    /// [j]: fading-averaged donor-link power, mW (0 without a donor).
    bh_sig_mw: Vec<f64>,
    /// [j * n_draws + t]: backhaul interference, mW (all zero when the
    /// noise-limited assumption is active).
    bh_int_mw: Vec<f64>,
}

impl EvalContext {
    /// Builds the context with a fresh association.
    pub fn build(
        instance: &NetworkInstance,
        deployment: &Deployment,
        params: &ChannelParams,
        eval: &EvalParams,
    ) -> Result<Self, NetworkError> {
        Self::build_inner(instance, deployment, params, eval, None)
    }

    /// Builds the context evaluating under a frozen association (maps
    /// taken from `assoc`, budgets and fading from this instance).
    pub fn build_frozen(
        instance: &NetworkInstance,
        deployment: &Deployment,
        params: &ChannelParams,
        eval: &EvalParams,
        assoc: &AssociationState,
    ) -> Result<Self, NetworkError> {
        Self::build_inner(instance, deployment, params, eval, Some(assoc))
    }

    fn build_inner(
        instance: &NetworkInstance,
        deployment: &Deployment,
        params: &ChannelParams,
        eval: &EvalParams,
        frozen: Option<&AssociationState>,
    ) -> Result<Self, NetworkError> {
        eval.validate()?;
        let tables = LinkTables::build(instance, deployment, params)?;
        if tables.n_ue == 0 {
            return Err(NetworkError::NoUes);
        }
        let (ue_assoc, sbs_donor) = match frozen {
            Some(a) => {
                if a.ue_assoc.len() != tables.n_ue || a.sbs_donor.len() != tables.n_sbs {
                    return Err(NetworkError::IncompleteAssociation(
                        "frozen association does not match the instance".into(),
                    ));
                }
                // Donor map may have None entries for non-IAB members of
                // the association it was computed under; backfill from
                // the tables so subset overrides stay evaluable.
                let candidates = tables.donor_candidates();
                let donors = a
                    .sbs_donor
                    .iter()
                    .zip(candidates)
                    .map(|(&frozen_d, cand)| frozen_d.or(cand))
                    .collect();
                (a.ue_assoc.clone(), donors)
            }
            None => (tables.associate_ues()?, tables.donor_candidates()),
        };
        let (mbs_load, sbs_load) =
            AssociationState::loads_from(&ue_assoc, tables.n_mbs, tables.n_sbs);

        let n_bs = tables.n_mbs + tables.n_sbs;
        let n_ue = tables.n_ue;
        let n_sbs = tables.n_sbs;
        let n_t = eval.n_fading_draws;

        // UE pools per station: interferer beams point at one of these
        // per draw. Stations with no UEs stay idle and do not interfere.
        let mut pools: Vec<Vec<u32>> = vec![Vec::new(); n_bs];
        for (u, &a) in ue_assoc.iter().enumerate() {
            pools[tables.flat_index(a)].push(u as u32);
        }
        let serving_flat: Vec<usize> = ue_assoc.iter().map(|&a| tables.flat_index(a)).collect();

        let mut sig_mw = vec![0.0; n_ue * n_t];
        let mut acc_int_mw = vec![0.0; n_ue * n_t];
        let mut bh_int_mw = vec![0.0; n_sbs * n_t];
        let mut boresight: Vec<Option<f64>> = vec![None; n_bs];

        for t in 0..n_t {
            let mut rng_b = stream(child_seed(eval.seed, tag::BORESIGHT, t as u64));
            let mut rng_f = stream(child_seed(eval.seed, tag::FADING, t as u64));
            for (bs, slot) in boresight.iter_mut().enumerate() {
                // Always consume one word so the stream does not depend
                // on the load pattern.
                let r = rng_b.next_u64();
                *slot = if pools[bs].is_empty() {
                    None
                } else {
                    let pick = pools[bs][(r % pools[bs].len() as u64) as usize] as usize;
                    Some(tables.acc_angle[bs * n_ue + pick])
                };
            }
            for bs in 0..n_bs {
                let g0 = tables.g0_lin[bs];
                let g_side = tables.g_side_lin[bs];
                let bore = boresight[bs];
                let row = bs * n_ue;
                for u in 0..n_ue {
                    let h: f64 = rng_f.sample(Exp1);
                    if serving_flat[u] == bs {
                        sig_mw[u * n_t + t] = tables.acc_avg_mw[row + u] * h;
                    } else if let Some(b) = bore {
                        let off = channel::wrap_angle(tables.acc_angle[row + u] - b).abs();
                        let g = if off <= tables.half_beam_rad { g0 } else { g_side };
                        acc_int_mw[u * n_t + t] += tables.acc_base_mw[row + u] * g * h;
                    }
                }
            }
            // Backhaul fading is drawn unconditionally so toggling the
            // interference flag never shifts the access streams.
            for m in 0..tables.n_mbs {
                for j in 0..n_sbs {
                    let h: f64 = rng_f.sample(Exp1);
                    if !eval.backhaul_interference {
                        continue;
                    }
                    let donor = match sbs_donor[j] {
                        Some(d) if d != m => d,
                        _ => continue,
                    };
                    let bore_m = match boresight[m] {
                        Some(b) => b,
                        None => continue,
                    };
                    let idx = m * n_sbs + j;
                    let tx_off = channel::wrap_angle(tables.bh_angle[idx] - bore_m).abs();
                    let tx_g = if tx_off <= tables.half_beam_rad {
                        tables.g0_lin[m]
                    } else {
                        tables.g_side_lin[m]
                    };
                    // SBS listens toward its donor.
                    let rx_bore = channel::wrap_angle(
                        tables.bh_angle[donor * n_sbs + j] + std::f64::consts::PI,
                    );
                    let to_m = channel::wrap_angle(tables.bh_angle[idx] + std::f64::consts::PI);
                    let rx_off = channel::wrap_angle(to_m - rx_bore).abs();
                    let sbs_flat = tables.n_mbs + j;
                    let rx_g = if rx_off <= tables.half_beam_rad {
                        tables.g0_lin[sbs_flat]
                    } else {
                        tables.g_side_lin[sbs_flat]
                    };
                    bh_int_mw[j * n_t + t] += tables.bh_base_mw[idx] * tx_g * rx_g * h;
                }
            }
        }

        let bh_sig_mw = (0..n_sbs)
            .map(|j| match sbs_donor[j] {
                Some(d) => channel::dbm_to_mw(tables.bh_avg_dbm[d * n_sbs + j]),
                None => 0.0,
            })
            .collect();

        Ok(EvalContext {
            tables,
            channel: *params,
            deployment: deployment.clone(),
            eval: *eval,
            ue_assoc,
            sbs_donor,
            mbs_load,
            sbs_load,
            sig_mw,
            acc_int_mw,
            bh_sig_mw,
            bh_int_mw,
        })
    }

    /// The association this context evaluates under, with bandwidth shares
    /// for the given subset.
    pub fn association(&self, non_iab: &[usize]) -> AssociationState {
        let mask = self.mask(non_iab);
        let donors: Vec<Option<usize>> = (0..self.tables.n_sbs)
            .map(|j| if mask[j] { None } else { self.sbs_donor[j] })
            .collect();
        let (ue_access_hz, sbs_backhaul_hz) = compute_shares(
            &self.ue_assoc,
            &self.mbs_load,
            &self.sbs_load,
            &donors,
            &mask,
            self.deployment.psi,
            self.deployment.total_bw_hz,
        );
        AssociationState {
            ue_assoc: self.ue_assoc.clone(),
            sbs_donor: donors,
            mbs_load: self.mbs_load.clone(),
            sbs_load: self.sbs_load.clone(),
            ue_access_hz,
            sbs_backhaul_hz,
        }
    }

    fn mask(&self, non_iab: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.tables.n_sbs];
        for &j in non_iab {
            if j < mask.len() {
                mask[j] = true;
            }
        }
        mask
    }

    fn noise_mw(&self, bandwidth_hz: f64) -> f64 {
        channel::dbm_to_mw(
            channel::noise_power_dbm(bandwidth_hz, &self.channel)
                .expect("positive bandwidth checked by caller"),
        )
    }

    /// Streams every per-(UE, draw) rate to `f`.
    fn for_each_rate(
        &self,
        non_iab: &[usize],
        mut f: impl FnMut(usize, usize, f64),
    ) -> Result<(), NetworkError> {
        let mask = self.mask(non_iab);
        let n_t = self.eval.n_fading_draws;
        let n_sbs = self.tables.n_sbs;
        // Any loaded IAB SBS must have a donor.
        for j in 0..n_sbs {
            if !mask[j] && self.sbs_load[j] > 0 && self.sbs_donor[j].is_none() {
                return Err(NetworkError::NoDonor);
            }
        }
        let (ue_access_hz, sbs_backhaul_hz) = compute_shares(
            &self.ue_assoc,
            &self.mbs_load,
            &self.sbs_load,
            &self.sbs_donor,
            &mask,
            self.deployment.psi,
            self.deployment.total_bw_hz,
        );
        // Backhaul pipe rate per SBS and draw. Noise-limited pipes are
        // constant across draws; the serving link is fading-averaged.
        let mut pipe = vec![0.0; n_sbs * n_t];
        for j in 0..n_sbs {
            if mask[j] || self.sbs_load[j] == 0 {
                continue;
            }
            let hz = sbs_backhaul_hz[j];
            if hz <= 0.0 {
                continue;
            }
            let noise = self.noise_mw(hz);
            let sig = self.bh_sig_mw[j];
            for t in 0..n_t {
                let sinr = sig / (noise + self.bh_int_mw[j * n_t + t]);
                pipe[j * n_t + t] = access_rate_bps(hz, sinr);
            }
        }
        for u in 0..self.tables.n_ue {
            let hz = ue_access_hz[u];
            if hz <= 0.0 {
                for t in 0..n_t {
                    f(u, t, 0.0);
                }
                continue;
            }
            let noise = self.noise_mw(hz);
            let bh_row = match self.ue_assoc[u] {
                BsRef::Sbs(j) if !mask[j] => Some(j * n_t),
                _ => None,
            };
            for t in 0..n_t {
                let idx = u * n_t + t;
                let sinr = self.sig_mw[idx] / (self.acc_int_mw[idx] + noise);
                let mut rate = access_rate_bps(hz, sinr);
                if let Some(row) = bh_row {
                    rate = rate.min(pipe[row + t]);
                }
                f(u, t, rate);
            }
        }
        Ok(())
    }

    /// Coverage probability at the context's threshold for a non-IAB
    /// subset.
    pub fn rho(&self, non_iab: &[usize]) -> Result<f64, NetworkError> {
        let eta = self.eval.eta_bps;
        let mut covered = 0usize;
        self.for_each_rate(non_iab, |_, _, r| {
            if r >= eta {
                covered += 1;
            }
        })?;
        Ok(covered as f64 / (self.tables.n_ue * self.eval.n_fading_draws) as f64)
    }

    /// Coverage probability at several thresholds in one pass.
    pub fn rho_at_etas(&self, non_iab: &[usize], etas: &[f64]) -> Result<Vec<f64>, NetworkError> {
        let mut covered = vec![0usize; etas.len()];
        self.for_each_rate(non_iab, |_, _, r| {
            for (k, &eta) in etas.iter().enumerate() {
                if r >= eta {
                    covered[k] += 1;
                }
            }
        })?;
        let total = (self.tables.n_ue * self.eval.n_fading_draws) as f64;
        Ok(covered.into_iter().map(|c| c as f64 / total).collect())
    }

    /// Aggregate statistics at the context's threshold.
    pub fn stats(&self, non_iab: &[usize]) -> Result<CoverageStats, NetworkError> {
        let n_t = self.eval.n_fading_draws as f64;
        let mut per_ue = vec![0.0; self.tables.n_ue];
        let mut covered = 0usize;
        let eta = self.eval.eta_bps;
        self.for_each_rate(non_iab, |u, _, r| {
            per_ue[u] += r / n_t;
            if r >= eta {
                covered += 1;
            }
        })?;
        let rho = covered as f64 / (self.tables.n_ue as f64 * n_t);
        Ok(CoverageStats {
            rho,
            mean_rate_bps: per_ue.iter().sum::<f64>() / per_ue.len() as f64,
            p5_rate_bps: percentile(&per_ue, 0.05),
            p95_rate_bps: percentile(&per_ue, 0.95),
        })
    }

    /// Full coverage report at the context's threshold.
    pub fn report(&self, non_iab: &[usize]) -> Result<CoverageReport, NetworkError> {
        let n_ue = self.tables.n_ue;
        let n_t = self.eval.n_fading_draws;
        let mask = self.mask(non_iab);
        let (ue_access_hz, sbs_backhaul_hz) = compute_shares(
            &self.ue_assoc,
            &self.mbs_load,
            &self.sbs_load,
            &self.sbs_donor,
            &mask,
            self.deployment.psi,
            self.deployment.total_bw_hz,
        );
        let mut per_ue_rate = vec![0.0; n_ue];
        let mut covered = 0usize;
        let eta = self.eval.eta_bps;
        self.for_each_rate(non_iab, |u, _, r| {
            per_ue_rate[u] += r / n_t as f64;
            if r >= eta {
                covered += 1;
            }
        })?;
        // Mean linear access SINR per UE, reported in dB.
        let mut per_ue_sinr_db = vec![0.0; n_ue];
        for u in 0..n_ue {
            let hz = ue_access_hz[u];
            if hz <= 0.0 {
                per_ue_sinr_db[u] = f64::NEG_INFINITY;
                continue;
            }
            let noise = self.noise_mw(hz);
            let mean_sinr = (0..n_t)
                .map(|t| {
                    let idx = u * n_t + t;
                    self.sig_mw[idx] / (self.acc_int_mw[idx] + noise)
                })
                .sum::<f64>()
                / n_t as f64;
            per_ue_sinr_db[u] = channel::linear_to_db(mean_sinr);
        }
        let per_sbs_backhaul_sinr_db = (0..self.tables.n_sbs)
            .map(|j| {
                let hz = sbs_backhaul_hz[j];
                if mask[j] || hz <= 0.0 {
                    return f64::NAN;
                }
                let noise = self.noise_mw(hz);
                let mean = (0..n_t)
                    .map(|t| self.bh_sig_mw[j] / (noise + self.bh_int_mw[j * n_t + t]))
                    .sum::<f64>()
                    / n_t as f64;
                channel::linear_to_db(mean)
            })
            .collect();
        let rho = covered as f64 / (n_ue * n_t) as f64;
        Ok(CoverageReport {
            rho,
            eta_bps: eta,
            mean_rate_bps: per_ue_rate.iter().sum::<f64>() / n_ue as f64,
            p5_rate_bps: percentile(&per_ue_rate, 0.05),
            p95_rate_bps: percentile(&per_ue_rate, 0.95),
            per_ue_rate_bps: per_ue_rate,
            per_ue_sinr_db,
            per_sbs_backhaul_sinr_db,
            seed: self.eval.seed,
            params_hash: self.params_hash(),
        })
    }

    /// FNV-1a over the scenario-defining parameters; stored in reports so
    /// archived rows can be traced back to their configuration.
    pub fn params_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        let d = &self.deployment;
        let c = &self.channel;
        for v in [
            d.psi,
            d.total_bw_hz,
            d.tx.mbs_dbm,
            d.tx.sbs_dbm,
            d.tx.ue_dbm,
            c.carrier_ghz,
            c.alpha_los,
            c.alpha_nlos,
            c.g0_mbs_dbi,
            c.g0_sbs_dbi,
            c.g_side_mbs_dbi,
            c.g_side_sbs_dbi,
            c.hpbw_deg,
            c.noise_figure_db,
            c.noise_override_dbm.unwrap_or(f64::NAN),
            self.eval.eta_bps,
            self.eval.n_fading_draws as f64,
            self.tables.n_mbs as f64,
            self.tables.n_sbs as f64,
            self.tables.n_ue as f64,
        ] {
            eat(&v.to_bits().to_le_bytes());
        }
        eat(&[self.eval.backhaul_interference as u8]);
        h
    }
}

fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    sorted[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ObstacleGeometry, Region};
    use crate::network::TxPowers;

    fn setup() -> (NetworkInstance, Deployment, ChannelParams, EvalParams) {
        let region = Region::disk_with_area_km2(0.25).unwrap();
        let geom = ObstacleGeometry {
            wall_len_m: 5.0,
            tree_len_m: 10.0,
            tree_depth_m: 7.5,
            in_leaf_fraction: 0.15,
        };
        let inst =
            NetworkInstance::sample_with_counts(region, 2, 6, 40, 80, 10, &geom, 31).unwrap();
        let dep = Deployment {
            sbs_positions: inst.sbs.clone(),
            non_iab: [1usize].into_iter().collect(),
            psi: 0.5,
            total_bw_hz: 1.0e9,
            tx: TxPowers {
                mbs_dbm: 40.0,
                sbs_dbm: 24.0,
                ue_dbm: 0.0,
            },
        };
        let eval = EvalParams {
            eta_bps: 50.0e6,
            n_fading_draws: 12,
            seed: 404,
            backhaul_interference: false,
        };
        (inst, dep, ChannelParams::default(), eval)
    }

    #[test]
    fn identical_seeds_reproduce_rho_exactly() {
        let (inst, dep, ch, eval) = setup();
        let a = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        let b = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        let subset = [1usize];
        assert_eq!(a.rho(&subset).unwrap(), b.rho(&subset).unwrap());
    }

    #[test]
    fn subset_changes_only_bandwidth_dependent_parts() {
        let (inst, dep, ch, eval) = setup();
        let ctx = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        // Both subsets evaluable on the same context.
        let r1 = ctx.rho(&[1]).unwrap();
        let r2 = ctx.rho(&[0, 3]).unwrap();
        assert!((0.0..=1.0).contains(&r1));
        assert!((0.0..=1.0).contains(&r2));
    }

    #[test]
    fn frozen_association_is_respected() {
        let (inst, dep, ch, eval) = setup();
        let ctx = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        let assoc = ctx.association(&[1]);
        let frozen = EvalContext::build_frozen(&inst, &dep, &ch, &eval, &assoc).unwrap();
        assert_eq!(frozen.ue_assoc, ctx.ue_assoc);
        assert_eq!(frozen.rho(&[1]).unwrap(), ctx.rho(&[1]).unwrap());
    }

    #[test]
    fn backhaul_interference_changes_little_here() {
        let (inst, dep, ch, mut eval) = setup();
        let off = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        eval.backhaul_interference = true;
        let on = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        let d = (off.rho(&[1]).unwrap() - on.rho(&[1]).unwrap()).abs();
        assert!(d <= 0.2, "interference toggled rho by {d}");
    }

    #[test]
    fn bandwidth_conservation_per_donor_and_node() {
        let (inst, dep, ch, eval) = setup();
        let ctx = EvalContext::build(&inst, &dep, &ch, &eval).unwrap();
        let assoc = ctx.association(&[1]);
        let psi_b = dep.psi * dep.total_bw_hz;
        // Per donor: child backhaul shares sum to psi * B when loaded.
        for m in 0..ctx.tables.n_mbs {
            let mut total = 0.0;
            let mut loaded = false;
            for j in 0..ctx.tables.n_sbs {
                if assoc.sbs_donor[j] == Some(m) {
                    total += assoc.sbs_backhaul_hz[j];
                    loaded |= assoc.sbs_load[j] > 0;
                }
            }
            if loaded {
                assert!((total - psi_b).abs() < 1e-3, "donor {m}: {total}");
            }
        }
        // Per node: UE access shares sum to the node's access bandwidth.
        for j in 0..ctx.tables.n_sbs {
            if assoc.sbs_load[j] == 0 {
                continue;
            }
            let sum: f64 = assoc
                .ue_assoc
                .iter()
                .zip(&assoc.ue_access_hz)
                .filter(|(&a, _)| a == BsRef::Sbs(j))
                .map(|(_, &hz)| hz)
                .sum();
            let expect = if dep.is_non_iab(j) {
                dep.total_bw_hz
            } else {
                (1.0 - dep.psi) * dep.total_bw_hz
            };
            assert!((sum - expect).abs() < 1e-3);
        }
    }
}
