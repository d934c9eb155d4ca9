//! Temporal blockage and re-association ("routing") metrics, plus the
//! BAP header codec and forwarding simulator in [`bap`].
//!
//! Temporal walls model blockers that appear after the deployment was
//! planned (passing vehicles and the like). Rerouting recomputes the
//! association maps under the extra walls and reports which access and
//! backhaul links changed, together with the coverage before and after.

pub mod bap;

use crate::channel::ChannelParams;
use crate::geometry::{self, GeometryError, NetworkInstance, Wall};
use crate::network::{
    access_rate_bps, AssociationState, BsRef, Deployment, EvalContext, EvalParams, NetworkError,
};
use crate::{channel, network};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A base instance plus independently sampled temporal walls. The base
/// is borrowed untouched, so dropping the scenario restores the exact
/// pre-blockage geometry.
#[derive(Debug, Clone)]
pub struct TemporalScenario<'a> {
    pub base: &'a NetworkInstance,
    pub lambda_temp: f64,
    pub walls: Vec<Wall>,
}

impl TemporalScenario<'_> {
    /// The base instance with the temporal walls applied.
    pub fn blocked_instance(&self) -> NetworkInstance {
        let mut inst = self.base.clone();
        inst.temporal_walls = self.walls.clone();
        inst
    }
}

/// Samples temporal walls (same germ-grain model as the static ones) on
/// top of an instance.
pub fn inject_temporal<'a, R: Rng>(
    instance: &'a NetworkInstance,
    lambda_temp: f64,
    wall_len_m: f64,
    rng: &mut R,
) -> Result<TemporalScenario<'a>, RoutingError> {
    let walls = geometry::sample_blockers(instance.region, lambda_temp, wall_len_m, rng)?;
    Ok(TemporalScenario {
        base: instance,
        lambda_temp,
        walls,
    })
}

/// When a backhaul link re-associates after temporal blockage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BackhaulReroutePolicy {
    /// Re-run the min-path-loss rule unconditionally.
    Always,
    /// Keep the current donor unless its link degraded under the temporal
    /// walls and the backhaul pipe can no longer carry the rate
    /// threshold; only then re-run the min-path-loss rule. Donor links
    /// are engineered with margin, so this is the default.
    OnDegradation,
}

/// Link-update counts from one reroute, plus coverage before and after.
#[derive(Debug, Clone, Serialize)]
pub struct RoutingDiff {
    pub access_changed: usize,
    pub access_fraction: f64,
    pub backhaul_changed: usize,
    pub backhaul_fraction: f64,
    pub rho_before: f64,
    pub rho_after: f64,
}

/// Recomputes associations under the temporal walls and measures the
/// update percentages. Access links always follow the max-power rule;
/// backhaul links follow `policy`. `rho_before` is the coverage on the
/// base instance, `rho_after` the coverage on the blocked instance under
/// the updated associations; both use the same evaluation seed.
pub fn reroute(
    scenario: &TemporalScenario<'_>,
    deployment: &Deployment,
    params: &ChannelParams,
    eval: &EvalParams,
    policy: BackhaulReroutePolicy,
) -> Result<RoutingDiff, RoutingError> {
    let non_iab: Vec<usize> = deployment.non_iab.iter().copied().collect();
    let before_ctx = EvalContext::build(scenario.base, deployment, params, eval)?;
    let rho_before = before_ctx.rho(&non_iab)?;
    let before = before_ctx.association(&non_iab);

    let blocked = scenario.blocked_instance();
    let after_ctx = EvalContext::build(&blocked, deployment, params, eval)?;
    let fresh = after_ctx.association(&non_iab);

    // Access: full re-association.
    let access_changed = before
        .ue_assoc
        .iter()
        .zip(&fresh.ue_assoc)
        .filter(|(a, b)| a != b)
        .count();

    // Backhaul: per policy.
    let n_sbs = deployment.sbs_positions.len();
    let iab: Vec<usize> = (0..n_sbs).filter(|j| !deployment.is_non_iab(*j)).collect();
    let mut donors = before.sbs_donor.clone();
    match policy {
        BackhaulReroutePolicy::Always => {
            for &j in &iab {
                donors[j] = fresh.sbs_donor[j];
            }
        }
        BackhaulReroutePolicy::OnDegradation => {
            // Shares the kept donors would grant under the new UE map.
            let mut mask = vec![false; n_sbs];
            for &j in &non_iab {
                mask[j] = true;
            }
            let (_, kept_bh_hz) = network::compute_shares(
                &fresh.ue_assoc,
                &fresh.mbs_load,
                &fresh.sbs_load,
                &before.sbs_donor,
                &mask,
                deployment.psi,
                deployment.total_bw_hz,
            );
            for &j in &iab {
                let kept = match before.sbs_donor[j] {
                    Some(d) => d,
                    None => {
                        donors[j] = fresh.sbs_donor[j];
                        continue;
                    }
                };
                let pl_before = before_ctx.tables.backhaul_pl_db(kept, j);
                let pl_after = after_ctx.tables.backhaul_pl_db(kept, j);
                if pl_after <= pl_before + 1e-9 {
                    continue; // link untouched by the temporal walls
                }
                // Pipe rate the kept donor can still deliver.
                let hz = kept_bh_hz[j];
                let pipe = if hz > 0.0 {
                    let sig = channel::dbm_to_mw(after_ctx.tables.backhaul_avg_dbm(kept, j));
                    let noise =
                        channel::dbm_to_mw(channel::noise_power_dbm(hz, params).expect("hz > 0"));
                    access_rate_bps(hz, sig / noise)
                } else {
                    0.0
                };
                if pipe < eval.eta_bps {
                    donors[j] = fresh.sbs_donor[j];
                }
            }
        }
    }
    let backhaul_changed = iab
        .iter()
        .filter(|&&j| before.sbs_donor[j] != donors[j])
        .count();

    // Coverage after: updated UE map and donors, frozen into the blocked
    // context so the beams and fading follow the new association.
    let updated = AssociationState {
        ue_assoc: fresh.ue_assoc.clone(),
        sbs_donor: donors,
        mbs_load: Vec::new(),
        sbs_load: Vec::new(),
        ue_access_hz: Vec::new(),
        sbs_backhaul_hz: Vec::new(),
    };
    let updated_full = {
        let (mbs_load, sbs_load) = loads(&updated.ue_assoc, before.mbs_load.len(), n_sbs);
        AssociationState {
            mbs_load,
            sbs_load,
            ..updated
        }
    };
    let final_ctx = EvalContext::build_frozen(&blocked, deployment, params, eval, &updated_full)?;
    let rho_after = final_ctx.rho(&non_iab)?;

    let n_ue = before.ue_assoc.len();
    Ok(RoutingDiff {
        access_changed,
        access_fraction: if n_ue == 0 {
            0.0
        } else {
            access_changed as f64 / n_ue as f64
        },
        backhaul_changed,
        backhaul_fraction: if iab.is_empty() {
            0.0
        } else {
            backhaul_changed as f64 / iab.len() as f64
        },
        rho_before,
        rho_after,
    })
}

fn loads(ue_assoc: &[BsRef], n_mbs: usize, n_sbs: usize) -> (Vec<usize>, Vec<usize>) {
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

/// Coverage on the blocked instance with the association frozen to the
/// pre-blockage maps: the no-rerouting counterfactual.
pub fn coverage_frozen(
    scenario: &TemporalScenario<'_>,
    deployment: &Deployment,
    params: &ChannelParams,
    eval: &EvalParams,
) -> Result<f64, RoutingError> {
    let non_iab: Vec<usize> = deployment.non_iab.iter().copied().collect();
    let before = EvalContext::build(scenario.base, deployment, params, eval)?.association(&non_iab);
    let blocked = scenario.blocked_instance();
    let ctx = EvalContext::build_frozen(&blocked, deployment, params, eval, &before)?;
    Ok(ctx.rho(&non_iab)?)
}

/// Convenience: coverage of a deployment on an arbitrary instance.
pub fn coverage_of(
    instance: &NetworkInstance,
    deployment: &Deployment,
    params: &ChannelParams,
    eval: &EvalParams,
) -> Result<f64, RoutingError> {
    let non_iab: Vec<usize> = deployment.non_iab.iter().copied().collect();
    Ok(network::EvalContext::build(instance, deployment, params, eval)?.rho(&non_iab)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ObstacleGeometry, Region};
    use crate::network::TxPowers;
    use crate::rng::stream;

    fn setup() -> (NetworkInstance, Deployment, ChannelParams, EvalParams) {
        let region = Region::disk_with_area_km2(0.25).unwrap();
        let geom = ObstacleGeometry {
            wall_len_m: 5.0,
            tree_len_m: 10.0,
            tree_depth_m: 7.5,
            in_leaf_fraction: 0.15,
        };
        let inst =
            NetworkInstance::sample_with_counts(region, 2, 8, 50, 120, 0, &geom, 61).unwrap();
        let dep = Deployment {
            sbs_positions: inst.sbs.clone(),
            non_iab: [0usize].into_iter().collect(),
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
            n_fading_draws: 10,
            seed: 99,
            backhaul_interference: false,
        };
        (inst, dep, ChannelParams::default(), eval)
    }

    #[test]
    fn zero_temporal_density_is_identity() {
        let (inst, dep, ch, eval) = setup();
        let scenario = inject_temporal(&inst, 0.0, 5.0, &mut stream(1)).unwrap();
        assert!(scenario.walls.is_empty());
        for policy in [BackhaulReroutePolicy::Always, BackhaulReroutePolicy::OnDegradation] {
            let diff = reroute(&scenario, &dep, &ch, &eval, policy).unwrap();
            assert_eq!(diff.access_changed, 0);
            assert_eq!(diff.backhaul_changed, 0);
            assert_eq!(diff.rho_before, diff.rho_after);
        }
    }

    #[test]
    fn base_instance_untouched_by_scenario() {
        let (inst, _, _, _) = setup();
        let walls_before = inst.walls.len();
        let scenario = inject_temporal(&inst, 400.0, 5.0, &mut stream(2)).unwrap();
        let blocked = scenario.blocked_instance();
        assert_eq!(inst.temporal_walls.len(), 0);
        assert_eq!(inst.walls.len(), walls_before);
        assert_eq!(blocked.walls.len(), walls_before);
        assert_eq!(blocked.temporal_walls.len(), scenario.walls.len());
    }

    #[test]
    fn rerouting_never_hurts_versus_frozen() {
        let (inst, dep, ch, eval) = setup();
        for seed in 0..4u64 {
            let scenario = inject_temporal(&inst, 300.0, 5.0, &mut stream(seed)).unwrap();
            let diff =
                reroute(&scenario, &dep, &ch, &eval, BackhaulReroutePolicy::Always).unwrap();
            let frozen = coverage_frozen(&scenario, &dep, &ch, &eval).unwrap();
            assert!(
                diff.rho_after >= frozen - 1e-12,
                "seed {seed}: rerouted {} < frozen {frozen}",
                diff.rho_after
            );
        }
    }

    #[test]
    fn fractions_stay_in_range() {
        let (inst, dep, ch, eval) = setup();
        let scenario = inject_temporal(&inst, 500.0, 5.0, &mut stream(9)).unwrap();
        let diff = reroute(&scenario, &dep, &ch, &eval, BackhaulReroutePolicy::Always).unwrap();
        assert!((0.0..=1.0).contains(&diff.access_fraction));
        assert!((0.0..=1.0).contains(&diff.backhaul_fraction));
    }
}
