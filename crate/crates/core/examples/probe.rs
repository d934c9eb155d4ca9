//! Scratch driver for eyeballing coverage levels in the dense-urban
//! baseline scenario. Not part of the test suite.

use iabsim_core::channel::ChannelParams;
use iabsim_core::geometry::{NetworkInstance, ObstacleGeometry, PointProcessParams, Region};
use iabsim_core::network::{Deployment, EvalParams, TxPowers};
use iabsim_core::optimize::{ga_non_iab, ga_joint, ga_locations, random_subset, GaParams, OptimizeEnv};
use iabsim_core::routing::{inject_temporal, reroute, BackhaulReroutePolicy};
use iabsim_core::rng::{child_seed, stream, tag};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let psi: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let eta: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100.0e6);
    let n_instances: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);
    let mode: String = args.get(4).cloned().unwrap_or_else(|| "fig8".into());

    let l_bl: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let region = Region::disk_with_area_km2(1.0).unwrap();
    let geom = ObstacleGeometry {
        wall_len_m: l_bl,
        tree_len_m: 10.0,
        tree_depth_m: 7.5,
        in_leaf_fraction: 0.15,
    };
    let channel = ChannelParams::default();
    let ga = GaParams::default();
    let master = 20250810u64;

    let mut sums = std::collections::BTreeMap::<String, (f64, usize)>::new();
    let mut record = |k: &str, v: f64, sums: &mut std::collections::BTreeMap<String, (f64, usize)>| {
        let e = sums.entry(k.to_string()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    };

    for i in 0..n_instances {
        let iseed = child_seed(master, tag::INSTANCE, i as u64);
        let lambda_bl = if mode == "fig10a" {
            1000.0
        } else if mode == "fig10b" {
            2000.0
        } else if mode.starts_with("fig15") {
            700.0
        } else {
            500.0
        };
        let (lambda_s, p_s) = if mode == "fig11" { (8.0, 33.0) } else { (50.0, 24.0) };
        let pp = PointProcessParams {
            lambda_mbs: 2.0,
            lambda_sbs: lambda_s,
            lambda_ue: 500.0,
            lambda_blockers: lambda_bl,
            lambda_trees: if mode == "fig11" {
                args.get(5).and_then(|s| s.parse().ok()).unwrap_or(250.0)
            } else {
                0.0
            },
            lambda_temporal: 0.0,
        };
        let g2 = if mode == "fig11" {
            ObstacleGeometry { tree_len_m: 15.0, ..geom }
        } else {
            geom
        };
        let inst = NetworkInstance::sample(region, &pp, &g2, iseed).unwrap();
        let n_s = inst.sbs.len();
        let n_f = ((n_s as f64 * 0.1).round() as usize).max(1).min(n_s);
        let dep = Deployment {
            sbs_positions: inst.sbs.clone(),
            non_iab: Default::default(),
            psi,
            total_bw_hz: 1.0e9,
            tx: TxPowers { mbs_dbm: 40.0, sbs_dbm: p_s, ue_dbm: 0.0 },
        };
        let eval = EvalParams {
            eta_bps: eta,
            n_fading_draws: 50,
            seed: child_seed(iseed, tag::FITNESS, 0),
            backhaul_interference: false,
        };
        let env = OptimizeEnv {
            instance: &inst,
            channel,
            deployment: dep.clone(),
            eval,
            forbidden: None,
        };
        let pool: Vec<usize> = (0..n_s).collect();
        let mut rng = stream(child_seed(iseed, tag::DEPLOYMENT, 0));
        let rand_subset = random_subset(&pool, n_f, &mut rng);
        let rho_rand = iabsim_core::optimize::fitness(&env, &rand_subset).unwrap();
        record("random", rho_rand, &mut sums);
        let rho_macro = {
            let mut d2 = dep.clone();
            d2.sbs_positions = vec![];
            let env2 = OptimizeEnv { deployment: d2, ..env.clone() };
            iabsim_core::optimize::fitness(&env2, &[]).unwrap()
        };
        record("macro", rho_macro, &mut sums);

        match mode.as_str() {
            "fig9" => {
                let n_it: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(20);
                let mut_s: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1);
                let (ga_cand, _) = ga_non_iab(&env, n_f, &ga, child_seed(iseed, tag::OPTIMIZER, 0), None, None).unwrap();
                record("ga_subset", ga_cand.rho, &mut sums);
                let mut env_loc = env.clone();
                env_loc.deployment.non_iab = rand_subset.iter().copied().collect();
                let ga_loc = GaParams { iterations: n_it, mutation_strength: mut_s, ..ga };
                let (loc, _) = ga_locations(&env_loc, n_s, &ga_loc, child_seed(iseed, tag::OPTIMIZER, 1), None).unwrap();
                record("ga_loc", loc.rho, &mut sums);
                let (joint, _) = ga_joint(&env, n_s, n_f, &ga_loc, child_seed(iseed, tag::OPTIMIZER, 2)).unwrap();
                record("ga_joint", joint.rho, &mut sums);
            }
            "fig15" => {
                let (ga_cand, _) = ga_non_iab(&env, n_f, &ga, child_seed(iseed, tag::OPTIMIZER, 0), None, None).unwrap();
                for lt in [50.0, 100.0] {
                    let mut trng = stream(child_seed(iseed, tag::TEMPORAL, lt as u64));
                    let scen = inject_temporal(&inst, lt, l_bl, &mut trng).unwrap();
                    let mut dep_rand = dep.clone();
                    dep_rand.non_iab = rand_subset.iter().copied().collect();
                    let mut dep_ga = dep.clone();
                    dep_ga.non_iab = ga_cand.indices.iter().copied().collect();
                    for (name, d) in [("rand", &dep_rand), ("ga", &dep_ga)] {
                        for (pname, pol) in [
                            ("deg", BackhaulReroutePolicy::OnDegradation),
                            ("always", BackhaulReroutePolicy::Always),
                        ] {
                            let diff = reroute(&scen, d, &channel, &eval, pol).unwrap();
                            record(&format!("lt{lt}_{name}_{pname}_acc"), diff.access_fraction, &mut sums);
                            record(&format!("lt{lt}_{name}_{pname}_bh"), diff.backhaul_fraction, &mut sums);
                            record(&format!("lt{lt}_{name}_{pname}_rho_after"), diff.rho_after, &mut sums);
                        }
                    }
                }
            }
            "diag" => {
                use iabsim_core::network::{BsRef, EvalContext};
                let ctx = EvalContext::build(&inst, &dep, &channel, &eval).unwrap();
                let assoc = ctx.association(&rand_subset);
                let n_ue = inst.ues.len();
                let on_mbs = assoc.ue_assoc.iter().filter(|a| matches!(a, BsRef::Mbs(_))).count();
                record("frac_on_mbs", on_mbs as f64 / n_ue as f64, &mut sums);
                // Coverage by class under the random subset.
                let rep = ctx.report(&rand_subset).unwrap();
                let (mut cov_mbs, mut cov_iab, mut cov_non) =
                    ((0.0f64, 0.0f64), (0.0f64, 0.0f64), (0.0f64, 0.0f64));
                for (u, &a) in assoc.ue_assoc.iter().enumerate() {
                    let covered = if rep.per_ue_rate_bps[u] >= eta { 1.0 } else { 0.0 };
                    match a {
                        BsRef::Mbs(_) => { cov_mbs.0 += covered; cov_mbs.1 += 1.0 }
                        BsRef::Sbs(j) if rand_subset.contains(&j) => { cov_non.0 += covered; cov_non.1 += 1.0 }
                        BsRef::Sbs(_) => { cov_iab.0 += covered; cov_iab.1 += 1.0 }
                    }
                }
                record("cov_mbs_ue", cov_mbs.0 / cov_mbs.1.max(1.0), &mut sums);
                record("cov_iab_ue", cov_iab.0 / cov_iab.1.max(1.0), &mut sums);
                record("cov_noniab_ue", cov_non.0 / cov_non.1.max(1.0), &mut sums);
                // Pipe health: fraction of IAB load behind a pipe < eta.
                let mut starved = 0usize;
                let mut iab_load = 0usize;
                for j in 0..n_s {
                    if rand_subset.contains(&j) || assoc.sbs_load[j] == 0 { continue; }
                    iab_load += assoc.sbs_load[j];
                    let hz = assoc.sbs_backhaul_hz[j];
                    let snr_db = rep.per_sbs_backhaul_sinr_db[j];
                    let pipe = hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2();
                    if pipe < eta { starved += assoc.sbs_load[j]; }
                }
                record("starved_iab_load_frac", starved as f64 / iab_load.max(1) as f64, &mut sums);
                // Greedy ceiling.
                let (gr, _) = iabsim_core::optimize::greedy_non_iab(&env, n_f).unwrap();
                record("greedy_ceiling", gr.rho, &mut sums);
            }
            _ => {
                let t0 = std::time::Instant::now();
                let n_it: usize = if mode == "fig8" {
                    args.get(5).and_then(|s| s.parse().ok()).unwrap_or(20)
                } else {
                    20
                };
                let ga_run = GaParams { iterations: n_it, ..ga };
                let (ga_cand, trace) = ga_non_iab(&env, n_f, &ga_run, child_seed(iseed, tag::OPTIMIZER, 0), None, None).unwrap();
                record("ga_subset", ga_cand.rho, &mut sums);
                if i == 0 {
                    eprintln!(
                        "instance 0: n_s={} n_f={} ga took {:?} trace0={:.3} traceN={:.3}",
                        n_s,
                        n_f,
                        t0.elapsed(),
                        trace.queen_rho[0],
                        trace.queen_rho.last().unwrap()
                    );
                }
            }
        }
    }

    println!("psi={psi} eta={:.0}M mode={mode} instances={n_instances}", eta / 1e6);
    for (k, (s, n)) in sums {
        println!("  {k:>28}: {:.4}", s / n as f64);
    }
}
