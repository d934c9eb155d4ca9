//! Deployment optimizers: an elitist genetic search over non-IAB backhaul
//! subsets, SBS locations, or both jointly, plus exhaustive, greedy and
//! tabu baselines.
//!
//! The genetic loop keeps the best candidate found so far (the Queen) in
//! every generation, surrounds it with `J` mutated neighbors, and fills
//! the remaining `K - J - 1` slots with fresh random candidates, so the
//! Queen fitness trace is nondecreasing by construction and the search
//! cannot stay trapped in a local optimum. There is no crossover. Fitness
//! is the service coverage probability evaluated with common random
//! numbers: one fixed fading seed per run makes candidate comparisons
//! noise-free and the whole search deterministic given its seeds.

use crate::channel::ChannelParams;
use crate::geometry::{NetworkInstance, Point, Region};
use crate::network::{Deployment, EvalContext, EvalParams, NetworkError};
use crate::rng::{child_seed, stream, tag, ChaCha8Rng};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid GA parameters: {0}")]
    InvalidGaParams(String),
    #[error("subset size {n_f} exceeds the {n_s} eligible SBSs")]
    InfeasibleSubsetSize { n_f: usize, n_s: usize },
    #[error("exhaustive search over {solutions} candidates exceeds the cap of {cap}")]
    ExhaustiveOverCap { solutions: u128, cap: u128 },
    #[error("feasible region is empty")]
    EmptyFeasibleRegion,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Elitist GA knobs: `population` is K, `neighborhood` is J, `iterations`
/// is the generation budget.
#[derive(Debug, Clone, Copy)]
pub struct GaParams {
    pub population: usize,
    pub neighborhood: usize,
    pub iterations: usize,
    /// Elements (subset members or SBS coordinates) replaced per mutation.
    pub mutation_strength: usize,
    /// Relocation radius for location mutations; defaults to a tenth of
    /// the region radius.
    pub location_step_m: Option<f64>,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 6,
            neighborhood: 3,
            iterations: 20,
            mutation_strength: 1,
            location_step_m: None,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.neighborhood == 0 || self.neighborhood + 1 >= self.population {
            return Err(OptimizeError::InvalidGaParams(format!(
                "need 0 < J < K - 1, got K = {}, J = {}",
                self.population, self.neighborhood
            )));
        }
        if self.iterations == 0 {
            return Err(OptimizeError::InvalidGaParams(
                "iterations must be >= 1".into(),
            ));
        }
        if self.mutation_strength == 0 {
            return Err(OptimizeError::InvalidGaParams(
                "mutation_strength must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Queen fitness per iteration plus the total evaluation count
/// (exactly K per iteration).
#[derive(Debug, Clone, Default)]
pub struct GaTrace {
    pub queen_rho: Vec<f64>,
    pub evaluations: usize,
}

impl GaTrace {
    pub fn is_monotone(&self) -> bool {
        self.queen_rho.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCandidate {
    pub indices: Vec<usize>,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct LocationCandidate {
    pub positions: Vec<Point>,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct JointCandidate {
    pub positions: Vec<Point>,
    pub indices: Vec<usize>,
    pub rho: f64,
}

/// Disk-shaped no-go areas for SBS placement or non-IAB eligibility.
#[derive(Debug, Clone, Default)]
pub struct ForbiddenZones {
    pub disks: Vec<(Point, f64)>,
}

impl ForbiddenZones {
    pub fn contains(&self, p: Point) -> bool {
        self.disks.iter().any(|&(c, r)| c.distance(p) <= r)
    }

    /// Random disks of radius R/6 until roughly `area_fraction` of the
    /// region is covered (estimated on a probe grid).
    pub fn sample<R: Rng>(region: Region, area_fraction: f64, rng: &mut R) -> Self {
        let mut zones = ForbiddenZones::default();
        if area_fraction <= 0.0 {
            return zones;
        }
        let n = 64;
        let mut probe = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let p = Point::new(
                    region.center.x
                        + region.radius_m * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0),
                    region.center.y
                        + region.radius_m * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0),
                );
                if region.contains(p) {
                    probe.push(p);
                }
            }
        }
        let radius = region.radius_m / 6.0;
        for _ in 0..256 {
            let covered =
                probe.iter().filter(|&&p| zones.contains(p)).count() as f64 / probe.len() as f64;
            if covered >= area_fraction.min(0.95) {
                break;
            }
            zones.disks.push((region.sample_uniform(rng), radius));
        }
        zones
    }
}

/// Indices of the positions outside every forbidden zone.
pub fn eligible_indices(positions: &[Point], zones: &ForbiddenZones) -> Vec<usize> {
    positions
        .iter()
        .enumerate()
        .filter(|(_, &p)| !zones.contains(p))
        .map(|(i, _)| i)
        .collect()
}

/// Everything a fitness evaluation needs besides the genome: the sampled
/// instance, channel model, deployment template (bandwidth split, powers,
/// default positions and subset) and the common-random-number evaluation
/// parameters.
#[derive(Debug, Clone)]
pub struct OptimizeEnv<'a> {
    pub instance: &'a NetworkInstance,
    pub channel: ChannelParams,
    pub deployment: Deployment,
    pub eval: EvalParams,
    pub forbidden: Option<&'a ForbiddenZones>,
}

impl OptimizeEnv<'_> {
    fn context(&self) -> Result<EvalContext, OptimizeError> {
        Ok(EvalContext::build(
            self.instance,
            &self.deployment,
            &self.channel,
            &self.eval,
        )?)
    }

    fn context_for_positions(&self, positions: &[Point]) -> Result<EvalContext, OptimizeError> {
        let mut dep = self.deployment.clone();
        dep.sbs_positions = positions.to_vec();
        dep.non_iab.retain(|&j| j < positions.len());
        Ok(EvalContext::build(
            self.instance,
            &dep,
            &self.channel,
            &self.eval,
        )?)
    }

    fn sample_feasible<R: Rng>(&self, rng: &mut R) -> Result<Point, OptimizeError> {
        for _ in 0..4096 {
            let p = self.instance.region.sample_uniform(rng);
            if self.forbidden.map_or(true, |z| !z.contains(p)) {
                return Ok(p);
            }
        }
        Err(OptimizeError::EmptyFeasibleRegion)
    }

    /// The non-IAB subset a location genome is scored with: the template
    /// subset, restricted to valid indices.
    fn template_subset(&self, n_s: usize) -> Vec<usize> {
        self.deployment
            .non_iab
            .iter()
            .copied()
            .filter(|&j| j < n_s)
            .collect()
    }
}

/// Coverage probability of one subset genome under the environment's
/// common random numbers. Identical genomes always score identically.
pub fn fitness(env: &OptimizeEnv<'_>, candidate: &[usize]) -> Result<f64, OptimizeError> {
    Ok(env.context()?.rho(candidate)?)
}

/// Shared elitist loop. `fitness` must be pure; the candidates of one
/// generation are evaluated in parallel, genome generation stays serial
/// on the provided stream so runs reproduce bit for bit.
fn queen_loop<G, FR, FM, FF>(
    ga: &GaParams,
    rng: &mut ChaCha8Rng,
    warm: Option<G>,
    mut random: FR,
    mut mutate: FM,
    fitness: FF,
) -> Result<(G, f64, GaTrace), OptimizeError>
where
    G: Clone + Send + Sync,
    FR: FnMut(&mut ChaCha8Rng) -> Result<G, OptimizeError>,
    FM: FnMut(&G, &mut ChaCha8Rng) -> G,
    FF: Fn(&G) -> Result<f64, OptimizeError> + Sync,
{
    ga.validate()?;
    let k = ga.population;
    let mut population: Vec<G> = Vec::with_capacity(k);
    if let Some(w) = warm {
        population.push(w);
    }
    while population.len() < k {
        population.push(random(rng)?);
    }
    let mut queen: Option<(G, f64)> = None;
    let mut trace = GaTrace::default();
    for it in 0..ga.iterations {
        let scores: Vec<Result<f64, OptimizeError>> =
            population.par_iter().map(|g| fitness(g)).collect();
        for (g, score) in population.iter().zip(scores) {
            let rho = score?;
            if queen.as_ref().map_or(true, |(_, best)| rho > *best) {
                queen = Some((g.clone(), rho));
            }
        }
        let best = queen.as_ref().expect("population is nonempty").1;
        trace.queen_rho.push(best);
        trace.evaluations += k;
        if it + 1 < ga.iterations {
            let q = queen.as_ref().expect("queen set").0.clone();
            let mut next = Vec::with_capacity(k);
            next.push(q.clone());
            for _ in 0..ga.neighborhood {
                next.push(mutate(&q, rng));
            }
            while next.len() < k {
                next.push(random(rng)?);
            }
            population = next;
        }
    }
    let (genome, rho) = queen.expect("at least one iteration ran");
    Ok((genome, rho, trace))
}

/// Uniform `n_f`-subset of `pool`, sorted.
pub fn random_subset<R: Rng>(pool: &[usize], n_f: usize, rng: &mut R) -> Vec<usize> {
    let mut picked: Vec<usize> = pool.choose_multiple(rng, n_f).copied().collect();
    picked.sort_unstable();
    picked
}

fn mutate_subset<R: Rng>(
    genome: &[usize],
    pool: &[usize],
    strength: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut current = genome.to_vec();
    let outside: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|i| !current.contains(i))
        .collect();
    if outside.is_empty() || current.is_empty() {
        return current;
    }
    let swaps = strength.min(current.len()).min(outside.len());
    let out_positions = rand::seq::index::sample(rng, current.len(), swaps).into_vec();
    let incoming: Vec<usize> = outside.choose_multiple(rng, swaps).copied().collect();
    for (pos, inc) in out_positions.into_iter().zip(incoming) {
        current[pos] = inc;
    }
    current.sort_unstable();
    current
}

/// GA over non-IAB backhaul subsets of size `n_f`. `eligible` restricts
/// the candidate SBS indices (deployment constraints); `warm` seeds the
/// initial population with a previously found Queen.
pub fn ga_non_iab(
    env: &OptimizeEnv<'_>,
    n_f: usize,
    ga: &GaParams,
    seed: u64,
    eligible: Option<&[usize]>,
    warm: Option<&[usize]>,
) -> Result<(SubsetCandidate, GaTrace), OptimizeError> {
    let n_s = env.deployment.sbs_positions.len();
    let pool: Vec<usize> = match eligible {
        Some(e) => e.iter().copied().filter(|&j| j < n_s).collect(),
        None => (0..n_s).collect(),
    };
    if n_f > pool.len() {
        return Err(OptimizeError::InfeasibleSubsetSize {
            n_f,
            n_s: pool.len(),
        });
    }
    let ctx = env.context()?;
    let mut rng = stream(child_seed(seed, tag::OPTIMIZER, 0));
    let warm_genome = warm.map(|w| {
        let mut g = w.to_vec();
        g.sort_unstable();
        g
    });
    let (indices, rho, trace) = queen_loop(
        ga,
        &mut rng,
        warm_genome,
        |r| Ok(random_subset(&pool, n_f, r)),
        |g, r| mutate_subset(g, &pool, ga.mutation_strength, r),
        |g: &Vec<usize>| Ok(ctx.rho(g)?),
    )?;
    Ok((SubsetCandidate { indices, rho }, trace))
}

fn random_positions<R: Rng>(
    env: &OptimizeEnv<'_>,
    n_s: usize,
    rng: &mut R,
) -> Result<Vec<Point>, OptimizeError> {
    (0..n_s).map(|_| env.sample_feasible(rng)).collect()
}

/// Uniform draw within `step` of the current position, clamped onto the
/// region and rejected from forbidden zones; falls back to a fresh
/// feasible point when the whole neighborhood is forbidden.
fn relocate<R: Rng>(env: &OptimizeEnv<'_>, from: Point, step: f64, rng: &mut R) -> Point {
    for _ in 0..64 {
        let u: f64 = rng.gen();
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = step * u.sqrt();
        let candidate = env
            .instance
            .region
            .clamp(Point::new(from.x + r * theta.cos(), from.y + r * theta.sin()));
        if env.forbidden.map_or(true, |z| !z.contains(candidate)) {
            return candidate;
        }
    }
    env.sample_feasible(rng).unwrap_or(from)
}

fn mutate_positions<R: Rng>(
    env: &OptimizeEnv<'_>,
    genome: &[Point],
    strength: usize,
    step: f64,
    rng: &mut R,
) -> Vec<Point> {
    let mut next = genome.to_vec();
    if next.is_empty() {
        return next;
    }
    let moves = strength.min(next.len());
    for idx in rand::seq::index::sample(rng, next.len(), moves).into_vec() {
        next[idx] = relocate(env, next[idx], step, rng);
    }
    next
}

/// GA over SBS locations with the template's (fixed) non-IAB subset.
pub fn ga_locations(
    env: &OptimizeEnv<'_>,
    n_s: usize,
    ga: &GaParams,
    seed: u64,
    warm: Option<&[Point]>,
) -> Result<(LocationCandidate, GaTrace), OptimizeError> {
    let step = ga
        .location_step_m
        .unwrap_or(env.instance.region.radius_m / 10.0);
    let subset = env.template_subset(n_s);
    let mut rng = stream(child_seed(seed, tag::OPTIMIZER, 1));
    let (positions, rho, trace) = queen_loop(
        ga,
        &mut rng,
        warm.map(|w| w.to_vec()),
        |r| random_positions(env, n_s, r),
        |g, r| mutate_positions(env, g, ga.mutation_strength, step, r),
        |g: &Vec<Point>| Ok(env.context_for_positions(g)?.rho(&subset)?),
    )?;
    Ok((LocationCandidate { positions, rho }, trace))
}

#[derive(Debug, Clone)]
struct JointGenome {
    positions: Vec<Point>,
    subset: Vec<usize>,
}

/// GA over SBS locations and the non-IAB subset jointly. Mutation picks
/// one component uniformly per step; with `n_f` = 0 or `n_f` = `n_s` only
/// locations mutate and the search reduces to [`ga_locations`].
pub fn ga_joint(
    env: &OptimizeEnv<'_>,
    n_s: usize,
    n_f: usize,
    ga: &GaParams,
    seed: u64,
) -> Result<(JointCandidate, GaTrace), OptimizeError> {
    if n_f > n_s {
        return Err(OptimizeError::InfeasibleSubsetSize { n_f, n_s });
    }
    let step = ga
        .location_step_m
        .unwrap_or(env.instance.region.radius_m / 10.0);
    let pool: Vec<usize> = (0..n_s).collect();
    let subset_mutable = n_f > 0 && n_f < n_s;
    let mut rng = stream(child_seed(seed, tag::OPTIMIZER, 3));
    let (genome, rho, trace) = queen_loop(
        ga,
        &mut rng,
        None,
        |r| {
            Ok(JointGenome {
                positions: random_positions(env, n_s, r)?,
                subset: random_subset(&pool, n_f, r),
            })
        },
        |g, r| {
            if subset_mutable && r.gen_bool(0.5) {
                JointGenome {
                    positions: g.positions.clone(),
                    subset: mutate_subset(&g.subset, &pool, ga.mutation_strength, r),
                }
            } else {
                JointGenome {
                    positions: mutate_positions(env, &g.positions, ga.mutation_strength, step, r),
                    subset: g.subset.clone(),
                }
            }
        },
        |g: &JointGenome| Ok(env.context_for_positions(&g.positions)?.rho(&g.subset)?),
    )?;
    Ok((
        JointCandidate {
            positions: genome.positions,
            indices: genome.subset,
            rho,
        },
        trace,
    ))
}

/// Number of distinct `n_f`-subsets of `n_s` SBSs (binomial coefficient),
/// i.e. the size of the exhaustive search space.
pub fn solution_count(n_s: u64, n_f: u64) -> u128 {
    if n_f > n_s {
        return 0;
    }
    let k = n_f.min(n_s - n_f);
    let mut res: u128 = 1;
    for i in 1..=k {
        res = res * (n_s - k + i) as u128 / i as u128;
    }
    res
}

struct Combinations {
    n: usize,
    k: usize,
    next: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let next = if k <= n { Some((0..k).collect()) } else { None };
        Combinations { n, k, next }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        // Advance to the lexicographic successor.
        let mut idx = current.clone();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.next = None;
                return Some(current);
            }
            i -= 1;
            if idx[i] != i + self.n - self.k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..self.k {
            idx[j] = idx[j - 1] + 1;
        }
        self.next = Some(idx);
        Some(current)
    }
}

/// Global optimum by enumeration of every size-`n_f` subset, together
/// with the search space size. Refuses when the space exceeds `cap`.
pub fn exhaustive_non_iab(
    env: &OptimizeEnv<'_>,
    n_f: usize,
    cap: u128,
) -> Result<(SubsetCandidate, u128), OptimizeError> {
    let n_s = env.deployment.sbs_positions.len();
    if n_f > n_s {
        return Err(OptimizeError::InfeasibleSubsetSize { n_f, n_s });
    }
    let solutions = solution_count(n_s as u64, n_f as u64);
    if solutions > cap {
        return Err(OptimizeError::ExhaustiveOverCap { solutions, cap });
    }
    let ctx = env.context()?;
    let mut best: Option<SubsetCandidate> = None;
    let mut combos = Combinations::new(n_s, n_f);
    loop {
        let batch: Vec<Vec<usize>> = combos.by_ref().take(8192).collect();
        if batch.is_empty() {
            break;
        }
        let scores: Vec<Result<f64, NetworkError>> =
            batch.par_iter().map(|c| ctx.rho(c)).collect();
        for (c, score) in batch.into_iter().zip(scores) {
            let rho = score?;
            if best.as_ref().map_or(true, |b| rho > b.rho) {
                best = Some(SubsetCandidate { indices: c, rho });
            }
        }
    }
    Ok((best.expect("at least one combination"), solutions))
}

/// Greedy baseline: grows the subset one SBS at a time, each time adding
/// the index that maximizes coverage. Returns the candidate and the
/// number of evaluations spent (N_f * N_s - N_f (N_f - 1) / 2).
pub fn greedy_non_iab(
    env: &OptimizeEnv<'_>,
    n_f: usize,
) -> Result<(SubsetCandidate, usize), OptimizeError> {
    let n_s = env.deployment.sbs_positions.len();
    if n_f > n_s {
        return Err(OptimizeError::InfeasibleSubsetSize { n_f, n_s });
    }
    let ctx = env.context()?;
    let mut chosen: Vec<usize> = Vec::new();
    let mut rho = ctx.rho(&chosen)?;
    let mut evaluations = 0usize;
    for _ in 0..n_f {
        let remaining: Vec<usize> = (0..n_s).filter(|j| !chosen.contains(j)).collect();
        let scores: Vec<Result<f64, NetworkError>> = remaining
            .par_iter()
            .map(|&j| {
                let mut cand = chosen.clone();
                cand.push(j);
                cand.sort_unstable();
                ctx.rho(&cand)
            })
            .collect();
        evaluations += remaining.len();
        let mut best: Option<(f64, usize)> = None;
        for (&j, score) in remaining.iter().zip(scores) {
            let r = score?;
            if best.map_or(true, |(br, _)| r > br) {
                best = Some((r, j));
            }
        }
        let (best_rho, j) = best.expect("remaining is nonempty while n_f <= n_s");
        chosen.push(j);
        chosen.sort_unstable();
        rho = best_rho;
    }
    Ok((SubsetCandidate { indices: chosen, rho }, evaluations))
}

/// One applied tabu move.
#[derive(Debug, Clone, Copy)]
pub struct TabuMove {
    pub iteration: usize,
    pub removed: usize,
    pub added: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TabuTrace {
    /// Best-so-far coverage after initialization and after each move.
    pub best_rho: Vec<f64>,
    pub moves: Vec<TabuMove>,
    pub evaluations: usize,
}

/// Tabu search over the single-swap neighborhood. Every iteration moves
/// to the best admissible neighbor (even when worse, which is what lets
/// the search leave local optima); both indices of an applied swap stay
/// tabu for `tenure` iterations. Tenure 0 degenerates to plain
/// steepest-neighbor hill climbing. Returns the best candidate seen.
pub fn tabu_non_iab(
    env: &OptimizeEnv<'_>,
    n_f: usize,
    tenure: usize,
    iteration_budget: usize,
    seed: u64,
) -> Result<(SubsetCandidate, TabuTrace), OptimizeError> {
    let n_s = env.deployment.sbs_positions.len();
    if n_f > n_s {
        return Err(OptimizeError::InfeasibleSubsetSize { n_f, n_s });
    }
    let ctx = env.context()?;
    let pool: Vec<usize> = (0..n_s).collect();
    let mut rng = stream(child_seed(seed, tag::OPTIMIZER, 2));
    let mut current = random_subset(&pool, n_f, &mut rng);
    let mut current_rho = ctx.rho(&current)?;
    let mut best = SubsetCandidate {
        indices: current.clone(),
        rho: current_rho,
    };
    let mut trace = TabuTrace {
        best_rho: vec![best.rho],
        moves: Vec::new(),
        evaluations: 1,
    };
    // First iteration at which an index may be touched again.
    let mut tabu_until: HashMap<usize, usize> = HashMap::new();
    for it in 0..iteration_budget {
        let admissible = |idx: usize| tabu_until.get(&idx).copied().unwrap_or(0) <= it;
        let mut neighbors: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for &out in &current {
            if !admissible(out) {
                continue;
            }
            for &inc in &pool {
                if current.contains(&inc) || !admissible(inc) {
                    continue;
                }
                let mut cand = current.clone();
                cand.retain(|&x| x != out);
                cand.push(inc);
                cand.sort_unstable();
                neighbors.push((out, inc, cand));
            }
        }
        if neighbors.is_empty() {
            break;
        }
        let scores: Vec<Result<f64, NetworkError>> =
            neighbors.par_iter().map(|(_, _, c)| ctx.rho(c)).collect();
        trace.evaluations += neighbors.len();
        let mut pick: Option<(f64, usize)> = None;
        for (i, score) in scores.into_iter().enumerate() {
            let r = score?;
            if pick.map_or(true, |(pr, _)| r > pr) {
                pick = Some((r, i));
            }
        }
        let (rho, i) = pick.expect("nonempty neighborhood");
        let (out, inc, cand) = neighbors.swap_remove(i);
        current = cand;
        current_rho = rho;
        tabu_until.insert(out, it + 1 + tenure);
        tabu_until.insert(inc, it + 1 + tenure);
        trace.moves.push(TabuMove {
            iteration: it,
            removed: out,
            added: inc,
        });
        if current_rho > best.rho {
            best = SubsetCandidate {
                indices: current.clone(),
                rho: current_rho,
            };
        }
        trace.best_rho.push(best.rho);
    }
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ObstacleGeometry;
    use crate::network::TxPowers;

    fn small_instance(seed: u64) -> NetworkInstance {
        let region = Region::disk_with_area_km2(0.25).unwrap();
        let geom = ObstacleGeometry {
            wall_len_m: 5.0,
            tree_len_m: 10.0,
            tree_depth_m: 7.5,
            in_leaf_fraction: 0.15,
        };
        NetworkInstance::sample_with_counts(region, 1, 8, 40, 60, 0, &geom, seed).unwrap()
    }

    fn env_for(instance: &NetworkInstance) -> OptimizeEnv<'_> {
        let deployment = Deployment {
            sbs_positions: instance.sbs.clone(),
            non_iab: Default::default(),
            psi: 0.5,
            total_bw_hz: 1.0e9,
            tx: TxPowers {
                mbs_dbm: 40.0,
                sbs_dbm: 24.0,
                ue_dbm: 0.0,
            },
        };
        OptimizeEnv {
            instance,
            channel: ChannelParams::default(),
            deployment,
            eval: EvalParams {
                eta_bps: 50.0e6,
                n_fading_draws: 6,
                seed: 2024,
                backhaul_interference: false,
            },
            forbidden: None,
        }
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(solution_count(50, 5), 2_118_760);
        assert_eq!(solution_count(10, 2), 45);
        assert_eq!(solution_count(7, 7), 1);
        assert_eq!(solution_count(7, 0), 1);
        assert_eq!(solution_count(3, 5), 0);
    }

    #[test]
    fn combinations_enumerate_all() {
        let all: Vec<_> = Combinations::new(5, 2).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[9], vec![3, 4]);
        let trivial: Vec<_> = Combinations::new(4, 0).collect();
        assert_eq!(trivial, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn ga_params_validation() {
        assert!(GaParams::default().validate().is_ok());
        let bad = GaParams {
            population: 4,
            neighborhood: 3,
            ..GaParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ga_is_deterministic_and_monotone() {
        let instance = small_instance(3);
        let env = env_for(&instance);
        let ga = GaParams {
            iterations: 8,
            ..GaParams::default()
        };
        let (a, ta) = ga_non_iab(&env, 2, &ga, 55, None, None).unwrap();
        let (b, tb) = ga_non_iab(&env, 2, &ga, 55, None, None).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(ta.queen_rho, tb.queen_rho);
        assert!(ta.is_monotone());
        assert_eq!(ta.evaluations, ga.population * ga.iterations);
    }

    #[test]
    fn full_subset_converges_immediately() {
        let instance = small_instance(4);
        let env = env_for(&instance);
        let ga = GaParams {
            iterations: 3,
            ..GaParams::default()
        };
        let n_s = env.deployment.sbs_positions.len();
        let (cand, trace) = ga_non_iab(&env, n_s, &ga, 1, None, None).unwrap();
        assert_eq!(cand.indices, (0..n_s).collect::<Vec<_>>());
        // Only one genome exists, so the trace is flat from iteration 1.
        assert!(trace.queen_rho.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn warm_start_cannot_regress() {
        let instance = small_instance(5);
        let env = env_for(&instance);
        let ga = GaParams {
            iterations: 4,
            ..GaParams::default()
        };
        let (first, _) = ga_non_iab(&env, 2, &ga, 9, None, None).unwrap();
        let (second, trace) = ga_non_iab(&env, 2, &ga, 10, None, Some(&first.indices)).unwrap();
        assert!(second.rho >= first.rho);
        assert!(trace.queen_rho[0] >= first.rho);
    }

    #[test]
    fn greedy_evaluation_count_matches_closed_form() {
        let instance = small_instance(6);
        let env = env_for(&instance);
        let n_f = 3;
        let n_s = env.deployment.sbs_positions.len();
        let (_, evals) = greedy_non_iab(&env, n_f).unwrap();
        assert_eq!(evals, n_f * n_s - n_f * (n_f - 1) / 2);
    }

    #[test]
    fn exhaustive_cap_is_enforced() {
        let instance = small_instance(7);
        let env = env_for(&instance);
        match exhaustive_non_iab(&env, 4, 10) {
            Err(OptimizeError::ExhaustiveOverCap { solutions, cap }) => {
                assert_eq!(solutions, solution_count(8, 4));
                assert_eq!(cap, 10);
            }
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn tabu_respects_tenure_in_trace() {
        let instance = small_instance(8);
        let env = env_for(&instance);
        let tenure = 3;
        let (_, trace) = tabu_non_iab(&env, 2, tenure, 25, 77).unwrap();
        for (i, m) in trace.moves.iter().enumerate() {
            for prev in trace.moves[..i].iter() {
                if m.iteration < prev.iteration + 1 + tenure {
                    assert!(prev.removed != m.removed && prev.removed != m.added);
                    assert!(prev.added != m.removed && prev.added != m.added);
                }
            }
        }
        // Best-so-far never decreases.
        assert!(trace.best_rho.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn forbidden_zones_exclude_positions() {
        let region = Region::disk_with_area_km2(1.0).unwrap();
        let mut rng = stream(42);
        let zones = ForbiddenZones::sample(region, 0.4, &mut rng);
        assert!(!zones.disks.is_empty());
        let inside = zones.disks[0].0;
        assert!(zones.contains(inside));
        let eligible = eligible_indices(&[inside, Point::new(1e9, 1e9)], &zones);
        assert_eq!(eligible, vec![1]);
    }
}
