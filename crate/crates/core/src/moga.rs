//! Real-coded NSGA-III for the two split strain-energy objectives.
//!
//! Genomes are force-density vectors. Offspring come from simulated binary
//! crossover and polynomial mutation (bounded variants); survivors are chosen
//! by nondominated sorting with reference-point niching on the 2-objective
//! simplex. Candidates whose equilibrium or stiffness solve fails are
//! infeasible and rank behind every feasible candidate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, Material, ObjectiveValues};
use crate::error::{Error, Result};
use crate::fdm::EquilibriumGeometry;
use crate::fea;
use crate::ground::GroundStructure;

/// Two objectives to minimize; `None` marks an infeasible genome.
pub trait BiObjective: Sync {
    fn dimension(&self) -> usize;
    fn evaluate(&self, genome: &[f64]) -> Option<[f64; 2]>;
}

/// `(F̃x, F̃y)` of a truss candidate: the split objectives evaluated with the
/// equilibrium-consistent densities `q̃(q)`.
#[derive(Debug, Clone, Copy)]
pub struct TrussProblem<'a> {
    pub structure: &'a GroundStructure,
    pub material: Material,
}

/// Runs the candidate through equilibrium, analysis and energy split.
pub fn evaluate(genome: &[f64], g: &GroundStructure, material: Material) -> Option<ObjectiveValues> {
    let design = fea::realize_design(g, genome, material).ok()?;
    let obj = energy::split_objectives(g, &design.geometry, &design.q_tilde, material);
    (obj.fx.is_finite() && obj.fy.is_finite()).then_some(obj)
}

impl BiObjective for TrussProblem<'_> {
    fn dimension(&self) -> usize {
        self.structure.member_count()
    }

    fn evaluate(&self, genome: &[f64]) -> Option<[f64; 2]> {
        evaluate(genome, self.structure, self.material).map(|o| [o.fx, o.fy])
    }
}

/// Force densities `N_i / L_i` of the ground structure as drawn, with every
/// member given unit area.
pub fn initial_force_densities(g: &GroundStructure, material: Material) -> Result<Vec<f64>> {
    let geom = EquilibriumGeometry::from_coords(g, g.coords());
    let an = fea::analyze(g, &geom, &vec![1.0; g.member_count()], material.e)?;
    Ok(an.axial.iter().zip(&geom.lengths).map(|(n, l)| n / l).collect())
}

/// Entries of `q0` below `1e-6·max|q0|` in magnitude, replaced by this
/// fraction of `max|q0|` (tension).
pub const LIFT_FRACTION: f64 = 1e-2;

/// `q0` with zero-force members given a small tension, so that unloaded
/// free nodes of the ground structure stay attached.
pub fn lift_zero_densities(q0: &[f64]) -> Vec<f64> {
    let qmax = q0.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    q0.iter()
        .map(|&v| if v.abs() < 1e-6 * qmax { LIFT_FRACTION * qmax } else { v })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub objectives: Option<[f64; 2]>,
    pub rank: usize,
    /// Index of the associated reference point, once niching has run.
    pub niche: Option<usize>,
}

pub const DEFAULT_PICK_THETA: f64 = 5.0;

/// Seeds are rescaled so their largest `|q_i|` is this fraction of the
/// bound half-span. `q̃` does not depend on the overall scale of `q`,
/// but the variation operators take steps proportional to the bound span.
pub const SEED_SCALE_FRACTION: f64 = 0.3;

/// `q` rescaled so that `max |q_i| = SEED_SCALE_FRACTION · (upper − lower) / 2`.
pub fn scale_seed(q: &[f64], lower: f64, upper: f64) -> Vec<f64> {
    let qmax = q.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if qmax == 0.0 {
        return q.to_vec();
    }
    let target = SEED_SCALE_FRACTION * 0.5 * (upper - lower);
    q.iter().map(|v| v * (target / qmax)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    /// Per-gene mutation probability.
    pub p_mutation: f64,
    pub q_lower: f64,
    pub q_upper: f64,
    /// Centre of the initial sampling box, one value per gene.
    pub init_center: Vec<f64>,
    pub init_halfwidth: f64,
    /// Genomes added verbatim to the initial population.
    pub seed_individuals: Vec<Vec<f64>>,
    pub rng_seed: u64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    /// Evaluate offspring on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub niching: NichingSpace,
    /// How an empty niche picks its first member. `None`: smallest
    /// perpendicular distance to the reference line. `Some(θ)`: smallest
    /// `d∥ + θ·d⊥`, which also rewards progress along the reference
    /// direction.
    pub pick_theta: Option<f64>,
}

/// Objective space in which reference-point niching measures distances.
/// Dominance is always decided on the raw objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NichingSpace {
    /// Objectives normalized linearly between the ideal and worst points.
    Linear,
    /// `ln` of the objectives, then normalized. Spreads points evenly over
    /// fronts that span several orders of magnitude.
    #[default]
    Log,
}

impl NichingSpace {
    fn map(self, f: [f64; 2], floor: [f64; 2]) -> [f64; 2] {
        match self {
            NichingSpace::Linear => f,
            NichingSpace::Log => [(f[0] + floor[0]).ln(), (f[1] + floor[1]).ln()],
        }
    }
}

impl GaConfig {
    /// Population 40, 500 generations, crossover 0.9, mutation `1/m`, bounds
    /// ±1000 and initial box `q0 ± 10`.
    pub fn standard(init_center: Vec<f64>) -> Self {
        let m = init_center.len().max(1);
        GaConfig {
            population_size: 40,
            generations: 500,
            p_crossover: 0.9,
            p_mutation: 1.0 / m as f64,
            q_lower: -1000.0,
            q_upper: 1000.0,
            init_center,
            init_halfwidth: 10.0,
            seed_individuals: Vec::new(),
            rng_seed: 0,
            eta_crossover: 30.0,
            eta_mutation: 20.0,
            parallel: false,
            niching: NichingSpace::Log,
            pick_theta: Some(DEFAULT_PICK_THETA),
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return bad(format!("population size {} is below 2", self.population_size));
        }
        if !(0.0..=1.0).contains(&self.p_crossover) {
            return bad(format!("crossover probability {} outside [0, 1]", self.p_crossover));
        }
        if !(self.p_mutation > 0.0 && self.p_mutation <= 1.0) {
            return bad(format!("mutation probability {} outside (0, 1]", self.p_mutation));
        }
        if !(self.init_halfwidth > 0.0) {
            return bad("initial half-width must be positive".into());
        }
        if !(self.q_lower < self.q_upper) {
            return bad("empty force-density bounds".into());
        }
        if !(self.eta_crossover >= 0.0 && self.eta_mutation >= 0.0) {
            return bad("distribution indices must be nonnegative".into());
        }
        if self.init_center.len() != dimension {
            return bad(format!(
                "initial centre has {} genes, problem has {dimension}",
                self.init_center.len()
            ));
        }
        if let Some(s) = self.seed_individuals.iter().find(|s| s.len() != dimension) {
            return bad(format!("seed individual has {} genes, expected {dimension}", s.len()));
        }
        Ok(())
    }
}

pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Nondomination rank of every point; infeasible points share the rank
/// after the last feasible front.
pub fn nondominated_sort(points: &[Option<[f64; 2]>]) -> Vec<usize> {
    let n = points.len();
    let mut ranks = vec![usize::MAX; n];
    let feasible: Vec<usize> = (0..n).filter(|&i| points[i].is_some()).collect();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, &i) in feasible.iter().enumerate() {
        let a = points[i].unwrap();
        for &j in &feasible[p + 1..] {
            let b = points[j].unwrap();
            if dominates(&a, &b) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&b, &a) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut current: Vec<usize> = feasible.iter().copied().filter(|&i| dominated_by[i] == 0).collect();
    let mut rank = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            ranks[i] = rank;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        current = next;
        rank += 1;
    }
    for r in ranks.iter_mut() {
        if *r == usize::MAX {
            *r = rank;
        }
    }
    ranks
}

/// Uniform lattice on the 2-objective simplex with `divisions` steps.
pub fn reference_points(divisions: usize) -> Vec<[f64; 2]> {
    let p = divisions.max(1);
    (0..=p)
        .map(|i| {
            let a = i as f64 / p as f64;
            [a, 1.0 - a]
        })
        .collect()
}

/// Area dominated by `points` up to `reference` (minimization).
pub fn hypervolume(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut y_prev = reference[1];
    for p in pts {
        if p[1] < y_prev {
            area += (reference[0] - p[0]) * (y_prev - p[1]);
            y_prev = p[1];
        }
    }
    area
}

/// Bounded simulated binary crossover, applied gene by gene with
/// probability 1/2.
pub fn sbx_crossover<R: Rng>(a: &mut [f64], b: &mut [f64], eta: f64, lower: f64, upper: f64, rng: &mut R) {
    for i in 0..a.len() {
        if rng.gen::<f64>() > 0.5 {
            continue;
        }
        if (a[i] - b[i]).abs() <= 1e-14 {
            continue;
        }
        let x1 = a[i].min(b[i]);
        let x2 = a[i].max(b[i]);
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (x1 - lower) / (x2 - x1));
        let c1 = (0.5 * (x1 + x2 - bq1 * (x2 - x1))).clamp(lower, upper);
        let bq2 = spread(1.0 + 2.0 * (upper - x2) / (x2 - x1));
        let c2 = (0.5 * (x1 + x2 + bq2 * (x2 - x1))).clamp(lower, upper);
        if rng.gen::<f64>() <= 0.5 {
            a[i] = c2;
            b[i] = c1;
        } else {
            a[i] = c1;
            b[i] = c2;
        }
    }
}

/// Bounded polynomial mutation with per-gene probability `p`.
pub fn polynomial_mutation<R: Rng>(x: &mut [f64], eta: f64, p: f64, lower: f64, upper: f64, rng: &mut R) {
    let span = upper - lower;
    let pow = 1.0 / (eta + 1.0);
    for v in x.iter_mut() {
        if rng.gen::<f64>() > p {
            continue;
        }
        let d1 = (*v - lower) / span;
        let d2 = (upper - *v) / span;
        let u: f64 = rng.gen();
        let dq = if u < 0.5 {
            let xy = 1.0 - d1;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = 1.0 - d2;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (*v + dq * span).clamp(lower, upper);
    }
}

/// Reduces `pop` to `n` survivors and assigns ranks and niches.
fn environmental_selection<R: Rng>(
    mut pop: Vec<Individual>,
    n: usize,
    refs: &[[f64; 2]],
    space: NichingSpace,
    pick_theta: Option<f64>,
    rng: &mut R,
) -> Vec<Individual> {
    let objs: Vec<Option<[f64; 2]>> = pop.iter().map(|p| p.objectives).collect();
    let ranks = nondominated_sort(&objs);
    for (ind, r) in pop.iter_mut().zip(&ranks) {
        ind.rank = *r;
        ind.niche = None;
    }
    if pop.len() <= n {
        return pop;
    }
    // stable order by rank keeps generation order within a front
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by_key(|&i| ranks[i]);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut last_front: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let r = ranks[order[start]];
        let end = order[start..].iter().position(|&i| ranks[i] != r).map_or(order.len(), |p| start + p);
        let front = &order[start..end];
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(front);
            if chosen.len() == n {
                break;
            }
        } else {
            last_front = front.to_vec();
            break;
        }
        start = end;
    }

    if chosen.len() < n {
        let need = n - chosen.len();
        if pop[last_front[0]].objectives.is_none() {
            last_front.shuffle(rng);
            chosen.extend_from_slice(&last_front[..need]);
        } else {
            let picked = niche_fill(&mut pop, &chosen, &last_front, need, refs, space, pick_theta, rng);
            chosen.extend(picked);
        }
    }

    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    chosen.iter().map(|&i| slots[i].take().unwrap()).collect()
}

/// Reference-point niching over the feasible members of `chosen ∪ last`.
fn niche_fill<R: Rng>(
    pop: &mut [Individual],
    chosen: &[usize],
    last: &[usize],
    need: usize,
    refs: &[[f64; 2]],
    space: NichingSpace,
    pick_theta: Option<f64>,
    rng: &mut R,
) -> Vec<usize> {
    let members: Vec<usize> = chosen
        .iter()
        .chain(last)
        .copied()
        .filter(|&i| pop[i].objectives.is_some())
        .collect();
    // keeps ln finite for objectives that are exactly zero
    let mut floor = [0.0_f64; 2];
    for &i in &members {
        let f = pop[i].objectives.unwrap();
        for d in 0..2 {
            floor[d] = floor[d].max(f[d].abs());
        }
    }
    let floor = floor.map(|m| 1e-12 * (1.0 + m));
    let mut ideal = [f64::INFINITY; 2];
    let mut worst = [f64::NEG_INFINITY; 2];
    for &i in &members {
        let f = space.map(pop[i].objectives.unwrap(), floor);
        for d in 0..2 {
            ideal[d] = ideal[d].min(f[d]);
            worst[d] = worst[d].max(f[d]);
        }
    }
    let range = [(worst[0] - ideal[0]).max(1e-12), (worst[1] - ideal[1]).max(1e-12)];

    let mut dist = vec![f64::INFINITY; pop.len()];
    for &i in &members {
        let f = space.map(pop[i].objectives.unwrap(), floor);
        let z = [(f[0] - ideal[0]) / range[0], (f[1] - ideal[1]) / range[1]];
        let mut best = (0, f64::INFINITY, 0.0);
        for (j, w) in refs.iter().enumerate() {
            let ww = w[0] * w[0] + w[1] * w[1];
            let t = (z[0] * w[0] + z[1] * w[1]) / ww;
            let (px, py) = (z[0] - t * w[0], z[1] - t * w[1]);
            let d = (px * px + py * py).sqrt();
            if d < best.1 {
                best = (j, d, t * ww.sqrt());
            }
        }
        pop[i].niche = Some(best.0);
        dist[i] = match pick_theta {
            Some(theta) => best.2 + theta * best.1,
            None => best.1,
        };
    }

    let mut count = vec![0usize; refs.len()];
    for &i in chosen {
        if let Some(j) = pop[i].niche {
            count[j] += 1;
        }
    }
    let mut open: Vec<bool> = vec![true; refs.len()];
    let mut pool: Vec<usize> = last.to_vec();
    let mut picked = Vec::with_capacity(need);
    while picked.len() < need {
        let min_count = (0..refs.len()).filter(|&j| open[j]).map(|j| count[j]).min();
        let Some(min_count) = min_count else {
            // every reference point exhausted; fall back to arbitrary picks
            pool.shuffle(rng);
            picked.extend(pool.iter().take(need - picked.len()));
            break;
        };
        let candidates: Vec<usize> = (0..refs.len()).filter(|&j| open[j] && count[j] == min_count).collect();
        let j = candidates[rng.gen_range(0..candidates.len())];
        let assoc: Vec<usize> = pool.iter().copied().filter(|&i| pop[i].niche == Some(j)).collect();
        if assoc.is_empty() {
            open[j] = false;
            continue;
        }
        let pick = if count[j] == 0 {
            *assoc
                .iter()
                .min_by(|&&a, &&b| dist[a].total_cmp(&dist[b]))
                .unwrap()
        } else {
            assoc[rng.gen_range(0..assoc.len())]
        };
        picked.push(pick);
        pool.retain(|&i| i != pick);
        count[j] += 1;
    }
    picked
}

fn evaluate_all<P: BiObjective>(problem: &P, genomes: Vec<Vec<f64>>, parallel: bool) -> Vec<Individual> {
    let eval = |genome: Vec<f64>| {
        let objectives = problem.evaluate(&genome);
        Individual {
            genome,
            objectives,
            rank: 0,
            niche: None,
        }
    };
    if parallel {
        genomes.into_par_iter().map(eval).collect()
    } else {
        genomes.into_iter().map(eval).collect()
    }
}

/// One nondominated point of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: [f64; 2],
    pub genome: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrontArchive {
    pub points: Vec<FrontPoint>,
}

impl FrontArchive {
    pub fn objectives(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p.objectives).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub front: FrontArchive,
    pub population: Vec<Individual>,
    pub initial_population: Vec<Individual>,
    pub evaluations: usize,
}

fn first_rank(pop: &[Individual]) -> FrontArchive {
    let objs: Vec<Option<[f64; 2]>> = pop.iter().map(|p| p.objectives).collect();
    let ranks = nondominated_sort(&objs);
    FrontArchive {
        points: pop
            .iter()
            .zip(&ranks)
            .filter(|(p, &r)| r == 0 && p.objectives.is_some())
            .map(|(p, _)| FrontPoint {
                objectives: p.objectives.unwrap(),
                genome: p.genome.clone(),
            })
            .collect(),
    }
}

/// Runs the GA. `on_generation` sees the surviving population after every
/// generation (generation 0 is the initial population).
pub fn run<P: BiObjective>(
    problem: &P,
    config: &GaConfig,
    mut on_generation: Option<&mut dyn FnMut(usize, &[Individual])>,
) -> Result<RunOutcome> {
    let dim = problem.dimension();
    config.validate(dim)?;
    let (lo, hi) = (config.q_lower, config.q_upper);
    let n = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let refs = reference_points(n - 1);

    let mut genomes: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            config
                .init_center
                .iter()
                .map(|c| {
                    let a = (c - config.init_halfwidth).clamp(lo, hi);
                    let b = (c + config.init_halfwidth).clamp(lo, hi);
                    if a < b {
                        rng.gen_range(a..b)
                    } else {
                        a
                    }
                })
                .collect()
        })
        .collect();
    genomes.extend(
        config
            .seed_individuals
            .iter()
            .map(|s| s.iter().map(|v| v.clamp(lo, hi)).collect()),
    );
    let mut evaluations = genomes.len();
    let mut pop = evaluate_all(problem, genomes, config.parallel);
    let objs: Vec<Option<[f64; 2]>> = pop.iter().map(|p| p.objectives).collect();
    for (ind, r) in pop.iter_mut().zip(nondominated_sort(&objs)) {
        ind.rank = r;
    }
    let initial_population = pop.clone();
    if let Some(cb) = on_generation.as_mut() {
        cb(0, &pop);
    }

    for gen in 1..=config.generations {
        let mut parents: Vec<usize> = (0..pop.len()).collect();
        parents.shuffle(&mut rng);
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut k = 0;
        while children.len() < n {
            let mut a = pop[parents[k % parents.len()]].genome.clone();
            let mut b = pop[parents[(k + 1) % parents.len()]].genome.clone();
            k += 2;
            if rng.gen::<f64>() < config.p_crossover {
                sbx_crossover(&mut a, &mut b, config.eta_crossover, lo, hi, &mut rng);
            }
            polynomial_mutation(&mut a, config.eta_mutation, config.p_mutation, lo, hi, &mut rng);
            polynomial_mutation(&mut b, config.eta_mutation, config.p_mutation, lo, hi, &mut rng);
            children.push(a);
            if children.len() < n {
                children.push(b);
            }
        }
        evaluations += children.len();
        let offspring = evaluate_all(problem, children, config.parallel);
        pop.extend(offspring);
        pop = environmental_selection(pop, n, &refs, config.niching, config.pick_theta, &mut rng);
        if let Some(cb) = on_generation.as_mut() {
            cb(gen, &pop);
        }
    }

    Ok(RunOutcome {
        front: first_rank(&pop),
        population: pop,
        initial_population,
        evaluations,
    })
}

/// Independent runs with seeds `rng_seed, rng_seed + 1, …`.
pub fn run_repetitions<P: BiObjective>(problem: &P, config: &GaConfig, reps: usize) -> Result<Vec<RunOutcome>> {
    let one = |r: usize| {
        let mut cfg = config.clone();
        cfg.rng_seed = config.rng_seed.wrapping_add(r as u64);
        run(problem, &cfg, None)
    };
    if config.parallel {
        (0..reps).into_par_iter().map(one).collect()
    } else {
        (0..reps).map(one).collect()
    }
}

/// Index of the front with the largest hypervolume, measured from 1.1× the
/// worst objectives seen across all fronts.
pub fn most_diverse(fronts: &[FrontArchive]) -> Option<usize> {
    let mut worst = [f64::NEG_INFINITY; 2];
    for p in fronts.iter().flat_map(|f| &f.points) {
        worst[0] = worst[0].max(p.objectives[0]);
        worst[1] = worst[1].max(p.objectives[1]);
    }
    let reference = [1.1 * worst[0], 1.1 * worst[1]];
    fronts
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.is_empty())
        .map(|(i, f)| (i, hypervolume(&f.objectives(), reference)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::{Load, Member, NodeId, Support};

    fn brute_ranks(points: &[Option<[f64; 2]>]) -> Vec<usize> {
        let n = points.len();
        let mut ranks = vec![usize::MAX; n];
        let mut rank = 0;
        loop {
            let remaining: Vec<usize> = (0..n).filter(|&i| ranks[i] == usize::MAX && points[i].is_some()).collect();
            if remaining.is_empty() {
                break;
            }
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j].unwrap(), &points[i].unwrap())))
                .collect();
            for i in layer {
                ranks[i] = rank;
            }
            rank += 1;
        }
        ranks.iter().map(|&r| if r == usize::MAX { rank } else { r }).collect()
    }

    #[test]
    fn hand_ranks() {
        let pts = [Some([1.0, 2.0]), Some([2.0, 1.0]), Some([3.0, 3.0])];
        assert_eq!(nondominated_sort(&pts), vec![0, 0, 1]);
        let same = [Some([1.0, 1.0]); 4];
        assert_eq!(nondominated_sort(&same), vec![0; 4]);
        let with_bad = [None, Some([5.0, 5.0]), Some([1.0, 1.0])];
        assert_eq!(nondominated_sort(&with_bad), vec![2, 1, 0]);
    }

    #[test]
    fn sort_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts: Vec<Option<[f64; 2]>> = (0..50)
                .map(|_| {
                    if rng.gen::<f64>() < 0.05 {
                        None
                    } else {
                        Some([rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64])
                    }
                })
                .collect();
            assert_eq!(nondominated_sort(&pts), brute_ranks(&pts));
        }
    }

    #[test]
    fn lattice_has_population_points() {
        let r = reference_points(39);
        assert_eq!(r.len(), 40);
        assert_eq!(r[0], [0.0, 1.0]);
        assert_eq!(r[39], [1.0, 0.0]);
    }

    #[test]
    fn hypervolume_of_staircase() {
        let hv = hypervolume(&[[1.0, 3.0], [2.0, 2.0], [3.0, 1.0], [3.5, 3.5]], [4.0, 4.0]);
        assert_eq!(hv, 3.0 + 2.0 + 1.0);
    }

    #[test]
    fn operators_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let mut a: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            sbx_crossover(&mut a, &mut b, 30.0, -1.0, 1.0, &mut rng);
            polynomial_mutation(&mut a, 20.0, 1.0, -1.0, 1.0, &mut rng);
            assert!(a.iter().chain(&b).all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    struct Schaffer;

    impl BiObjective for Schaffer {
        fn dimension(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &[f64]) -> Option<[f64; 2]> {
            Some([x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)])
        }
    }

    fn schaffer_config() -> GaConfig {
        GaConfig {
            population_size: 20,
            generations: 60,
            p_crossover: 0.9,
            p_mutation: 1.0,
            q_lower: -10.0,
            q_upper: 10.0,
            init_center: vec![0.0],
            init_halfwidth: 10.0,
            seed_individuals: vec![],
            rng_seed: 5,
            eta_crossover: 30.0,
            eta_mutation: 20.0,
            parallel: false,
            niching: NichingSpace::Linear,
            pick_theta: None,
        }
    }

    #[test]
    fn converges_on_schaffer() {
        let out = run(&Schaffer, &schaffer_config(), None).unwrap();
        assert_eq!(out.front.len(), 20);
        for p in &out.front.points {
            assert!((-1e-2..=2.01).contains(&p.genome[0]), "{:?}", p.genome);
        }
    }

    #[test]
    fn generation_zero_keeps_seeds() {
        let mut cfg = schaffer_config();
        cfg.generations = 0;
        cfg.seed_individuals = vec![vec![0.0], vec![2.0], vec![1.0]];
        let out = run(&Schaffer, &cfg, None).unwrap();
        for s in &cfg.seed_individuals {
            assert!(out.front.points.iter().any(|p| p.genome == *s));
        }
        let initial: Vec<Option<[f64; 2]>> = out.initial_population.iter().map(|i| i.objectives).collect();
        let ranks = nondominated_sort(&initial);
        assert_eq!(out.front.len(), ranks.iter().filter(|&&r| r == 0).count());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = schaffer_config();
        cfg.p_crossover = 1.5;
        assert!(matches!(run(&Schaffer, &cfg, None), Err(Error::Config(_))));
        let mut cfg = schaffer_config();
        cfg.init_center = vec![0.0, 1.0];
        assert!(run(&Schaffer, &cfg, None).is_err());
    }

    #[test]
    fn single_bar_initial_density() {
        let g = GroundStructure::new(
            vec![[0.0, 0.0], [0.0, 2.0]],
            vec![Member::new(0, 1)],
            vec![
                Support::pin(0),
                Support {
                    node: NodeId(1),
                    fix_x: true,
                    fix_y: false,
                },
            ],
            vec![Load {
                node: NodeId(1),
                fx: 0.0,
                fy: -1.0,
            }],
            &[],
        )
        .unwrap();
        let q0 = initial_force_densities(&g, Material::default()).unwrap();
        // compression of 1 over length 2
        assert!((q0[0] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn infeasible_genome_is_marked() {
        let g = GroundStructure::cantilever(3, 2, 3.0, 2.0).unwrap();
        let p = TrussProblem {
            structure: &g,
            material: Material::default(),
        };
        assert_eq!(p.evaluate(&vec![0.0; 29]), None);
        let q0 = initial_force_densities(&g, Material::default()).unwrap();
        // unloaded corners leave zero-force members and a singular Q_free
        assert_eq!(p.evaluate(&q0), None);
        let f = p.evaluate(&lift_zero_densities(&q0)).unwrap();
        assert!(f[0] >= 0.0 && f[1] >= 0.0 && f.iter().all(|v| v.is_finite()));
    }
}
