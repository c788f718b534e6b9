//! Ant System: pheromone state, the random-proportional transition rule,
//! evaporation and per-ant deposit, and the baseline solver loop.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{check_permutation, nearest_neighbor_tour, EventSchedule, Instance, Tour};
use crate::rng::{self, Rng};
use crate::solver::{self, ColonyConfig, IterationView};

/// Strictly positive floor so transition weights never all vanish.
pub const TAU_MIN: f64 = 1e-9;

/// Symmetric edge pheromone over the current cities, kept within
/// `[tau_min, tau_max]` off the diagonal. The diagonal is always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneMatrix {
    n: usize,
    tau: Vec<f64>,
    tau_min: f64,
    tau_max: f64,
}

impl PheromoneMatrix {
    /// Uniform `tau0` on every edge.
    pub fn new(n: usize, tau0: f64, tau_max: f64) -> Result<Self> {
        if n < crate::instance::MIN_CITIES {
            return Err(Error::InvalidArgument(format!(
                "pheromone matrix needs at least 3 cities, got {n}"
            )));
        }
        if !(tau0 > 0.0) || !tau0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau0 must be > 0, got {tau0}"
            )));
        }
        if tau0 > tau_max {
            return Err(Error::InvalidArgument(format!(
                "tau0 {tau0} exceeds tau_max {tau_max}"
            )));
        }
        if tau0 < TAU_MIN {
            return Err(Error::InvalidArgument(format!(
                "tau0 {tau0} is below the floor {TAU_MIN}"
            )));
        }
        let mut ph = PheromoneMatrix {
            n,
            tau: vec![0.0; n * n],
            tau_min: TAU_MIN,
            tau_max,
        };
        ph.fill(tau0);
        Ok(ph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`, clamped into bounds.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i == j {
            return;
        }
        let v = value.clamp(self.tau_min, self.tau_max);
        self.tau[i * self.n + j] = v;
        self.tau[j * self.n + i] = v;
    }

    pub(crate) fn fill(&mut self, tau0: f64) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.tau[i * n + j] = if i == j { 0.0 } else { tau0 };
            }
        }
    }

    /// Multiplies every edge by `1 - rho`, then applies the floor.
    pub fn evaporate(&mut self, rho: f64) -> Result<()> {
        check_rho(rho)?;
        let keep = 1.0 - rho;
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = &mut self.tau[i * n + j];
                    *v = (*v * keep).max(self.tau_min);
                }
            }
        }
        Ok(())
    }

    /// Every ant `k` adds `q / L_k` to each edge of its tour. Entries are
    /// capped at `tau_max` once all ants have deposited.
    pub fn deposit(&mut self, tours: &[Tour], q: f64) -> Result<()> {
        for tour in tours {
            check_permutation(self.n, tour.order())?;
            if !(tour.length() > 0.0) {
                return Err(Error::InvalidTour(format!(
                    "tour length must be positive, got {}",
                    tour.length()
                )));
            }
        }
        for tour in tours {
            self.add_along(tour, q / tour.length());
        }
        self.clamp();
        Ok(())
    }

    /// Adds `amount` to each edge of the closed tour, without clamping.
    pub(crate) fn add_along(&mut self, tour: &Tour, amount: f64) {
        let order = tour.order();
        let n = self.n;
        for k in 0..order.len() {
            let (a, b) = (order[k], order[(k + 1) % order.len()]);
            self.tau[a * n + b] += amount;
            self.tau[b * n + a] += amount;
        }
    }

    pub(crate) fn clamp(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = &mut self.tau[i * n + j];
                    *v = v.clamp(self.tau_min, self.tau_max);
                }
            }
        }
    }

    /// Symmetric, zero diagonal, and every edge within bounds.
    pub fn is_consistent(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == 0.0
                && (0..self.n).filter(|&j| j != i).all(|j| {
                    let v = self.get(i, j);
                    v == self.get(j, i) && v >= self.tau_min && v <= self.tau_max
                })
        })
    }

    /// Appends a city whose edges all carry `tau0`.
    pub(crate) fn push_city(&mut self, tau0: f64) {
        let n = self.n;
        let m = n + 1;
        let mut tau = vec![0.0; m * m];
        for i in 0..n {
            tau[i * m..i * m + n].copy_from_slice(&self.tau[i * n..(i + 1) * n]);
            tau[i * m + n] = tau0;
            tau[n * m + i] = tau0;
        }
        self.n = m;
        self.tau = tau;
    }

    pub(crate) fn remove_city(&mut self, pos: usize) {
        let n = self.n;
        let mut tau = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != pos) {
            let row = &self.tau[i * n..(i + 1) * n];
            tau.extend_from_slice(&row[..pos]);
            tau.extend_from_slice(&row[pos + 1..]);
        }
        self.n = n - 1;
        self.tau = tau;
    }

    pub(crate) fn reset_city(&mut self, pos: usize, tau0: f64) {
        for j in (0..self.n).filter(|&j| j != pos) {
            self.tau[pos * self.n + j] = tau0;
            self.tau[j * self.n + pos] = tau0;
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "evaporation rate must lie in (0, 1), got {rho}"
        )))
    }
}

pub fn init_pheromone(n: usize, tau0: f64, tau_max: f64) -> Result<PheromoneMatrix> {
    PheromoneMatrix::new(n, tau0, tau_max)
}

pub fn evaporate(ph: &PheromoneMatrix, rho: f64) -> Result<PheromoneMatrix> {
    let mut out = ph.clone();
    out.evaporate(rho)?;
    Ok(out)
}

pub fn deposit(ph: &PheromoneMatrix, tours: &[Tour], q: f64) -> Result<PheromoneMatrix> {
    let mut out = ph.clone();
    out.deposit(tours, q)?;
    Ok(out)
}

/// Ant System parameters. Defaults follow the experiments: `alpha = 1`,
/// `beta = 5`, `rho = 0.1`, `Q = 100`, 100 iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct AcoParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub q: f64,
    /// Ant count; `None` means one ant per city.
    pub ants: Option<usize>,
    /// Initial pheromone; `None` means `m / L_nn` with `L_nn` the
    /// nearest-neighbour tour from the lowest-id city.
    pub tau0: Option<f64>,
    /// Pheromone ceiling; `None` means `Q`.
    pub tau_max: Option<f64>,
    pub max_iters: usize,
}

impl Default for AcoParams {
    fn default() -> Self {
        AcoParams {
            alpha: 1.0,
            beta: 5.0,
            rho: 0.1,
            q: 100.0,
            ants: None,
            tau0: None,
            tau_max: None,
            max_iters: 100,
        }
    }
}

/// Values for the optional parameters, fixed against a base instance at the
/// start of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub ants: usize,
    pub tau0: f64,
    pub tau_max: f64,
}

impl AcoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        check_rho(self.rho)?;
        if !(self.q > 0.0 && self.q.is_finite()) {
            return bad(format!("Q must be > 0, got {}", self.q));
        }
        if self.ants == Some(0) {
            return bad("ant count must be >= 1".into());
        }
        if let Some(t) = self.tau0 {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tau0 must be > 0, got {t}"));
            }
        }
        if let Some(t) = self.tau_max {
            if !(t > TAU_MIN && t.is_finite()) {
                return bad(format!("tau_max must exceed {TAU_MIN}, got {t}"));
            }
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1".into());
        }
        Ok(())
    }

    pub fn resolve(&self, inst: &Instance) -> Result<ResolvedParams> {
        self.validate()?;
        let ants = self.ants.unwrap_or(inst.len());
        let tau0 = match self.tau0 {
            Some(t) => t,
            None => {
                let lowest = inst.cities().iter().map(|c| c.id).min().expect("non-empty");
                ants as f64 / nearest_neighbor_tour(inst, lowest)?.length()
            }
        };
        let tau_max = self.tau_max.unwrap_or(self.q);
        if tau0 > tau_max {
            return Err(Error::InvalidArgument(format!(
                "tau0 {tau0} exceeds tau_max {tau_max}"
            )));
        }
        Ok(ResolvedParams {
            ants,
            tau0,
            tau_max,
        })
    }
}

/// A partially built tour.
#[derive(Debug, Clone, PartialEq)]
pub struct AntState {
    current: usize,
    visited: Vec<bool>,
    path: Vec<usize>,
}

impl AntState {
    pub fn new(n: usize, start: usize) -> Self {
        let mut visited = vec![false; n];
        visited[start] = true;
        AntState {
            current: start,
            visited,
            path: vec![start],
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    pub fn has_visited(&self, pos: usize) -> bool {
        self.visited[pos]
    }

    pub fn is_complete(&self) -> bool {
        self.path.len() == self.visited.len()
    }

    pub fn allowed(&self) -> impl Iterator<Item = usize> + '_ {
        self.visited
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v)
            .map(|(j, _)| j)
    }

    pub fn visit(&mut self, pos: usize) {
        debug_assert!(!self.visited[pos]);
        self.visited[pos] = true;
        self.path.push(pos);
        self.current = pos;
    }
}

/// `tau^alpha * eta^beta` for one edge, with `eta = 1 / d`.
#[inline]
fn edge_weight(tau: f64, dist: f64, alpha: f64, beta: f64) -> f64 {
    let t = if alpha == 1.0 { tau } else { tau.powf(alpha) };
    let e = if beta == 0.0 { 1.0 } else { dist.powf(-beta) };
    t * e
}

/// Probability of moving to each city (indexed by position) from the ant's
/// current city. Visited cities get exactly 0. Returns `None` once the tour
/// is complete.
pub fn transition_probabilities(
    inst: &Instance,
    ph: &PheromoneMatrix,
    ant: &AntState,
    params: &AcoParams,
) -> Option<Vec<f64>> {
    if ant.is_complete() {
        return None;
    }
    let i = ant.current();
    let mut p = vec![0.0; inst.len()];
    let mut total = 0.0;
    for j in ant.allowed() {
        p[j] = edge_weight(ph.get(i, j), inst.dist(i, j), params.alpha, params.beta);
        total += p[j];
    }
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        let allowed: Vec<usize> = ant.allowed().collect();
        let u = 1.0 / allowed.len() as f64;
        p.iter_mut().for_each(|v| *v = 0.0);
        allowed.into_iter().for_each(|j| p[j] = u);
    }
    Some(p)
}

/// Edge weights for one pheromone snapshot, shared by all ants of an
/// iteration.
pub(crate) struct ChoiceWeights {
    n: usize,
    w: Vec<f64>,
}

impl ChoiceWeights {
    pub(crate) fn new(inst: &Instance, ph: &PheromoneMatrix, params: &AcoParams) -> Self {
        let n = inst.len();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = edge_weight(ph.get(i, j), inst.dist(i, j), params.alpha, params.beta);
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        ChoiceWeights { n, w }
    }

    /// Roulette-wheel tour construction from `start`.
    pub(crate) fn construct(&self, inst: &Instance, start: usize, rng: &mut Rng) -> Tour {
        let n = self.n;
        let mut ant = AntState::new(n, start);
        let mut candidates = Vec::with_capacity(n);
        while !ant.is_complete() {
            let row = &self.w[ant.current() * n..(ant.current() + 1) * n];
            candidates.clear();
            candidates.extend(ant.allowed());
            let total: f64 = candidates.iter().map(|&j| row[j]).sum();
            let next = if total > 0.0 && total.is_finite() {
                let r = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                candidates
                    .iter()
                    .copied()
                    .find(|&j| {
                        acc += row[j];
                        acc > r
                    })
                    .unwrap_or(*candidates.last().expect("allowed set is non-empty"))
            } else {
                candidates[rng.gen_range(0..candidates.len())]
            };
            ant.visit(next);
        }
        let length = inst.cycle_length(ant.path());
        Tour::from_parts(ant.path, length)
    }
}

/// One ant's tour, sampling the transition rule at every step.
pub fn construct_tour(
    inst: &Instance,
    ph: &PheromoneMatrix,
    start: usize,
    params: &AcoParams,
    rng: &mut Rng,
) -> Result<Tour> {
    if start >= inst.len() || ph.n() != inst.len() {
        return Err(Error::InvalidArgument(format!(
            "start position {start} invalid for {} cities",
            inst.len()
        )));
    }
    Ok(ChoiceWeights::new(inst, ph, params).construct(inst, start, rng))
}

/// Tours for `ants` ants, ant `k` starting at position `k mod n` with its
/// own PRNG stream derived from `(seed, iteration, k)`.
pub(crate) fn construct_colony(
    inst: &Instance,
    ph: &PheromoneMatrix,
    params: &AcoParams,
    ants: usize,
    seed: u64,
    iteration: usize,
) -> Vec<Tour> {
    let weights = ChoiceWeights::new(inst, ph, params);
    (0..ants)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[iteration as u64, k as u64]);
            weights.construct(inst, k % inst.len(), &mut rng)
        })
        .collect()
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_tour: Tour,
    /// Best-so-far length after each iteration.
    pub best_length_per_iter: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    /// The instance after every due event; `best_tour` indexes into it.
    pub final_instance: Instance,
    /// Iterations at which pheromone was re-initialised after stagnation.
    pub reinit_iterations: Vec<usize>,
}

impl RunResult {
    pub fn final_length(&self) -> f64 {
        self.best_tour.length()
    }

    /// First iteration (1-based) at which the final best length was reached.
    pub fn iterations_to_best(&self) -> usize {
        let last = *self.best_length_per_iter.last().expect("non-empty trace");
        let tail = self
            .best_length_per_iter
            .iter()
            .rev()
            .take_while(|&&v| v == last)
            .count();
        self.best_length_per_iter.len() - tail + 1
    }
}

/// Baseline Ant System: construct, evaporate, deposit, repeat.
pub fn run_aco(
    inst: &Instance,
    schedule: &EventSchedule,
    params: &AcoParams,
    seed: u64,
) -> Result<RunResult> {
    run_aco_observed(inst, schedule, params, seed, |_| {})
}

/// [`run_aco`] with a callback after every iteration.
pub fn run_aco_observed(
    inst: &Instance,
    schedule: &EventSchedule,
    params: &AcoParams,
    seed: u64,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<RunResult> {
    solver::run(
        inst,
        schedule,
        params,
        &ColonyConfig::baseline(),
        seed,
        &mut observer,
    )
}
