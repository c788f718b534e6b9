//! The iteration loop shared by the baseline and hybrid solvers.

use rayon::prelude::*;

use crate::aco::{construct_colony, AcoParams, PheromoneMatrix, RunResult};
use crate::error::{Error, Result};
use crate::hybrid::{
    detect_stagnation, handle_dynamic_event, reinit_pheromone, update_in_place, GradientTermState,
};
use crate::instance::{EventSchedule, Instance, Tour};
use crate::localsearch::{default_max_rounds, steepest_descent_improve};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LocalSearch {
    Off,
    AllAnts,
    BestOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ColonyConfig {
    pub local_search: LocalSearch,
    /// `(t, x_max)`; `None` keeps the plain evaporate-then-deposit update.
    pub reinforcement: Option<(f64, Option<f64>)>,
    pub stagnation_window: Option<usize>,
}

impl ColonyConfig {
    pub(crate) fn baseline() -> Self {
        ColonyConfig {
            local_search: LocalSearch::Off,
            reinforcement: None,
            stagnation_window: None,
        }
    }
}

/// State visible to an observer at the end of an iteration.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub instance: &'a Instance,
    /// Tours as sampled, before any local search.
    pub constructed: &'a [Tour],
    /// Tours after local search (identical to `constructed` for the
    /// baseline).
    pub tours: &'a [Tour],
    pub best_so_far: &'a Tour,
    pub pheromone: &'a PheromoneMatrix,
    pub reinforcement: f64,
    /// Whether the city set changed at the start of this iteration.
    pub city_set_changed: bool,
    pub reinitialized: bool,
}

fn colony_best(tours: &[Tour]) -> usize {
    // first minimum wins
    (1..tours.len()).fold(0, |best, k| {
        if tours[k].length() < tours[best].length() {
            k
        } else {
            best
        }
    })
}

pub(crate) fn run(
    base: &Instance,
    schedule: &EventSchedule,
    params: &AcoParams,
    cfg: &ColonyConfig,
    seed: u64,
    observer: &mut dyn FnMut(&IterationView<'_>),
) -> Result<RunResult> {
    let resolved = params.resolve(base)?;
    if cfg.reinforcement.is_some() && resolved.tau0 >= resolved.tau_max {
        return Err(Error::InvalidArgument(format!(
            "tau_max {} must exceed tau0 {}",
            resolved.tau_max, resolved.tau0
        )));
    }
    let tau0 = resolved.tau0;
    let x_max = cfg
        .reinforcement
        .map(|(_, x_max)| x_max.unwrap_or(resolved.tau_max / 10.0));

    let mut inst = base.clone();
    let mut ph = PheromoneMatrix::new(inst.len(), tau0, resolved.tau_max)?;
    let mut best: Option<Tour> = None;
    let mut state = GradientTermState::default();
    let mut history: Vec<f64> = Vec::new();
    let mut trace = Vec::with_capacity(params.max_iters);
    let mut reinits = Vec::new();

    for iteration in 1..=params.max_iters {
        let mut city_set_changed = false;
        for ev in schedule.due(iteration) {
            let (p, i) = handle_dynamic_event(&ph, &inst, ev, tau0)?;
            ph = p;
            inst = i;
            if ev.kind.changes_city_set() {
                city_set_changed = true;
                best = None;
                state.prev_best_length = None;
                history.clear();
            } else if let Some(b) = best.as_mut() {
                *b = b.recomputed(&inst)?;
            }
        }

        let constructed = construct_colony(&inst, &ph, params, resolved.ants, seed, iteration);
        let max_rounds = default_max_rounds(inst.len());
        let tours: Vec<Tour> = match cfg.local_search {
            LocalSearch::Off => constructed.clone(),
            LocalSearch::AllAnts => constructed
                .par_iter()
                .map(|t| steepest_descent_improve(&inst, t, max_rounds))
                .collect(),
            LocalSearch::BestOnly => {
                let k = colony_best(&constructed);
                let mut tours = constructed.clone();
                tours[k] = steepest_descent_improve(&inst, &tours[k], max_rounds);
                tours
            }
        };

        let iter_best = &tours[colony_best(&tours)];
        if best
            .as_ref()
            .is_none_or(|b| iter_best.length() < b.length())
        {
            best = Some(iter_best.clone());
        }
        let best_tour = best.as_ref().expect("set above");

        let mut reinitialized = false;
        match cfg.reinforcement {
            None => {
                ph.evaporate(params.rho)?;
                ph.deposit(&tours, params.q)?;
            }
            Some((t, _)) => {
                state = state.reinforced(iter_best.length(), t, x_max.expect("set with t"))?;
                update_in_place(&mut ph, &tours, best_tour, params, state.x)?;
            }
        }
        if let Some(window) = cfg.stagnation_window {
            history.push(iter_best.length());
            if detect_stagnation(&history, window) {
                (ph, state) = reinit_pheromone(&ph, tau0, &state);
                history.clear();
                reinits.push(iteration);
                reinitialized = true;
            }
        }

        trace.push(best_tour.length());
        observer(&IterationView {
            iteration,
            instance: &inst,
            constructed: &constructed,
            tours: &tours,
            best_so_far: best_tour,
            pheromone: &ph,
            reinforcement: state.x,
            city_set_changed,
            reinitialized,
        });
    }

    Ok(RunResult {
        best_tour: best.expect("max_iters >= 1"),
        best_length_per_iter: trace,
        iterations: params.max_iters,
        seed,
        final_instance: inst,
        reinit_iterations: reinits,
    })
}
