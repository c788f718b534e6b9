//! The hybrid solver: Ant System plus per-ant steepest 2-opt, a descent-driven
//! reinforcement scalar added to the best tour's edges, stagnation restarts,
//! and pheromone adaptation for dynamic events.
//!
//! The reinforcement scalar follows `x <- x - t * g` where `g` is the
//! relative change of the colony-best length between iterations. An
//! improving iteration makes `g` negative and so grows `x`; a worsening one
//! shrinks it. `x` is clamped to `[0, x_max]`.

use crate::aco::{AcoParams, PheromoneMatrix, RunResult};
use crate::error::{Error, Result};
use crate::instance::{DynamicEvent, EventKind, EventSchedule, Instance, Tour};
use crate::solver::{self, ColonyConfig, IterationView, LocalSearch};

/// Colony-best lengths within this of each other count as unchanged.
pub const STAGNATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridParams {
    pub aco: AcoParams,
    /// Step of the reinforcement recurrence.
    pub t: f64,
    /// Iterations of unchanged colony-best before pheromone is reset;
    /// `None` disables restarts.
    pub stagnation_window: Option<usize>,
    /// Ceiling on the reinforcement scalar; `None` means `tau_max / 10`.
    pub x_max: Option<f64>,
    /// Improve only the iteration-best tour instead of every ant's.
    pub best_only_local_search: bool,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            aco: AcoParams::default(),
            t: 0.4,
            stagnation_window: Some(15),
            x_max: None,
            best_only_local_search: false,
        }
    }
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        self.aco.validate()?;
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t must be >= 0, got {}",
                self.t
            )));
        }
        if let Some(w) = self.stagnation_window {
            if w < 2 {
                return Err(Error::InvalidArgument(format!(
                    "stagnation window must be >= 2, got {w}"
                )));
            }
        }
        if let Some(x) = self.x_max {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "x_max must be > 0, got {x}"
                )));
            }
        }
        Ok(())
    }

    pub fn x_max_for(&self, tau_max: f64) -> f64 {
        self.x_max.unwrap_or(tau_max / 10.0)
    }
}

/// The reinforcement scalar and the colony-best length it was last updated
/// with.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientTermState {
    pub x: f64,
    pub prev_best_length: Option<f64>,
}

impl GradientTermState {
    pub fn reinforced(&self, new_best_length: f64, t: f64, x_max: f64) -> Result<Self> {
        gradient_reinforcement(self, new_best_length, t, x_max)
    }
}

/// One step of `x <- clamp(x - t * g, 0, x_max)` with
/// `g = (new - prev) / prev` (0 before the first observation).
pub fn gradient_reinforcement(
    state: &GradientTermState,
    new_best_length: f64,
    t: f64,
    x_max: f64,
) -> Result<GradientTermState> {
    if !(new_best_length > 0.0 && new_best_length.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "best length must be positive, got {new_best_length}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    let g = state
        .prev_best_length
        .map_or(0.0, |prev| (new_best_length - prev) / prev);
    let x = (state.x - t * g).clamp(0.0, x_max);
    Ok(GradientTermState {
        x,
        prev_best_length: Some(new_best_length),
    })
}

/// Evaporation, per-ant deposit, plus `state.x` on every edge of
/// `best_tour`; all entries end within `[tau_min, tau_max]`.
pub fn hybrid_pheromone_update(
    ph: &PheromoneMatrix,
    tours: &[Tour],
    best_tour: &Tour,
    params: &HybridParams,
    state: &GradientTermState,
) -> Result<PheromoneMatrix> {
    let mut out = ph.clone();
    update_in_place(&mut out, tours, best_tour, &params.aco, state.x)?;
    Ok(out)
}

pub(crate) fn update_in_place(
    ph: &mut PheromoneMatrix,
    tours: &[Tour],
    best_tour: &Tour,
    aco: &AcoParams,
    x: f64,
) -> Result<()> {
    crate::instance::check_permutation(ph.n(), best_tour.order())?;
    ph.evaporate(aco.rho)?;
    ph.deposit(tours, aco.q)?;
    ph.add_along(best_tour, x);
    ph.clamp();
    Ok(())
}

/// Whether the last `window` colony-best lengths are all equal.
pub fn detect_stagnation(history: &[f64], window: usize) -> bool {
    if window < 2 || history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo <= STAGNATION_EPS
}

/// Uniform `tau0` pheromone and a zero reinforcement scalar. The previous
/// best length is kept.
pub fn reinit_pheromone(
    ph: &PheromoneMatrix,
    tau0: f64,
    state: &GradientTermState,
) -> (PheromoneMatrix, GradientTermState) {
    let mut out = ph.clone();
    out.fill(tau0.clamp(out.tau_min(), out.tau_max()));
    (
        out,
        GradientTermState {
            x: 0.0,
            prev_best_length: state.prev_best_length,
        },
    )
}

/// Applies the event to the instance and reshapes the pheromone to match:
/// removed cities lose their row and column, inserted or moved cities get
/// `tau0` on every incident edge; other entries are untouched.
pub fn handle_dynamic_event(
    ph: &PheromoneMatrix,
    inst: &Instance,
    ev: &DynamicEvent,
    tau0: f64,
) -> Result<(PheromoneMatrix, Instance)> {
    if ph.n() != inst.len() {
        return Err(Error::InvalidArgument(format!(
            "pheromone is {}x{} but the instance has {} cities",
            ph.n(),
            ph.n(),
            inst.len()
        )));
    }
    let next = crate::instance::apply_event(inst, ev)?;
    let mut ph = ph.clone();
    match ev.kind {
        EventKind::Insert(_) => ph.push_city(tau0),
        EventKind::Remove(id) => {
            ph.remove_city(inst.position_of(id).expect("validated by apply_event"))
        }
        EventKind::Move { id, .. } => ph.reset_city(
            inst.position_of(id).expect("validated by apply_event"),
            tau0,
        ),
    }
    Ok((ph, next))
}

pub fn run_hybrid(
    inst: &Instance,
    schedule: &EventSchedule,
    params: &HybridParams,
    seed: u64,
) -> Result<RunResult> {
    run_hybrid_observed(inst, schedule, params, seed, |_| {})
}

/// [`run_hybrid`] with a callback after every iteration.
pub fn run_hybrid_observed(
    inst: &Instance,
    schedule: &EventSchedule,
    params: &HybridParams,
    seed: u64,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<RunResult> {
    params.validate()?;
    let cfg = ColonyConfig {
        local_search: if params.best_only_local_search {
            LocalSearch::BestOnly
        } else {
            LocalSearch::AllAnts
        },
        reinforcement: Some((params.t, params.x_max)),
        stagnation_window: params.stagnation_window,
    };
    solver::run(inst, schedule, &params.aco, &cfg, seed, &mut observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aco::{deposit, evaporate, init_pheromone, run_aco};
    use crate::instance::{generate_random_instance, City};

    #[test]
    fn reinforcement_arithmetic() {
        let s = GradientTermState {
            x: 0.0,
            prev_best_length: Some(400.0),
        };
        let next = gradient_reinforcement(&s, 360.0, 0.4, 10.0).unwrap();
        assert!((next.x - 0.04).abs() < 1e-15);
        assert_eq!(next.prev_best_length, Some(360.0));

        let same = gradient_reinforcement(&next, 360.0, 0.4, 10.0).unwrap();
        assert_eq!(same.x, next.x);

        let worse = GradientTermState {
            x: 0.05,
            prev_best_length: Some(300.0),
        };
        assert_eq!(
            gradient_reinforcement(&worse, 600.0, 0.4, 10.0).unwrap().x,
            0.0
        );

        let first =
            gradient_reinforcement(&GradientTermState::default(), 500.0, 0.4, 10.0).unwrap();
        assert_eq!(first.x, 0.0);
        assert!(gradient_reinforcement(&first, 0.0, 0.4, 10.0).is_err());
        assert!(gradient_reinforcement(&first, 10.0, -1.0, 10.0).is_err());
    }

    #[test]
    fn reinforcement_upper_clamp() {
        let s = GradientTermState {
            x: 9.9,
            prev_best_length: Some(100.0),
        };
        assert_eq!(gradient_reinforcement(&s, 10.0, 0.4, 10.0).unwrap().x, 10.0);
    }

    fn setup(n: usize) -> (Instance, Vec<Tour>) {
        let inst = generate_random_instance(n, (100.0, 100.0), 9).unwrap();
        let tours = (0..3)
            .map(|k| {
                let mut order: Vec<usize> = (0..n).collect();
                order.rotate_left(k);
                order.swap(1, n - 1 - k);
                Tour::new(&inst, order).unwrap()
            })
            .collect();
        (inst, tours)
    }

    #[test]
    fn zero_reinforcement_matches_the_baseline_update() {
        let (_, tours) = setup(8);
        let ph = init_pheromone(8, 0.7, 100.0).unwrap();
        let params = HybridParams::default();
        let hybrid =
            hybrid_pheromone_update(&ph, &tours, &tours[1], &params, &Default::default()).unwrap();
        let baseline = deposit(&evaporate(&ph, 0.1).unwrap(), &tours, 100.0).unwrap();
        assert_eq!(hybrid, baseline);
    }

    #[test]
    fn single_ant_update_arithmetic() {
        // one ant whose tour is also the best, L = Q = 100, x = 0.04
        let inst = Instance::new(
            (0..4)
                .map(|i| {
                    City::new(
                        i,
                        [0.0, 25.0, 25.0, 0.0][i as usize],
                        [0.0, 0.0, 25.0, 25.0][i as usize],
                    )
                })
                .collect(),
            Default::default(),
        )
        .unwrap();
        let tour = Tour::new(&inst, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(tour.length(), 100.0);
        let ph = init_pheromone(4, 1.0, 100.0).unwrap();
        let state = GradientTermState {
            x: 0.04,
            prev_best_length: Some(100.0),
        };
        let out = hybrid_pheromone_update(
            &ph,
            std::slice::from_ref(&tour),
            &tour,
            &HybridParams::default(),
            &state,
        )
        .unwrap();
        assert!((out.get(0, 1) - 1.94).abs() < 1e-12);
        assert!((out.get(0, 2) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn reinforcement_hits_the_ceiling_exactly() {
        let (_, tours) = setup(6);
        let ph = init_pheromone(6, 9.99, 10.0).unwrap();
        let state = GradientTermState {
            x: 5.0,
            prev_best_length: None,
        };
        let params = HybridParams {
            aco: AcoParams {
                tau_max: Some(10.0),
                ..AcoParams::default()
            },
            ..HybridParams::default()
        };
        let out = hybrid_pheromone_update(&ph, &tours, &tours[0], &params, &state).unwrap();
        let o = tours[0].order();
        assert_eq!(out.get(o[0], o[1]), 10.0);
        assert!(out.is_consistent());
    }

    #[test]
    fn stagnation_detection() {
        assert!(detect_stagnation(&[350.0, 350.0, 350.0], 3));
        assert!(!detect_stagnation(&[350.0, 349.99, 350.0], 3));
        assert!(!detect_stagnation(&[350.0, 350.0], 3));
        assert!(detect_stagnation(&[400.0, 350.0, 350.0], 2));
    }

    #[test]
    fn reinit_resets_and_is_idempotent() {
        let (_, tours) = setup(6);
        let mut ph = init_pheromone(6, 0.5, 100.0).unwrap();
        ph.deposit(&tours, 100.0).unwrap();
        let state = GradientTermState {
            x: 3.0,
            prev_best_length: Some(321.0),
        };
        let (once, s1) = reinit_pheromone(&ph, 0.5, &state);
        let (twice, s2) = reinit_pheromone(&once, 0.5, &s1);
        assert_eq!(once, init_pheromone(6, 0.5, 100.0).unwrap());
        assert_eq!(once, twice);
        assert_eq!(s1, s2);
        assert_eq!(s1.x, 0.0);
        assert_eq!(s1.prev_best_length, Some(321.0));
    }

    #[test]
    fn dynamic_event_pheromone_locality() {
        let inst = generate_random_instance(4, (10.0, 10.0), 1).unwrap();
        let mut ph = init_pheromone(4, 0.5, 100.0).unwrap();
        ph.set(0, 1, 7.0);
        ph.set(2, 3, 3.0);

        let ins = DynamicEvent {
            at_iteration: 1,
            kind: EventKind::Insert(City::new(9, 5.0, 5.5)),
        };
        let (grown, inst5) = handle_dynamic_event(&ph, &inst, &ins, 0.25).unwrap();
        assert_eq!((grown.n(), inst5.len()), (5, 5));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(grown.get(i, j).to_bits(), ph.get(i, j).to_bits());
            }
            assert_eq!(grown.get(i, 4), 0.25);
        }

        let rm = DynamicEvent {
            at_iteration: 1,
            kind: EventKind::Remove(1),
        };
        let (shrunk, inst3) = handle_dynamic_event(&ph, &inst, &rm, 0.25).unwrap();
        assert_eq!((shrunk.n(), inst3.len()), (3, 3));
        // old positions 2, 3 are now 1, 2
        assert_eq!(shrunk.get(1, 2), 3.0);
        assert_eq!(shrunk.get(0, 1), 0.5);

        let mv = DynamicEvent {
            at_iteration: 1,
            kind: EventKind::Move {
                id: 0,
                x: 9.0,
                y: 9.5,
            },
        };
        let (moved, _) = handle_dynamic_event(&ph, &inst, &mv, 0.25).unwrap();
        assert_eq!(moved.get(0, 1), 0.25);
        assert_eq!(moved.get(1, 0), 0.25);
        assert_eq!(moved.get(2, 3), 3.0);

        let bad = DynamicEvent {
            at_iteration: 1,
            kind: EventKind::Remove(42),
        };
        assert!(matches!(
            handle_dynamic_event(&ph, &inst, &bad, 0.25),
            Err(Error::EventApplication(_))
        ));
    }

    #[test]
    fn zero_step_without_restarts_is_aco_plus_local_search() {
        let inst = generate_random_instance(15, (100.0, 100.0), 21).unwrap();
        let aco = AcoParams {
            max_iters: 25,
            ..AcoParams::default()
        };
        let params = HybridParams {
            aco: aco.clone(),
            t: 0.0,
            stagnation_window: None,
            ..HybridParams::default()
        };
        let hybrid = run_hybrid(&inst, &EventSchedule::empty(), &params, 4).unwrap();
        let baseline_ls = solver::run(
            &inst,
            &EventSchedule::empty(),
            &aco,
            &ColonyConfig {
                local_search: LocalSearch::AllAnts,
                reinforcement: None,
                stagnation_window: None,
            },
            4,
            &mut |_| {},
        )
        .unwrap();
        assert_eq!(
            hybrid.best_length_per_iter,
            baseline_ls.best_length_per_iter
        );
        assert_eq!(hybrid.best_tour, baseline_ls.best_tour);
        // and plain ACO is a different run
        let plain = run_aco(&inst, &EventSchedule::empty(), &aco, 4).unwrap();
        assert_eq!(plain.best_length_per_iter.len(), 25);
    }

    #[test]
    fn parameter_validation() {
        assert!(HybridParams {
            t: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HybridParams {
            stagnation_window: Some(1),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HybridParams {
            x_max: Some(0.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(HybridParams::default().x_max_for(100.0), 10.0);
    }
}
