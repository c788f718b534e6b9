//! Steepest-descent tour improvement with 2-opt reconnections.
//!
//! Removing two edges of a closed tour and reconnecting it so that every
//! city is still visited once leaves exactly one alternative: reverse the
//! segment between them. Each round takes the reconnection with the largest
//! length decrease; the procedure stops when none improves.

use crate::error::{Error, Result};
use crate::instance::{Instance, Tour};

/// Moves must shorten the tour by more than this to count as improving.
pub const IMPROVEMENT_EPS: f64 = 1e-9;

/// Reverse `order[i + 1..=j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconnectMove {
    pub i: usize,
    pub j: usize,
    /// Length after minus length before.
    pub delta: f64,
}

/// Length change of reversing `order[i + 1..=j]`, from the four touched
/// edges.
#[inline]
pub fn move_delta(inst: &Instance, order: &[usize], i: usize, j: usize) -> f64 {
    let n = order.len();
    let (a, b) = (order[i], order[i + 1]);
    let (c, d) = (order[j], order[(j + 1) % n]);
    inst.dist(a, c) + inst.dist(b, d) - inst.dist(a, b) - inst.dist(c, d)
}

pub fn apply_2opt_move(tour: &Tour, mv: &ReconnectMove, inst: &Instance) -> Result<Tour> {
    let n = tour.len();
    if n != inst.len() {
        return Err(Error::InvalidArgument(format!(
            "tour has {n} cities, instance {}",
            inst.len()
        )));
    }
    if !(mv.i < mv.j && mv.j < n) {
        return Err(Error::InvalidArgument(format!(
            "move ({}, {}) invalid for a {n}-city tour",
            mv.i, mv.j
        )));
    }
    let mut order = tour.order().to_vec();
    order[mv.i + 1..=mv.j].reverse();
    Tour::new(inst, order)
}

/// The most improving 2-opt move, or `None` if no move shortens the tour by
/// more than [`IMPROVEMENT_EPS`]. Ties go to the lexicographically smallest
/// `(i, j)`.
pub fn best_reconnection(inst: &Instance, tour: &Tour) -> Option<ReconnectMove> {
    let order = tour.order();
    let n = order.len();
    if n < 4 {
        return None;
    }
    let mut best: Option<ReconnectMove> = None;
    for i in 0..n - 1 {
        for j in (i + 2)..n {
            let delta = move_delta(inst, order, i, j);
            if delta < best.map_or(-IMPROVEMENT_EPS, |m| m.delta) {
                best = Some(ReconnectMove { i, j, delta });
            }
        }
    }
    best
}

pub fn default_max_rounds(n: usize) -> usize {
    10 * n
}

/// Applies [`best_reconnection`] until it returns `None` or `max_rounds`
/// moves have been made.
pub fn steepest_descent_improve(inst: &Instance, tour: &Tour, max_rounds: usize) -> Tour {
    let mut current = tour.clone();
    for _ in 0..max_rounds {
        let Some(mv) = best_reconnection(inst, &current) else {
            break;
        };
        let mut order = current.order().to_vec();
        order[mv.i + 1..=mv.j].reverse();
        let length = inst.cycle_length(&order);
        current = Tour::from_parts(order, length);
    }
    current
}

/// True when no 2-opt move improves the tour, checked by full
/// recomputation rather than the incremental delta.
pub fn is_two_opt_minimal(inst: &Instance, tour: &Tour) -> bool {
    let n = tour.len();
    let base = tour.length();
    (0..n).all(|i| {
        ((i + 1)..n).all(|j| {
            let mut order = tour.order().to_vec();
            order[i + 1..=j].reverse();
            inst.cycle_length(&order) - base >= -IMPROVEMENT_EPS
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random_instance, City, DistanceConvention};
    use std::f64::consts::SQRT_2;

    fn square() -> Instance {
        // A, B, C, D at positions 0..4
        Instance::new(
            vec![
                City::new(0, 0.0, 0.0),
                City::new(1, 1.0, 0.0),
                City::new(2, 1.0, 1.0),
                City::new(3, 0.0, 1.0),
            ],
            DistanceConvention::Euclidean,
        )
        .unwrap()
    }

    fn crossed(inst: &Instance) -> Tour {
        Tour::new(inst, vec![0, 2, 1, 3]).unwrap()
    }

    #[test]
    fn uncrossing_the_square() {
        let inst = square();
        let t = crossed(&inst);
        let mv = best_reconnection(&inst, &t).unwrap();
        assert_eq!((mv.i, mv.j), (0, 2));
        assert!((mv.delta - (4.0 - (2.0 + 2.0 * SQRT_2))).abs() < 1e-12);
        let fixed = apply_2opt_move(&t, &mv, &inst).unwrap();
        assert_eq!(fixed.order(), &[0, 1, 2, 3]);
        assert_eq!(fixed.length(), 4.0);
        assert!((fixed.length() - (t.length() + mv.delta)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_moves_are_identities() {
        let inst = generate_random_instance(7, (10.0, 10.0), 2).unwrap();
        let t = Tour::new(&inst, (0..7).collect()).unwrap();
        let single = ReconnectMove {
            i: 2,
            j: 3,
            delta: 0.0,
        };
        assert_eq!(apply_2opt_move(&t, &single, &inst).unwrap(), t);
        assert!(move_delta(&inst, t.order(), 2, 3).abs() < 1e-12);
        let full = ReconnectMove {
            i: 0,
            j: 6,
            delta: 0.0,
        };
        let rev = apply_2opt_move(&t, &full, &inst).unwrap();
        assert!((rev.length() - t.length()).abs() < 1e-12);
        assert!(move_delta(&inst, t.order(), 0, 6).abs() < 1e-12);
    }

    #[test]
    fn invalid_moves() {
        let inst = square();
        let t = crossed(&inst);
        for (i, j) in [(2, 2), (3, 1), (0, 4)] {
            assert!(apply_2opt_move(&t, &ReconnectMove { i, j, delta: 0.0 }, &inst).is_err());
        }
    }

    #[test]
    fn optimal_and_tiny_tours_have_no_move() {
        let inst = square();
        assert!(best_reconnection(&inst, &Tour::new(&inst, vec![0, 1, 2, 3]).unwrap()).is_none());
        let tri = generate_random_instance(3, (1.0, 1.0), 0).unwrap();
        assert!(best_reconnection(&tri, &Tour::new(&tri, vec![0, 1, 2]).unwrap()).is_none());
    }

    #[test]
    fn improve_square_and_fixpoint() {
        let inst = square();
        let out = steepest_descent_improve(&inst, &crossed(&inst), 40);
        assert_eq!(out.length(), 4.0);
        let again = steepest_descent_improve(&inst, &out, 40);
        assert_eq!(again, out);
    }

    #[test]
    fn zero_rounds_returns_input() {
        let inst = square();
        assert_eq!(
            steepest_descent_improve(&inst, &crossed(&inst), 0),
            crossed(&inst)
        );
    }

    #[test]
    fn eight_city_descent_reaches_a_local_minimum() {
        for seed in 0..5 {
            let inst = generate_random_instance(8, (100.0, 100.0), seed).unwrap();
            let start = Tour::new(&inst, vec![3, 7, 0, 5, 1, 6, 2, 4]).unwrap();
            let out = steepest_descent_improve(&inst, &start, default_max_rounds(8));
            out.validate(&inst).unwrap();
            assert!(out.length() <= start.length());
            assert!(is_two_opt_minimal(&inst, &out));
        }
    }
}
