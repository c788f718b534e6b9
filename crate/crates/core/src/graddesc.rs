//! Steepest-descent minimizer for differentiable scalar fields, with random
//! restarts and a combined value-change/gradient stopping rule.
//!
//! The same recurrence `x <- x - t * grad f(x)` drives the reinforcement
//! scalar in [`crate::hybrid`]; this module is its standalone, testable form.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// A descent is abandoned (not failed) once `|f|` grows past this.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

pub trait ScalarField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
}

/// Step size schedule for successive iterations `n = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Fixed(f64),
    /// `gamma_n = 1 / n`.
    Decreasing,
}

impl StepSchedule {
    pub fn step(&self, n: usize) -> f64 {
        match *self {
            StepSchedule::Fixed(t) => t,
            StepSchedule::Decreasing => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub step: StepSchedule,
    pub epsilon: f64,
    pub max_iters: usize,
    pub restarts: usize,
    /// Per-coordinate `(lo, hi)` sampling range for starting points. A range
    /// with `lo == hi` pins that coordinate.
    pub init_box: Vec<(f64, f64)>,
}

impl DescentConfig {
    pub fn new(init_box: Vec<(f64, f64)>) -> Self {
        DescentConfig {
            step: StepSchedule::Fixed(0.4),
            epsilon: 1e-6,
            max_iters: 10_000,
            restarts: 3,
            init_box,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let StepSchedule::Fixed(t) = self.step {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "step must be >= 0, got {t}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if self.init_box.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "init_box has {} ranges for a {dim}-dimensional field",
                self.init_box.len()
            )));
        }
        if self.init_box.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidArgument("init_box range with lo > hi".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Steps taken by the restart that produced `best_x`.
    pub iterations_used: usize,
    /// Whether that restart stopped on the tolerance rather than the cap.
    pub converged: bool,
    /// Final objective value of each restart, in restart order.
    pub restart_finals: Vec<f64>,
}

/// `x - step * g`.
pub fn descend_step(x: &[f64], g: &[f64], step: f64) -> Result<Vec<f64>> {
    if x.len() != g.len() {
        return Err(Error::InvalidArgument(format!(
            "point has {} components, gradient {}",
            x.len(),
            g.len()
        )));
    }
    if !(step >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be >= 0, got {step}"
        )));
    }
    Ok(x.iter().zip(g).map(|(xi, gi)| xi - step * gi).collect())
}

/// Every partial derivative within `epsilon` of zero.
pub fn stop_by_gradient(g: &[f64], epsilon: f64) -> bool {
    g.iter().all(|gi| gi.abs() <= epsilon)
}

/// Central-difference gradient estimate.
pub fn finite_difference_gradient<F: ScalarField + ?Sized>(
    field: &F,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be > 0, got {h}")));
    }
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = field.eval(&probe);
            probe[i] = x[i] - h;
            let down = field.eval(&probe);
            probe[i] = x[i];
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NumericalFailure {
                    point: x.to_vec(),
                    message: format!("non-finite evaluation probing coordinate {i}"),
                });
            }
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

struct Restart {
    best_x: Vec<f64>,
    best_f: f64,
    final_f: f64,
    iterations: usize,
    converged: bool,
}

fn descend_from<F: ScalarField + ?Sized>(
    field: &F,
    cfg: &DescentConfig,
    x0: Vec<f64>,
) -> Result<Restart> {
    let failure = |x: &[f64], what: &str| Error::NumericalFailure {
        point: x.to_vec(),
        message: what.to_string(),
    };

    let mut x = x0;
    let mut f = field.eval(&x);
    if !f.is_finite() {
        return Err(failure(&x, "non-finite objective"));
    }
    let mut best = (x.clone(), f);
    let mut prev_f: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let g = field.grad(&x);
        if g.len() != x.len() {
            return Err(Error::InvalidArgument(format!(
                "gradient has {} components, field dimension {}",
                g.len(),
                x.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(failure(&x, "non-finite gradient"));
        }
        let value_settled = prev_f.is_none_or(|p| (f - p).abs() <= cfg.epsilon);
        if value_settled && stop_by_gradient(&g, cfg.epsilon) {
            converged = true;
            break;
        }
        if iterations == cfg.max_iters {
            break;
        }
        iterations += 1;
        x = descend_step(&x, &g, cfg.step.step(iterations))?;
        prev_f = Some(f);
        f = field.eval(&x);
        if !f.is_finite() {
            return Err(failure(&x, "non-finite objective"));
        }
        if f < best.1 {
            best = (x.clone(), f);
        }
        if f.abs() > DIVERGENCE_LIMIT {
            break;
        }
    }

    Ok(Restart {
        best_x: best.0,
        best_f: best.1,
        final_f: f,
        iterations,
        converged,
    })
}

/// Runs `1 + cfg.restarts` descents from seeded random starting points and
/// returns the lowest point seen. Ties go to the earliest restart.
pub fn minimize<F: ScalarField + ?Sized>(
    field: &F,
    cfg: &DescentConfig,
    seed: u64,
) -> Result<DescentResult> {
    cfg.validate(field.dim())?;
    let mut winner: Option<Restart> = None;
    let mut restart_finals = Vec::with_capacity(cfg.restarts + 1);
    for r in 0..=cfg.restarts {
        let mut rng = rng::stream(seed, &[r as u64]);
        let x0 = cfg
            .init_box
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
            .collect();
        let run = descend_from(field, cfg, x0)?;
        restart_finals.push(run.final_f);
        if winner.as_ref().is_none_or(|w| run.best_f < w.best_f) {
            winner = Some(run);
        }
    }
    let w = winner.expect("at least one restart");
    Ok(DescentResult {
        best_x: w.best_x,
        best_f: w.best_f,
        iterations_used: w.iterations,
        converged: w.converged,
        restart_finals,
    })
}

/// Scalar fields with analytic gradients, used as test objectives.
pub mod fields {
    use super::ScalarField;

    /// `c * (x - a)^2` in one dimension.
    #[derive(Debug, Clone, Copy)]
    pub struct Quadratic {
        pub c: f64,
        pub a: f64,
    }

    impl ScalarField for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64]) -> f64 {
            self.c * (x[0] - self.a).powi(2)
        }
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            vec![2.0 * self.c * (x[0] - self.a)]
        }
    }

    /// `sum_i w_i x_i`.
    #[derive(Debug, Clone)]
    pub struct Linear {
        pub weights: Vec<f64>,
    }

    impl ScalarField for Linear {
        fn dim(&self) -> usize {
            self.weights.len()
        }
        fn eval(&self, x: &[f64]) -> f64 {
            self.weights.iter().zip(x).map(|(w, xi)| w * xi).sum()
        }
        fn grad(&self, _x: &[f64]) -> Vec<f64> {
            self.weights.clone()
        }
    }

    /// `x^3`.
    #[derive(Debug, Clone, Copy)]
    pub struct Cubic;

    impl ScalarField for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64]) -> f64 {
            x[0].powi(3)
        }
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            vec![3.0 * x[0] * x[0]]
        }
    }

    /// `(a - x)^2 + b (y - x^2)^2`.
    #[derive(Debug, Clone, Copy)]
    pub struct Rosenbrock {
        pub a: f64,
        pub b: f64,
    }

    impl Default for Rosenbrock {
        fn default() -> Self {
            Rosenbrock { a: 1.0, b: 100.0 }
        }
    }

    impl ScalarField for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, p: &[f64]) -> f64 {
            let (x, y) = (p[0], p[1]);
            (self.a - x).powi(2) + self.b * (y - x * x).powi(2)
        }
        fn grad(&self, p: &[f64]) -> Vec<f64> {
            let (x, y) = (p[0], p[1]);
            vec![
                -2.0 * (self.a - x) - 4.0 * self.b * x * (y - x * x),
                2.0 * self.b * (y - x * x),
            ]
        }
    }

    /// `sum_i (x_i - c_i)^2`.
    #[derive(Debug, Clone)]
    pub struct Sphere {
        pub center: Vec<f64>,
    }

    impl ScalarField for Sphere {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn eval(&self, x: &[f64]) -> f64 {
            x.iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c).powi(2))
                .sum()
        }
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            x.iter()
                .zip(&self.center)
                .map(|(a, c)| 2.0 * (a - c))
                .collect()
        }
    }

    /// A field built from two closures.
    pub struct FnField<E, G> {
        pub dim: usize,
        pub eval: E,
        pub grad: G,
    }

    impl<E, G> ScalarField for FnField<E, G>
    where
        E: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        fn dim(&self) -> usize {
            self.dim
        }
        fn eval(&self, x: &[f64]) -> f64 {
            (self.eval)(x)
        }
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            (self.grad)(x)
        }
    }
}
