//! Small dense convex solver and exact max-weight assignment.
//!
//! Programs are tiny (a few dozen variables), so [`solve_convex`] runs a
//! log-barrier method whose centering steps are damped Newton steps. The
//! Newton matrix combines the exact barrier outer products with curvature
//! obtained by differencing the analytic gradients of each oracle.

mod assignment;
mod barrier;

pub use assignment::{assignment_weight, solve_assignment};
pub use barrier::solve_convex;

/// Smooth scalar function with an analytic gradient.
pub trait Differentiable: Send + Sync {
    /// Returns `f(x)` and writes `∇f(x)` into `grad` (same length as `x`).
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.eval(x, &mut g)
    }

    /// Affine functions skip the curvature estimate.
    fn is_affine(&self) -> bool {
        false
    }
}

impl<F> Differentiable for F
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

/// Sparse affine function `c + Σ a_k x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn new(constant: f64, terms: Vec<(usize, f64)>) -> Self {
        Self { constant, terms }
    }
}

impl Differentiable for Affine {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut v = self.constant;
        for &(k, a) in &self.terms {
            v += a * x[k];
            grad[k] += a;
        }
        v
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// Inequality `func(x) ≤ 0`, labelled for diagnostics.
pub struct Constraint {
    pub label: String,
    pub func: Box<dyn Differentiable>,
}

impl Constraint {
    pub fn new(label: impl Into<String>, func: impl Differentiable + 'static) -> Self {
        Self {
            label: label.into(),
            func: Box::new(func),
        }
    }
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Constraint")
            .field("label", &self.label)
            .finish()
    }
}

/// `minimize f(x)` subject to `g_k(x) ≤ 0` and `lower ≤ x ≤ upper`.
/// Infinite bounds are allowed.
pub struct ConvexProgram {
    pub dim: usize,
    pub objective: Box<dyn Differentiable>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
}

impl ConvexProgram {
    /// Largest violation of any inequality or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for c in &self.constraints {
            v = v.max(c.func.value(x));
        }
        for ((xi, lo), hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            v = v.max(lo - xi).max(xi - hi);
        }
        v.max(0.0)
    }
}

impl std::fmt::Debug for ConvexProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexProgram")
            .field("dim", &self.dim)
            .field("constraints", &self.constraints)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub point: Vec<f64>,
    pub objective_value: f64,
    /// Objective at the (possibly restored) starting point.
    pub start_objective: f64,
    pub max_constraint_violation: f64,
    /// Newton iterations spent, restoration included.
    pub iterations: usize,
    /// Barrier duality gap `m/t` at the returned point.
    pub duality_gap: f64,
    /// True when the start violated a constraint and restoration ran.
    pub restored: bool,
    pub converged: bool,
}

/// Largest relative mismatch between the analytic gradient and a central
/// difference, `max_k |g_k − ĝ_k| / (1 + |ĝ_k|)`. Coordinate `k` is stepped
/// by `h (1 + |x_k|)` so large coordinates do not drown in rounding.
pub fn check_gradient(oracle: &dyn Differentiable, point: &[f64], h: f64) -> f64 {
    let n = point.len();
    let mut analytic = vec![0.0; n];
    oracle.eval(point, &mut analytic);
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let orig = x[k];
        let step = h * (1.0 + orig.abs());
        x[k] = orig + step;
        let fp = oracle.value(&x);
        x[k] = orig - step;
        let fm = oracle.value(&x);
        x[k] = orig;
        let numeric = (fp - fm) / (2.0 * step);
        worst = worst.max((analytic[k] - numeric).abs() / (1.0 + numeric.abs()));
    }
    worst
}
