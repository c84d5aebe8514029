use nalgebra::{DMatrix, DVector};

use super::{ConvexProgram, SolveReport};
use crate::error::{Error, Result};

/// Barrier parameter growth per outer iteration.
const MU: f64 = 20.0;
/// Newton-decrement threshold `λ²/2` for ending a centering step.
const CENTERING_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.25;

/// Either the program itself or its phase-I restoration problem
/// `min s  s.t. g_k(x) − s ≤ 0`, with `s` appended as the last variable.
struct View<'a> {
    p: &'a ConvexProgram,
    phase_one: bool,
}

impl View<'_> {
    fn n(&self) -> usize {
        self.p.dim + usize::from(self.phase_one)
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        if i == self.p.dim {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (self.p.lower[i], self.p.upper[i])
        }
    }

    fn barrier_terms(&self) -> usize {
        let boxed: usize = (0..self.n())
            .map(|i| {
                let (lo, hi) = self.bounds(i);
                usize::from(lo.is_finite()) + usize::from(hi.is_finite())
            })
            .sum();
        boxed + self.p.constraints.len()
    }

    fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.p.dim;
        if self.phase_one {
            grad.iter_mut().for_each(|g| *g = 0.0);
            grad[d] = 1.0;
            x[d]
        } else {
            self.p.objective.eval(&x[..d], &mut grad[..d])
        }
    }

    fn objective_affine(&self) -> bool {
        self.phase_one || self.p.objective.is_affine()
    }

    fn constraint(&self, k: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.p.dim;
        let v = self.p.constraints[k].func.eval(&x[..d], &mut grad[..d]);
        if self.phase_one {
            grad[d] = -1.0;
            v - x[d]
        } else {
            v
        }
    }

    fn constraint_affine(&self, k: usize) -> bool {
        self.p.constraints[k].func.is_affine()
    }

    fn strictly_inside_box(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| {
            let (lo, hi) = self.bounds(i);
            v.is_finite() && v > lo && v < hi
        })
    }

    /// Barrier value `t f − Σ ln(−g) − Σ ln(box slack)`; `None` outside the
    /// strict interior.
    fn phi(&self, x: &[f64], t: f64, scratch: &mut [f64]) -> Option<f64> {
        if !self.strictly_inside_box(x) {
            return None;
        }
        let mut v = t * self.objective(x, scratch);
        for k in 0..self.p.constraints.len() {
            let g = self.constraint(k, x, scratch);
            if !(g < 0.0) {
                return None;
            }
            v -= (-g).ln();
        }
        for (i, &xi) in x.iter().enumerate() {
            let (lo, hi) = self.bounds(i);
            if lo.is_finite() {
                v -= (xi - lo).ln();
            }
            if hi.is_finite() {
                v -= (hi - xi).ln();
            }
        }
        v.is_finite().then_some(v)
    }

    /// Gradient of the curved part `t f + Σ w_k g_k` with weights frozen.
    fn curved_gradient(
        &self,
        x: &[f64],
        t: f64,
        weights: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        out.iter_mut().for_each(|g| *g = 0.0);
        if !self.objective_affine() {
            self.objective(x, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += t * s;
            }
        }
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            self.constraint(k, x, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += w * s;
            }
        }
    }

    /// Gradient and Newton matrix of the barrier at a strictly feasible `x`.
    fn newton_system(&self, x: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let m = self.p.constraints.len();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut scratch = vec![0.0; n];

        self.objective(x, &mut scratch);
        for i in 0..n {
            grad[i] += t * scratch[i];
        }
        let mut weights = vec![0.0; m];
        let mut any_curved = !self.objective_affine();
        for (k, weight) in weights.iter_mut().enumerate() {
            let g = self.constraint(k, x, &mut scratch);
            let inv = -1.0 / g;
            for i in 0..n {
                grad[i] += inv * scratch[i];
            }
            // exact outer-product term ∇g∇gᵀ/g²
            let nz: Vec<usize> = (0..n).filter(|&i| scratch[i] != 0.0).collect();
            for &a in &nz {
                for &b in &nz {
                    hess[(a, b)] += scratch[a] * scratch[b] * inv * inv;
                }
            }
            if !self.constraint_affine(k) {
                *weight = inv;
                any_curved = true;
            }
        }
        for (i, &xi) in x.iter().enumerate() {
            let (lo, hi) = self.bounds(i);
            if lo.is_finite() {
                let d = xi - lo;
                grad[i] -= 1.0 / d;
                hess[(i, i)] += 1.0 / (d * d);
            }
            if hi.is_finite() {
                let d = hi - xi;
                grad[i] += 1.0 / d;
                hess[(i, i)] += 1.0 / (d * d);
            }
        }

        if any_curved {
            // central differences of the analytic gradients
            let mut xp = x.to_vec();
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            for j in 0..n {
                let h = 1e-6 * x[j].abs().max(1.0);
                let orig = xp[j];
                xp[j] = orig + h;
                self.curved_gradient(&xp, t, &weights, &mut gp, &mut scratch);
                xp[j] = orig - h;
                self.curved_gradient(&xp, t, &weights, &mut gm, &mut scratch);
                xp[j] = orig;
                for i in 0..n {
                    let c = (gp[i] - gm[i]) / (2.0 * h);
                    hess[(i, j)] += 0.5 * c;
                    hess[(j, i)] += 0.5 * c;
                }
            }
        }
        (grad, hess)
    }
}

/// Solves `H d = −g`, regularizing `H` until its Cholesky factor exists.
fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> DVector<f64> {
    let n = grad.len();
    let scale = (0..n)
        .map(|i| hess[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut reg = 0.0;
    loop {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..n {
                h[(i, i)] += reg;
            }
        }
        if let Some(ch) = h.cholesky() {
            return ch.solve(&(-grad));
        }
        reg = if reg == 0.0 {
            1e-12 * scale
        } else {
            reg * 10.0
        };
        if reg > 1e6 * scale {
            // steepest descent as a last resort
            return -grad / scale;
        }
    }
}

struct Progress {
    x: Vec<f64>,
    iterations: usize,
    t: f64,
    converged: bool,
}

/// Barrier loop from a strictly feasible `x`. `stop` is checked after every
/// Newton step; `on_center` sees each centered point.
fn barrier_loop(
    view: &View<'_>,
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
    stop: &dyn Fn(&[f64]) -> bool,
    on_center: &mut dyn FnMut(&[f64], f64),
) -> Progress {
    let n = view.n();
    let m_tot = view.barrier_terms() as f64;
    let mut scratch = vec![0.0; n];

    let mut t = {
        let (gb, _) = view.newton_system(&x, 0.0);
        let mut gf = vec![0.0; n];
        let f0 = view.objective(&x, &mut gf);
        let gf = DVector::from_vec(gf);
        let nf = gf.norm_squared();
        let bal = if nf > 0.0 {
            -gf.dot(&gb) / nf
        } else {
            f64::NAN
        };
        // a warm start close to the boundary would otherwise ask for a huge t
        let cap = m_tot.max(1.0) / (1.0 + f0.abs());
        let t0 = if bal.is_finite() && bal > 0.0 {
            bal.min(cap)
        } else {
            cap
        };
        t0.clamp(1e-8, 1e12)
    };

    let mut iterations = 0;
    loop {
        // centering
        loop {
            if iterations >= max_iter {
                return Progress {
                    x,
                    iterations,
                    t,
                    converged: false,
                };
            }
            let Some(phi0) = view.phi(&x, t, &mut scratch) else {
                return Progress {
                    x,
                    iterations,
                    t,
                    converged: false,
                };
            };
            let (grad, hess) = view.newton_system(&x, t);
            let d = newton_direction(&grad, hess);
            let slope = grad.dot(&d);
            iterations += 1;
            // λ²/2 bounds the excess of `phi`; the objective excess is that over t
            let decrement = -slope / 2.0;
            if !(slope < 0.0) || decrement <= CENTERING_TOL.max(1e-3 * tol * t) {
                break;
            }
            let mut s = 1.0;
            let mut trial = vec![0.0; n];
            let mut accepted = None;
            while s > 1e-16 {
                for i in 0..n {
                    trial[i] = x[i] + s * d[i];
                }
                if let Some(phi1) = view.phi(&trial, t, &mut scratch) {
                    if phi1 <= phi0 + ARMIJO * s * slope {
                        accepted = Some(phi1);
                        break;
                    }
                }
                s *= 0.5;
            }
            let Some(phi1) = accepted else { break };
            // progress below rounding noise of phi
            let stalled = phi0 - phi1 <= 8.0 * f64::EPSILON * phi0.abs();
            x.copy_from_slice(&trial);
            if stop(&x) {
                return Progress {
                    x,
                    iterations,
                    t,
                    converged: true,
                };
            }
            if stalled {
                break;
            }
        }
        on_center(&x, t);
        if m_tot / t <= tol {
            return Progress {
                x,
                iterations,
                t,
                converged: true,
            };
        }
        t *= MU;
    }
}

/// Moves `x` strictly inside its box.
fn interior_start(p: &ConvexProgram) -> Vec<f64> {
    p.start
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (lo, hi) = (p.lower[i], p.upper[i]);
            // far enough from the box that the first barrier weight stays moderate
            let margin = if lo.is_finite() && hi.is_finite() {
                1e-3 * (hi - lo)
            } else if lo.is_finite() {
                1e-3 * lo.abs().max(1.0)
            } else {
                1e-3 * hi.abs().max(1.0)
            };
            let mut v = if v.is_finite() { v } else { 0.0 };
            if lo.is_finite() {
                v = v.max(lo + margin);
            }
            if hi.is_finite() {
                v = v.min(hi - margin);
            }
            v
        })
        .collect()
}

fn validate(p: &ConvexProgram) -> Result<()> {
    if p.dim == 0 || p.lower.len() != p.dim || p.upper.len() != p.dim || p.start.len() != p.dim {
        return Err(Error::DimensionMismatch(format!(
            "program of dimension {} with {} lower, {} upper bounds and start of length {}",
            p.dim,
            p.lower.len(),
            p.upper.len(),
            p.start.len()
        )));
    }
    for i in 0..p.dim {
        if !(p.lower[i] < p.upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "empty box [{}, {}] for variable {i}",
                p.lower[i], p.upper[i]
            )));
        }
    }
    Ok(())
}

/// Snaps coordinates lying within a hair of a bound onto it when that keeps
/// every constraint satisfied and does not raise the objective.
fn snap_to_bounds(p: &ConvexProgram, x: &mut [f64]) {
    for i in 0..p.dim {
        for bound in [p.lower[i], p.upper[i]] {
            if !bound.is_finite() {
                continue;
            }
            let span = p.upper[i] - p.lower[i];
            let window = if span.is_finite() {
                1e-5 * span
            } else {
                1e-6 * bound.abs().max(1.0)
            };
            if (x[i] - bound).abs() > window || x[i] == bound {
                continue;
            }
            let before = p.objective.value(x);
            let orig = x[i];
            x[i] = bound;
            let ok = p.objective.value(x) <= before
                && p.constraints.iter().all(|c| c.func.value(x) <= 0.0);
            if !ok {
                x[i] = orig;
            }
        }
    }
}

/// Minimizes a convex program by the log-barrier method.
///
/// An infeasible start triggers a phase-I restoration that stops at the
/// first strictly feasible point; failure yields [`Error::InfeasibleStart`].
/// The best centered point is returned, so the objective never exceeds its
/// value at the (restored) start.
pub fn solve_convex(p: &ConvexProgram, tol: f64, max_iter: usize) -> Result<SolveReport> {
    validate(p)?;
    let mut x = interior_start(p);
    let strictly_feasible = |x: &[f64]| p.constraints.iter().all(|c| c.func.value(x) < 0.0);

    let mut iterations = 0;
    let restored = !strictly_feasible(&x);
    if restored {
        let worst = p
            .constraints
            .iter()
            .map(|c| c.func.value(&x))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = x.clone();
        z.push(worst + 1.0 + 0.1 * worst.abs());
        let view = View { p, phase_one: true };
        let d = p.dim;
        let progress = barrier_loop(
            &view,
            z,
            tol,
            max_iter,
            &|z: &[f64]| z[d] < 0.0,
            &mut |_, _| {},
        );
        iterations += progress.iterations;
        let candidate = &progress.x[..d];
        if !strictly_feasible(candidate) {
            let violation = p
                .constraints
                .iter()
                .map(|c| c.func.value(candidate))
                .fold(0.0, f64::max);
            return Err(Error::InfeasibleStart { violation });
        }
        x = candidate.to_vec();
    }

    let start_objective = p.objective.value(&x);
    let mut best = (start_objective, x.clone());
    let view = View {
        p,
        phase_one: false,
    };
    let mut on_center = |z: &[f64], _t: f64| {
        let f = p.objective.value(z);
        if f < best.0 {
            best = (f, z.to_vec());
        }
    };
    let progress = barrier_loop(&view, x, tol, max_iter, &|_| false, &mut on_center);
    iterations += progress.iterations;
    // the last (possibly uncentered) iterate is strictly feasible too
    let f_last = p.objective.value(&progress.x);
    if f_last < best.0 {
        best = (f_last, progress.x.clone());
    }

    let (_, mut point) = best;
    snap_to_bounds(p, &mut point);
    let objective_value = p.objective.value(&point);
    Ok(SolveReport {
        max_constraint_violation: p.max_violation(&point),
        objective_value,
        start_objective,
        point,
        iterations,
        duality_gap: view.barrier_terms() as f64 / progress.t,
        restored,
        converged: progress.converged,
    })
}
