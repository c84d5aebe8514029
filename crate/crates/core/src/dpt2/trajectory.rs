//! Convexified trajectory subproblem around a local point `X^(r)`.
//!
//! Variable layout: `[x_0, y_0, …, x_{J−1}, y_{J−1}]`, then one rate slack
//! `η_i` per served user, then one interference slack `B_ik` per served user
//! and non-serving UAV `k`.

use std::f64::consts::LN_2;

use crate::channel::{los_coverage_radius, Position2D};
use crate::error::{Error, Result};
use crate::lyapunov::VirtualQueues;
use crate::model::{BinaryMatrix, NetworkConfig};
use crate::solver::{Affine, Constraint, ConvexProgram, Differentiable};

/// Rate constraint of one served user:
/// `η − D + Σ_k E_k (‖x_k − u‖² − d_k^r) − R̃(B) ≤ 0`.
#[derive(Debug, Clone)]
pub struct TrajectoryRate {
    pub user: Position2D,
    pub eta: usize,
    pub d: f64,
    /// `E_k` for every UAV.
    pub e: Vec<f64>,
    /// `‖x_k^r − u‖²` for every UAV.
    pub dist_sq_r: Vec<f64>,
    /// `(B index, p_k θ)` for every interferer.
    pub interferers: Vec<(usize, f64)>,
    pub altitude_sq: f64,
    pub noise: f64,
}

impl Differentiable for TrajectoryRate {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut v = x[self.eta] - self.d;
        grad[self.eta] = 1.0;
        for (k, &ek) in self.e.iter().enumerate() {
            let dx = x[2 * k] - self.user.x;
            let dy = x[2 * k + 1] - self.user.y;
            v += ek * (dx * dx + dy * dy - self.dist_sq_r[k]);
            grad[2 * k] = 2.0 * ek * dx;
            grad[2 * k + 1] = 2.0 * ek * dy;
        }
        // −R̃ = log2(σ²W + Σ a_k / (g² + B_k))
        let s: f64 = self.noise
            + self
                .interferers
                .iter()
                .map(|&(b, a)| a / (self.altitude_sq + x[b]))
                .sum::<f64>();
        v += s.log2();
        for &(b, a) in &self.interferers {
            let den = self.altitude_sq + x[b];
            grad[b] = -a / (den * den * s * LN_2);
        }
        v
    }
}

/// `‖(x_ix, x_iy) − c‖² − r² ≤ 0`.
#[derive(Debug, Clone)]
pub struct Disc {
    pub ix: usize,
    pub center: Position2D,
    pub radius_sq: f64,
}

impl Differentiable for Disc {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let dx = x[self.ix] - self.center.x;
        let dy = x[self.ix + 1] - self.center.y;
        grad[self.ix] = 2.0 * dx;
        grad[self.ix + 1] = 2.0 * dy;
        dx * dx + dy * dy - self.radius_sq
    }
}

/// First-order lower bound of `‖x − u‖²` around `x^r`:
/// `2 (x^r − u)ᵀ(x − u) − ‖x^r − u‖²`.
pub fn sq_dist_lower(x: &Position2D, xr: &Position2D, u: &Position2D) -> f64 {
    let (ax, ay) = (xr.x - u.x, xr.y - u.y);
    2.0 * (ax * (x.x - u.x) + ay * (x.y - u.y)) - (ax * ax + ay * ay)
}

/// First-order lower bound of `‖x_j − x_k‖²` around `(x_j^r, x_k^r)`.
pub fn pair_dist_lower(
    xj: &Position2D,
    xk: &Position2D,
    xjr: &Position2D,
    xkr: &Position2D,
) -> f64 {
    let (dx, dy) = (xjr.x - xkr.x, xjr.y - xkr.y);
    2.0 * (dx * (xj.x - xk.x) + dy * (xj.y - xk.y)) - (dx * dx + dy * dy)
}

/// Coefficients `(D, E)` of the first-order lower bound of
/// `log2(σ²W + Σ_k p_k θ / (g² + d_k))` in the squared distances `d_k`.
pub fn signal_expansion(
    powers: &[f64],
    dist_sq_r: &[f64],
    theta: f64,
    altitude_sq: f64,
    noise: f64,
) -> (f64, Vec<f64>) {
    let total = noise
        + powers
            .iter()
            .zip(dist_sq_r)
            .map(|(p, d)| p * theta / (altitude_sq + d))
            .sum::<f64>();
    let e = powers
        .iter()
        .zip(dist_sq_r)
        .map(|(p, d)| p * theta / ((altitude_sq + d).powi(2) * total * LN_2))
        .collect();
    (total.log2(), e)
}

/// Linearized rate of user `u` served by `serve` at positions `x`, with the
/// interference slacks at their largest admissible value (the linear lower
/// bound of each squared distance). `None` when a slack would leave the
/// domain `B ≥ −g²/2`.
pub fn linearized_trajectory_rate(
    x: &[Position2D],
    xr: &[Position2D],
    powers: &[f64],
    user: &Position2D,
    serve: usize,
    config: &NetworkConfig,
) -> Option<f64> {
    let radio = &config.radio;
    let g2 = radio.altitude_m * radio.altitude_m;
    let theta = radio.gain_constant();
    let noise = radio.noise_power();
    let dr: Vec<f64> = xr.iter().map(|p| p.distance_sq(user)).collect();
    let (d, e) = signal_expansion(powers, &dr, theta, g2, noise);
    let mut v = d;
    for k in 0..x.len() {
        v -= e[k] * (x[k].distance_sq(user) - dr[k]);
    }
    let mut s = noise;
    for k in (0..x.len()).filter(|&k| k != serve) {
        let b = sq_dist_lower(&x[k], &xr[k], user);
        if b < -g2 / 2.0 {
            return None;
        }
        s += powers[k] * theta / (g2 + b);
    }
    Some(v - s.log2())
}

/// Where each block of the trajectory program lives in the variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLayout {
    pub uavs: usize,
    /// `(user, serving UAV, η index)` per served user.
    pub served: Vec<(usize, usize, usize)>,
    /// `(user, UAV, B index)` per interference slack.
    pub slacks: Vec<(usize, usize, usize)>,
}

impl TrajectoryLayout {
    pub fn positions(&self, point: &[f64]) -> Vec<Position2D> {
        (0..self.uavs)
            .map(|k| Position2D::new(point[2 * k], point[2 * k + 1]))
            .collect()
    }
}

/// Builds the convexified trajectory program at local point `xr`, with
/// powers fixed and delivery `s` (N×J) given.
pub fn build_trajectory_program(
    xr: &[Position2D],
    s: &BinaryMatrix,
    powers: &[f64],
    qs: &VirtualQueues,
    users: &[Position2D],
    x_prev: &[Position2D],
    config: &NetworkConfig,
) -> Result<(ConvexProgram, TrajectoryLayout)> {
    let j = xr.len();
    if s.rows() != users.len()
        || s.cols() != j
        || powers.len() != j
        || x_prev.len() != j
        || qs.users() != users.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "trajectory program: {} users, {} UAVs, delivery {}x{}, {} powers, {} previous positions",
            users.len(),
            j,
            s.rows(),
            s.cols(),
            powers.len(),
            x_prev.len()
        )));
    }
    let radio = &config.radio;
    let g2 = radio.altitude_m * radio.altitude_m;
    let theta = radio.gain_constant();
    let noise = radio.noise_power();
    let r_los = los_coverage_radius(radio);

    let mut served = Vec::new();
    let mut slacks = Vec::new();
    let mut next = 2 * j;
    for (i, srv) in s.servers().into_iter().enumerate() {
        if let Some(k) = srv {
            served.push((i, k, next));
            next += 1;
        }
    }
    for &(i, srv, _) in &served {
        for k in (0..j).filter(|&k| k != srv) {
            slacks.push((i, k, next));
            next += 1;
        }
    }
    let dim = next;

    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut start = vec![0.0; dim];
    for k in 0..j {
        lower[2 * k] = 0.0;
        upper[2 * k] = config.area_width_m;
        lower[2 * k + 1] = 0.0;
        upper[2 * k + 1] = config.area_height_m;
        start[2 * k] = xr[k].x;
        start[2 * k + 1] = xr[k].y;
    }

    let mut constraints = Vec::new();
    let mut objective = Vec::new();
    for &(i, srv, eta) in &served {
        let u = users[i];
        let dist_sq_r: Vec<f64> = xr.iter().map(|p| p.distance_sq(&u)).collect();
        let (d, e) = signal_expansion(powers, &dist_sq_r, theta, g2, noise);
        let interferers: Vec<(usize, f64)> = slacks
            .iter()
            .filter(|&&(ii, _, _)| ii == i)
            .map(|&(_, k, b)| (b, powers[k] * theta))
            .collect();
        // η starts just below the true rate at the expansion point
        let interference_r: f64 = (0..j)
            .filter(|&k| k != srv)
            .map(|k| powers[k] * theta / (g2 + dist_sq_r[k]))
            .sum();
        let rate_r = d - (noise + interference_r).log2();
        lower[eta] = -1.0;
        start[eta] = rate_r - 1e-3 * (1.0 + rate_r.abs());
        objective.push((eta, -qs.rate_weight(i)));
        constraints.push(Constraint::new(
            format!("rate[{i}]"),
            TrajectoryRate {
                user: u,
                eta,
                d,
                e,
                dist_sq_r,
                interferers,
                altitude_sq: g2,
                noise,
            },
        ));
        constraints.push(Constraint::new(
            format!("coverage[{i},{srv}]"),
            Disc {
                ix: 2 * srv,
                center: u,
                radius_sq: r_los * r_los,
            },
        ));
    }
    for &(i, k, b) in &slacks {
        // B − (2aᵀ(x_k − u) − ‖a‖²) ≤ 0 with a = x_k^r − u
        let u = users[i];
        let (ax, ay) = (xr[k].x - u.x, xr[k].y - u.y);
        lower[b] = -g2 / 2.0;
        let bound_r = ax * ax + ay * ay;
        start[b] = bound_r - 1e-3 * (1.0 + bound_r);
        constraints.push(Constraint::new(
            format!("slack[{i},{k}]"),
            Affine::new(
                2.0 * (ax * u.x + ay * u.y) + ax * ax + ay * ay,
                vec![(b, 1.0), (2 * k, -2.0 * ax), (2 * k + 1, -2.0 * ay)],
            ),
        ));
    }
    let d_min_sq = config.limits.d_min_m * config.limits.d_min_m;
    for a in 0..j {
        for c in a + 1..j {
            let (dx, dy) = (xr[a].x - xr[c].x, xr[a].y - xr[c].y);
            constraints.push(Constraint::new(
                format!("separation[{a},{c}]"),
                Affine::new(
                    d_min_sq + dx * dx + dy * dy,
                    vec![
                        (2 * a, -2.0 * dx),
                        (2 * a + 1, -2.0 * dy),
                        (2 * c, 2.0 * dx),
                        (2 * c + 1, 2.0 * dy),
                    ],
                ),
            ));
        }
    }
    let e_max_sq = config.limits.e_max_m * config.limits.e_max_m;
    for (k, prev) in x_prev.iter().enumerate() {
        constraints.push(Constraint::new(
            format!("movement[{k}]"),
            Disc {
                ix: 2 * k,
                center: *prev,
                radius_sq: e_max_sq,
            },
        ));
    }

    Ok((
        ConvexProgram {
            dim,
            objective: Box::new(Affine::new(0.0, objective)),
            constraints,
            lower,
            upper,
            start,
        },
        TrajectoryLayout {
            uavs: j,
            served,
            slacks,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gain_matrix;
    use crate::channel::link_rate;

    #[test]
    fn bounds_tight_at_expansion_point() {
        let xr = Position2D::new(120.0, 40.0);
        let u = Position2D::new(100.0, 10.0);
        assert!((sq_dist_lower(&xr, &xr, &u) - xr.distance_sq(&u)).abs() < 1e-9);
        let xk = Position2D::new(10.0, 300.0);
        assert!((pair_dist_lower(&xr, &xk, &xr, &xk) - xr.distance_sq(&xk)).abs() < 1e-9);
    }

    #[test]
    fn signal_expansion_is_tight() {
        let powers = [100.0, 250.0];
        let d = [900.0, 40000.0];
        let theta = 3.5e-10 * 40000.0;
        let (val, _) = signal_expansion(&powers, &d, theta, 40000.0, 4e-10);
        let direct = (4e-10 + 100.0 * theta / 40900.0 + 250.0 * theta / 80000.0).log2();
        assert!((val - direct).abs() < 1e-12);
    }

    #[test]
    fn linearized_rate_equals_true_rate_at_expansion_point() {
        let cfg = crate::harness::ExperimentConfig::default()
            .network()
            .unwrap();
        let xr = vec![Position2D::new(100.0, 100.0), Position2D::new(300.0, 200.0)];
        let user = Position2D::new(120.0, 90.0);
        let powers = [200.0, 300.0];
        let lin = linearized_trajectory_rate(&xr, &xr, &powers, &user, 0, &cfg).unwrap();
        let gains = gain_matrix(&xr, &[user], &cfg.radio);
        let exact = link_rate(&gains[0], &powers, 0, cfg.radio.noise_power());
        assert!((lin - exact).abs() < 1e-9, "{lin} vs {exact}");
    }
}
