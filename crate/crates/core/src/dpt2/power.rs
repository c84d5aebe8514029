//! Convexified power subproblem around a local point `P^(r)`.
//!
//! Variable layout: `[p_0 … p_{J−1}]`, then one rate slack `η_i` per served
//! user.

use std::f64::consts::LN_2;

use crate::channel::{gain_matrix, Position2D};
use crate::error::{Error, Result};
use crate::lyapunov::VirtualQueues;
use crate::model::{BinaryMatrix, NetworkConfig};
use crate::solver::{Affine, Constraint, ConvexProgram, Differentiable};

/// `η − [log2(σ²W + Σ_k p_k h_k) − F − Σ_{k≠j} G_k (p_k − p_k^r)] ≤ 0`.
#[derive(Debug, Clone)]
pub struct PowerRate {
    pub eta: usize,
    /// Gains from every UAV to this user.
    pub gains: Vec<f64>,
    pub serve: usize,
    pub noise: f64,
    pub f: f64,
    /// `G_k` per UAV (zero for the server).
    pub g: Vec<f64>,
    pub p_r: Vec<f64>,
}

impl Differentiable for PowerRate {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|v| *v = 0.0);
        let j = self.gains.len();
        let total = self.noise + (0..j).map(|k| x[k] * self.gains[k]).sum::<f64>();
        let mut v = x[self.eta] - total.log2() + self.f;
        grad[self.eta] = 1.0;
        for k in 0..j {
            grad[k] = -self.gains[k] / (total * LN_2);
            if k != self.serve {
                v += self.g[k] * (x[k] - self.p_r[k]);
                grad[k] += self.g[k];
            }
        }
        v
    }
}

/// `(F, G)` of the first-order upper bound of the interference term
/// `log2(σ²W + Σ_{k≠j} p_k h_k)` around `p^r`.
pub fn interference_expansion(
    gains: &[f64],
    p_r: &[f64],
    serve: usize,
    noise: f64,
) -> (f64, Vec<f64>) {
    let total = noise
        + (0..gains.len())
            .filter(|&k| k != serve)
            .map(|k| p_r[k] * gains[k])
            .sum::<f64>();
    let g = (0..gains.len())
        .map(|k| {
            if k == serve {
                0.0
            } else {
                gains[k] / (total * LN_2)
            }
        })
        .collect();
    (total.log2(), g)
}

/// Upper bound of `log2(σ²W + Σ_{k≠j} p_k h_k)` at `p`, linearized at `p_r`.
pub fn interference_upper_bound(
    gains: &[f64],
    p: &[f64],
    p_r: &[f64],
    serve: usize,
    noise: f64,
) -> f64 {
    let (f, g) = interference_expansion(gains, p_r, serve, noise);
    f + (0..gains.len())
        .map(|k| g[k] * (p[k] - p_r[k]))
        .sum::<f64>()
}

/// Linearized rate `log2(σ²W + Σ_k p_k h_k) − upper bound` (a lower bound
/// of the true rate).
pub fn linearized_power_rate(
    gains: &[f64],
    p: &[f64],
    p_r: &[f64],
    serve: usize,
    noise: f64,
) -> f64 {
    let total = noise + gains.iter().zip(p).map(|(h, q)| h * q).sum::<f64>();
    total.log2() - interference_upper_bound(gains, p, p_r, serve, noise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLayout {
    pub uavs: usize,
    /// `(user, serving UAV, η index)` per served user.
    pub served: Vec<(usize, usize, usize)>,
}

/// Builds the convexified power program at local powers `p_r`, positions and
/// delivery fixed. With `qoe_floors` each served user's slack must reach its
/// rate target `C_th`.
#[allow(clippy::too_many_arguments)]
pub fn build_power_program(
    p_r: &[f64],
    s: &BinaryMatrix,
    positions: &[Position2D],
    qs: &VirtualQueues,
    c_th: &[f64],
    users: &[Position2D],
    config: &NetworkConfig,
    qoe_floors: bool,
) -> Result<(ConvexProgram, PowerLayout)> {
    let j = positions.len();
    if s.rows() != users.len()
        || s.cols() != j
        || p_r.len() != j
        || c_th.len() != users.len()
        || qs.uavs() != j
    {
        return Err(Error::DimensionMismatch(format!(
            "power program: {} users, {} UAVs, delivery {}x{}, {} powers, {} targets",
            users.len(),
            j,
            s.rows(),
            s.cols(),
            p_r.len(),
            c_th.len()
        )));
    }
    let noise = config.radio.noise_power();
    let gains = gain_matrix(positions, users, &config.radio);
    let limits = &config.limits;

    let mut served = Vec::new();
    for (i, srv) in s.servers().into_iter().enumerate() {
        if let Some(k) = srv {
            served.push((i, k, j + served.len()));
        }
    }
    let dim = j + served.len();
    let mut lower = vec![limits.p_min_mw; dim];
    let mut upper = vec![limits.power_ceiling(); dim];
    let mut start: Vec<f64> = p_r.to_vec();
    start.resize(dim, 0.0);

    let mut objective: Vec<(usize, f64)> = (0..j)
        .map(|k| (k, qs.power_price(k, &config.lyapunov)))
        .collect();
    let mut constraints = Vec::new();
    for &(i, srv, eta) in &served {
        let (f, g) = interference_expansion(&gains[i], p_r, srv, noise);
        let rate_r = linearized_power_rate(&gains[i], p_r, p_r, srv, noise);
        lower[eta] = -1.0;
        upper[eta] = f64::INFINITY;
        start[eta] = rate_r - 1e-3 * (1.0 + rate_r.abs());
        objective.push((eta, -qs.rate_weight(i)));
        constraints.push(Constraint::new(
            format!("rate[{i}]"),
            PowerRate {
                eta,
                gains: gains[i].clone(),
                serve: srv,
                noise,
                f,
                g,
                p_r: p_r.to_vec(),
            },
        ));
        if qoe_floors {
            constraints.push(Constraint::new(
                format!("qoe[{i}]"),
                Affine::new(c_th[i], vec![(eta, -1.0)]),
            ));
        }
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
        PowerLayout { uavs: j, served },
    ))
}
