//! Per-slot delivery, power and trajectory optimization.
//!
//! Block-coordinate rounds alternate an exact assignment, a convexified
//! trajectory program and a convexified power program. A block update is
//! kept only if it does not raise the slot objective
//! `Γ = Σ_j (Vρ + [H_j]^+) p_j − Σ_i ([Q_i]^+ + [Z_i]^+) u_i`.

mod power;
mod trajectory;

pub use power::{
    build_power_program, interference_expansion, interference_upper_bound, linearized_power_rate,
    PowerLayout, PowerRate,
};
pub use trajectory::{
    build_trajectory_program, linearized_trajectory_rate, pair_dist_lower, signal_expansion,
    sq_dist_lower, Disc, TrajectoryLayout, TrajectoryRate,
};

use crate::channel::{
    achievable_rates, gain_matrix, link_rate, los_coverage_radius, Position2D, RadioParams,
};
use crate::error::{Error, Result};
use crate::lyapunov::VirtualQueues;
use crate::model::{BinaryMatrix, NetworkConfig};
use crate::solver::{solve_assignment, solve_convex};

/// Everything decided in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    /// J×N cache placement.
    pub placement: BinaryMatrix,
    /// N×J delivery.
    pub delivery: BinaryMatrix,
    /// Transmit powers (mW).
    pub powers: Vec<f64>,
    pub positions: Vec<Position2D>,
    pub gamma: Vec<f64>,
}

/// Expansion point of the convexified subproblems.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaLocalPoint {
    pub positions: Vec<Position2D>,
    pub powers: Vec<f64>,
}

/// Inputs shared by every round of one slot.
#[derive(Debug, Clone, Copy)]
pub struct Dpt2Problem<'a> {
    pub qs: &'a VirtualQueues,
    /// QoE rate targets (bps/Hz).
    pub c_th: &'a [f64],
    pub users: &'a [Position2D],
    /// Positions at the end of the previous slot.
    pub x_prev: &'a [Position2D],
    pub config: &'a NetworkConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeliveryMode {
    Optimize,
    Fixed(BinaryMatrix),
}

/// Which blocks are optimized; benchmarks freeze some of them.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    pub delivery: DeliveryMode,
    pub trajectory: bool,
    pub power: bool,
}

impl BlockPlan {
    pub fn full() -> Self {
        Self {
            delivery: DeliveryMode::Optimize,
            trajectory: true,
            power: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dpt2Outcome {
    pub delivery: BinaryMatrix,
    pub positions: Vec<Position2D>,
    pub powers: Vec<f64>,
    /// Final value of `Γ`.
    pub objective: f64,
    /// `Γ` after every block update of the chosen start.
    pub trace: Vec<f64>,
    /// Traces of every start that was tried.
    pub traces: Vec<Vec<f64>>,
    pub rounds: usize,
    /// Subproblem solves that failed or did not converge.
    pub solver_failures: usize,
    /// Power solves that dropped the QoE floors to stay feasible.
    pub qoe_relaxed: usize,
    /// Block updates discarded because they raised `Γ`.
    pub rejected_updates: usize,
}

/// N×J assignment weights `([Q_i]^+ + [Z_i]^+) log2(1 + SINR_ij)`; pairs
/// farther apart than the LoS coverage radius are `−∞` (forbidden).
pub fn delivery_costs(
    qs: &VirtualQueues,
    positions: &[Position2D],
    powers: &[f64],
    users: &[Position2D],
    radio: &RadioParams,
) -> Vec<Vec<f64>> {
    let gains = gain_matrix(positions, users, radio);
    let noise = radio.noise_power();
    let r_los = los_coverage_radius(radio);
    users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            (0..positions.len())
                .map(|j| {
                    if positions[j].distance(u) > r_los {
                        f64::NEG_INFINITY
                    } else {
                        qs.rate_weight(i) * link_rate(&gains[i], powers, j, noise)
                    }
                })
                .collect()
        })
        .collect()
}

/// Slot objective `Γ` at a complete point.
pub fn dpt2_objective(
    qs: &VirtualQueues,
    delivery: &BinaryMatrix,
    positions: &[Position2D],
    powers: &[f64],
    users: &[Position2D],
    config: &NetworkConfig,
) -> Result<f64> {
    let rates = achievable_rates(positions, users, delivery, powers, &config.radio)?;
    let power: f64 = (0..powers.len())
        .map(|j| qs.power_price(j, &config.lyapunov) * powers[j])
        .sum();
    let utility: f64 = rates
        .iter()
        .enumerate()
        .map(|(i, u)| qs.rate_weight(i) * u)
        .sum();
    Ok(power - utility)
}

/// Runs block-coordinate rounds from `start` until the relative change of
/// `Γ` over a round drops below `sca_tol` or `r_max` rounds have run.
pub fn block_coordinate(
    problem: &Dpt2Problem<'_>,
    start: &ScaLocalPoint,
    plan: &BlockPlan,
) -> Result<Dpt2Outcome> {
    let cfg = problem.config;
    let (qs, users) = (problem.qs, problem.users);
    let mut x = start.positions.clone();
    let mut p = start.powers.clone();
    if x.len() != problem.x_prev.len() || p.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} start positions, {} powers, {} previous positions",
            x.len(),
            p.len(),
            problem.x_prev.len()
        )));
    }
    let assign = |x: &[Position2D], p: &[f64]| {
        solve_assignment(&delivery_costs(qs, x, p, users, &cfg.radio), x.len())
    };
    let mut s = match &plan.delivery {
        DeliveryMode::Fixed(m) => m.clone(),
        DeliveryMode::Optimize => assign(&x, &p)?,
    };
    let mut gamma = dpt2_objective(qs, &s, &x, &p, users, cfg)?;
    let mut out = Dpt2Outcome {
        delivery: s.clone(),
        positions: x.clone(),
        powers: p.clone(),
        objective: gamma,
        trace: vec![gamma],
        traces: vec![],
        rounds: 0,
        solver_failures: 0,
        qoe_relaxed: 0,
        rejected_updates: 0,
    };

    for r in 0..cfg.r_max {
        let round_start = gamma;
        if r > 0 && plan.delivery == DeliveryMode::Optimize {
            let cand = assign(&x, &p)?;
            let g = dpt2_objective(qs, &cand, &x, &p, users, cfg)?;
            if g <= gamma {
                s = cand;
                gamma = g;
            } else {
                out.rejected_updates += 1;
            }
            out.trace.push(gamma);
        }
        if plan.trajectory {
            let (program, layout) =
                build_trajectory_program(&x, &s, &p, qs, users, problem.x_prev, cfg)?;
            match solve_convex(&program, cfg.solver_tol, cfg.solver_max_iter) {
                Ok(rep) => {
                    if !rep.converged {
                        out.solver_failures += 1;
                    }
                    let cand = layout.positions(&rep.point);
                    let g = dpt2_objective(qs, &s, &cand, &p, users, cfg)?;
                    if g <= gamma {
                        x = cand;
                        gamma = g;
                    } else {
                        out.rejected_updates += 1;
                    }
                }
                Err(Error::InfeasibleStart { .. }) => out.solver_failures += 1,
                Err(e) => return Err(e),
            }
            out.trace.push(gamma);
        }
        if plan.power {
            let solved = match solve_power(problem, &s, &x, &p, true) {
                Err(Error::InfeasibleStart { .. }) => {
                    out.qoe_relaxed += 1;
                    solve_power(problem, &s, &x, &p, false)
                }
                other => other,
            };
            match solved {
                Ok((cand, converged)) => {
                    if !converged {
                        out.solver_failures += 1;
                    }
                    let g = dpt2_objective(qs, &s, &x, &cand, users, cfg)?;
                    if g <= gamma {
                        p = cand;
                        gamma = g;
                    } else {
                        out.rejected_updates += 1;
                    }
                }
                Err(Error::InfeasibleStart { .. }) => out.solver_failures += 1,
                Err(e) => return Err(e),
            }
            out.trace.push(gamma);
        }
        out.rounds = r + 1;
        if (round_start - gamma).abs() <= cfg.sca_tol * round_start.abs().max(1e-12) {
            break;
        }
    }
    out.delivery = s;
    out.positions = x;
    out.powers = p;
    out.objective = gamma;
    out.traces = vec![out.trace.clone()];
    Ok(out)
}

fn solve_power(
    problem: &Dpt2Problem<'_>,
    s: &BinaryMatrix,
    x: &[Position2D],
    p: &[f64],
    floors: bool,
) -> Result<(Vec<f64>, bool)> {
    let cfg = problem.config;
    let (program, layout) = build_power_program(
        p,
        s,
        x,
        problem.qs,
        problem.c_th,
        problem.users,
        cfg,
        floors,
    )?;
    let rep = solve_convex(&program, cfg.solver_tol, cfg.solver_max_iter)?;
    Ok((rep.point[..layout.uavs].to_vec(), rep.converged))
}

/// Alternative starting positions: taking users by decreasing weight, the
/// nearest still-free UAV that can reach a user within one slot moves right
/// above it, provided the separation to every other UAV is kept.
pub fn weight_seeking_positions(problem: &Dpt2Problem<'_>) -> Vec<Position2D> {
    let cfg = problem.config;
    let mut pos = problem.x_prev.to_vec();
    let mut free = vec![true; pos.len()];
    let mut order: Vec<usize> = (0..problem.users.len())
        .filter(|&i| problem.qs.rate_weight(i) > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        problem
            .qs
            .rate_weight(b)
            .total_cmp(&problem.qs.rate_weight(a))
    });
    let reach = cfg.limits.e_max_m * (1.0 - 1e-9);
    let sep = cfg.limits.d_min_m * (1.0 + 1e-9);
    for i in order {
        if !free.iter().any(|&f| f) {
            break;
        }
        let u = problem.users[i];
        let target = Position2D::new(
            u.x.clamp(0.0, cfg.area_width_m),
            u.y.clamp(0.0, cfg.area_height_m),
        );
        let mut cands: Vec<usize> = (0..pos.len())
            .filter(|&j| free[j] && problem.x_prev[j].distance(&target) <= reach)
            .collect();
        cands.sort_by(|&a, &b| {
            problem.x_prev[a]
                .distance(&target)
                .total_cmp(&problem.x_prev[b].distance(&target))
        });
        for j in cands {
            if (0..pos.len()).all(|k| k == j || pos[k].distance(&target) >= sep) {
                pos[j] = target;
                free[j] = false;
                break;
            }
        }
    }
    pos
}

/// Full per-slot optimization: block-coordinate rounds from the previous
/// slot's point and from the weight-seeking start; the start ending with the
/// lower `Γ` wins (ties keep the warm start).
pub fn algorithm1(problem: &Dpt2Problem<'_>, p_init: &[f64]) -> Result<Dpt2Outcome> {
    let plan = BlockPlan::full();
    let warm = ScaLocalPoint {
        positions: problem.x_prev.to_vec(),
        powers: p_init.to_vec(),
    };
    let mut best = block_coordinate(problem, &warm, &plan)?;
    let seek = weight_seeking_positions(problem);
    if seek != problem.x_prev {
        let alt = block_coordinate(
            problem,
            &ScaLocalPoint {
                positions: seek,
                powers: p_init.to_vec(),
            },
            &plan,
        )?;
        let mut traces = best.traces.clone();
        traces.extend(alt.traces.iter().cloned());
        let (solver_failures, qoe_relaxed, rejected) = (
            best.solver_failures + alt.solver_failures,
            best.qoe_relaxed + alt.qoe_relaxed,
            best.rejected_updates + alt.rejected_updates,
        );
        if alt.objective < best.objective {
            best = alt;
        }
        best.traces = traces;
        best.solver_failures = solver_failures;
        best.qoe_relaxed = qoe_relaxed;
        best.rejected_updates = rejected;
    }
    Ok(best)
}
