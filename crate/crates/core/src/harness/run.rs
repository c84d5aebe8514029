//! Slot-by-slot simulation of the proposed scheme and the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algo, ExperimentConfig};
use super::mobility::{uniform_point, UserMobility};
use crate::channel::{achievable_rates, los_coverage_radius, Position2D};
use crate::dpt2::{
    algorithm1, block_coordinate, BlockPlan, DeliveryMode, Dpt2Problem, ScaLocalPoint,
};
use crate::error::{Error, Result};
use crate::lyapunov::{
    aut_solve, cached_flags, cpt_place, required_rates, stability_metrics, update_queues,
    VirtualQueues,
};
use crate::model::{BinaryMatrix, FleetState, NetworkConfig};

/// Flight speed on the circular benchmark trajectories (m/s).
pub const CIRCLE_SPEED: f64 = 10.0;

const STREAM_INIT: u64 = 1;
const STREAM_MOBILITY: u64 = 2;
const STREAM_DELIVERY: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for stream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// Slot index, starting at 1.
    pub t: usize,
    /// Serving UAV of every user.
    pub servers: Vec<Option<usize>>,
    /// Transmit powers (mW).
    pub powers: Vec<f64>,
    pub positions: Vec<Position2D>,
    pub users: Vec<Position2D>,
    /// Achieved rates (bps/Hz).
    pub rates: Vec<f64>,
    pub c_th: Vec<f64>,
    pub gamma: Vec<f64>,
    pub cached: Vec<bool>,
    /// `(S_Q, S_Z, S_H)` after this slot's queue update.
    pub stability: (f64, f64, f64),
    /// Slot objective after every block update, per start.
    pub objective_traces: Vec<Vec<f64>>,
    pub solver_failures: usize,
    pub qoe_relaxed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algo: Algo,
    pub seed: u64,
    pub slot_s: f64,
    pub slots: Vec<SlotRecord>,
    pub final_queues: VirtualQueues,
}

/// Random UAV positions at least `d_min` apart.
pub fn random_fleet<R: Rng + ?Sized>(
    uavs: usize,
    net: &NetworkConfig,
    rng: &mut R,
) -> Result<Vec<Position2D>> {
    let mut out: Vec<Position2D> = Vec::with_capacity(uavs);
    let mut tries = 0;
    while out.len() < uavs {
        tries += 1;
        if tries > 100_000 {
            return Err(Error::Config(format!(
                "cannot place {uavs} UAVs {} m apart in the area",
                net.limits.d_min_m
            )));
        }
        let c = uniform_point(net.area_width_m, net.area_height_m, rng);
        if out.iter().all(|x| x.distance(&c) >= net.limits.d_min_m) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Centers on the horizontal mid-line and the common radius of the circular
/// benchmark trajectories.
pub fn circle_layout(uavs: usize, net: &NetworkConfig) -> (Vec<Position2D>, f64) {
    let (w, h) = (net.area_width_m, net.area_height_m);
    let spacing = w / uavs as f64;
    let centers: Vec<_> = (0..uavs)
        .map(|j| Position2D::new(spacing * (j as f64 + 0.5), h / 2.0))
        .collect();
    let edge = centers
        .iter()
        .map(|c| c.x.min(w - c.x).min(c.y).min(h - c.y))
        .fold(f64::INFINITY, f64::min);
    (centers, (spacing / 2.0).min(edge))
}

/// Positions on the circles after `t` slots.
pub fn circle_positions(
    centers: &[Position2D],
    radius: f64,
    t: usize,
    slot_s: f64,
) -> Vec<Position2D> {
    let angle = CIRCLE_SPEED * t as f64 * slot_s / radius;
    centers
        .iter()
        .map(|c| Position2D::new(c.x + radius * angle.cos(), c.y + radius * angle.sin()))
        .collect()
}

/// Each UAV in turn serves a uniformly drawn, still unserved user within its
/// LoS coverage radius (or idles when there is none).
pub fn random_delivery<R: Rng + ?Sized>(
    positions: &[Position2D],
    users: &[Position2D],
    r_los: f64,
    rng: &mut R,
) -> BinaryMatrix {
    let mut s = BinaryMatrix::zeros(users.len(), positions.len());
    let mut taken = vec![false; users.len()];
    for (j, x) in positions.iter().enumerate() {
        let eligible: Vec<usize> = (0..users.len())
            .filter(|&i| !taken[i] && x.distance(&users[i]) <= r_los)
            .collect();
        if let Some(&i) = eligible.choose(rng) {
            taken[i] = true;
            s.set(i, j, true);
        }
    }
    s
}

struct Slot {
    delivery: BinaryMatrix,
    positions: Vec<Position2D>,
    powers: Vec<f64>,
    traces: Vec<Vec<f64>>,
    solver_failures: usize,
    qoe_relaxed: usize,
}

fn optimized(problem: &Dpt2Problem<'_>, start: ScaLocalPoint, plan: BlockPlan) -> Result<Slot> {
    let out = block_coordinate(problem, &start, &plan)?;
    Ok(Slot {
        delivery: out.delivery,
        positions: out.positions,
        powers: out.powers,
        traces: out.traces,
        solver_failures: out.solver_failures,
        qoe_relaxed: out.qoe_relaxed,
    })
}

fn fixed(delivery: BinaryMatrix, positions: Vec<Position2D>, powers: Vec<f64>) -> Slot {
    Slot {
        delivery,
        positions,
        powers,
        traces: vec![],
        solver_failures: 0,
        qoe_relaxed: 0,
    }
}

/// Simulates `config.slots` slots of `algo` with run seed `seed`.
pub fn run_algorithm(config: &ExperimentConfig, algo: Algo, seed: u64) -> Result<RunTrace> {
    config.validate()?;
    let net = config.network()?;
    let (n, j) = (config.users, config.uavs);
    let slot_s = net.qoe.slot_s;
    let limits = &net.limits;
    let r_los = los_coverage_radius(&net.radio);

    let mut init = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_INIT));
    let mut users: Vec<Position2D> = (0..n)
        .map(|_| uniform_point(net.area_width_m, net.area_height_m, &mut init))
        .collect();
    let fleet = random_fleet(j, &net, &mut init)?;
    let ceiling = limits.power_ceiling();
    let start_powers: Vec<f64> = (0..j)
        .map(|_| limits.p_min_mw + init.random::<f64>() * (ceiling - limits.p_min_mw))
        .collect();
    let mut move_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_MOBILITY));
    let mut mobility = UserMobility::new(
        n,
        config.user_speed,
        slot_s,
        net.area_width_m,
        net.area_height_m,
        &mut move_rng,
    );
    let mut delivery_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_DELIVERY));

    let (centers, radius) = circle_layout(j, &net);
    let circular = matches!(algo, Algo::Ctjo | Algo::Ctuc | Algo::Ctwuc);
    let full_power = matches!(algo, Algo::Supc | Algo::Ctuc);
    let mut x = if circular {
        circle_positions(&centers, radius, 0, slot_s)
    } else {
        fleet
    };
    let mut p = if full_power {
        vec![limits.p_max_mw; j]
    } else {
        start_powers
    };
    let mut qs = VirtualQueues::zeros(n, j);
    let p_tilde = vec![limits.p_tilde_mw; j];
    let mut slots = Vec::with_capacity(config.slots);

    for t in 1..=config.slots {
        let gamma = aut_solve(&qs.z, net.lyapunov.v, net.qoe.u_dl_max);
        // positions the UAVs fly in this slot when they are not optimized
        let here = if circular {
            circle_positions(&centers, radius, t, slot_s)
        } else {
            x.clone()
        };
        let placement = if algo == Algo::Ctwuc {
            BinaryMatrix::zeros(j, n)
        } else {
            let fleet = FleetState {
                uavs: here.clone(),
                powers: p.clone(),
                users: users.clone(),
            };
            cpt_place(&qs.q, &fleet, &net.radio, &net.qoe, limits.e_max_m)?
        };
        let c_th = required_rates(&placement, &here, &users, &net.qoe, limits.e_max_m)?;
        let cached = cached_flags(&placement, &here, &users, limits.e_max_m);
        let problem = Dpt2Problem {
            qs: &qs,
            c_th: &c_th,
            users: &users,
            x_prev: &x,
            config: &net,
        };
        let fixed_plan = |s: BinaryMatrix| BlockPlan {
            delivery: DeliveryMode::Fixed(s),
            trajectory: false,
            power: true,
        };

        let slot = match algo {
            Algo::F2e2cp => {
                let out = algorithm1(&problem, &p)?;
                Slot {
                    delivery: out.delivery,
                    positions: out.positions,
                    powers: out.powers,
                    traces: out.traces,
                    solver_failures: out.solver_failures,
                    qoe_relaxed: out.qoe_relaxed,
                }
            }
            Algo::Suwpc | Algo::Ctwuc => {
                let s = random_delivery(&here, &users, r_los, &mut delivery_rng);
                let start = ScaLocalPoint {
                    positions: here.clone(),
                    powers: p.clone(),
                };
                optimized(&problem, start, fixed_plan(s))?
            }
            Algo::Supc => fixed(
                random_delivery(&here, &users, r_los, &mut delivery_rng),
                here,
                p.clone(),
            ),
            Algo::Ctjo => {
                let start = ScaLocalPoint {
                    positions: here,
                    powers: p.clone(),
                };
                optimized(
                    &problem,
                    start,
                    BlockPlan {
                        delivery: DeliveryMode::Optimize,
                        trajectory: false,
                        power: true,
                    },
                )?
            }
            Algo::Ctuc => {
                let start = ScaLocalPoint {
                    positions: here,
                    powers: p.clone(),
                };
                optimized(
                    &problem,
                    start,
                    BlockPlan {
                        delivery: DeliveryMode::Optimize,
                        trajectory: false,
                        power: false,
                    },
                )?
            }
        };

        let rates = achievable_rates(
            &slot.positions,
            &users,
            &slot.delivery,
            &slot.powers,
            &net.radio,
        )?;
        let p_tot: Vec<f64> = slot
            .powers
            .iter()
            .map(|q| q + limits.p_circuit_mw)
            .collect();
        qs = update_queues(&qs, &c_th, &rates, &p_tot, &gamma, &net.lyapunov, &p_tilde)?;
        slots.push(SlotRecord {
            t,
            servers: slot.delivery.servers(),
            powers: slot.powers.clone(),
            positions: slot.positions.clone(),
            users: users.clone(),
            rates,
            c_th,
            gamma,
            cached,
            stability: stability_metrics(&qs, t)?,
            objective_traces: slot.traces,
            solver_failures: slot.solver_failures,
            qoe_relaxed: slot.qoe_relaxed,
        });
        x = slot.positions;
        p = slot.powers;
        mobility.step(&mut users, &mut move_rng);
    }
    Ok(RunTrace {
        algo,
        seed,
        slot_s,
        slots,
        final_queues: qs,
    })
}

/// The proposed scheme.
pub fn run_f2e2cp(config: &ExperimentConfig, seed: u64) -> Result<RunTrace> {
    run_algorithm(config, Algo::F2e2cp, seed)
}

/// One of the five benchmarks.
pub fn run_benchmark(config: &ExperimentConfig, seed: u64, algo: Algo) -> Result<RunTrace> {
    if algo == Algo::F2e2cp {
        return Err(Error::Config("f2e2cp is not a benchmark".into()));
    }
    run_algorithm(config, algo, seed)
}
