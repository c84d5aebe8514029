//! Virtual queues, the auxiliary-variable tier and greedy cache placement.
//!
//! Queues are stored signed; `[·]^+` is applied wherever a queue is read
//! as a weight.

use rand::Rng;

use crate::channel::{gain_matrix, Position2D, RadioParams};
use crate::error::{Error, Result};
use crate::model::{BinaryMatrix, FleetState, UavLimits};
use crate::qoe::{required_rate, QoeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovParams {
    /// Penalty weight `V`.
    pub v: f64,
    /// Power/utility trade-off `ρ` (per mW).
    pub rho: f64,
    /// Scaling of the QoE-rate target, nominally `J/N`.
    pub phi: f64,
}

impl LyapunovParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 0.0) || !(self.rho >= 0.0) || !(self.phi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need V ≥ 0, ρ ≥ 0, φ > 0 (got {}, {}, {})",
                self.v, self.rho, self.phi
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn plus(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    /// QoE-rate queues, one per user.
    pub q: Vec<f64>,
    /// Auxiliary-rate queues, one per user.
    pub z: Vec<f64>,
    /// Power-budget queues, one per UAV.
    pub h: Vec<f64>,
}

impl VirtualQueues {
    pub fn zeros(users: usize, uavs: usize) -> Self {
        Self {
            q: vec![0.0; users],
            z: vec![0.0; users],
            h: vec![0.0; uavs],
        }
    }

    /// Every queue drawn uniformly from [0, 1].
    pub fn random<R: Rng + ?Sized>(users: usize, uavs: usize, rng: &mut R) -> Self {
        let mut draw = |n: usize| (0..n).map(|_| rng.random::<f64>()).collect();
        let q = draw(users);
        let z = draw(users);
        let h = draw(uavs);
        Self { q, z, h }
    }

    pub fn users(&self) -> usize {
        self.q.len()
    }

    pub fn uavs(&self) -> usize {
        self.h.len()
    }

    /// Rate weight `[Q_i]^+ + [Z_i]^+` of user `i`.
    pub fn rate_weight(&self, i: usize) -> f64 {
        plus(self.q[i]) + plus(self.z[i])
    }

    pub fn rate_weights(&self) -> Vec<f64> {
        (0..self.users()).map(|i| self.rate_weight(i)).collect()
    }

    /// Power price `Vρ + [H_j]^+` of UAV `j`.
    pub fn power_price(&self, j: usize, params: &LyapunovParams) -> f64 {
        params.v * params.rho + plus(self.h[j])
    }
}

fn check_len(name: &str, len: usize, expected: usize) -> Result<()> {
    if len != expected {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {len} entries, expected {expected}"
        )));
    }
    Ok(())
}

/// One queue step: `Q += φ C_th − u`, `Z += γ − u`, `H += p_tot − p̃`.
pub fn update_queues(
    qs: &VirtualQueues,
    c_th: &[f64],
    rates: &[f64],
    p_tot: &[f64],
    gamma: &[f64],
    params: &LyapunovParams,
    p_tilde: &[f64],
) -> Result<VirtualQueues> {
    let (n, j) = (qs.users(), qs.uavs());
    check_len("Z", qs.z.len(), n)?;
    check_len("C_th", c_th.len(), n)?;
    check_len("rates", rates.len(), n)?;
    check_len("gamma", gamma.len(), n)?;
    check_len("p_tot", p_tot.len(), j)?;
    check_len("p_tilde", p_tilde.len(), j)?;
    Ok(VirtualQueues {
        q: (0..n)
            .map(|i| qs.q[i] + params.phi * c_th[i] - rates[i])
            .collect(),
        z: (0..n).map(|i| qs.z[i] + gamma[i] - rates[i]).collect(),
        h: (0..j).map(|k| qs.h[k] + p_tot[k] - p_tilde[k]).collect(),
    })
}

/// Closed-form minimizer of `−V log2(1+γ) + [Z]^+ γ` over `[0, u_max]`.
pub fn aut_solve(z: &[f64], v: f64, u_max: f64) -> Vec<f64> {
    z.iter()
        .map(|&zi| {
            let zp = plus(zi);
            if zp == 0.0 {
                u_max
            } else {
                plus(v / (zp * std::f64::consts::LN_2) - 1.0).min(u_max)
            }
        })
        .collect()
}

/// Greedy cache placement: each UAV caches the file of the user (within
/// `e_max` horizontally) whose queue-weighted power saving from caching is
/// largest, or of its nearest user when none is that close. Returns a J×N
/// matrix where entry (j, i) means UAV `j` holds user `i`'s file.
pub fn cpt_place(
    q: &[f64],
    fleet: &FleetState,
    radio: &RadioParams,
    qoe: &QoeParams,
    e_max: f64,
) -> Result<BinaryMatrix> {
    fleet.validate()?;
    let n = fleet.users.len();
    let uavs = fleet.uavs.len();
    check_len("Q", q.len(), n)?;
    let mut b = BinaryMatrix::zeros(uavs, n);
    if n == 0 {
        return Ok(b);
    }
    let (alpha, beta) = qoe.rate_thresholds_bps()?;
    let w = radio.bandwidth_hz;
    // p(β) − p(α) = (2^{β/W} − 2^{α/W})(σ²W + I)/h
    let lift = 2f64.powf(beta / w) - 2f64.powf(alpha / w);
    let gains = gain_matrix(&fleet.uavs, &fleet.users, radio);
    let noise = radio.noise_power();
    for j in 0..uavs {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !(fleet.uavs[j].distance(&fleet.users[i]) < e_max) {
                continue;
            }
            let interference: f64 = (0..uavs)
                .filter(|&k| k != j)
                .map(|k| fleet.powers[k] * gains[i][k])
                .sum();
            let score = plus(q[i]) * lift * (noise + interference) / gains[i][j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let target = match best {
            Some((i, _)) => i,
            None => nearest(&fleet.uavs[j], &fleet.users),
        };
        b.set(j, target, true);
    }
    Ok(b)
}

fn nearest(from: &Position2D, users: &[Position2D]) -> usize {
    let mut best = 0;
    for (i, u) in users.iter().enumerate() {
        if from.distance_sq(u) < from.distance_sq(&users[best]) {
            best = i;
        }
    }
    best
}

/// Whether some UAV within `e_max` (horizontal) of user `i` caches its file.
pub fn cached_flags(
    placement: &BinaryMatrix,
    uavs: &[Position2D],
    users: &[Position2D],
    e_max: f64,
) -> Vec<bool> {
    (0..users.len())
        .map(|i| {
            (0..uavs.len()).any(|j| placement.get(j, i) && uavs[j].distance(&users[i]) < e_max)
        })
        .collect()
}

/// Per-user QoE rate targets `C_th` (bps/Hz) implied by a placement.
pub fn required_rates(
    placement: &BinaryMatrix,
    uavs: &[Position2D],
    users: &[Position2D],
    qoe: &QoeParams,
    e_max: f64,
) -> Result<Vec<f64>> {
    if placement.rows() != uavs.len() || placement.cols() != users.len() {
        return Err(Error::DimensionMismatch(format!(
            "placement {}x{} for {} UAVs and {} users",
            placement.rows(),
            placement.cols(),
            uavs.len(),
            users.len()
        )));
    }
    let cached = required_rate(true, qoe)?;
    let uncached = required_rate(false, qoe)?;
    Ok(cached_flags(placement, uavs, users, e_max)
        .into_iter()
        .map(|c| if c { cached } else { uncached })
        .collect())
}

/// Per-slot quantities entering the drift-plus-penalty bound.
#[derive(Debug, Clone, Copy)]
pub struct SlotQuantities<'a> {
    pub c_th: &'a [f64],
    pub gamma: &'a [f64],
    /// Transmit powers (mW), circuit power excluded.
    pub powers: &'a [f64],
    pub rates: &'a [f64],
}

/// Right-hand side of the drift-plus-penalty bound, with
/// `B = N u_max² + Σ_j p̂²/2`.
pub fn drift_penalty_upper_bound(
    qs: &VirtualQueues,
    slot: SlotQuantities<'_>,
    params: &LyapunovParams,
    limits: &UavLimits,
    u_dl_max: f64,
) -> Result<f64> {
    let (n, j) = (qs.users(), qs.uavs());
    check_len("C_th", slot.c_th.len(), n)?;
    check_len("gamma", slot.gamma.len(), n)?;
    check_len("rates", slot.rates.len(), n)?;
    check_len("powers", slot.powers.len(), j)?;
    let b = n as f64 * u_dl_max * u_dl_max + j as f64 * limits.p_hat_mw * limits.p_hat_mw / 2.0;
    let mut bound = b;
    for k in 0..j {
        bound -= plus(qs.h[k]) * (limits.p_tilde_mw - limits.p_circuit_mw);
        bound += params.v * params.rho * limits.p_circuit_mw;
        bound += qs.power_price(k, params) * slot.powers[k];
    }
    for i in 0..n {
        bound += plus(qs.q[i]) * params.phi * slot.c_th[i];
        bound -= params.v * (1.0 + slot.gamma[i]).log2();
        bound += plus(qs.z[i]) * slot.gamma[i];
        bound -= qs.rate_weight(i) * slot.rates[i];
    }
    Ok(bound)
}

/// `(max_i [Q_i]^+, max_i [Z_i]^+, max_j [H_j]^+) / t`.
pub fn stability_metrics(qs: &VirtualQueues, t: usize) -> Result<(f64, f64, f64)> {
    if t == 0 {
        return Err(Error::InvalidParameter(
            "stability metrics need t ≥ 1".into(),
        ));
    }
    let peak = |v: &[f64]| v.iter().copied().map(plus).fold(0.0, f64::max) / t as f64;
    Ok((peak(&qs.q), peak(&qs.z), peak(&qs.h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::los_gain_horizontal;
    use crate::channel::LinkGain;
    use crate::qoe::power_for_rate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> LyapunovParams {
        LyapunovParams {
            v: 0.01,
            rho: 0.1,
            phi: 0.08,
        }
    }

    fn setup() -> (RadioParams, QoeParams) {
        let radio = RadioParams::default();
        let q = QoeParams::new(24.0, 5.0, 0.6, 150e6, &radio, 480.0).unwrap();
        (radio, q)
    }

    #[test]
    fn idle_update_keeps_queues() {
        let qs = VirtualQueues {
            q: vec![0.3, -1.0],
            z: vec![0.2, 0.0],
            h: vec![5.0],
        };
        let out = update_queues(
            &qs,
            &[0.0; 2],
            &[0.0; 2],
            &[450.0],
            &[0.0; 2],
            &params(),
            &[450.0],
        )
        .unwrap();
        assert_eq!(out, qs);
    }

    #[test]
    fn q_arithmetic() {
        let qs = VirtualQueues::zeros(1, 1);
        let p = LyapunovParams {
            phi: 1.0,
            ..params()
        };
        let out = update_queues(&qs, &[2.0], &[1.0], &[0.0], &[0.0], &p, &[0.0]).unwrap();
        assert_eq!(out.q, vec![1.0]);
        assert_eq!(out.z, vec![-1.0]);
    }

    #[test]
    fn update_rejects_bad_sizes() {
        let qs = VirtualQueues::zeros(2, 1);
        assert!(
            update_queues(&qs, &[0.0], &[0.0; 2], &[0.0], &[0.0; 2], &params(), &[0.0]).is_err()
        );
    }

    #[test]
    fn random_queues_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let qs = VirtualQueues::random(40, 6, &mut rng);
        assert!(qs
            .q
            .iter()
            .chain(&qs.z)
            .chain(&qs.h)
            .all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn aut_cases() {
        assert_eq!(aut_solve(&[0.0, -3.0], 0.5, 8.0), vec![8.0, 8.0]);
        assert_eq!(aut_solve(&[2.0], 0.0, 8.0), vec![0.0]);
        // V/(Z ln2) − 1 with Z = 1/ln2 and V = 3 → 2
        let g = aut_solve(&[1.0 / std::f64::consts::LN_2], 3.0, 8.0);
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert_eq!(aut_solve(&[1e-6], 1.0, 8.0), vec![8.0]);
    }

    #[test]
    fn cpt_single_user_single_uav() {
        let (radio, qoe) = setup();
        let fleet = FleetState {
            uavs: vec![Position2D::new(0.0, 0.0)],
            powers: vec![100.0],
            users: vec![Position2D::new(400.0, 0.0)],
        };
        let b = cpt_place(&[0.0], &fleet, &radio, &qoe, 250.0).unwrap();
        assert!(b.get(0, 0));
    }

    #[test]
    fn cpt_zero_queues_pick_lowest_index_in_range() {
        let (radio, qoe) = setup();
        let fleet = FleetState {
            uavs: vec![Position2D::new(0.0, 0.0)],
            powers: vec![100.0],
            users: vec![
                Position2D::new(300.0, 0.0),
                Position2D::new(100.0, 0.0),
                Position2D::new(10.0, 0.0),
            ],
        };
        let b = cpt_place(&[0.0; 3], &fleet, &radio, &qoe, 250.0).unwrap();
        assert_eq!(b.first_in_row(0), Some(1));
    }

    #[test]
    fn cpt_matches_brute_force() {
        let (radio, qoe) = setup();
        let (alpha, beta) = qoe.rate_thresholds_bps().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut pos =
                || Position2D::new(rng.random::<f64>() * 500.0, rng.random::<f64>() * 500.0);
            let uavs = vec![pos(), pos()];
            let users = vec![pos(), pos(), pos()];
            let powers = vec![rng.random::<f64>() * 480.0, rng.random::<f64>() * 480.0];
            let q: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 1.0).collect();
            let fleet = FleetState {
                uavs: uavs.clone(),
                powers: powers.clone(),
                users: users.clone(),
            };
            let b = cpt_place(&q, &fleet, &radio, &qoe, 250.0).unwrap();
            for j in 0..2 {
                let mut best = None::<(usize, f64)>;
                for i in 0..3 {
                    if uavs[j].distance(&users[i]) >= 250.0 {
                        continue;
                    }
                    let h = |k: usize| los_gain_horizontal(uavs[k].distance(&users[i]), &radio);
                    let inter = powers[1 - j] * h(1 - j);
                    let gain = LinkGain {
                        gain: h(j),
                        distance: 0.0,
                    };
                    let s = q[i].max(0.0)
                        * (power_for_rate(beta, &gain, inter, &radio)
                            - power_for_rate(alpha, &gain, inter, &radio));
                    if best.is_none_or(|(_, v)| s > v) {
                        best = Some((i, s));
                    }
                }
                let expect = best.map(|b| b.0).unwrap_or_else(|| {
                    (0..3)
                        .min_by(|&a, &c| {
                            uavs[j]
                                .distance(&users[a])
                                .total_cmp(&uavs[j].distance(&users[c]))
                        })
                        .unwrap()
                });
                assert_eq!(b.first_in_row(j), Some(expect));
                assert_eq!(b.row_sum(j), 1);
            }
        }
    }

    #[test]
    fn required_rates_follow_nearby_cache() {
        let (_, qoe) = setup();
        let uavs = vec![Position2D::new(0.0, 0.0), Position2D::new(400.0, 0.0)];
        let users = vec![Position2D::new(10.0, 0.0), Position2D::new(20.0, 0.0)];
        let mut b = BinaryMatrix::zeros(2, 2);
        b.set(0, 0, true);
        b.set(1, 1, true); // too far from user 1 to count
        let r = required_rates(&b, &uavs, &users, &qoe, 250.0).unwrap();
        assert_eq!(r[0], required_rate(true, &qoe).unwrap());
        assert_eq!(r[1], required_rate(false, &qoe).unwrap());
    }

    #[test]
    fn drift_bound_constant_term() {
        let qs = VirtualQueues::zeros(3, 2);
        let limits = UavLimits {
            p_circuit_mw: 0.0,
            ..UavLimits::default()
        };
        let p = LyapunovParams { v: 0.0, ..params() };
        let slot = SlotQuantities {
            c_th: &[0.2; 3],
            gamma: &[1.0; 3],
            powers: &[10.0; 2],
            rates: &[1.0; 3],
        };
        let b = drift_penalty_upper_bound(&qs, slot, &p, &limits, 8.0).unwrap();
        assert!((b - (3.0 * 64.0 + 2.0 * 500.0 * 500.0 / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn drift_bound_decreases_with_rate() {
        let qs = VirtualQueues {
            q: vec![1.0, -1.0],
            z: vec![0.5, 0.0],
            h: vec![3.0],
        };
        let limits = UavLimits::default();
        let lo = SlotQuantities {
            c_th: &[0.2; 2],
            gamma: &[1.0; 2],
            powers: &[10.0],
            rates: &[1.0, 1.0],
        };
        let hi = SlotQuantities {
            rates: &[1.5, 1.0],
            ..lo
        };
        let a = drift_penalty_upper_bound(&qs, lo, &params(), &limits, 8.0).unwrap();
        let b = drift_penalty_upper_bound(&qs, hi, &params(), &limits, 8.0).unwrap();
        assert!((a - b - 1.5 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn drift_bound_term_by_term() {
        let qs = VirtualQueues {
            q: vec![1.5, -0.2],
            z: vec![-0.3, 0.7],
            h: vec![2.0, -4.0],
        };
        let limits = UavLimits::default();
        let p = LyapunovParams {
            v: 2.0,
            rho: 0.1,
            phi: 1.0,
        };
        let slot = SlotQuantities {
            c_th: &[0.3, 0.15],
            gamma: &[2.0, 0.5],
            powers: &[100.0, 50.0],
            rates: &[1.0, 2.0],
        };
        let got = drift_penalty_upper_bound(&qs, slot, &p, &limits, 8.0).unwrap();
        let b = 2.0 * 64.0 + 2.0 * 125_000.0;
        let h_term = -2.0 * 430.0;
        let circuit = 2.0 * 0.1 * 20.0 * 2.0;
        let q_term = 1.5 * 0.3;
        let aux = -2.0 * (3f64.log2() + 1.5f64.log2()) + 0.7 * 0.5;
        let power = (0.2 + 2.0) * 100.0 + 0.2 * 50.0;
        let rate = -(1.5 * 1.0 + 0.7 * 2.0);
        let expect = b + h_term + circuit + q_term + aux + power + rate;
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn stability_metric_cases() {
        let qs = VirtualQueues {
            q: vec![3.0, -1.0],
            z: vec![-2.0],
            h: vec![-5.0],
        };
        assert_eq!(stability_metrics(&qs, 3).unwrap(), (1.0, 0.0, 0.0));
        let (a, _, _) = stability_metrics(&qs, 6).unwrap();
        assert_eq!(a, 0.5);
        assert!(stability_metrics(&qs, 0).is_err());
    }
}
