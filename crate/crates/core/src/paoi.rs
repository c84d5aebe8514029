//! Preprocessing-queue model and expected peak age of information.
//!
//! Time here is counted in preprocessing intervals `q` (one second each),
//! not communication slots.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PaoiParams {
    /// Packet size `l` (bits).
    pub packet_bits: f64,
    /// Content size `L` (bits).
    pub content_bits: f64,
    /// Packets preprocessed per interval `n_c`.
    pub n_c: u64,
    /// New-arrival intensity per interval; entry `q − 1` holds `ϑ_w^q`.
    pub vartheta_w: Vec<f64>,
    /// Per-user request probabilities (sum to 1).
    pub request_prob: Vec<f64>,
    pub users: usize,
    pub uavs: usize,
    /// Communication slot length `Δt` (s).
    pub slot_s: f64,
}

impl PaoiParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(Error::InvalidParameter("n_c must be positive".into()));
        }
        if self.vartheta_w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "arrival intensities must be non-negative".into(),
            ));
        }
        if self.request_prob.len() != self.users {
            return Err(Error::DimensionMismatch(format!(
                "{} request probabilities for {} users",
                self.request_prob.len(),
                self.users
            )));
        }
        let total: f64 = self.request_prob.iter().sum();
        if self.request_prob.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "request probabilities sum to {total}"
            )));
        }
        if self.uavs == 0
            || !(self.content_bits > 0.0)
            || !(self.packet_bits > 0.0)
            || !(self.slot_s > 0.0)
        {
            return Err(Error::InvalidParameter(
                "UAV count, sizes and slot length must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `ϑ_w^q`; zero beyond the configured horizon.
    pub fn arrival(&self, q: usize) -> f64 {
        self.vartheta_w.get(q - 1).copied().unwrap_or(0.0)
    }
}

/// Queue length in the next interval: `[N_a + N_w − n_c]^+`.
pub fn queue_step(accumulated: u64, arrivals: u64, n_c: u64) -> u64 {
    (accumulated + arrivals).saturating_sub(n_c)
}

/// Poisson-approximation intensities; entry `q − 1` holds `ϑ_a^q`.
pub fn accumulated_intensity(params: &PaoiParams, q_max: usize) -> Vec<f64> {
    let nc = params.n_c as f64;
    let mut out = Vec::with_capacity(q_max);
    if q_max == 0 {
        return out;
    }
    out.push(0.0);
    for q in 2..=q_max {
        let prev = params.arrival(q - 1) + out[q - 2];
        out.push((prev - nc * (1.0 - (-prev).exp())).max(0.0));
    }
    out
}

fn poisson_pmf(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    if len == 0 {
        return out;
    }
    if lambda == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ln_l = lambda.ln();
    let mut lp = -lambda;
    out[0] = lp.exp();
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        lp += ln_l - (k as f64).ln();
        *o = lp.exp();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    /// `P(N_a^q = n)` for `n` up to the truncation point.
    pub mass: Vec<f64>,
    /// Probability lost beyond the truncation point.
    pub deficit: f64,
    /// True when the deficit still exceeds 1e−9 after growing the support.
    pub flagged: bool,
}

impl Pmf {
    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

fn pmf_with_support(params: &PaoiParams, q: usize, support: usize) -> Vec<f64> {
    let nc = params.n_c as usize;
    let mut f = vec![0.0; support + 1];
    f[0] = 1.0;
    for prev in 1..q {
        let arrivals = poisson_pmf(params.arrival(prev), support + nc + 1);
        // distribution of N_a + N_w on [0, support + n_c]
        let mut sum = vec![0.0; support + nc + 1];
        for (a, &fa) in f.iter().enumerate() {
            if fa == 0.0 {
                continue;
            }
            for (w, s) in sum[a..].iter_mut().enumerate() {
                *s += fa * arrivals[w];
            }
        }
        let mut next = vec![0.0; support + 1];
        next[0] = sum[..=nc].iter().sum();
        next[1..].copy_from_slice(&sum[nc + 1..=nc + support]);
        f = next;
    }
    f
}

/// Exact distribution of `N_a^q` under the queue recursion with Poisson
/// arrivals. The support starts at `truncation` (default: mean + 10√mean of
/// the arrivals so far, plus `n_c`) and doubles while more than 1e−9 of the
/// mass falls outside it.
pub fn exact_pmf(params: &PaoiParams, q: usize, truncation: Option<usize>) -> Result<Pmf> {
    params.validate()?;
    if q == 0 {
        return Err(Error::InvalidParameter(
            "intervals are numbered from 1".into(),
        ));
    }
    let mut support = truncation.unwrap_or_else(|| {
        let m: f64 = (1..q).map(|k| params.arrival(k)).sum();
        (m + 10.0 * m.sqrt()).ceil() as usize + params.n_c as usize
    });
    let explicit = truncation.is_some();
    for attempt in 0.. {
        let mass = pmf_with_support(params, q, support);
        let deficit = (1.0 - mass.iter().sum::<f64>()).max(0.0);
        if deficit <= 1e-9 || explicit || attempt == 6 {
            return Ok(Pmf {
                mass,
                deficit,
                flagged: deficit > 1e-9,
            });
        }
        support = support * 2 + 1;
    }
    unreachable!()
}

/// One realization of the queue: arrivals `N_w^q` and lengths `N_a^q`
/// (index `q − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub accumulated: Vec<u64>,
    pub arrivals: Vec<u64>,
}

pub fn simulate_queue<R: Rng + ?Sized>(
    params: &PaoiParams,
    q_max: usize,
    rng: &mut R,
) -> Result<QueueTrace> {
    let mut accumulated = Vec::with_capacity(q_max);
    let mut arrivals = Vec::with_capacity(q_max);
    for q in 1..=q_max {
        let na = match q {
            1 => 0,
            2 => queue_step(0, arrivals[0], params.n_c),
            _ => queue_step(accumulated[q - 2], arrivals[q - 2], params.n_c),
        };
        accumulated.push(na);
        let lambda = params.arrival(q);
        let nw = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::InvalidParameter(format!("Poisson({lambda}): {e}")))?
                .sample(rng) as u64
        } else {
            0
        };
        arrivals.push(nw);
    }
    Ok(QueueTrace {
        accumulated,
        arrivals,
    })
}

/// Empirical distribution of `N_a^q` over `runs` simulated queues.
pub fn monte_carlo_pmf<R: Rng + ?Sized>(
    params: &PaoiParams,
    q: usize,
    runs: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut counts: Vec<u64> = Vec::new();
    for _ in 0..runs {
        let trace = simulate_queue(params, q, rng)?;
        let n = trace.accumulated[q - 1] as usize;
        if n >= counts.len() {
            counts.resize(n + 1, 0);
        }
        counts[n] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / runs as f64).collect())
}

/// Expected edge-arrival duration `(l + L) N Δt / (2 J L)` (s).
pub fn expected_edge_arrival(params: &PaoiParams) -> f64 {
    (params.packet_bits + params.content_bits) * params.users as f64 * params.slot_s
        / (2.0 * params.uavs as f64 * params.content_bits)
}

/// Expected PAoI (s) of packet `m` of user `i` generated in interval `q`.
/// Defined for the first packet of the first interval and for `q, m > 1`.
pub fn expected_paoi(
    params: &PaoiParams,
    q: usize,
    m: usize,
    i: usize,
    vartheta_a: &[f64],
) -> Result<f64> {
    let nc = params.n_c as f64;
    let edge = expected_edge_arrival(params);
    match (q, m) {
        (1, 1) => Ok(1.0 / nc + edge),
        (q, m) if q > 1 && m > 1 => {
            let pr = *params
                .request_prob
                .get(i)
                .ok_or_else(|| Error::DimensionMismatch(format!("user {i} of {}", params.users)))?;
            let lambda = params.arrival(q) * pr;
            if !(lambda > 0.0) {
                return Err(Error::NoArrivals {
                    user: i,
                    interval: q,
                });
            }
            let theta_a = *vartheta_a.get(q - 1).ok_or_else(|| {
                Error::DimensionMismatch(format!("no accumulated intensity for interval {q}"))
            })?;
            Ok(1.0 / lambda + 1.0 / nc + theta_a / nc + edge)
        }
        _ => Err(Error::InvalidParameter(format!(
            "expected PAoI is defined for (q, m) = (1, 1) or q, m > 1; got ({q}, {m})"
        ))),
    }
}
