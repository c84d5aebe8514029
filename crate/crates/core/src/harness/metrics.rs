use super::config::ExperimentConfig;
use super::run::RunTrace;
use crate::paoi::{accumulated_intensity, expected_edge_arrival, expected_paoi};

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// `Σ_i log2(1 + ū_i)`.
    pub profit: f64,
    /// `Σ_j p̄_j^tot` (mW), circuit power included.
    pub total_power_mw: f64,
    /// `profit − ρ · total power`.
    pub energy_eff: f64,
    pub jain: f64,
    pub epaoi_theory_s: f64,
    pub epaoi_empirical_s: f64,
    /// `Σ_t Σ_i Σ_j s_ij(t)`.
    pub assignments: usize,
}

/// `(Σx)² / (n Σx²)`; zero when every entry is zero.
pub fn jain_index(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        0.0
    } else {
        sum * sum / (x.len() as f64 * sq)
    }
}

/// Time-averaged rates `ū_i` over the whole trace.
pub fn mean_rates(trace: &RunTrace) -> Vec<f64> {
    let t = trace.slots.len().max(1) as f64;
    let n = trace.slots.first().map_or(0, |s| s.rates.len());
    (0..n)
        .map(|i| trace.slots.iter().map(|s| s.rates[i]).sum::<f64>() / t)
        .collect()
}

/// Time-averaged total powers `p̄_j^tot` (mW).
pub fn mean_total_powers(trace: &RunTrace, p_circuit_mw: f64) -> Vec<f64> {
    let t = trace.slots.len().max(1) as f64;
    let j = trace.slots.first().map_or(0, |s| s.powers.len());
    (0..j)
        .map(|k| {
            trace
                .slots
                .iter()
                .map(|s| s.powers[k] + p_circuit_mw)
                .sum::<f64>()
                / t
        })
        .collect()
}

/// Expected PAoI averaged over users at interval `paoi_interval` with the
/// analytic edge-arrival term, and the same with the edge-arrival term
/// rebuilt from the measured number of deliveries. Infinite when some user
/// receives no packets or nothing was ever delivered.
pub fn expected_paoi_pair(
    config: &ExperimentConfig,
    slot_s: f64,
    slots: usize,
    assignments: usize,
) -> (f64, f64) {
    let params = config.paoi(slot_s);
    let q = config.paoi_interval;
    let theta_a = accumulated_intensity(&params, q);
    let edge = expected_edge_arrival(&params);
    let mut total = 0.0;
    for i in 0..config.users {
        match expected_paoi(&params, q, 2, i, &theta_a) {
            Ok(v) => total += v,
            Err(_) => return (f64::INFINITY, f64::INFINITY),
        }
    }
    let theory = total / config.users as f64;
    if assignments == 0 {
        return (theory, f64::INFINITY);
    }
    let measured =
        config.users as f64 * (params.packet_bits + params.content_bits) * slots as f64 * slot_s
            / (2.0 * params.content_bits * assignments as f64);
    (theory, theory - edge + measured)
}

pub fn metrics(trace: &RunTrace, config: &ExperimentConfig) -> Summary {
    let u = mean_rates(trace);
    let profit: f64 = u.iter().map(|v| (1.0 + v).log2()).sum();
    let total_power_mw: f64 = mean_total_powers(trace, config.p_circuit_mw).iter().sum();
    let assignments = trace
        .slots
        .iter()
        .map(|s| s.servers.iter().flatten().count())
        .sum();
    let (epaoi_theory_s, epaoi_empirical_s) =
        expected_paoi_pair(config, trace.slot_s, trace.slots.len(), assignments);
    Summary {
        profit,
        total_power_mw,
        energy_eff: profit - config.rho * total_power_mw,
        jain: jain_index(&u),
        epaoi_theory_s,
        epaoi_empirical_s,
        assignments,
    }
}

/// Field-wise mean of several summaries.
pub fn average(summaries: &[Summary]) -> Summary {
    let k = summaries.len() as f64;
    let mean = |f: fn(&Summary) -> f64| summaries.iter().map(f).sum::<f64>() / k;
    Summary {
        profit: mean(|s| s.profit),
        total_power_mw: mean(|s| s.total_power_mw),
        energy_eff: mean(|s| s.energy_eff),
        jain: mean(|s| s.jain),
        epaoi_theory_s: mean(|s| s.epaoi_theory_s),
        epaoi_empirical_s: mean(|s| s.epaoi_empirical_s),
        assignments: (summaries.iter().map(|s| s.assignments).sum::<usize>() as f64 / k).round()
            as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_extremes() {
        assert_eq!(jain_index(&[2.0; 5]), 1.0);
        assert!((jain_index(&[3.0, 0.0, 0.0, 0.0]) - 0.25).abs() < 1e-15);
        assert_eq!(jain_index(&[0.0; 3]), 0.0);
    }

    #[test]
    fn full_utilization_reproduces_theory() {
        let cfg = ExperimentConfig {
            users: 30,
            uavs: 5,
            ..ExperimentConfig::default()
        };
        let (theory, emp) = expected_paoi_pair(&cfg, 9.7, 300, 5 * 300);
        assert!((theory - emp).abs() < 1e-9 * theory);
        let (_, half) = expected_paoi_pair(&cfg, 9.7, 300, 5 * 150);
        assert!(half > emp);
        assert_eq!(expected_paoi_pair(&cfg, 9.7, 300, 0).1, f64::INFINITY);
    }
}
