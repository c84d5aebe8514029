//! Repetitions, averaging and CSV persistence.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{Algo, ExperimentConfig};
use super::metrics::{average, metrics, Summary};
use super::run::{derive_seed, run_algorithm, RunTrace};
use crate::error::{Error, Result};

const STREAM_REPS: u64 = 0x5245_5053;

pub const TRACE_HEADER: [&str; 12] = [
    "t", "rep", "algo", "entity", "id", "x", "y", "p_mw", "u_bpshz", "SQ", "SZ", "SH",
];
pub const SUMMARY_HEADER: [&str; 8] = [
    "algo",
    "reps",
    "profit",
    "total_power_mw",
    "energy_eff",
    "jain",
    "epaoi_theory_s",
    "epaoi_empirical_s",
];

/// Seed of repetition `rep` under master seed `seed`; shared by every
/// algorithm so they face the same users.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(seed, STREAM_REPS.wrapping_add(rep as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoResult {
    pub algo: Algo,
    pub runs: Vec<RunTrace>,
    pub per_rep: Vec<Summary>,
    pub summary: Summary,
}

/// Runs `config.reps` repetitions of `algo` in parallel.
pub fn run_reps(config: &ExperimentConfig, algo: Algo) -> Result<AlgoResult> {
    config.validate()?;
    let runs = (0..config.reps)
        .into_par_iter()
        .map(|rep| run_algorithm(config, algo, rep_seed(config.seed, rep)))
        .collect::<Result<Vec<_>>>()?;
    let per_rep: Vec<Summary> = runs.iter().map(|r| metrics(r, config)).collect();
    let summary = average(&per_rep);
    Ok(AlgoResult {
        algo,
        runs,
        per_rep,
        summary,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_trace_csv(path: &Path, results: &[AlgoResult]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(TRACE_HEADER).map_err(&err)?;
    for res in results {
        for (rep, run) in res.runs.iter().enumerate() {
            for s in &run.slots {
                let head = [s.t.to_string(), rep.to_string(), res.algo.to_string()];
                let tail = [
                    s.stability.0.to_string(),
                    s.stability.1.to_string(),
                    s.stability.2.to_string(),
                ];
                for (j, (x, p)) in s.positions.iter().zip(&s.powers).enumerate() {
                    let mid = [
                        "uav".into(),
                        j.to_string(),
                        x.x.to_string(),
                        x.y.to_string(),
                        p.to_string(),
                        String::new(),
                    ];
                    w.write_record(head.iter().chain(&mid).chain(&tail))
                        .map_err(&err)?;
                }
                for (i, (u, r)) in s.users.iter().zip(&s.rates).enumerate() {
                    let mid = [
                        "user".into(),
                        i.to_string(),
                        u.x.to_string(),
                        u.y.to_string(),
                        String::new(),
                        r.to_string(),
                    ];
                    w.write_record(head.iter().chain(&mid).chain(&tail))
                        .map_err(&err)?;
                }
            }
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_summary_csv(path: &Path, results: &[AlgoResult]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(SUMMARY_HEADER).map_err(&err)?;
    for res in results {
        let s = &res.summary;
        w.write_record([
            res.algo.to_string(),
            res.runs.len().to_string(),
            s.profit.to_string(),
            s.total_power_mw.to_string(),
            s.energy_eff.to_string(),
            s.jain.to_string(),
            s.epaoi_theory_s.to_string(),
            s.epaoi_empirical_s.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every algorithm in `algos` and, with `out`, writes `trace.csv` and
/// `summary.csv` there.
pub fn run_experiments(
    config: &ExperimentConfig,
    algos: &[Algo],
    out: Option<&Path>,
) -> Result<Vec<AlgoResult>> {
    let results = algos
        .iter()
        .map(|&a| run_reps(config, a))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_trace_csv(&dir.join("trace.csv"), &results)?;
        write_summary_csv(&dir.join("summary.csv"), &results)?;
    }
    Ok(results)
}

/// [`run_experiments`] for the configured algorithm alone.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<AlgoResult> {
    let mut res = run_experiments(config, &[config.algo], out)?;
    Ok(res.remove(0))
}
