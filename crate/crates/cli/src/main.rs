use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use uavcache::harness::{run_experiments, Algo, ExperimentConfig};

/// Simulates UAV content provision and writes trace.csv and summary.csv.
#[derive(Debug, Parser)]
#[command(name = "uavcache", version)]
struct Args {
    /// f2e2cp, suwpc, supc, ctjo, ctuc, ctwuc, or `all`.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    uavs: Option<usize>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Lyapunov penalty weight.
    #[arg(long)]
    v: Option<f64>,
    /// Power price in the objective.
    #[arg(long)]
    rho: Option<f64>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let all = args.algo.as_deref() == Some("all");
    if let Some(a) = args.algo.as_deref().filter(|_| !all) {
        cfg.algo = a.parse()?;
    }
    cfg.users = args.users.unwrap_or(cfg.users);
    cfg.uavs = args.uavs.unwrap_or(cfg.uavs);
    cfg.slots = args.slots.unwrap_or(cfg.slots);
    cfg.reps = args.reps.unwrap_or(cfg.reps);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.v = args.v.unwrap_or(cfg.v);
    cfg.rho = args.rho.unwrap_or(cfg.rho);
    cfg.validate()?;

    let algos = if all {
        Algo::ALL.to_vec()
    } else {
        vec![cfg.algo]
    };
    let results = run_experiments(&cfg, &algos, Some(&args.out))
        .with_context(|| format!("experiment writing to {}", args.out.display()))?;
    println!(
        "{:<8} {:>10} {:>12} {:>12} {:>7} {:>10} {:>10}",
        "algo", "profit", "power_mw", "energy_eff", "jain", "paoi_th", "paoi_emp"
    );
    for r in &results {
        let s = &r.summary;
        println!(
            "{:<8} {:>10.4} {:>12.3} {:>12.4} {:>7.4} {:>10.3} {:>10.3}",
            r.algo.name(),
            s.profit,
            s.total_power_mw,
            s.energy_eff,
            s.jain,
            s.epaoi_theory_s,
            s.epaoi_empirical_s
        );
    }
    println!(
        "wrote {}/trace.csv and {}/summary.csv",
        args.out.display(),
        args.out.display()
    );
    Ok(())
}
