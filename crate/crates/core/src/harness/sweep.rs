use rayon::prelude::*;
use serde::Serialize;

use super::active::{run_active_learning, ExperimentLog};
use super::config::{ExperimentConfig, Mode};
use super::output::Stat;
use crate::error::Result;

/// CNLD against SN final accuracy for one (omega, beta) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub beta: f64,
    pub cnld: Stat,
    pub sn: Stat,
    /// Per-seed CNLD minus SN, in accuracy points (percent).
    pub gain: Stat,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// SN runs per omega followed by CNLD runs per (omega, beta), seeds ascending.
    pub logs: Vec<ExperimentLog>,
}

fn with(cfg: &ExperimentConfig, omega: f64, beta: f64) -> ExperimentConfig {
    ExperimentConfig {
        omega,
        beta,
        ..cfg.clone()
    }
}

/// Runs every (omega, seed) SN cell and (omega, beta, seed) CNLD cell in
/// parallel; results come back in cell order regardless of scheduling.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut sn_cells = Vec::new();
    let mut cnld_cells = Vec::new();
    for &o in &cfg.omegas {
        sn_cells.extend(seeds.iter().map(|&s| (o, s)));
        for &b in &cfg.betas {
            cnld_cells.extend(seeds.iter().map(|&s| (o, b, s)));
        }
    }
    let sn_logs = sn_cells
        .par_iter()
        .map(|&(o, s)| run_active_learning(&with(cfg, o, cfg.beta), Mode::Sn, s))
        .collect::<Result<Vec<_>>>()?;
    let cnld_logs = cnld_cells
        .par_iter()
        .map(|&(o, b, s)| run_active_learning(&with(cfg, o, b), Mode::Cnld, s))
        .collect::<Result<Vec<_>>>()?;

    let per_seed = seeds.len();
    let mut rows = Vec::new();
    for (oi, &omega) in cfg.omegas.iter().enumerate() {
        let sn = &sn_logs[oi * per_seed..(oi + 1) * per_seed];
        for (bi, &beta) in cfg.betas.iter().enumerate() {
            let start = (oi * cfg.betas.len() + bi) * per_seed;
            let cnld = &cnld_logs[start..start + per_seed];
            let acc = |logs: &[ExperimentLog]| Stat::of(logs.iter().map(|l| Some(l.final_accuracy())));
            rows.push(SweepRow {
                omega,
                beta,
                cnld: acc(cnld).expect("at least one seed"),
                sn: acc(sn).expect("at least one seed"),
                gain: Stat::of(
                    cnld.iter()
                        .zip(sn)
                        .map(|(c, s)| Some(100.0 * (c.final_accuracy() - s.final_accuracy()))),
                )
                .expect("at least one seed"),
            });
        }
    }
    let mut logs = sn_logs;
    logs.extend(cnld_logs);
    Ok(SweepOutcome { rows, logs })
}
