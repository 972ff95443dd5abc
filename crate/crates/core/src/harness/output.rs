//! Machine-readable run outputs: per-batch results CSV and JSON summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::active::ExperimentLog;
use super::suite::{Method, SuiteRow};
use super::sweep::SweepRow;
use crate::prob::{mean, std_dev};

pub const RESULTS_HEADER: &str = "run_id,seed,mode,omega,batch,accuracy,er1,er2,nep,removed,kept";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

pub fn results_csv(logs: &[ExperimentLog]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for log in logs {
        for b in &log.batches {
            let m = b.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{},{},{},{},{}",
                log.run_id,
                log.seed,
                log.mode,
                log.omega,
                b.batch,
                b.accuracy,
                opt(m.and_then(|m| m.er1)),
                opt(m.and_then(|m| m.er2)),
                opt(m.and_then(|m| m.nep)),
                b.removed,
                b.kept
            );
        }
    }
    out
}

/// Detection suite rows in the results schema; accuracy is empty and the
/// fold goes into the run id.
pub fn suite_csv(config_hash: &str, rows: &[SuiteRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{config_hash}-{}-s{}-f{},{},{},{:.6},0,,{},{},{},{},{}",
            r.method,
            r.seed,
            r.fold,
            r.seed,
            r.method,
            r.omega,
            opt(m.er1),
            opt(m.er2),
            opt(m.nep),
            m.removed,
            m.correct_total + m.mislabeled_total - m.removed
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    /// `None` when no value is present.
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Option<Stat> {
        let present: Vec<f64> = values.into_iter().flatten().collect();
        (!present.is_empty()).then(|| Stat {
            mean: mean(&present),
            std: std_dev(&present),
            n: present.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: String,
    pub omega: f64,
    pub final_accuracy: Option<Stat>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningSummary {
    pub config_hash: String,
    pub modes: Vec<ModeSummary>,
}

/// Final accuracy per mode across seeds, modes in first-seen order.
pub fn learning_summary(config_hash: &str, logs: &[ExperimentLog]) -> LearningSummary {
    let mut order = Vec::new();
    for log in logs {
        if !order.contains(&log.mode) {
            order.push(log.mode);
        }
    }
    let modes = order
        .into_iter()
        .map(|mode| {
            let runs: Vec<&ExperimentLog> = logs.iter().filter(|l| l.mode == mode).collect();
            ModeSummary {
                mode: mode.to_string(),
                omega: runs[0].omega,
                final_accuracy: Stat::of(runs.iter().map(|l| Some(l.final_accuracy()))),
                seeds: runs.iter().map(|l| l.seed).collect(),
            }
        })
        .collect();
    LearningSummary {
        config_hash: config_hash.to_string(),
        modes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummaryRow {
    pub method: Method,
    pub omega: f64,
    pub er1: Option<Stat>,
    pub er2: Option<Stat>,
    pub nep: Option<Stat>,
    pub auc: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub config_hash: String,
    pub rows: Vec<SuiteSummaryRow>,
}

/// Means over seeds and folds per (omega index, method). Rows are grouped by
/// the position of the noise setting within each run, which keeps realized
/// NAR rates of different seeds together.
pub fn suite_summary(config_hash: &str, rows: &[SuiteRow]) -> SuiteSummary {
    let mut groups: BTreeMap<(usize, Method), Vec<&SuiteRow>> = BTreeMap::new();
    let mut seen: BTreeMap<(u64, usize, Method), usize> = BTreeMap::new();
    for r in rows {
        let k = seen.entry((r.seed, r.fold, r.method)).or_insert(0);
        groups.entry((*k, r.method)).or_default().push(r);
        *k += 1;
    }
    let rows = groups
        .into_iter()
        .map(|((_, method), g)| SuiteSummaryRow {
            method,
            omega: mean(&g.iter().map(|r| r.omega).collect::<Vec<_>>()),
            er1: Stat::of(g.iter().map(|r| r.metrics.er1)),
            er2: Stat::of(g.iter().map(|r| r.metrics.er2)),
            nep: Stat::of(g.iter().map(|r| r.metrics.nep)),
            auc: Stat::of(g.iter().map(|r| r.auc)),
        })
        .collect();
    SuiteSummary {
        config_hash: config_hash.to_string(),
        rows,
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("omega,beta,cnld_mean,cnld_std,sn_mean,sn_std,gain_mean,gain_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.omega, r.beta, r.cnld.mean, r.cnld.std, r.sn.mean, r.sn.std, r.gain.mean, r.gain.std
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary types serialize");
    s.push('\n');
    s
}
