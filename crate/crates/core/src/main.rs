use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ctxnoise::dataset::{generate_synthetic, write_dataset};
use ctxnoise::harness::{
    learning_summary, results_csv, run_active_learning, run_detection_suite, run_pseudo, suite_csv, suite_summary,
    sweep, sweep_csv, to_json, DatasetSpec, ExperimentConfig, ExperimentLog, Mode,
};
use ctxnoise::{Error, Result};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "CTXNOISE_OUT";

#[derive(Parser)]
#[command(
    name = "ctxnoise",
    version,
    about = "Context-aware noisy label detection experiments"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file
    GenData(Common),
    /// Compare detectors at fixed removal counts
    Detect(Common),
    /// Batch-incremental learning with noisy annotation
    ActiveLearn(Common),
    /// Batch-incremental learning with pseudo labels
    Pseudo(Common),
    /// Sweep noise rates and thresholds, CNLD against SN
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config in key = value format
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: $CTXNOISE_OUT or ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds overriding the config
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Option<Vec<u64>>,
    /// Single seed overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Print one line per run
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out)?;
        Ok((cfg, out))
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

fn gen_data(c: &Common) -> Result<()> {
    let (cfg, out) = c.load()?;
    let DatasetSpec::Synthetic { config, fixed_seed } = &cfg.dataset else {
        return Err(Error::Config("gen-data needs `dataset = synthetic`".into()));
    };
    let seed = fixed_seed.unwrap_or(cfg.seeds[0]);
    let (ds, _) = generate_synthetic(&ctxnoise::dataset::SyntheticConfig { seed, ..config.clone() })?;
    write(&out, "dataset.txt", &write_dataset(&ds, seed))?;
    println!("wrote {} instances to {}", ds.len(), out.join("dataset.txt").display());
    Ok(())
}

fn detect(c: &Common) -> Result<()> {
    let (cfg, out) = c.load()?;
    let per_seed = cfg
        .seeds
        .par_iter()
        .map(|&s| run_detection_suite(&cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = per_seed.into_iter().flatten().collect();
    let hash = cfg.hash();
    write(&out, "results.csv", &suite_csv(&hash, &rows))?;
    let summary = suite_summary(&hash, &rows);
    write(&out, "summary.json", &to_json(&summary))?;
    for r in &summary.rows {
        let nep = r
            .nep
            .map_or("-".to_string(), |s| format!("{:.3} +- {:.3}", s.mean, s.std));
        println!("omega {:.2}  {:<13}  NEP {nep}", r.omega, r.method);
    }
    Ok(())
}

fn learning(c: &Common, pseudo: bool) -> Result<()> {
    let (cfg, out) = c.load()?;
    let modes = cfg.modes_or(if pseudo { &Mode::PSEUDO } else { &Mode::ACTIVE });
    let cells: Vec<(Mode, u64)> = modes
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let logs = cells
        .par_iter()
        .map(|&(m, s)| {
            if pseudo {
                run_pseudo(&cfg, m, s)
            } else {
                run_active_learning(&cfg, m, s)
            }
        })
        .collect::<Result<Vec<ExperimentLog>>>()?;
    if c.verbose > 0 {
        for l in &logs {
            println!("{} final accuracy {:.4}", l.run_id, l.final_accuracy());
        }
    }
    write(&out, "results.csv", &results_csv(&logs))?;
    let summary = learning_summary(&cfg.hash(), &logs);
    write(&out, "summary.json", &to_json(&summary))?;
    for m in &summary.modes {
        if let Some(s) = m.final_accuracy {
            println!("{:<17} final accuracy {:.4} +- {:.4}", m.mode, s.mean, s.std);
        }
    }
    Ok(())
}

fn run_sweep(c: &Common) -> Result<()> {
    let (cfg, out) = c.load()?;
    let outcome = sweep(&cfg)?;
    write(&out, "results.csv", &results_csv(&outcome.logs))?;
    write(&out, "sweep.csv", &sweep_csv(&outcome.rows))?;
    write(&out, "summary.json", &to_json(&outcome.rows))?;
    for r in &outcome.rows {
        println!(
            "omega {:.2} beta {:.2}  gain {:+.2} +- {:.2} points",
            r.omega, r.beta, r.gain.mean, r.gain.std
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match &cli.command {
        Command::GenData(c) => gen_data(c),
        Command::Detect(c) => detect(c),
        Command::ActiveLearn(c) => learning(c, false),
        Command::Pseudo(c) => learning(c, true),
        Command::Sweep(c) => run_sweep(c),
    };
    match result {
        Ok(()) => {
            println!("done in {:.1}s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
