//! Command-line front end: simulate one trajectory, sweep a load grid, or
//! exercise the self-check battery.  Outputs are plain CSV, LF line endings.

use crate::config::{
    load_run_config, load_sweep_config, output_dir, ConfigError, RunConfig, SweepConfig,
};
use crate::diagnostics::{diagnostics_row, DiagnosticsRow};
use crate::dynamics::{tail_metrics, Dynamics, TraceRecord};
use crate::oracle::run_battery;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Parser, Debug)]
#[command(name = "admsched", version, about = "Random admissible-set scheduling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one configured trajectory and write its CSVs.
    Run {
        /// JSON run description.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured slot count.
        #[arg(long)]
        slots: Option<u64>,
        /// Output directory (default: ADMSCHED_OUTPUT_DIR, then `.`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Repeat a base run over a grid of batch rates and seeds.
    Sweep {
        /// JSON sweep description.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: ADMSCHED_OUTPUT_DIR, then `.`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Cross-check exact counts, draw uniformity and partition structure.
    Oracle {
        /// Largest instance size for enumeration cross-checks.
        #[arg(long, default_value_t = 9)]
        n_max: usize,
        /// Draws for the uniformity test.
        #[arg(long, default_value_t = 200_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Parse real arguments and execute; returns the process exit code.
pub fn run() -> i32 {
    match execute(Cli::parse(), &mut std::io::stdout()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: Cli, out: &mut impl Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, slots, out_dir } => {
            let cfg = load_run_config(&config)?;
            let summary = run_once(&cfg, slots, out_dir.as_deref())?;
            write!(out, "{summary}").expect("stdout");
            Ok(0)
        }
        Command::Sweep { config, out_dir } => {
            let cfg = load_sweep_config(&config)?;
            let summary = run_sweep(&cfg, out_dir.as_deref())?;
            write!(out, "{summary}").expect("stdout");
            Ok(0)
        }
        Command::Oracle { n_max, trials, seed } => {
            let outcomes = run_battery(n_max, trials, seed);
            let mut all_ok = true;
            for o in &outcomes {
                all_ok &= o.passed;
                writeln!(out, "[{}] {}: {}", if o.passed { "ok" } else { "FAIL" }, o.name, o.detail)
                    .expect("stdout");
            }
            Ok(if all_ok { 0 } else { 1 })
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let inner = |w: &mut BufWriter<std::fs::File>| -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{row}")?;
        }
        w.flush()
    };
    inner(&mut w).map_err(io_err(path))
}

fn write_trajectory(path: &Path, trace: &[TraceRecord]) -> Result<(), CliError> {
    let rows: Vec<String> = trace
        .iter()
        .map(|r| format!("{},{},{},{}", r.t, r.total, r.arrived, r.removed))
        .collect();
    write_csv(path, "t,total,arrived,removed", &rows)
}

fn write_terminal(path: &Path, locations: &[f64]) -> Result<(), CliError> {
    let rows: Vec<String> = locations.iter().map(|x| format!("{x}")).collect();
    write_csv(path, "location", &rows)
}

fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<(), CliError> {
    let rows: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{},{},{},{}", r.t, r.total, r.v, r.j, r.ln_w))
        .collect();
    write_csv(path, "t,total,V,J,logw", &rows)
}

/// Execute one run config and write its files; returns the printed summary.
pub fn run_once(
    cfg: &RunConfig,
    slots_override: Option<u64>,
    out_dir: Option<&Path>,
) -> Result<String, CliError> {
    let parts = cfg.build()?;
    let slots = slots_override.unwrap_or(cfg.slots);
    let mut dynamics = Dynamics::new(
        parts.model.clone(),
        parts.arrivals.clone(),
        parts.scheduler.clone(),
        cfg.seed,
    )
    .map_err(ConfigError::from)?;

    let mut trace = Vec::new();
    let mut diag: Vec<DiagnosticsRow> = Vec::new();
    for t in 1..=slots {
        let rec = dynamics.step();
        if rec.t % cfg.thin == 0 || rec.is_empty || rec.t == slots {
            trace.push(rec);
        }
        if cfg.diagnostics_every > 0 && (t % cfg.diagnostics_every == 0 || t == slots) {
            diag.push(diagnostics_row(t, dynamics.config(), &parts.partition, &parts.model));
        }
    }

    let dir = output_dir(out_dir);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let stem = cfg.output_stem.clone().unwrap_or_else(|| "run".into());
    let trajectory = dir.join(format!("{stem}_trajectory.csv"));
    let terminal = dir.join(format!("{stem}_terminal.csv"));
    write_trajectory(&trajectory, &trace)?;
    write_terminal(&terminal, &dynamics.config().locations())?;
    let mut written = vec![trajectory, terminal];
    if !diag.is_empty() {
        let path = dir.join(format!("{stem}_diagnostics.csv"));
        write_diagnostics(&path, &diag)?;
        written.push(path);
    }

    let tail = tail_metrics(&trace, slots, 0.5);
    let mut s = format!(
        "slots {slots} seed {} final {} empty_visits {}\n",
        cfg.seed,
        dynamics.config().len(),
        dynamics.empty_visits()
    );
    s += &format!(
        "tail slope {:.6} r_squared {:.4} mean {:.2} over {} records\n",
        tail.slope, tail.r_squared, tail.mean, tail.records
    );
    for p in &written {
        s += &format!("wrote {}\n", p.display());
    }
    Ok(s)
}

/// One sweep grid point.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub tail_slope: f64,
    pub r_squared: f64,
    pub tail_mean: f64,
    pub empty_visits: u64,
}

fn sweep_cell(base: &RunConfig, lambda: f64, seed: u64, tail_start: f64) -> Result<SweepRow, CliError> {
    let mut cfg = base.with_batch_rate(lambda)?;
    cfg.seed = seed;
    let parts = cfg.build()?;
    let mut dynamics =
        Dynamics::new(parts.model, parts.arrivals, parts.scheduler, seed).map_err(ConfigError::from)?;
    let result = dynamics.run(cfg.slots, cfg.thin);
    let tail = tail_metrics(&result.trace, cfg.slots, tail_start);
    Ok(SweepRow {
        lambda,
        seed,
        tail_slope: tail.slope,
        r_squared: tail.r_squared,
        tail_mean: tail.mean,
        empty_visits: result.empty_visits,
    })
}

/// Execute every grid point of a sweep; rows come back sorted by rate then
/// seed regardless of execution order.
pub fn sweep_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    let grid: Vec<(f64, u64)> = cfg
        .lambdas
        .iter()
        .flat_map(|&l| cfg.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let mut rows = if cfg.parallel {
        grid.par_iter()
            .map(|&(l, s)| sweep_cell(&cfg.base, l, s, cfg.tail_start))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        grid.iter()
            .map(|&(l, s)| sweep_cell(&cfg.base, l, s, cfg.tail_start))
            .collect::<Result<Vec<_>, _>>()?
    };
    rows.sort_by(|a, b| {
        a.lambda.partial_cmp(&b.lambda).unwrap().then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

pub fn run_sweep(cfg: &SweepConfig, out_dir: Option<&Path>) -> Result<String, CliError> {
    let rows = sweep_rows(cfg)?;
    let dir = output_dir(out_dir);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let stem = cfg.base.output_stem.clone().unwrap_or_else(|| "sweep".into());
    let path = dir.join(format!("{stem}_sweep.csv"));
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.lambda, r.seed, r.tail_slope, r.r_squared, r.tail_mean, r.empty_visits
            )
        })
        .collect();
    write_csv(&path, "lambda,seed,tail_slope,r_squared,tail_mean,empty_visits", &lines)?;

    let mut s = String::new();
    for r in &rows {
        s += &format!(
            "lambda {} seed {} tail_slope {:.6} r_squared {:.4} tail_mean {:.2} empty_visits {}\n",
            r.lambda, r.seed, r.tail_slope, r.r_squared, r.tail_mean, r.empty_visits
        );
    }
    s += &format!("wrote {}\n", path.display());
    Ok(s)
}
