//! `reflang`: run the reflected Langevin experiments from the command line.
//!
//! Exit status: 0 when every statistical check passes, 2 when one fails,
//! 1 on configuration or I/O errors.

mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use reflang::Execution;
use toml::{Table, Value};

use manifest::{manifest_from_table, parse_manifest, parse_value};

#[derive(Parser)]
#[command(name = "reflang", version, about = "Reflected Langevin process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Main CSV data file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report file; the report goes to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Run replicas on one thread. Results are identical either way.
    #[arg(long)]
    sequential: bool,
    /// Any other parameter of the experiment, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one Kolmogorov path, optionally stopped or bounced.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        stopped_from: Option<f64>,
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        bounce: bool,
        /// CSV of the reflected path.
        #[arg(long)]
        reflected: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Excursion statistics of the reflected process.
    #[command(allow_negative_numbers = true)]
    Excursions {
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        min_height: Option<f64>,
        /// CSV of the tail summaries.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Exit law of the symmetric 1/3-stable process from an interval.
    #[command(allow_negative_numbers = true)]
    ExitLaw {
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// CSV of the goodness-of-fit summary.
        #[arg(long)]
        gof: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time-scaling identity of the reflected process and of the stopped
    /// process lifetimes.
    #[command(allow_negative_numbers = true)]
    Scaling {
        #[arg(long)]
        factor: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        /// CSV of the stopped-process lifetimes.
        #[arg(long)]
        lifetimes: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Box-counting dimension of the zero set.
    #[command(allow_negative_numbers = true)]
    Dimension {
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Probability of reaching a threshold before 0 from small positions.
    #[command(allow_negative_numbers = true)]
    Entrance {
        #[arg(long, value_delimiter = ',')]
        xs: Option<Vec<f64>>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the experiment described by a TOML manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run acceptance checks 1 to 15 (or a subset) at full size.
    Acceptance {
        /// Comma-separated check numbers, e.g. `3,7`
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<usize>>,
        /// JSON file collecting every outcome
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

struct TableBuilder(Table);

impl TableBuilder {
    fn new(command: &str) -> Self {
        let mut t = Table::new();
        t.insert("command".into(), Value::String(command.into()));
        Self(t)
    }

    fn put(&mut self, key: &str, v: Option<impl Into<Value>>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), v.into());
        }
        self
    }

    fn float(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        self.put(key, v)
    }

    fn int(&mut self, key: &str, v: Option<u64>) -> Result<&mut Self> {
        let v = v.map(i64::try_from).transpose().with_context(|| format!("{key}: too large"))?;
        Ok(self.put(key, v))
    }

    fn path(&mut self, key: &str, p: Option<PathBuf>) -> &mut Self {
        self.put(key, p.map(|p| p.to_string_lossy().into_owned()))
    }

    fn list(&mut self, key: &str, v: Option<Vec<f64>>) -> &mut Self {
        self.put(key, v.map(|xs| Value::Array(xs.into_iter().map(Value::Float).collect())))
    }

    fn common(&mut self, c: Common) -> Result<Table> {
        self.int("seed", c.seed)?;
        self.path("out", c.out).path("report", c.report);
        if c.sequential {
            self.put("execution", Some("sequential"));
        }
        for kv in c.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv}: expected key=value"))?;
            let k = k.trim();
            anyhow::ensure!(!self.0.contains_key(k), "--set {k}: key given twice");
            self.0.insert(k.to_string(), parse_value(v.trim()));
        }
        Ok(std::mem::take(&mut self.0))
    }
}

enum Outcome {
    Passed,
    Failed,
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    let table = match cmd {
        Command::Run { manifest } => {
            let text = std::fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            let m = parse_manifest(&text)?;
            return finish(run::run_experiment(&m)?);
        }
        Command::Acceptance { checks, report, sequential } => {
            let ids = checks.unwrap_or_else(|| (1..=reflang::experiments::criteria::TITLES.len()).collect());
            run::check_ids(&ids)?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            return finish(run::run_acceptance(&ids, exec, report.as_deref())?);
        }
        Command::Simulate { steps, dt, stopped_from, v0, bounce, reflected, common } => {
            let mut b = TableBuilder::new("simulate");
            b.int("steps", steps)?.float("dt", dt).float("stopped_from", stopped_from).float("v0", v0);
            if bounce {
                b.put("bounce", Some(true));
            }
            b.path("reflected", reflected).common(common)?
        }
        Command::Excursions { steps, dt, min_height, stats, common } => {
            let mut b = TableBuilder::new("excursions");
            b.int("steps", steps)?.float("dt", dt).float("min_height", min_height).path("stats", stats);
            b.common(common)?
        }
        Command::ExitLaw { x, eps, replicas, gof, common } => {
            let mut b = TableBuilder::new("exit-law");
            b.float("x", x).float("eps", eps).int("replicas", replicas)?.path("gof", gof);
            b.common(common)?
        }
        Command::Scaling { factor, replicas, steps, dt, lifetimes, common } => {
            let mut b = TableBuilder::new("scaling");
            b.float("factor", factor).int("replicas", replicas)?.int("steps", steps)?.float("dt", dt);
            b.path("lifetimes", lifetimes).common(common)?
        }
        Command::Dimension { steps, dt, scales, common } => {
            let mut b = TableBuilder::new("dimension");
            b.int("steps", steps)?.float("dt", dt).list("scales", scales);
            b.common(common)?
        }
        Command::Entrance { xs, threshold, replicas, dt, common } => {
            let mut b = TableBuilder::new("entrance");
            b.list("xs", xs).float("threshold", threshold).int("replicas", replicas)?.float("dt", dt);
            b.common(common)?
        }
    };
    let m = manifest_from_table(table)?;
    finish(run::run_experiment(&m)?)
}

fn finish(passed: bool) -> Result<Outcome> {
    Ok(if passed { Outcome::Passed } else { Outcome::Failed })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => {
            eprintln!("statistical check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
