use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_epr::regime;
use cascade_epr::runner::{self, format_number};
use cascade_epr::scenario::{Engine, Scenario};
use cascade_epr::sweep::{self, SweepSpec};
use cascade_epr::{Error, Result};

#[derive(Parser)]
#[command(name = "cascade-epr", version, about = "Cascaded cavity EPR entanglement simulator")]
struct Cli {
    /// Worker threads for sweeps and the Fock engine (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Omit the timestamp from CSV headers.
    #[arg(long, global = true)]
    reproducible: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory as CSV.
    Run {
        scenario: PathBuf,
        /// Override the scenario's engine.
        #[arg(long)]
        engine: Option<Engine>,
        /// CSV destination; defaults to the scenario's output path, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write one row per value.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        engine: Option<Engine>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several engines on one scenario and report their gaps.
    Compare {
        scenario: PathBuf,
        /// Comma-separated; the first is the reference.
        #[arg(long, value_delimiter = ',', required = true)]
        engine: Vec<Engine>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario and print its regime-of-validity report as JSON.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        engine: Option<Engine>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes to `out` or stdout; returns whether stdout carried the data.
fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<bool> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)?;
            w.flush()?;
            Ok(false)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
            Ok(true)
        }
    }
}

/// Summary lines go to stderr when stdout carries the CSV.
fn report(lines: &[String], data_on_stdout: bool) {
    for line in lines {
        if data_on_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let reproducible = cli.reproducible;
    match cli.command {
        Command::Run { scenario, engine, out } => {
            let s = Scenario::from_path(&scenario)?;
            let engine = engine.unwrap_or(s.engine);
            let result = runner::run_scenario(&s, engine)?;
            let comments = runner::header_comments(&format!("{} ({engine})", s.name), reproducible);
            let out = out.or_else(|| s.output.path.as_ref().map(PathBuf::from));
            let on_stdout = emit(out.as_deref(), |w| {
                runner::write_run_csv(&result, &s.output.columns, s.output.every, &comments, w)
            })?;
            report(&runner::summary_lines(&result)?, on_stdout);
        }
        Command::Sweep { spec, engine, out } => {
            let spec = SweepSpec::from_path(&spec)?;
            let result = sweep::run_sweep(&spec, engine)?;
            let comments = runner::header_comments(
                &format!("{} ({}, {})", spec.name, result.parameter.name(), result.engine),
                reproducible,
            );
            let on_stdout = emit(out.as_deref(), |w| sweep::write_sweep_csv(&result, &comments, w))?;
            report(&[format!("{} rows", result.rows.len())], on_stdout);
        }
        Command::Compare { scenario, engine, out } => {
            let s = Scenario::from_path(&scenario)?;
            let cmp = runner::compare_engines(&s, &engine)?;
            let names: Vec<&str> = engine.iter().map(|e| e.name()).collect();
            let comments = runner::header_comments(
                &format!("{} (compare {})", s.name, names.join(", ")),
                reproducible,
            );
            let on_stdout = emit(out.as_deref(), |w| {
                runner::write_comparison_csv(&cmp, &s.output.columns, s.output.every, &comments, w)
            })?;
            let mut lines = Vec::new();
            for pair in &cmp.gaps {
                for g in &pair.gaps {
                    lines.push(format!(
                        "gap {} vs {}: {} {}",
                        pair.other,
                        pair.reference,
                        g.name,
                        format_number(g.gap)
                    ));
                }
                let max = pair.gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
                lines.push(format!(
                    "max gap {} vs {}: {}",
                    pair.other,
                    pair.reference,
                    format_number(max)
                ));
            }
            for r in &cmp.runs {
                lines.extend(r.diagnostics.iter().map(|d| format!("{}: {d}", r.engine)));
            }
            report(&lines, on_stdout);
        }
        Command::Validate { scenario, engine, out } => {
            let s = Scenario::from_path(&scenario)?;
            s.validate_for(engine.unwrap_or(s.engine))?;
            let Some(physical) = &s.physical else {
                println!("{}: valid; no [physical] block, no regime report", s.name);
                return Ok(());
            };
            let block = s.regime.as_ref().ok_or_else(|| {
                Error::Config("[physical] needs a [regime] block with nbar_max".into())
            })?;
            let rep = regime::full_report(&physical.params(), block.nbar_max, &block.thresholds)?;
            let json = serde_json::to_string_pretty(&rep)
                .map_err(|e| Error::Io(e.to_string()))?;
            emit(out.as_deref(), |w| Ok(writeln!(w, "{json}")?))?;
            if !rep.all_pass {
                let failed: Vec<&str> = rep
                    .conditions
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                eprintln!("regime conditions not met: {}", failed.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cascade-epr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
