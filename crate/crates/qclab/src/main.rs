use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qclab::plot::emit_plots;
use qclab::{run, ExperimentConfig, Report, RunError};

#[derive(Parser)]
#[command(name = "qclab", version, about = "Run quasiconformal analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config; writes report.json and tables/.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Finest grid size; the refinement ladder halves from it.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Render plots/*.svg for a report.json.
    Plot { report: PathBuf },
}

const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, out, seed, grid } => run_cmd(config, out, seed, grid),
        Command::Plot { report } => plot_cmd(report),
    }
}

fn run_cmd(path: PathBuf, out: Option<PathBuf>, seed: Option<u64>, grid: Option<usize>) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qclab: {e}");
            return ExitCode::from(USAGE);
        }
    };
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    if let Some(n) = grid {
        cfg.set_finest_grid(n);
    }
    let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("qclab: {e}");
            return ExitCode::from(USAGE);
        }
        Err(e) => {
            eprintln!("qclab: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = report.write(&dir) {
        eprintln!("qclab: cannot write {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    for f in report.failures() {
        eprintln!("FAIL {f}");
    }
    println!("{} {}", report.experiment, if report.pass { "PASS" } else { "FAIL" });
    ExitCode::from(if report.pass { 0 } else { 1 })
}

fn plot_cmd(path: PathBuf) -> ExitCode {
    let report = match Report::read(&path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qclab: cannot read {}: {e}", path.display());
            return ExitCode::from(USAGE);
        }
    };
    let dir = path.parent().map(PathBuf::from).unwrap_or_default();
    match emit_plots(&report, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qclab: {e}");
            ExitCode::from(1)
        }
    }
}
