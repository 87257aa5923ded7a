use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;

use g2lab::run::{output_dir, run_file, status_line, worst_status, RunOptions};
use g2lab::scenario::Command;

/// Invariant G2-cobordism flows, horizontal lifts and 3-form checks.
#[derive(Parser, Debug)]
#[command(name = "g2lab", version)]
struct Cli {
    /// What to run; must match the `command` field of each scenario if present.
    command: Command,
    /// Scenario JSON files.
    #[arg(long = "scenario", required = true, num_args = 1..)]
    scenarios: Vec<PathBuf>,
    /// Output directory (one subdirectory per scenario when several are given).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for several scenarios.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Check the reduced relation in its literal trace form.
    #[arg(long)]
    paper_literal: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        paper_literal: cli.paper_literal,
    };
    let many = cli.scenarios.len() > 1;
    let run = |path: &PathBuf| run_file(path, Some(cli.command), &output_dir(&cli.out, path, many), opts);
    let reports = if cli.jobs > 1 && many {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
            Ok(pool) => pool.install(|| cli.scenarios.par_iter().map(run).collect::<Vec<_>>()),
            Err(e) => {
                eprintln!("g2lab: cannot start worker pool: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        cli.scenarios.iter().map(run).collect()
    };
    for r in &reports {
        println!("{}", status_line(r));
        for line in r.summary_lines() {
            println!("{line}");
        }
    }
    ExitCode::from(worst_status(&reports).exit_code())
}
