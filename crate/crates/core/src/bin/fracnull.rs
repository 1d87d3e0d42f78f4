use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::Parser;
use fracnull::scenario::{execute, load_config, Command};

/// Null-control synthesis and nonlocal solves from a scenario file.
#[derive(Debug, Parser)]
#[command(name = "fracnull", version)]
struct Cli {
    /// Scenario file; repeat to run several scenarios concurrently.
    #[arg(long = "config", required = true)]
    config: Vec<PathBuf>,
    /// verify-linear, synthesize, solve or calculus-selftest.
    #[arg(long)]
    command: String,
    /// Output directory. With several configs each gets a subdirectory named after its file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn run_one(path: &Path, command: Command, out: PathBuf, seed: Option<u64>) -> i32 {
    let result = load_config(path).and_then(|mut cfg| {
        if let Some(seed) = seed {
            cfg.numerics.seed = seed;
        }
        execute(&cfg, command, &out)
    });
    match result {
        Ok(outcome) => {
            let r = &outcome.report.report;
            println!(
                "{}: {} {} ({}/{} verdicts) -> {}",
                path.display(),
                r.command,
                r.outcome,
                r.verdicts_passed,
                r.verdicts_total,
                outcome.report_path.display()
            );
            for v in outcome.report.verdicts.iter().filter(|v| !v.passed) {
                eprintln!("  failed {}: {:e} not {} {:e}", v.name, v.value, relation(v), v.threshold);
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn relation(v: &fracnull::scenario::Verdict) -> &'static str {
    use fracnull::scenario::Relation::*;
    match v.relation {
        AtMost => "<=",
        Below => "<",
        AtLeast => ">=",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let code = if cli.config.len() == 1 {
        run_one(&cli.config[0], command, cli.out.clone(), cli.seed)
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = cli
                .config
                .iter()
                .map(|path| {
                    let stem = path.file_stem().map(PathBuf::from).unwrap_or_else(|| "scenario".into());
                    let out = cli.out.join(stem);
                    s.spawn(move || run_one(path, command, out, cli.seed))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap_or(3)).max().unwrap_or(0)
        })
    };
    ExitCode::from(code as u8)
}
