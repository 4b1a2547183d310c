use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use farmtalk::cli::{run, validate, BackendChoice, RunConfig, RunError};

/// Extract identifier-value records from farm interview transcripts.
#[derive(Debug, Parser)]
#[command(name = "farmtalk", version)]
struct Args {
    /// Run manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    backend: BackendChoice,
    /// Gold records CSV; overrides the manifest's `resources.gold`.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for bootstrap resampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interviews processed concurrently.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Chat-completions URL; selects the HTTP backend.
    #[arg(long, env = "FARMTALK_CHAT_ENDPOINT")]
    chat_endpoint: Option<String>,
    /// Replay file; selects the replay backend.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Check every configured resource and exit.
    #[arg(long)]
    validate_only: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let a = Args::parse();
    let cfg = RunConfig {
        manifest: a.manifest,
        backend: a.backend,
        gold: a.gold,
        out: a.out,
        seed: a.seed,
        workers: a.workers,
        chat_endpoint: a.chat_endpoint,
        replay: a.replay,
    };
    if a.validate_only {
        let diags = validate(&cfg);
        for d in &diags {
            eprintln!("{d}");
        }
        if diags.is_empty() {
            println!("configuration ok");
            return ExitCode::SUCCESS;
        }
        return ExitCode::from(2);
    }
    match run(&cfg) {
        Ok(s) => {
            for i in &s.interviews {
                let fmt = |n: Option<usize>| n.map_or("-".to_string(), |n| n.to_string());
                match &i.error {
                    Some(e) => println!("{}: FAILED ({e})", i.interview_id),
                    None => println!("{}: ns={} llm={} corrections={}", i.interview_id, fmt(i.ns_records), fmt(i.llm_records), i.corrections),
                }
            }
            println!("outputs in {}", cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
