use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emfactor::identities::IdentityId;
use emfactor_cli::cache::RunSummary;
use emfactor_cli::commands::{cmd_bands, cmd_report, cmd_resolvent, cmd_sweep, cmd_verify, RunOptions};
use emfactor_cli::config::RunConfig;
use emfactor_cli::CliError;

/// Residual checks, Bloch bands and resolvent diagnostics for periodic
/// Maxwell media.
#[derive(Parser)]
#[command(name = "emfactor", version)]
struct Cli {
    /// TOML or JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root. Falls back to the config, then EMFACTOR_OUT, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute even when a cached result exists.
    #[arg(long, global = true)]
    force: bool,
    /// Comma-separated identity names to check.
    #[arg(long, global = true, value_delimiter = ',')]
    identities: Option<Vec<String>>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite.
    Verify,
    /// Compute Bloch bands along a path.
    Bands,
    /// Compare the factorized resolvent with a dense solve.
    Resolvent,
    /// Run commands over a list of media, resuming from cache.
    Sweep,
    /// Summarize every run under the output root.
    Report,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(names) = &cli.identities {
        let ids = names
            .iter()
            .map(|s| s.trim().parse::<IdentityId>().map_err(|e| CliError::Config(format!("--identities: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        cfg.verify.identities = Some(ids);
    }
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be positive".into()));
    }
    if cli.jobs.is_some() {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os("EMFACTOR_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { out, force: cli.force, jobs };
    let show = |name: &str, r: RunSummary| {
        let code = r.exit_code();
        println!(
            "{name}: {} (exit {code}) -> {}{}",
            if code == 0 { "PASS" } else { "FAIL" },
            r.dir.display(),
            if r.cache_hit { " [cached]" } else { "" }
        );
        code
    };
    Ok(match cli.command {
        Command::Verify => show("verify", cmd_verify(&cfg, &opts)?),
        Command::Bands => show("bands", cmd_bands(&cfg, &opts)?),
        Command::Resolvent => show("resolvent", cmd_resolvent(&cfg, &opts)?),
        Command::Sweep => show("sweep", cmd_sweep(&cfg, &opts)?),
        Command::Report => {
            let rows = cmd_report(&opts.out)?;
            for r in &rows {
                println!("{:<40} {:<10} exit {}", r.dir, r.command, r.exit_code);
            }
            println!("{} runs -> {}", rows.len(), opts.out.join("report.json").display());
            0
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
