use clap::Parser;
use lrquench_cli::{load_config, CliError, Command, Run};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 1 an invariant check failed (outputs are still
/// written), 2 configuration error, 3 numerical or ensemble failure, 4 I/O.
#[derive(Parser, Debug)]
#[command(
    name = "lrquench",
    version,
    about = "Long-range disordered Hubbard chain: spectra, DMFT checks and quench dynamics"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` file, or a JSON sidecar from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; LRQUENCH_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 or absent uses the config value.
    #[arg(long)]
    workers: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = load_config(&cli.config, cli.command)?;
    if let Some(s) = cli.seed {
        cfg.params.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(o) = std::env::var_os("LRQUENCH_OUT").filter(|o| !o.is_empty()) {
        cfg.out = PathBuf::from(o);
    }
    if cfg.workers > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    let outcome = Run::new(cli.command, cfg).execute()?;
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    println!("metadata: {}", outcome.sidecar.display());
    Ok(outcome.all_pass())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Model(m) = &e {
                let seeds = m.failed_sub_seeds();
                if !seeds.is_empty() {
                    let list: Vec<String> = seeds.iter().map(|s| format!("{s:#018x}")).collect();
                    eprintln!("failed sub-seeds: {}", list.join(", "));
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
