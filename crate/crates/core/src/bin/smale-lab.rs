use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use smale_lab::config::RunConfig;
use smale_lab::run::{execute, exit_code, Command, EXIT_FAILED_CHECKS};

#[derive(Parser)]
#[command(name = "smale-lab", version, about = "Covers, samples and isometry checks for Smale spaces")]
struct Cli {
    /// JSON run configuration; without it the preset is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Preset::GoldenSft)]
    preset: Preset,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads. Suites run serially: the lazily filled sample
    /// depends on request order.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    GoldenSft,
    GoldenTorus,
    Cat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Model constants.
    Describe,
    /// Per-level cover statistics.
    Covers {
        #[arg(long, default_value_t = 10)]
        depth: u32,
    },
    /// Partition-of-unity checks.
    Pou {
        #[arg(long, default_value_t = 6)]
        level: u32,
    },
    /// Aperiodic sample up to a level.
    Sample {
        #[arg(long, default_value_t = 5)]
        max_level: u32,
    },
    /// A verification suite, or `all`.
    Verify {
        suite: String,
        #[arg(long)]
        nmax: Option<i64>,
        #[arg(long, value_delimiter = ',')]
        j: Option<Vec<u32>>,
    },
}

fn config(cli: &Cli) -> smale_lab::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => match cli.preset {
            Preset::GoldenSft => RunConfig::golden_sft(),
            Preset::GoldenTorus => RunConfig::torus([[1, 1], [1, 0]]),
            Preset::Cat => RunConfig::cat(),
        },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Cmd::Verify { nmax, j, .. } = &cli.cmd {
        if let Some(n) = nmax {
            let n = (*n).max(0);
            cfg.suites.quasi_invariance.n_max = n as u32;
            cfg.suites.t_blocks.n_max = n;
        }
        if let Some(j) = j {
            cfg.suites.quasi_invariance.j = j.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match &cli.cmd {
        Cmd::Describe => Command::Describe,
        Cmd::Covers { depth } => Command::Covers { depth: *depth },
        Cmd::Pou { level } => Command::Pou { level: *level },
        Cmd::Sample { max_level } => Command::Sample { max_level: *max_level },
        Cmd::Verify { suite, .. } => Command::Verify { suite: suite.clone() },
    };
    if cli.threads > 1 {
        eprintln!("note: --threads {} ignored, suites run serially", cli.threads);
    }
    let res = config(&cli).and_then(|cfg| execute(&cmd, &cfg));
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECKS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
