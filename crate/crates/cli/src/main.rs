use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use hhtab_core::domain::Region;
use hhtab_core::engine::{EngineError, NoiseMode};
use hhtab_core::exec::Execution;
use hhtab_core::io::{validate_inputs, write_outputs, ErrorClass, RunConfig, ValidatedBundle};
use hhtab_core::planner::{
    evaluate_plan, reference_levels, PlanLevel, PlanRequest, Target, DEFAULT_CONFIDENCE,
};
use hhtab_core::synth::{generate, reference_level_configs, write_dataset, SynthParams};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hhtab", version, about = "Differentially private household tabulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Serial,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    Us,
    Pr,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic input bundle (households, geography, T01001,
    /// iterations, config) for trying the pipeline out.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        households: usize,
        #[arg(long, value_enum, default_value = "us")]
        region: RegionArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check the config and every input file without tabulating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Validate, tabulate and write tables.csv and accounting.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "parallel")]
        execution: ExecArg,
        /// Release exact counts (test oracle mode). Output is watermarked.
        #[arg(long)]
        unsafe_noiseless: bool,
    },
    /// Convert MOE targets or budgets to a per-level budget table.
    Plan {
        /// JSON plan request; omit to plan the published MOE targets.
        #[arg(long)]
        request: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        race_multiplicity: usize,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
    },
    /// Serve the planning API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => load(&config).map_or_else(|c| c, |b| {
            info!(
                "valid: {} households, {} levels, {} T01001 groups, {} empty blocks dropped",
                b.records.len(),
                b.levels.len(),
                b.t01001.len(),
                b.dropped_blocks
            );
            ExitCode::SUCCESS
        }),
        Command::Run {
            config,
            out,
            seed,
            execution,
            unsafe_noiseless,
        } => run(&config, &out, seed, execution, unsafe_noiseless),
        Command::Plan {
            request,
            race_multiplicity,
            confidence,
        } => plan(request.as_deref(), race_multiplicity, confidence),
        Command::Serve { bind } => serve(bind),
        Command::Synth {
            out,
            households,
            region,
            seed,
        } => synth(&out, households, region, seed),
    }
}

/// Validation failures go to the operator log only.
fn load(config: &Path) -> Result<ValidatedBundle, ExitCode> {
    let file = config.display().to_string();
    let cfg = RunConfig::load(config).map_err(|e| {
        error!("{e}");
        ExitCode::from(e.class.exit_code() as u8)
    })?;
    validate_inputs(&cfg, &file).map_err(|report| {
        error!("{report}");
        ExitCode::from(report.exit_code() as u8)
    })
}

fn run(config: &Path, out: &Path, seed: Option<u64>, execution: ExecArg, noiseless: bool) -> ExitCode {
    let bundle = match load(config) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let noise = if noiseless {
        warn!("--unsafe-noiseless: writing exact counts; output is not private");
        NoiseMode::UnsafeNoiseless
    } else {
        NoiseMode::Seeded(seed.unwrap_or(bundle.config.seed))
    };
    let exec = match execution {
        ExecArg::Serial => Execution::Serial,
        ExecArg::Parallel => Execution::Parallel,
    };
    let output = match bundle.run(noise, exec) {
        Ok(o) => o,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(match e {
                EngineError::Budget(_) => ErrorClass::Budget.exit_code() as u8,
                _ => EXIT_RUNTIME,
            });
        }
    };
    if let Err(e) = write_outputs(out, &output) {
        error!("writing {}: {e}", out.display());
        return ExitCode::from(ErrorClass::Io.exit_code() as u8);
    }
    info!(
        "wrote {} shells; total loss {} (add/remove), {} (replace-one)",
        output.shells.len(),
        output.report.total_unbounded,
        output.report.total_bounded
    );
    ExitCode::SUCCESS
}

fn plan(request: Option<&Path>, race_multiplicity: usize, confidence: f64) -> ExitCode {
    let req = match request {
        Some(path) => {
            let parsed = std::fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|s| serde_json::from_str::<PlanRequest>(&s).map_err(|e| e.to_string()));
            match parsed {
                Ok(r) => r,
                Err(e) => {
                    error!("{}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            }
        }
        None => PlanRequest {
            levels: reference_levels()
                .into_iter()
                .map(|(geo_level, iter_level, moe)| PlanLevel {
                    geo_level,
                    iter_level,
                    household_type: Target::Moe(moe),
                    tenure: Target::Moe(moe),
                })
                .collect(),
            race_multiplicity,
            confidence,
        },
    };
    match evaluate_plan(&req) {
        Ok(result) => {
            println!("{}", serde_json::to_string_pretty(&result).expect("plan serializes"));
            ExitCode::SUCCESS
        }
        Err(errors) => {
            for e in errors {
                error!("{e}");
            }
            ExitCode::from(ErrorClass::Config.exit_code() as u8)
        }
    }
}

fn synth(out: &Path, households: usize, region: RegionArg, seed: u64) -> ExitCode {
    let params = SynthParams {
        region: match region {
            RegionArg::Us => Region::US,
            RegionArg::Pr => Region::PR,
        },
        seed,
        households,
        ..SynthParams::default()
    };
    let data = generate(&params);
    match std::fs::create_dir_all(out).and_then(|_| write_dataset(out, &data, reference_level_configs(), seed)) {
        Ok(config) => {
            info!("wrote {households} synthetic households; config at {}", config.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("writing {}: {e}", out.display());
            ExitCode::from(ErrorClass::Io.exit_code() as u8)
        }
    }
}

fn serve(bind: SocketAddr) -> ExitCode {
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let result: anyhow::Result<()> = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind).await?;
        info!("serving /v1 on {}", listener.local_addr()?);
        axum::serve(listener, hhtab_cli::router()).await?;
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
