use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use linescan_core::config::PlanConfig;
use linescan_core::pipeline::{self, InputFormat, RunStatus};

const EXIT_ERROR: u8 = 1;
const EXIT_WARNING: u8 = 2;

#[derive(Parser)]
#[command(
    name = "linescan",
    version,
    about = "Coverage path planning for line-scan surface inspection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ply,
    Xyz,
    Stl,
}

impl From<Format> for InputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Ply => InputFormat::Ply,
            Format::Xyz => InputFormat::Xyz,
            Format::Stl => InputFormat::Stl,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment a part, place scan paths, order them and write the plan.
    Plan {
        /// Point cloud (.ply, .xyz/.csv) or mesh (.stl).
        input: PathBuf,
        /// Flat TOML file of configuration keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Write only report.json.
        #[arg(long)]
        report_only: bool,
        /// Override one configuration key (repeatable), e.g. --set speed=80.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Recompute coverage of an existing plan against a cloud.
    Verify {
        plan: PathBuf,
        cloud: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

fn run(cli: Cli) -> linescan_core::Result<u8> {
    match cli.command {
        Command::Plan {
            input,
            config,
            seed,
            out,
            format,
            report_only,
            overrides,
        } => {
            let mut cfg = match &config {
                Some(path) => PlanConfig::load(path).map_err(|e| e.in_stage("config"))?,
                None => PlanConfig::default(),
            };
            cfg.apply_env(std::env::vars())
                .map_err(|e| e.in_stage("config"))?;
            for o in &overrides {
                cfg.apply_override(o).map_err(|e| e.in_stage("config"))?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let run =
                pipeline::run_pipeline(&input, format.map(Into::into), &cfg, &out, report_only)?;
            print!("{}", run.report.to_json());
            for w in &run.report.warnings {
                log::warn!("{w}");
            }
            Ok(match run.report.status {
                RunStatus::Success => 0,
                RunStatus::Warning => EXIT_WARNING,
            })
        }
        Command::Verify {
            plan,
            cloud,
            format,
        } => {
            let report = pipeline::verify_plan(&plan, &cloud, format.map(Into::into))?;
            println!(
                "coverage {:.6} ({} of {} points, {} uncovered)",
                report.rate,
                report.covered,
                report.total,
                report.uncovered.len()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                src = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
