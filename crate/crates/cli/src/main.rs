use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mer_cli::commands::{
    cmd_annotate, cmd_dump_tables, cmd_eval, cmd_flow, cmd_legend, cmd_regions, cmd_stats, cmd_viz,
    emit_diagnostic, EvalArgs, FlowSource, EXIT_INPUT, EXIT_OK, EXIT_USAGE,
};
use mer_cli::config::{PipelineConfig, CONFIG_ENV};
use mer_cli::eval::EvalTask;
use mer_cli::manifest::SourceFilter;

#[derive(Parser)]
#[command(name = "mer", version, long_version = mer_cli::LONG_VERSION, about = "Micro-expression instruction data pipeline")]
struct Cli {
    /// Pipeline config (TOML); defaults to $MER_CONFIG, then built-in values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct SourceArgs {
    /// Keep only samples from this source dataset (repeatable).
    #[arg(long = "filter-source")]
    filter_source: Vec<String>,
    /// Drop samples from this source dataset (repeatable).
    #[arg(long = "exclude-source")]
    exclude_source: Vec<String>,
}

impl SourceArgs {
    fn filter(&self) -> SourceFilter {
        SourceFilter {
            only: self.filter_source.clone(),
            exclude: self.exclude_source.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write every region mask as a PNG plus coverage.json.
    Regions {
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        /// Landmarks are in [0, 1].
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate flow between two frames, or copy an existing flow file.
    Flow {
        #[arg(long, requires = "frame_b", conflicts_with = "flo")]
        frame_a: Option<PathBuf>,
        #[arg(long, requires = "frame_a")]
        frame_b: Option<PathBuf>,
        #[arg(long, required_unless_present = "frame_a")]
        flo: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Annotate every sample of a manifest.
    Annotate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; outputs do not depend on this.
        #[arg(long)]
        parallel: Option<usize>,
        /// Use the frame before apex instead of onset.
        #[arg(long)]
        consecutive: bool,
        /// Also write HSV renderings.
        #[arg(long)]
        viz: bool,
        #[command(flatten)]
        sources: SourceArgs,
    },
    /// Render a flow file with the direction color convention.
    Viz {
        #[arg(long)]
        flow: PathBuf,
        /// Compensate and gamma-correct using these landmarks first.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        #[arg(long, requires = "landmarks")]
        normalized: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the direction color wheel.
    Legend {
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emotion, AU and source distribution tables.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        sources: SourceArgs,
    },
    /// Score predictions against a ground-truth manifest.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        task: EvalTask,
        /// Emotion classes to score, comma separated; defaults to those present.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        sources: SourceArgs,
    },
    /// Inspect the effective configuration.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the canonical TOML.
    Show,
    /// Print the sha256 of the canonical TOML.
    Hash,
    /// Write the built-in rule tables as JSON.
    DumpTables {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut cfg = PipelineConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Regions {
            landmarks,
            width,
            height,
            normalized,
            out,
        } => cmd_regions(&landmarks, (width, height), normalized, &out),
        Command::Flow {
            frame_a,
            frame_b,
            flo,
            out,
        } => {
            let source = match (frame_a, frame_b, flo) {
                (Some(a), Some(b), None) => FlowSource::Frames(a, b),
                (None, None, Some(p)) => FlowSource::File(p),
                _ => unreachable!("clap enforces one source"),
            };
            cmd_flow(&source, &cfg, &out)
        }
        Command::Annotate {
            manifest,
            out,
            parallel,
            consecutive,
            viz,
            sources,
        } => {
            if let Some(n) = parallel {
                cfg.parallel = n;
            }
            cfg.pipeline.consecutive_frames |= consecutive;
            cfg.pipeline.write_visualizations |= viz;
            cfg.validate()?;
            cmd_annotate(&manifest, &sources.filter(), &cfg, &out)
        }
        Command::Viz {
            flow,
            landmarks,
            normalized,
            out,
        } => cmd_viz(
            &flow,
            landmarks.as_deref().map(|p| (p, normalized)),
            &cfg,
            &out,
        ),
        Command::Legend { size, out } => cmd_legend(size, &out),
        Command::Stats {
            manifest,
            json,
            sources,
        } => {
            print!("{}", cmd_stats(&manifest, &sources.filter(), &cfg, json)?);
            Ok(EXIT_OK)
        }
        Command::Eval {
            predictions,
            manifest,
            task,
            classes,
            json,
            sources,
        } => {
            let args = EvalArgs {
                predictions: &predictions,
                manifest: &manifest,
                task,
                filter: sources.filter(),
                classes,
                json,
            };
            print!("{}", cmd_eval(&args, &cfg)?);
            Ok(EXIT_OK)
        }
        Command::Config { action } => match action {
            ConfigAction::Show => {
                print!("{}", cfg.to_canonical_toml());
                Ok(EXIT_OK)
            }
            ConfigAction::Hash => {
                println!("{}", cfg.sha256());
                Ok(EXIT_OK)
            }
            ConfigAction::DumpTables { out } => cmd_dump_tables(&out),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                let code = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    EXIT_USAGE
                } else {
                    EXIT_OK
                };
                return ExitCode::from(code as u8);
            }
            emit_diagnostic("error", "usage", e.to_string().trim_end());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            emit_diagnostic("error", "input", &format!("{e:#}"));
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
