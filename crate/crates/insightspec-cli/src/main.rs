//! Command line front end for insightspec workspaces.
//!
//! Every subcommand reads a workspace file named by `--workspace`; `train`
//! is the only one that writes it back, and it rewrites nothing beyond the
//! named model's trained parameters. Exit codes: 0 on success, 1 when the
//! workspace or the requested operation fails, 2 for usage errors. Set
//! `INSIGHTSPEC_LOG` to `error`, `info`, or `debug` to control diagnostics
//! on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use insightspec::codec;
use insightspec::dataset::{self, Dataset};
use insightspec::dot::export_dot;
use insightspec::workspace::Workspace;
use insightspec::Metric;
use log::{debug, info};

#[derive(Parser)]
#[command(name = "insightspec", version, about = "Inspect, execute, and match insight workspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Workspace file (.insight.json)
    #[arg(long, value_name = "FILE")]
    workspace: PathBuf,
    /// Override stored seeds for seeded computations in this invocation
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the workspace; print one violation per line
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Execute a named transformation and write the resulting table
    RunTransform {
        #[command(flatten)]
        common: Common,
        /// Registered transformation name
        transform: String,
        /// Output table; `.json` writes typed JSON, anything else CSV
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train a model on a registered dataset, storing its parameters in place
    Train {
        #[command(flatten)]
        common: Common,
        /// Registered model name
        model: String,
        /// Registered dataset name
        dataset: String,
    },
    /// Predict one record with a trained model
    Predict {
        #[command(flatten)]
        common: Common,
        /// Registered model name
        model: String,
        /// The record, as a JSON object of typed values
        record: String,
        /// Fail on categories unseen in training instead of falling back
        #[arg(long)]
        strict: bool,
    },
    /// Score a trained model against a registered dataset
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Registered model name
        model: String,
        /// Registered dataset name
        dataset: String,
        /// Score to compute
        #[arg(long, value_enum)]
        metric: MetricArg,
    },
    /// Print the concrete insights matching an objective, one per line
    Match {
        #[command(flatten)]
        common: Common,
        /// Objective insight name
        objective: String,
    },
    /// Render the workspace graph as Graphviz DOT
    ExportDot {
        #[command(flatten)]
        common: Common,
        /// Output file
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Accuracy,
    Rmse,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Accuracy => Metric::Accuracy,
            MetricArg::Rmse => Metric::Rmse,
        }
    }
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("INSIGHTSPEC_LOG", "error"),
    )
    .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_workspace(path: &Path) -> CliResult<Workspace> {
    let bytes = std::fs::read(path)
        .map_err(|e| format!("cannot read '{}': {e}", path.display()))?;
    let w = codec::deserialize_workspace(&bytes)?;
    info!("loaded workspace '{}' from {}", w.name, path.display());
    Ok(w)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_named_dataset(w: &Workspace, workspace_path: &Path, name: &str) -> CliResult<Dataset> {
    let data = w.load_dataset(name, &base_dir(workspace_path))?;
    debug!("dataset '{name}': {} records", data.records.len());
    Ok(data)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Validate { common } => {
            let w = load_workspace(&common.workspace)?;
            let violations = w.validate();
            for v in &violations {
                println!("{v}");
            }
            debug!("{} violations", violations.len());
            Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::RunTransform { common, transform, out } => {
            let w = load_workspace(&common.workspace)?;
            let t = w
                .transformations
                .get(&transform)
                .ok_or_else(|| format!("unknown transformation '{transform}'"))?;
            let mut datasets = BTreeMap::new();
            for s in &t.sources {
                if !datasets.contains_key(s) {
                    datasets.insert(s.clone(), load_named_dataset(&w, &common.workspace, s)?);
                }
            }
            let result = w.execute_transformation(&transform, &datasets)?;
            info!("'{transform}' produced {} records", result.records.len());
            let rendered = if out.extension().is_some_and(|e| e == "json") {
                let mut s = serde_json::to_string(&codec::dataset_to_json(&result))?;
                s.push('\n');
                s
            } else {
                dataset::to_csv(&result)
            };
            std::fs::write(&out, rendered)
                .map_err(|e| format!("cannot write '{}': {e}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { common, model, dataset } => {
            let mut w = load_workspace(&common.workspace)?;
            let data = load_named_dataset(&w, &common.workspace, &dataset)?;
            w.train_registered_model(&model, &data, common.seed)?;
            std::fs::write(&common.workspace, codec::serialize_workspace(&w)?)
                .map_err(|e| format!("cannot write '{}': {e}", common.workspace.display()))?;
            info!("stored trained parameters for '{model}'");
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { common, model, record, strict } => {
            let w = load_workspace(&common.workspace)?;
            let json: serde_json::Value = serde_json::from_str(&record)
                .map_err(|e| format!("record is not valid JSON: {e}"))?;
            let record = codec::record_from_json(&json)?;
            let prediction = w.predict_with_model(&model, &record, strict)?;
            println!("{}", serde_json::to_string(&codec::value_to_json(&prediction))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { common, model, dataset, metric } => {
            let w = load_workspace(&common.workspace)?;
            let data = load_named_dataset(&w, &common.workspace, &dataset)?;
            let score = w.evaluate_model(&model, &data, metric.into())?;
            println!("{score}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Match { common, objective } => {
            let w = load_workspace(&common.workspace)?;
            for name in w.match_objective_by_name(&objective)? {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDot { common, out } => {
            let w = load_workspace(&common.workspace)?;
            std::fs::write(&out, export_dot(&w))
                .map_err(|e| format!("cannot write '{}': {e}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
