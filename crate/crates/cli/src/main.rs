use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eie_core::experiments::{
    emit_figure_data, run_scenario, run_sweep, write_scenario, write_sweep, Figure, FigureOptions, OutputFormat,
    ScenarioConfig,
};
use eie_core::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "eie", version, about = "Entanglement dynamics of two dipolar-coupled qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write its trajectory.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Evaluate the sweep grid of a config.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Emit the data behind one figure, or all of them.
    Figure {
        /// fig1, fig2a, fig2b, fig2c, fig3 or all.
        which: String,
        #[arg(long, short = 'o', default_value = "figures")]
        output_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        rtol: Option<f64>,
        /// Samples per time trace.
        #[arg(long)]
        samples: Option<usize>,
        /// Contour grid points along kappa1.
        #[arg(long)]
        grid_kappa: Option<usize>,
        /// Contour grid points along alpha.
        #[arg(long)]
        grid_alpha: Option<usize>,
    },
}

#[derive(clap::Args)]
struct Common {
    /// TOML scenario file.
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Overrides `output.dir` of the config.
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the relative tolerance of the config.
    #[arg(long)]
    rtol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn load(common: &Common) -> Result<(ScenarioConfig, PathBuf), Error> {
    let mut cfg = ScenarioConfig::from_path(&common.config)?;
    if let Some(r) = common.rtol {
        cfg.rtol = r;
        cfg.validate()?;
    }
    let dir = common.output_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, dir))
}

fn paths(p: &[PathBuf]) -> Vec<String> {
    p.iter().map(|p| p.display().to_string()).collect()
}

fn execute(cli: Cli) -> Result<Value, Error> {
    match cli.command {
        Command::Run { common, format } => {
            let (cfg, dir) = load(&common)?;
            let out = run_scenario(&cfg)?;
            let written = write_scenario(&dir, &out, format.map_or(cfg.output.format, Into::into))?;
            Ok(json!({ "command": "run", "samples": out.trajectory.len(), "files": paths(&written) }))
        }
        Command::Sweep { common, format } => {
            let (cfg, dir) = load(&common)?;
            let res = run_sweep(&cfg, common.workers)?;
            let written = write_sweep(&dir, &res, format.map_or(cfg.output.format, Into::into))?;
            Ok(json!({
                "command": "sweep",
                "cells": res.cells.len(),
                "failed": res.failed,
                "files": paths(&written),
            }))
        }
        Command::Figure { which, output_dir, workers, rtol, samples, grid_kappa, grid_alpha } => {
            let mut opts = FigureOptions { workers, ..FigureOptions::default() };
            if let Some(r) = rtol {
                opts.rtol = r;
            }
            if let Some(n) = samples {
                opts.sample_count = n;
            }
            if let Some(n) = grid_kappa {
                opts.grid.0 = n;
            }
            if let Some(n) = grid_alpha {
                opts.grid.1 = n;
            }
            let figures = if which == "all" { Figure::ALL.to_vec() } else { vec![which.parse::<Figure>()?] };
            let mut manifests = Vec::new();
            for f in figures {
                log::info!("emitting {f}");
                let m = emit_figure_data(f, &output_dir, &opts)?;
                manifests.push(json!({
                    "figure": f.name(),
                    "manifest": Path::new(&output_dir).join(f.name()).join("manifest.json").display().to_string(),
                    "files": m.files.len(),
                }));
            }
            Ok(json!({ "command": "figure", "figures": manifests }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
