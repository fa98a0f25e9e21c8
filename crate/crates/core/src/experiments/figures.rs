use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master_equation::PhysicalParams;

use super::config::{AxisSpec, InitialPreset, OutputFormat, ScenarioConfig, Spacing, SweepParam, SweepSpec};
use super::output::{write_json, write_scenario, write_sweep};
use super::scenario::{run_scenario, ScenarioOutput};
use super::sweep::run_sweep;

pub const M0: f64 = 0.9;
pub const ALPHAS: [f64; 2] = [1.0, 0.9999];
pub const FIG1_KAPPAS: [f64; 6] = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
pub const FIG2_KAPPAS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// Panels of the time-trace figure: observable per panel.
pub const FIG1_PANELS: [(&str, &str); 3] = [("a", "Mz"), ("b", "Mc"), ("c", "Mzz")];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig1,
    Fig2a,
    Fig2b,
    Fig2c,
    Fig3,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig1, Figure::Fig2a, Figure::Fig2b, Figure::Fig2c, Figure::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig2c => "fig2c",
            Figure::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid("figure", format!("unknown figure `{s}` (fig1, fig2a, fig2b, fig2c, fig3)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    pub rtol: f64,
    pub workers: Option<usize>,
    /// Samples per time trace (log spaced, plus `t = 0`).
    pub sample_count: usize,
    /// End of the time traces, in units of `1/J`.
    pub t_end: f64,
    /// Contour grid as `(kappa1 points, alpha points)`.
    pub grid: (usize, usize),
    pub kappa_range: (f64, f64),
    pub alpha_range: (f64, f64),
    /// End time of each contour cell.
    pub grid_t_end: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            rtol: 1e-10,
            workers: None,
            sample_count: 300,
            t_end: 1e6,
            grid: (20, 20),
            kappa_range: (1e-2, 1e2),
            alpha_range: (0.9, 1.0),
            grid_t_end: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveEntry {
    pub panel: String,
    pub observable: String,
    pub file: String,
    pub column: String,
    pub metadata: String,
    pub initial_state: &'static str,
    pub alpha: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub m0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEntry {
    pub file: String,
    pub table: String,
    pub initial_state: &'static str,
    pub m0: f64,
    pub kappa1: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureManifest {
    pub figure: Figure,
    pub version: &'static str,
    pub description: &'static str,
    /// Inputs chosen by this program rather than fixed by the figure.
    pub assumptions: Vec<String>,
    pub options: FigureOptions,
    pub curves: Vec<CurveEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridEntry>,
    pub files: Vec<String>,
}

fn trace_config(name: String, preset: InitialPreset, alpha: f64, kappa: f64, opts: &FigureOptions) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(name, PhysicalParams::scaled(1.0, M0, alpha, kappa, kappa), preset);
    cfg.t_end = opts.t_end;
    cfg.sample_count = opts.sample_count;
    cfg.rtol = opts.rtol;
    cfg
}

fn run_all(cfgs: &[ScenarioConfig], workers: Option<usize>) -> Result<Vec<ScenarioOutput>> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| cfgs.par_iter().map(run_scenario).collect())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Contour configuration: dipolar-order start, `kappa2 = kappa1`.
pub fn fig3_config(opts: &FigureOptions) -> ScenarioConfig {
    let mut cfg =
        ScenarioConfig::new("fig3", PhysicalParams::scaled(1.0, M0, 1.0, 0.0, 0.0), InitialPreset::DipolarOrder);
    cfg.t_end = opts.grid_t_end;
    cfg.sample_count = opts.sample_count;
    cfg.rtol = opts.rtol;
    cfg.sweep = Some(SweepSpec {
        x: AxisSpec::range(SweepParam::Kappa1, opts.kappa_range.0, opts.kappa_range.1, opts.grid.0, Spacing::Log),
        y: AxisSpec::range(SweepParam::Alpha, opts.alpha_range.0, opts.alpha_range.1, opts.grid.1, Spacing::Linear),
        couple_kappa2: true,
    });
    cfg
}

/// Compute one figure's data and write it under `dir/<figure>/`.
pub fn emit_figure_data(which: Figure, dir: &Path, opts: &FigureOptions) -> Result<FigureManifest> {
    let out_dir = dir.join(which.name());
    let mut files: Vec<PathBuf> = Vec::new();
    let mut curves = Vec::new();
    let mut grid = None;
    let mut assumptions = vec![format!("M0 = {M0}, J = 1, kappa2 = kappa1 in every run")];

    let (description, preset) = match which {
        Figure::Fig1 => ("Mz, Mc and Mzz versus J t", InitialPreset::Zero),
        Figure::Fig2a => ("concurrence versus J t from the singlet", InitialPreset::Singlet),
        Figure::Fig2b => ("concurrence versus J t from the triplet", InitialPreset::Triplet),
        Figure::Fig2c => ("concurrence versus J t from negative dipolar order", InitialPreset::DipolarOrder),
        Figure::Fig3 => ("maximum concurrence over (kappa1, alpha)", InitialPreset::DipolarOrder),
    };

    match which {
        Figure::Fig3 => {
            assumptions.push(format!(
                "grid {}x{}, log kappa1 in [{}, {}], linear alpha in [{}, {}], J t up to {:e} are defaults of this program",
                opts.grid.0, opts.grid.1, opts.kappa_range.0, opts.kappa_range.1, opts.alpha_range.0, opts.alpha_range.1, opts.grid_t_end
            ));
            let cfg = fig3_config(opts);
            let res = run_sweep(&cfg, opts.workers)?;
            if !res.failed.is_empty() {
                log::warn!("{} contour cells failed", res.failed.len());
            }
            let paths = write_sweep(&out_dir, &res, OutputFormat::Csv)?;
            grid = Some(GridEntry {
                file: file_name(&paths[1]),
                table: file_name(&paths[0]),
                initial_state: preset.name(),
                m0: M0,
                kappa1: res.x.values.clone(),
                alpha: res.y.values.clone(),
            });
            files.extend(paths);
        }
        _ => {
            if which == Figure::Fig1 {
                assumptions.push("initial state is the maximally mixed state (all observables zero)".into());
            } else {
                assumptions.push(format!("kappa1 values {FIG2_KAPPAS:?} span the stated four decades"));
            }
            assumptions.push(format!("log-spaced samples from J t = 1e-3 to {:e}", opts.t_end));
            let kappas: &[f64] = if which == Figure::Fig1 { &FIG1_KAPPAS } else { &FIG2_KAPPAS };
            let cfgs: Vec<ScenarioConfig> = ALPHAS
                .iter()
                .flat_map(|&a| kappas.iter().map(move |&k| (a, k)))
                .map(|(a, k)| trace_config(format!("{}_alpha{a}_kappa{k}", which.name()), preset, a, k, opts))
                .collect();
            let outputs = run_all(&cfgs, opts.workers)?;
            for (cfg, mut out) in cfgs.iter().zip(outputs) {
                out.metadata.assumptions = assumptions.clone();
                let paths = write_scenario(&out_dir, &out, OutputFormat::Csv)?;
                let (kappa1, kappa2) = out.metadata.scaled_kappa;
                let panels: Vec<(&str, &str)> =
                    if which == Figure::Fig1 { FIG1_PANELS.to_vec() } else { vec![(&which.name()[4..], "concurrence")] };
                for (panel, obs) in panels {
                    curves.push(CurveEntry {
                        panel: panel.into(),
                        observable: obs.into(),
                        file: file_name(&paths[0]),
                        column: obs.into(),
                        metadata: file_name(&paths[1]),
                        initial_state: preset.name(),
                        alpha: cfg.params.alpha,
                        kappa1,
                        kappa2,
                        m0: cfg.params.m0,
                    });
                }
                files.extend(paths);
            }
        }
    }

    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = FigureManifest {
        figure: which,
        version: env!("CARGO_PKG_VERSION"),
        description,
        assumptions,
        options: opts.clone(),
        curves,
        grid,
        files: files.iter().map(|p| file_name(p)).collect(),
    };
    manifest.files.push(file_name(&manifest_path));
    write_json(&manifest_path, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("fig4".parse::<Figure>().is_err());
    }

    #[test]
    fn fig3_config_uses_protocol_state() {
        let cfg = fig3_config(&FigureOptions::default());
        assert_eq!(cfg.initial_vector(), crate::observables::ObservableVector::block1(0.0, -0.25, 0.0));
        let s = cfg.sweep.unwrap();
        assert_eq!(s.x.resolve("x").unwrap().len(), 20);
        assert_eq!(s.y.resolve("y").unwrap().last(), Some(&1.0));
        assert!(s.couple_kappa2);
    }
}
