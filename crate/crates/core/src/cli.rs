//! Command-line front end.
//!
//! Every frequency on the command line is a detuning in units of the
//! inhomogeneous FWHM `Δ_in`; times are in units of `1/Δ_in`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::atlas::{self, level_range, AtlasSpec, AxisSpec, CenterMethod, CenterSpec};
use crate::bandwidth::{self, optimize_delta0, SearchSpace};
use crate::echosim::{echo_field, energy_efficiency_spectral, PulseSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::export::{self, parse_formats, Format};
use crate::grid::FrequencyGrid;
use crate::medium::{CombDesign, RawDesign};
use crate::response::{self, PhaseEngine};
use crate::VERSION;

const UNITS: &str = "Units: all frequencies (detunings, widths, Δ0, Δqm, tooth spacing) are in units of the \
inhomogeneous linewidth Δ_in (FWHM); times are in units of 1/Δ_in. Depth d0 = α0L is the peak optical \
depth of the unburned line.";

#[derive(Debug, Parser)]
#[command(
    name = "afc",
    version,
    about = "Spectral efficiency and bandwidth of backward-retrieval AFC quantum memories",
    long_about = None,
    after_help = UNITS
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Absorption depth D(ω) and phase φ(ω) of the comb medium.
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// Spectral response Γ(ω) and efficiency η(ω).
    Response {
        #[command(flatten)]
        common: Common,
    },
    /// Width Δqm of the band around line centre where η(ω) ≥ η*.
    Bandwidth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
    },
    /// Comb extent Δ0 that maximizes Δqm for the given depth and finesse.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        search: Search,
    },
    /// Atlas of maximal Δqm and optimal Δ0 over (d0, f).
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        axes: Axes,
        #[command(flatten)]
        search: Search,
        /// Δqm contour levels [Δ_in], as a:b:step or a comma list.
        #[arg(long, default_value = "0.1:1.8:0.1")]
        levels: String,
        /// Optimal-Δ0 contour levels [Δ_in], as a:b:step or a comma list.
        #[arg(long, default_value = "0.1:1.9:0.1")]
        delta0_levels: String,
        /// Record the wall-clock time in the metadata (breaks byte-reproducibility).
        #[arg(long)]
        timestamp: bool,
    },
    /// Line-centre efficiency η(0) over (d0, f).
    CenterMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        axes: Axes,
        /// analytic: (1 − e^{−d0/f})² e^{−7/f²}; srf: η(0) of the full response with wings (uses --delta0).
        #[arg(long, default_value = "analytic")]
        method: String,
        /// Efficiency contour levels, as a:b:step or a comma list.
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.99")]
        levels: String,
        /// Record the wall-clock time in the metadata (breaks byte-reproducibility).
        #[arg(long)]
        timestamp: bool,
    },
    /// Time-domain echo of a Gaussian signal pulse.
    Echo {
        #[command(flatten)]
        common: Common,
        /// Pulse spectral FWHM [Δ_in].
        #[arg(long, default_value_t = 0.1)]
        pulse_bandwidth: f64,
        /// Pulse carrier detuning from line centre [Δ_in].
        #[arg(long, default_value_t = 0.0)]
        pulse_center: f64,
        /// Number of time samples (even); chosen automatically when absent.
        #[arg(long)]
        time_points: Option<usize>,
        /// Time step [1/Δ_in]; chosen automatically when absent.
        #[arg(long)]
        dt: Option<f64>,
    },
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key = value (TOML) file with design, grid and output settings; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Peak optical depth d0 = α0L of the unburned line [dimensionless, default 30].
    #[arg(long)]
    pub d0: Option<f64>,
    /// Comb finesse f = Δ/γ [dimensionless, >= 1, default 5].
    #[arg(long)]
    pub finesse: Option<f64>,
    /// Full width Δ0 of the burned comb region [Δ_in, default 0.8].
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Tooth spacing Δ [Δ_in, default 0.01]; sets the echo delay 2π/Δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Tooth area relative to a Gaussian tooth [dimensionless, default 1].
    #[arg(long)]
    pub area_factor: Option<f64>,
    /// Apply the decoherence factor e^{−7/f²} to η (default).
    #[arg(long, overrides_with = "no_kappa")]
    pub kappa: bool,
    /// Omit the decoherence factor.
    #[arg(long)]
    pub no_kappa: bool,
    /// Dilute the comb depth by the tooth duty cycle (default).
    #[arg(long, overrides_with = "no_dilution")]
    pub dilution: bool,
    /// Keep the full line depth inside the comb.
    #[arg(long)]
    pub no_dilution: bool,
    /// Frequency grid half-span [Δ_in, >= 1.5, default 1.5].
    #[arg(long)]
    pub half_span: Option<f64>,
    /// Frequency grid points [default 4096].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated artifact formats: csv, json, svg.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads for parallel sweeps (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct Target {
    /// Target efficiency η* in (0, 1).
    #[arg(long)]
    pub eta_target: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Search {
    /// Upper end of the Δ0 search [Δ_in, <= 2.5].
    #[arg(long, default_value_t = 2.5)]
    pub delta0_max: f64,
    /// Lattice step of the global Δ0 scan [Δ_in].
    #[arg(long, default_value_t = 0.0125)]
    pub delta0_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct Axes {
    /// Optical-depth axis a:b:step.
    #[arg(long, default_value = "1:60:1")]
    pub d0_range: String,
    /// Finesse axis a:b:step.
    #[arg(long, default_value = "2:15:0.5")]
    pub f_range: String,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    d0: Option<f64>,
    finesse: Option<f64>,
    delta0: Option<f64>,
    delta: Option<f64>,
    area_factor: Option<f64>,
    kappa: Option<bool>,
    dilution: Option<bool>,
    eta_target: Option<f64>,
    half_span: Option<f64>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    threads: Option<usize>,
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

/// Fully validated settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub design: CombDesign,
    pub grid: FrequencyGrid,
    pub eta_target: Option<f64>,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
    pub threads: usize,
}

impl RunConfig {
    pub fn resolve(common: &Common, eta_target: Option<f64>, default_formats: &str) -> Result<Self> {
        let file = match &common.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let base = RawDesign::default();
        let toggle = |on: bool, off: bool, file: Option<bool>, default: bool| {
            if off {
                false
            } else if on {
                true
            } else {
                file.unwrap_or(default)
            }
        };
        let raw = RawDesign {
            d0: common.d0.or(file.d0).unwrap_or(base.d0),
            finesse: common.finesse.or(file.finesse).unwrap_or(base.finesse),
            delta0: common.delta0.or(file.delta0).unwrap_or(base.delta0),
            delta: common.delta.or(file.delta).unwrap_or(base.delta),
            area_factor: common.area_factor.or(file.area_factor).unwrap_or(base.area_factor),
            kappa: toggle(common.kappa, common.no_kappa, file.kappa, base.kappa),
            dilution: toggle(common.dilution, common.no_dilution, file.dilution, base.dilution),
        };
        let design = CombDesign::try_from(raw)?;

        let half_span = common.half_span.or(file.half_span).unwrap_or(1.5);
        let points = common.grid_points.or(file.grid_points).unwrap_or(4096);
        if half_span < 1.5 {
            return Err(Error::Config(format!(
                "--half-span must be at least 1.5 to hold the comb and its wings (got {half_span})"
            )));
        }
        if points < 64 {
            return Err(Error::Config(format!("--grid-points must be at least 64 (got {points})")));
        }
        let grid = FrequencyGrid::symmetric(half_span, points)?;

        let eta_target = eta_target.or(file.eta_target);
        if let Some(t) = eta_target {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("--eta-target must lie in (0, 1) (got {t})")));
            }
        }
        let formats = parse_formats(common.format.as_deref().or(file.format.as_deref()).unwrap_or(default_formats))?;
        Ok(RunConfig {
            design,
            grid,
            eta_target,
            out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            formats,
            threads: common.threads.or(file.threads).unwrap_or(0),
        })
    }

    fn require_eta_target(&self) -> Result<f64> {
        self.eta_target
            .ok_or_else(|| Error::Config("missing required flag --eta-target (target efficiency in (0, 1))".into()))
    }
}

/// `a:b:step` or a comma-separated list.
pub fn parse_levels(s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let a: AxisSpec = s.parse()?;
        return Ok(level_range(a.start, a.stop, a.step));
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad contour level '{p}'")))
        })
        .collect()
}

fn search_space(s: &Search) -> Result<SearchSpace> {
    let space = SearchSpace {
        hi: s.delta0_max,
        step: s.delta0_step,
        ..SearchSpace::default()
    };
    space.validate()?;
    Ok(space)
}

fn unix_time() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn list(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    version: &'static str,
    design: &'a CombDesign,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct GridEcho {
    points: usize,
    first: f64,
    last: f64,
    step: f64,
}

impl From<&FrequencyGrid> for GridEcho {
    fn from(g: &FrequencyGrid) -> Self {
        GridEcho {
            points: g.len(),
            first: g.first(),
            last: g.last(),
            step: g.step(),
        }
    }
}

/// Execute one command and return its one-line summary.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Profile { common } => {
            let cfg = RunConfig::resolve(&common, None, "csv")?;
            let profile = response::phase_profile(&cfg.design, &cfg.grid)?;
            ensure_dir(&cfg.out)?;
            let mut files = vec![export::write_profile(&profile, &cfg.out.join("profile.csv"))?];
            files.push(export::write_json(
                &cfg.out.join("profile.json"),
                &Stamped {
                    version: VERSION,
                    design: &cfg.design,
                    body: serde_json::json!({ "grid": GridEcho::from(&cfg.grid), "columns": ["omega", "D", "phi"] }),
                },
            )?);
            let mid = profile.len() / 2;
            Ok(format!(
                "profile: {} points, D(0) = {:.4}, comb fraction {:.4} -> {}",
                profile.len(),
                profile.depth[mid],
                cfg.design.comb_fraction(),
                list(&files)
            ))
        }
        Command::Response { common } => {
            let cfg = RunConfig::resolve(&common, None, "csv,json")?;
            if !cfg.grid.covers(1.5) {
                return Err(Error::Config("response grid must cover [-1.5, 1.5]".into()));
            }
            let resp = PhaseEngine::new(cfg.grid).response(&cfg.design)?;
            let eta0 = response::eta_at(&cfg.design, 0.0)?;
            ensure_dir(&cfg.out)?;
            let mut files = Vec::new();
            if cfg.formats.contains(&Format::Csv) {
                files.push(export::write_response(&resp, &cfg.out.join("response.csv"))?);
            }
            if cfg.formats.contains(&Format::Json) {
                let eta_max = resp.eta.iter().copied().fold(0.0, f64::max);
                files.push(export::write_json(
                    &cfg.out.join("response.json"),
                    &Stamped {
                        version: VERSION,
                        design: &cfg.design,
                        body: serde_json::json!({
                            "grid": GridEcho::from(&cfg.grid),
                            "kappa_applied": resp.kappa_applied,
                            "eta_center": eta0,
                            "eta_max": eta_max,
                            "columns": ["omega", "D", "phi", "re_gamma", "im_gamma", "eta"],
                        }),
                    },
                )?);
            }
            Ok(format!("response: eta(0) = {eta0:.5} -> {}", list(&files)))
        }
        Command::Bandwidth { common, target } => {
            let cfg = RunConfig::resolve(&common, target.eta_target, "json")?;
            let eta = cfg.require_eta_target()?;
            let resp = PhaseEngine::new(cfg.grid).response(&cfg.design)?;
            let result = bandwidth::delta_qm(&resp, eta)?;
            ensure_dir(&cfg.out)?;
            let path = export::write_json(
                &cfg.out.join("bandwidth.json"),
                &Stamped { version: VERSION, design: &cfg.design, body: &result },
            )?;
            Ok(format!(
                "bandwidth: delta_qm = {:.4} at eta* = {eta}{} -> {}",
                result.delta_qm,
                if result.grid_limited { " (grid-limited)" } else { "" },
                path.display()
            ))
        }
        Command::Optimize { common, target, search } => {
            let cfg = RunConfig::resolve(&common, target.eta_target, "json")?;
            let eta = cfg.require_eta_target()?;
            let space = search_space(&search)?;
            let engine = PhaseEngine::new(cfg.grid);
            let result = atlas::with_threads(cfg.threads, || optimize_delta0(&engine, &cfg.design, eta, &space))??;
            let design = cfg.design.with_delta0(result.delta0)?;
            ensure_dir(&cfg.out)?;
            let path = export::write_json(
                &cfg.out.join("optimize.json"),
                &Stamped { version: VERSION, design: &design, body: &result },
            )?;
            if result.unreachable {
                return Ok(format!(
                    "optimize: eta* = {eta} is unreachable for d0 = {}, f = {} -> {}",
                    design.d0(),
                    design.finesse(),
                    path.display()
                ));
            }
            Ok(format!(
                "optimize: delta0* = {:.4}, delta_qm = {:.4} at eta* = {eta} (d0 = {}, f = {}) -> {}",
                result.delta0,
                result.delta_qm,
                design.d0(),
                design.finesse(),
                path.display()
            ))
        }
        Command::Map { common, target, axes, search, levels, delta0_levels, timestamp } => {
            let cfg = RunConfig::resolve(&common, target.eta_target, "csv,json,svg")?;
            let eta = cfg.require_eta_target()?;
            let spec = AtlasSpec {
                d0_axis: axes.d0_range.parse()?,
                f_axis: axes.f_range.parse()?,
                eta_target: eta,
                design: cfg.design,
                grid: cfg.grid,
                search: search_space(&search)?,
                delta_qm_levels: parse_levels(&levels)?,
                delta0_levels: parse_levels(&delta0_levels)?,
            };
            let mut map = atlas::generate_atlas(&spec, cfg.threads)?;
            if timestamp {
                map.meta.timestamp = Some(unix_time());
            }
            let files = export::write_atlas(&map, &cfg.out, &cfg.formats)?;
            let best = map.cells.iter().flatten().map(|c| c.delta_qm_max).fold(0.0, f64::max);
            Ok(format!(
                "map: {}x{} cells at eta* = {eta}, max delta_qm = {best:.4}, {} failed -> {}",
                map.d0_axis.len(),
                map.f_axis.len(),
                map.meta.failures.len(),
                list(&files)
            ))
        }
        Command::CenterMap { common, axes, method, levels, timestamp } => {
            let cfg = RunConfig::resolve(&common, None, "csv,json,svg")?;
            let spec = CenterSpec {
                d0_axis: axes.d0_range.parse()?,
                f_axis: axes.f_range.parse()?,
                method: method.parse::<CenterMethod>()?,
                design: cfg.design,
                levels: parse_levels(&levels)?,
            };
            let mut map = atlas::center_map(&spec)?;
            if timestamp {
                map.meta.timestamp = Some(unix_time());
            }
            let files = export::write_center_map(&map, &cfg.out, &cfg.formats)?;
            let best = map.eta_center.iter().flatten().copied().fold(0.0, f64::max);
            Ok(format!(
                "center-map: {}x{} cells, max eta(0) = {best:.4} -> {}",
                map.d0_axis.len(),
                map.f_axis.len(),
                list(&files)
            ))
        }
        Command::Echo { common, pulse_bandwidth, pulse_center, time_points, dt } => {
            let cfg = RunConfig::resolve(&common, None, "csv,json")?;
            let pulse = PulseSpec::new(pulse_center, pulse_bandwidth)?;
            let time = echo_time_grid(&pulse, time_points, dt)?;
            let echo = echo_field(&cfg.design, &pulse, &time)?;
            let resp = PhaseEngine::new(time.frequency_grid()?).response(&cfg.design)?;
            let spectral = energy_efficiency_spectral(&pulse, &resp);
            let eta_carrier = response::eta_at(&cfg.design, pulse_center)?;
            ensure_dir(&cfg.out)?;
            let mut files = Vec::new();
            if cfg.formats.contains(&Format::Csv) {
                files.push(export::write_echo(&echo, &cfg.out.join("echo.csv"))?);
            }
            if cfg.formats.contains(&Format::Json) {
                files.push(export::write_json(
                    &cfg.out.join("echo.json"),
                    &Stamped {
                        version: VERSION,
                        design: &cfg.design,
                        body: serde_json::json!({
                            "pulse": pulse,
                            "time_grid": time,
                            "energy_efficiency": echo.energy_efficiency,
                            "energy_efficiency_spectral": spectral,
                            "eta_at_carrier": eta_carrier,
                            "columns": ["t", "re", "im", "abs2"],
                        }),
                    },
                )?);
            }
            Ok(format!(
                "echo: energy efficiency {:.6} (spectral {:.6}, eta at carrier {:.6}) -> {}",
                echo.energy_efficiency,
                spectral,
                eta_carrier,
                list(&files)
            ))
        }
    }
}

/// Time grid for the echo: the conjugate frequency grid spans 1.25× the
/// pulse's required half-span and the window holds ±20 pulse durations.
pub fn echo_time_grid(pulse: &PulseSpec, points: Option<usize>, dt: Option<f64>) -> Result<TimeGrid> {
    let dt = dt.unwrap_or_else(|| std::f64::consts::PI / (1.25 * pulse.required_half_span()));
    let points = points.unwrap_or_else(|| {
        // Temporal intensity FWHM of a Gaussian with spectral FWHM b is 4 ln 2 / b.
        let duration = 4.0 * std::f64::consts::LN_2 / pulse.bandwidth;
        let span = 40.0 * duration + 2.0 * pulse.center_detuning.abs();
        ((span / dt).ceil() as usize).max(4096).next_power_of_two()
    });
    TimeGrid::new(points, dt)
}
