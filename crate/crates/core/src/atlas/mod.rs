//! Parameter sweeps over optical depth and finesse.
//!
//! Rows of every matrix follow the finesse axis, columns the depth axis:
//! `cells[j][i]` belongs to `(d0_axis[i], f_axis[j])`.

mod contour;

pub use contour::{extract_contours, Polyline};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bandwidth::{optimize_delta0, SearchSpace};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::medium::CombDesign;
use crate::response::{analytic_backward, eta_at, PhaseEngine};
use crate::VERSION;

/// Inclusive arithmetic axis `start, start + step, … ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let finite = start.is_finite() && stop.is_finite() && step.is_finite();
        if !finite || stop < start || step <= 0.0 {
            return Err(Error::Config(format!(
                "axis {start}:{stop}:{step} needs start <= stop and a positive step"
            )));
        }
        Ok(AxisSpec { start, stop, step })
    }

    /// Single-value axis.
    pub fn point(value: f64) -> Result<Self> {
        AxisSpec::new(value, value, 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for AxisSpec {
    type Err = Error;

    /// `a:b:step`, `a:b` (unit step) or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{p}' in range '{s}' (expected a:b:step)")))
        };
        match parts.as_slice() {
            [v] => AxisSpec::point(num(v)?),
            [a, b] => AxisSpec::new(num(a)?, num(b)?, 1.0),
            [a, b, st] => AxisSpec::new(num(a)?, num(b)?, num(st)?),
            _ => Err(Error::Config(format!("bad range '{s}' (expected a:b:step)"))),
        }
    }
}

impl fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// `start, start + step, … ≤ stop`, used for contour levels.
pub fn level_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Rounded so that e.g. 0.1·3 prints as 0.3.
    (0..n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
}

/// Which atlas matrix a contour was traced on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourField {
    DeltaQm,
    Delta0,
    EtaCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLine {
    pub field: ContourField,
    pub level: f64,
    pub closed: bool,
    /// `[d0, f]` vertices.
    pub points: Vec<[f64; 2]>,
}

fn label(field: ContourField, lines: Vec<Polyline>) -> impl Iterator<Item = ContourLine> {
    lines.into_iter().map(move |p| ContourLine {
        field,
        level: p.level,
        closed: p.closed,
        points: p.points,
    })
}

/// Everything that determines an atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasSpec {
    pub d0_axis: AxisSpec,
    pub f_axis: AxisSpec,
    pub eta_target: f64,
    /// Tooth spacing, toggles and area factor; depth, finesse and Δ₀ are
    /// overwritten per cell.
    pub design: CombDesign,
    pub grid: FrequencyGrid,
    pub search: SearchSpace,
    pub delta_qm_levels: Vec<f64>,
    pub delta0_levels: Vec<f64>,
}

impl AtlasSpec {
    /// Default 60 × 27 sweep over d0 ∈ [1, 60], f ∈ [2, 15].
    pub fn new(eta_target: f64) -> Self {
        AtlasSpec {
            d0_axis: AxisSpec { start: 1.0, stop: 60.0, step: 1.0 },
            f_axis: AxisSpec { start: 2.0, stop: 15.0, step: 0.5 },
            eta_target,
            design: CombDesign::default(),
            grid: FrequencyGrid::default(),
            search: SearchSpace::default(),
            delta_qm_levels: level_range(0.1, 1.8, 0.1),
            delta0_levels: level_range(0.1, 1.9, 0.1),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta_target > 0.0 && self.eta_target < 1.0) {
            return Err(Error::Config(format!(
                "eta target must lie in (0, 1) (got {})",
                self.eta_target
            )));
        }
        AxisSpec::new(self.d0_axis.start, self.d0_axis.stop, self.d0_axis.step)?;
        AxisSpec::new(self.f_axis.start, self.f_axis.stop, self.f_axis.step)?;
        if self.d0_axis.start <= 0.0 || self.f_axis.start < 1.0 {
            return Err(Error::Config("atlas axes need d0 > 0 and f >= 1".into()));
        }
        if !self.grid.is_symmetric() || !self.grid.covers(1.5) {
            return Err(Error::Config("atlas grid must be symmetric and cover [-1.5, 1.5]".into()));
        }
        self.search.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasCell {
    pub d0: f64,
    pub f: f64,
    pub delta_qm_max: f64,
    pub delta0_opt: f64,
    pub grid_limited: bool,
    pub unreachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub d0: f64,
    pub f: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasMeta {
    pub version: String,
    pub spec: AtlasSpec,
    /// Hex digest of the serialized `AtlasSpec`.
    pub seed: String,
    /// Only set on request, so that repeated runs stay byte-identical.
    pub timestamp: Option<String>,
    /// Cells whose optimization failed; they hold zero width.
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyAtlas {
    pub d0_axis: Vec<f64>,
    pub f_axis: Vec<f64>,
    pub eta_target: f64,
    pub cells: Vec<Vec<AtlasCell>>,
    pub contours: Vec<ContourLine>,
    pub meta: AtlasMeta,
}

impl EfficiencyAtlas {
    /// Cell closest to `(d0, f)`.
    pub fn nearest(&self, d0: f64, f: f64) -> &AtlasCell {
        let closest = |axis: &[f64], v: f64| {
            (0..axis.len())
                .min_by(|&a, &b| (axis[a] - v).abs().total_cmp(&(axis[b] - v).abs()))
                .unwrap_or(0)
        };
        &self.cells[closest(&self.f_axis, f)][closest(&self.d0_axis, d0)]
    }

    pub fn delta_qm_matrix(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|r| r.iter().map(|c| c.delta_qm_max).collect()).collect()
    }

    pub fn delta0_matrix(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|r| r.iter().map(|c| c.delta0_opt).collect()).collect()
    }
}

fn seed_of(spec: &impl Serialize) -> String {
    let json = serde_json::to_vec(spec).expect("atlas spec serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Run `job` on a pool of `threads` workers (0 picks the rayon default).
pub fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(job))
}

/// Optimal Δ₀ and maximal Δ_qm for every (d0, f) cell.
///
/// Cells are independent; a failing cell is recorded in the metadata and
/// left at zero width. The result does not depend on the worker count.
pub fn generate_atlas(spec: &AtlasSpec, threads: usize) -> Result<EfficiencyAtlas> {
    spec.validate()?;
    let d0_axis = spec.d0_axis.values();
    let f_axis = spec.f_axis.values();
    let engine = PhaseEngine::new(spec.grid);
    let nx = d0_axis.len();

    let outcomes: Vec<std::result::Result<AtlasCell, CellFailure>> = with_threads(threads, || {
        (0..nx * f_axis.len())
            .into_par_iter()
            .map(|k| {
                let (d0, f) = (d0_axis[k % nx], f_axis[k / nx]);
                let fail = |e: Error| CellFailure { d0, f, message: e.to_string() };
                let base = spec.design.with_d0(d0).and_then(|d| d.with_finesse(f)).map_err(fail)?;
                let r = optimize_delta0(&engine, &base, spec.eta_target, &spec.search).map_err(fail)?;
                Ok(AtlasCell {
                    d0,
                    f,
                    delta_qm_max: r.delta_qm,
                    delta0_opt: r.delta0,
                    grid_limited: r.grid_limited,
                    unreachable: r.unreachable,
                })
            })
            .collect()
    })?;

    let mut failures = Vec::new();
    let flat: Vec<AtlasCell> = outcomes
        .into_iter()
        .enumerate()
        .map(|(k, o)| {
            o.unwrap_or_else(|fail| {
                failures.push(fail);
                AtlasCell {
                    d0: d0_axis[k % nx],
                    f: f_axis[k / nx],
                    delta_qm_max: 0.0,
                    delta0_opt: 0.0,
                    grid_limited: false,
                    unreachable: true,
                }
            })
        })
        .collect();
    let cells: Vec<Vec<AtlasCell>> = flat.chunks(nx).map(<[AtlasCell]>::to_vec).collect();

    let mut atlas = EfficiencyAtlas {
        d0_axis,
        f_axis,
        eta_target: spec.eta_target,
        cells,
        contours: Vec::new(),
        meta: AtlasMeta {
            version: VERSION.to_string(),
            spec: spec.clone(),
            seed: seed_of(spec),
            timestamp: None,
            failures,
        },
    };
    let qm = extract_contours(&atlas.delta_qm_matrix(), &atlas.d0_axis, &atlas.f_axis, &spec.delta_qm_levels);
    // Cells that never reach the target have no optimum to draw.
    let d0_field: Vec<Vec<f64>> = atlas
        .cells
        .iter()
        .map(|r| r.iter().map(|c| if c.unreachable { f64::NAN } else { c.delta0_opt }).collect())
        .collect();
    let opt = extract_contours(&d0_field, &atlas.d0_axis, &atlas.f_axis, &spec.delta0_levels);
    atlas.contours = label(ContourField::DeltaQm, qm).chain(label(ContourField::Delta0, opt)).collect();
    Ok(atlas)
}

/// How the line-centre efficiency of a center map is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMethod {
    /// Closed form `(1 − e^{−d0/f})² e^{−7/f²}`.
    Analytic,
    /// η(0) from the full response including the wing dispersion.
    Srf,
}

impl FromStr for CenterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(CenterMethod::Analytic),
            "srf" => Ok(CenterMethod::Srf),
            _ => Err(Error::Config(format!("unknown method '{s}' (expected analytic or srf)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSpec {
    pub d0_axis: AxisSpec,
    pub f_axis: AxisSpec,
    pub method: CenterMethod,
    /// Δ₀, toggles, spacing and area factor for the SRF method.
    pub design: CombDesign,
    pub levels: Vec<f64>,
}

impl CenterSpec {
    pub fn new(method: CenterMethod) -> Self {
        let mut levels = level_range(0.1, 0.9, 0.1);
        levels.push(0.99);
        CenterSpec {
            d0_axis: AxisSpec { start: 1.0, stop: 60.0, step: 1.0 },
            f_axis: AxisSpec { start: 2.0, stop: 15.0, step: 0.5 },
            method,
            design: CombDesign::default(),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterMeta {
    pub version: String,
    pub spec: CenterSpec,
    pub seed: String,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterMap {
    pub d0_axis: Vec<f64>,
    pub f_axis: Vec<f64>,
    pub method: CenterMethod,
    pub eta_center: Vec<Vec<f64>>,
    pub contours: Vec<ContourLine>,
    pub meta: CenterMeta,
}

impl CenterMap {
    pub fn value(&self, d0: f64, f: f64) -> Option<f64> {
        let i = self.d0_axis.iter().position(|&v| (v - d0).abs() < 1e-9)?;
        let j = self.f_axis.iter().position(|&v| (v - f).abs() < 1e-9)?;
        Some(self.eta_center[j][i])
    }
}

/// Line-centre efficiency over the (d0, f) plane with isolines.
pub fn center_map(spec: &CenterSpec) -> Result<CenterMap> {
    AxisSpec::new(spec.d0_axis.start, spec.d0_axis.stop, spec.d0_axis.step)?;
    AxisSpec::new(spec.f_axis.start, spec.f_axis.stop, spec.f_axis.step)?;
    let d0_axis = spec.d0_axis.values();
    let f_axis = spec.f_axis.values();
    let eta_center = f_axis
        .iter()
        .map(|&f| {
            d0_axis
                .iter()
                .map(|&d0| match spec.method {
                    CenterMethod::Analytic => Ok(analytic_backward(d0, f)),
                    CenterMethod::Srf => eta_at(&spec.design.with_d0(d0)?.with_finesse(f)?, 0.0),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let contours = label(
        ContourField::EtaCenter,
        extract_contours(&eta_center, &d0_axis, &f_axis, &spec.levels),
    )
    .collect();
    Ok(CenterMap {
        d0_axis,
        f_axis,
        method: spec.method,
        eta_center,
        contours,
        meta: CenterMeta {
            version: VERSION.to_string(),
            spec: spec.clone(),
            seed: seed_of(spec),
            timestamp: None,
        },
    })
}
