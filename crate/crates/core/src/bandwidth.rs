//! High-efficiency bandwidth Δ_qm and its maximization over the comb extent Δ₀.
//!
//! Δ_qm is the width of the largest interval symmetric about ω = 0 on which
//! η(ω) stays at or above the target without interruption. As a function of
//! Δ₀ it is non-smooth and can have several local maxima, so the optimizer
//! scans a fixed Δ₀ lattice before refining locally with golden-section
//! search.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::CombDesign;
use crate::response::{self, srf_gamma, PhaseEngine, SpectralResponse};

/// Crossing refinement stops once the bracket is this narrow (units Δ_in).
pub const CROSSING_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthResult {
    pub eta_target: f64,
    pub delta0: f64,
    pub delta_qm: f64,
    /// Identifies the η(ω) curve the width was read from.
    pub eta_curve_ref: String,
    /// The passing interval reached the edge of the evaluation grid.
    pub grid_limited: bool,
    /// No Δ₀ reached the target at ω = 0.
    pub unreachable: bool,
}

/// Something that yields η on a symmetric frequency grid and between samples.
pub trait EfficiencyCurve {
    fn len(&self) -> usize;
    fn omega(&self, i: usize) -> f64;
    fn eta(&self, i: usize) -> Result<f64>;
    /// η at an arbitrary frequency inside the grid.
    fn eta_at(&self, omega: f64) -> Result<f64>;
    /// |ω| at which η vanishes identically, if any. The zero can be narrower
    /// than the grid step, so scans stop there explicitly.
    fn barrier(&self) -> Option<f64> {
        None
    }
}

/// The wing phase diverges at the comb edge, forcing Γ = 0 there.
fn comb_edge(design: &CombDesign) -> Option<f64> {
    (1.0 - design.comb_fraction() != 0.0).then(|| design.half_extent())
}

impl EfficiencyCurve for SpectralResponse {
    fn len(&self) -> usize {
        self.eta.len()
    }

    fn omega(&self, i: usize) -> f64 {
        self.profile.omega[i]
    }

    fn eta(&self, i: usize) -> Result<f64> {
        Ok(self.eta[i])
    }

    fn eta_at(&self, omega: f64) -> Result<f64> {
        Ok(SpectralResponse::eta_at(self, omega))
    }

    fn barrier(&self) -> Option<f64> {
        comb_edge(&self.design)
    }
}

/// Width of one side of the passing interval, and whether it hit the grid edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub width: f64,
    pub grid_limited: bool,
}

/// Symmetric contiguous width of `{ω : η(ω) ≥ eta_target}` around ω = 0.
pub fn delta_qm_of(curve: &impl EfficiencyCurve, eta_target: f64) -> Result<Extent> {
    if !(eta_target > 0.0 && eta_target < 1.0) {
        return Err(Error::Domain(format!("eta_target must lie in (0, 1), got {eta_target}")));
    }
    let n = curve.len();
    if n < 2 {
        return Err(Error::Domain("efficiency curve needs at least two samples".into()));
    }
    let span = curve.omega(n - 1) - curve.omega(0);
    for i in 0..n / 2 {
        if (curve.omega(i) + curve.omega(n - 1 - i)).abs() > 1e-9 * span {
            return Err(Error::Domain(format!(
                "frequency grid is not symmetric about 0 (omega[{i}] = {}, omega[{}] = {})",
                curve.omega(i),
                n - 1 - i,
                curve.omega(n - 1 - i)
            )));
        }
    }

    let center = if n % 2 == 1 {
        curve.eta(n / 2)?
    } else {
        curve.eta_at(0.0)?
    };
    if !(center >= eta_target) {
        return Ok(Extent {
            width: 0.0,
            grid_limited: false,
        });
    }

    let right = side_extent(curve, eta_target, (n / 2 + n % 2..n).collect(), 1.0)?;
    let left = side_extent(curve, eta_target, (0..n / 2).rev().collect(), -1.0)?;
    let (half, grid_limited) = if right.0 <= left.0 { right } else { left };
    Ok(Extent {
        width: 2.0 * half,
        grid_limited,
    })
}

/// Outward scan along `indices` (ordered away from 0), returning |ω| of the
/// last passing frequency after refining the crossing.
fn side_extent(
    curve: &impl EfficiencyCurve,
    target: f64,
    indices: Vec<usize>,
    sign: f64,
) -> Result<(f64, bool)> {
    let barrier = curve.barrier().unwrap_or(f64::INFINITY);
    let mut inner = 0.0;
    for i in indices {
        let w = curve.omega(i);
        let passes = w.abs() < barrier && curve.eta(i)? >= target;
        if passes {
            inner = w.abs();
            continue;
        }
        let (mut lo, mut hi) = (inner, w.abs().min(barrier));
        while hi - lo > CROSSING_TOL {
            let mid = 0.5 * (lo + hi);
            if curve.eta_at(sign * mid)? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok((lo, false));
    }
    Ok((inner, true))
}

/// Δ_qm of a sampled response.
pub fn delta_qm(response: &SpectralResponse, eta_target: f64) -> Result<BandwidthResult> {
    let extent = delta_qm_of(response, eta_target)?;
    Ok(BandwidthResult {
        eta_target,
        delta0: response.design.delta0(),
        delta_qm: extent.width,
        eta_curve_ref: curve_ref(&response.design, response.omega()),
        grid_limited: extent.grid_limited,
        unreachable: extent.width == 0.0,
    })
}

fn curve_ref(design: &CombDesign, omega: &[f64]) -> String {
    format!(
        "d0={};f={};delta0={};a={};dilution={};kappa={};grid={}:{}:{}",
        design.d0(),
        design.finesse(),
        design.delta0(),
        design.area_factor(),
        design.dilution(),
        design.kappa(),
        omega[0],
        omega[omega.len() - 1],
        omega.len()
    )
}

/// η of one design on an engine grid, evaluated on demand and memoized.
///
/// Uses the engine's cached wing conjugate when `cached` is set, otherwise
/// evaluates the wing conjugate only at the frequencies actually visited.
pub struct DesignCurve<'a> {
    engine: &'a PhaseEngine,
    design: CombDesign,
    wing: Option<Arc<[f64]>>,
    lazy_wing: bool,
    memo: RefCell<Vec<f64>>,
}

impl<'a> DesignCurve<'a> {
    pub fn new(engine: &'a PhaseEngine, design: CombDesign, cached: bool) -> Result<Self> {
        let needs_wing = 1.0 - design.comb_fraction() != 0.0;
        let wing = if needs_wing && cached {
            Some(engine.wing(design.delta0())?)
        } else {
            None
        };
        Ok(DesignCurve {
            engine,
            design,
            wing,
            lazy_wing: needs_wing && !cached,
            memo: RefCell::new(vec![f64::NAN; engine.omega().len()]),
        })
    }
}

impl EfficiencyCurve for DesignCurve<'_> {
    fn len(&self) -> usize {
        self.engine.omega().len()
    }

    fn omega(&self, i: usize) -> f64 {
        self.engine.omega()[i]
    }

    fn eta(&self, i: usize) -> Result<f64> {
        let cached = self.memo.borrow()[i];
        if !cached.is_nan() {
            return Ok(cached);
        }
        let eta = if self.lazy_wing {
            response::eta_at(&self.design, self.engine.omega()[i])?
        } else {
            let (d, p) = self.engine.point(&self.design, self.wing.as_deref(), i);
            self.design.efficiency_factor() * srf_gamma(d, p).norm_sqr()
        };
        self.memo.borrow_mut()[i] = eta;
        Ok(eta)
    }

    fn eta_at(&self, omega: f64) -> Result<f64> {
        response::eta_at(&self.design, omega)
    }

    fn barrier(&self) -> Option<f64> {
        comb_edge(&self.design)
    }
}

/// Δ₀ search interval and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Exclusive lower bound.
    pub lo: f64,
    /// Inclusive upper bound.
    pub hi: f64,
    /// Lattice step of the global scan.
    pub step: f64,
    /// Final bracket width of the golden-section refinement.
    pub tol: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lo: 0.0,
            hi: 2.5,
            step: 0.0125,
            tol: 1e-3,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= 0.0 && self.hi > self.lo && self.hi <= 2.5 + 1e-12) {
            return Err(Error::Config(format!(
                "delta0 search interval ({}, {}] must lie inside (0, 2.5]",
                self.lo, self.hi
            )));
        }
        if !(self.step > 0.0 && self.tol > 0.0) {
            return Err(Error::Config("delta0 search step and tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Scan lattice `lo + k·step`, `k ≥ 1`, up to `hi`.
    pub fn lattice(&self) -> Vec<f64> {
        (1..)
            .map(|k| self.lo + k as f64 * self.step)
            .take_while(|&x| x <= self.hi + 1e-9 * self.step)
            .collect()
    }
}

/// Δ_qm for a given Δ₀, using the engine cache for lattice points.
pub fn delta_qm_for(
    engine: &PhaseEngine,
    base: &CombDesign,
    delta0: f64,
    eta_target: f64,
    cached: bool,
) -> Result<Extent> {
    let design = base.with_delta0(delta0)?;
    let curve = DesignCurve::new(engine, design, cached)?;
    delta_qm_of(&curve, eta_target)
}

/// Maximize Δ_qm over Δ₀ for the depth, finesse and toggles of `base`
/// (its own Δ₀ is ignored).
pub fn optimize_delta0(
    engine: &PhaseEngine,
    base: &CombDesign,
    eta_target: f64,
    search: &SearchSpace,
) -> Result<BandwidthResult> {
    search.validate()?;
    if !engine.grid().is_symmetric() {
        return Err(Error::Domain("optimization needs a grid symmetric about 0".into()));
    }
    let lattice = search.lattice();
    if lattice.is_empty() {
        return Err(Error::Config("delta0 search lattice is empty".into()));
    }
    let scan: Vec<Extent> = lattice
        .par_iter()
        .map(|&d| delta_qm_for(engine, base, d, eta_target, true))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (k, e) in scan.iter().enumerate() {
        if e.width > scan[best].width {
            best = k;
        }
    }
    let finish = |delta0: f64, extent: Extent, unreachable: bool| -> Result<BandwidthResult> {
        let design = base.with_delta0(delta0)?;
        Ok(BandwidthResult {
            eta_target,
            delta0,
            delta_qm: extent.width,
            eta_curve_ref: curve_ref(&design, engine.omega()),
            grid_limited: extent.grid_limited,
            unreachable,
        })
    };
    if scan[best].width == 0.0 {
        return finish(lattice[0], scan[0], true);
    }

    let (mut best_x, mut best_e) = (lattice[best], scan[best]);
    let lo = (best_x - search.step).max(lattice[0]);
    let hi = (best_x + search.step).min(search.hi);
    let mut consider = |x: f64, e: Extent| {
        if e.width > best_e.width || (e.width == best_e.width && x < best_x) {
            best_x = x;
            best_e = e;
        }
    };
    let eval = |x: f64| delta_qm_for(engine, base, x, eta_target, false);
    golden_section_max(eval, lo, hi, search.tol, &mut consider)?;
    finish(best_x, best_e, false)
}

/// Golden-section search for a maximum on `[lo, hi]`, reporting every
/// evaluation to `observe`. Stops when the bracket is narrower than `tol`.
fn golden_section_max(
    f: impl Fn(f64) -> Result<Extent>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    observe: &mut impl FnMut(f64, Extent),
) -> Result<()> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    observe(x1, f1);
    observe(x2, f2);
    while hi - lo > tol {
        if f1.width >= f2.width {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            observe(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            observe(x2, f2);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::response::{efficiency, SusceptibilityProfile};

    fn flat_response(eta: impl Fn(f64) -> f64, half_span: f64, n: usize) -> SpectralResponse {
        let omega = FrequencyGrid::symmetric(half_span, n).unwrap().points();
        let mut r = efficiency(
            &CombDesign::default().with_dilution(false),
            &SusceptibilityProfile {
                depth: vec![0.0; n],
                phase: vec![0.0; n],
                omega: omega.clone(),
            },
        );
        r.eta = omega.iter().map(|&w| eta(w)).collect();
        r
    }

    #[test]
    fn constant_curve_is_grid_limited() {
        let r = flat_response(|_| 0.95, 1.5, 4096);
        let b = delta_qm(&r, 0.9).unwrap();
        assert_eq!(b.delta_qm, 3.0);
        assert!(b.grid_limited);
    }

    #[test]
    fn center_below_target() {
        let r = flat_response(|_| 0.5, 1.5, 101);
        let b = delta_qm(&r, 0.9).unwrap();
        assert_eq!(b.delta_qm, 0.0);
        assert!(!b.grid_limited);
    }

    #[test]
    fn crossing_is_refined() {
        // η = 1 − ω², crosses 0.75 at |ω| = 0.5.
        let r = flat_response(|w| 1.0 - w * w, 1.0, 64);
        let b = delta_qm(&r, 0.75).unwrap();
        assert!((b.delta_qm - 1.0).abs() < 2e-3, "{}", b.delta_qm);
        assert!(b.delta_qm <= 1.0 + 2.0 * CROSSING_TOL);
    }

    #[test]
    fn narrower_side_wins() {
        let r = flat_response(|w| if w < -0.2 { 0.1 } else { 0.95 }, 1.0, 201);
        let b = delta_qm(&r, 0.9).unwrap();
        assert!(b.delta_qm <= 0.42 && b.delta_qm >= 0.4);
    }

    #[test]
    fn rejects_bad_input() {
        let r = flat_response(|_| 0.95, 1.0, 11);
        assert!(delta_qm(&r, 1.0).is_err());
        assert!(delta_qm(&r, 0.0).is_err());
        let mut skew = r.clone();
        skew.profile.omega = (0..11).map(|i| i as f64 * 0.1).collect();
        assert!(matches!(delta_qm(&skew, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn lattice_layout() {
        let s = SearchSpace::default();
        let l = s.lattice();
        assert_eq!(l.len(), 200);
        assert_eq!(l[0], 0.0125);
        assert!((l[199] - 2.5).abs() < 1e-12);
        assert!(SearchSpace { hi: 3.0, ..s }.validate().is_err());
    }

    #[test]
    fn unreachable_target_is_flagged() {
        let engine = PhaseEngine::new(FrequencyGrid::symmetric(1.5, 513).unwrap());
        let base = CombDesign::new(1.0, 5.0, 0.8).unwrap();
        let search = SearchSpace {
            step: 0.25,
            ..SearchSpace::default()
        };
        let r = optimize_delta0(&engine, &base, 0.999_999, &search).unwrap();
        assert_eq!(r.delta_qm, 0.0);
        assert_eq!(r.delta0, 0.25);
        assert!(r.unreachable);
    }

    #[test]
    fn lazy_and_cached_curves_agree() {
        let engine = PhaseEngine::new(FrequencyGrid::symmetric(1.5, 1025).unwrap());
        let base = CombDesign::new(20.0, 5.5, 0.9).unwrap();
        let a = delta_qm_for(&engine, &base, 0.9, 0.7, true).unwrap();
        let b = delta_qm_for(&engine, &base, 0.9, 0.7, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn band_stops_at_the_comb_edge() {
        let engine = PhaseEngine::new(FrequencyGrid::default());
        let base = CombDesign::new(30.0, 4.5, 1.7).unwrap();
        for lazy in [true, false] {
            let b = delta_qm_for(&engine, &base, 1.7, 0.2, lazy).unwrap().width;
            assert!(b > 0.0 && b <= 1.7, "{b}");
        }
    }
}
