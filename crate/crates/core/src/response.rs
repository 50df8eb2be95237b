//! Dispersion phase, spectral response function and spectral efficiency of
//! backward retrieval.
//!
//! With `D(ω) = α(ω)L` and `φ(ω)` its Hilbert conjugate, the response is
//!
//! ```text
//! Γ = D (1 − e^{−D + iφ}) / (D − iφ),      η = κ² |Γ|²,   κ² = e^{−7/f²}
//! ```
//!
//! The coarse depth splits into a full Gaussian line scaled by `c = a/f` plus
//! the unburned wings scaled by `1 − c`, so
//! `φ = d0 · (c·φ_G + (1 − c)·W(·; Δ₀))`. `φ_G` is closed form (Dawson) and
//! `W` depends only on Δ₀ and the grid, which makes it cacheable across depths
//! and finesses.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::medium::{coarse_depth, envelope, CombDesign, FOUR_LN2};
use crate::specfun::{dawson, hilbert_pv, Interval};

/// Depth below which Γ is replaced by its limit 0.
const DEPTH_FLOOR: f64 = 1e-12;

/// Hilbert conjugate of the unit envelope, `−(2/√π)·F(√(4 ln 2)·ω)`.
pub fn envelope_phase(omega: f64) -> f64 {
    -(2.0 / PI.sqrt()) * dawson(FOUR_LN2.sqrt() * omega)
}

/// Conjugate of the wings of the unit envelope outside `[−Δ₀/2, Δ₀/2]`,
/// obtained as the full-line conjugate minus the transform of the burned core.
/// Diverges logarithmically at `ω = ±Δ₀/2`.
pub fn wing_phase(delta0: f64, omega: f64) -> Result<f64> {
    let core = hilbert_pv(envelope, omega, Interval::symmetric(0.5 * delta0), None)?;
    Ok(envelope_phase(omega) - core)
}

/// Sampled depth `D` and phase `φ` on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SusceptibilityProfile {
    pub omega: Vec<f64>,
    pub depth: Vec<f64>,
    pub phase: Vec<f64>,
}

impl SusceptibilityProfile {
    /// Same depth with the dispersion switched off.
    pub fn without_dispersion(&self) -> Self {
        SusceptibilityProfile {
            phase: vec![0.0; self.phase.len()],
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Γ(ω) and η(ω) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResponse {
    pub design: CombDesign,
    pub profile: SusceptibilityProfile,
    pub gamma: Vec<Complex64>,
    pub eta: Vec<f64>,
    pub kappa_applied: bool,
}

impl SpectralResponse {
    pub fn omega(&self) -> &[f64] {
        &self.profile.omega
    }

    /// Linear interpolation of η; clamps outside the grid.
    pub fn eta_at(&self, omega: f64) -> f64 {
        interpolate(&self.profile.omega, &self.eta, omega)
    }
}

pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Spectral response function of backward retrieval for one frequency.
pub fn srf_gamma(depth: f64, phase: f64) -> Complex64 {
    if depth < DEPTH_FLOOR || !phase.is_finite() {
        return Complex64::new(0.0, 0.0);
    }
    // 1 − e^{−D+iφ} without cancellation for small D and φ.
    let decay = (-depth).exp_m1();
    let half = (0.5 * phase).sin();
    let re = -(decay * phase.cos() - 2.0 * half * half);
    let im = -(-depth).exp() * phase.sin();
    depth * Complex64::new(re, im) / Complex64::new(depth, -phase)
}

/// η(ω) for a sampled profile, applying the decoherence factor when the
/// design asks for it.
pub fn efficiency(design: &CombDesign, profile: &SusceptibilityProfile) -> SpectralResponse {
    let factor = design.efficiency_factor();
    let gamma: Vec<Complex64> = profile
        .depth
        .iter()
        .zip(&profile.phase)
        .map(|(&d, &p)| srf_gamma(d, p))
        .collect();
    let eta = gamma.iter().map(|g| factor * g.norm_sqr()).collect();
    SpectralResponse {
        design: *design,
        profile: profile.clone(),
        gamma,
        eta,
        kappa_applied: design.kappa(),
    }
}

/// Closed-form backward efficiency without dispersion,
/// `(1 − e^{−d0/f})² e^{−7/f²}`.
pub fn analytic_backward(d0: f64, finesse: f64) -> f64 {
    let absorbed = -(-d0 / finesse).exp_m1();
    absorbed * absorbed * (-7.0 / (finesse * finesse)).exp()
}

/// Closed-form forward efficiency, `(d0/f)² e^{−d0/f} e^{−7/f²}`.
pub fn analytic_forward(d0: f64, finesse: f64) -> f64 {
    analytic_forward_coherent(d0, finesse) * (-7.0 / (finesse * finesse)).exp()
}

/// Forward efficiency with perfect rephasing (κ = 1), `(d0/f)² e^{−d0/f}`.
pub fn analytic_forward_coherent(d0: f64, finesse: f64) -> f64 {
    let d = d0 / finesse;
    d * d * (-d).exp()
}

/// Grid-bound phase evaluator holding the envelope conjugate and a cache of
/// wing conjugates keyed by Δ₀.
///
/// Safe to share between threads. Two threads missing the cache for the
/// same Δ₀ both compute it; the results are identical and the first insert
/// wins.
#[derive(Debug)]
pub struct PhaseEngine {
    grid: FrequencyGrid,
    omega: Vec<f64>,
    envelope_phase: Vec<f64>,
    wings: RwLock<HashMap<u64, Arc<[f64]>>>,
}

impl PhaseEngine {
    pub fn new(grid: FrequencyGrid) -> Self {
        let omega = grid.points();
        let envelope_phase = omega.iter().map(|&w| envelope_phase(w)).collect();
        PhaseEngine {
            grid,
            omega,
            envelope_phase,
            wings: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn envelope_phase(&self) -> &[f64] {
        &self.envelope_phase
    }

    /// Wing conjugate `W(ω_i; Δ₀)` on every grid point, cached.
    pub fn wing(&self, delta0: f64) -> Result<Arc<[f64]>> {
        let key = delta0.to_bits();
        if let Some(hit) = self.wings.read().expect("wing cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let values: Arc<[f64]> = self.compute_wing(delta0)?.into();
        let mut cache = self.wings.write().expect("wing cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(values)))
    }

    pub fn cached_wings(&self) -> usize {
        self.wings.read().expect("wing cache poisoned").len()
    }

    fn compute_wing(&self, delta0: f64) -> Result<Vec<f64>> {
        let n = self.omega.len();
        let mut out = vec![f64::NAN; n];
        // W is odd: evaluate ω ≥ 0 and mirror.
        for i in 0..n {
            if self.omega[i] < 0.0 {
                continue;
            }
            out[i] = if self.omega[i] == 0.0 {
                0.0
            } else {
                wing_phase(delta0, self.omega[i])?
            };
            if let Some(j) = self.grid.mirror(i) {
                out[j] = -out[i];
            }
        }
        for i in 0..n {
            if out[i].is_nan() {
                out[i] = -wing_phase(delta0, -self.omega[i])?;
            }
        }
        Ok(out)
    }

    /// `D(ω_i)` and `φ(ω_i)` for grid point `i`, given the design's wing slice.
    pub(crate) fn point(&self, design: &CombDesign, wing: Option<&[f64]>, i: usize) -> (f64, f64) {
        let w = self.omega[i];
        let c = design.comb_fraction();
        let depth = coarse_depth(design, w);
        let mut phase = c * self.envelope_phase[i];
        if let Some(wing) = wing {
            phase += (1.0 - c) * wing[i];
        }
        (depth, design.d0() * phase)
    }

    /// Wing slice for a design, or `None` when the decomposition collapses
    /// to the full line (no dilution, or `a/f = 1`).
    pub(crate) fn wing_for(&self, design: &CombDesign) -> Result<Option<Arc<[f64]>>> {
        if 1.0 - design.comb_fraction() == 0.0 {
            Ok(None)
        } else {
            self.wing(design.delta0()).map(Some)
        }
    }

    pub fn phase_profile(&self, design: &CombDesign) -> Result<SusceptibilityProfile> {
        let wing = self.wing_for(design)?;
        let (depth, phase) = (0..self.omega.len())
            .map(|i| self.point(design, wing.as_deref(), i))
            .unzip();
        Ok(SusceptibilityProfile {
            omega: self.omega.clone(),
            depth,
            phase,
        })
    }

    pub fn response(&self, design: &CombDesign) -> Result<SpectralResponse> {
        Ok(efficiency(design, &self.phase_profile(design)?))
    }
}

/// `D(ω)` and `φ(ω)` at an arbitrary frequency, without caching.
pub fn susceptibility_at(design: &CombDesign, omega: f64) -> Result<(f64, f64)> {
    let c = design.comb_fraction();
    let mut phase = c * envelope_phase(omega);
    if 1.0 - c != 0.0 {
        // Odd in ω; evaluated on |ω| to match the mirrored grid cache.
        let wing = if omega == 0.0 {
            0.0
        } else {
            omega.signum() * wing_phase(design.delta0(), omega.abs())?
        };
        phase += (1.0 - c) * wing;
    }
    Ok((coarse_depth(design, omega), design.d0() * phase))
}

/// η at an arbitrary frequency.
pub fn eta_at(design: &CombDesign, omega: f64) -> Result<f64> {
    let (d, p) = susceptibility_at(design, omega)?;
    Ok(design.efficiency_factor() * srf_gamma(d, p).norm_sqr())
}

/// Depth and phase sampled on `grid`. The grid must cover `[−1.5, 1.5]`.
pub fn phase_profile(design: &CombDesign, grid: &FrequencyGrid) -> Result<SusceptibilityProfile> {
    if !grid.covers(1.5) {
        return Err(Error::Config(format!(
            "frequency grid [{}, {}] must cover [-1.5, 1.5]",
            grid.first(),
            grid.last()
        )));
    }
    PhaseEngine::new(*grid).phase_profile(design)
}
