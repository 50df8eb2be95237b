//! Special functions and Hilbert-transform machinery.
//!
//! The dispersion phase of an absorption profile `D(ω)` is its Hilbert
//! conjugate under the convention
//!
//! ```text
//! φ(ω) = (1/π) P∫ D(ω′) / (ω′ − ω) dω′
//! ```
//!
//! which gives a negative slope at the centre of an isolated absorption line.
//! Two independent routes are provided: [`hilbert_pv`] evaluates the
//! principal-value integral pointwise by adaptive Gauss–Kronrod quadrature
//! with singularity subtraction, and [`hilbert_fft`] transforms a uniformly
//! sampled profile in one shot with an FFT-based discrete convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Below this |x| the exponentially weighted Maclaurin series is used, above it
// the continued fraction. Both branches agree to better than 1e-13 here.
const DAWSON_SWITCH: f64 = 5.0;
const DAWSON_CF_TERMS: usize = 80;
// Past this point 2x² risks overflow inside the continued fraction.
const DAWSON_ASYMPTOTIC: f64 = 1e7;

/// Dawson's integral `F(x) = e^{−x²} ∫₀ˣ e^{t²} dt`.
pub fn dawson(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let value = if ax < DAWSON_SWITCH {
        dawson_series(ax)
    } else if ax < DAWSON_ASYMPTOTIC {
        dawson_continued_fraction(ax)
    } else {
        let inv = 1.0 / (2.0 * ax * ax);
        (1.0 + inv * (1.0 + 3.0 * inv)) / (2.0 * ax)
    };
    value.copysign(x)
}

/// `e^{−x²} Σ x^{2n+1} / (n! (2n+1))`; every term is positive so there is no
/// cancellation even at the top of the range.
pub(crate) fn dawson_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = 0.0;
    let mut n = 0u32;
    loop {
        let contrib = term / f64::from(2 * n + 1);
        sum += contrib;
        if contrib <= 1e-17 * sum {
            break;
        }
        n += 1;
        term *= x2 / f64::from(n);
    }
    (-x2).exp() * sum
}

/// `F(x) = x / (1 + 2x² − 4x²/(3 + 2x² − 8x²/(5 + 2x² − …)))`, evaluated bottom-up.
pub(crate) fn dawson_continued_fraction(x: f64) -> f64 {
    let x2 = x * x;
    let mut tail = 0.0;
    for k in (1..=DAWSON_CF_TERMS).rev() {
        let k = k as f64;
        tail = 4.0 * k * x2 / ((2.0 * k + 1.0) + 2.0 * x2 - tail);
    }
    x / (1.0 + 2.0 * x2 - tail)
}

/// Closed interval `[lo, hi]` on the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Interval `[−half, half]`.
    pub fn symmetric(half: f64) -> Self {
        Interval {
            lo: -half,
            hi: half,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute tolerance for each continuous piece of a principal-value integral.
const PV_ABS_TOL: f64 = 1e-11;
const PV_MAX_INTERVALS: usize = 400;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration; returns `(value, error, intervals)`.
fn integrate_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64, usize) {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol || parts.len() >= PV_MAX_INTERVALS {
            let total: f64 = parts.iter().map(|p| p.2).sum();
            return (total, total_err, parts.len());
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(f, lo, mid);
        let (vr, er) = gk15(f, mid, hi);
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute
/// tolerance `tol`; returns `(value, estimated_error)`.
pub(crate) fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (value, error, _) = integrate_adaptive(f, a, b, tol);
    (value, error)
}

/// `P∫_lo^hi f(x)/(x − ω) dx` for one continuous piece, by subtracting the
/// value of `f` at the point of the piece nearest to `ω`.
fn pv_piece(profile: &impl Fn(f64) -> f64, omega: f64, lo: f64, hi: f64) -> Result<f64> {
    let anchor = omega.clamp(lo, hi);
    let c = profile(anchor);
    let step = 1e-6 * omega.abs().max(1.0);
    let regular = |x: f64| {
        if x == omega {
            (profile(omega + step) - profile(omega - step)) / (2.0 * step)
        } else {
            (profile(x) - c) / (x - omega)
        }
    };
    let (value, error, intervals) = integrate_adaptive(&regular, lo, hi, PV_ABS_TOL);
    if !(error <= PV_ABS_TOL) || !value.is_finite() {
        return Err(Error::Quadrature {
            omega,
            error,
            intervals,
        });
    }
    let log_term = if c == 0.0 {
        0.0
    } else {
        // Infinite when ω sits exactly on a jump of the profile.
        c * ((hi - omega).abs().ln() - (lo - omega).abs().ln())
    };
    Ok(value + log_term)
}

/// Principal-value Hilbert conjugate `(1/π) P∫ D(ω′)/(ω′ − ω) dω′` of `profile`
/// over `support`, with the integrand set to zero inside `exclusion`.
///
/// The profile must be continuous on each remaining piece. Outside `support`
/// it is treated as zero, so supports should extend to where the profile is
/// negligible. At a point where the integrand jumps (an edge of `support` or
/// `exclusion` with non-zero profile value) the result diverges and an
/// infinite value is returned.
pub fn hilbert_pv(
    profile: impl Fn(f64) -> f64,
    omega: f64,
    support: Interval,
    exclusion: Option<Interval>,
) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("hilbert_pv: omega = {omega} is not finite")));
    }
    if !(support.lo.is_finite() && support.hi.is_finite() && support.lo < support.hi) {
        return Err(Error::Domain(format!(
            "hilbert_pv: support [{}, {}] must be a finite non-empty interval",
            support.lo, support.hi
        )));
    }
    let mut pieces = Vec::with_capacity(2);
    match exclusion {
        Some(ex) if ex.hi > support.lo && ex.lo < support.hi => {
            if ex.lo > support.lo {
                pieces.push((support.lo, ex.lo));
            }
            if ex.hi < support.hi {
                pieces.push((ex.hi, support.hi));
            }
        }
        _ => pieces.push((support.lo, support.hi)),
    }
    let mut total = 0.0;
    for (lo, hi) in pieces {
        total += pv_piece(&profile, omega, lo, hi)?;
    }
    Ok(total / PI)
}

/// Real-valued function sampled on a uniform, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    omega: Vec<f64>,
    values: Vec<f64>,
}

impl SampledProfile {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::Config(format!(
                "sampled profile: {} frequencies but {} values",
                omega.len(),
                values.len()
            )));
        }
        if omega.len() < 2 {
            return Err(Error::Config("sampled profile needs at least two samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "sampled profile: value at omega = {} is not finite",
                omega[i]
            )));
        }
        let n = omega.len();
        let span = omega[n - 1] - omega[0];
        if !(span > 0.0) || omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sampled profile: omega must be strictly increasing".into()));
        }
        let step = span / (n - 1) as f64;
        let tol = 1e-12 * span.max(omega[0].abs()).max(omega[n - 1].abs());
        if omega
            .iter()
            .enumerate()
            .any(|(i, &w)| (w - (omega[0] + i as f64 * step)).abs() > tol)
        {
            return Err(Error::Config("sampled profile: omega is not uniformly spaced".into()));
        }
        Ok(SampledProfile { omega, values })
    }

    /// Samples `f` on `len` uniform points spanning `[−half_span, half_span]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, half_span: f64, len: usize) -> Result<Self> {
        if len < 2 || !(half_span > 0.0) {
            return Err(Error::Config(format!(
                "sampled profile: need len >= 2 and half_span > 0 (got {len}, {half_span})"
            )));
        }
        let step = 2.0 * half_span / (len - 1) as f64;
        let omega: Vec<f64> = (0..len).map(|i| -half_span + i as f64 * step).collect();
        let values = omega.iter().map(|&w| f(w)).collect();
        SampledProfile::new(omega, values)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.omega[self.len() - 1] - self.omega[0]) / (self.len() - 1) as f64
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.omega, self.values)
    }
}

/// Grid requirements for [`hilbert_fft`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftHilbertConfig {
    /// The grid must cover at least `[−min_half_span, min_half_span]`.
    pub min_half_span: f64,
    /// Minimum number of samples; the length must also be a power of two.
    pub min_len: usize,
    /// Zero-padding factor applied before the convolution; at least 2.
    pub pad_factor: usize,
}

impl Default for FftHilbertConfig {
    fn default() -> Self {
        FftHilbertConfig {
            min_half_span: 8.0,
            min_len: 1 << 14,
            pad_factor: 4,
        }
    }
}

/// Discrete Hilbert conjugate of a sampled profile with the default grid
/// requirements. See [`hilbert_fft_with`].
pub fn hilbert_fft(profile: &SampledProfile) -> Result<SampledProfile> {
    hilbert_fft_with(profile, &FftHilbertConfig::default())
}

/// Discrete Hilbert conjugate of a uniformly sampled profile, same sign
/// convention as [`hilbert_pv`].
///
/// The samples are read as a band-limited (sinc) interpolant, whose exact
/// transform at the nodes is the odd-offset kernel `2/(π k)`. The kernel is
/// applied as an aperiodic convolution through a zero-padded FFT, so there is
/// no periodization error; values outside the grid are taken as zero. Jumps
/// in the profile should sit on a node carrying the mean of the two one-sided
/// limits, which keeps the error second order in the grid step away from the
/// jump.
pub fn hilbert_fft_with(profile: &SampledProfile, config: &FftHilbertConfig) -> Result<SampledProfile> {
    let n = profile.len();
    if !n.is_power_of_two() || n < config.min_len {
        return Err(Error::Config(format!(
            "hilbert_fft: grid length {n} must be a power of two >= {}",
            config.min_len
        )));
    }
    let (first, last) = (profile.omega[0], profile.omega[n - 1]);
    let slack = 1e-9 * config.min_half_span;
    if first > -config.min_half_span + slack || last < config.min_half_span - slack {
        return Err(Error::Config(format!(
            "hilbert_fft: grid [{first}, {last}] must span at least ±{}",
            config.min_half_span
        )));
    }
    if config.pad_factor < 2 {
        return Err(Error::Config("hilbert_fft: pad_factor must be at least 2".into()));
    }

    let len = (config.pad_factor * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut signal: Vec<Complex64> = profile
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();

    // phase[m] = Σ_n v[n] K(n − m) = (v ⊛ R)[m] with R[j] = K(−j), K(k) = 2/(πk) for odd k.
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    for j in (1..n).step_by(2) {
        let k = 2.0 / (PI * j as f64);
        kernel[j] = Complex64::new(-k, 0.0);
        kernel[len - j] = Complex64::new(k, 0.0);
    }

    forward.process(&mut signal);
    forward.process(&mut kernel);
    for (s, k) in signal.iter_mut().zip(&kernel) {
        *s *= k;
    }
    inverse.process(&mut signal);

    let scale = 1.0 / len as f64;
    let values = signal[..n].iter().map(|c| c.re * scale).collect();
    Ok(SampledProfile {
        omega: profile.omega.clone(),
        values,
    })
}
