use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform frequency grid `ω_i = (i − c)·step` in units of Δ_in.
///
/// The centre index `c` is stored doubled so that mirrored points are exact
/// negatives of each other in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    len: usize,
    step: f64,
    center2: usize,
}

impl FrequencyGrid {
    /// `len` points spanning `[−half_span, half_span]` inclusive.
    pub fn symmetric(half_span: f64, len: usize) -> Result<Self> {
        if len < 2 || !(half_span > 0.0) || !half_span.is_finite() {
            return Err(Error::Config(format!(
                "frequency grid needs at least 2 points and a positive span (got {len} points, half span {half_span})"
            )));
        }
        Ok(FrequencyGrid {
            len,
            step: 2.0 * half_span / (len - 1) as f64,
            center2: len - 1,
        })
    }

    /// FFT ordering: `ω_k = (k − len/2)·step` for `k = 0..len`, `len` even.
    pub fn fft_centered(step: f64, len: usize) -> Result<Self> {
        if len < 2 || len % 2 != 0 || !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!(
                "FFT frequency grid needs an even length and positive step (got {len}, {step})"
            )));
        }
        Ok(FrequencyGrid {
            len,
            step,
            center2: len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn point(&self, i: usize) -> f64 {
        (2 * i as i64 - self.center2 as i64) as f64 * (0.5 * self.step)
    }

    pub fn first(&self) -> f64 {
        self.point(0)
    }

    pub fn last(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Index of the point `−ω_i`, if it is on the grid.
    pub fn mirror(&self, i: usize) -> Option<usize> {
        self.center2.checked_sub(i).filter(|&j| j < self.len)
    }

    pub fn is_symmetric(&self) -> bool {
        self.center2 + 1 == self.len
    }

    /// Whether the grid covers `[−half, half]`.
    pub fn covers(&self, half: f64) -> bool {
        self.first() <= -half && self.last() >= half
    }
}

impl Default for FrequencyGrid {
    /// `[−1.5, 1.5]` with 4096 samples.
    fn default() -> Self {
        FrequencyGrid::symmetric(1.5, 4096).expect("valid default grid")
    }
}
