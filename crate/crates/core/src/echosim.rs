//! Time-domain echo field for a Gaussian signal pulse.
//!
//! `A_echo(t) = κ ∫ dω/2π Γ(ω) e^{−iωt} A_s(ω)` is evaluated with an FFT on
//! the conjugate frequency grid of the requested time grid. Time is the
//! retarded time at the exit face measured from the echo emission, so an
//! identity response returns the input pulse centred on t = 0.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::medium::CombDesign;
use crate::response::{PhaseEngine, SpectralResponse};

/// Spectral amplitude at the grid edge must be below this fraction of the peak.
const EDGE_LEAKAGE: f64 = 1e-10;

/// Gaussian signal pulse, described by its spectral amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub center_detuning: f64,
    /// FWHM of |A_s(ω)| in units of Δ_in.
    pub bandwidth: f64,
}

impl PulseSpec {
    pub fn new(center_detuning: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) || !center_detuning.is_finite() {
            return Err(Error::Config(format!(
                "pulse needs a finite centre and positive bandwidth (got {center_detuning}, {bandwidth})"
            )));
        }
        Ok(PulseSpec {
            center_detuning,
            bandwidth,
        })
    }

    /// Unit-energy spectral amplitude, `∫ |A_s|² dω/2π = 1`.
    pub fn amplitude(&self, omega: f64) -> f64 {
        let x = (omega - self.center_detuning) / self.bandwidth;
        let norm = (2.0 * PI / (self.bandwidth * (PI / (8.0 * LN_2)).sqrt())).sqrt();
        norm * (-4.0 * LN_2 * x * x).exp()
    }

    /// Half-width around 0 the frequency grid must cover to keep the edge
    /// amplitude below the leakage threshold.
    pub fn required_half_span(&self) -> f64 {
        self.center_detuning.abs() + self.bandwidth * ((1.0 / EDGE_LEAKAGE).ln() / (4.0 * LN_2)).sqrt()
    }
}

/// Uniform time grid `t_j = (j − n/2)·dt` (units 1/Δ_in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub len: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(len: usize, dt: f64) -> Result<Self> {
        if len < 2 || len % 2 != 0 || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "time grid needs an even number of points and dt > 0 (got {len}, {dt})"
            )));
        }
        Ok(TimeGrid { len, dt })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len)
            .map(|j| (j as f64 - (self.len / 2) as f64) * self.dt)
            .collect()
    }

    /// Conjugate frequency grid, `dω = 2π / (n·dt)`.
    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::fft_centered(2.0 * PI / (self.len as f64 * self.dt), self.len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoResult {
    pub time: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub input: Vec<Complex64>,
    /// ∫|A_echo|² dt / ∫|A_s|² dt.
    pub energy_efficiency: f64,
}

/// Echo field for `design` and `pulse` on `time`.
pub fn echo_field(design: &CombDesign, pulse: &PulseSpec, time: &TimeGrid) -> Result<EchoResult> {
    let freq = time.frequency_grid()?;
    check_span(pulse, &freq)?;
    let response = PhaseEngine::new(freq).response(design)?;
    let kappa = if design.kappa() { design.kappa_amplitude() } else { 1.0 };
    let gamma: Vec<Complex64> = response.gamma.iter().map(|g| g * kappa).collect();
    Ok(echo_from_transfer(pulse, time, &gamma))
}

/// Echo field for an arbitrary transfer function sampled on the conjugate
/// frequency grid of `time` (including any decoherence factor).
pub fn echo_from_transfer(pulse: &PulseSpec, time: &TimeGrid, transfer: &[Complex64]) -> EchoResult {
    let n = time.len;
    let freq = time.frequency_grid().expect("validated time grid");
    let spectrum: Vec<f64> = (0..n).map(|k| pulse.amplitude(freq.point(k))).collect();
    let input = synthesize(time, &spectrum.iter().map(|&a| Complex64::new(a, 0.0)).collect::<Vec<_>>());
    let amplitude = synthesize(
        time,
        &spectrum
            .iter()
            .zip(transfer)
            .map(|(&a, g)| g * a)
            .collect::<Vec<_>>(),
    );
    let energy = |xs: &[Complex64]| xs.iter().map(|z| z.norm_sqr()).sum::<f64>() * time.dt;
    let energy_efficiency = energy(&amplitude) / energy(&input);
    EchoResult {
        time: time.times(),
        amplitude,
        input,
        energy_efficiency,
    }
}

/// `A(t_j) = (dω/2π) Σ_k F(ω_k) e^{−iω_k t_j}` with `ω_k = (k − n/2)dω`,
/// `t_j = (j − n/2)dt`; the centring phases reduce to `(−1)^{j+k}·(−1)^{n/2}`.
fn synthesize(time: &TimeGrid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = time.len;
    let dw = 2.0 * PI / (n as f64 * time.dt);
    let scale = dw / (2.0 * PI);
    let half = n / 2;
    let sign = |m: usize| if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, v)| v * sign(k))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(j, v)| v * (scale * sign(j + half)))
        .collect()
}

fn check_span(pulse: &PulseSpec, freq: &FrequencyGrid) -> Result<()> {
    let edge = freq.first().abs().min(freq.last().abs());
    let peak = pulse.amplitude(pulse.center_detuning);
    let worst = pulse.amplitude(freq.first()).max(pulse.amplitude(freq.last()));
    if worst > EDGE_LEAKAGE * peak {
        return Err(Error::Config(format!(
            "pulse spectrum leaks past the frequency grid edge ±{edge:.4}; need a half-span of at least {:.4} (reduce dt)",
            pulse.required_half_span()
        )));
    }
    Ok(())
}

/// Parseval route: `∫ η(ω)|A_s(ω)|² dω / ∫ |A_s(ω)|² dω` on the response grid.
pub fn energy_efficiency_spectral(pulse: &PulseSpec, response: &SpectralResponse) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&w, &eta) in response.omega().iter().zip(&response.eta) {
        let a2 = pulse.amplitude(w).powi(2);
        num += eta * a2;
        den += a2;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_is_unit_energy() {
        let p = PulseSpec::new(0.3, 0.2).unwrap();
        let dw = 1e-4;
        let e: f64 = (-20_000..20_000)
            .map(|k| p.amplitude(0.3 + k as f64 * dw).powi(2) * dw / (2.0 * PI))
            .sum();
        assert!((e - 1.0).abs() < 1e-12);
        assert!((p.amplitude(0.4) / p.amplitude(0.3) - 0.5).abs() < 1e-15);
        assert!(PulseSpec::new(0.0, 0.0).is_err());
    }

    #[test]
    fn identity_response_reproduces_the_pulse() {
        let pulse = PulseSpec::new(0.0, 0.5).unwrap();
        let time = TimeGrid::new(1024, 0.5).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); 1024];
        let r = echo_from_transfer(&pulse, &time, &ones);
        assert!((r.energy_efficiency - 1.0).abs() < 1e-14);
        assert_eq!(r.amplitude, r.input);
        // Real, even, peaked at t = 0 for a centred Gaussian spectrum.
        let peak = r.input.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(r.input[512].norm(), peak);
        assert!(r.input[512].im.abs() < 1e-12 * peak);
        let total: f64 = r.input.iter().map(|z| z.norm_sqr()).sum::<f64>() * time.dt;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_route_flat_efficiency() {
        let grid = FrequencyGrid::symmetric(3.0, 2001).unwrap();
        let d = CombDesign::default();
        let mut r = PhaseEngine::new(grid).response(&d).unwrap();
        r.eta = vec![0.37; r.eta.len()];
        let p = PulseSpec::new(0.1, 0.3).unwrap();
        assert!((energy_efficiency_spectral(&p, &r) - 0.37).abs() < 1e-15);
    }

    #[test]
    fn leakage_is_reported() {
        let pulse = PulseSpec::new(0.0, 2.0).unwrap();
        let time = TimeGrid::new(256, 2.0).unwrap();
        let err = echo_field(&CombDesign::default(), &pulse, &time).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("half-span")));
    }

    #[test]
    fn empty_medium_gives_no_echo() {
        // Depth below the Γ floor everywhere.
        let d = CombDesign::new(1e-13, 1.0, 0.8).unwrap();
        let r = echo_field(&d, &PulseSpec::new(0.0, 0.3).unwrap(), &TimeGrid::new(512, 0.5).unwrap())
            .unwrap();
        assert_eq!(r.energy_efficiency, 0.0);
        assert!(r.amplitude.iter().all(|z| z.norm() == 0.0));
    }
}
