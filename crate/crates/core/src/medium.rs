//! Absorption-depth profile of a frequency comb burned into a Gaussian
//! inhomogeneous line.
//!
//! All frequencies are detunings from the line centre in units of the
//! inhomogeneous FWHM `Δ_in`. The coarse model replaces the teeth inside the
//! burned interval by their period average; the fine model resolves every
//! tooth and is used to validate the coarse one.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::integrate;

/// `4 ln 2`: envelope exponent for unit FWHM.
pub const FOUR_LN2: f64 = 4.0 * LN_2;

/// Area of a unit-peak Gaussian tooth divided by its FWHM, `√(π / (4 ln 2))`.
pub fn gaussian_tooth_area() -> f64 {
    (PI / FOUR_LN2).sqrt()
}

/// Inhomogeneous envelope `exp(−4 ln 2 · ω²)`, unit peak and unit FWHM.
pub fn envelope(omega: f64) -> f64 {
    (-FOUR_LN2 * omega * omega).exp()
}

/// Parameters of the burned comb.
///
/// Constructed through [`CombDesign::new`] or deserialization; both validate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign", into = "RawDesign")]
pub struct CombDesign {
    d0: f64,
    finesse: f64,
    delta0: f64,
    delta: f64,
    dilution: bool,
    kappa: bool,
    area_factor: f64,
}

/// Flat key-value mirror of [`CombDesign`] used for config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawDesign {
    pub d0: f64,
    pub finesse: f64,
    pub delta0: f64,
    pub delta: f64,
    pub dilution: bool,
    pub kappa: bool,
    pub area_factor: f64,
}

impl Default for RawDesign {
    fn default() -> Self {
        RawDesign {
            d0: 30.0,
            finesse: 5.0,
            delta0: 0.8,
            delta: 0.01,
            dilution: true,
            kappa: true,
            area_factor: 1.0,
        }
    }
}

impl TryFrom<RawDesign> for CombDesign {
    type Error = Error;

    fn try_from(raw: RawDesign) -> Result<Self> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        check(raw.d0.is_finite() && raw.d0 > 0.0, format!("d0 must be > 0 (got {})", raw.d0))?;
        check(
            raw.finesse.is_finite() && raw.finesse >= 1.0,
            format!("finesse must be >= 1 (got {})", raw.finesse),
        )?;
        check(
            raw.delta0.is_finite() && raw.delta0 > 0.0,
            format!("delta0 must be > 0 (got {})", raw.delta0),
        )?;
        check(
            raw.delta.is_finite() && raw.delta > 0.0,
            format!("delta must be > 0 (got {})", raw.delta),
        )?;
        check(
            raw.area_factor.is_finite() && raw.area_factor > 0.0,
            format!("area_factor must be > 0 (got {})", raw.area_factor),
        )?;
        Ok(CombDesign {
            d0: raw.d0,
            finesse: raw.finesse,
            delta0: raw.delta0,
            delta: raw.delta,
            dilution: raw.dilution,
            kappa: raw.kappa,
            area_factor: raw.area_factor,
        })
    }
}

impl From<CombDesign> for RawDesign {
    fn from(d: CombDesign) -> Self {
        RawDesign {
            d0: d.d0,
            finesse: d.finesse,
            delta0: d.delta0,
            delta: d.delta,
            dilution: d.dilution,
            kappa: d.kappa,
            area_factor: d.area_factor,
        }
    }
}

impl Default for CombDesign {
    fn default() -> Self {
        CombDesign::try_from(RawDesign::default()).expect("default design is valid")
    }
}

impl CombDesign {
    /// Design with the given depth, finesse and comb extent; other fields at
    /// their defaults (tooth spacing 0.01, dilution and decoherence on, unit
    /// area factor).
    pub fn new(d0: f64, finesse: f64, delta0: f64) -> Result<Self> {
        CombDesign::try_from(RawDesign {
            d0,
            finesse,
            delta0,
            ..RawDesign::default()
        })
    }

    fn modify(self, f: impl FnOnce(&mut RawDesign)) -> Result<Self> {
        let mut raw = RawDesign::from(self);
        f(&mut raw);
        CombDesign::try_from(raw)
    }

    pub fn with_d0(self, d0: f64) -> Result<Self> {
        self.modify(|r| r.d0 = d0)
    }

    pub fn with_finesse(self, finesse: f64) -> Result<Self> {
        self.modify(|r| r.finesse = finesse)
    }

    pub fn with_delta0(self, delta0: f64) -> Result<Self> {
        self.modify(|r| r.delta0 = delta0)
    }

    pub fn with_tooth_spacing(self, delta: f64) -> Result<Self> {
        self.modify(|r| r.delta = delta)
    }

    pub fn with_area_factor(self, area_factor: f64) -> Result<Self> {
        self.modify(|r| r.area_factor = area_factor)
    }

    pub fn with_dilution(mut self, on: bool) -> Self {
        self.dilution = on;
        self
    }

    pub fn with_kappa(mut self, on: bool) -> Self {
        self.kappa = on;
        self
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn finesse(&self) -> f64 {
        self.finesse
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Tooth spacing Δ.
    pub fn tooth_spacing(&self) -> f64 {
        self.delta
    }

    pub fn dilution(&self) -> bool {
        self.dilution
    }

    pub fn kappa(&self) -> bool {
        self.kappa
    }

    pub fn area_factor(&self) -> f64 {
        self.area_factor
    }

    /// Tooth FWHM γ = Δ / f.
    pub fn tooth_width(&self) -> f64 {
        self.delta / self.finesse
    }

    /// Echo delay τ = 2π / Δ, in units of 1/Δ_in.
    pub fn echo_delay(&self) -> f64 {
        2.0 * PI / self.delta
    }

    /// Amplitude decoherence factor of Gaussian teeth, `e^{−3.5/f²}`.
    pub fn kappa_amplitude(&self) -> f64 {
        (-3.5 / (self.finesse * self.finesse)).exp()
    }

    /// Factor applied to `|Γ|²`: `e^{−7/f²}` when decoherence is on, else 1.
    pub fn efficiency_factor(&self) -> f64 {
        if self.kappa {
            (-7.0 / (self.finesse * self.finesse)).exp()
        } else {
            1.0
        }
    }

    /// Ratio of in-comb to unburned depth, `a/f` with dilution on, else 1.
    pub fn comb_fraction(&self) -> f64 {
        if self.dilution {
            self.area_factor / self.finesse
        } else {
            1.0
        }
    }

    pub fn half_extent(&self) -> f64 {
        0.5 * self.delta0
    }

    pub fn in_comb(&self, omega: f64) -> bool {
        omega.abs() <= self.half_extent()
    }

    /// Fails unless the tooth spacing resolves the comb (Δ ≤ Δ₀/10).
    pub fn check_fine_model(&self) -> Result<()> {
        if self.delta > self.delta0 / 10.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "fine model needs delta <= delta0/10 (delta = {}, delta0 = {})",
                self.delta, self.delta0
            )));
        }
        Ok(())
    }
}

/// Period-averaged depth `D(ω) = α(ω)L`.
pub fn coarse_depth(design: &CombDesign, omega: f64) -> f64 {
    let wing = design.d0 * envelope(omega);
    if design.in_comb(omega) {
        wing * design.comb_fraction()
    } else {
        wing
    }
}

/// Tooth-resolved depth: Gaussian teeth of FWHM γ centred on `jΔ` inside the
/// comb, each with the envelope height at its centre, plus the unburned wings.
///
/// Requires [`CombDesign::check_fine_model`] to pass.
pub fn fine_depth(design: &CombDesign, omega: f64) -> f64 {
    // Evaluated on |ω| so the profile is exactly even.
    let w = omega.abs();
    let mut depth = if design.in_comb(w) {
        0.0
    } else {
        design.d0 * envelope(w)
    };
    let spacing = design.delta;
    let width = design.tooth_width();
    let last = (design.half_extent() / spacing * (1.0 + 1e-12)).floor() as i64;
    // exp(−4 ln 2 · 12²) ≈ 1e−173, far below anything representable next to a tooth.
    let reach = 12.0 * width;
    let lo = (((w - reach) / spacing).floor() as i64).max(-last);
    let hi = (((w + reach) / spacing).ceil() as i64).min(last);
    for j in lo..=hi {
        let center = j as f64 * spacing;
        let x = (w - center) / width;
        depth += design.d0 * envelope(center) * (-FOUR_LN2 * x * x).exp();
    }
    depth
}

/// Mean of [`fine_depth`] over one tooth period centred on `omega_center`.
pub fn period_average(design: &CombDesign, omega_center: f64) -> Result<f64> {
    design.check_fine_model()?;
    let half = 0.5 * design.delta;
    if omega_center.abs() + half > design.half_extent() {
        return Err(Error::Domain(format!(
            "period window [{}, {}] crosses the comb edge ±{}",
            omega_center - half,
            omega_center + half,
            design.half_extent()
        )));
    }
    let peak = design.d0 * envelope(omega_center).max(1e-300);
    let (value, _) = integrate(
        &|w| fine_depth(design, w),
        omega_center - half,
        omega_center + half,
        1e-13 * peak * design.delta,
    );
    Ok(value / design.delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        assert_eq!(envelope(0.0), 1.0);
        assert!((envelope(0.5) - 0.5).abs() < 1e-15);
        assert!((envelope(-0.5) - 0.5).abs() < 1e-15);
        assert!((envelope(2.0) - 2f64.powi(-16)).abs() < 1e-19);
    }

    #[test]
    fn design_validation() {
        assert!(CombDesign::new(0.0, 5.0, 0.8).is_err());
        assert!(CombDesign::new(30.0, 0.5, 0.8).is_err());
        assert!(CombDesign::new(30.0, 5.0, -1.0).is_err());
        assert!(CombDesign::new(f64::NAN, 5.0, 0.8).is_err());
        let d = CombDesign::new(30.0, 5.0, 0.8).unwrap();
        assert!(d.with_tooth_spacing(0.0).is_err());
        assert!(d.with_tooth_spacing(0.2).unwrap().check_fine_model().is_err());
        assert!((d.echo_delay() - 2.0 * PI / 0.01).abs() < 1e-9);
        assert!((d.tooth_width() - 0.002).abs() < 1e-15);
    }

    #[test]
    fn design_round_trips_through_toml() {
        let d = CombDesign::new(12.5, 7.0, 1.1).unwrap().with_kappa(false);
        let text = toml::to_string(&d).unwrap();
        let back: CombDesign = toml::from_str(&text).unwrap();
        assert_eq!(d, back);
        assert!(toml::from_str::<CombDesign>("d0 = -1").is_err());
        assert!(toml::from_str::<CombDesign>("bogus = 1").is_err());
    }

    #[test]
    fn coarse_depth_examples() {
        let d = CombDesign::new(30.0, 5.0, 0.8).unwrap();
        assert!((coarse_depth(&d, 0.0) - 6.0).abs() < 1e-12);
        assert!((coarse_depth(&d, 0.5) - 15.0).abs() < 1e-12);
        let off = d.with_dilution(false);
        for w in [0.0, 0.3, 0.5, 1.2] {
            assert_eq!(coarse_depth(&off, w), 30.0 * envelope(w));
        }
    }

    #[test]
    fn coarse_depth_is_even_and_monotone_per_side() {
        let d = CombDesign::new(17.0, 4.0, 1.3).unwrap();
        let mut prev_in = f64::INFINITY;
        let mut prev_out = f64::INFINITY;
        for i in 0..400 {
            let w = i as f64 * 0.01;
            let v = coarse_depth(&d, w);
            assert_eq!(v, coarse_depth(&d, -w));
            let prev = if d.in_comb(w) { &mut prev_in } else { &mut prev_out };
            assert!(v <= *prev);
            *prev = v;
        }
    }

    #[test]
    fn fine_depth_examples() {
        let d = CombDesign::new(30.0, 10.0, 0.8)
            .unwrap()
            .with_tooth_spacing(0.01)
            .unwrap();
        assert!((fine_depth(&d, 0.0) - 30.0).abs() < 1e-20);
        assert!(fine_depth(&d, 0.005) <= 1e-25);
        assert_eq!(fine_depth(&d, 1.0), 30.0 * envelope(1.0));
        for w in [0.0012, 0.13, 0.3999, 0.7] {
            assert_eq!(fine_depth(&d, w), fine_depth(&d, -w));
        }
    }

    // Composite Simpson over a tooth-resolved window, independent of the
    // adaptive integrator used by `period_average`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn period_average_of_isolated_teeth() {
        let d = CombDesign::new(1.0, 10.0, 0.5)
            .unwrap()
            .with_tooth_spacing(1e-3)
            .unwrap();
        let avg = period_average(&d, 0.0).unwrap();
        let oracle = simpson(|w| fine_depth(&d, w), -5e-4, 5e-4, 20_000) / 1e-3;
        assert!((avg - oracle).abs() < 1e-10);
        assert!((avg - gaussian_tooth_area() / 10.0).abs() < 1e-6);
        assert!((gaussian_tooth_area() / 10.0 - 0.106_447).abs() < 1e-6);
    }

    #[test]
    fn period_average_vanishes_for_huge_finesse() {
        let d = CombDesign::new(1.0, 1e6, 0.5).unwrap().with_tooth_spacing(1e-3).unwrap();
        assert!(period_average(&d, 0.0).unwrap() < 2e-6);
    }

    #[test]
    fn period_average_rejects_edge_windows() {
        let d = CombDesign::new(30.0, 5.0, 0.8).unwrap();
        assert!(matches!(period_average(&d, 0.398), Err(Error::Domain(_))));
    }
}
