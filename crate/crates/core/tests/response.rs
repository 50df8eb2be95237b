//! Invariants of the spectral response over randomized designs.

use afc_core::medium::{coarse_depth, fine_depth, gaussian_tooth_area, period_average};
use afc_core::response::{analytic_backward, eta_at, srf_gamma, PhaseEngine};
use afc_core::{CombDesign, FrequencyGrid};
use proptest::prelude::*;

fn design() -> impl Strategy<Value = CombDesign> {
    (1.0f64..60.0, 1.0f64..15.0, 0.05f64..2.5, any::<bool>(), any::<bool>()).prop_map(|(d0, f, delta0, dil, kap)| {
        CombDesign::new(d0, f, delta0).unwrap().with_dilution(dil).with_kappa(kap)
    })
}

fn engine() -> &'static PhaseEngine {
    use std::sync::OnceLock;
    static ENGINE: OnceLock<PhaseEngine> = OnceLock::new();
    ENGINE.get_or_init(|| PhaseEngine::new(FrequencyGrid::default()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn gamma_is_conjugate_symmetric_and_eta_bounded(d in design()) {
        let r = engine().response(&d).unwrap();
        let n = r.gamma.len();
        for i in 0..n {
            let mirrored = r.gamma[n - 1 - i].conj();
            prop_assert!((r.gamma[i] - mirrored).norm() < 1e-9);
            prop_assert!(r.eta[i] >= 0.0 && r.eta[i] <= 1.0 + 1e-9, "eta {} at {}", r.eta[i], r.omega()[i]);
            prop_assert_eq!(r.eta[i], r.eta[n - 1 - i]);
        }
    }

    #[test]
    fn zero_phase_reduces_to_absorption_law(depth in 0.0f64..80.0) {
        let g = srf_gamma(depth, 0.0);
        let expected = -(-depth).exp_m1();
        prop_assert!((g.norm_sqr() - expected * expected).abs() <= 4.0 * f64::EPSILON);
    }

    // η/D² = 1 − D + 7D²/12 − …, inside 3% only up to D ≈ 0.03.
    #[test]
    fn small_depth_scaling(depth in 1e-6f64..0.03) {
        let eta = srf_gamma(depth, 0.0).norm_sqr();
        let ratio = eta / (depth * depth);
        prop_assert!((ratio - 1.0).abs() <= 0.03);
        prop_assert!((ratio - (1.0 - depth + 7.0 * depth * depth / 12.0)).abs() <= depth.powi(3));
    }

    #[test]
    fn coarse_and_fine_depth_are_even(d in design(), w in 0.0f64..1.5) {
        prop_assert_eq!(coarse_depth(&d, w), coarse_depth(&d, -w));
        let fine = d.with_finesse(d.finesse().max(2.0)).unwrap();
        prop_assert_eq!(fine_depth(&fine, w), fine_depth(&fine, -w));
    }

    #[test]
    fn envelope_is_monotone_on_each_side(d in design(), a in 0.0f64..1.5, b in 0.0f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if d.in_comb(lo) == d.in_comb(hi) {
            prop_assert!(coarse_depth(&d, lo) >= coarse_depth(&d, hi));
        }
    }
}

#[test]
fn wide_comb_center_matches_closed_form() {
    for &(d0, f) in &[(5.0, 10.0), (20.0, 10.0), (40.0, 12.0), (60.0, 15.0)] {
        for delta0 in [3.0, 6.0] {
            let d = CombDesign::new(d0, f, delta0).unwrap();
            let eta = eta_at(&d, 0.0).unwrap();
            let analytic = analytic_backward(d0, f);
            assert!((eta / analytic - 1.0).abs() < 0.02, "d0={d0} f={f} delta0={delta0}: {eta} vs {analytic}");
        }
    }
}

#[test]
fn period_average_matches_coarse_model() {
    let area = gaussian_tooth_area();
    for &(d0, f, delta0) in &[(30.0, 5.0, 0.8), (10.0, 8.0, 0.6), (50.0, 15.0, 0.8)] {
        let d = CombDesign::new(d0, f, delta0)
            .unwrap()
            .with_tooth_spacing(delta0 / 50.0)
            .unwrap()
            .with_area_factor(area)
            .unwrap();
        for k in 0..=20 {
            let w = 0.25 * delta0 * k as f64 / 20.0;
            let avg = period_average(&d, w).unwrap();
            let coarse = coarse_depth(&d, w);
            assert!((avg / coarse - 1.0).abs() < 0.01, "f={f} w={w}: {avg} vs {coarse}");
        }
    }
}

#[test]
fn period_average_bias_follows_envelope_slope() {
    // Off a tooth centre the window holds a tooth up to Δ/2 away, whose
    // height differs from the envelope at the window centre by the slope.
    let area = gaussian_tooth_area();
    for &(f, delta0) in &[(5.0, 1.5), (15.0, 1.5), (10.0, 2.0)] {
        let spacing = delta0 / 50.0;
        let d = CombDesign::new(40.0, f, delta0)
            .unwrap()
            .with_tooth_spacing(spacing)
            .unwrap()
            .with_area_factor(area)
            .unwrap();
        for k in 0..=30 {
            let w = 0.25 * delta0 * k as f64 / 30.0;
            let rel = period_average(&d, w).unwrap() / coarse_depth(&d, w) - 1.0;
            let slope = 8.0 * std::f64::consts::LN_2 * (w.abs() + spacing) * spacing / 2.0;
            assert!(rel.abs() <= 1.05 * slope.exp_m1() + 1e-6, "f={f} w={w}: {rel} vs bound {slope}");
        }
    }
}
