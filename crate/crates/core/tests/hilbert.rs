//! Properties of the two Hilbert-transform routes.

use afc_core::specfun::{hilbert_fft, hilbert_pv, Interval, SampledProfile};
use proptest::prelude::*;

const SPAN: f64 = 8.0;

fn gaussian(center: f64, fwhm: f64, amp: f64) -> impl Fn(f64) -> f64 {
    move |w: f64| {
        let x = (w - center) / fwhm;
        amp * (-4.0 * std::f64::consts::LN_2 * x * x).exp()
    }
}

/// Gaussian restricted to `[omega[lo], omega[hi]]`, with the jump nodes
/// carrying the mean of the one-sided limits.
fn truncated(f: &impl Fn(f64) -> f64, omega: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    omega
        .iter()
        .enumerate()
        .map(|(i, &w)| match i {
            _ if i == lo || i == hi => 0.5 * f(w),
            _ if i > lo && i < hi => f(w),
            _ => 0.0,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn even_profile_gives_odd_conjugate(fwhm in 0.3f64..2.0, amp in 0.1f64..3.0) {
        let p = SampledProfile::from_fn(gaussian(0.0, fwhm, amp), SPAN, 1 << 14).unwrap();
        let h = hilbert_fft(&p).unwrap();
        let v = h.values();
        let n = v.len();
        for i in 0..n / 2 {
            prop_assert!((v[i] + v[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn conjugate_is_linear(
        c1 in -1.0f64..1.0, w1 in 0.3f64..2.0,
        c2 in -1.0f64..1.0, w2 in 0.3f64..2.0,
        a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        let (f1, f2) = (gaussian(c1, w1, 1.0), gaussian(c2, w2, 1.0));
        let n = 1 << 14;
        let h1 = hilbert_fft(&SampledProfile::from_fn(&f1, SPAN, n).unwrap()).unwrap();
        let h2 = hilbert_fft(&SampledProfile::from_fn(&f2, SPAN, n).unwrap()).unwrap();
        let mix = SampledProfile::from_fn(|w| a * f1(w) + b * f2(w), SPAN, n).unwrap();
        let hm = hilbert_fft(&mix).unwrap();
        for i in 0..n {
            let expected = a * h1.values()[i] + b * h2.values()[i];
            prop_assert!((hm.values()[i] - expected).abs() < 1e-10);
        }
    }
}

#[derive(Debug, Clone)]
enum Case {
    Gaussian { center: f64, fwhm: f64, amp: f64 },
    Truncated { center: f64, fwhm: f64, amp: f64, lo: usize, hi: usize },
}

fn case() -> impl Strategy<Value = (Case, f64)> {
    let n = 1usize << 16;
    let full = (-1.0f64..1.0, 0.4f64..2.0, 0.2f64..2.0)
        .prop_map(|(center, fwhm, amp)| Case::Gaussian { center, fwhm, amp });
    // Edges anywhere in [−2, 2], at least 0.3 apart.
    let step = 2.0 * SPAN / (n - 1) as f64;
    let node = move |w: f64| ((w + SPAN) / step).round() as usize;
    let cut = (-0.5f64..0.5, 0.4f64..2.0, 0.2f64..1.5, -2.0f64..1.7, 0.3f64..2.0).prop_map(
        move |(center, fwhm, amp, a, width)| Case::Truncated {
            center,
            fwhm,
            amp,
            lo: node(a),
            hi: node((a + width).min(2.0)),
        },
    );
    (prop_oneof![full, cut], -4.0f64..4.0)
}

proptest! {
    // A 50-point random set of profiles and evaluation frequencies.
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fft_route_matches_pv_oracle((c, target) in case()) {
        let n = 1usize << 16;
        let omega: Vec<f64> = SampledProfile::from_fn(|_| 0.0, SPAN, n).unwrap().into_parts().0;
        let (values, support, jumps) = match &c {
            Case::Gaussian { center, fwhm, amp } => {
                let f = gaussian(*center, *fwhm, *amp);
                (omega.iter().map(|&w| f(w)).collect::<Vec<_>>(), Interval::symmetric(SPAN), vec![])
            }
            Case::Truncated { center, fwhm, amp, lo, hi } => {
                let f = gaussian(*center, *fwhm, *amp);
                (
                    truncated(&f, &omega, *lo, *hi),
                    Interval::new(omega[*lo], omega[*hi]),
                    vec![omega[*lo], omega[*hi]],
                )
            }
        };
        // Nearest node to the target frequency, kept 0.1 away from any jump.
        let mut i = omega.partition_point(|&w| w < target).min(n - 1);
        if jumps.iter().any(|&j| (omega[i] - j).abs() < 0.1) {
            let j = jumps.iter().copied().min_by(|a, b| (omega[i] - a).abs().total_cmp(&(omega[i] - b).abs())).unwrap();
            let shifted = if omega[i] >= j { j + 0.15 } else { j - 0.15 };
            i = omega.partition_point(|&w| w < shifted);
        }
        let w = omega[i];
        prop_assume!(w.abs() <= SPAN / 2.0);

        let fft = hilbert_fft(&SampledProfile::new(omega.clone(), values).unwrap()).unwrap();
        let (center, fwhm, amp) = match c {
            Case::Gaussian { center, fwhm, amp } | Case::Truncated { center, fwhm, amp, .. } => (center, fwhm, amp),
        };
        let pv = hilbert_pv(gaussian(center, fwhm, amp), w, support, None).unwrap();
        prop_assert!((fft.values()[i] - pv).abs() < 1e-6, "case {c:?} at {w}: fft {} vs pv {pv}", fft.values()[i]);
    }
}
