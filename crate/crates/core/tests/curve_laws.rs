//! Algebraic laws of the curve operations, checked against direct
//! evaluation of the defining infima and suprema. All generated values are
//! dyadic so sums and differences are exact.

use proptest::prelude::*;
use snc::curves::{self, inf_deficit, min_plus_conv, min_plus_deconv};
use snc::{Curve, Time};

const T_MAX: Time = 48;

/// Nondecreasing samples in steps of 1/8, with a dyadic tail slope.
fn grid_curve(start_at_zero: bool) -> impl Strategy<Value = Curve> {
    (prop::collection::vec(0u32..=16, 1..12), 0u32..=32, 0u32..=16).prop_map(move |(steps, first, slope)| {
        let mut acc = if start_at_zero { 0.0 } else { f64::from(first) / 8.0 };
        let mut samples = vec![acc];
        for s in steps {
            acc += f64::from(s) / 8.0;
            samples.push(acc);
        }
        Curve::grid(samples, f64::from(slope) / 4.0).unwrap()
    })
}

fn closed_curve() -> impl Strategy<Value = Curve> {
    prop_oneof![
        (0u32..=16).prop_map(|r| Curve::rate(f64::from(r) / 4.0)),
        (0u32..=16, 0u32..=32).prop_map(|(r, b)| Curve::affine(f64::from(r) / 4.0, f64::from(b) / 8.0)),
        (0u32..=16, 0i64..=8).prop_map(|(r, t)| Curve::rate_latency(f64::from(r) / 4.0, t)),
    ]
}

fn any_curve() -> impl Strategy<Value = Curve> {
    prop_oneof![grid_curve(false), grid_curve(true), closed_curve()]
}

fn brute_conv(f: &Curve, g: &Curve, t: Time) -> f64 {
    (0..=t).map(|s| f.eval(s) + g.eval(t - s)).fold(f64::INFINITY, f64::min)
}

fn brute_deconv(f: &Curve, g: &Curve, t: Time, y_max: Time) -> f64 {
    (0..=y_max).map(|u| f.eval(t + u) - g.eval(u)).fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #[test]
    fn conv_matches_definition(f in any_curve(), g in any_curve()) {
        let h = min_plus_conv(&f, &g);
        for t in 0..=T_MAX {
            prop_assert_eq!(h.eval(t), brute_conv(&f, &g, t), "t = {}", t);
        }
    }

    #[test]
    fn conv_commutes_and_associates(f in any_curve(), g in any_curve(), h in any_curve()) {
        let fg = min_plus_conv(&f, &g);
        let gf = min_plus_conv(&g, &f);
        let left = min_plus_conv(&fg, &h);
        let right = min_plus_conv(&f, &min_plus_conv(&g, &h));
        for t in 0..=T_MAX {
            prop_assert_eq!(fg.eval(t), gf.eval(t));
            prop_assert_eq!(left.eval(t), right.eval(t));
        }
    }

    #[test]
    fn conv_below_min_when_both_vanish_at_zero(f in grid_curve(true), g in grid_curve(true)) {
        let h = min_plus_conv(&f, &g);
        for t in 0..=T_MAX {
            prop_assert!(h.eval(t) <= f.eval(t).min(g.eval(t)));
        }
    }

    #[test]
    fn conv_distributes_over_min(f in any_curve(), g in any_curve(), h in any_curve()) {
        let left = min_plus_conv(&curves::pointwise_min(&f, &g), &h);
        let right = curves::pointwise_min(&min_plus_conv(&f, &h), &min_plus_conv(&g, &h));
        for t in 0..=T_MAX {
            prop_assert_eq!(left.eval(t), right.eval(t));
        }
    }

    #[test]
    fn deconv_matches_definition(f in any_curve(), g in any_curve()) {
        let y_max = 64;
        match min_plus_deconv(&f, &g, y_max) {
            Ok(h) => {
                for t in 0..=T_MAX {
                    prop_assert_eq!(h.eval(t), brute_deconv(&f, &g, t, y_max), "t = {}", t);
                }
            }
            Err(e) => {
                let diverges = f.long_run_slope() > g.long_run_slope();
                let negative = (0..=T_MAX).any(|t| brute_deconv(&f, &g, t, y_max) < 0.0);
                prop_assert!(diverges || negative, "unexpected {:?}", e);
            }
        }
    }

    #[test]
    fn deconv_then_conv_dominates(f in any_curve(), g in grid_curve(true)) {
        if let Ok(h) = min_plus_deconv(&f, &g, 64) {
            let back = min_plus_conv(&h, &g);
            for t in 0..=T_MAX {
                prop_assert!(back.eval(t) >= f.eval(t));
            }
        }
    }

    #[test]
    fn lattice_and_sum_are_pointwise(f in any_curve(), g in any_curve()) {
        let lo = curves::pointwise_min(&f, &g);
        let hi = curves::pointwise_max(&f, &g);
        let s = curves::sum(&f, &g);
        for t in 0..=T_MAX {
            prop_assert_eq!(lo.eval(t), f.eval(t).min(g.eval(t)));
            prop_assert_eq!(hi.eval(t), f.eval(t).max(g.eval(t)));
            prop_assert_eq!(s.eval(t), f.eval(t) + g.eval(t));
        }
    }

    #[test]
    fn deficit_matches_scan(beta in any_curve(), alpha in any_curve(), x in 0i64..6) {
        let s_max = 400;
        let got = inf_deficit(&beta, &alpha, x, s_max).unwrap();
        if beta.long_run_slope() < alpha.long_run_slope() {
            prop_assert_eq!(got, f64::NEG_INFINITY);
        } else {
            let want = (0..=s_max)
                .map(|s| beta.eval(s) - alpha.eval(s - x))
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(got, want);
        }
    }
}
