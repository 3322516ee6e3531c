//! The bounding functions form a dioid under pointwise minimum and (min,+)
//! convolution. Every law is checked exactly at the grid points.

use proptest::prelude::*;
use snc::tailbounds::{minplus_conv_bar, pointwise_max_bar, pointwise_min_bar};
use snc::TailBound;

const STEP: f64 = 0.25;

fn xs(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * STEP).collect()
}

/// Nonincreasing values in steps of 1/16 on a shared grid of `n` points.
fn grid_dec(n: usize) -> impl Strategy<Value = TailBound> {
    prop::collection::vec(0u32..=64, n).prop_map(move |mut raw| {
        raw.sort_unstable_by(|a, b| b.cmp(a));
        TailBound::grid(xs(n), raw.into_iter().map(|k| f64::from(k) / 16.0).collect()).unwrap()
    })
}

fn triple() -> impl Strategy<Value = (TailBound, TailBound, TailBound)> {
    (2usize..24).prop_flat_map(|n| (grid_dec(n), grid_dec(n), grid_dec(n)))
}

fn points(f: &TailBound) -> Vec<f64> {
    match f {
        TailBound::Grid(g) => g.x().to_vec(),
        _ => unreachable!(),
    }
}

/// `min_k [f(x_k) + g(x_n − x_k)]`, the definition restricted to the grid.
fn oracle_conv(f: &TailBound, g: &TailBound, n: usize) -> f64 {
    (0..=n).map(|k| f.eval(k as f64 * STEP) + g.eval((n - k) as f64 * STEP)).fold(f64::INFINITY, f64::min)
}

fn same_on(xs: &[f64], f: &TailBound, g: &TailBound) -> Result<(), TestCaseError> {
    for &x in xs {
        prop_assert_eq!(f.eval(x), g.eval(x), "x = {}", x);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn closure((f, g, _h) in triple()) {
        for r in [pointwise_min_bar(&f, &g), minplus_conv_bar(&f, &g)] {
            let TailBound::Grid(grid) = &r else { panic!("expected a grid result") };
            prop_assert!(TailBound::grid(grid.x().to_vec(), grid.values().to_vec()).is_ok());
        }
    }

    #[test]
    fn conv_matches_oracle((f, g, _h) in triple()) {
        let fg = minplus_conv_bar(&f, &g);
        for (n, &x) in points(&f).iter().enumerate() {
            prop_assert_eq!(fg.eval(x), oracle_conv(&f, &g, n));
        }
    }

    #[test]
    fn associativity_and_commutativity((f, g, h) in triple()) {
        let xs = points(&f);
        same_on(&xs, &minplus_conv_bar(&minplus_conv_bar(&f, &g), &h), &minplus_conv_bar(&f, &minplus_conv_bar(&g, &h)))?;
        same_on(&xs, &pointwise_min_bar(&pointwise_min_bar(&f, &g), &h), &pointwise_min_bar(&f, &pointwise_min_bar(&g, &h)))?;
        same_on(&xs, &minplus_conv_bar(&f, &g), &minplus_conv_bar(&g, &f))?;
        same_on(&xs, &pointwise_min_bar(&f, &g), &pointwise_min_bar(&g, &f))?;
    }

    #[test]
    fn distributivity((f, g, h) in triple()) {
        let left = minplus_conv_bar(&pointwise_min_bar(&f, &g), &h);
        let right = pointwise_min_bar(&minplus_conv_bar(&f, &h), &minplus_conv_bar(&g, &h));
        same_on(&points(&f), &left, &right)?;
    }

    #[test]
    fn neutral_and_absorbing_elements((f, _g, _h) in triple()) {
        let xs = points(&f);
        let zero_grid = TailBound::grid(xs.clone(), vec![0.0; xs.len()]).unwrap();
        let inf_grid = TailBound::grid(xs.clone(), vec![f64::INFINITY; xs.len()]).unwrap();
        for e in [TailBound::Deterministic, zero_grid] {
            same_on(&xs, &minplus_conv_bar(&f, &e), &f)?;
            same_on(&xs, &minplus_conv_bar(&e, &f), &f)?;
        }
        for eps in [TailBound::Vacuous, inf_grid] {
            same_on(&xs, &pointwise_min_bar(&f, &eps), &f)?;
            same_on(&xs, &minplus_conv_bar(&f, &eps), &eps)?;
            same_on(&xs, &minplus_conv_bar(&eps, &f), &eps)?;
        }
        same_on(&xs, &pointwise_min_bar(&f, &f), &f)?;
    }

    #[test]
    fn comparison_chain((f, g, _h) in triple()) {
        let lo = pointwise_min_bar(&f, &g);
        let hi = pointwise_max_bar(&f, &g);
        let conv = minplus_conv_bar(&f, &g);
        for x in points(&f) {
            prop_assert!(lo.eval(x) <= hi.eval(x));
            prop_assert!(hi.eval(x) <= conv.eval(x));
        }
    }
}
