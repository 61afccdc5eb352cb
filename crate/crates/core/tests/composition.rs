mod common;

use coda_atlas::composition::ClrVector;
use coda_atlas::{
    aitchison_distance, clr, log_ratio_series, pairwise_log_ratio, replace_zeros, RatioDefinition, ZeroStrategy,
};
use ndarray::Array2;
use proptest::prelude::*;

use common::table;

fn row(d: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    d.prop_flat_map(|d| prop::collection::vec((1e-3f64).ln()..(1e6f64).ln(), d)).prop_map(|logs| logs.into_iter().map(f64::exp).collect())
}

fn rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((1e-3f64).ln()..(1e6f64).ln(), d), n)
        .prop_map(|m| m.into_iter().map(|r| r.into_iter().map(f64::exp).collect()).collect())
}

proptest! {
    #[test]
    fn clr_sums_to_zero_and_ignores_scale(x in row(2..13), lambda in (1e-6f64).ln()..(1e6f64).ln()) {
        let z = clr(&x);
        prop_assert!(z.0.sum().abs() <= 1e-10);
        let scaled: Vec<f64> = x.iter().map(|v| v * lambda.exp()).collect();
        let diff = (&clr(&scaled).0 - &z.0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff <= 1e-10, "{diff:e}");
    }

    #[test]
    fn clr_differences_recover_pairwise_ratios(x in row(2..13)) {
        let ClrVector(z) = clr(&x);
        for i in 0..x.len() {
            for j in 0..x.len() {
                let direct = pairwise_log_ratio(&x, j, i).unwrap_or(0.0);
                if i != j {
                    prop_assert!((z[j] - z[i] - direct).abs() <= 1e-12);
                    prop_assert_eq!(direct, -pairwise_log_ratio(&x, i, j).unwrap());
                }
            }
        }
    }

    #[test]
    fn swapped_series_is_negated(m in rows(6, 4)) {
        let t = table(Array2::from_shape_fn((6, 4), |(r, c)| m[r][c]));
        let fwd = log_ratio_series(&t, &RatioDefinition::new("a", "p0", "p2", "")).unwrap();
        let back = log_ratio_series(&t, &RatioDefinition::new("b", "p2", "p0", "")).unwrap();
        for (a, b) in fwd.iter().zip(&back) {
            prop_assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn aitchison_distance_is_a_metric(m in rows(3, 5)) {
        let (a, b, c) = (&m[0], &m[1], &m[2]);
        let ab = aitchison_distance(a, b).unwrap();
        prop_assert_eq!(ab, aitchison_distance(b, a).unwrap());
        prop_assert!(aitchison_distance(a, a).unwrap().abs() <= 1e-9);
        let bc = aitchison_distance(b, c).unwrap();
        let ac = aitchison_distance(a, c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn zero_replacement_keeps_row_sums(
        m in rows(5, 6),
        zeros in prop::collection::vec(any::<bool>(), 30),
        delta in 0.05f64..=1.0,
    ) {
        let mut values = Array2::from_shape_fn((5, 6), |(r, c)| m[r][c]);
        for (idx, z) in zeros.iter().enumerate() {
            // leave at least one positive part per row
            if *z && idx % 6 != 0 {
                values[[idx / 6, idx % 6]] = 0.0;
            }
        }
        let feasible = values.rows().into_iter().all(|r| {
            let z = r.iter().filter(|v| **v == 0.0).count() as f64;
            let min = r.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            z * delta * min < r.sum()
        });
        let out = match replace_zeros(&values, ZeroStrategy::Multiplicative(delta)) {
            Ok(out) => out,
            Err(e) => {
                prop_assert!(!feasible, "{e}");
                prop_assert_eq!(e.kind(), "ReplacementExceedsRow");
                return Ok(());
            }
        };
        prop_assert!(out.iter().all(|v| *v > 0.0));
        for (before, after) in values.rows().into_iter().zip(out.rows()) {
            let (s0, s1) = (before.sum(), after.sum());
            prop_assert!((s0 - s1).abs() <= 1e-9 * s0.max(1.0), "{s0} vs {s1}");
        }
    }
}

#[test]
fn aitchison_triangle_on_seeded_triples() {
    let mut rng = common::rng(11);
    for _ in 0..1000 {
        let m = common::log_uniform(&mut rng, 3, 6, 1e-3, 1e6);
        let r = |i: usize| m.row(i).to_vec();
        let d = |a: usize, b: usize| aitchison_distance(&r(a), &r(b)).unwrap();
        assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
        assert_eq!(d(0, 1), d(1, 0));
        assert!(d(1, 1) <= 1e-9);
    }
}
