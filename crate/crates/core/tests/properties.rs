use proptest::prelude::*;

use tentlimit::density::reference_density;
use tentlimit::fiber::{alpha_cylinder, PointCylinder};
use tentlimit::thread::{critical_preimages_in, dhat, IntervalThread};
use tentlimit::{Branch, Interval, TentParams};

fn slope() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(1.618_033_988_749_895), Just(1.7), Just(1.9), Just(2.0), 1.45f64..2.0]
}

fn interval() -> impl Strategy<Value = Interval> {
    (0.0f64..0.95, 0.01f64..0.5).prop_map(|(lo, len)| Interval { lo, hi: (lo + len).min(1.0) })
}

/// Right pullbacks always exist, so an all-`R` tail is always admissible.
fn right_tail(n: usize) -> Vec<Branch> {
    vec![Branch::Right; n]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_scales_rho(s in slope(), j in interval(), m in 0usize..5, tail in 0usize..5) {
        let p = TentParams::new(s).unwrap();
        let arc = IntervalThread::from_level(&p, m, j, &right_tail(tail)).unwrap();
        let rho = arc.rho(&p, m).unwrap();
        let shifted = arc.shift_forward(&p).rho(&p, m + 1).unwrap();
        prop_assert!((shifted - s * rho).abs() <= 1e-11 * (1.0 + shifted));
    }

    #[test]
    fn pieces_count_critical_preimages(s in slope(), j in interval(), m in 0usize..7) {
        let p = TentParams::new(s).unwrap();
        let arc = IntervalThread::from_level(&p, m, j, &[]).unwrap();
        let dec = arc.flat_decompose(&p, m).unwrap();
        prop_assert_eq!(dec.pieces.len(), 1 + critical_preimages_in(&p, &j, m).len());
        prop_assert_eq!(dec.nodes.len() + 1, dec.pieces.len());
        let total: f64 = dec.pieces.iter().map(|piece| piece.level(m).len()).sum();
        prop_assert!((total - j.len()).abs() < 1e-12);
    }

    #[test]
    fn flat_pairs_have_proportional_metrics(s in slope(), j in interval(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let p = TentParams::new(s).unwrap();
        let arc = IntervalThread::from_level(&p, 0, j, &right_tail(30)).unwrap();
        let (x, y) = (j.lo + u * j.len(), j.lo + v * j.len());
        let d = dhat(&arc.thread_through(&p, 0, x).unwrap(), &arc.thread_through(&p, 0, y).unwrap()).unwrap();
        let target = 2.0 * s / (2.0 * s - 1.0) * (x - y).abs();
        prop_assert!(d.lo - 1e-14 <= target && target <= d.hi + 1e-14);
    }

    #[test]
    fn fiber_mass_splits_over_children(s in slope(), x in 0.01f64..0.99) {
        let p = TentParams::new(s).unwrap();
        let phi = reference_density(&p).unwrap();
        prop_assume!(phi.breakpoint_distance(x) > 1e-6);
        let root = PointCylinder::new(&p, vec![x]).unwrap();
        let mut level = vec![root.clone()];
        for _ in 0..3 {
            level = level.iter().flat_map(|cyl| cyl.children(&p)).collect();
        }
        let parent = alpha_cylinder(&p, &phi, &root).unwrap();
        let children: f64 = level.iter().map(|cyl| alpha_cylinder(&p, &phi, cyl).unwrap()).sum();
        prop_assert!((parent - children).abs() <= 1e-6 * parent.max(1.0));
    }
}
