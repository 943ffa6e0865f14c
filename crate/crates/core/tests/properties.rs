use proptest::prelude::*;
use tailproc::clusterlab::{extract_blocks, BlockingScheme};
use tailproc::estimate::{run_lanes, Moments};
use tailproc::identities::q_weight;
use tailproc::maxstable::infargmax_weight;
use tailproc::seqspace::{canonical_anchor, tilde_distance};
use tailproc::{ArgmaxResult, FiniteSeq, FunctionalSpec, Sampling};

fn seq() -> impl Strategy<Value = FiniteSeq> {
    (-5i64..5, prop::collection::vec(-4.0f64..4.0, 0..7)).prop_map(|(s, v)| FiniteSeq::new(s, v))
}

fn nonzero_seq() -> impl Strategy<Value = FiniteSeq> {
    seq().prop_filter("nonzero", |x| x.supnorm() > 1e-6)
}

fn homogeneous() -> Vec<FunctionalSpec> {
    vec![
        FunctionalSpec::Sup,
        FunctionalSpec::SupPow(1.7),
        FunctionalSpec::SumAbsPow { p: 1.0, power: 1.5 },
        FunctionalSpec::SumAbsPow { p: 2.0, power: 2.0 },
        FunctionalSpec::PosPartSumPow(0.8),
        FunctionalSpec::RunningMaxSumPow(1.2),
        FunctionalSpec::SignedPowSum(1.0),
        FunctionalSpec::CoordAbsPow { j: 1, p: 2.0 },
    ]
}

fn shift_invariant() -> Vec<FunctionalSpec> {
    vec![
        FunctionalSpec::One,
        FunctionalSpec::Sup,
        FunctionalSpec::SumAbsPow { p: 1.0, power: 1.0 },
        FunctionalSpec::PosPartSumPow(1.0),
        FunctionalSpec::RunningMaxSumPow(1.0),
        FunctionalSpec::exceeds_sup(1.0),
        FunctionalSpec::CountExceed(0.5),
        FunctionalSpec::AtLeastExceed { level: 0.5, count: 2 },
        FunctionalSpec::exceeds_at(1, 0.3).anchored(),
        FunctionalSpec::CountExceed(0.2).normalized(),
    ]
}

proptest! {
    #[test]
    fn shifts_compose(x in seq(), a in -6i64..6, b in -6i64..6) {
        prop_assert_eq!(x.shift(a).shift(b), x.shift(a + b));
        prop_assert_eq!(x.shift(a).supnorm(), x.supnorm());
    }

    #[test]
    fn infargmax_is_shift_equivariant(x in nonzero_seq(), k in -6i64..6) {
        let j = x.infargmax().index().unwrap();
        prop_assert_eq!(x.shift(k).infargmax(), ArgmaxResult::FiniteIndex(j + k));
        prop_assert_eq!(x.get(j).abs(), x.supnorm());
        prop_assert!(x.window(..j).supnorm() < x.supnorm());
    }

    #[test]
    fn tilde_distance_is_a_pseudometric(x in seq(), y in seq(), w in seq(), k in -6i64..6) {
        let d = tilde_distance(&x, &y);
        prop_assert!(d >= 0.0);
        prop_assert!((d - tilde_distance(&y, &x)).abs() < 1e-12);
        prop_assert!((d - tilde_distance(&x.shift(k), &y)).abs() < 1e-12);
        prop_assert_eq!(tilde_distance(&x, &x.shift(k)), 0.0);
        prop_assert!(d <= tilde_distance(&x, &w) + tilde_distance(&w, &y) + 1e-12);
        prop_assert!(d <= x.supnorm().max(y.supnorm()));
    }

    #[test]
    fn canonical_anchor_picks_the_class(x in nonzero_seq(), k in -6i64..6) {
        let a = canonical_anchor(&x).unwrap();
        prop_assert_eq!(a.infargmax(), ArgmaxResult::FiniteIndex(0));
        prop_assert_eq!(canonical_anchor(&x.shift(k)).unwrap(), a.clone());
        prop_assert_eq!(canonical_anchor(&a).unwrap(), a);
    }

    #[test]
    fn homogeneity_holds(x in seq(), t in 0.1f64..10.0) {
        for h in homogeneous() {
            let beta = h.homogeneity().unwrap();
            let lhs = h.eval(&x.scale(t));
            let rhs = t.powf(beta) * h.eval(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{}: {} vs {}", h, lhs, rhs);
        }
    }

    #[test]
    fn shift_invariance_holds(x in seq(), k in -6i64..6) {
        for h in shift_invariant() {
            prop_assert!(h.shift_invariant());
            prop_assert_eq!(h.eval(&x.shift(k)), h.eval(&x), "{}", h);
        }
    }

    #[test]
    fn support_floor_is_respected(x in seq()) {
        for h in shift_invariant() {
            if let Some(eps) = h.support_floor() {
                let small = x.scale(0.999 * eps / x.supnorm().max(1e-9));
                prop_assert_eq!(h.eval(&small), 0.0, "{}", h);
            }
        }
    }

    #[test]
    fn q_weight_is_a_probability(x in nonzero_seq(), alpha in 0.3f64..3.0) {
        let theta = x.div(x.get(0).abs().max(1e-9));
        let w = q_weight(&theta, alpha);
        prop_assert!((0.0..=1.0).contains(&w));
        prop_assert_eq!(q_weight(&theta.window(0..), alpha), 1.0);
    }

    #[test]
    fn infargmax_weight_of_a_spike(y0 in 0.1f64..5.0, y1 in 0.1f64..5.0, alpha in 0.5f64..2.5) {
        // Each level sees the spike once, and the spike is the unique maximiser.
        let w = infargmax_weight(&FiniteSeq::spike(0, 1.0), &[(0, y0), (1, y1)], alpha);
        let exact = y0.powf(-alpha) + y1.powf(-alpha);
        prop_assert!((w - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn moments_merge_matches_sequential(rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60), cut in 0usize..60) {
        let cut = cut.min(rows.len());
        let mut all = Moments::new(2);
        let (mut a, mut b) = (Moments::new(2), Moments::new(2));
        for (i, (x, y)) in rows.iter().enumerate() {
            all.push(&[*x, *y]);
            if i < cut { a.push(&[*x, *y]) } else { b.push(&[*x, *y]) }
        }
        a.merge(&b);
        prop_assert_eq!(a.count(), all.count());
        for i in 0..2 {
            prop_assert!((a.mean(i) - all.mean(i)).abs() < 1e-9);
            prop_assert!((a.variance(i) - all.variance(i)).abs() < 1e-7 * (1.0 + all.variance(i)));
        }
        prop_assert!((a.covariance(0, 1) - all.covariance(0, 1)).abs() < 1e-7 * (1.0 + all.covariance(0, 1).abs()));
    }

    #[test]
    fn blocks_are_anchored_and_exceed(values in prop::collection::vec(-20.0f64..20.0, 200..400), level in 0.5f64..2.0) {
        let scheme = BlockingScheme::new(values.len(), 4, 5.0, vec![level]).unwrap();
        for b in extract_blocks(&values, &scheme, level).unwrap() {
            prop_assert_eq!(b.values.infargmax(), ArgmaxResult::FiniteIndex(0));
            prop_assert!(b.values.supnorm() > level);
        }
    }
}

#[test]
fn lanes_are_reproducible() {
    let s = Sampling::new(10_000, 5).with_lanes(3);
    let draw = |s: &Sampling| {
        run_lanes(s, 1, |rng, out| {
            out[0] = rand::Rng::random::<f64>(rng);
            Ok(())
        })
        .unwrap()
    };
    let (a, b) = (draw(&s), draw(&s));
    assert_eq!(a.mean(0), b.mean(0));
    assert_eq!(a.count(), 10_000);
    assert_ne!(draw(&s.derive(1)).mean(0), a.mean(0));
}
