use incproc::accessibility::is_left_accessible;
use incproc::generator::compensator_residual;
use incproc::levy::{simulate_path, JumpLaw, LevyModel};
use incproc::monotone::{compose, Jump, Knot, MonotoneFn, EXHAUSTED};
use incproc::{Enclosure, StaircaseSpec};
use proptest::prelude::*;

const HORIZON: f64 = 4.0;

/// Distinct sorted times in `(0, HORIZON]` on a grid of 1/1024.
fn times(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..=4096, 0..max).prop_map(|s| s.into_iter().map(|i| i as f64 / 1024.0).collect())
}

fn monotone() -> impl Strategy<Value = MonotoneFn> {
    (
        0.0..2.0f64,
        times(6),
        prop::collection::vec(0.0..3.0f64, 6),
        times(12),
        prop::collection::vec(0.01..2.0f64, 12),
    )
        .prop_map(|(origin, kt, slopes, jt, sizes)| {
            let knots = std::iter::once(0.0)
                .chain(kt)
                .zip(slopes)
                .map(|(time, slope)| Knot { time, slope })
                .collect();
            let jumps = jt.into_iter().zip(sizes).map(|(time, size)| Jump { time, size }).collect();
            MonotoneFn::new(origin, knots, jumps, HORIZON).unwrap()
        })
}

fn step() -> impl Strategy<Value = MonotoneFn> {
    (times(20), prop::collection::vec(0.01..2.0f64, 20)).prop_map(|(t, s)| {
        let atoms: Vec<(f64, f64)> = t.into_iter().zip(s).collect();
        MonotoneFn::step(&atoms, HORIZON).unwrap()
    })
}

proptest! {
    #[test]
    fn values_are_monotone_with_left_limits(a in monotone(), s in 0.0..HORIZON, d in 0.0..1.0f64) {
        let u = (s + d).min(HORIZON);
        prop_assert!(a.value(s) <= a.value(u));
        prop_assert!(a.left_value(s) <= a.value(s));
        prop_assert!((a.value(s) - a.left_value(s) - a.jump_at(s)).abs() <= 1e-12);
    }

    #[test]
    fn inverses_are_ordered(a in monotone(), x in 0.0..20.0f64, dx in 0.0..2.0f64) {
        let l = a.last_passage(x);
        let g = a.left_inverse(x);
        prop_assert!(l <= g);
        prop_assert!(g <= a.left_inverse(x + dx));
        if l != EXHAUSTED {
            prop_assert!(a.value(l) >= x - 1e-12);
            if l > 0.0 {
                prop_assert!(a.left_value(l) <= x + 1e-12);
            }
        }
    }

    #[test]
    fn text_form_round_trips(a in monotone()) {
        prop_assert_eq!(MonotoneFn::from_text(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn composition_is_monotone(f in monotone(), a in monotone(), s in 0.0..HORIZON, d in 0.0..1.0f64) {
        let f = f.extended(a.value(HORIZON).max(HORIZON));
        let fa = compose(&f, &a).unwrap();
        let u = (s + d).min(HORIZON);
        prop_assert!(fa.value(s) <= fa.value(u) + 1e-12);
        prop_assert!((fa.value(s) - f.value(a.value(s))).abs() <= 1e-9 * (1.0 + fa.value(s)));
    }

    #[test]
    fn steps_are_never_exactly_accessible(a in step(), x in 0.001..30.0f64) {
        prop_assert!(!is_left_accessible(&a, x, 0.0).unwrap());
    }

    #[test]
    fn accessibility_grows_with_tolerance(a in monotone(), x in 0.001..20.0f64, t1 in 0.0..1.0f64, dt in 0.0..1.0f64) {
        if is_left_accessible(&a, x, t1).unwrap() {
            prop_assert!(is_left_accessible(&a, x, t1 + dt).unwrap());
        }
    }

    #[test]
    fn enclosure_arithmetic_contains_point_results(x in -1e3..1e3f64, y in -1e3..1e3f64, w in 0.0..1.0f64) {
        let a = Enclosure::new(x - w, x + w);
        let b = Enclosure::point(y);
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((-a).contains(-x));
        prop_assert!(Enclosure::ratio(x, 3.0).contains(x / 3.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn staircase_enclosures_nest(t in 0.0..2.0f64, n in 1usize..14, extra in 1usize..8) {
        let spec = StaircaseSpec::default();
        let coarse = spec.certified_eval(t, n).unwrap();
        let fine = spec.certified_eval(t, n + extra).unwrap();
        prop_assert!(coarse.contains_interval(&fine), "{coarse} vs {fine}");
    }

    #[test]
    fn staircase_inverse_brackets_the_crossing(x in 0.001..0.999f64) {
        let spec = StaircaseSpec::default();
        let e = match spec.certified_inverse(x, 1e-6) {
            Ok(e) => e,
            Err(incproc::Error::Resource { best: Some(e), .. }) => e,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(e.lo <= e.hi);
        // a reaches x by the upper end and stays at most x before the lower end
        prop_assert!(spec.certified_eval(e.hi, 40).unwrap().hi >= x);
        if e.lo > 0.0 {
            prop_assert!(spec.certified_eval(e.lo.next_down(), 40).unwrap().lo <= x);
        }
    }

    #[test]
    fn finer_truncation_dominates(seed in any::<u64>(), stream in 0u64..1000, alpha in 0.2..0.9f64) {
        let s = LevyModel::stable(alpha).unwrap();
        let fine = simulate_path(&s, 1.0, 1e-4, seed, stream).unwrap();
        let coarse = simulate_path(&s, 1.0, 1e-2, seed, stream).unwrap();
        // coarse jumps are exactly the fine jumps above the coarse cut-off
        let kept: Vec<(f64, f64)> = fine.times.iter().zip(&fine.sizes)
            .filter(|(_, &y)| y > 1e-2).map(|(&t, &y)| (t, y)).collect();
        let coarse_jumps: Vec<(f64, f64)> = coarse.times.iter().copied().zip(coarse.sizes.iter().copied()).collect();
        prop_assert_eq!(kept, coarse_jumps);
        prop_assert!(fine.terminal_value() >= coarse.terminal_value());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compensator_residual_is_rounding(seed in any::<u64>(), f in step(), x in 0.0..2.0f64, gamma in any::<bool>()) {
        let model = if gamma {
            LevyModel::gamma(1.0, 1.0).unwrap()
        } else {
            LevyModel::compound_poisson(20.0, JumpLaw::Exponential { rate: 2.0 }).unwrap()
        };
        let eps = if gamma { 1e-6 } else { 0.0 };
        let p = simulate_path(&model, 1.0, eps, seed, 0).unwrap();
        prop_assert!(compensator_residual(&f, x, &p).unwrap().abs() <= 1e-11);
    }
}
