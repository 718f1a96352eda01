//! Full-size martingale checks not already covered by the acceptance run,
//! which handles the two Stable(1/2) cases.

use incproc::generator::{martingale_test, ExponentialFn};
use incproc::levy::{JumpLaw, LevyModel};
use incproc::MonotoneFn;

#[test]
fn gamma_with_one_minus_exp() {
    let g = LevyModel::gamma(1.0, 1.0).unwrap();
    let r = martingale_test(&g, &ExponentialFn::one_minus_exp(), 0.0, 1.0, 100_000, 1e-4, 12).unwrap();
    assert!(r.pass, "{}", r.to_text());
    // E e^{-S_1} = 1/2 for Gamma(1, 1)
    assert!((r.lhs - 0.5).abs() <= 3.0 * r.lhs_stderr + r.truncation_allowance, "{}", r.to_text());
}

#[test]
fn constant_function_balances_exactly() {
    let models = [
        LevyModel::stable(0.5).unwrap(),
        LevyModel::gamma(2.0, 1.0).unwrap(),
        LevyModel::compound_poisson(3.0, JumpLaw::Constant(0.5)).unwrap(),
    ];
    let f = MonotoneFn::constant(2.0, 5.0).unwrap();
    for m in models {
        let r = martingale_test(&m, &f, 0.3, 1.0, 1000, 1e-3, 4).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0), "{m}");
        assert!(r.pass);
    }
}
