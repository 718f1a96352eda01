//! Special functions needed by the Lévy models.

use statrs::function::gamma::gamma as gamma_fn;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Euler's gamma function.
pub fn gamma(x: f64) -> f64 {
    gamma_fn(x)
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        // power series
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Solves `E1(z) = target` for `z > 0` to relative tolerance `rel_tol`.
pub fn inverse_exp_integral_e1(target: f64, rel_tol: f64) -> f64 {
    debug_assert!(target > 0.0);
    // bracket: E1 is decreasing from +inf to 0
    let mut lo = 1e-300_f64;
    let mut hi = 1.0_f64;
    while exp_integral_e1(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    let mut z = if target > 1.0 {
        // E1(z) ≈ -γ - ln z for small z
        (-target - EULER_GAMMA).exp().clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let f = exp_integral_e1(z) - target;
        if f > 0.0 {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        // Newton step with derivative -e^{-z}/z
        let deriv = -(-z).exp() / z;
        let mut next = z - f / deriv;
        if !(next > lo && next < hi) {
            next = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        }
        if (next - z).abs() <= rel_tol * z {
            return next;
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_values() {
        // values from Abramowitz & Stegun table 5.1
        let cases = [
            (0.1, 1.822_923_958_419_39),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_3),
            (2.0, 0.048_900_510_708_061_1),
            (5.0, 0.001_148_295_591_275_3),
        ];
        for (x, want) in cases {
            let got = exp_integral_e1(x);
            assert!(((got - want) / want).abs() < 1e-13, "E1({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn e1_continuity_at_switch() {
        let below = exp_integral_e1(1.0);
        let above = exp_integral_e1(1.0 + 1e-12);
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn inverse_round_trips() {
        for z in [1e-9, 1e-4, 0.3, 1.0, 4.0, 20.0] {
            let back = inverse_exp_integral_e1(exp_integral_e1(z), 1e-13);
            assert!(((back - z) / z).abs() < 1e-11, "z={z} back={back}");
        }
    }

    #[test]
    fn gamma_half_is_sqrt_pi() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }
}
