//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;

    fn add(self, rhs: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Quadrature {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let diff = ((kronrod - gauss) * half).abs();
    // the raw Gauss/Kronrod difference is a conservative error estimate
    let error = diff;
    Quadrature { value, error: error.max(4.0 * f64::EPSILON * value.abs()) }
}

struct Piece {
    a: f64,
    b: f64,
    q: Quadrature,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.q.error == other.q.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.error.total_cmp(&other.q.error)
    }
}

/// Integrates `f` over `[a, b]` until the estimated absolute error is below
/// `max(abs_tol, rel_tol * |value|)`, or is at the rounding floor.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    const MAX_PIECES: usize = 4000;
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let mut heap = BinaryHeap::new();
    let q = gk15(&f, a, b);
    let (mut value, mut error) = (q.value, q.error);
    heap.push(Piece { a, b, q });
    // never ask for more than rounding allows
    while error > abs_tol.max(rel_tol * value.abs()).max(1e3 * f64::EPSILON * value.abs()) {
        if heap.len() >= MAX_PIECES {
            return Err(Error::Resource {
                message: format!("quadrature on [{a}, {b}] did not converge: estimate {value} ± {error}"),
                best: None,
            });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value += left.value + right.value - worst.q.value;
        error += left.error + right.error - worst.q.error;
        heap.push(Piece { a: worst.a, b: mid, q: left });
        heap.push(Piece { a: mid, b: worst.b, q: right });
    }
    // re-sum to shed accumulated cancellation from the running updates
    let value = heap.iter().map(|p| p.q.value).sum();
    let error = heap.iter().map(|p| p.q.error).sum();
    Ok(Quadrature { value, error })
}

/// Integrates over consecutive pieces `[points[i], points[i+1]]`, splitting
/// the tolerance evenly. Use for integrands with known kinks or jumps.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    let n = points.len().saturating_sub(1).max(1) as f64;
    let mut total = Quadrature { value: 0.0, error: 0.0 };
    for w in points.windows(2) {
        if w[1] > w[0] {
            total = total + integrate(&f, w[0], w[1], abs_tol / n, rel_tol)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((q.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential() {
        let q = integrate(|x: f64| (-x).exp(), 0.0, 10.0, 1e-13, 0.0).unwrap();
        assert!((q.value - (1.0 - (-10.0f64).exp())).abs() < 1e-12);
        assert!(q.error <= 1e-13);
    }

    #[test]
    fn integrable_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-9, 0.0).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn pieces_handle_jump() {
        let q = integrate_pieces(|x: f64| if x < 0.3 { 0.0 } else { 1.0 }, &[0.0, 0.3, 1.0], 1e-13, 0.0).unwrap();
        assert!((q.value - 0.7).abs() < 1e-14);
    }
}
