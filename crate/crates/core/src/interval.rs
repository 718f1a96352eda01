//! Closed real intervals with outward rounding.
//!
//! Every arithmetic result is widened by one ulp on each side with
//! `next_down` / `next_up`, so the exact real result of the operation on any
//! pair of points from the operands lies inside the returned interval.

use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A certified enclosure `[lo, hi]` of a real quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    /// Panics if `lo > hi` or either end is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid enclosure [{lo}, {hi}]");
        Enclosure { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    /// Smallest floating interval containing the real number `num / den`.
    pub fn ratio(num: f64, den: f64) -> Self {
        let q = num / den;
        Enclosure {
            lo: q.next_down(),
            hi: q.next_up(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widen both ends by `r` (rounded outward).
    pub fn widen(&self, r: f64) -> Enclosure {
        Enclosure {
            lo: (self.lo - r).next_down(),
            hi: (self.hi + r).next_up(),
        }
    }
}

impl Add for Enclosure {
    type Output = Enclosure;

    fn add(self, rhs: Enclosure) -> Enclosure {
        Enclosure {
            lo: (self.lo + rhs.lo).next_down(),
            hi: (self.hi + rhs.hi).next_up(),
        }
    }
}

impl Sub for Enclosure {
    type Output = Enclosure;

    fn sub(self, rhs: Enclosure) -> Enclosure {
        Enclosure {
            lo: (self.lo - rhs.hi).next_down(),
            hi: (self.hi - rhs.lo).next_up(),
        }
    }
}

impl Neg for Enclosure {
    type Output = Enclosure;

    fn neg(self) -> Enclosure {
        Enclosure {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl std::iter::Sum for Enclosure {
    fn sum<I: Iterator<Item = Enclosure>>(iter: I) -> Enclosure {
        iter.fold(Enclosure::point(0.0), |acc, x| acc + x)
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e}, {:.16e}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_is_outward() {
        let a = Enclosure::point(0.1);
        let b = Enclosure::point(0.2);
        let s = a + b;
        assert!(s.lo < 0.1 + 0.2 && 0.1 + 0.2 < s.hi);
        // 0.3 as a real number is within one ulp of both endpoints' midpoint
        assert!(s.contains(0.3) || (s.lo - 0.3).abs() < 1e-16);
    }

    #[test]
    fn subtraction_swaps_ends() {
        let a = Enclosure::new(1.0, 2.0);
        let b = Enclosure::new(0.25, 0.5);
        let d = a - b;
        assert!(d.lo <= 0.5 && d.hi >= 1.75);
        assert!(d.width() < 1.25 + 1e-15);
    }

    #[test]
    fn ratio_brackets_quotient() {
        let e = Enclosure::ratio(1.0, 3.0);
        assert!(e.lo < 1.0 / 3.0 && 1.0 / 3.0 < e.hi);
    }
}
