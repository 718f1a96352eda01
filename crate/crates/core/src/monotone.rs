//! Right-continuous non-decreasing functions on `[0, horizon]` and their
//! Stieltjes calculus.
//!
//! A [`MonotoneFn`] is a piecewise-linear continuous non-decreasing part plus
//! a finite list of positive jumps. Every identity of the change of variables
//! formula is exact on this class, which is closed under composition.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Absolute tolerance for identities that are exact in real arithmetic.
pub const TOL_ABS: f64 = 1e-12;

/// Returned by [`MonotoneFn::left_inverse`] and [`MonotoneFn::last_passage`]
/// when the level is never exceeded on the horizon.
pub const EXHAUSTED: f64 = f64::INFINITY;

/// Slope of the continuous part on `[time, next knot time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub time: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Value, left limit and jump of a monotone function at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub left_value: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFn {
    origin: f64,
    knots: Vec<Knot>,
    knot_cum: Vec<f64>,
    jumps: Vec<Jump>,
    jump_cum: Vec<f64>,
    horizon: f64,
    breakpoints: Vec<f64>,
}

impl MonotoneFn {
    /// Builds a function from its origin value `f(0)`, the knots of its
    /// continuous part and its jumps. Slopes before the first knot are zero.
    pub fn new(origin: f64, knots: Vec<Knot>, jumps: Vec<Jump>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive and finite, got {horizon}")));
        }
        if !(origin >= 0.0 && origin.is_finite()) {
            return Err(Error::domain(format!("origin value must be finite and >= 0, got {origin}")));
        }
        for (i, k) in knots.iter().enumerate() {
            if !(k.time >= 0.0 && k.time <= horizon) {
                return Err(Error::domain(format!("knot time {} outside [0, {horizon}]", k.time)));
            }
            if !(k.slope >= 0.0 && k.slope.is_finite()) {
                return Err(Error::domain(format!("slope must be finite and >= 0, got {}", k.slope)));
            }
            if i > 0 && k.time <= knots[i - 1].time {
                return Err(Error::domain("knot times must be strictly increasing"));
            }
        }
        for (i, j) in jumps.iter().enumerate() {
            if !(j.time > 0.0 && j.time <= horizon) {
                return Err(Error::domain(format!("jump time {} outside (0, {horizon}]", j.time)));
            }
            if !(j.size > 0.0 && j.size.is_finite()) {
                return Err(Error::domain(format!("jump size must be finite and > 0, got {}", j.size)));
            }
            if i > 0 && j.time <= jumps[i - 1].time {
                return Err(Error::domain("jump times must be strictly increasing"));
            }
        }

        let mut knot_cum = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        for (i, k) in knots.iter().enumerate() {
            if i > 0 {
                let prev = knots[i - 1];
                acc += prev.slope * (k.time - prev.time);
            }
            knot_cum.push(acc);
        }
        let mut jump_cum = Vec::with_capacity(jumps.len());
        let mut acc = 0.0;
        for j in &jumps {
            acc += j.size;
            jump_cum.push(acc);
        }

        let jump_at_horizon = jumps.last().is_some_and(|j| j.time == horizon);
        let mut breakpoints: Vec<f64> = std::iter::once(0.0)
            .chain(knots.iter().map(|k| k.time))
            .chain(jumps.iter().map(|j| j.time))
            .filter(|&t| t < horizon || (t == horizon && jump_at_horizon))
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        Ok(MonotoneFn {
            origin,
            knots,
            knot_cum,
            jumps,
            jump_cum,
            horizon,
            breakpoints,
        })
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::new(0.0, Vec::new(), Vec::new(), horizon)
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(value, Vec::new(), Vec::new(), horizon)
    }

    pub fn identity(horizon: f64) -> Result<Self> {
        Self::linear(1.0, horizon)
    }

    pub fn linear(slope: f64, horizon: f64) -> Result<Self> {
        Self::new(0.0, vec![Knot { time: 0.0, slope }], Vec::new(), horizon)
    }

    /// Pure step function starting at 0 with the given `(time, size)` atoms.
    pub fn step(atoms: &[(f64, f64)], horizon: f64) -> Result<Self> {
        let jumps = atoms.iter().map(|&(time, size)| Jump { time, size }).collect();
        Self::new(0.0, Vec::new(), jumps, horizon)
    }

    /// Continuous piecewise-linear interpolation of `points`, which must
    /// start at time 0 and be non-decreasing in both coordinates.
    pub fn interpolate(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 || points[0].0 != 0.0 {
            return Err(Error::domain("interpolation needs at least two points starting at time 0"));
        }
        let knots = points
            .windows(2)
            .map(|w| {
                let (t0, y0) = w[0];
                let (t1, y1) = w[1];
                Knot {
                    time: t0,
                    slope: (y1 - y0) / (t1 - t0),
                }
            })
            .collect();
        Self::new(points[0].1, knots, Vec::new(), points[points.len() - 1].0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn origin_value(&self) -> f64 {
        self.origin
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn is_pure_step(&self) -> bool {
        self.knots.iter().all(|k| k.slope == 0.0)
    }

    /// Sorted times where the function may fail to be affine: 0, interior
    /// knots and jump times.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Value of the continuous part `f^c(t) - f^c(0)`.
    pub fn continuous_part(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|k| k.time <= t);
        if i == 0 {
            return 0.0;
        }
        let k = self.knots[i - 1];
        self.knot_cum[i - 1] + k.slope * (t - k.time)
    }

    /// Sum of jump sizes at times `<= t`.
    pub fn jump_total(&self, t: f64) -> f64 {
        let i = self.jumps.partition_point(|j| j.time <= t);
        if i == 0 {
            0.0
        } else {
            self.jump_cum[i - 1]
        }
    }

    fn jump_total_before(&self, t: f64) -> f64 {
        let i = self.jumps.partition_point(|j| j.time < t);
        if i == 0 {
            0.0
        } else {
            self.jump_cum[i - 1]
        }
    }

    /// Jump size at exactly `t` (0 when `t` is not a jump time).
    pub fn jump_at(&self, t: f64) -> f64 {
        match self.jumps.binary_search_by(|j| j.time.total_cmp(&t)) {
            Ok(i) => self.jumps[i].size,
            Err(_) => 0.0,
        }
    }

    /// `f(t)` for the constant extension of `f` beyond the horizon.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        self.origin + self.continuous_part(t) + self.jump_total(t)
    }

    /// `f(t-)`, with `f(0-) = f(0)`.
    pub fn left_value(&self, t: f64) -> f64 {
        if t > self.horizon {
            return self.value(self.horizon);
        }
        let t = t.max(0.0);
        self.origin + self.continuous_part(t) + self.jump_total_before(t)
    }

    /// Slope of the continuous part on `[t, t + dt)`.
    pub fn slope_at(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        let i = self.knots.partition_point(|k| k.time <= t);
        if i == 0 {
            0.0
        } else {
            self.knots[i - 1].slope
        }
    }

    /// Slope of the continuous part on `(t - dt, t)`.
    pub fn slope_before(&self, t: f64) -> f64 {
        if t > self.horizon {
            return 0.0;
        }
        let i = self.knots.partition_point(|k| k.time < t);
        if i == 0 {
            0.0
        } else {
            self.knots[i - 1].slope
        }
    }

    pub fn eval_with_left_limit(&self, t: f64) -> Result<PointEval> {
        self.check_time(t)?;
        Ok(PointEval {
            value: self.value(t),
            left_value: self.left_value(t),
            jump: self.jump_at(t),
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// Canonical split into the continuous part and the pure-jump part. Both
    /// start from `f(0)`, so `f = cont + pure_jump - f(0)`.
    pub fn decompose(&self) -> (MonotoneFn, MonotoneFn) {
        let cont = MonotoneFn::new(self.origin, self.knots.clone(), Vec::new(), self.horizon)
            .expect("continuous part of a valid function");
        let pure_jump = MonotoneFn::new(self.origin, Vec::new(), self.jumps.clone(), self.horizon)
            .expect("jump part of a valid function");
        (cont, pure_jump)
    }

    /// `z ↦ f(shift + z)` on `[0, horizon]`, extending `f` by its terminal
    /// value beyond its own horizon.
    pub fn shifted(&self, shift: f64, horizon: f64) -> Result<MonotoneFn> {
        if !(shift >= 0.0) {
            return Err(Error::domain(format!("shift must be >= 0, got {shift}")));
        }
        let end = self.horizon - shift;
        let mut knots = Vec::new();
        if end > 0.0 {
            let first = self.slope_at(shift);
            knots.push(Knot { time: 0.0, slope: first });
            for k in &self.knots {
                let t = k.time - shift;
                if t > 0.0 && t < horizon.min(end) {
                    knots.push(Knot { time: t, slope: k.slope });
                }
            }
            if end < horizon {
                knots.push(Knot { time: end, slope: 0.0 });
            }
        }
        let jumps = self
            .jumps
            .iter()
            .filter(|j| j.time > shift && j.time - shift <= horizon)
            .map(|j| Jump {
                time: j.time - shift,
                size: j.size,
            })
            .collect();
        MonotoneFn::new(self.value(shift), knots, jumps, horizon)
    }

    /// Constant extension to a longer horizon (identity if not longer).
    pub fn extended(&self, horizon: f64) -> MonotoneFn {
        if horizon <= self.horizon {
            return self.clone();
        }
        self.shifted(0.0, horizon).expect("extension of a valid function")
    }

    /// The left inverse `inf{y > 0 : f(y) > x}`, or [`EXHAUSTED`] when
    /// `f(horizon) <= x`.
    pub fn left_inverse(&self, x: f64) -> f64 {
        self.first_crossing(x, |v, x| v > x)
    }

    /// Last passage time below `x`: `sup{t >= 0 : f(t) < x}`. Returns 0 when
    /// `f(0) >= x` and [`EXHAUSTED`] when `f(horizon) < x`.
    pub fn last_passage(&self, x: f64) -> f64 {
        self.first_crossing(x, |v, x| v >= x)
    }

    // Smallest t with `reached(f(t), x)`, the first time the level is reached
    // or exceeded. Both inverses above reduce to this by monotonicity.
    fn first_crossing(&self, x: f64, reached: impl Fn(f64, f64) -> bool) -> f64 {
        if reached(self.origin, x) {
            return 0.0;
        }
        if !reached(self.value(self.horizon), x) {
            return EXHAUSTED;
        }
        let bps = &self.breakpoints;
        let i = bps.partition_point(|&b| !reached(self.value(b), x));
        // segment [bps[j], end) contains the crossing, or it happens at `end`
        let j = i - 1;
        let start = bps[j];
        let end = bps.get(j + 1).copied().unwrap_or(self.horizon);
        let slope = self.slope_at(start);
        if slope > 0.0 && reached(self.left_value(end), x) {
            let v0 = self.value(start);
            let t = start + (x - v0) / slope;
            t.clamp(start, end)
        } else {
            end
        }
    }

    /// Gaps of the closed range over `(0, t]` and the Lebesgue measure of the
    /// range itself.
    pub fn range_report(&self, t: f64) -> Result<RangeReport> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!("time {t} outside (0, {}]", self.horizon)));
        }
        let n = self.jumps.partition_point(|j| j.time <= t);
        let mut below = 0.0;
        let gaps: Vec<(f64, f64)> = self.jumps[..n]
            .iter()
            .map(|j| {
                let left = self.origin + self.continuous_part(j.time) + below;
                below += j.size;
                (left, left + j.size)
            })
            .collect();
        // the gaps have total width equal to the jump part of a(t) - a(0),
        // so what the range covers is the continuous increment
        let range_measure = self.continuous_part(t);
        Ok(RangeReport {
            gaps,
            range_measure,
            pure_jump: range_measure <= TOL_ABS,
        })
    }

    /// Mass `f((x, y]) = f(y) - f(x)` of the Stieltjes measure.
    pub fn stieltjes_mass(&self, x: f64, y: f64) -> Result<f64> {
        if !(x >= 0.0 && x <= y) {
            return Err(Error::domain(format!("invalid interval ({x}, {y}]")));
        }
        if y > self.horizon {
            return Err(Error::domain(format!("{y} beyond horizon {}", self.horizon)));
        }
        Ok(self.value(y) - self.value(x))
    }

    /// Plain-text serialization: one `kind,time,value` line per item, sorted
    /// by time, after a versioned header.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(f64, u8, f64)> = Vec::new();
        rows.push((0.0, 0, self.origin));
        rows.extend(self.knots.iter().map(|k| (k.time, 1, k.slope)));
        rows.extend(self.jumps.iter().map(|j| (j.time, 2, j.size)));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = format!("# monotone/v1 horizon={:.16e}\n", self.horizon);
        for (t, kind, v) in rows {
            let kind = ["origin", "slope", "jump"][kind as usize];
            writeln!(out, "{kind},{t:.16e},{v:.16e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<MonotoneFn> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::usage("header", "empty input"))?;
        let horizon = header
            .strip_prefix("# monotone/v1 horizon=")
            .ok_or_else(|| Error::usage("header", format!("unexpected header `{header}`")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::usage("horizon", e.to_string()))?;
        let mut origin = 0.0;
        let mut knots = Vec::new();
        let mut jumps = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let field = format!("line {}", lineno + 2);
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::usage(field, "expected `kind,time,value`"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::usage(field.clone(), e.to_string()));
            let (time, value) = (num(parts[1])?, num(parts[2])?);
            match parts[0] {
                "origin" => origin = value,
                "slope" => knots.push(Knot { time, slope: value }),
                "jump" => jumps.push(Jump { time, size: value }),
                other => return Err(Error::usage(field, format!("unknown kind `{other}`"))),
            }
        }
        MonotoneFn::new(origin, knots, jumps, horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeReport {
    /// Open intervals `(a(s-), a(s))` over jump times `s <= t`.
    pub gaps: Vec<(f64, f64)>,
    /// Lebesgue measure of the closed range over `[0, t]`.
    pub range_measure: f64,
    /// Kingman's criterion: the range is Lebesgue-null.
    pub pure_jump: bool,
}

/// Composition `t ↦ f(a(t))`, represented exactly.
///
/// Jumps of the result occur at jump times of `a` and at the times where the
/// continuous part of `a` crosses an atom of `f`.
pub fn compose(f: &MonotoneFn, a: &MonotoneFn) -> Result<MonotoneFn> {
    let top = a.value(a.horizon);
    if top > f.horizon {
        return Err(Error::domain(format!(
            "range of inner function reaches {top}, beyond outer horizon {}",
            f.horizon
        )));
    }
    let mut knots: Vec<Knot> = Vec::new();
    let mut jumps: Vec<Jump> = Vec::new();

    let push_knot = |knots: &mut Vec<Knot>, time: f64, slope: f64| {
        if let Some(last) = knots.last_mut() {
            if time <= last.time {
                last.slope = slope;
                return;
            }
            if last.slope == slope {
                return;
            }
        }
        knots.push(Knot { time, slope });
    };
    let push_jump = |jumps: &mut Vec<Jump>, time: f64, size: f64| {
        if size <= 0.0 {
            return;
        }
        match jumps.last_mut() {
            Some(last) if time <= last.time => last.size += size,
            _ => jumps.push(Jump { time, size }),
        }
    };

    let bps = a.breakpoints();
    for (i, &start) in bps.iter().enumerate() {
        let end = bps.get(i + 1).copied().unwrap_or(a.horizon);
        let v0 = a.value(start);
        if start > 0.0 {
            let a_left = a.left_value(start);
            let left = if a.slope_before(start) > 0.0 {
                f.left_value(a_left)
            } else {
                f.value(a_left)
            };
            push_jump(&mut jumps, start, f.value(v0) - left);
        }
        let m = a.slope_at(start);
        if !(m > 0.0 && end > start) {
            push_knot(&mut knots, start, 0.0);
            continue;
        }
        let v1 = a.left_value(end);
        let time_of = |x: f64| (start + (x - v0) / m).clamp(start, end);

        push_knot(&mut knots, start, f.slope_at(v0) * m);
        let k0 = f.knots.partition_point(|k| k.time <= v0);
        for k in f.knots[k0..].iter().take_while(|k| k.time < v1) {
            push_knot(&mut knots, time_of(k.time), k.slope * m);
        }
        let j0 = f.jumps.partition_point(|j| j.time <= v0);
        for j in f.jumps[j0..].iter().take_while(|j| j.time < v1) {
            let t = time_of(j.time).max(start.next_up()).min(end);
            push_jump(&mut jumps, t, j.size);
        }
    }
    // interior crossings clamped onto `end` may precede a boundary jump at
    // the same instant; push_jump merged them already.
    let origin = f.value(a.origin);
    MonotoneFn::new(origin, knots, jumps, a.horizon)
}

/// Both sides of the pure-jump change of variables formula at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovResidual {
    /// `f(a(t)) - f(a(0))`.
    pub lhs: f64,
    /// Sum of all jumps of `f∘a` over `(0, t]`.
    pub jump_sum: f64,
    /// `lhs - jump_sum`.
    pub deficit: f64,
    /// Sum of the jumps of `f∘a` restricted to jump times of `a`.
    pub jump_sum_at_path_jumps: f64,
    /// `lhs - jump_sum_at_path_jumps`.
    pub deficit_at_path_jumps: f64,
}

pub fn cov_residual(f: &MonotoneFn, a: &MonotoneFn, t: f64) -> Result<CovResidual> {
    a.check_time(t)?;
    let fa = compose(f, a)?;
    let lhs = f.value(a.value(t)) - f.value(a.origin);
    let jump_sum = fa.jump_total(t);
    let n = a.jumps.partition_point(|j| j.time <= t);
    let jump_sum_at_path_jumps = a.jumps[..n].iter().map(|j| fa.jump_at(j.time)).sum::<f64>();
    Ok(CovResidual {
        lhs,
        jump_sum,
        deficit: lhs - jump_sum,
        jump_sum_at_path_jumps,
        deficit_at_path_jumps: lhs - jump_sum_at_path_jumps,
    })
}

/// A function of finite variation written as `pos - neg`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteVariationFn {
    pub pos: MonotoneFn,
    pub neg: MonotoneFn,
}

impl FiniteVariationFn {
    pub fn new(pos: MonotoneFn, neg: MonotoneFn) -> Result<Self> {
        if pos.horizon != neg.horizon {
            return Err(Error::domain("positive and negative parts must share a horizon"));
        }
        Ok(FiniteVariationFn { pos, neg })
    }

    pub fn from_monotone(f: MonotoneFn) -> Self {
        let neg = MonotoneFn::zero(f.horizon).unwrap();
        FiniteVariationFn { pos: f, neg }
    }

    pub fn horizon(&self) -> f64 {
        self.pos.horizon
    }

    pub fn value(&self, t: f64) -> f64 {
        self.pos.value(t) - self.neg.value(t)
    }

    pub fn left_value(&self, t: f64) -> f64 {
        self.pos.left_value(t) - self.neg.left_value(t)
    }

    /// Mass of `(x, y]` under the total-variation measure `|dk|`.
    pub fn total_variation_mass(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.pos.stieltjes_mass(x, y)? + self.neg.stieltjes_mass(x, y)?)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Ok(FiniteVariationFn {
            pos: scale(&self.pos, c)?,
            neg: scale(&self.neg, c)?,
        })
    }

    pub fn extended(&self, horizon: f64) -> Self {
        FiniteVariationFn {
            pos: self.pos.extended(horizon),
            neg: self.neg.extended(horizon),
        }
    }
}

/// `c·f` for `c > 0`.
pub fn scale(f: &MonotoneFn, c: f64) -> Result<MonotoneFn> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("scale factor must be positive, got {c}")));
    }
    let knots = f.knots.iter().map(|k| Knot { time: k.time, slope: c * k.slope }).collect();
    let jumps = f.jumps.iter().map(|j| Jump { time: j.time, size: c * j.size }).collect();
    MonotoneFn::new(c * f.origin, knots, jumps, f.horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_step_at_one() -> MonotoneFn {
        MonotoneFn::step(&[(1.0, 1.0)], 3.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = unit_step_at_one();
        let e = f.eval_with_left_limit(0.5).unwrap();
        assert_eq!((e.value, e.left_value, e.jump), (0.0, 0.0, 0.0));
        let e = f.eval_with_left_limit(1.0).unwrap();
        assert_eq!((e.value, e.left_value, e.jump), (1.0, 0.0, 1.0));
        let id = MonotoneFn::identity(1.0).unwrap();
        let e = id.eval_with_left_limit(0.7).unwrap();
        assert_eq!((e.value, e.left_value, e.jump), (0.7, 0.7, 0.0));
        assert!(matches!(f.eval_with_left_limit(3.5), Err(Error::Domain(_))));
        assert!(f.eval_with_left_limit(-0.1).is_err());
    }

    #[test]
    fn rejects_invalid_representations() {
        assert!(MonotoneFn::step(&[(1.0, 1.0), (1.0, 2.0)], 2.0).is_err());
        assert!(MonotoneFn::step(&[(1.0, -1.0)], 2.0).is_err());
        assert!(MonotoneFn::step(&[(0.0, 1.0)], 2.0).is_err());
        assert!(MonotoneFn::linear(-1.0, 2.0).is_err());
        assert!(MonotoneFn::zero(0.0).is_err());
    }

    #[test]
    fn decompose_examples() {
        let f = unit_step_at_one();
        let (c, j) = f.decompose();
        assert_eq!(c.value(2.0), 0.0);
        assert_eq!(j, f);

        let id = MonotoneFn::identity(4.0).unwrap();
        let (c, j) = id.decompose();
        assert_eq!(c, id);
        assert_eq!(j.value(3.0), 0.0);

        let mixed = MonotoneFn::new(
            0.0,
            vec![Knot { time: 0.0, slope: 1.0 }],
            vec![Jump { time: 1.0, size: 2.0 }],
            4.0,
        )
        .unwrap();
        let (c, j) = mixed.decompose();
        assert_eq!(c.value(3.0), 3.0);
        assert_eq!(j.value(3.0), 2.0);
        assert_eq!(mixed.value(3.0), 5.0);
    }

    #[test]
    fn compose_examples() {
        let a = MonotoneFn::new(
            0.0,
            vec![Knot { time: 0.0, slope: 0.5 }],
            vec![Jump { time: 1.0, size: 0.25 }],
            2.0,
        )
        .unwrap();
        let id = MonotoneFn::identity(5.0).unwrap();
        let c = compose(&id, &a).unwrap();
        for t in [0.0, 0.3, 1.0, 1.5, 2.0] {
            assert!((c.value(t) - a.value(t)).abs() < 1e-15);
        }
        assert_eq!(c.jumps(), a.jumps());

        let step_a = MonotoneFn::step(&[(1.0, 2.0)], 2.0).unwrap();
        let f = MonotoneFn::step(&[(1.5, 5.0)], 3.0).unwrap();
        let c = compose(&f, &step_a).unwrap();
        assert_eq!(c.jumps(), &[Jump { time: 1.0, size: 5.0 }]);

        let ident = MonotoneFn::identity(3.0).unwrap();
        let c = compose(&f, &ident).unwrap();
        assert_eq!(c.jumps(), &[Jump { time: 1.5, size: 5.0 }]);
        assert_eq!(c.value(1.4999), 0.0);
        assert_eq!(c.value(1.5), 5.0);
    }

    #[test]
    fn compose_checks_range() {
        let a = MonotoneFn::linear(2.0, 2.0).unwrap();
        let f = MonotoneFn::identity(3.0).unwrap();
        assert!(matches!(compose(&f, &a), Err(Error::Domain(_))));
    }

    #[test]
    fn compose_atom_at_segment_end_merges_with_jump() {
        // a rises continuously to 1 at t = 1 and then jumps; f has an atom at 1
        let a = MonotoneFn::new(
            0.0,
            vec![Knot { time: 0.0, slope: 1.0 }, Knot { time: 1.0, slope: 0.0 }],
            vec![Jump { time: 1.0, size: 1.0 }],
            2.0,
        )
        .unwrap();
        let f = MonotoneFn::step(&[(1.0, 3.0), (1.5, 1.0)], 3.0).unwrap();
        let c = compose(&f, &a).unwrap();
        assert_eq!(c.jumps(), &[Jump { time: 1.0, size: 4.0 }]);
    }

    #[test]
    fn left_inverse_examples() {
        let id = MonotoneFn::identity(1.0).unwrap();
        assert_eq!(id.left_inverse(0.3), 0.3);
        let f = MonotoneFn::step(&[(1.0, 1.0)], 2.0).unwrap();
        assert_eq!(f.left_inverse(0.5), 1.0);
        assert_eq!(f.left_inverse(1.0), EXHAUSTED);
    }

    #[test]
    fn last_passage_examples() {
        let id = MonotoneFn::identity(1.0).unwrap();
        assert_eq!(id.last_passage(0.3), 0.3);
        let f = MonotoneFn::step(&[(1.0, 2.0)], 2.0).unwrap();
        assert_eq!(f.last_passage(1.0), 1.0);
        assert_eq!(f.last_passage(3.0), EXHAUSTED);
        assert_eq!(f.last_passage(2.0), 1.0);
    }

    #[test]
    fn plateau_inverses_differ() {
        // rises to 1 on [0,1], flat on [1,2], rises again
        let a = MonotoneFn::new(
            0.0,
            vec![
                Knot { time: 0.0, slope: 1.0 },
                Knot { time: 1.0, slope: 0.0 },
                Knot { time: 2.0, slope: 1.0 },
            ],
            Vec::new(),
            3.0,
        )
        .unwrap();
        assert_eq!(a.last_passage(1.0), 1.0);
        assert_eq!(a.left_inverse(1.0), 2.0);
        assert_eq!(a.left_inverse(0.5), a.last_passage(0.5));
    }

    #[test]
    fn range_report_examples() {
        let f = MonotoneFn::step(&[(0.5, 1.0), (1.0, 0.25)], 2.0).unwrap();
        let r = f.range_report(2.0).unwrap();
        assert_eq!(r.range_measure, 0.0);
        assert!(r.pure_jump);
        assert_eq!(r.gaps, vec![(0.0, 1.0), (1.0, 1.25)]);

        let id = MonotoneFn::identity(1.0).unwrap();
        let r = id.range_report(1.0).unwrap();
        assert!(r.gaps.is_empty());
        assert_eq!(r.range_measure, 1.0);
        assert!(!r.pure_jump);

        let mixed = MonotoneFn::new(
            0.0,
            vec![Knot { time: 0.0, slope: 1.0 }],
            vec![Jump { time: 1.0, size: 3.0 }],
            2.0,
        )
        .unwrap();
        let r = mixed.range_report(2.0).unwrap();
        assert_eq!(r.gaps, vec![(1.0, 4.0)]);
        assert_eq!(r.range_measure, 2.0);
    }

    #[test]
    fn stieltjes_mass_examples() {
        let id = MonotoneFn::identity(2.0).unwrap();
        assert_eq!(id.stieltjes_mass(0.0, 1.0).unwrap(), 1.0);
        let f = MonotoneFn::step(&[(1.0, 2.0)], 2.0).unwrap();
        assert_eq!(f.stieltjes_mass(0.9, 1.0).unwrap(), 2.0);
        assert_eq!(f.stieltjes_mass(1.0, 1.5).unwrap(), 0.0);
        assert!(f.stieltjes_mass(1.0, 2.5).is_err());
        assert!(f.stieltjes_mass(1.5, 1.0).is_err());
    }

    #[test]
    fn cov_residual_examples() {
        let f = MonotoneFn::step(&[(0.5, 1.0), (1.2, 2.0)], 3.0).unwrap();
        let a = MonotoneFn::step(&[(0.3, 0.7), (0.8, 1.0)], 1.0).unwrap();
        let r = cov_residual(&f, &a, 1.0).unwrap();
        assert_eq!(r.lhs, 3.0);
        assert!(r.deficit.abs() < TOL_ABS);

        let id = MonotoneFn::identity(1.0).unwrap();
        let r = cov_residual(&id, &id, 1.0).unwrap();
        assert_eq!((r.lhs, r.jump_sum, r.deficit), (1.0, 0.0, 1.0));
    }

    #[test]
    fn text_format_is_sorted_and_parses() {
        let f = MonotoneFn::new(
            0.5,
            vec![Knot { time: 0.0, slope: 1.0 }, Knot { time: 2.0, slope: 0.0 }],
            vec![Jump { time: 1.0, size: 3.0 }],
            4.0,
        )
        .unwrap();
        let text = f.to_text();
        let kinds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(kinds, ["origin", "slope", "jump", "slope"]);
        assert_eq!(MonotoneFn::from_text(&text).unwrap(), f);
        assert!(MonotoneFn::from_text("garbage").is_err());
    }

    #[test]
    fn shifted_matches_pointwise() {
        let f = MonotoneFn::new(
            0.0,
            vec![Knot { time: 0.0, slope: 1.0 }, Knot { time: 1.5, slope: 0.25 }],
            vec![Jump { time: 0.5, size: 1.0 }, Jump { time: 2.0, size: 0.5 }],
            3.0,
        )
        .unwrap();
        let g = f.shifted(0.75, 5.0).unwrap();
        for i in 0..=100 {
            let z = 5.0 * i as f64 / 100.0;
            assert!((g.value(z) - f.value(0.75 + z)).abs() < 1e-14, "z={z}");
        }
    }
}
