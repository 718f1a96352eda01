//! A strictly increasing, purely discontinuous function with dense jumps,
//! and certified enclosures of it and of its left inverse.
//!
//! The atoms are the positive rationals in Calkin–Wilf order, `r_k = p/q`,
//! mapped into `(0, H)` by `x_k = H·p/(p+q)`; atom `k` carries weight
//! `2^-k`. So `a(t) = Σ_{x_k <= t} 2^-k` and the first `N` atoms account for
//! all of the mass except exactly `2^-N`.
//!
//! Under `p/q ↦ p/(p+q)` the Stern–Brocot tree becomes the mediant tree on
//! `(0, 1)` with root `1/2`, and its depth-`d` row holds the same rationals
//! as Calkin–Wilf indices `2^d .. 2^{d+1}-1`. Inverse enclosures use this:
//! the atoms with index below `2^D` are exactly the tree nodes of depth
//! below `D`, and in-order neighbours in that finite tree are mediants.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::Enclosure;
use crate::monotone::MonotoneFn;

pub const DEFAULT_HORIZON: f64 = 2.0;
pub const DEFAULT_DELTA: f64 = 1e-8;
pub const BISECTION_CAP: usize = 200;
/// Weights `2^-k` underflow past this index.
pub const MAX_TRUNCATION: usize = 1074;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseSpec {
    pub horizon: f64,
}

impl Default for StaircaseSpec {
    fn default() -> Self {
        StaircaseSpec {
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// A nonnegative fraction `n/d` (with `1/0` allowed as a sentinel).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub n: u128,
    pub d: u128,
}

impl Frac {
    const fn new(n: u128, d: u128) -> Frac {
        Frac { n, d }
    }

    /// `self ⊕ k·other` as a mediant, `None` on overflow of `u64` range.
    fn mediant_with(self, other: Frac, k: u128) -> Option<Frac> {
        let n = self.n.checked_add(other.n.checked_mul(k)?)?;
        let d = self.d.checked_add(other.d.checked_mul(k)?)?;
        (n <= u64::MAX as u128 && d <= u64::MAX as u128).then_some(Frac { n, d })
    }
}

/// The `k`-th positive rational in Calkin–Wilf order, `k >= 1`.
pub struct CalkinWilf {
    p: u64,
    q: u64,
}

impl CalkinWilf {
    pub fn new() -> Self {
        CalkinWilf { p: 1, q: 1 }
    }
}

impl Default for CalkinWilf {
    fn default() -> Self {
        Self::new()
    }
}

/// The `k`-th Calkin–Wilf rational read off the binary digits of `k`: after
/// the leading 1, a 0 moves `p/q` to `p/(p+q)` and a 1 to `(p+q)/q`.
pub fn calkin_wilf_at(k: u64) -> (u64, u64) {
    assert!(k >= 1);
    let (mut p, mut q) = (1u64, 1u64);
    for bit in (0..63 - k.leading_zeros()).rev() {
        if k >> bit & 1 == 0 {
            q += p;
        } else {
            p += q;
        }
    }
    (p, q)
}

impl Iterator for CalkinWilf {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        let out = (self.p, self.q);
        // r ↦ 1 / (2⌊r⌋ - r + 1)
        let floor = self.p / self.q;
        let next_q = (2 * floor + 1) * self.q - self.p;
        self.p = self.q;
        self.q = next_q;
        Some(out)
    }
}

/// Exact sign of `a·m - b·n` for finite `a, b >= 0`.
pub(crate) fn cmp_scaled(a: f64, m: u64, b: f64, n: u64) -> Ordering {
    fn parts(x: f64, k: u64) -> Option<(u128, i32)> {
        if x == 0.0 || k == 0 {
            return None;
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
        Some((mant as u128 * k as u128, e))
    }
    match (parts(a, m), parts(b, n)) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some((x, ex)), Some((y, ey))) => {
            let top_x = 128 - x.leading_zeros() as i32 + ex;
            let top_y = 128 - y.leading_zeros() as i32 + ey;
            if top_x != top_y {
                return top_x.cmp(&top_y);
            }
            // same magnitude, so the exponent gap is below 128
            if ex >= ey {
                (x << (ex - ey) as u32).cmp(&y)
            } else {
                x.cmp(&(y << (ey - ex) as u32))
            }
        }
    }
}

/// Fixed-point sum of distinct powers `2^-k`, used to round partial sums of
/// the weights correctly in both directions.
struct DyadicSum {
    words: Vec<u64>,
    whole: bool,
}

impl DyadicSum {
    fn new(max_k: usize) -> Self {
        DyadicSum {
            words: vec![0; max_k.div_ceil(64).max(1)],
            whole: false,
        }
    }

    /// Adds `2^-k`, `k >= 1`, with carry.
    fn add_power(&mut self, k: usize) {
        let mut w = (k - 1) / 64;
        let mut add = 1u64 << (63 - (k - 1) % 64);
        loop {
            let (sum, carry) = self.words[w].overflowing_add(add);
            self.words[w] = sum;
            if !carry {
                return;
            }
            if w == 0 {
                self.whole = true;
                return;
            }
            w -= 1;
            add = 1;
        }
    }

    /// Rounded down (`up = false`) or up to an `f64`.
    fn to_f64(&self, up: bool) -> f64 {
        if self.whole {
            // only reachable when the sum is exactly 1
            return 1.0;
        }
        let Some(w0) = self.words.iter().position(|&w| w != 0) else {
            return 0.0;
        };
        let next = self.words.get(w0 + 1).copied().unwrap_or(0);
        let wide = ((self.words[w0] as u128) << 64) | next as u128;
        let shift = 75 - wide.leading_zeros();
        let mant = wide >> shift;
        let rest = wide & ((1u128 << shift) - 1) != 0 || self.words.iter().skip(w0 + 2).any(|&w| w != 0);
        let exp = shift as i32 - 64 * (w0 as i32 + 2);
        let down = mant as f64 * 2f64.powi(exp);
        if up && rest {
            down.next_up()
        } else {
            down
        }
    }
}

impl StaircaseSpec {
    pub fn new(horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("staircase horizon must be positive, got {horizon}")));
        }
        Ok(StaircaseSpec { horizon })
    }

    /// `(x_k, 2^-k)` for `k = 1..=n`, in index order.
    pub fn atoms(&self, n: usize) -> Vec<(f64, f64)> {
        CalkinWilf::new()
            .take(n)
            .enumerate()
            .map(|(i, (p, q))| (self.horizon * p as f64 / (p + q) as f64, (-((i + 1) as f64)).exp2()))
            .collect()
    }

    /// `x_k <= t`, decided exactly.
    fn atom_at_or_before(&self, p: u64, q: u64, t: f64) -> bool {
        cmp_scaled(self.horizon, p, t, p + q) != Ordering::Greater
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `a_N`, the pure step function made of the first `n` atoms.
    pub fn build_truncated(&self, n: usize) -> Result<MonotoneFn> {
        if !(1..=MAX_TRUNCATION).contains(&n) {
            return Err(Error::domain(format!("truncation must lie in 1..={MAX_TRUNCATION}, got {n}")));
        }
        let mut atoms = self.atoms(n);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        MonotoneFn::step(&atoms, self.horizon)
    }

    /// `[a_N(t), a_N(t) + 2^-N]`, which contains `a(t)`, rounded outward.
    pub fn certified_eval(&self, t: f64, n: usize) -> Result<Enclosure> {
        self.check_time(t)?;
        if !(1..=MAX_TRUNCATION).contains(&n) {
            return Err(Error::domain(format!("truncation must lie in 1..={MAX_TRUNCATION}, got {n}")));
        }
        let mut sum = DyadicSum::new(n);
        for (i, (p, q)) in CalkinWilf::new().take(n).enumerate() {
            if self.atom_at_or_before(p, q, t) {
                sum.add_power(i + 1);
            }
        }
        let lo = sum.to_f64(false);
        sum.add_power(n);
        Ok(Enclosure::new(lo, sum.to_f64(true)))
    }

    /// Enclosure of `a^{-1}(x) = inf{y : a(y) > x}` of width at most `delta`.
    ///
    /// Bisection keeps `a(lo) <= x < a(hi)`, each comparison certified by
    /// `certified_eval` at a truncation large enough to decide it.
    pub fn certified_inverse(&self, x: f64, delta: f64) -> Result<Enclosure> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::domain(format!("inverse argument must lie in [0, 1), got {x}")));
        }
        if !(delta > 0.0) {
            return Err(Error::domain(format!("delta must be > 0, got {delta}")));
        }
        if x == 0.0 {
            // atoms accumulate at 0, so a > 0 on (0, H]
            return Ok(Enclosure::point(0.0));
        }
        let (mut lo, mut hi) = (0.0, self.horizon);
        for _ in 0..BISECTION_CAP {
            if hi - lo <= delta {
                return Ok(Enclosure::new(lo, hi));
            }
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            match self.decide_above(mid, x)? {
                Some(true) => hi = mid,
                Some(false) => lo = mid,
                None => {
                    return Err(Error::Resource {
                        message: format!("cannot decide a({mid}) against {x} at any truncation"),
                        best: Some(Enclosure::new(lo, hi)),
                    })
                }
            }
        }
        if hi - lo <= delta {
            return Ok(Enclosure::new(lo, hi));
        }
        Err(Error::Resource {
            message: format!("bisection stalled at width {} > {delta}", hi - lo),
            best: Some(Enclosure::new(lo, hi)),
        })
    }

    /// Whether `a(t) > x`, if some truncation certifies it either way.
    fn decide_above(&self, t: f64, x: f64) -> Result<Option<bool>> {
        let mut n = 8;
        loop {
            let e = self.certified_eval(t, n)?;
            if e.lo > x {
                return Ok(Some(true));
            }
            if e.hi <= x {
                return Ok(Some(false));
            }
            if n == MAX_TRUNCATION {
                return Ok(None);
            }
            n = (n * 2).min(MAX_TRUNCATION);
        }
    }

    /// `H·u` for a tree fraction `u`, rounded outward and exact when
    /// representable.
    fn place(&self, u: Frac) -> Enclosure {
        if u.d == 0 {
            return Enclosure::point(self.horizon);
        }
        let (n, d) = (u.n as u64, u.d as u64);
        let x = self.horizon * n as f64 / d as f64;
        let (mut lo, mut hi) = (x, x);
        while cmp_scaled(lo, d, self.horizon, n) == Ordering::Greater {
            lo = lo.next_down();
        }
        while cmp_scaled(hi, d, self.horizon, n) == Ordering::Less {
            hi = hi.next_up();
        }
        Enclosure::new(lo, hi)
    }

    /// Bounds on `a^{-1}(a(t))` certified from a truncation containing every
    /// tree node of depth below `depth_limit`: the last such node `<= t` and
    /// the first one `> t`.
    pub fn inverse_of_value(&self, t: f64, depth_limit: u128) -> Result<Enclosure> {
        self.check_time(t)?;
        let cmp = |u: Frac| cmp_scaled(t, u.d as u64, self.horizon, u.n as u64);
        let (mut l, mut r) = (Frac::new(0, 1), Frac::new(1, 1));
        let (mut lo, mut hi) = (l, r);
        let mut depth: u128 = 0;
        while depth < depth_limit {
            let budget = depth_limit - depth;
            let m = l.mediant_with(r, 1).expect("tree nodes stay small");
            match cmp(m) {
                Ordering::Equal => {
                    lo = m;
                    let j = depth_limit - 1 - depth;
                    hi = max_mediant(r, m, j);
                    break;
                }
                Ordering::Greater => {
                    // right run: nodes l ⊕ i·r, increasing in i
                    let i = last_index(budget, |i| l.mediant_with(r, i).filter(|&u| cmp(u) != Ordering::Less));
                    if i == 0 {
                        break;
                    }
                    let node = l.mediant_with(r, i).unwrap();
                    if cmp(node) == Ordering::Equal {
                        l = l.mediant_with(r, i - 1).unwrap();
                        depth += i - 1;
                        continue;
                    }
                    l = node;
                    lo = node;
                    depth += i;
                }
                Ordering::Less => {
                    // left run: nodes i·l ⊕ r, decreasing in i
                    let i = last_index(budget, |i| r.mediant_with(l, i).filter(|&u| cmp(u) == Ordering::Less));
                    if i == 0 {
                        break;
                    }
                    let node = r.mediant_with(l, i).unwrap();
                    r = node;
                    hi = node;
                    depth += i;
                }
            }
        }
        Ok(Enclosure::new(self.place(lo).lo, self.place(hi).hi))
    }

    /// Runs the strict-inequality experiment at time `t`.
    ///
    /// `A` is the limit staircase and `f = a^{-1}`, so `f∘A` is the identity
    /// and `f(A(t)) - f(0) = t`, while every jump of `f∘A` at an atom `s`
    /// vanishes. Row `N` sums the jumps over the first `N` atoms. Each
    /// `f`-evaluation is enclosed from a truncation deep enough that the
    /// widths over all `N` atoms add up to at most `delta`.
    pub fn deficit_experiment(&self, t: f64, ns: &[usize], delta: f64) -> Result<Vec<DeficitRow>> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::domain(format!("time {t} outside [0, {})", self.horizon)));
        }
        if !(delta > 0.0) {
            return Err(Error::domain(format!("delta must be > 0, got {delta}")));
        }
        if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("truncation levels must be positive and strictly increasing"));
        }
        ns.par_iter().map(|&n| self.deficit_row(t, n, delta)).collect()
    }

    fn deficit_row(&self, t: f64, n: usize, delta: f64) -> Result<DeficitRow> {
        let j = extra_depth(self.horizon, n, delta)?;
        let lhs = if t == 0.0 {
            Enclosure::point(0.0)
        } else {
            self.inverse_of_value(t, j + 1)?
        };
        let h = Enclosure::point(self.horizon);
        let mut width = 0.0f64;
        for (p, q) in CalkinWilf::new().take(n) {
            if !self.atom_at_or_before(p, q, t) {
                continue;
            }
            let node = tree_node(p, q);
            let (pred, succ) = node.neighbours(j);
            // f(A(s)) ∈ [s, succ] and f(A(s-)) ∈ [pred, s]; adjacent tree
            // fractions differ by 1/(d·d'), so the gap is computed without
            // cancellation
            let gap = Enclosure::ratio(1.0, (node.value.d * pred.d) as f64) + Enclosure::ratio(1.0, (node.value.d * succ.d) as f64);
            width = (width + (gap.hi * h.hi).next_up()).next_up();
        }
        let jump_sum = Enclosure::new(0.0, width);
        let deficit = lhs - jump_sum;
        Ok(DeficitRow { n, lhs, jump_sum, deficit })
    }
}

/// Per-atom extra tree depth so that `N` atoms contribute total width at
/// most `delta`: each term is at most `2H/j` wide.
fn extra_depth(horizon: f64, n: usize, delta: f64) -> Result<u128> {
    let j = (2.0 * horizon * n as f64 / delta).ceil();
    if !(j < 1e16) {
        return Err(Error::Resource {
            message: format!("resolution {j} for {n} atoms at delta {delta} exceeds exact-arithmetic range"),
            best: None,
        });
    }
    Ok((j as u128).max(1))
}

/// Largest `i` in `1..=cap` with `ok(i)` (monotone: true then false), or 0.
fn last_index(cap: u128, ok: impl Fn(u128) -> Option<Frac>) -> u128 {
    if cap == 0 || ok(1).is_none() {
        return 0;
    }
    let mut good = 1u128;
    let mut step = 1u128;
    // gallop, then bisect
    let mut bad = loop {
        let probe = good.saturating_add(step).min(cap);
        if probe == good {
            return good;
        }
        if ok(probe).is_some() {
            good = probe;
            step = step.saturating_mul(2);
        } else {
            break probe;
        }
    };
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if ok(mid).is_some() {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// `outer ⊕ j·node`, backing off `j` if the fraction grows too large; any
/// smaller `j` still names a node of the depth-limited tree.
fn max_mediant(outer: Frac, node: Frac, j: u128) -> Frac {
    if j == 0 {
        return outer;
    }
    match outer.mediant_with(node, j) {
        Some(u) => u,
        None => {
            let cap = last_index(j, |i| outer.mediant_with(node, i));
            if cap == 0 {
                outer
            } else {
                outer.mediant_with(node, cap).unwrap()
            }
        }
    }
}

/// A node of the mediant tree on `(0, 1)` with its bracketing fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub value: Frac,
    pub left: Frac,
    pub right: Frac,
    pub depth: u128,
}

impl TreeNode {
    /// In-order predecessor and successor of this node in the tree cut
    /// at depth `depth + 1 + j`.
    pub fn neighbours(&self, j: u128) -> (Frac, Frac) {
        (max_mediant(self.left, self.value, j), max_mediant(self.right, self.value, j))
    }
}

/// Tree position of `p/(p+q)`, the image of the positive rational `p/q`.
pub fn tree_node(p: u64, q: u64) -> TreeNode {
    // Stern–Brocot descent on p/q by runs, bounds carried as positive
    // rationals and mapped n/d ↦ n/(n+d) at the end
    let (mut l, mut r) = ((0u128, 1u128), (1u128, 0u128));
    let (mut a, mut b) = (p as u128, q as u128);
    let mut depth = 0;
    while a != b {
        if a > b {
            let k = (a - 1) / b;
            l = (l.0 + k * r.0, l.1 + k * r.1);
            a -= k * b;
            depth += k;
        } else {
            let k = (b - 1) / a;
            r = (r.0 + k * l.0, r.1 + k * l.1);
            b -= k * a;
            depth += k;
        }
    }
    let map = |(n, d): (u128, u128)| Frac::new(n, n + d);
    TreeNode {
        value: Frac::new(p as u128, (p + q) as u128),
        left: map(l),
        right: map(r),
        depth,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficitRow {
    pub n: usize,
    pub lhs: Enclosure,
    pub jump_sum: Enclosure,
    pub deficit: Enclosure,
}

pub const DEFICIT_CSV_HEADER: &str = "N,lhs_lo,lhs_hi,jumpsum_lo,jumpsum_hi,deficit_lo,deficit_hi";

pub fn deficit_csv(rows: &[DeficitRow]) -> String {
    let mut out = String::from(DEFICIT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.n, r.lhs.lo, r.lhs.hi, r.jump_sum.lo, r.jump_sum.hi, r.deficit.lo, r.deficit.hi
        )
        .unwrap();
    }
    out
}
