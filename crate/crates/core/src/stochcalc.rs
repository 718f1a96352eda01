//! Pathwise Stieltjes integrals against finite-variation and smooth
//! integrators, and the integration-by-parts identity
//! `X_t k(A_t) - X_0 k(A_0) = ∫_0^t k(A_{s-}) dX_s + Σ_{s<=t} X_s Δ(k∘A)_s`
//! for a purely discontinuous non-decreasing `A`.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::accessibility::accessible_mass;
use crate::error::{Error, Result};
use crate::monotone::{FiniteVariationFn, MonotoneFn};
use crate::quadrature::{self, Quadrature};

/// Budget for identities evaluated by finite sums.
pub const EXACT_BUDGET: f64 = 1e-10;

/// A deterministic differentiable path.
pub trait SmoothPath: Sync + Send {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;
    fn describe(&self) -> String;
}

/// `s ↦ Σ coeffs[i] s^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn identity() -> Self {
        Polynomial { coeffs: vec![0.0, 1.0] }
    }
}

impl SmoothPath for Polynomial {
    fn value(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    fn derivative(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * s + i as f64 * c)
    }

    fn describe(&self) -> String {
        let terms: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("polynomial({})", terms.join(";"))
    }
}

/// The integrator `X`.
pub enum IntegratorPath {
    FiniteVariation(FiniteVariationFn),
    Smooth { path: Arc<dyn SmoothPath>, horizon: f64 },
}

impl fmt::Debug for IntegratorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegratorPath::FiniteVariation(x) => f.debug_tuple("FiniteVariation").field(x).finish(),
            IntegratorPath::Smooth { path, horizon } => f
                .debug_struct("Smooth")
                .field("path", &path.describe())
                .field("horizon", horizon)
                .finish(),
        }
    }
}

impl IntegratorPath {
    pub fn horizon(&self) -> f64 {
        match self {
            IntegratorPath::FiniteVariation(x) => x.horizon(),
            IntegratorPath::Smooth { horizon, .. } => *horizon,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            IntegratorPath::FiniteVariation(x) => x.value(s),
            IntegratorPath::Smooth { path, .. } => path.value(s),
        }
    }

    /// `X` scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<IntegratorPath> {
        match self {
            IntegratorPath::FiniteVariation(x) => Ok(IntegratorPath::FiniteVariation(x.scaled(c)?)),
            IntegratorPath::Smooth { path, horizon } => Ok(IntegratorPath::Smooth {
                path: Arc::new(ScaledPath { inner: path.clone(), c }),
                horizon: *horizon,
            }),
        }
    }
}

struct ScaledPath {
    inner: Arc<dyn SmoothPath>,
    c: f64,
}

impl SmoothPath for ScaledPath {
    fn value(&self, s: f64) -> f64 {
        self.c * self.inner.value(s)
    }

    fn derivative(&self, s: f64) -> f64 {
        self.c * self.inner.derivative(s)
    }

    fn describe(&self) -> String {
        format!("{}*{}", self.c, self.inner.describe())
    }
}

/// A path that can be evaluated with left limits.
pub trait CadlagPath: Sync {
    fn value(&self, s: f64) -> f64;
    fn left_value(&self, s: f64) -> f64;
    /// Times in `[0, horizon]` where the path may jump or kink.
    fn breakpoints(&self) -> Vec<f64>;
}

impl CadlagPath for MonotoneFn {
    fn value(&self, s: f64) -> f64 {
        MonotoneFn::value(self, s)
    }

    fn left_value(&self, s: f64) -> f64 {
        MonotoneFn::left_value(self, s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        MonotoneFn::breakpoints(self).to_vec()
    }
}

impl CadlagPath for FiniteVariationFn {
    fn value(&self, s: f64) -> f64 {
        FiniteVariationFn::value(self, s)
    }

    fn left_value(&self, s: f64) -> f64 {
        FiniteVariationFn::left_value(self, s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pos.breakpoints().iter().chain(self.neg.breakpoints()).copied().collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

impl CadlagPath for Polynomial {
    fn value(&self, s: f64) -> f64 {
        SmoothPath::value(self, s)
    }

    fn left_value(&self, s: f64) -> f64 {
        SmoothPath::value(self, s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `s ↦ k(A_s)` for a pure-step `A`, whose left limit is `k(A_{s-})`.
pub struct Composed<'a> {
    pub k: &'a FiniteVariationFn,
    pub a: &'a MonotoneFn,
}

impl CadlagPath for Composed<'_> {
    fn value(&self, s: f64) -> f64 {
        self.k.value(self.a.value(s))
    }

    fn left_value(&self, s: f64) -> f64 {
        self.k.value(self.a.left_value(s))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.a.breakpoints().to_vec()
    }
}

/// `∫_(0,t] h(s-) dX_s`.
///
/// Atoms of `dX` contribute `h(s-) ΔX_s` exactly; continuous parts are
/// integrated by quadrature between the breakpoints of `h`, where `h(s-)`
/// and `h(s)` agree almost everywhere.
pub fn pathwise_integral<H: CadlagPath + ?Sized>(h: &H, x: &IntegratorPath, t: f64) -> Result<Quadrature> {
    if !(t >= 0.0 && t <= x.horizon()) {
        return Err(Error::domain(format!("time {t} outside [0, {}]", x.horizon())));
    }
    let mut h_breaks: Vec<f64> = h.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t).collect();
    h_breaks.sort_by(f64::total_cmp);
    let pieces = |from: f64, to: f64| -> Vec<f64> {
        let mut pts = vec![from];
        let lo = h_breaks.partition_point(|&b| b <= from);
        let hi = h_breaks.partition_point(|&b| b < to);
        pts.extend_from_slice(&h_breaks[lo..hi]);
        pts.push(to);
        pts
    };
    match x {
        IntegratorPath::FiniteVariation(fv) => {
            let mut total = Quadrature { value: 0.0, error: 0.0 };
            for (part, sign) in [(&fv.pos, 1.0), (&fv.neg, -1.0)] {
                for j in part.jumps().iter().filter(|j| j.time <= t) {
                    total.value += sign * h.left_value(j.time) * j.size;
                }
                let knots = part.knots();
                for (i, k) in knots.iter().enumerate() {
                    let end = knots.get(i + 1).map_or(part.horizon(), |n| n.time).min(t);
                    if k.slope == 0.0 || end <= k.time {
                        continue;
                    }
                    let slope = sign * k.slope;
                    let q = quadrature::integrate_pieces(|s| h.value(s) * slope, &pieces(k.time, end), 1e-13, 1e-12)?;
                    total = total + q;
                }
            }
            Ok(total)
        }
        IntegratorPath::Smooth { path, .. } => {
            quadrature::integrate_pieces(|s| h.value(s) * path.derivative(s), &pieces(0.0, t), 1e-13, 1e-10)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpResidual {
    pub residual: f64,
    /// Allowed `|residual|`: the exact-sum budget plus any quadrature error.
    pub budget: f64,
}

impl IbpResidual {
    pub fn pass(&self) -> bool {
        self.residual.abs() <= self.budget
    }
}

/// `X_t k(A_t) - X_0 k(A_0) - ∫_0^t k(A_{s-}) dX_s - Σ_{s<=t} X_s (k(A_s) - k(A_{s-}))`.
///
/// Requires `A` purely discontinuous and `|k|` to put no mass on the levels
/// `A` creeps across, checked on this path (tolerance 0). Each failure is a
/// distinct precondition error.
pub fn ibp_residual(x: &IntegratorPath, a: &MonotoneFn, k: &FiniteVariationFn, t: f64) -> Result<IbpResidual> {
    if !(t > 0.0 && t <= x.horizon() && t <= a.horizon()) {
        return Err(Error::domain(format!("time {t} outside the horizons of X and A")));
    }
    if !a.range_report(t)?.pure_jump {
        return Err(Error::Precondition("A is not purely discontinuous: its range has positive measure".into()));
    }
    let charged = accessible_mass(&k.pos, a, 0.0)? + accessible_mass(&k.neg, a, 0.0)?;
    if charged > 0.0 {
        return Err(Error::Precondition(format!(
            "k puts mass {charged} on levels that A reaches continuously"
        )));
    }
    let y = Composed { k, a };
    let integral = pathwise_integral(&y, x, t)?;
    let jumps: f64 = a
        .jumps()
        .iter()
        .filter(|j| j.time <= t)
        .map(|j| x.value(j.time) * (y.value(j.time) - y.left_value(j.time)))
        .sum();
    let residual = x.value(t) * y.value(t) - x.value(0.0) * y.value(0.0) - integral.value - jumps;
    Ok(IbpResidual {
        residual,
        budget: EXACT_BUDGET + integral.error,
    })
}

pub const IBP_CSV_HEADER: &str = "trial,residual,budget,pass";

pub fn ibp_csv(rows: &[IbpResidual]) -> String {
    let mut out = format!("{IBP_CSV_HEADER}\n");
    for (i, r) in rows.iter().enumerate() {
        writeln!(out, "{i},{:.16e},{:.16e},{}", r.residual, r.budget, r.pass()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{simulate_path, JumpLaw, LevyModel};
    use crate::monotone::{cov_residual, Jump, Knot};

    fn fv_step(atoms: &[(f64, f64)], horizon: f64) -> FiniteVariationFn {
        FiniteVariationFn::from_monotone(MonotoneFn::step(atoms, horizon).unwrap())
    }

    fn min_with(cap: f64, horizon: f64) -> FiniteVariationFn {
        let k = MonotoneFn::new(0.0, vec![Knot { time: 0.0, slope: 1.0 }, Knot { time: cap, slope: 0.0 }], vec![], horizon).unwrap();
        FiniteVariationFn::from_monotone(k)
    }

    #[test]
    fn integral_examples() {
        let a = MonotoneFn::new(0.5, vec![Knot { time: 0.0, slope: 2.0 }], vec![Jump { time: 0.3, size: 1.0 }], 1.0).unwrap();
        let x = IntegratorPath::FiniteVariation(FiniteVariationFn::from_monotone(a.clone()));
        let one = Polynomial::new(vec![1.0]);
        let q = pathwise_integral(&one, &x, 0.8).unwrap();
        assert!((q.value - (a.value(0.8) - a.value(0.0))).abs() < 1e-14);

        // h(s-) = 1{s > u}: a step at u is already 1 at u, but its left limit is not
        let h = MonotoneFn::step(&[(0.4, 1.0)], 1.0).unwrap();
        let x = IntegratorPath::FiniteVariation(fv_step(&[(0.2, 1.0), (0.4, 2.0), (0.7, 4.0)], 1.0));
        assert_eq!(pathwise_integral(&h, &x, 1.0).unwrap().value, 4.0);

        let smooth = IntegratorPath::Smooth { path: Arc::new(Polynomial::identity()), horizon: 1.0 };
        let q = pathwise_integral(&Polynomial::identity(), &smooth, 1.0).unwrap();
        assert!((q.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_integrator_reduces_to_change_of_variables() {
        let s = LevyModel::stable(0.5).unwrap();
        let a = simulate_path(&s, 1.0, 1e-4, 5, 0).unwrap().to_monotone();
        let k = fv_step(&[(0.5, 1.0), (1.5, 0.5)], 1e12);
        let x = IntegratorPath::Smooth { path: Arc::new(Polynomial::new(vec![1.0])), horizon: 1.0 };
        let r = ibp_residual(&x, &a, &k, 1.0).unwrap();
        let cov = cov_residual(&k.pos, &a, 1.0).unwrap();
        assert!(r.residual.abs() <= 1e-12 && cov.deficit.abs() <= 1e-12);
    }

    /// Both sides expanded over the merged jump grid of two step paths.
    fn merged_grid_residual(x: &MonotoneFn, a: &MonotoneFn, k: &FiniteVariationFn, t: f64) -> f64 {
        let mut grid: Vec<f64> = x.jumps().iter().chain(a.jumps()).map(|j| j.time).filter(|&s| s <= t).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let y = |s: f64| k.value(a.value(s));
        let y_left = |s: f64| k.value(a.left_value(s));
        let mut rhs = 0.0;
        for &s in &grid {
            rhs += y_left(s) * (x.value(s) - x.left_value(s));
            rhs += x.value(s) * (y(s) - y_left(s));
        }
        x.value(t) * y(t) - x.value(0.0) * y(0.0) - rhs
    }

    #[test]
    fn simulated_paths_satisfy_identity() {
        let cp = LevyModel::compound_poisson(5.0, JumpLaw::Exponential { rate: 2.0 }).unwrap();
        let s = LevyModel::stable(0.5).unwrap();
        let k = fv_step(&[(1.0, 1.0)], 2.0);
        for stream in 0..30 {
            let xp = simulate_path(&cp, 1.0, 0.0, 11, stream).unwrap().to_monotone();
            let a = simulate_path(&s, 1.0, 1e-4, 12, stream).unwrap().to_monotone();
            let x = IntegratorPath::FiniteVariation(FiniteVariationFn::from_monotone(xp.clone()));
            let r = ibp_residual(&x, &a, &k, 1.0).unwrap();
            assert!(r.pass() && r.residual.abs() <= 1e-10, "{r:?}");
            let merged = merged_grid_residual(&xp, &a, &k, 1.0);
            assert!((merged - r.residual).abs() <= 1e-12);
        }
    }

    #[test]
    fn smooth_integrator_within_quadrature_budget() {
        let s = LevyModel::stable(0.5).unwrap();
        let a = simulate_path(&s, 1.0, 1e-4, 3, 0).unwrap().to_monotone();
        let k = min_with(2.0, 2.0);
        let x = IntegratorPath::Smooth { path: Arc::new(Polynomial::identity()), horizon: 1.0 };
        let r = ibp_residual(&x, &a, &k, 1.0).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn bilinearity() {
        let cp = LevyModel::compound_poisson(3.0, JumpLaw::Constant(0.5)).unwrap();
        let s = LevyModel::stable(0.5).unwrap();
        let xp = simulate_path(&cp, 1.0, 0.0, 1, 0).unwrap().to_monotone();
        let a = simulate_path(&s, 1.0, 1e-4, 2, 0).unwrap().to_monotone();
        let k = fv_step(&[(0.5, 1.0), (1.0, 0.5)], 2.0);
        let x = IntegratorPath::FiniteVariation(FiniteVariationFn::from_monotone(xp));
        let base = ibp_residual(&x, &a, &k, 1.0).unwrap().residual;
        for c in [2.0, 10.0, 0.1] {
            let rk = ibp_residual(&x, &a, &k.scaled(c).unwrap(), 1.0).unwrap().residual / c;
            let rx = ibp_residual(&x.scaled(c).unwrap(), &a, &k, 1.0).unwrap().residual / c;
            assert!((rk - base).abs() <= 1e-12 && (rx - base).abs() <= 1e-12, "c={c}");
        }
    }

    #[test]
    fn single_jump_product_rule() {
        // X_t k(A_t) - X_0 k(A_0) = k(A_0)(X_t - X_0) + X_t (k(A_t) - k(A_0))
        let a = MonotoneFn::step(&[(0.5, 1.5)], 1.0).unwrap();
        let k = min_with(1.0, 2.0);
        let x = IntegratorPath::Smooth { path: Arc::new(Polynomial::new(vec![1.0, 2.0])), horizon: 1.0 };
        let r = ibp_residual(&x, &a, &k, 1.0).unwrap();
        assert!(r.residual.abs() <= 1e-14, "{r:?}");
    }

    #[test]
    fn preconditions_are_distinct() {
        let x = IntegratorPath::Smooth { path: Arc::new(Polynomial::identity()), horizon: 1.0 };
        let creeping = MonotoneFn::identity(1.0).unwrap();
        let k = fv_step(&[(0.5, 1.0)], 2.0);
        let err = ibp_residual(&x, &creeping, &k, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("purely discontinuous")));
        let csv = ibp_csv(&[IbpResidual { residual: 0.0, budget: 1e-10 }]);
        assert!(csv.starts_with(IBP_CSV_HEADER));
    }
}
