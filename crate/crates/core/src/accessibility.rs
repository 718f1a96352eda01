//! Left-accessible levels of non-decreasing paths.
//!
//! A level `x` is left-accessible for `a` when `a(L(x)-) = x`, where
//! `L(x) = inf{t : a(t) >= x}`: the path creeps up to `x` rather than
//! jumping over it. Finite representations never do this exactly, so the
//! checks here take a tolerance and report it with every result.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::levy::{map_paths, LevyModel};
use crate::monotone::{MonotoneFn, EXHAUSTED};
use crate::stats::Moments;

/// Default depth of the dyadic grid used to probe continuous mass.
pub const DEFAULT_PROBE_DEPTH: u32 = 20;

/// `a(L(x)-) >= x - tol`.
///
/// Levels never reached give `false`, and so do levels already covered at
/// time 0: a path started at or above `x` never approaches it from below.
pub fn is_left_accessible(a: &MonotoneFn, x: f64, tol: f64) -> Result<bool> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("level must be > 0, got {x}")));
    }
    if !(tol >= 0.0) {
        return Err(Error::domain(format!("tolerance must be >= 0, got {tol}")));
    }
    let l = a.last_passage(x);
    if l == EXHAUSTED || l == 0.0 {
        return Ok(false);
    }
    Ok(a.left_value(l) >= x - tol)
}

/// Stieltjes `f`-mass of the levels that are `tol`-left-accessible for `a`.
pub fn accessible_mass(f: &MonotoneFn, a: &MonotoneFn, tol: f64) -> Result<f64> {
    accessible_mass_with_depth(f, a, tol, DEFAULT_PROBE_DEPTH)
}

/// As [`accessible_mass`]; atoms of `f` are checked exactly and its
/// continuous part on `2^depth` equal cells, each judged at its midpoint.
pub fn accessible_mass_with_depth(f: &MonotoneFn, a: &MonotoneFn, tol: f64, depth: u32) -> Result<f64> {
    if !(tol >= 0.0) {
        return Err(Error::domain(format!("tolerance must be >= 0, got {tol}")));
    }
    let mut mass = 0.0;
    for j in f.jumps() {
        if is_left_accessible(a, j.time, tol)? {
            mass += j.size;
        }
    }
    if f.knots().iter().any(|k| k.slope > 0.0) {
        let cells = 1u64 << depth;
        let width = f.horizon() / cells as f64;
        let mut prev = 0.0;
        for i in 0..cells {
            let right = if i + 1 == cells { f.horizon() } else { (i + 1) as f64 * width };
            let cont = f.continuous_part(right);
            let cell_mass = cont - prev;
            prev = cont;
            if cell_mass > 0.0 {
                let mid = (i as f64 + 0.5) * width;
                if is_left_accessible(a, mid, tol)? {
                    mass += cell_mass;
                }
            }
        }
    }
    Ok(mass)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessibilityRow {
    pub level: f64,
    pub tol: f64,
    pub n_paths: u64,
    pub prob: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityReport {
    pub model: LevyModel,
    pub horizon: f64,
    pub eps: f64,
    pub seed: u64,
    pub rows: Vec<AccessibilityRow>,
}

pub const ACCESSIBILITY_CSV_HEADER: &str = "level,tol,n_paths,prob,stderr";

impl AccessibilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# schema=accessibility/v1 model={} T={} eps={:e} seed={}\n{ACCESSIBILITY_CSV_HEADER}\n",
            self.model, self.horizon, self.eps, self.seed
        );
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{},{:.16e},{:.16e}", r.level, r.tol, r.n_paths, r.prob, r.stderr).unwrap();
        }
        out
    }
}

/// Fraction of simulated paths on `[0, horizon]` for which each level is
/// `tol`-left-accessible.
#[allow(clippy::too_many_arguments)]
pub fn estimate_accessibility_prob(
    model: &LevyModel,
    levels: &[f64],
    n_paths: u64,
    tol: f64,
    eps: f64,
    seed: u64,
    horizon: f64,
) -> Result<AccessibilityReport> {
    accessibility_scan(model, levels, &[tol], n_paths, eps, seed, horizon)
}

/// Every `(level, tol)` pair on one shared set of paths; rows are ordered
/// by level, then by tolerance as given.
pub fn accessibility_scan(
    model: &LevyModel,
    levels: &[f64],
    tols: &[f64],
    n_paths: u64,
    eps: f64,
    seed: u64,
    horizon: f64,
) -> Result<AccessibilityReport> {
    if n_paths == 0 {
        return Err(Error::domain("need at least one path"));
    }
    if let Some(&x) = levels.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::domain(format!("level must be > 0, got {x}")));
    }
    // paths miss on average this much mass from the jumps below eps; a
    // smaller tolerance cannot distinguish creeping from truncation
    let resolution = if eps == 0.0 { 0.0 } else { model.small_jump_bias(horizon, eps)? };
    if let Some(&tol) = tols.iter().find(|&&tol| !(tol >= resolution)) {
        return Err(Error::Precondition(format!(
            "tolerance {tol} is below the truncation resolution {resolution:e} at eps={eps:e}"
        )));
    }
    let hits = map_paths(model, horizon, eps, seed, n_paths, |p| {
        let a = p.to_monotone();
        levels
            .iter()
            .flat_map(|&x| tols.iter().map(move |&tol| (x, tol)))
            .map(|(x, tol)| is_left_accessible(&a, x, tol).unwrap_or(false))
            .collect::<Vec<bool>>()
    })?;
    let mut rows = Vec::with_capacity(levels.len() * tols.len());
    for (i, (x, tol)) in levels.iter().flat_map(|&x| tols.iter().map(move |&t| (x, t))).enumerate() {
        let m: Moments = hits.iter().map(|h| if h[i] { 1.0 } else { 0.0 }).collect();
        let prob = m.mean();
        rows.push(AccessibilityRow {
            level: x,
            tol,
            n_paths,
            prob,
            stderr: (prob * (1.0 - prob) / n_paths as f64).sqrt(),
        });
    }
    Ok(AccessibilityReport {
        model: *model,
        horizon,
        eps,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;
    use crate::staircase::StaircaseSpec;

    #[test]
    fn identity_reaches_levels_continuously() {
        let a = MonotoneFn::identity(1.0).unwrap();
        assert!(is_left_accessible(&a, 0.5, 0.0).unwrap());
        assert!(!is_left_accessible(&a, 1.5, 0.0).unwrap());
    }

    #[test]
    fn steps_are_never_accessible() {
        let a = MonotoneFn::step(&[(0.3, 1.0)], 1.0).unwrap();
        assert!(!is_left_accessible(&a, 0.5, 0.0).unwrap());
        assert!(!is_left_accessible(&a, 1.0, 0.0).unwrap());
        assert!(is_left_accessible(&a, 0.5, 0.5).unwrap());
        assert!(is_left_accessible(&a, 0.0, 0.0).is_err());
    }

    #[test]
    fn truncated_staircase_within_tail() {
        let spec = StaircaseSpec::default();
        let n = 12;
        let a = spec.build_truncated(n).unwrap();
        // t0 = 0.9 is not an atom
        let x = a.value(0.9) + (-(n as f64) - 1.0).exp2();
        assert!(is_left_accessible(&a, x, (-(n as f64)).exp2()).unwrap());
        assert!(!is_left_accessible(&a, x, 0.0).unwrap());
    }

    #[test]
    fn mass_examples() {
        let id = MonotoneFn::identity(1.0).unwrap();
        let f = MonotoneFn::step(&[(0.5, 2.0)], 10.0).unwrap();
        assert_eq!(accessible_mass(&f, &id, 0.0).unwrap(), 2.0);
        let far = MonotoneFn::step(&[(5.0, 2.0)], 10.0).unwrap();
        assert_eq!(accessible_mass(&far, &id, 0.0).unwrap(), 0.0);
        let path = MonotoneFn::step(&[(0.2, 0.4), (0.6, 0.7)], 1.0).unwrap();
        assert_eq!(accessible_mass(&f, &path, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn continuous_mass_on_grid() {
        // f = identity on [0, 2]; a reaches 1 continuously then jumps to 1.5
        let f = MonotoneFn::identity(2.0).unwrap();
        let a = MonotoneFn::new(
            0.0,
            vec![crate::monotone::Knot { time: 0.0, slope: 1.0 }, crate::monotone::Knot { time: 1.0, slope: 0.0 }],
            vec![crate::monotone::Jump { time: 1.5, size: 0.5 }],
            2.0,
        )
        .unwrap();
        let m = accessible_mass_with_depth(&f, &a, 0.0, 12).unwrap();
        assert!((m - 1.0).abs() < 1e-3, "{m}");
    }

    #[test]
    fn compound_poisson_never_accessible() {
        let cp = LevyModel::compound_poisson(1.0, JumpLaw::Constant(1.0)).unwrap();
        let r = estimate_accessibility_prob(&cp, &[0.5], 2000, 0.0, 0.0, 3, 1.0).unwrap();
        assert_eq!(r.rows[0].prob, 0.0);
        let far = estimate_accessibility_prob(&cp, &[1e6], 200, 0.0, 0.0, 3, 1.0).unwrap();
        assert_eq!(far.rows[0].prob, 0.0);
    }

    #[test]
    fn tolerance_below_resolution_is_rejected() {
        let s = LevyModel::stable(0.5).unwrap();
        let err = estimate_accessibility_prob(&s, &[1.0], 10, 1e-4, 1e-4, 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn scan_is_reproducible() {
        let g = LevyModel::gamma(1.0, 1.0).unwrap();
        let a = accessibility_scan(&g, &[0.5, 1.0], &[0.1, 0.01], 300, 1e-5, 17, 2.0).unwrap();
        let b = accessibility_scan(&g, &[0.5, 1.0], &[0.1, 0.01], 300, 1e-5, 17, 2.0).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for pair in a.rows.chunks(2) {
            assert!(pair[0].prob >= pair[1].prob);
        }
    }
}
