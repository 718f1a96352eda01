//! Driftless subordinators described by their Lévy measure, and exact
//! simulation of their jumps above a truncation level.
//!
//! A path on `[0, T]` is the Poisson point process of jumps `(time, size)`
//! with intensity `dt ⊗ Π(dy)` restricted to sizes `> eps`. The size axis is
//! cut into the fixed dyadic bands `(1, ∞)`, `(1/2, 1]`, `(1/4, 1/2]`, ...
//! and each band is sampled from its own counter-based random stream keyed by
//! `(seed, band)` and positioned at `stream`. A path at truncation `eps`
//! keeps every band point with size `> eps`, so paths sharing a seed are
//! nested: lowering `eps` only adds jumps.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::monotone::{Jump, MonotoneFn};
use crate::quadrature::{self, Quadrature};
use crate::special::{exp_integral_e1, gamma, inverse_exp_integral_e1};

/// Number of dyadic bands below size 1. Infinite-measure models need
/// `eps >= 2^-MAX_BAND`.
pub const MAX_BAND: u32 = 64;

/// Jump-size law of a compound Poisson subordinator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    /// Every jump has the same size.
    Constant(f64),
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyModel {
    /// Lévy density `α/Γ(1-α) y^{-1-α}`, Laplace exponent `λ^α`.
    Stable { alpha: f64 },
    /// Lévy density `a y^{-1} e^{-b y}`, Laplace exponent `a ln(1 + λ/b)`.
    Gamma { shape: f64, rate: f64 },
    /// Finite Lévy measure `rate · law`.
    CompoundPoisson { rate: f64, law: JumpLaw },
}

impl LevyModel {
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("stable index must lie in (0, 1), got {alpha}")));
        }
        Ok(LevyModel::Stable { alpha })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::domain("gamma subordinator needs shape > 0 and rate > 0"));
        }
        Ok(LevyModel::Gamma { shape, rate })
    }

    pub fn compound_poisson(rate: f64, law: JumpLaw) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain("compound Poisson rate must be positive"));
        }
        match law {
            JumpLaw::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::domain("constant jump size must be positive"))
            }
            JumpLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return Err(Error::domain("exponential jump rate must be positive"))
            }
            _ => {}
        }
        Ok(LevyModel::CompoundPoisson { rate, law })
    }

    /// Stable and gamma subordinators have infinite Lévy measure and no
    /// drift, so single points are polar for them. Compound Poisson does not
    /// qualify.
    pub fn has_infinite_measure(&self) -> bool {
        !matches!(self, LevyModel::CompoundPoisson { .. })
    }

    /// `Π((y, ∞))` for `y > 0`.
    pub fn tail(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("Lévy tail needs y > 0, got {y}")));
        }
        Ok(self.tail_unchecked(y))
    }

    /// `Π((y, ∞))`, infinite at `y <= 0` for infinite-measure models.
    pub(crate) fn tail_unchecked(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 0.0;
        }
        match *self {
            LevyModel::Stable { alpha } => {
                if y <= 0.0 {
                    f64::INFINITY
                } else {
                    y.powf(-alpha) / gamma(1.0 - alpha)
                }
            }
            LevyModel::Gamma { shape, rate } => {
                if y <= 0.0 {
                    f64::INFINITY
                } else {
                    shape * exp_integral_e1(rate * y)
                }
            }
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(c) => {
                    if y < c {
                        rate
                    } else {
                        0.0
                    }
                }
                JumpLaw::Exponential { rate: mu } => rate * (-mu * y.max(0.0)).exp(),
            },
        }
    }

    /// `Π([y, ∞))`, which differs from [`tail`](Self::tail) only at atoms
    /// of the Lévy measure.
    pub fn tail_closed(&self, y: f64) -> f64 {
        match *self {
            LevyModel::CompoundPoisson {
                rate,
                law: JumpLaw::Constant(c),
            } => {
                if y <= c {
                    rate
                } else {
                    0.0
                }
            }
            _ => self.tail_unchecked(y),
        }
    }

    /// `∫_(0,ε] (1 - e^{-λy}) Π(dy)`, the part of `Φ(λ)` lost by truncating
    /// at `eps`, computed without cancellation.
    pub fn small_jump_laplace(&self, lam: f64, eps: f64) -> Result<Quadrature> {
        if !(lam >= 0.0 && eps >= 0.0) {
            return Err(Error::domain("small-jump Laplace part needs lam >= 0, eps >= 0"));
        }
        if lam == 0.0 || eps == 0.0 {
            return Ok(Quadrature { value: 0.0, error: 0.0 });
        }
        if let LevyModel::CompoundPoisson { law: JumpLaw::Constant(c), rate } = *self {
            let value = if c <= eps { -rate * (-lam * c).exp_m1() } else { 0.0 };
            return Ok(Quadrature { value, error: 0.0 });
        }
        // below y0 the integrand is at most λ·y Π(dy)
        let y0 = self.negligible_small_level(1e-18 / lam, eps);
        let q = quadrature::integrate(
            |u: f64| {
                let y = u.exp();
                -(-lam * y).exp_m1() * self.density(y) * y
            },
            y0.ln(),
            eps.ln(),
            1e-18,
            1e-12,
        )?;
        let rest = lam * self.small_jump_bias(1.0, y0)?;
        Ok(Quadrature {
            value: q.value + 0.5 * rest,
            error: q.error + 0.5 * rest,
        })
    }

    /// A level `y0 <= start` with `∫_(0,y0] y Π(dy) <= target`.
    pub(crate) fn negligible_small_level(&self, target: f64, start: f64) -> f64 {
        let mut y = start;
        for _ in 0..400 {
            if self.small_jump_bias(1.0, y).map_or(true, |b| b <= target) {
                break;
            }
            y *= 0.125;
        }
        y
    }

    /// `∫_0^u Π((v, ∞)) dv = ∫ min(y, u) Π(dy)`, finite for every model here.
    pub fn integrated_tail(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match *self {
            LevyModel::Stable { alpha } => u.powf(1.0 - alpha) / ((1.0 - alpha) * gamma(1.0 - alpha)),
            LevyModel::Gamma { shape, rate } => {
                // ∫_0^z E1(w) dw = z E1(z) - e^{-z} + 1
                if u == f64::INFINITY {
                    return f64::INFINITY;
                }
                let z = rate * u;
                shape * (z * exp_integral_e1(z) - (-z).exp_m1()) / rate
            }
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(c) => rate * u.min(c),
                JumpLaw::Exponential { rate: mu } => -rate * (-mu * u).exp_m1() / mu,
            },
        }
    }

    /// Laplace exponent `Φ(λ) = ∫ (1 - e^{-λy}) Π(dy)` in closed form.
    pub fn laplace_exponent(&self, lam: f64) -> Result<f64> {
        if !(lam >= 0.0) {
            return Err(Error::domain(format!("Laplace argument must be >= 0, got {lam}")));
        }
        Ok(match *self {
            LevyModel::Stable { alpha } => lam.powf(alpha),
            LevyModel::Gamma { shape, rate } => shape * (lam / rate).ln_1p(),
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(c) => -rate * (-lam * c).exp_m1(),
                JumpLaw::Exponential { rate: mu } => rate * lam / (mu + lam),
            },
        })
    }

    /// `Φ_ε(λ) = ∫_(ε,∞) (1 - e^{-λy}) Π(dy)`, the Laplace exponent of the
    /// process truncated below `eps`. Computed by quadrature for the
    /// infinite-measure models; this is an independent route from the
    /// closed-form `Φ`.
    pub fn truncated_laplace_exponent(&self, lam: f64, eps: f64) -> Result<Quadrature> {
        if !(lam >= 0.0 && eps >= 0.0) {
            return Err(Error::domain("truncated Laplace exponent needs lam >= 0, eps >= 0"));
        }
        if lam == 0.0 {
            return Ok(Quadrature { value: 0.0, error: 0.0 });
        }
        match *self {
            LevyModel::CompoundPoisson { rate, law } => {
                let value = match law {
                    JumpLaw::Constant(c) => {
                        if c > eps {
                            -rate * (-lam * c).exp_m1()
                        } else {
                            0.0
                        }
                    }
                    JumpLaw::Exponential { rate: mu } => {
                        rate * ((-mu * eps).exp() - mu / (mu + lam) * (-(mu + lam) * eps).exp())
                    }
                };
                Ok(Quadrature { value, error: 0.0 })
            }
            _ => {
                if !(eps > 0.0) {
                    return Err(Error::domain("eps must be > 0 for an infinite Lévy measure"));
                }
                let upper = self.negligible_tail_level(1e-16);
                let density = |y: f64| self.density(y);
                // substitute y = e^u to tame the y^{-1-α} behaviour
                let integrand = |u: f64| {
                    let y = u.exp();
                    -(-lam * y).exp_m1() * density(y) * y
                };
                let q = quadrature::integrate(integrand, eps.ln(), upper.ln(), 1e-15, 1e-13)?;
                // ∫_upper^∞ (1 - e^{-λy}) Π(dy) = tail(upper) up to e^{-λ upper}
                let tail = self.tail_unchecked(upper);
                let remainder = tail * (-lam * upper).exp();
                Ok(Quadrature {
                    value: q.value + tail,
                    error: q.error + remainder,
                })
            }
        }
    }

    /// Lévy density for the absolutely continuous models.
    pub(crate) fn density(&self, y: f64) -> f64 {
        match *self {
            LevyModel::Stable { alpha } => alpha / gamma(1.0 - alpha) * y.powf(-1.0 - alpha),
            LevyModel::Gamma { shape, rate } => shape * (-rate * y).exp() / y,
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(_) => 0.0,
                JumpLaw::Exponential { rate: mu } => rate * mu * (-mu * y).exp(),
            },
        }
    }

    /// A level `Y` with `Π((Y, ∞)) <= target`.
    pub(crate) fn negligible_tail_level(&self, target: f64) -> f64 {
        match *self {
            LevyModel::Stable { alpha } => (target * gamma(1.0 - alpha)).powf(-1.0 / alpha),
            _ => {
                let mut y = 1.0;
                while self.tail_unchecked(y) > target {
                    y *= 2.0;
                }
                y
            }
        }
    }

    /// Expected total size of the jumps at most `eps` over `[0, T]`:
    /// `T ∫_(0,ε] y Π(dy)`.
    pub fn small_jump_bias(&self, horizon: f64, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::domain(format!("eps must be > 0, got {eps}")));
        }
        let per_time = match *self {
            LevyModel::Stable { alpha } => alpha * eps.powf(1.0 - alpha) / (gamma(1.0 - alpha) * (1.0 - alpha)),
            LevyModel::Gamma { shape, rate } => -shape * (-rate * eps).exp_m1() / rate,
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(c) => {
                    if c <= eps {
                        rate * c
                    } else {
                        0.0
                    }
                }
                JumpLaw::Exponential { rate: mu } => {
                    let x = mu * eps;
                    rate * (-(-x).exp_m1() - x * (-x).exp()) / mu
                }
            },
        };
        Ok(horizon * per_time)
    }

    /// Size `y` in `(lo, hi]` with `Π((y, ∞)) = Π((hi, ∞)) + u·Π((lo, hi])`,
    /// i.e. the inverse CDF of the size law conditioned on the band.
    /// Inverse-tail sampler for sizes in `(lo, hi]`, fed uniforms on `[0, 1)`.
    fn band_sampler(&self, lo: f64, hi: f64) -> impl Fn(f64) -> f64 + '_ {
        let tail_hi = self.tail_unchecked(hi);
        let tail_lo = self.tail_unchecked(lo);
        let stable_scale = match *self {
            LevyModel::Stable { alpha } => gamma(1.0 - alpha),
            _ => 1.0,
        };
        move |u| {
            let target = tail_hi + u * (tail_lo - tail_hi);
            let y = match *self {
                LevyModel::Stable { alpha } => (target * stable_scale).powf(-1.0 / alpha),
                LevyModel::Gamma { shape, rate } => inverse_exp_integral_e1(target / shape, 1e-12) / rate,
                LevyModel::CompoundPoisson { rate, law } => match law {
                    JumpLaw::Constant(c) => c,
                    JumpLaw::Exponential { rate: mu } => -(target / rate).ln() / mu,
                },
            };
            // rounding in the inversion must not leave the band
            if y <= lo {
                lo.next_up()
            } else {
                y.min(hi)
            }
        }
    }

    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for LevyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyModel::Stable { alpha } => write!(f, "stable(alpha={alpha})"),
            LevyModel::Gamma { shape, rate } => write!(f, "gamma(shape={shape};rate={rate})"),
            LevyModel::CompoundPoisson { rate, law } => match law {
                JumpLaw::Constant(c) => write!(f, "compound_poisson(rate={rate};constant={c})"),
                JumpLaw::Exponential { rate: mu } => write!(f, "compound_poisson(rate={rate};exponential={mu})"),
            },
        }
    }
}

/// Lower and upper size edges of `band`.
fn band_edges(band: u32) -> (f64, f64) {
    match band {
        0 => (1.0, f64::INFINITY),
        b if b <= MAX_BAND => ((-(b as f64)).exp2(), (-(b as f64) + 1.0).exp2()),
        _ => (0.0, (-(MAX_BAND as f64)).exp2()),
    }
}

fn band_rng(seed: u64, band: u32, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&band.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// One simulated trajectory: the jumps of size `> eps` on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRealization {
    pub model: LevyModel,
    pub horizon: f64,
    pub eps: f64,
    pub seed: u64,
    pub stream: u64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl PathRealization {
    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    /// `S_T`.
    pub fn terminal_value(&self) -> f64 {
        self.sizes.iter().sum()
    }

    /// Pure-step monotone function `t ↦ S_t` on `[0, horizon]`.
    pub fn to_monotone(&self) -> MonotoneFn {
        let jumps = self
            .times
            .iter()
            .zip(&self.sizes)
            .map(|(&time, &size)| Jump { time, size })
            .collect();
        MonotoneFn::new(0.0, Vec::new(), jumps, self.horizon).expect("simulated path is a valid step function")
    }

    /// CSV dump: a versioned header line with the model and run parameters,
    /// a column header, then `time,size` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# schema=path/v1 model={} T={} eps={:e} seed={} stream={}\ntime,size\n",
            self.model, self.horizon, self.eps, self.seed, self.stream
        );
        for (t, s) in self.times.iter().zip(&self.sizes) {
            writeln!(out, "{t:.16e},{s:.16e}").unwrap();
        }
        out
    }
}

/// Simulates the jumps of size `> eps` of `model` on `(0, horizon]`.
///
/// Deterministic in `(seed, stream)`. `eps = 0` is allowed only for finite
/// Lévy measures.
pub fn simulate_path(model: &LevyModel, horizon: f64, eps: f64, seed: u64, stream: u64) -> Result<PathRealization> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::domain(format!("eps must be >= 0, got {eps}")));
    }
    if model.has_infinite_measure() && eps < band_edges(MAX_BAND).0 {
        return Err(Error::domain(format!(
            "Π((eps, ∞)) is not finite for {model} at eps = {eps}; need eps >= 2^-{MAX_BAND}"
        )));
    }
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    for band in 0..=MAX_BAND + 1 {
        let (lo, hi) = band_edges(band);
        if hi <= eps {
            break;
        }
        let mass = model.tail_unchecked(lo) - model.tail_unchecked(hi);
        if !(mass > 0.0) {
            continue;
        }
        let mut rng = band_rng(seed, band, stream);
        let sample = model.band_sampler(lo, hi);
        let count = Poisson::new(horizon * mass)
            .map_err(|e| Error::domain(format!("Poisson mean {}: {e}", horizon * mass)))?
            .sample(&mut rng) as u64;
        for _ in 0..count {
            let time = horizon * (1.0 - rng.random::<f64>());
            let size = sample(rng.random::<f64>());
            if size > eps {
                jumps.push((time, size));
            }
        }
    }
    jumps.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut times: Vec<f64> = Vec::with_capacity(jumps.len());
    let mut sizes: Vec<f64> = Vec::with_capacity(jumps.len());
    for (t, s) in jumps {
        if times.last() == Some(&t) {
            *sizes.last_mut().unwrap() += s;
        } else {
            times.push(t);
            sizes.push(s);
        }
    }
    Ok(PathRealization {
        model: *model,
        horizon,
        eps,
        seed,
        stream,
        times,
        sizes,
    })
}

/// Applies `stat` to paths with streams `0..n_paths` and returns the results
/// in stream order, independent of the worker count.
pub fn map_paths<R, F>(
    model: &LevyModel,
    horizon: f64,
    eps: f64,
    seed: u64,
    n_paths: u64,
    stat: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&PathRealization) -> R + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|stream| simulate_path(model, horizon, eps, seed, stream).map(|p| stat(&p)))
        .collect()
}
