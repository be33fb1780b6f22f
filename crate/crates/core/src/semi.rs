//! Overlap tails by numerical convolution.
//!
//! Given the steady-state waiting-time tail `P(W > t)` and the density of a
//! service time minus an independent interarrival time `D = S - A`, the max
//! and min adjacent overlaps `W + D^+` and `min(W, (W + D)^+)` have tails
//!
//! ```text
//! P(M  > t) = P(W > t)·P(D < 0)  + ∫_0^t P(W > t-x) f(x) dx + ∫_t^∞ f(x) dx
//! P(M* > t) = P(W > t)·P(D ≥ 0)  + ∫_{-∞}^0 P(W > t-x) f(x) dx
//! ```
//!
//! Infinite ranges are cut where the integrand bound drops below
//! [`TRUNCATION_LEVEL`], using the decay-rate hints carried by the inputs.

use crate::analytic::{factorial, QueueParams};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

pub const TRUNCATION_LEVEL: f64 = 1e-12;
pub const QUAD_ABS_TOL: f64 = 1e-8;
/// Allowed relative mismatch between a supplied sign probability and the
/// mass the density puts on that side.
pub const SIGN_MASS_TOLERANCE: f64 = 1e-4;

type Callable<'a> = Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>;

/// A tail function `t ↦ P(X > t)` on `t ≥ 0`.
pub struct TailFunction<'a> {
    f: Callable<'a>,
    domain_hint: f64,
    decay_rate: Option<f64>,
}

impl<'a> TailFunction<'a> {
    /// `domain_hint` is the scale beyond which the tail is small.
    pub fn new<F>(f: F, domain_hint: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'a,
    {
        TailFunction {
            f: Box::new(f),
            domain_hint,
            decay_rate: None,
        }
    }

    /// Declares that the tail decays at least like `exp(-rate t)` past the hint.
    pub fn with_decay(mut self, rate: f64) -> Self {
        self.decay_rate = Some(rate);
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn domain_hint(&self) -> f64 {
        self.domain_hint
    }

    pub fn decay_rate(&self) -> Option<f64> {
        self.decay_rate
    }
}

/// The M/M/1 waiting-time tail.
pub fn mm1_wait_tail(q: QueueParams) -> TailFunction<'static> {
    TailFunction::new(move |t| q.utilization() * (-q.gap() * t).exp(), 10.0 / q.gap()).with_decay(q.gap())
}

/// A probability density on the real line.
pub struct SignedDensity<'a> {
    f: Callable<'a>,
    negative_decay: f64,
    positive_decay: f64,
    support: Option<(f64, f64)>,
}

impl<'a> SignedDensity<'a> {
    /// `negative_decay` and `positive_decay` bound how fast the density falls
    /// off towards −∞ and +∞.
    pub fn new<F>(f: F, negative_decay: f64, positive_decay: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'a,
    {
        for r in [negative_decay, positive_decay] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("decay rates must be > 0, got {r}")));
            }
        }
        Ok(SignedDensity {
            f: Box::new(f),
            negative_decay,
            positive_decay,
            support: None,
        })
    }

    /// Restricts integration to a known bounded support.
    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.f)(z)
    }

    pub fn positive_decay(&self) -> f64 {
        self.positive_decay
    }

    /// Integration limits outside which the density is below the truncation level.
    pub fn horizon(&self) -> (f64, f64) {
        if let Some(s) = self.support {
            return s;
        }
        let left = 5.0 / self.negative_decay;
        let right = 5.0 / self.positive_decay;
        let peak = (0..=200)
            .map(|i| -left + (left + right) * i as f64 / 200.0)
            .map(|z| self.eval(z))
            .fold(1.0f64, f64::max);
        let cut = |rate: f64| (peak / TRUNCATION_LEVEL).ln() / rate;
        (-cut(self.negative_decay), cut(self.positive_decay))
    }

    fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        quad(|z| self.eval(z), lo, hi, &[0.0])
    }
}

/// Density of S − A for S ~ Exp(μ), A ~ Exp(λ).
pub fn mm1_diff_density(q: QueueParams) -> SignedDensity<'static> {
    SignedDensity::new(move |z| q.diff_density(z), q.lambda(), q.mu()).expect("rates are positive")
}

fn quad<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: QUAD_ABS_TOL,
        ..QuadOptions::default()
    };
    Ok(integrate(f, lo, hi, breaks, opts)?.value)
}

fn check_inputs(t: f64, p: f64, name: &str) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{name} must be a probability, got {p}")));
    }
    Ok(())
}

fn check_sign_mass(expected: f64, mass: f64, name: &str) -> Result<()> {
    if (mass - expected).abs() > SIGN_MASS_TOLERANCE * expected.max(1e-6) {
        return Err(Error::Inconsistent(format!(
            "{name} = {expected} but the density puts mass {mass} on that side"
        )));
    }
    Ok(())
}

/// P(M > t) where `p_lt = P(S < A)`.
pub fn max_tail_numeric(wait: &TailFunction, diff: &SignedDensity, p_lt: f64, t: f64) -> Result<f64> {
    check_inputs(t, p_lt, "p_lt")?;
    let (lo, hi) = diff.horizon();
    check_sign_mass(p_lt, diff.mass(lo.min(0.0), 0.0)?, "p_lt")?;

    let within = if t > 0.0 {
        quad(|x| wait.eval(t - x) * diff.eval(x), 0.0, t.min(hi.max(0.0)), &[])?
    } else {
        0.0
    };
    let beyond = if hi > t { quad(|x| diff.eval(x), t, hi, &[])? } else { 0.0 };
    Ok((wait.eval(t) * p_lt + within + beyond).clamp(0.0, 1.0))
}

/// P(M* > t) where `p_ge = P(S ≥ A)`.
pub fn min_tail_numeric(wait: &TailFunction, diff: &SignedDensity, p_ge: f64, t: f64) -> Result<f64> {
    check_inputs(t, p_ge, "p_ge")?;
    let (lo, hi) = diff.horizon();
    check_sign_mass(p_ge, diff.mass(0.0, hi.max(0.0))?, "p_ge")?;

    let below = if lo < 0.0 {
        quad(|x| wait.eval(t - x) * diff.eval(x), lo, 0.0, &[])?
    } else {
        0.0
    };
    Ok((wait.eval(t) * p_ge + below).clamp(0.0, 1.0))
}

/// The numerical max-overlap tail as a [`TailFunction`]. Evaluation failures
/// surface as NaN, which any quadrature over it rejects.
pub fn max_tail_function<'a>(
    wait: &'a TailFunction<'a>,
    diff: &'a SignedDensity<'a>,
    p_lt: f64,
) -> TailFunction<'a> {
    let decay = wait.decay_rate().map(|r| r.min(diff.positive_decay()));
    let tf = TailFunction::new(
        move |t| max_tail_numeric(wait, diff, p_lt, t).unwrap_or(f64::NAN),
        wait.domain_hint(),
    );
    match decay {
        Some(r) => tf.with_decay(r),
        None => tf,
    }
}

/// As [`max_tail_function`] for the min overlap.
pub fn min_tail_function<'a>(
    wait: &'a TailFunction<'a>,
    diff: &'a SignedDensity<'a>,
    p_ge: f64,
) -> TailFunction<'a> {
    let tf = TailFunction::new(
        move |t| min_tail_numeric(wait, diff, p_ge, t).unwrap_or(f64::NAN),
        wait.domain_hint(),
    );
    match wait.decay_rate() {
        Some(r) => tf.with_decay(r),
        None => tf,
    }
}

/// E[X^p] = ∫_0^∞ p t^{p-1} P(X > t) dt for p in 1..=3.
///
/// The integral runs to a horizon where the integrand falls below the
/// truncation level; the rest is added in closed form assuming the tail
/// decays exponentially at the declared rate from there on.
pub fn tail_to_moments(tail: &TailFunction, p: u32) -> Result<f64> {
    if !(1..=3).contains(&p) {
        return Err(Error::InvalidArgument(format!("moment order must be 1..=3, got {p}")));
    }
    let rate = tail.decay_rate().ok_or_else(|| {
        Error::InvalidArgument("tail has no decay-rate hint; moment integral may diverge".into())
    })?;
    let pf = p as f64;
    let integrand = |t: f64| pf * t.powi(p as i32 - 1) * tail.eval(t);

    let mut horizon = tail.domain_hint().max(1.0 / rate);
    let limit = horizon * 1e4;
    while integrand(horizon) > TRUNCATION_LEVEL {
        horizon *= 2.0;
        if horizon > limit {
            return Err(Error::Inconsistent(format!(
                "tail does not decay below {TRUNCATION_LEVEL:e} before t = {limit}"
            )));
        }
    }
    let hint = tail.domain_hint();
    let body = quad(integrand, 0.0, horizon, &[hint / 4.0, hint / 2.0, hint])?;

    // ∫_H^∞ p t^{p-1} e^{-r(t-H)} dt = p!/r^p · Σ_{k<p} (rH)^k / k!
    let rh = rate * horizon;
    let series: f64 = (0..p).map(|k| rh.powi(k as i32) / factorial(k)).sum();
    let remainder = tail.eval(horizon) * factorial(p) / rate.powi(p as i32) * series;
    Ok(body + remainder)
}
