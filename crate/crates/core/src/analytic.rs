//! Closed-form steady-state overlap quantities for the M/M/1 queue.
//!
//! With arrival rate λ, service rate μ and gap g = μ − λ, the maximum and
//! minimum adjacent overlap times are each a mixture of an atom at zero and
//! an exponential with rate g:
//!
//! ```text
//! P(M  > t) = 2λ / (μ + λ)        · e^{-g t}
//! P(M* > t) = 2λ² / (μ (μ + λ))   · e^{-g t}
//! ```
//!
//! Transforms are Laplace–Stieltjes transforms `E[exp(-θ M)]`. The
//! `paper_*_transform` functions evaluate an alternative printed form that
//! integrates the tail instead of the density; they are kept only for side by
//! side reporting and do not equal 1 at θ = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the utilization λ/μ.
pub const DEFAULT_MAX_UTILIZATION: f64 = 0.999;

/// Largest moment order whose factorial is exact in an f64.
pub const MAX_MOMENT_ORDER: u32 = 20;

/// Arrival and service rates of a stable M/M/1 queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates")]
pub struct QueueParams {
    lambda: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct RawRates {
    lambda: f64,
    mu: f64,
}

impl TryFrom<RawRates> for QueueParams {
    type Error = Error;

    fn try_from(r: RawRates) -> Result<Self> {
        QueueParams::new(r.lambda, r.mu)
    }
}

impl QueueParams {
    /// Validates `0 < lambda < mu` with `lambda / mu <= 0.999`.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        Self::with_max_utilization(lambda, mu, DEFAULT_MAX_UTILIZATION)
    }

    pub fn with_max_utilization(lambda: f64, mu: f64, max_rho: f64) -> Result<Self> {
        let ok = lambda.is_finite()
            && mu.is_finite()
            && lambda > 0.0
            && lambda < mu
            && lambda / mu <= max_rho;
        if ok {
            Ok(QueueParams { lambda, mu })
        } else {
            Err(Error::Unstable {
                lambda,
                mu,
                max_rho,
            })
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn utilization(&self) -> f64 {
        self.lambda / self.mu
    }

    /// μ − λ, the decay rate shared by every tail below.
    pub fn gap(&self) -> f64 {
        self.mu - self.lambda
    }

    pub fn rate_sum(&self) -> f64 {
        self.mu + self.lambda
    }

    /// P(S < A) for S ~ Exp(μ), A ~ Exp(λ).
    pub fn prob_service_shorter(&self) -> f64 {
        self.mu / self.rate_sum()
    }

    /// P(S ≥ A).
    pub fn prob_service_longer(&self) -> f64 {
        self.lambda / self.rate_sum()
    }

    /// P(W > t) for the steady-state waiting time in queue.
    pub fn wait_tail(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.utilization() * (-self.gap() * t).exp())
    }

    /// Density of S − A at `z`: a two-sided exponential with left rate λ and
    /// right rate μ. Equals the Laplace density 0.5·e^{-|z|} when λ = μ = 1.
    pub fn diff_density(&self, z: f64) -> f64 {
        let peak = self.lambda * self.mu / self.rate_sum();
        if z < 0.0 {
            peak * (self.lambda * z).exp()
        } else {
            peak * (-self.mu * z).exp()
        }
    }

    /// P(M > 0) = 2λ / (μ + λ).
    pub fn max_coefficient(&self) -> f64 {
        2.0 * self.lambda / self.rate_sum()
    }

    /// P(M* > 0) = 2λ² / (μ (μ + λ)).
    pub fn min_coefficient(&self) -> f64 {
        2.0 * self.lambda * self.lambda / (self.mu * self.rate_sum())
    }

    pub fn max_tail(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.max_coefficient() * (-self.gap() * t).exp())
    }

    pub fn min_tail(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.min_coefficient() * (-self.gap() * t).exp())
    }

    /// P(M = 0) = (μ − λ)/(μ + λ), computed as `1 - max_coefficient` so the
    /// atom and the tail at zero sum to exactly one.
    pub fn max_atom_zero(&self) -> f64 {
        1.0 - self.max_coefficient()
    }

    pub fn min_atom_zero(&self) -> f64 {
        1.0 - self.min_coefficient()
    }

    /// E[M^p] = 2λ/(μ+λ) · p! / (μ−λ)^p for 1 ≤ p ≤ 20.
    pub fn max_moment(&self, p: u32) -> Result<f64> {
        Ok(self.max_coefficient() * exponential_moment(self.gap(), p)?)
    }

    pub fn min_moment(&self, p: u32) -> Result<f64> {
        Ok(self.min_coefficient() * exponential_moment(self.gap(), p)?)
    }

    /// Var[M] = 4λμ / ((λ+μ)² (μ−λ)²).
    pub fn max_variance(&self) -> f64 {
        let s = self.rate_sum();
        let g = self.gap();
        4.0 * self.lambda * self.mu / (s * s * g * g)
    }

    /// Var[M*] = c(2 − c)/(μ−λ)² with c the min tail coefficient.
    pub fn min_variance(&self) -> f64 {
        let c = self.min_coefficient();
        let g = self.gap();
        c * (2.0 - c) / (g * g)
    }

    /// E[exp(-θ M)] = (1 − c) + c·g/(g + θ) with c = 2λ/(μ+λ).
    pub fn max_transform(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(atom_plus_exponential_lst(self.max_coefficient(), self.gap(), theta))
    }

    /// E[exp(-θ M*)] = (1 − c) + c·g/(g + θ) with c = 2λ²/(μ(μ+λ)).
    pub fn min_transform(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(atom_plus_exponential_lst(self.min_coefficient(), self.gap(), theta))
    }

    /// Printed variant (μ−λ)/(μ+λ) + 2λ/((μ+λ)(μ+θ−λ)); not normalized.
    pub fn paper_max_transform(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        let s = self.rate_sum();
        Ok(self.gap() / s + 2.0 * self.lambda / (s * (self.gap() + theta)))
    }

    /// Printed variant (1 − c) + c/(μ+θ−λ) with c = 2λ²/(μ(μ+λ)); not normalized.
    pub fn paper_min_transform(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        let c = self.min_coefficient();
        Ok((1.0 - c) + c / (self.gap() + theta))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "transform argument must be >= 0, got {theta}"
        )))
    }
}

fn atom_plus_exponential_lst(c: f64, g: f64, theta: f64) -> f64 {
    (1.0 - c) + c * (g / (g + theta))
}

/// p!/rate^p, the p-th moment of Exp(rate).
fn exponential_moment(rate: f64, p: u32) -> Result<f64> {
    if p == 0 || p > MAX_MOMENT_ORDER {
        return Err(Error::InvalidArgument(format!(
            "moment order must be in 1..={MAX_MOMENT_ORDER}, got {p}"
        )));
    }
    Ok(factorial(p) / rate.powi(p as i32))
}

/// n! in f64; exact for n ≤ 20.
pub fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Points (t, P(X > t)) with t increasing and p non-increasing in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    points: Vec<(f64, f64)>,
}

impl TailCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Inconsistent("tail curve times must increase".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Inconsistent(format!(
                    "tail curve increases between t={} and t={}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(t, p)) = points.iter().find(|(t, p)| *t < 0.0 || !(0.0..=1.0).contains(p)) {
            return Err(Error::Inconsistent(format!(
                "tail curve point ({t}, {p}) out of range"
            )));
        }
        Ok(TailCurve { points })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn<F>(grid: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let points = grid
            .iter()
            .map(|&t| f(t).map(|p| (t, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// `n` evenly spaced points covering `[0, upper]`.
pub fn uniform_grid(upper: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| upper * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(l: f64, m: f64) -> QueueParams {
        QueueParams::new(l, m).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stability_guard() {
        assert!(QueueParams::new(1.0, 1.0).is_err());
        assert!(QueueParams::new(1.2, 1.0).is_err());
        assert!(QueueParams::new(0.0, 1.0).is_err());
        assert!(QueueParams::new(0.9995, 1.0).is_err());
        assert!(QueueParams::with_max_utilization(0.9995, 1.0, 0.9999).is_ok());
        assert!(QueueParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn wait_tail_values() {
        assert!(close(q(0.8, 1.0).wait_tail(0.0).unwrap(), 0.8, 1e-15));
        assert!(close(q(0.5, 1.0).wait_tail(2.0).unwrap(), 0.5 * (-1.0f64).exp(), 1e-15));
        assert_eq!(q(0.5, 1.0).wait_tail(f64::INFINITY).unwrap(), 0.0);
        assert!(q(0.5, 1.0).wait_tail(-1e-9).is_err());
    }

    #[test]
    fn diff_density_values() {
        let eq = QueueParams::with_max_utilization(1.0 - 1e-12, 1.0, 1.0).unwrap();
        for z in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert!(close(eq.diff_density(z), 0.5 * (-z.abs()).exp(), 1e-11));
        }
        let p = q(0.5, 1.0);
        assert!(close(p.diff_density(0.0), 1.0 / 3.0, 1e-15));
        assert!(close(p.diff_density(-1e-12), p.diff_density(0.0), 1e-12));
    }

    #[test]
    fn diff_density_matches_convolution() {
        // f_{S-A}(z) = ∫ f_S(z + a) f_A(a) da over a ≥ max(0, -z), by midpoint rule
        let p = q(0.5, 1.0);
        for z in [-2.0, -0.3, 0.0, 0.4, 1.5] {
            let lo = f64::max(0.0, -z);
            let n = 400_000;
            let h = 60.0 / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let a = lo + (i as f64 + 0.5) * h;
                let s = z + a;
                acc += p.mu() * (-p.mu() * s).exp() * p.lambda() * (-p.lambda() * a).exp() * h;
            }
            assert!(close(acc, p.diff_density(z), 1e-8), "z={z}: {acc} vs {}", p.diff_density(z));
        }
    }

    #[test]
    fn max_tail_values() {
        assert!(close(q(0.8, 1.0).max_tail(0.0).unwrap(), 1.6 / 1.8, 1e-15));
        assert!(close(q(0.5, 1.0).max_tail(2.0).unwrap(), 2.0 / 3.0 * (-1.0f64).exp(), 1e-15));
        assert!(q(1e-9, 1.0).max_tail(0.0).unwrap() < 1e-8);
        assert!(q(0.5, 1.0).max_tail(-1.0).is_err());
    }

    #[test]
    fn atoms() {
        assert!(close(q(0.8, 1.0).max_atom_zero(), 0.2 / 1.8, 1e-15));
        assert!(close(q(0.5, 1.0).max_atom_zero(), 1.0 / 3.0, 1e-15));
        let heavy = QueueParams::with_max_utilization(1.0 - 1e-9, 1.0, 1.0).unwrap();
        assert!(heavy.max_atom_zero() < 1e-9);
        let p = q(0.3, 1.7);
        assert!(close(p.max_atom_zero(), p.gap() / p.rate_sum(), 1e-15));
        assert_eq!(p.max_atom_zero() + p.max_tail(0.0).unwrap(), 1.0);
    }

    #[test]
    fn moments() {
        let p = q(0.5, 1.0);
        assert!(close(p.max_moment(1).unwrap(), 4.0 / 3.0, 1e-14));
        assert!(close(p.max_moment(2).unwrap(), 16.0 / 3.0, 1e-14));
        assert!(close(p.min_moment(1).unwrap(), 2.0 / 3.0, 1e-14));
        assert!(close(q(0.8, 1.0).min_moment(1).unwrap(), 32.0 / 9.0, 1e-12));
        assert!(p.max_moment(0).is_err());
        assert!(p.max_moment(21).is_err());
        assert!(p.max_moment(20).unwrap().is_finite());
        assert_eq!(factorial(20), 2_432_902_008_176_640_000u64 as f64);
        for k in 1..=20 {
            assert!(p.min_moment(k).unwrap() <= p.max_moment(k).unwrap());
        }
    }

    #[test]
    fn variances() {
        let p = q(0.5, 1.0);
        assert!(close(p.max_variance(), 4.0 * 0.5 / (2.25 * 0.25), 1e-12));
        assert!(close(q(0.8, 1.0).max_variance(), 3.2 / (3.24 * 0.04), 1e-10));
        let combo = p.max_moment(2).unwrap() - p.max_moment(1).unwrap().powi(2);
        assert!(((p.max_variance() - combo) / combo).abs() < 1e-12);
        let mcombo = p.min_moment(2).unwrap() - p.min_moment(1).unwrap().powi(2);
        assert!(((p.min_variance() - mcombo) / mcombo).abs() < 1e-12);
        // time² scales as 1/rate²
        let c = 3.7;
        let scaled = q(0.5 * c, c);
        assert!(((scaled.max_variance() * c * c - p.max_variance()) / p.max_variance()).abs() < 1e-12);
    }

    #[test]
    fn transforms() {
        let p = q(0.5, 1.0);
        assert_eq!(p.max_transform(0.0).unwrap(), 1.0);
        assert_eq!(p.min_transform(0.0).unwrap(), 1.0);
        assert!(close(p.max_transform(0.5).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(close(p.min_transform(0.5).unwrap(), 5.0 / 6.0, 1e-15));
        assert!(close(q(0.8, 1.0).max_transform(1e15).unwrap(), 1.0 / 9.0, 1e-12));
        assert!(close(p.min_transform(1e15).unwrap(), 2.0 / 3.0, 1e-12));
        assert!(p.max_transform(-0.1).is_err());
        let mut prev = 1.0;
        for i in 0..100 {
            let v = p.max_transform(i as f64 * 0.1).unwrap();
            assert!(v <= prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn printed_transforms_are_not_normalized() {
        let p = q(0.5, 1.0);
        // (1/3) + 1/(1.5·0.5) = 5/3
        assert!(close(p.paper_max_transform(0.0).unwrap(), 5.0 / 3.0, 1e-15));
        // 2/3 + (1/3)/0.5 = 4/3
        assert!(close(p.paper_min_transform(0.0).unwrap(), 4.0 / 3.0, 1e-15));
    }

    #[test]
    fn tail_curve_invariants() {
        let p = q(0.5, 1.0);
        let grid = uniform_grid(10.0 / p.gap(), 200);
        let c = TailCurve::from_fn(&grid, |t| p.max_tail(t)).unwrap();
        assert_eq!(c.len(), 200);
        assert!(TailCurve::new(vec![(0.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(TailCurve::new(vec![(0.0, 1.5)]).is_err());
        assert!(TailCurve::new(vec![(1.0, 0.5), (0.5, 0.4)]).is_err());
    }
}
