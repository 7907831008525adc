//! Closed-form radial solutions and analytic residual oracles.
//!
//! Everything here is evaluated with exact derivatives of the ansatz, never
//! with grid differences, so it can serve as an independent check on the
//! discrete solver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist, Point};
use crate::model::{kappa, ProblemParams};

/// `θ (|x - center| - r0)₊^κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialProfile {
    pub theta: f64,
    pub kappa: f64,
    pub r0: f64,
    pub center: Point,
    pub dim: usize,
}

impl RadialProfile {
    pub fn new(theta: f64, kappa: f64, r0: f64, center: Point, dim: usize) -> Result<Self> {
        if !(r0 >= 0.0) || !theta.is_finite() || !(kappa > 0.0) {
            return Err(Error::Domain(format!("invalid profile: theta={theta}, kappa={kappa}, r0={r0}")));
        }
        Ok(Self { theta, kappa, r0, center, dim })
    }

    /// Exact solution amplitude for `|Du|^γ Δu = λ₀ u^μ` with dead core radius
    /// `r0` (exact for `r0 = 0`, or in one dimension).
    pub fn exact(dim: usize, lambda0: f64, gamma: f64, mu: f64, r0: f64, center: Point) -> Result<Self> {
        let theta = theta_radial_exact(dim as u32, lambda0, gamma, mu)?;
        Self::new(theta, kappa(gamma, mu)?, r0, center, dim)
    }

    /// Profile with amplitude `theta` that takes the value `varsigma` on the
    /// sphere of radius `r`: `r0 = r - (varsigma/theta)^(1/κ)`.
    pub fn from_boundary_value(theta: f64, kappa: f64, center: Point, dim: usize, r: f64, varsigma: f64) -> Result<Self> {
        let rho = (varsigma / theta).powf(1.0 / kappa);
        Self::new(theta, kappa, r - rho, center, dim)
    }

    #[inline]
    pub fn radius(&self, x: Point) -> f64 {
        dist(x, self.center, self.dim)
    }

    /// Value, first and second radial derivatives at radius `r`.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        let s = r - self.r0;
        if s <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let k = self.kappa;
        let u = self.theta * s.powf(k);
        let d1 = self.theta * k * s.powf(k - 1.0);
        let d2 = self.theta * k * (k - 1.0) * s.powf(k - 2.0);
        (u, d1, d2)
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.radial(self.radius(x)).0
    }

    pub fn gradient(&self, x: Point) -> Point {
        let r = self.radius(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let d1 = self.radial(r).1;
        let e = [(x[0] - self.center[0]) / r, if self.dim == 2 { (x[1] - self.center[1]) / r } else { 0.0 }];
        [d1 * e[0], d1 * e[1]]
    }
}

/// Amplitude Θ with `Θ r^κ` solving `|u'|^γ (u'' + (N-1) u'/r) = λ₀ u^μ`,
/// i.e. `Θ^(γ+1-μ) κ^(γ+1) (κ+N-2) = λ₀`.
pub fn theta_radial_exact(n: u32, lambda0: f64, gamma: f64, mu: f64) -> Result<f64> {
    let k = kappa(gamma, mu)?;
    if !(lambda0 > 0.0) {
        return Err(Error::Domain(format!("lambda0 must be positive, got {lambda0}")));
    }
    let shape = k + n as f64 - 2.0;
    if !(shape > 0.0) {
        return Err(Error::Domain(format!("kappa + N - 2 = {shape} must be positive")));
    }
    Ok((lambda0 / (k.powf(gamma + 1.0) * shape)).powf(1.0 / (gamma + 1.0 - mu)))
}

/// `Θ^(γ+1-μ) κ^(γ+1) (κ+N-2) - λ₀`.
pub fn radial_identity_defect(n: u32, lambda0: f64, gamma: f64, mu: f64, theta: f64) -> Result<f64> {
    let k = kappa(gamma, mu)?;
    Ok(theta.powf(gamma + 1.0 - mu) * k.powf(gamma + 1.0) * (k + n as f64 - 2.0) - lambda0)
}

/// Radial coordinate offset ρ of a profile with amplitude Θ taking the value
/// ς at distance ρ from its dead core: `ρ = (ς/Θ)^((γ+1-μ)/(γ+2))`.
pub fn dead_core_offset(varsigma: f64, theta: f64, gamma: f64, mu: f64) -> f64 {
    (varsigma / theta).powf((gamma + 1.0 - mu) / (gamma + 2.0))
}

/// `r0 + 2^-k` for `k = 1..=20`, followed by a few far-field radii.
pub fn default_sample_radii(r0: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (1..=20).map(|k| r0 + 0.5f64.powi(k)).collect();
    out.extend([r0 + 1.0, r0 + 2.0, r0 + 4.0]);
    out
}

/// Residual of a profile against the rotationally symmetric model
/// `|u'|^γ (u'' + (N-1) u'/r + <b, e_r> u') - λ₀ u₊^μ`, sampled along the
/// first axis. Returns `(max |residual|, per-radius residuals)`.
pub fn radial_residual_samples(profile: &RadialProfile, p: &ProblemParams, radii: &[f64]) -> Vec<f64> {
    let n = p.dim as f64;
    radii
        .iter()
        .map(|&r| {
            let x = [profile.center[0] + r, profile.center[1]];
            let (u, d1, d2) = profile.radial(r);
            let lambda0 = p.lambda0.eval(x);
            let br = p.drift.eval(x)[0];
            let lhs = d1.abs().powf(p.gamma) * (d2 + (n - 1.0) * d1 / r + br * d1);
            let lhs = if d1 == 0.0 && p.gamma > 0.0 { 0.0 } else { lhs };
            let rhs = lambda0 * crate::operators::positive_power(u, p.mu);
            lhs - rhs
        })
        .collect()
}

/// Max absolute analytic residual over `radii`.
pub fn radial_residual(profile: &RadialProfile, p: &ProblemParams, radii: &[f64]) -> f64 {
    radial_residual_samples(profile, p, radii).iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// `u = exp(rate · x_i)` with a constant drift `drift · e_i`, a strictly
/// positive candidate solution of `|Du|^γ (Δu + <b, Du>) = λ₀ u^(γ+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialSolution {
    pub rate: f64,
    pub drift: f64,
    pub direction: usize,
}

impl ExponentialSolution {
    /// Rate `λ₀^(1/(γ+2))`. Substitution gives
    /// `rate^(γ+1) (rate + drift) = λ₀`, so this rate requires zero drift.
    pub fn borderline(lambda0: f64, gamma: f64, direction: usize) -> Self {
        Self { rate: lambda0.powf(1.0 / (gamma + 2.0)), drift: 0.0, direction }
    }

    /// Rate and drift both equal to `λ₀^(1/(γ+2))`. Substitution yields twice
    /// the right-hand side, so this is not a solution; kept for comparison.
    pub fn equal_rate_and_drift(lambda0: f64, gamma: f64, direction: usize) -> Self {
        let a = lambda0.powf(1.0 / (gamma + 2.0));
        Self { rate: a, drift: a, direction }
    }

    /// The rate that makes `exp(rate · x_i)` a solution for a prescribed
    /// non-negative drift magnitude.
    pub fn with_drift(lambda0: f64, gamma: f64, drift: f64, direction: usize) -> Result<Self> {
        if !(drift >= 0.0) || !(lambda0 > 0.0) {
            return Err(Error::Domain("drift must be non-negative and lambda0 positive".into()));
        }
        let f = |a: f64| a.powf(gamma + 1.0) * (a + drift) - lambda0;
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self { rate: 0.5 * (lo + hi), drift, direction })
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.rate * x[self.direction]).exp()
    }

    /// `|Du|^γ (Δu + <b, Du>) - λ₀ u^(γ+1)` at `x`, from exact derivatives.
    pub fn residual_at(&self, lambda0: f64, gamma: f64, x: Point) -> f64 {
        let u = self.eval(x);
        let du = self.rate * u;
        let lap = self.rate * self.rate * u;
        let drift_term = self.drift * du;
        du.abs().powf(gamma) * (lap + drift_term) - lambda0 * u.powf(gamma + 1.0)
    }

    pub fn max_residual(&self, lambda0: f64, gamma: f64, points: &[Point]) -> f64 {
        points.iter().fold(0.0, |m, &x| m.max(self.residual_at(lambda0, gamma, x).abs()))
    }
}

/// Max analytic residual of `exp(λ₀^(1/(γ+2)) x_i)` (drift-free normalization)
/// against the borderline equation at the given points.
pub fn exponential_solution_residual(lambda0: f64, gamma: f64, direction: usize, points: &[Point]) -> Result<f64> {
    if !(lambda0 > 0.0) || !(gamma > -1.0) {
        return Err(Error::Domain(format!("need lambda0 > 0 and gamma > -1, got {lambda0}, {gamma}")));
    }
    Ok(ExponentialSolution::borderline(lambda0, gamma, direction).max_residual(lambda0, gamma, points))
}

/// Radial dead-core solution of `Δu = λ₀` in the plane with dead core radius
/// `r0`: `λ₀ ((r² - r0²)/4 - (r0²/2) ln(r/r0))` for `r > r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarLaplacianDeadCore {
    pub lambda0: f64,
    pub r0: f64,
    pub center: Point,
}

impl PlanarLaplacianDeadCore {
    pub fn value_at_radius(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        if self.r0 == 0.0 {
            return self.lambda0 * r * r / 4.0;
        }
        self.lambda0 * ((r * r - self.r0 * self.r0) / 4.0 - 0.5 * self.r0 * self.r0 * (r / self.r0).ln())
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.value_at_radius(dist(x, self.center, 2))
    }

    /// Dead core radius for which the solution equals `g` on the circle of
    /// radius `big_r`; `None` when `g` is too large for a dead core.
    pub fn for_boundary_value(lambda0: f64, big_r: f64, g: f64, center: Point) -> Option<Self> {
        let at = |r0: f64| Self { lambda0, r0, center }.value_at_radius(big_r);
        if at(0.0) <= g {
            return None;
        }
        let (mut lo, mut hi) = (0.0, big_r);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > g {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(Self { lambda0, r0: 0.5 * (lo + hi), center })
    }
}
