//! Closed-form evaluation of the planar map family, its derivatives,
//! Jacobians, preimages, the fiber (skew) extension, and a compactly
//! supported radial bump standing in for nearby maps.
//!
//! The planar map is z ↦ (1−λ+λ|z|^{μ/σ})·(z/|z|)² + 1: it doubles the
//! argument and renormalizes the modulus toward 1. Everything here is a pure
//! function of its inputs.

use anyhow::{ensure, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default contraction parameter.
pub const DEFAULT_LAMBDA: f64 = 0.95;
/// Default radial exponent numerator (ratio μ/σ = 0.95 at defaults).
pub const DEFAULT_MU: f64 = 0.95;
/// Default radial exponent denominator.
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Default fiber exponent.
pub const DEFAULT_ETA: f64 = 2.0;
/// Default fiber contraction factors (β = β₀β₁ = 0.01 at defaults).
pub const DEFAULT_BETA0: f64 = 0.1;
pub const DEFAULT_BETA1: f64 = 0.1;
/// Bump support must stay inside |z| < this radius so large-modulus points
/// are never perturbed.
pub const PERTURB_OUTER_LIMIT: f64 = 15.0;

/// Parameter vector selecting one concrete map / skew product / flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub lambda: f64,
    pub sigma: f64,
    pub mu: f64,
    pub eta: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub eps_perturb: f64,
    pub perturb_center: Complex64,
    pub perturb_radius: f64,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            lambda: DEFAULT_LAMBDA,
            sigma: DEFAULT_SIGMA,
            mu: DEFAULT_MU,
            eta: DEFAULT_ETA,
            beta0: DEFAULT_BETA0,
            beta1: DEFAULT_BETA1,
            eps_perturb: 0.0,
            perturb_center: Complex64::new(5.0, 0.0),
            perturb_radius: 1.0,
        }
    }
}

impl MapParams {
    /// Defaults with μ = σ, the member whose derivative has the exactly-λ
    /// radial ratio used by the cone lemma checks.
    pub fn defaults_mu_eq_sigma() -> Self {
        MapParams { mu: DEFAULT_SIGMA, ..Default::default() }
    }

    /// Checks every parameter-range invariant.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.lambda > 0.0 && self.lambda < 1.0, "lambda must lie in (0,1)");
        ensure!(self.sigma > 0.0, "sigma must be positive");
        ensure!(self.mu > 0.0 && self.mu <= self.sigma, "mu must lie in (0, sigma]");
        ensure!(self.eta > self.sigma, "eta must exceed sigma");
        ensure!(self.beta0 > 0.0 && self.beta0 < 1.0, "beta0 must lie in (0,1)");
        ensure!(self.beta1 > 0.0 && self.beta1 < 0.5, "beta1 must lie in (0,1/2)");
        ensure!(self.beta0 * self.beta1 < 0.5, "beta0*beta1 must stay below 1/2");
        ensure!(self.eps_perturb >= 0.0, "eps_perturb must be nonnegative");
        ensure!(self.perturb_radius > 0.0, "perturb_radius must be positive");
        if self.eps_perturb > 0.0 {
            ensure!(
                self.perturb_center.norm() + self.perturb_radius <= PERTURB_OUTER_LIMIT,
                "bump support must stay inside |z| <= {PERTURB_OUTER_LIMIT}"
            );
        }
        Ok(())
    }

    /// Radius of the invariant disk B: 2(1−λ)⁻¹.
    pub fn outer_radius(&self) -> f64 {
        2.0 / (1.0 - self.lambda)
    }

    /// Combined fiber factor β = β₀β₁.
    pub fn beta(&self) -> f64 {
        self.beta0 * self.beta1
    }

    /// Radial exponent ratio μ/σ.
    pub fn mu_ratio(&self) -> f64 {
        self.mu / self.sigma
    }

    /// Fiber exponent ratio η/σ.
    pub fn eta_ratio(&self) -> f64 {
        self.eta / self.sigma
    }

    /// Modulus profile t ↦ 1−λ+λ·t^{μ/σ}, the image distance from 1.
    pub fn radial_profile(&self, t: f64) -> f64 {
        1.0 - self.lambda + self.lambda * t.powf(self.mu_ratio())
    }

    /// d/dt of the modulus profile.
    pub fn radial_profile_deriv(&self, t: f64) -> f64 {
        let m = self.mu_ratio();
        self.lambda * m * t.powf(m - 1.0)
    }

    /// Saddle fixed point on the positive real axis: 1+(1−λ)⁻¹ when μ = σ,
    /// otherwise the root of x = 2−λ+λx^{μ/σ} (bisection + Newton polish).
    pub fn saddle_location(&self) -> f64 {
        if (self.mu_ratio() - 1.0).abs() < 1e-15 {
            return 1.0 + 1.0 / (1.0 - self.lambda);
        }
        // x - 2 + lambda - lambda x^m is increasing in x for x >= 1, negative at 2
        let g = |x: f64| x - 2.0 + self.lambda - self.lambda * x.powf(self.mu_ratio());
        let (mut lo, mut hi) = (2.0, self.outer_radius() + 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Point on the half-turn cylinder chart: angle in turns, modulus profile value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    /// Angle as a fraction of a full turn, in [0, 1).
    pub theta: f64,
    /// Image modulus 1−λ+λ|z|^{μ/σ}, positive.
    pub t: f64,
}

/// Point of the fiber extension: base z, fiber disk coordinate w, spare slot v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint {
    pub z: Complex64,
    pub w: Complex64,
    /// Extra fiber directions; empty in the five-dimensional realization.
    pub v: Vec<f64>,
}

impl SkewPoint {
    pub fn new(z: Complex64, w: Complex64) -> Self {
        SkewPoint { z, w, v: Vec::new() }
    }

    /// Reports whether the point lies in the closed unit-disk bundle over B.
    /// Not enforced on construction: at large β·|z|^{η/σ} the fiber map
    /// genuinely leaves the unit disk, and the checks that need closure
    /// restrict radius or β explicitly.
    pub fn in_disk_bundle(&self, p: &MapParams) -> bool {
        self.z.norm() <= p.outer_radius() && self.w.norm() <= 1.0
    }
}

/// Tangent vector at a SkewPoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewTangent {
    pub dz: Complex64,
    pub dw: Complex64,
    pub dv: Vec<f64>,
}

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

/// The planar map: (1−λ+λ|z|^{μ/σ})(z/|z|)² + 1, plus the radial bump when
/// eps_perturb > 0. Undefined at z = 0.
pub fn eval_map(p: &MapParams, z: Complex64) -> Result<Complex64> {
    ensure!(z != Complex64::new(0.0, 0.0), "map undefined at z = 0");
    let t = z.norm();
    let u = z / t;
    let u2 = u * u;
    let mut modulus = p.radial_profile(t);
    if p.eps_perturb > 0.0 {
        modulus += p.eps_perturb * bump_value(p, z);
    }
    Ok(modulus * u2 + Complex64::new(1.0, 0.0))
}

/// Bump profile (1−r²)³ on r < 1, applied at r = |z−c|/R; zero outside.
fn bump_value(p: &MapParams, z: Complex64) -> f64 {
    let r = (z - p.perturb_center).norm() / p.perturb_radius;
    if r >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        s * s * s
    }
}

/// The modulus-1 limit of the family: z ↦ z²/|z| + 1 (argument doubling on
/// circles, constant Jacobian 2).
pub fn limit_map(z: Complex64) -> Result<Complex64> {
    ensure!(z != Complex64::new(0.0, 0.0), "map undefined at z = 0");
    Ok(z * z / z.norm() + Complex64::new(1.0, 0.0))
}

/// The two-chart factorization of the planar map: an angle-halving cylinder
/// chart followed by a wrap-around embedding.
pub struct Decomposition {
    pub params: MapParams,
}

/// Splits the map as g(tau(z)): tau records the half-angle (in turns) and the
/// image modulus; g wraps the cylinder twice around 1.
pub fn decompose(p: &MapParams) -> Decomposition {
    Decomposition { params: p.clone() }
}

impl Decomposition {
    /// Cylinder chart: (arg z / 2π mod 1, 1−λ+λ|z|^{μ/σ}).
    pub fn tau(&self, z: Complex64) -> Result<CylinderPoint> {
        ensure!(z != Complex64::new(0.0, 0.0), "chart undefined at z = 0");
        let mut theta = z.arg() / std::f64::consts::TAU;
        if theta < 0.0 {
            theta += 1.0;
        }
        Ok(CylinderPoint { theta, t: self.params.radial_profile(z.norm()) })
    }

    /// Wrap map: (θ, t) ↦ t·e^{4πiθ} + 1 (each cylinder circle covers the
    /// circle of radius t about 1 twice).
    pub fn g(&self, c: CylinderPoint) -> Complex64 {
        let ang = 2.0 * std::f64::consts::TAU * c.theta;
        Complex64::from_polar(c.t, ang) + Complex64::new(1.0, 0.0)
    }
}

/// Real-linear derivative of the planar map at z0 applied to v, in closed
/// form (bump included when active). Writing q = v/z0 = a+bi, the unperturbed
/// part is (F(z0)−1)·(a·λ(μ/σ)t^{μ/σ}/(1−λ+λt^{μ/σ}) + 2bi) with t = |z0|.
pub fn derivative(p: &MapParams, z0: Complex64, v: Complex64) -> Result<Complex64> {
    ensure!(z0 != Complex64::new(0.0, 0.0), "derivative undefined at z0 = 0");
    let t = z0.norm();
    let u = z0 / t;
    let u2 = u * u;
    let q = v / z0;
    let (a, b) = (q.re, q.im);
    let phi = p.radial_profile(t);
    let dphi_dt = p.radial_profile_deriv(t);
    // d|z| along v is a*t; d(u^2) is 2ib*u^2
    let mut out = u2 * Complex64::new(dphi_dt * a * t, 0.0) + phi * u2 * Complex64::new(0.0, 2.0 * b);
    if p.eps_perturb > 0.0 {
        let c = p.perturb_center;
        let rr = p.perturb_radius;
        let d = z0 - c;
        let r = d.norm() / rr;
        if r < 1.0 {
            let s = 1.0 - r * r;
            // d/dv of (1-r^2)^3 = -6(1-r^2)^2 Re(v conj(z0-c))/R^2, smooth at z0 = c
            let dbump = -6.0 * s * s * (v * d.conj()).re / (rr * rr);
            let bump = s * s * s;
            out += p.eps_perturb * (u2 * dbump + bump * u2 * Complex64::new(0.0, 2.0 * b));
        }
    }
    Ok(out)
}

/// Derivative of the modulus-1 limit map at z0 applied to v: with q = v/z0,
/// the image is (G(z0)−1)·(Re q + 2i·Im q).
pub fn limit_derivative(z0: Complex64, v: Complex64) -> Result<Complex64> {
    ensure!(z0 != Complex64::new(0.0, 0.0), "derivative undefined at z0 = 0");
    let q = v / z0;
    let g_minus_1 = z0 * z0 / z0.norm();
    Ok(g_minus_1 * Complex64::new(q.re, 2.0 * q.im))
}

/// Jacobian determinant of the planar map at z (determinant of the 2x2 real
/// derivative; equals 2λ(λ+(1−λ)/|z|) when μ = σ and no bump is active).
pub fn jacobian(p: &MapParams, z: Complex64) -> Result<f64> {
    ensure!(z != Complex64::new(0.0, 0.0), "jacobian undefined at z = 0");
    if p.eps_perturb > 0.0 && bump_value(p, z) > 0.0 {
        // determinant of the analytic derivative on the basis {1, i}
        let d1 = derivative(p, z, Complex64::new(1.0, 0.0))?;
        let di = derivative(p, z, Complex64::new(0.0, 1.0))?;
        return Ok(d1.re * di.im - d1.im * di.re);
    }
    let t = z.norm();
    let phi = p.radial_profile(t);
    let m = p.mu_ratio();
    Ok(2.0 * p.lambda * m * t.powf(m) * phi / (t * t))
}

/// Preimages of zeta under the planar map: empty iff zeta lies in the closed
/// unattained disk about 1, otherwise exactly two points ±z. Branch 0 has
/// arg z ∈ (−π/2, π/2]; branch 1 is its negative.
pub fn preimages(p: &MapParams, zeta: Complex64) -> Vec<Complex64> {
    let d = zeta - Complex64::new(1.0, 0.0);
    let s = d.norm();
    if p.eps_perturb == 0.0 {
        if s <= 1.0 - p.lambda {
            return Vec::new();
        }
        let t = ((s - (1.0 - p.lambda)) / p.lambda).powf(p.sigma / p.mu);
        let u = Complex64::from_polar(1.0, d.arg() / 2.0);
        return vec![t * u, -(t * u)];
    }
    // bump case: direction is still the half angle (the bump is radial in the
    // image), modulus solves profile(t) + eps*bump(t u) = s per branch
    if s <= 1.0 - p.lambda {
        return Vec::new();
    }
    let u0 = Complex64::from_polar(1.0, d.arg() / 2.0);
    let mut out = Vec::new();
    for u in [u0, -u0] {
        if let Some(t) = solve_perturbed_modulus(p, u, s) {
            out.push(t * u);
        }
    }
    // keep the branch order (arg in (-pi/2, pi/2] first) and pair completeness
    if out.len() == 2 {
        out
    } else {
        Vec::new()
    }
}

/// Solves profile(t) + eps*bump(t·u) = s for t > 0 along the fixed direction
/// u; monotone for validated parameters, bisection for robustness.
fn solve_perturbed_modulus(p: &MapParams, u: Complex64, s: f64) -> Option<f64> {
    let f = |t: f64| p.radial_profile(t) + p.eps_perturb * bump_value(p, t * u) - s;
    let mut lo = 0.0_f64;
    // profile(t) >= s - eps guarantees an upper bracket
    let mut hi = ((s + p.eps_perturb - (1.0 - p.lambda)) / p.lambda).powf(p.sigma / p.mu) + 1.0;
    if f(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Preimages under the modulus-1 limit map: |z| = |ζ−1|, half-angle branches.
pub fn limit_preimages(zeta: Complex64) -> Vec<Complex64> {
    let d = zeta - Complex64::new(1.0, 0.0);
    let s = d.norm();
    if s == 0.0 {
        return Vec::new();
    }
    let u = Complex64::from_polar(1.0, d.arg() / 2.0);
    vec![s * u, -(s * u)]
}

/// Fiber extension of the planar map: base moves by eval_map, the fiber disk
/// is squeezed toward z/(2|z|) with factor β|z|^{η/σ} and a conjugating
/// rotation; spare directions scale by the same factor.
pub fn eval_skew(p: &MapParams, x: &SkewPoint) -> Result<SkewPoint> {
    ensure!(x.z != Complex64::new(0.0, 0.0), "skew map undefined over z = 0");
    let z = x.z;
    let t = z.norm();
    let u = unit(z);
    let factor = p.beta() * t.powf(p.eta_ratio());
    let w = u / 2.0 + factor * u.conj() * x.w;
    let v = x.v.iter().map(|&c| factor * c).collect();
    Ok(SkewPoint { z: eval_map(p, z)?, w, v })
}

/// Radial stage: z ↦ (1−λ+λ|z|^{μ/σ})·z/|z| (modulus renormalization, no
/// angle doubling).
pub fn radial_stage(p: &MapParams, z: Complex64) -> Result<Complex64> {
    ensure!(z != Complex64::new(0.0, 0.0), "stage undefined at z = 0");
    Ok(p.radial_profile(z.norm()) * unit(z))
}

/// Fiber extension of the radial stage: fibers scale by β₀|z|^{η/σ}.
pub fn skew_radial_stage(p: &MapParams, x: &SkewPoint) -> Result<SkewPoint> {
    ensure!(x.z != Complex64::new(0.0, 0.0), "stage undefined over z = 0");
    let factor = p.beta0 * x.z.norm().powf(p.eta_ratio());
    Ok(SkewPoint {
        z: radial_stage(p, x.z)?,
        w: factor * x.w,
        v: x.v.iter().map(|&c| factor * c).collect(),
    })
}

/// Fiber extension of the modulus-1 limit map with factor β₁.
pub fn skew_limit_map(beta1: f64, x: &SkewPoint) -> Result<SkewPoint> {
    ensure!(x.z != Complex64::new(0.0, 0.0), "map undefined over z = 0");
    let u = unit(x.z);
    Ok(SkewPoint {
        z: limit_map(x.z)?,
        w: u / 2.0 + beta1 * u.conj() * x.w,
        v: x.v.iter().map(|&c| beta1 * c).collect(),
    })
}

/// Derivative of the fiber extension at x applied to a tangent (dz, dw, dv),
/// in closed form.
pub fn skew_derivative(p: &MapParams, x: &SkewPoint, dx: &SkewTangent) -> Result<SkewTangent> {
    ensure!(x.z != Complex64::new(0.0, 0.0), "derivative undefined over z = 0");
    let z = x.z;
    let t = z.norm();
    let u = unit(z);
    let q = dx.dz / z;
    let gamma = p.eta_ratio();
    let factor = p.beta() * t.powf(gamma);
    // d(z/(2|z|)) = (i/2) Im(dz/z) u ; d(factor*conj(u)) = factor*conj(u)*(gamma Re q - i Im q)
    let m = factor * u.conj();
    let dw = Complex64::new(0.0, 0.5 * q.im) * u
        + m * Complex64::new(gamma * q.re, -q.im) * x.w
        + m * dx.dw;
    let dfactor = factor * gamma * q.re;
    let dv = x
        .v
        .iter()
        .zip(dx.dv.iter())
        .map(|(&c, &dc)| dfactor * c + factor * dc)
        .collect();
    Ok(SkewTangent { dz: derivative(p, z, dx.dz)?, dw, dv })
}

/// Inverse of the planar derivative at z0: returns v with derivative(v) = w.
pub fn derivative_inverse(p: &MapParams, z0: Complex64, w: Complex64) -> Result<Complex64> {
    ensure!(z0 != Complex64::new(0.0, 0.0), "derivative undefined at z0 = 0");
    ensure!(
        p.eps_perturb == 0.0 || bump_value(p, z0) == 0.0,
        "closed-form inverse only off the bump support"
    );
    let t = z0.norm();
    let u = z0 / t;
    let phi = p.radial_profile(t);
    let r_rad = p.radial_profile_deriv(t) * t / phi;
    let qp = w / (phi * u * u);
    let q = Complex64::new(qp.re / r_rad, qp.im / 2.0);
    Ok(q * z0)
}

/// Pullback of a tangent at eval_skew(x) to a tangent at x (triangular
/// inverse of skew_derivative).
pub fn skew_derivative_inverse(p: &MapParams, x: &SkewPoint, dy: &SkewTangent) -> Result<SkewTangent> {
    let z = x.z;
    let t = z.norm();
    let u = unit(z);
    let gamma = p.eta_ratio();
    let factor = p.beta() * t.powf(gamma);
    let dz = derivative_inverse(p, z, dy.dz)?;
    let q = dz / z;
    let m = factor * u.conj();
    let dw = (dy.dw - Complex64::new(0.0, 0.5 * q.im) * u - m * Complex64::new(gamma * q.re, -q.im) * x.w) / m;
    let dfactor = factor * gamma * q.re;
    let dv = x
        .v
        .iter()
        .zip(dy.dv.iter())
        .map(|(&c, &dyc)| (dyc - dfactor * c) / factor)
        .collect();
    Ok(SkewTangent { dz, dw, dv })
}

/// Outcome of the bump-injectivity scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub min_jacobian_on_support: f64,
    pub max_deviation: f64,
}

/// Scans the bump support on a grid and confirms the Jacobian keeps its sign
/// (the bump has not destroyed local injectivity).
pub fn check_perturbation(p: &MapParams) -> Result<PerturbationReport> {
    p.validate()?;
    if p.eps_perturb == 0.0 {
        return Ok(PerturbationReport { min_jacobian_on_support: f64::INFINITY, max_deviation: 0.0 });
    }
    let n = 41;
    let mut min_jac = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = p.perturb_center.re + p.perturb_radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
            let y = p.perturb_center.im + p.perturb_radius * (2.0 * j as f64 / (n - 1) as f64 - 1.0);
            let z = Complex64::new(x, y);
            if z == Complex64::new(0.0, 0.0) || (z - p.perturb_center).norm() > p.perturb_radius {
                continue;
            }
            let jac = jacobian(p, z)?;
            min_jac = min_jac.min(jac);
            max_dev = max_dev.max(p.eps_perturb * bump_value(p, z));
        }
    }
    ensure!(
        min_jac > 0.0,
        "bump of size {} destroys local injectivity (Jacobian sign change on support)",
        p.eps_perturb
    );
    Ok(PerturbationReport { min_jacobian_on_support: min_jac, max_deviation: max_dev })
}

/// Planar map with the bump, after validating that the bump keeps the map a
/// local diffeomorphism. Hot loops should validate once and call eval_map.
pub fn perturbed_map(p: &MapParams, z: Complex64) -> Result<Complex64> {
    check_perturbation(p)?;
    eval_map(p, z)
}

/// Largest bump amplitude (given center/radius) keeping the sampled Jacobian
/// positive, found by bisection; the local-diffeo bound quoted in reports.
pub fn perturbation_bound(p: &MapParams) -> f64 {
    let ok = |eps: f64| {
        let q = MapParams { eps_perturb: eps, ..p.clone() };
        check_perturbation(&q).is_ok()
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while ok(hi) && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    if hi >= 1e6 {
        return lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{log_uniform_annulus, unit_dir};
    use crate::tol;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // frozen against a 40-digit evaluation of the closed form
    const F_AT_2_LAM09_M095: f64 = 2.838685392064722;
    const F_AT_2I_LAM09_M095: f64 = -0.838685392064722;
    const RADIAL_RATIO_AT_2: f64 = 0.8983326509200569;
    const JAC_AT_2_LAM09_M095: f64 = 1.5185253300982209;

    fn params_mu_eq_sigma() -> MapParams {
        MapParams::defaults_mu_eq_sigma()
    }

    fn params_general() -> MapParams {
        MapParams { lambda: 0.9, mu: 0.95, sigma: 1.0, ..Default::default() }
    }

    #[test]
    fn unit_modulus_points_collapse_to_zero_or_two() {
        let p = params_mu_eq_sigma();
        let f = eval_map(&p, Complex64::new(0.0, 1.0)).unwrap();
        assert!(f.norm() < 1e-15, "i has unit modulus so the image is exactly 0, got {f}");
        let f1 = eval_map(&p, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(f1.re, 2.0, max_relative = 1e-15);
        assert_eq!(f1.im, 0.0);
    }

    #[test]
    fn saddle_point_is_fixed() {
        let p = params_mu_eq_sigma();
        let s = p.saddle_location();
        assert_relative_eq!(s, 21.0, max_relative = 1e-14);
        let f = eval_map(&p, Complex64::new(s, 0.0)).unwrap();
        assert_relative_eq!(f.re, s, max_relative = 1e-14);
    }

    #[test]
    fn general_exponent_value_matches_frozen_oracle() {
        let p = params_general();
        let f = eval_map(&p, Complex64::new(2.0, 0.0)).unwrap();
        assert_relative_eq!(f.re, F_AT_2_LAM09_M095, max_relative = 1e-15);
        let fi = eval_map(&p, Complex64::new(0.0, 2.0)).unwrap();
        assert_relative_eq!(fi.re, F_AT_2I_LAM09_M095, max_relative = 1e-15);
        assert!(fi.im.abs() < 1e-15);
    }

    #[test]
    fn map_rejects_origin() {
        let p = MapParams::default();
        assert!(eval_map(&p, Complex64::new(0.0, 0.0)).is_err());
        assert!(derivative(&p, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
        assert!(jacobian(&p, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn chart_composition_recovers_the_map() {
        let p = MapParams::default();
        let d = decompose(&p);
        // z = 1: theta 0, t = profile(1) = 1, g = 2
        let c = d.tau(Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(c.theta, 0.0);
        assert_relative_eq!(c.t, 1.0, max_relative = 1e-15);
        assert_relative_eq!(d.g(c).re, 2.0, max_relative = 1e-15);
        // z = i: theta 1/4, image 0
        let ci = d.tau(Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(ci.theta, 0.25, max_relative = 1e-15);
        assert!(d.g(ci).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let z = log_uniform_annulus(&mut rng, 1e-3, p.outer_radius());
            let f = eval_map(&p, z).unwrap();
            let g = d.g(d.tau(z).unwrap());
            assert!(
                (g - f).norm() <= tol::EXACT_IDENTITY_REL * f.norm().max(1.0),
                "chart composition off at z = {z}: {g} vs {f}"
            );
        }
    }

    #[test]
    fn chart_modulus_stays_in_the_produced_range() {
        let p = MapParams::default();
        let d = decompose(&p);
        let hi = p.outer_radius() - 1.0 - p.lambda; // 38.05 at lambda = 0.95
        assert_relative_eq!(hi, 38.05, max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5_000 {
            let z = log_uniform_annulus(&mut rng, 1e-6, p.outer_radius());
            let c = d.tau(z).unwrap();
            assert!(c.t > 1.0 - p.lambda && c.t <= hi + 1e-12);
        }
    }

    #[test]
    fn angular_vectors_double_their_rotation() {
        // v = i z0 maps to (F(z0)-1)*2i
        let p = params_mu_eq_sigma();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1_000 {
            let z0 = log_uniform_annulus(&mut rng, 0.1, 40.0);
            let v = Complex64::new(0.0, 1.0) * z0;
            let d = derivative(&p, z0, v).unwrap();
            let expect = (eval_map(&p, z0).unwrap() - 1.0) * Complex64::new(0.0, 2.0);
            assert!((d - expect).norm() <= 1e-12 * expect.norm());
        }
    }

    #[test]
    fn saddle_multipliers_are_lambda_and_angular_factor() {
        let p = params_mu_eq_sigma();
        let s = Complex64::new(p.saddle_location(), 0.0);
        let radial = derivative(&p, s, s).unwrap();
        assert_relative_eq!((radial / s).re, p.lambda, max_relative = 1e-12);
        let ang = derivative(&p, s, s * Complex64::new(0.0, 1.0)).unwrap();
        let ratio = ang / (s * Complex64::new(0.0, 1.0));
        assert_relative_eq!(ratio.re, 2.0 / (2.0 - p.lambda), max_relative = 1e-12);
        assert!(ratio.im.abs() < 1e-14);
    }

    #[test]
    fn general_exponent_radial_ratio_matches_frozen_oracle() {
        let p = params_general();
        let z0 = Complex64::new(2.0, 0.0);
        let d = derivative(&p, z0, z0).unwrap();
        let f1 = eval_map(&p, z0).unwrap() - 1.0;
        assert_relative_eq!((d / (f1 * 2.0) * 2.0).re, RADIAL_RATIO_AT_2, max_relative = 1e-13);
    }

    #[test]
    fn derivative_matches_central_differences() {
        for p in [params_mu_eq_sigma(), params_general()] {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..2_000 {
                let z0 = log_uniform_annulus(&mut rng, 0.05, 40.0);
                let v = unit_dir(&mut rng);
                let h = 1e-6 * z0.norm();
                let fd = (eval_map(&p, z0 + h * v).unwrap() - eval_map(&p, z0 - h * v).unwrap())
                    / (2.0 * h);
                let an = derivative(&p, z0, v).unwrap();
                assert!(
                    (an - fd).norm() <= tol::DERIVATIVE_FD_REL * (1.0 + an.norm()),
                    "derivative mismatch at {z0}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn derivative_is_real_linear() {
        let p = params_general();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..500 {
            let z0 = log_uniform_annulus(&mut rng, 0.1, 30.0);
            let u = unit_dir(&mut rng);
            let v = unit_dir(&mut rng);
            let (a, b) = (2.5_f64, -0.75_f64);
            let lhs = derivative(&p, z0, a * u + b * v).unwrap();
            let rhs = a * derivative(&p, z0, u).unwrap() + b * derivative(&p, z0, v).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn jacobian_closed_form_and_limit() {
        let p = MapParams { lambda: 0.9, mu: 1.0, sigma: 1.0, ..Default::default() };
        let j = jacobian(&p, Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(j, 1.8, max_relative = 1e-14);
        // limit map has constant Jacobian 2: finite-difference check
        let z0 = Complex64::new(0.3, -1.1);
        let h = 1e-6;
        let dx = (limit_map(z0 + h).unwrap() - limit_map(z0 - h).unwrap()) / (2.0 * h);
        let dy = (limit_map(z0 + h * Complex64::new(0.0, 1.0)).unwrap()
            - limit_map(z0 - h * Complex64::new(0.0, 1.0)).unwrap())
            / (2.0 * h);
        let det = dx.re * dy.im - dx.im * dy.re;
        assert_relative_eq!(det, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn jacobian_matches_finite_difference_determinant() {
        let p = params_general();
        assert_relative_eq!(
            jacobian(&p, Complex64::new(2.0, 0.0)).unwrap(),
            JAC_AT_2_LAM09_M095,
            max_relative = 1e-13
        );
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let z0 = log_uniform_annulus(&mut rng, 0.1, 30.0);
            let h = 1e-6 * z0.norm();
            let dx = (eval_map(&p, z0 + h).unwrap() - eval_map(&p, z0 - h).unwrap()) / (2.0 * h);
            let dy = (eval_map(&p, z0 + h * Complex64::new(0.0, 1.0)).unwrap()
                - eval_map(&p, z0 - h * Complex64::new(0.0, 1.0)).unwrap())
                / (2.0 * h);
            let det = dx.re * dy.im - dx.im * dy.re;
            let j = jacobian(&p, z0).unwrap();
            assert!((det - j).abs() <= tol::JACOBIAN_FD_REL * j.abs());
        }
    }

    #[test]
    fn jacobian_exceeds_area_expansion_floor() {
        // for lambda >= 1/sqrt(2) and mu = sigma the determinant is >= 2 lambda^2 > 1
        let p = params_mu_eq_sigma();
        let floor = 2.0 * p.lambda * p.lambda;
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5_000 {
            let z = log_uniform_annulus(&mut rng, 1e-4, p.outer_radius());
            assert!(jacobian(&p, z).unwrap() >= floor - 1e-12);
        }
    }

    #[test]
    fn preimage_pairs_and_unattained_disk() {
        let p = MapParams::default();
        let pre = preimages(&p, Complex64::new(0.0, 0.0));
        assert_eq!(pre.len(), 2);
        assert!((pre[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((pre[1] + Complex64::new(0.0, 1.0)).norm() < 1e-12);

        let pm = params_mu_eq_sigma();
        let s = pm.saddle_location();
        let pre_s = preimages(&pm, Complex64::new(s, 0.0));
        assert_eq!(pre_s.len(), 2);
        assert!((pre_s[0].re - s).abs() < 1e-10 && (pre_s[1].re + s).abs() < 1e-10);

        assert!(preimages(&p, Complex64::new(1.0, 0.02)).is_empty());
    }

    #[test]
    fn preimages_round_trip_through_the_map() {
        for p in [params_mu_eq_sigma(), params_general()] {
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            for _ in 0..2_000 {
                let zeta = log_uniform_annulus(&mut rng, 0.2, 30.0) + Complex64::new(1.0, 0.0);
                let pre = preimages(&p, zeta);
                if (zeta - Complex64::new(1.0, 0.0)).norm() <= 1.0 - p.lambda {
                    assert!(pre.is_empty());
                    continue;
                }
                assert_eq!(pre.len(), 2);
                // branch 0 lands in the closed right half plane
                assert!(pre[0].re > 0.0 || (pre[0].re == 0.0 && pre[0].im >= 0.0));
                for z in pre {
                    let f = eval_map(&p, z).unwrap();
                    assert!(
                        (f - zeta).norm() < tol::PREIMAGE_ABS,
                        "round trip off: {f} vs {zeta}"
                    );
                }
            }
        }
    }

    #[test]
    fn skew_map_zero_fiber_and_stage_composition() {
        let p = MapParams::default();
        let x = SkewPoint::new(Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0));
        let y = eval_skew(&p, &x).unwrap();
        assert!((y.z - eval_map(&p, x.z).unwrap()).norm() < 1e-15);
        assert!((y.w - x.z / (2.0 * x.z.norm())).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10_000 {
            let x = SkewPoint::new(
                log_uniform_annulus(&mut rng, 1e-3, p.outer_radius()),
                0.999 * crate::sampling::uniform_disk(&mut rng, 1.0),
            );
            let direct = eval_skew(&p, &x).unwrap();
            let staged = skew_limit_map(p.beta1, &skew_radial_stage(&p, &x).unwrap()).unwrap();
            assert!((direct.z - staged.z).norm() <= tol::EXACT_IDENTITY_REL * (1.0 + direct.z.norm()));
            assert!((direct.w - staged.w).norm() <= tol::EXACT_IDENTITY_REL * (1.0 + direct.w.norm()));
        }
    }

    #[test]
    fn skew_map_injective_on_sampled_pairs() {
        let p = MapParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let pts: Vec<SkewPoint> = (0..448)
            .map(|_| {
                SkewPoint::new(
                    log_uniform_annulus(&mut rng, 0.05, p.outer_radius()),
                    crate::sampling::uniform_disk(&mut rng, 1.0),
                )
            })
            .collect();
        let imgs: Vec<SkewPoint> = pts.iter().map(|x| eval_skew(&p, x).unwrap()).collect();
        let mut min_sep = f64::INFINITY;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let dz = (imgs[i].z - imgs[j].z).norm();
                let dw = (imgs[i].w - imgs[j].w).norm();
                let din = (pts[i].z - pts[j].z).norm() + (pts[i].w - pts[j].w).norm();
                if din > 1e-9 {
                    min_sep = min_sep.min(dz + dw);
                }
            }
        }
        assert!(min_sep > 0.0, "sampled image collision; min separation {min_sep}");
    }

    #[test]
    fn skew_derivative_matches_finite_differences() {
        let p = MapParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..500 {
            let x = SkewPoint::new(
                log_uniform_annulus(&mut rng, 0.1, 20.0),
                crate::sampling::uniform_disk(&mut rng, 0.9),
            );
            let dzv = unit_dir(&mut rng);
            let dwv = unit_dir(&mut rng);
            let h = 1e-6;
            let plus = eval_skew(
                &p,
                &SkewPoint::new(x.z + h * dzv, x.w + h * dwv),
            )
            .unwrap();
            let minus = eval_skew(
                &p,
                &SkewPoint::new(x.z - h * dzv, x.w - h * dwv),
            )
            .unwrap();
            let fd_z = (plus.z - minus.z) / (2.0 * h);
            let fd_w = (plus.w - minus.w) / (2.0 * h);
            let an = skew_derivative(&p, &x, &SkewTangent { dz: dzv, dw: dwv, dv: vec![] }).unwrap();
            assert!((an.dz - fd_z).norm() <= 1e-5 * (1.0 + an.dz.norm()));
            assert!((an.dw - fd_w).norm() <= 1e-5 * (1.0 + an.dw.norm()));
        }
    }

    #[test]
    fn skew_derivative_inverse_round_trips() {
        let p = MapParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..500 {
            let x = SkewPoint::new(
                log_uniform_annulus(&mut rng, 0.1, 20.0),
                crate::sampling::uniform_disk(&mut rng, 0.9),
            );
            let dx = SkewTangent { dz: unit_dir(&mut rng), dw: unit_dir(&mut rng), dv: vec![] };
            let dy = skew_derivative(&p, &x, &dx).unwrap();
            let back = skew_derivative_inverse(&p, &x, &dy).unwrap();
            assert!((back.dz - dx.dz).norm() < 1e-10);
            assert!((back.dw - dx.dw).norm() < 1e-10);
        }
    }

    #[test]
    fn image_of_the_invariant_disk_stays_interior() {
        let p = MapParams::default();
        let rb = p.outer_radius();
        let mut max_mod: f64 = 0.0;
        for k in 0..10_000 {
            let th = std::f64::consts::TAU * k as f64 / 10_000.0;
            let z = Complex64::from_polar(rb, th);
            max_mod = max_mod.max(eval_map(&p, z).unwrap().norm());
        }
        assert!(max_mod < rb, "boundary image reaches {max_mod} vs disk radius {rb}");
    }

    #[test]
    fn bump_vanishes_off_support_and_at_eps_zero() {
        let base = MapParams::default();
        let bumped = MapParams { eps_perturb: 0.05, ..MapParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..2_000 {
            let z = log_uniform_annulus(&mut rng, 0.1, 40.0);
            let f0 = eval_map(&base, z).unwrap();
            let f1 = eval_map(&bumped, z).unwrap();
            if z.norm() >= PERTURB_OUTER_LIMIT {
                assert_eq!(f0, f1, "perturbation leaked outside its support at {z}");
            } else {
                assert!((f1 - f0).norm() <= bumped.eps_perturb + 1e-15);
            }
        }
        let r = check_perturbation(&bumped).unwrap();
        assert!(r.min_jacobian_on_support > 1.0, "bump should keep expansion, got {}", r.min_jacobian_on_support);
        assert!(r.max_deviation <= 0.05 + 1e-15);
    }

    #[test]
    fn perturbed_derivative_matches_finite_differences_on_support() {
        let p = MapParams { eps_perturb: 0.05, ..MapParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..1_000 {
            let z0 = p.perturb_center + crate::sampling::uniform_disk(&mut rng, 1.2 * p.perturb_radius);
            if z0 == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = unit_dir(&mut rng);
            let h = 1e-6;
            let fd = (eval_map(&p, z0 + h * v).unwrap() - eval_map(&p, z0 - h * v).unwrap()) / (2.0 * h);
            let an = derivative(&p, z0, v).unwrap();
            assert!((an - fd).norm() <= 1e-5 * (1.0 + an.norm()), "at {z0}: {an} vs {fd}");
        }
    }

    #[test]
    fn perturbed_preimages_round_trip() {
        let p = MapParams { eps_perturb: 0.05, ..MapParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..500 {
            let zeta = Complex64::new(1.0, 0.0) + log_uniform_annulus(&mut rng, 0.1, 30.0);
            let pre = preimages(&p, zeta);
            for z in pre {
                let f = eval_map(&p, z).unwrap();
                assert!((f - zeta).norm() < tol::PREIMAGE_ABS, "{f} vs {zeta}");
            }
        }
    }

    #[test]
    fn oversized_bump_is_rejected() {
        // eps far above the reported bound must flip the Jacobian somewhere
        let p = MapParams { eps_perturb: 0.0, ..MapParams::default() };
        let bound = perturbation_bound(&p);
        assert!(bound > 0.05, "bound unexpectedly tiny: {bound}");
        let too_big = MapParams { eps_perturb: 4.0 * bound.max(1.0), ..p };
        assert!(check_perturbation(&too_big).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut p = MapParams::default();
        p.lambda = 1.0;
        assert!(p.validate().is_err());
        let mut q = MapParams::default();
        q.mu = 1.5; // exceeds sigma
        assert!(q.validate().is_err());
        let mut r = MapParams::default();
        r.eps_perturb = 0.1;
        r.perturb_center = Complex64::new(14.5, 0.0);
        assert!(r.validate().is_err(), "support sticking past the outer limit must fail");
        assert!(MapParams::default().validate().is_ok());
    }
}
