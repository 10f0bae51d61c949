//! Cone fields, the expansion/contraction domain, arc classification, and
//! sampling verification of the cone contraction/expansion/invariance
//! statements for both the planar map and its fiber extension.
//!
//! Planar cones at a base point z0 are parameterized by q = v/z0: the radial
//! family is |Im q| ≤ ε₀|Re q| with ε₀ = ½√(1−λ); the angular families bound
//! |Re q| by a multiple of |Im q|. Membership uses exact comparisons on q so
//! classification never depends on a tolerance.

use crate::core_maps::{
    derivative, eval_map, eval_skew, skew_derivative, skew_derivative_inverse, MapParams, SkewPoint,
    SkewTangent,
};
use crate::sampling::{log_uniform_annulus, uniform_disk, unit_dir};
use crate::tol;
use anyhow::{bail, ensure, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Slope bound of the wide angular cone (|Re q| ≤ |Im q|); the narrow one
/// uses 1/3.
pub const WIDE_ANGULAR_SLOPE: f64 = 1.0;
/// Slope bound of the narrow angular cone.
pub const ANGULAR_SLOPE: f64 = 1.0 / 3.0;

/// Cone families: radial (stable), angular (unstable), the signed-quadrant
/// angular family, the wide angular family, and the two fiber-extended kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    CStable,
    KUnstable,
    KMinus,
    KTilde,
    CHat,
    KHat,
}

impl ConeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConeKind::CStable => "C_stable",
            ConeKind::KUnstable => "K_unstable",
            ConeKind::KMinus => "K_minus",
            ConeKind::KTilde => "K_tilde",
            ConeKind::CHat => "C_hat",
            ConeKind::KHat => "K_hat",
        }
    }
}

/// Base point of a cone: planar or fiber-extended.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeBase {
    Planar(Complex64),
    Skew(SkewPoint),
}

/// A cone at a base point for a given contraction parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub base: ConeBase,
    pub lambda: f64,
}

/// Tangent vector fed to membership tests.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentVec {
    Planar(Complex64),
    Skew(SkewTangent),
}

/// Half-width parameter ε₀ = ½√(1−λ) of the radial cone.
pub fn stable_half_width(lambda: f64) -> f64 {
    0.5 * (1.0 - lambda).sqrt()
}

/// Contraction bound λ̃ = (λ²+4ε₀²)/(1+ε₀²) for radial vectors over |z0| ≥ 1.
pub fn radial_contraction_bound(lambda: f64) -> f64 {
    let e0 = stable_half_width(lambda);
    (lambda * lambda + 4.0 * e0 * e0) / (1.0 + e0 * e0)
}

/// Expansion bound λ√(5/2) for wide-angular vectors.
pub fn angular_expansion_bound(lambda: f64) -> f64 {
    lambda * (2.5_f64).sqrt()
}

fn planar_in_cone(kind: ConeKind, lambda: f64, z0: Complex64, v: Complex64) -> Result<bool> {
    ensure!(z0 != Complex64::new(0.0, 0.0), "cone undefined at base 0");
    let q = v / z0;
    let (a, b) = (q.re, q.im);
    Ok(match kind {
        ConeKind::CStable => b.abs() <= stable_half_width(lambda) * a.abs(),
        ConeKind::KUnstable => a.abs() <= ANGULAR_SLOPE * b.abs(),
        ConeKind::KTilde => a.abs() <= WIDE_ANGULAR_SLOPE * b.abs(),
        ConeKind::KMinus => a.abs() <= ANGULAR_SLOPE * b.abs() && a * b <= 0.0,
        _ => bail!("fiber-extended kind needs a fiber-extended base and tangent"),
    })
}

/// Exact cone membership. Planar kinds take planar bases/tangents; the
/// fiber-extended kinds additionally require the planar weight |Re q| (stable)
/// or |Im q| (unstable) to dominate (1−λ)·max(|dw|, ‖dv‖). Membership is
/// symmetric under v ↦ −v.
pub fn in_cone(spec: &ConeSpec, v: &TangentVec) -> Result<bool> {
    match (&spec.base, v) {
        (ConeBase::Planar(z0), TangentVec::Planar(vv)) => match spec.kind {
            ConeKind::CStable | ConeKind::KUnstable | ConeKind::KMinus | ConeKind::KTilde => {
                planar_in_cone(spec.kind, spec.lambda, *z0, *vv)
            }
            _ => bail!("kind {} needs a fiber-extended base", spec.kind.as_str()),
        },
        (ConeBase::Skew(x), TangentVec::Skew(t)) => {
            ensure!(x.z != Complex64::new(0.0, 0.0), "cone undefined over z = 0");
            let q = t.dz / x.z;
            let fiber = t.dw.norm().max(norm_slice(&t.dv));
            let weight = (1.0 - spec.lambda) * fiber;
            Ok(match spec.kind {
                ConeKind::CHat => {
                    q.im.abs() <= stable_half_width(spec.lambda) * q.re.abs() && q.re.abs() >= weight
                }
                ConeKind::KHat => q.re.abs() <= ANGULAR_SLOPE * q.im.abs() && q.im.abs() >= weight,
                _ => bail!("planar kind {} needs a planar base", spec.kind.as_str()),
            })
        }
        _ => bail!("base and tangent kinds disagree"),
    }
}

fn norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Region |z| > λ⁻¹(λ−1+4/√(1−λ)) on which both cone families are invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityDomain {
    pub lambda: f64,
    pub threshold: f64,
}

impl HyperbolicityDomain {
    pub fn new(lambda: f64) -> Self {
        let threshold = (lambda - 1.0 + 4.0 / (1.0 - lambda).sqrt()) / lambda;
        HyperbolicityDomain { lambda, threshold }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() > self.threshold
    }
}

/// Arc classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcClass {
    QuasiRadial,
    QuasiAngular,
    Neither,
}

impl ArcClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArcClass::QuasiRadial => "quasi_radial",
            ArcClass::QuasiAngular => "quasi_angular",
            ArcClass::Neither => "neither",
        }
    }
}

/// Sampled planar curve with tangents and its cone classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub points: Vec<Complex64>,
    pub tangents: Vec<Complex64>,
    pub classification: ArcClass,
}

impl Arc {
    /// Builds an arc from points with central-difference tangents and
    /// classifies it for the given λ.
    pub fn from_points(points: Vec<Complex64>, lambda: f64) -> Result<Arc> {
        ensure!(points.len() >= 2, "an arc needs at least 2 samples");
        let n = points.len();
        let mut tangents = Vec::with_capacity(n);
        for i in 0..n {
            let t = if i == 0 {
                points[1] - points[0]
            } else if i == n - 1 {
                points[n - 1] - points[n - 2]
            } else {
                points[i + 1] - points[i - 1]
            };
            ensure!(t != Complex64::new(0.0, 0.0), "degenerate tangent at sample {i}");
            tangents.push(t);
        }
        Arc::with_tangents(points, tangents, lambda)
    }

    /// Builds an arc from explicit tangents and classifies it.
    pub fn with_tangents(points: Vec<Complex64>, tangents: Vec<Complex64>, lambda: f64) -> Result<Arc> {
        ensure!(points.len() >= 2, "an arc needs at least 2 samples");
        ensure!(points.len() == tangents.len(), "one tangent per sample");
        let mut arc = Arc { points, tangents, classification: ArcClass::Neither };
        arc.classification = classify_arc(&arc, lambda)?;
        Ok(arc)
    }

    /// Polyline length of the sampled arc.
    pub fn arclength(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Classifies an arc: radially-coned at every sample, angularly-coned at
/// every sample, or neither.
pub fn classify_arc(arc: &Arc, lambda: f64) -> Result<ArcClass> {
    ensure!(arc.points.len() >= 2, "an arc needs at least 2 samples");
    ensure!(arc.points.len() == arc.tangents.len(), "one tangent per sample");
    let mut all_radial = true;
    let mut all_angular = true;
    for (z, v) in arc.points.iter().zip(arc.tangents.iter()) {
        ensure!(*v != Complex64::new(0.0, 0.0), "tangents must be nonzero");
        if !planar_in_cone(ConeKind::CStable, lambda, *z, *v)? {
            all_radial = false;
        }
        if !planar_in_cone(ConeKind::KUnstable, lambda, *z, *v)? {
            all_angular = false;
        }
        if !all_radial && !all_angular {
            return Ok(ArcClass::Neither);
        }
    }
    Ok(if all_radial {
        ArcClass::QuasiRadial
    } else {
        ArcClass::QuasiAngular
    })
}

/// A sample at which a sweep found the claimed inequality violated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub z0: Complex64,
    pub epsilon: f64,
    pub quantity: f64,
    pub bound: f64,
    pub what: String,
}

/// Sweep report for the radial-cone contraction and inclusion statements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableConeReport {
    pub lambda: f64,
    pub contraction_bound: f64,
    pub max_ratio_sq: f64,
    pub min_inclusion_margin: f64,
    pub samples_part1: usize,
    pub samples_part2: usize,
    pub violations: Vec<Witness>,
    /// Slope of the wide angular cone used throughout (reconstructed value).
    pub k_tilde_slope: f64,
}

/// Sweep report for the angular-cone expansion, inclusions, and quadrant
/// invariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnstableConeReport {
    pub lambda: f64,
    pub expansion_bound: f64,
    pub min_ratio: f64,
    pub min_forward_inclusion_margin: f64,
    pub min_backward_inclusion_margin: f64,
    pub min_quadrant_margin: f64,
    pub samples_per_part: usize,
    pub violations: Vec<Witness>,
    pub k_tilde_slope: f64,
}

fn wrap_mod_pi(x: f64) -> f64 {
    // to (-pi/2, pi/2]
    let mut y = x % std::f64::consts::PI;
    if y <= -std::f64::consts::FRAC_PI_2 {
        y += std::f64::consts::PI;
    } else if y > std::f64::consts::FRAC_PI_2 {
        y -= std::f64::consts::PI;
    }
    y
}

/// Margin by which the direction double-cone spanned by image rays b1, b2
/// (a sector containing ray c_in) contains the sector of half-width h about
/// ray c_t. Positive means strict inclusion of the target in the span.
fn sector_inclusion_margin(c_in: f64, b1: f64, b2: f64, c_t: f64, h: f64) -> f64 {
    let o1 = wrap_mod_pi(b1 - c_in);
    let o2 = wrap_mod_pi(b2 - c_in);
    let (lo, hi) = (o1.min(o2), o1.max(o2));
    let ct = wrap_mod_pi(c_t - c_in);
    (hi - (ct + h)).min((ct - h) - lo)
}

/// Verifies by stratified sampling that radial-cone vectors over |z0| ≥ 1
/// contract by the closed-form bound and that over the large-modulus regime
/// the image-point cone sits strictly inside the derivative image of the
/// source cone. Requires μ = σ (the member the statements are proved for).
pub fn verify_stable_cone_lemma(p: &MapParams, n_samples: usize, seed: u64) -> Result<StableConeReport> {
    ensure!(
        (p.mu_ratio() - 1.0).abs() < 1e-14,
        "radial-cone statements hold for the μ = σ member; got μ/σ = {}",
        p.mu_ratio()
    );
    let lambda = p.lambda;
    let e0 = stable_half_width(lambda);
    let bound = radial_contraction_bound(lambda);
    ensure!(bound < 1.0, "contraction bound must be below 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();

    // part 1: |z0| >= 1, |eps| <= e0, forced boundary strata every 8th draw
    let mut max_ratio_sq: f64 = 0.0;
    for k in 0..n_samples {
        let z0 = log_uniform_annulus(&mut rng, 1.0, p.outer_radius());
        let eps = match k % 8 {
            0 => e0,
            1 => -e0,
            _ => rng.gen_range(-e0..=e0),
        };
        let v = z0 * Complex64::new(1.0, eps);
        let dv = derivative(p, z0, v)?;
        let ratio_sq = dv.norm_sqr() / v.norm_sqr();
        max_ratio_sq = max_ratio_sq.max(ratio_sq);
        if ratio_sq > bound + tol::SUP_BOUND_SLACK {
            violations.push(Witness {
                z0,
                epsilon: eps,
                quantity: ratio_sq,
                bound,
                what: "radial contraction ratio^2 above bound".into(),
            });
        }
    }

    // part 2: 1-lambda+lambda|z0| >= 4/sqrt(1-lambda)
    let rmin = (4.0 / (1.0 - lambda).sqrt() - (1.0 - lambda)) / lambda;
    let mut min_margin = f64::INFINITY;
    let n2 = n_samples;
    for _ in 0..n2 {
        let z0 = log_uniform_annulus(&mut rng, rmin, p.outer_radius().max(rmin * 1.5));
        let fz = eval_map(p, z0)?;
        let b1 = derivative(p, z0, z0 * Complex64::new(1.0, e0))?.arg();
        let b2 = derivative(p, z0, z0 * Complex64::new(1.0, -e0))?.arg();
        let c_in = derivative(p, z0, z0)?.arg();
        let margin = sector_inclusion_margin(c_in, b1, b2, fz.arg(), e0.atan());
        min_margin = min_margin.min(margin);
        if margin <= 0.0 {
            violations.push(Witness {
                z0,
                epsilon: e0,
                quantity: margin,
                bound: 0.0,
                what: "image cone fails to contain the target radial cone".into(),
            });
        }
    }

    Ok(StableConeReport {
        lambda,
        contraction_bound: bound,
        max_ratio_sq,
        min_inclusion_margin: min_margin,
        samples_part1: n_samples,
        samples_part2: n2,
        violations,
        k_tilde_slope: WIDE_ANGULAR_SLOPE,
    })
}

/// Verifies by stratified sampling the angular-cone expansion bound (all
/// z0 ≠ 0), the two inclusion statements on the large-modulus regime, and the
/// signed-quadrant invariance. Requires μ = σ.
pub fn verify_unstable_cone_lemma(
    p: &MapParams,
    n_samples: usize,
    seed: u64,
) -> Result<UnstableConeReport> {
    ensure!(
        (p.mu_ratio() - 1.0).abs() < 1e-14,
        "angular-cone statements hold for the μ = σ member; got μ/σ = {}",
        p.mu_ratio()
    );
    let lambda = p.lambda;
    let bound = angular_expansion_bound(lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let half_k = ANGULAR_SLOPE.atan();

    // part 1: any z0, wide cone |eps| <= 1, boundary eps = +-1 forced
    let mut min_ratio = f64::INFINITY;
    for k in 0..n_samples {
        let z0 = log_uniform_annulus(&mut rng, 1e-4, p.outer_radius());
        let eps = match k % 8 {
            0 => 1.0,
            1 => -1.0,
            _ => rng.gen_range(-1.0..=1.0),
        };
        let v = z0 * Complex64::new(eps, 1.0);
        let ratio = derivative(p, z0, v)?.norm() / v.norm();
        min_ratio = min_ratio.min(ratio);
        if ratio < bound * (1.0 - tol::SUP_BOUND_SLACK) {
            violations.push(Witness {
                z0,
                epsilon: eps,
                quantity: ratio,
                bound,
                what: "angular expansion ratio below bound".into(),
            });
        }
    }

    // parts 2-3 regime: 1-lambda+lambda|z0| >= 20
    let rmin = (20.0 - (1.0 - lambda)) / lambda;
    let rmax = p.outer_radius().max(rmin * 1.5);
    let mut min_fwd = f64::INFINITY;
    let mut min_bwd = f64::INFINITY;
    let mut min_quad = f64::INFINITY;
    for _ in 0..n_samples {
        let z0 = log_uniform_annulus(&mut rng, rmin, rmax);
        let fz = eval_map(p, z0)?;
        let target_c = (Complex64::new(0.0, 1.0) * fz).arg();

        // forward: image of the narrow cone inside the target narrow cone
        let i1 = derivative(p, z0, z0 * Complex64::new(ANGULAR_SLOPE, 1.0))?.arg();
        let i2 = derivative(p, z0, z0 * Complex64::new(-ANGULAR_SLOPE, 1.0))?.arg();
        let fwd = sector_containment_margin(target_c, half_k, &[i1, i2]);
        min_fwd = min_fwd.min(fwd);
        if fwd <= 0.0 {
            violations.push(Witness {
                z0,
                epsilon: ANGULAR_SLOPE,
                quantity: fwd,
                bound: 0.0,
                what: "derivative image leaves the angular cone".into(),
            });
        }

        // backward: target narrow cone inside the image of the wide cone
        let w1 = derivative(p, z0, z0 * Complex64::new(WIDE_ANGULAR_SLOPE, 1.0))?.arg();
        let w2 = derivative(p, z0, z0 * Complex64::new(-WIDE_ANGULAR_SLOPE, 1.0))?.arg();
        let c_in = derivative(p, z0, z0 * Complex64::new(0.0, 1.0))?.arg();
        let bwd = sector_inclusion_margin(c_in, w1, w2, target_c, half_k);
        min_bwd = min_bwd.min(bwd);
        if bwd <= 0.0 {
            violations.push(Witness {
                z0,
                epsilon: WIDE_ANGULAR_SLOPE,
                quantity: bwd,
                bound: 0.0,
                what: "wide-cone image fails to contain the angular cone".into(),
            });
        }

        // quadrant part: Re z0 >= 0, Im z0 > 0; signed one-sided sector
        let zq = Complex64::new(z0.re.abs(), z0.im.abs().max(1e-6 * z0.norm()));
        let fq = eval_map(p, zq)?;
        let base = (Complex64::new(0.0, 1.0) * fq).arg();
        let e1 = derivative(p, zq, zq * Complex64::new(0.0, 1.0))?.arg();
        let e2 = derivative(p, zq, zq * Complex64::new(-ANGULAR_SLOPE, 1.0))?.arg();
        let o1 = wrap_mod_pi(e1 - base);
        let o2 = wrap_mod_pi(e2 - base);
        let quad = o1.min(o2).min((half_k - o1).min(half_k - o2));
        min_quad = min_quad.min(quad);
        if quad <= 0.0 {
            violations.push(Witness {
                z0: zq,
                epsilon: -ANGULAR_SLOPE,
                quantity: quad,
                bound: 0.0,
                what: "signed-quadrant cone not strictly invariant".into(),
            });
        }
    }

    Ok(UnstableConeReport {
        lambda,
        expansion_bound: bound,
        min_ratio,
        min_forward_inclusion_margin: min_fwd,
        min_backward_inclusion_margin: min_bwd,
        min_quadrant_margin: min_quad,
        samples_per_part: n_samples,
        violations,
        k_tilde_slope: WIDE_ANGULAR_SLOPE,
    })
}

/// Margin by which every ray of `rays` lies strictly inside the double cone
/// of half-width h about c (positive = all strictly inside).
fn sector_containment_margin(c: f64, h: f64, rays: &[f64]) -> f64 {
    rays.iter()
        .map(|r| h - wrap_mod_pi(r - c).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Sweep report for the fiber-extended cones over the hyperbolicity region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkewConeReport {
    pub lambda: f64,
    pub beta: f64,
    /// Fiber factor β|z|^{η/σ} at the outer radius; invariance needs this
    /// comfortably below the planar doubling.
    pub max_fiber_factor: f64,
    pub min_unstable_slope_margin: f64,
    pub min_unstable_weight_margin: f64,
    pub min_stable_slope_margin: f64,
    pub min_stable_weight_margin: f64,
    pub samples: usize,
    pub violations: Vec<Witness>,
    /// (β, worst angular weight margin, worst radial weight margin) over a
    /// decreasing-β ladder. The forward angular check improves as β shrinks
    /// (smaller fiber factor β|z|^{η/σ}); the backward radial check degrades
    /// (the pullback divides fiber parts by that same factor), so the two
    /// admissible-β ranges pull in opposite directions.
    pub beta_ladder: Vec<(f64, f64, f64)>,
    pub k_tilde_slope: f64,
}

/// Verifies forward invariance of the fiber-extended angular cone and
/// backward invariance of the fiber-extended radial cone over bases in the
/// hyperbolicity region, reporting margins and the admissible-β trend.
pub fn verify_skew_cones(p: &MapParams, n_samples: usize, seed: u64) -> Result<SkewConeReport> {
    ensure!(
        (p.mu_ratio() - 1.0).abs() < 1e-14,
        "fiber-cone sweep runs on the μ = σ member; got μ/σ = {}",
        p.mu_ratio()
    );
    let h = HyperbolicityDomain::new(p.lambda);
    let rmax = p.outer_radius();
    ensure!(h.threshold < rmax, "hyperbolicity region empty inside the disk");
    skew_cone_sweep(p, n_samples, seed, true)
}

fn skew_cone_sweep(
    p: &MapParams,
    n_samples: usize,
    seed: u64,
    with_ladder: bool,
) -> Result<SkewConeReport> {
    let lambda = p.lambda;
    let h = HyperbolicityDomain::new(lambda);
    let rmax = p.outer_radius();
    let e0 = stable_half_width(lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut min_u_slope = f64::INFINITY;
    let mut min_u_weight = f64::INFINITY;
    let mut min_s_slope = f64::INFINITY;
    let mut min_s_weight = f64::INFINITY;

    for k in 0..n_samples {
        let z = log_uniform_annulus(&mut rng, h.threshold * 1.0001, rmax);
        let w = uniform_disk(&mut rng, 1.0);
        let x = SkewPoint::new(z, w);
        let y = eval_skew(p, &x)?;

        // forward angular-cone vector: dz in the narrow cone, fiber part up
        // to the cone boundary rho/(1-lambda); boundary strata forced
        let rho = 1.0;
        let eps = match k % 4 {
            0 => ANGULAR_SLOPE,
            1 => -ANGULAR_SLOPE,
            _ => rng.gen_range(-ANGULAR_SLOPE..=ANGULAR_SLOPE),
        };
        let fib_scale = match k % 3 {
            0 => 1.0,
            _ => rng.gen_range(0.0..1.0),
        };
        let dz = z * Complex64::new(eps, 1.0) * rho;
        let dw = unit_dir(&mut rng) * fib_scale * rho / (1.0 - lambda);
        let dy = skew_derivative(p, &x, &SkewTangent { dz, dw, dv: vec![] })?;
        let q = dy.dz / y.z;
        let slope_margin = ANGULAR_SLOPE * q.im.abs() - q.re.abs();
        let weight_margin = q.im.abs() - (1.0 - lambda) * dy.dw.norm();
        min_u_slope = min_u_slope.min(slope_margin);
        min_u_weight = min_u_weight.min(weight_margin);
        if slope_margin <= 0.0 || weight_margin <= 0.0 {
            violations.push(Witness {
                z0: z,
                epsilon: eps,
                quantity: slope_margin.min(weight_margin),
                bound: 0.0,
                what: format!(
                    "fiber-extended angular cone not invariant (slope margin {slope_margin:.3e}, weight margin {weight_margin:.3e}, |dw|/rho {:.3})",
                    dw.norm()
                ),
            });
        }

        // backward radial-cone vector at the image, pulled back
        let eps_s = match k % 4 {
            0 => e0,
            1 => -e0,
            _ => rng.gen_range(-e0..=e0),
        };
        let dz_im = y.z * Complex64::new(1.0, eps_s);
        let dw_im = unit_dir(&mut rng) * fib_scale / (1.0 - lambda);
        let back = skew_derivative_inverse(p, &x, &SkewTangent { dz: dz_im, dw: dw_im, dv: vec![] })?;
        let qb = back.dz / z;
        let s_slope = e0 * qb.re.abs() - qb.im.abs();
        let s_weight = qb.re.abs() - (1.0 - lambda) * back.dw.norm();
        min_s_slope = min_s_slope.min(s_slope);
        min_s_weight = min_s_weight.min(s_weight);
        if s_slope <= 0.0 || s_weight <= 0.0 {
            violations.push(Witness {
                z0: z,
                epsilon: eps_s,
                quantity: s_slope.min(s_weight),
                bound: 0.0,
                what: "fiber-extended radial cone not backward invariant".into(),
            });
        }
    }

    let mut ladder = Vec::new();
    if with_ladder {
        let mut beta0 = p.beta0;
        for _ in 0..6 {
            let q = MapParams { beta0, ..p.clone() };
            let sub = skew_cone_sweep(&q, (n_samples / 10).max(200), seed ^ 0x5eed, false)?;
            ladder.push((q.beta(), sub.min_unstable_weight_margin, sub.min_stable_weight_margin));
            beta0 *= 0.5;
        }
    }

    let report = SkewConeReport {
        lambda,
        beta: p.beta(),
        max_fiber_factor: p.beta() * rmax.powf(p.eta_ratio()),
        min_unstable_slope_margin: min_u_slope,
        min_unstable_weight_margin: min_u_weight,
        min_stable_slope_margin: min_s_slope,
        min_stable_weight_margin: min_s_weight,
        samples: n_samples,
        violations,
        beta_ladder: ladder,
        k_tilde_slope: WIDE_ANGULAR_SLOPE,
    };
    Ok(report)
}
