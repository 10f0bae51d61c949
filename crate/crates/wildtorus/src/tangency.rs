//! Curved-arc machinery over a repelling sub-annulus: shrink the outer loop
//! until the region sits strictly inside its own image, classify arcs whose
//! tangents sweep the angular cone from one boundary ray to the other, lift
//! such arcs backward exactly, certify the tangency their deep lifts converge
//! to, build a member of the class inside the stable set of the real saddle,
//! and evaluate the escape-window arithmetic for arcs pushed through the
//! expansion region.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use anyhow::{anyhow, bail, ensure, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annulus::{build_fundamental_annulus, AnnulusRegion, DEFAULT_COLLAR_RATIO};
use crate::core_maps::{
    derivative, derivative_inverse, eval_map, limit_preimages, preimages, MapParams,
};
use crate::geom::{polyline_length, winding_turns};
use crate::hyperbolicity::{
    angular_expansion_bound, in_cone, Arc, ConeBase, ConeKind, ConeSpec, HyperbolicityDomain,
    TangentVec, ANGULAR_SLOPE,
};
use crate::invariant_set::compute_external_boundary;
use crate::manifolds::{local_unstable_manifold, BackwardOrbit, Node, RefineCriteria};
use crate::tol;

/// Inward-offset ladder for the shrunken outer loop, as multiples of
/// 1/(1 - lambda); every rung is tried and the one with the widest verified
/// image gap wins.
pub const OFFSET_LADDER: [f64; 4] = [0.01, 0.02, 0.05, 0.1];

/// Radius about the spiral source inside which stable-ray windings count.
const SPIRAL_RADIUS: f64 = 0.8;

/// Grid used when bracketing slope crossings inside a lift window.
const WINDOW_SCAN: usize = 48;

/// Samples stored on constructed arcs.
const ARC_SAMPLES: usize = 400;

/// How far (radians) bisected end tangents are pulled inside the cone so the
/// sampled interior never leaves it by roundoff.
const RAY_INSET: f64 = 1e-9;

/// Required clearance of the iterated source preimage inside the region.
const SOURCE_CLEARANCE: f64 = 0.3;

/// Minimal modulus of the iterated source preimage: below ~8 the frame
/// offset of the map (the translation by 1) tilts pulled-back slopes by more
/// than the cone margin and backward lifts stop sweeping the full cone.
const MIN_SOURCE_MODULUS: f64 = 10.0;

fn source_point() -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_3)
}

/// The slope half-angle atan(1/3) of the angular cone.
fn cone_half_angle() -> f64 {
    ANGULAR_SLOPE.atan()
}

/// Signed slope angle of `v` in the rotated frame at `z`: zero along the
/// angular direction i*z, folded to (-pi/2, pi/2] so v and -v agree.
fn slope_angle(z: Complex64, v: Complex64) -> f64 {
    let q = v / z;
    let mut psi = q.re.atan2(q.im);
    if psi > FRAC_PI_2 {
        psi -= PI;
    } else if psi <= -FRAC_PI_2 {
        psi += PI;
    }
    psi
}

/// Inverse of the planar derivative that also works on the bump support,
/// where the closed form is unavailable, via the real 2x2 system.
fn pull_vector(p: &MapParams, z: Complex64, w: Complex64) -> Result<Complex64> {
    if p.eps_perturb == 0.0 {
        return derivative_inverse(p, z, w);
    }
    let d1 = derivative(p, z, Complex64::new(1.0, 0.0))?;
    let di = derivative(p, z, Complex64::new(0.0, 1.0))?;
    let det = d1.re * di.im - d1.im * di.re;
    ensure!(det.abs() > 1e-14, "derivative not invertible at {z}");
    let a = (w.re * di.im - di.re * w.im) / det;
    let b = (d1.re * w.im - w.re * d1.im) / det;
    Ok(Complex64::new(a, b))
}

/// Angle between two directions, folded to [0, pi/2] (lines, not vectors).
fn line_angle(u: Complex64, v: Complex64) -> f64 {
    let a = (u * v.conj()).arg().abs();
    if a > FRAC_PI_2 {
        PI - a
    } else {
        a
    }
}

/// Signed version of the line angle, folded to (-pi/2, pi/2].
fn signed_line_angle(u: Complex64, v: Complex64) -> f64 {
    let mut a = (v * u.conj()).arg();
    if a > FRAC_PI_2 {
        a -= PI;
    } else if a <= -FRAC_PI_2 {
        a += PI;
    }
    a
}

// ---------------------------------------------------------------------------
// repelling annulus
// ---------------------------------------------------------------------------

/// The shrunken annulus with its verified covering margin, the half-gap to
/// its image boundary, and an iterated preimage of the spiral source inside.
#[derive(Clone, Debug)]
pub struct RepellingAnnulus {
    pub region: AnnulusRegion,
    /// Chosen inward offset of the outer loop.
    pub offset: f64,
    /// Minimal best-preimage depth over closed-region samples; positive means
    /// the region sits strictly inside its own image.
    pub covering_margin: f64,
    /// Half the distance from the region to the boundary of its image; the
    /// length bound carried by every accepted curved arc.
    pub separation: f64,
    /// Transversal self-crossing angle inherited from the outer loop.
    pub crossing_angle: f64,
    /// Iterated preimage of the spiral source with clearance inside.
    pub source_preimage: Complex64,
    /// Backward steps from the source to `source_preimage`.
    pub source_depth: usize,
    /// The full backward walk from the source (entry 0) to `source_preimage`.
    pub source_path: Vec<Complex64>,
}

/// Deterministic low-discrepancy points in the bounding box of a polyline.
fn golden_points(bbox: (Complex64, Complex64), n: usize) -> Vec<Complex64> {
    let g = 1.32471795724474602596; // plastic-number lattice
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (0..n)
        .map(|k| {
            let x = (0.5 + a1 * k as f64).fract();
            let y = (0.5 + a2 * k as f64).fract();
            Complex64::new(
                bbox.0.re + x * (bbox.1.re - bbox.0.re),
                bbox.0.im + y * (bbox.1.im - bbox.0.im),
            )
        })
        .collect()
}

fn bounding_box(pts: &[Complex64]) -> (Complex64, Complex64) {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in pts {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    (lo, hi)
}

/// Backward walk from the source preferring the left-half branch (ties
/// alternate sides), stopping at the requested clearance inside the region
/// once the modulus supports the cone-sweep arithmetic.
fn walk_to_region(
    p: &MapParams,
    region: &AnnulusRegion,
    clearance: f64,
    cap: usize,
) -> Result<Vec<Complex64>> {
    let mut path = vec![source_point()];
    let mut flip = false;
    for _ in 0..cap {
        let cur = *path.last().unwrap();
        let pre = preimages(p, cur);
        ensure!(pre.len() == 2, "source walk left the image at {cur}");
        let pick = if (pre[0].re - pre[1].re).abs() > 1e-12 {
            if pre[0].re < pre[1].re {
                pre[0]
            } else {
                pre[1]
            }
        } else {
            flip = !flip;
            if flip == (pre[0].im > pre[1].im) {
                pre[0]
            } else {
                pre[1]
            }
        };
        path.push(pick);
        if pick.norm() >= MIN_SOURCE_MODULUS && region.signed_depth(pick) >= clearance {
            return Ok(path);
        }
    }
    bail!("no iterated source preimage reached clearance {clearance} in {cap} steps");
}

fn try_offset(
    p: &MapParams,
    loop_pts: &[Complex64],
    base: &AnnulusRegion,
    crossing_angle: f64,
    delta: f64,
) -> Result<RepellingAnnulus> {
    let shrunk: Vec<Complex64> = loop_pts
        .iter()
        .map(|z| {
            let t = z.norm();
            ensure!(t > delta + base.collar_radius, "offset {delta} swallows the loop");
            Ok(z * (1.0 - delta / t))
        })
        .collect::<Result<_>>()?;
    let region = AnnulusRegion {
        outer: Arc::from_points(shrunk, p.lambda)?,
        inner: base.inner.clone(),
        r_param: base.r_param,
        collar_radius: base.collar_radius,
    };

    // covering margin: every closed-region sample needs a preimage strictly
    // inside, with the minimum depth reported
    let mut samples: Vec<Complex64> = Vec::new();
    samples.extend_from_slice(&region.outer.points);
    samples.extend_from_slice(&region.inner.points);
    let bbox = bounding_box(&region.outer.points);
    samples.extend(golden_points(bbox, 4000).into_iter().filter(|z| region.contains(*z)).take(600));
    let margin = samples
        .par_iter()
        .map(|z| {
            let pre = preimages(p, *z);
            if pre.len() != 2 {
                return f64::NEG_INFINITY;
            }
            pre.iter().map(|w| region.signed_depth(*w)).fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min);
    ensure!(margin > 0.0, "covering margin {margin:.2e} is not positive");

    // image-gap: boundary samples whose image point has no preimage strictly
    // inside the region lie on the image boundary; half their least distance
    // to the region is the arc-length bound
    let boundary: Vec<Complex64> = region
        .outer
        .points
        .iter()
        .chain(region.inner.points.iter())
        .copied()
        .collect();
    let gaps: Vec<f64> = boundary
        .par_iter()
        .map(|z| -> Result<f64> {
            let w = eval_map(p, *z)?;
            let pre = preimages(p, w);
            let covered = pre.iter().any(|q| region.signed_depth(*q) > 1e-9);
            if covered {
                return Ok(f64::INFINITY);
            }
            let depth = region.signed_depth(w);
            ensure!(depth < 0.0, "image boundary point {w} lies inside the region");
            Ok(-depth)
        })
        .collect::<Result<_>>()?;
    let gap = gaps.into_iter().fold(f64::INFINITY, f64::min);
    ensure!(gap.is_finite() && gap > 0.0, "no image-boundary sample found");
    let separation = gap / 2.0;

    ensure!(crossing_angle > 0.005, "self-crossing angle {crossing_angle:.4} too shallow");

    let path = walk_to_region(p, &region, SOURCE_CLEARANCE, 200)?;
    Ok(RepellingAnnulus {
        source_preimage: *path.last().unwrap(),
        source_depth: path.len() - 1,
        source_path: path,
        region,
        offset: delta,
        covering_margin: margin,
        separation,
        crossing_angle,
    })
}

/// Shrinks the outer loop inward along rays through the origin over the
/// offset ladder, verifies for each rung that the region maps strictly over
/// itself, and keeps the rung with the widest image gap.
pub fn build_repelling_annulus(p: &MapParams) -> Result<RepellingAnnulus> {
    p.validate()?;
    let ext = compute_external_boundary(p)?;
    let base = build_fundamental_annulus(p, DEFAULT_COLLAR_RATIO)?;
    let scale = 1.0 / (1.0 - p.lambda);
    let mut failures = Vec::new();
    let mut best: Option<RepellingAnnulus> = None;
    for ratio in OFFSET_LADDER {
        let delta = ratio * scale;
        match try_offset(p, &ext.arc.points, &base, ext.crossing_angle, delta) {
            Ok(cand) => {
                if best.as_ref().map_or(true, |b| cand.separation > b.separation) {
                    best = Some(cand);
                }
            }
            Err(e) => failures.push(format!("offset {delta:.3}: {e:#}")),
        }
    }
    best.ok_or_else(|| {
        anyhow!("no ladder offset produced a verified repelling annulus: {}", failures.join("; "))
    })
}

// ---------------------------------------------------------------------------
// curved arcs
// ---------------------------------------------------------------------------

/// An arc accepted by the class checks, carrying the length bound it was
/// checked against.
#[derive(Clone, Debug)]
pub struct CurvedArc {
    pub arc: Arc,
    pub max_length: f64,
}

/// Per-property diagnostics of the class membership test.
#[derive(Clone, Debug)]
pub struct CurvedArcCheck {
    pub accepted: bool,
    /// Some sample lies in the closed region.
    pub meets_region: bool,
    /// Arclength within the separation bound.
    pub length_ok: bool,
    /// Every tangent nonzero and inside the angular cone.
    pub tangents_in_cone: bool,
    /// End tangents proportional to the two cone boundary rays.
    pub end_rays_ok: bool,
    pub length: f64,
    pub max_slope_angle: f64,
    pub start_ray_residual: f64,
    pub end_ray_residual: f64,
}

/// Relative residual of `v` against the boundary ray direction z*(i + s).
fn ray_residual(z: Complex64, v: Complex64, s: f64) -> f64 {
    let ray = z * Complex64::new(s, 1.0);
    let w = v / ray;
    if w.norm() == 0.0 {
        return f64::INFINITY;
    }
    w.im.abs() / w.norm()
}

/// Tests the three class properties of an arc against the region: it meets
/// the region within the length bound, its tangents live in the angular
/// cone, and its end tangents lie on the two cone boundary rays.
pub fn is_curved_arc(p: &MapParams, core: &RepellingAnnulus, arc: &Arc) -> CurvedArcCheck {
    let n = arc.points.len();
    let meets_region =
        arc.points.iter().any(|z| core.region.signed_depth(*z) >= -1e-9);
    let length = arc.arclength();
    let length_ok = length <= core.separation * (1.0 + 1e-12);

    let mut in_cone_all = n >= 2;
    let mut max_psi: f64 = 0.0;
    for (z, v) in arc.points.iter().zip(arc.tangents.iter()) {
        if v.norm() == 0.0 {
            in_cone_all = false;
            continue;
        }
        let spec =
            ConeSpec { kind: ConeKind::KUnstable, base: ConeBase::Planar(*z), lambda: p.lambda };
        match in_cone(&spec, &TangentVec::Planar(*v)) {
            Ok(true) => max_psi = max_psi.max(slope_angle(*z, *v).abs()),
            _ => in_cone_all = false,
        }
    }

    let start_res = ray_residual(arc.points[0], arc.tangents[0], ANGULAR_SLOPE);
    let end_res = ray_residual(arc.points[n - 1], arc.tangents[n - 1], -ANGULAR_SLOPE);
    let end_rays_ok = start_res <= tol::END_TANGENT_REL && end_res <= tol::END_TANGENT_REL;

    CurvedArcCheck {
        accepted: meets_region && length_ok && in_cone_all && end_rays_ok,
        meets_region,
        length_ok,
        tangents_in_cone: in_cone_all,
        end_rays_ok,
        length,
        max_slope_angle: max_psi,
        start_ray_residual: start_res,
        end_ray_residual: end_res,
    }
}

/// Analytic member of the class anchored at the iterated source preimage:
/// the slope sweeps linearly from +1/3 to -1/3 while the radius stays pinned,
/// with the arclength set to `fill` times the separation bound.
pub fn witness_curved_arc(
    p: &MapParams,
    core: &RepellingAnnulus,
    fill: f64,
) -> Result<CurvedArc> {
    ensure!(fill > 0.0 && fill <= 2.0, "fill factor {fill} outside (0, 2]");
    let anchor = core.source_preimage;
    let target = fill * core.separation;
    let build = |rho: f64| -> (Vec<Complex64>, Vec<Complex64>) {
        (0..ARC_SAMPLES)
            .map(|i| {
                let t = i as f64 / (ARC_SAMPLES - 1) as f64;
                let s = ANGULAR_SLOPE * (1.0 - 2.0 * t);
                let expo = Complex64::new(rho * (t - t * t) / 3.0, rho * t);
                let z = anchor * expo.exp();
                (z, z * rho * Complex64::new(s, 1.0))
            })
            .unzip()
    };
    let mut rho = target / (anchor.norm() * 1.02);
    let (pts, _) = build(rho);
    rho *= target / polyline_length(&pts);
    let (pts, tans) = build(rho);
    let len = polyline_length(&pts);
    ensure!((len - target).abs() <= 1e-6 * target, "length calibration missed: {len} vs {target}");
    Ok(CurvedArc { arc: Arc::with_tangents(pts, tans, p.lambda)?, max_length: core.separation })
}

// ---------------------------------------------------------------------------
// exact backward lifts
// ---------------------------------------------------------------------------

/// Cubic interpolation of a sampled arc: directions come from the stored
/// tangents (oriented along the chords), magnitudes from chord speeds, so the
/// evaluator is a smooth curve through the samples with matching tangents.
struct HermiteArc {
    pts: Vec<Complex64>,
    ms: Vec<Complex64>,
}

impl HermiteArc {
    fn build(arc: &Arc) -> Result<HermiteArc> {
        let n = arc.points.len();
        ensure!(n >= 2, "an arc needs at least 2 samples");
        let dt = 1.0 / (n - 1) as f64;
        let mut ms = Vec::with_capacity(n);
        for k in 0..n {
            let raw = arc.tangents[k];
            ensure!(raw.norm() > 0.0, "zero tangent at sample {k}");
            let chord = if k + 1 < n {
                arc.points[k + 1] - arc.points[k]
            } else {
                arc.points[k] - arc.points[k - 1]
            };
            let mut dir = raw / raw.norm();
            if (dir * chord.conj()).re < 0.0 {
                dir = -dir;
            }
            let speed = if k == 0 {
                (arc.points[1] - arc.points[0]).norm() / dt
            } else if k == n - 1 {
                (arc.points[n - 1] - arc.points[n - 2]).norm() / dt
            } else {
                ((arc.points[k + 1] - arc.points[k]).norm()
                    + (arc.points[k] - arc.points[k - 1]).norm())
                    / (2.0 * dt)
            };
            ms.push(dir * speed);
        }
        Ok(HermiteArc { pts: arc.points.clone(), ms })
    }

    /// Point and d(point)/dt at parameter t in [0, 1].
    fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let n = self.pts.len();
        let x = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (x.floor() as usize).min(n - 2);
        let u = x - k as f64;
        let dt = 1.0 / (n - 1) as f64;
        let (p0, p1) = (self.pts[k], self.pts[k + 1]);
        let (m0, m1) = (self.ms[k] * dt, self.ms[k + 1] * dt);
        let (u2, u3) = (u * u, u * u * u);
        // the chord form (p1 - p0 is exact for neighboring samples) avoids
        // the cancellation p0*h - p1*h that would quantize the tangent
        // direction and wreck deep backward lifts
        let d = p1 - p0;
        let point =
            p0 + d * (3.0 * u2 - 2.0 * u3) + m0 * (u3 - 2.0 * u2 + u) + m1 * (u3 - u2);
        let dp_du = d * (6.0 * u - 6.0 * u2)
            + m0 * (3.0 * u2 - 4.0 * u + 1.0)
            + m1 * (3.0 * u2 - 2.0 * u);
        (point, dp_du * (n - 1) as f64)
    }
}

/// Evaluates the level-`levels` backward lift of the base arc at parameter t:
/// each level takes the preimage branch nearest its anchor, keeping every
/// evaluation an exact closed-form chain (no stored polyline is reused).
fn chain_eval(
    p: &MapParams,
    base: &HermiteArc,
    anchors: &[Complex64],
    levels: usize,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let (mut z, mut v) = base.eval(t);
    for a in anchors.iter().take(levels) {
        let pre = preimages(p, z);
        ensure!(pre.len() == 2, "lift chain left the image at {z}");
        let w = if (pre[0] - a).norm() <= (pre[1] - a).norm() { pre[0] } else { pre[1] };
        v = pull_vector(p, w, v)?;
        z = w;
    }
    Ok((z, v))
}

/// Finds the parameter window over which the slope of the evaluated curve
/// sweeps from the +1/3 boundary ray down to the -1/3 ray while staying
/// inside the cone, bisecting both ends onto the rays (slightly inset).
fn slope_window<F>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(Complex64, Complex64)>,
{
    let b = cone_half_angle();
    let n = WINDOW_SCAN;
    let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let psis: Vec<f64> = ts
        .iter()
        .map(|t| {
            let (z, v) = f(*t)?;
            ensure!(v.norm() > 0.0, "zero tangent in slope scan");
            Ok(slope_angle(z, v))
        })
        .collect::<Result<_>>()?;

    // locate the +b down-crossing, then the following -b down-crossing with
    // the cone respected in between; fold jumps (near +-pi) are skipped
    let fold = |a: f64, c: f64| (a - c).abs() > 1.5;
    let mut window = None;
    'outer: for i in 0..n {
        if fold(psis[i], psis[i + 1]) || !(psis[i] > b && psis[i + 1] <= b) {
            continue;
        }
        for j in i + 1..=n {
            if j < n && fold(psis[j], psis[j + 1]) {
                continue 'outer;
            }
            if psis[j] < -b {
                // verify the interior stayed inside the cone
                if psis[i + 1..j].iter().all(|p| p.abs() <= b + 1e-9) {
                    window = Some((i, j));
                }
                break 'outer;
            }
        }
        break;
    }
    let (i, j) = window.ok_or_else(|| {
        if std::env::var_os("WILDTORUS_DEBUG_SCAN").is_some() {
            eprintln!(
                "scan failure: width {:.3e} psis {:?}",
                hi - lo,
                psis.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>()
            );
        }
        anyhow!("no cone sweep from +1/3 to -1/3 found in the window [{lo:.6}, {hi:.6}]")
    })?;

    // interior reference points with slope nearest zero
    let mid_idx = (i + 1..j)
        .min_by(|a, c| psis[*a].abs().partial_cmp(&psis[*c].abs()).unwrap())
        .ok_or_else(|| anyhow!("degenerate slope window"))?;
    let bisect = |mut a: f64, mut c: f64, target: f64| -> Result<f64> {
        let g = |t: f64| -> Result<f64> {
            let (z, v) = f(t)?;
            Ok(slope_angle(z, v) - target)
        };
        let (mut ga, gc) = (g(a)?, g(c)?);
        ensure!(ga * gc <= 0.0, "slope target {target:.6} not bracketed");
        for _ in 0..60 {
            let m = 0.5 * (a + c);
            let gm = g(m)?;
            if ga * gm <= 0.0 {
                c = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        Ok(0.5 * (a + c))
    };
    let tau = bisect(ts[i], ts[mid_idx], b - RAY_INSET)?;
    let tau2 = bisect(ts[mid_idx], ts[j], -b + RAY_INSET)?;
    ensure!(tau < tau2, "slope window collapsed");
    Ok((tau, tau2))
}

/// Chooses the preimage branch of the window midpoint whose induced lift
/// meets the region; with both valid the deeper one wins.
fn pick_branch(
    p: &MapParams,
    core: &RepellingAnnulus,
    base: &HermiteArc,
    anchors: &[Complex64],
    lo: f64,
    hi: f64,
) -> Result<Complex64> {
    let levels = anchors.len();
    let mid = chain_eval(p, base, anchors, levels, 0.5 * (lo + hi))?.0;
    let cands = preimages(p, mid);
    ensure!(cands.len() == 2, "window midpoint {mid} left the image");
    let mut best: Option<(f64, Complex64)> = None;
    for cand in cands {
        let mut ext = anchors.to_vec();
        ext.push(cand);
        let mut depth = f64::NEG_INFINITY;
        for i in 0..24 {
            let t = lo + (hi - lo) * i as f64 / 23.0;
            let z = chain_eval(p, base, &ext, levels + 1, t)?.0;
            depth = depth.max(core.region.signed_depth(z));
        }
        if depth >= -1e-9 && best.map_or(true, |(d, _)| depth > d) {
            best = Some((depth, cand));
        }
    }
    best.map(|(_, c)| c)
        .ok_or_else(|| anyhow!("no preimage branch of the lift meets the repelling annulus"))
}

/// One backward lift of a curved arc restricted to its own cone sweep.
#[derive(Clone, Debug)]
pub struct LiftOutcome {
    pub lifted: CurvedArc,
    /// Parameter window of the parent that the lift re-parameterizes.
    pub window: (f64, f64),
    /// Arclength ratio lift/parent; at most 2/3.
    pub contraction: f64,
    /// Branch anchor used to keep the preimage chain continuous.
    pub anchor: Complex64,
}

/// Lifts a curved arc one level backward: picks the preimage branch meeting
/// the region and re-parameterizes to the sub-window whose tangents sweep
/// the cone between its boundary rays.
pub fn lift_curved_arc(
    p: &MapParams,
    core: &RepellingAnnulus,
    c: &CurvedArc,
) -> Result<LiftOutcome> {
    let check = is_curved_arc(p, core, &c.arc);
    ensure!(check.accepted, "input rejected by the class diagnostics: {check:?}");
    let base = HermiteArc::build(&c.arc)?;
    let anchor = pick_branch(p, core, &base, &[], 0.0, 1.0)?;
    let anchors = [anchor];
    let f = |t: f64| chain_eval(p, &base, &anchors, 1, t);
    let (tau, tau2) = slope_window(&f, 0.0, 1.0)?;
    let (pts, tans): (Vec<_>, Vec<_>) = (0..ARC_SAMPLES)
        .map(|i| f(tau + (tau2 - tau) * i as f64 / (ARC_SAMPLES - 1) as f64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let lifted = Arc::with_tangents(pts, tans, p.lambda)?;
    let contraction = lifted.arclength() / c.arc.arclength();
    ensure!(
        contraction <= 2.0 / 3.0 + 1e-9,
        "lift contraction {contraction:.6} exceeds 2/3"
    );
    Ok(LiftOutcome {
        lifted: CurvedArc { arc: lifted, max_length: core.separation },
        window: (tau, tau2),
        contraction,
        anchor,
    })
}

// ---------------------------------------------------------------------------
// tangency certificates
// ---------------------------------------------------------------------------

/// A certified tangency: the marked backward orbit of the deep lifts and the
/// unstable direction it induces at the base arc.
#[derive(Clone, Debug)]
pub struct TangencyCertificate {
    /// Parameter on the input arc where the tangency is certified.
    pub t0: f64,
    /// Marked points of the lift tower; entry 0 lies on the input arc.
    pub orbit: BackwardOrbit,
    /// Normalized push-forward direction at the tangency point.
    pub unstable_direction: Complex64,
    /// Angle between the arc tangent and the unstable direction.
    pub angle_residual: f64,
    pub depth: usize,
    /// Residual measured against push-forwards from every level.
    pub residual_by_depth: Vec<f64>,
    /// Fitted per-level decay ratio of the residuals above the floor.
    pub decay_ratio: f64,
    /// Worst distance of an orbit point from the region (0 = inside).
    pub max_region_clearance: f64,
    /// Smallest modulus along the orbit (expansion-region bookkeeping).
    pub min_orbit_modulus: f64,
    /// Levels whose window was still wider than the parameter resolution.
    pub refined_levels: usize,
}

/// Iterates the exact backward lift `depth` times, collects the marked
/// backward orbit at the surviving parameter, pushes a cone vector forward
/// along it, and certifies the angle to the arc tangent together with its
/// geometric decay in depth.
pub fn find_tangency(
    p: &MapParams,
    core: &RepellingAnnulus,
    c: &CurvedArc,
    depth: usize,
) -> Result<TangencyCertificate> {
    ensure!(depth >= 30, "measured residual decay needs depth >= 30, got {depth}");
    let check = is_curved_arc(p, core, &c.arc);
    ensure!(check.accepted, "input rejected by the class diagnostics: {check:?}");
    let base = HermiteArc::build(&c.arc)?;

    let mut anchors: Vec<Complex64> = Vec::with_capacity(depth);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // length proxy |d(chain)/dt| * window width: the tangent chain is exact,
    // so the proxy keeps resolving lengths far below the coordinate roundoff
    // where a sampled polyline would drown in noise
    let measure = |anchors: &[Complex64], levels: usize, a: f64, b: f64| -> Result<f64> {
        let (_, v) = chain_eval(p, &base, anchors, levels, 0.5 * (a + b))?;
        Ok(v.norm() * (b - a))
    };
    let mut prev_len = measure(&anchors, 0, lo, hi)?;
    let mut refined_levels = 0;
    for level in 1..=depth {
        let anchor = pick_branch(p, core, &base, &anchors, lo, hi)
            .with_context(|| format!("lift level {level}"))?;
        anchors.push(anchor);
        // the slope amplification of the backward lifts magnifies the base
        // tangent evaluation noise by the inverse window width; below this
        // width the scan would see noise, so the window freezes and the
        // chain keeps extending through it
        if hi - lo <= 1e-11 {
            continue;
        }
        let f = |t: f64| chain_eval(p, &base, &anchors, level, t);
        let (a, b) = slope_window(&f, lo, hi).with_context(|| format!("lift level {level}"))?;
        lo = a;
        hi = b;
        let len = measure(&anchors, level, lo, hi)?;
        ensure!(
            len <= prev_len * (2.0 / 3.0 + 1e-9),
            "lift contraction failed at level {level}: {len:.3e} vs {prev_len:.3e}"
        );
        prev_len = len;
        refined_levels = level;
    }

    // marked parameter: the deepest window's midpoint; past the resolution
    // freeze the window stops localizing, so the deeper tower pins the
    // parameter by the zero of the signed tangent-vs-pushforward angle
    let mut t0 = 0.5 * (lo + hi);
    let deep_residual = |t: f64| -> Result<f64> {
        let (z0t, tangent) = base.eval(t);
        let mut pts = Vec::with_capacity(depth + 1);
        pts.push(z0t);
        for a in &anchors {
            let pre = preimages(p, *pts.last().unwrap());
            ensure!(pre.len() == 2, "marked orbit left the image");
            pts.push(if (pre[0] - a).norm() <= (pre[1] - a).norm() { pre[0] } else { pre[1] });
        }
        let deep = pts[depth];
        let mut v = Complex64::new(0.0, 1.0) * deep / deep.norm();
        for k in (1..=depth).rev() {
            v = derivative(p, pts[k], v)?;
            v /= v.norm();
        }
        Ok(signed_line_angle(tangent, v))
    };
    if refined_levels < depth {
        let (mut a, mut b) = (lo, hi);
        let (mut ga, gb) = (deep_residual(a)?, deep_residual(b)?);
        if ga * gb <= 0.0 {
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let gm = deep_residual(m)?;
                if ga * gm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            t0 = 0.5 * (a + b);
        }
    }
    let mut points = vec![base.eval(t0).0];
    let mut branches = Vec::with_capacity(depth);
    for a in &anchors {
        let cur = *points.last().unwrap();
        let pre = preimages(p, cur);
        ensure!(pre.len() == 2, "marked orbit left the image at {cur}");
        let idx = if (pre[0] - a).norm() <= (pre[1] - a).norm() { 0 } else { 1 };
        branches.push(idx as u8);
        points.push(pre[idx]);
    }
    for w in points.windows(2) {
        let fwd = eval_map(p, w[1])?;
        ensure!(
            (fwd - w[0]).norm() <= tol::PREIMAGE_ABS * (1.0 + w[0].norm()),
            "marked orbit broke the forward closure"
        );
    }

    // push a cone vector forward from every level and record the angles
    let tangent = base.eval(t0).1;
    let mut residuals = Vec::with_capacity(depth);
    let mut direction = Complex64::new(0.0, 1.0);
    for j in 1..=depth {
        let mut v = Complex64::new(0.0, 1.0) * points[j] / points[j].norm();
        for k in (1..=j).rev() {
            v = derivative(p, points[k], v)?;
            v /= v.norm();
        }
        if j == depth {
            direction = v;
        }
        residuals.push(line_angle(tangent, v));
    }
    let angle_residual = *residuals.last().unwrap();
    if std::env::var_os("WILDTORUS_DEBUG_RESIDUALS").is_some() {
        eprintln!("residuals: {:?}", residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>());
    }
    ensure!(
        angle_residual < tol::TANGENCY_RESIDUAL,
        "angle residual {angle_residual:.3e} misses the certificate bound"
    );

    // geometric decay above the numerical floor: the residual oscillates
    // under the phase rotation of the complex multiplier, so monotonicity is
    // checked across a stride wider than the oscillation period and the
    // per-level ratio comes from a least-squares fit of the log residuals
    let floor = (angle_residual.max(1e-13)) * 10.0;
    let cutoff = residuals.iter().rposition(|r| *r > floor).map_or(0, |i| i + 1);
    let above = &residuals[..cutoff];
    const STRIDE: usize = 8;
    let decay_ratio = if above.len() > STRIDE + 2 {
        for j in 0..above.len() - STRIDE {
            ensure!(
                above[j + STRIDE] <= above[j] * 0.9,
                "residuals do not decay along the lift tower ({:.3e} at level {} -> {:.3e} at \
                 level {})",
                above[j],
                j + 1,
                above[j + STRIDE],
                j + STRIDE + 1
            );
        }
        let n = above.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (j, r) in above.iter().enumerate() {
            let (x, y) = (j as f64, r.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let ratio = slope.exp();
        ensure!(ratio <= 0.9, "residual decay ratio {ratio:.4} exceeds 0.9");
        ratio
    } else {
        0.0
    };

    let max_clearance = points
        .iter()
        .map(|z| (-core.region.signed_depth(*z)).max(0.0))
        .fold(0.0_f64, f64::max);
    ensure!(
        max_clearance <= 2.0 * core.separation * (1.0 + 1e-6),
        "orbit left the image of the region: clearance {max_clearance:.3e}"
    );
    let min_modulus = points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);

    Ok(TangencyCertificate {
        t0,
        orbit: BackwardOrbit {
            points,
            branches,
            region_tag: "image of the repelling annulus".to_string(),
        },
        unstable_direction: direction,
        angle_residual,
        depth,
        residual_by_depth: residuals,
        decay_ratio,
        max_region_clearance: max_clearance,
        min_orbit_modulus: min_modulus,
        refined_levels,
    })
}

// ---------------------------------------------------------------------------
// stable spiral and class extraction
// ---------------------------------------------------------------------------

/// Upper-half-plane preimage branch (the half-angle with nonnegative
/// imaginary part), for the map or its modulus-1 limit.
fn upper_preimage(p: &MapParams, zeta: Complex64, limit: bool) -> Result<Complex64> {
    let pre = if limit { limit_preimages(zeta) } else { preimages(p, zeta) };
    ensure!(pre.len() == 2, "point {zeta} has no preimage");
    Ok(if pre[0].im >= pre[1].im { pre[0] } else { pre[1] })
}

/// Construction record of the stable-set member of the curved-arc class.
#[derive(Clone, Debug)]
pub struct StableSpiralReport {
    pub curved: CurvedArc,
    /// Backward levels of the ray ladder.
    pub ladder_depth: usize,
    /// Winding about the source of the limit-map ladder piece.
    pub limit_winding: f64,
    /// Winding about the source after transport to the actual map.
    pub transported_winding: f64,
    /// Winding about the iterated source preimage after pullback, on the
    /// piece trimmed to half the separation bound.
    pub pullback_winding: f64,
    /// Length of that trimmed piece.
    pub pullback_length: f64,
    /// Worst |Im| of the forward replay onto the negative real ray.
    pub ray_residual: f64,
    /// Worst single-step closure error along the whole backward pipeline.
    pub membership_error: f64,
}

/// Failure modes of a guided branch walk: the target entered the
/// preimage-free disk (the walked strand pinches there and resumes on the far
/// side), the nearest-branch vote was indecisive away from a pinch, or a
/// tangent pull failed outright.
enum ChainErr {
    Gap,
    Ambiguous(Complex64),
    Other(anyhow::Error),
}

/// Branch pairs closer together than this sit next to the half-angle pinch
/// (both near the singular point), where either choice rejoins the same deep
/// tail, so an indecisive vote there is harmless.
const PINCH_NEIGHBORHOOD: f64 = 0.25;

/// Log-parameter resolution to which a gap edge is localized.
const EDGE_LN_FLOOR: f64 = 3e-8;

/// Log-parameter floor for curvature-driven refinement of the march.
const GEOM_LN_FLOOR: f64 = 1e-7;

/// Log-parameter floor below which a persistent ambiguous vote stops the
/// march instead of refining further.
const AMBIG_LN_FLOOR: f64 = 1e-9;

/// One backward chain at ray parameter s: the preimage branch at each level
/// is the one nearest the matching level of a guide chain, with a
/// decisiveness guard against ambiguous choices away from pinches.  Returns
/// every chain point together with the pulled-back ray tangent at the deep
/// end (the tangent is left untouched in limit mode).
fn guided_chain_inner(
    p: &MapParams,
    s: f64,
    limit: bool,
    guide: &[Complex64],
) -> std::result::Result<(Vec<Complex64>, Complex64), ChainErr> {
    let mut z = Complex64::new(-s, 0.0);
    let mut v = Complex64::new(-1.0, 0.0);
    let mut chain = Vec::with_capacity(guide.len());
    chain.push(z);
    for g in &guide[1..] {
        let pre = if limit { limit_preimages(z) } else { preimages(p, z) };
        if pre.len() != 2 {
            return Err(ChainErr::Gap);
        }
        let (near, far) = if (pre[0] - g).norm() <= (pre[1] - g).norm() {
            (pre[0], pre[1])
        } else {
            (pre[1], pre[0])
        };
        if (near - g).norm() >= 0.5 * (far - g).norm()
            && (near - far).norm() >= PINCH_NEIGHBORHOOD
        {
            return Err(ChainErr::Ambiguous(z));
        }
        if !limit {
            v = pull_vector(p, near, v).map_err(ChainErr::Other)?;
        }
        z = near;
        chain.push(z);
    }
    Ok((chain, v))
}

/// Anyhow-surface wrapper over the guided branch walk.
fn guided_chain(p: &MapParams, s: f64, guide: &[Complex64]) -> Result<(Vec<Complex64>, Complex64)> {
    match guided_chain_inner(p, s, false, guide) {
        Ok(out) => Ok(out),
        Err(ChainErr::Gap) => bail!("chain parameter {s} sits over a preimage-free pinch"),
        Err(ChainErr::Ambiguous(z)) => bail!("transport branch ambiguous at {z}"),
        Err(ChainErr::Other(e)) => Err(e),
    }
}

/// Extends a chain endpoint down the anchored source walk, returning the
/// appended points and the pulled tangent.
fn extend_tail(
    p: &MapParams,
    tail: &[Complex64],
    mut z: Complex64,
    mut v: Complex64,
) -> Result<(Vec<Complex64>, Complex64)> {
    let mut pts = Vec::with_capacity(tail.len());
    for a in tail {
        let pre = preimages(p, z);
        ensure!(pre.len() == 2, "pullback left the image at {z}");
        let w = if (pre[0] - a).norm() <= (pre[1] - a).norm() { pre[0] } else { pre[1] };
        v = pull_vector(p, w, v)?;
        z = w;
        pts.push(z);
    }
    Ok((pts, v))
}

/// Result of marching the backward ladder across the ray grid.
struct MarchOutcome {
    /// Accepted ray parameters, ascending (refined near branch pinches).
    svals: Vec<f64>,
    /// Deep endpoint and pulled tangent per accepted parameter.
    ends: Vec<(Complex64, Complex64)>,
    /// Sparse full chains kept as guides for later arbitrary evaluation.
    guides: Vec<(f64, Vec<Complex64>)>,
}

/// Marches the backward ladder across the ray grid at a fixed depth.  Each
/// chain is guided by its predecessor (the first one by a pure max-im seed
/// ladder).  Preimage-free gaps are crossed: both edges are localized by
/// bisection and the march resumes on the far side, where the strand
/// re-emerges from the same pinch limit.  Curvature-driven refinement keeps
/// the endpoint polyline smooth through the dives next to each pinch.  The
/// march stops on ball exit, on a persistent ambiguous vote, or at the grid
/// end.
fn march_chains(
    p: &MapParams,
    grid: &[f64],
    depth: usize,
    src: Complex64,
    limit: bool,
) -> Result<MarchOutcome> {
    let mut seed = vec![Complex64::new(-grid[0], 0.0)];
    for _ in 0..depth {
        seed.push(upper_preimage(p, seed[seed.len() - 1], limit)?);
    }
    let mut out = MarchOutcome { svals: Vec::new(), ends: Vec::new(), guides: Vec::new() };
    let mut last_stored = f64::NEG_INFINITY;
    let mut accept = |s: f64, end: Complex64, v: Complex64, chain: &Vec<Complex64>, out: &mut MarchOutcome| {
        out.svals.push(s);
        out.ends.push((end, v));
        if s.ln() - last_stored >= 3.6e-3 {
            last_stored = s.ln();
            out.guides.push((s, chain.clone()));
        }
    };
    let debug = std::env::var("WILDTORUS_DEBUG_SPIRAL").is_ok();
    let mut prev_chain = seed;
    let mut prev_s = grid[0];
    let mut targets: Vec<f64> = grid.iter().rev().copied().collect();
    let mut inserted = 0usize;
    let mut skipping = false;
    while let Some(s) = targets.pop() {
        match guided_chain_inner(p, s, limit, &prev_chain) {
            Ok((chain, v)) => {
                let end = chain[depth];
                if (end - src).norm() > SPIRAL_RADIUS {
                    // refine toward the exit, then stop
                    let lgap = s.ln() - prev_s.ln();
                    if !skipping && lgap > GEOM_LN_FLOOR && inserted < 500_000 {
                        inserted += 1;
                        targets.push(s);
                        targets.push(((s.ln() + prev_s.ln()) / 2.0).exp());
                        continue;
                    }
                    if debug {
                        eprintln!(
                            "  march stop s {s:.4e}: ball exit |z-src| {:.4} after {} pts ({inserted} refined)",
                            (end - src).norm(),
                            out.ends.len()
                        );
                    }
                    break;
                }
                if skipping {
                    // first surviving parameter after a gap: localize the far
                    // edge, recording the climb back out of the pinch dive
                    skipping = false;
                    let mut lo = prev_s.ln();
                    let mut stack: Vec<(f64, Vec<Complex64>, Complex64)> = vec![(s, chain, v)];
                    while stack[stack.len() - 1].0.ln() - lo > EDGE_LN_FLOOR && inserted < 500_000 {
                        inserted += 1;
                        let mid = ((stack[stack.len() - 1].0.ln() + lo) / 2.0).exp();
                        let res = guided_chain_inner(p, mid, limit, &stack[stack.len() - 1].1);
                        match res {
                            Ok((c2, v2)) if (c2[depth] - src).norm() <= SPIRAL_RADIUS => {
                                stack.push((mid, c2, v2));
                            }
                            _ => lo = mid.ln(),
                        }
                    }
                    if debug {
                        eprintln!(
                            "  gap crossed: resume s {:.6e}, far-edge dive recorded {} pts",
                            s,
                            stack.len()
                        );
                    }
                    for (ms, mc, mv) in stack.into_iter().rev() {
                        accept(ms, mc[depth], mv, &mc, &mut out);
                        prev_chain = mc;
                        prev_s = ms;
                    }
                    continue;
                }
                let lgap = s.ln() - prev_s.ln();
                if let Some((pe, _)) = out.ends.last() {
                    let step = (end - pe).norm();
                    let rad = (end - src).norm().min((pe - src).norm());
                    if (step > 0.25 * rad || step > 0.05)
                        && lgap > GEOM_LN_FLOOR
                        && inserted < 500_000
                    {
                        inserted += 1;
                        targets.push(s);
                        targets.push(((s.ln() + prev_s.ln()) / 2.0).exp());
                        continue;
                    }
                }
                accept(s, end, v, &chain, &mut out);
                prev_chain = chain;
                prev_s = s;
            }
            Err(ChainErr::Gap) => {
                if skipping {
                    continue;
                }
                let lgap = s.ln() - prev_s.ln();
                if lgap > EDGE_LN_FLOOR && inserted < 500_000 {
                    inserted += 1;
                    targets.push(s);
                    targets.push(((s.ln() + prev_s.ln()) / 2.0).exp());
                } else {
                    if debug {
                        eprintln!("  gap edge at s {:.6e}; crossing", prev_s);
                    }
                    skipping = true;
                }
            }
            Err(ChainErr::Ambiguous(z)) => {
                let lgap = s.ln() - prev_s.ln();
                if lgap > AMBIG_LN_FLOOR && inserted < 500_000 {
                    inserted += 1;
                    targets.push(s);
                    targets.push(((s.ln() + prev_s.ln()) / 2.0).exp());
                } else {
                    if debug {
                        eprintln!(
                            "  march stop s {s:.4e}: ambiguous branch at {z} after {} pts ({inserted} refined)",
                            out.ends.len()
                        );
                    }
                    break;
                }
            }
            Err(ChainErr::Other(e)) => return Err(e),
        }
    }
    ensure!(out.ends.len() >= 2, "stable transport never entered the spiral ball");
    Ok(out)
}

/// Builds a member of the curved-arc class inside the stable set of the real
/// saddle: preimage ladders of the negative real ray spiral around the
/// source; the ladder is transported to the actual map, pulled back along
/// the source walk into the region, trimmed, and a cone sweep is extracted.
pub fn curved_stable_arc(p: &MapParams, core: &RepellingAnnulus) -> Result<StableSpiralReport> {
    p.validate()?;
    let src = source_point();
    let grid: Vec<f64> = {
        let (a, b) = ((1e-9_f64).ln(), (60.0_f64).ln());
        (0..8000).map(|i| (a + (b - a) * i as f64 / 7999.0).exp()).collect()
    };

    // ladder depth: march the limit-map strand until the piece near the
    // source winds at least 5 times
    let debug = std::env::var("WILDTORUS_DEBUG_SPIRAL").is_ok();
    let mut chosen = None;
    for n in 16..=60 {
        let Ok(m) = march_chains(p, &grid, n, src, true) else { continue };
        if m.ends.len() < 50 {
            continue;
        }
        let pts: Vec<Complex64> = m.ends.iter().map(|e| e.0).collect();
        let w = winding_turns(&pts, src).abs();
        if debug && n % 4 == 0 {
            eprintln!("  limit depth {n}: {} pts winding {w:.3}", pts.len());
        }
        if w >= 5.0 {
            chosen = Some((n, w));
            break;
        }
    }
    let (n, limit_winding) =
        chosen.ok_or_else(|| anyhow!("ray ladder never wound 5 times by depth 60"))?;

    // transport by marched continuation, deepening the ladder until the
    // spiral prefix under the actual map turns 3 times; pinch dives under the
    // actual map bottom out one level shallower than the limit's, so the
    // transported winding can need more levels than the limit selection
    let mut depth = n;
    let (march, transported_winding) = loop {
        let m = march_chains(p, &grid, depth, src, false)?;
        let pts: Vec<Complex64> = m.ends.iter().map(|e| e.0).collect();
        let w = winding_turns(&pts, src).abs();
        if std::env::var("WILDTORUS_DEBUG_SPIRAL").is_ok() {
            let radii: Vec<f64> = pts.iter().map(|z| (z - src).norm()).collect();
            let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
            let rmax = radii.iter().copied().fold(0.0_f64, f64::max);
            eprintln!(
                "  depth {depth}: marched {} winding {w:.2} r_first {:.3e} r_last {:.3e} r [{rmin:.3e}, {rmax:.3e}]",
                m.ends.len(),
                radii[0],
                radii[radii.len() - 1]
            );
            for frac in [0.25, 0.5, 0.75, 0.9, 0.97] {
                let k = ((pts.len() - 1) as f64 * frac) as usize;
                let wk = winding_turns(&pts[..k + 1], src).abs();
                eprintln!(
                    "    up to idx {k} (s {:.3e}): r {:.3e} winding {wk:.2}",
                    m.svals[k], radii[k]
                );
            }
        }
        if w >= 3.2 || depth + 4 > 60 {
            break (m, w);
        }
        depth += 4;
    };
    ensure!(
        transported_winding >= 3.0,
        "transported spiral winds only {transported_winding:.2} times at the depth cap"
    );
    ensure!(march.ends.len() >= 50, "transported spiral under-resolved");
    let t_run: Vec<Complex64> = march.ends.iter().map(|e| e.0).collect();

    // forward replay of spread samples must land on the negative real ray
    let mut ray_residual: f64 = 0.0;
    for k in (0..t_run.len()).step_by((t_run.len() / 25).max(1)) {
        let mut z = t_run[k];
        for _ in 0..depth {
            z = eval_map(p, z)?;
        }
        ensure!(z.re < 0.0, "forward replay left the negative ray at {z}");
        ray_residual = ray_residual.max(z.im.abs());
    }
    ensure!(ray_residual <= 1e-8, "forward replay drifted {ray_residual:.3e} off the ray");

    // worst one-step closure error along the stored chains and their tails
    let z0 = core.source_preimage;
    let tail = &core.source_path[1..];
    let mut membership_error: f64 = 0.0;
    for (_, chain) in &march.guides {
        let end = chain[chain.len() - 1];
        let (tail_pts, _) = extend_tail(p, tail, end, Complex64::new(1.0, 0.0))?;
        let mut prev = chain[0];
        for w in chain[1..].iter().chain(&tail_pts) {
            let err = (eval_map(p, *w)? - prev).norm() / (1.0 + prev.norm());
            membership_error = membership_error.max(err);
            prev = *w;
        }
    }
    ensure!(
        membership_error <= tol::PREIMAGE_ABS,
        "backward pipeline closure error {membership_error:.3e}"
    );

    // pull the spiral back along the source walk and trim the pulled piece
    // to half the separation bound
    let pulled: Vec<(Complex64, Complex64)> = march
        .ends
        .par_iter()
        .map(|(end, v)| {
            let (tail_pts, tv) = extend_tail(p, tail, *end, *v)?;
            Ok((tail_pts.last().copied().unwrap_or(*end), tv))
        })
        .collect::<Result<_>>()?;
    let mut cumulative = 0.0;
    let mut cut = pulled.len();
    for k in 1..pulled.len() {
        cumulative += (pulled[k].0 - pulled[k - 1].0).norm();
        if cumulative > core.separation / 2.0 {
            cut = k;
            break;
        }
    }
    let piece: Vec<Complex64> = pulled[..cut].iter().map(|x| x.0).collect();
    let pullback_length = polyline_length(&piece);
    let pullback_winding = winding_turns(&piece, z0).abs();
    ensure!(
        pullback_winding >= 3.0,
        "pulled-back piece winds only {pullback_winding:.2} times within the length budget"
    );

    // extract a cone sweep: scan the discrete slopes for a +1/3 -> -1/3
    // passage, then bisect the exact evaluator in log-parameter; arbitrary
    // parameters are evaluated against the nearest stored chain as guide
    let eval_log = |u: f64| -> Result<(Complex64, Complex64)> {
        let s = u.exp();
        let gi = march.guides.partition_point(|(gs, _)| *gs < s);
        let guide = if gi == 0 {
            &march.guides[0].1
        } else if gi >= march.guides.len() {
            &march.guides[march.guides.len() - 1].1
        } else {
            let (s0, c0) = &march.guides[gi - 1];
            let (s1, c1) = &march.guides[gi];
            if u - s0.ln() <= s1.ln() - u { c0 } else { c1 }
        };
        let (chain, v) = guided_chain(p, s, guide)?;
        let end = chain[chain.len() - 1];
        let (tail_pts, tv) = extend_tail(p, tail, end, v)?;
        Ok((tail_pts.last().copied().unwrap_or(end), tv))
    };
    let (la, lb) = (march.svals[0].ln(), march.svals[cut - 1].ln());
    let mut found = None;
    let b = cone_half_angle();
    let coarse = 600usize;
    let mut prev: Option<f64> = None;
    let mut start_u = None;
    for i in 0..=coarse {
        let u = la + (lb - la) * i as f64 / coarse as f64;
        let Ok((z, v)) = eval_log(u) else {
            prev = None;
            start_u = None;
            continue;
        };
        let psi = slope_angle(z, v);
        if let Some(pp) = prev {
            let jump = (pp - psi).abs() > 1.5;
            if !jump && pp > b && psi <= b {
                start_u = Some(la + (lb - la) * (i - 1) as f64 / coarse as f64);
            } else if !jump && start_u.is_some() && pp > -b && psi <= -b {
                let su = start_u.unwrap();
                let eu = u;
                match slope_window(&eval_log, su, eu) {
                    Ok(w) => {
                        found = Some(w);
                        break;
                    }
                    Err(_) => {
                        start_u = None;
                    }
                }
            } else if !jump && psi.abs() > b + 1e-9 && psi > b {
                start_u = None;
            }
        }
        prev = Some(psi);
    }
    let (ua, ub) =
        found.ok_or_else(|| anyhow!("no cone sweep found along the pulled-back spiral"))?;
    let (pts, tans): (Vec<_>, Vec<_>) = (0..ARC_SAMPLES)
        .map(|i| eval_log(ua + (ub - ua) * i as f64 / (ARC_SAMPLES - 1) as f64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let arc = Arc::with_tangents(pts, tans, p.lambda)?;
    let curved = CurvedArc { arc, max_length: core.separation };
    let check = is_curved_arc(p, core, &curved.arc);
    ensure!(check.accepted, "extracted sub-arc failed the class diagnostics: {check:?}");

    Ok(StableSpiralReport {
        curved,
        ladder_depth: depth,
        limit_winding,
        transported_winding,
        pullback_winding,
        pullback_length,
        ray_residual,
        membership_error,
    })
}

// ---------------------------------------------------------------------------
// escape window
// ---------------------------------------------------------------------------

/// Window arithmetic for the number of forward steps after which a local
/// unstable arc must have wound around the origin while staying in the
/// expansion region.
#[derive(Clone, Copy, Debug)]
pub struct EscapeWindowData {
    /// Selected growth rate, the largest grid value with eta^3 below the
    /// angular expansion bound.
    pub eta: f64,
    /// Length-per-turn constant for cone-constrained arcs in the working
    /// disk, from optimization over admissible slopes.
    pub turn_length: f64,
    /// Smallest constant making the growth estimate dominate the drift term
    /// at every step.
    pub growth_offset: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Computes the escape-window endpoints for a local unstable arc of
/// half-length `alpha` and collar ratio `r`.
pub fn escape_window(p: &MapParams, alpha: f64, r: f64) -> Result<EscapeWindowData> {
    p.validate()?;
    ensure!(alpha > 0.0, "arc half-length must be positive");
    ensure!(r > 0.0 && r < 1.0, "collar ratio {r} outside (0, 1)");
    let expansion = angular_expansion_bound(p.lambda);
    let cap = (2.5_f64).powf(1.0 / 6.0);
    let mut eta = None;
    let mut k = 1;
    loop {
        let cand = 1.0 + 0.01 * k as f64;
        if cand >= cap {
            break;
        }
        if cand.powi(3) < expansion {
            eta = Some(cand);
        }
        k += 1;
    }
    let eta = eta.ok_or_else(|| {
        anyhow!("no admissible growth rate: contraction parameter {} too small", p.lambda)
    })?;

    // length-per-turn: maximize the speed factor |i + s| over cone slopes
    let speed = (0..=200)
        .map(|i| {
            let s = ANGULAR_SLOPE * (2.0 * i as f64 / 200.0 - 1.0);
            Complex64::new(s, 1.0).norm()
        })
        .fold(0.0_f64, f64::max);
    let turn_length = 2.0 * PI * 2.0 * speed;

    let root = (1.0 - p.lambda).sqrt();
    let growth_offset = (0..=400)
        .map(|m| ((m as f64 - 1.0) * root + 5.0) / eta.powi(m))
        .fold(0.0_f64, f64::max);

    let lower = ((turn_length / (2.0 * alpha)).ln() - (1.0 - p.lambda).ln()) / (3.0 * eta.ln());
    let upper = ((r / (2.0 * growth_offset * p.lambda)).ln() - 0.5 * (1.0 - p.lambda).ln())
        / (eta / p.lambda).ln();
    Ok(EscapeWindowData { eta, turn_length, growth_offset, lower, upper })
}

/// The smallest integer strictly inside the escape window.
#[derive(Clone, Copy, Debug)]
pub struct WildEscapeBound {
    pub window: EscapeWindowData,
    pub m: usize,
}

/// Returns the escape-step count from the window arithmetic, failing with
/// both endpoints when the window contains no integer.
pub fn wild_escape_bound(p: &MapParams, alpha: f64) -> Result<WildEscapeBound> {
    let window = escape_window(p, alpha, DEFAULT_COLLAR_RATIO)?;
    let m0 = window.lower.floor() + 1.0;
    ensure!(
        window.lower < window.upper && m0 < window.upper && m0 >= 1.0,
        "escape window is empty (lower {:.2}, upper {:.2}); the bound needs the contraction \
         parameter closer to 1",
        window.lower,
        window.upper
    );
    Ok(WildEscapeBound { window, m: m0 as usize })
}

/// One dynamic escape trial: a local unstable arc pushed forward.
#[derive(Clone, Debug)]
pub struct EscapeTrial {
    pub start: Complex64,
    /// Forward steps over which the whole arc stayed in the expansion region.
    pub contained_steps: usize,
    pub required_steps: usize,
    /// Winding about the origin after the final step (if reached).
    pub winding: f64,
    pub ok: bool,
}

/// Dynamic verification of the escape bound on random backward orbits.
#[derive(Clone, Debug)]
pub struct EscapeDynamics {
    pub trials: Vec<EscapeTrial>,
    pub passes: usize,
}

/// Pushes local unstable arcs of half-length `alpha` at random points of the
/// annulus-and-expansion region forward `m` steps, reporting containment and
/// final winding per trial.
pub fn wild_escape_dynamic(
    p: &MapParams,
    alpha: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<EscapeDynamics> {
    ensure!(m >= 1 && trials >= 1, "need at least one step and one trial");
    let region = build_fundamental_annulus(p, DEFAULT_COLLAR_RATIO)?;
    let h = HyperbolicityDomain::new(p.lambda);
    let bbox = bounding_box(&region.outer.points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(trials);
    let mut guard = 0;
    while starts.len() < trials {
        guard += 1;
        ensure!(guard < trials * 4000, "could not sample enough admissible start points");
        let z = Complex64::new(
            rng.gen_range(bbox.0.re..bbox.1.re),
            rng.gen_range(bbox.0.im..bbox.1.im),
        );
        if region.contains(z) && h.contains(z) {
            starts.push(z);
        }
    }

    let results: Vec<EscapeTrial> = starts
        .par_iter()
        .map(|z| -> Result<EscapeTrial> {
            let crit = RefineCriteria::default();
            let arc = match local_unstable_manifold(p, *z, alpha, 30) {
                Ok(a) => a,
                Err(_) => {
                    return Ok(EscapeTrial {
                        start: *z,
                        contained_steps: 0,
                        required_steps: m,
                        winding: 0.0,
                        ok: false,
                    })
                }
            };
            let mut nodes: Vec<Node> = arc
                .points
                .iter()
                .zip(arc.tangents.iter())
                .map(|(pt, tn)| (*pt, tn / tn.norm()))
                .collect();
            let mut contained = 0;
            let mut winding = 0.0;
            for step in 1..=m {
                nodes = crate::manifolds::push_curve(p, &nodes, &crit)?;
                let inside = nodes.iter().all(|(pt, _)| h.contains(*pt));
                if inside {
                    contained = step;
                } else if contained + 1 < step {
                    break;
                }
                if step == m {
                    let pts: Vec<Complex64> = nodes.iter().map(|(pt, _)| *pt).collect();
                    winding = winding_turns(&pts, Complex64::new(0.0, 0.0)).abs();
                }
            }
            Ok(EscapeTrial {
                start: *z,
                contained_steps: contained,
                required_steps: m,
                winding,
                ok: contained >= m && winding >= 1.0,
            })
        })
        .collect::<Result<_>>()?;
    let passes = results.iter().filter(|t| t.ok).count();
    Ok(EscapeDynamics { trials: results, passes })
}

// ---------------------------------------------------------------------------
// forward membership
// ---------------------------------------------------------------------------

/// Finite forward certificate for membership in the maximal invariant set of
/// the expansion region.
#[derive(Clone, Copy, Debug)]
pub struct MembershipVerdict {
    pub stays: bool,
    /// First step whose image left the region, if any.
    pub exit_step: Option<usize>,
    /// Minimal modulus margin over the checked steps.
    pub min_clearance: f64,
}

/// Checks that the forward orbit of `z` stays in the expansion region for
/// `m` steps.
pub fn wild_set_membership(p: &MapParams, z: Complex64, m: usize) -> Result<MembershipVerdict> {
    let h = HyperbolicityDomain::new(p.lambda);
    ensure!(h.contains(z), "the test point must start in the expansion region");
    let mut cur = z;
    let mut min_clearance = cur.norm() - h.threshold;
    for step in 1..=m {
        cur = eval_map(p, cur)?;
        min_clearance = min_clearance.min(cur.norm() - h.threshold);
        if !h.contains(cur) {
            return Ok(MembershipVerdict { stays: false, exit_step: Some(step), min_clearance });
        }
    }
    Ok(MembershipVerdict { stays: true, exit_step: None, min_clearance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::polyline_intersections;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::OnceLock;

    fn core() -> &'static (MapParams, RepellingAnnulus) {
        static CORE: OnceLock<(MapParams, RepellingAnnulus)> = OnceLock::new();
        CORE.get_or_init(|| {
            let p = MapParams::defaults_mu_eq_sigma();
            let c = build_repelling_annulus(&p).expect("repelling annulus at defaults");
            (p, c)
        })
    }

    #[test]
    fn repelling_annulus_has_positive_margins() {
        let (p, c) = core();
        let scale = 1.0 / (1.0 - p.lambda);
        assert!(OFFSET_LADDER.iter().any(|r| (r * scale - c.offset).abs() < 1e-12));
        assert!(c.covering_margin > 0.0);
        assert!(c.separation > 0.0);
        assert!(c.crossing_angle > 0.005);
        assert!(c.region.signed_depth(c.source_preimage) >= SOURCE_CLEARANCE);
        assert_eq!(c.source_path.len(), c.source_depth + 1);
        for w in c.source_path.windows(2) {
            let fwd = eval_map(p, w[1]).unwrap();
            assert!((fwd - w[0]).norm() <= 1e-9 * (1.0 + w[0].norm()));
        }
    }

    #[test]
    fn witness_arc_is_accepted_with_diagnostics() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 0.8).unwrap();
        let check = is_curved_arc(p, c, &w.arc);
        assert!(check.accepted, "{check:?}");
        assert!((check.length - 0.8 * c.separation).abs() <= 1e-3 * c.separation);
        assert!(check.max_slope_angle <= cone_half_angle() + 1e-12);
    }

    #[test]
    fn overlong_arc_rejected_on_length_only() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 1.4).unwrap();
        let check = is_curved_arc(p, c, &w.arc);
        assert!(!check.accepted && !check.length_ok);
        assert!(check.meets_region && check.tangents_in_cone && check.end_rays_ok);
    }

    #[test]
    fn flat_ended_arc_rejected_on_end_rays() {
        let (p, c) = core();
        // constant zero slope: tangents hug the cone center, ends never
        // reach the boundary rays
        let anchor = c.source_preimage;
        let rho = 0.5 * c.separation / anchor.norm();
        let (pts, tans): (Vec<_>, Vec<_>) = (0..ARC_SAMPLES)
            .map(|i| {
                let t = i as f64 / (ARC_SAMPLES - 1) as f64;
                let z = anchor * Complex64::new(0.0, rho * t).exp();
                (z, z * Complex64::new(0.0, rho))
            })
            .unzip();
        let arc = Arc::with_tangents(pts, tans, p.lambda).unwrap();
        let check = is_curved_arc(p, c, &arc);
        assert!(!check.accepted && !check.end_rays_ok);
        assert!(check.meets_region && check.length_ok && check.tangents_in_cone);
    }

    #[test]
    fn lift_meets_region_and_contracts() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 0.8).unwrap();
        let lift = lift_curved_arc(p, c, &w).unwrap();
        assert!(lift.contraction <= 2.0 / 3.0 + 1e-9);
        assert!(lift.window.0 > 0.0 && lift.window.1 < 1.0);
        let check = is_curved_arc(p, c, &lift.lifted.arc);
        assert!(check.accepted, "{check:?}");
    }

    #[test]
    fn lift_rejects_class_violations() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 1.4).unwrap();
        let err = lift_curved_arc(p, c, &w).unwrap_err();
        assert!(format!("{err:#}").contains("class"));
    }

    #[test]
    fn tangency_certificate_at_depth_30() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 0.8).unwrap();
        let cert = find_tangency(p, c, &w, 30).unwrap();
        assert!(cert.angle_residual < tol::TANGENCY_RESIDUAL);
        assert_eq!(cert.orbit.points.len(), 31);
        assert_eq!(cert.orbit.branches.len(), 30);
        for pair in cert.orbit.points.windows(2) {
            let fwd = eval_map(p, pair[1]).unwrap();
            assert!((fwd - pair[0]).norm() <= tol::PREIMAGE_ABS * (1.0 + pair[0].norm()));
        }
        let spec = ConeSpec {
            kind: ConeKind::KUnstable,
            base: ConeBase::Planar(cert.orbit.points[0]),
            lambda: p.lambda,
        };
        assert!(in_cone(&spec, &TangentVec::Planar(cert.unstable_direction)).unwrap());
        assert!(cert.max_region_clearance <= 2.0 * c.separation * (1.0 + 1e-6));
    }

    #[test]
    fn tangency_residual_decays_with_depth() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 0.8).unwrap();
        let shallow = find_tangency(p, c, &w, 30).unwrap();
        let deep = find_tangency(p, c, &w, 60).unwrap();
        assert!(deep.angle_residual < shallow.angle_residual);
        assert!(deep.decay_ratio <= 0.9);
        let r = &deep.residual_by_depth;
        assert!(r[5] > r[15] || r[15] < 1e-12);
    }

    #[test]
    fn tangency_survives_small_bump() {
        let (p0, c0) = core();
        let mut p = p0.clone();
        let center = c0.source_preimage;
        assert!(center.norm() + 1.0 <= 14.0, "bump support must fit the validation bound");
        p.eps_perturb = 0.01;
        p.perturb_center = center;
        p.perturb_radius = 1.0;
        let c = build_repelling_annulus(&p).unwrap();
        let w = witness_curved_arc(&p, &c, 0.8).unwrap();
        let cert = find_tangency(&p, &c, &w, 30).unwrap();
        assert!(cert.angle_residual < tol::TANGENCY_RESIDUAL);
    }

    #[test]
    fn stable_spiral_reaches_the_class() {
        let (p, c) = core();
        let report = curved_stable_arc(p, c).unwrap();
        assert!(report.limit_winding >= 5.0);
        assert!(report.transported_winding >= 4.0);
        assert!(report.pullback_winding >= 3.0);
        assert!(report.pullback_length <= c.separation / 2.0 * (1.0 + 1e-6));
        assert!(report.ray_residual <= 1e-8);
        assert!(report.membership_error <= tol::PREIMAGE_ABS);
        let check = is_curved_arc(p, c, &report.curved.arc);
        assert!(check.accepted, "{check:?}");
    }

    #[test]
    fn escape_window_is_empty_at_defaults() {
        let p = MapParams::defaults_mu_eq_sigma();
        let w = escape_window(&p, 1.0, DEFAULT_COLLAR_RATIO).unwrap();
        assert!((w.eta - 1.14).abs() < 1e-12);
        // the next grid rate fails the screening, as pinned
        assert!(1.15_f64.powi(3) > angular_expansion_bound(p.lambda));
        assert!(1.14_f64.powi(3) < angular_expansion_bound(p.lambda));
        assert!(w.lower > w.upper);
        let err = wild_escape_bound(&p, 1.0).unwrap_err();
        assert!(format!("{err:#}").contains("empty"));
    }

    #[test]
    fn escape_window_opens_near_the_limit() {
        let p = MapParams { lambda: 1.0 - 1e-12, ..MapParams::defaults_mu_eq_sigma() };
        let bound = wild_escape_bound(&p, 1.0).unwrap();
        assert!(bound.window.lower < bound.m as f64 && (bound.m as f64) < bound.window.upper);
    }

    #[test]
    fn membership_on_the_axis_and_constructed_exit() {
        let p = MapParams::defaults_mu_eq_sigma();
        let saddle = Complex64::new(p.saddle_location(), 0.0);
        assert!(wild_set_membership(&p, saddle, 500).unwrap().stays);
        for k in 0..10 {
            let x = Complex64::new(19.0 + 0.2 * k as f64, 0.0);
            assert!(wild_set_membership(&p, x, 100).unwrap().stays);
        }
        // reverse search: a start whose orbit leaves the region exactly at
        // step 3
        let h = HyperbolicityDomain::new(p.lambda);
        let mut found = None;
        'search: for i in 0..400 {
            for j in 0..60 {
                let z = Complex64::from_polar(
                    h.threshold + 0.05 + 0.01 * j as f64,
                    PI * (i as f64 / 200.0 - 1.0),
                );
                if !h.contains(z) {
                    continue;
                }
                let v = wild_set_membership(&p, z, 10).unwrap();
                if v.exit_step == Some(3) {
                    found = Some(z);
                    break 'search;
                }
            }
        }
        let z = found.expect("an exit-at-3 start exists");
        let v = wild_set_membership(&p, z, 10).unwrap();
        assert!(!v.stays);
        assert_eq!(v.exit_step, Some(3));
    }

    #[test]
    fn pullback_inverts_the_derivative() {
        let p = MapParams::defaults_mu_eq_sigma();
        let z = Complex64::new(7.0, 3.0);
        let v = Complex64::new(0.4, -1.1);
        let w = derivative(&p, z, v).unwrap();
        assert!((pull_vector(&p, z, w).unwrap() - v).norm() <= 1e-10 * v.norm());
        let mut q = p.clone();
        q.eps_perturb = 0.01;
        q.perturb_center = Complex64::new(7.0, 3.0);
        q.perturb_radius = 2.0;
        let wq = derivative(&q, z, v).unwrap();
        assert!((pull_vector(&q, z, wq).unwrap() - v).norm() <= 1e-10 * v.norm());
    }

    #[test]
    fn hermite_matches_the_analytic_arc() {
        let (p, c) = core();
        let w = witness_curved_arc(p, c, 0.8).unwrap();
        let h = HermiteArc::build(&w.arc).unwrap();
        let anchor = c.source_preimage;
        let rho = {
            // recover rho from the stored first tangent
            let q = w.arc.tangents[0] / w.arc.points[0];
            q.im
        };
        for i in 0..7 {
            let t = 0.07 + 0.13 * i as f64;
            let s = ANGULAR_SLOPE * (1.0 - 2.0 * t);
            let expo = Complex64::new(rho * (t - t * t) / 3.0, rho * t);
            let z = anchor * expo.exp();
            let (hz, hv) = h.eval(t);
            assert!((hz - z).norm() <= 1e-10 * (1.0 + z.norm()), "point drift at t = {t}");
            let exact_dir = z * Complex64::new(s, 1.0);
            assert!(line_angle(hv, exact_dir) <= 1e-6, "tangent drift at t = {t}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn quasi_angular_loops_cross_the_real_segment(
            seed in 0u64..1u64 << 48,
            base in 19.4f64..20.6f64,
        ) {
            // a closed curve with bounded radial slope winding once, kept in
            // the expansion region, must cross the real stable segment
            let p = MapParams::defaults_mu_eq_sigma();
            let h = HyperbolicityDomain::new(p.lambda);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a1, a2): (f64, f64) = (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            let (f1, f2) = (rng.gen_range(1u32..4u32) as f64, rng.gen_range(4u32..8u32) as f64);
            let pts: Vec<Complex64> = (0..=1500)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / 1500.0;
                    let r = base + a1 * (f1 * th).sin() + a2 * (f2 * th).cos();
                    Complex64::from_polar(r, th)
                })
                .collect();
            prop_assume!(pts.iter().all(|z| h.contains(*z)));
            let segment = [
                Complex64::new(h.threshold, 0.0),
                Complex64::new(2.0 * p.saddle_location(), 0.0),
            ];
            let hits = polyline_intersections(&pts, &segment);
            prop_assert!(!hits.is_empty());
        }
    }
}
