//! The fundamental annulus between a two-arc inner collar and the outer
//! boundary loop: self-covering margins, forward-image covering of the
//! certified grid, escaping backward chains through the left half-plane,
//! the basin disk of the rotating source, and periodic-point search.

use anyhow::{anyhow, bail, ensure, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::core_maps::{derivative, eval_map, limit_map, limit_preimages, preimages, MapParams};
use crate::geom::{nearest_point_on_polyline, point_in_polygon};
use crate::hyperbolicity::Arc;
use crate::invariant_set::{compute_external_boundary, compute_omega, CellStatus, Region};
use crate::manifolds::{stable_manifold_arcs, FixedPointKind};

/// Default inner-collar ratio; must stay below exp(-pi/3).
pub const DEFAULT_COLLAR_RATIO: f64 = 0.25;

/// Upper limit for the collar ratio.
pub fn collar_ratio_limit() -> f64 {
    (-PI / 3.0).exp()
}

/// The annulus between the inner collar gamma_0 and the outer loop.
#[derive(Clone, Debug)]
pub struct AnnulusRegion {
    pub outer: Arc,
    pub inner: Arc,
    pub r_param: f64,
    /// r_param / (1 - lambda): radius of both collar arcs.
    pub collar_radius: f64,
}

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

impl AnnulusRegion {
    /// Inside the collar: right half-disk about 0 united with the left
    /// half-disk about 1.
    pub fn in_collar(&self, z: Complex64) -> bool {
        let rr = self.collar_radius;
        (z.re >= 0.0 && z.norm() < rr) || (z.re <= 0.0 && (z - ONE).norm() < rr)
    }

    /// Inside the annulus: within the outer loop, outside the collar.
    pub fn contains(&self, z: Complex64) -> bool {
        !self.in_collar(z) && point_in_polygon(z, &self.outer.points)
    }

    /// Signed depth: positive inside the annulus (distance to the nearer
    /// boundary curve), negative outside.
    pub fn signed_depth(&self, z: Complex64) -> f64 {
        let d = nearest_point_on_polyline(&self.outer.points, z)
            .3
            .min(nearest_point_on_polyline(&self.inner.points, z).3);
        if self.contains(z) {
            d
        } else {
            -d
        }
    }
}

/// Builds the collar curve and pairs it with the outer boundary loop.
/// The collar is the circle |z| = R on the right joined to the circle
/// |z - 1| = R on the left by two short vertical segments on Re z = 0.
pub fn build_fundamental_annulus(p: &MapParams, r: f64) -> Result<AnnulusRegion> {
    ensure!(
        r > 0.0 && r < collar_ratio_limit(),
        "collar ratio {r} outside (0, {:.5})",
        collar_ratio_limit()
    );
    let rr = r / (1.0 - p.lambda);
    let outer = compute_external_boundary(p)?.arc;

    let n_arc = 480;
    let mut pts = Vec::with_capacity(2 * n_arc + 8);
    // right arc |z| = R from -pi/2 to pi/2, counterclockwise
    for k in 0..=n_arc {
        let th = -FRAC_PI_2 + PI * k as f64 / n_arc as f64;
        pts.push(Complex64::from_polar(rr, th));
    }
    // join down to the left circle's crossing of the imaginary axis
    let y_join = (rr * rr - 1.0).sqrt();
    pts.push(Complex64::new(0.0, y_join));
    // left arc |z - 1| = R through the left half-plane
    let phi0 = (-1.0 / rr).acos();
    for k in 1..n_arc {
        let phi = phi0 + (TAU - 2.0 * phi0) * k as f64 / n_arc as f64;
        pts.push(ONE + Complex64::from_polar(rr, phi));
    }
    pts.push(Complex64::new(0.0, -y_join));
    pts.push(Complex64::new(0.0, -rr));

    // the outer loop must clear the collar disk about the origin
    let min_image = outer
        .points
        .iter()
        .map(|z| eval_map(p, *z).map(|w| w.norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    ensure!(
        min_image > rr,
        "outer loop image reaches modulus {min_image:.4}, inside the collar radius {rr:.4}"
    );
    for z in pts.iter().step_by(37) {
        ensure!(
            point_in_polygon(*z, &outer.points),
            "collar point {z} is not inside the outer loop"
        );
    }

    let inner = Arc::from_points(pts, p.lambda)?;
    Ok(AnnulusRegion { outer, inner, r_param: r, collar_radius: rr })
}

/// Margins of the self-covering of the annulus.
#[derive(Clone, Debug)]
pub struct SelfCoveringReport {
    pub samples: usize,
    /// Over annulus samples: best preimage's signed depth inside the
    /// annulus; positive means every sample is covered with room.
    pub min_preimage_margin: f64,
    /// Over collar-curve samples: best preimage's depth inside the outer
    /// region beyond the collar; positive means that region sits inside
    /// its own image.
    pub outer_region_margin: f64,
    /// Max |F(z)| over the left collar arc restricted to arguments in
    /// [pi/2, 3pi/2]; expected below the collar radius.
    pub left_arc_image_max_modulus: f64,
    /// Min of |F(z) - 1| minus the guaranteed exclusion radius over the
    /// right outer region; the bounding arc attains zero.
    pub right_region_image_margin: f64,
    pub violations: usize,
    pub witness: Option<Complex64>,
}

/// Samples the closed annulus and checks each sample has a preimage inside
/// it, and that the collar boundary maps strictly into the collar.
pub fn check_self_covering(
    p: &MapParams,
    region: &AnnulusRegion,
    samples: usize,
    seed: u64,
) -> Result<SelfCoveringReport> {
    ensure!(samples >= 100, "need at least 100 samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for w in &region.outer.points {
        lo = Complex64::new(lo.re.min(w.re), lo.im.min(w.im));
        hi = Complex64::new(hi.re.max(w.re), hi.im.max(w.im));
    }
    let mut pts = Vec::with_capacity(samples);
    let mut guard = 0usize;
    while pts.len() < samples {
        let z = Complex64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
        if region.contains(z) {
            pts.push(z);
        }
        guard += 1;
        ensure!(guard < samples * 400, "rejection sampling failed to fill the annulus");
    }

    let margins: Vec<(f64, Complex64)> = pts
        .par_iter()
        .map(|z| {
            let best = preimages(p, *z)
                .into_iter()
                .map(|w| region.signed_depth(w))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, *z)
        })
        .collect();
    let mut min_preimage_margin = f64::INFINITY;
    let mut violations = 0usize;
    let mut witness = None;
    for (m, z) in &margins {
        if *m < min_preimage_margin {
            min_preimage_margin = *m;
        }
        if *m <= 0.0 {
            violations += 1;
            witness.get_or_insert(*z);
        }
    }

    // the outer region beyond the collar sits inside its own image:
    // every collar-curve sample must have a preimage strictly beyond the
    // collar curve
    let rr = region.collar_radius;
    let mut outer_region_margin = f64::INFINITY;
    let mut left_arc_image_max_modulus: f64 = 0.0;
    for z in &region.inner.points {
        if z.norm() < 1e-12 {
            continue;
        }
        let depth = preimages(p, *z)
            .into_iter()
            .map(|w| {
                let d = nearest_point_on_polyline(&region.inner.points, w).3;
                if region.in_collar(w) {
                    -d
                } else {
                    d
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if depth < outer_region_margin {
            outer_region_margin = depth;
        }
        if depth <= 0.0 {
            violations += 1;
            witness.get_or_insert(*z);
        }
        let on_left_arc = ((z - ONE).norm() - rr).abs() < 1e-9 && z.re <= 1e-9;
        if on_left_arc {
            let w = eval_map(p, *z)?;
            left_arc_image_max_modulus = left_arc_image_max_modulus.max(w.norm());
        }
    }
    if left_arc_image_max_modulus >= rr {
        violations += 1;
    }

    // the right outer region's image avoids the disk of radius
    // 1 - lambda + lambda * R about 1, attained on the bounding arc
    let excluded = 1.0 - p.lambda + p.lambda * rr;
    let mut right_region_image_margin = f64::INFINITY;
    for scale in [1.0, 1.0 + 1e-6, 1.25, 2.0, 4.0, 8.0] {
        for k in 0..=160 {
            let th = -FRAC_PI_2 + PI * k as f64 / 160.0;
            let z = Complex64::from_polar(rr * scale, th);
            let m = (eval_map(p, z)? - ONE).norm() - excluded;
            right_region_image_margin = right_region_image_margin.min(m);
        }
    }
    if right_region_image_margin < -1e-9 {
        violations += 1;
    }

    Ok(SelfCoveringReport {
        samples,
        min_preimage_margin,
        outer_region_margin,
        left_arc_image_max_modulus,
        right_region_image_margin,
        violations,
        witness,
    })
}

/// 2x2 real Jacobian of the map at z, columns = images of 1 and i.
fn real_jacobian(p: &MapParams, z: Complex64) -> Result<[[f64; 2]; 2]> {
    let c1 = derivative(p, z, Complex64::new(1.0, 0.0))?;
    let c2 = derivative(p, z, Complex64::new(0.0, 1.0))?;
    Ok([[c1.re, c2.re], [c1.im, c2.im]])
}

fn opnorm2(m: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let q1 = a * a + b * b + c * c + d * d;
    let q2 = ((a * a + b * b - c * c - d * d).powi(2) + 4.0 * (a * c + b * d).powi(2)).sqrt();
    (0.5 * (q1 + q2)).sqrt()
}

/// One forward step of the cell-cloud covering: maps a 3x3 stencil of each
/// frontier cell and marks every cell met by the Jacobian-dilated images.
fn cover_step(p: &MapParams, omega: &Region, frontier: &[usize], covered: &mut [bool]) {
    let n = omega.resolution;
    let cell = omega.cell_size;
    let half_diag = cell * std::f64::consts::SQRT_2 / 2.0;
    let marks: Vec<Vec<usize>> = frontier
        .par_iter()
        .map(|&i| {
            let center = omega.cell_center(i % n, i / n);
            let mut hits = Vec::new();
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    let s = center + Complex64::new(dx as f64, dy as f64) * (cell / 2.0);
                    if s.norm() < 1e-9 {
                        continue;
                    }
                    let (w, lip) = match (eval_map(p, s), real_jacobian(p, s)) {
                        (Ok(w), Ok(j)) => (w, opnorm2(&j)),
                        _ => continue,
                    };
                    // stencil covers the cell to within half_diag/2
                    let rad = 1.1 * lip * half_diag / 2.0 + half_diag;
                    let r_cells = (rad / cell).ceil() as i64;
                    let fx = ((w.re + omega.half_width) / cell).floor() as i64;
                    let fy = ((w.im + omega.half_width) / cell).floor() as i64;
                    for jy in fy - r_cells..=fy + r_cells {
                        for jx in fx - r_cells..=fx + r_cells {
                            if jx < 0 || jy < 0 || jx as usize >= n || jy as usize >= n {
                                continue;
                            }
                            let cc = omega.cell_center(jx as usize, jy as usize);
                            if (cc - w).norm() <= rad {
                                hits.push(jy as usize * n + jx as usize);
                            }
                        }
                    }
                }
            }
            hits
        })
        .collect();
    for hs in marks {
        for h in hs {
            covered[h] = true;
        }
    }
}

/// Outcome of the covering iteration.
#[derive(Clone, Debug)]
pub struct CoveringOutcome {
    /// First step at which all certified-in cells are covered.
    pub exponent: usize,
    /// Fraction of certified-in cells covered after each step (entry 0 is
    /// the seed coverage).
    pub fractions: Vec<f64>,
    /// Step at which the rotating source's cell is first covered.
    pub source_covered_step: usize,
}

fn covered_fraction(covered: &[bool], target: &[usize]) -> f64 {
    let hit = target.iter().filter(|&&i| covered[i]).count();
    hit as f64 / target.len().max(1) as f64
}

fn run_cover(
    p: &MapParams,
    omega: &Region,
    mut covered: Vec<bool>,
    cap: usize,
) -> (Vec<bool>, Vec<f64>, Option<usize>, Option<usize>) {
    let target: Vec<usize> = (0..covered.len())
        .filter(|&i| omega.cells[i] == CellStatus::CertifiedIn)
        .collect();
    let source = Complex64::from_polar(1.0, PI / 3.0);
    let source_cell = {
        let ix = ((source.re + omega.half_width) / omega.cell_size).floor() as usize;
        let iy = ((source.im + omega.half_width) / omega.cell_size).floor() as usize;
        iy * omega.resolution + ix
    };
    let mut fractions = vec![covered_fraction(&covered, &target)];
    let mut source_step = if covered[source_cell] { Some(0) } else { None };
    let mut frontier: Vec<usize> = (0..covered.len()).filter(|&i| covered[i]).collect();
    let mut done_step = if target.iter().all(|&i| covered[i]) { Some(0) } else { None };
    for step in 1..=cap {
        if done_step.is_some() {
            break;
        }
        let before = covered.clone();
        cover_step(p, omega, &frontier, &mut covered);
        frontier = (0..covered.len()).filter(|&i| covered[i] && !before[i]).collect();
        fractions.push(covered_fraction(&covered, &target));
        if source_step.is_none() && covered[source_cell] {
            source_step = Some(step);
        }
        if target.iter().all(|&i| covered[i]) {
            done_step = Some(step);
        }
        if frontier.is_empty() {
            break;
        }
    }
    (covered, fractions, done_step, source_step)
}

/// Smallest number of forward steps after which the cell-cloud images of
/// the annulus cover every certified-in cell of the grid.
pub fn covering_exponent(
    p: &MapParams,
    region: &AnnulusRegion,
    resolution: usize,
    cap: usize,
) -> Result<CoveringOutcome> {
    let omega = compute_omega(p, resolution, 40)?;
    let n = omega.resolution;
    let seed: Vec<bool> = (0..n * n)
        .map(|i| region.contains(omega.cell_center(i % n, i / n)))
        .collect();
    let (_, fractions, done, source_step) = run_cover(p, &omega, seed, cap);
    let exponent = done.ok_or_else(|| {
        anyhow!(
            "covering cap {cap} exceeded at fraction {:.4}",
            fractions.last().copied().unwrap_or(0.0)
        )
    })?;
    Ok(CoveringOutcome {
        exponent,
        fractions,
        source_covered_step: source_step.unwrap_or(usize::MAX),
    })
}

/// Result of iterating forward images of a seed cell set.
#[derive(Clone, Debug)]
pub struct OntoOutcome {
    pub covered: bool,
    /// First covering step when covered, otherwise the last step run.
    pub m: usize,
    pub fractions: Vec<f64>,
}

/// Iterates forward cell images of an arbitrary seed set until the
/// certified-in cells are covered or the cap is reached.
pub fn eventually_onto_check(
    p: &MapParams,
    omega: &Region,
    seed_cells: &[usize],
    cap: usize,
) -> Result<OntoOutcome> {
    let n = omega.resolution;
    ensure!(!seed_cells.is_empty(), "seed set is empty");
    let mut seed = vec![false; n * n];
    for &i in seed_cells {
        ensure!(i < n * n, "seed cell {i} out of range");
        seed[i] = true;
    }
    let (_, fractions, done, _) = run_cover(p, omega, seed, cap);
    Ok(OntoOutcome {
        covered: done.is_some(),
        m: done.unwrap_or(fractions.len().saturating_sub(1)),
        fractions,
    })
}

/// Cells meeting the disk about `center`: centers within the radius plus
/// the cell half-diagonal, so a disk smaller than one cell still seeds
/// the cell containing it.
pub fn ball_cells(omega: &Region, center: Complex64, radius: f64) -> Vec<usize> {
    let n = omega.resolution;
    let reach = radius + omega.cell_size * std::f64::consts::SQRT_2 / 2.0;
    (0..n * n)
        .filter(|&i| (omega.cell_center(i % n, i / n) - center).norm() <= reach)
        .collect()
}

/// A backward chain through the left half-plane that leaves the image of
/// the punctured invariant disk.
#[derive(Clone, Debug)]
pub struct EscapeChain {
    /// points[j+1] maps to points[j]; the last point is the escape.
    pub points: Vec<Complex64>,
    /// Minimum |z - 1| over chain points in the upper-left quadrant whose
    /// image lies in the lower-left quadrant (the qualifying steps).
    pub qualifying_min_norm: f64,
    /// Minimum growth ratio (|z_{j+1} - 1| - 1) / (|z_j - 1| - 1) over
    /// qualifying steps with positive denominator.
    pub min_growth_ratio: f64,
    pub qualifying_steps: usize,
}

fn in_quad_upper_left(z: Complex64) -> bool {
    z.re <= 0.0 && z.im >= 0.0 && z.norm() > 0.0
}

fn in_quad_lower_left(z: Complex64) -> bool {
    z.re <= 0.0 && z.im <= 0.0
}

/// Membership in the image of the punctured invariant disk.
fn in_image_of_disk(p: &MapParams, z: Complex64) -> bool {
    let d = (z - ONE).norm();
    d > (1.0 - p.lambda) && d <= p.radial_profile(p.outer_radius())
}

/// Builds a backward chain from z0, taking the left half-plane preimage at
/// every step, until the chain leaves the image of the punctured disk while
/// staying in the disk itself.
pub fn escape_chain(p: &MapParams, z0: Complex64, cap: usize) -> Result<EscapeChain> {
    ensure!(
        in_image_of_disk(p, z0),
        "start {z0} is not in the image of the punctured disk"
    );
    let mut points = vec![z0];
    for _ in 0..cap {
        let z = *points.last().unwrap();
        let pre = preimages(p, z);
        ensure!(!pre.is_empty(), "no preimage at {z}");
        // the left half-plane preimage; on the imaginary axis both branches
        // are vertical, then alternate quadrants
        let w = if pre.iter().all(|w| w.re.abs() < 1e-12) {
            let want_upper = !points.last().map(|q| q.im > 0.0).unwrap_or(false);
            *pre.iter()
                .find(|w| if want_upper { w.im >= 0.0 } else { w.im <= 0.0 })
                .unwrap_or(&pre[0])
        } else {
            *pre.iter()
                .min_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
                .unwrap()
        };
        ensure!(
            w.norm() <= p.outer_radius() + 1e-9,
            "chain left the invariant disk at {w}"
        );
        points.push(w);
        if !in_image_of_disk(p, w) {
            let mut qualifying_min_norm = f64::INFINITY;
            let mut min_growth_ratio = f64::INFINITY;
            let mut qualifying_steps = 0usize;
            for j in 0..points.len() - 1 {
                let (z, zp) = (points[j], points[j + 1]);
                if in_quad_upper_left(zp) && in_quad_lower_left(z) {
                    qualifying_steps += 1;
                    qualifying_min_norm = qualifying_min_norm.min((zp - ONE).norm());
                    let mu = (z - ONE).norm() - 1.0;
                    if mu > 0.0 {
                        min_growth_ratio =
                            min_growth_ratio.min(((zp - ONE).norm() - 1.0) / mu);
                    }
                }
            }
            return Ok(EscapeChain {
                points,
                qualifying_min_norm,
                min_growth_ratio,
                qualifying_steps,
            });
        }
    }
    bail!("escape cap {cap} exceeded from {z0}")
}

/// Empirical escape statistics over random starts.
#[derive(Clone, Debug)]
pub struct EscapeStats {
    pub starts: usize,
    pub max_len: usize,
    pub mean_len: f64,
    pub qualifying_min_norm: f64,
    pub min_growth_ratio: f64,
}

/// Runs escape chains from random points of the image of the punctured
/// disk and aggregates the observed lengths and growth margins.
pub fn empirical_escape_bound(
    p: &MapParams,
    n_starts: usize,
    cap: usize,
    seed: u64,
) -> Result<EscapeStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = p.outer_radius();
    let mut starts = Vec::with_capacity(n_starts);
    while starts.len() < n_starts {
        let z = Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if z.norm() <= r && in_image_of_disk(p, z) {
            starts.push(z);
        }
    }
    let chains = starts
        .par_iter()
        .map(|z| escape_chain(p, *z, cap))
        .collect::<Result<Vec<EscapeChain>>>()?;
    let mut stats = EscapeStats {
        starts: n_starts,
        max_len: 0,
        mean_len: 0.0,
        qualifying_min_norm: f64::INFINITY,
        min_growth_ratio: f64::INFINITY,
    };
    for c in &chains {
        let len = c.points.len() - 1;
        stats.max_len = stats.max_len.max(len);
        stats.mean_len += len as f64 / chains.len() as f64;
        stats.qualifying_min_norm = stats.qualifying_min_norm.min(c.qualifying_min_norm);
        stats.min_growth_ratio = stats.min_growth_ratio.min(c.min_growth_ratio);
    }
    Ok(stats)
}

/// Basin-disk verification report.
#[derive(Clone, Debug)]
pub struct BasinReport {
    /// |2i - p^+|, the sector-disk radius.
    pub disk_radius: f64,
    pub boundary_samples: usize,
    pub boundary_violations: usize,
    /// Minimum distance of non-exempt boundary images from the sector-disk.
    pub boundary_clearance: f64,
    /// Boundary images within delta of 0, where touching is allowed.
    pub near_zero_exempted: usize,
    pub inclusion_samples: usize,
    /// Max distance of the best preimage from the trimmed closed region;
    /// expected at most delta (the corner preimage lands on the trim).
    pub inclusion_max_defect: f64,
    pub orbit_count: usize,
    pub orbit_max_steps: usize,
    pub orbit_max_error: f64,
    /// Max deviation of the imaginary-segment image from the real interval
    /// [-1, 1].
    pub axis_image_max_deviation: f64,
}

struct SectorDisk {
    eps: f64,
    rad: f64,
    boundary: Vec<Complex64>,
}

impl SectorDisk {
    /// Ray length to the circle |z - p| = rad along direction theta.
    fn ray_len(theta: f64, rad: f64) -> f64 {
        let c = (theta - PI / 3.0).cos();
        c + (rad * rad - 1.0 + c * c).sqrt()
    }

    fn new(eps: f64, rad: f64, n: usize) -> SectorDisk {
        let p_plus = Complex64::from_polar(1.0, PI / 3.0);
        let mut boundary = Vec::new();
        let rho0 = Self::ray_len(eps, rad);
        let t_top = Self::ray_len(FRAC_PI_2, rad);
        // lower ray, circle arc, upper ray, back along the imaginary axis
        for k in 0..=n {
            boundary.push(Complex64::from_polar(rho0 * k as f64 / n as f64, eps));
        }
        let a0 = (Complex64::from_polar(rho0, eps) - p_plus).arg();
        let a1 = (Complex64::from_polar(t_top, FRAC_PI_2) - p_plus).arg();
        let mut sweep = a1 - a0;
        if sweep < 0.0 {
            sweep += TAU;
        }
        for k in 1..=2 * n {
            let a = a0 + sweep * k as f64 / (2 * n) as f64;
            boundary.push(p_plus + Complex64::from_polar(rad, a));
        }
        for k in 1..=n {
            boundary.push(Complex64::from_polar(
                t_top * (n - k) as f64 / n as f64,
                FRAC_PI_2,
            ));
        }
        SectorDisk { eps, rad, boundary }
    }

    fn contains_closed(&self, z: Complex64) -> bool {
        if z.norm() < 1e-14 {
            return true; // the corner at 0
        }
        let th = z.arg();
        th >= self.eps
            && th <= FRAC_PI_2
            && (z - Complex64::from_polar(1.0, PI / 3.0)).norm() <= self.rad
    }

    /// Signed distance: negative inside the closed region.
    fn signed_dist(&self, z: Complex64) -> f64 {
        let d = nearest_point_on_polyline(&self.boundary, z).3;
        if self.contains_closed(z) {
            -d
        } else {
            d
        }
    }
}

/// Verifies the sector-disk of the rotating source: its boundary image
/// avoids the region except at the corner, the trimmed region with the
/// unit segment sits inside its own image, and inverse orbits converge to
/// the source.
pub fn basin_disk_check(
    p: &MapParams,
    eps: f64,
    delta: f64,
    n_orbits: usize,
    seed: u64,
) -> Result<BasinReport> {
    ensure!(eps > 0.0 && eps < 0.3, "eps out of range");
    ensure!(delta > 0.0 && delta < 0.2, "delta out of range");
    let p_plus = Complex64::from_polar(1.0, PI / 3.0);
    let rad = (Complex64::new(0.0, 2.0) - p_plus).norm();
    let full = SectorDisk::new(eps, rad, 500);

    // boundary image avoids the closed region except near the corner at 0
    let mut boundary_violations = 0usize;
    let mut boundary_clearance = f64::INFINITY;
    let mut near_zero_exempted = 0usize;
    let mut boundary_samples = 0usize;
    for s in &full.boundary {
        if s.norm() < 1e-9 {
            continue;
        }
        boundary_samples += 1;
        let w = limit_map(*s)?;
        if w.norm() <= delta {
            near_zero_exempted += 1;
            continue;
        }
        let d = full.signed_dist(w);
        boundary_clearance = boundary_clearance.min(d);
        if d <= 0.0 {
            boundary_violations += 1;
        }
    }

    // trimmed region (corner removed): closure plus the unit segment sit
    // inside the image of the trimmed region, up to the delta trim
    let trimmed = SectorDisk::new(eps, rad, 500);
    let in_trimmed_closed = |z: Complex64| trimmed.contains_closed(z) && z.norm() >= delta;
    let defect = |q: Complex64| -> f64 {
        let mut candidates = limit_preimages(q);
        if candidates.is_empty() {
            // the puncture: 1 pulls back to 0 in the limit
            candidates.push(Complex64::new(0.0, 0.0));
        }
        candidates
            .into_iter()
            .map(|w| {
                if in_trimmed_closed(w) {
                    0.0
                } else {
                    let to_region = trimmed.signed_dist(w).max(0.0);
                    let to_trim = (delta - w.norm()).max(0.0);
                    to_region.max(to_trim)
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut inclusion_samples = 0usize;
    let mut inclusion_max_defect: f64 = 0.0;
    let grid = 60;
    for ky in 0..=grid {
        for kx in 0..=grid {
            let z = Complex64::new(
                -0.1 + 1.6 * kx as f64 / grid as f64,
                -0.1 + 2.2 * ky as f64 / grid as f64,
            );
            if in_trimmed_closed(z) {
                inclusion_samples += 1;
                inclusion_max_defect = inclusion_max_defect.max(defect(z));
            }
        }
    }
    for k in 0..=200 {
        let q = Complex64::new(k as f64 / 200.0, 0.0);
        inclusion_samples += 1;
        inclusion_max_defect = inclusion_max_defect.max(defect(q));
    }

    // inverse orbits from the region converge to the source
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orbit_max_steps = 0usize;
    let mut orbit_max_error: f64 = 0.0;
    let mut done = 0usize;
    while done < n_orbits {
        let z0 = Complex64::new(rng.gen_range(-0.1..1.6), rng.gen_range(0.0..2.2));
        if !in_trimmed_closed(z0) {
            continue;
        }
        done += 1;
        let mut z = z0;
        let mut steps = 0usize;
        while (z - p_plus).norm() >= 1e-8 && steps < 200 {
            let pre = preimages(p, z);
            ensure!(!pre.is_empty(), "inverse orbit died at {z}");
            z = pre[0];
            steps += 1;
        }
        let err = (z - p_plus).norm();
        ensure!(
            err < 1e-8,
            "inverse orbit from {z0} stalled at error {err:.2e} after {steps} steps"
        );
        orbit_max_steps = orbit_max_steps.max(steps);
        orbit_max_error = orbit_max_error.max(err);
    }

    // the imaginary segment maps onto [-1, 1]
    let mut axis_image_max_deviation: f64 = 0.0;
    for k in 1..=400 {
        let t = 2.0 * k as f64 / 400.0;
        let w = limit_map(Complex64::new(0.0, t))?;
        let dev = w.im.abs().max((w.re.abs() - 1.0).max(0.0));
        axis_image_max_deviation = axis_image_max_deviation.max(dev);
    }

    Ok(BasinReport {
        disk_radius: rad,
        boundary_samples,
        boundary_violations,
        boundary_clearance,
        near_zero_exempted,
        inclusion_samples,
        inclusion_max_defect,
        orbit_count: n_orbits,
        orbit_max_steps,
        orbit_max_error,
        axis_image_max_deviation,
    })
}

/// A verified periodic point.
#[derive(Clone, Debug)]
pub struct PeriodicPoint {
    /// Orbit representative inside the search window.
    pub point: Complex64,
    pub period: usize,
    pub kind: FixedPointKind,
    pub multipliers: (Complex64, Complex64),
    pub residual: f64,
}

/// Search statistics alongside the found points.
#[derive(Clone, Debug)]
pub struct PeriodicSearch {
    pub points: Vec<PeriodicPoint>,
    pub seeds_tried: usize,
    pub converged: usize,
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn solve2(m: &[[f64; 2]; 2], r: Complex64) -> Option<Complex64> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-14 {
        return None;
    }
    Some(Complex64::new(
        (r.re * m[1][1] - r.im * m[0][1]) / det,
        (r.im * m[0][0] - r.re * m[1][0]) / det,
    ))
}

/// Eigenvalues of a real 2x2 matrix, modulus ascending.
fn eig2(m: &[[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    let (a, b) = if disc >= 0.0 {
        let s = disc.sqrt();
        (
            Complex64::new(tr / 2.0 - s, 0.0),
            Complex64::new(tr / 2.0 + s, 0.0),
        )
    } else {
        let s = (-disc).sqrt();
        (
            Complex64::new(tr / 2.0, -s),
            Complex64::new(tr / 2.0, s),
        )
    };
    if a.norm() <= b.norm() {
        (a, b)
    } else {
        (b, a)
    }
}

fn classify(eigs: (Complex64, Complex64)) -> FixedPointKind {
    let (lo, hi) = (eigs.0.norm(), eigs.1.norm());
    if lo > 1.0 {
        FixedPointKind::Source
    } else if hi < 1.0 {
        FixedPointKind::Sink
    } else {
        FixedPointKind::Saddle
    }
}

/// Forward orbit of length n (q, F(q), ..., F^{n-1}(q)); None on a
/// singular point.
fn forward_orbit(p: &MapParams, q: Complex64, n: usize) -> Option<Vec<Complex64>> {
    let mut orbit = vec![q];
    for _ in 1..n {
        let z = *orbit.last().unwrap();
        if z.norm() < 1e-13 || z.norm() > 4.0 * p.outer_radius() {
            return None;
        }
        orbit.push(eval_map(p, z).ok()?);
    }
    Some(orbit)
}

fn orbit_jacobian(p: &MapParams, orbit: &[Complex64]) -> Option<[[f64; 2]; 2]> {
    let mut j = [[1.0, 0.0], [0.0, 1.0]];
    for z in orbit {
        j = mat_mul(&real_jacobian(p, *z).ok()?, &j);
    }
    Some(j)
}

/// Newton iteration for a fixed point of the n-th iterate.
fn newton_periodic(p: &MapParams, seed: Complex64, n: usize, tol: f64) -> Option<(Complex64, f64)> {
    let mut q = seed;
    for _ in 0..60 {
        let orbit = forward_orbit(p, q, n)?;
        let last = *orbit.last().unwrap();
        if last.norm() < 1e-13 {
            return None;
        }
        let fq = eval_map(p, last).ok()?;
        let r = fq - q;
        let j = orbit_jacobian(p, &orbit)?;
        let m = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        let step = solve2(&m, -r)?;
        q += step;
        if r.norm() < tol && step.norm() < tol * 10.0 {
            let check = forward_orbit(p, q, n + 1)?;
            return Some((q, (check[n] - q).norm()));
        }
        if q.norm() > 4.0 * p.outer_radius() {
            return None;
        }
    }
    None
}

/// Anchored shadowing solve: cycles a backward closest-preimage pass over
/// a forward reference orbit until the closed path stabilizes. The cycle
/// map contracts exactly when both orbit multipliers exceed 1, so this
/// converges onto periodic sources shadowing the reference.
fn periodic_shadow(p: &MapParams, reference: &[Complex64]) -> Option<Complex64> {
    let n = reference.len();
    let mut path = reference.to_vec();
    for _ in 0..600 {
        let mut next = path.clone();
        let mut v = path[0];
        for j in (0..n).rev() {
            let pre = preimages(p, v);
            if pre.is_empty() {
                return None;
            }
            v = pre
                .into_iter()
                .min_by(|a, b| {
                    (a - path[j])
                        .norm()
                        .partial_cmp(&(b - path[j]).norm())
                        .unwrap()
                })
                .unwrap();
            if v.norm() > 4.0 * p.outer_radius() {
                return None;
            }
            next[j] = v;
        }
        let moved = path
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        path = next;
        if moved < 1e-13 {
            return Some(path[0]);
        }
    }
    None
}

/// Searches a disk window for periodic points: fixed points by direct
/// Newton, sources by anchored shadowing along forward orbits from the
/// window, saddles from crossings of the stable tree with the outer loop,
/// plus plain Newton from a deterministic seed grid.
pub fn find_periodic_points(
    p: &MapParams,
    center: Complex64,
    radius: f64,
    period_cap: usize,
) -> Result<PeriodicSearch> {
    ensure!(radius > 0.0, "window radius must be positive");
    ensure!(period_cap >= 1, "period cap must be at least 1");
    let tol = 1e-12;
    let mut seeds_tried = 0usize;
    let mut converged = 0usize;
    let mut found: Vec<PeriodicPoint> = Vec::new();

    let consider = |q: Complex64, n: usize, residual: f64, found: &mut Vec<PeriodicPoint>| {
        if residual > 1e-10 {
            return;
        }
        let orbit = match forward_orbit(p, q, n) {
            Some(o) => o,
            None => return,
        };
        // reduce to the primitive period
        let mut period = n;
        for d in 1..n {
            if n % d == 0 && (orbit[d] - q).norm() < 1e-9 {
                period = d;
                break;
            }
        }
        let orbit = &orbit[..period];
        let rep = match orbit.iter().find(|z| (**z - center).norm() <= radius) {
            Some(z) => *z,
            None => return,
        };
        for existing in found.iter() {
            if existing.period == period && (existing.point - rep).norm() < 1e-6 {
                return;
            }
            if existing.period == period
                && orbit.iter().any(|z| (*z - existing.point).norm() < 1e-6)
            {
                return;
            }
        }
        let j = match orbit_jacobian(p, orbit) {
            Some(j) => j,
            None => return,
        };
        let eigs = eig2(&j);
        found.push(PeriodicPoint {
            point: rep,
            period,
            kind: classify(eigs),
            multipliers: eigs,
            residual,
        });
    };

    // direct fixed-point seeds
    for seed in [
        Complex64::new(p.saddle_location(), 0.0),
        Complex64::from_polar(1.0, PI / 3.0),
        Complex64::from_polar(1.0, -PI / 3.0),
    ] {
        if (seed - center).norm() > radius + 0.5 {
            continue;
        }
        seeds_tried += 1;
        if let Some((q, r)) = newton_periodic(p, seed, 1, tol) {
            converged += 1;
            consider(q, 1, r, &mut found);
        }
    }

    // shadowing along forward reference orbits from points of the window
    let jitter = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.31, 0.17),
        Complex64::new(-0.23, 0.29),
        Complex64::new(0.11, -0.37),
        Complex64::new(-0.41, -0.19),
    ];
    for dj in jitter {
        let z0 = center + dj * radius;
        if z0.norm() < 1e-6 || z0.norm() > p.outer_radius() {
            continue;
        }
        for n in 1..=period_cap {
            let reference = match forward_orbit(p, z0, n) {
                Some(o) => o,
                None => break,
            };
            seeds_tried += 1;
            if let Some(q) = periodic_shadow(p, &reference) {
                if let Some(orbit_check) = forward_orbit(p, q, n + 1) {
                    let r = (orbit_check[n] - q).norm();
                    if r < 1e-6 {
                        converged += 1;
                        let polished = newton_periodic(p, q, n, tol).unwrap_or((q, r));
                        consider(polished.0, n, polished.1, &mut found);
                    }
                }
            }
        }
    }

    // plain Newton from a seed grid across the window
    let grid = 4;
    for ky in 0..grid {
        for kx in 0..grid {
            let s = center
                + Complex64::new(
                    radius * (2.0 * (kx as f64 + 0.5) / grid as f64 - 1.0),
                    radius * (2.0 * (ky as f64 + 0.5) / grid as f64 - 1.0),
                ) * 0.8;
            if s.norm() < 1e-6 {
                continue;
            }
            for n in 1..=period_cap {
                seeds_tried += 1;
                if let Some((q, r)) = newton_periodic(p, s, n, tol) {
                    converged += 1;
                    consider(q, n, r, &mut found);
                }
            }
        }
    }

    // saddle seeds from stable-tree crossings with the outer loop
    if let Ok(outer) = compute_external_boundary(p) {
        if let Ok(arcs) = stable_manifold_arcs(p, 6, (1.0, p.outer_radius()), 160, p.outer_radius() + 2.0)
        {
            let mut crossings = Vec::new();
            for sa in &arcs {
                for (i, j, pt) in
                    crate::geom::polyline_intersections(&sa.arc.points, &outer.arc.points)
                {
                    let ta = sa.arc.points[i + 1] - sa.arc.points[i];
                    let tb = outer.arc.points[j + 1] - outer.arc.points[j];
                    let ang = (ta / tb).arg().abs();
                    let ang = ang.min(PI - ang);
                    if ang > 5.0_f64.to_radians() && (pt - center).norm() <= radius + 1.0 {
                        crossings.push(pt);
                    }
                }
            }
            crossings.truncate(24);
            for pt in crossings {
                for n in 1..=period_cap {
                    seeds_tried += 1;
                    if let Some((q, r)) = newton_periodic(p, pt, n, tol) {
                        converged += 1;
                        consider(q, n, r, &mut found);
                    }
                }
            }
        }
    }

    found.sort_by(|a, b| {
        (a.period, a.point.re, a.point.im)
            .partial_cmp(&(b.period, b.point.re, b.point.im))
            .unwrap()
    });
    Ok(PeriodicSearch { points: found, seeds_tried, converged })
}
