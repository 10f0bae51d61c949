//! The attractor region: its outer boundary loop (grown from the saddle's
//! unstable curve to the self-crossing on the negative axis), the inner
//! unattained circle, and a cell grid with dual certification — geometric
//! tests against the boundary curves cross-checked by depth-limited
//! backward-chain searches through the preimage tree.

use anyhow::{anyhow, bail, ensure, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core_maps::{eval_map, preimages, MapParams};
use crate::geom::{nearest_point_on_polyline, point_in_polygon};
use crate::hyperbolicity::{Arc, HyperbolicityDomain};
use crate::manifolds::{close_loop_at_axis, push_curve, unstable_seed, RefineCriteria};

/// Outer boundary loop with its crossing data.
#[derive(Clone, Debug)]
pub struct ExternalBoundary {
    /// Closed loop from the lower-half axis crossing through the saddle to
    /// the upper-half one; the two end points coincide up to symmetry error.
    pub arc: Arc,
    /// Self-crossing point on the negative real axis.
    pub crossing: Complex64,
    /// Angle between the two branches at the crossing.
    pub crossing_angle: f64,
    /// Radius of the loop on the negative axis.
    pub rho_at_pi: f64,
    /// Largest |rho(theta) - rho(-theta)| over a sampled angle grid.
    pub max_asymmetry: f64,
    /// |theta| at which the loop first dips below the expansion-region
    /// threshold, when it does.
    pub exit_expansion_theta: Option<f64>,
}

/// Radius of the curve in direction `theta` from the origin: the largest
/// crossing of the ray with the polyline, if any.
pub fn radial_profile(points: &[Complex64], theta: f64) -> Option<f64> {
    let u = Complex64::from_polar(1.0, -theta);
    let mut best: Option<f64> = None;
    for w in points.windows(2) {
        let a = w[0] * u;
        let b = w[1] * u;
        if a.im == 0.0 && a.re > 0.0 {
            best = Some(best.map_or(a.re, |r: f64| r.max(a.re)));
            continue;
        }
        if (a.im > 0.0) != (b.im > 0.0) {
            let t = a.im / (a.im - b.im);
            let r = a.re + t * (b.re - a.re);
            if r > 0.0 {
                best = Some(best.map_or(r, |x: f64| x.max(r)));
            }
        }
    }
    best
}

/// Grows the saddle's unstable curve without clipping until its two halves
/// cross the negative real axis, and closes the loop there.
pub fn compute_external_boundary(p: &MapParams) -> Result<ExternalBoundary> {
    let (_, mut curve) = unstable_seed(p)?;
    let crit = RefineCriteria::default();
    let mut closed = None;
    for _ in 0..90 {
        curve = push_curve(p, &curve, &crit)?;
        if let Some(l) = close_loop_at_axis(&curve) {
            closed = Some(l);
            break;
        }
    }
    let nodes = closed.ok_or_else(|| {
        let th = curve
            .iter()
            .map(|n| n.0.arg().abs())
            .fold(0.0f64, f64::max);
        anyhow!("outer boundary continuation did not close; reached |theta| = {th:.4}")
    })?;
    let arc = Arc::with_tangents(
        nodes.iter().map(|n| n.0).collect(),
        nodes.iter().map(|n| n.1).collect(),
        p.lambda,
    )?;
    let first = arc.points[0];
    let last = arc.points[arc.points.len() - 1];
    let crossing = Complex64::new(0.5 * (first.re + last.re), 0.0);
    ensure!(crossing.re < 0.0, "loop closed off the negative axis at {crossing}");
    // branch angle at the crossing, folded to an unoriented line-to-line angle
    let a = (arc.tangents[arc.tangents.len() - 1] / arc.tangents[0]).arg().abs();
    let crossing_angle = a.min(std::f64::consts::PI - a);
    // asymmetry of the radial profile between the two halves
    let mut max_asymmetry = (first - last).norm();
    let m = 720;
    for k in 1..m {
        let th = std::f64::consts::PI * k as f64 / m as f64;
        if let (Some(up), Some(dn)) = (
            radial_profile(&arc.points, th),
            radial_profile(&arc.points, -th),
        ) {
            max_asymmetry = max_asymmetry.max((up - dn).abs());
        }
    }
    // first dip below the expansion threshold, walking the upper half
    // outward from the saddle
    let h = HyperbolicityDomain::new(p.lambda);
    let saddle_idx = arc
        .points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
        .map(|(i, _)| i)
        .unwrap();
    let mut exit_expansion_theta = None;
    let mut prev: Option<Complex64> = None;
    for w in &arc.points[saddle_idx..] {
        if w.norm() < h.threshold {
            let th = match prev {
                Some(q) => {
                    let t = (q.norm() - h.threshold) / (q.norm() - w.norm());
                    (q + (w - q) * t).arg().abs()
                }
                None => w.arg().abs(),
            };
            exit_expansion_theta = Some(th);
            break;
        }
        prev = Some(*w);
    }
    Ok(ExternalBoundary {
        rho_at_pi: crossing.norm(),
        crossing,
        crossing_angle,
        max_asymmetry,
        exit_expansion_theta,
        arc,
    })
}

/// Inner boundary: the closed image curve of an arbitrarily small circle,
/// the circle |z-1| = 1-lambda for the unperturbed closed form.
#[derive(Clone, Debug)]
pub struct InternalBoundary {
    pub arc: Arc,
    /// (min, max) of |point - 1| along the curve.
    pub radius_band: (f64, f64),
}

/// Traces the inner unattained boundary around 1. Each output direction is
/// covered by two source half-angles; the smaller image radius wins.
pub fn compute_internal_boundary(p: &MapParams, samples: usize) -> Result<InternalBoundary> {
    ensure!(samples >= 16, "need at least 16 samples");
    let t0 = 1e-8;
    let mut pts = Vec::with_capacity(samples + 1);
    for k in 0..samples {
        let psi = k as f64 / samples as f64; // turns
        let mut r = f64::INFINITY;
        for half in [0.5 * psi, 0.5 * (psi + 1.0)] {
            let src = Complex64::from_polar(t0, std::f64::consts::TAU * half);
            let img = eval_map(p, src)?;
            r = r.min((img - Complex64::new(1.0, 0.0)).norm());
        }
        pts.push(Complex64::new(1.0, 0.0) + Complex64::from_polar(r, std::f64::consts::TAU * psi));
    }
    pts.push(pts[0]);
    let band = pts
        .iter()
        .map(|w| (w - Complex64::new(1.0, 0.0)).norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let arc = Arc::from_points(pts, p.lambda)?;
    Ok(InternalBoundary { arc, radius_band: band })
}

/// Verdict of the depth-limited backward-chain search.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChainVerdict {
    /// Some preimage chain of the requested length stays inside the disk.
    Survives,
    /// Every chain leaves the disk or dies (no preimage) within the depth.
    AllExit,
    /// Node budget ran out before either certificate fired.
    Exhausted,
}

/// Smallest k <= cap such that every continuation of a point with modulus t
/// has left the disk of radius r_max after k more steps; None if no such
/// bound within cap. Uses the monotone lower envelope of backward moduli.
fn escape_steps(p: &MapParams, t: f64, r_max: f64, cap: usize) -> Option<usize> {
    let floor = p.saddle_location();
    let mut m = t;
    for k in 1..=cap {
        let s = m - 1.0 - (1.0 - p.lambda);
        if s <= 0.0 {
            return None;
        }
        let next = (s / p.lambda).powf(p.sigma / p.mu);
        if next <= m || next <= floor {
            return None; // envelope not expanding; no uniform escape bound
        }
        if next > r_max {
            return Some(k);
        }
        m = next;
    }
    None
}

fn chain_search(
    p: &MapParams,
    z: Complex64,
    remaining: usize,
    r_max: f64,
    budget: &mut usize,
) -> Option<bool> {
    if remaining == 0 {
        return Some(true);
    }
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    // if even the slowest-growing continuation leaves the disk in time,
    // every chain below this node exits
    if z.norm() > p.saddle_location() + 1e-3 {
        if let Some(k) = escape_steps(p, z.norm(), r_max, remaining) {
            debug_assert!(k <= remaining);
            return Some(false);
        }
    }
    let pre = preimages(p, z);
    let mut any_unknown = false;
    for w in pre {
        if w.norm() > r_max + 1e-9 {
            continue; // this branch left the disk
        }
        match chain_search(p, w, remaining - 1, r_max, budget) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => any_unknown = true,
        }
    }
    if any_unknown {
        None
    } else {
        Some(false)
    }
}

/// Searches the preimage tree of `z` for a chain of length `depth` staying
/// inside the invariant disk. Branch 0 (the half-angle nearest the positive
/// axis) is tried first; subtrees whose every continuation must leave the
/// disk are pruned in closed form.
pub fn chain_membership(
    p: &MapParams,
    z: Complex64,
    depth: usize,
    node_budget: usize,
) -> ChainVerdict {
    let mut budget = node_budget;
    match chain_search(p, z, depth, p.outer_radius(), &mut budget) {
        Some(true) => ChainVerdict::Survives,
        Some(false) => ChainVerdict::AllExit,
        None => ChainVerdict::Exhausted,
    }
}

/// Certification status of a grid cell or a point.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    CertifiedIn,
    CertifiedOut,
    Boundary,
    Unknown,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::CertifiedIn => "certified_in",
            CellStatus::CertifiedOut => "certified_out",
            CellStatus::Boundary => "boundary",
            CellStatus::Unknown => "unknown",
        }
    }

    /// Gray level for image output: in 255, out 0, boundary/unknown 128.
    pub fn gray(&self) -> u8 {
        match self {
            CellStatus::CertifiedIn => 255,
            CellStatus::CertifiedOut => 0,
            CellStatus::Boundary | CellStatus::Unknown => 128,
        }
    }
}

/// Pointwise membership: certified_in needs both a surviving chain and
/// geometric inclusion; certified_out needs all chains to exit or geometric
/// exclusion; unknown otherwise.
pub fn omega_membership(p: &MapParams, z: Complex64, depth: usize) -> Result<CellStatus> {
    ensure!(
        z.norm() <= p.outer_radius() + 1e-9,
        "point lies outside the invariant disk"
    );
    let outer = compute_external_boundary(p)?;
    let inner = compute_internal_boundary(p, 360)?;
    Ok(classify_point(p, z, depth, 64 * depth, &outer, &inner))
}

fn geometric_in(
    p: &MapParams,
    z: Complex64,
    outer: &ExternalBoundary,
    inner: &InternalBoundary,
) -> bool {
    if z.norm() > p.outer_radius() {
        return false;
    }
    // the outer loop belongs to the set; the inner circle is unattained
    let d_out = nearest_point_on_polyline(&outer.arc.points, z).3;
    if d_out < 1e-9 {
        return true;
    }
    let d_in = nearest_point_on_polyline(&inner.arc.points, z).3;
    if d_in < 1e-9 {
        return false;
    }
    point_in_polygon(z, &outer.arc.points) && !point_in_polygon(z, &inner.arc.points)
}

fn classify_point(
    p: &MapParams,
    z: Complex64,
    depth: usize,
    node_budget: usize,
    outer: &ExternalBoundary,
    inner: &InternalBoundary,
) -> CellStatus {
    let geo = geometric_in(p, z, outer, inner);
    let chain = chain_membership(p, z, depth, node_budget);
    match (geo, chain) {
        (true, ChainVerdict::Survives) => CellStatus::CertifiedIn,
        (false, _) => CellStatus::CertifiedOut,
        (true, ChainVerdict::AllExit) => CellStatus::CertifiedOut,
        (true, ChainVerdict::Exhausted) => CellStatus::Unknown,
    }
}

/// Certified cell grid over the invariant disk with both boundary curves.
#[derive(Clone, Debug)]
pub struct Region {
    /// Grid covers [-half_width, half_width]^2.
    pub half_width: f64,
    pub resolution: usize,
    pub cell_size: f64,
    /// Row-major, index = iy * resolution + ix, y grows with iy.
    pub cells: Vec<CellStatus>,
    pub outer: ExternalBoundary,
    pub inner: InternalBoundary,
    pub depth: usize,
    /// Counts in cell order: certified_in, certified_out, boundary, unknown.
    pub counts: [usize; 4],
    /// Non-boundary cells where chain and geometric verdicts differ.
    pub chain_disagreements: usize,
    /// Same, excluding cells within one cell of a boundary cell.
    pub chain_disagreements_off_layer: usize,
    /// Non-boundary cells where the chain search returned no verdict.
    pub chain_unknown: usize,
}

impl Region {
    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        let s = self.cell_size;
        Complex64::new(
            -self.half_width + (ix as f64 + 0.5) * s,
            -self.half_width + (iy as f64 + 0.5) * s,
        )
    }

    /// Status of the cell containing `z`, if it is on the grid.
    pub fn status_at(&self, z: Complex64) -> Option<CellStatus> {
        let ix = ((z.re + self.half_width) / self.cell_size).floor();
        let iy = ((z.im + self.half_width) / self.cell_size).floor();
        if ix < 0.0 || iy < 0.0 {
            return None;
        }
        let (ix, iy) = (ix as usize, iy as usize);
        if ix >= self.resolution || iy >= self.resolution {
            return None;
        }
        Some(self.cells[iy * self.resolution + ix])
    }

    /// Number of connected certified_in components and of holes (components
    /// of the complement not touching the grid border), 4-connectivity.
    pub fn component_count(&self) -> (usize, usize) {
        let n = self.resolution;
        let is_in = |i: usize| self.cells[i] == CellStatus::CertifiedIn;
        let mut seen = vec![false; n * n];
        let flood = |start: usize, pred: &dyn Fn(usize) -> bool, seen: &mut Vec<bool>| {
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (ix, iy) = (i % n, i / n);
                let mut push = |j: usize| {
                    if !seen[j] && pred(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if ix > 0 {
                    push(i - 1);
                }
                if ix + 1 < n {
                    push(i + 1);
                }
                if iy > 0 {
                    push(i - n);
                }
                if iy + 1 < n {
                    push(i + n);
                }
            }
        };
        let mut components = 0;
        for i in 0..n * n {
            if is_in(i) && !seen[i] {
                components += 1;
                flood(i, &is_in, &mut seen);
            }
        }
        // flood the complement from the border; unreached complement = holes
        let not_in = |i: usize| !is_in(i);
        let mut outside = vec![false; n * n];
        for k in 0..n {
            for i in [k, (n - 1) * n + k, k * n, k * n + n - 1] {
                if not_in(i) && !outside[i] {
                    flood(i, &not_in, &mut outside);
                }
            }
        }
        let mut hole_seen = vec![false; n * n];
        let mut holes = 0;
        for i in 0..n * n {
            if not_in(i) && !outside[i] && !hole_seen[i] {
                holes += 1;
                flood(i, &|j| not_in(j) && !outside[j], &mut hole_seen);
            }
        }
        (components, holes)
    }
}

/// Marks every cell the polyline passes through. Samples quarter-cell steps
/// along each segment; a sample also marks the neighbor cell across an edge
/// it sits within 0.15 cells of, which covers corner clips the sampling
/// stride could otherwise miss.
fn rasterize_polyline(mask: &mut [bool], n: usize, half_width: f64, cell: f64, pts: &[Complex64]) {
    let mut mark = |z: Complex64| {
        let fx = (z.re + half_width) / cell;
        let fy = (z.im + half_width) / cell;
        let (ix, iy) = (fx.floor(), fy.floor());
        let mut xs = vec![0i64];
        if fx - ix < 0.15 {
            xs.push(-1);
        }
        if fx - ix > 0.85 {
            xs.push(1);
        }
        let mut ys = vec![0i64];
        if fy - iy < 0.15 {
            ys.push(-1);
        }
        if fy - iy > 0.85 {
            ys.push(1);
        }
        for dy in &ys {
            for dx in &xs {
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if jx >= 0 && jy >= 0 && (jx as usize) < n && (jy as usize) < n {
                    mask[jy as usize * n + jx as usize] = true;
                }
            }
        }
    };
    for w in pts.windows(2) {
        let len = (w[1] - w[0]).norm();
        let steps = (len / (0.25 * cell)).ceil().max(1.0) as usize;
        for s in 0..=steps {
            mark(w[0] + (w[1] - w[0]) * (s as f64 / steps as f64));
        }
    }
}

fn dilate(mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for iy in 0..n {
        for ix in 0..n {
            if mask[iy * n + ix] {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                        if jx >= 0 && jy >= 0 && (jx as usize) < n && (jy as usize) < n {
                            out[jy as usize * n + jx as usize] = true;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Radial lookup table for the outer loop, one radius per angle bin, for
/// O(1) inclusion tests on the grid. The loop is a radial graph, so this is
/// equivalent to the winding-number polygon test away from the curve.
struct RadialTable {
    radii: Vec<f64>,
}

impl RadialTable {
    fn build(points: &[Complex64], bins: usize) -> Result<Self> {
        let mut radii = vec![f64::NAN; bins];
        let wrap = |th: f64| th.rem_euclid(std::f64::consts::TAU);
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ta, tb) = (wrap(a.arg()), wrap(b.arg()));
            let mut d = tb - ta;
            if d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            if d < -std::f64::consts::PI {
                d += std::f64::consts::TAU;
            }
            let steps = ((d.abs() / std::f64::consts::TAU) * bins as f64).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let th = wrap(ta + d * t);
                let r = (a + (b - a) * t).norm();
                let bin = ((th / std::f64::consts::TAU) * bins as f64) as usize % bins;
                let cur = radii[bin];
                if cur.is_nan() || r > cur {
                    radii[bin] = r;
                }
            }
        }
        // fill any unpainted bin from its neighbors
        for _ in 0..bins {
            let holes: Vec<usize> =
                (0..bins).filter(|i| radii[*i].is_nan()).collect();
            if holes.is_empty() {
                break;
            }
            for i in holes {
                let l = radii[(i + bins - 1) % bins];
                let r = radii[(i + 1) % bins];
                radii[i] = match (l.is_nan(), r.is_nan()) {
                    (false, false) => 0.5 * (l + r),
                    (false, true) => l,
                    (true, false) => r,
                    (true, true) => f64::NAN,
                };
            }
        }
        ensure!(radii.iter().all(|r| r.is_finite()), "radial table has gaps");
        Ok(RadialTable { radii })
    }

    fn contains(&self, z: Complex64) -> bool {
        let bins = self.radii.len();
        let th = z.arg().rem_euclid(std::f64::consts::TAU);
        let x = (th / std::f64::consts::TAU) * bins as f64;
        let i = (x as usize) % bins;
        let j = (i + 1) % bins;
        let t = x - x.floor();
        let r = self.radii[i] * (1.0 - t) + self.radii[j] * t;
        z.norm() <= r
    }
}

/// Classifies the cell grid. Boundary cells are those the two boundary
/// curves pass through; the rest get the dual geometric/chain certification,
/// with disagreements between the two methods counted.
pub fn compute_omega(p: &MapParams, resolution: usize, depth: usize) -> Result<Region> {
    ensure!(resolution >= 16, "resolution must be at least 16");
    ensure!(depth >= 1, "depth must be at least 1");
    let outer = compute_external_boundary(p)?;
    let inner = compute_internal_boundary(p, 720)?;
    let half_width = p.outer_radius() + 2.0;
    let n = resolution;
    let cell = 2.0 * half_width / n as f64;

    let mut boundary_mask = vec![false; n * n];
    rasterize_polyline(&mut boundary_mask, n, half_width, cell, &outer.arc.points);
    rasterize_polyline(&mut boundary_mask, n, half_width, cell, &inner.arc.points);

    let table = RadialTable::build(&outer.arc.points, 8192)?;
    let hole_center = Complex64::new(1.0, 0.0);
    let hole_r = inner.radius_band;
    let node_budget = 32 * depth;

    // rows in parallel; each cell gets (status, chain-geo disagreement flag)
    let rows: Vec<Vec<(CellStatus, bool, bool)>> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let mut row = Vec::with_capacity(n);
            for ix in 0..n {
                let z = Complex64::new(
                    -half_width + (ix as f64 + 0.5) * cell,
                    -half_width + (iy as f64 + 0.5) * cell,
                );
                if boundary_mask[iy * n + ix] {
                    row.push((CellStatus::Boundary, false, false));
                    continue;
                }
                let geo = z.norm() <= p.outer_radius()
                    && table.contains(z)
                    && (z - hole_center).norm() > hole_r.1;
                let chain = chain_membership(p, z, depth, node_budget);
                let status = match (geo, chain) {
                    (true, ChainVerdict::Survives) => CellStatus::CertifiedIn,
                    (false, _) => CellStatus::CertifiedOut,
                    (true, ChainVerdict::AllExit) => CellStatus::CertifiedOut,
                    (true, ChainVerdict::Exhausted) => CellStatus::Unknown,
                };
                let disagree = matches!(
                    (geo, chain),
                    (true, ChainVerdict::AllExit) | (false, ChainVerdict::Survives)
                );
                let unknown = chain == ChainVerdict::Exhausted;
                row.push((status, disagree, unknown));
            }
            row
        })
        .collect();

    let mut cells = Vec::with_capacity(n * n);
    let mut disagree_mask = vec![false; n * n];
    let mut counts = [0usize; 4];
    let mut chain_disagreements = 0;
    let mut chain_unknown = 0;
    for (iy, row) in rows.into_iter().enumerate() {
        for (ix, (status, disagree, unknown)) in row.into_iter().enumerate() {
            let idx = match status {
                CellStatus::CertifiedIn => 0,
                CellStatus::CertifiedOut => 1,
                CellStatus::Boundary => 2,
                CellStatus::Unknown => 3,
            };
            counts[idx] += 1;
            if disagree {
                chain_disagreements += 1;
                disagree_mask[iy * n + ix] = true;
            }
            if unknown {
                chain_unknown += 1;
            }
            cells.push(status);
        }
    }
    let layer = dilate(&boundary_mask, n);
    let chain_disagreements_off_layer = (0..n * n)
        .filter(|i| disagree_mask[*i] && !layer[*i])
        .count();

    // coarse-resolution diagnostic: boundary dominating the filled area
    if counts[2] > (counts[0] + counts[2]).max(1) / 2 {
        bail!(
            "resolution {n} too coarse: {} boundary cells against {} interior cells",
            counts[2],
            counts[0]
        );
    }

    Ok(Region {
        half_width,
        resolution: n,
        cell_size: cell,
        cells,
        outer,
        inner,
        depth,
        counts,
        chain_disagreements,
        chain_disagreements_off_layer,
        chain_unknown,
    })
}
