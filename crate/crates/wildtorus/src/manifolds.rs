//! Fixed points of the planar family and its limit circle map, invariant
//! curves through them (global unstable curve, stable preimage tree), greedy
//! backward orbits, and local unstable arcs at arbitrary points.

use crate::core_maps::{
    derivative, eval_map, limit_derivative, limit_map, preimages, MapParams,
};
use crate::hyperbolicity::{Arc, HyperbolicityDomain};
use crate::tol;
use anyhow::{anyhow, ensure, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Classification of a hyperbolic fixed point by its multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointKind {
    Saddle,
    Source,
    Sink,
}

impl FixedPointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixedPointKind::Saddle => "saddle",
            FixedPointKind::Source => "source",
            FixedPointKind::Sink => "sink",
        }
    }
}

/// A located fixed point with its multipliers, ordered by modulus ascending.
/// Eigendirections are present only when the multipliers are real.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPoint {
    pub location: Complex64,
    pub kind: FixedPointKind,
    pub multipliers: (Complex64, Complex64),
    pub stable_dir: Option<Complex64>,
    pub unstable_dir: Option<Complex64>,
    pub residual: f64,
}

enum MapRef<'a> {
    Family(&'a MapParams),
    Limit,
}

impl MapRef<'_> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            MapRef::Family(p) => eval_map(p, z),
            MapRef::Limit => limit_map(z),
        }
    }

    fn deriv(&self, z: Complex64, v: Complex64) -> Result<Complex64> {
        match self {
            MapRef::Family(p) => derivative(p, z, v),
            MapRef::Limit => limit_derivative(z, v),
        }
    }

    /// Real 2x2 derivative matrix [[a,b],[c,d]] acting on (re, im).
    fn jac(&self, z: Complex64) -> Result<[f64; 4]> {
        let e1 = self.deriv(z, Complex64::new(1.0, 0.0))?;
        let e2 = self.deriv(z, Complex64::new(0.0, 1.0))?;
        Ok([e1.re, e2.re, e1.im, e2.im])
    }
}

fn newton_fixed_point(map: &MapRef, seed: Complex64, max_iter: usize) -> Result<Complex64> {
    let mut z = seed;
    for _ in 0..max_iter {
        let fz = map.eval(z)?;
        let r = fz - z;
        if r.norm() <= 0.5 * tol::FIXED_POINT_ABS * (1.0 + z.norm()) {
            return Ok(z);
        }
        let m = map.jac(z)?;
        // solve (J - I) d = -r
        let (a, b, c, d) = (m[0] - 1.0, m[1], m[2], m[3] - 1.0);
        let det = a * d - b * c;
        ensure!(det.abs() > 1e-14, "derivative minus identity is singular");
        let dx = (-r.re * d + r.im * b) / det;
        let dy = (-r.im * a + r.re * c) / det;
        z += Complex64::new(dx, dy);
        ensure!(z.norm() < 1e6 && z.norm() > 1e-12, "iteration escaped");
    }
    let r = (map.eval(z)? - z).norm();
    ensure!(
        r <= tol::FIXED_POINT_ABS * (1.0 + z.norm()),
        "no convergence from seed {seed}; residual {r:.3e}"
    );
    Ok(z)
}

fn classify(map: &MapRef, z: Complex64) -> Result<FixedPoint> {
    let m = map.jac(z)?;
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    let (m1, m2, sdir, udir);
    if disc >= 0.0 {
        let s = disc.sqrt();
        let e1 = tr / 2.0 - s;
        let e2 = tr / 2.0 + s;
        let (lo, hi) = if e1.abs() <= e2.abs() { (e1, e2) } else { (e2, e1) };
        m1 = Complex64::new(lo, 0.0);
        m2 = Complex64::new(hi, 0.0);
        let vec_for = |e: f64| -> Complex64 {
            let v = if b.abs() > 1e-14 || (e - a).abs() > 1e-14 {
                Complex64::new(b, e - a)
            } else {
                Complex64::new(e - d, c)
            };
            v / v.norm()
        };
        sdir = Some(vec_for(lo));
        udir = Some(vec_for(hi));
    } else {
        let s = (-disc).sqrt();
        m1 = Complex64::new(tr / 2.0, -s);
        m2 = Complex64::new(tr / 2.0, s);
        sdir = None;
        udir = None;
    }
    let kind = match (m1.norm() < 1.0, m2.norm() < 1.0) {
        (true, true) => FixedPointKind::Sink,
        (false, false) => FixedPointKind::Source,
        _ => FixedPointKind::Saddle,
    };
    let residual = (map.eval(z)? - z).norm();
    Ok(FixedPoint {
        location: z,
        kind,
        multipliers: (m1, m2),
        stable_dir: if kind == FixedPointKind::Saddle { sdir } else { None },
        unstable_dir: if kind == FixedPointKind::Saddle { udir } else { None },
        residual,
    })
}

fn fixed_point_search(map: &MapRef, extra_seeds: &[Complex64], rmax: f64) -> Result<Vec<FixedPoint>> {
    let mut seeds: Vec<Complex64> = extra_seeds.to_vec();
    for r in [1.0, 3.0, 10.0, 21.0, 30.0] {
        for k in 0..12 {
            seeds.push(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 12.0 + 0.05));
        }
    }
    let mut found: Vec<Complex64> = Vec::new();
    for s in seeds {
        let Ok(z) = newton_fixed_point(map, s, 60) else { continue };
        if z.norm() > rmax {
            continue;
        }
        if found.iter().all(|f| (f - z).norm() > 1e-6) {
            found.push(z);
        }
    }
    ensure!(!found.is_empty(), "no fixed points located");
    let mut out: Vec<FixedPoint> = found
        .into_iter()
        .map(|z| classify(map, z))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| {
        (b.location.norm(), b.location.im)
            .partial_cmp(&(a.location.norm(), a.location.im))
            .unwrap()
    });
    Ok(out)
}

/// Locates and classifies all fixed points of the family member inside the
/// working disk: the real saddle at 1 + 1/(1-λ) and the two spiral sources at
/// the sixth roots of unity e^{±iπ/3}. Sorted by modulus descending.
pub fn find_fixed_points(p: &MapParams) -> Result<Vec<FixedPoint>> {
    p.validate()?;
    let analytic = [
        Complex64::new(p.saddle_location(), 0.0),
        Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3),
        Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_3),
    ];
    fixed_point_search(&MapRef::Family(p), &analytic, p.outer_radius() + 1.0)
}

/// Fixed points of the limit circle map: the two spiral sources at e^{±iπ/3}
/// with multiplier product exactly 2.
pub fn limit_fixed_points() -> Result<Vec<FixedPoint>> {
    let analytic = [
        Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3),
        Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_3),
    ];
    fixed_point_search(&MapRef::Limit, &analytic, 50.0)
}

/// Spacing/turn thresholds for adaptive refinement of pushed curves.
#[derive(Debug, Clone, Copy)]
pub struct RefineCriteria {
    /// Maximum spacing as a fraction of local modulus.
    pub max_spacing_rel: f64,
    /// Absolute spacing cap.
    pub max_spacing_abs: f64,
    /// Maximum tangent turn between neighbors, radians.
    pub max_turn: f64,
    /// Refinement recursion cap per segment.
    pub max_depth: usize,
    /// Hard cap on output points.
    pub max_points: usize,
}

impl Default for RefineCriteria {
    fn default() -> Self {
        RefineCriteria {
            max_spacing_rel: 0.01,
            max_spacing_abs: f64::INFINITY,
            max_turn: 2.0_f64.to_radians(),
            max_depth: 30,
            max_points: 400_000,
        }
    }
}

/// Point-and-tangent sample on a numerically continued curve.
pub type Node = (Complex64, Complex64);

fn node_image(p: &MapParams, n: Node) -> Result<Node> {
    Ok((eval_map(p, n.0)?, derivative(p, n.0, n.1)?))
}

fn pair_ok(crit: &RefineCriteria, a: Node, b: Node) -> bool {
    let spacing = (b.0 - a.0).norm();
    let local = 0.5 * (a.0.norm() + b.0.norm());
    if spacing > crit.max_spacing_abs || spacing > crit.max_spacing_rel * local {
        return false;
    }
    let turn = (b.1 / a.1).arg().abs();
    turn <= crit.max_turn
}

fn refine_segment(
    p: &MapParams,
    crit: &RefineCriteria,
    a: Node,
    b: Node,
    ib: Node,
    out: &mut Vec<Node>,
    depth: usize,
) -> Result<()> {
    let ia = *out.last().expect("output seeded");
    if depth >= crit.max_depth || pair_ok(crit, ia, ib) || (b.0 - a.0).norm() < 1e-13 {
        ensure!(out.len() < crit.max_points, "refinement exceeded the point budget");
        out.push(ib);
        return Ok(());
    }
    let mid: Node = ((a.0 + b.0) * 0.5, (a.1 + b.1) * 0.5);
    let im = node_image(p, mid)?;
    refine_segment(p, crit, a, mid, im, out, depth + 1)?;
    refine_segment(p, crit, mid, b, ib, out, depth + 1)
}

/// Applies the map once to a tangent-carrying polyline, inserting midpoints
/// of the source curve until the image meets the spacing/turn criteria.
pub fn push_curve(p: &MapParams, pre: &[Node], crit: &RefineCriteria) -> Result<Vec<Node>> {
    ensure!(pre.len() >= 2, "need at least 2 nodes to push");
    let mut out = Vec::with_capacity(pre.len() * 2);
    out.push(node_image(p, pre[0])?);
    for w in pre.windows(2) {
        let ib = node_image(p, w[1])?;
        refine_segment(p, crit, w[0], w[1], ib, &mut out, 0)?;
    }
    Ok(out)
}

fn nodes_to_arc(nodes: &[Node], lambda: f64) -> Result<Arc> {
    Arc::with_tangents(
        nodes.iter().map(|n| n.0).collect(),
        nodes.iter().map(|n| n.1).collect(),
        lambda,
    )
}

/// Result of growing the unstable curve of the real saddle.
#[derive(Clone, Debug)]
pub struct UnstableGrowth {
    pub arc: Arc,
    /// True when the two halves met on the negative real axis and the curve
    /// was closed into a loop there.
    pub closed: bool,
    /// Angle at which growth stopped because the curve left the expansion
    /// region before closing (absent when closed or budget-stopped).
    pub exit_theta: Option<f64>,
}

/// Seed nodes straddling the saddle along its unstable eigendirection.
pub(crate) fn unstable_seed(p: &MapParams) -> Result<(FixedPoint, Vec<Node>)> {
    let fps = find_fixed_points(p)?;
    let saddle = fps
        .iter()
        .find(|f| f.kind == FixedPointKind::Saddle)
        .cloned()
        .ok_or_else(|| anyhow!("no saddle among the fixed points"))?;
    let dir = saddle.unstable_dir.ok_or_else(|| anyhow!("saddle lacks a real eigendirection"))?;
    let delta = 1e-6;
    let seed = (0..9)
        .map(|i| {
            let s = delta * (i as f64 / 4.0 - 1.0);
            (saddle.location + dir * s, dir)
        })
        .collect();
    Ok((saddle, seed))
}

/// If both halves of the curve have crossed the negative real axis, trims
/// them at the interpolated crossings and returns the closed loop ordered
/// from the lower-half crossing through the saddle to the upper-half one.
pub fn close_loop_at_axis(nodes: &[Node]) -> Option<Vec<Node>> {
    let first_crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<(usize, Node)> {
        for i in range {
            let (a, b) = (nodes[i], nodes[i + 1]);
            if a.0.re < 0.0 && b.0.re < 0.0 && a.0.im != 0.0 && (a.0.im > 0.0) != (b.0.im > 0.0) {
                let t = a.0.im / (a.0.im - b.0.im);
                let pt = a.0 + (b.0 - a.0) * t;
                let tan = a.1 * (1.0 - t) + b.1 * t;
                return Some((i, (Complex64::new(pt.re, 0.0), tan)));
            }
        }
        None
    };
    // anchor at the saddle (the maximal-Re node) and scan outward so each
    // half is trimmed at its own first crossing
    let mid = nodes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.re.partial_cmp(&b.1 .0.re).unwrap())
        .map(|(i, _)| i)?;
    let (hi, up) = first_crossing(&mut (mid..nodes.len() - 1))?;
    let (lo, down) = first_crossing(&mut (0..mid).rev())?;
    let mut out = Vec::with_capacity(hi - lo + 3);
    out.push((down.0, down.1));
    out.extend_from_slice(&nodes[lo + 1..=hi]);
    out.push(up);
    Some(out)
}

/// Grows the global unstable curve of the real saddle by seeding a short
/// segment along the angular eigendirection and pushing it forward with
/// adaptive refinement. Growth stops when the loop closes on the negative
/// real axis, when the arclength budget is met, or when the curve leaves
/// the expansion region (tips trimmed to the region, exit angle reported).
pub fn grow_unstable_manifold(p: &MapParams, arclength_budget: f64) -> Result<UnstableGrowth> {
    ensure!(arclength_budget > 0.0, "arclength budget must be positive");
    let (saddle, mut curve) = unstable_seed(p)?;
    let h = HyperbolicityDomain::new(p.lambda);
    let crit = RefineCriteria::default();
    let mut prev_len = 0.0;
    let mut plateau = 0;
    let mut exited = false;
    for _ in 0..80 {
        curve = push_curve(p, &curve, &crit)?;
        // past the expansion region the curve spirals on; keep the connected
        // in-region piece through the saddle (leaving the region takes
        // precedence over loop closure)
        if curve.iter().any(|n| n.0.norm() < h.threshold) {
            exited = true;
            curve = clip_to_component(&curve, &|z| z.norm() >= h.threshold, saddle.location)?;
        } else if let Some(loop_nodes) = close_loop_at_axis(&curve) {
            return Ok(UnstableGrowth {
                arc: nodes_to_arc(&loop_nodes, p.lambda)?,
                closed: true,
                exit_theta: None,
            });
        }
        let len = crate::geom::polyline_length(
            &curve.iter().map(|n| n.0).collect::<Vec<_>>(),
        );
        if len >= arclength_budget {
            return Ok(UnstableGrowth {
                arc: nodes_to_arc(&curve, p.lambda)?,
                closed: false,
                exit_theta: None,
            });
        }
        if exited {
            if len <= prev_len * 1.0005 {
                plateau += 1;
                if plateau >= 2 {
                    break;
                }
            } else {
                plateau = 0;
            }
            prev_len = len;
        }
    }
    let exit_theta = if exited {
        let tip = curve[0].0.arg().abs().max(curve[curve.len() - 1].0.arg().abs());
        Some(tip)
    } else {
        None
    };
    Ok(UnstableGrowth { arc: nodes_to_arc(&curve, p.lambda)?, closed: false, exit_theta })
}

/// One arc of the stable preimage tree: its level (preimage depth from the
/// real axis segment) and the branch choices taken, labeled by the branch of
/// each arc's first sample (continuity, not the label, drives continuation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableArc {
    pub arc: Arc,
    pub level: usize,
    pub branch_path: Vec<u8>,
}

/// Builds the stable preimage tree: level 0 is a real-axis segment through
/// the saddle, and each level adds the continuous preimage arcs of the level
/// above, split where preimages vanish or leave the clip disk.
pub fn stable_manifold_arcs(
    p: &MapParams,
    levels: usize,
    segment: (f64, f64),
    samples: usize,
    clip_radius: f64,
) -> Result<Vec<StableArc>> {
    ensure!(segment.0 > 0.0 && segment.1 > segment.0, "segment must be positive and ordered");
    ensure!(samples >= 8, "too few samples");
    let base: Vec<Complex64> = (0..samples)
        .map(|i| {
            let t = segment.0 + (segment.1 - segment.0) * i as f64 / (samples - 1) as f64;
            Complex64::new(t, 0.0)
        })
        .collect();
    let mut out = vec![StableArc {
        arc: Arc::from_points(base, p.lambda)?,
        level: 0,
        branch_path: vec![],
    }];
    let mut frontier = vec![0usize];
    for _level in 1..=levels {
        let mut next = Vec::new();
        for &idx in &frontier {
            let parent = out[idx].clone();
            for child in preimage_arcs(p, &parent, clip_radius)? {
                next.push(out.len());
                out.push(child);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Continuous preimage arcs of one parent arc, both branches, split at
/// points with no preimage or outside the clip disk.
fn preimage_arcs(p: &MapParams, parent: &StableArc, clip_radius: f64) -> Result<Vec<StableArc>> {
    let mut arcs = Vec::new();
    let mut chain_a: Vec<Complex64> = Vec::new();
    let mut chain_b: Vec<Complex64> = Vec::new();
    let mut first_branch = (0u8, 1u8);
    let mut flush = |a: &mut Vec<Complex64>, b: &mut Vec<Complex64>, fb: (u8, u8)| -> Result<()> {
        for (chain, label) in [(&mut *a, fb.0), (&mut *b, fb.1)] {
            if chain.len() >= 2 {
                let mut path = parent.branch_path.clone();
                path.push(label);
                arcs.push(StableArc {
                    arc: Arc::from_points(chain.clone(), p.lambda)?,
                    level: parent.level + 1,
                    branch_path: path,
                });
            }
            chain.clear();
        }
        Ok(())
    };
    for zeta in &parent.arc.points {
        let pre = preimages(p, *zeta);
        let usable: Vec<Complex64> =
            pre.iter().copied().filter(|z| z.norm() <= clip_radius).collect();
        if usable.len() < 2 {
            flush(&mut chain_a, &mut chain_b, first_branch)?;
            continue;
        }
        let (q0, q1) = (usable[0], usable[1]);
        if chain_a.is_empty() {
            chain_a.push(q0);
            chain_b.push(q1);
            first_branch = (0, 1);
        } else {
            let la = *chain_a.last().unwrap();
            let lb = *chain_b.last().unwrap();
            // continuity-first pairing of the two preimages to the two chains
            let direct = (q0 - la).norm() + (q1 - lb).norm();
            let swapped = (q1 - la).norm() + (q0 - lb).norm();
            if direct <= swapped {
                chain_a.push(q0);
                chain_b.push(q1);
            } else {
                chain_a.push(q1);
                chain_b.push(q0);
            }
        }
    }
    flush(&mut chain_a, &mut chain_b, first_branch)?;
    Ok(arcs)
}

/// A finite backward orbit: points[j+1] maps to points[j], with the branch
/// chosen at each step and the tag of the constraining region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackwardOrbit {
    pub points: Vec<Complex64>,
    pub branches: Vec<u8>,
    pub region_tag: String,
}

/// Greedy backward orbit: at each step take the preferred branch if its
/// preimage lies in the region, otherwise the other branch, otherwise fail.
/// Every step is checked to map forward onto its predecessor.
pub fn backward_orbit<R: Fn(Complex64) -> bool>(
    p: &MapParams,
    start: Complex64,
    steps: usize,
    prefer_branch: u8,
    in_region: R,
    region_tag: &str,
) -> Result<BackwardOrbit> {
    ensure!(prefer_branch < 2, "branch index must be 0 or 1");
    ensure!(in_region(start), "start lies outside the region");
    let mut points = vec![start];
    let mut branches = Vec::new();
    for j in 0..steps {
        let z = *points.last().unwrap();
        let pre = preimages(p, z);
        ensure!(!pre.is_empty(), "no preimages at step {j} (point {z})");
        let order = if prefer_branch == 0 { [0usize, 1] } else { [1, 0] };
        let mut picked = None;
        for b in order {
            if b < pre.len() && in_region(pre[b]) {
                picked = Some((b as u8, pre[b]));
                break;
            }
        }
        let (b, zp) =
            picked.ok_or_else(|| anyhow!("both preimages leave {region_tag} at step {j}"))?;
        let fwd = eval_map(p, zp)?;
        ensure!(
            (fwd - z).norm() <= tol::PREIMAGE_ABS * (1.0 + z.norm()),
            "preimage residual too large at step {j}"
        );
        points.push(zp);
        branches.push(b);
    }
    Ok(BackwardOrbit { points, branches, region_tag: region_tag.to_string() })
}

/// Keeps the connected piece of the curve inside the ball (center, radius)
/// that passes closest to the center, interpolating the boundary crossings.
fn trim_to_ball(nodes: &[Node], center: Complex64, radius: f64) -> Result<Vec<Node>> {
    let k = nodes
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 .0 - center).norm().partial_cmp(&(b.1 .0 - center).norm()).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or_else(|| anyhow!("empty curve"))?;
    ensure!((nodes[k].0 - center).norm() <= radius, "curve misses the ball");
    let inside = |n: &Node| (n.0 - center).norm() <= radius;
    let mut lo = k;
    while lo > 0 && inside(&nodes[lo - 1]) {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < nodes.len() && inside(&nodes[hi + 1]) {
        hi += 1;
    }
    let mut out: Vec<Node> = Vec::with_capacity(hi - lo + 3);
    // entry crossing
    if lo > 0 {
        if let Some(n) = ball_crossing(nodes[lo - 1], nodes[lo], center, radius) {
            out.push(n);
        }
    }
    out.extend_from_slice(&nodes[lo..=hi]);
    if hi + 1 < nodes.len() {
        if let Some(n) = ball_crossing(nodes[hi + 1], nodes[hi], center, radius) {
            out.push((n.0, nodes[hi].1));
        }
    }
    ensure!(out.len() >= 2, "trimmed curve degenerate");
    Ok(out)
}

/// Point where the segment from the outside node to the inside node crosses
/// the circle |z - center| = radius.
fn ball_crossing(outside: Node, inside: Node, center: Complex64, radius: f64) -> Option<Node> {
    let a = inside.0 - center;
    let d = outside.0 - inside.0;
    // |a + t d| = radius, t in (0, 1]
    let qa = d.norm_sqr();
    let qb = 2.0 * (a.re * d.re + a.im * d.im);
    let qc = a.norm_sqr() - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qa == 0.0 {
        return None;
    }
    let t = (-qb + disc.sqrt()) / (2.0 * qa);
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    let pt = inside.0 + d * t;
    let tan = inside.1 * (1.0 - t) + outside.1 * t;
    Some((pt, tan))
}

/// Keeps the connected run of nodes satisfying `keep` that contains the node
/// nearest `anchor`, refining the two boundary crossings by bisection.
fn clip_to_component(
    nodes: &[Node],
    keep: &dyn Fn(Complex64) -> bool,
    anchor: Complex64,
) -> Result<Vec<Node>> {
    let k = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| keep(n.0))
        .min_by(|a, b| {
            (a.1 .0 - anchor).norm().partial_cmp(&(b.1 .0 - anchor).norm()).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or_else(|| anyhow!("no curve node satisfies the region predicate"))?;
    let mut lo = k;
    while lo > 0 && keep(nodes[lo - 1].0) {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < nodes.len() && keep(nodes[hi + 1].0) {
        hi += 1;
    }
    let mut out: Vec<Node> = Vec::with_capacity(hi - lo + 3);
    if lo > 0 {
        out.push(boundary_bisect(nodes[lo - 1], nodes[lo], keep));
    }
    out.extend_from_slice(&nodes[lo..=hi]);
    if hi + 1 < nodes.len() {
        out.push(boundary_bisect(nodes[hi + 1], nodes[hi], keep));
    }
    ensure!(out.len() >= 2, "clipped curve degenerate");
    Ok(out)
}

/// Point on the segment from the outside node to the inside node where the
/// region predicate flips, located by bisection.
fn boundary_bisect(outside: Node, inside: Node, keep: &dyn Fn(Complex64) -> bool) -> Node {
    let mut t_in = 0.0f64;
    let mut t_out = 1.0f64;
    for _ in 0..50 {
        let t = 0.5 * (t_in + t_out);
        let z = inside.0 + (outside.0 - inside.0) * t;
        if keep(z) {
            t_in = t;
        } else {
            t_out = t;
        }
    }
    let t = t_in;
    (
        inside.0 + (outside.0 - inside.0) * t,
        inside.1 * (1.0 - t) + outside.1 * t,
    )
}

/// Local unstable arc at `x` through a depth-`m` backward orbit kept in the
/// expansion region: a seed segment at the deep end is pushed forward,
/// trimmed to the ball of radius `alpha` about each orbit point in turn.
/// The seed direction defaults to the angular direction at the deep point.
pub fn local_unstable_manifold(p: &MapParams, x: Complex64, alpha: f64, m: usize) -> Result<Arc> {
    let z_m = deep_orbit(p, x, m)?;
    let dir = Complex64::new(0.0, 1.0) * z_m.points[m] / z_m.points[m].norm();
    local_unstable_manifold_with_seed(p, &z_m, alpha, dir)
}

/// Backward orbit for local-arc construction, kept in the expansion region.
pub fn deep_orbit(p: &MapParams, x: Complex64, m: usize) -> Result<BackwardOrbit> {
    ensure!(m >= 30, "backward depth must be at least 30");
    let h = HyperbolicityDomain::new(p.lambda);
    backward_orbit(p, x, m, 0, |z| h.contains(z), "expansion region")
        .context("backward orbit for the local unstable arc")
}

/// As `local_unstable_manifold`, but with an explicit seed direction at the
/// deep end of the supplied orbit.
pub fn local_unstable_manifold_with_seed(
    p: &MapParams,
    orbit: &BackwardOrbit,
    alpha: f64,
    seed_dir: Complex64,
) -> Result<Arc> {
    ensure!(alpha > 0.0, "radius must be positive");
    let m = orbit.points.len() - 1;
    ensure!(m >= 1, "orbit too short");
    let z_m = orbit.points[m];
    let dir = seed_dir / seed_dir.norm();
    let mut curve: Vec<Node> = (0..81)
        .map(|i| {
            let s = alpha * (i as f64 / 40.0 - 1.0);
            (z_m + dir * s, dir)
        })
        .collect();
    let crit = RefineCriteria {
        max_spacing_rel: f64::INFINITY,
        max_spacing_abs: alpha / 1000.0,
        ..RefineCriteria::default()
    };
    for j in (0..m).rev() {
        curve = push_curve(p, &curve, &crit)?;
        curve = trim_to_ball(&curve, orbit.points[j], alpha)
            .with_context(|| format!("trimming at backward index {j}"))?;
    }
    nodes_to_arc(&curve, p.lambda)
}

/// Maximum position and tangent-angle deviation between two tangent-carrying
/// arcs over the window of radius `window` about `center`: each sample of
/// `a` is matched to its nearest point on `b`.
pub fn arc_c1_deviation(a: &Arc, b: &Arc, center: Complex64, window: f64) -> (f64, f64) {
    let mut pos: f64 = 0.0;
    let mut ang: f64 = 0.0;
    for (i, pt) in a.points.iter().enumerate() {
        if (pt - center).norm() > window {
            continue;
        }
        let (seg, t, _, dist) = crate::geom::nearest_point_on_polyline(&b.points, *pt);
        pos = pos.max(dist);
        let tb = b.tangents[seg] * (1.0 - t) + b.tangents[(seg + 1).min(b.tangents.len() - 1)] * t;
        ang = ang.max((a.tangents[i] / tb).arg().abs());
    }
    (pos, ang)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{polyline_intersections, winding_turns};
    use approx::assert_relative_eq;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p_plus() -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3)
    }

    #[test]
    fn fixed_points_of_the_family_member() {
        let p = MapParams::defaults_mu_eq_sigma();
        let fps = find_fixed_points(&p).unwrap();
        assert_eq!(fps.len(), 3, "{fps:?}");
        let saddle = &fps[0];
        assert_eq!(saddle.kind, FixedPointKind::Saddle);
        assert!((saddle.location - z(21.0, 0.0)).norm() < 1e-10);
        // multipliers: radial lambda, angular 2/(2-lambda)
        assert!((saddle.multipliers.0 - z(0.95, 0.0)).norm() < 1e-10);
        assert!((saddle.multipliers.1 - z(2.0 / 1.05, 0.0)).norm() < 1e-10);
        let sdir = saddle.stable_dir.unwrap();
        let udir = saddle.unstable_dir.unwrap();
        assert!(sdir.im.abs() < 1e-10 && sdir.re.abs() > 0.99);
        assert!(udir.re.abs() < 1e-10 && udir.im.abs() > 0.99);
        // the two spiral sources at the sixth roots of unity
        for (fp, loc) in [(&fps[1], p_plus()), (&fps[2], p_plus().conj())] {
            assert_eq!(fp.kind, FixedPointKind::Source);
            assert!((fp.location - loc).norm() < 1e-12, "{}", fp.location);
            let prod = fp.multipliers.0 * fp.multipliers.1;
            assert!((prod - z(2.0 * p.lambda, 0.0)).norm() < 1e-10);
            assert_relative_eq!(fp.multipliers.0.norm(), (2.0 * p.lambda).sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn fixed_points_of_the_limit_map() {
        let fps = limit_fixed_points().unwrap();
        assert_eq!(fps.len(), 2, "{fps:?}");
        for (fp, loc) in [(&fps[0], p_plus()), (&fps[1], p_plus().conj())] {
            assert_eq!(fp.kind, FixedPointKind::Source);
            assert!((fp.location - loc).norm() < 1e-12);
            let prod = fp.multipliers.0 * fp.multipliers.1;
            assert!((prod - z(2.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn bump_perturbation_moves_the_source_but_not_the_saddle() {
        let p = MapParams {
            eps_perturb: 1e-3,
            perturb_center: z(1.2, 0.5),
            perturb_radius: 1.0,
            ..MapParams::defaults_mu_eq_sigma()
        };
        let fps = find_fixed_points(&p).unwrap();
        // the bump sits over the upper source and nudges it without
        // destroying it
        let src_ref = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let src = fps
            .iter()
            .filter(|f| f.kind == FixedPointKind::Source)
            .min_by(|a, b| {
                (a.location - src_ref)
                    .norm()
                    .partial_cmp(&(b.location - src_ref).norm())
                    .unwrap()
            })
            .expect("no source persists under the bump");
        assert!((src.location - src_ref).norm() < 0.05);
        assert!(src.residual <= tol::FIXED_POINT_ABS * 2.0);
        // the bump is supported in |z| <= 2.2, far from the saddle
        let saddle = fps.iter().find(|f| f.kind == FixedPointKind::Saddle).unwrap();
        assert!((saddle.location - z(21.0, 0.0)).norm() < 1e-10);
        assert_relative_eq!(saddle.multipliers.0.norm(), 0.95, max_relative = 1e-10);
        assert_relative_eq!(
            saddle.multipliers.1.norm(),
            2.0 / (2.0 - 0.95),
            max_relative = 1e-10
        );
    }

    #[test]
    fn unstable_curve_grows_from_the_saddle_and_winds() {
        let p = MapParams::defaults_mu_eq_sigma();
        let growth = grow_unstable_manifold(&p, 500.0).unwrap();
        assert!(!growth.closed);
        // the curve hits the expansion threshold just past two radians
        let th = growth.exit_theta.expect("no exit angle reported");
        assert!(th > 2.0 && th < 2.2, "exit angle {th}");
        let arc = growth.arc;
        assert!(arc.points.len() >= 600, "only {} points", arc.points.len());
        // passes through the saddle with an angular tangent there
        let k = arc
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - z(21.0, 0.0)).norm().partial_cmp(&(b.1 - z(21.0, 0.0)).norm()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        assert!((arc.points[k] - z(21.0, 0.0)).norm() < 1e-6);
        let a0 = (arc.tangents[k] / z(0.0, 1.0)).arg().abs();
        assert!(a0.min(std::f64::consts::PI - a0) < 0.05);
        // stays inside the closed expansion band below the saddle radius
        let h = HyperbolicityDomain::new(p.lambda);
        assert!(arc.points.iter().all(|w| w.norm() >= h.threshold - 1e-6));
        assert!(arc.points.iter().all(|w| w.norm() <= 21.0 + 1e-6));
        assert_eq!(arc.classification, crate::hyperbolicity::ArcClass::QuasiAngular);
        // both tips end on the threshold circle, past two radians of angle
        for e in [arc.points[0], arc.points[arc.points.len() - 1]] {
            assert!((e.norm() - h.threshold).abs() < 1e-6);
            assert!(e.arg().abs() > 2.0);
        }
        // sweeps well over half a turn around the hole before exiting
        assert!(winding_turns(&arc.points, ONE).abs() >= 0.6);
    }

    #[test]
    fn unstable_curve_closes_into_a_loop_when_decay_is_slow() {
        // closer to the degenerate parameter the spiral loses so little
        // modulus per turn that the loop closes inside the expansion region
        let p = MapParams { lambda: 0.995, ..MapParams::defaults_mu_eq_sigma() };
        let growth = grow_unstable_manifold(&p, 50_000.0).unwrap();
        assert!(growth.closed, "loop did not close");
        assert!(growth.exit_theta.is_none());
        let pts = &growth.arc.points;
        // both ends sit on the negative real axis at the same point
        let a = pts[0];
        let b = pts[pts.len() - 1];
        assert!(a.im.abs() < 1e-9 && b.im.abs() < 1e-9);
        assert!((a - b).norm() < 1e-6, "ends {a} vs {b}");
        assert!(a.re < 0.0);
        // full loop around the hole, through the saddle at 201
        assert!((winding_turns(pts, ONE).abs() - 1.0).abs() < 0.02);
        let saddle = z(201.0, 0.0);
        assert!(pts.iter().any(|w| (w - saddle).norm() < 1e-6));
        let h = HyperbolicityDomain::new(p.lambda);
        assert!(pts.iter().all(|w| h.contains(*w)));
    }

    #[test]
    fn unstable_curve_is_forward_invariant_as_a_set() {
        let p = MapParams::defaults_mu_eq_sigma();
        let arc = grow_unstable_manifold(&p, 500.0).unwrap().arc;
        let h = HyperbolicityDomain::new(p.lambda);
        let k = arc
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - z(21.0, 0.0)).norm().partial_cmp(&(b.1 - z(21.0, 0.0)).norm()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        // images of points near the saddle stay on the curve whenever they
        // stay well inside the band the curve was clipped to
        let span = arc.points.len() / 4;
        let lo = k.saturating_sub(span);
        let hi = (k + span).min(arc.points.len());
        let mut checked = 0;
        for pt in arc.points[lo..hi].iter().step_by(7) {
            let img = eval_map(&p, *pt).unwrap();
            if img.norm() < h.threshold + 0.3 {
                continue;
            }
            let (_, _, _, dist) = crate::geom::nearest_point_on_polyline(&arc.points, img);
            assert!(dist < 1e-2, "image {img} off the curve by {dist}");
            checked += 1;
        }
        assert!(checked >= 40, "only {checked} images checked");
    }

    #[test]
    fn stable_tree_maps_onto_the_axis_segment() {
        let p = MapParams::defaults_mu_eq_sigma();
        let seg = (2.2, 40.0);
        let arcs = stable_manifold_arcs(&p, 3, seg, 300, 42.0).unwrap();
        assert!(arcs.len() >= 7, "got {}", arcs.len());
        // level-1 has the axis extension and the mirrored negative-axis arc
        let neg = arcs.iter().find(|a| a.level == 1 && a.arc.points[0].re < 0.0).unwrap();
        assert!(neg.arc.points.iter().all(|w| w.im.abs() < 1e-12 * w.norm().max(1.0)));
        // level-2 contains arcs on the imaginary axis
        let imag = arcs
            .iter()
            .find(|a| a.level == 2 && a.arc.points.iter().all(|w| w.re.abs() < 1e-9 * w.norm()))
            .expect("no imaginary-axis arc at level 2");
        assert!(imag.arc.points.iter().any(|w| w.norm() > 5.0));
        // F^level returns every arc into the base segment on the axis
        for sa in &arcs {
            for pt in sa.arc.points.iter().step_by(23) {
                let mut w = *pt;
                for _ in 0..sa.level {
                    w = eval_map(&p, w).unwrap();
                }
                assert!(w.im.abs() < 1e-8, "level {} point {pt} -> {w}", sa.level);
                assert!(w.re > seg.0 - 1e-6 && w.re < seg.1 + 1e-6);
            }
        }
    }

    #[test]
    fn stable_arcs_in_the_annulus_are_radially_coned() {
        let p = MapParams::defaults_mu_eq_sigma();
        let arcs = stable_manifold_arcs(&p, 4, (2.2, 40.0), 600, 42.0).unwrap();
        // the radial-cone certificate holds in the band where the expansion
        // estimates do; below it the 1/|z| frame drift can tilt deep arcs
        let band = (18.9, 21.0);
        let mut checked = 0;
        for sa in arcs.iter().filter(|a| a.level >= 2) {
            let clipped: Vec<Complex64> = sa
                .arc
                .points
                .iter()
                .copied()
                .filter(|w| w.norm() >= band.0 && w.norm() <= band.1)
                .collect();
            if clipped.len() < 10 {
                continue;
            }
            // moduli run monotonically along these arcs, so the clip stays
            // one contiguous piece
            for w in clipped.windows(2) {
                assert!((w[1] - w[0]).norm() < 1.0, "clip broke into pieces");
            }
            let arc = Arc::from_points(clipped, p.lambda).unwrap();
            assert_eq!(
                arc.classification,
                crate::hyperbolicity::ArcClass::QuasiRadial,
                "level {} path {:?}",
                sa.level,
                sa.branch_path
            );
            checked += 1;
        }
        assert!(checked >= 3, "only {checked} arcs intersect the band");
        // the level-2 axis arc stays radially coned far deeper than the
        // certified band
        let imag = arcs
            .iter()
            .find(|a| a.level == 2 && a.arc.points.iter().all(|w| w.re.abs() < 1e-9 * w.norm()))
            .unwrap();
        let deep: Vec<Complex64> = imag
            .arc
            .points
            .iter()
            .copied()
            .filter(|w| w.norm() >= 5.0 && w.norm() <= 21.0)
            .collect();
        assert!(deep.len() >= 30);
        let deep_arc = Arc::from_points(deep, p.lambda).unwrap();
        assert_eq!(deep_arc.classification, crate::hyperbolicity::ArcClass::QuasiRadial);
    }

    #[test]
    fn forward_convergence_to_the_saddle_is_affine_on_the_axis() {
        let p = MapParams::defaults_mu_eq_sigma();
        // on the positive axis the map is t -> 2 - lambda + lambda t, so the
        // gap to the saddle contracts by exactly lambda per step
        let mut t = 5.0;
        for _ in 0..40 {
            let next = eval_map(&p, z(t, 0.0)).unwrap();
            assert!(next.im.abs() < 1e-14);
            assert_relative_eq!(21.0 - next.re, p.lambda * (21.0 - t), max_relative = 1e-12);
            t = next.re;
        }
    }

    #[test]
    fn backward_orbit_prefers_branch_zero_and_verifies_residuals() {
        let p = MapParams::defaults_mu_eq_sigma();
        let h = HyperbolicityDomain::new(p.lambda);
        let orbit = backward_orbit(&p, z(0.0, 20.0), 40, 0, |w| h.contains(w), "expansion region")
            .unwrap();
        assert_eq!(orbit.points.len(), 41);
        assert!(orbit.branches.iter().all(|b| *b == 0));
        // halving arguments flattens the orbit onto the positive axis; the
        // radial gap to the saddle grows slowly (backward rate 1/lambda), so
        // convergence is angular only
        assert!(orbit.points[40].arg().abs() < 1e-9);
        assert!(orbit.points[40].norm() > 19.0 && orbit.points[40].norm() < 40.0);
        for w in orbit.points.windows(2) {
            assert!((eval_map(&p, w[1]).unwrap() - w[0]).norm() < 1e-9);
        }
    }

    #[test]
    fn local_unstable_arc_is_seed_independent() {
        let p = MapParams::defaults_mu_eq_sigma();
        let x = z(0.0, 20.0);
        let orbit = deep_orbit(&p, x, 30).unwrap();
        let zm = orbit.points[30];
        let base_dir = Complex64::new(0.0, 1.0) * zm / zm.norm();
        let a = local_unstable_manifold_with_seed(&p, &orbit, 0.5, base_dir).unwrap();
        let b = local_unstable_manifold_with_seed(
            &p,
            &orbit,
            0.5,
            base_dir * Complex64::from_polar(1.0, 0.4),
        )
        .unwrap();
        let (pos, ang) = arc_c1_deviation(&a, &b, x, 0.25);
        assert!(pos < 1e-6, "position deviation {pos}");
        assert!(ang < 1e-6, "angle deviation {ang}");
    }

    #[test]
    fn local_unstable_arc_converges_in_depth() {
        let p = MapParams::defaults_mu_eq_sigma();
        let x = z(0.0, 20.0);
        let a = local_unstable_manifold(&p, x, 0.5, 30).unwrap();
        let b = local_unstable_manifold(&p, x, 0.5, 60).unwrap();
        let (pos, _) = arc_c1_deviation(&a, &b, x, 0.25);
        assert!(pos < 1e-8, "position deviation {pos}");
        assert_eq!(a.classification, crate::hyperbolicity::ArcClass::QuasiAngular);
    }

    #[test]
    fn stable_and_unstable_curves_cross() {
        let p = MapParams::defaults_mu_eq_sigma();
        let unstable = grow_unstable_manifold(&p, 500.0).unwrap().arc;
        let arcs = stable_manifold_arcs(&p, 2, (2.2, 40.0), 400, 42.0).unwrap();
        let imag = arcs
            .iter()
            .find(|a| a.level == 2 && a.arc.points.iter().all(|w| w.re.abs() < 1e-9 * w.norm()))
            .unwrap();
        let hits = polyline_intersections(&imag.arc.points, &unstable.points);
        assert!(!hits.is_empty(), "stable arc misses the unstable curve");
    }

    #[test]
    fn short_angular_arcs_mix_across_the_annulus() {
        // an arc of length one half at radius 20 winds around the hole for
        // every step in a 20-step window once it has grown long enough
        let p = MapParams::defaults_mu_eq_sigma();
        let mut curve: Vec<Node> = (0..=40)
            .map(|i| {
                let th = 0.3 + 0.025 * i as f64 / 40.0;
                let pt = Complex64::from_polar(20.0, th);
                (pt, pt * Complex64::new(0.0, 1.0))
            })
            .collect();
        let crit = RefineCriteria::default();
        for m in 1..=36 {
            curve = push_curve(&p, &curve, &crit).unwrap();
            let pts: Vec<Complex64> = curve.iter().map(|n| n.0).collect();
            let turns = winding_turns(&pts, ONE);
            if m >= 16 {
                assert!(turns.abs() >= 1.0, "step {m}: only {turns} turns");
            }
            // keep a bounded sub-arc that already winds more than twice
            if turns.abs() > 2.4 {
                let mut acc = 0.0;
                let mut cut = curve.len();
                for (i, w) in pts.windows(2).enumerate() {
                    acc += ((w[1] - ONE) / (w[0] - ONE)).arg();
                    if acc.abs() / std::f64::consts::TAU > 2.4 {
                        cut = i + 2;
                        break;
                    }
                }
                curve.truncate(cut);
            }
        }
    }
}
