//! Polyline predicates: winding numbers, lengths, nearest points, segment
//! and polyline intersections, and point-in-polygon tests.

use num_complex::Complex64;

/// Total length of a polyline.
pub fn polyline_length(pts: &[Complex64]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Signed number of turns the polyline makes about `center` (sum of wrapped
/// argument increments over 2π). Consecutive samples must subtend less than a
/// half turn for the wrapping to be faithful. The polyline is taken as given;
/// pass a closed loop (first point repeated) to measure a winding number.
pub fn winding_turns(pts: &[Complex64], center: Complex64) -> f64 {
    let mut total = 0.0;
    for w in pts.windows(2) {
        let a = w[0] - center;
        let b = w[1] - center;
        total += (b / a).arg();
    }
    total / std::f64::consts::TAU
}

/// Winding-number point-in-polygon test; the polygon closes itself.
pub fn point_in_polygon(pt: Complex64, poly: &[Complex64]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut total = 0.0;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i] - pt;
        let b = poly[(i + 1) % n] - pt;
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).abs() > 0.5
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    let u = a - o;
    let v = b - o;
    u.re * v.im - u.im * v.re
}

/// Proper (transversal, interior) intersection of segments a1a2 and b1b2.
pub fn segments_intersect(
    a1: Complex64,
    a2: Complex64,
    b1: Complex64,
    b2: Complex64,
) -> Option<Complex64> {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        let t = d1 / (d1 - d2);
        Some(a1 + (a2 - a1) * t)
    } else {
        None
    }
}

/// All proper intersections between two polylines, with segment indices.
pub fn polyline_intersections(
    a: &[Complex64],
    b: &[Complex64],
) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for i in 0..a.len().saturating_sub(1) {
        for j in 0..b.len().saturating_sub(1) {
            if let Some(pt) = segments_intersect(a[i], a[i + 1], b[j], b[j + 1]) {
                out.push((i, j, pt));
            }
        }
    }
    out
}

/// Proper self-intersections of one polyline (adjacent segments excluded).
pub fn polyline_self_intersections(pts: &[Complex64]) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    let n = pts.len().saturating_sub(1);
    for i in 0..n {
        for j in (i + 2)..n {
            if let Some(pt) = segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                out.push((i, j, pt));
            }
        }
    }
    out
}

/// Nearest point of a polyline to `q`: (segment index, parameter in [0,1],
/// point, distance).
pub fn nearest_point_on_polyline(pts: &[Complex64], q: Complex64) -> (usize, f64, Complex64, f64) {
    let mut best = (0usize, 0.0f64, pts[0], (q - pts[0]).norm());
    for i in 0..pts.len().saturating_sub(1) {
        let a = pts[i];
        let b = pts[i + 1];
        let d = b - a;
        let len2 = d.norm_sqr();
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((q - a).re * d.re + (q - a).im * d.im) / len2).clamp(0.0, 1.0)
        };
        let pt = a + d * t;
        let dist = (q - pt).norm();
        if dist < best.3 {
            best = (i, t, pt, dist);
        }
    }
    best
}

/// Discrete Hausdorff distance between two polylines: the larger of the two
/// one-sided maxima of vertex-to-polyline distances.
pub fn polyline_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |from: &[Complex64], to: &[Complex64]| {
        from.iter().map(|q| nearest_point_on_polyline(to, *q).3).fold(0.0f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hausdorff_of_shifted_segment_is_the_shift() {
        let a = [z(0.0, 0.0), z(1.0, 0.0), z(2.0, 0.0)];
        let b = [z(0.0, 0.25), z(2.0, 0.25)];
        assert!((polyline_hausdorff(&a, &b) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn winding_of_closed_circle_is_one() {
        let mut pts: Vec<Complex64> =
            (0..=200).map(|i| Complex64::from_polar(2.0, std::f64::consts::TAU * i as f64 / 200.0)).collect();
        pts[200] = pts[0];
        assert!((winding_turns(&pts, z(0.3, 0.1)) - 1.0).abs() < 1e-12);
        assert!(winding_turns(&pts, z(5.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn point_in_polygon_square() {
        let sq = [z(0.0, 0.0), z(4.0, 0.0), z(4.0, 4.0), z(0.0, 4.0)];
        assert!(point_in_polygon(z(2.0, 2.0), &sq));
        assert!(!point_in_polygon(z(5.0, 2.0), &sq));
        assert!(!point_in_polygon(z(-0.1, 0.0), &sq));
    }

    #[test]
    fn segment_intersection_point() {
        let pt = segments_intersect(z(0.0, 0.0), z(2.0, 2.0), z(0.0, 2.0), z(2.0, 0.0)).unwrap();
        assert!((pt - z(1.0, 1.0)).norm() < 1e-12);
        assert!(segments_intersect(z(0.0, 0.0), z(1.0, 0.0), z(0.0, 1.0), z(1.0, 1.0)).is_none());
    }

    #[test]
    fn figure_eight_self_intersects_once() {
        // lemniscate-like loop through the origin
        let pts: Vec<Complex64> = (0..=400)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 400.0 + 0.01;
                z(t.sin(), (2.0 * t).sin() * 0.5)
            })
            .collect();
        let hits = polyline_self_intersections(&pts);
        assert_eq!(hits.len(), 1, "got {hits:?}");
    }

    #[test]
    fn nearest_point_projects_onto_segment() {
        let pts = [z(0.0, 0.0), z(10.0, 0.0)];
        let (i, t, pt, d) = nearest_point_on_polyline(&pts, z(3.0, 4.0));
        assert_eq!(i, 0);
        assert!((t - 0.3).abs() < 1e-12);
        assert!((pt - z(3.0, 0.0)).norm() < 1e-12);
        assert!((d - 4.0).abs() < 1e-12);
    }
}
