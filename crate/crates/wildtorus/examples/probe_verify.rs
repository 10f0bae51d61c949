use num_complex::Complex64;
use wildtorus::annulus::find_periodic_points;
use wildtorus::core_maps::{eval_map, MapParams};
use wildtorus::manifolds::FixedPointKind;

fn main() {
    let p = MapParams::defaults_mu_eq_sigma();
    let s = find_periodic_points(&p, Complex64::new(3.0, 1.0), 2.0, 8).unwrap();
    let q = s.points.iter().find(|q| q.period >= 5).expect("no period>=5 point");
    println!("checking period-{} {} at {:.12}+{:.12}i", q.period, q.kind.as_str(), q.point.re, q.point.im);
    // independent orbit closure by plain iteration
    let mut z = q.point;
    for _ in 0..q.period { z = eval_map(&p, z).unwrap(); }
    println!("closure residual (direct iteration): {:.3e}", (z - q.point).norm());
    // independent multipliers: finite-difference Jacobian of the full cycle
    let h = 1e-7;
    let fwd = |z0: Complex64| { let mut w = z0; for _ in 0..q.period { w = eval_map(&p, w).unwrap(); } w };
    let dx = (fwd(q.point + Complex64::new(h, 0.0)) - fwd(q.point - Complex64::new(h, 0.0))) / (2.0 * h);
    let dy = (fwd(q.point + Complex64::new(0.0, h)) - fwd(q.point - Complex64::new(0.0, h))) / (2.0 * h);
    let (a, b, c, d) = (dx.re, dy.re, dx.im, dy.im);
    let tr = a + d; let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    let (m1, m2) = if disc >= 0.0 {
        let s = disc.sqrt(); (Complex64::new(tr/2.0 - s, 0.0), Complex64::new(tr/2.0 + s, 0.0))
    } else {
        let s = (-disc).sqrt(); (Complex64::new(tr/2.0, -s), Complex64::new(tr/2.0, s))
    };
    println!("fd multipliers: |m1| = {:.6} |m2| = {:.6}", m1.norm(), m2.norm());
    println!("reported      : |m1| = {:.6} |m2| = {:.6}", q.multipliers.0.norm(), q.multipliers.1.norm());
    let both_expand = m1.norm() > 1.0 && m2.norm() > 1.0;
    assert_eq!(both_expand, q.kind == FixedPointKind::Source);
    let agree = (m1.norm() - q.multipliers.0.norm()).abs() < 1e-4 && (m2.norm() - q.multipliers.1.norm()).abs() < 1e-4;
    println!("PROBE {}", if agree && both_expand { "OK" } else { "MISMATCH" });
}
