use num_complex::Complex64;
use wildtorus::annulus::*;
use wildtorus::core_maps::MapParams;
use wildtorus::invariant_set::compute_omega;

fn main() {
    let p = MapParams::defaults_mu_eq_sigma();
    let region = build_fundamental_annulus(&p, DEFAULT_COLLAR_RATIO).unwrap();
    let cov = covering_exponent(&p, &region, 128, 60).unwrap();
    println!("covering exponent N = {} source_step = {}", cov.exponent, cov.source_covered_step);
    println!("fractions = {:?}", cov.fractions.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    let omega = compute_omega(&p, 128, 40).unwrap();
    let seed = ball_cells(&omega, Complex64::from_polar(1.0, std::f64::consts::PI / 3.0), 0.1);
    let onto = eventually_onto_check(&p, &omega, &seed, 80).unwrap();
    println!("ball seed: covered = {} at m = {} (seed cells {})", onto.covered, onto.m, seed.len());

    let stats = empirical_escape_bound(&p, 1000, 400, 99).unwrap();
    println!("escape: max_len {} mean {:.1} min_ratio {:.4} qmin {:.4}", stats.max_len, stats.mean_len, stats.min_growth_ratio, stats.qualifying_min_norm);

    let rep = check_self_covering(&p, &region, 10000, 42).unwrap();
    println!("self-cover: margin {:.5} outer_region {:.5} left_max {:.4} right_margin {:.3e} viol {}", rep.min_preimage_margin, rep.outer_region_margin, rep.left_arc_image_max_modulus, rep.right_region_image_margin, rep.violations);

    let basin = basin_disk_check(&p, 0.05, 0.01, 1000, 5).unwrap();
    println!("basin: rad {:.5} clearance {:.4} defect {:.4} orbits max_steps {} err {:.2e}", basin.disk_radius, basin.boundary_clearance, basin.inclusion_max_defect, basin.orbit_max_steps, basin.orbit_max_error);

    for (cx, cy, r) in [(3.0, 1.0, 2.0), (10.0, 5.0, 2.0), (-8.0, -4.0, 2.0)] {
        let s = find_periodic_points(&p, Complex64::new(cx, cy), r, 12).unwrap();
        let desc: Vec<String> = s.points.iter().map(|q| format!("p{}{}", q.period, q.kind.as_str().chars().next().unwrap())).collect();
        println!("window ({cx},{cy}) r{r}: {} pts [{}] seeds {} conv {}", s.points.len(), desc.join(","), s.seeds_tried, s.converged);
    }
}
