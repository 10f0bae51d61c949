//! Scratch probe for the curved-arc / tangency pipeline: prints the ladder
//! rung diagnostics, witness and lift numbers, certificate residual decay,
//! the stable-spiral construction record, and the escape-window arithmetic.

use anyhow::Result;
use num_complex::Complex64;
use wildtorus::annulus::DEFAULT_COLLAR_RATIO;
use wildtorus::core_maps::MapParams;
use wildtorus::tangency::*;

fn main() -> Result<()> {
    let p = MapParams::defaults_mu_eq_sigma();

    println!("== repelling annulus ==");
    let core = build_repelling_annulus(&p)?;
    println!("offset            {:.6}", core.offset);
    println!("covering margin   {:.6e}", core.covering_margin);
    println!("separation        {:.6e}", core.separation);
    println!("crossing angle    {:.6}", core.crossing_angle);
    println!(
        "source preimage   {:.6}+{:.6}i |z|={:.6} depth={} clearance={:.4}",
        core.source_preimage.re,
        core.source_preimage.im,
        core.source_preimage.norm(),
        core.source_depth,
        core.region.signed_depth(core.source_preimage)
    );

    println!("\n== witness arc (fill 0.8) ==");
    let w = witness_curved_arc(&p, &core, 0.8)?;
    let check = is_curved_arc(&p, &core, &w.arc);
    println!("{check:#?}");

    println!("\n== single lift ==");
    let lift = lift_curved_arc(&p, &core, &w)?;
    println!(
        "window [{:.6}, {:.6}] contraction {:.6} anchor |z|={:.4}",
        lift.window.0,
        lift.window.1,
        lift.contraction,
        lift.anchor.norm()
    );
    let lcheck = is_curved_arc(&p, &core, &lift.lifted.arc);
    println!("lift accepted {} length {:.4e}", lcheck.accepted, lcheck.length);

    println!("\n== flat-ended arc ==");
    let anchor = core.source_preimage;
    let rho = 0.5 * core.separation / anchor.norm();
    let (pts, tans): (Vec<_>, Vec<_>) = (0..400)
        .map(|i| {
            let t = i as f64 / 399.0;
            let z = anchor * Complex64::new(0.0, rho * t).exp();
            (z, z * Complex64::new(0.0, rho))
        })
        .unzip();
    let arc = wildtorus::hyperbolicity::Arc::with_tangents(pts, tans, p.lambda)?;
    let fcheck = is_curved_arc(&p, &core, &arc);
    println!(
        "accepted {} end_rays {} start_res {:.4} end_res {:.4}",
        fcheck.accepted, fcheck.end_rays_ok, fcheck.start_ray_residual, fcheck.end_ray_residual
    );

    println!("\n== tangency certificate depth 30 ==");
    let c30 = find_tangency(&p, &core, &w, 30)?;
    println!(
        "t0 {:.8} residual {:.6e} decay {:.4} clearance {:.3e} min|z| {:.3}",
        c30.t0, c30.angle_residual, c30.decay_ratio, c30.max_region_clearance, c30.min_orbit_modulus
    );
    println!("residuals {:?}", c30.residual_by_depth.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>());

    println!("\n== tangency certificate depth 60 ==");
    let c60 = find_tangency(&p, &core, &w, 60)?;
    println!(
        "t0 {:.8} residual {:.6e} decay {:.4} refined {}",
        c60.t0, c60.angle_residual, c60.decay_ratio, c60.refined_levels
    );
    println!("res30 {:.3e} res60 {:.3e}", c30.angle_residual, c60.angle_residual);

    println!("\n== perturbed tangency (eps 0.01 at source preimage) ==");
    let mut q = p.clone();
    q.eps_perturb = 0.01;
    q.perturb_center = core.source_preimage;
    q.perturb_radius = 1.0;
    match build_repelling_annulus(&q) {
        Ok(cq) => match find_tangency(&q, &cq, &witness_curved_arc(&q, &cq, 0.8)?, 30) {
            Ok(cert) => println!("residual {:.6e} decay {:.4}", cert.angle_residual, cert.decay_ratio),
            Err(e) => println!("tangency failed: {e:#}"),
        },
        Err(e) => println!("annulus failed: {e:#}"),
    }

    println!("\n== stable spiral ==");
    match curved_stable_arc(&p, &core) {
        Ok(rep) => {
            println!(
                "ladder {} limit_w {:.2} transported_w {:.2} pullback_w {:.2} len {:.4e}",
                rep.ladder_depth,
                rep.limit_winding,
                rep.transported_winding,
                rep.pullback_winding,
                rep.pullback_length
            );
            println!(
                "ray_res {:.3e} membership {:.3e} arc_len {:.4e}",
                rep.ray_residual,
                rep.membership_error,
                rep.curved.arc.arclength()
            );
        }
        Err(e) => println!("FAILED: {e:#}"),
    }

    println!("\n== stable spiral at 0.995 ==");
    let t995 = std::time::Instant::now();
    let mut p995 = MapParams::defaults_mu_eq_sigma();
    p995.lambda = 0.995;
    match build_repelling_annulus(&p995) {
        Ok(core995) => {
            println!(
                "annulus: offset {} sep {:.4e} cross {:.4} src {:.4}+{:.4}i depth {} [{:.1}s]",
                core995.offset,
                core995.separation,
                core995.crossing_angle,
                core995.source_preimage.re,
                core995.source_preimage.im,
                core995.source_depth,
                t995.elapsed().as_secs_f64()
            );
            match curved_stable_arc(&p995, &core995) {
                Ok(rep) => {
                    println!(
                        "ladder {} limit_w {:.2} transported_w {:.2} pullback_w {:.2} len {:.4e}",
                        rep.ladder_depth,
                        rep.limit_winding,
                        rep.transported_winding,
                        rep.pullback_winding,
                        rep.pullback_length
                    );
                    println!(
                        "ray_res {:.3e} membership {:.3e} arc_len {:.4e} [{:.1}s]",
                        rep.ray_residual,
                        rep.membership_error,
                        rep.curved.arc.arclength(),
                        t995.elapsed().as_secs_f64()
                    );
                    match find_tangency(&p995, &core995, &rep.curved, 30) {
                        Ok(cert) => println!(
                            "tangency: residual {:.6e} decay {:.4} depth_refined {} [{:.1}s]",
                            cert.angle_residual,
                            cert.decay_ratio,
                            cert.refined_levels,
                            t995.elapsed().as_secs_f64()
                        ),
                        Err(e) => println!("tangency FAILED: {e:#}"),
                    }
                }
                Err(e) => println!("spiral FAILED: {e:#}"),
            }
        }
        Err(e) => println!("annulus FAILED: {e:#}"),
    }

    println!("\n== escape windows ==");
    for (lam, alpha, r) in [(0.95, 1.0, 0.25), (0.995, 1.0, 0.34), (1.0 - 1e-12, 1.0, 0.25)] {
        let mut pp = MapParams::defaults_mu_eq_sigma();
        pp.lambda = lam;
        match escape_window(&pp, alpha, r) {
            Ok(wd) => println!(
                "lambda {lam} alpha {alpha} r {r}: eta {:.3} L {:.4} C {:.4} window ({:.3}, {:.3})",
                wd.eta, wd.turn_length, wd.growth_offset, wd.lower, wd.upper
            ),
            Err(e) => println!("lambda {lam}: {e:#}"),
        }
        match wild_escape_bound(&pp, alpha) {
            Ok(b) => println!("  M = {}", b.m),
            Err(e) => println!("  bound: {e:#}"),
        }
    }

    println!("\n== dynamic escape (2 trials, m 1) ==");
    match wild_escape_dynamic(&p, 1.0, 1, 2, 7) {
        Ok(dy) => {
            for t in &dy.trials {
                println!(
                    "start |z| {:.2} contained {}/{} winding {:.2} ok {}",
                    t.start.norm(),
                    t.contained_steps,
                    t.required_steps,
                    t.winding,
                    t.ok
                );
            }
        }
        Err(e) => println!("FAILED: {e:#}"),
    }

    println!("\n== membership ==");
    let saddle = Complex64::new(p.saddle_location(), 0.0);
    let v = wild_set_membership(&p, saddle, 500)?;
    println!("saddle stays {} clearance {:.4}", v.stays, v.min_clearance);
    let _ = DEFAULT_COLLAR_RATIO;
    Ok(())
}
