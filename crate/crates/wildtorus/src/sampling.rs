//! Seeded sampling helpers shared by the verification sweeps.
//!
//! All sweeps draw from a caller-provided RNG so that a fixed seed fully
//! determines every sampled point (reports are byte-reproducible).

use num_complex::Complex64;
use rand::Rng;

/// Log-uniform modulus in [rmin, rmax], uniform angle; the measure used for
/// radius-stratified cone sweeps.
pub fn log_uniform_annulus<R: Rng>(rng: &mut R, rmin: f64, rmax: f64) -> Complex64 {
    let u: f64 = rng.gen_range(0.0..1.0);
    let r = rmin * (rmax / rmin).powf(u);
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, th)
}

/// Uniform-area point in the disk of given radius about the origin.
pub fn uniform_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let u: f64 = rng.gen_range(0.0..1.0);
    let r = radius * u.sqrt();
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, th)
}

/// Unit vector at uniform angle.
pub fn unit_dir<R: Rng>(rng: &mut R) -> Complex64 {
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, th)
}
