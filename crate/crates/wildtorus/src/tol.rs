//! Central numeric tolerances.
//!
//! Every comparison threshold used by the library and its tests is pinned
//! here with a rationale, so thresholds are auditable in one place and do not
//! drift per call site.

/// Relative roundoff budget for exact closed-form identities (composition of
/// the two chart maps, derivative linearity, stage compositions): a handful of
/// floating-point operations on well-scaled inputs.
pub const EXACT_IDENTITY_REL: f64 = 1e-12;

/// Absolute residual for fixed points and periodic orbits after Newton
/// refinement, scaled by (1 + |z|) at the point.
pub const FIXED_POINT_ABS: f64 = 1e-12;

/// Residual for preimage and backward-orbit consistency, |F(z_{j+1}) - z_j|.
pub const PREIMAGE_ABS: f64 = 1e-10;

/// Periodic-orbit closure residual |F^k(q) - q| demanded of reported points.
pub const PERIODIC_CLOSURE_ABS: f64 = 1e-10;

/// Agreement between analytic derivatives and central finite differences,
/// relative to |v|; the difference scheme itself is O(h^2) with h = 1e-6|z0|.
pub const DERIVATIVE_FD_REL: f64 = 1e-6;

/// Agreement between the closed-form Jacobian determinant and the determinant
/// of a finite-difference 2x2 matrix (looser: two differenced entries).
pub const JACOBIAN_FD_REL: f64 = 1e-5;

/// Slack added to proved sup bounds (cone contraction ratios) to absorb
/// roundoff in the sampled quantity.
pub const SUP_BOUND_SLACK: f64 = 1e-12;

/// Two independently continued curves for the same invariant object must
/// agree within this Hausdorff distance.
pub const CURVE_AGREEMENT_ABS: f64 = 1e-6;

/// Mirror symmetry of unperturbed invariant curves under conjugation.
pub const SYMMETRY_ABS: f64 = 1e-8;

/// Convergence target for backward basin orbits and manifold-depth doubling.
pub const BASIN_CONVERGENCE_ABS: f64 = 1e-8;

/// Angle residual (radians) below which a tangency certificate is accepted.
pub const TANGENCY_RESIDUAL: f64 = 1e-4;

/// End-tangent proportionality (relative) for arcs entering/leaving a cone
/// along its boundary rays.
pub const END_TANGENT_REL: f64 = 1e-8;

/// z-component agreement between an integrated section-to-section map and its
/// closed form after the single scalar calibration of the contraction stage.
pub const FLOW_LEG_ABS: f64 = 1e-6;

/// Componentwise agreement between the integrated torus first-return map and
/// the closed-form skew product (two legs compose, so one order looser).
pub const TORUS_RETURN_ABS: f64 = 1e-5;

/// Eigenvalue agreement at the vector field's singular point, where the field
/// is exactly linear by construction.
pub const SPECTRUM_ABS: f64 = 1e-8;

/// Bisection width (in the section coordinate) for event localization during
/// integration.
pub const EVENT_LOCALIZATION: f64 = 1e-12;

/// Monte-Carlo relative error allowed for the constant-Jacobian area check at
/// 1e6 samples (binomial error ~1/sqrt(N p) with p about 0.05 gives 0.45%).
pub const MEASURE_MC_REL: f64 = 0.02;

/// Leaf-map mismatch versus the planar map, limited by fiber diameter.
pub const LEAF_MAP_ABS: f64 = 1e-4;
