//! Numerical toolkit for a family of planar singular endomorphisms, their
//! skew-product extensions, and a piecewise vector-field realization in a
//! solid torus.
//!
//! The library evaluates the maps in closed form, verifies cone-field
//! contraction/expansion and invariance by stratified sampling, computes the
//! attracting annulus and its boundary curves, grows invariant manifolds,
//! certifies tangencies between stable and unstable arcs, and integrates the
//! associated flow to check its Poincare maps against the closed forms.

pub mod annulus;
pub mod core_maps;
pub mod geom;
pub mod hyperbolicity;
pub mod invariant_set;
pub mod manifolds;
pub mod sampling;
pub mod tangency;
pub mod tol;
