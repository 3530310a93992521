//! Numerical laboratory for the Ricci flow that contracts a hyperbolic cusp.
//!
//! The conformal factor `u` of a radial metric `u (dx² + dy²)` evolves by the
//! logarithmic fast-diffusion equation `∂t u = Δ log u`, handled everywhere
//! in the log form `v = ½ log u`, `∂t v = e^{-2v} Δv = -K`.

pub mod barriers;
pub mod error;
pub mod grid;
pub mod harnack;
pub mod harness;
pub mod metrics;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use metrics::{RadialProfile, SampledProfile};
