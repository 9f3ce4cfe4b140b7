//! Extremal fractional Gaussian distributions and their use as an option-pricing kernel.
//!
//! * [`fracgauss`]: the density family `P(x) ∝ exp(-A|x|^β)` indexed by a Lévy exponent
//!   `alpha` in (0, 3), with CDF, quantile and seeded sampling.
//! * [`pricing`]: European calls by quadrature against the fractional propagator.
//! * [`implied_vol`]: exact and first-order implied-volatility smiles.
//! * [`numerics`]: gamma, adaptive quadrature, Brent root finding, finite differences.

pub mod error;
pub mod fracgauss;
pub mod implied_vol;
pub mod numerics;
mod par;
pub mod pricing;
pub mod selfcheck;

pub use error::{Error, Result};
pub use fracgauss::{FracGauss, FracParams, LogDensityForm, Sampler, ShapeCache};
pub use implied_vol::{Anchor, SmileMethod, SolverConfig, VolCurve, VolPoint};
pub use numerics::{QuadConfig, RootConfig};
pub use pricing::{PriceCurve, PricePoint, PriceQuery};
