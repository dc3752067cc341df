//! Simulation and pricing of performance-based contracts (PBC).
//!
//! A PBC transfers the operational cost risk of a fleet of products from the
//! buyer to the seller: the buyer pays a flat fee, the seller carries repair
//! and service cost. The cumulative life-cycle cost is modeled as a Lévy
//! process (linear drift + Brownian diffusion + compound Poisson cost jumps),
//! and the fair fee decomposes into the expected cost plus a call-style risk
//! premium `C = E[max(X_T - K, 0)]` with the strike set to the expected cost.
//!
//! Module map:
//! - [`process`] — jump-time samplers and Lévy path simulation
//! - [`dist`] — jump-height laws, sampling, moments, Weibull-on-log-cost MLE
//! - [`pricing`] — Monte Carlo premium, strike, total price, actuarial loadings
//! - [`oracle`] — convolution-series premium/density for validating the MC engine
//! - [`data`] — cost-record CSV ingestion, rate estimation, synthetic fleets
//! - [`rng`] — splittable per-path random streams for reproducible parallelism
//! - [`numerics`] — log-gamma, compensated summation, quadrature, normal CDF

// `!(x > 0.0)` is used on purpose where NaN must be rejected along with
// out-of-range values; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dist;
pub mod numerics;
pub mod oracle;
pub mod pricing;
pub mod process;
pub mod rng;

pub use dist::{JumpDistribution, WeibullFit};
pub use pricing::{PricingResult, StrikeMode};
pub use process::{Path, ProcessParams, RateSpec};
