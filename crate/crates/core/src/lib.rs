//! Probability densities on embedded manifolds, built from three pieces:
//!
//! * [`charts`]: homeomorphisms φ: ℝⁿ → M ⊂ ℝᵐ (stereographic spheres and
//!   their products) with the metric factor √det G, G = JᵀJ, that converts
//!   densities between chart space and the manifold;
//! * [`flows`]: invertible layers on chart space with closed-form
//!   log-det-Jacobians, reparameterized so every raw parameter setting is
//!   invertible;
//! * [`density`]: base densities and their pushforward onto the manifold.
//!
//! [`mc_verify`] checks the geometry against Monte Carlo ground truth
//! (radial profiles of projected uniform samples, normalization estimates,
//! volume quadrature), and [`estimation`] fits flow chains to on-manifold
//! data by maximum likelihood.  Everything is generic over the scalar type
//! through [`num::Real`]; the `*64` aliases fix f64.
//!
//! All randomness is ChaCha12, seeded explicitly; results are reproducible
//! bit-for-bit for a fixed seed and chunk count.

pub mod charts;
pub mod density;
pub mod estimation;
pub mod flows;
pub mod mc_verify;
pub mod num;
pub mod quadrature;
pub mod vmf;

mod error;
mod linalg;

pub use error::{Error, Result};
pub use num::{Real, SampleReal};

pub type ChartPoint64 = charts::ChartPoint<f64>;
pub type AmbientPoint64 = charts::AmbientPoint<f64>;
pub type MetricResult64 = charts::MetricResult<f64>;
pub type ProductChart64 = charts::ProductChart<f64>;
pub type PlanarLayer64 = flows::PlanarLayer<f64>;
pub type RadialLayer64 = flows::RadialLayer<f64>;
pub type Layer64 = flows::Layer<f64>;
pub type FlowChain64 = flows::FlowChain<f64>;
pub type BaseDensity64 = density::BaseDensity<f64>;
pub type ManifoldDensity64 = density::ManifoldDensity<f64>;
pub type ManifoldSample64 = density::ManifoldSample<f64>;
pub type RadialProfile64 = mc_verify::RadialProfile<f64>;
pub type CurveTriple64 = mc_verify::CurveTriple<f64>;
pub type NormalizationEstimate64 = mc_verify::NormalizationEstimate<f64>;
pub type Dataset64 = estimation::Dataset<f64>;
pub type FitConfig64 = estimation::FitConfig<f64>;
pub type FitReport64 = estimation::FitReport<f64>;
