//! Densities on manifolds built from a chart-space base density, an optional
//! flow chain, and a chart.
//!
//! A density p(u) on chart space and the chart φ induce a density on the
//! manifold: f(x) = p(φ⁻¹(x)) / √det G(φ⁻¹(x)).  The pushforward and pullback
//! helpers apply that correction in each direction; `ManifoldDensity` composes
//! it with a flow chain for sampling and evaluation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::charts::{AmbientPoint, Chart, ChartPoint};
use crate::flows::FlowChain;
use crate::linalg;
use crate::num::{ball_volume, Real, SampleReal};
use crate::{Error, Result};

/// Density on chart space ℝⁿ used as the source of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseDensity<F> {
    StandardNormal { dim: usize },
    UniformBall { dim: usize, radius: F },
}

impl<F: Real> BaseDensity<F> {
    /// Standard normal on ℝⁿ, n ≥ 1.
    pub fn standard_normal(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput("base density needs dimension >= 1"));
        }
        Ok(BaseDensity::StandardNormal { dim })
    }

    /// Uniform on the ball of the given radius in ℝⁿ, n ≥ 1, radius > 0.
    pub fn uniform_ball(dim: usize, radius: F) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput("base density needs dimension >= 1"));
        }
        if !(radius > F::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("ball radius must be positive and finite".into()));
        }
        Ok(BaseDensity::UniformBall { dim, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseDensity::StandardNormal { dim } => *dim,
            BaseDensity::UniformBall { dim, .. } => *dim,
        }
    }

    /// Log density at `u`; −∞ outside the support.
    pub fn log_prob(&self, u: &[F]) -> Result<F> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        match self {
            BaseDensity::StandardNormal { dim } => {
                let half = F::of(0.5);
                let n = F::of(*dim as f64);
                Ok(-half * n * F::TAU().ln() - half * linalg::norm_sq(u))
            }
            BaseDensity::UniformBall { dim, radius } => {
                if linalg::norm(u) <= *radius {
                    Ok(-ball_volume(*dim, *radius).ln())
                } else {
                    Ok(F::neg_infinity())
                }
            }
        }
    }
}

impl<F: SampleReal> BaseDensity<F> {
    /// Draws one point from the base density.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<F> {
        match self {
            BaseDensity::StandardNormal { dim } => {
                (0..*dim).map(|_| F::std_normal(rng)).collect()
            }
            BaseDensity::UniformBall { dim, radius } => {
                let direction = loop {
                    let g: Vec<F> = (0..*dim).map(|_| F::std_normal(rng)).collect();
                    let norm = linalg::norm(&g);
                    if norm > F::of(1e-12) {
                        break g.into_iter().map(|v| v / norm).collect::<Vec<F>>();
                    }
                };
                let exponent = F::of(*dim as f64).recip();
                let r = *radius * F::std_uniform(rng).powf(exponent);
                direction.into_iter().map(|v| v * r).collect()
            }
        }
    }
}

/// Chart-space density pushed onto the manifold: at x = φ(u),
/// log f(x) = log p(u) − ½ log det G(u).
pub fn pushforward_log_density<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    log_p_chart: impl Fn(&[F]) -> F,
    x: &AmbientPoint<F>,
) -> Result<F> {
    let u = chart.inverse(x)?;
    let metric = chart.metric_log_det(&u)?;
    Ok(log_p_chart(u.coords()) - metric.log_sqrt_det_g())
}

/// Manifold density pulled back to chart space: at u,
/// log p(u) = log f(φ(u)) + ½ log det G(u).
pub fn pullback_log_density<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    log_f_manifold: impl Fn(&[F]) -> F,
    u: &ChartPoint<F>,
) -> Result<F> {
    let x = chart.forward(u)?;
    let metric = chart.metric_log_det(u)?;
    Ok(log_f_manifold(x.coords()) + metric.log_sqrt_det_g())
}

/// One draw from a [`ManifoldDensity`].
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample<F> {
    /// Ambient location on the manifold.
    pub x: AmbientPoint<F>,
    /// Log density of the model at `x` (manifold measure).
    pub log_density: F,
    /// The base draw before the flow chain.
    pub u_base: Vec<F>,
    /// Chart coordinates after the flow chain.
    pub u_final: Vec<F>,
}

/// A density on a manifold: base density on chart space, flow chain, chart.
pub struct ManifoldDensity<F: Real> {
    base: BaseDensity<F>,
    chain: FlowChain<F>,
    chart: Box<dyn Chart<F>>,
}

impl<F: Real> ManifoldDensity<F> {
    /// Requires base, chain (when non-empty), and chart to share the
    /// intrinsic dimension.
    pub fn new(
        base: BaseDensity<F>,
        chain: FlowChain<F>,
        chart: impl Chart<F> + 'static,
    ) -> Result<Self> {
        let n = chart.intrinsic_dim();
        if base.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: base.dim() });
        }
        if let Some(dim) = chain.dim() {
            if dim != n {
                return Err(Error::DimensionMismatch { expected: n, got: dim });
            }
        }
        Ok(Self { base, chain, chart: Box::new(chart) })
    }

    pub fn base(&self) -> &BaseDensity<F> {
        &self.base
    }

    pub fn chain(&self) -> &FlowChain<F> {
        &self.chain
    }

    pub fn chart(&self) -> &dyn Chart<F> {
        self.chart.as_ref()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.chart.intrinsic_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.ambient_dim()
    }

    /// Log density at a manifold point.
    ///
    /// Only available for the empty chain, whose inverse is the identity;
    /// a non-empty chain has no closed-form inverse and evaluation would
    /// require one.
    pub fn log_prob(&self, x: &AmbientPoint<F>) -> Result<F> {
        if !self.chain.is_empty() {
            return Err(Error::NonInvertibleFlow);
        }
        let u = self.chart.inverse(x)?;
        let metric = self.chart.metric_log_det(&u)?;
        Ok(self.base.log_prob(u.coords())? - metric.log_sqrt_det_g())
    }
}

impl<F: SampleReal> ManifoldDensity<F> {
    /// Draws `count` samples deterministically from `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<ManifoldSample<F>>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with_rng(&mut rng, count)
    }

    /// Draws `count` ≥ 1 samples from the supplied generator.
    pub fn sample_with_rng(
        &self,
        rng: &mut impl Rng,
        count: usize,
    ) -> Result<Vec<ManifoldSample<F>>> {
        if count == 0 {
            return Err(Error::EmptyInput("sample count must be at least 1"));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.sample_one(rng)?);
        }
        Ok(out)
    }

    /// Draws a single sample from the supplied generator.
    pub fn sample_one(&self, rng: &mut impl Rng) -> Result<ManifoldSample<F>> {
        let u_base = self.base.sample(rng);
        let base_log_prob = self.base.log_prob(&u_base)?;
        let (u_final, flow_log_det) = self.chain.forward(&u_base)?;
        let u_point = ChartPoint::new(u_final.clone())?;
        let x = self.chart.forward(&u_point)?;
        let metric = self.chart.metric_log_det(&u_point)?;
        let log_density = base_log_prob - flow_log_det - metric.log_sqrt_det_g();
        Ok(ManifoldSample { x, log_density, u_base, u_final })
    }
}
