//! Chart homeomorphisms between ℝⁿ and embedded manifolds.
//!
//! A chart φ maps intrinsic coordinates u ∈ ℝⁿ onto a manifold embedded in ℝᵐ.
//! Its Jacobian J induces the metric G = JᵀJ, and √det G is the volume
//! distortion that converts chart-space densities into manifold densities.

use crate::linalg;
use crate::num::Real;
use crate::{Error, Result};

/// Tolerance on |‖x‖ − 1| for the on-manifold check in [`Chart::inverse`].
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// Tolerance on 1 − x_{n+1} around the projection pole.
pub const POLE_TOL: f64 = 1e-9;

/// Default central-difference step for numeric Jacobians.
pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-6;

fn check_finite<F: Real>(coords: &[F]) -> Result<()> {
    for (index, c) in coords.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Point in chart (intrinsic) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<F> {
    coords: Vec<F>,
}

impl<F: Real> ChartPoint<F> {
    /// Rejects non-finite coordinates.
    pub fn new(coords: Vec<F>) -> Result<Self> {
        check_finite(&coords)?;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[F] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<F> {
        self.coords
    }
}

/// Point in the ambient embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint<F> {
    coords: Vec<F>,
}

impl<F: Real> AmbientPoint<F> {
    /// Rejects non-finite coordinates.
    pub fn new(coords: Vec<F>) -> Result<Self> {
        check_finite(&coords)?;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[F] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<F> {
        self.coords
    }
}

/// Metric determinant at a chart point, carried in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricResult<F> {
    log_det_g: F,
}

impl<F: Real> MetricResult<F> {
    pub fn new(log_det_g: F) -> Self {
        Self { log_det_g }
    }

    pub fn log_det_g(&self) -> F {
        self.log_det_g
    }

    /// log √det G, the log volume distortion.
    pub fn log_sqrt_det_g(&self) -> F {
        self.log_det_g / F::of(2.0)
    }

    /// det G; may under- or overflow where the log form stays finite.
    pub fn det_g(&self) -> F {
        self.log_det_g.exp()
    }
}

/// A smooth bijection from ℝⁿ onto a manifold (minus a measure-zero set)
/// embedded in ℝᵐ.
pub trait Chart<F: Real>: Send + Sync {
    /// Dimension n of the chart domain.
    fn intrinsic_dim(&self) -> usize;

    /// Dimension m of the embedding space.
    fn ambient_dim(&self) -> usize;

    /// Maps chart coordinates onto the manifold.
    fn forward(&self, u: &ChartPoint<F>) -> Result<AmbientPoint<F>>;

    /// Maps a manifold point back to chart coordinates.
    ///
    /// Fails with [`Error::OffManifold`] when the point violates the manifold
    /// constraint beyond [`ON_MANIFOLD_TOL`], and with
    /// [`Error::ChartSingularity`] when it lies within [`POLE_TOL`] of the
    /// excluded set.
    fn inverse(&self, x: &AmbientPoint<F>) -> Result<ChartPoint<F>>;

    /// log det G(u) for the induced metric G = JᵀJ, in closed form.
    fn metric_log_det(&self, u: &ChartPoint<F>) -> Result<MetricResult<F>>;
}

/// Inverse stereographic projection ℝⁿ → Sⁿ ⊂ ℝ^{n+1}.
///
/// The origin maps to the south pole (0, …, 0, −1); the north pole is the
/// excluded point.  The chart is conformal: G(u) = (2/(1+‖u‖²))² I, so
/// det G(u) = (2/(1+‖u‖²))^{2n}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StereographicChart {
    n: usize,
}

impl StereographicChart {
    /// A chart for Sⁿ.  Requires n ≥ 1.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "sphere dimension must be at least 1");
        Self { n }
    }
}

impl<F: Real> Chart<F> for StereographicChart {
    fn intrinsic_dim(&self) -> usize {
        self.n
    }

    fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    fn forward(&self, u: &ChartPoint<F>) -> Result<AmbientPoint<F>> {
        check_dim(self.n, u.dim())?;
        let two = F::of(2.0);
        let denom = linalg::norm_sq(u.coords()) + F::one();
        let mut x: Vec<F> = u.coords().iter().map(|&ui| two * ui / denom).collect();
        x.push(F::one() - two / denom);
        AmbientPoint::new(x)
    }

    fn inverse(&self, x: &AmbientPoint<F>) -> Result<ChartPoint<F>> {
        check_dim(self.n + 1, x.dim())?;
        let r = linalg::norm(x.coords());
        let deviation = (r - F::one()).abs();
        let on_tol = F::of(ON_MANIFOLD_TOL);
        if deviation > on_tol {
            return Err(Error::OffManifold {
                deviation: deviation.as_f64(),
                tolerance: ON_MANIFOLD_TOL,
            });
        }
        let last = x.coords()[self.n];
        let denom = F::one() - last;
        if denom < F::of(POLE_TOL) {
            return Err(Error::ChartSingularity { tolerance: POLE_TOL });
        }
        let u = x.coords()[..self.n].iter().map(|&xi| xi / denom).collect();
        ChartPoint::new(u)
    }

    fn metric_log_det(&self, u: &ChartPoint<F>) -> Result<MetricResult<F>> {
        check_dim(self.n, u.dim())?;
        let scale = F::of(2.0).ln() - linalg::norm_sq(u.coords()).ln_1p();
        Ok(MetricResult::new(F::of(2.0 * self.n as f64) * scale))
    }
}

/// Product of charts, mapping the concatenation of the component domains onto
/// the product manifold embedded in the concatenation of the ambient spaces.
pub struct ProductChart<F> {
    components: Vec<Box<dyn Chart<F>>>,
    intrinsic_dim: usize,
    ambient_dim: usize,
}

impl<F: Real> ProductChart<F> {
    pub fn new(components: Vec<Box<dyn Chart<F>>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("product chart needs at least one component"));
        }
        let intrinsic_dim = components.iter().map(|c| c.intrinsic_dim()).sum();
        let ambient_dim = components.iter().map(|c| c.ambient_dim()).sum();
        Ok(Self { components, intrinsic_dim, ambient_dim })
    }

    /// The k-torus T^k = S¹ × ⋯ × S¹.
    pub fn torus(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyInput("torus needs at least one circle factor"));
        }
        let components = (0..k)
            .map(|_| Box::new(StereographicChart::new(1)) as Box<dyn Chart<F>>)
            .collect();
        Self::new(components)
    }

    pub fn components(&self) -> &[Box<dyn Chart<F>>] {
        &self.components
    }
}

impl<F: Real> Chart<F> for ProductChart<F> {
    fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn forward(&self, u: &ChartPoint<F>) -> Result<AmbientPoint<F>> {
        check_dim(self.intrinsic_dim, u.dim())?;
        let mut x = Vec::with_capacity(self.ambient_dim);
        let mut offset = 0;
        for chart in &self.components {
            let n = chart.intrinsic_dim();
            let part = ChartPoint::new(u.coords()[offset..offset + n].to_vec())?;
            x.extend_from_slice(chart.forward(&part)?.coords());
            offset += n;
        }
        AmbientPoint::new(x)
    }

    fn inverse(&self, x: &AmbientPoint<F>) -> Result<ChartPoint<F>> {
        check_dim(self.ambient_dim, x.dim())?;
        let mut u = Vec::with_capacity(self.intrinsic_dim);
        let mut offset = 0;
        for chart in &self.components {
            let m = chart.ambient_dim();
            let part = AmbientPoint::new(x.coords()[offset..offset + m].to_vec())?;
            u.extend_from_slice(chart.inverse(&part)?.coords());
            offset += m;
        }
        ChartPoint::new(u)
    }

    fn metric_log_det(&self, u: &ChartPoint<F>) -> Result<MetricResult<F>> {
        check_dim(self.intrinsic_dim, u.dim())?;
        let mut log_det = F::zero();
        let mut offset = 0;
        for chart in &self.components {
            let n = chart.intrinsic_dim();
            let part = ChartPoint::new(u.coords()[offset..offset + n].to_vec())?;
            log_det = log_det + chart.metric_log_det(&part)?.log_det_g();
            offset += n;
        }
        Ok(MetricResult::new(log_det))
    }
}

/// Central-difference Jacobian of `chart.forward` at `u`.
/// Returns the columns ∂φ/∂uⱼ, each of length `ambient_dim`.
pub fn numeric_jacobian<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    u: &ChartPoint<F>,
    step: F,
) -> Result<Vec<Vec<F>>> {
    if !(step > F::zero()) || !step.is_finite() {
        return Err(Error::InvalidArgument("step must be positive and finite".into()));
    }
    check_dim(chart.intrinsic_dim(), u.dim())?;
    let n = u.dim();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut plus = u.coords().to_vec();
        let mut minus = u.coords().to_vec();
        plus[j] = plus[j] + step;
        minus[j] = minus[j] - step;
        let xp = chart.forward(&ChartPoint::new(plus)?)?;
        let xm = chart.forward(&ChartPoint::new(minus)?)?;
        let column = xp
            .coords()
            .iter()
            .zip(xm.coords())
            .map(|(&p, &m)| (p - m) / (F::of(2.0) * step))
            .collect();
        columns.push(column);
    }
    Ok(columns)
}

/// log det G(u) from the numeric Jacobian, for validating closed forms.
/// Uses [`DEFAULT_JACOBIAN_STEP`] and fails with [`Error::DegenerateMetric`]
/// when the numeric Gram matrix is not positive definite.
pub fn metric_log_det_numeric<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    u: &ChartPoint<F>,
) -> Result<MetricResult<F>> {
    let jac = numeric_jacobian(chart, u, F::of(DEFAULT_JACOBIAN_STEP))?;
    let g = linalg::gram(&jac);
    let log_det = linalg::spd_log_det(&g, u.dim()).ok_or(Error::DegenerateMetric)?;
    Ok(MetricResult::new(log_det))
}
