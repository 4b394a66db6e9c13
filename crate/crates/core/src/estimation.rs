//! Maximum-likelihood fitting of flow chains to on-manifold data.
//!
//! The chain acts in the normalizing direction: it maps the chart coordinates
//! of a data point toward the base density.  The per-point objective is
//!
//!   log base(T(u)) + log |det J_T(u)| + ½ log det G(u),
//!
//! whose metric term does not depend on the parameters; maximizing it is
//! equivalent to maximizing the manifold log density [`model_log_density`],
//! which carries −½ log det G instead.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::charts::{AmbientPoint, Chart};
use crate::density::BaseDensity;
use crate::flows::{FlowChain, Layer, LayerKind};
use crate::linalg;
use crate::num::{Real, SampleReal};
use crate::{Error, Result};

/// Scale of the near-identity random initialization.
const INIT_SCALE: f64 = 1e-2;

/// Maximum number of step halvings in one line search.
const MAX_HALVINGS: usize = 30;

/// A collection of validated on-manifold points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    points: Vec<AmbientPoint<F>>,
    intrinsic_dim: usize,
    ambient_dim: usize,
}

impl<F: Real> Dataset<F> {
    /// Validates every point through `chart.inverse`.  Points that are off
    /// the manifold or at the chart singularity are reported together by
    /// 0-based index in [`Error::DataValidation`].
    pub fn from_points<C: Chart<F> + ?Sized>(
        chart: &C,
        points: Vec<AmbientPoint<F>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("dataset needs at least one point"));
        }
        let mut bad_rows = Vec::new();
        let mut reason = String::new();
        for (i, x) in points.iter().enumerate() {
            if let Err(e) = chart.inverse(x) {
                if bad_rows.is_empty() {
                    reason = e.to_string();
                }
                bad_rows.push(i);
            }
        }
        if !bad_rows.is_empty() {
            return Err(Error::DataValidation { rows: bad_rows, reason });
        }
        Ok(Self {
            points,
            intrinsic_dim: chart.intrinsic_dim(),
            ambient_dim: chart.ambient_dim(),
        })
    }

    pub fn points(&self) -> &[AmbientPoint<F>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
}

/// Settings for [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<F> {
    pub layer_count: usize,
    pub layer_kind: LayerKind,
    /// Initial gradient-ascent step.
    pub step_size: F,
    pub max_iters: usize,
    /// Stop when the gradient norm falls to or below this.
    pub grad_tolerance: F,
    /// Central-difference step for the parameter gradient.
    pub fd_step: F,
    /// Seed for the near-identity initialization.
    pub rng_seed: u64,
}

impl<F: Real> FitConfig<F> {
    pub fn new(layer_count: usize, layer_kind: LayerKind) -> Self {
        Self {
            layer_count,
            layer_kind,
            step_size: F::of(1e-2),
            max_iters: 2000,
            grad_tolerance: F::of(1e-5),
            fd_step: F::of(1e-5),
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > F::zero()) || !self.step_size.is_finite() {
            return Err(Error::InvalidArgument("step_size must be positive and finite".into()));
        }
        if !(self.fd_step > F::zero()) || !self.fd_step.is_finite() {
            return Err(Error::InvalidArgument("fd_step must be positive and finite".into()));
        }
        if !(self.grad_tolerance >= F::zero()) {
            return Err(Error::InvalidArgument("grad_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<F> {
    /// Mean negative log-likelihood after 0, 1, 2, … accepted steps;
    /// monotone non-increasing.
    pub objective_trace: Vec<F>,
    pub final_chain: FlowChain<F>,
    pub grad_norm_final: F,
    /// Number of accepted gradient steps.
    pub iterations_used: usize,
    /// Whether the gradient tolerance was reached.
    pub converged: bool,
}

impl<F: Real> FitReport<F> {
    pub fn initial_mean_log_likelihood(&self) -> F {
        -self.objective_trace[0]
    }

    pub fn final_mean_log_likelihood(&self) -> F {
        -*self.objective_trace.last().expect("trace is never empty")
    }

    /// Gain in mean log-likelihood over the initialization, in nats.
    pub fn improvement_nats(&self) -> F {
        self.final_mean_log_likelihood() - self.initial_mean_log_likelihood()
    }
}

/// Chart coordinates and metric terms of a dataset; both are independent of
/// the flow parameters, so they are computed once per fit.
struct PreparedData<F> {
    chart_coords: Vec<Vec<F>>,
    half_log_det_g: Vec<F>,
}

impl<F: Real> PreparedData<F> {
    fn new<C: Chart<F> + ?Sized>(chart: &C, data: &Dataset<F>) -> Result<Self> {
        let mut chart_coords = Vec::with_capacity(data.len());
        let mut half_log_det_g = Vec::with_capacity(data.len());
        for x in data.points() {
            let u = chart.inverse(x)?;
            half_log_det_g.push(chart.metric_log_det(&u)?.log_sqrt_det_g());
            chart_coords.push(u.into_coords());
        }
        Ok(Self { chart_coords, half_log_det_g })
    }

    /// Mean per-point objective; errors with [`Error::NumericalFailure`] when
    /// the mean is not finite.
    fn mean_log_likelihood(&self, chain: &FlowChain<F>, base: &BaseDensity<F>) -> Result<F> {
        let mut sum = F::zero();
        for (u, &half_log_det) in self.chart_coords.iter().zip(&self.half_log_det_g) {
            let (z, flow_log_det) = chain.forward(u)?;
            sum = sum + base.log_prob(&z)? + flow_log_det + half_log_det;
        }
        let mean = sum / F::of(self.chart_coords.len() as f64);
        if !mean.is_finite() {
            return Err(Error::NumericalFailure("objective is not finite".into()));
        }
        Ok(mean)
    }
}

/// Mean per-point fitting objective of `data` under (chart, chain, base).
pub fn data_log_likelihood<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    chain: &FlowChain<F>,
    base: &BaseDensity<F>,
    data: &Dataset<F>,
) -> Result<F> {
    check_dims(chart, base, data, chain)?;
    PreparedData::new(chart, data)?.mean_log_likelihood(chain, base)
}

/// Manifold log density at `x` of the model whose normalizing chain is
/// `chain`: log base(T(u)) + log |det J_T(u)| − ½ log det G(u).
/// Normalized over the manifold for any chain.
pub fn model_log_density<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    chain: &FlowChain<F>,
    base: &BaseDensity<F>,
    x: &AmbientPoint<F>,
) -> Result<F> {
    let u = chart.inverse(x)?;
    let metric = chart.metric_log_det(&u)?;
    let (z, flow_log_det) = chain.forward(u.coords())?;
    Ok(base.log_prob(&z)? + flow_log_det - metric.log_sqrt_det_g())
}

/// Central-difference gradient of `objective` at `params`.
/// Every evaluation must be finite; otherwise [`Error::NumericalFailure`].
pub fn fd_gradient<F: Real>(
    mut objective: impl FnMut(&[F]) -> Result<F>,
    params: &[F],
    fd_step: F,
) -> Result<Vec<F>> {
    if !(fd_step > F::zero()) || !fd_step.is_finite() {
        return Err(Error::InvalidArgument("fd_step must be positive and finite".into()));
    }
    let mut grad = Vec::with_capacity(params.len());
    let mut scratch = params.to_vec();
    for j in 0..params.len() {
        scratch[j] = params[j] + fd_step;
        let plus = objective(&scratch)?;
        scratch[j] = params[j] - fd_step;
        let minus = objective(&scratch)?;
        scratch[j] = params[j];
        let slope = (plus - minus) / (F::of(2.0) * fd_step);
        if !slope.is_finite() {
            return Err(Error::NumericalFailure("non-finite gradient component".into()));
        }
        grad.push(slope);
    }
    Ok(grad)
}

fn check_dims<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    base: &BaseDensity<F>,
    data: &Dataset<F>,
    chain: &FlowChain<F>,
) -> Result<()> {
    let n = chart.intrinsic_dim();
    if base.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: base.dim() });
    }
    if data.intrinsic_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: data.intrinsic_dim() });
    }
    if let Some(dim) = chain.dim() {
        if dim != n {
            return Err(Error::DimensionMismatch { expected: n, got: dim });
        }
    }
    Ok(())
}

fn pack_parameters<F: Real>(chain: &FlowChain<F>) -> Vec<F> {
    chain.layers().iter().flat_map(|l| l.parameters()).collect()
}

fn unpack_parameters<F: Real>(
    kind: LayerKind,
    dim: usize,
    layer_count: usize,
    params: &[F],
) -> Result<FlowChain<F>> {
    let per = Layer::<F>::parameter_count(kind, dim);
    let mut layers = Vec::with_capacity(layer_count);
    for i in 0..layer_count {
        layers.push(Layer::from_parameters(kind, dim, &params[i * per..(i + 1) * per])?);
    }
    FlowChain::new(layers)
}

/// Fits a chain of `config.layer_count` layers by full-batch gradient ascent
/// on [`data_log_likelihood`], with finite-difference gradients and a
/// backtracking line search (step halved until the objective does not
/// decrease, at most 30 halvings).  Initialization is near-identity, seeded
/// by `config.rng_seed`; the whole run is deterministic.
pub fn fit<F: SampleReal, C: Chart<F> + ?Sized>(
    chart: &C,
    base: &BaseDensity<F>,
    data: &Dataset<F>,
    config: &FitConfig<F>,
) -> Result<FitReport<F>> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
    let mut layers = Vec::with_capacity(config.layer_count);
    for _ in 0..config.layer_count {
        layers.push(Layer::near_identity(
            config.layer_kind,
            chart.intrinsic_dim(),
            F::of(INIT_SCALE),
            &mut rng,
        )?);
    }
    fit_from_chain(chart, base, data, config, FlowChain::new(layers)?)
}

/// [`fit`] starting from an explicit chain instead of a random
/// initialization.  The chain must match `config.layer_count` and
/// `config.layer_kind`.
pub fn fit_from_chain<F: Real, C: Chart<F> + ?Sized>(
    chart: &C,
    base: &BaseDensity<F>,
    data: &Dataset<F>,
    config: &FitConfig<F>,
    initial_chain: FlowChain<F>,
) -> Result<FitReport<F>> {
    config.validate()?;
    check_dims(chart, base, data, &initial_chain)?;
    if initial_chain.len() != config.layer_count
        || initial_chain.layers().iter().any(|l| l.kind() != config.layer_kind)
    {
        return Err(Error::InvalidArgument(
            "initial chain does not match the configured layer structure".into(),
        ));
    }
    let n = chart.intrinsic_dim();
    let prepared = PreparedData::new(chart, data)?;
    let objective = |params: &[F]| -> Result<F> {
        let chain = unpack_parameters(config.layer_kind, n, config.layer_count, params)?;
        prepared.mean_log_likelihood(&chain, base)
    };

    let mut params = pack_parameters(&initial_chain);
    let mut log_likelihood = objective(&params)?;
    let mut trace = vec![-log_likelihood];
    let mut grad_norm = F::zero();
    let mut converged = params.is_empty();
    let mut iterations_used = 0;

    while !converged && iterations_used < config.max_iters {
        let grad = fd_gradient(&objective, &params, config.fd_step)?;
        grad_norm = linalg::norm(&grad);
        if grad_norm <= config.grad_tolerance {
            converged = true;
            break;
        }
        let mut step = config.step_size;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<F> =
                params.iter().zip(&grad).map(|(&p, &g)| p + step * g).collect();
            match objective(&candidate) {
                Ok(value) if value >= log_likelihood => {
                    params = candidate;
                    log_likelihood = value;
                    accepted = true;
                    break;
                }
                // A shorter step may recover from a bad trial point.
                Ok(_)
                | Err(Error::NumericalFailure(_))
                | Err(Error::InvalidArgument(_))
                | Err(Error::NonFinite { .. }) => step = step / F::of(2.0),
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            break;
        }
        trace.push(-log_likelihood);
        iterations_used += 1;
    }

    Ok(FitReport {
        objective_trace: trace,
        final_chain: unpack_parameters(config.layer_kind, n, config.layer_count, &params)?,
        grad_norm_final: grad_norm,
        iterations_used,
        converged,
    })
}
