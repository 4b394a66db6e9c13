//! Invertible flow layers on ℝⁿ with closed-form log-det-Jacobians.
//!
//! Layers act on chart coordinates.  Raw parameters are unconstrained; each
//! layer derives constrained internal parameters that guarantee invertibility
//! for every raw setting, so gradient-based fitting never has to project.

use rand::Rng;

use crate::linalg;
use crate::num::{softplus, Real, SampleReal};
use crate::{Error, Result};

/// Central-difference step used by [`chain_log_det_numeric_check`].
const FD_STEP: f64 = 1e-6;

fn check_input<F: Real>(dim: usize, z: &[F]) -> Result<()> {
    if z.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: z.len() });
    }
    for (index, v) in z.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

/// Planar layer z ↦ z + û tanh(wᵀz + b).
///
/// û is derived from the raw parameter u_raw so that 1 + wᵀû = softplus(wᵀu_raw),
/// which is strictly positive; the layer is therefore invertible for all raw
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLayer<F> {
    w: Vec<F>,
    u_raw: Vec<F>,
    b: F,
    u_hat: Vec<F>,
    one_plus_w_dot_u_hat: F,
}

impl<F: Real> PlanarLayer<F> {
    /// Requires matching dimensions ≥ 1, finite parameters, and ‖w‖ > 0.
    pub fn new(w: Vec<F>, u_raw: Vec<F>, b: F) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyInput("planar layer needs dimension >= 1"));
        }
        if u_raw.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: w.len(), got: u_raw.len() });
        }
        check_input(w.len(), &w)?;
        check_input(u_raw.len(), &u_raw)?;
        if !b.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        let w_norm_sq = linalg::norm_sq(&w);
        if !(w_norm_sq > F::zero()) {
            return Err(Error::InvalidArgument("planar layer requires ‖w‖ > 0".into()));
        }
        let a = linalg::dot(&w, &u_raw);
        let sp = softplus(a);
        if !(sp > F::zero()) {
            // softplus underflowed to 0: wᵀû = −1 exactly, so det J can vanish.
            return Err(Error::InvalidArgument(
                "w·u_raw is so negative that the layer degenerates".into(),
            ));
        }
        let shift = (sp - F::one() - a) / w_norm_sq;
        let u_hat = u_raw.iter().zip(&w).map(|(&u, &wi)| u + shift * wi).collect();
        Ok(Self { w, u_raw, b, u_hat, one_plus_w_dot_u_hat: sp })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[F] {
        &self.w
    }

    pub fn u_raw(&self) -> &[F] {
        &self.u_raw
    }

    pub fn b(&self) -> F {
        self.b
    }

    /// The constrained direction actually used by the map.
    pub fn u_hat(&self) -> &[F] {
        &self.u_hat
    }

    /// wᵀû = softplus(wᵀu_raw) − 1.  The rounded difference can touch −1
    /// when softplus(wᵀu_raw) falls below half an ulp of 1; the exact carrier
    /// is [`Self::one_plus_w_dot_u_hat`].
    pub fn w_dot_u_hat(&self) -> F {
        self.one_plus_w_dot_u_hat - F::one()
    }

    /// 1 + wᵀû, computed as softplus(wᵀu_raw); strictly positive.
    pub fn one_plus_w_dot_u_hat(&self) -> F {
        self.one_plus_w_dot_u_hat
    }

    /// Applies the layer, returning (z', log |det J|).
    pub fn forward(&self, z: &[F]) -> Result<(Vec<F>, F)> {
        check_input(self.dim(), z)?;
        let a = linalg::dot(&self.w, z) + self.b;
        let t = a.tanh();
        let out = z.iter().zip(&self.u_hat).map(|(&zi, &ui)| zi + t * ui).collect();
        // det J = 1 + (wᵀû)(1 − tanh²a); with d = 1 − tanh²a ∈ (0, 1] this is
        // (1 − d) + softplus(wᵀu_raw)·d, a sum of non-negative terms.
        let d = F::one() - t * t;
        let log_det = ((F::one() - d) + self.one_plus_w_dot_u_hat * d).ln();
        Ok((out, log_det))
    }
}

/// Radial layer z ↦ z + β (z − z₀) / (α + ‖z − z₀‖).
///
/// α = softplus(α_raw) > 0 and β = −α + softplus(β_raw) > −α, which keeps the
/// map invertible for all raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLayer<F> {
    z0: Vec<F>,
    alpha_raw: F,
    beta_raw: F,
    alpha: F,
    beta: F,
    alpha_plus_beta: F,
}

impl<F: Real> RadialLayer<F> {
    /// Requires dimension ≥ 1 and finite parameters.
    pub fn new(z0: Vec<F>, alpha_raw: F, beta_raw: F) -> Result<Self> {
        if z0.is_empty() {
            return Err(Error::EmptyInput("radial layer needs dimension >= 1"));
        }
        check_input(z0.len(), &z0)?;
        if !alpha_raw.is_finite() || !beta_raw.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        let alpha = softplus(alpha_raw);
        let alpha_plus_beta = softplus(beta_raw);
        if !(alpha > F::zero()) || !(alpha_plus_beta > F::zero()) {
            // softplus underflowed to 0: α = 0 or β = −α makes the map singular.
            return Err(Error::InvalidArgument(
                "raw parameters are so negative that the layer degenerates".into(),
            ));
        }
        let beta = alpha_plus_beta - alpha;
        Ok(Self { z0, alpha_raw, beta_raw, alpha, beta, alpha_plus_beta })
    }

    pub fn dim(&self) -> usize {
        self.z0.len()
    }

    pub fn z0(&self) -> &[F] {
        &self.z0
    }

    pub fn alpha_raw(&self) -> F {
        self.alpha_raw
    }

    pub fn beta_raw(&self) -> F {
        self.beta_raw
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    /// α + β, computed as softplus(β_raw); strictly positive.  The rounded
    /// difference [`Self::beta`] can touch −α when softplus(β_raw) falls
    /// below half an ulp of α.
    pub fn alpha_plus_beta(&self) -> F {
        self.alpha_plus_beta
    }

    /// Applies the layer, returning (z', log |det J|).
    pub fn forward(&self, z: &[F]) -> Result<(Vec<F>, F)> {
        check_input(self.dim(), z)?;
        let diff: Vec<F> = z.iter().zip(&self.z0).map(|(&zi, &ci)| zi - ci).collect();
        let r = linalg::norm(&diff);
        let h = (self.alpha + r).recip();
        let scale = self.beta * h;
        let out = z.iter().zip(&diff).map(|(&zi, &di)| zi + scale * di).collect();
        // det J = (1 + βh)^{n-1} (1 + αβh²); both factors exceed 1 − α/(α+r) ≥ 0.
        let n_minus_1 = F::of((self.dim() - 1) as f64);
        let log_det = n_minus_1 * scale.ln_1p() + (self.alpha * self.beta * h * h).ln_1p();
        Ok((out, log_det))
    }
}

/// Which family a layer belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Planar,
    Radial,
}

/// A single flow layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<F> {
    Planar(PlanarLayer<F>),
    Radial(RadialLayer<F>),
}

impl<F: Real> Layer<F> {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Planar(_) => LayerKind::Planar,
            Layer::Radial(_) => LayerKind::Radial,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Layer::Planar(l) => l.dim(),
            Layer::Radial(l) => l.dim(),
        }
    }

    /// Applies the layer, returning (z', log |det J|).
    pub fn forward(&self, z: &[F]) -> Result<(Vec<F>, F)> {
        match self {
            Layer::Planar(l) => l.forward(z),
            Layer::Radial(l) => l.forward(z),
        }
    }

    /// Number of raw parameters for a layer of this kind and dimension.
    pub fn parameter_count(kind: LayerKind, dim: usize) -> usize {
        match kind {
            LayerKind::Planar => 2 * dim + 1, // w, u_raw, b
            LayerKind::Radial => dim + 2,     // z0, alpha_raw, beta_raw
        }
    }

    /// Flattens the raw parameters in the order used by [`Layer::from_parameters`].
    pub fn parameters(&self) -> Vec<F> {
        match self {
            Layer::Planar(l) => {
                let mut p = l.w.clone();
                p.extend_from_slice(&l.u_raw);
                p.push(l.b);
                p
            }
            Layer::Radial(l) => {
                let mut p = l.z0.clone();
                p.push(l.alpha_raw);
                p.push(l.beta_raw);
                p
            }
        }
    }

    /// Rebuilds a layer from a flat raw-parameter slice.
    pub fn from_parameters(kind: LayerKind, dim: usize, params: &[F]) -> Result<Self> {
        let expected = Self::parameter_count(kind, dim);
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: params.len() });
        }
        match kind {
            LayerKind::Planar => {
                let w = params[..dim].to_vec();
                let u_raw = params[dim..2 * dim].to_vec();
                Ok(Layer::Planar(PlanarLayer::new(w, u_raw, params[2 * dim])?))
            }
            LayerKind::Radial => {
                let z0 = params[..dim].to_vec();
                Ok(Layer::Radial(RadialLayer::new(z0, params[dim], params[dim + 1])?))
            }
        }
    }
}

impl<F: SampleReal> Layer<F> {
    /// A layer with raw parameters drawn from the standard normal.
    pub fn random(kind: LayerKind, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        match kind {
            LayerKind::Planar => {
                let w = nonzero_normal_vec(dim, rng);
                let u_raw = normal_vec(dim, rng);
                Layer::from_parameters(kind, dim, &[w, u_raw, vec![F::std_normal(rng)]].concat())
            }
            LayerKind::Radial => {
                let mut p = normal_vec(dim, rng);
                p.push(F::std_normal(rng));
                p.push(F::std_normal(rng));
                Layer::from_parameters(kind, dim, &p)
            }
        }
    }

    /// A layer whose map is a perturbation of the identity of size ~`scale`.
    ///
    /// At scale 0 a planar layer has û = 0 (u_raw = ln(e−1) w/‖w‖²) and a
    /// radial layer has β = 0 (β_raw = α_raw).
    pub fn near_identity(kind: LayerKind, dim: usize, scale: F, rng: &mut impl Rng) -> Result<Self> {
        let softplus_inv_one = (F::E() - F::one()).ln();
        match kind {
            LayerKind::Planar => {
                let w = nonzero_normal_vec::<F>(dim, rng);
                let w_norm_sq = linalg::norm_sq(&w);
                let u_raw: Vec<F> = w
                    .iter()
                    .map(|&wi| softplus_inv_one * wi / w_norm_sq + scale * F::std_normal(rng))
                    .collect();
                let b = scale * F::std_normal(rng);
                Ok(Layer::Planar(PlanarLayer::new(w, u_raw, b)?))
            }
            LayerKind::Radial => {
                let z0 = normal_vec(dim, rng);
                let alpha_raw = softplus_inv_one + scale * F::std_normal(rng);
                let beta_raw = alpha_raw + scale * F::std_normal(rng);
                Ok(Layer::Radial(RadialLayer::new(z0, alpha_raw, beta_raw)?))
            }
        }
    }
}

fn normal_vec<F: SampleReal>(dim: usize, rng: &mut impl Rng) -> Vec<F> {
    (0..dim).map(|_| F::std_normal(rng)).collect()
}

fn nonzero_normal_vec<F: SampleReal>(dim: usize, rng: &mut impl Rng) -> Vec<F> {
    loop {
        let v = normal_vec(dim, rng);
        if linalg::norm(&v) > F::of(1e-6) {
            return v;
        }
    }
}

/// A composition of layers applied first-to-last.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowChain<F> {
    layers: Vec<Layer<F>>,
}

impl<F: Real> FlowChain<F> {
    /// The empty chain (identity map, log_det 0).
    pub fn identity() -> Self {
        Self { layers: Vec::new() }
    }

    /// Requires all layers to share one dimension.
    pub fn new(layers: Vec<Layer<F>>) -> Result<Self> {
        if let Some(first) = layers.first() {
            let dim = first.dim();
            for layer in &layers {
                if layer.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: layer.dim() });
                }
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Dimension the chain acts on; `None` for the empty chain, which works
    /// in any dimension.
    pub fn dim(&self) -> Option<usize> {
        self.layers.first().map(|l| l.dim())
    }

    /// Applies every layer in order, returning (z', Σ log |det J|).
    pub fn forward(&self, z: &[F]) -> Result<(Vec<F>, F)> {
        let mut current = z.to_vec();
        let mut log_det = F::zero();
        if self.layers.is_empty() {
            check_input(z.len(), z)?;
            return Ok((current, log_det));
        }
        for layer in &self.layers {
            let (next, ld) = layer.forward(&current)?;
            current = next;
            log_det = log_det + ld;
        }
        Ok((current, log_det))
    }
}

/// log |det J| of the whole chain map at `z`, from a central-difference
/// Jacobian.  Validates the closed-form accumulation in [`FlowChain::forward`].
pub fn chain_log_det_numeric_check<F: Real>(chain: &FlowChain<F>, z: &[F]) -> Result<F> {
    if let Some(dim) = chain.dim() {
        if z.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: z.len() });
        }
    }
    check_input(z.len(), z)?;
    let n = z.len();
    let step = F::of(FD_STEP);
    let mut jac = vec![F::zero(); n * n];
    for j in 0..n {
        let mut plus = z.to_vec();
        let mut minus = z.to_vec();
        plus[j] = plus[j] + step;
        minus[j] = minus[j] - step;
        let (zp, _) = chain.forward(&plus)?;
        let (zm, _) = chain.forward(&minus)?;
        for i in 0..n {
            jac[i * n + j] = (zp[i] - zm[i]) / (F::of(2.0) * step);
        }
    }
    linalg::lu_log_abs_det(&jac, n).ok_or(Error::DegenerateFlow)
}
