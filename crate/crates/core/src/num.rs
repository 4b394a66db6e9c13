//! Scalar abstraction and small numeric helpers shared across the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::distr::{Distribution, StandardUniform};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the library is generic over (in practice `f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must be representable")
    }

    /// Converts `self` to `f64`, e.g. for error reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Scalar for which standard normal and uniform variates can be drawn.
pub trait SampleReal: Real {
    fn std_normal(rng: &mut impl Rng) -> Self;
    /// Uniform on [0, 1).
    fn std_uniform(rng: &mut impl Rng) -> Self;
}

impl<F> SampleReal for F
where
    F: Real,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    fn std_normal(rng: &mut impl Rng) -> Self {
        rng.sample(StandardNormal)
    }

    fn std_uniform(rng: &mut impl Rng) -> Self {
        rng.sample(StandardUniform)
    }
}

/// Numerically stable log(1 + exp(x)).
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// ln Γ(k/2) for integer k ≥ 1, via the recursion Γ(x+1) = x Γ(x)
/// from Γ(1/2) = √π and Γ(1) = 1.
fn ln_gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    let odd = k % 2 == 1;
    let mut value = if odd { 0.5 * std::f64::consts::PI.ln() } else { 0.0 };
    let mut j = if odd { 1 } else { 2 };
    while j < k {
        value += (j as f64 / 2.0).ln();
        j += 2;
    }
    value
}

/// Volume of the n-dimensional ball of the given radius.
pub fn ball_volume<F: Real>(dim: usize, radius: F) -> F {
    assert!(dim >= 1);
    let ln_unit = 0.5 * dim as f64 * std::f64::consts::PI.ln() - ln_gamma_half(dim + 2);
    F::of(ln_unit.exp()) * radius.powi(dim as i32)
}

/// Surface measure of the unit n-sphere Sⁿ embedded in ℝ^{n+1}:
/// 2 π^{(n+1)/2} / Γ((n+1)/2).  S⁰ has measure 2.
pub fn sphere_surface_area<F: Real>(dim: usize) -> F {
    let ln = std::f64::consts::LN_2
        + 0.5 * (dim as f64 + 1.0) * std::f64::consts::PI.ln()
        - ln_gamma_half(dim + 1);
    F::of(ln.exp())
}
