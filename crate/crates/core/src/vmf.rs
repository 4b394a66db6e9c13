//! von Mises–Fisher sampling on S², for generating structured test datasets.

use rand::Rng;

use crate::charts::AmbientPoint;
use crate::linalg;
use crate::num::{Real, SampleReal};
use crate::{Error, Result};

fn unit_mean_direction<F: Real>(mean_direction: &[F]) -> Result<[F; 3]> {
    if mean_direction.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: mean_direction.len() });
    }
    for (index, v) in mean_direction.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    let norm = linalg::norm(mean_direction);
    if !(norm > F::zero()) {
        return Err(Error::InvalidArgument("mean direction must be non-zero".into()));
    }
    Ok([mean_direction[0] / norm, mean_direction[1] / norm, mean_direction[2] / norm])
}

fn cross<F: Real>(a: &[F; 3], b: &[F; 3]) -> [F; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal basis of the plane orthogonal to the unit vector `mu`.
fn tangent_basis<F: Real>(mu: &[F; 3]) -> ([F; 3], [F; 3]) {
    // Cross with the axis least aligned with mu.
    let abs = [mu[0].abs(), mu[1].abs(), mu[2].abs()];
    let mut axis = [F::zero(); 3];
    let k = if abs[0] <= abs[1] && abs[0] <= abs[2] {
        0
    } else if abs[1] <= abs[2] {
        1
    } else {
        2
    };
    axis[k] = F::one();
    let raw = cross(mu, &axis);
    let norm = linalg::norm(&raw);
    let e1 = [raw[0] / norm, raw[1] / norm, raw[2] / norm];
    let e2 = cross(mu, &e1);
    (e1, e2)
}

/// Draws `count` points from vMF(μ, κ) on S².  The direction is normalized
/// internally; κ = 0 gives the uniform sphere distribution.
pub fn sample_vmf<F: SampleReal>(
    mean_direction: &[F],
    concentration: F,
    rng: &mut impl Rng,
    count: usize,
) -> Result<Vec<AmbientPoint<F>>> {
    if !(concentration >= F::zero()) || !concentration.is_finite() {
        return Err(Error::InvalidArgument("concentration must be finite and >= 0".into()));
    }
    let mu = unit_mean_direction(mean_direction)?;
    let (e1, e2) = tangent_basis(&mu);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(vmf_point(&mu, &e1, &e2, concentration, rng));
    }
    Ok(out)
}

/// Draws from the balanced mixture ½ vMF(μ, κ) + ½ vMF(−μ, κ).
pub fn sample_antipodal_vmf_mixture<F: SampleReal>(
    mean_direction: &[F],
    concentration: F,
    rng: &mut impl Rng,
    count: usize,
) -> Result<Vec<AmbientPoint<F>>> {
    if !(concentration >= F::zero()) || !concentration.is_finite() {
        return Err(Error::InvalidArgument("concentration must be finite and >= 0".into()));
    }
    let mu = unit_mean_direction(mean_direction)?;
    let neg = [-mu[0], -mu[1], -mu[2]];
    let basis_pos = tangent_basis(&mu);
    let basis_neg = tangent_basis(&neg);
    let half = F::of(0.5);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if F::std_uniform(rng) < half {
            out.push(vmf_point(&mu, &basis_pos.0, &basis_pos.1, concentration, rng));
        } else {
            out.push(vmf_point(&neg, &basis_neg.0, &basis_neg.1, concentration, rng));
        }
    }
    Ok(out)
}

fn vmf_point<F: SampleReal>(
    mu: &[F; 3],
    e1: &[F; 3],
    e2: &[F; 3],
    kappa: F,
    rng: &mut impl Rng,
) -> AmbientPoint<F> {
    let one = F::one();
    let two = F::of(2.0);
    let v = F::std_uniform(rng);
    // On S² the cosine w along μ has an explicit inverse CDF.
    let w = if kappa < F::of(1e-12) {
        two * v - one
    } else {
        one + (v + (one - v) * (-two * kappa).exp()).ln() / kappa
    };
    let w = w.min(one).max(-one);
    let s = (one - w * w).sqrt();
    let theta = F::TAU() * F::std_uniform(rng);
    let (c, sn) = (theta.cos(), theta.sin());
    let coords = (0..3)
        .map(|i| w * mu[i] + s * (c * e1[i] + sn * e2[i]))
        .collect();
    AmbientPoint::new(coords).expect("vMF draw is finite")
}
