//! Monte Carlo verification of chart-based densities.
//!
//! The central check: push the uniform sphere density into chart coordinates
//! and compare the empirical radial histogram against the analytic profile
//! that includes the metric factor √det G, and against the naive profile that
//! ignores the embedding geometry.  A normalization estimator and a
//! chart-based volume quadrature provide two further ways to catch a wrong
//! metric factor.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::charts::{AmbientPoint, Chart, ChartPoint};
use crate::density::ManifoldDensity;
use crate::linalg;
use crate::num::{ball_volume, sphere_surface_area, Real, SampleReal};
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

/// RNG for one chunk of a deterministic run: one seed, one ChaCha stream per
/// chunk.  Chunked results are reproducible bit-for-bit for a fixed
/// (seed, chunk count) regardless of how chunks are scheduled.
pub fn chunk_rng(seed: u64, chunk_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index);
    rng
}

/// Splits `count` into `chunks` near-equal parts (first parts get the
/// remainder).  Requires chunks ≥ 1.
pub fn chunk_sizes(count: usize, chunks: usize) -> Result<Vec<usize>> {
    if chunks == 0 {
        return Err(Error::InvalidArgument("chunk count must be at least 1".into()));
    }
    let base = count / chunks;
    let remainder = count % chunks;
    Ok((0..chunks).map(|i| base + usize::from(i < remainder)).collect())
}

/// One point uniform on Sⁿ ⊂ ℝ^{n+1}, by normalizing a standard normal draw.
pub fn uniform_sphere_point<F: SampleReal>(n: usize, rng: &mut impl Rng) -> AmbientPoint<F> {
    assert!(n >= 1, "sphere dimension must be at least 1");
    loop {
        let g: Vec<F> = (0..n + 1).map(|_| F::std_normal(rng)).collect();
        let norm = linalg::norm(&g);
        if norm > F::of(1e-12) {
            let coords = g.into_iter().map(|v| v / norm).collect();
            return AmbientPoint::new(coords).expect("normalized draw is finite");
        }
    }
}

/// `count` ≥ 1 points uniform on Sⁿ, deterministic in `seed`.
pub fn sample_uniform_sphere<F: SampleReal>(
    n: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<AmbientPoint<F>>> {
    if count == 0 {
        return Err(Error::EmptyInput("sample count must be at least 1"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| uniform_sphere_point(n, &mut rng)).collect())
}

/// Histogram of chart radii ‖u‖ normalized as a density with respect to
/// n-dimensional chart volume, so it is directly comparable to radial density
/// curves such as [`analytic_projected_uniform`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<F> {
    bin_edges: Vec<F>,
    counts: Vec<u64>,
    density: Vec<F>,
    total_samples: u64,
    dim: usize,
}

fn check_bin_edges<F: Real>(bin_edges: &[F]) -> Result<()> {
    if bin_edges.len() < 2 {
        return Err(Error::EmptyInput("need at least two bin edges"));
    }
    for (i, e) in bin_edges.iter().enumerate() {
        if !e.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
    }
    if !(bin_edges[0] >= F::zero()) {
        return Err(Error::InvalidArgument("bin edges must be non-negative".into()));
    }
    for pair in bin_edges.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidArgument("bin edges must be strictly increasing".into()));
        }
    }
    Ok(())
}

impl<F: Real> RadialProfile<F> {
    fn from_counts(bin_edges: Vec<F>, counts: Vec<u64>, total_samples: u64, dim: usize) -> Self {
        let density = bin_edges
            .windows(2)
            .zip(&counts)
            .map(|(edges, &c)| {
                if total_samples == 0 {
                    return F::zero();
                }
                let shell = ball_volume(dim, edges[1]) - ball_volume(dim, edges[0]);
                F::of(c as f64) / (F::of(total_samples as f64) * shell)
            })
            .collect();
        Self { bin_edges, counts, density, total_samples, dim }
    }

    pub fn bin_edges(&self) -> &[F] {
        &self.bin_edges
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Per-bin density with respect to chart volume.
    pub fn density(&self) -> &[F] {
        &self.density
    }

    /// All samples seen, including those outside the bin range.
    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    /// Intrinsic dimension used for shell volumes.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bin_centers(&self) -> Vec<F> {
        self.bin_edges.windows(2).map(|e| (e[0] + e[1]) / F::of(2.0)).collect()
    }

    pub fn bin_widths(&self) -> Vec<F> {
        self.bin_edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    /// Fraction of samples that landed inside the bin range.
    pub fn fraction_in_range(&self) -> F {
        if self.total_samples == 0 {
            return F::zero();
        }
        let binned: u64 = self.counts.iter().sum();
        F::of(binned as f64) / F::of(self.total_samples as f64)
    }

    /// Combines two profiles over identical bins; counts and totals add.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.bin_edges != other.bin_edges {
            return Err(Error::InvalidArgument("profiles have different bin edges".into()));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Ok(Self::from_counts(
            self.bin_edges.clone(),
            counts,
            self.total_samples + other.total_samples,
            self.dim,
        ))
    }
}

/// Histogram of ‖u‖ over the given bins.  Samples outside the bin range are
/// not binned but still count toward the normalizing total, so per-bin
/// densities stay unbiased.  All points must share one dimension.
pub fn radial_profile<F: Real>(
    points: &[ChartPoint<F>],
    bin_edges: &[F],
) -> Result<RadialProfile<F>> {
    check_bin_edges(bin_edges)?;
    let Some(first) = points.first() else {
        return Err(Error::EmptyInput("radial profile needs at least one point"));
    };
    let dim = first.dim();
    let mut counts = vec![0u64; bin_edges.len() - 1];
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        bin_radius(linalg::norm(p.coords()), bin_edges, &mut counts);
    }
    Ok(RadialProfile::from_counts(bin_edges.to_vec(), counts, points.len() as u64, dim))
}

fn bin_radius<F: Real>(r: F, bin_edges: &[F], counts: &mut [u64]) {
    if r < bin_edges[0] || r > bin_edges[bin_edges.len() - 1] {
        return;
    }
    // Last bin is closed on the right.
    let mut lo = 0usize;
    let mut hi = bin_edges.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if r < bin_edges[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    counts[lo.min(counts.len() - 1)] += 1;
}

/// Radial chart density of the uniform distribution on Sⁿ:
/// p(u) = (1/Vol(Sⁿ)) (2/(1+r²))ⁿ at r = ‖u‖.
pub fn analytic_projected_uniform<F: Real>(n: usize, r: F) -> F {
    assert!(n >= 1, "sphere dimension must be at least 1");
    let scale = F::of(2.0).ln() - (r * r).ln_1p();
    (F::of(n as f64) * scale).exp() / sphere_surface_area(n)
}

/// The same projection computed as if the chart were the plain coordinate map
/// onto the first n ambient coordinates, i.e. with |det Ĵ| of that square
/// Jacobian in place of √det G: an extra factor |1−r²|/(1+r²).  This is the
/// wrong curve on purpose; it vanishes at r = 1 where the true profile does
/// not.
pub fn naive_projected_uniform<F: Real>(n: usize, r: F) -> F {
    let r_sq = r * r;
    analytic_projected_uniform(n, r) * (F::one() - r_sq).abs() / (F::one() + r_sq)
}

/// Empirical, analytic, and naive radial curves on a common grid of bin
/// centers.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTriple<F> {
    pub radii: Vec<F>,
    pub widths: Vec<F>,
    pub empirical: Vec<F>,
    pub analytic: Vec<F>,
    pub naive: Vec<F>,
}

impl<F: Real> CurveTriple<F> {
    /// ∫|empirical − analytic| dr over the grid.
    pub fn l1_analytic(&self) -> F {
        l1(&self.empirical, &self.analytic, &self.widths)
    }

    /// ∫|empirical − naive| dr over the grid.
    pub fn l1_naive(&self) -> F {
        l1(&self.empirical, &self.naive, &self.widths)
    }
}

fn l1<F: Real>(a: &[F], b: &[F], widths: &[F]) -> F {
    a.iter()
        .zip(b)
        .zip(widths)
        .map(|((&x, &y), &w)| (x - y).abs() * w)
        .sum()
}

/// Evaluates the analytic and naive curves at the profile's bin centers.
pub fn curve_triple<F: Real>(profile: &RadialProfile<F>) -> CurveTriple<F> {
    let radii = profile.bin_centers();
    let n = profile.dim();
    let analytic = radii.iter().map(|&r| analytic_projected_uniform(n, r)).collect();
    let naive = radii.iter().map(|&r| naive_projected_uniform(n, r)).collect();
    CurveTriple {
        radii,
        widths: profile.bin_widths(),
        empirical: profile.density().to_vec(),
        analytic,
        naive,
    }
}

fn require_sphere_chart<F: Real, C: Chart<F> + ?Sized>(chart: &C) -> Result<usize> {
    let n = chart.intrinsic_dim();
    if chart.ambient_dim() != n + 1 {
        return Err(Error::InvalidArgument(
            "this verification needs a sphere chart (ambient dim = intrinsic dim + 1)".into(),
        ));
    }
    Ok(n)
}

/// Draws `count` uniform points on the chart's sphere, maps them through
/// `chart.inverse`, and histograms the chart radii.  Draws that land within
/// the pole tolerance are rejected, counted, and redrawn.  Returns the profile
/// and the rejection count.  Deterministic in (seed, chunks).
pub fn projected_uniform_profile<F: SampleReal, C: Chart<F> + ?Sized>(
    chart: &C,
    seed: u64,
    count: usize,
    chunks: usize,
    bin_edges: &[F],
) -> Result<(RadialProfile<F>, u64)> {
    let n = require_sphere_chart(chart)?;
    check_bin_edges(bin_edges)?;
    if count == 0 {
        return Err(Error::EmptyInput("sample count must be at least 1"));
    }
    let mut counts = vec![0u64; bin_edges.len() - 1];
    let mut rejected = 0u64;
    for (chunk_index, chunk_count) in chunk_sizes(count, chunks)?.iter().enumerate() {
        let mut rng = chunk_rng(seed, chunk_index as u64);
        let mut accepted = 0usize;
        while accepted < *chunk_count {
            let x = uniform_sphere_point::<F>(n, &mut rng);
            match chart.inverse(&x) {
                Ok(u) => {
                    bin_radius(linalg::norm(u.coords()), bin_edges, &mut counts);
                    accepted += 1;
                }
                Err(Error::ChartSingularity { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok((RadialProfile::from_counts(bin_edges.to_vec(), counts, count as u64, n), rejected))
}

/// A Monte Carlo estimate of a model's total mass, with its standard error.
/// For a correctly normalized density the estimate is 1 within noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationEstimate<F> {
    pub estimate: F,
    pub std_error: F,
    pub sample_count: u64,
    /// Uniform proposals rejected for falling within the pole tolerance.
    pub rejected_near_pole: u64,
}

#[derive(Clone, Copy)]
struct MeanVar<F> {
    count: u64,
    mean: F,
    m2: F,
}

impl<F: Real> MeanVar<F> {
    fn new() -> Self {
        Self { count: 0, mean: F::zero(), m2: F::zero() }
    }

    fn push(&mut self, value: F) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean = self.mean + delta / F::of(self.count as f64);
        self.m2 = self.m2 + delta * (value - self.mean);
    }

    fn std_error(&self) -> F {
        if self.count < 2 {
            return F::infinity();
        }
        let n = F::of(self.count as f64);
        (self.m2 / (n - F::one()) / n).sqrt()
    }
}

/// Uniform-sphere importance estimate of ∫ f dx on Sⁿ for an arbitrary
/// manifold log density: Vol(Sⁿ)·mean f(xᵢ) over uniform draws.  Proposals
/// for which the closure fails with [`Error::ChartSingularity`] are rejected,
/// counted, and redrawn; other errors propagate.  Deterministic in
/// (seed, chunks).
pub fn importance_normalization_fn<F: SampleReal>(
    n: usize,
    mut log_density: impl FnMut(&AmbientPoint<F>) -> Result<F>,
    seed: u64,
    count: usize,
    chunks: usize,
) -> Result<NormalizationEstimate<F>> {
    if count == 0 {
        return Err(Error::EmptyInput("sample count must be at least 1"));
    }
    let sphere_vol = sphere_surface_area::<F>(n);
    let mut acc = MeanVar::new();
    let mut rejected = 0u64;
    for (chunk_index, chunk_count) in chunk_sizes(count, chunks)?.iter().enumerate() {
        let mut rng = chunk_rng(seed, chunk_index as u64);
        let mut accepted = 0usize;
        while accepted < *chunk_count {
            let x = uniform_sphere_point::<F>(n, &mut rng);
            match log_density(&x) {
                Ok(log_f) => {
                    acc.push(sphere_vol * log_f.exp());
                    accepted += 1;
                }
                Err(Error::ChartSingularity { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(NormalizationEstimate {
        estimate: acc.mean,
        std_error: acc.std_error(),
        sample_count: acc.count,
        rejected_near_pole: rejected,
    })
}

/// Estimates ∫ f dx for the model's manifold density f.
///
/// With an empty chain the density is evaluated pointwise and estimated by
/// importance sampling against the uniform sphere density
/// ([`importance_normalization_fn`]).
///
/// With a non-empty chain f cannot be evaluated pointwise, so the harmonic
/// identity E_f[1/f] = Vol(M) is used on the model's own samples:
/// mean(1/f(xᵢ))/Vol(Sⁿ).  This route assumes f > 0 everywhere on the sphere
/// (true for the standard normal base); for a compactly supported base it
/// estimates the relative volume of the support instead.
///
/// Deterministic in (seed, chunks).  Requires a sphere chart.
pub fn importance_normalization<F: SampleReal>(
    model: &ManifoldDensity<F>,
    seed: u64,
    count: usize,
    chunks: usize,
) -> Result<NormalizationEstimate<F>> {
    let n = require_sphere_chart(model.chart())?;
    if count == 0 {
        return Err(Error::EmptyInput("sample count must be at least 1"));
    }
    if model.chain().is_empty() {
        return importance_normalization_fn(n, |x| model.log_prob(x), seed, count, chunks);
    }
    let sphere_vol = sphere_surface_area::<F>(n);
    let mut acc = MeanVar::new();
    for (chunk_index, chunk_count) in chunk_sizes(count, chunks)?.iter().enumerate() {
        let mut rng = chunk_rng(seed, chunk_index as u64);
        for _ in 0..*chunk_count {
            let s = model.sample_one(&mut rng)?;
            acc.push((-s.log_density).exp() / sphere_vol);
        }
    }
    Ok(NormalizationEstimate {
        estimate: acc.mean,
        std_error: acc.std_error(),
        sample_count: acc.count,
        rejected_near_pole: 0,
    })
}

/// Vol(Sⁿ) by quadrature of the chart volume element: Surf(S^{n−1}) ∫ r^{n−1}
/// √det G(r) dr, integrated through [`Chart::metric_log_det`].
///
/// The integral over [0, r_max] is computed directly; the tail beyond r_max
/// maps exactly onto [0, 1/r_max] under the sphere isometry r ↦ 1/r, so no
/// truncation error is incurred.  Requires r_max > 0.
pub fn sphere_volume_quadrature<F: Real>(n: usize, r_max: F) -> Result<F> {
    if !(r_max > F::zero()) || !r_max.is_finite() {
        return Err(Error::InvalidArgument("r_max must be positive and finite".into()));
    }
    let chart = crate::charts::StereographicChart::new(n);
    let integrand = |r: F| {
        let mut coords = vec![F::zero(); n];
        coords[0] = r;
        let u = ChartPoint::new(coords).expect("finite radius");
        let metric = chart.metric_log_det(&u).expect("valid chart point");
        let radial = if n == 1 { F::one() } else { r.powi(n as i32 - 1) };
        metric.log_sqrt_det_g().exp() * radial
    };
    let tol = F::of(1e-12);
    let head = adaptive_simpson(&integrand, F::zero(), r_max, tol);
    let tail = adaptive_simpson(&integrand, F::zero(), r_max.recip(), tol);
    Ok(sphere_surface_area::<F>(n - 1) * (head + tail))
}
