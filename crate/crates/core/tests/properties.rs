//! Property tests for the chart, flow, and histogram invariants.

use manifold_density::charts::{
    metric_log_det_numeric, Chart, ChartPoint, ProductChart, StereographicChart,
};
use manifold_density::density::{pullback_log_density, pushforward_log_density};
use manifold_density::estimation::fd_gradient;
use manifold_density::flows::{chain_log_det_numeric_check, FlowChain, Layer, PlanarLayer, RadialLayer};
use manifold_density::mc_verify::{
    analytic_projected_uniform, naive_projected_uniform, radial_profile,
};
use manifold_density::num::ball_volume;
use proptest::prelude::*;

fn chart_point(coords: Vec<f64>) -> ChartPoint<f64> {
    ChartPoint::new(coords).unwrap()
}

fn coords(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n..=n)
}

proptest! {
    #[test]
    fn round_trip_recovers_chart_coordinates(
        n in 1usize..=5,
        raw in prop::collection::vec(-40.0..40.0f64, 5),
    ) {
        let chart = StereographicChart::new(n);
        let u = chart_point(raw[..n].to_vec());
        let x = chart.forward(&u).unwrap();
        let back = chart.inverse(&x).unwrap();
        for (a, b) in back.coords().iter().zip(u.coords()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn forward_lands_on_the_unit_sphere(
        n in 1usize..=5,
        raw in prop::collection::vec(-100.0..100.0f64, 5),
    ) {
        let chart = StereographicChart::new(n);
        let x = chart.forward(&chart_point(raw[..n].to_vec())).unwrap();
        let norm: f64 = x.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn metric_determinant_is_positive_and_finite(
        n in 1usize..=5,
        raw in prop::collection::vec(-1000.0..1000.0f64, 5),
    ) {
        let chart = StereographicChart::new(n);
        let metric = chart.metric_log_det(&chart_point(raw[..n].to_vec())).unwrap();
        prop_assert!(metric.log_det_g().is_finite());
        prop_assert!(metric.det_g() > 0.0);
    }

    #[test]
    fn metric_matches_finite_differences(
        n in 1usize..=3,
        raw in prop::collection::vec(-10.0..10.0f64, 3),
    ) {
        let chart = StereographicChart::new(n);
        let u = chart_point(raw[..n].to_vec());
        let analytic = chart.metric_log_det(&u).unwrap();
        let numeric = metric_log_det_numeric(&chart, &u).unwrap();
        let rel = ((numeric.log_det_g() - analytic.log_det_g()).exp() - 1.0).abs();
        prop_assert!(rel <= 1e-5);
    }

    #[test]
    fn torus_metric_is_the_sum_of_circle_metrics(
        k in 2usize..=3,
        raw in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        let torus = ProductChart::<f64>::torus(k).unwrap();
        let u = chart_point(raw[..k].to_vec());
        let combined = torus.metric_log_det(&u).unwrap().log_det_g();
        let circle = StereographicChart::new(1);
        let per_part: f64 = raw[..k]
            .iter()
            .map(|&c| circle.metric_log_det(&chart_point(vec![c])).unwrap().log_det_g())
            .sum();
        prop_assert!((combined - per_part).abs() <= 1e-12);
    }

    #[test]
    fn planar_reparameterization_invariant_holds(
        n in 1usize..=4,
        w in prop::collection::vec(-8.0..8.0f64, 4),
        u_raw in prop::collection::vec(-8.0..8.0f64, 4),
        b in -3.0..3.0f64,
    ) {
        prop_assume!(w[..n].iter().any(|&v| v != 0.0));
        let layer = PlanarLayer::new(w[..n].to_vec(), u_raw[..n].to_vec(), b).unwrap();
        prop_assert!(layer.one_plus_w_dot_u_hat() > 0.0);
        prop_assert!(layer.w_dot_u_hat() >= -1.0);
        // The subtraction stays off the boundary while softplus(wᵀu_raw)
        // exceeds half an ulp of 1.
        let a: f64 = w[..n].iter().zip(&u_raw[..n]).map(|(x, y)| x * y).sum();
        if a > -36.0 {
            prop_assert!(layer.w_dot_u_hat() > -1.0);
        }
        prop_assert!(layer.u_hat().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn planar_log_det_matches_finite_differences(
        n in 1usize..=4,
        w in prop::collection::vec(-3.0..3.0f64, 4),
        u_raw in prop::collection::vec(-3.0..3.0f64, 4),
        b in -3.0..3.0f64,
        z in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        prop_assume!(w[..n].iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let layer = PlanarLayer::new(w[..n].to_vec(), u_raw[..n].to_vec(), b).unwrap();
        let chain = FlowChain::new(vec![Layer::Planar(layer)]).unwrap();
        let (_, analytic) = chain.forward(&z[..n]).unwrap();
        let numeric = chain_log_det_numeric_check(&chain, &z[..n]).unwrap();
        prop_assert!((analytic - numeric).abs() <= 1e-5);
    }

    #[test]
    fn radial_reparameterization_invariant_holds(
        n in 1usize..=4,
        z0 in prop::collection::vec(-5.0..5.0f64, 4),
        alpha_raw in -30.0..10.0f64,
        beta_raw in -30.0..10.0f64,
    ) {
        let layer = RadialLayer::new(z0[..n].to_vec(), alpha_raw, beta_raw).unwrap();
        prop_assert!(layer.alpha() > 0.0);
        prop_assert!(layer.alpha_plus_beta() > 0.0);
        prop_assert!(layer.beta() >= -layer.alpha());
    }

    #[test]
    fn radial_with_equal_raw_parameters_is_the_identity(
        n in 1usize..=4,
        z0 in prop::collection::vec(-5.0..5.0f64, 4),
        raw in -20.0..20.0f64,
        z in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        let layer = RadialLayer::new(z0[..n].to_vec(), raw, raw).unwrap();
        prop_assert_eq!(layer.beta(), 0.0);
        let (out, log_det) = layer.forward(&z[..n]).unwrap();
        prop_assert_eq!(out, z[..n].to_vec());
        prop_assert_eq!(log_det, 0.0);
    }

    #[test]
    fn radial_log_det_matches_finite_differences(
        n in 1usize..=4,
        z0 in prop::collection::vec(-3.0..3.0f64, 4),
        alpha_raw in -6.0..6.0f64,
        beta_raw in -6.0..6.0f64,
        z in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        let diff: f64 = z[..n].iter().zip(&z0[..n]).map(|(a, b)| (a - b) * (a - b)).sum();
        // The finite-difference stencil must not straddle the |z − z0| kink.
        prop_assume!(diff.sqrt() > 1e-3);
        let layer = RadialLayer::new(z0[..n].to_vec(), alpha_raw, beta_raw).unwrap();
        let chain = FlowChain::new(vec![Layer::Radial(layer)]).unwrap();
        let (_, analytic) = chain.forward(&z[..n]).unwrap();
        let numeric = chain_log_det_numeric_check(&chain, &z[..n]).unwrap();
        prop_assert!((analytic - numeric).abs() <= 1e-5);
    }

    #[test]
    fn chain_log_det_is_the_sum_over_layers(
        z0 in prop::collection::vec(-3.0..3.0f64, 2),
        alpha_raw in -4.0..4.0f64,
        beta_raw in -4.0..4.0f64,
        w in prop::collection::vec(-3.0..3.0f64, 2),
        u_raw in prop::collection::vec(-3.0..3.0f64, 2),
        b in -3.0..3.0f64,
        z in prop::collection::vec(-5.0..5.0f64, 2),
    ) {
        prop_assume!(w.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let radial = RadialLayer::new(z0, alpha_raw, beta_raw).unwrap();
        let planar = PlanarLayer::new(w, u_raw, b).unwrap();
        let (mid, first) = radial.forward(&z).unwrap();
        let (end, second) = planar.forward(&mid).unwrap();
        let chain = FlowChain::new(vec![
            Layer::Radial(radial),
            Layer::Planar(planar),
        ])
        .unwrap();
        let (out, total) = chain.forward(&z).unwrap();
        prop_assert_eq!(out, end);
        prop_assert_eq!(total, first + second);
    }

    #[test]
    fn pushforward_then_pullback_recovers_the_density(
        a in -1.0..0.0f64,
        b in -2.0..2.0f64,
        raw in prop::collection::vec(-5.0..5.0f64, 2),
    ) {
        let chart = StereographicChart::new(2);
        let log_p = |u: &[f64]| a * u.iter().map(|v| v * v).sum::<f64>() + b;
        let u = chart_point(raw);
        let x = chart.forward(&u).unwrap();
        let log_f = pushforward_log_density(&chart, log_p, &x).unwrap();
        let back = pullback_log_density(&chart, |_| log_f, &u).unwrap();
        prop_assert!((back - log_p(u.coords())).abs() <= 1e-10);
    }

    #[test]
    fn naive_curve_sits_below_the_analytic_curve(
        n in 1usize..=3,
        r in 1e-3..10.0f64,
    ) {
        prop_assert!(naive_projected_uniform(n, r) < analytic_projected_uniform(n, r));
    }

    #[test]
    fn profile_density_mass_matches_the_in_range_fraction(
        pts in prop::collection::vec(coords(2, -10.0, 10.0), 1..200),
        mut cuts in prop::collection::vec(0.01..12.0f64, 2..8),
    ) {
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        cuts.insert(0, 0.0);
        prop_assume!(cuts.len() >= 2);
        let points: Vec<_> = pts.into_iter().map(chart_point).collect();
        let profile = radial_profile(&points, &cuts).unwrap();
        prop_assert!(profile.density().iter().all(|&d| d >= 0.0));
        let in_range: u64 = profile.counts().iter().sum();
        prop_assert!(in_range <= profile.total_samples());
        let mass: f64 = profile
            .density()
            .iter()
            .enumerate()
            .map(|(bin, d)| {
                let shell = ball_volume(2, cuts[bin + 1]) - ball_volume(2, cuts[bin]);
                d * shell
            })
            .sum();
        prop_assert!((mass - profile.fraction_in_range()).abs() <= 1e-12);
    }

    #[test]
    fn profile_merge_is_order_independent(
        pts in prop::collection::vec(coords(1, -6.0, 6.0), 2..120),
        split in 1usize..119,
    ) {
        prop_assume!(split < pts.len());
        let points: Vec<_> = pts.into_iter().map(chart_point).collect();
        let edges = [0.0, 0.5, 1.0, 2.0, 4.0];
        let (left, right) = points.split_at(split);
        let a = radial_profile(left, &edges).unwrap();
        let b = radial_profile(right, &edges).unwrap();
        let whole = radial_profile(&points, &edges).unwrap();
        prop_assert_eq!(a.merge(&b).unwrap(), whole.clone());
        prop_assert_eq!(b.merge(&a).unwrap(), whole);
    }

    #[test]
    fn fd_gradient_is_exact_on_linear_functions(
        coeffs in prop::collection::vec(-5.0..5.0f64, 1..6),
        point in prop::collection::vec(-5.0..5.0f64, 6),
    ) {
        let k = coeffs.len();
        let f = |p: &[f64]| Ok(p.iter().zip(&coeffs).map(|(x, c)| x * c).sum::<f64>());
        let grad = fd_gradient(f, &point[..k], 1e-4).unwrap();
        for (g, c) in grad.iter().zip(&coeffs) {
            prop_assert!((g - c).abs() <= 1e-9);
        }
    }
}
