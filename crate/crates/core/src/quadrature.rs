//! One-dimensional quadrature used by volume checks and normalization tests.

use crate::num::Real;

/// Composite trapezoid rule with `intervals` uniform intervals.
pub fn trapezoid<F: Real>(f: impl Fn(F) -> F, a: F, b: F, intervals: usize) -> F {
    assert!(intervals >= 1);
    let n = F::of(intervals as f64);
    let h = (b - a) / n;
    let mut sum = (f(a) + f(b)) / F::of(2.0);
    for i in 1..intervals {
        sum = sum + f(a + h * F::of(i as f64));
    }
    sum * h
}

/// Adaptive Simpson quadrature with Richardson correction.
/// `tol` is an absolute tolerance on the result.
pub fn adaptive_simpson<F: Real>(f: impl Fn(F) -> F, a: F, b: F, tol: F) -> F {
    let two = F::of(2.0);
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) / two;
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    refine(&f, a, m, b, fa, fm, fb, whole, tol, 48)
}

fn simpson_rule<F: Real>(a: F, b: F, fa: F, fm: F, fb: F) -> F {
    (b - a) / F::of(6.0) * (fa + F::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Real>(
    f: &impl Fn(F) -> F,
    a: F,
    m: F,
    b: F,
    fa: F,
    fm: F,
    fb: F,
    whole: F,
    tol: F,
    depth: u32,
) -> F {
    let two = F::of(2.0);
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= F::of(15.0) * tol {
        left + right + delta / F::of(15.0)
    } else {
        let half = tol / two;
        refine(f, a, lm, m, fa, flm, fm, left, half, depth - 1)
            + refine(f, m, rm, b, fm, frm, fb, right, half, depth - 1)
    }
}
