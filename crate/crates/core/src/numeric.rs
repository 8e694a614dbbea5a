//! One-dimensional root finding, maximization and quadrature.

use crate::scalar::Real;

const MAX_BISECTIONS: usize = 400;

/// Finds a root of `f` on `[lo, hi]` by bisection.
///
/// Returns `None` when `f(lo)` and `f(hi)` have the same strict sign. Stops
/// once the bracket is narrower than `tol` or cannot shrink any further.
pub fn bisect<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> Option<T> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(lo);
    }
    if f_hi == T::zero() {
        return Some(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let two = T::lit(2.0);
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return Some(mid);
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + (hi - lo) / two)
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Ties between interior probes keep the upper sub-interval, so plateaus
/// resolve toward the higher argument.
pub fn golden_section_max<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        iters += 1;
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Dense scan of `f` at `n + 1` evenly spaced points on `[lo, hi]`.
///
/// Returns `(index, argument, value)` of the maximum; ties go to the larger
/// argument.
pub fn grid_argmax<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, n: usize) -> (usize, T, T) {
    let n_t = T::from_usize(n).unwrap();
    let mut best = (0, lo, T::neg_infinity());
    for i in 0..=n {
        let x = if i == n { hi } else { lo + (hi - lo) * T::from_usize(i).unwrap() / n_t };
        let fx = f(x);
        if fx >= best.2 {
            best = (i, x, fx);
        }
    }
    best
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if b <= a {
        return T::zero();
    }
    // Split into a few panels first so narrow features are not skipped.
    let panels = 16;
    let width = (b - a) / T::from_usize(panels).unwrap();
    let tol_panel = tol / T::from_usize(panels).unwrap();
    (0..panels)
        .map(|i| {
            let lo = a + width * T::from_usize(i).unwrap();
            let hi = if i + 1 == panels { b } else { lo + width };
            let mid = (lo + hi) / T::lit(2.0);
            let (f_lo, f_mid, f_hi) = (f(lo), f(mid), f(hi));
            let whole = simpson(lo, hi, f_lo, f_mid, f_hi);
            simpson_step(&f, lo, hi, f_lo, f_mid, f_hi, whole, tol_panel, 48)
        })
        .sum()
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol || m <= a || m >= b {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}
