//! One-dimensional adaptive quadrature (Gauss–Kronrod 7/15) and the
//! asymptotic tail integrals needed to close slowly decaying oscillatory
//! integrands on unbounded domains.

use crate::error::{CoreError, Result};

// Kronrod 15-point nodes on [0,1) side of [-1,1]; node 7 is the origin.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
// 7-point Gauss weights, paired with XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss–Kronrod 7/15 panel: returns (integral, error estimate).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Bisection-based with error-proportional budgeting; fails loudly (with
/// the achieved error estimate) instead of returning a silently bad value.
pub fn adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(CoreError::Quadrature(format!(
            "non-finite interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 200_000;
    let total_width = (b - a).abs();
    // stack of (a, b, integral, err) panels to refine
    let (i0, e0) = gk15(f, a, b);
    let mut stack = vec![(a, b, i0, e0)];
    let mut done_sum = 0.0;
    let mut done_err = 0.0;
    let mut panels = 1usize;
    while let Some((pa, pb, pi, pe)) = stack.pop() {
        let budget = tol * ((pb - pa).abs() / total_width).max(1e-300);
        let width_floor = (pb - pa).abs() <= total_width * 1e-14;
        if pe <= budget || width_floor {
            done_sum += pi;
            done_err += pe;
            continue;
        }
        if panels >= MAX_PANELS {
            return Err(CoreError::Quadrature(format!(
                "panel budget exhausted (error estimate {:.3e} > tol {:.3e})",
                pe, tol
            )));
        }
        let mid = 0.5 * (pa + pb);
        let (il, el) = gk15(f, pa, mid);
        let (ir, er) = gk15(f, mid, pb);
        panels += 2;
        stack.push((pa, mid, il, el));
        stack.push((mid, pb, ir, er));
    }
    if done_err > tol.max(1e-15) * 10.0 {
        return Err(CoreError::Quadrature(format!(
            "accumulated error estimate {:.3e} exceeds tolerance {:.3e}",
            done_err, tol
        )));
    }
    Ok(done_sum)
}

/// `∫_a^∞ cos(t) t^{-alpha} dt` by the integration-by-parts asymptotic
/// series. Valid for `alpha > 0` and `a` well past the last stationary
/// region; with `a ≳ 50` and 10 levels the truncation error is below
/// `1e-12` in absolute terms for `alpha ≤ 4`.
pub fn cos_tail(a: f64, alpha: f64) -> f64 {
    fn cos_part(a: f64, alpha: f64, depth: usize) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        -a.sin() * a.powf(-alpha) + alpha * sin_part(a, alpha + 1.0, depth - 1)
    }
    fn sin_part(a: f64, beta: f64, depth: usize) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        a.cos() * a.powf(-beta) - beta * cos_part(a, beta + 1.0, depth - 1)
    }
    cos_part(a, alpha, 10)
}

/// `∫_a^∞ (1 - cos t) t^{-1-two_s} dt` for `two_s > 0`: power-law part in
/// closed form, oscillatory part via `cos_tail`.
pub fn one_minus_cos_tail(a: f64, two_s: f64) -> f64 {
    a.powf(-two_s) / two_s - cos_tail(a, 1.0 + two_s)
}

/// Sum an eventually alternating, decaying sequence of panel integrals by
/// repeated averaging of partial sums (Euler/van Wijngaarden transform).
pub fn alternating_sum(terms: &[f64]) -> f64 {
    assert!(!terms.is_empty());
    let mut rows: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    while rows.len() > 1 {
        rows = rows.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    rows[0]
}
