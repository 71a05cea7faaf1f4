//! Reference values for the viscous Burgers Riemann solution obtained by
//! direct quadrature of the heat-kernel representation
//!
//! `w(x,t) = ∫ (x-y)/t e^{-G} dy / ∫ e^{-G} dy`,
//! `G(y) = (x-y)^2/(4t) + W0(y)/2`, `W0(y) = ∫_0^y w0`.
//!
//! Shares no code with [`crate::hopf_cole`].

use crate::error::{Error, Result};

const TAIL_WIDTHS: f64 = 40.0;
const MAX_DEPTH: usize = 48;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Start from a few panels so narrow peaks are not missed.
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == panels { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, fa, fm, fb);
            adapt(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, MAX_DEPTH)
        })
        .sum()
}

/// Viscous Burgers solution from Riemann data `(w_minus, w_plus)` at `x`, `t > 0`.
pub fn burgers_riemann_quadrature(w_minus: f64, w_plus: f64, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("oracle needs t > 0, got ({x}, {t})")));
    }
    let exponent = |y: f64| {
        let slope = if y < 0.0 { w_minus } else { w_plus };
        (x - y) * (x - y) / (4.0 * t) + 0.5 * slope * y
    };
    // Minimisers of each quadratic piece, clamped to its half-line.
    let left_peak = (x - w_minus * t).min(0.0);
    let right_peak = (x - w_plus * t).max(0.0);
    let shift = exponent(left_peak).min(exponent(right_peak));
    let spread = TAIL_WIDTHS * t.sqrt();
    let weight = |y: f64| (-(exponent(y) - shift)).exp();
    let moment = |y: f64| (x - y) / t * weight(y);
    let tol = 1e-14 * t.sqrt();
    let mut den = 0.0;
    let mut num = 0.0;
    for (a, b) in [(left_peak - spread, 0.0), (0.0, right_peak + spread)] {
        den += adaptive_simpson(&weight, a, b, tol);
        num += adaptive_simpson(&moment, a, b, tol);
    }
    Ok(num / den)
}
