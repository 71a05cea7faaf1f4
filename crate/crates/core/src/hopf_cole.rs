//! Closed-form viscous Burgers Riemann solution.
//!
//! `w_t + w w_x = w_xx` with step data `w-` (x < 0), `w+` (x > 0). Through
//! `w = -2 phi_x / phi` with `phi` solving the heat equation,
//!
//! ```text
//! phi = A + B,
//! A = exp(-w- x/2 + w-^2 t/4) erfc(eta-)/2,   eta- = (x - w- t) / (2 sqrt t),
//! B = exp(-w+ x/2 + w+^2 t/4) erfc(-eta+)/2,  eta+ = (x - w+ t) / (2 sqrt t),
//! w = w- + (w+ - w-) theta,  theta = B / (A + B) = 1 / (1 + e^s),
//! s = ln(A/B) = (w+ - w-)(x - (w- + w+) t/2)/2 + ln erfc(eta-) - ln erfc(-eta+).
//! ```
//!
//! With `gamma` the heat kernel at `x` and `rho = gamma / (A + B)` the pair
//! `(theta, rho)` obeys the closed system
//!
//! ```text
//! theta_x = -(dw/2) theta (1 - theta) + rho,   rho_x = rho (w/2 - x/(2t)),
//! ```
//!
//! which yields every x-derivative by a Taylor recurrence. Time derivatives
//! follow by substituting `w_t = w_xx - w w_x` repeatedly.

use crate::error::{Error, Result};
use crate::jet::{factorial, Jet2, Series, JET_ORDER};
use crate::special::{gauss_over_erfc, ln_erfc, softplus};

const X_ORDER: usize = 2 * JET_ORDER;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfCole {
    pub w_minus: f64,
    pub w_plus: f64,
}

struct Core {
    s: f64,
    theta: f64,
    one_minus_theta: f64,
    gamma_over_a: f64,
    gamma_over_b: f64,
}

impl HopfCole {
    pub fn new(w_minus: f64, w_plus: f64) -> Result<Self> {
        if !(w_minus < w_plus) || !w_minus.is_finite() || !w_plus.is_finite() {
            return Err(Error::Domain(format!(
                "Hopf-Cole data needs finite w- < w+, got ({w_minus}, {w_plus})"
            )));
        }
        Ok(Self { w_minus, w_plus })
    }

    fn jump(&self) -> f64 {
        self.w_plus - self.w_minus
    }

    fn core(&self, x: f64, t: f64) -> Core {
        let d = self.jump();
        let sqt = t.sqrt();
        let eta_m = (x - self.w_minus * t) / (2.0 * sqt);
        let eta_p = (x - self.w_plus * t) / (2.0 * sqt);
        let e = 0.5 * d * (x - 0.5 * (self.w_minus + self.w_plus) * t);
        let s = e + ln_erfc(eta_m) - ln_erfc(-eta_p);
        let norm = (std::f64::consts::PI * t).sqrt();
        Core {
            s,
            theta: (-softplus(s)).exp(),
            one_minus_theta: (-softplus(-s)).exp(),
            gamma_over_a: gauss_over_erfc(eta_m) / norm,
            gamma_over_b: gauss_over_erfc(-eta_p) / norm,
        }
    }

    fn step_value(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.w_minus
        } else if x > 0.0 {
            self.w_plus
        } else {
            0.5 * (self.w_minus + self.w_plus)
        }
    }

    /// `w(x, t)`; at `t = 0` the step data.
    pub fn value(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return self.step_value(x);
        }
        let c = self.core(x, t);
        self.w_minus + self.jump() * c.theta
    }

    /// Natural log of `w_x`, finite far beyond the range where `w_x` underflows;
    /// NaN would signal a wrong sign.
    pub fn ln_wx(&self, x: f64, t: f64) -> f64 {
        let c = self.core(x, t);
        let bracket = c.gamma_over_a + c.gamma_over_b - 0.5 * self.jump();
        self.jump().ln() - softplus(c.s) - softplus(-c.s) + bracket.ln()
    }

    /// Taylor coefficients in `x` of `w` at `(x, t)` up to order `2 * JET_ORDER`.
    fn x_series(&self, x: f64, t: f64) -> Series {
        let d = self.jump();
        let c = self.core(x, t);
        let n = X_ORDER;
        let mut th = vec![0.0; n + 1];
        let mut rho = vec![0.0; n + 1];
        let mut sig = vec![0.0; n + 1];
        th[0] = c.theta;
        th[1] = c.theta * c.one_minus_theta * (c.gamma_over_a + c.gamma_over_b - 0.5 * d);
        rho[0] = c.theta * c.gamma_over_b;
        sig[0] = 0.5 * (self.w_minus + d * th[0]) - x / (2.0 * t);
        sig[1] = 0.5 * d * th[1] - 1.0 / (2.0 * t);
        for m in 0..n {
            let conv: f64 = (0..=m).map(|j| rho[j] * sig[m - j]).sum();
            rho[m + 1] = conv / (m + 1) as f64;
            if m >= 1 {
                let sq: f64 = (0..=m).map(|j| th[j] * th[m - j]).sum();
                th[m + 1] = (-0.5 * d * (th[m] - sq) + rho[m]) / (m + 1) as f64;
                if m + 1 >= 2 {
                    sig[m + 1] = 0.5 * d * th[m + 1];
                }
            }
        }
        let mut w: Vec<f64> = th.iter().map(|v| d * v).collect();
        w[0] = self.w_minus + d * c.theta;
        Series(w)
    }

    /// All partial derivatives `d^k_x d^l_t w`, `k + l <= JET_ORDER`, at `(x, t)`, `t > 0`.
    pub fn jet(&self, x: f64, t: f64) -> Result<Jet2> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "derivatives of the Burgers solution need t > 0, got t = {t}"
            )));
        }
        // time derivatives as x-series: J_{l+1} = D^2 J_l - sum_m C(l,m) J_m D J_{l-m}
        let mut jl: Vec<Series> = vec![self.x_series(x, t)];
        for l in 0..JET_ORDER {
            let mut next = jl[l].deriv().deriv();
            for m in 0..=l {
                let binom = factorial(l) / (factorial(m) * factorial(l - m));
                let prod = jl[m].mul(&jl[l - m].deriv()).scale(binom);
                next = next.sub(&prod);
            }
            jl.push(next);
        }
        Ok(Jet2::from_partials(|k, l| jl[l].derivative(k)))
    }

    /// `d^k_x d^l_t w(x, t)`.
    pub fn derivative(&self, x: f64, t: f64, k: usize, l: usize) -> Result<f64> {
        if k + l > JET_ORDER {
            return Err(Error::UnsupportedOrder {
                k,
                l,
                max: JET_ORDER,
            });
        }
        if k + l == 0 {
            return Ok(self.value(x, t));
        }
        Ok(self.jet(x, t)?.partial(k, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_vanishes_at_origin() {
        let hc = HopfCole::new(-1.0, 1.0).unwrap();
        for &t in &[0.01, 0.5, 3.0, 100.0, 1e4] {
            assert!(hc.value(0.0, t).abs() < 1e-15, "t = {t}");
        }
    }

    #[test]
    fn far_field_states() {
        let hc = HopfCole::new(0.1, 0.7).unwrap();
        assert!((hc.value(500.0, 2.0) - 0.7).abs() < 1e-15);
        assert!((hc.value(-500.0, 2.0) - 0.1).abs() < 1e-15);
        assert!((hc.value(1e6, 1e3) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn step_at_time_zero() {
        let hc = HopfCole::new(0.0, 1.0).unwrap();
        assert_eq!(hc.value(-1.0, 0.0), 0.0);
        assert_eq!(hc.value(1.0, 0.0), 1.0);
        assert!(hc.jet(1.0, 0.0).is_err());
    }

    #[test]
    fn order_limit() {
        let hc = HopfCole::new(0.0, 1.0).unwrap();
        assert!(matches!(
            hc.derivative(1.0, 1.0, 3, 2),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn no_nan_in_extreme_regimes() {
        let hc = HopfCole::new(0.1, 0.3).unwrap();
        for &(x, t) in &[(2000.0, 1.0), (0.0, 1e5), (1e4, 1e-3), (-1e4, 0.5), (3.0, 1e-12)] {
            let j = hc.jet(x, t).unwrap();
            for k in 0..=JET_ORDER {
                for l in 0..=JET_ORDER - k {
                    assert!(j.partial(k, l).is_finite(), "({x},{t}) k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn x_derivatives_match_finite_differences() {
        let hc = HopfCole::new(0.2, 1.1).unwrap();
        let (x, t) = (1.3, 2.0);
        let j = hc.jet(x, t).unwrap();
        let h = 1e-3;
        let f = |x: f64| hc.value(x, t);
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!((j.partial(1, 0) - d1).abs() < 1e-6);
        assert!((j.partial(2, 0) - d2).abs() < 1e-5);
        let g = |t: f64| hc.value(x, t);
        let dt = (g(t + h) - g(t - h)) / (2.0 * h);
        assert!((j.partial(0, 1) - dt).abs() < 1e-6);
    }

    #[test]
    fn satisfies_burgers_pointwise() {
        let hc = HopfCole::new(0.1, 0.9).unwrap();
        for &(x, t) in &[(0.0, 0.3), (2.0, 1.0), (5.0, 10.0), (40.0, 100.0), (90.0, 100.0)] {
            let j = hc.jet(x, t).unwrap();
            let r = j.partial(0, 1) + j.value() * j.partial(1, 0) - j.partial(2, 0);
            assert!(r.abs() < 1e-12, "({x},{t}) residual {r}");
        }
    }

    #[test]
    fn wx_is_positive_in_log_domain() {
        let hc = HopfCole::new(0.1, 0.3).unwrap();
        for i in 0..400 {
            let x = -500.0 + 5.0 * i as f64;
            let v = hc.ln_wx(x, 7.0);
            assert!(v.is_finite(), "x = {x}");
        }
    }

    #[test]
    fn ln_wx_agrees_with_jet() {
        let hc = HopfCole::new(0.1, 0.9).unwrap();
        for &(x, t) in &[(0.0, 1.0), (3.0, 4.0), (-2.0, 0.5), (30.0, 20.0)] {
            let wx = hc.jet(x, t).unwrap().partial(1, 0);
            assert!((hc.ln_wx(x, t) - wx.ln()).abs() < 1e-12, "({x},{t})");
        }
    }
}
