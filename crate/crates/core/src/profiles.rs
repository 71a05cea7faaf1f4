//! Rarefaction profiles: the exact fan `r`, the Burgers-smoothed profile
//! `w = (f')^{-1}(w_tilde)`, its boundary-corrected version `(u_tilde, q_tilde)`
//! and the residual forcings `R1`, `R2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{fit_power_law, least_squares, lp_norm, Band};
use crate::error::{Error, Result};
use crate::flux::{inverse_fprime, FluxPair, Regime, RiemannData};
use crate::grid::HalfLineGrid;
use crate::hopf_cole::HopfCole;
use crate::jet::{factorial, Jet2, JET_ORDER};

/// Derivative pairs `(k, l)` with `k + l <= 4`, in storage order.
pub fn derivative_pairs() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 0..=JET_ORDER {
        for l in 0..=total {
            out.push((total - l, l));
        }
    }
    out
}

/// Exact entropy solution of the Riemann problem.
pub fn exact_rarefaction(flux: &FluxPair, data: &RiemannData, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("rarefaction needs t > 0, got {t}")));
    }
    let (lo, hi) = (flux.fp(data.u_minus), flux.fp(data.u_plus));
    let xi = x / t;
    if xi <= lo {
        Ok(data.u_minus)
    } else if xi >= hi {
        Ok(data.u_plus)
    } else {
        inverse_fprime(flux, xi, (data.u_minus, data.u_plus))
    }
}

/// Boundary-layer amplitudes: `u_hat = gap e^{-x}`, `q_hat = curvature e^{-x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCorrection {
    /// `w(0,t) - u-`.
    pub gap: f64,
    pub gap_t: f64,
    /// `w_xx(0,t)`.
    pub curvature: f64,
    pub curvature_t: f64,
}

impl BoundaryCorrection {
    fn zero() -> Self {
        Self {
            gap: 0.0,
            gap_t: 0.0,
            curvature: 0.0,
            curvature_t: 0.0,
        }
    }
}

/// Everything the profile provides at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub r: f64,
    pub w_tilde: Jet2,
    pub w: Jet2,
    pub u_hat: f64,
    pub q_hat: f64,
    pub u_tilde: f64,
    pub u_tilde_x: f64,
    pub q_tilde: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Point evaluator for the smoothed profile of one Riemann problem.
#[derive(Debug, Clone)]
pub struct SmoothProfile {
    flux: FluxPair,
    data: RiemannData,
    burgers: HopfCole,
    bracket: (f64, f64),
}

impl SmoothProfile {
    pub fn new(flux: &FluxPair, data: &RiemannData) -> Result<Self> {
        let (w_minus, w_plus) = data.velocity_states(flux);
        Ok(Self {
            flux: flux.clone(),
            data: *data,
            burgers: HopfCole::new(w_minus, w_plus)?,
            bracket: data.state_bracket(flux),
        })
    }

    pub fn flux(&self) -> &FluxPair {
        &self.flux
    }

    pub fn data(&self) -> &RiemannData {
        &self.data
    }

    pub fn burgers(&self) -> &HopfCole {
        &self.burgers
    }

    fn invert(&self, xi: f64) -> Result<f64> {
        inverse_fprime(&self.flux, xi, self.bracket)
    }

    /// `w(x, t)`; `t = 0` gives the smoothed problem's step data.
    pub fn w(&self, x: f64, t: f64) -> Result<f64> {
        self.invert(self.burgers.value(x, t))
    }

    /// `ln w_x`, finite wherever `w_x > 0` even when `w_x` itself underflows.
    pub fn ln_wx(&self, x: f64, t: f64) -> Result<f64> {
        let w = self.w(x, t)?;
        Ok(self.burgers.ln_wx(x, t) - self.flux.fpp(w).ln())
    }

    pub fn w_tilde_jet(&self, x: f64, t: f64) -> Result<Jet2> {
        self.burgers.jet(x, t)
    }

    /// Jet of `w` by composing the Burgers jet with the Taylor expansion of
    /// `(f')^{-1}` about `w_tilde(x, t)`.
    pub fn w_jet(&self, x: f64, t: f64) -> Result<Jet2> {
        let wt = self.burgers.jet(x, t)?;
        Ok(self.compose_inverse(&wt)?.1)
    }

    fn compose_inverse(&self, wt: &Jet2) -> Result<(Jet2, Jet2)> {
        let w0 = self.invert(wt.value())?;
        let [_, _, f2, f3, f4] = self.flux.f_derivs(w0);
        let f5 = self.flux.f_deriv(5, w0);
        let h = [
            w0,
            1.0 / f2,
            -f3 / f2.powi(3),
            (3.0 * f3 * f3 - f2 * f4) / f2.powi(5),
            (-f2 * f2 * f5 + 10.0 * f2 * f3 * f4 - 15.0 * f3.powi(3)) / f2.powi(7),
        ];
        let mut taylor = [0.0; JET_ORDER + 1];
        for (m, v) in h.iter().enumerate() {
            taylor[m] = v / factorial(m);
        }
        Ok((*wt, wt.compose(&taylor)))
    }

    pub fn boundary_correction(&self, t: f64) -> Result<BoundaryCorrection> {
        if self.data.regime == Regime::FprimeZero {
            return Ok(BoundaryCorrection::zero());
        }
        let j = self.w_jet(0.0, t)?;
        Ok(BoundaryCorrection {
            gap: j.value() - self.data.u_minus,
            gap_t: j.partial(0, 1),
            curvature: j.partial(2, 0),
            curvature_t: j.partial(2, 1),
        })
    }

    /// Modified profile `u_tilde` only (cheap path used for initial data and
    /// perturbation decomposition).
    pub fn u_tilde(&self, x: f64, t: f64, bc: &BoundaryCorrection) -> Result<f64> {
        let w = self.w(x, t)?;
        Ok(self.data.u_minus + ((w - self.data.u_minus) - bc.gap * (-x).exp()))
    }

    pub fn point(&self, x: f64, t: f64, bc: &BoundaryCorrection) -> Result<ProfilePoint> {
        let wt = self.burgers.jet(x, t)?;
        let (wt, w) = self.compose_inverse(&wt)?;
        let e = (-x).exp();
        let um = self.data.u_minus;
        let u_hat = bc.gap * e;
        let q_hat = bc.curvature * e;
        let w_x = w.partial(1, 0);
        let u_tilde = um + ((w.value() - um) - u_hat);
        let u_tilde_x = w_x + u_hat;
        let q_tilde = -w_x - q_hat;
        let [_, _, f2w, f3w, _] = self.flux.f_derivs(w.value());
        let convexity_term = f3w / f2w * w_x * w_x;
        let r1 = if self.data.regime == Regime::FprimeZero {
            -convexity_term
        } else {
            // q_hat_x + u_hat_t + f'(w) w_x - f'(u_tilde) u_tilde_x - (f'''/f'') w_x^2
            -bc.curvature * e + bc.gap_t * e + self.flux.fp(w.value()) * w_x
                - self.flux.fp(u_tilde) * u_tilde_x
                - convexity_term
        };
        // u_hat_x + q_hat - u_tilde_xxx - u_hat_xxx - q_hat_xx = -w_xxx - gap e^{-x}
        let r2 = -w.partial(3, 0) - u_hat;
        Ok(ProfilePoint {
            r: exact_rarefaction(&self.flux, &self.data, x, t)?,
            w_tilde: wt,
            w,
            u_hat,
            q_hat,
            u_tilde,
            u_tilde_x,
            q_tilde,
            r1,
            r2,
        })
    }
}

/// Profile quantities sampled on a half-line grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBundle {
    pub grid: HalfLineGrid,
    pub t: f64,
    pub regime: Regime,
    pub boundary: BoundaryCorrection,
    pub r: Vec<f64>,
    /// `w_tilde_derivs[m]` holds `d^k_x d^l_t w_tilde` for `derivative_pairs()[m]`.
    pub w_tilde_derivs: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub w_x: Vec<f64>,
    pub u_tilde: Vec<f64>,
    pub u_tilde_x: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl ProfileBundle {
    pub fn w_tilde_partial(&self, k: usize, l: usize) -> Result<&[f64]> {
        derivative_pairs()
            .iter()
            .position(|&p| p == (k, l))
            .map(|m| self.w_tilde_derivs[m].as_slice())
            .ok_or(Error::UnsupportedOrder {
                k,
                l,
                max: JET_ORDER,
            })
    }

    /// CSV slice with columns `x,r,w,u_tilde,q_tilde,R1,R2`.
    pub fn to_csv(&self) -> String {
        use crate::diagnostics::format_num as f;
        let mut out = String::from("x,r,w,u_tilde,q_tilde,R1,R2\n");
        for i in 0..self.grid.n {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                f(self.grid.x(i)),
                f(self.r[i]),
                f(self.w[i]),
                f(self.u_tilde[i]),
                f(self.q_tilde[i]),
                f(self.r1[i]),
                f(self.r2[i])
            ));
        }
        out
    }
}

/// Builds the bundle at time `t > 0`, evaluating grid points in parallel.
pub fn modified_profile(
    flux: &FluxPair,
    data: &RiemannData,
    grid: &HalfLineGrid,
    t: f64,
) -> Result<ProfileBundle> {
    let profile = SmoothProfile::new(flux, data)?;
    let bc = profile.boundary_correction(t)?;
    let points: Vec<ProfilePoint> = (0..grid.n)
        .into_par_iter()
        .map(|i| profile.point(grid.x(i), t, &bc))
        .collect::<Result<_>>()?;
    let pairs = derivative_pairs();
    let w_tilde_derivs = pairs
        .iter()
        .map(|&(k, l)| points.iter().map(|p| p.w_tilde.partial(k, l)).collect())
        .collect();
    let col = |f: &dyn Fn(&ProfilePoint) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    let mut u_tilde = col(&|p| p.u_tilde);
    u_tilde[0] = data.u_minus;
    Ok(ProfileBundle {
        grid: *grid,
        t,
        regime: data.regime,
        boundary: bc,
        r: col(&|p| p.r),
        w_tilde_derivs,
        w: col(&|p| p.w.value()),
        w_x: col(&|p| p.w.partial(1, 0)),
        u_tilde,
        u_tilde_x: col(&|p| p.u_tilde_x),
        q_tilde: col(&|p| p.q_tilde),
        u_hat: col(&|p| p.u_hat),
        q_hat: col(&|p| p.q_hat),
        r1: col(&|p| p.r1),
        r2: col(&|p| p.r2),
    })
}

/// `(R1, R2)` on the grid at time `t`.
pub fn residuals(
    flux: &FluxPair,
    data: &RiemannData,
    grid: &HalfLineGrid,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = modified_profile(flux, data, grid, t)?;
    Ok((b.r1, b.r2))
}

/// One measured bound of the profile suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyFit {
    pub label: String,
    pub p: f64,
    pub values: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub r_squared: Option<f64>,
    pub reference_exponent: f64,
    pub band: Band,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePropertyReport {
    pub flux: String,
    pub u_minus: f64,
    pub u_plus: f64,
    pub regime: Regime,
    pub grid: HalfLineGrid,
    pub times: Vec<f64>,
    pub fit_window: [f64; 2],
    pub fits: Vec<PropertyFit>,
    /// `min_x w_x` at each time; zero only where `w_x` underflows.
    pub min_wx: Vec<f64>,
    /// `min_x u_tilde_x` at each time.
    pub min_u_tilde_x: Vec<f64>,
    /// `ln w_x` finite at every sample of every time, i.e. `w_x > 0` strictly.
    pub monotone: bool,
    /// `w(0,t) - u-` at each time, and its fitted exponential rate `c` in
    /// `gap ~ C e^{-c t}` (positive regime only).
    pub boundary_gap: Vec<f64>,
    pub boundary_gap_rate: Option<f64>,
    /// `max_x |u_tilde - w| - |w(0,t) - u-| e^{-x}` (must be <= round-off).
    pub correction_excess: Vec<f64>,
    /// Every fitted exponent inside its band. Small-strength waves stay
    /// pre-asymptotic over desk-scale windows, so this is reported, not required.
    pub all_fits_within_band: bool,
    /// Structural properties: strict monotonicity, nonnegative and
    /// exponentially decaying boundary gap, `|u_tilde - w| <= gap e^{-x}`.
    pub pass: bool,
}

/// Tolerance band applied to every fitted profile exponent.
pub const PROFILE_BAND: f64 = 0.1;
/// Fits ignore samples before this time.
pub const PROFILE_TRANSIENT: f64 = 5.0;
const PROFILE_MIN_SAMPLES: usize = 4;

/// Norm series of the profile bounds, fitted against the stated exponents.
///
/// For each `p`: `||w - r||_p` (exponent `-1/2 + 1/(2p)`), `||w_x||_p` and
/// `||w_t||_p` (`-1 + 1/p`), and `||d^k_x d^l_t w||_p` for `k + l = 2`
/// (`-(k + l + 1 - 1/p)/2`). Exponents are checked as upper bounds except
/// `||w - r||_inf` and `||w_x||_1`, whose rates are sharp and checked two-sided.
pub fn profile_property_suite(
    flux: &FluxPair,
    data: &RiemannData,
    grid: &HalfLineGrid,
    times: &[f64],
    p_values: &[f64],
) -> Result<ProfilePropertyReport> {
    if times.len() < 8 {
        return Err(Error::Config(format!(
            "profile suite needs at least 8 times, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::Config("profile suite times must be positive and increasing".into()));
    }
    let profile = SmoothProfile::new(flux, data)?;
    let h = grid.h;
    struct Sample {
        diff: Vec<f64>,
        jets: Vec<Jet2>,
        bundle_min_wx: f64,
        bundle_min_ux: f64,
        ln_wx_finite: bool,
        gap: f64,
        excess: f64,
    }
    let samples: Vec<Sample> = times
        .iter()
        .map(|&t| {
            let bc = profile.boundary_correction(t)?;
            let pts: Vec<ProfilePoint> = (0..grid.n)
                .into_par_iter()
                .map(|i| profile.point(grid.x(i), t, &bc))
                .collect::<Result<_>>()?;
            let excess = pts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    (p.u_tilde - p.w.value()).abs() - bc.gap.abs() * (-grid.x(i)).exp()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let ln_wx_finite = (0..grid.n)
                .into_par_iter()
                .map(|i| profile.ln_wx(grid.x(i), t).map(f64::is_finite))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|ok| ok);
            Ok(Sample {
                ln_wx_finite,
                diff: pts.iter().map(|p| p.w.value() - p.r).collect(),
                jets: pts.iter().map(|p| p.w).collect(),
                bundle_min_wx: pts.iter().map(|p| p.w.partial(1, 0)).fold(f64::INFINITY, f64::min),
                bundle_min_ux: pts.iter().map(|p| p.u_tilde_x).fold(f64::INFINITY, f64::min),
                gap: bc.gap,
                excess,
            })
        })
        .collect::<Result<_>>()?;

    let window = [PROFILE_TRANSIENT, f64::INFINITY];
    let mut fits = Vec::new();
    let mut push_fit = |label: String, p: f64, values: Vec<f64>, reference: f64, two_sided: bool| {
        let band = if two_sided {
            Band::around(reference, PROFILE_BAND)
        } else {
            Band::at_most(reference + PROFILE_BAND)
        };
        let (fitted, r2, note) =
            match fit_power_law(times, &values, window, PROFILE_MIN_SAMPLES) {
                Ok((b, _, r2, _)) => (Some(b), Some(r2), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
        let pass = fitted.is_some_and(|b| band.contains(b));
        fits.push(PropertyFit {
            label,
            p,
            values,
            fitted_exponent: fitted,
            r_squared: r2,
            reference_exponent: reference,
            band,
            pass,
            note,
        });
    };
    for &p in p_values {
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let tag = if p.is_infinite() { "inf".to_string() } else { format!("{p}") };
        let norms = |f: &dyn Fn(&Sample) -> Vec<f64>| -> Vec<f64> {
            samples.iter().map(|s| lp_norm(&f(s), h, p)).collect()
        };
        push_fit(
            format!("w_minus_r_L{tag}"),
            p,
            norms(&|s| s.diff.clone()),
            -0.5 + 0.5 * inv_p,
            p.is_infinite(),
        );
        for (k, l, name) in [(1, 0, "w_x"), (0, 1, "w_t")] {
            push_fit(
                format!("{name}_L{tag}"),
                p,
                norms(&|s| s.jets.iter().map(|j| j.partial(k, l)).collect()),
                -1.0 + inv_p,
                p == 1.0 && k == 1,
            );
        }
        for (k, l, name) in [(2, 0, "w_xx"), (1, 1, "w_xt"), (0, 2, "w_tt")] {
            push_fit(
                format!("{name}_L{tag}"),
                p,
                norms(&|s| s.jets.iter().map(|j| j.partial(k, l)).collect()),
                -0.5 * ((k + l) as f64 + 1.0 - inv_p),
                false,
            );
        }
    }

    let min_wx: Vec<f64> = samples.iter().map(|s| s.bundle_min_wx).collect();
    let min_u_tilde_x: Vec<f64> = samples.iter().map(|s| s.bundle_min_ux).collect();
    let monotone = samples.iter().all(|s| s.ln_wx_finite) && min_wx.iter().all(|&v| v >= 0.0);
    let boundary_gap: Vec<f64> = samples.iter().map(|s| s.gap).collect();
    let boundary_gap_rate = if data.regime == Regime::FprimePositive {
        let (ts, logs): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(&boundary_gap)
            .filter(|(_, &g)| g > 0.0)
            .map(|(&t, &g)| (t, g.ln()))
            .unzip();
        (ts.len() >= 2).then(|| -least_squares(&ts, &logs).0)
    } else {
        None
    };
    let correction_excess: Vec<f64> = samples.iter().map(|s| s.excess).collect();
    let gap_ok = boundary_gap.iter().all(|&g| g >= 0.0)
        && boundary_gap_rate.is_none_or(|c| c > 0.0);
    let all_fits_within_band = fits.iter().all(|f| f.pass);
    let pass = monotone && gap_ok && correction_excess.iter().all(|&e| e <= 1e-12);
    Ok(ProfilePropertyReport {
        flux: flux.name.clone(),
        u_minus: data.u_minus,
        u_plus: data.u_plus,
        regime: data.regime,
        grid: *grid,
        times: times.to_vec(),
        fit_window: window,
        fits,
        min_wx,
        min_u_tilde_x,
        monotone,
        boundary_gap,
        boundary_gap_rate,
        correction_excess,
        all_fits_within_band,
        pass,
    })
}

/// `n` logarithmically spaced times in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burgers(um: f64, up: f64) -> (FluxPair, RiemannData) {
        let f = FluxPair::burgers();
        let d = RiemannData::new(&f, um, up).unwrap();
        (f, d)
    }

    #[test]
    fn rarefaction_values() {
        let (f, d) = burgers(0.0, 1.0);
        assert_eq!(exact_rarefaction(&f, &d, 0.5, 1.0).unwrap(), 0.5);
        assert_eq!(exact_rarefaction(&f, &d, 2.0, 1.0).unwrap(), 1.0);
        let (f, d) = burgers(0.25, 1.0);
        assert_eq!(exact_rarefaction(&f, &d, 0.1, 1.0).unwrap(), 0.25);
        assert!(exact_rarefaction(&f, &d, 0.1, 0.0).is_err());
    }

    #[test]
    fn burgers_profile_is_hopf_cole() {
        let (f, d) = burgers(0.1, 0.6);
        let p = SmoothProfile::new(&f, &d).unwrap();
        for &(x, t) in &[(0.3, 1.0), (4.0, 10.0)] {
            let a = p.w_jet(x, t).unwrap();
            let b = p.w_tilde_jet(x, t).unwrap();
            for (k, l) in derivative_pairs() {
                assert!((a.partial(k, l) - b.partial(k, l)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn quartic_chain_rule_matches_finite_differences() {
        let f = FluxPair::quartic();
        let d = RiemannData::new(&f, 0.2, 1.0).unwrap();
        let p = SmoothProfile::new(&f, &d).unwrap();
        let (x, t) = (1.0, 1.0);
        let j = p.w_jet(x, t).unwrap();
        let fd = |h: f64| (p.w(x + h, t).unwrap() - p.w(x - h, t).unwrap()) / (2.0 * h);
        let e1 = (fd(1e-2) - j.partial(1, 0)).abs();
        let e2 = (fd(5e-3) - j.partial(1, 0)).abs();
        assert!((e1 / e2).log2() >= 1.9, "order {}", (e1 / e2).log2());
        assert!(j.partial(1, 0) > 0.0);
        // third x-derivative against a five-point stencil of w_x
        let wx = |x: f64| p.w_jet(x, t).unwrap().partial(1, 0);
        let h = 1e-3;
        let wxxx = (wx(x + h) - 2.0 * wx(x) + wx(x - h)) / (h * h);
        assert!((wxxx - j.partial(3, 0)).abs() < 1e-5);
        let wt = |t: f64| p.w_jet(x, t).unwrap().partial(2, 0);
        let wxxt = (wt(t + h) - wt(t - h)) / (2.0 * h);
        assert!((wxxt - j.partial(2, 1)).abs() < 1e-6);
    }

    #[test]
    fn w_satisfies_its_equation() {
        // w_t + f'(w) w_x = w_xx + f'''/f'' w_x^2
        let f = FluxPair::quartic();
        let d = RiemannData::new(&f, 0.3, 0.9).unwrap();
        let p = SmoothProfile::new(&f, &d).unwrap();
        for &(x, t) in &[(0.5, 1.0), (3.0, 5.0), (20.0, 30.0)] {
            let j = p.w_jet(x, t).unwrap();
            let [_, f1, f2, f3, _] = f.f_derivs(j.value());
            let r = j.partial(0, 1) + f1 * j.partial(1, 0)
                - j.partial(2, 0)
                - f3 / f2 * j.partial(1, 0).powi(2);
            assert!(r.abs() < 1e-12, "({x},{t}): {r}");
        }
    }

    #[test]
    fn modified_profile_boundary_and_equation() {
        let f = FluxPair::quartic();
        let d = RiemannData::new(&f, 0.3, 0.9).unwrap();
        let p = SmoothProfile::new(&f, &d).unwrap();
        let t = 2.0;
        let bc = p.boundary_correction(t).unwrap();
        assert!(bc.gap > 0.0);
        // u_tilde_t + f(u_tilde)_x - u_tilde_xx
        //   = u_hat_xx - u_hat_t - (f(w) - f(u_tilde))_x + f'''/f'' w_x^2
        for &x in &[0.0, 0.7, 3.0] {
            let j = p.w_jet(x, t).unwrap();
            let e = (-x).exp();
            let ut = j.partial(0, 1) - bc.gap_t * e;
            let u = j.value() - bc.gap * e;
            let ux = j.partial(1, 0) + bc.gap * e;
            let uxx = j.partial(2, 0) - bc.gap * e;
            let [_, f1w, f2w, f3w, _] = f.f_derivs(j.value());
            let rhs = bc.gap * e - bc.gap_t * e - (f1w * j.partial(1, 0) - f.fp(u) * ux)
                + f3w / f2w * j.partial(1, 0).powi(2);
            let lhs = ut + f.fp(u) * ux - uxx;
            assert!((lhs - rhs).abs() < 1e-12, "x = {x}");
        }
        let g = HalfLineGrid::new(401, 40.0).unwrap();
        let b = modified_profile(&f, &d, &g, t).unwrap();
        assert_eq!(b.u_tilde[0], d.u_minus);
        // q_tilde_x(0) = -w_xx(0) + curvature = 0
        let qx0 = -p.w_jet(0.0, t).unwrap().partial(2, 0) + bc.curvature;
        assert!(qx0.abs() < 1e-15);
        assert!(b.w_x.iter().all(|&v| v > 0.0));
        assert!(b.u_tilde_x.iter().all(|&v| v > 0.0));
        assert!(b.r.iter().all(|&v| v >= d.u_minus && v <= d.u_plus));
        for i in 0..g.n {
            let bound = bc.gap * (-g.x(i)).exp();
            assert!((b.u_tilde[i] - b.w[i]).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn zero_regime_residuals() {
        let (f, d) = burgers(0.0, 1.0);
        let g = HalfLineGrid::new(201, 20.0).unwrap();
        let b = modified_profile(&f, &d, &g, 3.0).unwrap();
        assert!(b.r1.iter().all(|&v| v == 0.0));
        assert!(b.u_hat.iter().all(|&v| v == 0.0));
        assert!(b.w[0].abs() < 1e-15);
        let q = FluxPair::quartic();
        let dq = RiemannData::new(&q, 0.0, 1.0).unwrap();
        let bq = modified_profile(&q, &dq, &g, 3.0).unwrap();
        for i in 0..g.n {
            let w = bq.w[i];
            let expect = -(2.0 * w) / (1.0 + w * w) * bq.w_x[i].powi(2);
            assert!((bq.r1[i] - expect).abs() < 1e-15);
        }
        assert!(bq.w_tilde_partial(2, 3).is_err());
        assert_eq!(bq.w_tilde_partial(0, 0).unwrap()[0], bq.w_tilde_derivs[0][0]);
    }

    #[test]
    fn suite_refuses_too_few_times() {
        let (f, d) = burgers(0.0, 1.0);
        let g = HalfLineGrid::new(101, 50.0).unwrap();
        assert!(profile_property_suite(&f, &d, &g, &[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn boundary_gap_decays_exponentially() {
        let (f, d) = burgers(0.5, 1.0);
        let g = HalfLineGrid::new(2001, 400.0).unwrap();
        let times = log_spaced(1.0, 100.0, 8);
        let rep = profile_property_suite(&f, &d, &g, &times, &[1.0]).unwrap();
        assert!(rep.boundary_gap.iter().all(|&v| v >= 0.0));
        assert!(rep.boundary_gap_rate.unwrap() > 0.0);
        assert!(rep.monotone);
        assert!(rep.correction_excess.iter().all(|&e| e <= 1e-12));
    }
}
