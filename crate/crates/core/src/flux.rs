//! Convex fluxes `f`, `g` and the Riemann data they act on.
//!
//! Every supported flux is a polynomial, so derivatives of any order are
//! exact. The structural assumptions checked here are
//!
//! * strict convexity `f''(u) >= alpha > 0` on the sampled state range,
//! * the normalization `f(0) = f'(0) = 0`,
//! * the rarefaction ordering `0 <= f'(u-) < f'(u+)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on `|f'(u*) - xi|` accepted by [`inverse_fprime`].
pub const INVERSE_TOL: f64 = 1e-12;
const INVERSE_MAX_ITER: usize = 200;

/// Tolerance for `f(0) = f'(0) = 0` and for classifying `f'(u-) = 0`.
pub const NORMALIZATION_TOL: f64 = 1e-14;

/// Dense polynomial `sum_k c[k] u^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `d^k/du^k p(u)`.
    pub fn deriv(&self, k: usize, u: f64) -> f64 {
        let n = self.coeffs.len();
        if k >= n {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in (k..n).rev() {
            // falling factorial j (j-1) ... (j-k+1)
            let mut ff = 1.0;
            for m in 0..k {
                ff *= (j - m) as f64;
            }
            acc = acc * u + ff * self.coeffs[j];
        }
        acc
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.deriv(0, u)
    }
}

/// The pair of fluxes `f` (normal direction) and `g` (tangential direction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxPair {
    pub name: String,
    pub f: Polynomial,
    pub g: Polynomial,
    /// Convexity floor `alpha` with `f'' >= alpha`.
    pub alpha: f64,
}

impl FluxPair {
    /// `f(u) = g(u) = u^2 / 2`.
    pub fn burgers() -> Self {
        Self {
            name: "burgers".into(),
            f: Polynomial::new(vec![0.0, 0.0, 0.5]),
            g: Polynomial::new(vec![0.0, 0.0, 0.5]),
            alpha: 1.0,
        }
    }

    /// `f(u) = u^2/2 + u^4/12`, `g(u) = u^2/2`. Has `f''' = 2u`, so the
    /// `f'''/f'' w_x^2` forcing is active.
    pub fn quartic() -> Self {
        Self {
            name: "quartic".into(),
            f: Polynomial::new(vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0]),
            g: Polynomial::new(vec![0.0, 0.0, 0.5]),
            alpha: 1.0,
        }
    }

    pub fn polynomial(name: &str, f: Vec<f64>, g: Vec<f64>, alpha: f64) -> Self {
        Self {
            name: name.into(),
            f: Polynomial::new(f),
            g: Polynomial::new(g),
            alpha,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "burgers" => Some(Self::burgers()),
            "quartic" => Some(Self::quartic()),
            _ => None,
        }
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.f.eval(u)
    }

    #[inline]
    pub fn fp(&self, u: f64) -> f64 {
        self.f.deriv(1, u)
    }

    #[inline]
    pub fn fpp(&self, u: f64) -> f64 {
        self.f.deriv(2, u)
    }

    /// `f^(k)(u)` for any `k`.
    #[inline]
    pub fn f_deriv(&self, k: usize, u: f64) -> f64 {
        self.f.deriv(k, u)
    }

    /// `(f, f', f'', f''', f'''')` at `u`.
    pub fn f_derivs(&self, u: f64) -> [f64; 5] {
        std::array::from_fn(|k| self.f.deriv(k, u))
    }

    /// `(g, g', g'')` at `u`.
    pub fn g_derivs(&self, u: f64) -> [f64; 3] {
        std::array::from_fn(|k| self.g.deriv(k, u))
    }

    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        self.g.eval(u)
    }

    #[inline]
    pub fn gp(&self, u: f64) -> f64 {
        self.g.deriv(1, u)
    }
}

/// Which smoothing the boundary behaviour calls for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `f'(u-) > 0`: Burgers data `(f'(u-), f'(u+))`, boundary layer correction active.
    FprimePositive,
    /// `f'(u-) = 0`: symmetric data `(-f'(u+), f'(u+))`, `w(0, t) = 0`.
    FprimeZero,
}

/// Validated case-(b) Riemann data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannData {
    pub u_minus: f64,
    pub u_plus: f64,
    pub delta: f64,
    pub regime: Regime,
}

fn ordering_violation(flux: &FluxPair, u_minus: f64, u_plus: f64) -> Option<String> {
    let (a, b) = (flux.fp(u_minus), flux.fp(u_plus));
    if !(u_minus.is_finite() && u_plus.is_finite()) {
        return Some("states must be finite".into());
    }
    if a < -NORMALIZATION_TOL {
        return Some(format!("f'(u-) >= 0 violated (f'(u-) = {a})"));
    }
    if a >= b {
        return Some(format!("f'(u-) < f'(u+) violated ({a} >= {b})"));
    }
    if u_plus <= u_minus {
        return Some(format!("u+ > u- violated ({u_plus} <= {u_minus})"));
    }
    None
}

impl RiemannData {
    pub fn new(flux: &FluxPair, u_minus: f64, u_plus: f64) -> Result<Self> {
        if let Some(msg) = ordering_violation(flux, u_minus, u_plus) {
            return Err(Error::InvalidStates(msg));
        }
        let regime = if flux.fp(u_minus).abs() <= NORMALIZATION_TOL {
            Regime::FprimeZero
        } else {
            Regime::FprimePositive
        };
        Ok(Self {
            u_minus,
            u_plus,
            delta: u_plus - u_minus,
            regime,
        })
    }

    /// Far-field states `(w-, w+)` of the viscous Burgers smoothing.
    pub fn velocity_states(&self, flux: &FluxPair) -> (f64, f64) {
        let wp = flux.fp(self.u_plus);
        match self.regime {
            Regime::FprimePositive => (flux.fp(self.u_minus), wp),
            Regime::FprimeZero => (-wp, wp),
        }
    }

    /// State interval containing `(f')^{-1}([w-, w+])`.
    pub fn state_bracket(&self, flux: &FluxPair) -> (f64, f64) {
        let (wm, _) = self.velocity_states(flux);
        let hi = self.u_plus;
        let mut lo = self.u_minus;
        let mut step = self.delta.max(1e-3);
        while flux.fp(lo) > wm {
            lo -= step;
            step *= 2.0;
        }
        (lo, hi)
    }
}

/// Outcome of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub flux: String,
    pub range: (f64, f64),
    pub samples: usize,
    pub min_fpp: f64,
    pub alpha: f64,
    pub abs_f0: f64,
    pub abs_fp0: f64,
    pub regime: Regime,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Checks convexity and normalization on `[min(u-, 0), u+ + delta/10]`.
///
/// An ordering that is not case (b) is an error rather than a failed report.
pub fn check_assumptions(
    flux: &FluxPair,
    u_minus: f64,
    u_plus: f64,
    samples: usize,
) -> Result<AssumptionReport> {
    if samples < 2 {
        return Err(Error::Domain(format!("samples = {samples}, need at least 2")));
    }
    let data = RiemannData::new(flux, u_minus, u_plus)?;
    let lo = u_minus.min(0.0);
    let hi = u_plus + 0.1 * data.delta;
    let min_fpp = (0..samples)
        .map(|i| {
            let u = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            flux.fpp(u)
        })
        .fold(f64::INFINITY, f64::min);
    let abs_f0 = flux.f(0.0).abs();
    let abs_fp0 = flux.fp(0.0).abs();

    let mut failures = Vec::new();
    if !(flux.alpha > 0.0) {
        failures.push(format!("alpha > 0 violated (alpha = {})", flux.alpha));
    }
    if min_fpp < flux.alpha {
        failures.push(format!(
            "f'' >= alpha violated (min f'' = {min_fpp} < {})",
            flux.alpha
        ));
    }
    if abs_f0 > NORMALIZATION_TOL {
        failures.push(format!("f(0) = 0 violated (|f(0)| = {abs_f0})"));
    }
    if abs_fp0 > NORMALIZATION_TOL {
        failures.push(format!("f'(0) = 0 violated (|f'(0)| = {abs_fp0})"));
    }
    Ok(AssumptionReport {
        flux: flux.name.clone(),
        range: (lo, hi),
        samples,
        min_fpp,
        alpha: flux.alpha,
        abs_f0,
        abs_fp0,
        regime: data.regime,
        pass: failures.is_empty(),
        failures,
    })
}

/// Solves `f'(u) = xi` for `u` in `bracket` by safeguarded Newton.
///
/// `f'` is increasing on the bracket because `f'' > 0`.
pub fn inverse_fprime(flux: &FluxPair, xi: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (flo, fhi) = (flux.fp(lo) - xi, flux.fp(hi) - xi);
    if !(flo <= INVERSE_TOL && fhi >= -INVERSE_TOL) {
        return Err(Error::OutOfRange {
            quantity: "xi",
            value: xi,
            lo: flux.fp(lo),
            hi: flux.fp(hi),
        });
    }
    if flo.abs() <= f64::EPSILON * xi.abs().max(1.0) {
        return Ok(lo);
    }
    if fhi.abs() <= f64::EPSILON * xi.abs().max(1.0) {
        return Ok(hi);
    }
    let mut u = if fhi - flo > 0.0 {
        lo - flo * (hi - lo) / (fhi - flo)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..INVERSE_MAX_ITER {
        let r = flux.fp(u) - xi;
        if r == 0.0 {
            return Ok(u);
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = flux.fpp(u);
        let mut next = u - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs().max(1e-300) || hi - lo <= f64::EPSILON * u.abs() {
            u = next;
            break;
        }
        u = next;
    }
    let r = (flux.fp(u) - xi).abs();
    if r <= INVERSE_TOL {
        Ok(u)
    } else {
        Err(Error::Domain(format!(
            "inverse of f' did not converge: residual {r} at xi = {xi}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.eval(2.0), 1.0 + 4.0 + 12.0 + 32.0);
        assert_eq!(p.deriv(1, 2.0), 2.0 + 12.0 + 48.0);
        assert_eq!(p.deriv(2, 2.0), 6.0 + 48.0);
        assert_eq!(p.deriv(3, 2.0), 24.0);
        assert_eq!(p.deriv(4, 2.0), 0.0);
        assert_eq!(Polynomial::new(vec![0.0, 1.0, 0.0, 0.0]).degree(), 1);
    }

    #[test]
    fn burgers_passes_assumptions() {
        let r = check_assumptions(&FluxPair::burgers(), 0.0, 1.0, 101).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.min_fpp, 1.0);
        assert_eq!(r.regime, Regime::FprimeZero);
    }

    #[test]
    fn reversed_ordering_is_rejected() {
        let err = check_assumptions(&FluxPair::burgers(), 1.0, 0.0, 11).unwrap_err();
        assert!(err.to_string().contains("f'(u-) < f'(u+) violated"), "{err}");
    }

    #[test]
    fn negative_left_speed_is_rejected() {
        let err = RiemannData::new(&FluxPair::burgers(), -0.5, 1.0).unwrap_err();
        assert!(err.to_string().contains("f'(u-) >= 0"), "{err}");
    }

    #[test]
    fn degenerate_convexity_fails() {
        let quartic_only = FluxPair::polynomial("u4", vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![0.0], 1e-3);
        let r = check_assumptions(&quartic_only, 0.0, 1.0, 11).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_fpp, 0.0);
        assert!(r.failures[0].contains("f'' >= alpha"));
    }

    #[test]
    fn unnormalized_flux_fails() {
        let shifted = FluxPair::polynomial("shifted", vec![0.0, 0.5, 0.5], vec![0.0], 1.0);
        let r = check_assumptions(&shifted, 0.0, 1.0, 11).unwrap();
        assert!(!r.pass);
        assert!(r.failures.iter().any(|m| m.contains("f'(0) = 0")));
    }

    #[test]
    fn too_few_samples() {
        assert!(check_assumptions(&FluxPair::burgers(), 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn inverse_burgers_is_identity() {
        let u = inverse_fprime(&FluxPair::burgers(), 0.5, (0.0, 1.0)).unwrap();
        assert_eq!(u, 0.5);
    }

    #[test]
    fn inverse_at_endpoint() {
        let flux = FluxPair::quartic();
        let xi = flux.fp(1.3);
        let u = inverse_fprime(&flux, xi, (0.2, 1.3)).unwrap();
        assert!((u - 1.3).abs() < 1e-14);
    }

    #[test]
    fn inverse_quartic() {
        let flux = FluxPair::quartic();
        // f'(1) = 1 + 1/3 by direct evaluation
        assert!((flux.fp(1.0) - 4.0 / 3.0).abs() < 1e-15);
        let u = inverse_fprime(&flux, 4.0 / 3.0, (0.0, 2.0)).unwrap();
        assert!((u - 1.0).abs() < 1e-13);
        assert!((flux.fp(u) - 4.0 / 3.0).abs() <= INVERSE_TOL);
    }

    #[test]
    fn inverse_out_of_range() {
        let err = inverse_fprime(&FluxPair::burgers(), 2.0, (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }

    #[test]
    fn zero_regime_bracket_covers_negative_speeds() {
        let flux = FluxPair::quartic();
        let data = RiemannData::new(&flux, 0.0, 1.0).unwrap();
        let (wm, wp) = data.velocity_states(&flux);
        assert_eq!(wm, -wp);
        let (lo, hi) = data.state_bracket(&flux);
        assert!(flux.fp(lo) <= wm && hi == 1.0);
        let u = inverse_fprime(&flux, wm, (lo, hi)).unwrap();
        assert!((u + 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_is_deterministic() {
        let a = check_assumptions(&FluxPair::quartic(), 0.2, 0.9, 57).unwrap();
        let b = check_assumptions(&FluxPair::quartic(), 0.2, 0.9, 57).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inverse_undoes_fprime(u in 0.0f64..2.0) {
                let flux = FluxPair::quartic();
                let back = inverse_fprime(&flux, flux.fp(u), (0.0, 2.0)).unwrap();
                prop_assert!((back - u).abs() < 1e-10);
            }
        }
    }
}
