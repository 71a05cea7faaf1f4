//! Perturbation decomposition, norm time series, decay fits and the
//! property checks run on simulation output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::elliptic::centered_derivative;
use crate::error::{Error, Result};
use crate::grid::{HalfLineGrid, HalfPlaneGrid};

/// Minimum samples accepted by [`fit_decay`].
pub const MIN_FIT_SAMPLES: usize = 6;
/// Values at or below this are treated as the round-off floor.
pub const ROUND_OFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub norms: BTreeMap<String, Vec<f64>>,
}

impl NormSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one sample. Times must increase strictly and every sample must
    /// carry the same labels as the first.
    pub fn push(&mut self, t: f64, entries: BTreeMap<String, f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Shape(format!("norm series time {t} not after {last}")));
            }
            if entries.len() != self.norms.len()
                || entries.keys().any(|k| !self.norms.contains_key(k))
            {
                return Err(Error::Shape("norm series labels changed between samples".into()));
            }
        }
        for (label, value) in entries {
            if !(value >= 0.0) {
                return Err(Error::Domain(format!("norm {label} = {value} at t = {t}")));
            }
            self.norms.entry(label).or_default().push(value);
        }
        self.times.push(t);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Result<&[f64]> {
        self.norms
            .get(label)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Fit(format!("no series labelled {label}")))
    }

    /// CSV with a `t` column followed by one column per label, sorted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for label in self.norms.keys() {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format_num(*t));
            for values in self.norms.values() {
                out.push(',');
                out.push_str(&format_num(values[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal representation.
pub fn format_num(v: f64) -> String {
    format!("{v:e}")
}

/// Trapezoid `L^p` norm on a uniform grid; `p = inf` gives the maximum.
pub fn lp_norm(values: &[f64], h: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |a, v| a.max(v.abs()));
    }
    let n = values.len();
    let mut s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    s -= 0.5 * (values[0].abs().powf(p) + values[n - 1].abs().powf(p));
    (s * h).powf(1.0 / p)
}

/// `k`-th discrete `x`-derivative: `D_1` centered, `D_2` compact three-point,
/// `D_3 = D_1 D_2`. End values use one-sided stencils.
pub fn derivative(values: &[f64], h: f64, k: usize) -> Vec<f64> {
    match k {
        0 => values.to_vec(),
        1 => centered_derivative(values, h),
        2 => second_difference(values, h),
        _ => derivative(&second_difference(values, h), h, k - 2),
    }
}

fn second_difference(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let ih2 = 1.0 / (h * h);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) * ih2;
    }
    d[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) * ih2;
    d[n - 1] =
        (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) * ih2;
    d
}

/// Norms of a half-line field and its derivatives up to `max_order` (<= 3).
///
/// Labels: `{name}_L1`, `{name}_L2`, `{name}_Linf`, then `{name}x_L2`,
/// `{name}x_Linf`, `{name}xx_...`, and `{name}_H{k}` for `k = 1..=max_order`.
pub fn field_norms(name: &str, values: &[f64], grid: &HalfLineGrid, max_order: usize) -> BTreeMap<String, f64> {
    let h = grid.h;
    let mut out = BTreeMap::new();
    out.insert(format!("{name}_L1"), lp_norm(values, h, 1.0));
    let l2 = lp_norm(values, h, 2.0);
    out.insert(format!("{name}_L2"), l2);
    out.insert(format!("{name}_Linf"), lp_norm(values, h, f64::INFINITY));
    let mut h_sq = l2 * l2;
    for k in 1..=max_order.min(3) {
        let d = derivative(values, h, k);
        let suffix = "x".repeat(k);
        let dl2 = lp_norm(&d, h, 2.0);
        out.insert(format!("{name}{suffix}_L2"), dl2);
        out.insert(format!("{name}{suffix}_Linf"), lp_norm(&d, h, f64::INFINITY));
        h_sq += dl2 * dl2;
        out.insert(format!("{name}_H{k}"), h_sq.sqrt());
    }
    out
}

/// Periodic centered `y`-difference of a row-major half-plane field.
pub fn y_derivative(field: &[f64], grid: &HalfPlaneGrid) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny);
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let jp = (j + 1) % ny;
            let jm = (j + ny - 1) % ny;
            out[i * ny + j] = (field[i * ny + jp] - field[i * ny + jm]) / (2.0 * grid.hy);
        }
    }
    out
}

/// All `k`-th order partials of a half-plane field (`k <= 2`).
pub fn partials_2d(field: &[f64], grid: &HalfPlaneGrid, k: usize) -> Vec<Vec<f64>> {
    use crate::elliptic::x_derivative;
    match k {
        0 => vec![field.to_vec()],
        1 => vec![x_derivative(field, grid), y_derivative(field, grid)],
        _ => {
            let fx = x_derivative(field, grid);
            let fy = y_derivative(field, grid);
            vec![
                x_derivative(&fx, grid),
                y_derivative(&fx, grid),
                y_derivative(&fy, grid),
            ]
        }
    }
}

/// `sup |grad^k f|`, the pointwise Euclidean norm over all `k`-th partials.
pub fn sup_gradient_2d(field: &[f64], grid: &HalfPlaneGrid, k: usize) -> f64 {
    let parts = partials_2d(field, grid, k);
    (0..field.len())
        .map(|i| parts.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Trapezoid in `x`, rectangle (exact for periodic) in `y`.
pub fn lp_norm_2d(field: &[f64], grid: &HalfPlaneGrid, p: f64) -> f64 {
    if p.is_infinite() {
        return field.iter().fold(0.0, |a, v| a.max(v.abs()));
    }
    let (nx, ny) = (grid.nx(), grid.ny);
    let mut s = 0.0;
    for i in 0..nx {
        let w = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let row: f64 = field[i * ny..(i + 1) * ny].iter().map(|v| v.abs().powf(p)).sum();
        s += w * row;
    }
    (s * grid.hx() * grid.hy).powf(1.0 / p)
}

/// One-dimensional decomposition `V = U - u_tilde`, `P = Q - q_tilde`.
pub fn decompose_1d(
    u: &[f64],
    q: &[f64],
    u_tilde: &[f64],
    q_tilde: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u.len();
    if q.len() != n || u_tilde.len() != n || q_tilde.len() != n {
        return Err(Error::Shape(format!(
            "decomposition inputs have lengths {}/{}/{}/{}",
            n,
            q.len(),
            u_tilde.len(),
            q_tilde.len()
        )));
    }
    let v = u.iter().zip(u_tilde).map(|(a, b)| a - b).collect();
    let p = q.iter().zip(q_tilde).map(|(a, b)| a - b).collect();
    Ok((v, p))
}

/// Planar-deviation fields `v = u - U`, `p = q - (Q, 0)` with the 1D reference
/// broadcast in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarDeviation {
    pub v: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

pub fn decompose_2d(
    u: &[f64],
    q1: &[f64],
    q2: &[f64],
    u_ref: &[f64],
    q_ref: &[f64],
    grid: &HalfPlaneGrid,
) -> Result<PlanarDeviation> {
    grid.check_len("u", u.len())?;
    grid.check_len("q1", q1.len())?;
    grid.check_len("q2", q2.len())?;
    grid.x.check_len("reference U", u_ref.len())?;
    grid.x.check_len("reference Q", q_ref.len())?;
    let ny = grid.ny;
    let v = u.iter().enumerate().map(|(k, a)| a - u_ref[k / ny]).collect();
    let p1 = q1.iter().enumerate().map(|(k, a)| a - q_ref[k / ny]).collect();
    Ok(PlanarDeviation {
        v,
        p1,
        p2: q2.to_vec(),
    })
}

/// Closed interval of acceptable exponents; either end may be open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Band {
    pub fn around(center: f64, tol: f64) -> Self {
        Self {
            lo: Some(center - tol),
            hi: Some(center + tol),
        }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn at_most(hi: f64) -> Self {
        Self { lo: None, hi: Some(hi) }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub label: String,
    pub window: [f64; 2],
    pub samples: usize,
    pub fitted_exponent: f64,
    pub fitted_log_constant: f64,
    pub r_squared: f64,
    pub reference_exponent: f64,
    pub band: Band,
    pub pass: bool,
}

/// Least-squares line `y = a + b x`; returns `(b, a, r^2)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, my - slope * mx, r2)
}

/// Power-law fit of `values ~ C (1+t)^b` over `times` in `window`.
/// Returns `(b, ln C, r^2, samples)`.
pub fn fit_power_law(
    times: &[f64],
    values: &[f64],
    window: [f64; 2],
    min_samples: usize,
) -> Result<(f64, f64, f64, usize)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window[0] || t > window[1] {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Fit(format!(
                "value {v} at t = {t} is not positive; shrink the window"
            )));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    if xs.len() < min_samples {
        return Err(Error::Fit(format!(
            "{} samples in [{}, {}], need {min_samples}",
            xs.len(),
            window[0],
            window[1]
        )));
    }
    let (b, a, r2) = least_squares(&xs, &ys);
    Ok((b, a, r2, xs.len()))
}

pub fn fit_decay(
    series: &NormSeries,
    label: &str,
    window: [f64; 2],
    reference_exponent: f64,
    band: Band,
) -> Result<DecayFit> {
    let values = series.get(label)?;
    let (b, a, r2, samples) = fit_power_law(&series.times, values, window, MIN_FIT_SAMPLES)?;
    Ok(DecayFit {
        label: label.to_string(),
        window,
        samples,
        fitted_exponent: b,
        fitted_log_constant: a,
        r_squared: r2,
        reference_exponent,
        band,
        pass: band.contains(b),
    })
}

/// Default fit window `[t_final / 10, t_final]`.
pub fn default_window(t_final: f64) -> [f64; 2] {
    [t_final / 10.0, t_final]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The check failed but its hypothesis (monotone initial data) did not hold.
    HypothesisUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRecord {
    pub t: f64,
    pub min_ux: f64,
    pub max_q: f64,
    pub ux_tolerance: f64,
    pub q_tolerance: f64,
    pub status: Status,
}

pub const Q_SIGN_TOLERANCE: f64 = 1e-8;

/// Discrete `U_x >= -10 h` and `Q <= 1e-8`.
pub fn check_monotonicity_and_signs(
    t: f64,
    u: &[f64],
    q: &[f64],
    grid: &HalfLineGrid,
    initial_monotone: bool,
) -> Result<MonotonicityRecord> {
    grid.check_len("U", u.len())?;
    grid.check_len("Q", q.len())?;
    let min_ux = u
        .windows(2)
        .map(|w| (w[1] - w[0]) / grid.h)
        .fold(f64::INFINITY, f64::min);
    let max_q = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ux_tolerance = -10.0 * grid.h;
    let ok = min_ux >= ux_tolerance && max_q <= Q_SIGN_TOLERANCE;
    let status = match (ok, initial_monotone) {
        (true, _) => Status::Pass,
        (false, true) => Status::Fail,
        (false, false) => Status::HypothesisUnmet,
    };
    Ok(MonotonicityRecord {
        t,
        min_ux,
        max_q,
        ux_tolerance,
        q_tolerance: Q_SIGN_TOLERANCE,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1GrowthRecord {
    pub label: String,
    pub delta: f64,
    pub initial: f64,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Empirical constant: supremum of the ratio.
    pub sup_ratio: f64,
    /// Largest increase between consecutive samples with `t` in the second
    /// half of the time span, relative to `max(|sup_ratio|, 1)`.
    pub tail_max_increase: f64,
    pub tail_nonincreasing: bool,
    /// For a zero-strength wave: largest increase of the raw `L^1` series.
    pub max_l1_increase: f64,
    pub pass: bool,
}

/// Relative tolerance on increases of the ratio over the final half.
pub const L1_TAIL_TOLERANCE: f64 = 1e-2;

/// Ratio `(||V(t)||_1 - ||V_0||_1) / (delta log(2+t))` and its tail trend.
/// With `delta = 0` the series itself must be nonincreasing.
pub fn check_l1_growth(series: &NormSeries, label: &str, delta: f64) -> Result<L1GrowthRecord> {
    let values = series.get(label)?;
    if values.is_empty() {
        return Err(Error::Fit(format!("series {label} is empty")));
    }
    let initial = values[0];
    let max_l1_increase = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let mut times = Vec::new();
    let mut ratios = Vec::new();
    if delta > 0.0 {
        for (&t, &v) in series.times.iter().zip(values).skip(1) {
            times.push(t);
            ratios.push((v - initial) / (delta * (2.0 + t).ln()));
        }
    }
    let sup_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = sup_ratio.abs().max(1.0);
    let (t_start, t_end) = (series.times[0], series.times[series.times.len() - 1]);
    let midpoint = 0.5 * (t_start + t_end);
    let first_tail = times.iter().position(|&t| t >= midpoint).unwrap_or(ratios.len());
    let tail = &ratios[first_tail..];
    let tail_max_increase = tail
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(0.0, f64::max);
    let tail_nonincreasing = tail_max_increase <= L1_TAIL_TOLERANCE;
    let pass = if delta > 0.0 {
        sup_ratio.is_finite() && tail_nonincreasing
    } else {
        max_l1_increase <= L1_TAIL_TOLERANCE * initial.max(ROUND_OFF_FLOOR)
    };
    Ok(L1GrowthRecord {
        label: label.to_string(),
        delta,
        initial,
        times,
        ratios,
        sup_ratio,
        tail_max_increase,
        tail_nonincreasing,
        max_l1_increase,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRecord {
    pub label: String,
    pub terminal: f64,
    /// Least-squares slope of the series against `t` over the final quarter.
    pub final_quarter_slope: f64,
    pub at_round_off: bool,
    pub pass: bool,
}

/// Eventual-decrease check: the final-quarter trend is negative, or the
/// series sits at the round-off floor throughout.
pub fn check_2d_decay(series: &NormSeries, labels: &[&str]) -> Result<Vec<TrendRecord>> {
    labels
        .iter()
        .map(|label| {
            let values = series.get(label)?;
            let n = values.len();
            if n < 4 {
                return Err(Error::Fit(format!("{label}: {n} samples, need 4")));
            }
            let at_round_off = values.iter().all(|&v| v <= ROUND_OFF_FLOOR);
            let start = n - n.div_ceil(4).max(2);
            let (slope, _, _) = least_squares(&series.times[start..], &values[start..]);
            Ok(TrendRecord {
                label: label.to_string(),
                terminal: values[n - 1],
                final_quarter_slope: slope,
                at_round_off,
                pass: at_round_off || slope < 0.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], label: &str, f: impl Fn(f64) -> f64) -> NormSeries {
        let mut s = NormSeries::new();
        for &t in times {
            s.push(t, BTreeMap::from([(label.to_string(), f(t))])).unwrap();
        }
        s
    }

    fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s = series(&log_times(1.0, 1000.0, 20), "V_Linf", |t| (1.0 + t).powf(-0.5));
        let fit = fit_decay(&s, "V_Linf", [1.0, 1000.0], -0.5, Band::around(-0.5, 0.1)).unwrap();
        assert!((fit.fitted_exponent + 0.5).abs() < 1e-6);
        assert!(fit.pass);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_polluted_power_law() {
        // (1+t)^{-1/2} log^3(2+t) on [10, 1000]: the local slope is
        // -1/2 + 3/ln(2+t) > 0 over most of the window, so the fit comes out
        // positive. Reference slope from an independent numpy polyfit.
        let s = series(&log_times(10.0, 1000.0, 30), "V", |t| {
            (1.0 + t).powf(-0.5) * (2.0 + t).ln().powi(3)
        });
        let fit = fit_decay(&s, "V", [10.0, 1000.0], -0.5, Band::between(-0.5, -0.2)).unwrap();
        assert!((fit.fitted_exponent - 0.165_956_144_873_558_6).abs() < 1e-9);
        assert!(!fit.pass);
    }

    #[test]
    fn fit_refusals() {
        let s = series(&log_times(1.0, 10.0, 5), "V", |t| 1.0 / t);
        assert!(matches!(
            fit_decay(&s, "V", [1.0, 10.0], -1.0, Band::around(-1.0, 0.1)),
            Err(Error::Fit(_))
        ));
        let z = series(&log_times(1.0, 10.0, 8), "V", |_| 0.0);
        assert!(fit_decay(&z, "V", [1.0, 10.0], -1.0, Band::around(-1.0, 0.1)).is_err());
    }

    #[test]
    fn series_rejects_bad_time_order() {
        let mut s = series(&[1.0, 2.0], "a", |t| t);
        assert!(s.push(2.0, BTreeMap::from([("a".into(), 1.0)])).is_err());
    }

    #[test]
    fn norms_of_exponential() {
        let g = HalfLineGrid::new(40_001, 40.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (-x).exp()).collect();
        let n = field_norms("f", &f, &g, 3);
        assert!((n["f_L1"] - 1.0).abs() < 1e-5);
        assert!((n["f_L2"] - 0.5f64.sqrt()).abs() < 1e-5);
        assert_eq!(n["f_Linf"], 1.0);
        assert!((n["fx_L2"] - 0.5f64.sqrt()).abs() < 1e-4);
        let zero = field_norms("z", &vec![0.0; g.n], &g, 3);
        assert!(zero.values().all(|&v| v == 0.0));
    }

    #[test]
    fn trapezoid_is_second_order() {
        let exact = 1.0 - (-10.0f64).exp();
        let err = |n: usize| {
            let g = HalfLineGrid::new(n, 10.0).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|x| (-x).exp()).collect();
            (lp_norm(&f, g.h, 1.0) - exact).abs()
        };
        let order = (err(101) / err(201)).log2();
        assert!((order - 2.0).abs() < 0.05);
    }

    #[test]
    fn gradient_of_planar_field_is_x_derivative() {
        let pg = HalfPlaneGrid::new(101, 10.0, 8, 4.0).unwrap();
        let mut f = vec![0.0; pg.len()];
        for i in 0..pg.nx() {
            for j in 0..pg.ny {
                f[pg.idx(i, j)] = (pg.x.x(i) * 0.3).sin();
            }
        }
        let col: Vec<f64> = (0..pg.nx()).map(|i| f[pg.idx(i, 0)]).collect();
        let fx = centered_derivative(&col, pg.hx());
        let sup = fx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((sup_gradient_2d(&f, &pg, 1) - sup).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_statuses() {
        let g = HalfLineGrid::new(64, 10.0).unwrap();
        let c = vec![0.3; 64];
        let zero = vec![0.0; 64];
        let rec = check_monotonicity_and_signs(0.0, &c, &zero, &g, true).unwrap();
        assert_eq!(rec.min_ux, 0.0);
        assert_eq!(rec.status, Status::Pass);
        let wiggly: Vec<f64> = g.nodes().iter().map(|x| 5.0 * x.sin()).collect();
        let rec = check_monotonicity_and_signs(0.0, &wiggly, &zero, &g, false).unwrap();
        assert_eq!(rec.status, Status::HypothesisUnmet);
        let rec = check_monotonicity_and_signs(0.0, &wiggly, &zero, &g, true).unwrap();
        assert_eq!(rec.status, Status::Fail);
    }

    #[test]
    fn l1_ratio_self_consistency() {
        let delta = 0.2;
        let c = 0.7;
        let s = series(&log_times(1.0, 1000.0, 30), "V_L1", |t| {
            if t == 1.0 {
                0.0
            } else {
                c * delta * (2.0 + t).ln()
            }
        });
        let rec = check_l1_growth(&s, "V_L1", delta).unwrap();
        assert!(rec.ratios.iter().all(|r| (r - c).abs() < 1e-12));
        assert!(rec.pass);
        let flat = series(&log_times(1.0, 100.0, 10), "V_L1", |t| 1.0 / t);
        assert!(check_l1_growth(&flat, "V_L1", 0.0).unwrap().pass);
    }

    #[test]
    fn l1_tail_is_the_second_half_in_time() {
        let delta = 0.2;
        let times = log_times(1.0, 1000.0, 40);
        // ratio rises until t = 300, then falls
        let ratio = |t: f64| 2.0 - ((t.ln() - 300f64.ln()) / 6.0).powi(2);
        let s = series(&times, "V_L1", |t| {
            if t == 1.0 {
                0.0
            } else {
                ratio(t) * delta * (2.0 + t).ln()
            }
        });
        assert!(check_l1_growth(&s, "V_L1", delta).unwrap().pass);
        let rising = series(&times, "V_L1", |t| if t == 1.0 { 0.0 } else { delta * t.sqrt() });
        assert!(!check_l1_growth(&rising, "V_L1", delta).unwrap().pass);
    }

    #[test]
    fn trend_checks() {
        let s = series(&log_times(10.0, 100.0, 12), "v_Linf", |t| 1.0 / t);
        assert!(check_2d_decay(&s, &["v_Linf"]).unwrap()[0].pass);
        let z = series(&log_times(10.0, 100.0, 12), "v_Linf", |_| 0.0);
        let r = &check_2d_decay(&z, &["v_Linf"]).unwrap()[0];
        assert!(r.pass && r.at_round_off);
        let up = series(&log_times(10.0, 100.0, 12), "v_Linf", |t| t);
        assert!(!check_2d_decay(&up, &["v_Linf"]).unwrap()[0].pass);
    }

    #[test]
    fn decomposition_round_trip() {
        let pg = HalfPlaneGrid::new(32, 5.0, 4, 1.0).unwrap();
        let u_ref: Vec<f64> = (0..32).map(|i| i as f64 * 0.01).collect();
        let q_ref: Vec<f64> = (0..32).map(|i| -(i as f64) * 0.001).collect();
        let mut u = vec![0.0; pg.len()];
        let mut q1 = vec![0.0; pg.len()];
        for i in 0..32 {
            for j in 0..4 {
                u[pg.idx(i, j)] = u_ref[i];
                q1[pg.idx(i, j)] = q_ref[i];
            }
        }
        let d = decompose_2d(&u, &q1, &vec![0.0; pg.len()], &u_ref, &q_ref, &pg).unwrap();
        assert!(d.v.iter().chain(&d.p1).chain(&d.p2).all(|&x| x == 0.0));
        assert!(decompose_1d(&u_ref, &q_ref, &u_ref[..4], &q_ref).is_err());
    }
}
