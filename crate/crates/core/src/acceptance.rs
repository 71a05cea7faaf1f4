//! The acceptance suite: ten pass/fail criteria with pinned tolerances.
//!
//! Reports hold only deterministic quantities; wall-clock times are kept
//! apart in [`Timing`] so two runs can be compared byte for byte.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{check_l1_growth, fit_power_law, lp_norm, Band, Q_SIGN_TOLERANCE};
use crate::elliptic::{centered_derivative, image_convolution, solve_q_1d, Boundary};
use crate::error::{Error, Result};
use crate::evolve::{Formulation, InitialFamily, Solver1D};
use crate::flux::{FluxPair, RiemannData};
use crate::grid::HalfLineGrid;
use crate::hopf_cole::HopfCole;
use crate::oracle::burgers_riemann_quadrature;
use crate::profiles::{log_spaced, modified_profile, profile_property_suite};
use crate::runner::{run_simulation, to_json, RunReport, Trajectory};
use crate::scenario::{parse_scenario, Scenario};

pub const THM31_SCENARIO: &str = include_str!("../../../scenarios/thm31_default.toml");
pub const THM32_SCENARIO: &str = include_str!("../../../scenarios/thm32_default.toml");
pub const PLANAR_CONTROL_SCENARIO: &str = include_str!("../../../scenarios/planar_control.toml");

/// Configuration read by `radgas accept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    /// Subset of criteria to run; all when absent.
    #[serde(default)]
    pub criteria: Option<Vec<u32>>,
}

impl AcceptanceConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(vec![e.message().to_string()]))
    }

    fn wants(&self, id: u32) -> bool {
        self.criteria.as_ref().is_none_or(|c| c.contains(&id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u32, title: &str) -> Self {
        Self {
            id,
            title: title.to_string(),
            pass: true,
            measured: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    fn require(&mut self, ok: bool, what: &str) {
        if !ok {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what);
        }
    }

    /// One-line summary: `PASS [3] title (key = value, ...)`.
    pub fn line(&self) -> String {
        let values: Vec<String> = self
            .measured
            .iter()
            .map(|(k, v)| format!("{k} = {v:.4e}"))
            .collect();
        let mut s = format!(
            "{} [{}] {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            values.join(", ")
        );
        if !self.detail.is_empty() {
            s.push_str(&format!(" -- {}", self.detail));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn get(&self, id: u32) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub id: u32,
    pub seconds: f64,
    pub budget_seconds: f64,
}

/// Observed orders `log2(e_k / e_{k+1})`.
fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn evaluate(mut r: CriterionResult, f: impl FnOnce(&mut CriterionResult) -> Result<()>) -> CriterionResult {
    if let Err(e) = f(&mut r) {
        r.require(false, &format!("error: {e}"));
    }
    r
}

/// 1. Neumann kernel vs tridiagonal `Q` solve, and kernel closed forms.
pub fn elliptic_equivalence() -> CriterionResult {
    evaluate(CriterionResult::new(1, "elliptic kernel and Q solve agree at order 2"), |r| {
        let mut errors = Vec::new();
        for k in 0..4 {
            let grid = HalfLineGrid::new(640 * (1 << k) + 1, 40.0)?;
            let u: Vec<f64> = grid.nodes().iter().map(|x| 0.1 + 0.8 * (1.0 - (-2.0 * x).exp())).collect();
            let minus_ux: Vec<f64> = centered_derivative(&u, grid.h).iter().map(|v| -v).collect();
            let kq = image_convolution(&minus_ux, &grid, 1.0, Boundary::Neumann, 0.0)?;
            let q = solve_q_1d(&u, &grid)?;
            errors.push(sup_diff(&kq.values, &q));
        }
        let orders = observed_orders(&errors);
        for (i, p) in orders.iter().enumerate() {
            r.measure(&format!("order_{}", i + 1), *p);
        }
        r.require(orders.iter().all(|p| (p - 2.0).abs() <= 0.3), "observed order outside 2 +- 0.3");

        let h = 1.0 / 256.0;
        let grid = HalfLineGrid::with_spacing(40 * 256 + 1, h)?;
        let x = grid.nodes();
        let ones = vec![1.0; grid.n];
        let decay: Vec<f64> = x.iter().map(|x| (-x).exp()).collect();
        let cases: [(&str, &[f64], Boundary, f64, Box<dyn Fn(f64) -> f64>); 4] = [
            ("dirichlet_one", &ones, Boundary::Dirichlet, 1.0, Box::new(|x: f64| 1.0 - (-x).exp())),
            ("neumann_one", &ones, Boundary::Neumann, 1.0, Box::new(|_| 1.0)),
            ("dirichlet_exp", &decay, Boundary::Dirichlet, 0.0, Box::new(|x: f64| 0.5 * x * (-x).exp())),
            ("neumann_exp", &decay, Boundary::Neumann, 0.0, Box::new(|x: f64| 0.5 * (x + 1.0) * (-x).exp())),
        ];
        for (name, f, boundary, far, exact) in cases {
            let got = image_convolution(f, &grid, 1.0, boundary, far)?;
            let err = got
                .values
                .iter()
                .zip(&x)
                .map(|(v, &x)| (v - exact(x)).abs())
                .fold(0.0, f64::max);
            r.measure(&format!("closed_form_{name}"), err);
            r.require(err <= 1e-6, &format!("{name} closed form off by more than 1e-6"));
        }
        Ok(())
    })
}

/// 2. Hopf-Cole closed form vs heat-kernel quadrature, and its PDE residual.
pub fn hopf_cole_correctness(seed: u64) -> CriterionResult {
    evaluate(CriterionResult::new(2, "Hopf-Cole closed form matches quadrature oracle"), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
        let points: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.random_range(0.0..20.0), rng.random_range(0.1..100.0)))
            .collect();
        let mut worst_gap: f64 = 0.0;
        let mut worst_residual: f64 = 0.0;
        for (wm, wp) in [(0.1, 0.3), (-1.0, 1.0)] {
            let hc = HopfCole::new(wm, wp)?;
            for &(x, t) in &points {
                let oracle = burgers_riemann_quadrature(wm, wp, x, t)?;
                worst_gap = worst_gap.max((hc.value(x, t) - oracle).abs());
                let j = hc.jet(x, t)?;
                let residual = j.partial(0, 1) + j.value() * j.partial(1, 0) - j.partial(2, 0);
                worst_residual = worst_residual.max(residual.abs());
            }
        }
        r.measure("max_oracle_gap", worst_gap);
        r.measure("max_pde_residual", worst_residual);
        r.require(worst_gap <= 1e-8, "closed form and oracle differ by more than 1e-8");
        r.require(worst_residual <= 1e-6, "PDE residual above 1e-6");
        Ok(())
    })
}

/// Grid and times shared by the profile criteria.
fn profile_setup() -> Result<(HalfLineGrid, Vec<f64>)> {
    Ok((HalfLineGrid::new(20001, 1000.0)?, log_spaced(5.0, 500.0, 12)))
}

/// 3. `||w - r||_inf` decays like `t^{-1/2}` and `w_x > 0`.
pub fn profile_decay() -> CriterionResult {
    evaluate(CriterionResult::new(3, "profile distance to rarefaction decays at rate -1/2"), |r| {
        let flux = FluxPair::burgers();
        let data = RiemannData::new(&flux, 0.0, 1.0)?;
        let (grid, times) = profile_setup()?;
        let suite = profile_property_suite(&flux, &data, &grid, &times, &[f64::INFINITY])?;
        let values = &suite
            .fits
            .iter()
            .find(|f| f.label == "w_minus_r_Linf")
            .ok_or_else(|| Error::Fit("w_minus_r_Linf missing".into()))?
            .values;
        let (b, _, r2, _) = fit_power_law(&times, values, [5.0, 500.0], 6)?;
        r.measure("exponent", b);
        r.measure("r_squared", r2);
        r.measure("wx_positive", if suite.monotone { 1.0 } else { 0.0 });
        r.require(Band::around(-0.5, 0.1).contains(b), "exponent outside -0.5 +- 0.1");
        r.require(suite.monotone, "w_x not positive at every sampled time");
        Ok(())
    })
}

pub const MONOTONE_RUNS: usize = 50;

/// 4. Random monotone data keep `U_x >= -10h` and `Q <= 1e-8` at every step.
pub fn monotonicity(seed: u64) -> CriterionResult {
    evaluate(CriterionResult::new(4, "monotone data stay monotone with Q <= 0"), |r| {
        let flux = FluxPair::burgers();
        let grid = HalfLineGrid::new(1024, 500.0)?;
        let tol_ux = -10.0 * grid.h;
        let runs: Vec<(f64, f64)> = (0..MONOTONE_RUNS)
            .into_par_iter()
            .map(|k| -> Result<(f64, f64)> {
                let family = InitialFamily::RandomMonotone {
                    knots: 8,
                    spread: 100.0,
                    seed: seed.wrapping_add(k as u64),
                };
                let u0 = family.sample(&flux, 0.1, 0.9, &grid, 0.0)?;
                let solver = Solver1D::new(&flux, grid, 0.1, Formulation::Coupled);
                let mut st = solver.initial_state(0.0, u0)?;
                let steps = (50.0 / (0.9 * solver.max_dt(&st.u))).ceil() as usize;
                let dt = 50.0 / steps as f64;
                let mut min_ux = f64::INFINITY;
                let mut max_q = f64::NEG_INFINITY;
                let mut observe = |u: &[f64], q: &[f64]| {
                    let ux = u.windows(2).map(|w| (w[1] - w[0]) / grid.h).fold(f64::INFINITY, f64::min);
                    min_ux = min_ux.min(ux);
                    max_q = max_q.max(q.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                };
                observe(&st.u, &st.q);
                for _ in 0..steps {
                    solver.step(&mut st, dt)?;
                    observe(&st.u, &st.q);
                }
                Ok((min_ux, max_q))
            })
            .collect::<Result<_>>()?;
        let min_ux = runs.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let max_q = runs.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        r.measure("runs", runs.len() as f64);
        r.measure("min_ux", min_ux);
        r.measure("max_q", max_q);
        r.require(min_ux >= tol_ux, "min U_x below -10h");
        r.require(max_q <= Q_SIGN_TOLERANCE, "max Q above 1e-8");
        Ok(())
    })
}

/// 5. Coupled and convolution trajectories converge to each other.
pub fn cross_formulation() -> CriterionResult {
    evaluate(CriterionResult::new(5, "coupled and convolution routes converge together"), |r| {
        let flux = FluxPair::burgers();
        let family = InitialFamily::Tanh { center: 20.0, width: 3.0 };
        let mut gaps = Vec::new();
        for k in 0..3 {
            let grid = HalfLineGrid::new(400 * (1 << k) + 1, 100.0)?;
            let u0 = family.sample(&flux, 0.1, 0.9, &grid, 0.0)?;
            let steps = 100 << k;
            let dt = 10.0 / steps as f64;
            let run = |form| -> Result<Vec<f64>> {
                let solver = Solver1D::new(&flux, grid, 0.1, form);
                let mut st = solver.initial_state(0.0, u0.clone())?;
                for _ in 0..steps {
                    solver.step(&mut st, dt)?;
                }
                Ok(st.u)
            };
            gaps.push(sup_diff(&run(Formulation::Coupled)?, &run(Formulation::Convolution)?));
        }
        for (i, g) in gaps.iter().enumerate() {
            r.measure(&format!("gap_level_{i}"), *g);
        }
        for (i, w) in gaps.windows(2).enumerate() {
            let factor = w[0] / w[1];
            r.measure(&format!("factor_{}", i + 1), factor);
            r.require(factor >= 3.0, "gap shrank by less than 3 under refinement");
        }
        Ok(())
    })
}

/// Runs the 1D perturbation scenario used by criteria 6 and 7.
pub fn thm31_run() -> Result<(Scenario, Trajectory)> {
    let s = parse_scenario(THM31_SCENARIO)?;
    let traj = run_simulation(&s)?;
    Ok((s, traj))
}

fn fit_of<'a>(report: &'a RunReport, label: &str) -> Result<&'a crate::diagnostics::DecayFit> {
    report
        .fits
        .iter()
        .find(|f| f.label == label)
        .and_then(|f| f.fit.as_ref())
        .ok_or_else(|| Error::Fit(format!("no fit for {label}")))
}

/// 6. `||V||_inf` and `||V_x||_inf` decay rates.
pub fn perturbation_decay(run: &Result<(Scenario, Trajectory)>) -> CriterionResult {
    evaluate(CriterionResult::new(6, "1D perturbation decay rates"), |r| {
        let (_, traj) = run.as_ref().map_err(|e| Error::Config(e.to_string()))?;
        r.require(traj.report.completed, "run aborted");
        let v = fit_of(&traj.report, "V_Linf")?;
        let vx = fit_of(&traj.report, "Vx_Linf")?;
        r.measure("V_Linf_exponent", v.fitted_exponent);
        r.measure("Vx_Linf_exponent", vx.fitted_exponent);
        r.measure("window_lo", v.window[0]);
        r.measure("window_hi", v.window[1]);
        r.require(
            Band::between(-0.65, -0.30).contains(v.fitted_exponent),
            "V_Linf exponent outside [-0.65, -0.30]",
        );
        r.require(vx.fitted_exponent <= -0.5, "Vx_Linf exponent above -0.5");
        Ok(())
    })
}

/// 7. `(||V(t)||_1 - ||V_0||_1) / (delta log(2+t))` bounded, not increasing late.
pub fn l1_growth(run: &Result<(Scenario, Trajectory)>) -> CriterionResult {
    evaluate(CriterionResult::new(7, "L1 growth bounded by delta log(2+t)"), |r| {
        let (s, traj) = run.as_ref().map_err(|e| Error::Config(e.to_string()))?;
        let rec = check_l1_growth(&traj.series, "V_L1", s.u_plus - s.u_minus)?;
        r.measure("sup_ratio", rec.sup_ratio);
        r.measure("tail_max_increase", rec.tail_max_increase);
        r.require(rec.sup_ratio.is_finite(), "ratio unbounded");
        r.require(rec.tail_nonincreasing, "ratio increases over the final half");
        Ok(())
    })
}

/// 8. Residual decay for the quartic flux.
pub fn residual_decay() -> CriterionResult {
    evaluate(CriterionResult::new(8, "profile residuals decay"), |r| {
        let flux = FluxPair::quartic();
        let data = RiemannData::new(&flux, 0.0, 1.0)?;
        let (grid, times) = profile_setup()?;
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        for &t in &times {
            let b = modified_profile(&flux, &data, &grid, t)?;
            r1.push(lp_norm(&b.r1, grid.h, 1.0));
            r2.push(lp_norm(&b.r2, grid.h, 2.0));
        }
        let (b1, ..) = fit_power_law(&times, &r1, [5.0, 500.0], 6)?;
        let (b2, ..) = fit_power_law(&times, &r2, [5.0, 500.0], 6)?;
        r.measure("R1_L1_exponent", b1);
        r.measure("R2_L2_exponent", b2);
        r.require(Band::around(-1.0, 0.2).contains(b1), "R1 L1 exponent outside -1 +- 0.2");
        r.require(b2 <= -1.5, "R2 L2 exponent above -1.5");
        Ok(())
    })
}

/// 9. 2D decay of a transverse perturbation and the planar control.
pub fn planar_stability() -> CriterionResult {
    evaluate(CriterionResult::new(9, "2D perturbation decays; planar symmetry kept"), |r| {
        let s = parse_scenario(THM32_SCENARIO)?;
        let traj = run_simulation(&s)?;
        r.require(traj.report.completed, "2D run aborted");
        let series = &traj.series;
        let at = |label: &str, t: f64| -> Result<f64> {
            let k = series
                .times
                .iter()
                .position(|&s| s == t)
                .ok_or_else(|| Error::Fit(format!("no sample at t = {t}")))?;
            Ok(series.get(label)?[k])
        };
        let v10 = at("v_sup", 10.0)?;
        let v100 = at("v_sup", 100.0)?;
        r.measure("v_sup_10", v10);
        r.measure("v_sup_100", v100);
        r.require(v100 < 0.2 * v10, "sup|v|(100) not below 0.2 sup|v|(10)");
        for label in ["grad_v_sup", "p_sup", "grad_divp_sup"] {
            let tr = traj
                .report
                .trends
                .iter()
                .find(|t| t.label == label)
                .ok_or_else(|| Error::Fit(format!("no trend for {label}")))?;
            r.measure(&format!("{label}_final_slope"), tr.final_quarter_slope);
            r.require(tr.pass, &format!("{label} not decreasing on the final quarter"));
        }
        let curl = series.get("curl")?.iter().copied().fold(0.0, f64::max);
        r.measure("max_curl", curl);
        r.require(curl <= 1e-6, "curl residual above 1e-6");

        let control = parse_scenario(PLANAR_CONTROL_SCENARIO)?;
        let ctraj = run_simulation(&control)?;
        let spread = ctraj.series.get("y_spread")?.iter().copied().fold(0.0, f64::max);
        let control_v = ctraj.series.get("v_sup")?.iter().copied().fold(0.0, f64::max);
        r.measure("control_y_spread", spread);
        r.measure("control_v_sup", control_v);
        r.require(spread <= 1e-10 && control_v <= 1e-10, "planar control lost y-independence");
        Ok(())
    })
}

/// Criteria 1 to 9, each measured once.
pub fn run_criteria(config: &AcceptanceConfig, timings: &mut Vec<Timing>) -> AcceptanceReport {
    let mut criteria = Vec::new();
    let mut timed = |id: u32, budget: f64, f: &mut dyn FnMut() -> Vec<CriterionResult>| {
        if !config.wants(id) {
            return;
        }
        let start = Instant::now();
        let results = f();
        timings.push(Timing {
            id,
            seconds: start.elapsed().as_secs_f64(),
            budget_seconds: budget,
        });
        criteria.extend(results);
    };
    timed(1, 10.0, &mut || vec![elliptic_equivalence()]);
    timed(2, 30.0, &mut || vec![hopf_cole_correctness(config.seed)]);
    timed(3, 60.0, &mut || vec![profile_decay()]);
    timed(4, 300.0, &mut || vec![monotonicity(config.seed)]);
    timed(5, f64::INFINITY, &mut || vec![cross_formulation()]);
    if config.wants(6) || config.wants(7) {
        let start = Instant::now();
        let run = thm31_run();
        let elapsed = start.elapsed().as_secs_f64();
        if config.wants(6) {
            timings.push(Timing { id: 6, seconds: elapsed, budget_seconds: 900.0 });
            criteria.push(perturbation_decay(&run));
        }
        if config.wants(7) {
            criteria.push(l1_growth(&run));
        }
    }
    let mut timed = |id: u32, budget: f64, f: &mut dyn FnMut() -> CriterionResult| {
        if !config.wants(id) {
            return;
        }
        let start = Instant::now();
        let result = f();
        timings.push(Timing {
            id,
            seconds: start.elapsed().as_secs_f64(),
            budget_seconds: budget,
        });
        criteria.push(result);
    };
    timed(8, f64::INFINITY, &mut residual_decay);
    timed(9, 1800.0, &mut planar_stability);
    for t in timings.iter() {
        if t.seconds > t.budget_seconds {
            if let Some(c) = criteria.iter_mut().find(|c| c.id == t.id) {
                c.require(false, &format!("runtime {:.1} s over budget {} s", t.seconds, t.budget_seconds));
            }
        }
    }
    AcceptanceReport {
        seed: config.seed,
        criteria,
    }
}

/// Full suite. Criterion 10 reruns 1 to 9 and compares the serialized reports.
pub fn run_acceptance(config: &AcceptanceConfig) -> Result<(AcceptanceReport, Vec<Timing>)> {
    let mut timings = Vec::new();
    let mut report = run_criteria(config, &mut timings);
    if config.wants(10) {
        let mut second_timings = Vec::new();
        let again = run_criteria(config, &mut second_timings);
        let first = to_json(&report)?;
        let second = to_json(&again)?;
        let mut c = CriterionResult::new(10, "two runs give byte-identical reports");
        c.measure("report_bytes", first.len() as f64);
        c.require(first == second, "reports differ between runs");
        report.criteria.push(c);
    }
    Ok((report, timings))
}
