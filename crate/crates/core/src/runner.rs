//! Turns validated scenarios into runs, profile studies and convergence
//! studies, and writes their artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    check_2d_decay, check_l1_growth, check_monotonicity_and_signs, decompose_1d, decompose_2d,
    field_norms, fit_decay, format_num, lp_norm, lp_norm_2d, sup_gradient_2d,
    DecayFit, L1GrowthRecord, MonotonicityRecord, NormSeries, Status, TrendRecord,
};
use crate::elliptic::{neumann_derivative, solve_q_1d};
use crate::error::{Error, Result};
use crate::evolve::{integrate, Formulation, Solver1D, Solver2D, State1D, State2D};
use crate::flux::FluxPair;
use crate::grid::{HalfLineGrid, HalfPlaneGrid};
use crate::profiles::{modified_profile, profile_property_suite, ProfilePropertyReport};
use crate::scenario::{ConvergenceTarget, FormulationChoice, Kind, Scenario};

/// Threshold below which a 2D curl residual counts as satisfied.
pub const CURL_TOLERANCE: f64 = 1e-6;
/// Operand of the nonlocal operator in the convolution route.
pub const K_ROUTE_LIFT: &str =
    "K applied to U - u_minus (vanishes at x = 0); beyond x = L the operand is held at its last grid value";
/// Norm labels checked for eventual decrease in 2D runs.
pub const TREND_LABELS: [&str; 5] = ["v_sup", "grad_v_sup", "p_sup", "grad_p_sup", "grad_divp_sup"];
/// `p` values used by the profile property suite.
pub const PROFILE_P_VALUES: [f64; 3] = [1.0, 2.0, f64::INFINITY];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutcome {
    pub label: String,
    pub must_pass: bool,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config_hash: String,
    pub kind: Kind,
    pub completed: bool,
    pub abort_reason: Option<String>,
    pub t_reached: f64,
    pub steps: usize,
    pub max_courant: f64,
    pub fits: Vec<FitOutcome>,
    pub monotonicity: Option<MonotonicityRecord>,
    pub l1_growth: Option<L1GrowthRecord>,
    pub trends: Vec<TrendRecord>,
    pub max_curl_residual: Option<f64>,
    pub max_formulation_gap: Option<f64>,
    pub profile_suite: Option<ProfilePropertyReport>,
    /// Fourth-derivative norms are not computed.
    pub notes: Vec<String>,
    pub must_pass_failures: Vec<String>,
}

impl RunReport {
    fn new(s: &Scenario) -> Self {
        Self {
            scenario: s.name.clone(),
            config_hash: s.config_hash(),
            kind: s.kind,
            completed: true,
            abort_reason: None,
            t_reached: s.t0,
            steps: 0,
            max_courant: 0.0,
            fits: Vec::new(),
            monotonicity: None,
            l1_growth: None,
            trends: Vec::new(),
            max_curl_residual: None,
            max_formulation_gap: None,
            profile_suite: None,
            notes: vec!["derivative norms are reported up to third differences only".into()],
            must_pass_failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.completed && self.must_pass_failures.is_empty()
    }
}

/// Snapshot table: column names and rows of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub columns: Vec<&'static str>,
    pub data: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        let rows = self.data.first().map_or(0, Vec::len);
        for i in 0..rows {
            let line: Vec<String> = self.data.iter().map(|c| format_num(c[i])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub series: NormSeries,
    pub report: RunReport,
}

fn is_member(times: &[f64], t: f64) -> bool {
    times.iter().any(|&s| s == t)
}

fn nominal_dt(s: &Scenario, flux: &FluxPair, u0: &[f64], h_over_speed: impl Fn(f64) -> f64) -> f64 {
    if let Some(dt) = s.dt {
        return dt;
    }
    let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let speed = flux.fp(lo).abs().max(flux.fp(hi).abs());
    s.cfl * h_over_speed(speed) / 1.1
}

fn record_fits(s: &Scenario, series: &NormSeries, report: &mut RunReport) {
    for spec in &s.fits {
        let window = s.fit_window(spec);
        let outcome = match fit_decay(series, &spec.label, window, spec.reference_exponent, spec.band) {
            Ok(fit) => FitOutcome {
                label: spec.label.clone(),
                must_pass: spec.must_pass,
                pass: fit.pass,
                fit: Some(fit),
                error: None,
            },
            Err(e) => FitOutcome {
                label: spec.label.clone(),
                must_pass: spec.must_pass,
                fit: None,
                error: Some(e.to_string()),
                pass: false,
            },
        };
        if outcome.must_pass && !outcome.pass {
            report.must_pass_failures.push(format!("fit {}", spec.label));
        }
        report.fits.push(outcome);
    }
}

fn abort(report: &mut RunReport, e: &Error) {
    report.completed = false;
    report.abort_reason = Some(e.to_string());
}

/// Runs the scenario in memory. Step failures end the run early and are
/// recorded in the report; setup problems are returned as errors.
pub fn run_simulation(s: &Scenario) -> Result<Trajectory> {
    match s.kind {
        Kind::Profiles => run_profiles(s),
        Kind::Run1d => run_1d(s),
        Kind::Run2d => run_2d(s),
    }
}

fn profile_snapshot(s: &Scenario, grid: &HalfLineGrid, t: f64) -> Result<Snapshot> {
    let data = s.data()?;
    let b = modified_profile(&s.flux, &data, grid, t)?;
    Ok(Snapshot {
        t,
        columns: vec!["x", "r", "w", "u_tilde", "q_tilde", "R1", "R2"],
        data: vec![grid.nodes(), b.r, b.w, b.u_tilde, b.q_tilde, b.r1, b.r2],
    })
}

fn run_profiles(s: &Scenario) -> Result<Trajectory> {
    let grid = s.line_grid()?;
    let data = s.data()?;
    let times = s.diagnostic_times();
    let suite = profile_property_suite(&s.flux, &data, &grid, &times, &PROFILE_P_VALUES)?;
    let mut series = NormSeries::new();
    for (k, &t) in suite.times.iter().enumerate() {
        let entries = suite
            .fits
            .iter()
            .map(|f| (f.label.clone(), f.values[k]))
            .collect();
        series.push(t, entries)?;
    }
    let snapshots = s
        .snapshots
        .iter()
        .map(|&t| profile_snapshot(s, &grid, t))
        .collect::<Result<_>>()?;
    let mut report = RunReport::new(s);
    report.t_reached = s.t_final;
    if !suite.pass {
        report.must_pass_failures.push("profile property suite".into());
    }
    report.profile_suite = Some(suite);
    Ok(Trajectory {
        snapshots,
        series,
        report,
    })
}

fn line_snapshot(t: f64, grid: &HalfLineGrid, st: &State1D, u_tilde: &[f64], v: &[f64]) -> Snapshot {
    Snapshot {
        t,
        columns: vec!["x", "U", "Q", "u_tilde", "V"],
        data: vec![grid.nodes(), st.u.clone(), st.q.clone(), u_tilde.to_vec(), v.to_vec()],
    }
}

fn run_1d(s: &Scenario) -> Result<Trajectory> {
    let grid = s.line_grid()?;
    let data = s.data()?;
    let u0 = s.initial.sample(&s.flux, s.u_minus, s.u_plus, &grid, s.t0)?;
    let monotone = s.initial.is_monotone() && u0.windows(2).all(|w| w[1] >= w[0]);
    let primary_form = match s.formulation {
        FormulationChoice::Convolution => Formulation::Convolution,
        _ => Formulation::Coupled,
    };
    let mut primary = Solver1D::new(&s.flux, grid, s.u_minus, primary_form);
    primary.cfl = s.cfl;
    let secondary = (s.formulation == FormulationChoice::Both).then(|| {
        let mut sv = Solver1D::new(&s.flux, grid, s.u_minus, Formulation::Convolution);
        sv.cfl = s.cfl;
        sv
    });
    let dt = nominal_dt(s, &s.flux, &u0, |c| if c > 0.0 { grid.h / c } else { f64::INFINITY });
    let diag = s.diagnostic_times();
    let outputs = s.output_times();

    let mut states = (
        primary.initial_state(s.t0, u0.clone())?,
        secondary.as_ref().map(|sv| sv.initial_state(s.t0, u0.clone())).transpose()?,
    );
    let mut series = NormSeries::new();
    let mut snapshots = Vec::new();
    let mut report = RunReport::new(s);
    let mut worst: Option<MonotonicityRecord> = None;
    let mut max_gap: f64 = 0.0;

    let result = integrate(
        &mut states,
        &outputs,
        dt,
        s.dt.is_some(),
        |(a, b), h| {
            primary.step(a, h)?;
            if let (Some(b), Some(sv)) = (b.as_mut(), secondary.as_ref()) {
                sv.step(b, h)?;
            }
            Ok(())
        },
        |(a, _)| a.t,
        |(a, b), t| {
            a.t = t;
            if let Some(b) = b.as_mut() {
                b.t = t;
            }
        },
        |(a, b)| {
            let t = a.t;
            let bundle = modified_profile(&s.flux, &data, &grid, t)?;
            let (v, p) = decompose_1d(&a.u, &a.q, &bundle.u_tilde, &bundle.q_tilde)?;
            if is_member(&diag, t) {
                let mut entries = field_norms("V", &v, &grid, s.max_order);
                entries.extend(field_norms("P", &p, &grid, 1));
                if let Some(b) = b {
                    let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    max_gap = max_gap.max(gap);
                    entries.insert("gap_Linf".into(), gap);
                }
                series.push(t, entries)?;
                let rec = check_monotonicity_and_signs(t, &a.u, &a.q, &grid, monotone)?;
                let replace = worst
                    .as_ref()
                    .is_none_or(|w| rec.min_ux < w.min_ux || rec.status != Status::Pass && w.status == Status::Pass);
                if replace {
                    worst = Some(rec);
                }
            }
            if is_member(&s.snapshots, t) {
                snapshots.push(line_snapshot(t, &grid, a, &bundle.u_tilde, &v));
            }
            Ok(())
        },
    );
    if let Err(e) = result {
        abort(&mut report, &e);
    }
    report.t_reached = states.0.t;
    report.steps = states.0.steps;
    report.max_courant = states.0.max_courant;
    if secondary.is_some() {
        report.max_formulation_gap = Some(max_gap);
    }
    if let Some(w) = &worst {
        if w.status == Status::Fail {
            report.must_pass_failures.push("monotonicity and Q sign".into());
        }
    }
    report.monotonicity = worst;
    if report.completed {
        record_fits(s, &series, &mut report);
        if series.len() >= 2 {
            report.l1_growth = check_l1_growth(&series, "V_L1", data.delta).ok();
        }
    }
    Ok(Trajectory {
        snapshots,
        series,
        report,
    })
}

fn broadcast(column: &[f64], ny: usize) -> Vec<f64> {
    column.iter().flat_map(|&v| std::iter::repeat_n(v, ny)).collect()
}

/// Largest `max_j u - min_j u` over the rows.
pub fn y_spread(u: &[f64], ny: usize) -> f64 {
    u.chunks(ny)
        .map(|row| {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn sup(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Sup norms of the planar deviation `(v, p)` and its derivatives.
pub fn planar_deviation_norms(
    a: &State2D,
    reference: &State1D,
    solver: &Solver2D,
) -> Result<BTreeMap<String, f64>> {
    let grid = &solver.grid;
    let dev = decompose_2d(&a.u, &a.q1, &a.q2, &reference.u, &reference.q, grid)?;
    let qx = neumann_derivative(&reference.q, grid.hx());
    let divp: Vec<f64> = a
        .s
        .iter()
        .enumerate()
        .map(|(k, s)| s - qx[k / grid.ny])
        .collect();
    let p_sup = dev.p1.iter().zip(&dev.p2).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
    let grad_p_sup = sup_gradient_2d(&dev.p1, grid, 1).max(sup_gradient_2d(&dev.p2, grid, 1));
    let mut m = BTreeMap::new();
    m.insert("v_sup".to_string(), sup(&dev.v));
    m.insert("v_L2".to_string(), lp_norm_2d(&dev.v, grid, 2.0));
    m.insert("grad_v_sup".to_string(), sup_gradient_2d(&dev.v, grid, 1));
    m.insert("p_sup".to_string(), p_sup);
    m.insert("grad_p_sup".to_string(), grad_p_sup);
    m.insert("divp_sup".to_string(), sup(&divp));
    m.insert("grad_divp_sup".to_string(), sup_gradient_2d(&divp, grid, 1));
    m.insert("curl".to_string(), solver.elliptic().curl_residual(&a.q1, &a.q2, true)?);
    m.insert("y_spread".to_string(), y_spread(&a.u, grid.ny));
    Ok(m)
}

/// Planar data `U0` and full 2D data `u0` for a run2d scenario.
pub fn initial_data_2d(s: &Scenario, grid: &HalfPlaneGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let planar = s.initial.sample(&s.flux, s.u_minus, s.u_plus, &grid.x, s.t0)?;
    let mut u0 = broadcast(&planar, grid.ny);
    if let Some(tr) = &s.transverse {
        if tr.amplitude != 0.0 {
            let ly = grid.ly();
            for i in 0..grid.nx() {
                let x = grid.x.x(i);
                for j in 0..grid.ny {
                    let phase = 2.0 * std::f64::consts::PI * tr.mode as f64 * grid.y(j) / ly;
                    u0[grid.idx(i, j)] += tr.amplitude * phase.sin() * x * (-x).exp();
                }
            }
        }
    }
    Ok((planar, u0))
}

fn run_2d(s: &Scenario) -> Result<Trajectory> {
    let grid = s.plane_grid()?;
    let (planar, u0) = initial_data_2d(s, &grid)?;
    let mut solver = Solver2D::new(&s.flux, grid, s.u_minus);
    solver.cfl = s.cfl;
    let mut reference = Solver1D::new(&s.flux, grid.x, s.u_minus, Formulation::Coupled);
    reference.cfl = s.cfl;
    let dt = {
        let fx = nominal_dt(s, &s.flux, &u0, |c| if c > 0.0 { grid.hx() / c } else { f64::INFINITY });
        let gflux = FluxPair::polynomial("g", s.flux.g.coeffs().to_vec(), vec![0.0], 1.0);
        let fy = nominal_dt(s, &gflux, &u0, |c| if c > 0.0 { grid.hy / c } else { f64::INFINITY });
        fx.min(fy)
    };
    let diag = s.diagnostic_times();
    let outputs = s.output_times();
    let mut states = (
        solver.initial_state(s.t0, u0)?,
        reference.initial_state(s.t0, planar)?,
    );
    let mut series = NormSeries::new();
    let mut snapshots = Vec::new();
    let mut report = RunReport::new(s);
    let mut max_curl: f64 = 0.0;

    let result = integrate(
        &mut states,
        &outputs,
        dt,
        s.dt.is_some(),
        |(a, b), h| {
            solver.step(a, h)?;
            reference.step(b, h)
        },
        |(a, _)| a.t,
        |(a, b), t| {
            a.t = t;
            b.t = t;
        },
        |(a, b)| {
            let t = a.t;
            if is_member(&diag, t) {
                let entries = planar_deviation_norms(a, b, &solver)?;
                max_curl = max_curl.max(entries["curl"]);
                series.push(t, entries)?;
            }
            if is_member(&s.snapshots, t) {
                let (xs, ys): (Vec<f64>, Vec<f64>) = (0..grid.len())
                    .map(|k| (grid.x.x(k / grid.ny), grid.y(k % grid.ny)))
                    .unzip();
                snapshots.push(Snapshot {
                    t,
                    columns: vec!["x", "y", "U", "Q", "u", "q1", "q2", "s"],
                    data: vec![
                        xs,
                        ys,
                        broadcast(&b.u, grid.ny),
                        broadcast(&b.q, grid.ny),
                        a.u.clone(),
                        a.q1.clone(),
                        a.q2.clone(),
                        a.s.clone(),
                    ],
                });
            }
            Ok(())
        },
    );
    if let Err(e) = result {
        abort(&mut report, &e);
    }
    report.t_reached = states.0.t;
    report.steps = states.0.steps;
    report.max_courant = states.0.max_courant;
    report.max_curl_residual = Some(max_curl);
    if max_curl > CURL_TOLERANCE {
        report.must_pass_failures.push("curl residual".into());
    }
    if report.completed {
        if series.len() >= 4 {
            report.trends = check_2d_decay(&series, &TREND_LABELS)?;
            for tr in &report.trends {
                if !tr.pass {
                    report.must_pass_failures.push(format!("decay trend {}", tr.label));
                }
            }
        }
        record_fits(s, &series, &mut report);
    }
    Ok(Trajectory {
        snapshots,
        series,
        report,
    })
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_hash: String,
    pub radgas_version: String,
    pub wall_time_seconds: f64,
    pub completed: bool,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SnapshotHeader<'a> {
    t: f64,
    config_hash: &'a str,
    scheme: &'static str,
    cfl: f64,
    formulation: FormulationChoice,
    k_route_lift: &'static str,
    grid: BTreeMap<&'static str, f64>,
    columns: &'a [&'static str],
}

pub const ABORT_MARKER: &str = "ABORTED";

/// Writes every artifact of `traj` under `out` and returns the manifest.
pub fn write_artifacts(s: &Scenario, traj: &Trajectory, out: &Path, wall_time: f64) -> Result<Manifest> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push(("scenario.json".into(), to_json(s)?.into_bytes()));
    files.push(("norms.csv".into(), traj.series.to_csv().into_bytes()));
    files.push(("report.json".into(), to_json(&traj.report)?.into_bytes()));
    let mut grid = BTreeMap::new();
    grid.insert("n", s.grid.n as f64);
    grid.insert("length", s.grid.length);
    if let (Some(ny), Some(w)) = (s.grid.ny, s.grid.width) {
        grid.insert("ny", ny as f64);
        grid.insert("width", w);
    }
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let header = SnapshotHeader {
            t: snap.t,
            config_hash: &traj.report.config_hash,
            scheme: "MUSCL-minmod + local Lax-Friedrichs, SSP-RK2",
            cfl: s.cfl,
            formulation: s.formulation,
            k_route_lift: K_ROUTE_LIFT,
            grid: grid.clone(),
            columns: &snap.columns,
        };
        files.push((format!("snapshots/snapshot_{k:03}.csv"), snap.to_csv().into_bytes()));
        files.push((format!("snapshots/snapshot_{k:03}.json"), to_json(&header)?.into_bytes()));
    }
    let marker = out.join(ABORT_MARKER);
    if traj.report.completed {
        if marker.exists() {
            fs::remove_file(&marker)?;
        }
    } else {
        let reason = traj.report.abort_reason.clone().unwrap_or_default();
        files.push((ABORT_MARKER.into(), format!("{reason}\n").into_bytes()));
    }
    let mut entries = Vec::new();
    for (rel, bytes) in &files {
        write_atomic(&out.join(rel), bytes)?;
        entries.push(ManifestEntry {
            path: rel.clone(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    let manifest = Manifest {
        scenario: s.name.clone(),
        config_hash: traj.report.config_hash.clone(),
        radgas_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: wall_time,
        completed: traj.report.completed,
        files: entries,
    };
    write_atomic(&out.join("manifest.json"), to_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Runs the scenario and writes its artifacts under `out` (or the scenario's
/// own output directory).
pub fn run(s: &Scenario, out: Option<&Path>) -> Result<(Trajectory, Manifest)> {
    let start = Instant::now();
    let traj = run_simulation(s)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| s.output.clone());
    let manifest = write_artifacts(s, &traj, &dir, start.elapsed().as_secs_f64())?;
    Ok((traj, manifest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Resolved,
    /// Some observed order is below 1.
    Unresolved,
    /// Every error is at round-off; orders are meaningless.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldOrders {
    pub field: String,
    /// Error of each level against the next finer one (or the exact solution).
    pub errors_l1: Vec<f64>,
    pub errors_linf: Vec<f64>,
    pub orders_l1: Vec<f64>,
    pub orders_linf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub scenario: String,
    pub target: ConvergenceTarget,
    pub t_check: f64,
    pub grid_sizes: Vec<usize>,
    pub time_steps: Vec<f64>,
    pub fields: Vec<FieldOrders>,
    pub status: OrderStatus,
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn field_orders(field: &str, errors_l1: Vec<f64>, errors_linf: Vec<f64>) -> FieldOrders {
    FieldOrders {
        field: field.to_string(),
        orders_l1: orders(&errors_l1),
        orders_linf: orders(&errors_linf),
        errors_l1,
        errors_linf,
    }
}

fn classify(fields: &[FieldOrders]) -> OrderStatus {
    let all_errors = fields.iter().flat_map(|f| f.errors_l1.iter().chain(&f.errors_linf));
    if all_errors.clone().all(|&e| e <= crate::diagnostics::ROUND_OFF_FLOOR) {
        return OrderStatus::Degenerate;
    }
    let low = fields
        .iter()
        .flat_map(|f| f.orders_l1.iter().chain(&f.orders_linf))
        .any(|&p| !(p >= 1.0));
    if low {
        OrderStatus::Unresolved
    } else {
        OrderStatus::Resolved
    }
}

/// Restriction of a fine-grid field to the nodes of a grid `2^k` times coarser.
fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.iter().step_by(factor).copied().collect()
}

/// Self-convergence on nested grids `n, 2n-1, 4n-3, ...` with `dt` halved
/// exactly at each level (or closed-form errors for the elliptic target).
pub fn convergence_study(s: &Scenario, levels: usize) -> Result<OrderReport> {
    if levels < 3 {
        return Err(Error::Config(format!("convergence study needs >= 3 levels, got {levels}")));
    }
    let base = s.line_grid()?;
    let grids: Vec<HalfLineGrid> = (0..levels)
        .scan(base, |g, k| {
            let current = *g;
            *g = g.refined();
            let _ = k;
            Some(current)
        })
        .collect();
    match s.convergence.target {
        ConvergenceTarget::Elliptic => {
            let delta = s.u_plus - s.u_minus;
            let mut e1 = Vec::new();
            let mut einf = Vec::new();
            for g in &grids {
                let x = g.nodes();
                let u: Vec<f64> = x.iter().map(|x| s.u_minus + delta * (1.0 - (-2.0 * x).exp())).collect();
                let exact: Vec<f64> = x
                    .iter()
                    .map(|x| delta * (2.0 / 3.0 * (-2.0 * x).exp() - 4.0 / 3.0 * (-x).exp()))
                    .collect();
                let q = solve_q_1d(&u, g)?;
                let err: Vec<f64> = q.iter().zip(&exact).map(|(a, b)| a - b).collect();
                e1.push(lp_norm(&err, g.h, 1.0));
                einf.push(lp_norm(&err, g.h, f64::INFINITY));
            }
            let fields = vec![field_orders("Q", e1, einf)];
            Ok(OrderReport {
                scenario: s.name.clone(),
                target: ConvergenceTarget::Elliptic,
                t_check: 0.0,
                grid_sizes: grids.iter().map(|g| g.n).collect(),
                time_steps: Vec::new(),
                status: classify(&fields),
                fields,
            })
        }
        ConvergenceTarget::Evolution => {
            let span = s.convergence.t_check - s.t0;
            let form = match s.formulation {
                FormulationChoice::Convolution => Formulation::Convolution,
                _ => Formulation::Coupled,
            };
            let mut finals = Vec::new();
            let mut time_steps = Vec::new();
            let mut coarse_steps = 0usize;
            for (k, g) in grids.iter().enumerate() {
                let u0 = s.initial.sample(&s.flux, s.u_minus, s.u_plus, g, s.t0)?;
                let mut solver = Solver1D::new(&s.flux, *g, s.u_minus, form);
                solver.cfl = s.cfl;
                if k == 0 {
                    let dt = nominal_dt(s, &s.flux, &u0, |c| if c > 0.0 { g.h / c } else { f64::INFINITY });
                    coarse_steps = if span > 0.0 { (span / dt).ceil() as usize } else { 0 };
                }
                let steps = coarse_steps << k;
                let mut st = solver.initial_state(s.t0, u0)?;
                if steps > 0 {
                    let dt = span / steps as f64;
                    time_steps.push(dt);
                    for _ in 0..steps {
                        solver.step(&mut st, dt)?;
                    }
                } else {
                    time_steps.push(0.0);
                }
                finals.push(st);
            }
            let mut fields = Vec::new();
            for (name, pick) in [("U", 0usize), ("Q", 1)] {
                let mut e1 = Vec::new();
                let mut einf = Vec::new();
                for k in 0..levels - 1 {
                    let field = |st: &State1D| if pick == 0 { st.u.clone() } else { st.q.clone() };
                    let coarse = field(&finals[k]);
                    let fine = restrict(&field(&finals[k + 1]), 2);
                    let err: Vec<f64> = coarse.iter().zip(&fine).map(|(a, b)| a - b).collect();
                    e1.push(lp_norm(&err, grids[k].h, 1.0));
                    einf.push(lp_norm(&err, grids[k].h, f64::INFINITY));
                }
                fields.push(field_orders(name, e1, einf));
            }
            Ok(OrderReport {
                scenario: s.name.clone(),
                target: ConvergenceTarget::Evolution,
                t_check: s.convergence.t_check,
                grid_sizes: grids.iter().map(|g| g.n).collect(),
                time_steps,
                status: classify(&fields),
                fields,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn scenario(extra: &str) -> Scenario {
        let text = format!(
            r#"
name = "unit"
kind = "run1d"
[states]
u_minus = 0.1
u_plus = 0.3
[grid]
n = 256
length = 150.0
[time]
t_final = 20.0
snapshots = [1.0, 20.0]
[diagnostics]
count = 10
{extra}
"#
        );
        parse_scenario(&text).unwrap()
    }

    #[test]
    fn empty_time_range_gives_initial_snapshot_only() {
        let mut s = scenario("");
        s.t_final = 1.0;
        s.snapshots = vec![1.0];
        let traj = run_simulation(&s).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.report.steps, 0);
        assert!(traj.report.completed);
    }

    #[test]
    fn profile_initial_data_has_zero_initial_deviation() {
        let traj = run_simulation(&scenario("")).unwrap();
        assert_eq!(traj.series.get("V_Linf").unwrap()[0], 0.0);
        let v = &traj.snapshots[0].data[4];
        assert!(v.iter().all(|&x| x == 0.0));
        let last = &traj.snapshots[1].data[4];
        assert_eq!(last[0], 0.0);
    }

    #[test]
    fn both_formulations_are_tracked() {
        let traj = run_simulation(&scenario("")).unwrap();
        assert!(traj.report.max_formulation_gap.is_none());
        let mut s = scenario("");
        s.formulation = FormulationChoice::Both;
        let traj = run_simulation(&s).unwrap();
        let gap = traj.report.max_formulation_gap.unwrap();
        assert!(gap > 0.0 && gap < 1e-2, "{gap}");
    }

    #[test]
    fn aborted_run_is_marked() {
        let mut s = scenario("");
        s.dt = Some(50.0);
        s.t_final = 20.0;
        let dir = tempfile::tempdir().unwrap();
        let (traj, manifest) = run(&s, Some(dir.path())).unwrap();
        assert!(!traj.report.completed);
        assert!(!manifest.completed);
        assert!(dir.path().join(ABORT_MARKER).exists());
        assert!(manifest.files.iter().any(|f| f.path == ABORT_MARKER));
    }

    #[test]
    fn manifest_lists_every_file_with_its_hash() {
        let s = scenario("");
        let dir = tempfile::tempdir().unwrap();
        let (_, manifest) = run(&s, Some(dir.path())).unwrap();
        for entry in &manifest.files {
            let bytes = fs::read(dir.path().join(&entry.path)).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), entry.sha256);
        }
        assert!(manifest.files.iter().any(|f| f.path == "norms.csv"));
        assert!(!dir.path().join(ABORT_MARKER).exists());
    }

    #[test]
    fn convergence_of_tanh_data_is_second_order() {
        let mut s = scenario("");
        s.initial = crate::evolve::InitialFamily::Tanh { center: 20.0, width: 3.0 };
        s.grid.n = 401;
        s.grid.length = 100.0;
        s.t0 = 1.0;
        s.convergence.t_check = 6.0;
        let report = convergence_study(&s, 3).unwrap();
        let u = &report.fields[0];
        assert!(u.orders_l1[0] >= 1.7 && u.orders_l1[0] <= 2.3, "{u:?}");
        assert_eq!(report.status, OrderStatus::Resolved);
        assert_eq!(report.time_steps[0], 2.0 * report.time_steps[1]);
    }

    #[test]
    fn constant_state_convergence_is_degenerate() {
        let mut s = scenario("");
        s.initial = crate::evolve::InitialFamily::Tanh { center: 20.0, width: 3.0 };
        s.u_plus = s.u_minus;
        s.convergence.t_check = 3.0;
        let report = convergence_study(&s, 3).unwrap();
        assert_eq!(report.status, OrderStatus::Degenerate);
    }

    #[test]
    fn elliptic_study_is_second_order() {
        let mut s = scenario("");
        s.convergence.target = ConvergenceTarget::Elliptic;
        s.grid.n = 257;
        s.grid.length = 40.0;
        let report = convergence_study(&s, 3).unwrap();
        for p in &report.fields[0].orders_linf {
            assert!((p - 2.0).abs() <= 0.3, "{p}");
        }
    }
}
