//! Scenario files: sectioned TOML describing one run, profile study or
//! convergence study. Validation reports every problem it finds.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::Band;
use crate::error::{Error, Result};
use crate::evolve::{InitialFamily, DEFAULT_CFL};
use crate::flux::{check_assumptions, FluxPair, RiemannData};
use crate::grid::{HalfLineGrid, HalfPlaneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Profiles,
    Run1d,
    Run2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationChoice {
    Coupled,
    Convolution,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceTarget {
    Evolution,
    Elliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub label: String,
    pub reference_exponent: f64,
    pub band: Band,
    pub must_pass: bool,
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
    pub ny: Option<usize>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub levels: usize,
    pub t_check: f64,
    pub target: ConvergenceTarget,
}

/// `amplitude sin(2 pi mode y / Ly) x e^{-x}` added to the planar data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversePerturbation {
    pub amplitude: f64,
    pub mode: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub flux: FluxPair,
    pub u_minus: f64,
    pub u_plus: f64,
    pub grid: GridSpec,
    pub initial: InitialFamily,
    pub t0: f64,
    pub transverse: Option<TransversePerturbation>,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub spacing: Spacing,
    /// Number of log-spaced samples.
    pub diag_count: usize,
    /// Sample interval for linear spacing.
    pub diag_interval: f64,
    pub diag_start: f64,
    pub max_order: usize,
    pub cfl: f64,
    pub dt: Option<f64>,
    pub formulation: FormulationChoice,
    pub seed: u64,
    pub output: PathBuf,
    pub fits: Vec<FitSpec>,
    pub convergence: ConvergenceSpec,
}

/// Allowed keys per section; `None` is the top level.
const SCHEMA: &[(Option<&str>, &[&str])] = &[
    (None, &["name", "kind", "seed", "output"]),
    (Some("flux"), &["name", "f", "g", "alpha"]),
    (Some("states"), &["u_minus", "u_plus"]),
    (Some("grid"), &["n", "length", "ny", "width"]),
    (
        Some("initial"),
        &[
            "family",
            "t0",
            "perturbation_h1",
            "bump_start",
            "bump_width",
            "center",
            "width",
            "mollify_cells",
            "knots",
            "spread",
            "transverse_amplitude",
            "transverse_mode",
        ],
    ),
    (Some("time"), &["t_final", "snapshots", "cfl", "dt", "formulation"]),
    (Some("diagnostics"), &["spacing", "count", "interval", "start", "max_order"]),
    (Some("fits"), &["label", "reference_exponent", "lo", "hi", "must_pass", "window"]),
    (Some("convergence"), &["levels", "t_check", "target"]),
];

const REQUIRED: &[(&str, &str)] = &[
    ("", "name"),
    ("", "kind"),
    ("states", "u_minus"),
    ("states", "u_plus"),
    ("grid", "n"),
    ("grid", "length"),
    ("time", "t_final"),
];

fn allowed(section: Option<&str>) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

/// Collects unknown and missing keys without stopping at the first.
fn check_keys(doc: &toml::Table, errors: &mut Vec<String>) {
    let top = allowed(None).unwrap_or(&[]);
    for (key, value) in doc {
        if top.contains(&key.as_str()) {
            continue;
        }
        match allowed(Some(key)) {
            None => errors.push(format!("unknown key `{key}`")),
            Some(keys) => {
                let tables: Vec<&toml::Table> = match value {
                    toml::Value::Table(t) => vec![t],
                    toml::Value::Array(items) if key == "fits" => {
                        items.iter().filter_map(|v| v.as_table()).collect()
                    }
                    _ => {
                        errors.push(format!("`{key}` must be a table"));
                        continue;
                    }
                };
                for t in tables {
                    for k in t.keys() {
                        if !keys.contains(&k.as_str()) {
                            errors.push(format!("unknown key `{key}.{k}`"));
                        }
                    }
                }
            }
        }
    }
    for (section, key) in REQUIRED {
        let present = if section.is_empty() {
            doc.contains_key(*key)
        } else {
            doc.get(*section)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key(*key))
        };
        if !present {
            let name = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            errors.push(format!("missing required key `{name}`"));
        }
    }
}

struct Reader<'a> {
    doc: &'a toml::Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn value(&self, section: &str, key: &str) -> Option<&'a toml::Value> {
        if section.is_empty() {
            self.doc.get(key)
        } else {
            self.doc.get(section)?.as_table()?.get(key)
        }
    }

    fn path(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn float(&mut self, section: &str, key: &str) -> Option<f64> {
        let v = self.value(section, key)?;
        match v {
            toml::Value::Float(x) => Some(*x),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => {
                self.errors.push(format!("`{}` must be a number", Self::path(section, key)));
                None
            }
        }
    }

    fn uint(&mut self, section: &str, key: &str) -> Option<u64> {
        let v = self.value(section, key)?;
        match v.as_integer() {
            Some(i) if i >= 0 => Some(i as u64),
            _ => {
                self.errors.push(format!(
                    "`{}` must be a nonnegative integer",
                    Self::path(section, key)
                ));
                None
            }
        }
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.value(section, key)?;
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.errors.push(format!("`{}` must be a string", Self::path(section, key)));
                None
            }
        }
    }

    fn floats(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.value(section, key)?;
        let parsed = v.as_array().and_then(|items| {
            items
                .iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                .collect::<Option<Vec<f64>>>()
        });
        if parsed.is_none() {
            self.errors.push(format!(
                "`{}` must be an array of numbers",
                Self::path(section, key)
            ));
        }
        parsed
    }

    fn choice<T: for<'de> Deserialize<'de>>(&mut self, section: &str, key: &str) -> Option<T> {
        let s = self.string(section, key)?;
        match T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(&s)) {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!(
                    "`{}` has unsupported value \"{s}\"",
                    Self::path(section, key)
                ));
                None
            }
        }
    }
}

/// Parses and validates scenario text. Syntax errors (including duplicate
/// keys) are reported with their line; otherwise every validation problem is
/// collected into one [`Error::Scenario`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: toml::Table = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let msg = e.message().to_string();
        Error::Scenario(vec![match line {
            Some(l) => format!("line {l}: {msg}"),
            None => msg,
        }])
    })?;
    let mut errors = Vec::new();
    check_keys(&doc, &mut errors);
    let mut r = Reader { doc: &doc, errors };

    let name = r.string("", "name").unwrap_or_default();
    let kind: Option<Kind> = r.choice("", "kind");
    let seed = r.uint("", "seed").unwrap_or(0);
    let output = r
        .string("", "output")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out").join(&name));

    let flux_name = r.string("flux", "name").unwrap_or_else(|| "burgers".into());
    let flux = match (r.floats("flux", "f"), r.floats("flux", "g")) {
        (Some(f), g) => {
            let alpha = r.float("flux", "alpha").unwrap_or(f64::NAN);
            if !(alpha > 0.0) {
                r.errors.push("custom flux needs `flux.alpha` > 0".into());
            }
            Some(FluxPair::polynomial(&flux_name, f.clone(), g.unwrap_or(f), alpha))
        }
        (None, Some(_)) => {
            r.errors.push("`flux.g` given without `flux.f`".into());
            None
        }
        (None, None) => {
            let found = FluxPair::by_name(&flux_name);
            if found.is_none() {
                r.errors.push(format!("unknown flux \"{flux_name}\""));
            }
            found
        }
    };

    let u_minus = r.float("states", "u_minus");
    let u_plus = r.float("states", "u_plus");
    if let (Some(f), Some(um), Some(up)) = (&flux, u_minus, u_plus) {
        match check_assumptions(f, um, up, 1001) {
            Ok(report) if !report.pass => r.errors.extend(report.failures),
            Ok(_) => {}
            Err(Error::InvalidStates(msg)) => {
                r.errors.push(format!("case (b) requires f'(u-) < f'(u+): {msg}"))
            }
            Err(e) => r.errors.push(e.to_string()),
        }
    }

    let n = r.uint("grid", "n").unwrap_or(0) as usize;
    let length = r.float("grid", "length").unwrap_or(f64::NAN);
    let ny = r.uint("grid", "ny").map(|v| v as usize);
    let width = r.float("grid", "width");
    if n > 0 {
        if let Err(e) = HalfLineGrid::new(n, length) {
            r.errors.push(e.to_string());
        }
    }
    if kind == Some(Kind::Run2d) {
        match (ny, width) {
            (Some(ny), Some(w)) => {
                if let Err(e) = HalfPlaneGrid::new(n.max(16), length.max(1.0), ny, w) {
                    r.errors.push(e.to_string());
                }
            }
            _ => r.errors.push("run2d needs `grid.ny` and `grid.width`".into()),
        }
    }

    let family = r.string("initial", "family").unwrap_or_else(|| "profile".into());
    let t0 = r.float("initial", "t0").unwrap_or(1.0);
    let initial = match family.as_str() {
        "profile" => Some(InitialFamily::Profile {
            perturbation_h1: r.float("initial", "perturbation_h1").unwrap_or(0.0),
            bump_start: r.float("initial", "bump_start").unwrap_or(10.0),
            bump_width: r.float("initial", "bump_width").unwrap_or(20.0),
        }),
        "tanh" => Some(InitialFamily::Tanh {
            center: r.float("initial", "center").unwrap_or(20.0),
            width: r.float("initial", "width").unwrap_or(3.0),
        }),
        "step" => Some(InitialFamily::Step {
            center: r.float("initial", "center").unwrap_or(10.0),
            mollify_cells: r.float("initial", "mollify_cells").unwrap_or(4.0),
        }),
        "random_monotone" => Some(InitialFamily::RandomMonotone {
            knots: r.uint("initial", "knots").unwrap_or(8) as usize,
            spread: r.float("initial", "spread").unwrap_or(100.0),
            seed,
        }),
        other => {
            r.errors.push(format!("unknown initial family \"{other}\""));
            None
        }
    };
    if let Some(InitialFamily::Tanh { width, .. }) = &initial {
        if !(*width > 0.0) {
            r.errors.push("`initial.width` must be positive".into());
        }
    }
    if let Some(InitialFamily::Profile { bump_width, .. }) = &initial {
        if !(*bump_width > 0.0) {
            r.errors.push("`initial.bump_width` must be positive".into());
        }
    }
    if let Some(InitialFamily::RandomMonotone { knots, spread, .. }) = &initial {
        if *knots == 0 || !(*spread > 5.0) {
            r.errors.push("random_monotone needs `knots` >= 1 and `spread` > 5".into());
        }
    }
    let transverse = match (
        r.float("initial", "transverse_amplitude"),
        r.uint("initial", "transverse_mode"),
    ) {
        (None, None) => None,
        (a, m) => Some(TransversePerturbation {
            amplitude: a.unwrap_or(0.0),
            mode: m.unwrap_or(1) as u32,
        }),
    };
    if transverse.is_some() && kind != Some(Kind::Run2d) {
        r.errors.push("transverse perturbation only applies to run2d".into());
    }
    if !(t0 > 0.0) {
        r.errors.push(format!("`initial.t0` = {t0} must be > 0"));
    }

    let t_final = r.float("time", "t_final").unwrap_or(f64::NAN);
    if !(t_final >= t0) {
        r.errors.push(format!("`time.t_final` = {t_final} precedes t0 = {t0}"));
    }
    let snapshots = r.floats("time", "snapshots").unwrap_or_else(|| vec![t0, t_final]);
    if snapshots.windows(2).any(|w| !(w[1] > w[0])) {
        r.errors.push("`time.snapshots` must increase strictly".into());
    }
    if snapshots.iter().any(|&s| s < t0 || s > t_final) {
        r.errors.push(format!("`time.snapshots` must lie in [{t0}, {t_final}]"));
    }
    let cfl = r.float("time", "cfl").unwrap_or(DEFAULT_CFL);
    if !(cfl > 0.0 && cfl <= 1.0) {
        r.errors.push(format!("`time.cfl` = {cfl} outside (0, 1]"));
    }
    let dt = r.float("time", "dt");
    if dt.is_some_and(|d| !(d > 0.0)) {
        r.errors.push("`time.dt` must be positive".into());
    }
    let formulation = r.choice("time", "formulation").unwrap_or(FormulationChoice::Coupled);

    let spacing = r.choice("diagnostics", "spacing").unwrap_or(Spacing::Log);
    let diag_count = r.uint("diagnostics", "count").unwrap_or(40) as usize;
    let diag_interval = r.float("diagnostics", "interval").unwrap_or((t_final - t0) / 40.0);
    let diag_start = r
        .float("diagnostics", "start")
        .unwrap_or_else(|| t0.max(t_final / 100.0));
    let max_order = r.uint("diagnostics", "max_order").unwrap_or(3) as usize;
    if max_order > 3 {
        r.errors.push("`diagnostics.max_order` must be <= 3".into());
    }
    if spacing == Spacing::Log && !(diag_start > 0.0) {
        r.errors.push("log spacing needs `diagnostics.start` > 0".into());
    }
    if spacing == Spacing::Linear && !(diag_interval > 0.0) && t_final > t0 {
        r.errors.push("`diagnostics.interval` must be positive".into());
    }

    let mut fits = Vec::new();
    if let Some(items) = doc.get("fits") {
        match items.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    let Some(t) = item.as_table() else {
                        r.errors.push(format!("fits[{i}] must be a table"));
                        continue;
                    };
                    let num = |k: &str| {
                        t.get(k)
                            .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                    };
                    let label = t.get("label").and_then(|v| v.as_str());
                    let reference = num("reference_exponent");
                    if label.is_none() || reference.is_none() {
                        r.errors.push(format!(
                            "fits[{i}] needs `label` and `reference_exponent`"
                        ));
                        continue;
                    }
                    let window = t.get("window").and_then(|v| v.as_array()).and_then(|a| {
                        let v: Vec<f64> = a
                            .iter()
                            .filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                            .collect();
                        (v.len() == 2).then(|| [v[0], v[1]])
                    });
                    fits.push(FitSpec {
                        label: label.unwrap_or_default().to_string(),
                        reference_exponent: reference.unwrap_or_default(),
                        band: Band {
                            lo: num("lo"),
                            hi: num("hi"),
                        },
                        must_pass: t.get("must_pass").and_then(|v| v.as_bool()).unwrap_or(false),
                        window,
                    });
                }
            }
            None => r.errors.push("`fits` must be an array of tables".into()),
        }
    }

    let convergence = ConvergenceSpec {
        levels: r.uint("convergence", "levels").unwrap_or(3) as usize,
        t_check: r.float("convergence", "t_check").unwrap_or(t_final),
        target: r
            .choice("convergence", "target")
            .unwrap_or(ConvergenceTarget::Evolution),
    };
    if convergence.levels < 3 {
        r.errors.push("`convergence.levels` must be >= 3".into());
    }

    if let (Some(f), Some(up)) = (&flux, u_plus) {
        let needed = f.fp(up) * (t_final - t0) + 10.0 * (t_final - t0).max(0.0).sqrt();
        if length.is_finite() && length < needed && kind != Some(Kind::Profiles) {
            r.errors.push(format!(
                "`grid.length` = {length} too short: the fan needs at least {needed:.1}"
            ));
        }
    }

    let errors = r.errors;
    if !errors.is_empty() {
        return Err(Error::Scenario(errors));
    }
    Ok(Scenario {
        name,
        kind: kind.expect("validated"),
        flux: flux.expect("validated"),
        u_minus: u_minus.expect("validated"),
        u_plus: u_plus.expect("validated"),
        grid: GridSpec { n, length, ny, width },
        initial: initial.expect("validated"),
        t0,
        transverse,
        t_final,
        snapshots,
        spacing,
        diag_count,
        diag_interval,
        diag_start,
        max_order,
        cfl,
        dt,
        formulation,
        seed,
        output,
        fits,
        convergence,
    })
}

impl Scenario {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_scenario(&text)
    }

    pub fn data(&self) -> Result<RiemannData> {
        RiemannData::new(&self.flux, self.u_minus, self.u_plus)
    }

    pub fn line_grid(&self) -> Result<HalfLineGrid> {
        HalfLineGrid::new(self.grid.n, self.grid.length)
    }

    pub fn plane_grid(&self) -> Result<HalfPlaneGrid> {
        match (self.grid.ny, self.grid.width) {
            (Some(ny), Some(w)) => HalfPlaneGrid::new(self.grid.n, self.grid.length, ny, w),
            _ => Err(Error::Config("scenario has no y grid".into())),
        }
    }

    /// Diagnostic sample times: `t0`, then either log-spaced times from
    /// `diag_start` or the multiples of `diag_interval`, up to `t_final`.
    pub fn diagnostic_times(&self) -> Vec<f64> {
        let mut times = vec![self.t0];
        let tail: Vec<f64> = match self.spacing {
            Spacing::Log => crate::profiles::log_spaced(self.diag_start, self.t_final, self.diag_count),
            Spacing::Linear => {
                let mut v = Vec::new();
                let mut k = (self.t0 / self.diag_interval).floor() as usize + 1;
                loop {
                    let t = k as f64 * self.diag_interval;
                    if t >= self.t_final - 1e-9 * self.diag_interval {
                        break;
                    }
                    v.push(t);
                    k += 1;
                }
                v.push(self.t_final);
                v
            }
        };
        for t in tail {
            if t > *times.last().unwrap_or(&f64::NEG_INFINITY) {
                times.push(t);
            }
        }
        times
    }

    /// Union of diagnostic and snapshot times, increasing.
    pub fn output_times(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.diagnostic_times();
        all.extend(&self.snapshots);
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    /// SHA-256 of the canonical JSON form of the validated scenario.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Default fit window `[t_final / 10, t_final]` unless the fit sets one.
    pub fn fit_window(&self, spec: &FitSpec) -> [f64; 2] {
        spec.window
            .unwrap_or_else(|| crate::diagnostics::default_window(self.t_final))
    }

    pub fn summary(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("name", self.name.clone());
        m.insert("kind", format!("{:?}", self.kind));
        m.insert("flux", self.flux.name.clone());
        m.insert("states", format!("({}, {})", self.u_minus, self.u_plus));
        m.insert("grid", format!("n = {}, L = {}", self.grid.n, self.grid.length));
        m.insert("time", format!("[{}, {}]", self.t0, self.t_final));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
kind = "run1d"
[states]
u_minus = 0.1
u_plus = 0.3
[grid]
n = 512
length = 200.0
[time]
t_final = 50.0
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.flux.name, "burgers");
        assert_eq!(s.t0, 1.0);
        assert_eq!(s.cfl, DEFAULT_CFL);
        assert_eq!(s.formulation, FormulationChoice::Coupled);
        assert_eq!(s.output, PathBuf::from("out/minimal"));
        assert_eq!(s.snapshots, vec![1.0, 50.0]);
        let times = s.diagnostic_times();
        assert_eq!(times[0], 1.0);
        assert_eq!(*times.last().unwrap(), 50.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reversed_states_are_rejected() {
        let text = MINIMAL.replace("u_minus = 0.1", "u_minus = 0.5");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("case (b) requires f'(u-) < f'(u+)"), "{err}");
    }

    #[test]
    fn duplicate_key_names_line() {
        let text = MINIMAL.replace("n = 512", "n = 512\nn = 1024");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("line 9: duplicate key"), "{err}");
    }

    #[test]
    fn all_problems_are_collected() {
        let text = r#"
name = "bad"
kind = "run1d"
colour = 3
[grid]
n = 512
lenght = 10.0
[time]
t_final = 5.0
"#;
        let Err(Error::Scenario(errors)) = parse_scenario(text) else {
            panic!("expected scenario error");
        };
        let joined = errors.join("\n");
        for needle in [
            "unknown key `colour`",
            "unknown key `grid.lenght`",
            "missing required key `states.u_minus`",
            "missing required key `states.u_plus`",
            "missing required key `grid.length`",
        ] {
            assert!(joined.contains(needle), "{needle} not in\n{joined}");
        }
    }

    #[test]
    fn short_domain_is_rejected() {
        let text = MINIMAL.replace("length = 200.0", "length = 20.0");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("too short"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_scenario(MINIMAL).unwrap();
        let b = parse_scenario(MINIMAL).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = parse_scenario(&MINIMAL.replace("n = 512", "n = 513")).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
