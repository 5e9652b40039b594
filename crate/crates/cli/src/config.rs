//! Scenario configuration: a single JSON document per run.
//!
//! [`validate_config`] walks the raw JSON and reports every violated
//! constraint with a JSON-pointer path; [`parse_config`] only succeeds on
//! documents with an empty report.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use semiclassical::model::{self, ModelParams};
use semiclassical::vanvleck::MaslovMethod;

pub const SCENARIOS: [&str; 7] = [
    "propagate-packet",
    "propagate-state",
    "residual-sweep",
    "invariants",
    "frame-check",
    "vanvleck",
    "kernel-compare",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    PropagatePacket,
    PropagateState,
    ResidualSweep,
    Invariants,
    FrameCheck,
    Vanvleck,
    KernelCompare,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::PropagatePacket => "propagate-packet",
            Scenario::PropagateState => "propagate-state",
            Scenario::ResidualSweep => "residual-sweep",
            Scenario::Invariants => "invariants",
            Scenario::FrameCheck => "frame-check",
            Scenario::Vanvleck => "vanvleck",
            Scenario::KernelCompare => "kernel-compare",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }

    fn needs(self) -> Requirements {
        use Scenario::*;
        Requirements {
            initial: matches!(self, PropagatePacket | PropagateState | ResidualSweep | Invariants | FrameCheck),
            time: !matches!(self, FrameCheck),
            quadrature: matches!(self, PropagateState | FrameCheck | KernelCompare),
            vanvleck: matches!(self, Vanvleck | KernelCompare),
            hbar: match self {
                Invariants | Vanvleck => HbarNeed::Optional,
                ResidualSweep | KernelCompare => HbarNeed::List,
                _ => HbarNeed::Scalar,
            },
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq)]
enum HbarNeed {
    #[default]
    Optional,
    Scalar,
    List,
}

#[derive(Debug, Default)]
struct Requirements {
    initial: bool,
    time: bool,
    quadrature: bool,
    vanvleck: bool,
    hbar: HbarNeed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hbar {
    One(f64),
    Many(Vec<f64>),
}

impl Hbar {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Hbar::One(v) => vec![*v],
            Hbar::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSection {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outputs {
    Count(usize),
    Times(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSection {
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default)]
    pub outputs: Option<Outputs>,
}

impl TimeSection {
    /// Output times; a count `n` means `n` equal steps ending at `T`.
    pub fn output_times(&self, default_count: usize) -> Vec<f64> {
        match &self.outputs {
            Some(Outputs::Times(v)) => v.clone(),
            Some(Outputs::Count(n)) => linspace(self.t0, self.t, *n),
            None => linspace(self.t0, self.t, default_count),
        }
    }
}

fn linspace(t0: f64, t: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t0 + (t - t0) * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlowSection {
    pub tolerance: Option<f64>,
    pub condition_cap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureSection {
    pub rho: f64,
    pub width: f64,
    pub spacing_factor: Option<f64>,
    /// Spacing factors swept by `frame-check`.
    pub spacing_factors: Option<Vec<f64>>,
    pub node_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VanVleckSection {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub search_box: Option<Vec<[f64; 2]>>,
    pub n_starts: Option<usize>,
    pub tol: Option<f64>,
    pub maslov_method: Option<MaslovMethod>,
    /// Extra `(x, y)` pairs for `kernel-compare`.
    pub panel: Option<Vec<PanelPoint>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub n: usize,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    pub directory: Option<String>,
    pub formats: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub model: ModelSection,
    pub hbar: Option<Hbar>,
    pub initial: Option<InitialSection>,
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub flow: FlowSection,
    pub quadrature: Option<QuadratureSection>,
    pub vanvleck: Option<VanVleckSection>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.output
            .formats
            .as_ref()
            .is_none_or(|f| f.iter().any(|x| x == format))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let path = if self.path.is_empty() { "/" } else { &self.path };
        write!(f, "{path}: {}", self.message)
    }
}

struct Report(Vec<ConfigIssue>);

impl Report {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(path, "expected a finite number");
                None
            }
        }
    }

    fn positive(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = self.number(v, path)?;
        if x <= 0.0 {
            self.push(path, format!("must be positive (got {x})"));
            return None;
        }
        Some(x)
    }

    fn count(&mut self, v: &Value, path: &str) -> Option<u64> {
        match v.as_u64() {
            Some(n) if n >= 1 => Some(n),
            _ => {
                self.push(path, "expected a positive integer");
                None
            }
        }
    }

    fn vector(&mut self, v: &Value, path: &str, dim: Option<usize>) -> Option<Vec<f64>> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected an array of numbers");
            return None;
        };
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            out.push(self.number(item, &format!("{path}/{i}"))?);
        }
        if let Some(d) = dim {
            if out.len() != d {
                self.push(path, format!("expected {d} components, got {}", out.len()));
                return None;
            }
        }
        Some(out)
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a serde_json::Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.push(path, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(format!("{path}/{key}"), "unknown key");
            }
        }
        Some(map)
    }
}

/// Every violated constraint of `doc`; empty for a runnable configuration.
pub fn validate_config(doc: &Value) -> Vec<ConfigIssue> {
    let mut r = Report(Vec::new());
    let Some(root) = r.object(
        doc,
        "",
        &[
            "scenario", "model", "hbar", "initial", "time", "flow", "quadrature", "vanvleck", "grid",
            "output",
        ],
    ) else {
        return r.0;
    };

    let scenario = match root.get("scenario") {
        None => {
            r.push("/scenario", "missing");
            None
        }
        Some(v) => match v.as_str().and_then(Scenario::from_name) {
            Some(s) => Some(s),
            None => {
                r.push("/scenario", format!("expected one of {}", SCENARIOS.join(", ")));
                None
            }
        },
    };
    let needs = scenario.map(Scenario::needs).unwrap_or_default();

    let dim = validate_model(&mut r, root.get("model"));

    match (root.get("hbar"), needs.hbar) {
        (None, HbarNeed::Optional) => {}
        (None, _) => r.push("/hbar", "missing"),
        (Some(v), need) => {
            if let Some(items) = v.as_array() {
                if need == HbarNeed::Scalar {
                    r.push("/hbar", "this scenario takes a single value");
                } else if items.len() < 2 && need == HbarNeed::List {
                    r.push("/hbar", "a sweep needs at least two values");
                }
                for (i, item) in items.iter().enumerate() {
                    r.positive(item, &format!("/hbar/{i}"));
                }
            } else {
                if need == HbarNeed::List {
                    r.push("/hbar", "this scenario takes a list of values");
                }
                r.positive(v, "/hbar");
            }
        }
    }

    match root.get("initial") {
        None if needs.initial => r.push("/initial", "missing"),
        None => {}
        Some(v) => {
            if let Some(m) = r.object(v, "/initial", &["q", "p"]) {
                for key in ["q", "p"] {
                    match m.get(key) {
                        Some(x) => {
                            r.vector(x, &format!("/initial/{key}"), dim);
                        }
                        None => r.push(format!("/initial/{key}"), "missing"),
                    }
                }
            }
        }
    }

    match root.get("time") {
        None if needs.time => r.push("/time", "missing"),
        None => {}
        Some(v) => validate_time(&mut r, v),
    }

    if let Some(v) = root.get("flow") {
        if let Some(m) = r.object(v, "/flow", &["tolerance", "condition_cap"]) {
            if let Some(t) = m.get("tolerance") {
                if let Some(x) = r.number(t, "/flow/tolerance") {
                    if !(1e-13..=1e-6).contains(&x) {
                        r.push("/flow/tolerance", "must lie in [1e-13, 1e-6]");
                    }
                }
            }
            if let Some(c) = m.get("condition_cap") {
                if let Some(x) = r.number(c, "/flow/condition_cap") {
                    if x <= 1.0 {
                        r.push("/flow/condition_cap", "must exceed 1");
                    }
                }
            }
        }
    }

    match root.get("quadrature") {
        None if needs.quadrature => r.push("/quadrature", "missing"),
        None => {}
        Some(v) => validate_quadrature(&mut r, v),
    }

    match root.get("vanvleck") {
        None if needs.vanvleck => r.push("/vanvleck", "missing"),
        None => {}
        Some(v) => validate_vanvleck(&mut r, v, dim),
    }

    if let Some(v) = root.get("grid") {
        if let Some(m) = r.object(v, "/grid", &["n", "lo", "hi"]) {
            match m.get("n") {
                None => r.push("/grid/n", "missing"),
                Some(n) => {
                    if let Some(n) = r.count(n, "/grid/n") {
                        if !n.is_power_of_two() || n < 2 {
                            r.push("/grid/n", "must be a power of two");
                        }
                    }
                }
            }
            match (m.get("lo"), m.get("hi")) {
                (None, None) => {}
                (Some(lo), Some(hi)) => {
                    let lo = r.vector(lo, "/grid/lo", dim);
                    let hi = r.vector(hi, "/grid/hi", dim);
                    if let (Some(lo), Some(hi)) = (lo, hi) {
                        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                            r.push("/grid/hi", "every upper bound must exceed its lower bound");
                        }
                    }
                }
                _ => r.push("/grid", "give both lo and hi, or neither for an automatic box"),
            }
        }
    }

    if let Some(v) = root.get("output") {
        if let Some(m) = r.object(v, "/output", &["directory", "formats"]) {
            if let Some(d) = m.get("directory") {
                if !d.is_string() {
                    r.push("/output/directory", "expected a string");
                }
            }
            if let Some(f) = m.get("formats") {
                match f.as_array() {
                    Some(items) => {
                        for (i, item) in items.iter().enumerate() {
                            if !matches!(item.as_str(), Some("csv" | "json")) {
                                r.push(format!("/output/formats/{i}"), "expected \"csv\" or \"json\"");
                            }
                        }
                    }
                    None => r.push("/output/formats", "expected an array"),
                }
            }
        }
    }
    r.0
}

fn validate_model(r: &mut Report, v: Option<&Value>) -> Option<usize> {
    let Some(v) = v else {
        r.push("/model", "missing");
        return None;
    };
    let m = r.object(v, "/model", &["name", "params"])?;
    let name = match m.get("name") {
        None => {
            r.push("/model/name", "missing");
            return None;
        }
        Some(n) => match n.as_str() {
            Some(s) if model::MODEL_NAMES.contains(&s) => s,
            _ => {
                r.push(
                    "/model/name",
                    format!("expected one of {}", model::MODEL_NAMES.join(", ")),
                );
                return None;
            }
        },
    };
    let params: ModelParams = match m.get("params") {
        None => ModelParams::new(),
        Some(p) => match serde_json::from_value(p.clone()) {
            Ok(p) => p,
            Err(e) => {
                r.push("/model/params", format!("expected numbers or matrices: {e}"));
                return None;
            }
        },
    };
    let keys = model::model_param_keys(name).unwrap_or(&[]);
    let mut bad_key = false;
    for key in params.keys() {
        if !keys.contains(&key.as_str()) {
            r.push(format!("/model/params/{key}"), format!("unknown parameter for {name}"));
            bad_key = true;
        }
    }
    if bad_key {
        return None;
    }
    match model::build_model(name, &params) {
        Ok(m) => Some(m.dim()),
        Err(e) => {
            r.push("/model/params", e.to_string());
            None
        }
    }
}

fn validate_time(r: &mut Report, v: &Value) {
    let Some(m) = r.object(v, "/time", &["t0", "T", "outputs"]) else {
        return;
    };
    let t0 = match m.get("t0") {
        Some(x) => r.number(x, "/time/t0"),
        None => Some(0.0),
    };
    let t = match m.get("T") {
        Some(x) => r.number(x, "/time/T"),
        None => {
            r.push("/time/T", "missing");
            None
        }
    };
    if let (Some(t0), Some(t)) = (t0, t) {
        if t <= t0 {
            r.push("/time/T", "must exceed t0");
        }
        if let Some(out) = m.get("outputs") {
            if out.is_array() {
                if let Some(times) = r.vector(out, "/time/outputs", None) {
                    if times.is_empty() {
                        r.push("/time/outputs", "must not be empty");
                    }
                    if times.windows(2).any(|w| w[1] <= w[0]) {
                        r.push("/time/outputs", "times must be strictly increasing");
                    }
                    if times.iter().any(|&s| s <= t0 || s > t) {
                        r.push("/time/outputs", "times must lie in (t0, T]");
                    }
                }
            } else {
                r.count(out, "/time/outputs");
            }
        }
    }
}

fn validate_quadrature(r: &mut Report, v: &Value) {
    let Some(m) = r.object(
        v,
        "/quadrature",
        &["rho", "width", "spacing_factor", "spacing_factors", "node_cap"],
    ) else {
        return;
    };
    let rho = match m.get("rho") {
        Some(x) => r.positive(x, "/quadrature/rho"),
        None => {
            r.push("/quadrature/rho", "missing");
            None
        }
    };
    let width = match m.get("width") {
        Some(x) => r.positive(x, "/quadrature/width"),
        None => {
            r.push("/quadrature/width", "missing");
            None
        }
    };
    if let (Some(rho), Some(w)) = (rho, width) {
        if w >= rho {
            r.push("/quadrature/width", "must be smaller than rho");
        }
    }
    if let Some(c) = m.get("spacing_factor") {
        r.positive(c, "/quadrature/spacing_factor");
    }
    if let Some(cs) = m.get("spacing_factors") {
        match cs.as_array() {
            Some(items) if !items.is_empty() => {
                for (i, c) in items.iter().enumerate() {
                    r.positive(c, &format!("/quadrature/spacing_factors/{i}"));
                }
            }
            _ => r.push("/quadrature/spacing_factors", "expected a non-empty array"),
        }
    }
    if let Some(n) = m.get("node_cap") {
        r.count(n, "/quadrature/node_cap");
    }
}

fn validate_vanvleck(r: &mut Report, v: &Value, dim: Option<usize>) {
    let Some(m) = r.object(
        v,
        "/vanvleck",
        &["y", "x", "search_box", "n_starts", "tol", "maslov_method", "panel"],
    ) else {
        return;
    };
    for key in ["y", "x"] {
        match m.get(key) {
            Some(x) => {
                r.vector(x, &format!("/vanvleck/{key}"), dim);
            }
            None => r.push(format!("/vanvleck/{key}"), "missing"),
        }
    }
    if let Some(b) = m.get("search_box") {
        match b.as_array() {
            Some(axes) => {
                if let Some(d) = dim {
                    if axes.len() != d {
                        r.push("/vanvleck/search_box", format!("expected {d} [lo, hi] pairs"));
                    }
                }
                for (i, axis) in axes.iter().enumerate() {
                    let path = format!("/vanvleck/search_box/{i}");
                    if let Some(pair) = r.vector(axis, &path, Some(2)) {
                        if pair[0] >= pair[1] {
                            r.push(path, "lo must be below hi");
                        }
                    }
                }
            }
            None => r.push("/vanvleck/search_box", "expected an array of [lo, hi] pairs"),
        }
    }
    if let Some(n) = m.get("n_starts") {
        r.count(n, "/vanvleck/n_starts");
    }
    if let Some(t) = m.get("tol") {
        if let Some(x) = r.positive(t, "/vanvleck/tol") {
            if x >= 1e-2 {
                r.push("/vanvleck/tol", "must be below 1e-2");
            }
        }
    }
    if let Some(mm) = m.get("maslov_method") {
        if !matches!(mm.as_str(), Some("crossing-count" | "argument-sum")) {
            r.push("/vanvleck/maslov_method", "expected \"crossing-count\" or \"argument-sum\"");
        }
    }
    if let Some(p) = m.get("panel") {
        match p.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    let path = format!("/vanvleck/panel/{i}");
                    if let Some(pm) = r.object(item, &path, &["x", "y"]) {
                        for key in ["x", "y"] {
                            match pm.get(key) {
                                Some(x) => {
                                    r.vector(x, &format!("{path}/{key}"), dim);
                                }
                                None => r.push(format!("{path}/{key}"), "missing"),
                            }
                        }
                    }
                }
            }
            None => r.push("/vanvleck/panel", "expected an array of {x, y} objects"),
        }
    }
}

/// Validates and deserializes; the error carries the full issue list.
pub fn parse_config(doc: &Value) -> Result<ScenarioConfig, Vec<ConfigIssue>> {
    let issues = validate_config(doc);
    if !issues.is_empty() {
        return Err(issues);
    }
    serde_json::from_value(doc.clone()).map_err(|e| {
        vec![ConfigIssue {
            path: String::new(),
            message: e.to_string(),
        }]
    })
}
