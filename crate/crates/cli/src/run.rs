//! Scenario execution, artifact writing and the run manifest.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use semiclassical::flow::{self, FlowOptions};
use semiclassical::invariants::relation_residuals;
use semiclassical::model::{build_model, Hamiltonian, PhasePoint};
use semiclassical::propagator::{build_quadrature, Propagator, DEFAULT_NODE_CAP, DEFAULT_SPACING_FACTOR};
use semiclassical::reference::{self, loglog_slope, residual_norm, ResidualSample};
use semiclassical::vanvleck::{self, BranchSearch, VanVleckBranch};
use semiclassical::{AnisotropicPacket, Error, Grid, GridFunction};

use crate::config::{parse_config, ConfigIssue, Hbar, Scenario, ScenarioConfig};

pub const MANIFEST_NAME: &str = "run_manifest.json";
const DEFAULT_OUTPUT_DIR: &str = "out";
const DEFAULT_OUTPUTS: usize = 16;
const DEFAULT_SEARCH_HALF_WIDTH: f64 = 5.0;
const DEFAULT_SPACING_SWEEP: [f64; 3] = [1.0, 0.5, 0.25];
const RELATION_BOUND: f64 = 1e-8;
const RESIDUAL_FLOOR: f64 = 1e-8;
const SLOPE_RANGE: (f64, f64) = (1.35, 1.65);
const FRAME_BOUND: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.directory` from the config.
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Recorded in the manifest; the thread pool itself is set up by the caller.
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Config(Vec<ConfigIssue>),
    Model { scenario: &'static str, source: Error },
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Model { source, .. } if source.is_numerical() => 3,
            RunError::Model { .. } => 2,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(issues) => {
                write!(f, "invalid configuration:")?;
                for i in issues {
                    write!(f, "\n  {i}")?;
                }
                Ok(())
            }
            RunError::Model { scenario, source } => write!(f, "{scenario}: {source}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// One pass/fail test on the computed numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub directory: PathBuf,
    /// Artifacts written, relative to `directory`, manifest last.
    pub files: Vec<String>,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Parses a config file's bytes into JSON, reporting syntax errors at the root.
pub fn read_document(bytes: &[u8]) -> Result<Value, RunError> {
    serde_json::from_slice(bytes).map_err(|e| {
        RunError::Config(vec![ConfigIssue {
            path: String::new(),
            message: format!("not valid JSON: {e}"),
        }])
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Run<'c> {
    cfg: &'c ScenarioConfig,
    model: Box<dyn Hamiltonian>,
    flow: FlowOptions,
    seed: u64,
    dir: PathBuf,
    files: Vec<String>,
    checks: Vec<Check>,
    tolerances: serde_json::Map<String, Value>,
}

type Step<T> = std::result::Result<T, StepError>;

enum StepError {
    Model(Error),
    Io(std::io::Error),
}

impl From<Error> for StepError {
    fn from(e: Error) -> Self {
        StepError::Model(e)
    }
}

impl From<std::io::Error> for StepError {
    fn from(e: std::io::Error) -> Self {
        StepError::Io(e)
    }
}

/// Validates, runs and writes every artifact plus the manifest. A failing
/// check is not an error: it shows up in [`RunOutcome::checks`].
pub fn run_scenario(config_bytes: &[u8], opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let doc = read_document(config_bytes)?;
    let cfg = parse_config(&doc).map_err(RunError::Config)?;
    let scenario = cfg.scenario.name();
    let model = build_model(&cfg.model.name, &cfg.model.params)
        .map_err(|source| RunError::Model { scenario, source })?;

    let defaults = FlowOptions::default();
    let flow = FlowOptions {
        tolerance: cfg.flow.tolerance.unwrap_or(defaults.tolerance),
        condition_cap: cfg.flow.condition_cap.unwrap_or(defaults.condition_cap),
        ..defaults
    };
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&dir)?;

    let mut tolerances = serde_json::Map::new();
    tolerances.insert("flow_tolerance".into(), json!(flow.tolerance));
    tolerances.insert("condition_cap".into(), json!(flow.condition_cap));
    tolerances.insert("max_steps".into(), json!(flow.max_steps));

    let mut run = Run {
        cfg: &cfg,
        model,
        flow,
        seed: opts.seed,
        dir,
        files: Vec::new(),
        checks: Vec::new(),
        tolerances,
    };
    let result = match cfg.scenario {
        Scenario::PropagatePacket => run.propagate_packet(),
        Scenario::PropagateState => run.propagate_state(),
        Scenario::ResidualSweep => run.residual_sweep(),
        Scenario::Invariants => run.invariants(),
        Scenario::FrameCheck => run.frame_check(),
        Scenario::Vanvleck => run.vanvleck(),
        Scenario::KernelCompare => run.kernel_compare(),
    };
    let error = match &result {
        Ok(()) => None,
        Err(StepError::Model(e)) => Some(e.to_string()),
        Err(StepError::Io(e)) => Some(e.to_string()),
    };
    run.write_manifest(config_bytes, opts, error.as_deref())?;
    match result {
        Ok(()) => Ok(RunOutcome {
            directory: run.dir,
            files: run.files,
            checks: run.checks,
        }),
        Err(StepError::Model(source)) => Err(RunError::Model { scenario, source }),
        Err(StepError::Io(e)) => Err(RunError::Io(e)),
    }
}

impl Run<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn hbar(&self) -> f64 {
        match &self.cfg.hbar {
            Some(Hbar::One(h)) => *h,
            Some(Hbar::Many(v)) => v[0],
            None => 1.0,
        }
    }

    fn hbars(&self) -> Vec<f64> {
        self.cfg.hbar.as_ref().map(Hbar::values).unwrap_or_default()
    }

    fn initial(&self) -> Step<PhasePoint> {
        let init = self.cfg.initial.as_ref().expect("validated");
        Ok(PhasePoint::from_slices(&init.q, &init.p)?)
    }

    fn times(&self) -> (f64, f64) {
        let t = self.cfg.time.as_ref().expect("validated");
        (t.t0, t.t)
    }

    fn grid_points(&self, default_n: usize) -> usize {
        self.cfg.grid.as_ref().map_or(default_n, |g| g.n)
    }

    fn default_grid_points(&self) -> usize {
        match self.dim() {
            1 => 512,
            2 => 64,
            _ => 16,
        }
    }

    /// The configured box, or the smallest box holding the auto boxes of
    /// every packet in `cover`.
    fn grid(&self, cover: &[&AnisotropicPacket]) -> Step<Grid> {
        let n = self.grid_points(self.default_grid_points());
        if let Some(g) = &self.cfg.grid {
            if let (Some(lo), Some(hi)) = (&g.lo, &g.hi) {
                return Ok(Grid::new(lo.clone(), hi.clone(), vec![n; lo.len()])?);
            }
        }
        let d = self.dim();
        let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
        for p in cover {
            let g = reference::auto_grid(p, n)?;
            for j in 0..d {
                lo[j] = lo[j].min(g.lo()[j]);
                hi[j] = hi[j].max(g.hi()[j]);
            }
        }
        Ok(Grid::new(lo, hi, vec![n; d])?)
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> Step<()> {
        let mut f = fs::File::create(self.dir.join(name))?;
        f.write_all(bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn emit_csv<F>(&mut self, name: &str, write: F) -> Step<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        if !self.cfg.wants("csv") {
            return Ok(());
        }
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.emit(name, &buf)
    }

    fn emit_json(&mut self, name: &str, value: &Value) -> Step<()> {
        if !self.cfg.wants("json") {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.emit(name, text.as_bytes())
    }

    fn emit_grid_function(&mut self, stem: &str, f: &GridFunction) -> Step<()> {
        self.emit_csv(&format!("{stem}.csv"), |w| f.write_csv(w))?;
        if f.grid.dim() > 1 && self.cfg.wants("csv") {
            let mut text = f.sidecar_json();
            text.push('\n');
            self.emit(&format!("{stem}.json"), text.as_bytes())?;
        }
        Ok(())
    }

    fn check(&mut self, name: &str, value: f64, bound: String, passed: bool) {
        if !passed {
            log::warn!("check {name} failed: {value:.3e} against {bound}");
        }
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            passed,
        });
    }

    fn tolerance(&mut self, key: &str, value: Value) {
        self.tolerances.insert(key.to_string(), value);
    }

    fn propagate_packet(&mut self) -> Step<()> {
        let x0 = self.initial()?;
        let (t0, t) = self.times();
        let hbar = self.hbar();
        let times = self.cfg.time.as_ref().unwrap().output_times(DEFAULT_OUTPUTS);
        let traj = flow::integrate_characteristics(self.model.as_ref(), &x0, t0, t - t0, &times, &self.flow)?;
        self.emit_csv("trajectory.csv", |w| traj.write_csv(w))?;

        let d = self.dim();
        let mut rows = Vec::new();
        let mut min_product = f64::INFINITY;
        for s in &traj.states {
            let obs = AnisotropicPacket::from_state(&x0, s, hbar)?.observables();
            let products = obs.uncertainty_products();
            min_product = products.iter().cloned().fold(min_product, f64::min);
            let mut row = vec![s.t];
            row.extend(obs.mean_position.iter());
            row.extend(obs.mean_momentum.iter());
            row.extend((0..d).map(|j| obs.position_covariance[(j, j)]));
            row.extend((0..d).map(|j| obs.momentum_covariance[(j, j)]));
            row.extend(products);
            rows.push(row);
        }
        self.emit_csv("observables.csv", |w| {
            let mut header = vec!["t".to_string()];
            for prefix in ["mean_q", "mean_p", "var_q", "var_p", "dq_dp"] {
                header.extend((0..d).map(|j| format!("{prefix}{j}")));
            }
            writeln!(w, "{}", header.join(","))?;
            for row in &rows {
                writeln!(w, "{}", semiclassical::format_row(row))?;
            }
            Ok(())
        })?;

        let last = traj.final_state();
        let packet = AnisotropicPacket::from_state(&x0, &last, hbar)?;
        let grid = self.grid(&[&packet])?;
        let psi = packet.eval_on(&grid)?;
        self.emit_grid_function("packet_final", &psi)?;

        let norm = psi.norm();
        self.check("packet_norm", (norm - 1.0).abs(), "<= 1e-6".into(), (norm - 1.0).abs() <= 1e-6);
        let floor = hbar / 2.0 - 1e-12;
        self.check(
            "uncertainty_product_min",
            min_product,
            format!(">= {}", hbar / 2.0),
            min_product >= floor,
        );
        let z: Vec<[f64; 2]> = packet.z.iter().map(|v| [v.re, v.im]).collect();
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "propagate-packet",
                "hbar": hbar,
                "final_time": last.t,
                "center": {"q": last.q.as_slice(), "p": last.p.as_slice()},
                "action": last.action,
                "z_column_major": z,
                "amplitude": [packet.amplitude.re, packet.amplitude.im],
                "accepted_steps": traj.accepted_steps,
                "rejected_steps": traj.rejected_steps,
                "max_condition": traj.max_condition,
                "grid_norm": norm,
            }),
        )
    }

    fn quadrature_params(&mut self) -> (f64, f64, f64, usize) {
        let q = self.cfg.quadrature.as_ref().expect("validated");
        let c = q.spacing_factor.unwrap_or(DEFAULT_SPACING_FACTOR);
        let cap = q.node_cap.unwrap_or(DEFAULT_NODE_CAP);
        let (rho, width) = (q.rho, q.width);
        self.tolerance("rho", json!(rho));
        self.tolerance("width", json!(width));
        self.tolerance("spacing_factor", json!(c));
        self.tolerance("node_cap", json!(cap));
        (rho, width, c, cap)
    }

    fn propagate_state(&mut self) -> Step<()> {
        let x0 = self.initial()?;
        let (t0, t) = self.times();
        let hbar = self.hbar();
        let (rho, width, c, cap) = self.quadrature_params();

        let start = AnisotropicPacket::coherent(&x0, hbar)?;
        let end_state = flow::propagate_point(self.model.as_ref(), &x0, t0, t, &self.flow)?;
        let single = AnisotropicPacket::from_state(&x0, &end_state, hbar)?;
        let grid = self.grid(&[&start, &single])?;
        let psi0 = start.eval_on(&grid)?;

        let quad = build_quadrature(self.dim(), rho, width, hbar, c, cap)?;
        let (nodes, spacing) = (quad.len(), quad.spacing);
        let prop = Propagator::new(self.model.as_ref(), quad, t0, t, self.flow)?;
        let psi = prop.apply(&psi0, &grid)?;
        let distance = psi.l2_distance(&single.eval_on(&grid)?)?;
        self.emit_grid_function("state_final", &psi)?;
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "propagate-state",
                "hbar": hbar,
                "t0": t0,
                "T": t,
                "nodes": nodes,
                "spacing": spacing,
                "norm": psi.norm(),
                "distance_to_single_packet": distance,
            }),
        )
    }

    fn residual_sweep(&mut self) -> Step<()> {
        let x0 = self.initial()?;
        let (t0, t) = self.times();
        let hbars = self.hbars();
        let n = self.grid_points(256);
        let fixed = self.cfg.grid.as_ref().is_some_and(|g| g.lo.is_some());
        let samples: Vec<ResidualSample> = if fixed {
            let state = flow::propagate_point(self.model.as_ref(), &x0, t0, t, &self.flow)?;
            let mut out = Vec::new();
            for &hbar in &hbars {
                let grid = self.grid(&[])?;
                let residual = residual_norm(self.model.as_ref(), &x0, &state, hbar, &grid)?;
                out.push(ResidualSample {
                    hbar,
                    residual,
                    scaled: residual / hbar.powf(1.5),
                });
            }
            out
        } else {
            reference::residual_sweep(self.model.as_ref(), &x0, t0, t, &hbars, n, &self.flow)?
        };
        self.emit_csv("residual.csv", |w| reference::write_residual_csv(w, &samples))?;

        let quadratic = self.cfg.model.name != "quartic-anharmonic";
        let floor = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.hbar, s.residual)).collect();
        let slope = if quadratic { loglog_slope(&pts).ok() } else { Some(loglog_slope(&pts)?) };
        if quadratic {
            self.check("residual_floor", floor, format!("<= {RESIDUAL_FLOOR:e}"), floor <= RESIDUAL_FLOOR);
        } else {
            let s = slope.unwrap();
            self.check(
                "loglog_slope",
                s,
                format!("in [{}, {}]", SLOPE_RANGE.0, SLOPE_RANGE.1),
                (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s),
            );
        }
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "residual-sweep",
                "t": t,
                "samples": samples,
                "loglog_slope": slope,
                "max_residual": floor,
            }),
        )
    }

    fn invariants(&mut self) -> Step<()> {
        let x0 = self.initial()?;
        let (t0, t) = self.times();
        let times = self.cfg.time.as_ref().unwrap().output_times(DEFAULT_OUTPUTS);
        let traj = flow::integrate_characteristics(self.model.as_ref(), &x0, t0, t - t0, &times, &self.flow)?;
        let reports: Vec<_> = traj.states.iter().map(|s| (s.t, relation_residuals(&s.a, &s.b))).collect();

        let names: Vec<&str> = reports[0].1.relative_residuals().iter().map(|(n, _)| *n).collect();
        let mut maxima = serde_json::Map::new();
        let mut worst: f64 = 0.0;
        let mut min_pos = f64::INFINITY;
        let mut det_identity: f64 = 0.0;
        for name in &names {
            let m = reports
                .iter()
                .filter_map(|(_, r)| r.relative_residuals().into_iter().find(|(n, _)| n == name))
                .map(|(_, v)| v)
                .fold(0.0, f64::max);
            worst = worst.max(m);
            maxima.insert(name.to_string(), json!(m));
        }
        for (_, r) in &reports {
            if let Some(p) = r.siegel_pos {
                min_pos = min_pos.min(p);
            }
            if let Some(d) = r.det_identity {
                det_identity = det_identity.max(d);
            }
        }
        maxima.insert("det_identity".into(), json!(det_identity));
        maxima.insert("siegel_pos_min".into(), json!(min_pos));

        self.emit_csv("invariants.csv", |w| {
            let mut header = vec!["t"];
            header.extend(&names);
            header.extend(["det_identity", "siegel_pos"]);
            writeln!(w, "{}", header.join(","))?;
            for (t, r) in &reports {
                let mut row = vec![*t];
                row.extend(r.relative_residuals().iter().map(|(_, v)| *v));
                row.push(r.det_identity.unwrap_or(f64::NAN));
                row.push(r.siegel_pos.unwrap_or(f64::NAN));
                writeln!(w, "{}", semiclassical::format_row(&row))?;
            }
            Ok(())
        })?;
        let bound = format!("<= {RELATION_BOUND:e}");
        self.check("max_relation_residual", worst, bound.clone(), worst <= RELATION_BOUND);
        self.check("det_identity", det_identity, bound, det_identity <= RELATION_BOUND);
        self.check("siegel_pos_min", min_pos, "> 0".into(), min_pos > 0.0);
        let states: Vec<Value> = reports
            .iter()
            .map(|(t, r)| json!({"t": t, "report": r}))
            .collect();
        self.emit_json(
            "invariants.json",
            &json!({
                "scenario": "invariants",
                "max": maxima,
                "max_condition": traj.max_condition,
                "states": states,
            }),
        )
    }

    fn frame_check(&mut self) -> Step<()> {
        let x0 = self.initial()?;
        let hbar = self.hbar();
        let (rho, width, _, cap) = self.quadrature_params();
        let mut factors = self.cfg.quadrature.as_ref().unwrap().spacing_factors.clone().unwrap_or(DEFAULT_SPACING_SWEEP.to_vec());
        factors.sort_by(|a, b| b.total_cmp(a));
        factors.dedup();
        self.tolerance("spacing_factors", json!(factors));

        let packet = AnisotropicPacket::coherent(&x0, hbar)?;
        let grid = self.grid(&[&packet])?;
        let psi0 = packet.eval_on(&grid)?;
        let t0 = self.cfg.time.as_ref().map_or(0.0, |t| t.t0);
        let mut rows = Vec::new();
        for &c in &factors {
            let quad = build_quadrature(self.dim(), rho, width, hbar, c, cap)?;
            let (nodes, spacing) = (quad.len(), quad.spacing);
            let prop = Propagator::new(self.model.as_ref(), quad, t0, t0, self.flow)?;
            let err = prop.apply(&psi0, &grid)?.l2_distance(&psi0)?;
            rows.push((c, spacing, nodes, err));
        }
        self.emit_csv("frame.csv", |w| {
            writeln!(w, "spacing_factor,spacing,nodes,error")?;
            for (c, h, n, e) in &rows {
                writeln!(w, "{},{},{}", semiclassical::format_row(&[*c, *h]), n, semiclassical::format_row(&[*e]))?;
            }
            Ok(())
        })?;
        let errors: Vec<f64> = rows.iter().map(|r| r.3).collect();
        if errors.len() > 1 {
            let worst_ratio = errors.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            self.check("strictly_decreasing", worst_ratio, "< 1 (largest successive ratio)".into(), worst_ratio < 1.0);
        }
        if let Some(r) = rows.iter().find(|r| r.0 == DEFAULT_SPACING_FACTOR) {
            self.check("error_at_c_0.5", r.3, format!("<= {FRAME_BOUND:e}"), r.3 <= FRAME_BOUND);
        }
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "frame-check",
                "hbar": hbar,
                "rho": rho,
                "width": width,
                "rows": rows.iter().map(|(c, h, n, e)| json!({"spacing_factor": c, "spacing": h, "nodes": n, "error": e})).collect::<Vec<_>>(),
            }),
        )
    }

    fn branch_search(&mut self) -> Step<BranchSearch> {
        let v = self.cfg.vanvleck.as_ref().expect("validated");
        let mut search = match &v.search_box {
            Some(b) => BranchSearch::new(b.iter().map(|p| (p[0], p[1])).collect()),
            None => BranchSearch::cube(self.dim(), DEFAULT_SEARCH_HALF_WIDTH),
        };
        if let Some(n) = v.n_starts {
            search.n_starts = n;
        }
        if let Some(tol) = v.tol {
            search.tol = tol;
        }
        if let Some(m) = v.maslov_method {
            search.maslov = m;
        }
        search.seed = self.seed;
        search.flow = self.flow;
        if let Some(q) = &self.cfg.quadrature {
            search.cutoff = Some(semiclassical::propagator::Cutoff::new(q.rho, q.width)?);
        }
        self.tolerance("shooting_tolerance", json!(search.tol));
        self.tolerance("n_starts", json!(search.n_starts));
        self.tolerance("search_box", json!(search.search_box));
        self.tolerance("maslov_method", json!(search.maslov));
        Ok(search)
    }

    fn branches(&self, y: &[f64], x: &[f64], search: &BranchSearch) -> Step<Vec<VanVleckBranch>> {
        let (t0, t) = self.times();
        match vanvleck::find_branches(self.model.as_ref(), y, x, t0, t, search) {
            Ok(b) => Ok(b),
            Err(Error::NoBranchFound { starts }) => {
                log::warn!("no connecting orbit from {y:?} to {x:?} in the search box after {starts} starts");
                Ok(Vec::new())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn vanvleck(&mut self) -> Step<()> {
        let search = self.branch_search()?;
        let v = self.cfg.vanvleck.as_ref().unwrap();
        let (x, y) = (v.x.clone(), v.y.clone());
        let branches = self.branches(&y, &x, &search)?;
        self.emit_csv("branches.csv", |w| vanvleck::write_branch_csv(w, &branches))?;
        let kernel = self.cfg.hbar.as_ref().map(|_| {
            let k = vanvleck::vanvleck_kernel(self.dim(), self.hbar(), &branches);
            [k.re, k.im]
        });
        let (t0, t) = self.times();
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "vanvleck",
                "y": y,
                "x": x,
                "t0": t0,
                "T": t,
                "branch_count": branches.len(),
                "completeness": "relative to the search box",
                "search_box": search.search_box,
                "kernel": kernel,
            }),
        )
    }

    fn kernel_compare(&mut self) -> Step<()> {
        let search = self.branch_search()?;
        let (rho, width, c, cap) = self.quadrature_params();
        let (t0, t) = self.times();
        let v = self.cfg.vanvleck.as_ref().unwrap();
        let mut pairs = vec![(v.x.clone(), v.y.clone())];
        pairs.extend(v.panel.iter().flatten().map(|p| (p.x.clone(), p.y.clone())));

        let mut plateau = Vec::new();
        for (x, y) in &pairs {
            let b: Vec<VanVleckBranch> = self.branches(y, x, &search)?.into_iter().filter(|b| b.in_plateau()).collect();
            plateau.push(b);
        }
        let mut hbars = self.hbars();
        hbars.sort_by(|a, b| b.total_cmp(a));
        let d = self.dim();
        let mut rows = Vec::new();
        let mut worst = Vec::new();
        for &hbar in &hbars {
            let quad = build_quadrature(d, rho, width, hbar, c, cap)?;
            let prop = Propagator::new(self.model.as_ref(), quad, t0, t, self.flow)?;
            let mut dev: f64 = 0.0;
            for ((x, y), b) in pairs.iter().zip(&plateau) {
                let kq = prop.kernel(x, y)?;
                let kv = vanvleck::vanvleck_kernel(d, hbar, b);
                let rel = (kq - kv).norm() / kv.norm();
                dev = dev.max(rel);
                let mut row = vec![hbar];
                row.extend(x);
                row.extend(y);
                row.extend([kq.re, kq.im, kv.re, kv.im, rel]);
                rows.push(row);
            }
            worst.push(dev);
        }
        self.emit_csv("kernel_compare.csv", |w| {
            let mut header = vec!["hbar".to_string()];
            header.extend((0..d).map(|j| format!("x{j}")));
            header.extend((0..d).map(|j| format!("y{j}")));
            header.extend(["quad_re", "quad_im", "vv_re", "vv_im", "rel_dev"].map(String::from));
            writeln!(w, "{}", header.join(","))?;
            for row in &rows {
                writeln!(w, "{}", semiclassical::format_row(row))?;
            }
            Ok(())
        })?;
        let ratio = worst.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        self.check(
            "deviation_non_increasing",
            ratio,
            "<= 1 (largest successive ratio as hbar decreases)".into(),
            ratio <= 1.0,
        );
        self.emit_json(
            "summary.json",
            &json!({
                "scenario": "kernel-compare",
                "hbar": hbars,
                "max_relative_deviation": worst,
                "pairs": pairs.len(),
                "plateau_branches": plateau.iter().map(Vec::len).collect::<Vec<_>>(),
            }),
        )
    }

    fn write_manifest(&mut self, config_bytes: &[u8], opts: &RunOptions, error: Option<&str>) -> std::io::Result<()> {
        let status = match error {
            Some(_) => "error",
            None if self.checks.iter().all(|c| c.passed) => "ok",
            None => "check-failed",
        };
        let mut files = self.files.clone();
        files.push(MANIFEST_NAME.to_string());
        let manifest = json!({
            "scenario": self.cfg.scenario.name(),
            "status": status,
            "error": error,
            "config_sha256": sha256_hex(config_bytes),
            "versions": {
                "semiclassical": semiclassical::VERSION,
                "semiclassical-cli": env!("CARGO_PKG_VERSION"),
            },
            "model": {"name": self.cfg.model.name, "params": self.cfg.model.params},
            "seed": opts.seed,
            "jobs": opts.jobs,
            "tolerances": self.tolerances,
            "checks": self.checks,
            "files": files,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_NAME), text)?;
        self.files.push(MANIFEST_NAME.to_string());
        Ok(())
    }
}

/// Reads and validates a config file without running anything.
pub fn validate_file(path: &Path) -> Result<Vec<ConfigIssue>, RunError> {
    let bytes = fs::read(path)?;
    let doc = read_document(&bytes)?;
    Ok(crate::config::validate_config(&doc))
}
