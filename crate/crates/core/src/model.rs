//! Hamiltonian models: the evaluation contract used by the integrators and a
//! handful of polynomial builtins with analytic derivatives.
//!
//! Index convention for the mixed Hessian blocks: `pq[(i, j)] = ∂²H/∂p_i∂q_j`
//! and `qp = pqᵀ`. With this convention the variational system reads
//! `dA/dt = H_pq A + H_pp B`, `dB/dt = -H_qq A - H_qp B`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(q, p)` of the 2d-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::invalid(format!(
                "phase point needs q and p of equal length >= 1 (got {} and {})",
                q.len(),
                p.len()
            )));
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("phase point has non-finite entries"));
        }
        Ok(Self { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(p))
    }

    /// One-dimensional shorthand.
    pub fn scalar(q: f64, p: f64) -> Self {
        Self {
            q: DVector::from_element(1, q),
            p: DVector::from_element(1, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Euclidean norm of the stacked vector `(q, p)`.
    pub fn radius(&self) -> f64 {
        (self.q.norm_squared() + self.p.norm_squared()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// ∂H/∂q
    pub dq: DVector<f64>,
    /// ∂H/∂p
    pub dp: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub qq: DMatrix<f64>,
    pub qp: DMatrix<f64>,
    pub pq: DMatrix<f64>,
    pub pp: DMatrix<f64>,
}

impl HessianBlocks {
    pub fn zeros(d: usize) -> Self {
        Self {
            qq: DMatrix::zeros(d, d),
            qp: DMatrix::zeros(d, d),
            pq: DMatrix::zeros(d, d),
            pp: DMatrix::zeros(d, d),
        }
    }

    /// Largest relative violation of `H_qq = H_qqᵀ`, `H_pp = H_ppᵀ`, `H_pq = H_qpᵀ`.
    pub fn symmetry_defect(&self) -> f64 {
        let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
            (a - b).norm() / scale
        };
        rel(&self.qq, &self.qq.transpose())
            .max(rel(&self.pp, &self.pp.transpose()))
            .max(rel(&self.pq, &self.qp.transpose()))
    }

    /// The full 2d×2d Hessian `[[H_qq, H_qp], [H_pq, H_pp]]`.
    pub fn full(&self) -> DMatrix<f64> {
        let d = self.qq.nrows();
        let mut h = DMatrix::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d)).copy_from(&self.qq);
        h.view_mut((0, d), (d, d)).copy_from(&self.qp);
        h.view_mut((d, 0), (d, d)).copy_from(&self.pq);
        h.view_mut((d, d), (d, d)).copy_from(&self.pp);
        h
    }
}

/// Evaluation contract for a smooth Hamiltonian `H(q, p, t)`.
///
/// Implementations must be pure functions of their arguments: the flow and
/// propagator modules call them concurrently from many threads.
pub trait Hamiltonian: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> f64;
    fn gradient(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> Gradient;
    fn hessian(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> HessianBlocks;

    /// `Some` when `H = |p|²/(2m) + V(q, t)`. Only such models can be fed to the
    /// split-step reference solver and the residual meter.
    fn mechanical(&self) -> Option<&dyn Mechanical> {
        None
    }
}

/// Decomposition `H = |p|²/(2m) + V(q, t)`.
pub trait Mechanical: Send + Sync {
    fn mass(&self) -> f64;
    fn potential(&self, q: &[f64], t: f64) -> f64;
}

/// Value, gradient and Hessian blocks bundled from one call.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation {
    pub value: f64,
    pub gradient: Gradient,
    pub hessian: HessianBlocks,
}

pub fn evaluate(model: &dyn Hamiltonian, x: &PhasePoint, t: f64) -> Result<ModelEvaluation> {
    let value = model.value(&x.q, &x.p, t);
    let gradient = model.gradient(&x.q, &x.p, t);
    let hessian = model.hessian(&x.q, &x.p, t);

    let bad = |name: &str| Error::ModelEvaluation {
        component: name.to_string(),
        t,
    };
    if !value.is_finite() {
        return Err(bad("value"));
    }
    if !gradient.dq.iter().all(|v| v.is_finite()) {
        return Err(bad("gradient H_q"));
    }
    if !gradient.dp.iter().all(|v| v.is_finite()) {
        return Err(bad("gradient H_p"));
    }
    for (name, block) in [
        ("Hessian H_qq", &hessian.qq),
        ("Hessian H_qp", &hessian.qp),
        ("Hessian H_pq", &hessian.pq),
        ("Hessian H_pp", &hessian.pp),
    ] {
        if !block.iter().all(|v| v.is_finite()) {
            return Err(bad(name));
        }
    }
    Ok(ModelEvaluation {
        value,
        gradient,
        hessian,
    })
}

/// Deviation of the analytic derivatives from central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifferenceAudit {
    pub step: f64,
    /// max_i |∇H_i - D_i H| / max(1, |D_i H|)
    pub gradient_residual: f64,
    /// Same measure for the Hessian against differences of the gradient.
    pub hessian_residual: f64,
}

impl FiniteDifferenceAudit {
    pub fn max(&self) -> f64 {
        self.gradient_residual.max(self.hessian_residual)
    }
}

/// Compares the analytic gradient and Hessian of `model` against central
/// differences of its value and gradient. Reports only; never fails.
pub fn finite_difference_audit(
    model: &dyn Hamiltonian,
    x: &PhasePoint,
    t: f64,
    step: f64,
) -> FiniteDifferenceAudit {
    assert!(step > 0.0, "finite-difference step must be positive");
    let d = x.dim();
    let z0: Vec<f64> = x.q.iter().chain(x.p.iter()).copied().collect();
    let split = |z: &[f64]| {
        (
            DVector::from_column_slice(&z[..d]),
            DVector::from_column_slice(&z[d..]),
        )
    };
    let grad_vec = |z: &[f64]| -> Vec<f64> {
        let (q, p) = split(z);
        let g = model.gradient(&q, &p, t);
        g.dq.iter().chain(g.dp.iter()).copied().collect()
    };

    let analytic_grad = grad_vec(&z0);
    let analytic_hess = model.hessian(&x.q, &x.p, t).full();

    let rel = |a: f64, fd: f64| (a - fd).abs() / fd.abs().max(1.0);
    let mut gradient_residual: f64 = 0.0;
    let mut hessian_residual: f64 = 0.0;
    for k in 0..2 * d {
        let mut plus = z0.clone();
        let mut minus = z0.clone();
        plus[k] += step;
        minus[k] -= step;

        let (qp, pp) = split(&plus);
        let (qm, pm) = split(&minus);
        let fd = (model.value(&qp, &pp, t) - model.value(&qm, &pm, t)) / (2.0 * step);
        gradient_residual = gradient_residual.max(rel(analytic_grad[k], fd));

        // column k of the Hessian from differences of the gradient
        let gp = grad_vec(&plus);
        let gm = grad_vec(&minus);
        for i in 0..2 * d {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            hessian_residual = hessian_residual.max(rel(analytic_hess[(i, k)], fd));
        }
    }
    FiniteDifferenceAudit {
        step,
        gradient_residual,
        hessian_residual,
    }
}

/// `H = |p|²/(2m)`.
#[derive(Debug, Clone)]
pub struct FreeParticle {
    pub dim: usize,
    pub mass: f64,
}

impl FreeParticle {
    pub fn new(dim: usize, mass: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("mass", mass)?;
        Ok(Self { dim, mass })
    }
}

impl Hamiltonian for FreeParticle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _q: &DVector<f64>, p: &DVector<f64>, _t: f64) -> f64 {
        p.norm_squared() / (2.0 * self.mass)
    }
    fn gradient(&self, q: &DVector<f64>, p: &DVector<f64>, _t: f64) -> Gradient {
        Gradient {
            dq: DVector::zeros(q.len()),
            dp: p / self.mass,
        }
    }
    fn hessian(&self, _q: &DVector<f64>, _p: &DVector<f64>, _t: f64) -> HessianBlocks {
        let mut h = HessianBlocks::zeros(self.dim);
        h.pp = DMatrix::identity(self.dim, self.dim) / self.mass;
        h
    }
    fn mechanical(&self) -> Option<&dyn Mechanical> {
        Some(self)
    }
}

impl Mechanical for FreeParticle {
    fn mass(&self) -> f64 {
        self.mass
    }
    fn potential(&self, _q: &[f64], _t: f64) -> f64 {
        0.0
    }
}

/// `H = |p|²/(2m) + (m/2) qᵀ Ω² q` with `Ω²` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct HarmonicOscillator {
    pub omega2: DMatrix<f64>,
    pub mass: f64,
}

impl HarmonicOscillator {
    pub fn new(omega2: DMatrix<f64>, mass: f64) -> Result<Self> {
        let d = omega2.nrows();
        check_dim(d)?;
        if omega2.ncols() != d {
            return Err(Error::invalid("frequency-squared matrix must be square"));
        }
        if (&omega2 - omega2.transpose()).norm() > 1e-12 * omega2.norm() {
            return Err(Error::invalid("frequency-squared matrix must be symmetric"));
        }
        if omega2.clone().symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::invalid(
                "frequency-squared matrix must be positive definite",
            ));
        }
        check_positive("mass", mass)?;
        Ok(Self { omega2, mass })
    }

    /// Isotropic oscillator with unit mass and unit frequency in `dim` dimensions.
    pub fn isotropic(dim: usize, omega2: f64) -> Result<Self> {
        check_positive("omega2", omega2)?;
        Self::new(DMatrix::identity(dim, dim) * omega2, 1.0)
    }
}

impl Hamiltonian for HarmonicOscillator {
    fn dim(&self) -> usize {
        self.omega2.nrows()
    }
    fn value(&self, q: &DVector<f64>, p: &DVector<f64>, _t: f64) -> f64 {
        p.norm_squared() / (2.0 * self.mass) + 0.5 * self.mass * q.dot(&(&self.omega2 * q))
    }
    fn gradient(&self, q: &DVector<f64>, p: &DVector<f64>, _t: f64) -> Gradient {
        Gradient {
            dq: &self.omega2 * q * self.mass,
            dp: p / self.mass,
        }
    }
    fn hessian(&self, _q: &DVector<f64>, _p: &DVector<f64>, _t: f64) -> HessianBlocks {
        let d = self.dim();
        let mut h = HessianBlocks::zeros(d);
        h.qq = &self.omega2 * self.mass;
        h.pp = DMatrix::identity(d, d) / self.mass;
        h
    }
    fn mechanical(&self) -> Option<&dyn Mechanical> {
        Some(self)
    }
}

impl Mechanical for HarmonicOscillator {
    fn mass(&self) -> f64 {
        self.mass
    }
    fn potential(&self, q: &[f64], _t: f64) -> f64 {
        let q = DVector::from_column_slice(q);
        0.5 * self.mass * q.dot(&(&self.omega2 * &q))
    }
}

/// `H = |p|²/2 + ω²|q|²/2 + λ Σ_j q_j⁴`.
#[derive(Debug, Clone)]
pub struct QuarticAnharmonic {
    pub dim: usize,
    pub omega2: f64,
    pub lambda: f64,
}

impl QuarticAnharmonic {
    pub fn new(dim: usize, omega2: f64, lambda: f64) -> Result<Self> {
        check_dim(dim)?;
        check_finite("omega2", omega2)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid("lambda must be finite and non-negative"));
        }
        Ok(Self {
            dim,
            omega2,
            lambda,
        })
    }
}

impl Hamiltonian for QuarticAnharmonic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> f64 {
        0.5 * p.norm_squared() + self.potential(q.as_slice(), t)
    }
    fn gradient(&self, q: &DVector<f64>, p: &DVector<f64>, _t: f64) -> Gradient {
        Gradient {
            dq: q.map(|x| self.omega2 * x + 4.0 * self.lambda * x.powi(3)),
            dp: p.clone(),
        }
    }
    fn hessian(&self, q: &DVector<f64>, _p: &DVector<f64>, _t: f64) -> HessianBlocks {
        let mut h = HessianBlocks::zeros(self.dim);
        h.qq = DMatrix::from_diagonal(&q.map(|x| self.omega2 + 12.0 * self.lambda * x * x));
        h.pp = DMatrix::identity(self.dim, self.dim);
        h
    }
    fn mechanical(&self) -> Option<&dyn Mechanical> {
        Some(self)
    }
}

impl Mechanical for QuarticAnharmonic {
    fn mass(&self) -> f64 {
        1.0
    }
    fn potential(&self, q: &[f64], _t: f64) -> f64 {
        q.iter()
            .map(|x| 0.5 * self.omega2 * x * x + self.lambda * x.powi(4))
            .sum()
    }
}

/// `H = |p|²/2 + ω²|q|²/2 - f₀ cos(νt) Σ_j q_j`.
#[derive(Debug, Clone)]
pub struct DrivenOscillator {
    pub dim: usize,
    pub omega2: f64,
    pub forcing: f64,
    pub drive_frequency: f64,
}

impl DrivenOscillator {
    pub fn new(dim: usize, omega2: f64, forcing: f64, drive_frequency: f64) -> Result<Self> {
        check_dim(dim)?;
        check_finite("omega2", omega2)?;
        check_finite("f0", forcing)?;
        check_finite("nu", drive_frequency)?;
        Ok(Self {
            dim,
            omega2,
            forcing,
            drive_frequency,
        })
    }

    fn drive(&self, t: f64) -> f64 {
        self.forcing * (self.drive_frequency * t).cos()
    }
}

impl Hamiltonian for DrivenOscillator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> f64 {
        0.5 * p.norm_squared() + self.potential(q.as_slice(), t)
    }
    fn gradient(&self, q: &DVector<f64>, p: &DVector<f64>, t: f64) -> Gradient {
        let f = self.drive(t);
        Gradient {
            dq: q.map(|x| self.omega2 * x - f),
            dp: p.clone(),
        }
    }
    fn hessian(&self, _q: &DVector<f64>, _p: &DVector<f64>, _t: f64) -> HessianBlocks {
        let mut h = HessianBlocks::zeros(self.dim);
        h.qq = DMatrix::identity(self.dim, self.dim) * self.omega2;
        h.pp = DMatrix::identity(self.dim, self.dim);
        h
    }
    fn mechanical(&self) -> Option<&dyn Mechanical> {
        Some(self)
    }
}

impl Mechanical for DrivenOscillator {
    fn mass(&self) -> f64 {
        1.0
    }
    fn potential(&self, q: &[f64], t: f64) -> f64 {
        let f = self.drive(t);
        q.iter().map(|x| 0.5 * self.omega2 * x * x - f * x).sum()
    }
}

/// A parameter value from the flat model table of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

pub type ModelParams = BTreeMap<String, ParamValue>;

/// Names accepted by [`build_model`].
pub const MODEL_NAMES: [&str; 4] = [
    "free-particle",
    "harmonic-oscillator",
    "quartic-anharmonic",
    "driven-oscillator",
];

/// Parameter keys accepted for each model name.
pub fn model_param_keys(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "free-particle" => &["dim", "mass"],
        "harmonic-oscillator" => &["dim", "mass", "omega2"],
        "quartic-anharmonic" => &["dim", "omega2", "lambda"],
        "driven-oscillator" => &["dim", "omega2", "f0", "nu"],
        _ => return None,
    })
}

/// Registry: maps a model name and its flat parameter table to a builtin.
pub fn build_model(name: &str, params: &ModelParams) -> Result<Box<dyn Hamiltonian>> {
    let keys = model_param_keys(name)
        .ok_or_else(|| Error::invalid(format!("unknown model '{name}'")))?;
    if let Some(extra) = params.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(Error::invalid(format!(
            "model '{name}' has no parameter '{extra}'"
        )));
    }

    let scalar = |key: &str, default: f64| -> Result<f64> {
        match params.get(key) {
            None => Ok(default),
            Some(ParamValue::Scalar(v)) => Ok(*v),
            Some(ParamValue::Matrix(_)) => {
                Err(Error::invalid(format!("parameter '{key}' must be a number")))
            }
        }
    };
    let dim = {
        let v = scalar("dim", 1.0)?;
        if v.fract() != 0.0 || v < 1.0 {
            return Err(Error::invalid("parameter 'dim' must be a positive integer"));
        }
        v as usize
    };

    Ok(match name {
        "free-particle" => Box::new(FreeParticle::new(dim, scalar("mass", 1.0)?)?),
        "harmonic-oscillator" => {
            let omega2 = match params.get("omega2") {
                None => DMatrix::identity(dim, dim),
                Some(ParamValue::Scalar(w)) => DMatrix::identity(dim, dim) * *w,
                Some(ParamValue::Matrix(rows)) => {
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::invalid(format!(
                            "parameter 'omega2' must be a {dim}x{dim} matrix"
                        )));
                    }
                    DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
                }
            };
            Box::new(HarmonicOscillator::new(omega2, scalar("mass", 1.0)?)?)
        }
        "quartic-anharmonic" => Box::new(QuarticAnharmonic::new(
            dim,
            scalar("omega2", 1.0)?,
            scalar("lambda", 0.1)?,
        )?),
        "driven-oscillator" => Box::new(DrivenOscillator::new(
            dim,
            scalar("omega2", 1.0)?,
            scalar("f0", 0.0)?,
            scalar("nu", 1.0)?,
        )?),
        _ => unreachable!(),
    })
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{name} must be finite and positive")));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be finite")));
    }
    Ok(())
}
