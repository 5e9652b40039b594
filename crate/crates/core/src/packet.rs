//! Coherent states `G_(q,p)` and anisotropic packets `G^Z`: pointwise and grid
//! evaluation, closed-form moments.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::CharacteristicState;
use crate::grid::{Grid, GridFunction};
use crate::linalg::{self, CMatrix};
use crate::model::PhasePoint;

/// Mass allowed outside a grid box before evaluation is refused.
pub const COVERAGE_THRESHOLD: f64 = 1e-8;

/// Standard deviations of `|G^Z|²` between the centre and an auto-sized box face.
pub const AUTO_BOX_SIGMAS: f64 = 8.0;

/// `G_(q,p)(x) = (πħ)^{-d/4} exp{(i/ħ)(p·q/2 + p·(x-q) + (i/2)|x-q|²)}`.
pub fn coherent_state(x: &[f64], q: &[f64], p: &[f64], hbar: f64) -> Complex64 {
    let d = x.len();
    let mut lin = 0.5 * dot(p, q);
    let mut r2 = 0.0;
    for j in 0..d {
        let dx = x[j] - q[j];
        lin += p[j] * dx;
        r2 += dx * dx;
    }
    let norm = (PI * hbar).powf(-0.25 * d as f64);
    Complex64::from_polar(norm * (-0.5 * r2 / hbar).exp(), lin / hbar)
}

/// Parameters of an anisotropic Gaussian packet.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicPacket {
    pub hbar: f64,
    /// Seed point `(q, p)`; enters only through the static phase `p·q/2`.
    pub initial_center: PhasePoint,
    /// `(q_t, p_t)`.
    pub center: PhasePoint,
    pub z: CMatrix,
    pub amplitude: Complex64,
    pub action: f64,
}

/// Closed-form first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub mean_position: DVector<f64>,
    pub mean_momentum: DVector<f64>,
    pub position_covariance: DMatrix<f64>,
    pub momentum_covariance: DMatrix<f64>,
}

impl Observables {
    /// `Δq_j Δp_j` per axis.
    pub fn uncertainty_products(&self) -> Vec<f64> {
        (0..self.mean_position.len())
            .map(|j| {
                (self.position_covariance[(j, j)] * self.momentum_covariance[(j, j)]).sqrt()
            })
            .collect()
    }
}

impl AnisotropicPacket {
    /// The unpropagated coherent state: `Z = iI`, `a = 1`, `S = 0`.
    pub fn coherent(x: &PhasePoint, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let d = x.dim();
        Ok(Self {
            hbar,
            initial_center: x.clone(),
            center: x.clone(),
            z: CMatrix::identity(d, d) * Complex64::i(),
            amplitude: Complex64::new(1.0, 0.0),
            action: 0.0,
        })
    }

    /// Packet parameters carried by a characteristic state seeded at `initial`.
    pub fn from_state(initial: &PhasePoint, state: &CharacteristicState, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        Ok(Self {
            hbar,
            initial_center: initial.clone(),
            center: state.center(),
            z: state.anisotropy()?,
            amplitude: state.amplitude(),
            action: state.action,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Checks `Zᵀ = Z`, `Im Z ≻ 0` and `|a|⁴ = det Im Z`.
    pub fn validate(&self) -> Result<()> {
        let asym = (&self.z - self.z.transpose()).norm() / self.z.norm().max(1.0);
        if asym > 1e-8 {
            return Err(Error::SiegelViolation {
                reason: format!("Z is not symmetric (relative defect {asym:.2e})"),
            });
        }
        let im = linalg::imag_part(&self.z);
        let min_eig = linalg::min_symmetric_eigenvalue(&im);
        if min_eig <= 0.0 {
            return Err(Error::SiegelViolation {
                reason: format!("Im Z has eigenvalue {min_eig:.3e}"),
            });
        }
        let det = im.determinant();
        let a4 = self.amplitude.norm().powi(4);
        if (a4 - det).abs() > 1e-8 * det {
            return Err(Error::invalid(format!(
                "|a|^4 = {a4} differs from det Im Z = {det}"
            )));
        }
        Ok(())
    }

    fn prefactor(&self) -> Complex64 {
        self.amplitude * (PI * self.hbar).powf(-0.25 * self.dim() as f64)
    }

    fn static_phase(&self) -> f64 {
        0.5 * self.initial_center.p.dot(&self.initial_center.q) + self.action
    }

    /// `G^Z(x)`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.eval_with(self.prefactor(), self.static_phase(), x)
    }

    fn eval_with(&self, prefactor: Complex64, static_phase: f64, x: &[f64]) -> Complex64 {
        let d = x.len();
        let mut lin = static_phase;
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let di = x[i] - self.center.q[i];
            lin += self.center.p[i] * di;
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.z[(i, j)] * (x[j] - self.center.q[j]);
            }
            quad += row * di;
        }
        let exponent = Complex64::i() * (Complex64::new(lin, 0.0) + 0.5 * quad) / self.hbar;
        prefactor * exponent.exp()
    }

    /// Samples the packet on `grid`, refusing boxes that miss more than
    /// [`COVERAGE_THRESHOLD`] of its mass.
    pub fn eval_on(&self, grid: &Grid) -> Result<GridFunction> {
        let outside = self.outside_mass(grid);
        if outside > COVERAGE_THRESHOLD {
            return Err(Error::DomainCoverage {
                outside,
                threshold: COVERAGE_THRESHOLD,
            });
        }
        Ok(self.sample(grid))
    }

    /// Samples without the coverage check.
    pub fn sample(&self, grid: &Grid) -> GridFunction {
        let pre = self.prefactor();
        let phase = self.static_phase();
        GridFunction::from_fn(grid.clone(), |x| self.eval_with(pre, phase, x))
    }

    /// Union bound on the `|G^Z|²` mass outside the grid box, from the
    /// Gaussian marginals.
    pub fn outside_mass(&self, grid: &Grid) -> f64 {
        let cov = self.position_covariance();
        (0..self.dim())
            .map(|j| {
                let s = cov[(j, j)].sqrt() * std::f64::consts::SQRT_2;
                let q = self.center.q[j];
                0.5 * libm::erfc((grid.hi()[j] - q) / s) + 0.5 * libm::erfc((q - grid.lo()[j]) / s)
            })
            .sum()
    }

    /// Box reaching `sigmas` marginal standard deviations from the centre on
    /// every axis, `n` points per axis.
    pub fn auto_grid(&self, n: usize, sigmas: f64) -> Result<Grid> {
        let cov = self.position_covariance();
        let d = self.dim();
        let half: Vec<f64> = (0..d).map(|j| sigmas * cov[(j, j)].sqrt()).collect();
        Grid::new(
            (0..d).map(|j| self.center.q[j] - half[j]).collect(),
            (0..d).map(|j| self.center.q[j] + half[j]).collect(),
            vec![n; d],
        )
    }

    /// `(ħ/2) (Im Z)⁻¹`, equal to `(ħ/2) A A*`.
    pub fn position_covariance(&self) -> DMatrix<f64> {
        let im = linalg::imag_part(&self.z);
        linalg::symmetric_fn(&im, |v| 1.0 / v) * (0.5 * self.hbar)
    }

    /// `(ħ/2) Z (Im Z)⁻¹ Z̄`, equal to `(ħ/2) B B*`.
    pub fn momentum_covariance(&self) -> DMatrix<f64> {
        let im_inv = linalg::to_complex(&linalg::symmetric_fn(&linalg::imag_part(&self.z), |v| {
            1.0 / v
        }));
        let m = &self.z * im_inv * self.z.map(|v| v.conj());
        linalg::real_part(&m) * (0.5 * self.hbar)
    }

    pub fn observables(&self) -> Observables {
        Observables {
            mean_position: self.center.q.clone(),
            mean_momentum: self.center.p.clone(),
            position_covariance: self.position_covariance(),
            momentum_covariance: self.momentum_covariance(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::invalid("hbar must be finite and positive"));
    }
    Ok(())
}
