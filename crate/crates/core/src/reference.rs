//! Independent checks: a Strang split-step Fourier solver for
//! `H = |p|²/2m + V(q, t)`, the L² residual `‖(iħ∂_t − Ĥ) G^Z‖` of a
//! propagated packet, and small fitting helpers.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{self, CharacteristicState, FlowOptions};
use crate::grid::{Grid, GridFunction};
use crate::model::{self, Hamiltonian, PhasePoint};
use crate::packet::AnisotropicPacket;

/// Largest tolerated `|ψ|²` fraction in the boundary band or the top
/// spectral band.
pub const WRAP_THRESHOLD: f64 = 1e-10;

/// Fraction of each axis (in space and in frequency) inspected for wrap-around.
pub const EDGE_BAND: f64 = 0.05;

/// Half-width of auto-sized boxes, in packet standard deviations.
pub const AUTO_BOX_SIGMAS: f64 = 12.0;

pub type Potential<'a> = Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync + 'a>;

pub struct SplitStepConfig<'a> {
    pub grid: Grid,
    pub dt: f64,
    pub hbar: f64,
    pub mass: f64,
    pub potential: Potential<'a>,
}

impl<'a> SplitStepConfig<'a> {
    pub fn new(grid: Grid, dt: f64, hbar: f64, mass: f64, potential: Potential<'a>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid("hbar must be finite and positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("mass must be finite and positive"));
        }
        Ok(Self {
            grid,
            dt,
            hbar,
            mass,
            potential,
        })
    }

    /// Uses the model's mechanical form; fails for models without one.
    pub fn from_model(model: &'a dyn Hamiltonian, grid: Grid, dt: f64, hbar: f64) -> Result<Self> {
        let mech = model
            .mechanical()
            .ok_or_else(|| Error::invalid("model has no |p|²/2m + V(q, t) form"))?;
        if grid.dim() != model.dim() {
            return Err(Error::invalid("grid and model dimensions differ"));
        }
        Self::new(grid, dt, hbar, mech.mass(), Box::new(move |q, t| mech.potential(q, t)))
    }

    /// `dt ħ |k_max|² / 2m`, the largest kinetic phase per step.
    pub fn kinetic_phase(&self, dt: f64) -> f64 {
        let k2: f64 = (0..self.grid.dim())
            .map(|j| (PI / self.grid.spacing(j)).powi(2))
            .sum();
        dt * self.hbar * k2 / (2.0 * self.mass)
    }
}

/// Multi-dimensional FFT over a row-major array, last axis fastest.
struct SpectralOps {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// `|k|²` at every flat index.
    k2: Vec<f64>,
}

impl SpectralOps {
    fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let shape = grid.shape().to_vec();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let axes: Vec<Vec<f64>> = (0..shape.len())
            .map(|j| wavenumbers(shape[j], grid.hi()[j] - grid.lo()[j]))
            .collect();
        let total: usize = shape.iter().product();
        let k2 = (0..total)
            .map(|i| {
                let mut rest = i;
                let mut s = 0.0;
                for j in (0..shape.len()).rev() {
                    s += axes[j][rest % shape[j]].powi(2);
                    rest /= shape[j];
                }
                s
            })
            .collect();
        Self {
            shape,
            forward,
            inverse,
            k2,
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let d = self.shape.len();
        let mut line = Vec::new();
        for j in 0..d {
            let n = self.shape[j];
            let stride: usize = self.shape[j + 1..].iter().product();
            let outer: usize = self.shape[..j].iter().product();
            if stride == 1 {
                plans[j].process(data);
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plans[j].process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// Fraction of spectral mass in the outer frequency band of any axis.
    fn high_frequency_fraction(&self, spectrum: &[Complex64]) -> f64 {
        let total: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let d = self.shape.len();
        let mut edge = 0.0;
        for (i, v) in spectrum.iter().enumerate() {
            let mut rest = i;
            for j in (0..d).rev() {
                let n = self.shape[j];
                let k = rest % n;
                rest /= n;
                let signed = if k < n / 2 { k } else { n - k };
                if signed as f64 >= (0.5 - EDGE_BAND) * n as f64 {
                    edge += v.norm_sqr();
                    break;
                }
            }
        }
        edge / total
    }
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * signed / length
        })
        .collect()
}

fn check_wrap(psi: &GridFunction, ops: &SpectralOps) -> Result<()> {
    let edge = psi.boundary_mass_fraction(EDGE_BAND);
    if edge > WRAP_THRESHOLD {
        return Err(Error::DomainCoverage {
            outside: edge,
            threshold: WRAP_THRESHOLD,
        });
    }
    let mut spec = psi.values.clone();
    ops.transform(&mut spec, false);
    let high = ops.high_frequency_fraction(&spec);
    if high > WRAP_THRESHOLD {
        return Err(Error::DomainCoverage {
            outside: high,
            threshold: WRAP_THRESHOLD,
        });
    }
    Ok(())
}

/// Strang-split evolution from `t0` to each of `times` (ascending, `≥ t0`).
/// Each segment uses the largest step `≤ dt` that divides it evenly.
pub fn split_step_solve_at(
    config: &SplitStepConfig,
    psi0: &GridFunction,
    t0: f64,
    times: &[f64],
) -> Result<Vec<GridFunction>> {
    if psi0.grid != config.grid {
        return Err(Error::GridMismatch);
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::invalid("output times must be ascending and not before t0"));
    }
    let ops = SpectralOps::new(&config.grid);
    check_wrap(psi0, &ops)?;

    let mut psi = psi0.values.clone();
    let mut now = t0;
    let mut out = Vec::with_capacity(times.len());
    let points = config.grid.points();
    let mut potential = vec![0.0; points.len()];
    for &target in times {
        let span = target - now;
        if span > 0.0 {
            let steps = (span / config.dt - 1e-9).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let phase = config.kinetic_phase(dt);
            if phase >= PI {
                return Err(Error::StabilityGuard { phase });
            }
            let kinetic: Vec<Complex64> = ops
                .k2
                .iter()
                .map(|k2| Complex64::from_polar(1.0, -config.hbar * k2 * dt / (2.0 * config.mass)))
                .collect();
            let check_every = (steps / 16).max(1);
            for n in 0..steps {
                let mid = now + (n as f64 + 0.5) * dt;
                potential
                    .par_iter_mut()
                    .zip(&points)
                    .for_each(|(v, x)| *v = (config.potential)(x, mid));
                let half = |psi: &mut [Complex64]| {
                    for (v, u) in psi.iter_mut().zip(&potential) {
                        *v *= Complex64::from_polar(1.0, -u * dt / (2.0 * config.hbar));
                    }
                };
                half(&mut psi);
                ops.transform(&mut psi, false);
                psi.iter_mut().zip(&kinetic).for_each(|(v, k)| *v *= k);
                ops.transform(&mut psi, true);
                half(&mut psi);
                if (n + 1) % check_every == 0 {
                    let edge = GridFunction {
                        grid: config.grid.clone(),
                        values: psi.clone(),
                    }
                    .boundary_mass_fraction(EDGE_BAND);
                    if edge > WRAP_THRESHOLD {
                        return Err(Error::DomainCoverage {
                            outside: edge,
                            threshold: WRAP_THRESHOLD,
                        });
                    }
                }
            }
            now = target;
        }
        let f = GridFunction::new(config.grid.clone(), psi.clone())?;
        check_wrap(&f, &ops)?;
        out.push(f);
    }
    Ok(out)
}

pub fn split_step_solve(
    config: &SplitStepConfig,
    psi0: &GridFunction,
    t0: f64,
    t: f64,
) -> Result<GridFunction> {
    Ok(split_step_solve_at(config, psi0, t0, &[t])?.remove(0))
}

/// Box of half-width [`AUTO_BOX_SIGMAS`] standard deviations around the packet.
pub fn auto_grid(packet: &AnisotropicPacket, n: usize) -> Result<Grid> {
    packet.auto_grid(n, AUTO_BOX_SIGMAS)
}

/// `‖(iħ∂_t − Ĥ) G^Z‖` on `grid` for the packet carried by `state`, with
/// `∂_t G^Z` from the characteristic rates and `Ĥ G^Z` spectral.
pub fn residual_norm(
    model: &dyn Hamiltonian,
    initial: &PhasePoint,
    state: &CharacteristicState,
    hbar: f64,
    grid: &Grid,
) -> Result<f64> {
    let mech = model
        .mechanical()
        .ok_or_else(|| Error::invalid("model has no |p|²/2m + V(q, t) form"))?;
    if grid.dim() != model.dim() {
        return Err(Error::invalid("grid and model dimensions differ"));
    }
    let packet = AnisotropicPacket::from_state(initial, state, hbar)?;
    let g = packet.sample(grid);
    let ops = SpectralOps::new(grid);
    check_wrap(&g, &ops)?;

    let t = state.t;
    let eval = model::evaluate(model, &state.center(), t)?;
    let z = &packet.z;
    let dq = &eval.gradient.dp;
    let dp = -&eval.gradient.dq;
    let daction = state.p.dot(dq) - eval.value;
    let dz = flow::riccati_rhs(&eval.hessian, z);
    let dlog_a = flow::transport_rate(&eval.hessian, z);
    let d = grid.dim();
    let i = Complex64::i();

    // iħ ∂_t G = G (iħ ȧ/a − (Ṡ + ṗ·δ − p·q̇ + ½ δᵀŻδ − q̇ᵀZδ))
    let dtg = GridFunction::from_fn(grid.clone(), |x| {
        let delta: Vec<f64> = (0..d).map(|j| x[j] - state.q[j]).collect();
        let mut phase = Complex64::new(daction - state.p.dot(dq), 0.0);
        for j in 0..d {
            phase += dp[j] * delta[j];
            let mut zd = Complex64::new(0.0, 0.0);
            let mut dzd = Complex64::new(0.0, 0.0);
            for k in 0..d {
                zd += z[(j, k)] * delta[k];
                dzd += dz[(j, k)] * delta[k];
            }
            phase += 0.5 * delta[j] * dzd - dq[j] * zd;
        }
        packet.eval(x) * (i * hbar * dlog_a - phase)
    });

    let mut spec = g.values.clone();
    ops.transform(&mut spec, false);
    let kin = hbar * hbar / (2.0 * mech.mass());
    spec.iter_mut().zip(&ops.k2).for_each(|(v, k2)| *v *= kin * k2);
    ops.transform(&mut spec, true);
    let points = grid.points();
    let hg: Vec<Complex64> = spec
        .iter()
        .zip(&g.values)
        .zip(&points)
        .map(|((k, v), x)| k + mech.potential(x, t) * v)
        .collect();
    let hg = GridFunction::new(grid.clone(), hg)?;
    dtg.l2_distance(&hg)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualSample {
    pub hbar: f64,
    pub residual: f64,
    /// `residual / ħ^{3/2}`.
    pub scaled: f64,
}

/// Residual at time `t` of the packet launched from `x0` at `t0`, for each
/// `ħ`, on auto-sized grids with `n` points per axis.
pub fn residual_sweep(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    t: f64,
    hbars: &[f64],
    n: usize,
    opts: &FlowOptions,
) -> Result<Vec<ResidualSample>> {
    let state = flow::propagate_point(model, x0, t0, t, opts)?;
    hbars
        .par_iter()
        .map(|&hbar| {
            let packet = AnisotropicPacket::from_state(x0, &state, hbar)?;
            let grid = auto_grid(&packet, n)?;
            let residual = residual_norm(model, x0, &state, hbar, &grid)?;
            Ok(ResidualSample {
                hbar,
                residual,
                scaled: residual / hbar.powf(1.5),
            })
        })
        .collect()
}

pub fn write_residual_csv<W: Write>(mut w: W, samples: &[ResidualSample]) -> std::io::Result<()> {
    writeln!(w, "hbar,residual,residual_over_hbar_1.5")?;
    for s in samples {
        writeln!(w, "{}", crate::format_row(&[s.hbar, s.residual, s.scaled]))?;
    }
    Ok(())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::invalid("slope fit needs at least two positive points"));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.l2_distance(g)
}
