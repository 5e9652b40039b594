//! Phase-space propagator assembled from propagated coherent states:
//!
//! `K_χ(x, y) = (2πħ)^{-d} ∫ χ(q, p) conj(G_(q,p)(y)) G^Z_(q,p)(x, t) dq dp`
//!
//! discretised as a midpoint sum over a lattice of spacing `c √ħ` in phase
//! space, cut off by a smooth radial bump `χ`.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::grid::{Grid, GridFunction};
use crate::model::{Hamiltonian, PhasePoint};
use crate::packet::{coherent_state, AnisotropicPacket};

pub const DEFAULT_NODE_CAP: usize = 10_000_000;
pub const DEFAULT_SPACING_FACTOR: f64 = 0.5;

/// Estimated amplitude allowed to escape the output grid in [`Propagator::apply`].
pub const ESCAPE_THRESHOLD: f64 = 1e-6;

/// `exp(-1/s)` glue, zero for `s <= 0`.
fn glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth radial cut-off: 1 inside `radius - width`, 0 outside `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub radius: f64,
    pub width: f64,
}

impl Cutoff {
    pub fn new(radius: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width < radius && radius.is_finite()) {
            return Err(Error::invalid(format!(
                "cut-off needs 0 < width < radius (got width {width}, radius {radius})"
            )));
        }
        Ok(Self { radius, width })
    }

    pub fn at_radius(&self, r: f64) -> f64 {
        if r <= self.radius - self.width {
            1.0
        } else if r >= self.radius {
            0.0
        } else {
            let s = (self.radius - r) / self.width;
            let a = glue(s);
            a / (a + glue(1.0 - s))
        }
    }

    pub fn value(&self, x: &PhasePoint) -> f64 {
        self.at_radius(x.radius())
    }
}

pub fn cutoff(x: &PhasePoint, radius: f64, width: f64) -> Result<f64> {
    Ok(Cutoff::new(radius, width)?.value(x))
}

/// Lattice nodes inside the cut-off support with their weights
/// `(2πħ)^{-d} h^{2d} χ(node)`.
#[derive(Debug, Clone)]
pub struct PhaseSpaceQuadrature {
    pub dim: usize,
    pub hbar: f64,
    pub spacing: f64,
    pub cutoff: Cutoff,
    /// Lattice points per phase-space axis.
    pub points_per_axis: usize,
    pub nodes: Vec<PhasePoint>,
    pub weights: Vec<f64>,
}

impl PhaseSpaceQuadrature {
    /// Size of the full `2d`-dimensional lattice, including nodes outside the support.
    pub fn lattice_size(&self) -> usize {
        self.points_per_axis.pow(2 * self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Builds the lattice `h Z^{2d}` with `h = min(c √ħ, ρ/4)` restricted to the
/// support of the cut-off.
pub fn build_quadrature(
    dim: usize,
    radius: f64,
    width: f64,
    hbar: f64,
    spacing_factor: f64,
    node_cap: usize,
) -> Result<PhaseSpaceQuadrature> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::invalid("hbar must be finite and positive"));
    }
    if !(spacing_factor > 0.0 && spacing_factor.is_finite()) {
        return Err(Error::invalid("spacing factor must be positive"));
    }
    let cut = Cutoff::new(radius, width)?;
    let spacing = (spacing_factor * hbar.sqrt()).min(radius / 4.0);
    let half = (radius / spacing - 1e-9).ceil() as i64;
    let per_axis = (2 * half + 1) as usize;
    let lattice = (per_axis as f64).powi(2 * dim as i32);
    if lattice > node_cap as f64 {
        return Err(Error::BudgetExceeded {
            nodes: lattice.min(usize::MAX as f64) as usize,
            cap: node_cap,
        });
    }

    let base = spacing.powi(2 * dim as i32) / (2.0 * std::f64::consts::PI * hbar).powi(dim as i32);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![-half; 2 * dim];
    loop {
        let z: Vec<f64> = idx.iter().map(|&k| k as f64 * spacing).collect();
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let chi = cut.at_radius(r);
        if chi > 0.0 {
            nodes.push(PhasePoint::from_slices(&z[..dim], &z[dim..])?);
            weights.push(base * chi);
        }
        // odometer over the lattice, last axis fastest
        let mut axis = 2 * dim;
        loop {
            if axis == 0 {
                return Ok(PhaseSpaceQuadrature {
                    dim,
                    hbar,
                    spacing,
                    cutoff: cut,
                    points_per_axis: per_axis,
                    nodes,
                    weights,
                });
            }
            axis -= 1;
            if idx[axis] < half {
                idx[axis] += 1;
                break;
            }
            idx[axis] = -half;
        }
    }
}

/// Sum in a fixed pairwise association order.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// `U^Z_χ(t0, t)` for one model, quadrature and time pair. Node trajectories
/// are integrated on first use and cached.
pub struct Propagator<'m> {
    model: &'m dyn Hamiltonian,
    quadrature: PhaseSpaceQuadrature,
    t0: f64,
    t: f64,
    flow: FlowOptions,
    packets: Vec<OnceLock<Result<AnisotropicPacket>>>,
}

impl<'m> Propagator<'m> {
    pub fn new(
        model: &'m dyn Hamiltonian,
        quadrature: PhaseSpaceQuadrature,
        t0: f64,
        t: f64,
        flow: FlowOptions,
    ) -> Result<Self> {
        if quadrature.dim != model.dim() {
            return Err(Error::invalid("quadrature and model dimensions differ"));
        }
        if !(t >= t0) {
            return Err(Error::invalid("propagation time precedes the initial time"));
        }
        let packets = (0..quadrature.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            model,
            quadrature,
            t0,
            t,
            flow,
            packets,
        })
    }

    pub fn quadrature(&self) -> &PhaseSpaceQuadrature {
        &self.quadrature
    }

    /// Number of nodes whose trajectory has been integrated so far.
    pub fn cached(&self) -> usize {
        self.packets.iter().filter(|p| p.get().is_some()).count()
    }

    /// Propagated packet `G^Z` of node `i`.
    pub fn packet(&self, i: usize) -> Result<&AnisotropicPacket> {
        let entry = self.packets[i].get_or_init(|| {
            let x0 = &self.quadrature.nodes[i];
            let hbar = self.quadrature.hbar;
            if self.t == self.t0 {
                return AnisotropicPacket::coherent(x0, hbar);
            }
            let state = flow::propagate_point(self.model, x0, self.t0, self.t, &self.flow)?;
            AnisotropicPacket::from_state(x0, &state, hbar)
        });
        entry.as_ref().map_err(|e| Error::Node {
            node: i,
            source: Box::new(e.clone()),
        })
    }

    /// Integrates every node trajectory up front, in parallel.
    pub fn prepare(&self) -> Result<()> {
        (0..self.quadrature.len())
            .into_par_iter()
            .try_for_each(|i| self.packet(i).map(|_| ()))
    }

    /// Kernel `K_χ(x, y)`. Nodes whose coherent state is negligible at `y`
    /// are skipped.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<Complex64> {
        let q = &self.quadrature;
        let hbar = q.hbar;
        let skip_r2 = 2.0 * hbar * 40.0;
        let terms: Vec<Complex64> = (0..q.len())
            .into_par_iter()
            .map(|i| {
                let node = &q.nodes[i];
                let r2: f64 = node
                    .q
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if r2 > skip_r2 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let g = coherent_state(y, node.q.as_slice(), node.p.as_slice(), hbar);
                Ok(q.weights[i] * g.conj() * self.packet(i)?.eval(x))
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    }

    /// `U^Z_χ ψ0` sampled on `out`.
    pub fn apply(&self, psi0: &GridFunction, out: &Grid) -> Result<GridFunction> {
        let q = &self.quadrature;
        let hbar = q.hbar;
        let norm = psi0.norm();
        if (norm - 1.0).abs() > 1e-6 {
            log::warn!("initial state has grid norm {norm}, expected 1");
        }

        let coeffs: Vec<Complex64> = (0..q.len())
            .into_par_iter()
            .map(|i| {
                let node = &q.nodes[i];
                let frame = GridFunction::from_fn(psi0.grid.clone(), |x| {
                    coherent_state(x, node.q.as_slice(), node.p.as_slice(), hbar)
                });
                Ok(q.weights[i] * frame.overlap(psi0)?)
            })
            .collect::<Result<_>>()?;

        let total: f64 = coeffs.iter().map(|c| c.norm()).sum();
        let active: Vec<usize> = (0..q.len())
            .filter(|&i| coeffs[i].norm() > 1e-16 * total)
            .collect();
        active
            .par_iter()
            .try_for_each(|&i| self.packet(i).map(|_| ()))?;

        let escaped: f64 = active
            .iter()
            .map(|&i| coeffs[i].norm() * self.packet(i).unwrap().outside_mass(out).sqrt())
            .sum();
        if escaped > ESCAPE_THRESHOLD {
            return Err(Error::DomainCoverage {
                outside: escaped,
                threshold: ESCAPE_THRESHOLD,
            });
        }

        let packets: Vec<&AnisotropicPacket> =
            active.iter().map(|&i| self.packet(i).unwrap()).collect();
        let weights: Vec<Complex64> = active.iter().map(|&i| coeffs[i]).collect();
        Ok(GridFunction::from_fn(out.clone(), |x| {
            let terms: Vec<Complex64> = packets
                .iter()
                .zip(&weights)
                .map(|(p, c)| c * p.eval(x))
                .collect();
            pairwise_sum(&terms)
        }))
    }
}

/// One-shot `K_χ(x, y)` for a list of point pairs.
pub fn kernel_quadrature(
    model: &dyn Hamiltonian,
    pairs: &[(Vec<f64>, Vec<f64>)],
    t0: f64,
    t: f64,
    quadrature: PhaseSpaceQuadrature,
    flow: FlowOptions,
) -> Result<Vec<Complex64>> {
    let prop = Propagator::new(model, quadrature, t0, t, flow)?;
    pairs.iter().map(|(x, y)| prop.kernel(x, y)).collect()
}

/// One-shot `U^Z_χ(t0, t) ψ0` on `out`.
pub fn propagate_state(
    model: &dyn Hamiltonian,
    psi0: &GridFunction,
    t0: f64,
    t: f64,
    quadrature: PhaseSpaceQuadrature,
    flow: FlowOptions,
    out: &Grid,
) -> Result<GridFunction> {
    Propagator::new(model, quadrature, t0, t, flow)?.apply(psi0, out)
}
