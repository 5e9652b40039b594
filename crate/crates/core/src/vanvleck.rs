//! Classical boundary-value shooting and the Van Vleck kernel
//!
//! `K(x, y) = (2πiħ)^{-d/2} Σ_r |det ∂q_t/∂p|^{-1/2} exp(i S_r/ħ − iπ m_r/2)`
//!
//! over the orbits leaving `y` at `t0` and arriving at `x` at `t`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, CharacteristicState, FlowOptions};
use crate::model::{Hamiltonian, PhasePoint};
use crate::propagator::Cutoff;

pub const DEFAULT_SHOOTING_TOLERANCE: f64 = 1e-10;

/// Relative size of the smallest singular value of `∂q_t/∂p` at which a
/// converged root is declared a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e-8;

/// Refined minima of `σ_min(∂q_τ/∂p)` below this (relative) count as crossings.
pub const CROSSING_THRESHOLD: f64 = 1e-6;

/// Singular values below this (relative) at a crossing count towards its multiplicity.
pub const MULTIPLICITY_THRESHOLD: f64 = 1e-4;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaslovMethod {
    /// Zeros of `det ∂q_τ/∂p` on `(t0, t]`, counted with multiplicity.
    #[default]
    CrossingCount,
    /// `Σ Arg(λ)/π` over the spectrum of `(∂q_t/∂q + i ∂q_t/∂p)^{-1} (∂q_t/∂p)^{-1}`, rounded.
    ArgumentSum,
}

#[derive(Debug, Clone)]
pub struct BranchSearch {
    /// Per-axis `(lo, hi)` bounds for the initial momentum.
    pub search_box: Vec<(f64, f64)>,
    pub n_starts: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub flow: FlowOptions,
    pub maslov: MaslovMethod,
    /// Phase-space cut-off evaluated at `(y, p_r)`; `None` reports 1.
    pub cutoff: Option<Cutoff>,
}

impl BranchSearch {
    pub fn new(search_box: Vec<(f64, f64)>) -> Self {
        Self {
            search_box,
            n_starts: 32,
            tol: DEFAULT_SHOOTING_TOLERANCE,
            max_iterations: 60,
            seed: 0,
            flow: FlowOptions::default(),
            maslov: MaslovMethod::default(),
            cutoff: None,
        }
    }

    /// Symmetric box `[-half, half]^d`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Self::new(vec![(-half, half); dim])
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.search_box.len() != dim {
            return Err(Error::invalid("search box rank differs from the model dimension"));
        }
        if self.search_box.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo)) {
            return Err(Error::invalid("search box must be bounded and non-empty"));
        }
        if self.n_starts == 0 {
            return Err(Error::invalid("at least one start is required"));
        }
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(Error::invalid("shooting tolerance must lie in (0, 1e-2)"));
        }
        Ok(())
    }

    fn contains(&self, p: &DVector<f64>) -> bool {
        p.iter().zip(&self.search_box).all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    fn diameter(&self) -> f64 {
        self.search_box
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Halton points with a seeded Cranley–Patterson shift.
    pub fn seeds(&self) -> Vec<DVector<f64>> {
        let d = self.search_box.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        (0..self.n_starts)
            .map(|k| {
                DVector::from_fn(d, |j, _| {
                    let base = PRIMES[j % PRIMES.len()];
                    let u = (radical_inverse(k as u64 + 1, base) + shift[j]).fract();
                    let (lo, hi) = self.search_box[j];
                    lo + u * (hi - lo)
                })
            })
            .collect()
    }
}

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % b) as f64 * inv;
        k /= b;
        inv /= base as f64;
    }
    out
}

/// One orbit joining `y` at `t0` to `x` at `t`.
#[derive(Debug, Clone)]
pub struct VanVleckBranch {
    pub momentum: DVector<f64>,
    pub action: f64,
    /// `|det ∂q_t/∂p|^{-1}`.
    pub amp_det: f64,
    pub maslov: i32,
    pub final_state: CharacteristicState,
    pub cutoff_value: f64,
    /// `|q_t − x|` at the accepted root.
    pub residual: f64,
    pub iterations: usize,
}

impl VanVleckBranch {
    pub fn in_plateau(&self) -> bool {
        self.cutoff_value >= 1.0
    }

    pub fn final_momentum(&self) -> &DVector<f64> {
        &self.final_state.p
    }
}

enum Shot {
    Root {
        p: DVector<f64>,
        state: CharacteristicState,
        residual: f64,
        iterations: usize,
    },
    Caustic {
        p: DVector<f64>,
        singular_value: f64,
    },
    Failed,
}

fn shoot_state(
    model: &dyn Hamiltonian,
    y: &DVector<f64>,
    p: &DVector<f64>,
    t0: f64,
    t: f64,
    opts: &FlowOptions,
) -> Result<CharacteristicState> {
    let x0 = PhasePoint::new(y.clone(), p.clone())?;
    flow::propagate_point(model, &x0, t0, t, opts)
}

/// Smallest singular value of `∂q_t/∂p` relative to the largest of `A`.
fn relative_sigma_min(state: &CharacteristicState) -> f64 {
    let scale = state.a.clone().singular_values().max();
    state.dq_dp().singular_values().min() / scale
}

fn newton_step(jac: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    if let Some(step) = jac.clone().lu().solve(&(-f)) {
        if step.iter().all(|v| v.is_finite()) {
            return step;
        }
    }
    let svd = jac.clone().svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    svd.solve(&(-f), cutoff).unwrap_or_else(|_| DVector::zeros(f.len()))
}

#[allow(clippy::too_many_arguments)]
fn shoot(
    model: &dyn Hamiltonian,
    y: &DVector<f64>,
    x: &DVector<f64>,
    t0: f64,
    t: f64,
    start: DVector<f64>,
    search: &BranchSearch,
) -> Shot {
    let target = search.tol * (1.0 + x.norm());
    let escape = 10.0 * search.diameter() + 10.0;
    let eval = |p: &DVector<f64>| -> Option<(CharacteristicState, DVector<f64>)> {
        let s = shoot_state(model, y, p, t0, t, &search.flow).ok()?;
        let f = &s.q - x;
        f.iter().all(|v| v.is_finite()).then_some((s, f))
    };
    let mut p = start;
    let Some((mut state, mut f)) = eval(&p) else {
        return Shot::Failed;
    };
    for it in 0..search.max_iterations {
        let fnorm = f.norm();
        if fnorm <= target {
            // a couple of polishing steps, kept only while they help
            let mut iterations = it;
            for _ in 0..2 {
                let trial = &p + newton_step(&state.dq_dp(), &f);
                match eval(&trial) {
                    Some((s, g)) if g.norm() < f.norm() => {
                        p = trial;
                        state = s;
                        f = g;
                        iterations += 1;
                    }
                    _ => break,
                }
            }
            return Shot::Root {
                residual: f.norm(),
                p,
                state,
                iterations,
            };
        }
        let dir = newton_step(&state.dq_dp(), &f);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = &p + alpha * &dir;
            if trial.norm() > escape {
                alpha *= 0.5;
                continue;
            }
            if let Some((s, g)) = eval(&trial) {
                if g.norm_squared() <= (1.0 - 1e-4 * alpha) * fnorm * fnorm {
                    accepted = Some((trial, s, g));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((np, s, g)) => {
                p = np;
                state = s;
                f = g;
            }
            None => {
                // stalled: a small residual at a singular Jacobian is a caustic root
                let sv = relative_sigma_min(&state);
                if fnorm <= 1e3 * target && sv <= CROSSING_THRESHOLD {
                    return Shot::Caustic { p, singular_value: sv };
                }
                return Shot::Failed;
            }
        }
    }
    Shot::Failed
}

/// Roots `p` of `q_t(y, p) = x` inside the search box, sorted by `|p|`.
pub fn find_branches(
    model: &dyn Hamiltonian,
    y: &[f64],
    x: &[f64],
    t0: f64,
    t: f64,
    search: &BranchSearch,
) -> Result<Vec<VanVleckBranch>> {
    let d = model.dim();
    if y.len() != d || x.len() != d {
        return Err(Error::invalid("endpoint dimensions differ from the model dimension"));
    }
    if !(t > t0) {
        return Err(Error::invalid("shooting needs t > t0"));
    }
    search.validate(d)?;
    let yv = DVector::from_column_slice(y);
    let xv = DVector::from_column_slice(x);

    let shots: Vec<Shot> = search
        .seeds()
        .into_par_iter()
        .map(|p0| shoot(model, &yv, &xv, t0, t, p0, search))
        .collect();

    let mut roots = Vec::new();
    for shot in shots {
        match shot {
            Shot::Root {
                p,
                state,
                residual,
                iterations,
            } => {
                if !search.contains(&p) {
                    continue;
                }
                let sv = relative_sigma_min(&state);
                if sv <= CAUSTIC_THRESHOLD {
                    return Err(Error::CausticAtRoot {
                        momentum: p.iter().cloned().collect(),
                        singular_value: sv,
                    });
                }
                roots.push((p, state, residual, iterations));
            }
            Shot::Caustic { p, singular_value } if search.contains(&p) => {
                return Err(Error::CausticAtRoot {
                    momentum: p.iter().cloned().collect(),
                    singular_value,
                });
            }
            _ => {}
        }
    }
    if roots.is_empty() {
        return Err(Error::NoBranchFound {
            starts: search.n_starts,
        });
    }

    roots.sort_by(|a, b| {
        a.0.norm().total_cmp(&b.0.norm()).then_with(|| {
            a.0.iter()
                .zip(b.0.iter())
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut kept: Vec<(DVector<f64>, CharacteristicState, f64, usize)> = Vec::new();
    for r in roots {
        if kept.iter().all(|k| (&k.0 - &r.0).norm() >= 10.0 * search.tol) {
            kept.push(r);
        }
    }

    kept.into_par_iter()
        .map(|(p, state, residual, iterations)| {
            let x0 = PhasePoint::new(yv.clone(), p.clone())?;
            let maslov = match search.maslov {
                MaslovMethod::CrossingCount => maslov_index(model, &x0, t0, t, &search.flow)?,
                MaslovMethod::ArgumentSum => argument_sum_index(&state)?,
            };
            let cutoff_value = search.cutoff.map_or(1.0, |c| c.value(&x0));
            Ok(VanVleckBranch {
                amp_det: 1.0 / state.dq_dp().determinant().abs(),
                action: state.action,
                momentum: p,
                maslov,
                final_state: state,
                cutoff_value,
                residual,
                iterations,
            })
        })
        .collect()
}

/// A detected zero of `det ∂q_τ/∂p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub multiplicity: usize,
    /// Relative smallest singular value at the refined minimum.
    pub singular_value: f64,
}

/// Zeros of `det ∂q_τ/∂p` for `τ ∈ (t0, t]` along the orbit from `x0`.
pub fn caustic_crossings(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    t: f64,
    opts: &FlowOptions,
) -> Result<Vec<Crossing>> {
    const SUBDIVISIONS: usize = 8;
    let traj = flow::integrate_characteristics(model, x0, t0, t - t0, &[], opts)?;
    let knots: Vec<CharacteristicState> = traj.step_states().collect();

    // samples: (time, index of the exact knot at or before it, state)
    let mut samples: Vec<(f64, usize, CharacteristicState)> = vec![(t0, 0, knots[0].clone())];
    for k in 1..knots.len() {
        let (a, b) = (knots[k - 1].t, knots[k].t);
        for j in 1..SUBDIVISIONS {
            let tau = a + (b - a) * j as f64 / SUBDIVISIONS as f64;
            samples.push((tau, k - 1, traj.dense_state(tau)));
        }
        samples.push((b, k, knots[k].clone()));
    }
    let g: Vec<f64> = samples.iter().map(|s| relative_sigma_min(&s.2)).collect();

    let mut crossings: Vec<Crossing> = Vec::new();
    for i in 1..samples.len().saturating_sub(1) {
        if !(g[i] < g[i - 1] && g[i] <= g[i + 1]) {
            continue;
        }
        let base = &knots[samples[i - 1].1];
        let (lo, hi) = (samples[i - 1].0, samples[i + 1].0);
        let (tau, state) = golden_minimum(lo, hi, |tau| {
            let s = flow::advance(model, base, tau, opts)?;
            Ok((relative_sigma_min(&s), s))
        })?;
        let sv = relative_sigma_min(&state);
        if sv > CROSSING_THRESHOLD {
            continue;
        }
        if crossings.iter().any(|c| (c.t - tau).abs() < 1e-6) {
            continue;
        }
        let scale = state.a.clone().singular_values().max();
        let multiplicity = state
            .dq_dp()
            .singular_values()
            .iter()
            .filter(|s| **s / scale <= MULTIPLICITY_THRESHOLD)
            .count();
        crossings.push(Crossing {
            t: tau,
            multiplicity,
            singular_value: sv,
        });
    }

    // each crossing flips the sign of det once per unit of multiplicity
    let signs: Vec<(f64, f64)> = samples[1..]
        .iter()
        .map(|s| (s.0, s.2.dq_dp().determinant()))
        .filter(|s| s.1 != 0.0)
        .collect();
    let flips: Vec<f64> = signs
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| 0.5 * (w[0].0 + w[1].0))
        .collect();
    let total: usize = crossings.iter().map(|c| c.multiplicity).sum();
    if flips.len() % 2 != total % 2 {
        let unmatched = flips
            .iter()
            .copied()
            .find(|f| crossings.iter().all(|c| (c.t - f).abs() > 0.5))
            .unwrap_or(t);
        return Err(Error::UnresolvedCrossing { t: unmatched });
    }
    Ok(crossings)
}

fn golden_minimum<F>(mut a: f64, mut b: f64, mut f: F) -> Result<(f64, CharacteristicState)>
where
    F: FnMut(f64) -> Result<(f64, CharacteristicState)>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > 1e-12 * (1.0 + a.abs()) {
        if fc.0 <= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let best = if fc.0 <= fd.0 { (c, fc.1) } else { (d, fd.1) };
    Ok(best)
}

/// Maslov index by crossing count along the orbit from `x0`.
pub fn maslov_index(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    t: f64,
    opts: &FlowOptions,
) -> Result<i32> {
    Ok(caustic_crossings(model, x0, t0, t, opts)?
        .iter()
        .map(|c| c.multiplicity as i32)
        .sum())
}

/// `round(Σ Arg(λ)/π)` for `λ` in the spectrum of `A⁻¹ (Im A)⁻¹`.
pub fn argument_sum_index(state: &CharacteristicState) -> Result<i32> {
    let d = state.dim();
    let im = crate::linalg::to_complex(&state.dq_dp());
    let inv_im = im
        .try_inverse()
        .ok_or_else(|| Error::CausticAtRoot {
            momentum: vec![],
            singular_value: 0.0,
        })?;
    let inv_a = state
        .a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("A is singular"))?;
    let m = inv_a * inv_im;
    let eig: Vec<Complex64> = if d == 1 {
        vec![m[(0, 0)]]
    } else {
        let (_, tri) = m.schur().unpack();
        tri.diagonal().iter().cloned().collect()
    };
    let sum: f64 = eig.iter().map(|l| l.arg()).sum();
    Ok((sum / std::f64::consts::PI).round() as i32)
}

/// `(2πiħ)^{-d/2} Σ_r √amp_det_r exp(i S_r/ħ − iπ m_r/2)`; zero for no branches.
pub fn vanvleck_kernel(dim: usize, hbar: f64, branches: &[VanVleckBranch]) -> Complex64 {
    use std::f64::consts::PI;
    let pre = (2.0 * PI * hbar).powf(-0.5 * dim as f64)
        * Complex64::from_polar(1.0, -PI * dim as f64 / 4.0);
    let sum: Complex64 = branches
        .iter()
        .map(|b| {
            Complex64::from_polar(
                b.amp_det.sqrt(),
                b.action / hbar - PI * b.maslov as f64 / 2.0,
            )
        })
        .sum();
    pre * sum
}

/// Kernel at `(x, y)`, treating an empty search as a zero kernel with a warning.
#[allow(clippy::too_many_arguments)]
pub fn kernel_at(
    model: &dyn Hamiltonian,
    x: &[f64],
    y: &[f64],
    t0: f64,
    t: f64,
    hbar: f64,
    search: &BranchSearch,
) -> Result<(Complex64, Vec<VanVleckBranch>)> {
    match find_branches(model, y, x, t0, t, search) {
        Ok(branches) => Ok((vanvleck_kernel(model.dim(), hbar, &branches), branches)),
        Err(Error::NoBranchFound { starts }) => {
            log::warn!("no connecting orbit from {y:?} to {x:?} found with {starts} starts");
            Ok((Complex64::new(0.0, 0.0), Vec::new()))
        }
        Err(e) => Err(e),
    }
}

/// Branch table: `p_r{i}, S, amp_det, m, cutoff_value, residual, iterations`.
pub fn write_branch_csv<W: Write>(mut w: W, branches: &[VanVleckBranch]) -> std::io::Result<()> {
    let d = branches.first().map_or(0, |b| b.momentum.len());
    let mut header: Vec<String> = (0..d).map(|i| format!("p_r{i}")).collect();
    header.extend(
        ["S", "amp_det", "m", "cutoff_value", "residual", "iterations"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(w, "{}", header.join(","))?;
    for b in branches {
        let mut row: Vec<f64> = b.momentum.iter().cloned().collect();
        row.extend([b.action, b.amp_det]);
        writeln!(
            w,
            "{},{},{},{}",
            crate::format_row(&row),
            b.maslov,
            crate::format_row(&[b.cutoff_value, b.residual]),
            b.iterations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FreeParticle, HarmonicOscillator};
    use std::f64::consts::PI;

    #[test]
    fn free_particle_single_branch() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let b = find_branches(&m, &[0.0], &[2.0], 0.0, 2.0, &BranchSearch::cube(1, 5.0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].momentum[0] - 1.0).abs() < 1e-10);
        assert_eq!(b[0].maslov, 0);
        assert!((b[0].amp_det - 0.5).abs() < 1e-10);
        assert!((b[0].action - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oscillator_quarter_period() {
        let m = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        let b = find_branches(&m, &[1.0], &[0.0], 0.0, PI / 2.0, &BranchSearch::cube(1, 5.0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].momentum[0].abs() < 1e-10);
        assert!((b[0].final_momentum()[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn focal_point_is_a_caustic() {
        let m = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        let r = find_branches(&m, &[0.0], &[0.0], 0.0, PI, &BranchSearch::cube(1, 5.0));
        assert!(matches!(r, Err(Error::CausticAtRoot { .. })), "{r:?}");
    }

    #[test]
    fn empty_box_reports_no_branch() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let search = BranchSearch::new(vec![(3.0, 4.0)]);
        let r = find_branches(&m, &[0.0], &[2.0], 0.0, 2.0, &search);
        assert_eq!(r.unwrap_err(), Error::NoBranchFound { starts: 32 });
        let (k, b) = kernel_at(&m, &[2.0], &[0.0], 0.0, 2.0, 0.1, &search).unwrap();
        assert_eq!(k, Complex64::new(0.0, 0.0));
        assert!(b.is_empty());
    }

    #[test]
    fn maslov_counts() {
        let opts = FlowOptions::default();
        let x0 = PhasePoint::scalar(0.3, 0.7);
        let free = FreeParticle::new(1, 1.0).unwrap();
        assert_eq!(maslov_index(&free, &x0, 0.0, 3.0, &opts).unwrap(), 0);
        let ho = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        assert_eq!(maslov_index(&ho, &x0, 0.0, 2.0, &opts).unwrap(), 0);
        assert_eq!(maslov_index(&ho, &x0, 0.0, 4.0, &opts).unwrap(), 1);
        assert_eq!(maslov_index(&ho, &x0, 0.0, 7.0, &opts).unwrap(), 2);
        let c = caustic_crossings(&ho, &x0, 0.0, 4.0, &opts).unwrap();
        assert!((c[0].t - PI).abs() < 1e-8, "{c:?}");
        let ho2 = HarmonicOscillator::isotropic(2, 1.0).unwrap();
        let x2 = PhasePoint::from_slices(&[0.3, -0.2], &[0.1, 0.5]).unwrap();
        assert_eq!(maslov_index(&ho2, &x2, 0.0, 1.5 * PI, &opts).unwrap(), 2);
    }

    #[test]
    fn argument_sum_is_available() {
        let ho = HarmonicOscillator::isotropic(2, 1.0).unwrap();
        let x2 = PhasePoint::from_slices(&[0.3, -0.2], &[0.1, 0.5]).unwrap();
        let s = flow::propagate_point(&ho, &x2, 0.0, 0.3, &FlowOptions::default()).unwrap();
        // λ = e^{-it}/sin t for each axis
        assert_eq!(argument_sum_index(&s).unwrap(), (-0.6 / PI).round() as i32);
    }

    #[test]
    fn seeds_are_deterministic_and_inside() {
        let s = BranchSearch::new(vec![(-1.0, 2.0), (0.0, 1.0)]);
        let a = s.seeds();
        assert_eq!(a, s.seeds());
        assert!(a.iter().all(|p| s.contains(p)));
        let mut other = s.clone();
        other.seed = 9;
        assert_ne!(a, other.seeds());
    }

    #[test]
    fn branch_csv() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let b = find_branches(&m, &[0.0], &[2.0], 0.0, 2.0, &BranchSearch::cube(1, 5.0)).unwrap();
        let mut buf = Vec::new();
        write_branch_csv(&mut buf, &b).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p_r0,S,amp_det,m,cutoff_value,residual,iterations");
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 7);
    }
}
