//! Characteristic system: Hamilton's equations, the action, the linear
//! variational system for `(A, B)` and the continuously tracked `log det A`.
//!
//! `Z = B A⁻¹` and `a = exp(-½ log det A)` are formed on demand from a state;
//! the Riccati equation is only integrated as an independent cross-check.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{Hamiltonian, HessianBlocks, PhasePoint};
use crate::ode::{self, Knot, OdeOptions};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// One sample of the characteristic system.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicState {
    pub t: f64,
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    /// Action of the orbit since `t0`.
    pub action: f64,
    /// Position variational matrix.
    pub a: CMatrix,
    /// Momentum variational matrix.
    pub b: CMatrix,
    /// `log det A`, continuous in time from `0` at `t0`.
    pub log_det_a: Complex64,
}

impl CharacteristicState {
    /// `A = I`, `B = iI`, `S = 0` at the seed point.
    pub fn initial(x0: &PhasePoint, t0: f64) -> Self {
        let d = x0.dim();
        Self {
            t: t0,
            q: x0.q.clone(),
            p: x0.p.clone(),
            action: 0.0,
            a: CMatrix::identity(d, d),
            b: CMatrix::identity(d, d) * Complex64::i(),
            log_det_a: Complex64::new(0.0, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn center(&self) -> PhasePoint {
        PhasePoint {
            q: self.q.clone(),
            p: self.p.clone(),
        }
    }

    /// `Z = B A⁻¹` with the default condition cap.
    pub fn anisotropy(&self) -> Result<CMatrix> {
        anisotropy(self, DEFAULT_CONDITION_CAP)
    }

    pub fn amplitude(&self) -> Complex64 {
        amplitude(self)
    }

    pub fn monodromy(&self) -> DMatrix<f64> {
        monodromy(self)
    }

    /// `∂q_t/∂p = Im A`.
    pub fn dq_dp(&self) -> DMatrix<f64> {
        self.a.map(|z| z.im)
    }

    fn state_len(d: usize) -> usize {
        2 * d + 1 + 4 * d * d + 2
    }

    fn pack(&self) -> Vec<f64> {
        let d = self.dim();
        let mut y = Vec::with_capacity(Self::state_len(d));
        y.extend(self.q.iter());
        y.extend(self.p.iter());
        y.push(self.action);
        y.extend(self.a.iter().map(|z| z.re));
        y.extend(self.a.iter().map(|z| z.im));
        y.extend(self.b.iter().map(|z| z.re));
        y.extend(self.b.iter().map(|z| z.im));
        y.push(self.log_det_a.re);
        y.push(self.log_det_a.im);
        y
    }

    fn unpack(d: usize, t: f64, y: &[f64]) -> Self {
        let dd = d * d;
        let s = 2 * d + 1;
        let cm = |re: &[f64], im: &[f64]| {
            CMatrix::from_iterator(d, d, re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)))
        };
        Self {
            t,
            q: DVector::from_column_slice(&y[..d]),
            p: DVector::from_column_slice(&y[d..2 * d]),
            action: y[2 * d],
            a: cm(&y[s..s + dd], &y[s + dd..s + 2 * dd]),
            b: cm(&y[s + 2 * dd..s + 3 * dd], &y[s + 3 * dd..s + 4 * dd]),
            log_det_a: Complex64::new(y[s + 4 * dd], y[s + 4 * dd + 1]),
        }
    }
}

/// Time derivatives of every field of a [`CharacteristicState`].
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicRates {
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
    pub daction: f64,
    pub da: CMatrix,
    pub db: CMatrix,
    pub dlog_det_a: Complex64,
}

pub fn characteristic_rhs(
    model: &dyn Hamiltonian,
    state: &CharacteristicState,
    condition_cap: f64,
) -> Result<CharacteristicRates> {
    let condition = linalg::condition_number(&state.a);
    if !(condition <= condition_cap) {
        return Err(Error::CausticProximity {
            t: state.t,
            condition,
            cap: condition_cap,
        });
    }
    let x = state.center();
    let eval = crate::model::evaluate(model, &x, state.t)?;
    let h = linalg::complex_blocks(&eval.hessian);

    let da = &h.pq * &state.a + &h.pp * &state.b;
    let db = -(&h.qq * &state.a) - &h.qp * &state.b;
    let a_inv = state
        .a
        .clone()
        .try_inverse()
        .ok_or(Error::CausticProximity {
            t: state.t,
            condition: f64::INFINITY,
            cap: condition_cap,
        })?;
    let dlog_det_a = (&da * a_inv).trace();

    let dq = eval.gradient.dp.clone();
    let dp = -eval.gradient.dq;
    let daction = state.p.dot(&dq) - eval.value;
    Ok(CharacteristicRates {
        dq,
        dp,
        daction,
        da,
        db,
        dlog_det_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Relative and absolute tolerance of the embedded pair.
    pub tolerance: f64,
    /// Largest admissible condition number of `A`.
    pub condition_cap: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            condition_cap: DEFAULT_CONDITION_CAP,
            max_steps: 200_000,
        }
    }
}

impl FlowOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Default::default()
        }
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.tolerance,
            atol: self.tolerance,
            max_steps: self.max_steps,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1e-13..=1e-6).contains(&self.tolerance) {
            return Err(Error::invalid(format!(
                "flow tolerance {} outside [1e-13, 1e-6]",
                self.tolerance
            )));
        }
        if !(self.condition_cap > 1.0) {
            return Err(Error::invalid("condition cap must exceed 1"));
        }
        Ok(())
    }
}

/// Characteristic states at the requested output times plus the accepted
/// step knots for dense evaluation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<CharacteristicState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest condition number of `A` over the accepted steps.
    pub max_condition: f64,
    dim: usize,
    knots: Vec<Knot>,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.knots[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.knots.last().unwrap().t
    }

    pub fn final_state(&self) -> CharacteristicState {
        let k = self.knots.last().unwrap();
        CharacteristicState::unpack(self.dim, k.t, &k.y)
    }

    /// Accepted step endpoints as states.
    pub fn step_states(&self) -> impl Iterator<Item = CharacteristicState> + '_ {
        self.knots
            .iter()
            .map(|k| CharacteristicState::unpack(self.dim, k.t, &k.y))
    }

    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(|k| k.t)
    }

    /// Cubic Hermite interpolation of the state between accepted steps.
    pub fn dense_state(&self, t: f64) -> CharacteristicState {
        CharacteristicState::unpack(self.dim, t, &ode::hermite(&self.knots, t))
    }

    /// CSV with one row per output time: `t`, `q_i`, `p_i`, `S`, the real and
    /// imaginary parts of `A` and `B` (row-major), and `log det A`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.dim;
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("q{i}")));
        header.extend((0..d).map(|i| format!("p{i}")));
        header.push("S".into());
        for name in ["A", "B"] {
            for part in ["re", "im"] {
                for i in 0..d {
                    for j in 0..d {
                        header.push(format!("{name}_{part}_{i}{j}"));
                    }
                }
            }
        }
        header.push("logdetA_re".into());
        header.push("logdetA_im".into());
        writeln!(w, "{}", header.join(","))?;

        for s in &self.states {
            let mut row = vec![s.t];
            row.extend(s.q.iter());
            row.extend(s.p.iter());
            row.push(s.action);
            for m in [&s.a, &s.b] {
                for part in [0, 1] {
                    for i in 0..d {
                        for j in 0..d {
                            let z = m[(i, j)];
                            row.push(if part == 0 { z.re } else { z.im });
                        }
                    }
                }
            }
            row.push(s.log_det_a.re);
            row.push(s.log_det_a.im);
            writeln!(w, "{}", crate::format_row(&row))?;
        }
        Ok(())
    }
}

/// Integrates the characteristic system from `x0` at `t0` over `[t0, t0 + span]`.
///
/// Steps are additionally limited so that `arg det A` rotates by less than
/// π/2 per step.
pub fn integrate_characteristics(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    span: f64,
    output_times: &[f64],
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::invalid("integration span must be positive"));
    }
    if x0.dim() != model.dim() {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, model has {}",
            x0.dim(),
            model.dim()
        )));
    }
    integrate_from(model, &CharacteristicState::initial(x0, t0), t0 + span, output_times, opts)
}

/// Continues an already propagated state from `state.t` to `t`.
pub fn advance(
    model: &dyn Hamiltonian,
    state: &CharacteristicState,
    t: f64,
    opts: &FlowOptions,
) -> Result<CharacteristicState> {
    if t == state.t {
        return Ok(state.clone());
    }
    if !(t > state.t && t.is_finite()) {
        return Err(Error::invalid("can only advance forward in time"));
    }
    if state.dim() != model.dim() {
        return Err(Error::invalid("state and model dimensions differ"));
    }
    Ok(integrate_from(model, state, t, &[], opts)?.final_state())
}

fn integrate_from(
    model: &dyn Hamiltonian,
    initial: &CharacteristicState,
    t_end: f64,
    output_times: &[f64],
    opts: &FlowOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let d = initial.dim();
    let t0 = initial.t;
    let y0 = initial.pack();
    let cap = opts.condition_cap;
    let log_im = CharacteristicState::state_len(d) - 1;

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let s = CharacteristicState::unpack(d, t, y);
        let r = characteristic_rhs(model, &s, cap)?;
        let rates = CharacteristicState {
            t,
            q: r.dq,
            p: r.dp,
            action: r.daction,
            a: r.da,
            b: r.db,
            log_det_a: r.dlog_det_a,
        };
        dy.copy_from_slice(&rates.pack());
        Ok(())
    };
    let guard = |old: &[f64], new: &[f64]| (new[log_im] - old[log_im]).abs() < FRAC_PI_2;

    let sol = ode::integrate(rhs, t0, &y0, t_end, output_times, &opts.ode(), guard)?;

    let max_condition = sol
        .knots
        .iter()
        .map(|k| linalg::condition_number(&CharacteristicState::unpack(d, k.t, &k.y).a))
        .fold(1.0, f64::max);
    Ok(Trajectory {
        states: sol
            .outputs
            .iter()
            .map(|(t, y)| CharacteristicState::unpack(d, *t, y))
            .collect(),
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
        max_condition,
        dim: d,
        knots: sol.knots,
    })
}

/// Final state at time `t` of the orbit seeded at `(x0, t0)`. At `t == t0`
/// this is the initial state.
pub fn propagate_point(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    t: f64,
    opts: &FlowOptions,
) -> Result<CharacteristicState> {
    if t == t0 {
        return Ok(CharacteristicState::initial(x0, t0));
    }
    Ok(integrate_characteristics(model, x0, t0, t - t0, &[], opts)?.final_state())
}

/// `Z = B A⁻¹`.
pub fn anisotropy(state: &CharacteristicState, condition_cap: f64) -> Result<CMatrix> {
    let condition = linalg::condition_number(&state.a);
    if !(condition <= condition_cap) {
        return Err(Error::CausticProximity {
            t: state.t,
            condition,
            cap: condition_cap,
        });
    }
    linalg::right_divide(&state.b, &state.a).ok_or(Error::CausticProximity {
        t: state.t,
        condition: f64::INFINITY,
        cap: condition_cap,
    })
}

/// `a = (det A)^{-1/2}` on the branch reached continuously from `a(t0) = 1`.
pub fn amplitude(state: &CharacteristicState) -> Complex64 {
    (-0.5 * state.log_det_a).exp()
}

/// Jacobian of the flow map `∂(q_t, p_t)/∂(q, p)` recovered from the real and
/// imaginary parts of `A` and `B`.
pub fn monodromy(state: &CharacteristicState) -> DMatrix<f64> {
    let d = state.dim();
    let mut s = DMatrix::zeros(2 * d, 2 * d);
    s.view_mut((0, 0), (d, d)).copy_from(&state.a.map(|z| z.re));
    s.view_mut((0, d), (d, d)).copy_from(&state.a.map(|z| z.im));
    s.view_mut((d, 0), (d, d)).copy_from(&state.b.map(|z| z.re));
    s.view_mut((d, d), (d, d)).copy_from(&state.b.map(|z| z.im));
    s
}

/// `dZ/dt = -(Z H_pp Z + Z H_pq + H_qp Z + H_qq)`.
pub fn riccati_rhs(hessian: &HessianBlocks, z: &CMatrix) -> CMatrix {
    let h = linalg::complex_blocks(hessian);
    -(z * &h.pp * z + z * &h.pq + &h.qp * z + &h.qq)
}

/// `(da/dt) / a = -½ tr(H_pp Z + H_pq)`.
pub fn transport_rate(hessian: &HessianBlocks, z: &CMatrix) -> Complex64 {
    let h = linalg::complex_blocks(hessian);
    -0.5 * (&h.pp * z + &h.pq).trace()
}

/// Integrates Hamilton's equations together with the Riccati equation for
/// `Z` from `Z(t0) = iI`. Independent of the variational route; used to
/// cross-check `Z = B A⁻¹`.
pub fn integrate_riccati(
    model: &dyn Hamiltonian,
    x0: &PhasePoint,
    t0: f64,
    output_times: &[f64],
    tolerance: f64,
) -> Result<Vec<(f64, CMatrix)>> {
    let d = x0.dim();
    let dd = d * d;
    let t_end = output_times.last().copied().unwrap_or(t0);
    let mut y0: Vec<f64> = x0.q.iter().chain(x0.p.iter()).copied().collect();
    let z0 = CMatrix::identity(d, d) * Complex64::i();
    y0.extend(z0.iter().map(|z| z.re));
    y0.extend(z0.iter().map(|z| z.im));

    let unpack_z = |y: &[f64]| {
        CMatrix::from_iterator(
            d,
            d,
            y[2 * d..2 * d + dd]
                .iter()
                .zip(&y[2 * d + dd..])
                .map(|(&r, &i)| Complex64::new(r, i)),
        )
    };
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let q = DVector::from_column_slice(&y[..d]);
        let p = DVector::from_column_slice(&y[d..2 * d]);
        let g = model.gradient(&q, &p, t);
        let h = model.hessian(&q, &p, t);
        let dz = riccati_rhs(&h, &unpack_z(y));
        dy[..d].copy_from_slice(g.dp.as_slice());
        for i in 0..d {
            dy[d + i] = -g.dq[i];
        }
        for (k, z) in dz.iter().enumerate() {
            dy[2 * d + k] = z.re;
            dy[2 * d + dd + k] = z.im;
        }
        if dy.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                component: "Riccati right-hand side".into(),
                t,
            });
        }
        Ok(())
    };
    let opts = OdeOptions {
        rtol: tolerance,
        atol: tolerance,
        ..Default::default()
    };
    let sol = ode::integrate(rhs, t0, &y0, t_end, output_times, &opts, |_, _| true)?;
    Ok(sol
        .outputs
        .iter()
        .map(|(t, y)| (*t, unpack_z(y)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FreeParticle, HarmonicOscillator, QuarticAnharmonic};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_particle_rates_read_off_hamiltonian() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let s = CharacteristicState::initial(&PhasePoint::scalar(0.3, 1.5), 0.0);
        let r = characteristic_rhs(&m, &s, 1e8).unwrap();
        assert_eq!(r.dq[0], 1.5);
        assert_eq!(r.dp[0], 0.0);
        assert_eq!(r.da, s.b);
        assert_eq!(r.db[(0, 0)], c(0.0, 0.0));
        assert!((r.daction - 1.125).abs() < 1e-15);
    }

    #[test]
    fn oscillator_rates() {
        let m = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        let mut s = CharacteristicState::initial(&PhasePoint::scalar(0.3, 0.2), 0.0);
        s.a[(0, 0)] = c(0.6, 0.8);
        s.b[(0, 0)] = c(-0.8, 0.6);
        let r = characteristic_rhs(&m, &s, 1e8).unwrap();
        assert_eq!(r.da, s.b);
        assert_eq!(r.db, -s.a.clone());
    }

    #[test]
    fn quartic_momentum_matrix_rate() {
        let m = QuarticAnharmonic::new(1, 1.0, 0.1).unwrap();
        let s = CharacteristicState::initial(&PhasePoint::scalar(1.0, 0.0), 0.0);
        let r = characteristic_rhs(&m, &s, 1e8).unwrap();
        assert!((r.db[(0, 0)] - c(-2.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn caustic_proximity_is_reported() {
        let m = FreeParticle::new(2, 1.0).unwrap();
        let mut s = CharacteristicState::initial(&PhasePoint::from_slices(&[0., 0.], &[0., 0.]).unwrap(), 0.0);
        s.a[(1, 1)] = c(1e-10, 0.0);
        let err = characteristic_rhs(&m, &s, 1e8).unwrap_err();
        assert!(matches!(err, Error::CausticProximity { .. }));
    }

    #[test]
    fn free_particle_closed_form() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let traj = integrate_characteristics(
            &m,
            &PhasePoint::scalar(0.0, 1.0),
            0.0,
            2.0,
            &[0.0, 2.0],
            &FlowOptions::default(),
        )
        .unwrap();
        let init = &traj.states[0];
        assert_eq!(init.a, CMatrix::identity(1, 1));
        assert_eq!(init.action, 0.0);
        let s = &traj.states[1];
        assert!((s.q[0] - 2.0).abs() < 1e-12);
        assert!((s.p[0] - 1.0).abs() < 1e-12);
        assert!((s.action - 1.0).abs() < 1e-12);
        assert!((s.a[(0, 0)] - c(1.0, 2.0)).norm() < 1e-12);
        assert!((s.b[(0, 0)] - c(0.0, 1.0)).norm() < 1e-12);

        let z = s.anisotropy().unwrap()[(0, 0)];
        assert!((z - c(0.4, 0.2)).norm() < 1e-12);

        let a = s.amplitude();
        let expected = c(1.0, 2.0).sqrt().inv();
        assert!((a - expected).norm() < 1e-10);
        assert!(a.re > 0.0);
        assert!((a.norm() - 5f64.powf(-0.25)).abs() < 1e-10);

        let sigma = s.monodromy();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!((sigma - want).norm() < 1e-12);
    }

    #[test]
    fn oscillator_quarter_period_and_branch() {
        let m = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        let outs = [0.0, FRAC_PI_2, PI, 1.7 * PI];
        let traj = integrate_characteristics(
            &m,
            &PhasePoint::scalar(1.0, 0.0),
            0.0,
            1.7 * PI,
            &outs,
            &FlowOptions::default(),
        )
        .unwrap();
        let q = &traj.states[1];
        assert!(q.q[0].abs() < 1e-9);
        assert!((q.p[0] + 1.0).abs() < 1e-9);
        assert!((q.a[(0, 0)] - c(0.0, 1.0)).norm() < 1e-9);
        assert!((q.b[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-9);

        for s in &traj.states {
            let z = s.anisotropy().unwrap()[(0, 0)];
            assert!((z - c(0.0, 1.0)).norm() < 1e-9, "t={}", s.t);
            let sigma = s.monodromy();
            let (st, ct) = s.t.sin_cos();
            let want = DMatrix::from_row_slice(2, 2, &[ct, st, -st, ct]);
            assert!((sigma - want).norm() < 1e-9);
        }

        // a(π) = e^{-iπ/2}, not the principal root of 1/det A = -1 ...
        let a = traj.states[2].amplitude();
        assert!((a - c(0.0, -1.0)).norm() < 1e-9, "{a}");
        // ... and past π the phase keeps winding
        let a = traj.states[3].amplitude();
        let want = Complex64::from_polar(1.0, -0.85 * PI);
        assert!((a - want).norm() < 1e-9);
    }

    #[test]
    fn log_det_matches_determinant() {
        let m = QuarticAnharmonic::new(2, 1.0, 0.1).unwrap();
        let x0 = PhasePoint::from_slices(&[1.0, -0.5], &[0.3, 0.8]).unwrap();
        let outs: Vec<f64> = (0..=10).map(|k| 0.4 * k as f64).collect();
        let traj = integrate_characteristics(&m, &x0, 0.0, 4.0, &outs, &FlowOptions::default())
            .unwrap();
        for s in &traj.states {
            let det = s.a.determinant();
            let rel = (s.log_det_a.exp() - det).norm() / det.norm();
            assert!(rel < 1e-8, "t={} rel={rel}", s.t);
            let a = s.amplitude();
            assert!((a * a * det - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn riccati_route_matches_variational_route() {
        let m = QuarticAnharmonic::new(1, 1.0, 0.1).unwrap();
        let x0 = PhasePoint::scalar(1.0, 0.5);
        let outs: Vec<f64> = (0..=8).map(|k| 0.125 * k as f64).collect();
        let traj = integrate_characteristics(&m, &x0, 0.0, 1.0, &outs, &FlowOptions::default())
            .unwrap();
        let ric = integrate_riccati(&m, &x0, 0.0, &outs, 1e-11).unwrap();
        for (s, (_, z)) in traj.states.iter().zip(&ric) {
            assert!((s.anisotropy().unwrap() - z).norm() < 1e-8);
        }
    }

    #[test]
    fn tolerance_range_enforced() {
        let m = FreeParticle::new(1, 1.0).unwrap();
        let x0 = PhasePoint::scalar(0.0, 1.0);
        let err = integrate_characteristics(&m, &x0, 0.0, 1.0, &[], &FlowOptions::with_tolerance(1e-3));
        assert!(err.is_err());
        assert!(integrate_characteristics(&m, &x0, 0.0, -1.0, &[], &FlowOptions::default()).is_err());
    }

    #[test]
    fn dense_state_interpolates() {
        let m = HarmonicOscillator::isotropic(1, 1.0).unwrap();
        let traj = integrate_characteristics(&m, &PhasePoint::scalar(1.0, 0.0), 0.0, 3.0, &[], &FlowOptions::default()).unwrap();
        let s = traj.dense_state(1.234);
        assert!((s.q[0] - 1.234f64.cos()).abs() < 1e-8);
        assert!((s.a[(0, 0)] - Complex64::from_polar(1.0, 1.234)).norm() < 1e-8);
    }

    #[test]
    fn csv_export_has_one_row_per_output() {
        let m = FreeParticle::new(2, 1.0).unwrap();
        let x0 = PhasePoint::from_slices(&[0., 0.], &[1., 0.]).unwrap();
        let traj = integrate_characteristics(&m, &x0, 0.0, 1.0, &[0.0, 0.5, 1.0], &FlowOptions::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let cols = lines[0].split(',').count();
        assert_eq!(cols, 1 + 2 + 2 + 1 + 16 + 2);
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
    }
}
