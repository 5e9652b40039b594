//! Dormand–Prince 5(4) integrator with step-size control and cubic Hermite
//! dense output over the accepted steps.
//!
//! Requested output times are hit exactly by shortening the step that would
//! overshoot them; the Hermite interpolant is used for dense scans between
//! knots (caustic localisation).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - b̂ (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: None,
            min_step: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// An accepted step endpoint: state and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub knots: Vec<Knot>,
    /// `(t, y)` for every requested output time, in order.
    pub outputs: Vec<(f64, Vec<f64>)>,
    pub accepted: usize,
    pub rejected: usize,
}

impl OdeSolution {
    /// Cubic Hermite interpolation between the accepted knots.
    pub fn dense(&self, t: f64) -> Vec<f64> {
        hermite(&self.knots, t)
    }
}

pub(crate) fn hermite(knots: &[Knot], t: f64) -> Vec<f64> {
    let last = knots.len() - 1;
    let i = match knots.binary_search_by(|k| k.t.partial_cmp(&t).unwrap()) {
        Ok(i) => return knots[i].y.clone(),
        Err(0) => 0,
        Err(i) if i > last => last - 1,
        Err(i) => i - 1,
    };
    let (k0, k1) = (&knots[i], &knots[i + 1]);
    let h = k1.t - k0.t;
    let s = (t - k0.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..k0.y.len())
        .map(|j| h00 * k0.y[j] + h10 * h * k0.dy[j] + h01 * k1.y[j] + h11 * h * k1.dy[j])
        .collect()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
///
/// `output_times` must be sorted and lie in `[t0, t_end]`. `guard(y_old,
/// y_new)` may veto an otherwise accepted step, which is then retried at half
/// the size.
pub fn integrate<F, G>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    output_times: &[f64],
    opts: &OdeOptions,
    mut guard: G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    G: FnMut(&[f64], &[f64]) -> bool,
{
    if !(t_end >= t0) {
        return Err(Error::invalid("integration end precedes start"));
    }
    if output_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("output times must be sorted"));
    }
    if output_times
        .iter()
        .any(|&t| t < t0 || t > t_end || !t.is_finite())
    {
        return Err(Error::invalid("output times must lie inside the integration interval"));
    }

    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f = vec![0.0; n];
    rhs(t, &y, &mut f)?;

    let mut knots = vec![Knot {
        t,
        y: y.clone(),
        dy: f.clone(),
    }];
    let mut outputs = Vec::with_capacity(output_times.len());
    let mut next_out = 0;
    while next_out < output_times.len() && output_times[next_out] == t0 {
        outputs.push((t0, y.clone()));
        next_out += 1;
    }

    let span = t_end - t0;
    if span == 0.0 {
        return Ok(OdeSolution {
            knots,
            outputs,
            accepted: 0,
            rejected: 0,
        });
    }

    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&mut rhs, t, &y, &f, opts).unwrap_or(1e-3 * span))
        .min(opts.max_step)
        .min(span);

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_rejected = false;

    while t < t_end {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }
        // land exactly on the next output time or the end point
        let target = if next_out < output_times.len() {
            output_times[next_out]
        } else {
            t_end
        };
        let mut h_try = h;
        let mut clipped = false;
        if t + h_try >= target || target - (t + h_try) < 1e-12 * span {
            h_try = target - t;
            clipped = true;
        }
        if h_try < opts.min_step && !clipped {
            return Err(Error::StepSizeUnderflow { t, step: h_try });
        }

        for i in 0..n {
            tmp[i] = y[i] + h_try * A21 * f[i];
        }
        rhs(t + C2 * h_try, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h_try * (A31 * f[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h_try, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h_try * (A41 * f[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h_try, &tmp, &mut k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h_try * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h_try, &tmp, &mut k5)?;
        for i in 0..n {
            tmp[i] = y[i]
                + h_try * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h_try, &tmp, &mut k6)?;
        for i in 0..n {
            y_new[i] = y[i]
                + h_try * (A71 * f[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if clipped { target } else { t + h_try };
        rhs(t_new, &y_new, &mut k7)?;

        let mut err2 = 0.0;
        for i in 0..n {
            let e = h_try
                * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / n as f64).sqrt();
        if !err.is_finite() {
            rejected += 1;
            h = 0.25 * h_try;
            last_rejected = true;
            if h < opts.min_step {
                return Err(Error::StepSizeUnderflow { t, step: h });
            }
            continue;
        }

        if err <= 1.0 && guard(&y, &y_new) {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f, &mut k7);
            accepted += 1;
            knots.push(Knot {
                t,
                y: y.clone(),
                dy: f.clone(),
            });
            while next_out < output_times.len() && output_times[next_out] <= t {
                outputs.push((output_times[next_out], y.clone()));
                next_out += 1;
            }
            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            let proposal = (h_try * fac).min(opts.max_step);
            // a clipped step says nothing about the natural step size
            h = if clipped { proposal.max(h) } else { proposal };
            last_rejected = false;
        } else {
            rejected += 1;
            let fac = if err > 1.0 {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.5
            };
            h = h_try * fac;
            last_rejected = true;
            if h < opts.min_step {
                return Err(Error::StepSizeUnderflow { t, step: h });
            }
        }
    }

    Ok(OdeSolution {
        knots,
        outputs,
        accepted,
        rejected,
    })
}

/// Hairer–Wanner starting step heuristic.
fn initial_step<F>(rhs: &mut F, t: f64, y: &[f64], f: &[f64], opts: &OdeOptions) -> Option<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y.iter().zip(f).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(t + h0, &y1, &mut f1).ok()?;
    let diff: Vec<f64> = f1.iter().zip(f).map(|(a, b)| (a - b) / h0).collect();
    let d2 = norm(&diff);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Some((100.0 * h0).min(h1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_motion_hits_output_times() {
        let outs = [0.0, 0.5, 1.0, 3.0];
        let sol = integrate(
            oscillator,
            0.0,
            &[1.0, 0.0],
            3.0,
            &outs,
            &OdeOptions::default(),
            |_, _| true,
        )
        .unwrap();
        assert_eq!(sol.outputs.len(), 4);
        for (t, y) in &sol.outputs {
            assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn tolerance_controls_error() {
        let err_at = |tol: f64| {
            let opts = OdeOptions {
                rtol: tol,
                atol: tol,
                ..Default::default()
            };
            let sol = integrate(oscillator, 0.0, &[1.0, 0.0], 10.0, &[10.0], &opts, |_, _| true)
                .unwrap();
            (sol.outputs[0].1[0] - 10f64.cos()).abs()
        };
        assert!(err_at(1e-6) > err_at(1e-10));
        assert!(err_at(1e-12) < 1e-10);
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        let sol = integrate(
            oscillator,
            0.0,
            &[1.0, 0.0],
            2.0,
            &[],
            &OdeOptions::default(),
            |_, _| true,
        )
        .unwrap();
        for k in 0..97 {
            let t = 2.0 * k as f64 / 97.0;
            let y = sol.dense(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn guard_veto_shrinks_steps() {
        let loose = integrate(oscillator, 0.0, &[1.0, 0.0], 5.0, &[], &OdeOptions::default(), |_, _| true)
            .unwrap();
        let guarded = integrate(
            oscillator,
            0.0,
            &[1.0, 0.0],
            5.0,
            &[],
            &OdeOptions::default(),
            |a, b| (a[0] - b[0]).abs() < 0.01,
        )
        .unwrap();
        assert!(guarded.accepted > loose.accepted);
        for w in guarded.knots.windows(2) {
            assert!((w[0].y[0] - w[1].y[0]).abs() < 0.01);
        }
    }

    #[test]
    fn stalls_are_reported() {
        let opts = OdeOptions {
            max_steps: 10,
            ..Default::default()
        };
        let err = integrate(oscillator, 0.0, &[1.0, 0.0], 100.0, &[], &opts, |_, _| true)
            .unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. }));
    }
}
