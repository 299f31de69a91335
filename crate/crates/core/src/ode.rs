//! Adaptive Dormand–Prince 5(4) integrator with 4th-order dense output.
//!
//! States are real vectors; complex systems pack `(re, im)` pairs. The
//! stepper exposes single accepted steps so callers can inspect or modify
//! the state between steps (chart switches, kicks) and restart cleanly.

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        OdeOptions {
            rtol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Scaled error estimate of the last accepted step.
    pub final_error: f64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.final_error = other.final_error;
    }
}

/// Single-step Dormand–Prince driver.
pub struct Dopri5<F> {
    rhs: F,
    opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    // dense output of the last accepted step
    t_old: f64,
    h_old: f64,
    cont: [Vec<f64>; 5],
    stats: IntegratorStats,
    scratch: Scratch,
}

struct Scratch {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    k7: Vec<f64>,
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            k5: vec![0.0; n],
            k6: vec![0.0; n],
            k7: vec![0.0; n],
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
        }
    }
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, t0: f64, y0: Vec<f64>, opts: OdeOptions) -> Self {
        let n = y0.len();
        let mut s = Dopri5 {
            rhs,
            opts,
            t: t0,
            y: y0,
            k1: vec![0.0; n],
            h: 0.0,
            t_old: t0,
            h_old: 0.0,
            cont: Default::default(),
            stats: IntegratorStats::default(),
            scratch: Scratch::new(n),
        };
        for c in s.cont.iter_mut() {
            *c = vec![0.0; n];
        }
        s.restart(t0, None);
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    /// Replace the state (e.g. after a chart switch) and reset the FSAL
    /// stage and step-size guess.
    pub fn restart(&mut self, t: f64, y: Option<Vec<f64>>) {
        if let Some(y) = y {
            self.y = y;
        }
        self.t = t;
        self.t_old = t;
        self.h_old = 0.0;
        (self.rhs)(self.t, &self.y, &mut self.k1);
        self.stats.rhs_evals += 1;
        self.h = 0.0;
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self, direction: f64) -> f64 {
        let n = self.y.len();
        if n == 0 {
            return 1e-3;
        }
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.k1[i] / sk).powi(2);
        }
        d0 = (d0 / n as f64).sqrt();
        d1 = (d1 / n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(self.opts.max_step);
        let y1: Vec<f64> = (0..n)
            .map(|i| self.y[i] + direction * h0 * self.k1[i])
            .collect();
        let mut f1 = vec![0.0; n];
        (self.rhs)(self.t + direction * h0, &y1, &mut f1);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            d2 += ((f1[i] - self.k1[i]) / sk).powi(2);
        }
        d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.max_step)
    }

    /// Take one accepted step towards `t_limit` without passing it.
    /// Returns the new time.
    pub fn step(&mut self, t_limit: f64) -> Result<f64> {
        let direction = if t_limit >= self.t { 1.0 } else { -1.0 };
        if self.h == 0.0 {
            self.h = self.initial_step(direction);
        }
        let n = self.y.len();
        loop {
            if self.stats.steps + self.stats.rejected >= self.opts.max_steps {
                return Err(CohError::IntegratorFailure(format!(
                    "exceeded {} steps at t = {}",
                    self.opts.max_steps, self.t
                )));
            }
            let mut h = self.h.min(self.opts.max_step);
            let remaining = (t_limit - self.t).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let min_h = 1e-14 * self.t.abs().max(1.0);
            if h < min_h && !last {
                return Err(CohError::Stiffness {
                    t: self.t,
                    step: h,
                    remedy: "loosen rtol/atol or shorten the time span; the system may be stiff or singular here".into(),
                });
            }
            let hs = direction * h;
            let t = self.t;
            let s = &mut self.scratch;
            let y = &self.y;
            let k1 = &self.k1;

            for i in 0..n {
                s.ytmp[i] = y[i] + hs * A21 * k1[i];
            }
            (self.rhs)(t + C2 * hs, &s.ytmp, &mut s.k2);
            for i in 0..n {
                s.ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * s.k2[i]);
            }
            (self.rhs)(t + C3 * hs, &s.ytmp, &mut s.k3);
            for i in 0..n {
                s.ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * s.k2[i] + A43 * s.k3[i]);
            }
            (self.rhs)(t + C4 * hs, &s.ytmp, &mut s.k4);
            for i in 0..n {
                s.ytmp[i] = y[i]
                    + hs * (A51 * k1[i] + A52 * s.k2[i] + A53 * s.k3[i] + A54 * s.k4[i]);
            }
            (self.rhs)(t + C5 * hs, &s.ytmp, &mut s.k5);
            for i in 0..n {
                s.ytmp[i] = y[i]
                    + hs * (A61 * k1[i]
                        + A62 * s.k2[i]
                        + A63 * s.k3[i]
                        + A64 * s.k4[i]
                        + A65 * s.k5[i]);
            }
            (self.rhs)(t + hs, &s.ytmp, &mut s.k6);
            for i in 0..n {
                s.ynew[i] = y[i]
                    + hs * (A71 * k1[i]
                        + A73 * s.k3[i]
                        + A74 * s.k4[i]
                        + A75 * s.k5[i]
                        + A76 * s.k6[i]);
            }
            (self.rhs)(t + hs, &s.ynew, &mut s.k7);
            self.stats.rhs_evals += 6;

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k1[i]
                        + E3 * s.k3[i]
                        + E4 * s.k4[i]
                        + E5 * s.k5[i]
                        + E6 * s.k6[i]
                        + E7 * s.k7[i]);
                let sk = self.opts.atol + self.opts.rtol * y[i].abs().max(s.ynew[i].abs());
                err += (e / sk).powi(2);
            }
            let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * 0.2;
                continue;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                // dense output coefficients
                for i in 0..n {
                    let ydiff = s.ynew[i] - y[i];
                    let bspl = hs * k1[i] - ydiff;
                    self.cont[0][i] = y[i];
                    self.cont[1][i] = ydiff;
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = ydiff - hs * s.k7[i] - bspl;
                    self.cont[4][i] = hs
                        * (D1 * k1[i]
                            + D3 * s.k3[i]
                            + D4 * s.k4[i]
                            + D5 * s.k5[i]
                            + D6 * s.k6[i]
                            + D7 * s.k7[i]);
                }
                self.t_old = self.t;
                self.h_old = hs;
                self.t = if last { t_limit } else { t + hs };
                std::mem::swap(&mut self.y, &mut s.ynew);
                std::mem::swap(&mut self.k1, &mut s.k7);
                self.stats.steps += 1;
                self.stats.final_error = err;
                if !last {
                    self.h = h * fac;
                }
                return Ok(self.t);
            }
            self.stats.rejected += 1;
            self.h = h * fac.min(1.0);
        }
    }

    /// Dense output inside the last accepted step.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        if self.h_old == 0.0 {
            return self.y.clone();
        }
        let theta = (t - self.t_old) / self.h_old;
        let theta1 = 1.0 - theta;
        (0..self.y.len())
            .map(|i| {
                self.cont[0][i]
                    + theta
                        * (self.cont[1][i]
                            + theta1
                                * (self.cont[2][i]
                                    + theta * (self.cont[3][i] + theta1 * self.cont[4][i])))
            })
            .collect()
    }

    /// Start time of the last accepted step.
    pub fn t_old(&self) -> f64 {
        self.t_old
    }
}

/// Samples of a trajectory at requested output times.
#[derive(Debug, Clone)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
}

/// Integrate from `t0` to the last entry of `sample_times` (which must be
/// monotone in the direction of integration and start at or after `t0`),
/// returning the state at every sample time via dense output.
pub fn integrate<F>(
    rhs: F,
    t0: f64,
    y0: Vec<f64>,
    sample_times: &[f64],
    opts: OdeOptions,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_with_hook(rhs, t0, y0, sample_times, opts, |_, _| false)
}

/// As [`integrate`], but calls `hook(t, y)` after each accepted step. If the
/// hook modifies `y` it must return `true`; the integrator then restarts from
/// the modified state.
pub fn integrate_with_hook<F, H>(
    rhs: F,
    t0: f64,
    y0: Vec<f64>,
    sample_times: &[f64],
    opts: OdeOptions,
    mut hook: H,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    H: FnMut(f64, &mut Vec<f64>) -> bool,
{
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let Some(&t_end) = sample_times.last() else {
        return Ok(Solution {
            times,
            states,
            stats: IntegratorStats::default(),
        });
    };
    let direction = if t_end >= t0 { 1.0 } else { -1.0 };
    for w in sample_times.windows(2) {
        if (w[1] - w[0]) * direction < 0.0 {
            return Err(CohError::Domain(
                "sample times must be monotone".to_string(),
            ));
        }
    }
    if (sample_times[0] - t0) * direction < 0.0 {
        return Err(CohError::Domain(
            "sample times must not precede the initial time".to_string(),
        ));
    }
    let mut stepper = Dopri5::new(rhs, t0, y0, opts);
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] == t0 {
        times.push(t0);
        states.push(stepper.y().to_vec());
        next += 1;
    }
    while next < sample_times.len() {
        let t_new = stepper.step(t_end)?;
        while next < sample_times.len() && (sample_times[next] - t_new) * direction <= 0.0 {
            let ts = sample_times[next];
            let y = if ts == t_new {
                stepper.y().to_vec()
            } else {
                stepper.interpolate(ts)
            };
            times.push(ts);
            states.push(y);
            next += 1;
        }
        let mut y = stepper.y().to_vec();
        if hook(t_new, &mut y) {
            stepper.restart(t_new, Some(y));
        }
    }
    Ok(Solution {
        times,
        states,
        stats: stepper.stats(),
    })
}

/// Evenly spaced sample grid including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            vec![1.0],
            &linspace(0.0, 5.0, 11),
            OdeOptions::with_rtol(1e-10),
        )
        .unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        // dense output between steps must stay accurate
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            vec![1.0, 0.0],
            &linspace(0.0, 20.0, 997),
            OdeOptions::with_rtol(1e-10),
        )
        .unwrap();
        let worst = sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(t, y)| (y[0] - t.cos()).abs().max((y[1] + t.sin()).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst {worst}");
        assert!(sol.stats.steps < 997);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(
            |_, y, dy| dy[0] = y[0],
            1.0,
            vec![1.0],
            &[0.0],
            OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.states[0][0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn hook_restarts() {
        // reset y to 1 whenever it drops below 0.5
        let mut resets = 0;
        let sol = integrate_with_hook(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            vec![1.0],
            &[3.0],
            OdeOptions::default(),
            |_, y| {
                if y[0] < 0.5 {
                    y[0] = 1.0;
                    resets += 1;
                    true
                } else {
                    false
                }
            },
        )
        .unwrap();
        assert!(resets >= 3);
        assert!(sol.states[0][0] > 0.45);
    }

    #[test]
    fn blow_up_reports_stiffness() {
        let res = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            vec![1.0],
            &[2.0],
            OdeOptions::default(),
        );
        assert!(matches!(
            res,
            Err(CohError::Stiffness { .. }) | Err(CohError::IntegratorFailure(_))
        ));
    }
}
