//! Largest Lyapunov exponent of TDVP flows by the Benettin method.
//!
//! The tangent flow is co-integrated in real chart coordinates from
//! directional differences of the vector field; stretching is measured in
//! the Kaehler metric, so chart switches do not bias the estimate.

use serde::{Deserialize, Serialize};

use super::energy::{ExpectationFunction, SpinQuadratic};
use super::tdvp::{FlowState, TdvpOptions};
use crate::error::{CohError, Result};
use crate::kernel::{KernelSpace, Point, SpaceDescriptor};
use crate::linalg::{c, C64};
use crate::ode::IntegratorStats;

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    /// Average log-stretch rate over the whole run.
    pub lambda_max: f64,
    /// Average over the last quarter of the renormalization intervals.
    pub lambda_tail: f64,
    /// `(time, running estimate, log stretch of the interval)`.
    pub series: Vec<(f64, f64, f64)>,
    pub chart_switches: usize,
    pub stats: IntegratorStats,
}

/// One autonomous piece of a periodically repeated schedule.
pub struct Segment<'a> {
    pub energy: &'a dyn ExpectationFunction,
    pub duration: f64,
}

fn metric_norm(state: &FlowState, opts: &TdvpOptions, w: &[C64], d: &[C64]) -> Result<f64> {
    let (g, _) = state.chart.metric_and_connection(w, opts.metric_step)?;
    let mut s = C64::new(0.0, 0.0);
    for j in 0..d.len() {
        for k in 0..d.len() {
            s += d[j].conj() * g[(j, k)] * d[k];
        }
    }
    Ok(s.re.max(0.0).sqrt())
}

/// Runs `periods` repetitions of `segments`, renormalizing the tangent
/// vector after each; `period_time` is the physical duration of one period.
pub fn benettin(
    space: &KernelSpace,
    segments: &[Segment],
    z0: &Point,
    periods: usize,
    period_time: f64,
    opts: &TdvpOptions,
) -> Result<LyapunovReport> {
    if periods == 0 || !(period_time > 0.0) {
        return Err(CohError::Domain("need at least one period of positive length".into()));
    }
    if segments.iter().any(|s| !(s.duration >= 0.0)) {
        return Err(CohError::Domain("segment durations must be nonnegative".into()));
    }
    let mut state = FlowState::new(space, z0, 0.0, None)?;
    let m = state.chart.dim();
    let d0: Vec<C64> = (0..m).map(|k| c(1.0, 0.5 + 0.1 * k as f64)).collect();
    state.set_tangent(&d0);
    state.tangent = true;
    {
        let (_, w, d) = state.parts();
        let n = metric_norm(&state, opts, &w, &d)?;
        let unit: Vec<C64> = d.iter().map(|v| v / n).collect();
        state.set_tangent(&unit);
    }
    let mut series = Vec::with_capacity(periods);
    let mut total = 0.0;
    let mut stretches = Vec::with_capacity(periods);
    for p in 0..periods {
        for seg in segments {
            let t1 = state.t + seg.duration;
            state.advance(seg.energy, opts, t1, &[], &mut |_, _, _| {}, &mut |_, _, _| Ok(()))?;
        }
        let (_, w, d) = state.parts();
        let n = metric_norm(&state, opts, &w, &d)?;
        if !(n > 0.0 && n.is_finite()) {
            return Err(CohError::Numerical(format!("tangent norm {n} after period {p}")));
        }
        let unit: Vec<C64> = d.iter().map(|v| v / n).collect();
        state.set_tangent(&unit);
        let ls = n.ln();
        total += ls;
        stretches.push(ls);
        let elapsed = (p + 1) as f64 * period_time;
        series.push((elapsed, total / elapsed, ls));
    }
    let q = (periods / 4).max(1);
    let tail: f64 = stretches[periods - q..].iter().sum::<f64>() / (q as f64 * period_time);
    Ok(LyapunovReport {
        lambda_max: total / (periods as f64 * period_time),
        lambda_tail: tail,
        series,
        chart_switches: state.switches,
        stats: state.stats,
    })
}

/// `lambda_max` of an autonomous TDVP flow over `t_total`, renormalizing
/// every `renorm_dt`.
pub fn lyapunov_max(
    space: &KernelSpace,
    energy: &dyn ExpectationFunction,
    z0: &Point,
    t_total: f64,
    renorm_dt: f64,
    opts: &TdvpOptions,
) -> Result<LyapunovReport> {
    if !(renorm_dt > 0.0 && t_total >= renorm_dt) {
        return Err(CohError::Domain("need 0 < renorm_dt <= t_total".into()));
    }
    let periods = (t_total / renorm_dt).round() as usize;
    benettin(space, &[Segment { energy, duration: renorm_dt }], z0, periods, renorm_dt, opts)
}

/// Kicked top `H = p J_y + (k / 2j) J_z^2 sum_n delta(t - n)`: each period
/// is the free rotation followed by the kick, both as TDVP flows over unit
/// time (the kick energy integrates the delta impulse exactly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickedTop {
    pub two_j: u32,
    pub k: f64,
    pub p: f64,
}

impl KickedTop {
    pub fn space(&self) -> Result<KernelSpace> {
        SpaceDescriptor::Spin { exponent: self.two_j as f64 }.build()
    }

    pub fn energies(&self) -> (SpinQuadratic, SpinQuadratic) {
        let n = self.two_j as f64;
        let free = SpinQuadratic::new(n, [0.0, self.p, 0.0], [[0.0; 3]; 3]);
        let mut q = [[0.0; 3]; 3];
        q[2][2] = self.k / n;
        let kick = SpinQuadratic::new(n, [0.0; 3], q);
        (free, kick)
    }

    pub fn lyapunov(&self, z0: &Point, kicks: usize, opts: &TdvpOptions) -> Result<LyapunovReport> {
        let space = self.space()?;
        let (free, kick) = self.energies();
        let segs = [
            Segment { energy: &free, duration: 1.0 },
            Segment { energy: &kick, duration: 1.0 },
        ];
        benettin(&space, &segs, z0, kicks, 1.0, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::sphere_point;

    #[test]
    fn rotation_has_zero_exponent() {
        let s = SpaceDescriptor::Spin { exponent: 4.0 }.build().unwrap();
        let e = SpinQuadratic::new(4.0, [0.3, 0.0, 1.0], [[0.0; 3]; 3]);
        let r = lyapunov_max(&s, &e, &sphere_point(1.0, 0.5), 50.0, 1.0, &TdvpOptions::with_rtol(1e-9)).unwrap();
        assert!(r.lambda_max.abs() < 1e-6, "{}", r.lambda_max);
    }

    #[test]
    fn kick_is_a_z_torsion() {
        // one kick leaves n_z fixed and twists the azimuth by k (1 - 1/2j) n_z
        let top = KickedTop { two_j: 10, k: 2.0, p: 0.0 };
        let z0 = sphere_point(1.1, 0.3);
        let s = top.space().unwrap();
        let (_, kick) = top.energies();
        let tr = super::super::tdvp::dirac_frenkel_flow(&s, &kick, &z0, 0.0, &[1.0], &TdvpOptions::with_rtol(1e-11)).unwrap();
        let n0 = SpinQuadratic::bloch(&z0.coords);
        let n1 = SpinQuadratic::bloch(&tr.points[0].coords);
        let twist = 2.0 * (1.0 - 0.1) * n0[2];
        let phi0 = n0[1].atan2(n0[0]);
        let phi1 = n1[1].atan2(n1[0]);
        assert!((n1[2] - n0[2]).abs() < 1e-9);
        let d = (phi1 - phi0 - twist).rem_euclid(std::f64::consts::TAU);
        assert!(d.min(std::f64::consts::TAU - d) < 1e-8, "{d}");
    }
}
