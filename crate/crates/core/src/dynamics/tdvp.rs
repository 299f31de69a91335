//! Dirac-Frenkel (TDVP) flow in holomorphic charts.
//!
//! With `|z> = e^c phi(w)` the stationarity of the coherent action gives
//!
//! ```text
//! i hbar g(w) dw/dt = dh/d conj(w)
//! i hbar dc/dt      = h - i hbar (dw/dt) . a(w)
//! ```
//!
//! where `g` is the Kaehler metric and `a` the connection of the chart
//! potential. The second equation keeps `<z|z>` constant and tracks the
//! phase, so labels can be compared with exact coherent flows directly.

use std::cell::RefCell;

use serde::Serialize;

use super::chart::{chart_gradient, check_nondegenerate, Chart};
use super::energy::ExpectationFunction;
use crate::error::{CohError, Result};
use crate::kernel::{Kernel, KernelSpace, Point};
use crate::linalg::{c, cr, C64, CVec, I};
use crate::ode::{Dopri5, IntegratorStats, OdeOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdvpOptions {
    pub ode: OdeOptions,
    pub hbar: f64,
    /// Step for numerical energy gradients.
    pub gradient_step: f64,
    /// Step for numerical metrics.
    pub metric_step: f64,
    /// Relative energy drift that aborts a run.
    pub energy_drift_tol: f64,
}

impl Default for TdvpOptions {
    fn default() -> Self {
        TdvpOptions {
            ode: OdeOptions::default(),
            hbar: 1.0,
            gradient_step: 1e-5,
            metric_step: 1e-4,
            energy_drift_tol: 1e-6,
        }
    }
}

impl TdvpOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        TdvpOptions {
            ode: OdeOptions::with_rtol(rtol),
            ..Default::default()
        }
    }
}

/// Sampled TDVP trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TdvpTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub energies: Vec<f64>,
    /// `<z|z>` along the flow.
    pub norms: Vec<f64>,
    /// max |h(t) - h(0)| / |h(0)| over all accepted steps.
    pub energy_drift: f64,
    /// max |<z|z>(t) / <z|z>(0) - 1| over all accepted steps.
    pub norm_drift: f64,
    pub chart_switches: usize,
    pub stats: IntegratorStats,
}

pub(crate) fn pack(c0: C64, w: &[C64], extra: &[C64]) -> Vec<f64> {
    std::iter::once(c0)
        .chain(w.iter().cloned())
        .chain(extra.iter().cloned())
        .flat_map(|v| [v.re, v.im])
        .collect()
}

pub(crate) fn unpack(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| c(p[0], p[1])).collect()
}

/// `(dc/dt, dw/dt)` at chart point `w`.
pub(crate) fn velocity(
    chart: &Chart,
    energy: &dyn ExpectationFunction,
    opts: &TdvpOptions,
    w: &[C64],
) -> Result<(C64, Vec<C64>)> {
    let (g, a) = chart.metric_and_connection(w, opts.metric_step)?;
    let z = chart.lift_coords(w);
    let grad = chart_gradient(chart, w, &|u| energy.value(u), energy.grad_conj(&z), opts.gradient_step);
    let rhs = CVec::from_iterator(grad.len(), grad.iter().map(|v| v * (-I / opts.hbar)));
    let trace: f64 = (0..g.nrows()).map(|k| g[(k, k)].re).sum();
    let chol = match g.clone().cholesky() {
        Some(ch) => {
            let lmin = (0..g.nrows()).map(|k| ch.l()[(k, k)].re.powi(2)).fold(f64::INFINITY, f64::min);
            if lmin < 1e-12 * trace {
                check_nondegenerate(&g)?;
            }
            ch
        }
        None => {
            check_nondegenerate(&g)?;
            return Err(CohError::Numerical("metric factorization failed".into()));
        }
    };
    let wdot = chol.solve(&rhs);
    let dc = if chart.has_scale() {
        let h = energy.value(&z);
        -I * (h / opts.hbar) - wdot.iter().zip(&a).map(|(x, y)| x * y).sum::<C64>()
    } else {
        cr(0.0)
    };
    if !dc.re.is_finite() || wdot.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(CohError::Numerical("non-finite TDVP velocity".into()));
    }
    Ok((dc, wdot.iter().cloned().collect()))
}

/// Step used for directional derivatives of the vector field.
pub(crate) const TANGENT_FD_STEP: f64 = 1e-6;

/// Real vector field on `[c, w, dw?]`.
pub(crate) fn field(
    chart: &Chart,
    energy: &dyn ExpectationFunction,
    opts: &TdvpOptions,
    x: &[f64],
    tangent: bool,
) -> Result<Vec<f64>> {
    let m = chart.dim();
    let s = unpack(x);
    let w = &s[1..1 + m];
    let (dc, dw) = velocity(chart, energy, opts, w)?;
    let mut out = pack(dc, &dw, &[]);
    if tangent {
        let d = &s[1 + m..1 + 2 * m];
        let norm = d.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            out.extend(std::iter::repeat(0.0).take(2 * m));
        } else {
            let eps = TANGENT_FD_STEP;
            let shifted = |sign: f64| -> Vec<C64> { w.iter().zip(d).map(|(a, b)| a + b * (sign * eps / norm)).collect() };
            let (_, fp) = velocity(chart, energy, opts, &shifted(1.0))?;
            let (_, fm) = velocity(chart, energy, opts, &shifted(-1.0))?;
            for k in 0..m {
                let v = (fp[k] - fm[k]) * (norm / (2.0 * eps));
                out.push(v.re);
                out.push(v.im);
            }
        }
    }
    Ok(out)
}

/// Integration state carried across segments and chart switches.
pub(crate) struct FlowState {
    pub chart: Chart,
    pub t: f64,
    /// `[c, w, dw?]` packed as reals.
    pub y: Vec<f64>,
    pub tangent: bool,
    pub switches: usize,
    pub stats: IntegratorStats,
}

impl FlowState {
    pub fn new(space: &KernelSpace, z0: &Point, t0: f64, tangent: Option<Vec<C64>>) -> Result<Self> {
        let chart = Chart::at(space, z0)?;
        let (c0, w) = chart.split(z0)?;
        let tangent_on = tangent.is_some();
        let y = pack(c0, &w, &tangent.unwrap_or_default());
        Ok(FlowState {
            chart,
            t: t0,
            y,
            tangent: tangent_on,
            switches: 0,
            stats: IntegratorStats::default(),
        })
    }

    pub fn parts(&self) -> (C64, Vec<C64>, Vec<C64>) {
        let m = self.chart.dim();
        let s = unpack(&self.y);
        (s[0], s[1..1 + m].to_vec(), s[1 + m..].to_vec())
    }

    pub fn set_tangent(&mut self, d: &[C64]) {
        let (c0, w, _) = self.parts();
        self.y = pack(c0, &w, d);
    }

    /// Integrates to `t1`, calling `sample` at each requested time and
    /// `monitor` after every accepted step.
    pub fn advance(
        &mut self,
        energy: &dyn ExpectationFunction,
        opts: &TdvpOptions,
        t1: f64,
        samples: &[f64],
        sample: &mut dyn FnMut(&Chart, f64, &[f64]),
        monitor: &mut dyn FnMut(&Chart, f64, &[f64]) -> Result<()>,
    ) -> Result<()> {
        if t1 < self.t {
            return Err(CohError::Domain("TDVP integration runs forward in time".into()));
        }
        let mut next = samples.iter().position(|&s| s >= self.t).unwrap_or(samples.len());
        while next < samples.len() && samples[next] == self.t {
            sample(&self.chart, self.t, &self.y);
            next += 1;
        }
        while self.t < t1 {
            let snapshot = self.chart.clone();
            let failure: RefCell<Option<CohError>> = RefCell::new(None);
            let tangent = self.tangent;
            let rhs = |_t: f64, x: &[f64], dx: &mut [f64]| match field(&snapshot, energy, opts, x, tangent) {
                Ok(v) => dx.copy_from_slice(&v),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    dx.iter_mut().for_each(|v| *v = f64::NAN);
                }
            };
            let mut stepper = Dopri5::new(rhs, self.t, self.y.clone(), opts.ode);
            loop {
                let t_new = match stepper.step(t1) {
                    Ok(t) => t,
                    Err(e) => return Err(failure.take().unwrap_or(e)),
                };
                while next < samples.len() && samples[next] <= t_new {
                    let ys = if samples[next] == t_new {
                        stepper.y().to_vec()
                    } else {
                        stepper.interpolate(samples[next])
                    };
                    sample(&snapshot, samples[next], &ys);
                    next += 1;
                }
                let y = stepper.y().to_vec();
                monitor(&snapshot, t_new, &y)?;
                self.t = t_new;
                self.y = y;
                let m = snapshot.dim();
                let s = unpack(&self.y);
                if let Some(q) = snapshot.should_switch(&s[1..1 + m]) {
                    let mut tangents = if self.tangent { vec![s[1 + m..].to_vec()] } else { vec![] };
                    let (c1, w1) = self.chart.switch(q, s[0], &s[1..1 + m], &mut tangents);
                    self.y = pack(c1, &w1, tangents.first().map_or(&[][..], |v| &v[..]));
                    self.switches += 1;
                    break;
                }
                if t_new >= t1 {
                    break;
                }
            }
            self.stats.merge(&stepper.stats());
        }
        Ok(())
    }
}

/// Rescales labels of sphere spaces onto the unit sphere.
pub(crate) fn normalize_label(space: &KernelSpace, z: Point) -> Point {
    let sphere = match &space.kernel {
        Kernel::Spin { .. } => true,
        Kernel::Power { base, .. } => matches!(base.kernel, Kernel::Spin { .. }),
        _ => false,
    };
    if !sphere {
        return z;
    }
    let r = crate::linalg::norm(&z.coords);
    Point::new(z.coords.iter().map(|v| v / r).collect())
}

/// Integrates the TDVP equations from `z0`, sampling at `sample_times`
/// (ascending, starting at or after `t0`).
pub fn dirac_frenkel_flow(
    space: &KernelSpace,
    energy: &dyn ExpectationFunction,
    z0: &Point,
    t0: f64,
    sample_times: &[f64],
    opts: &TdvpOptions,
) -> Result<TdvpTrajectory> {
    let mut state = FlowState::new(space, z0, t0, None)?;
    if !state.chart.has_scale() {
        return Err(CohError::Domain(
            "TDVP needs a normalized or projective space (the state norm must be tracked)".into(),
        ));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.first().is_some_and(|&t| t < t0) {
        return Err(CohError::Domain("sample times must increase from t0".into()));
    }
    let (c0, w0, _) = state.parts();
    let h0 = energy.value(&state.chart.lift_coords(&w0));
    let n0 = state.chart.log_norm(c0, &w0);
    let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
    let mut traj = TdvpTrajectory {
        times: vec![],
        points: vec![],
        energies: vec![],
        norms: vec![],
        energy_drift: 0.0,
        norm_drift: 0.0,
        chart_switches: 0,
        stats: IntegratorStats::default(),
    };
    let t_end = sample_times.last().copied().unwrap_or(t0);
    let mut samples: Vec<(f64, C64, Vec<C64>, Chart)> = Vec::new();
    let mut energy_drift: f64 = 0.0;
    let mut norm_drift: f64 = 0.0;
    state.advance(
        energy,
        opts,
        t_end,
        sample_times,
        &mut |chart, t, y| {
            let s = unpack(y);
            let m = chart.dim();
            samples.push((t, s[0], s[1..1 + m].to_vec(), chart.clone()));
        },
        &mut |chart, t, y| {
            let s = unpack(y);
            let w = &s[1..1 + chart.dim()];
            let h = energy.value(&chart.lift_coords(w));
            energy_drift = energy_drift.max((h - h0).abs() / scale);
            norm_drift = norm_drift.max((chart.log_norm(s[0], w) - n0).exp_m1().abs());
            if energy_drift > opts.energy_drift_tol {
                return Err(CohError::IntegratorFailure(format!(
                    "relative energy drift {energy_drift:e} exceeds {:e} at t = {t}; tighten rtol",
                    opts.energy_drift_tol
                )));
            }
            Ok(())
        },
    )?;
    for (t, c0, w, chart) in samples {
        traj.times.push(t);
        traj.energies.push(energy.value(&chart.lift_coords(&w)));
        traj.norms.push(chart.log_norm(c0, &w).exp());
        traj.points.push(normalize_label(space, chart.to_label(c0, &w)));
    }
    traj.energy_drift = energy_drift;
    traj.norm_drift = norm_drift;
    traj.chart_switches = state.switches;
    traj.stats = state.stats;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::energy::{BosonQuadratic, SpinQuadratic};
    use crate::kernel::{sphere_point, SpaceDescriptor};
    use crate::linalg::CMat;
    use crate::ode::linspace;

    #[test]
    fn constant_energy_is_stationary() {
        let s = SpaceDescriptor::Spin { exponent: 2.0 }.build().unwrap();
        let e = SpinQuadratic::new(2.0, [0.0; 3], [[0.0; 3]; 3]);
        let z0 = sphere_point(0.7, 0.2);
        let tr = dirac_frenkel_flow(&s, &e, &z0, 0.0, &linspace(0.0, 3.0, 4), &TdvpOptions::default()).unwrap();
        for p in &tr.points {
            assert!(p.max_abs_diff(&z0) < 1e-12);
        }
    }

    #[test]
    fn klauder_oscillator_rotates() {
        let s = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let e = BosonQuadratic {
            matrix: CMat::from_element(1, 1, cr(0.5)),
            kerr: vec![0.0],
        };
        let z0 = Point::new(vec![c(0.1, 0.2), c(0.8, -0.3)]);
        let times = linspace(0.0, 10.0, 11);
        let tr = dirac_frenkel_flow(&s, &e, &z0, 0.0, &times, &TdvpOptions::with_rtol(1e-10)).unwrap();
        for (t, p) in times.iter().zip(&tr.points) {
            let expect = z0.coords[1] * (-I * 0.5 * t).exp();
            assert!((p.coords[1] - expect).norm() < 1e-8);
            assert!((p.coords[0] - z0.coords[0]).norm() < 1e-8);
        }
        assert!(tr.norm_drift < 1e-8);
    }

    #[test]
    fn spin_precession_crosses_charts() {
        // rotation about x carries the north pole through the south pole
        let s = SpaceDescriptor::Spin { exponent: 3.0 }.build().unwrap();
        let e = SpinQuadratic::new(3.0, [1.0, 0.0, 0.0], [[0.0; 3]; 3]);
        let z0 = sphere_point(0.3, 0.0);
        let tr = dirac_frenkel_flow(&s, &e, &z0, 0.0, &linspace(0.0, 6.0, 7), &TdvpOptions::with_rtol(1e-10)).unwrap();
        assert!(tr.chart_switches >= 2);
        assert!(tr.energy_drift < 1e-8);
        // exact label flow z(t) = exp(-i t sigma_x / 2) z0
        let sx = crate::linalg::pauli()[0].clone();
        for (t, p) in tr.times.iter().zip(&tr.points) {
            let u = crate::linalg::expm(&(&sx * (-I * 0.5 * t)));
            let z = &u * CVec::from_column_slice(&z0.coords);
            for k in 0..2 {
                assert!((p.coords[k] - z[k]).norm() < 1e-8, "t = {t}");
            }
        }
    }
}
