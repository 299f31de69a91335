//! Ehrenfest evolution of uncertain values and its covariant form.

use serde::Serialize;

use super::builtin::{koopman_values, Realization};
use super::{lie_product, represent, state_from_density, uncertain_value, uncertainty, AlgebraState, Convention, DensityState, LieStarAlgebra};
use crate::error::{CohError, Result};
use crate::io::fmt_f64;
use crate::linalg::{c, cr, expm, trace, CMat, CVec, C64, I};
use crate::ode::{integrate, IntegratorStats, OdeOptions};

/// Relative residual above which `H |>` is said to leave the observable span.
pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationTable {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][j] = <X_j>(times[i])` from the Ehrenfest system.
    pub values: Vec<Vec<C64>>,
    /// Largest deviation from direct propagation of the state.
    pub cross_check: f64,
    pub closure_residual: f64,
    pub stats: IntegratorStats,
}

fn describe(alg: &LieStarAlgebra, v: &CVec) -> String {
    let parts: Vec<String> = v
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > CLOSURE_TOL)
        .map(|(k, z)| format!("{}: {}{:+}i", alg.names()[k], z.re, z.im))
        .collect();
    parts.join(", ")
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Characteristic flow of `H = sum h_a X_a` on Koopman samples after time `t`.
fn koopman_flow(modes: usize, h: &[f64], theta: f64, action: f64, t: f64) -> (f64, f64) {
    let w = h[1];
    let mut a = action;
    for k in 1..=modes {
        let kf = k as f64;
        let (hc, hs) = (h[2 * k], h[2 * k + 1]);
        // integrals of sin / cos (k theta0 + k w s) over [0, t]
        let mid = kf * theta + kf * w * t / 2.0;
        let factor = t * sinc(kf * w * t / 2.0);
        a += kf * (hc * mid.sin() - hs * mid.cos()) * factor;
    }
    (theta + w * t, a)
}

/// Integrates `d<X>/dt = <H |> X>` for the observables (which must span a
/// space closed under `H |>`), sampling at `times` (the first is the
/// initial time), and compares against direct propagation of `state0`.
pub fn evolve_expectations(
    alg: &LieStarAlgebra,
    realization: &Realization,
    h: &[C64],
    state0: &DensityState,
    observables: &[(String, Vec<C64>)],
    times: &[f64],
    rtol: f64,
) -> Result<ExpectationTable> {
    let d = alg.dim();
    if h.len() != d || observables.iter().any(|(_, o)| o.len() != d) {
        return Err(CohError::Dimension(format!("coefficient vectors must have length {d}")));
    }
    let Some(&t0) = times.first() else {
        return Err(CohError::Domain("no sample times".into()));
    };
    let rep = realization.matrices();
    let s0 = state_from_density(alg, rep, state0)?;
    let r = observables.len();
    let a = CMat::from_fn(d, r, |i, j| observables[j].1[i]);
    let b = alg.ad(h) * &a;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let pinv = svd
        .pseudo_inverse(1e-12 * smax.max(f64::MIN_POSITIVE))
        .map_err(|e| CohError::Numerical(e.to_string()))?;
    let m = &pinv * &b;
    let resid = &a * &m - &b;
    let mut closure: f64 = 0.0;
    for j in 0..r {
        let rj = resid.column(j).norm();
        let scale = 1.0 + b.column(j).norm();
        closure = closure.max(rj / scale);
        if rj > CLOSURE_TOL * scale {
            return Err(CohError::NonClosing(format!(
                "H |> {} escapes the observable span along {{{}}}",
                observables[j].0,
                describe(alg, &resid.column(j).into_owned())
            )));
        }
    }
    let mt = m.transpose();
    let e0: Vec<C64> = observables.iter().map(|(_, o)| uncertain_value(&s0, o)).collect();
    let y0: Vec<f64> = e0.iter().flat_map(|z| [z.re, z.im]).collect();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let e = CVec::from_iterator(r, y.chunks(2).map(|p| c(p[0], p[1])));
        let de = &mt * e;
        for (k, z) in de.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let sol = integrate(rhs, t0, y0, times, OdeOptions::with_rtol(rtol))?;
    let values: Vec<Vec<C64>> = sol.states.iter().map(|y| y.chunks(2).map(|p| c(p[0], p[1])).collect()).collect();

    let direct = |t: f64| -> Result<Vec<C64>> {
        match (realization, alg.convention()) {
            (Realization::Matrices(_), Convention::Quantum { hbar }) => {
                let u = expm(&(represent(rep, h) * (-I * ((t - t0) / hbar))));
                let rho = &u * state0.rho() * u.adjoint();
                Ok(observables.iter().map(|(_, o)| trace(&(represent(rep, o) * &rho))).collect())
            }
            (Realization::Koopman { modes, samples, .. }, Convention::NegativePoisson) => {
                if h.iter().any(|z| z.im.abs() > 0.0) {
                    return Err(CohError::Domain("Koopman Hamiltonians must be real".into()));
                }
                let hr: Vec<f64> = h.iter().map(|z| z.re).collect();
                let p = state0.rho().diagonal();
                let mut out = vec![cr(0.0); r];
                for (i, &(th, ac)) in samples.iter().enumerate() {
                    let (th1, a1) = koopman_flow(*modes, &hr, th, ac, t - t0);
                    let f = koopman_values(*modes, th1, a1);
                    for (j, (_, o)) in observables.iter().enumerate() {
                        let v: C64 = o.iter().zip(&f).map(|(x, y)| x * *y).sum();
                        out[j] += p[i] * v;
                    }
                }
                Ok(out)
            }
            _ => Err(CohError::Domain("realization does not match the algebra convention".into())),
        }
    };
    let mut cross: f64 = 0.0;
    for (t, v) in sol.times.iter().zip(&values) {
        let dv = direct(*t)?;
        for (x, y) in v.iter().zip(&dv) {
            cross = cross.max((x - y).norm());
        }
    }
    Ok(ExpectationTable {
        labels: observables.iter().map(|(n, _)| n.clone()).collect(),
        times: sol.times,
        values,
        cross_check: cross,
        closure_residual: closure,
        stats: sol.stats,
    })
}

/// CSV with columns `t, <X>_re, <X>_im, ...`.
pub fn expectation_csv(table: &ExpectationTable) -> String {
    let mut out = String::from("t");
    for l in &table.labels {
        out.push_str(&format!(",{l}_re,{l}_im"));
    }
    out.push('\n');
    for (t, row) in table.times.iter().zip(&table.values) {
        out.push_str(&fmt_f64(*t));
        for z in row {
            out.push_str(&format!(",{},{}", fmt_f64(z.re), fmt_f64(z.im)));
        }
        out.push('\n');
    }
    out
}

fn expect(rep: &[CMat], rho: &CMat, x: &[C64]) -> C64 {
    trace(&(represent(rep, x) * rho))
}

/// Per direction `nu`: `|(<X>(site + e_nu) - <X>(site - e_nu)) / 2dx - <p_nu |> X>(site)|`.
pub fn covariant_ehrenfest_residual(
    alg: &LieStarAlgebra,
    rep: &[CMat],
    p_list: &[Vec<C64>],
    field: &dyn Fn(&[i64]) -> Option<DensityState>,
    x: &[C64],
    site: &[i64],
    dx: f64,
) -> Result<Vec<f64>> {
    if p_list.len() != site.len() {
        return Err(CohError::Dimension(format!(
            "{} momentum components for a {}-dimensional lattice",
            p_list.len(),
            site.len()
        )));
    }
    if !(dx > 0.0) {
        return Err(CohError::StepSize("dx must be positive".into()));
    }
    let at = |s: &[i64]| field(s).ok_or_else(|| CohError::Domain(format!("state field undefined at site {s:?}")));
    let center = at(site)?;
    let mut out = Vec::with_capacity(site.len());
    for (nu, p) in p_list.iter().enumerate() {
        let mut up = site.to_vec();
        up[nu] += 1;
        let mut down = site.to_vec();
        down[nu] -= 1;
        let (su, sd) = (at(&up)?, at(&down)?);
        let deriv = (expect(rep, su.rho(), x) - expect(rep, sd.rho(), x)) / (2.0 * dx);
        let px = lie_product(alg, p, x);
        out.push((deriv - expect(rep, center.rho(), &px)).norm());
    }
    Ok(out)
}

/// `rho(x) = U(x) rho0 U(x)*` with `U(x) = exp(-i sum_nu x_nu rep(p_nu) / hbar)`
/// at lattice positions `x = site dx`; the `p_nu` must commute.
pub fn translation_field(rep: &[CMat], p_list: &[Vec<C64>], rho0: &DensityState, hbar: f64, dx: f64) -> impl Fn(&[i64]) -> Option<DensityState> {
    let gens: Vec<CMat> = p_list.iter().map(|p| represent(rep, p)).collect();
    let rho0 = rho0.rho().clone();
    move |site: &[i64]| {
        if site.len() != gens.len() {
            return None;
        }
        let mut g = CMat::zeros(rho0.nrows(), rho0.ncols());
        for (s, p) in site.iter().zip(&gens) {
            g += p * cr(*s as f64 * dx);
        }
        let u = expm(&(g * (-I / hbar)));
        let rho = &u * &rho0 * u.adjoint();
        DensityState::new(crate::linalg::hermitize(&rho)).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservabilityReport {
    /// `max_h |<A>(x + h) - <A>(x)|` over the supplied shifts.
    pub max_shift_change: f64,
    pub shift_within_delta: bool,
    pub sigma: f64,
    /// `sigma / (|<A>| + delta)`.
    pub resolution_ratio: f64,
    pub resolved: bool,
}

/// Evaluates the two observability inequalities for `A` at a view `x`
/// given the states at the imperceptible shifts `x + h`.
pub fn observability(state: &AlgebraState, shifted: &[AlgebraState], a: &[C64], delta: f64) -> Result<ObservabilityReport> {
    let v = uncertain_value(state, a);
    let change = shifted.iter().map(|s| (uncertain_value(s, a) - v).norm()).fold(0.0, f64::max);
    let sigma = uncertainty(state, a)?.sigma;
    let denom = v.norm() + delta;
    let ratio = if denom > 0.0 { sigma / denom } else { f64::INFINITY };
    Ok(ObservabilityReport {
        max_shift_change: change,
        shift_within_delta: change <= delta,
        sigma,
        resolution_ratio: ratio,
        resolved: ratio < 1.0,
    })
}
