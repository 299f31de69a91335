//! Dispatch of a parsed [`RunConfig`] to the library.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Command, Format, LyapunovSystem, ObservableSpec, QuantizeMode, RunConfig, StateSpec};
use crate::dynamics::{
    coherent_flow, dirac_frenkel_flow, lyapunov_max, ExpectationFunction, LinearExpectation, LinearHamiltonianFlow,
    TdvpOptions,
};
use crate::error::{CohError, Result};
use crate::io::{fmt_f64, matrix_to_csv, JsonMatrix};
use crate::kernel::causal::check_causal_conditions;
use crate::kernel::{check_coherence, gram_matrix_threaded, sample_points, KernelSpace, Point};
use crate::lie::{evolve_expectations, expectation_csv, DensityState};
use crate::linalg::{c, CVec, C64};
use crate::ode::{linspace, OdeOptions};
use crate::quantization::{generator_matrix, quantize_map, unitarity_defect, CoherentMapSpec, GeneratorSpec};
use crate::quantum_space::build_quantum_space;
use crate::spectra::{solve_implicit_spectrum, spectrum_csv, ScanOptions};

/// Result of a run: the payload bytes plus report material.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub payload: Vec<u8>,
    pub format: Format,
    pub summary: Value,
    pub warnings: Vec<String>,
    /// A verification that ran to completion but failed; the payload is
    /// still written.
    pub failure: Option<CohError>,
}

impl RunOutput {
    fn new(payload: Vec<u8>, format: Format, summary: Value) -> Self {
        RunOutput {
            payload,
            format,
            summary,
            warnings: Vec::new(),
            failure: None,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("payload serializes");
    s.push('\n');
    s.into_bytes()
}

fn samples_or(space: &KernelSpace, points: &Option<Vec<Point>>, n: usize, seed: u64) -> Vec<Point> {
    match points {
        Some(p) => p.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_points(space, n, &mut rng)
        }
    }
}

fn times(tspan: [f64; 2], samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(tspan[1] > tspan[0]) {
        return Err(CohError::Config("need tspan[1] > tspan[0] and at least 2 samples".into()));
    }
    Ok(linspace(tspan[0], tspan[1], samples))
}

fn point_header(p: &Point) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for k in 0..p.coords.len() {
        h.push(format!("z{k}_re"));
        h.push(format!("z{k}_im"));
    }
    if p.multiplier.is_some() {
        h.push("mult_re".into());
        h.push("mult_im".into());
    }
    h.push("energy".into());
    h.push("norm".into());
    h
}

fn trajectory_csv(times: &[f64], points: &[Point], energies: &[f64], norms: &[f64]) -> String {
    let mut out = match points.first() {
        Some(p) => point_header(p).join(","),
        None => "t,energy,norm".into(),
    };
    out.push('\n');
    for (i, (t, p)) in times.iter().zip(points).enumerate() {
        let mut row = vec![fmt_f64(*t)];
        for z in p.coords.iter().chain(p.multiplier.iter()) {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        row.push(fmt_f64(energies[i]));
        row.push(fmt_f64(norms[i]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn coeffs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| c(p[0], p[1])).collect()
}

/// Runs one command. Errors are domain errors (exit status 1).
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let fmt = cfg.format();
    match &cfg.command {
        Command::KernelEval { space, z, z2 } => {
            let s = space.build()?;
            let v = s.eval(z, z2)?;
            let out = json!({"re": v.re, "im": v.im});
            Ok(RunOutput::new(to_json(&out), Format::Json, out))
        }
        Command::KernelGram { space, points } => {
            let s = space.build()?;
            let g = gram_matrix_threaded(&s, points, cfg.threads)?;
            let payload = match fmt {
                Format::Csv => matrix_to_csv(&g).into_bytes(),
                Format::Json => to_json(&JsonMatrix::from_matrix(&g)),
            };
            Ok(RunOutput::new(payload, fmt, json!({"points": points.len()})))
        }
        Command::KernelCheck { space, points, samples, tol } => {
            let s = space.build()?;
            let pts = samples_or(&s, points, *samples, cfg.seed);
            let v = check_coherence(&s, &pts, *tol)?;
            let mut out = RunOutput::new(to_json(&v), Format::Json, serde_json::to_value(&v).expect("verdict serializes"));
            if !v.passed {
                out.failure = Some(CohError::KernelNotPsd {
                    min_eigenvalue: v.min_eigenvalue,
                    tolerance: v.tolerance_used,
                });
            }
            Ok(out)
        }
        Command::QspaceBuild { space, points, samples, tol } => {
            let s = space.build()?;
            let pts = samples_or(&s, points, *samples, cfg.seed);
            let qb = build_quantum_space(&s, &pts, *tol)?;
            let j = qb.to_json();
            Ok(RunOutput::new(
                to_json(&j),
                Format::Json,
                json!({"rank": j.rank, "points": pts.len(), "reconstruction_error": qb.reconstruction_error()}),
            ))
        }
        Command::Quantize { basis, matrix, mode, step, tol } => {
            let qb = basis.rebuild()?;
            let m = matrix.to_matrix()?;
            let op = match mode {
                QuantizeMode::Map => quantize_map(&qb, &CoherentMapSpec::linear(qb.space(), m)?, *tol)?,
                QuantizeMode::Generator => generator_matrix(&qb, &GeneratorSpec::linear(qb.space(), m), *step, *tol)?,
            };
            let mut summary = json!({"rank": qb.rank(), "residual": op.residual});
            if *mode == QuantizeMode::Map {
                summary["unitarity_defect"] = unitarity_defect(&op).into();
            }
            Ok(RunOutput::new(to_json(&op.to_json()), Format::Json, summary))
        }
        Command::DynCoherent {
            space,
            z0,
            hamiltonian,
            hbar,
            tspan,
            samples,
            rtol,
        } => {
            let s = space.build()?;
            let h = hamiltonian.to_matrix()?;
            let ts = times(*tspan, *samples)?;
            let flow = LinearHamiltonianFlow::constant(h.clone(), *hbar);
            let traj = coherent_flow(&s, &flow, z0, tspan[0], &ts, OdeOptions::with_rtol(*rtol))?;
            let mut warnings = Vec::new();
            let energy: Option<LinearExpectation> = match LinearExpectation::new(&s, h) {
                Ok(e) => Some(e),
                Err(e) => {
                    warnings.push(format!("energy column unavailable: {e}"));
                    None
                }
            };
            let energies: Vec<f64> = traj
                .points
                .iter()
                .map(|p| energy.as_ref().map_or(f64::NAN, |e| e.value(&p.coords)))
                .collect();
            let norms: Vec<f64> = traj
                .points
                .iter()
                .map(|p| s.product(p, p).map(|v| v.re))
                .collect::<Result<_>>()?;
            let payload = match fmt {
                Format::Csv => trajectory_csv(&traj.times, &traj.points, &energies, &norms).into_bytes(),
                Format::Json => to_json(&json!({"trajectory": traj, "energies": energies, "norms": norms})),
            };
            let mut out = RunOutput::new(payload, fmt, json!({"samples": traj.times.len(), "steps": traj.stats.steps}));
            out.warnings = warnings;
            Ok(out)
        }
        Command::DynTdvp {
            space,
            energy,
            z0,
            hbar,
            tspan,
            samples,
            rtol,
        } => {
            let s = space.build()?;
            let e = energy.build(&s)?;
            let ts = times(*tspan, *samples)?;
            let opts = TdvpOptions {
                hbar: *hbar,
                ..TdvpOptions::with_rtol(*rtol)
            };
            let traj = dirac_frenkel_flow(&s, e.as_ref(), z0, tspan[0], &ts, &opts)?;
            let payload = match fmt {
                Format::Csv => trajectory_csv(&traj.times, &traj.points, &traj.energies, &traj.norms).into_bytes(),
                Format::Json => to_json(&traj),
            };
            Ok(RunOutput::new(
                payload,
                fmt,
                json!({
                    "energy_drift": traj.energy_drift,
                    "norm_drift": traj.norm_drift,
                    "chart_switches": traj.chart_switches,
                    "steps": traj.stats.steps,
                }),
            ))
        }
        Command::DynLyapunov { system, rtol } => {
            let opts = TdvpOptions::with_rtol(*rtol);
            let report = match system {
                LyapunovSystem::KickedTop { z0, kicks, .. } => {
                    let kt = system.kicked_top().expect("kicked top system");
                    kt.lyapunov(z0, *kicks, &opts)?
                }
                LyapunovSystem::Autonomous {
                    space,
                    energy,
                    z0,
                    t_total,
                    renorm_dt,
                    hbar,
                } => {
                    let s = space.build()?;
                    let e = energy.build(&s)?;
                    let opts = TdvpOptions { hbar: *hbar, ..opts };
                    lyapunov_max(&s, e.as_ref(), z0, *t_total, *renorm_dt, &opts)?
                }
            };
            let payload = match fmt {
                Format::Csv => {
                    let mut out = String::from("t,lambda_running,log_stretch\n");
                    for (t, r, l) in &report.series {
                        out.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*r), fmt_f64(*l)));
                    }
                    out.into_bytes()
                }
                Format::Json => to_json(&report),
            };
            Ok(RunOutput::new(
                payload,
                fmt,
                json!({
                    "lambda_max": report.lambda_max,
                    "lambda_tail": report.lambda_tail,
                    "chart_switches": report.chart_switches,
                    "steps": report.stats.steps,
                }),
            ))
        }
        Command::SpecSolve { model, interval, tol, points } => {
            let m = model.build()?;
            let r = solve_implicit_spectrum(&m, (interval[0], interval[1]), ScanOptions { points: *points, tol: *tol })?;
            let payload = match fmt {
                Format::Csv => spectrum_csv(&r).into_bytes(),
                Format::Json => to_json(&r),
            };
            let mut out = RunOutput::new(
                payload,
                fmt,
                json!({"levels": r.discrete.len(), "continuous": r.continuous}),
            );
            out.warnings = r.warnings.clone();
            Ok(out)
        }
        Command::LieEvolve {
            algebra,
            hamiltonian,
            state,
            observables,
            tspan,
            samples,
            rtol,
        } => {
            let (alg, real) = algebra.build_realization()?;
            let rho = match state {
                StateSpec::Rho(m) => DensityState::new(m.to_matrix()?)?,
                StateSpec::Vector(v) => {
                    let psi = CVec::from_vec(coeffs(v));
                    DensityState::pure(&psi)?
                }
                StateSpec::Probabilities(p) => DensityState::diagonal(p)?,
            };
            let obs: Vec<(String, Vec<C64>)> = observables
                .iter()
                .map(|o| match o {
                    ObservableSpec::Basis(name) => alg
                        .names()
                        .iter()
                        .position(|n| n == name)
                        .map(|k| (name.clone(), alg.basis(k)))
                        .ok_or_else(|| CohError::Config(format!("no basis element named {name:?}"))),
                    ObservableSpec::Combination { name, coeffs: v } => Ok((name.clone(), coeffs(v))),
                })
                .collect::<Result<_>>()?;
            let ts = times(*tspan, *samples)?;
            let table = evolve_expectations(&alg, &real, &coeffs(hamiltonian), &rho, &obs, &ts, *rtol)?;
            let payload = match fmt {
                Format::Csv => expectation_csv(&table).into_bytes(),
                Format::Json => to_json(&table),
            };
            Ok(RunOutput::new(
                payload,
                fmt,
                json!({"cross_check": table.cross_check, "closure_residual": table.closure_residual}),
            ))
        }
        Command::CausalCheck {
            kernel,
            independence,
            normal,
            causal,
            tol,
        } => {
            let k = kernel.evaluator(*independence);
            let ind = *independence;
            let v = check_causal_conditions(&*k, &|a, b| ind.independent(a, b), normal, causal, *tol)?;
            let mut out = RunOutput::new(to_json(&v), Format::Json, serde_json::to_value(&v).expect("verdict serializes"));
            if !v.passed {
                out.failure = Some(CohError::CheckFailed(format!(
                    "normal max {:e}, causal max {:e}, tolerance {:e}",
                    v.normal_max, v.causal_max, tol
                )));
            }
            Ok(out)
        }
    }
}
