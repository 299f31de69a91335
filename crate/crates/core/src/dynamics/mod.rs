//! Coherent and variational dynamics on kernel spaces.

pub mod chart;
pub mod energy;
pub mod lyapunov;
pub mod tdvp;

pub use chart::{kahler_metric, Chart, CHART_SWITCH_RADIUS};
pub use energy::{BosonQuadratic, EnergySpec, ExpectationFunction, FnEnergy, LinearExpectation, SpinQuadratic};
pub use lyapunov::{benettin, lyapunov_max, KickedTop, LyapunovReport, Segment};
pub use tdvp::{dirac_frenkel_flow, TdvpOptions, TdvpTrajectory};

use serde::Serialize;

use crate::error::{CohError, Result};
use crate::kernel::{Kernel, KernelSpace, Point};
use crate::linalg::{c, cr, dot_conj, expm, norm, trace, CMat, CVec, C64, I};
use crate::ode::{integrate, IntegratorStats, OdeOptions};
use crate::quantization::{generator_matrix, GeneratorSpec, DEFAULT_GENERATOR_STEP, DEFAULT_QUANTIZE_TOL};
use crate::quantum_space::QuantumBasis;

/// Sphere labels may drift this far from `|z| = 1` before renormalization
/// is refused.
pub const SPHERE_DRIFT_TOL: f64 = 1e-6;

/// A label-space Hamiltonian `H(t)`; labels obey `i hbar dz/dt = H(t) z`.
pub struct LinearHamiltonianFlow {
    hamiltonian: Box<dyn Fn(f64) -> CMat + Send + Sync>,
    constant: Option<CMat>,
    pub hbar: f64,
}

impl LinearHamiltonianFlow {
    pub fn constant(h: CMat, hbar: f64) -> Self {
        let h2 = h.clone();
        LinearHamiltonianFlow {
            hamiltonian: Box::new(move |_| h2.clone()),
            constant: Some(h),
            hbar,
        }
    }

    pub fn time_dependent(f: impl Fn(f64) -> CMat + Send + Sync + 'static, hbar: f64) -> Self {
        LinearHamiltonianFlow {
            hamiltonian: Box::new(f),
            constant: None,
            hbar,
        }
    }

    pub fn matrix_at(&self, t: f64) -> CMat {
        (self.hamiltonian)(t)
    }

    pub fn constant_matrix(&self) -> Option<&CMat> {
        self.constant.as_ref()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub stats: IntegratorStats,
}

fn on_sphere(space: &KernelSpace) -> bool {
    match &space.kernel {
        Kernel::Spin { .. } | Kernel::ClassicalLimit => true,
        Kernel::Power { base, .. } => on_sphere(base),
        _ => false,
    }
}

/// Integrates `i hbar dz/dt = H(t) z` from `z0` at `t0`, sampling at
/// `sample_times`. Every sample is validated against the space.
pub fn coherent_flow(
    space: &KernelSpace,
    flow: &LinearHamiltonianFlow,
    z0: &Point,
    t0: f64,
    sample_times: &[f64],
    opts: OdeOptions,
) -> Result<Trajectory> {
    space.validate(z0)?;
    let d = space.label_dim();
    let h0 = flow.matrix_at(t0);
    if h0.nrows() != d || h0.ncols() != d {
        return Err(CohError::Dimension(format!(
            "Hamiltonian is {}x{} but labels have dimension {d}",
            h0.nrows(),
            h0.ncols()
        )));
    }
    let hbar = flow.hbar;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let h = flow.matrix_at(t);
        let z = CVec::from_iterator(d, y.chunks(2).map(|p| c(p[0], p[1])));
        let dz = (h * z) * (-I / hbar);
        for (k, v) in dz.iter().enumerate() {
            dy[2 * k] = v.re;
            dy[2 * k + 1] = v.im;
        }
    };
    let y0: Vec<f64> = z0.coords.iter().flat_map(|v| [v.re, v.im]).collect();
    let sol = integrate(rhs, t0, y0, sample_times, opts)?;
    let sphere = on_sphere(space);
    let mut points = Vec::with_capacity(sol.states.len());
    for (t, y) in sol.times.iter().zip(&sol.states) {
        let mut coords: Vec<C64> = y.chunks(2).map(|p| c(p[0], p[1])).collect();
        if sphere {
            let r = norm(&coords);
            if (r - 1.0).abs() > SPHERE_DRIFT_TOL {
                return Err(CohError::IntegratorFailure(format!(
                    "label left the unit sphere (|z| = {r}) at t = {t}; H is not Hermitian or rtol is too loose"
                )));
            }
            coords.iter_mut().for_each(|v| *v /= r);
        }
        let p = Point {
            coords,
            multiplier: z0.multiplier,
        };
        space.validate(&p)?;
        points.push(p);
    }
    Ok(Trajectory {
        times: sol.times,
        points,
        stats: sol.stats,
    })
}

/// Finite-dimensional carrier of the Schroedinger lift.
pub enum FiniteRepresentation<'a> {
    /// Trivial kernel: states are the labels themselves.
    Trivial,
    /// Single-mode Klauder space in the number basis `0..cutoff`.
    Fock { cutoff: usize },
    /// Integral spin exponent `2j` in the monomial basis.
    Spin { two_j: u32 },
    /// A sampled quantum space; the Hamiltonian is `dGamma(-H / hbar)`.
    Basis(&'a QuantumBasis),
}

/// Tail mass above which a truncated representation is refused.
pub const TRUNCATION_TOL: f64 = 1e-12;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FiniteRepresentation<'_> {
    fn check_space(&self, space: &KernelSpace) -> Result<()> {
        let ok = match (self, &space.kernel) {
            (FiniteRepresentation::Trivial, Kernel::Trivial { .. }) => true,
            (FiniteRepresentation::Fock { .. }, Kernel::Klauder { modes }) => *modes == 1,
            (FiniteRepresentation::Spin { two_j }, Kernel::Spin { exponent, .. }) => *exponent == *two_j as f64,
            (FiniteRepresentation::Basis(qb), _) => qb.space().descriptor() == space.descriptor(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(CohError::Domain("representation does not match the space".into()))
        }
    }

    /// State vector of `|z>`.
    pub fn embed(&self, space: &KernelSpace, z: &Point) -> Result<CVec> {
        self.check_space(space)?;
        space.validate(z)?;
        match self {
            FiniteRepresentation::Trivial => Ok(CVec::from_column_slice(&z.coords)),
            FiniteRepresentation::Fock { cutoff } => {
                let (a, zeta) = (z.coords[0], z.coords[1]);
                let r2 = zeta.norm_sqr();
                let mut psi = CVec::zeros(*cutoff);
                let mut term = a.exp();
                let mut kept = 0.0;
                let mut p = 1.0;
                for n in 0..*cutoff {
                    psi[n] = term;
                    kept += p;
                    term *= zeta / ((n + 1) as f64).sqrt();
                    p *= r2 / (n + 1) as f64;
                }
                let tail = 1.0 - kept * (-r2).exp();
                if tail > TRUNCATION_TOL {
                    return Err(CohError::Truncation(format!(
                        "Fock cutoff {cutoff} drops relative mass {tail:e} at |zeta|^2 = {r2}"
                    )));
                }
                Ok(psi)
            }
            FiniteRepresentation::Spin { two_j } => {
                let n = *two_j;
                Ok(CVec::from_iterator(
                    n as usize + 1,
                    (0..=n).map(|m| {
                        crate::linalg::powi(z.coords[0], n - m) * crate::linalg::powi(z.coords[1], m) * binomial(n, m).sqrt()
                    }),
                ))
            }
            FiniteRepresentation::Basis(qb) => {
                let (v, leak) = qb.project(z)?;
                if leak > TRUNCATION_TOL {
                    return Err(CohError::Truncation(format!(
                        "state leaks {leak:e} out of the sampled span"
                    )));
                }
                Ok(v)
            }
        }
    }

    /// Operator `H_hat` with `embed(exp(-i t H / hbar) z) = exp(-i t H_hat / hbar) embed(z)`.
    pub fn hamiltonian(&self, space: &KernelSpace, h: &CMat, hbar: f64) -> Result<CMat> {
        self.check_space(space)?;
        let d = space.label_dim();
        if h.nrows() != d || h.ncols() != d {
            return Err(CohError::Dimension(format!("Hamiltonian must be {d}x{d}")));
        }
        match self {
            FiniteRepresentation::Trivial => Ok(h.clone()),
            FiniteRepresentation::Fock { cutoff } => {
                if h[(0, 0)].norm() > 0.0 || h[(0, 1)].norm() > 0.0 || h[(1, 0)].norm() > 0.0 {
                    return Err(CohError::Domain(
                        "Fock lift needs a Hamiltonian acting on the mode label only".into(),
                    ));
                }
                Ok(CMat::from_diagonal(&CVec::from_iterator(
                    *cutoff,
                    (0..*cutoff).map(|k| h[(1, 1)] * k as f64),
                )))
            }
            FiniteRepresentation::Spin { two_j } => {
                let n = *two_j;
                let dim = n as usize + 1;
                let mut out = CMat::zeros(dim, dim);
                for m in 0..=n {
                    let i = m as usize;
                    out[(i, i)] = h[(0, 0)] * (n - m) as f64 + h[(1, 1)] * m as f64;
                    if m < n {
                        out[(i, i + 1)] = h[(0, 1)] * ((n - m) as f64 * (binomial(n, m) / binomial(n, m + 1)).sqrt());
                    }
                    if m > 0 {
                        out[(i, i - 1)] = h[(1, 0)] * (m as f64 * (binomial(n, m) / binomial(n, m - 1)).sqrt());
                    }
                }
                Ok(out)
            }
            FiniteRepresentation::Basis(qb) => {
                // exp(i s X) with X = -H / hbar generates the label flow
                let x = h * cr(-1.0 / hbar);
                let g = generator_matrix(qb, &GeneratorSpec::linear(space, x), DEFAULT_GENERATOR_STEP, DEFAULT_QUANTIZE_TOL)?;
                Ok(g.matrix * cr(-hbar))
            }
        }
    }
}

/// `max_t 1 - |<psi(t), |z(t)>>|^2 / (||psi(t)||^2 <z(t)|z(t)>)` where
/// `psi(t) = exp(-i t H_hat / hbar) psi(0)` is the lifted Schroedinger flow.
pub fn verify_schrodinger_lift(
    space: &KernelSpace,
    rep: &FiniteRepresentation,
    trajectory: &Trajectory,
    flow: &LinearHamiltonianFlow,
) -> Result<f64> {
    let h = flow
        .constant_matrix()
        .ok_or_else(|| CohError::Domain("the Schroedinger lift check needs a time-independent Hamiltonian".into()))?;
    let hh = rep.hamiltonian(space, h, flow.hbar)?;
    let (Some(&t0), Some(z0)) = (trajectory.times.first(), trajectory.points.first()) else {
        return Err(CohError::Domain("empty trajectory".into()));
    };
    let psi0 = rep.embed(space, z0)?;
    let mut worst: f64 = 0.0;
    for (t, z) in trajectory.times.iter().zip(&trajectory.points) {
        let u = expm(&(&hh * (-I * ((t - t0) / flow.hbar))));
        let psi = u * &psi0;
        let phi = rep.embed(space, z)?;
        let k = space.product(z, z)?.re;
        let overlap = dot_conj(psi.as_slice(), phi.as_slice()).norm_sqr();
        let deficit = 1.0 - overlap / (psi.norm_squared() * k);
        worst = worst.max(deficit.max(0.0));
    }
    Ok(worst)
}

/// A normalized pure or mixed state.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Vector(CVec),
    Density(CMat),
}

pub const NORMALIZATION_TOL: f64 = 1e-10;

impl QuantumState {
    pub fn density(&self) -> CMat {
        match self {
            QuantumState::Vector(v) => v * v.adjoint(),
            QuantumState::Density(r) => r.clone(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let tr = trace(&self.density());
        if (tr - 1.0).norm() > NORMALIZATION_TOL {
            return Err(CohError::Normalization(format!("state has trace {tr}")));
        }
        Ok(())
    }
}

/// `|d<X>/dt - <(i/hbar)[H, X]>|` at time `t`, with the derivative taken as
/// an exact-propagator central difference over `+-dt` around the state
/// `rho(t) = exp(-i t H / hbar) state exp(i t H / hbar)`.
pub fn ehrenfest_residual(state: &QuantumState, x: &CMat, h: &CMat, t: f64, dt: f64, hbar: f64) -> Result<f64> {
    state.check()?;
    let rho0 = state.density();
    let n = rho0.nrows();
    if x.shape() != (n, n) || h.shape() != (n, n) {
        return Err(CohError::Dimension(format!("operators must be {n}x{n}")));
    }
    if !(dt > 0.0) {
        return Err(CohError::StepSize("dt must be positive".into()));
    }
    let evolve = |s: f64| {
        let u = expm(&(h * (-I * (s / hbar))));
        &u * &rho0 * u.adjoint()
    };
    let expect = |r: &CMat| trace(&(x * r));
    let deriv = (expect(&evolve(t + dt)) - expect(&evolve(t - dt))) / (2.0 * dt);
    let lie = crate::linalg::quantum_lie(h, x, hbar);
    let rhs = trace(&(lie * evolve(t)));
    Ok((deriv - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sphere_point, SpaceDescriptor};
    use crate::linalg::{pauli, spin_matrices};
    use crate::ode::linspace;

    #[test]
    fn spin_lift_matches_spin_matrices() {
        // the derivation of (sigma . c) / 2 is the spin-j matrix c . J
        let two_j = 5;
        let s = SpaceDescriptor::Spin { exponent: 5.0 }.build().unwrap();
        let [sx, sy, sz] = pauli();
        let h = (&sx * cr(0.3) + &sy * cr(-0.7) + &sz * cr(0.2)) * cr(0.5);
        let lifted = FiniteRepresentation::Spin { two_j }.hamiltonian(&s, &h, 1.0).unwrap();
        let [jx, jy, jz] = spin_matrices(two_j);
        let expect = jx * cr(0.3) + jy * cr(-0.7) + jz * cr(0.2);
        // monomial f_m carries J_z eigenvalue j - m, the same ordering
        assert!(crate::linalg::max_abs_diff(&lifted, &expect) < 1e-12);
    }

    #[test]
    fn fock_lift_is_exact() {
        let s = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let h = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(0.8)]);
        let flow = LinearHamiltonianFlow::constant(h, 1.0);
        let z0 = Point::new(vec![c(0.2, 0.1), c(1.0, 0.5)]);
        let tr = coherent_flow(&s, &flow, &z0, 0.0, &linspace(0.0, 3.0, 7), OdeOptions::with_rtol(1e-11)).unwrap();
        let d = verify_schrodinger_lift(&s, &FiniteRepresentation::Fock { cutoff: 40 }, &tr, &flow).unwrap();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn sphere_flow_stays_normalized() {
        let s = SpaceDescriptor::Spin { exponent: 2.0 }.build().unwrap();
        let flow = LinearHamiltonianFlow::time_dependent(|t| pauli()[0].clone() * cr(t.cos()), 1.0);
        let tr = coherent_flow(&s, &flow, &sphere_point(0.4, 0.1), 0.0, &linspace(0.0, 5.0, 6), OdeOptions::default()).unwrap();
        for p in &tr.points {
            assert!((norm(&p.coords) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let s = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let err = FiniteRepresentation::Fock { cutoff: 5 }
            .embed(&s, &Point::new(vec![cr(0.0), cr(2.0)]))
            .unwrap_err();
        assert!(matches!(err, CohError::Truncation(_)));
    }

    #[test]
    fn ehrenfest_on_qubit() {
        let [sx, _, sz] = pauli();
        let psi = CVec::from_vec(vec![cr(0.6), c(0.0, 0.8)]);
        let r = ehrenfest_residual(&QuantumState::Vector(psi), &sx, &sz, 0.4, 1e-3, 1.0).unwrap();
        assert!(r < 1e-6, "{r}");
        let bad = QuantumState::Vector(CVec::from_vec(vec![cr(1.0), cr(1.0)]));
        assert!(matches!(ehrenfest_residual(&bad, &sx, &sz, 0.0, 1e-3, 1.0), Err(CohError::Normalization(_))));
    }
}
