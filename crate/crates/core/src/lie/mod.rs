//! Lie *-algebras, their states, and Ehrenfest dynamics of uncertain values.
//!
//! Elements are coefficient vectors over a fixed basis `X_a`. Matrix
//! realizations use `X |> Y = (i/hbar)[X, Y]`; function realizations on
//! phase space use the negative Poisson bracket.

mod builtin;
mod evolve;

pub use builtin::{AlgebraSpec, Realization};
pub use evolve::{
    covariant_ehrenfest_residual, evolve_expectations, expectation_csv, observability, translation_field, ExpectationTable,
    ObservabilityReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::linalg::{c, cr, hermitian_eigen, max_abs_diff, trace, CMat, CVec, C64};

/// Threshold for the structure-constant axiom checks.
pub const AXIOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convention {
    /// `X |> Y = (i/hbar)(XY - YX)` in matrix realizations.
    Quantum { hbar: f64 },
    /// `f |> g = -{f, g}` on phase-space functions.
    NegativePoisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieStarAlgebra {
    names: Vec<String>,
    /// `C[a][b][c]` flattened as `(a dim + b) dim + c`.
    structure: Vec<C64>,
    /// `(sum x_a X_a)* = sum_b (J conj(x))_b X_b`.
    involution: CMat,
    unit_index: usize,
    convention: Convention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub involution: f64,
    pub unit: f64,
    pub passed: bool,
}

impl LieStarAlgebra {
    /// Builds from sparse structure constants `(a, b, c, C[a][b][c])`; the
    /// axioms must hold to [`AXIOM_TOL`].
    pub fn new(
        names: Vec<String>,
        triples: &[(usize, usize, usize, C64)],
        involution: CMat,
        unit_index: usize,
        convention: Convention,
    ) -> Result<Self> {
        let dim = names.len();
        if dim == 0 || unit_index >= dim || involution.shape() != (dim, dim) {
            return Err(CohError::Dimension(format!(
                "algebra of dimension {dim} needs a {dim}x{dim} involution and unit index < {dim}"
            )));
        }
        let mut structure = vec![cr(0.0); dim * dim * dim];
        for &(a, b, k, v) in triples {
            if a >= dim || b >= dim || k >= dim {
                return Err(CohError::Dimension(format!("structure index ({a}, {b}, {k}) out of range")));
            }
            structure[(a * dim + b) * dim + k] += v;
        }
        let alg = LieStarAlgebra {
            names,
            structure,
            involution,
            unit_index,
            convention,
        };
        let report = alg.check_axioms();
        if !report.passed {
            return Err(CohError::Config(format!("algebra axioms fail: {report:?}")));
        }
        Ok(alg)
    }

    /// Structure constants of the matrix algebra spanned by `mats` under
    /// `(i/hbar)[X, Y]`; the span must be closed under the product and `*`.
    pub fn from_matrices(names: Vec<String>, mats: &[CMat], unit_index: usize, hbar: f64) -> Result<Self> {
        let dim = mats.len();
        if names.len() != dim || dim == 0 {
            return Err(CohError::Dimension("one name per basis matrix".into()));
        }
        let d = mats[0].nrows();
        if mats.iter().any(|m| m.shape() != (d, d)) {
            return Err(CohError::Dimension("basis matrices must be square and equal-sized".into()));
        }
        if max_abs_diff(&mats[unit_index], &CMat::identity(d, d)) > AXIOM_TOL {
            return Err(CohError::Config("the unit must be represented by the identity".into()));
        }
        let cols = CMat::from_fn(d * d, dim, |r, a| mats[a][(r % d, r / d)]);
        let svd = cols.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * smax).count();
        let pinv = svd
            .pseudo_inverse(1e-12 * smax)
            .map_err(|e| CohError::Numerical(e.to_string()))?;
        if rank < dim {
            return Err(CohError::Config("basis matrices are linearly dependent".into()));
        }
        let expand = |m: &CMat, what: &str| -> Result<CVec> {
            let v = CVec::from_iterator(d * d, (0..d * d).map(|r| m[(r % d, r / d)]));
            let x = &pinv * &v;
            let back = &cols * &x;
            let res = (&back - &v).norm();
            if res > 1e-10 * (1.0 + v.norm()) {
                return Err(CohError::NonClosing(format!("{what} leaves the span (residual {res:e})")));
            }
            Ok(x.map(|z| {
                let snap = |u: f64| if (u - u.round()).abs() < 1e-13 * (1.0 + u.abs()) { u.round() } else { u };
                c(snap(z.re), snap(z.im))
            }))
        };
        let mut triples = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                let p = crate::linalg::quantum_lie(&mats[a], &mats[b], hbar);
                let x = expand(&p, &format!("{} |> {}", names[a], names[b]))?;
                for (k, v) in x.iter().enumerate() {
                    if v.norm() > 0.0 {
                        triples.push((a, b, k, *v));
                    }
                }
            }
        }
        let mut inv = CMat::zeros(dim, dim);
        for a in 0..dim {
            let x = expand(&mats[a].adjoint(), &format!("{}*", names[a]))?;
            inv.set_column(a, &x);
        }
        LieStarAlgebra::new(names, &triples, inv, unit_index, Convention::Quantum { hbar })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn unit_index(&self) -> usize {
        self.unit_index
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn involution(&self) -> &CMat {
        &self.involution
    }

    pub fn structure(&self, a: usize, b: usize, k: usize) -> C64 {
        let d = self.dim();
        self.structure[(a * d + b) * d + k]
    }

    /// Nonzero structure constants `(a, b, c, C[a][b][c])`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, C64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    let v = self.structure(a, b, k);
                    if v.norm() != 0.0 {
                        out.push((a, b, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn basis(&self, a: usize) -> Vec<C64> {
        let mut e = vec![cr(0.0); self.dim()];
        e[a] = cr(1.0);
        e
    }

    pub fn unit(&self) -> Vec<C64> {
        self.basis(self.unit_index)
    }

    pub fn star(&self, x: &[C64]) -> Vec<C64> {
        let v = CVec::from_iterator(x.len(), x.iter().map(|z| z.conj()));
        (&self.involution * v).iter().cloned().collect()
    }

    /// Matrix of `Y -> X |> Y` on coefficient vectors.
    pub fn ad(&self, x: &[C64]) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for a in 0..d {
            if x[a].norm() == 0.0 {
                continue;
            }
            for b in 0..d {
                for k in 0..d {
                    m[(k, b)] += x[a] * self.structure(a, b, k);
                }
            }
        }
        m
    }

    pub fn check_axioms(&self) -> AxiomReport {
        let d = self.dim();
        let mut anti: f64 = 0.0;
        let mut jac: f64 = 0.0;
        let mut inv: f64 = 0.0;
        let mut unit: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    anti = anti.max((self.structure(a, b, k) + self.structure(b, a, k)).norm());
                }
            }
        }
        for a in 0..d {
            let ea = self.basis(a);
            for b in 0..d {
                let eb = self.basis(b);
                let ab = lie_product(self, &ea, &eb);
                for k in 0..d {
                    let ek = self.basis(k);
                    let t1 = lie_product(self, &ea, &lie_product(self, &eb, &ek));
                    let t2 = lie_product(self, &eb, &lie_product(self, &ek, &ea));
                    let t3 = lie_product(self, &ek, &ab);
                    for i in 0..d {
                        jac = jac.max((t1[i] + t2[i] + t3[i]).norm());
                    }
                }
                let lhs = self.star(&ab);
                let rhs = lie_product(self, &self.star(&ea), &self.star(&eb));
                for i in 0..d {
                    inv = inv.max((lhs[i] - rhs[i]).norm());
                }
            }
            let au = lie_product(self, &ea, &self.unit());
            unit = unit.max(au.iter().map(|z| z.norm()).fold(0.0, f64::max));
            let ss = self.star(&self.star(&ea));
            for i in 0..d {
                inv = inv.max((ss[i] - ea[i]).norm());
            }
        }
        let su = self.star(&self.unit());
        let uu = self.unit();
        for i in 0..d {
            unit = unit.max((su[i] - uu[i]).norm());
        }
        AxiomReport {
            antisymmetry: anti,
            jacobi: jac,
            involution: inv,
            unit,
            passed: anti <= AXIOM_TOL && jac <= AXIOM_TOL && inv <= AXIOM_TOL && unit <= AXIOM_TOL,
        }
    }
}

/// `x |> y` by contraction with the structure constants.
pub fn lie_product(alg: &LieStarAlgebra, x: &[C64], y: &[C64]) -> Vec<C64> {
    let d = alg.dim();
    let mut out = vec![cr(0.0); d];
    for a in 0..d {
        if x[a].norm() == 0.0 {
            continue;
        }
        for b in 0..d {
            let xy = x[a] * y[b];
            if xy.norm() == 0.0 {
                continue;
            }
            for k in 0..d {
                out[k] += xy * alg.structure(a, b, k);
            }
        }
    }
    out
}

/// A state `<X, Y> = x* S y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraState {
    form: CMat,
    unit_index: usize,
}

pub const STATE_TOL: f64 = 1e-10;

impl AlgebraState {
    pub fn new(alg: &LieStarAlgebra, form: CMat) -> Result<Self> {
        let d = alg.dim();
        if form.shape() != (d, d) {
            return Err(CohError::Dimension(format!("state form must be {d}x{d}")));
        }
        let herm = max_abs_diff(&form, &form.adjoint());
        let scale = crate::linalg::spectral_norm(&form).max(1.0);
        if herm > STATE_TOL * scale {
            return Err(CohError::StatePositivity(format!("form is not Hermitian (defect {herm:e})")));
        }
        let (ev, _) = hermitian_eigen(&crate::linalg::hermitize(&form))?;
        let min = ev.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL * scale {
            return Err(CohError::StatePositivity(format!("form has eigenvalue {min:e}")));
        }
        let u = alg.unit_index();
        if (form[(u, u)] - 1.0).norm() > STATE_TOL {
            return Err(CohError::Normalization(format!("<1,1> = {}", form[(u, u)])));
        }
        Ok(AlgebraState { form, unit_index: u })
    }

    pub fn form(&self) -> &CMat {
        &self.form
    }

    /// `<x, y> = x* S y`.
    pub fn pair(&self, x: &[C64], y: &[C64]) -> C64 {
        let d = x.len();
        let mut s = cr(0.0);
        for a in 0..d {
            for b in 0..d {
                s += x[a].conj() * self.form[(a, b)] * y[b];
            }
        }
        s
    }
}

/// `<1, X>`.
pub fn uncertain_value(state: &AlgebraState, x: &[C64]) -> C64 {
    let d = x.len();
    (0..d).map(|b| state.form[(state.unit_index, b)] * x[b]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uncertainty {
    pub sigma: f64,
    /// Negative variance rounded up to zero, if any.
    pub clamped: f64,
}

/// Negative variances beyond this are reported as a positivity failure.
pub const VARIANCE_FLOOR: f64 = -1e-8;

/// `sqrt(<X, X> - |<X>|^2)`.
pub fn uncertainty(state: &AlgebraState, x: &[C64]) -> Result<Uncertainty> {
    let xx = state.pair(x, x).re;
    let m = uncertain_value(state, x).norm_sqr();
    let v = xx - m;
    if v < VARIANCE_FLOOR * xx.abs().max(1.0) {
        return Err(CohError::StatePositivity(format!("variance {v:e} is negative")));
    }
    Ok(if v < 0.0 {
        Uncertainty { sigma: 0.0, clamped: -v }
    } else {
        Uncertainty {
            sigma: v.sqrt(),
            clamped: 0.0,
        }
    })
}

/// A density operator with trace one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    rho: CMat,
}

pub const DENSITY_TOL: f64 = 1e-12;

impl DensityState {
    pub fn new(rho: CMat) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return Err(CohError::Dimension("density matrix must be square".into()));
        }
        let herm = max_abs_diff(&rho, &rho.adjoint());
        if herm > DENSITY_TOL {
            return Err(CohError::StatePositivity(format!("density matrix is not Hermitian (defect {herm:e})")));
        }
        let tr = trace(&rho);
        if (tr - 1.0).norm() > DENSITY_TOL {
            return Err(CohError::Normalization(format!("trace(rho) = {tr}")));
        }
        let (ev, _) = hermitian_eigen(&rho)?;
        let min = ev.last().copied().unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(CohError::StatePositivity(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(DensityState { rho })
    }

    pub fn pure(psi: &CVec) -> Result<Self> {
        DensityState::new(psi * psi.adjoint())
    }

    /// Classical probability vector as a diagonal density.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        DensityState::new(CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&v| cr(v)))))
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }
}

/// Matrix for a coefficient vector.
pub(crate) fn represent(rep: &[CMat], x: &[C64]) -> CMat {
    let d = rep[0].nrows();
    let mut m = CMat::zeros(d, d);
    for (xa, ma) in x.iter().zip(rep) {
        if xa.norm() != 0.0 {
            m += ma * *xa;
        }
    }
    m
}

/// `S[a][b] = Tr(rep(X_b) rho rep(X_a)*)`.
pub fn state_from_density(alg: &LieStarAlgebra, rep: &[CMat], state: &DensityState) -> Result<AlgebraState> {
    if rep.len() != alg.dim() {
        return Err(CohError::Dimension(format!(
            "{} representation matrices for an algebra of dimension {}",
            rep.len(),
            alg.dim()
        )));
    }
    let n = state.rho.nrows();
    if rep.iter().any(|m| m.shape() != (n, n)) {
        return Err(CohError::Dimension(format!("representation matrices must be {n}x{n}")));
    }
    let d = alg.dim();
    let left: Vec<CMat> = rep.iter().map(|m| &state.rho * m.adjoint()).collect();
    let form = CMat::from_fn(d, d, |a, b| trace(&(&rep[b] * &left[a])));
    AlgebraState::new(alg, form)
}

/// A random *-invariant element `(y + y*) / 2` with Gaussian `y`.
pub fn random_hermitian_element<R: rand::Rng + ?Sized>(alg: &LieStarAlgebra, rng: &mut R) -> Vec<C64> {
    use rand_distr::{Distribution, StandardNormal};
    let y: Vec<C64> = (0..alg.dim())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        })
        .collect();
    let ys = alg.star(&y);
    y.iter().zip(&ys).map(|(a, b)| (a + b) * 0.5).collect()
}
