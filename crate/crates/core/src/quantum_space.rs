//! Finite quantum spaces from sampled coherent states.
//!
//! The Gram matrix `G = U diag(lambda) U*` of the sampled labels is factored
//! as `G = B* B` with `B = diag(lambda)^(1/2) U*` on the retained eigenvalues,
//! so column `i` of `B` holds the coordinates of `|z_i>` in an orthonormal
//! basis of the sampled span.

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::io::JsonMatrix;
use crate::kernel::{gram_matrix, KernelSpace, Point, PsdVerdict, SpaceDescriptor, CONSTRAINT_TOL};
use crate::linalg::{cr, hermitian_eigen, spectral_norm, CMat, CVec, C64};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QuantumBasis {
    space: KernelSpace,
    points: Vec<Point>,
    gram: CMat,
    /// `r x n`, `gram = factor* factor`.
    factor: CMat,
    /// `n x r` retained eigenvectors.
    vectors: CMat,
    /// Retained eigenvalues, descending.
    retained: Vec<f64>,
    eigenvalues: Vec<f64>,
    truncation_tol: f64,
}

/// Builds the quantum space spanned by `points`.
pub fn build_quantum_space(space: &KernelSpace, points: &[Point], tol: f64) -> Result<QuantumBasis> {
    if points.is_empty() {
        return Err(CohError::Precondition("quantum space needs at least one point".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CohError::Config(format!("truncation tolerance must lie in (0, 1), got {tol}")));
    }
    let gram = gram_matrix(space, points)?;
    let (eigenvalues, u) = hermitian_eigen(&gram)?;
    let verdict = PsdVerdict::from_eigenvalues(&eigenvalues, tol);
    if !verdict.passed {
        return Err(CohError::KernelNotPsd {
            min_eigenvalue: verdict.min_eigenvalue,
            tolerance: tol,
        });
    }
    let lmax = eigenvalues[0];
    let rank = if lmax > 0.0 {
        eigenvalues.iter().take_while(|&&e| e > tol * lmax).count()
    } else {
        0
    };
    let vectors = u.columns(0, rank).into_owned();
    let retained: Vec<f64> = eigenvalues[..rank].to_vec();
    let mut factor = vectors.adjoint();
    for (r, &l) in retained.iter().enumerate() {
        let s = l.sqrt();
        factor.row_mut(r).iter_mut().for_each(|x| *x *= s);
    }
    Ok(QuantumBasis {
        space: space.clone(),
        points: points.to_vec(),
        gram,
        factor,
        vectors,
        retained,
        eigenvalues,
        truncation_tol: tol,
    })
}

impl QuantumBasis {
    pub fn space(&self) -> &KernelSpace {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    pub fn rank(&self) -> usize {
        self.retained.len()
    }

    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }

    /// All Gram eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `||gram - B* B||_2 / ||gram||_2`.
    pub fn reconstruction_error(&self) -> f64 {
        let r = &self.gram - self.factor.adjoint() * &self.factor;
        spectral_norm(&r) / spectral_norm(&self.gram).max(f64::MIN_POSITIVE)
    }

    pub fn index_of(&self, z: &Point) -> Option<usize> {
        self.points.iter().position(|p| p.max_abs_diff(z) <= CONSTRAINT_TOL)
    }

    /// Coordinates of `sum alpha_k |y_k>`; every label must be a basis point.
    pub fn embed_state(&self, s: &SpanState) -> Result<CVec> {
        s.check()?;
        let mut v = CVec::zeros(self.rank());
        for (k, (a, y)) in s.coefficients.iter().zip(&s.labels).enumerate() {
            let i = self.index_of(y).ok_or(CohError::OutOfSpan { index: k })?;
            v += self.factor.column(i) * *a;
        }
        Ok(v)
    }

    /// Least-squares coordinates of `|w>` for an arbitrary valid label, and
    /// the squared relative leak `(K(w,w) - |c|^2) / K(w,w)` of the
    /// component outside the sampled span.
    pub fn project(&self, w: &Point) -> Result<(CVec, f64)> {
        self.space.validate(w)?;
        let k = CVec::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| self.space.product_unchecked(p, w)),
        );
        let mut coords = self.vectors.adjoint() * k;
        for (r, &l) in self.retained.iter().enumerate() {
            coords[r] /= l.sqrt();
        }
        let kww = self.space.product_unchecked(w, w).re;
        let leak = if kww > 0.0 {
            ((kww - coords.norm_squared()) / kww).max(0.0)
        } else {
            0.0
        };
        Ok((coords, leak))
    }

    /// `B+ = U_r diag(lambda)^(-1/2)`, the pseudo-inverse of the factor.
    pub fn factor_pinv(&self) -> CMat {
        let mut p = self.vectors.clone();
        for (r, &l) in self.retained.iter().enumerate() {
            let s = 1.0 / l.sqrt();
            p.column_mut(r).iter_mut().for_each(|x| *x *= s);
        }
        p
    }

    pub fn to_json(&self) -> QuantumBasisJson {
        QuantumBasisJson {
            space: self.space.descriptor().clone(),
            points: self.points.clone(),
            tol: self.truncation_tol,
            rank: self.rank(),
            eigenvalues: self.eigenvalues.clone(),
            gram: JsonMatrix::from_matrix(&self.gram),
            factor: JsonMatrix::from_matrix(&self.factor),
        }
    }
}

/// Serialized quantum basis. Reading it back rebuilds the factorization
/// from `space`, `points` and `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumBasisJson {
    pub space: SpaceDescriptor,
    pub points: Vec<Point>,
    pub tol: f64,
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub gram: JsonMatrix,
    pub factor: JsonMatrix,
}

impl QuantumBasisJson {
    pub fn rebuild(&self) -> Result<QuantumBasis> {
        let qb = build_quantum_space(&self.space.build()?, &self.points, self.tol)?;
        if qb.rank() != self.rank {
            return Err(CohError::Config(format!(
                "stored rank {} differs from rebuilt rank {}",
                self.rank,
                qb.rank()
            )));
        }
        Ok(qb)
    }
}

/// `sum_k alpha_k |y_k>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanState {
    pub coefficients: Vec<C64>,
    pub labels: Vec<Point>,
}

impl SpanState {
    pub fn coherent(z: Point) -> Self {
        SpanState {
            coefficients: vec![cr(1.0)],
            labels: vec![z],
        }
    }

    fn check(&self) -> Result<()> {
        if self.labels.is_empty() || self.labels.len() != self.coefficients.len() {
            return Err(CohError::Dimension(format!(
                "span state has {} coefficients and {} labels",
                self.coefficients.len(),
                self.labels.len()
            )));
        }
        Ok(())
    }
}

/// `sum_jk conj(alpha_j) alpha'_k <y_j|y'_k>`.
pub fn inner_product(space: &KernelSpace, a: &SpanState, b: &SpanState) -> Result<C64> {
    a.check()?;
    b.check()?;
    let mut acc = cr(0.0);
    for (x, y) in a.coefficients.iter().zip(&a.labels) {
        for (x2, y2) in b.coefficients.iter().zip(&b.labels) {
            acc += x.conj() * x2 * space.product(y, y2)?;
        }
    }
    Ok(acc)
}

/// First derivative `d/dt |u(t)>` of a coherent-state path.
pub struct DerivativeState<'a> {
    pub path: &'a dyn Fn(f64) -> Point,
    pub time: f64,
    /// Analytic `du/dt`; central differences of `path` are used otherwise.
    pub velocity: Option<&'a dyn Fn(f64) -> Vec<C64>>,
}

impl<'a> DerivativeState<'a> {
    pub fn new(path: &'a dyn Fn(f64) -> Point, time: f64) -> Self {
        DerivativeState {
            path,
            time,
            velocity: None,
        }
    }

    fn point(&self, space: &KernelSpace) -> Result<Point> {
        let p = (self.path)(self.time);
        space.validate(&p)?;
        Ok(p)
    }

    fn tangent(&self, space: &KernelSpace, h: f64) -> Result<(Vec<C64>, C64)> {
        if let Some(v) = self.velocity {
            return Ok((v(self.time), cr(0.0)));
        }
        let at = |s: f64| -> Result<Point> {
            let p = (self.path)(self.time + s);
            space.validate(&p)?;
            Ok(p)
        };
        let diff = |s: f64| -> Result<(Vec<C64>, C64)> {
            let (p, m) = (at(s)?, at(-s)?);
            let d = p
                .coords
                .iter()
                .zip(&m.coords)
                .map(|(a, b)| (a - b) / (2.0 * s))
                .collect();
            let dm = match (p.multiplier, m.multiplier) {
                (Some(a), Some(b)) => (a - b) / (2.0 * s),
                _ => cr(0.0),
            };
            Ok((d, dm))
        };
        let (d1, m1) = diff(h)?;
        let (d2, m2) = diff(h / 2.0)?;
        let v = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        Ok((v, (4.0 * m2 - m1) / 3.0))
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(CohError::StepSize(format!("finite-difference step must be positive, got {h}")))
    }
}

/// Richardson-extrapolated central difference over steps `(h, h/2)`.
fn richardson(f: &dyn Fn(f64) -> Result<C64>, h: f64) -> Result<C64> {
    let a = f(h)?;
    let b = f(h / 2.0)?;
    Ok((4.0 * b - a) / 3.0)
}

/// `<d/dt u(t) | d/ds v(s)>`.
pub fn derivative_inner(space: &KernelSpace, d1: &DerivativeState, d2: &DerivativeState, h: f64) -> Result<C64> {
    check_step(h)?;
    let (u, v) = (d1.point(space)?, d2.point(space)?);
    let (du, dmu) = d1.tangent(space, h)?;
    let (dv, dmv) = d2.tangent(space, h)?;
    if dmu.norm() == 0.0 && dmv.norm() == 0.0 {
        if let Some(p) = space.product_partials(&u, &v) {
            let mut acc = cr(0.0);
            for j in 0..du.len() {
                for k in 0..dv.len() {
                    acc += du[j].conj() * p.d12[(j, k)] * dv[k];
                }
            }
            return Ok(acc);
        }
    }
    derivative_inner_fd(space, d1, d2, h)
}

/// As [`derivative_inner`], always by finite differences of the product.
pub fn derivative_inner_fd(space: &KernelSpace, d1: &DerivativeState, d2: &DerivativeState, h: f64) -> Result<C64> {
    check_step(h)?;
    let f = |s: f64| -> Result<C64> {
        let at = |d: &DerivativeState, x: f64| -> Result<Point> {
            let p = (d.path)(d.time + x);
            space.validate(&p)?;
            Ok(p)
        };
        let (up, um) = (at(d1, s)?, at(d1, -s)?);
        let (vp, vm) = (at(d2, s)?, at(d2, -s)?);
        let p = |a: &Point, b: &Point| space.product_unchecked(a, b);
        Ok((p(&up, &vp) - p(&up, &vm) - p(&um, &vp) + p(&um, &vm)) / (4.0 * s * s))
    };
    richardson(&f, h)
}

/// `<z | d/dt u(t)>`.
pub fn mixed_inner(space: &KernelSpace, z: &Point, d: &DerivativeState, h: f64) -> Result<C64> {
    check_step(h)?;
    space.validate(z)?;
    let u = d.point(space)?;
    let (du, dm) = d.tangent(space, h)?;
    if dm.norm() == 0.0 {
        if let Some(p) = space.product_partials(z, &u) {
            return Ok(p.d2.iter().zip(&du).map(|(a, b)| a * b).sum());
        }
    }
    mixed_inner_fd(space, z, d, h)
}

pub fn mixed_inner_fd(space: &KernelSpace, z: &Point, d: &DerivativeState, h: f64) -> Result<C64> {
    check_step(h)?;
    space.validate(z)?;
    let f = |s: f64| -> Result<C64> {
        let up = (d.path)(d.time + s);
        let um = (d.path)(d.time - s);
        space.validate(&up)?;
        space.validate(&um)?;
        Ok((space.product_unchecked(z, &up) - space.product_unchecked(z, &um)) / (2.0 * s))
    };
    richardson(&f, h)
}
