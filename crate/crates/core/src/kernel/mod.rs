//! Coherent spaces as computable kernels.
//!
//! A [`KernelSpace`] evaluates the coherent product `K(z, z')` on labelled
//! [`Point`]s. Most catalog spaces are sesquilinear (antilinear in the first
//! slot); the transpose-form spaces (`spin_t`, the classical limit and the
//! Heisenberg line bundle) are written bilinearly, and their Hermitian
//! product is `<z|z'> = K(conj z, z')`. Gram matrices, distances and
//! quantum spaces are always built from the Hermitian product.

mod catalog;
pub mod causal;
mod coherence;
pub mod moebius;
mod partials;
mod sampling;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::linalg::{c, cr, dot_bilinear, dot_conj, powi, CMat, C64, I};

pub use catalog::{icosahedron_vertices, DeBrangesFunction, SpaceDescriptor};
pub use coherence::{
    check_coherence, check_coherent_map, distance, gram_matrix, gram_matrix_threaded,
    CoherentMapCheck, PsdVerdict, DEFAULT_PSD_TOL,
};
pub use partials::ProductPartials;
pub use sampling::sample_points;

/// Residual allowed on constraint equations such as `|z*z - 1|`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// A label in `Z`: complex coordinates plus an optional projective
/// multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PointRepr", into = "PointRepr")]
pub struct Point {
    pub coords: Vec<C64>,
    pub multiplier: Option<C64>,
}

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point {
            coords,
            multiplier: None,
        }
    }

    pub fn with_multiplier(coords: Vec<C64>, multiplier: C64) -> Self {
        Point {
            coords,
            multiplier: Some(multiplier),
        }
    }

    pub fn real(coords: &[f64]) -> Self {
        Point::new(coords.iter().map(|&x| cr(x)).collect())
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Self {
        Point::new(pairs.iter().map(|p| c(p[0], p[1])).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Componentwise complex conjugate (multiplier included).
    pub fn conj(&self) -> Point {
        Point {
            coords: self.coords.iter().map(|z| z.conj()).collect(),
            multiplier: self.multiplier.map(|m| m.conj()),
        }
    }

    /// Scalar multiplication of a projective point (acts on the multiplier).
    pub fn scaled(&self, lambda: C64) -> Point {
        Point {
            coords: self.coords.clone(),
            multiplier: Some(self.multiplier.unwrap_or(cr(1.0)) * lambda),
        }
    }

    pub(crate) fn max_abs_diff(&self, other: &Point) -> f64 {
        if self.coords.len() != other.coords.len() {
            return f64::INFINITY;
        }
        let m = match (self.multiplier, other.multiplier) {
            (None, None) => 0.0,
            (Some(a), Some(b)) => (a - b).norm(),
            _ => f64::INFINITY,
        };
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(m, f64::max)
    }
}

/// JSON form: either a bare array of `[re, im]` pairs or an object with a
/// multiplier.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Bare(Vec<[f64; 2]>),
    Projective {
        coords: Vec<[f64; 2]>,
        multiplier: [f64; 2],
    },
}

impl From<PointRepr> for Point {
    fn from(r: PointRepr) -> Self {
        match r {
            PointRepr::Bare(p) => Point::from_pairs(&p),
            PointRepr::Projective { coords, multiplier } => Point::with_multiplier(
                coords.iter().map(|p| c(p[0], p[1])).collect(),
                c(multiplier[0], multiplier[1]),
            ),
        }
    }
}

impl From<Point> for PointRepr {
    fn from(p: Point) -> Self {
        let coords = p.coords.iter().map(|z| [z.re, z.im]).collect();
        match p.multiplier {
            None => PointRepr::Bare(coords),
            Some(m) => PointRepr::Projective {
                coords,
                multiplier: [m.re, m.im],
            },
        }
    }
}

/// Finite point table with an explicit kernel table.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DiscreteTable {
    pub points: Vec<Point>,
    pub table: CMat,
}

impl DiscreteTable {
    fn index_of(&self, z: &Point) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.max_abs_diff(z) <= CONSTRAINT_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kernel {
    Trivial { dim: usize },
    Klauder { modes: usize },
    Spin { exponent: f64, bilinear: bool },
    Moebius,
    DeBranges(DeBrangesFunction),
    ClassicalLimit,
    Power { base: Box<KernelSpace>, n: u32 },
    EuclideanSubset { members: Vec<Point> },
    Discrete(Arc<DiscreteTable>),
    Heisenberg { modes: usize, hbar: f64 },
}

/// A coherent space: catalog kind plus everything needed to evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpace {
    pub(crate) descriptor: SpaceDescriptor,
    pub(crate) kernel: Kernel,
}

impl KernelSpace {
    pub fn descriptor(&self) -> &SpaceDescriptor {
        &self.descriptor
    }

    pub fn label_dim(&self) -> usize {
        match &self.kernel {
            Kernel::Trivial { dim } => *dim,
            Kernel::Klauder { modes } => modes + 1,
            Kernel::Spin { .. } | Kernel::Moebius | Kernel::ClassicalLimit => 2,
            Kernel::DeBranges(_) => 1,
            Kernel::Power { base, .. } => base.label_dim(),
            Kernel::EuclideanSubset { members } => members.first().map_or(0, |p| p.dim()),
            Kernel::Discrete(t) => t.points.first().map_or(0, |p| p.dim()),
            Kernel::Heisenberg { modes, .. } => *modes,
        }
    }

    /// Whether `K` is written bilinearly, so that `<z|z'> = K(conj z, z')`.
    pub fn is_bilinear(&self) -> bool {
        match &self.kernel {
            Kernel::Spin { bilinear, .. } => *bilinear,
            Kernel::ClassicalLimit | Kernel::Heisenberg { .. } => true,
            Kernel::Power { base, .. } => base.is_bilinear(),
            _ => false,
        }
    }

    /// `K(z, z) = 1` for every point.
    pub fn is_normalized(&self) -> bool {
        match &self.kernel {
            Kernel::Spin { .. } | Kernel::ClassicalLimit => true,
            Kernel::Power { base, .. } => base.is_normalized(),
            Kernel::Discrete(t) => (0..t.points.len()).all(|i| (t.table[(i, i)] - 1.0).norm() <= 1e-10),
            _ => false,
        }
    }

    /// Degree `e` of the scalar multiplication law `K(lambda z, z') = lambda^e K(z, z')`.
    pub fn projective_degree(&self) -> Option<i32> {
        match &self.kernel {
            Kernel::Heisenberg { .. } => Some(1),
            Kernel::Power { base, n } => base.projective_degree().map(|e| e * *n as i32),
            _ => None,
        }
    }

    /// Whether spin exponents are admissible (nonnegative integers) for the
    /// kernel and everything it is built from.
    pub fn is_admissible(&self) -> bool {
        match &self.kernel {
            Kernel::Spin { exponent, .. } => exponent.fract() == 0.0 && *exponent >= 0.0,
            Kernel::Power { base, .. } => base.is_admissible(),
            _ => true,
        }
    }

    pub fn hbar(&self) -> f64 {
        match &self.kernel {
            Kernel::Heisenberg { hbar, .. } => *hbar,
            Kernel::Power { base, .. } => base.hbar(),
            _ => 1.0,
        }
    }

    /// The conjugation `z -> conj z`. Identity on real discrete spaces.
    pub fn conjugate(&self, z: &Point) -> Point {
        z.conj()
    }

    /// Check the constraints of the space on a point.
    pub fn validate(&self, z: &Point) -> Result<()> {
        let dim = self.label_dim();
        if z.dim() != dim {
            return Err(CohError::invalid(format!(
                "label dimension {} != {}",
                z.dim(),
                dim
            )));
        }
        if z
            .coords
            .iter()
            .chain(z.multiplier.iter())
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(CohError::invalid("coordinates must be finite"));
        }
        match &self.kernel {
            Kernel::Heisenberg { .. } => match z.multiplier {
                None => Err(CohError::invalid("projective point needs a multiplier")),
                Some(m) if m.norm() == 0.0 => Err(CohError::invalid("multiplier must be nonzero")),
                Some(_) => Ok(()),
            },
            _ if z.multiplier.is_some() => Err(CohError::invalid(
                "multiplier is only allowed on projective spaces",
            )),
            Kernel::Spin { .. } | Kernel::ClassicalLimit => {
                let r = dot_conj(&z.coords, &z.coords).re;
                if (r - 1.0).abs() > CONSTRAINT_TOL {
                    Err(CohError::invalid(format!(
                        "unit sphere |z*z - 1| = {:e} > {:e}",
                        (r - 1.0).abs(),
                        CONSTRAINT_TOL
                    )))
                } else {
                    Ok(())
                }
            }
            Kernel::Moebius => {
                if z.coords[0].norm() > z.coords[1].norm() {
                    Ok(())
                } else {
                    Err(CohError::invalid("Moebius space requires |z1| > |z2|"))
                }
            }
            Kernel::Power { base, .. } => base.validate(z),
            Kernel::EuclideanSubset { members } => {
                if members.iter().any(|m| m.max_abs_diff(z) <= CONSTRAINT_TOL) {
                    Ok(())
                } else {
                    Err(CohError::invalid("point is not a member of the subset"))
                }
            }
            Kernel::Discrete(t) => t
                .index_of(z)
                .map(|_| ())
                .ok_or_else(|| CohError::invalid("point is not one of the discrete points")),
            Kernel::Trivial { .. } | Kernel::Klauder { .. } | Kernel::DeBranges(_) => Ok(()),
        }
    }

    /// The coherent product `K(z, z2)` as written for the space.
    pub fn eval(&self, z: &Point, z2: &Point) -> Result<C64> {
        self.validate(z)?;
        self.validate(z2)?;
        Ok(self.eval_unchecked(z, z2))
    }

    /// The Hermitian product `<z|z2>`.
    pub fn product(&self, z: &Point, z2: &Point) -> Result<C64> {
        self.validate(z)?;
        self.validate(z2)?;
        Ok(self.product_unchecked(z, z2))
    }

    pub(crate) fn product_unchecked(&self, z: &Point, z2: &Point) -> C64 {
        if self.is_bilinear() {
            self.eval_unchecked(&z.conj(), z2)
        } else {
            self.eval_unchecked(z, z2)
        }
    }

    pub(crate) fn eval_unchecked(&self, z: &Point, z2: &Point) -> C64 {
        let a = &z.coords;
        let b = &z2.coords;
        match &self.kernel {
            Kernel::Trivial { .. } => dot_conj(a, b),
            Kernel::Klauder { .. } => (a[0].conj() + b[0] + dot_conj(&a[1..], &b[1..])).exp(),
            Kernel::Spin { exponent, bilinear } => {
                let w = if *bilinear {
                    dot_bilinear(a, b)
                } else {
                    dot_conj(a, b)
                };
                spin_power(w, *exponent)
            }
            Kernel::Moebius => {
                let w = a[0].conj() * b[0] - a[1].conj() * b[1];
                w.inv()
            }
            Kernel::DeBranges(e) => e.kernel(a[0], b[0]),
            Kernel::ClassicalLimit => {
                let d = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (y - x.conj()).norm())
                    .fold(0.0, f64::max);
                if d <= CONSTRAINT_TOL {
                    cr(1.0)
                } else {
                    cr(0.0)
                }
            }
            Kernel::Power { base, n } => powi(base.eval_unchecked(z, z2), *n),
            Kernel::EuclideanSubset { .. } => dot_conj(a, b),
            Kernel::Discrete(t) => match (t.index_of(z), t.index_of(z2)) {
                (Some(i), Some(j)) => t.table[(i, j)],
                _ => cr(f64::NAN),
            },
            Kernel::Heisenberg { hbar, .. } => {
                let l = z.multiplier.unwrap_or(cr(1.0));
                let l2 = z2.multiplier.unwrap_or(cr(1.0));
                l * l2 * (dot_bilinear(a, b) / *hbar).exp()
            }
        }
    }

    /// Linear adjoint of a label-space matrix `A`, when the space supports
    /// linear coherent maps: `A^T` for bilinear kernels, `J A* J` for the
    /// Moebius form `J = diag(1, -1)`, `A*` for the sesquilinear ones, and
    /// `1 (+) U*` for Klauder maps of block form `1 (+) U`.
    pub fn linear_adjoint(&self, a: &CMat) -> Option<CMat> {
        let d = self.label_dim();
        if a.nrows() != d || a.ncols() != d {
            return None;
        }
        match &self.kernel {
            Kernel::Moebius => {
                let j = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(1.0), cr(-1.0)]));
                Some(&j * a.adjoint() * &j)
            }
            Kernel::Klauder { .. } => {
                let block_ok = (a[(0, 0)] - 1.0).norm() < 1e-14
                    && (1..d).all(|k| a[(0, k)].norm() < 1e-14 && a[(k, 0)].norm() < 1e-14);
                block_ok.then(|| a.adjoint())
            }
            Kernel::DeBranges(_) | Kernel::ClassicalLimit => None,
            Kernel::Power { base, .. } => base.linear_adjoint(a),
            _ if self.is_bilinear() => Some(a.transpose()),
            _ => Some(a.adjoint()),
        }
    }

    /// Apply a label-space matrix to a point (multiplier untouched).
    pub fn apply_linear(&self, a: &CMat, z: &Point) -> Point {
        let v = nalgebra::DVector::from_column_slice(&z.coords);
        let w = a * v;
        Point {
            coords: w.iter().cloned().collect(),
            multiplier: z.multiplier,
        }
    }

    /// The points of a discrete space, if it is one.
    pub fn discrete_points(&self) -> Option<&[Point]> {
        match &self.kernel {
            Kernel::Discrete(t) => Some(&t.points),
            Kernel::EuclideanSubset { members } => Some(members),
            _ => None,
        }
    }
}

/// `w^n`; exact integer power for integral exponents, principal branch
/// otherwise.
pub(crate) fn spin_power(w: C64, exponent: f64) -> C64 {
    if exponent.fract() == 0.0 && exponent >= 0.0 && exponent <= u32::MAX as f64 {
        powi(w, exponent as u32)
    } else if w.norm() == 0.0 {
        cr(0.0)
    } else {
        (w.ln() * exponent).exp()
    }
}

/// Point on the unit sphere of `C^2` from polar angle, azimuth and phase.
pub fn sphere_point(theta: f64, phi: f64) -> Point {
    Point::new(vec![
        cr((theta / 2.0).cos()),
        (I * phi).exp() * (theta / 2.0).sin(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(json: &str) -> KernelSpace {
        serde_json::from_str::<SpaceDescriptor>(json)
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn trivial_orthogonal() {
        let s = space(r#"{"kind":"trivial","dim":2}"#);
        let v = s.eval(&Point::real(&[1.0, 0.0]), &Point::real(&[0.0, 1.0])).unwrap();
        assert_eq!(v, cr(0.0));
    }

    #[test]
    fn klauder_origin() {
        let s = space(r#"{"kind":"klauder","modes":1}"#);
        let o = Point::real(&[0.0, 0.0]);
        assert_eq!(s.eval(&o, &o).unwrap(), cr(1.0));
    }

    #[test]
    fn spin_unit_overlap() {
        let s = space(r#"{"kind":"spin","exponent":2}"#);
        let p = Point::real(&[1.0, 0.0]);
        assert_eq!(s.eval(&p, &p).unwrap(), cr(1.0));
    }

    #[test]
    fn sphere_constraint_is_enforced() {
        let s = space(r#"{"kind":"spin","exponent":1}"#);
        let err = s.eval(&Point::real(&[1.0, 0.1]), &Point::real(&[1.0, 0.0]));
        match err {
            Err(CohError::InvalidPoint { constraint }) => assert!(constraint.contains("unit sphere")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn moebius_constraint() {
        let s = space(r#"{"kind":"moebius"}"#);
        assert!(s.validate(&Point::real(&[0.5, 0.7])).is_err());
        assert!(s.validate(&Point::real(&[1.0, 0.7])).is_ok());
    }

    #[test]
    fn heisenberg_needs_nonzero_multiplier() {
        let s = space(r#"{"kind":"heisenberg","modes":1}"#);
        assert!(s.validate(&Point::real(&[0.3])).is_err());
        assert!(s
            .validate(&Point::with_multiplier(vec![cr(0.3)], cr(0.0)))
            .is_err());
        assert!(s
            .validate(&Point::with_multiplier(vec![cr(0.3)], cr(2.0)))
            .is_ok());
    }

    #[test]
    fn power_kernel_is_exact_power() {
        let base = space(r#"{"kind":"klauder","modes":1}"#);
        let z = Point::new(vec![c(0.1, 0.2), c(-0.3, 0.4)]);
        let w = Point::new(vec![c(0.5, -0.1), c(0.2, 0.7)]);
        let k = base.eval(&z, &w).unwrap();
        for n in 1..=3u32 {
            let p = space(&format!(
                r#"{{"kind":"power","base":{{"kind":"klauder","modes":1}},"n":{n}}}"#
            ));
            let kn = p.eval(&z, &w).unwrap();
            let mut expect = cr(1.0);
            for _ in 0..n {
                expect *= k;
            }
            assert_eq!(kn, expect);
        }
    }

    #[test]
    fn point_json_round_trip() {
        let p = Point::with_multiplier(vec![c(1.0, 2.0)], c(0.5, -0.5));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), p);
        let q = Point::from_pairs(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(serde_json::to_string(&q).unwrap(), "[[1.0,0.0],[0.0,1.0]]");
    }

    #[test]
    fn linear_adjoints() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, 3.0), c(4.0, 0.0)]);
        let t = space(r#"{"kind":"trivial","dim":2}"#);
        assert_eq!(t.linear_adjoint(&a).unwrap(), a.adjoint());
        let st = space(r#"{"kind":"spin_t","exponent":2}"#);
        assert_eq!(st.linear_adjoint(&a).unwrap(), a.transpose());
        let k = space(r#"{"kind":"klauder","modes":1}"#);
        assert!(k.linear_adjoint(&a).is_none());
    }
}
