//! Lifting coherent maps and their one-parameter groups to operators on a
//! sampled quantum space.

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::io::JsonMatrix;
use crate::kernel::{check_coherent_map, CoherentMapCheck, KernelSpace, Point};
use crate::linalg::{cr, expm, spectral_norm, CMat, I};
use crate::quantum_space::QuantumBasis;

pub const DEFAULT_QUANTIZE_TOL: f64 = 1e-8;
pub const DEFAULT_GENERATOR_STEP: f64 = 1e-3;

type PointMap<'a> = Box<dyn Fn(&Point) -> Result<Point> + 'a>;

/// A coherent map `A` with its adjoint `A*`.
pub struct CoherentMapSpec<'a> {
    pub forward: PointMap<'a>,
    pub adjoint: PointMap<'a>,
    /// Label-space matrix when `A` is linear on labels.
    pub linear_rep: Option<CMat>,
}

impl<'a> CoherentMapSpec<'a> {
    pub fn identity() -> Self {
        CoherentMapSpec {
            forward: Box::new(|z| Ok(z.clone())),
            adjoint: Box::new(|z| Ok(z.clone())),
            linear_rep: None,
        }
    }

    /// Linear map on labels; the adjoint is the space's linear adjoint.
    pub fn linear(space: &KernelSpace, a: CMat) -> Result<CoherentMapSpec<'static>> {
        let adj = space.linear_adjoint(&a).ok_or_else(|| {
            CohError::Domain(format!(
                "{}x{} matrix is not a linear coherent map of this space",
                a.nrows(),
                a.ncols()
            ))
        })?;
        let (s1, s2) = (space.clone(), space.clone());
        let a1 = a.clone();
        Ok(CoherentMapSpec {
            forward: Box::new(move |z| {
                let w = s1.apply_linear(&a1, z);
                s1.validate(&w)?;
                Ok(w)
            }),
            adjoint: Box::new(move |z| {
                let w = s2.apply_linear(&adj, z);
                s2.validate(&w)?;
                Ok(w)
            }),
            linear_rep: Some(a),
        })
    }

    /// `self . other`: apply `other` first.
    pub fn compose<'b>(&'b self, other: &'b CoherentMapSpec<'b>) -> CoherentMapSpec<'b> {
        CoherentMapSpec {
            forward: Box::new(move |z| (self.forward)(&(other.forward)(z)?)),
            adjoint: Box::new(move |z| (other.adjoint)(&(self.adjoint)(z)?)),
            linear_rep: match (&self.linear_rep, &other.linear_rep) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
        }
    }

    pub fn check(&self, space: &KernelSpace, samples: &[(Point, Point)], tol: f64) -> Result<CoherentMapCheck> {
        check_coherent_map(space, &*self.forward, &*self.adjoint, samples, tol)
    }
}

/// `Gamma(A)` in the orthonormal basis of a [`QuantumBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedOperator {
    pub matrix: CMat,
    /// Largest squared relative leak of an image state out of the span.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedOperatorJson {
    pub rank: usize,
    pub residual: f64,
    pub matrix: JsonMatrix,
}

impl QuantizedOperator {
    pub fn to_json(&self) -> QuantizedOperatorJson {
        QuantizedOperatorJson {
            rank: self.matrix.nrows(),
            residual: self.residual,
            matrix: JsonMatrix::from_matrix(&self.matrix),
        }
    }
}

/// Coordinates of `|A z_i>` for every basis point, with the leak of each.
fn image_coordinates(qb: &QuantumBasis, forward: &dyn Fn(&Point) -> Result<Point>, tol: f64) -> Result<(CMat, f64)> {
    let n = qb.points().len();
    let mut c = CMat::zeros(qb.rank(), n);
    let mut worst: f64 = 0.0;
    for (i, z) in qb.points().iter().enumerate() {
        let w = forward(z)?;
        let (v, leak) = qb.project(&w)?;
        if leak > tol {
            return Err(CohError::SpanEscape {
                residual: leak,
                tol,
                index: i,
            });
        }
        worst = worst.max(leak);
        c.set_column(i, &v);
    }
    Ok((c, worst))
}

/// `Gamma(A)` with `Gamma(A)|z_i> = |A z_i>` on the sampled span.
pub fn quantize_map(qb: &QuantumBasis, a: &CoherentMapSpec, tol: f64) -> Result<QuantizedOperator> {
    quantize_forward(qb, &*a.forward, tol)
}

fn quantize_forward(qb: &QuantumBasis, forward: &dyn Fn(&Point) -> Result<Point>, tol: f64) -> Result<QuantizedOperator> {
    let (c, residual) = image_coordinates(qb, forward, tol)?;
    Ok(QuantizedOperator {
        matrix: c * qb.factor_pinv(),
        residual,
    })
}

/// `||Gamma(A B) - Gamma(A) Gamma(B)||_2 / (1 + ||Gamma(A B)||_2)`.
pub fn check_homomorphism(qb: &QuantumBasis, a: &CoherentMapSpec, b: &CoherentMapSpec, tol: f64) -> Result<f64> {
    let ga = quantize_map(qb, a, tol)?;
    let gb = quantize_map(qb, b, tol)?;
    let gab = quantize_map(qb, &a.compose(b), tol)?;
    let d = &gab.matrix - &ga.matrix * &gb.matrix;
    Ok(spectral_norm(&d) / (1.0 + spectral_norm(&gab.matrix)))
}

/// `||Gamma* Gamma - 1||_2`; zero for isometric `Gamma` in the orthonormal
/// basis of the span.
pub fn unitarity_defect(op: &QuantizedOperator) -> f64 {
    let n = op.matrix.nrows();
    spectral_norm(&(op.matrix.adjoint() * &op.matrix - CMat::identity(n, n)))
}

/// A one-parameter group `s -> exp(i s X)` acting on labels.
pub struct GeneratorSpec<'a> {
    pub flow: Box<dyn Fn(f64, &Point) -> Result<Point> + 'a>,
}

impl<'a> GeneratorSpec<'a> {
    /// `z -> exp(i s X) z` for a label-space matrix `X`.
    pub fn linear(space: &KernelSpace, x: CMat) -> GeneratorSpec<'static> {
        let s = space.clone();
        GeneratorSpec {
            flow: Box::new(move |t, z| {
                let w = s.apply_linear(&expm(&(&x * (I * t))), z);
                s.validate(&w)?;
                Ok(w)
            }),
        }
    }

    pub fn zero() -> Self {
        GeneratorSpec {
            flow: Box::new(|_, z| Ok(z.clone())),
        }
    }
}

/// `dGamma(X)` from central differences `(Gamma(e^{isX}) - Gamma(e^{-isX})) / 2is`
/// extrapolated over `(s, s/2)`. The extrapolation is repeated over
/// `(s/2, s/4)`; the two estimates must agree to `100 tol`.
pub fn generator_matrix(qb: &QuantumBasis, x: &GeneratorSpec, s: f64, tol: f64) -> Result<QuantizedOperator> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(CohError::StepSize(format!("generator step must be positive, got {s}")));
    }
    let mut residual: f64 = 0.0;
    let mut central = |h: f64| -> Result<CMat> {
        let p = quantize_forward(qb, &|z| (x.flow)(h, z), tol)?;
        let m = quantize_forward(qb, &|z| (x.flow)(-h, z), tol)?;
        residual = residual.max(p.residual).max(m.residual);
        Ok((p.matrix - m.matrix) / (I * (2.0 * h)))
    };
    let g1 = central(s)?;
    let g2 = central(s / 2.0)?;
    let g4 = central(s / 4.0)?;
    let r1 = (&g2 * cr(4.0) - &g1) / cr(3.0);
    let r2 = (&g4 * cr(4.0) - &g2) / cr(3.0);
    let diff = spectral_norm(&(&r1 - &r2));
    let scale = 1.0 + spectral_norm(&r2);
    if diff > 100.0 * tol * scale {
        return Err(CohError::StepSize(format!(
            "extrapolated generator estimates differ by {diff:e} at step {s:e}; reduce the step"
        )));
    }
    Ok(QuantizedOperator {
        matrix: r2,
        residual,
    })
}

/// `||Gamma(e^{i s X}) - exp(i s dGamma(X))||_2`.
pub fn exp_consistency(qb: &QuantumBasis, x: &GeneratorSpec, generator: &QuantizedOperator, s: f64, tol: f64) -> Result<f64> {
    let g = quantize_forward(qb, &|z| (x.flow)(s, z), tol)?;
    let e = expm(&(&generator.matrix * (I * s)));
    Ok(spectral_norm(&(g.matrix - e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SpaceDescriptor;
    use crate::linalg::{hermitian_eigen, max_abs_diff};
    use crate::quantum_space::build_quantum_space;

    #[test]
    fn identity_quantizes_to_identity() {
        let s = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let pts: Vec<Point> = (0..5)
            .map(|k| Point::new(vec![cr(0.1 * k as f64), cr(0.5 - 0.2 * k as f64)]))
            .collect();
        let qb = build_quantum_space(&s, &pts, 1e-10).unwrap();
        let g = quantize_map(&qb, &CoherentMapSpec::identity(), 1e-8).unwrap();
        let n = qb.rank();
        assert!(max_abs_diff(&g.matrix, &CMat::identity(n, n)) < 1e-10);
        assert!(g.residual < 1e-12);
    }

    #[test]
    fn permutation_on_coordinate_basis() {
        let s = SpaceDescriptor::Trivial { dim: 3 }.build().unwrap();
        let pts = vec![Point::real(&[1.0, 0.0, 0.0]), Point::real(&[0.0, 1.0, 0.0]), Point::real(&[0.0, 0.0, 1.0])];
        let qb = build_quantum_space(&s, &pts, 1e-10).unwrap();
        let p = CMat::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.].map(cr));
        let g = quantize_map(&qb, &CoherentMapSpec::linear(&s, p.clone()).unwrap(), 1e-8).unwrap();
        // orthonormal basis of the span is B = U* with G = 1, so Gamma = B P B+
        let expect = qb.factor() * &p * qb.factor_pinv();
        assert!(max_abs_diff(&g.matrix, &expect) < 1e-12);
        assert!(unitarity_defect(&g) < 1e-12);
        let (ev, _) = hermitian_eigen(&(g.matrix.clone() + g.matrix.adjoint())).unwrap();
        // eigenvalues of P + P^T for a 3-cycle: 2, -1, -1
        assert!((ev[0] - 2.0).abs() < 1e-12 && (ev[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn span_escape_is_reported() {
        let s = SpaceDescriptor::Trivial { dim: 2 }.build().unwrap();
        let qb = build_quantum_space(&s, &[Point::real(&[1.0, 0.0])], 1e-10).unwrap();
        let swap = CMat::from_row_slice(2, 2, &[0., 1., 1., 0.].map(cr));
        let err = quantize_map(&qb, &CoherentMapSpec::linear(&s, swap).unwrap(), 1e-8).unwrap_err();
        assert!(matches!(err, CohError::SpanEscape { index: 0, .. }));
    }

    #[test]
    fn zero_generator() {
        let s = SpaceDescriptor::Spin { exponent: 1.0 }.build().unwrap();
        let pts = vec![Point::real(&[1.0, 0.0]), Point::real(&[0.0, 1.0])];
        let qb = build_quantum_space(&s, &pts, 1e-10).unwrap();
        let g = generator_matrix(&qb, &GeneratorSpec::zero(), 1e-3, 1e-8).unwrap();
        assert_eq!(g.matrix, CMat::zeros(2, 2));
    }
}
