//! Gram matrices, distances and the positivity verdicts.

use serde::{Deserialize, Serialize};

use super::{KernelSpace, Point};
use crate::error::{CohError, Result};
use crate::linalg::{cr, hermitian_eigen, CMat, C64};

pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Outcome of a positive-semidefiniteness test on a Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub min_eigenvalue: f64,
    pub gram_norm: f64,
    pub passed: bool,
    pub tolerance_used: f64,
}

impl PsdVerdict {
    pub fn from_eigenvalues(eigenvalues: &[f64], tol: f64) -> Self {
        let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let norm = eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max);
        PsdVerdict {
            min_eigenvalue: min,
            gram_norm: norm,
            passed: min >= -tol * norm.max(1.0),
            tolerance_used: tol,
        }
    }
}

/// `d(z, z2) = sqrt(K(z,z) + K(z2,z2) - 2 Re K(z,z2))`.
pub fn distance(space: &KernelSpace, z: &Point, z2: &Point) -> Result<f64> {
    let a = space.product(z, z)?.re;
    let b = space.product(z2, z2)?.re;
    let ab = space.product(z, z2)?.re;
    let radicand = a + b - 2.0 * ab;
    let threshold = 1e-6 * (a.abs() + b.abs()).max(1.0);
    if radicand < -threshold {
        return Err(CohError::CoherenceViolation {
            radicand,
            threshold,
        });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Gram matrix `G_jk = <z_j|z_k>`, exactly Hermitian.
pub fn gram_matrix(space: &KernelSpace, points: &[Point]) -> Result<CMat> {
    gram_matrix_threaded(space, points, 1)
}

/// As [`gram_matrix`], splitting rows over `threads` workers. Every entry
/// is computed independently, so the result does not depend on the thread
/// count.
pub fn gram_matrix_threaded(space: &KernelSpace, points: &[Point], threads: usize) -> Result<CMat> {
    if points.is_empty() {
        return Err(CohError::Precondition("gram matrix of an empty point list".into()));
    }
    for p in points {
        space.validate(p)?;
    }
    let n = points.len();
    let row = |i: usize| -> Vec<C64> {
        (i..n)
            .map(|j| {
                if i == j {
                    cr(space.product_unchecked(&points[i], &points[i]).re)
                } else {
                    space.product_unchecked(&points[i], &points[j])
                }
            })
            .collect()
    };
    let threads = threads.max(1).min(n);
    let rows: Vec<Vec<C64>> = if threads == 1 {
        (0..n).map(row).collect()
    } else {
        let mut rows = vec![Vec::new(); n];
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let row = &row;
                    scope.spawn(move || {
                        (t..n)
                            .step_by(threads)
                            .map(|i| (i, row(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("gram worker panicked") {
                    rows[i] = r;
                }
            }
        });
        rows
    };
    let mut g = CMat::zeros(n, n);
    for (i, r) in rows.into_iter().enumerate() {
        for (k, v) in r.into_iter().enumerate() {
            let j = i + k;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CohError::Numerical("kernel produced non-finite values".into()));
    }
    Ok(g)
}

/// Positive-semidefiniteness of the Gram matrix on `points`.
pub fn check_coherence(space: &KernelSpace, points: &[Point], tol: f64) -> Result<PsdVerdict> {
    if points.len() < 2 {
        return Err(CohError::Precondition(
            "coherence check needs at least two points".into(),
        ));
    }
    let g = gram_matrix(space, points)?;
    let (eig, _) = hermitian_eigen(&g)?;
    Ok(PsdVerdict::from_eigenvalues(&eig, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentMapCheck {
    pub passed: bool,
    pub max_residual: f64,
}

/// Checks `K(z, A z') = K(A_adj z, z')` on sample pairs; residuals are
/// relative to `1 + |K|`.
pub fn check_coherent_map(
    space: &KernelSpace,
    a: &dyn Fn(&Point) -> Result<Point>,
    a_adj: &dyn Fn(&Point) -> Result<Point>,
    samples: &[(Point, Point)],
    tol: f64,
) -> Result<CoherentMapCheck> {
    let mut worst: f64 = 0.0;
    for (z, z2) in samples {
        let az2 = a(z2)?;
        let adj_z = a_adj(z)?;
        let lhs = space.eval(z, &az2)?;
        let rhs = space.eval(&adj_z, z2)?;
        let r = (lhs - rhs).norm() / (1.0 + lhs.norm());
        worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    Ok(CoherentMapCheck {
        passed: worst <= tol,
        max_residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SpaceDescriptor;
    use crate::linalg::c;

    fn trivial(dim: usize) -> KernelSpace {
        SpaceDescriptor::Trivial { dim }.build().unwrap()
    }

    #[test]
    fn distance_examples() {
        let s = trivial(1);
        let z = Point::real(&[1.0]);
        assert_eq!(distance(&s, &z, &z).unwrap(), 0.0);
        assert!((distance(&s, &z, &Point::real(&[0.0])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_gram() {
        let s = trivial(2);
        let z = Point::new(vec![c(1.0, 2.0), c(0.0, -1.0)]);
        let g = gram_matrix(&s, &[z]).unwrap();
        assert_eq!(g[(0, 0)], cr(6.0));
    }

    #[test]
    fn threading_is_bitwise_neutral() {
        let s = SpaceDescriptor::Klauder { modes: 2 }.build().unwrap();
        let pts: Vec<Point> = (0..9)
            .map(|k| {
                let t = k as f64;
                Point::new(vec![c(0.1 * t, -0.2), c(t.sin(), t.cos()), c(0.3, 0.05 * t)])
            })
            .collect();
        let a = gram_matrix(&s, &pts).unwrap();
        for threads in 2..5 {
            assert_eq!(gram_matrix_threaded(&s, &pts, threads).unwrap(), a);
        }
    }

    #[test]
    fn coherence_needs_two_points() {
        let s = trivial(1);
        assert!(matches!(
            check_coherence(&s, &[Point::real(&[1.0])], 1e-8),
            Err(CohError::Precondition(_))
        ));
    }

    #[test]
    fn classical_limit_gram_is_identity() {
        let s = SpaceDescriptor::ClassicalLimit.build().unwrap();
        let pts: Vec<Point> = [0.3, 0.9, 1.7, 2.5]
            .iter()
            .map(|&th: &f64| Point::real(&[(th / 2.0).cos(), (th / 2.0).sin()]))
            .collect();
        let g = gram_matrix(&s, &pts).unwrap();
        assert_eq!(g, CMat::identity(4, 4));
        assert!(check_coherence(&s, &pts, 1e-8).unwrap().passed);
    }

    #[test]
    fn verdict_rule() {
        let v = PsdVerdict::from_eigenvalues(&[100.0, 1.0, -5e-7], 1e-8);
        assert!(v.passed);
        let v = PsdVerdict::from_eigenvalues(&[100.0, 1.0, -2e-6], 1e-8);
        assert!(!v.passed);
    }
}
