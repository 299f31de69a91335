//! JSON descriptors for the catalog spaces.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DiscreteTable, Kernel, KernelSpace, Point};
use crate::error::{CohError, Result};
use crate::linalg::{c, cr, dot_conj, CMat, C64, I};

fn default_hbar() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Serializable description of a catalog space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDescriptor {
    /// `C^dim` with `K = z* z'`.
    Trivial { dim: usize },
    /// Labels `[z0, zeta]`, `K = exp(conj z0 + z0' + zeta* zeta')`.
    Klauder { modes: usize },
    /// Unit sphere in `C^2`, `K = (z* z')^exponent`.
    Spin { exponent: f64 },
    /// Unit sphere in `C^2`, `K = (z^T z')^exponent`.
    #[serde(rename = "spin_t")]
    SpinT { exponent: f64 },
    /// `|z1| > |z2|`, `K = 1 / (conj z1 z1' - conj z2 z2')`.
    Moebius,
    /// Entire function `E(z) = poly(z) exp(-i exp_type z)`; `poly` holds
    /// ascending coefficients as `[re, im]`.
    #[serde(rename = "debranges")]
    DeBranges {
        poly: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "is_zero")]
        exp_type: f64,
    },
    /// Unit sphere in `C^2`, `K(z, z') = 1` if `z' = conj z`, else 0.
    ClassicalLimit,
    /// `K_base^n`.
    Power { base: Box<SpaceDescriptor>, n: u32 },
    /// Finite subset of `C^d` with the restricted Euclidean product.
    EuclideanSubset { points: Vec<Point> },
    /// Finite point list with an explicit kernel table (defaults to the
    /// Euclidean product of the points).
    Discrete {
        points: Vec<Point>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<Vec<[f64; 2]>>>,
    },
    /// The 12 unit vertices of the icosahedron in `R^3`, `K = x . y`.
    Icosahedron,
    /// Line bundle over `C^modes`, `K((l, s), (l', s')) = l l' exp(s^T s' / hbar)`.
    Heisenberg {
        modes: usize,
        #[serde(default = "default_hbar")]
        hbar: f64,
    },
}

impl SpaceDescriptor {
    pub fn build(&self) -> Result<KernelSpace> {
        let kernel = match self {
            SpaceDescriptor::Trivial { dim } => {
                positive("dim", *dim)?;
                Kernel::Trivial { dim: *dim }
            }
            SpaceDescriptor::Klauder { modes } => {
                positive("modes", *modes)?;
                Kernel::Klauder { modes: *modes }
            }
            SpaceDescriptor::Spin { exponent } | SpaceDescriptor::SpinT { exponent } => {
                if !exponent.is_finite() || *exponent < 0.0 {
                    return Err(CohError::Config(format!(
                        "spin exponent must be finite and nonnegative, got {exponent}"
                    )));
                }
                Kernel::Spin {
                    exponent: *exponent,
                    bilinear: matches!(self, SpaceDescriptor::SpinT { .. }),
                }
            }
            SpaceDescriptor::Moebius => Kernel::Moebius,
            SpaceDescriptor::DeBranges { poly, exp_type } => {
                if poly.is_empty() || poly.iter().all(|p| p[0] == 0.0 && p[1] == 0.0) {
                    return Err(CohError::Config("debranges polynomial is zero".into()));
                }
                if !exp_type.is_finite() || *exp_type < 0.0 {
                    return Err(CohError::Config(format!(
                        "debranges exp_type must be nonnegative, got {exp_type}"
                    )));
                }
                Kernel::DeBranges(DeBrangesFunction {
                    poly: poly.iter().map(|p| c(p[0], p[1])).collect(),
                    exp_type: *exp_type,
                })
            }
            SpaceDescriptor::ClassicalLimit => Kernel::ClassicalLimit,
            SpaceDescriptor::Power { base, n } => {
                if *n == 0 {
                    return Err(CohError::Config("power n must be at least 1".into()));
                }
                Kernel::Power {
                    base: Box::new(base.build()?),
                    n: *n,
                }
            }
            SpaceDescriptor::EuclideanSubset { points } => {
                same_dims(points)?;
                Kernel::EuclideanSubset {
                    members: points.clone(),
                }
            }
            SpaceDescriptor::Discrete { points, table } => {
                same_dims(points)?;
                let n = points.len();
                let table = match table {
                    None => CMat::from_fn(n, n, |i, j| dot_conj(&points[i].coords, &points[j].coords)),
                    Some(rows) => {
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(CohError::Config(format!(
                                "discrete table must be {n}x{n}"
                            )));
                        }
                        let m = CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]));
                        for i in 0..n {
                            for j in 0..n {
                                let d = (m[(j, i)] - m[(i, j)].conj()).norm();
                                if d > 1e-12 * (1.0 + m[(i, j)].norm()) {
                                    return Err(CohError::Config(format!(
                                        "discrete table is not Hermitian at ({i}, {j})"
                                    )));
                                }
                            }
                        }
                        m
                    }
                };
                Kernel::Discrete(Arc::new(DiscreteTable {
                    points: points.clone(),
                    table,
                }))
            }
            SpaceDescriptor::Icosahedron => {
                let points: Vec<Point> = icosahedron_vertices()
                    .iter()
                    .map(|v| Point::real(v))
                    .collect();
                let n = points.len();
                let table = CMat::from_fn(n, n, |i, j| dot_conj(&points[i].coords, &points[j].coords));
                Kernel::Discrete(Arc::new(DiscreteTable { points, table }))
            }
            SpaceDescriptor::Heisenberg { modes, hbar } => {
                positive("modes", *modes)?;
                if !(*hbar > 0.0 && hbar.is_finite()) {
                    return Err(CohError::Config(format!("hbar must be positive, got {hbar}")));
                }
                Kernel::Heisenberg {
                    modes: *modes,
                    hbar: *hbar,
                }
            }
        };
        Ok(KernelSpace {
            descriptor: self.clone(),
            kernel,
        })
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(CohError::Config(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

fn same_dims(points: &[Point]) -> Result<()> {
    let Some(first) = points.first() else {
        return Err(CohError::Config("point list is empty".into()));
    };
    if first.dim() == 0 || points.iter().any(|p| p.dim() != first.dim()) {
        return Err(CohError::Config("points must share a positive dimension".into()));
    }
    if points.iter().any(|p| p.multiplier.is_some()) {
        return Err(CohError::Config("finite point sets take no multiplier".into()));
    }
    Ok(())
}

/// Unit vertices of the regular icosahedron.
pub fn icosahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let r = (1.0 + phi * phi).sqrt();
    let (a, b) = (1.0 / r, phi / r);
    let mut out = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            out.push([0.0, s1 * a, s2 * b]);
            out.push([s1 * a, s2 * b, 0.0]);
            out.push([s2 * b, 0.0, s1 * a]);
        }
    }
    out
}

/// `E(z) = p(z) exp(-i a z)` and the kernel it generates.
#[derive(Debug, Clone, PartialEq)]
pub struct DeBrangesFunction {
    pub poly: Vec<C64>,
    pub exp_type: f64,
}

impl DeBrangesFunction {
    pub fn e(&self, z: C64) -> C64 {
        self.poly_at(z) * (-I * self.exp_type * z).exp()
    }

    pub fn de(&self, z: C64) -> C64 {
        let p = self.poly_at(z);
        let dp = self
            .poly
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(cr(0.0), |acc, (k, a)| acc * z + a * k as f64);
        (dp - I * self.exp_type * p) * (-I * self.exp_type * z).exp()
    }

    fn poly_at(&self, z: C64) -> C64 {
        self.poly.iter().rev().fold(cr(0.0), |acc, a| acc * z + a)
    }

    /// Two-branch kernel; the diagonal branch is used when `w` equals
    /// `conj z` to within roundoff.
    pub fn kernel(&self, z: C64, w: C64) -> C64 {
        let zb = z.conj();
        let gap = zb - w;
        if gap.norm() <= 1e-13 * (1.0 + z.norm()) {
            return self.kernel_diagonal(z);
        }
        let num = self.e(z).conj() * self.e(w) - self.e(zb) * self.e(w.conj()).conj();
        num / (2.0 * I * gap)
    }

    /// Value at `w = conj z`.
    pub fn kernel_diagonal(&self, z: C64) -> C64 {
        let zb = z.conj();
        (self.e(zb) * self.de(z).conj() - self.e(z).conj() * self.de(zb)) / (2.0 * I)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_is_unit_and_symmetric() {
        let v = icosahedron_vertices();
        assert_eq!(v.len(), 12);
        for p in &v {
            let n: f64 = p.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-15);
            assert!(v.iter().any(|q| (0..3).all(|k| (q[k] + p[k]).abs() < 1e-15)));
        }
    }

    #[test]
    fn paley_wiener_kernel() {
        let e = DeBrangesFunction {
            poly: vec![cr(1.0)],
            exp_type: 0.8,
        };
        let z = c(0.3, 0.4);
        let w = c(-0.2, 0.9);
        let d = z.conj() - w;
        let expect = (d * 0.8).sin() / d;
        assert!((e.kernel(z, w) - expect).norm() < 1e-14);
        assert!((e.kernel(z, z.conj()) - cr(0.8)).norm() < 1e-14);
    }

    #[test]
    fn branches_agree_in_the_limit() {
        let e = DeBrangesFunction {
            poly: vec![c(0.0, 1.0), cr(1.0), c(0.2, 0.1)],
            exp_type: 0.5,
        };
        let z = c(0.4, 0.7);
        let diag = e.kernel_diagonal(z);
        let mut prev = f64::INFINITY;
        for k in 2..6 {
            let eps = 10f64.powi(-k);
            let err = (e.kernel(z, z.conj() + c(eps, 0.5 * eps)) - diag).norm();
            assert!(err < prev);
            assert!(err < 10.0 * eps * (1.0 + diag.norm()));
            prev = err;
        }
    }

    #[test]
    fn descriptor_round_trip() {
        for json in [
            r#"{"kind":"spin","exponent":2.0}"#,
            r#"{"kind":"spin_t","exponent":3.0}"#,
            r#"{"kind":"power","base":{"kind":"klauder","modes":2},"n":3}"#,
            r#"{"kind":"debranges","poly":[[0.0,1.0],[1.0,0.0]]}"#,
            r#"{"kind":"heisenberg","modes":1,"hbar":1.0}"#,
            r#"{"kind":"icosahedron"}"#,
        ] {
            let d: SpaceDescriptor = serde_json::from_str(json).unwrap();
            assert_eq!(serde_json::to_string(&d).unwrap(), json);
        }
    }

    #[test]
    fn rejects_bad_descriptors() {
        for json in [
            r#"{"kind":"trivial","dim":0}"#,
            r#"{"kind":"spin","exponent":-1}"#,
            r#"{"kind":"power","base":{"kind":"moebius"},"n":0}"#,
            r#"{"kind":"heisenberg","modes":1,"hbar":0}"#,
        ] {
            let d: SpaceDescriptor = serde_json::from_str(json).unwrap();
            assert!(matches!(d.build(), Err(CohError::Config(_))), "{json}");
        }
    }
}
