//! Catalog algebras and the JSON algebra descriptor.

use serde::{Deserialize, Serialize};

use super::{Convention, LieStarAlgebra};
use crate::error::{CohError, Result};
use crate::io::JsonMatrix;
use crate::linalg::{c, cr, pauli, spin_matrices, CMat, CVec, C64};

fn default_one() -> f64 {
    1.0
}

/// JSON algebra descriptor, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    /// `u(2)` on a qubit: basis `1, s1, s2, s3` represented by Pauli matrices.
    Qubit {
        #[serde(default = "default_one")]
        hbar: f64,
    },
    /// Rigid rotator `C^3 + C 1` with the cross product, represented on
    /// spin `two_j / 2` by `J_a -> -hbar J_a`.
    Rotator {
        two_j: u32,
        #[serde(default = "default_one")]
        hbar: f64,
    },
    /// Functions `1, I, cos k theta, sin k theta (k <= modes)` on the
    /// cylinder with the negative Poisson bracket, realized by their values
    /// at the sample points `[theta, I]`.
    KoopmanCircle { modes: usize, samples: Vec<[f64; 2]> },
    /// Sparse structure constants `[a, b, c, [re, im]]` with involution
    /// entries `[row, col, [re, im]]` and a matrix realization.
    Custom {
        names: Vec<String>,
        structure: Vec<(usize, usize, usize, [f64; 2])>,
        involution: Vec<(usize, usize, [f64; 2])>,
        unit_index: usize,
        convention: Convention,
        rep: Vec<JsonMatrix>,
    },
}

/// Concrete realization used to propagate states directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Matrices(Vec<CMat>),
    Koopman {
        modes: usize,
        samples: Vec<(f64, f64)>,
        rep: Vec<CMat>,
    },
}

impl Realization {
    pub fn matrices(&self) -> &[CMat] {
        match self {
            Realization::Matrices(m) => m,
            Realization::Koopman { rep, .. } => rep,
        }
    }
}

/// Values of the Koopman basis functions at `(theta, action)`.
pub(crate) fn koopman_values(modes: usize, theta: f64, action: f64) -> Vec<f64> {
    let mut v = vec![1.0, action];
    for k in 1..=modes {
        let (s, co) = (k as f64 * theta).sin_cos();
        v.push(co);
        v.push(s);
    }
    v
}

fn names(prefix: &[&str]) -> Vec<String> {
    prefix.iter().map(|s| s.to_string()).collect()
}

fn epsilon(a: usize, b: usize) -> Option<(usize, f64)> {
    match (a, b) {
        (0, 1) => Some((2, 1.0)),
        (1, 2) => Some((0, 1.0)),
        (2, 0) => Some((1, 1.0)),
        (1, 0) => Some((2, -1.0)),
        (2, 1) => Some((0, -1.0)),
        (0, 2) => Some((1, -1.0)),
        _ => None,
    }
}

impl AlgebraSpec {
    pub fn build(&self) -> Result<(LieStarAlgebra, Vec<CMat>)> {
        let (alg, r) = self.build_realization()?;
        Ok((alg, r.matrices().to_vec()))
    }

    pub fn build_realization(&self) -> Result<(LieStarAlgebra, Realization)> {
        match self {
            AlgebraSpec::Qubit { hbar } => {
                if !(*hbar > 0.0) {
                    return Err(CohError::Config("hbar must be positive".into()));
                }
                // (i/hbar)[s_a, s_b] = -(2/hbar) eps_abc s_c
                let mut t = Vec::new();
                for a in 0..3 {
                    for b in 0..3 {
                        if let Some((k, s)) = epsilon(a, b) {
                            t.push((a + 1, b + 1, k + 1, cr(-2.0 * s / hbar)));
                        }
                    }
                }
                let alg = LieStarAlgebra::new(
                    names(&["1", "s1", "s2", "s3"]),
                    &t,
                    CMat::identity(4, 4),
                    0,
                    Convention::Quantum { hbar: *hbar },
                )?;
                let [s1, s2, s3] = pauli();
                Ok((alg, Realization::Matrices(vec![CMat::identity(2, 2), s1, s2, s3])))
            }
            AlgebraSpec::Rotator { two_j, hbar } => {
                if !(*hbar > 0.0) {
                    return Err(CohError::Config("hbar must be positive".into()));
                }
                let mut t = Vec::new();
                for a in 0..3 {
                    for b in 0..3 {
                        if let Some((k, s)) = epsilon(a, b) {
                            t.push((a + 1, b + 1, k + 1, cr(s)));
                        }
                    }
                }
                let alg = LieStarAlgebra::new(
                    names(&["1", "J1", "J2", "J3"]),
                    &t,
                    CMat::identity(4, 4),
                    0,
                    Convention::Quantum { hbar: *hbar },
                )?;
                let d = *two_j as usize + 1;
                let [jx, jy, jz] = spin_matrices(*two_j);
                let m = cr(-*hbar);
                Ok((alg, Realization::Matrices(vec![CMat::identity(d, d), jx * m, jy * m, jz * m])))
            }
            AlgebraSpec::KoopmanCircle { modes, samples } => {
                if samples.is_empty() {
                    return Err(CohError::Config("koopman_circle needs sample points".into()));
                }
                let dim = 2 + 2 * modes;
                let mut nm = names(&["1", "I"]);
                let mut t = Vec::new();
                for k in 1..=*modes {
                    nm.push(format!("cos{k}"));
                    nm.push(format!("sin{k}"));
                    let (ci, si) = (2 * k, 2 * k + 1);
                    let kf = k as f64;
                    // -{I, cos k th} = -k sin k th, -{I, sin k th} = k cos k th
                    t.push((1, ci, si, cr(-kf)));
                    t.push((ci, 1, si, cr(kf)));
                    t.push((1, si, ci, cr(kf)));
                    t.push((si, 1, ci, cr(-kf)));
                }
                let alg = LieStarAlgebra::new(nm, &t, CMat::identity(dim, dim), 0, Convention::NegativePoisson)?;
                let pts: Vec<(f64, f64)> = samples.iter().map(|p| (p[0], p[1])).collect();
                let vals: Vec<Vec<f64>> = pts.iter().map(|&(th, a)| koopman_values(*modes, th, a)).collect();
                let rep = (0..dim)
                    .map(|a| CMat::from_diagonal(&CVec::from_iterator(pts.len(), vals.iter().map(|v| cr(v[a])))))
                    .collect();
                Ok((
                    alg,
                    Realization::Koopman {
                        modes: *modes,
                        samples: pts,
                        rep,
                    },
                ))
            }
            AlgebraSpec::Custom {
                names,
                structure,
                involution,
                unit_index,
                convention,
                rep,
            } => {
                let dim = names.len();
                let t: Vec<(usize, usize, usize, C64)> = structure.iter().map(|&(a, b, k, v)| (a, b, k, c(v[0], v[1]))).collect();
                let mut inv = CMat::zeros(dim, dim);
                for &(i, j, v) in involution {
                    if i >= dim || j >= dim {
                        return Err(CohError::Config(format!("involution index ({i}, {j}) out of range")));
                    }
                    inv[(i, j)] = c(v[0], v[1]);
                }
                let alg = LieStarAlgebra::new(names.clone(), &t, inv, *unit_index, *convention)?;
                let mats: Vec<CMat> = rep.iter().map(|m| m.to_matrix()).collect::<Result<_>>()?;
                if mats.len() != dim {
                    return Err(CohError::Config(format!("custom algebra needs {dim} representation matrices")));
                }
                Ok((alg, Realization::Matrices(mats)))
            }
        }
    }

    /// Sparse descriptor of any algebra with a matrix realization.
    pub fn custom(alg: &LieStarAlgebra, rep: &[CMat]) -> AlgebraSpec {
        let d = alg.dim();
        let mut involution = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = alg.involution()[(i, j)];
                if v.norm() != 0.0 {
                    involution.push((i, j, [v.re, v.im]));
                }
            }
        }
        AlgebraSpec::Custom {
            names: alg.names().to_vec(),
            structure: alg.triples().into_iter().map(|(a, b, k, v)| (a, b, k, [v.re, v.im])).collect(),
            involution,
            unit_index: alg.unit_index(),
            convention: alg.convention(),
            rep: rep.iter().map(JsonMatrix::from_matrix).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{lie_product, represent};
    use crate::linalg::{max_abs_diff, quantum_lie};

    #[test]
    fn realizations_are_homomorphisms() {
        for spec in [AlgebraSpec::Qubit { hbar: 0.7 }, AlgebraSpec::Rotator { two_j: 3, hbar: 1.3 }] {
            let (alg, rep) = spec.build().unwrap();
            let hbar = match alg.convention() {
                Convention::Quantum { hbar } => hbar,
                _ => unreachable!(),
            };
            for a in 0..alg.dim() {
                for b in 0..alg.dim() {
                    let p = lie_product(&alg, &alg.basis(a), &alg.basis(b));
                    let direct = quantum_lie(&rep[a], &rep[b], hbar);
                    assert!(max_abs_diff(&direct, &represent(&rep, &p)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotator_is_cross_product() {
        let (alg, _) = AlgebraSpec::Rotator { two_j: 2, hbar: 1.0 }.build().unwrap();
        let x = [cr(0.0), cr(1.0), cr(2.0), cr(3.0)];
        let y = [cr(0.0), cr(-1.0), cr(0.5), cr(2.0)];
        let p = lie_product(&alg, &x, &y);
        // (1,2,3) x (-1,0.5,2) = (2.5, -5, 2.5)
        assert_eq!(p, vec![cr(0.0), cr(2.5), cr(-5.0), cr(2.5)]);
    }

    #[test]
    fn koopman_axioms_and_round_trip() {
        let spec = AlgebraSpec::KoopmanCircle {
            modes: 3,
            samples: vec![[0.1, 1.0], [2.0, -0.5]],
        };
        let (alg, rep) = spec.build().unwrap();
        assert!(alg.check_axioms().passed);
        assert_eq!(rep.len(), 8);
        let (q, qr) = AlgebraSpec::Qubit { hbar: 1.0 }.build().unwrap();
        let custom = AlgebraSpec::custom(&q, &qr);
        let text = serde_json::to_string(&custom).unwrap();
        let back: AlgebraSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, custom);
        let (q2, _) = back.build().unwrap();
        assert_eq!(q2, q);
    }
}
