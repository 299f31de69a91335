//! Expectation-value energies `h(z) = <z|H|z> / <z|z>` on labels.
//!
//! Energies take label coordinates (not necessarily on any constraint
//! surface) and must be invariant under the scalings the chart uses.

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::io::JsonMatrix;
use crate::kernel::{KernelSpace, Point};
use crate::linalg::{dot_conj, pauli, CMat, CVec, C64};

pub trait ExpectationFunction {
    fn value(&self, z: &[C64]) -> f64;

    /// `dh / d conj(z)` in label coordinates, when available in closed form.
    fn grad_conj(&self, _z: &[C64]) -> Option<Vec<C64>> {
        None
    }
}

/// Spin-`j` quadratic Hamiltonian `c . J + sum_ab Q_ab (J_a J_b + J_b J_a)/2`
/// on spin coherent states, with `n = 2j`:
/// `h = j c.n + (j/2) tr Q + j (j - 1/2) n^T Q n`, `n_a = z* sigma_a z / z* z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinQuadratic {
    pub two_j: f64,
    pub linear: [f64; 3],
    pub quadratic: [[f64; 3]; 3],
}

impl SpinQuadratic {
    pub fn new(two_j: f64, linear: [f64; 3], quadratic: [[f64; 3]; 3]) -> Self {
        let mut q = quadratic;
        for a in 0..3 {
            for b in 0..a {
                let s = 0.5 * (q[a][b] + q[b][a]);
                q[a][b] = s;
                q[b][a] = s;
            }
        }
        SpinQuadratic {
            two_j,
            linear,
            quadratic: q,
        }
    }

    pub fn bloch(z: &[C64]) -> [f64; 3] {
        let s = pauli();
        let zz = dot_conj(z, z).re;
        let v = CVec::from_column_slice(z);
        let mut n = [0.0; 3];
        for a in 0..3 {
            n[a] = (v.adjoint() * &s[a] * &v)[(0, 0)].re / zz;
        }
        n
    }

    fn dh_dn(&self, n: &[f64; 3]) -> [f64; 3] {
        let j = self.two_j / 2.0;
        let mut g = [0.0; 3];
        for a in 0..3 {
            let qn: f64 = (0..3).map(|b| self.quadratic[a][b] * n[b]).sum();
            g[a] = j * self.linear[a] + 2.0 * j * (j - 0.5) * qn;
        }
        g
    }
}

impl ExpectationFunction for SpinQuadratic {
    fn value(&self, z: &[C64]) -> f64 {
        let j = self.two_j / 2.0;
        let n = Self::bloch(z);
        let tr: f64 = (0..3).map(|a| self.quadratic[a][a]).sum();
        let mut h = 0.5 * j * tr;
        for a in 0..3 {
            h += j * self.linear[a] * n[a];
            for b in 0..3 {
                h += j * (j - 0.5) * self.quadratic[a][b] * n[a] * n[b];
            }
        }
        h
    }

    fn grad_conj(&self, z: &[C64]) -> Option<Vec<C64>> {
        let s = pauli();
        let n = Self::bloch(z);
        let g = self.dh_dn(&n);
        let zz = dot_conj(z, z).re;
        let v = CVec::from_column_slice(z);
        let mut out = CVec::zeros(2);
        for a in 0..3 {
            out += (&s[a] * &v - &v * crate::linalg::cr(n[a])) * crate::linalg::cr(g[a] / zz);
        }
        Some(out.iter().cloned().collect())
    }
}

/// Bosonic `h = zeta* M zeta + sum_i chi_i |zeta_i|^4` on Klauder labels
/// `[z0, zeta]`: the normal-ordered `M_jk a+_j a_k + chi_i a+_i a+_i a_i a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonQuadratic {
    pub matrix: CMat,
    pub kerr: Vec<f64>,
}

impl ExpectationFunction for BosonQuadratic {
    fn value(&self, z: &[C64]) -> f64 {
        let zeta = CVec::from_column_slice(&z[1..]);
        let mut h = (zeta.adjoint() * &self.matrix * &zeta)[(0, 0)].re;
        for (i, chi) in self.kerr.iter().enumerate() {
            h += chi * zeta[i].norm_sqr().powi(2);
        }
        h
    }

    fn grad_conj(&self, z: &[C64]) -> Option<Vec<C64>> {
        let zeta = CVec::from_column_slice(&z[1..]);
        let mut g = &self.matrix * &zeta;
        for (i, chi) in self.kerr.iter().enumerate() {
            g[i] += zeta[i] * (2.0 * chi * zeta[i].norm_sqr());
        }
        Some(std::iter::once(C64::new(0.0, 0.0)).chain(g.iter().cloned()).collect())
    }
}

/// `h = <z|dGamma(H)|z> / <z|z>` for a label-space generator `H`, computed
/// from the product partials: `h = d2 . (H z) / P`.
#[derive(Debug, Clone)]
pub struct LinearExpectation {
    space: KernelSpace,
    h: CMat,
}

impl LinearExpectation {
    pub fn new(space: &KernelSpace, h: CMat) -> Result<Self> {
        let d = space.label_dim();
        if h.nrows() != d || h.ncols() != d {
            return Err(CohError::Dimension(format!("generator must be {d}x{d}")));
        }
        if !space.has_partials() {
            return Err(CohError::Domain("linear expectations need analytic product partials".into()));
        }
        Ok(LinearExpectation {
            space: space.clone(),
            h,
        })
    }

    fn point(&self, z: &[C64]) -> Point {
        if self.space.projective_degree().is_some() {
            Point::with_multiplier(z.to_vec(), C64::new(1.0, 0.0))
        } else {
            Point::new(z.to_vec())
        }
    }

    fn parts(&self, z: &[C64]) -> (C64, Vec<C64>) {
        let p = self.point(z);
        let pp = self.space.product_partials(&p, &p).expect("partials checked at construction");
        let hz = &self.h * CVec::from_column_slice(z);
        let num: C64 = pp.d2.iter().zip(hz.iter()).map(|(a, b)| a * b).sum();
        let h = num / pp.value;
        let g = (0..z.len())
            .map(|j| {
                let s: C64 = (0..z.len()).map(|k| pp.d12[(j, k)] * hz[k]).sum();
                (s - h * pp.d1bar[j]) / pp.value
            })
            .collect();
        (h, g)
    }
}

impl ExpectationFunction for LinearExpectation {
    fn value(&self, z: &[C64]) -> f64 {
        self.parts(z).0.re
    }

    fn grad_conj(&self, z: &[C64]) -> Option<Vec<C64>> {
        Some(self.parts(z).1)
    }
}

/// Energy from a closure, differentiated numerically.
pub struct FnEnergy<F: Fn(&[C64]) -> f64>(pub F);

impl<F: Fn(&[C64]) -> f64> ExpectationFunction for FnEnergy<F> {
    fn value(&self, z: &[C64]) -> f64 {
        (self.0)(z)
    }
}

/// Serializable energy descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySpec {
    /// Spin quadratic form; `two_j` is the spin exponent of the space.
    SpinQuadratic {
        #[serde(default)]
        linear: [f64; 3],
        #[serde(default)]
        quadratic: [[f64; 3]; 3],
    },
    /// Bosonic quadratic plus Kerr terms on a Klauder space.
    BosonQuadratic {
        matrix: JsonMatrix,
        #[serde(default)]
        kerr: Vec<f64>,
    },
    /// Expectation of the quantized label generator `matrix`.
    Linear { matrix: JsonMatrix },
}

impl EnergySpec {
    pub fn build(&self, space: &KernelSpace) -> Result<Box<dyn ExpectationFunction>> {
        Ok(match self {
            EnergySpec::SpinQuadratic { linear, quadratic } => {
                let two_j = match space.descriptor() {
                    crate::kernel::SpaceDescriptor::Spin { exponent }
                    | crate::kernel::SpaceDescriptor::SpinT { exponent } => *exponent,
                    _ => return Err(CohError::Config("spin_quadratic energy needs a spin space".into())),
                };
                Box::new(SpinQuadratic::new(two_j, *linear, *quadratic))
            }
            EnergySpec::BosonQuadratic { matrix, kerr } => {
                let modes = match space.descriptor() {
                    crate::kernel::SpaceDescriptor::Klauder { modes } => *modes,
                    _ => return Err(CohError::Config("boson_quadratic energy needs a klauder space".into())),
                };
                let m = matrix.to_matrix()?;
                if m.nrows() != modes || m.ncols() != modes || (kerr.len() != modes && !kerr.is_empty()) {
                    return Err(CohError::Config(format!("boson_quadratic needs a {modes}x{modes} matrix")));
                }
                let kerr = if kerr.is_empty() { vec![0.0; modes] } else { kerr.clone() };
                Box::new(BosonQuadratic { matrix: m, kerr })
            }
            EnergySpec::Linear { matrix } => Box::new(LinearExpectation::new(space, matrix.to_matrix()?)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sphere_point, SpaceDescriptor};
    use crate::linalg::{c, cr, spin_matrices};

    fn fd_grad(e: &dyn ExpectationFunction, z: &[C64]) -> Vec<C64> {
        let h = 1e-6;
        (0..z.len())
            .map(|k| {
                let f = |d: C64| {
                    let mut v = z.to_vec();
                    v[k] += d;
                    e.value(&v)
                };
                let dx = (f(cr(h)) - f(cr(-h))) / (2.0 * h);
                let dy = (f(c(0.0, h)) - f(c(0.0, -h))) / (2.0 * h);
                c(dx, dy) * 0.5
            })
            .collect()
    }

    #[test]
    fn spin_quadratic_matches_matrix_expectation() {
        let two_j = 6u32;
        let e = SpinQuadratic::new(two_j as f64, [0.3, -0.2, 0.7], [[0.5, 0.1, 0.0], [0.1, -0.3, 0.2], [0.0, 0.2, 1.0]]);
        let js = spin_matrices(two_j);
        let mut hm = CMat::zeros(7, 7);
        for a in 0..3 {
            hm += &js[a] * cr(e.linear[a]);
            for b in 0..3 {
                hm += (&js[a] * &js[b]) * cr(e.quadratic[a][b]);
            }
        }
        // coherent state of (cos t/2, e^{i phi} sin t/2) in the m = j..-j basis
        let z = sphere_point(1.2, 0.4);
        let n = two_j as usize;
        let psi = CVec::from_iterator(
            n + 1,
            (0..=n).map(|k| {
                let binom = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
                crate::linalg::powi(z.coords[0], (n - k) as u32) * crate::linalg::powi(z.coords[1], k as u32) * binom.sqrt()
            }),
        );
        let expect = (psi.adjoint() * &hm * &psi)[(0, 0)].re / psi.norm_squared();
        assert!((e.value(&z.coords) - expect).abs() < 1e-12);
        let g = e.grad_conj(&z.coords).unwrap();
        let f = fd_grad(&e, &z.coords);
        for k in 0..2 {
            assert!((g[k] - f[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn linear_expectation_on_klauder_and_spin() {
        let k = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let h = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(2.0)]);
        let e = LinearExpectation::new(&k, h).unwrap();
        let z = [c(0.3, 0.2), c(0.5, -0.4)];
        assert!((e.value(&z) - 2.0 * z[1].norm_sqr()).abs() < 1e-14);
        let g = e.grad_conj(&z).unwrap();
        let f = fd_grad(&e, &z);
        for i in 0..2 {
            assert!((g[i] - f[i]).norm() < 1e-8);
        }
        let s = SpaceDescriptor::Spin { exponent: 3.0 }.build().unwrap();
        let hs = pauli()[0].clone() * cr(0.5);
        let e = LinearExpectation::new(&s, hs).unwrap();
        let z = sphere_point(0.9, -0.3);
        // <J_x> = j n_x
        let n = SpinQuadratic::bloch(&z.coords);
        assert!((e.value(&z.coords) - 1.5 * n[0]).abs() < 1e-13);
        let g = e.grad_conj(&z.coords).unwrap();
        let f = fd_grad(&e, &z.coords);
        for i in 0..2 {
            assert!((g[i] - f[i]).norm() < 1e-8);
        }
    }

    #[test]
    fn boson_gradient() {
        let e = BosonQuadratic {
            matrix: CMat::from_row_slice(2, 2, &[cr(1.0), c(0.2, 0.1), c(0.2, -0.1), cr(0.5)]),
            kerr: vec![0.3, 0.0],
        };
        let z = [cr(0.0), c(0.4, 0.1), c(-0.2, 0.3)];
        let g = e.grad_conj(&z).unwrap();
        let f = fd_grad(&e, &z);
        for i in 0..3 {
            assert!((g[i] - f[i]).norm() < 1e-8);
        }
    }
}
