//! Analytic partial derivatives of the Hermitian product.
//!
//! For `P(z, z') = <z|z'>` (antiholomorphic in `z`, holomorphic in `z'`):
//! `d1bar_j = dP/d conj(z_j)`, `d2_k = dP/dz'_k` and
//! `d12_jk = d^2 P / d conj(z_j) dz'_k`. Projective multipliers are held
//! fixed; derivatives run over `coords` only.

use super::{spin_power, Kernel, KernelSpace, Point};
use crate::linalg::{cr, dot_conj, powi, CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ProductPartials {
    pub value: C64,
    pub d1bar: Vec<C64>,
    pub d2: Vec<C64>,
    pub d12: CMat,
}

impl KernelSpace {
    /// Whether [`KernelSpace::product_partials`] is available.
    pub fn has_partials(&self) -> bool {
        match &self.kernel {
            Kernel::Trivial { .. }
            | Kernel::Klauder { .. }
            | Kernel::Spin { .. }
            | Kernel::Moebius
            | Kernel::Heisenberg { .. } => true,
            Kernel::Power { base, .. } => base.has_partials(),
            _ => false,
        }
    }

    /// Analytic partials at valid points, `None` if the space has none.
    pub fn product_partials(&self, z: &Point, z2: &Point) -> Option<ProductPartials> {
        let a = &z.coords;
        let b = &z2.coords;
        let d = a.len();
        match &self.kernel {
            Kernel::Trivial { .. } => Some(ProductPartials {
                value: dot_conj(a, b),
                d1bar: b.clone(),
                d2: a.iter().map(|x| x.conj()).collect(),
                d12: CMat::identity(d, d),
            }),
            Kernel::Klauder { .. } => {
                let p = self.product_unchecked(z, z2);
                let cvec: Vec<C64> = std::iter::once(cr(1.0))
                    .chain(a[1..].iter().map(|x| x.conj()))
                    .collect();
                let bvec: Vec<C64> = std::iter::once(cr(1.0)).chain(b[1..].iter().cloned()).collect();
                let d12 = CMat::from_fn(d, d, |j, k| {
                    let e = if j == k && j > 0 { 1.0 } else { 0.0 };
                    (cr(e) + bvec[j] * cvec[k]) * p
                });
                Some(ProductPartials {
                    value: p,
                    d1bar: bvec.iter().map(|x| x * p).collect(),
                    d2: cvec.iter().map(|x| x * p).collect(),
                    d12,
                })
            }
            Kernel::Spin { exponent: n, .. } => {
                let w = dot_conj(a, b);
                let p0 = spin_power(w, *n);
                let p1 = if *n == 0.0 { cr(0.0) } else { spin_power(w, n - 1.0) * *n };
                let p2 = if *n == 0.0 || *n == 1.0 {
                    cr(0.0)
                } else {
                    spin_power(w, n - 2.0) * (n * (n - 1.0))
                };
                Some(ProductPartials {
                    value: p0,
                    d1bar: b.iter().map(|x| x * p1).collect(),
                    d2: a.iter().map(|x| x.conj() * p1).collect(),
                    d12: CMat::from_fn(d, d, |j, k| {
                        let delta = if j == k { p1 } else { cr(0.0) };
                        delta + p2 * b[j] * a[k].conj()
                    }),
                })
            }
            Kernel::Moebius => {
                let w = a[0].conj() * b[0] - a[1].conj() * b[1];
                let wi = w.inv();
                let wi2 = wi * wi;
                let jb = [b[0], -b[1]];
                let ja = [a[0].conj(), -a[1].conj()];
                Some(ProductPartials {
                    value: wi,
                    d1bar: jb.iter().map(|x| -wi2 * x).collect(),
                    d2: ja.iter().map(|x| -wi2 * x).collect(),
                    d12: CMat::from_fn(2, 2, |j, k| {
                        let jjk = match (j, k) {
                            (0, 0) => 1.0,
                            (1, 1) => -1.0,
                            _ => 0.0,
                        };
                        wi2 * wi * 2.0 * jb[j] * ja[k] - wi2 * jjk
                    }),
                })
            }
            Kernel::Heisenberg { hbar, .. } => {
                let p = self.product_unchecked(z, z2);
                Some(ProductPartials {
                    value: p,
                    d1bar: b.iter().map(|x| x * p / *hbar).collect(),
                    d2: a.iter().map(|x| x.conj() * p / *hbar).collect(),
                    d12: CMat::from_fn(d, d, |j, k| {
                        let delta = if j == k { 1.0 / hbar } else { 0.0 };
                        (cr(delta) + b[j] * a[k].conj() / (hbar * hbar)) * p
                    }),
                })
            }
            Kernel::Power { base, n } => {
                let bp = base.product_partials(z, z2)?;
                let n = *n;
                let f1 = powi(bp.value, n - 1) * n as f64;
                let f2 = if n >= 2 {
                    powi(bp.value, n - 2) * (n as f64 * (n as f64 - 1.0))
                } else {
                    cr(0.0)
                };
                Some(ProductPartials {
                    value: powi(bp.value, n),
                    d1bar: bp.d1bar.iter().map(|x| x * f1).collect(),
                    d2: bp.d2.iter().map(|x| x * f1).collect(),
                    d12: CMat::from_fn(d, d, |j, k| f2 * bp.d1bar[j] * bp.d2[k] + f1 * bp.d12[(j, k)]),
                })
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SpaceDescriptor;
    use crate::linalg::c;

    /// Wirtinger derivatives by central differences in real and imaginary
    /// directions.
    fn fd_check(space: &KernelSpace, z: &Point, z2: &Point) {
        let p = space.product_partials(z, z2).unwrap();
        let h = 1e-5;
        let f = |a: &Point, b: &Point| space.product_unchecked(a, b);
        let shift = |q: &Point, k: usize, dz: C64| {
            let mut q = q.clone();
            q.coords[k] += dz;
            q
        };
        let d = z.dim();
        for k in 0..d {
            // holomorphic in z2: d/dz' = d/dx
            let dx = (f(z, &shift(z2, k, cr(h))) - f(z, &shift(z2, k, cr(-h)))) / (2.0 * h);
            assert!((dx - p.d2[k]).norm() < 1e-7 * (1.0 + p.d2[k].norm()), "d2[{k}]");
            // antiholomorphic in z: d/dconj(z) = d/dx
            let dx = (f(&shift(z, k, cr(h)), z2) - f(&shift(z, k, cr(-h)), z2)) / (2.0 * h);
            assert!((dx - p.d1bar[k]).norm() < 1e-7 * (1.0 + p.d1bar[k].norm()), "d1bar[{k}]");
            for j in 0..d {
                let g = |s: f64, t: f64| f(&shift(z, j, cr(s)), &shift(z2, k, cr(t)));
                let m = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
                let e = p.d12[(j, k)];
                assert!((m - e).norm() < 1e-5 * (1.0 + e.norm()), "d12[{j},{k}] {m} vs {e}");
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let z = Point::new(vec![c(0.9, 0.1), c(0.2, -0.3)]);
        let z2 = Point::new(vec![c(0.8, -0.2), c(-0.1, 0.35)]);
        for d in [
            SpaceDescriptor::Trivial { dim: 2 },
            SpaceDescriptor::Klauder { modes: 1 },
            SpaceDescriptor::Moebius,
            SpaceDescriptor::Power {
                base: Box::new(SpaceDescriptor::Moebius),
                n: 3,
            },
        ] {
            fd_check(&d.build().unwrap(), &z, &z2);
        }
        // off-sphere stencils are fine for the unconstrained formula
        let spin = SpaceDescriptor::Spin { exponent: 3.0 }.build().unwrap();
        fd_check(&spin, &z, &z2);
        let h = SpaceDescriptor::Heisenberg { modes: 2, hbar: 0.7 }.build().unwrap();
        fd_check(
            &h,
            &Point::with_multiplier(z.coords.clone(), c(1.2, 0.3)),
            &Point::with_multiplier(z2.coords.clone(), c(-0.4, 0.9)),
        );
    }
}
