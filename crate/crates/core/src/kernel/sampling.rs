//! Seeded random points for each catalog space.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Kernel, KernelSpace, Point};
use crate::linalg::{c, norm, C64, I};

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn unit_c2<R: Rng + ?Sized>(rng: &mut R) -> Vec<C64> {
    loop {
        let v = vec![gauss(rng), gauss(rng)];
        let r = norm(&v);
        if r > 1e-3 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// `n` valid points of `space`. Finite spaces are sampled with
/// replacement.
pub fn sample_points<R: Rng + ?Sized>(space: &KernelSpace, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n).map(|_| sample_one(space, rng)).collect()
}

fn sample_one<R: Rng + ?Sized>(space: &KernelSpace, rng: &mut R) -> Point {
    match &space.kernel {
        Kernel::Trivial { dim } => Point::new((0..*dim).map(|_| gauss(rng)).collect()),
        Kernel::Klauder { modes } => Point::new((0..=*modes).map(|_| gauss(rng) * 0.7).collect()),
        Kernel::Spin { .. } | Kernel::ClassicalLimit => Point::new(unit_c2(rng)),
        Kernel::Moebius => {
            let z1 = loop {
                let g = gauss(rng);
                if g.norm() > 0.1 {
                    break g;
                }
            };
            let r = 0.9 * rng.random::<f64>().sqrt();
            let w = (I * rng.random_range(0.0..std::f64::consts::TAU)).exp() * r;
            Point::new(vec![z1, z1 * w])
        }
        Kernel::DeBranges(_) => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample::<f64, _>(StandardNormal).abs() + 0.1;
            Point::new(vec![c(re, im)])
        }
        Kernel::Power { base, .. } => sample_one(base, rng),
        Kernel::EuclideanSubset { members } => members[rng.random_range(0..members.len())].clone(),
        Kernel::Discrete(t) => t.points[rng.random_range(0..t.points.len())].clone(),
        Kernel::Heisenberg { modes, .. } => {
            let s = (0..*modes).map(|_| gauss(rng) * 0.7).collect();
            let lambda = (I * rng.random_range(0.0..std::f64::consts::TAU)).exp()
                * (0.5 + rng.random::<f64>());
            Point::with_multiplier(s, lambda)
        }
    }
}
