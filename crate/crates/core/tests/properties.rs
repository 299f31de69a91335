use proptest::prelude::*;

use cohspace::kernel::{check_coherence, sphere_point, Point, SpaceDescriptor};
use cohspace::lie::{lie_product, state_from_density, uncertainty, AlgebraSpec, DensityState};
use cohspace::linalg::{c, cr, CMat, C64};
use cohspace::quantization::{check_homomorphism, CoherentMapSpec};
use cohspace::quantum_space::build_quantum_space;
use cohspace::spectra::{solve_implicit_spectrum, ModelSpec, ScanOptions};

fn angles() -> impl Strategy<Value = (f64, f64)> {
    (0.0..std::f64::consts::PI, -3.2..3.2f64)
}

fn su2() -> impl Strategy<Value = CMat> {
    prop::array::uniform4(-1.0..1.0f64).prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-2).prop_map(|q| {
        let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = c(q[0] / r, q[3] / r);
        let b = c(q[2] / r, q[1] / r);
        CMat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
    })
}

fn element(dim: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), dim).prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_hermitian(n in 0u32..6, a in angles(), b in angles()) {
        let s = SpaceDescriptor::Spin { exponent: n as f64 }.build().unwrap();
        let (z, w) = (sphere_point(a.0, a.1), sphere_point(b.0, b.1));
        let k1 = s.product(&z, &w).unwrap();
        let k2 = s.product(&w, &z).unwrap();
        prop_assert!((k1 - k2.conj()).norm() < 1e-12);
    }

    #[test]
    fn klauder_kernel_is_hermitian(z in element(2), w in element(2)) {
        let s = SpaceDescriptor::Klauder { modes: 1 }.build().unwrap();
        let (z, w) = (Point::new(z), Point::new(w));
        let k1 = s.product(&z, &w).unwrap();
        let k2 = s.product(&w, &z).unwrap();
        prop_assert!((k1 - k2.conj()).norm() <= 1e-12 * k1.norm().max(1.0));
    }

    #[test]
    fn spin_gram_is_psd(n in 0u32..7, pts in prop::collection::vec(angles(), 2..12)) {
        let s = SpaceDescriptor::Spin { exponent: n as f64 }.build().unwrap();
        let pts: Vec<Point> = pts.iter().map(|&(t, p)| sphere_point(t, p)).collect();
        prop_assert!(check_coherence(&s, &pts, 1e-8).unwrap().passed);
    }

    #[test]
    fn quantization_is_multiplicative(n in 1u32..5, a in su2(), b in su2()) {
        let s = SpaceDescriptor::Spin { exponent: n as f64 }.build().unwrap();
        let pts: Vec<Point> = (0..2 * (n + 1)).map(|k| sphere_point(0.2 + 0.37 * k as f64, 1.1 * k as f64)).collect();
        let qb = build_quantum_space(&s, &pts, 1e-10).unwrap();
        let a = CoherentMapSpec::linear(&s, a).unwrap();
        let b = CoherentMapSpec::linear(&s, b).unwrap();
        prop_assert!(check_homomorphism(&qb, &a, &b, 1e-8).unwrap() < 1e-8);
    }

    #[test]
    fn lie_product_is_antisymmetric_and_jacobi(x in element(4), y in element(4), z in element(4)) {
        let (alg, _) = AlgebraSpec::Rotator { two_j: 2, hbar: 1.0 }.build().unwrap();
        let xy = lie_product(&alg, &x, &y);
        let yx = lie_product(&alg, &y, &x);
        for k in 0..4 {
            prop_assert!((xy[k] + yx[k]).norm() < 1e-12);
        }
        let j1 = lie_product(&alg, &x, &lie_product(&alg, &y, &z));
        let j2 = lie_product(&alg, &y, &lie_product(&alg, &z, &x));
        let j3 = lie_product(&alg, &z, &lie_product(&alg, &x, &y));
        for k in 0..4 {
            prop_assert!((j1[k] + j2[k] + j3[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn uncertainties_are_nonnegative(b in prop::array::uniform3(-0.57..0.57f64), x in prop::array::uniform4(-3.0..3.0f64)) {
        let (alg, rep) = AlgebraSpec::Qubit { hbar: 1.0 }.build().unwrap();
        let rho = (CMat::identity(2, 2) + &rep[1] * cr(b[0]) + &rep[2] * cr(b[1]) + &rep[3] * cr(b[2])) * cr(0.5);
        let st = state_from_density(&alg, &rep, &DensityState::new(rho).unwrap()).unwrap();
        let x: Vec<C64> = x.iter().map(|&v| cr(v)).collect();
        let u = uncertainty(&st, &x).unwrap();
        prop_assert!(u.sigma >= 0.0);
        prop_assert!(u.clamped < 1e-10);
    }

    #[test]
    fn oscillator_levels(hw in 0.05..5.0f64) {
        let m = ModelSpec::Oscillator { hbar_omega: hw, n_max: 50 }.build().unwrap();
        let r = solve_implicit_spectrum(&m, (0.0, 12.0 * hw), ScanOptions::new(1e-10)).unwrap();
        prop_assert_eq!(r.discrete.len(), 12);
        for (n, root) in r.discrete.iter().enumerate() {
            prop_assert!((root.energy - hw * (n as f64 + 0.5)).abs() <= 1e-10 * hw.max(1.0));
        }
    }

    #[test]
    fn descriptors_round_trip(e in 0.0..8.0f64, dim in 1usize..6, modes in 1usize..4, n in 1u32..4) {
        for d in [
            SpaceDescriptor::Spin { exponent: e },
            SpaceDescriptor::SpinT { exponent: e },
            SpaceDescriptor::Trivial { dim },
            SpaceDescriptor::Klauder { modes },
            SpaceDescriptor::Power { base: Box::new(SpaceDescriptor::Spin { exponent: e }), n },
        ] {
            let text = serde_json::to_string(&d).unwrap();
            let back: SpaceDescriptor = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &d);
            let built = back.build().unwrap();
            prop_assert_eq!(built.descriptor(), &d);
        }
    }
}
