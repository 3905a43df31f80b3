mod common;

use common::*;
use conformal_core::cones::{catalog, Cone, FuncKind, SymFunc};
use conformal_core::field::{make_field, FieldKind, FieldSpec, JetMethod};
use conformal_core::hessian::{conformal_hessian, ricci_transform, spectrum, RicciDirection};
use conformal_core::linalg::{dist, EigList};
use conformal_core::mobius::{kelvin_map, pushforward, MobiusMap};
use conformal_core::ode::{first_integral, threshold_w0, OdeParams, OdeState};
use conformal_core::Jet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_spec_json_round_trip(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let kinds = vec![
            FieldSpec::bubble(&random_bubble_params(&mut r, n)),
            FieldSpec::new(n, FieldKind::LogPower { alpha: r.gen_range(0.1..3.0) }),
            FieldSpec::new(n, FieldKind::OneVarMinF { mu: r.gen_range(1.5..5.0), c: r.gen_range(0.1..2.0) }),
            FieldSpec::new(n, FieldKind::BarrierWDelta { mu: 2.0, delta: r.gen_range(0.001..0.1), eps: 0.5 }),
        ];
        for spec in kinds {
            let back = FieldSpec::from_json(&spec.to_json()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }

    #[test]
    fn map_json_round_trip_and_group_laws(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let m = random_map(&mut r, n);
        let back = MobiusMap::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(&back, &m);
        if let Some((y, image)) = safe_point(&mut r, &m, None) {
            let again = m.inverse().apply_finite(&image).unwrap();
            prop_assert!(dist(&again, &y) < 1e-9 * (1.0 + conformal_core::linalg::norm(&y)));
            let id = m.inverse().compose(&m).unwrap();
            prop_assert!(dist(&id.apply_finite(&y).unwrap(), &y) < 1e-9);
        }
    }

    #[test]
    fn fd_matches_analytic(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let v = bubble_field(&random_bubble_params(&mut r, n));
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let a = v.jet(&x, JetMethod::Analytic).unwrap();
        let f = v.jet(&x, JetMethod::FiniteDifference).unwrap();
        for i in 0..n {
            prop_assert!((a.gradient[i] - f.gradient[i]).abs() < 1e-7);
        }
        prop_assert!(a.hessian.max_abs_diff(&f.hessian) < 1e-5);
    }

    #[test]
    fn invariance_with_fd_jets(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let (v, sing) = random_field(&mut r, n);
        let m = random_map(&mut r, n);
        if let Some((y, image)) = safe_point(&mut r, &m, sing.as_deref()) {
            let pushed = pushforward(&v, &m).unwrap();
            let a = spectrum(&pushed.jet(&y, JetMethod::FiniteDifference).unwrap()).unwrap();
            let b = spectrum(&v.jet(&image, JetMethod::FiniteDifference).unwrap()).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-4 * b.norm().max(1.0), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn permutation_invariance(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let lam: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let mut perm = lam.clone();
        for i in (1..n).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        for c in catalog(n) {
            prop_assert_eq!(c.g(&lam), c.g(&perm));
        }
        let fs = [FuncKind::SigmaK(1), FuncKind::SigmaK(n), FuncKind::Gp(1), FuncKind::MinMu(2.0), FuncKind::MinMuShifted(3.0), FuncKind::Affine(0.5)];
        for k in fs {
            let f = SymFunc::new(n, k).unwrap();
            prop_assert_eq!(f.eval(&lam), f.eval(&perm));
        }
    }

    #[test]
    fn cones_absorb_the_positive_cone(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let lam: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let bump: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..2.0)).collect();
        let moved: Vec<f64> = lam.iter().zip(&bump).map(|(a, b)| a + b).collect();
        for c in catalog(n) {
            if c.g(&lam) > 0.0 {
                prop_assert!(c.g(&moved) > 0.0, "{}", c.name());
            }
        }
    }

    #[test]
    fn constant_shift_scales_hessian(seed in any::<u64>(), n in 2usize..6, shift in -2.0f64..2.0) {
        let mut r = rng(seed);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let base = Jet { point: x.clone(), value: 0.3, gradient: g.clone(), hessian: conformal_core::SymMatrix::from_fn(n, |i, j| (i + 2 * j) as f64 * 0.1) };
        let shifted = Jet { value: 0.3 + shift, ..base.clone() };
        let a = conformal_hessian(&base).scaled((-2.0 * shift).exp());
        prop_assert!(a.max_abs_diff(&conformal_hessian(&shifted)) < 1e-12 * (1.0 + a.frobenius()));
    }

    #[test]
    fn kelvin_keeps_the_boundary(seed in any::<u64>(), n in 2usize..6, lam in 0.1f64..5.0) {
        let mut r = rng(seed);
        let mut x: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        x[n - 1] = 0.0;
        let mut y: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        y[n - 1] = 0.0;
        prop_assume!(dist(&x, &y) > 1e-3);
        let m = kelvin_map(&x, lam).unwrap();
        let img = m.apply_finite(&y).unwrap();
        prop_assert_eq!(img[n - 1], 0.0);
        let mut up = y.clone();
        up[n - 1] = r.gen_range(0.01..2.0);
        prop_assert!(m.apply_finite(&up).unwrap()[n - 1] > 0.0);
        let back = m.apply_finite(&img).unwrap();
        prop_assert!(dist(&back, &y) < 1e-10 * (1.0 + conformal_core::linalg::norm(&y)));
    }

    #[test]
    fn threshold_zeroes_the_first_integral(mu in 1.1f64..6.0, extra in 0.1f64..5.0, v0 in -1.5f64..1.5) {
        let p = mu + 1.0 + extra;
        let w = threshold_w0(mu, p, v0).unwrap();
        let i = first_integral(&OdeParams::new(mu, p).unwrap(), &OdeState { t: 0.0, phi: v0.exp(), w }).unwrap();
        prop_assert!(i.abs() <= 1e-12 * (1.0 + w * w * v0.exp().powf(mu - 1.0)));
    }

    #[test]
    fn ricci_round_trip(seed in any::<u64>(), n in 3usize..7) {
        let mut r = rng(seed);
        let lam = EigList::from_unsorted((0..n).map(|_| r.gen_range(-3.0..3.0)).collect());
        let there = ricci_transform(&lam, RicciDirection::SchoutenToRicci).unwrap();
        let back = ricci_transform(&there, RicciDirection::RicciToSchouten).unwrap();
        prop_assert!(back.max_abs_diff(&lam) < 1e-12);
    }
}

#[test]
fn tabulated_field_tracks_its_samples() {
    let ts: Vec<f64> = (0..=200).map(|i| i as f64 * 0.025).collect();
    let closed = |t: f64| (1.0 + t).ln();
    let spec = FieldSpec::new(
        3,
        FieldKind::OneVarTabulated {
            t: ts.clone(),
            v: ts.iter().map(|&t| closed(t)).collect(),
            slope_start: 1.0,
            slope_end: 1.0 / 6.0,
        },
    );
    let v = make_field(&spec).unwrap();
    for t in [0.01, 1.3, 4.2] {
        assert!((v.value(&[0.2, -0.1, t]).unwrap() - closed(t)).abs() < 1e-7);
    }
    let cone = Cone::gamma_k(3, 1).unwrap();
    assert_eq!(cone.dim(), 3);
}
