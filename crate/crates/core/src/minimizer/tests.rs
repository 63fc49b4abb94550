use super::*;
use crate::domains::ModelDomain;
use crate::hilbert::{bergman_at_origin, gram_matrix};
use crate::ideals::{germ_in_ideal, plus_ideal};
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn poly1(terms: &[(u32, f64)]) -> MonomialFn {
    MonomialFn::from_terms(1, terms.iter().map(|(a, v)| (vec![*a], c(*v)))).unwrap()
}

fn disc(t: f64) -> SublevelRegion {
    SublevelRegion::new(ModelDomain::unit_disc(), ToricWeight::new(vec![1.0]).unwrap(), t).unwrap()
}

fn basis1() -> BasisTruncation {
    BasisTruncation::new(1, 6).unwrap()
}

#[test]
fn constant_modulo_z_on_disc() {
    let z = MonomialIdeal::principal(vec![1]);
    let r = minimal_l2(&poly1(&[(0, 1.0)]), &z, &disc(0.0), None, &basis1()).unwrap();
    assert_relative_eq!(r.value, PI, max_relative = 1e-14);
    assert_eq!(r.minimizer, Some(poly1(&[(0, 1.0)])));
    assert_eq!(r.method, Solver::Orthogonal);
    for (alpha, _) in r.minimizer.as_ref().unwrap().terms() {
        assert!(!z.contains(alpha));
    }
}

#[test]
fn plus_ideal_of_log_z() {
    let ideal = plus_ideal(&ToricWeight::new(vec![1.0]).unwrap(), 1.0).unwrap();
    let r = minimal_l2(&poly1(&[(0, 1.0)]), &ideal, &disc(0.0), None, &basis1()).unwrap();
    assert_relative_eq!(r.value, PI, max_relative = 1e-14);
}

#[test]
fn free_terms_are_dropped() {
    let z = MonomialIdeal::principal(vec![1]);
    let r = minimal_l2(&poly1(&[(0, 1.0), (1, 1.0)]), &z, &disc(0.0), None, &basis1()).unwrap();
    assert_relative_eq!(r.value, PI, max_relative = 1e-14);
    assert_eq!(r.minimizer, Some(poly1(&[(0, 1.0)])));
    assert!(r.residual_pythagoras.unwrap() < 1e-15);
}

#[test]
fn full_ring_gives_zero() {
    let r = minimal_l2(&poly1(&[(0, 1.0)]), &MonomialIdeal::full(1), &disc(0.0), None, &basis1()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.minimizer, Some(MonomialFn::zero(1)));
}

#[test]
fn pythagoras_examples() {
    let r = pythagoras_residual(&poly1(&[(0, 1.0)]), &poly1(&[(0, 1.0), (1, 1.0)]), &disc(0.0), None)
        .unwrap();
    assert!(r < 1e-15);
    let f = poly1(&[(0, 2.0), (3, -1.0)]);
    assert_eq!(pythagoras_residual(&f, &f, &disc(0.3), None).unwrap(), 0.0);
    // not orthogonal: F_t = 1 + z against F̂ = 1
    let bad = pythagoras_residual(&poly1(&[(0, 1.0), (1, 1.0)]), &poly1(&[(0, 1.0)]), &disc(0.0), None)
        .unwrap();
    assert_relative_eq!(bad, 1.0, max_relative = 1e-14);
    let phi = ToricWeight::new(vec![2.0]).unwrap();
    assert!(matches!(
        pythagoras_residual(&poly1(&[(0, 1.0)]), &poly1(&[(0, 1.0)]), &disc(0.0), Some(&phi)),
        Err(Error::DivergedNorm { .. })
    ));
}

#[test]
fn divergent_fixed_norm_is_infinite() {
    let phi = ToricWeight::new(vec![2.0]).unwrap();
    let z = MonomialIdeal::principal(vec![1]);
    let f = poly1(&[(0, 1.0)]);
    let r = minimal_l2(&f, &z, &disc(0.0), Some(&phi), &basis1()).unwrap();
    assert!(r.is_infinite());
    assert!(r.minimizer.is_none());
    let ls = minimal_l2_least_squares(&f, &z, &disc(0.0), Some(&phi), &basis1(), GramSource::Exact).unwrap();
    assert!(ls.is_infinite());
    assert!(ls.minimizer.is_none());
    // if f lies in the ideal the divergent constant is never needed
    let r = minimal_l2(&poly1(&[(2, 1.0)]), &z, &disc(0.0), Some(&phi), &basis1()).unwrap();
    assert_eq!(r.value, 0.0);
}

#[test]
fn basis_must_cover_f() {
    let small = BasisTruncation::new(1, 1).unwrap();
    let f = poly1(&[(3, 1.0)]);
    assert!(minimal_l2(&f, &MonomialIdeal::full(1), &disc(0.0), None, &small).is_err());
}

#[test]
fn monte_carlo_gram_matches_orthogonal_value() {
    let r = SublevelRegion::new(
        ModelDomain::unit_polydisc(2),
        ToricWeight::new(vec![1.0, 2.0]).unwrap(),
        0.4,
    )
    .unwrap();
    let f = MonomialFn::from_terms(
        2,
        vec![(vec![0, 0], c(1.0)), (vec![1, 0], c(0.5)), (vec![0, 2], Complex64::new(0.0, 2.0))],
    )
    .unwrap();
    let ideal = MonomialIdeal::new(2, vec![vec![1, 0], vec![0, 2]]).unwrap();
    let basis = BasisTruncation::new(2, 3).unwrap();
    let exact = minimal_l2(&f, &ideal, &r, None, &basis).unwrap();
    let mc = minimal_l2_least_squares(
        &f,
        &ideal,
        &r,
        None,
        &basis,
        GramSource::MonteCarlo { samples: 200_000, seed: 9 },
    )
    .unwrap();
    let se = mc.std_error.unwrap();
    assert!((mc.value - exact.value).abs() <= 4.0 * se, "{} vs {} ± {se}", mc.value, exact.value);
    assert!(mc.residual_pythagoras.unwrap() < 1e-9);

    // same seed, same samples: the minimizer is optimal for the sampled form
    let samples = draw_region_samples(&r, 200_000, 9).unwrap();
    let gram = sample_gram(&basis, &samples, None).unwrap();
    let best = mc.minimizer.clone().unwrap();
    let q0 = quadratic_form(&gram, &basis, &best);
    assert_relative_eq!(q0, mc.value, max_relative = 1e-9);
    for alpha in basis.exponents().iter().filter(|a| ideal.contains(a)) {
        for delta in [c(1e-3), c(-1e-3), Complex64::new(0.0, 1e-3)] {
            let bumped = MonomialFn::from_terms(2, best.terms().map(|(a, v)| (a.clone(), *v)).chain([(alpha.clone(), delta)])).unwrap();
            assert!(quadratic_form(&gram, &basis, &bumped) > q0);
        }
    }

    // independent stream for the Pythagoras identity
    let fresh = draw_region_samples(&r, 200_000, 10).unwrap();
    let (defect, se) = pythagoras_defect_mc(&exact.minimizer.unwrap(), &f, &fresh, None).unwrap();
    assert!(defect.abs() <= 5.0 * se, "defect {defect} se {se}");
}

#[test]
fn minimize_checks_truncation() {
    let z = MonomialIdeal::principal(vec![1]);
    for solver in [Solver::Orthogonal, Solver::LeastSquares] {
        let opts = MinimizeOptions { solver, ..MinimizeOptions::default() };
        let r = minimize(&poly1(&[(0, 1.0), (1, 1.0)]), &z, &disc(0.2), None, &opts).unwrap();
        assert_eq!(r.truncation_change, Some(0.0));
        assert_relative_eq!(r.value, PI * (-0.4f64).exp(), max_relative = 1e-13);
    }
    let opts = MinimizeOptions { solver: Solver::MonteCarlo, samples: 20_000, degree: 3, ..MinimizeOptions::default() };
    let r = minimize(&poly1(&[(0, 1.0)]), &z, &disc(0.0), None, &opts).unwrap();
    assert_eq!(r.truncation_change, None);
    assert!(r.std_error.is_some());
}

#[test]
fn solver_handles_complex_hermitian_systems() {
    let a = DMatrix::from_fn(4, 4, |i, j| Complex64::new((i * 3 + j) as f64 * 0.1 + 0.2, (i as f64 - j as f64) * 0.3));
    let g = a.adjoint() * &a + DMatrix::identity(4, 4).map(|x: Complex64| x * 0.5);
    let x_true = DVector::from_fn(4, |i, _| Complex64::new(i as f64 - 1.0, 0.5 * i as f64));
    let b = &g * &x_true;
    let x = solve_hermitian_psd(&g, &b).unwrap();
    for i in 0..4 {
        assert!((x[i] - x_true[i]).norm() < 1e-10);
    }
}

#[test]
fn singular_gram_is_reported() {
    let v = DVector::from_vec(vec![c(1.0), c(1.0), c(1.0 + 1e-9)]);
    let g = &v * v.adjoint() + DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0), c(1e-20), c(0.0)]));
    match solve_hermitian_psd(&g, &DVector::from_element(3, c(1.0))) {
        Err(Error::Conditioning { condition, cap, free }) => {
            assert!(condition > cap);
            assert_eq!(free, 3);
        }
        other => panic!("expected a conditioning error, got {other:?}"),
    }
}

fn instance() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, f64, Vec<(Vec<u32>, f64, f64)>, Vec<u32>, bool)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.5f64..1.2, n),
            // keeps the region large enough that a 1e-3 bump is visible in f64
            prop::collection::vec(0.5f64..2.0, n),
            0.0f64..2.0,
            prop::collection::vec((prop::collection::vec(0u32..3, n), -2.0f64..2.0, -2.0f64..2.0), 1..5),
            prop::collection::vec(0u32..3, n),
            any::<bool>(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn least_squares_matches_orthogonal((n, radii, psi, t, terms, gen, use_phi) in instance()) {
        let r = SublevelRegion::new(ModelDomain::polydisc(radii).unwrap(), ToricWeight::new(psi).unwrap(), t).unwrap();
        let phi = use_phi.then(|| ToricWeight::new(vec![0.5; n]).unwrap());
        let f = MonomialFn::from_terms(n, terms.into_iter().map(|(a, re, im)| (a, Complex64::new(re, im)))).unwrap();
        let ideal = MonomialIdeal::principal(gen);
        let basis = BasisTruncation::covering(&f, 4).unwrap();
        let orth = minimal_l2(&f, &ideal, &r, phi.as_ref(), &basis).unwrap();
        let ls = minimal_l2_least_squares(&f, &ideal, &r, phi.as_ref(), &basis, GramSource::Exact).unwrap();
        prop_assert!((orth.value - ls.value).abs() <= 1e-6 * orth.value.max(1e-300));
        if let Some(res) = orth.residual_pythagoras {
            prop_assert!(res < 1e-9);
        }
        // value = 0 exactly when f already lies in the ideal
        prop_assert_eq!(orth.value == 0.0, germ_in_ideal(&f, &ideal));

        // perturbing a free coefficient strictly increases the norm
        let gram = gram_matrix(&basis, &r, phi.as_ref()).unwrap();
        let best = orth.minimizer.unwrap();
        let q0 = quadratic_form(&gram, &basis, &best);
        for alpha in basis.exponents().iter().filter(|a| ideal.contains(a)).take(5) {
            // sized so the increase is about 1e-6 q0, well above round-off
            let k = basis.index_of(alpha).unwrap();
            let eps = if q0 > 0.0 { 1e-3 * (q0 / gram[(k, k)].re).sqrt() } else { 1e-3 };
            let bumped = MonomialFn::from_terms(n, best.terms().map(|(a, v)| (a.clone(), *v)).chain([(alpha.clone(), c(eps))])).unwrap();
            prop_assert!(quadratic_form(&gram, &basis, &bumped) > q0);
        }
    }

    #[test]
    fn bergman_lower_bound(
        n in 1usize..=3,
        ball in any::<bool>(),
        gen in prop::collection::vec(0u32..3, 3),
        phi_c in prop::collection::vec(0.0f64..1.5, 3),
    ) {
        let domain = if ball { ModelDomain::ball(1.0, n).unwrap() } else { ModelDomain::unit_polydisc(n) };
        let mut gen = gen[..n].to_vec();
        if gen.iter().all(|g| *g == 0) {
            gen[0] = 1;
        }
        let ideal = MonomialIdeal::principal(gen);
        let r = SublevelRegion::new(domain.clone(), ToricWeight::new(vec![1.0; n]).unwrap(), 0.0).unwrap();
        let phi = ToricWeight::new(phi_c[..n].iter().map(|x| x + 0.01).collect()).unwrap();
        let basis = BasisTruncation::new(n, 2).unwrap();
        for w in [None, Some(&phi)] {
            let v = minimal_l2(&MonomialFn::constant(n, 1.0), &ideal, &r, w, &basis).unwrap().value;
            prop_assert!(v >= (1.0 - 1e-12) / bergman_at_origin(&domain));
        }
    }
}
