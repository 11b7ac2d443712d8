use halfline_nls::field::{
    derivative, h1_norm, h2_norm, l2_norm, random_smooth_field, ComplexField, Grid, RandomFieldOptions,
};
use halfline_nls::hamiltonian::Hamiltonian;
use halfline_nls::inequalities::{check_gn, check_young_split, gn_parameters, young_split};
use halfline_nls::lift::{BoundaryForce, LiftContext};
use halfline_nls::nonlinearity::NonlinearitySpec;
use halfline_nls::potential::{kato_constant, local_l1_sup, PotentialPreset, PotentialSpec};
use halfline_nls::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(10.0, 95).unwrap()
}

fn field(seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_smooth_field(grid(), &mut rng, &RandomFieldOptions::default())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn harmonic() -> (PotentialSpec, Hamiltonian) {
    let pot = PotentialPreset::parse("harmonic(0.3)").unwrap().build(grid()).unwrap();
    let ham = Hamiltonian::assemble(grid(), &pot).unwrap();
    (pot, ham)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_subadditive_and_homogeneous(s1 in any::<u64>(), s2 in any::<u64>(), ar in -3.0..3.0f64, ai in -3.0..3.0f64) {
        let (pot, ham) = harmonic();
        let q = pot.sqrt_v1();
        let (f, g) = (field(s1), field(s2));
        let sum = f.add(&g).unwrap();
        let a = c(ar, ai);
        let norms: [&dyn Fn(&ComplexField) -> f64; 3] =
            [&|u| l2_norm(u), &|u| h1_norm(u, q), &|u| h2_norm(u, &ham)];
        for n in norms {
            prop_assert!(n(&sum) <= (n(&f) + n(&g)) * (1.0 + 1e-12));
            let lhs = n(&f.scale(a));
            let rhs = a.norm() * n(&f);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
        prop_assert!(h1_norm(&f, q) >= l2_norm(&f));
        prop_assert!(h2_norm(&f, &ham) >= h1_norm(&f, q));
    }

    #[test]
    fn derivative_is_exact_on_quadratics(a0 in -2.0..2.0f64, a1 in -2.0..2.0f64, a2 in -2.0..2.0f64) {
        let g = grid();
        let u = ComplexField::from_fn(g, |x| c(a0 + a1 * x + a2 * x * x, a1 * x));
        let d = derivative(&u);
        for (j, z) in d.values().iter().enumerate() {
            let x = g.x(j);
            prop_assert!((z - c(a1 + 2.0 * a2 * x, a1)).norm() < 1e-10);
        }
    }

    #[test]
    fn wirtinger_apply_is_real_linear(
        zr in -2.0..2.0f64, zi in -2.0..2.0f64,
        vr in -1.0..1.0f64, vi in -1.0..1.0f64,
        wr in -1.0..1.0f64, wi in -1.0..1.0f64,
        al in -2.0..2.0f64, be in -2.0..2.0f64,
    ) {
        let nl = NonlinearitySpec::power(c(1.0, 0.0), 3.0).unwrap();
        let (z, v, w) = (c(zr, zi), c(vr, vi), c(wr, wi));
        let lhs = nl.wirtinger_apply(1.0, 0.0, z, v * al + w * be);
        let rhs = nl.wirtinger_apply(1.0, 0.0, z, v) * al + nl.wirtinger_apply(1.0, 0.0, z, w) * be;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn propagation_is_unitary_with_group_law(seed in any::<u64>(), s in 0.0..5.0f64, t in 0.0..5.0f64) {
        let (_, ham) = harmonic();
        let u = ComplexField::from_interior(grid(), field(seed).interior()).unwrap();
        let n0 = l2_norm(&u);
        let direct = ham.propagate(&u, s + t);
        let composed = ham.propagate(&ham.propagate(&u, s), t);
        prop_assert!((l2_norm(&direct) - n0).abs() <= 1e-11 * n0);
        prop_assert!(l2_norm(&direct.sub(&composed).unwrap()) <= 1e-11 * n0);
        let e0 = ham.quadratic_form(&u, &u).unwrap().re;
        let e1 = ham.quadratic_form(&direct, &direct).unwrap().re;
        prop_assert!((e1 - e0).abs() <= 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn kato_constant_monotonicity(cst in 0.01..10.0f64, e1 in 0.01..10.0f64, e2 in 0.01..10.0f64) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(kato_constant(cst, hi) <= kato_constant(cst, lo));
        prop_assert!(kato_constant(cst, lo) <= kato_constant(cst * 1.5, lo));
    }

    #[test]
    fn local_l1_sup_is_subadditive(s1 in any::<u64>(), s2 in any::<u64>()) {
        let g = grid();
        let w1: Vec<f64> = field(s1).values().iter().map(|z| z.re).collect();
        let w2: Vec<f64> = field(s2).values().iter().map(|z| z.im).collect();
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a.abs() + b.abs()).collect();
        let lhs = local_l1_sup(&g, &sum, 1.0).unwrap();
        let rhs = local_l1_sup(&g, &w1, 1.0).unwrap() + local_l1_sup(&g, &w2, 1.0).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn gn_exponent_identities(p in 1.0001..4.9999f64) {
        let par = gn_parameters(p).unwrap();
        prop_assert!(((1.0 - par.k) * 2.0 - par.a * (p + 1.0)).abs() <= 1e-12);
        prop_assert!((2.0 * par.nu * par.k - (1.0 - par.a) * (p + 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn scalar_young_split(a in 0.0..100.0f64, b in 0.0..100.0f64, k in 0.05..1.0f64, eps in 0.01..10.0f64) {
        let (lhs, rhs) = young_split(a, b, k, eps);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn young_split_follows_from_gn(seed in any::<u64>(), p in prop::sample::select(vec![2.0, 3.0, 4.0]), eps in 0.05..5.0f64) {
        let u = field(seed);
        let constant = check_gn(&u, p).unwrap().ratio * 1.05;
        let r = check_young_split(&u, p, eps, constant).unwrap();
        prop_assert!(r.gn_holds());
        prop_assert!(r.split_dominates());
        prop_assert!(r.holds());
    }

    #[test]
    fn lift_vanishes_beyond_its_width(t in 0.0..3.0f64, amp in -1.0..1.0f64) {
        let (pot, _) = harmonic();
        let force = BoundaryForce::ramped_sinusoid(amp, 1.3, 1.0);
        let lift = LiftContext::new(grid(), &pot, NonlinearitySpec::zero(), force, Some(1.5)).unwrap();
        let r = lift.lift_r(t).unwrap();
        for (j, z) in r.r.values().iter().enumerate() {
            if grid().x(j) >= 1.5 {
                prop_assert_eq!(*z, c(0.0, 0.0));
            }
        }
    }
}
