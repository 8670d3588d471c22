use ilw_core::diffpoly::{DiffMonomial, DiffPoly, LocalFunctional};
use ilw_core::hierarchy::poisson_bracket;
use ilw_core::scalars::{rat, Scalar, ScalarExp};
use ilw_core::shiftops::ShiftOperator;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: u32 = 4;

fn random_scalar(rng: &mut ChaCha8Rng, max_eps: u32) -> Scalar {
    let n = rng.gen_range(1..=3);
    Scalar::from_terms(
        (0..n).map(|_| {
            let e = ScalarExp::new(rng.gen_range(0..=1), rng.gen_range(0..=2), rng.gen_range(0..=max_eps));
            (e, rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)))
        }),
        K,
    )
}

fn random_monomial(rng: &mut ChaCha8Rng) -> DiffMonomial {
    let n = rng.gen_range(0..=2);
    let pairs: Vec<(usize, u32)> = (0..n).map(|_| (rng.gen_range(0..=3), rng.gen_range(1..=2))).collect();
    DiffMonomial::from_pairs(&pairs)
}

fn random_poly(rng: &mut ChaCha8Rng) -> DiffPoly {
    let n = rng.gen_range(1..=3);
    DiffPoly::from_terms((0..n).map(|_| (random_monomial(rng), random_scalar(rng, K))), K)
}

/// Homogeneous of degree `deg` under `deg u_k = k`, `deg ε = −1`.
fn random_homogeneous(rng: &mut ChaCha8Rng, deg: i64) -> DiffPoly {
    let mut out = DiffPoly::zero(K);
    for _ in 0..3 {
        let m = random_monomial(rng);
        let eps = m.weight() as i64 - deg;
        if (0..=K as i64).contains(&eps) {
            let c = Scalar::monomial(
                ScalarExp::new(rng.gen_range(0..=1), rng.gen_range(0..=2), eps as u32),
                rat(rng.gen_range(1..=5), rng.gen_range(1..=3)),
                K,
            );
            out += &DiffPoly::term(m, c, K);
        }
    }
    out
}

fn random_operator(rng: &mut ChaCha8Rng) -> ShiftOperator {
    let mut op = ShiftOperator::zero(K);
    for _ in 0..2 {
        let n = rng.gen_range(-2..=2);
        op = op.try_add(&ShiftOperator::monomial(n, random_poly(rng))).unwrap();
    }
    op
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_ring_axioms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_scalar(&mut r, K), random_scalar(&mut r, K), random_scalar(&mut r, K));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&a * &Scalar::one(K), a);
    }

    #[test]
    fn diffpoly_product_rule(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (random_poly(&mut r), random_poly(&mut r));
        let lhs = (&p * &q).x_derivative();
        let rhs = &(&p.x_derivative() * &q) + &(&p * &q.x_derivative());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn variational_derivative_kills_total_derivatives(seed in any::<u64>()) {
        let p = random_poly(&mut rng(seed));
        prop_assert!(p.x_derivative().variational_derivative().is_zero());
    }

    #[test]
    fn primitive_round_trip(seed in any::<u64>()) {
        let p = random_poly(&mut rng(seed));
        let without_constant = &p - &DiffPoly::constant(p.constant_part());
        let prim = p.x_derivative().formal_primitive().unwrap();
        prop_assert_eq!(prim.x_derivative(), p.x_derivative());
        prop_assert_eq!(prim, without_constant);
    }

    #[test]
    fn density_normal_form_is_canonical(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (random_poly(&mut r), random_poly(&mut r));
        let nf = p.density_normal_form();
        prop_assert!(LocalFunctional::new(&nf - &p).is_zero());
        prop_assert_eq!(nf.density_normal_form(), nf.clone());
        prop_assert!(q.x_derivative().density_normal_form().is_zero());
        prop_assert_eq!((&p + &q.x_derivative()).density_normal_form(), nf);
    }

    #[test]
    fn shift_composition(seed in any::<u64>(), m in -3i64..=3, n in -3i64..=3) {
        let p = random_poly(&mut rng(seed));
        prop_assert_eq!(p.lambda_shift(m).lambda_shift(n), p.lambda_shift(m + n));
        prop_assert_eq!(p.lambda_shift(0), p.clone());
    }

    #[test]
    fn shifts_preserve_homogeneity(seed in any::<u64>(), n in -3i64..=3, deg in -1i64..=3) {
        let p = random_homogeneous(&mut rng(seed), deg);
        let shifted = p.lambda_shift(n);
        prop_assert_eq!(shifted.homogeneity_degree().unwrap(), p.homogeneity_degree().unwrap());
    }

    #[test]
    fn evolutionary_bracket(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q, f) = (random_poly(&mut r), random_poly(&mut r), random_poly(&mut r));
        let lhs = &f.evolutionary_derivative(&q).evolutionary_derivative(&p)
            - &f.evolutionary_derivative(&p).evolutionary_derivative(&q);
        let bracket = &q.evolutionary_derivative(&p) - &p.evolutionary_derivative(&q);
        prop_assert_eq!(lhs, f.evolutionary_derivative(&bracket));
    }

    #[test]
    fn operator_associativity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_operator(&mut r), random_operator(&mut r), random_operator(&mut r));
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn operator_associativity_with_first_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, c) = (random_operator(&mut r), random_operator(&mut r));
        let d = ShiftOperator::first_order_monomial(r.gen_range(-1..=1), random_poly(&mut r));
        let left = a.compose(&d).unwrap().compose(&c).unwrap();
        let right = a.compose(&d.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn jacobi_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_operator(&mut r), random_operator(&mut r), random_operator(&mut r));
        let t1 = a.commutator(&b.commutator(&c).unwrap()).unwrap();
        let t2 = b.commutator(&c.commutator(&a).unwrap()).unwrap();
        let t3 = c.commutator(&a.commutator(&b).unwrap()).unwrap();
        prop_assert!(t1.try_add(&t2).unwrap().try_add(&t3).unwrap().is_zero());
    }

    #[test]
    fn bracket_antisymmetry(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = LocalFunctional::new(random_poly(&mut r));
        let g = LocalFunctional::new(random_poly(&mut r));
        prop_assert!(poisson_bracket(&f, &f).is_zero());
        let sum = poisson_bracket(&f, &g).try_add(&poisson_bracket(&g, &f)).unwrap();
        prop_assert!(sum.is_zero());
    }
}

/// `∫ res [f Λ^m, g Λ^n] dx = 0`.
#[test]
fn residue_of_commutator_integrates_to_zero() {
    let mut r = rng(0x5eed);
    for _ in 0..100 {
        let m = r.gen_range(-3..=3);
        let a = ShiftOperator::monomial(m, random_poly(&mut r));
        let b = ShiftOperator::monomial(-m, random_poly(&mut r));
        let res = a.commutator(&b).unwrap().residue().unwrap();
        assert!(LocalFunctional::new(res).is_zero());
    }
}
