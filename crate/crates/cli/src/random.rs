//! Seeded randomized identities of the operator calculus.

use std::time::Instant;

use ilw_core::diffpoly::DiffMonomial;
use ilw_core::hierarchy::poisson_bracket;
use ilw_core::scalars::{rat, ScalarExp};
use ilw_core::{DiffPoly, LocalFunctional, Scalar, ShiftOperator, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_poly(rng: &mut ChaCha8Rng, order: u32) -> DiffPoly {
    let n = rng.gen_range(1..=3);
    let terms = (0..n).map(|_| {
        let vars = rng.gen_range(0..=2);
        let pairs: Vec<(usize, u32)> = (0..vars).map(|_| (rng.gen_range(0..=3), rng.gen_range(1..=2))).collect();
        let exp = ScalarExp::new(rng.gen_range(0..=1), rng.gen_range(0..=2), rng.gen_range(0..=order));
        let c = Scalar::monomial(exp, rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)), order);
        (DiffMonomial::from_pairs(&pairs), c)
    });
    DiffPoly::from_terms(terms, order)
}

/// Per instance: `∫ res [f Λ^m, g Λ^{-m}] dx = 0`, the Jacobi identity for
/// zero-order operators, and antisymmetry of the Poisson bracket.
pub fn random_identities(seed: u64, count: u32, order: u32) -> VerificationReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = vec![seed as i64, count as i64];
    let fail = |w: DiffPoly, what: String| VerificationReport::failed("random_identities", params.clone(), w, what, started);
    for i in 0..count {
        let m = rng.gen_range(-3..=3);
        let a = ShiftOperator::monomial(m, random_poly(&mut rng, order));
        let b = ShiftOperator::monomial(-m, random_poly(&mut rng, order));
        let res = match a.commutator(&b).and_then(|c| c.residue()) {
            Ok(r) => r,
            Err(e) => return fail(DiffPoly::zero(order), format!("instance {i}: {e}")),
        };
        if !LocalFunctional::new(res.clone()).is_zero() {
            return fail(res, format!("instance {i}: residue of a commutator is not a total derivative"));
        }

        let ops: Vec<ShiftOperator> = (0..3)
            .map(|_| ShiftOperator::monomial(rng.gen_range(-2..=2), random_poly(&mut rng, order)))
            .collect();
        let jacobi = (|| {
            let t1 = ops[0].commutator(&ops[1].commutator(&ops[2])?)?;
            let t2 = ops[1].commutator(&ops[2].commutator(&ops[0])?)?;
            let t3 = ops[2].commutator(&ops[0].commutator(&ops[1])?)?;
            t1.try_add(&t2)?.try_add(&t3)
        })();
        match jacobi {
            Ok(sum) => {
                if let Some((n, _, p)) = sum.first_nonzero() {
                    return fail(p.clone(), format!("instance {i}: Jacobi identity fails at S^{n}"));
                }
            }
            Err(e) => return fail(DiffPoly::zero(order), format!("instance {i}: {e}")),
        }

        let f = LocalFunctional::new(random_poly(&mut rng, order));
        let g = LocalFunctional::new(random_poly(&mut rng, order));
        let sum = poisson_bracket(&f, &g).try_add(&poisson_bracket(&g, &f)).expect("same order");
        if !sum.is_zero() {
            return fail(sum.density, format!("instance {i}: bracket is not antisymmetric"));
        }
    }
    VerificationReport::passed("random_identities", params, started)
}
