use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{lax_hamiltonian, LaxData, Result};
use crate::diffpoly::{DiffMonomial, DiffPoly, LocalFunctional, MuDiffPoly};
use crate::scalars::{bernoulli, factorial, format_rational, Rational, Scalar};
use crate::scalars::MuScalar;

/// `P_d(y) = y Π_{i=1}^{d-1} (y + τ/i) = Σ_{j=1}^d P_{d,j} y^j τ^{d-j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdPolynomial {
    pub d: u32,
    /// `P_{d,1} … P_{d,d}`.
    pub coeffs: Vec<Rational>,
}

impl PdPolynomial {
    /// `P_{d,j}` for `1 ≤ j ≤ d`.
    pub fn coeff(&self, j: u32) -> &Rational {
        &self.coeffs[(j - 1) as usize]
    }
}

#[derive(Serialize, Deserialize)]
struct PdJson {
    d: u32,
    coeffs: Vec<String>,
}

impl Serialize for PdPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PdJson { d: self.d, coeffs: self.coeffs.iter().map(format_rational).collect() }.serialize(serializer)
    }
}

pub fn pd_polynomial(d: u32) -> PdPolynomial {
    assert!(d >= 1, "P_d is defined for d >= 1");
    // poly[j] = coefficient of y^j
    let mut poly = vec![Rational::zero(), Rational::one()];
    for i in 1..d {
        let c = Rational::new(BigInt::one(), BigInt::from(i));
        let mut next = vec![Rational::zero(); poly.len() + 1];
        for (j, p) in poly.iter().enumerate() {
            next[j + 1] += p;
            next[j] += p * &c;
        }
        poly = next;
    }
    PdPolynomial { d, coeffs: poly[1..].to_vec() }
}

/// `{F, G} = ∫ δF/δu · ∂x δG/δu dx`.
pub fn poisson_bracket(f: &LocalFunctional, g: &LocalFunctional) -> LocalFunctional {
    let df = f.variational_derivative();
    let dg = g.variational_derivative().x_derivative();
    LocalFunctional::new(&df * &dg)
}

/// `|B_{2g}| / (2g)!`.
fn bernoulli_weight(g: u32) -> Rational {
    bernoulli(2 * g as usize).abs() / Rational::from_integer(factorial(2 * g))
}

fn eps_tau(eps: u32, tau: u32, c: Rational, order: u32) -> Scalar {
    Scalar::monomial(crate::scalars::ScalarExp::new(0, tau, eps), c, order)
}

/// `∫ u²/2 dx`.
fn ilw_h0(order: u32) -> LocalFunctional {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    LocalFunctional::new(DiffPoly::term(DiffMonomial::var_pow(0, 2), Scalar::from_rational(half, order), order))
}

/// `∫ (u³/6 − τ Σ_g |B_{2g}|/(2(2g)!) ε^{2g} u u_{2g}) dx` in τ-gauge.
pub fn ilw_h1(order: u32) -> LocalFunctional {
    let sixth = Rational::new(BigInt::one(), BigInt::from(6));
    let mut density = DiffPoly::term(DiffMonomial::var_pow(0, 3), Scalar::from_rational(sixth, order), order);
    for g in 1..=order / 2 {
        let c = -bernoulli_weight(g) / Rational::from_integer(BigInt::from(2));
        let m = DiffMonomial::from_pairs(&[(0, 1), (2 * g as usize, 1)]);
        density += &DiffPoly::term(m, eps_tau(2 * g, 1, c, order), order);
    }
    LocalFunctional::new(density)
}

/// `∂x δh₁/δu`, the first ILW flow in τ-gauge.
pub fn ilw_t1_flow(order: u32) -> DiffPoly {
    ilw_h1(order).variational_derivative().x_derivative()
}

/// `u u_x + Σ_{g≥1} μ^{g-1} ε^{2g} |B_{2g}|/(2g)! u_{2g+1}`, carried to τ-gauge.
pub fn ilw_equation_rhs(order: u32) -> DiffPoly {
    let mut terms = vec![(DiffMonomial::from_pairs(&[(0, 1), (1, 1)]), MuScalar::monomial(0, 0, Rational::one()))];
    for g in 1..=order / 2 {
        terms.push((DiffMonomial::var(2 * g as usize + 1), MuScalar::monomial(g as i64 - 1, 2 * g, bernoulli_weight(g))));
    }
    MuDiffPoly::from_terms(terms).to_tau_gauge(order).expect("non-negative τ powers")
}

/// The displayed density of `h₂` in μ-form:
/// `u⁴/4! + ε²/48 u² u_xx + Σ_{g≥2} |B_{2g}|/(2g)! ε^{2g} (μ^{g-2} (g+1)/2 u u_{2g} + μ^{g-1}/4 u² u_{2g})`,
/// through `ε^order`.
pub fn ilw_h2_display(order: u32) -> MuDiffPoly {
    let r = |n: i64, d: i64| Rational::new(BigInt::from(n), BigInt::from(d));
    let mut terms = vec![(DiffMonomial::var_pow(0, 4), MuScalar::monomial(0, 0, r(1, 24)))];
    if order >= 2 {
        terms.push((DiffMonomial::from_pairs(&[(0, 2), (2, 1)]), MuScalar::monomial(0, 2, r(1, 48))));
    }
    for g in 2..=order / 2 {
        let b = bernoulli_weight(g);
        let k = 2 * g as usize;
        let gi = g as i64;
        terms.push((DiffMonomial::from_pairs(&[(0, 1), (k, 1)]), MuScalar::monomial(gi - 2, 2 * g, &b * r(gi + 1, 2))));
        terms.push((DiffMonomial::from_pairs(&[(0, 2), (k, 1)]), MuScalar::monomial(gi - 1, 2 * g, &b * r(1, 4))));
    }
    MuDiffPoly::from_terms(terms)
}

/// `h_d^{ILW}` in τ-gauge. `h₀` and `h₁` are explicit; for `d ≥ 2` the
/// triangular relation `h_d^{Lax} = Σ_{j=0}^{d} P_{d+1,j+1} τ^{d-j} h_j^{ILW}`
/// is solved for the top term, and its density is put in normal form.
pub fn ilw_hamiltonian(lax: &LaxData, d: u32) -> Result<LocalFunctional> {
    let k = lax.order();
    let mut hs = vec![ilw_h0(k), ilw_h1(k)];
    for e in 2..=d {
        let p = pd_polynomial(e + 1);
        let mut density = lax_hamiltonian(lax, e)?.density;
        for (j, h) in hs.iter().enumerate() {
            let c = eps_tau(0, e - j as u32, p.coeff(j as u32 + 1).clone(), k);
            density -= &h.density.scale(&c);
        }
        hs.push(LocalFunctional::new(density.density_normal_form()));
    }
    Ok(hs.swap_remove(d as usize))
}

/// `Σ_{j=0}^{d} P_{d+1,j+1} τ^{d-j} h_j` for the given list of `h_j`.
pub(super) fn triangular_combination(hs: &[LocalFunctional], d: u32, order: u32) -> LocalFunctional {
    let p = pd_polynomial(d + 1);
    let mut density = DiffPoly::zero(order);
    for (j, h) in hs.iter().enumerate().take(d as usize + 1) {
        let c = eps_tau(0, d - j as u32, p.coeff(j as u32 + 1).clone(), order);
        density += &h.density.scale(&c);
    }
    LocalFunctional::new(density)
}

pub(super) fn explicit_low_hamiltonians(order: u32) -> Vec<LocalFunctional> {
    vec![ilw_h0(order), ilw_h1(order)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    #[test]
    fn pd_examples() {
        assert_eq!(pd_polynomial(1).coeffs, vec![rat(1, 1)]);
        assert_eq!(pd_polynomial(2).coeffs, vec![rat(1, 1), rat(1, 1)]);
        assert_eq!(pd_polynomial(3).coeffs, vec![rat(1, 2), rat(3, 2), rat(1, 1)]);
        assert_eq!(pd_polynomial(4).coeffs, vec![rat(1, 6), rat(1, 1), rat(11, 6), rat(1, 1)]);
        for d in 1..8 {
            let p = pd_polynomial(d);
            assert_eq!(p.coeff(d), &rat(1, 1));
            assert!(p.coeffs.iter().all(|c| c.is_positive()));
        }
        let js = serde_json::to_string(&pd_polynomial(3)).unwrap();
        assert_eq!(js, r#"{"d":3,"coeffs":["1/2","3/2","1"]}"#);
    }

    #[test]
    fn bracket_of_dispersionless_densities() {
        let k = 4;
        let h0 = ilw_h0(k);
        let cubic = LocalFunctional::new(DiffPoly::term(
            DiffMonomial::var_pow(0, 3),
            Scalar::from_rational(rat(1, 6), k),
            k,
        ));
        assert!(poisson_bracket(&h0, &cubic).is_zero());
    }

    #[test]
    fn h1_in_tau_gauge() {
        let h1 = ilw_h1(4);
        assert_eq!(h1.density.to_string(), "(1/6)*u^3 - (1/24)*t*e^2*u*u_xx - (1/1440)*t*e^4*u*u_4");
    }

    #[test]
    fn equation_rhs_matches_flow_of_h1() {
        for k in [0, 2, 6, 8] {
            assert_eq!(ilw_t1_flow(k), ilw_equation_rhs(k));
        }
    }
}
