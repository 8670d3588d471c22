use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use super::{HierarchyConfig, HierarchyError, LaxData, Result};
use crate::diffpoly::{DiffPoly, LocalFunctional};
use crate::scalars::{bernoulli, factorial, Rational, Scalar};
use crate::shiftops::{OpError, PowerCache, ShiftOperator};

/// `𝓛 = Λ + u − τ iε∂x` at truncation order `order`.
pub fn cal_l(order: u32) -> ShiftOperator {
    let zero = BTreeMap::from([(1, DiffPoly::one(order)), (0, DiffPoly::u(order))]);
    let first = BTreeMap::from([(0, DiffPoly::constant(-Scalar::tau(order)))]);
    ShiftOperator::from_parts(zero, first, None, order).expect("consistent orders")
}

fn inv_factorial(n: u32) -> Rational {
    Rational::new(BigInt::one(), factorial(n))
}

/// Solves `L − τ log L = 𝓛` coefficient by coefficient.
///
/// Writing `log L = iε∂x − V` with `V = Σ v_k Λ^{-k}`, the identity
/// `[V, L] = iε L_x` read off at `Λ^{-(n-1)}` gives `(Λ − 1) v_n = g_n` with
/// `g_n = −iε ∂x a_{n-1} + Σ_{m=0}^{n-2} (v_{n-1-m} Λ^{-(n-1-m)} a_m − a_m Λ^{-m} v_{n-1-m})`.
/// Then `v_n = Σ_k B_k/k! (iε∂x)^k ∂x^{-1}(g_n / iε)` and `a_n = −τ v_n`.
///
/// `g_n` is divisible by `iε`, so the division costs one ε-order. The work is
/// therefore carried out at order `K + 1`; an unknown `ε^{K+1}` term in any
/// `v_k` or `a_m` only reaches `g_n` multiplied by another ε, so `g_n` stays
/// exact at `K + 1` and every `a_n` is exact at `K`.
pub fn build_lax(config: HierarchyConfig) -> Result<LaxData> {
    config.validate()?;
    let k = config.eps_order;
    let w = k + 1;
    let depth = config.lambda_depth as usize;
    let i_eps = Scalar::i_eps(w);
    let tau = Scalar::tau(k);
    let bernoulli_series: Vec<Rational> = (0..=k).map(|j| bernoulli(j as usize) * inv_factorial(j)).collect();

    let mut a_work = vec![DiffPoly::u(w)];
    let mut v_work = vec![DiffPoly::zero(w)];
    let mut a = vec![DiffPoly::u(k)];
    let mut f = Vec::with_capacity(depth);
    for n in 1..=depth {
        let fail = |reason: String| HierarchyError::ConstructionFailure { step: n, reason };
        let mut g = a_work[n - 1].x_derivative().scale(&-&i_eps);
        for m in 0..n.saturating_sub(1) {
            let j = n - 1 - m;
            g += &(&v_work[j] * &a_work[m].lambda_shift(-(j as i64)));
            g -= &(&a_work[m] * &v_work[j].lambda_shift(-(m as i64)));
        }
        let quotient = g.divide_by_i_eps().map_err(|e| fail(e.to_string()))?;
        let primitive = quotient.formal_primitive().map_err(|e| fail(e.to_string()))?;
        let v = primitive.derivative_series(|j| bernoulli_series[j as usize].clone());
        let f_n = -&v;
        let a_n = f_n.scale(&tau);
        v_work.push(v.raise_order(w));
        a_work.push(a_n.raise_order(w));
        f.push(f_n);
        a.push(a_n);
    }
    assemble(config, a, f)
}

/// Builds the derived operators from already-validated coefficients.
pub(super) fn assemble(config: HierarchyConfig, a: Vec<DiffPoly>, f: Vec<DiffPoly>) -> Result<LaxData> {
    let k = config.eps_order;
    let floor = -(config.lambda_depth as i64);
    let mut l_zero = BTreeMap::from([(1, DiffPoly::one(k))]);
    for (n, p) in a.iter().enumerate() {
        l_zero.insert(-(n as i64), p.clone());
    }
    let l = ShiftOperator::from_parts(l_zero, BTreeMap::new(), Some(floor), k)?;
    let log_zero = f.iter().enumerate().map(|(n, p)| (-(n as i64) - 1, p.clone())).collect();
    let log_first = BTreeMap::from([(0, DiffPoly::one(k))]);
    let log_l = ShiftOperator::from_parts(log_zero, log_first, Some(floor), k)?;
    let powers = PowerCache::new(l.clone())?;
    Ok(LaxData { config, a, f, l, log_l, cal_l: cal_l(k), powers })
}

/// `log L = iε∂x + Σ f_n Λ^{-n}`.
pub fn log_operator(lax: &LaxData) -> ShiftOperator {
    lax.log_l().clone()
}

/// `∂u/∂T_d = ∂x res L^{d+1} / (d+1)!`.
pub fn lax_flow(lax: &LaxData, d: u32) -> Result<DiffPoly> {
    Ok(lax.residue(d + 1)?.x_derivative().scale_rational(&inv_factorial(d + 1)))
}

/// `h_d = ∫ (res L^{d+2}/(d+2)! − τ/(d+1) · res L^{d+1}/(d+1)!) dx`.
pub fn lax_hamiltonian(lax: &LaxData, d: u32) -> Result<LocalFunctional> {
    let k = lax.order();
    let top = lax.residue(d + 2)?.scale_rational(&inv_factorial(d + 2));
    let c = Rational::new(BigInt::one(), BigInt::from(d + 1)) * inv_factorial(d + 1);
    let lower = lax.residue(d + 1)?.scale(&Scalar::tau(k)).scale_rational(&c);
    Ok(LocalFunctional::new(&top - &lower))
}

/// The flow from the Lax equation `∂L/∂T_d = [(L^{d+1})₊, 𝓛] / (τ iε (d+1)!)`,
/// read off from the `Λ^0` coefficient of the commutator.
///
/// The commutator is formed one ε-order higher so that the division by `iε`
/// returns an exact result at order `K`. Any nonzero coefficient at another
/// power of `Λ`, or in the first-order part, is reported as
/// [`HierarchyError::ResidualTerms`].
pub fn lax_flow_via_commutator(lax: &LaxData, d: u32) -> Result<DiffPoly> {
    let k = lax.order();
    let w = k + 1;
    let power = lax.power(d + 1)?;
    let plus = power.positive_part();
    if let Some(floor) = plus.floor() {
        return Err(OpError::DepthInsufficient { needed: 0, floor }.into());
    }
    let c = plus.raise_order(w).commutator(&cal_l(w))?;
    for (n, p) in c.zero_part() {
        if *n != 0 {
            return Err(HierarchyError::ResidualTerms { power: *n, first_order: false, witness: p.clone() });
        }
    }
    if let Some((n, p)) = c.first_part().iter().next() {
        return Err(HierarchyError::ResidualTerms { power: *n, first_order: true, witness: p.clone() });
    }
    let q = c.coeff(0)?.divide_by_tau()?.divide_by_i_eps()?;
    Ok(q.scale_rational(&inv_factorial(d + 1)))
}
