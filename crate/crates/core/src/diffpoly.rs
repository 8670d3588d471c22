//! Differential polynomials in `u, u_x, u_xx, …` over the truncated scalar
//! ring, together with the calculus used throughout the hierarchy: total
//! x-derivative, shifts `Λ^n = exp(n iε ∂x)`, Euler operator, integration by
//! parts and evolutionary derivations.

use std::collections::BTreeMap;
use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalars::{
    join_signed, to_mu_form, MuScalar, Rational, Scalar, ScalarError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffPolyError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("not a total x-derivative; stuck at {0}")]
    NotATotalDerivative(String),
    #[error("not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("malformed differential polynomial: {0}")]
    Malformed(String),
}

/// Monomial `Π u_k^{m_k}`, stored densely by derivative order.
///
/// Ordering is graded lexicographic from the top: highest derivative order
/// first, then its multiplicity, then the same comparison on what remains.
/// The greatest monomial of a polynomial is its leading monomial.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct DiffMonomial {
    // exps[k] = multiplicity of u_k; no trailing zeros
    exps: Vec<u32>,
}

impl Ord for DiffMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exps
            .len()
            .cmp(&other.exps.len())
            .then_with(|| self.exps.iter().rev().cmp(other.exps.iter().rev()))
    }
}

impl PartialOrd for DiffMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl DiffMonomial {
    pub fn one() -> Self {
        DiffMonomial::default()
    }

    /// The variable `u_k`.
    pub fn var(k: usize) -> Self {
        Self::var_pow(k, 1)
    }

    pub fn var_pow(k: usize, m: u32) -> Self {
        if m == 0 {
            return Self::one();
        }
        let mut exps = vec![0; k + 1];
        exps[k] = m;
        DiffMonomial { exps }
    }

    /// Builds from `(order, multiplicity)` pairs; repeated orders accumulate.
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Self {
        let mut exps = Vec::new();
        for &(k, m) in pairs {
            if exps.len() <= k {
                exps.resize(k + 1, 0);
            }
            exps[k] += m;
        }
        let mut out = DiffMonomial { exps };
        out.trim();
        out
    }

    fn trim(&mut self) {
        while self.exps.last() == Some(&0) {
            self.exps.pop();
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn multiplicity(&self, k: usize) -> u32 {
        self.exps.get(k).copied().unwrap_or(0)
    }

    /// Highest derivative order present.
    pub fn max_order(&self) -> Option<usize> {
        self.exps.len().checked_sub(1)
    }

    /// Total number of x-derivatives, `Σ k·m_k`.
    pub fn weight(&self) -> u32 {
        self.exps.iter().enumerate().map(|(k, m)| k as u32 * m).sum()
    }

    /// Polynomial degree, `Σ m_k`.
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// `(order, multiplicity)` pairs in descending order.
    pub fn pairs(&self) -> Vec<(usize, u32)> {
        self.exps.iter().enumerate().rev().filter(|(_, m)| **m > 0).map(|(k, m)| (k, *m)).collect()
    }

    pub fn mul(&self, other: &DiffMonomial) -> DiffMonomial {
        let (long, short) = if self.exps.len() >= other.exps.len() { (self, other) } else { (other, self) };
        let mut exps = long.exps.clone();
        for (k, m) in short.exps.iter().enumerate() {
            exps[k] += m;
        }
        DiffMonomial { exps }
    }

    /// `self / u_k`, if `u_k` divides.
    fn without_var(&self, k: usize) -> Option<DiffMonomial> {
        if self.multiplicity(k) == 0 {
            return None;
        }
        let mut out = self.clone();
        out.exps[k] -= 1;
        out.trim();
        Some(out)
    }

    fn with_var(&self, k: usize) -> DiffMonomial {
        let mut out = self.clone();
        if out.exps.len() <= k {
            out.exps.resize(k + 1, 0);
        }
        out.exps[k] += 1;
        out
    }

    /// Total derivative as `(factor, monomial)` pairs.
    fn derivative_terms(&self) -> Vec<(u32, DiffMonomial)> {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0)
            .map(|(k, m)| {
                let mut next = self.clone();
                next.exps[k] -= 1;
                let bumped = next.with_var(k + 1);
                (*m, bumped)
            })
            .collect()
    }
}

pub(crate) fn var_name(k: usize) -> String {
    match k {
        0 => "u".to_string(),
        1 => "u_x".to_string(),
        2 => "u_xx".to_string(),
        _ => format!("u_{k}"),
    }
}

impl DiffMonomial {
    pub(crate) fn factors(&self) -> Vec<String> {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0)
            .map(|(k, m)| if *m == 1 { var_name(k) } else { format!("{}^{}", var_name(k), m) })
            .collect()
    }
}

impl fmt::Display for DiffMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        f.write_str(&self.factors().join("*"))
    }
}

impl fmt::Debug for DiffMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Element of the differential polynomial ring with [`Scalar`] coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DiffPolyJson", into = "DiffPolyJson")]
pub struct DiffPoly {
    terms: BTreeMap<DiffMonomial, Scalar>,
    order: u32,
}

impl DiffPoly {
    pub fn zero(order: u32) -> Self {
        DiffPoly { terms: BTreeMap::new(), order }
    }

    pub fn constant(c: Scalar) -> Self {
        let order = c.order();
        Self::term(DiffMonomial::one(), c, order)
    }

    pub fn one(order: u32) -> Self {
        Self::constant(Scalar::one(order))
    }

    /// `u_k` with unit coefficient.
    pub fn var(k: usize, order: u32) -> Self {
        Self::term(DiffMonomial::var(k), Scalar::one(order), order)
    }

    /// `u` itself.
    pub fn u(order: u32) -> Self {
        Self::var(0, order)
    }

    pub fn term(m: DiffMonomial, c: Scalar, order: u32) -> Self {
        assert_eq!(c.order(), order, "coefficient order must match the polynomial");
        let mut p = DiffPoly::zero(order);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I>(terms: I, order: u32) -> Self
    where
        I: IntoIterator<Item = (DiffMonomial, Scalar)>,
    {
        let mut p = DiffPoly::zero(order);
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DiffMonomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &DiffMonomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(|| Scalar::zero(self.order))
    }

    /// Greatest monomial in the canonical ordering.
    pub fn leading(&self) -> Option<(&DiffMonomial, &Scalar)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: DiffMonomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        assert_eq!(c.order(), self.order, "coefficient order must match the polynomial");
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add_term_scaled(&mut self, m: DiffMonomial, c: &Scalar, factor: u32) {
        if factor == 1 {
            self.add_term(m, c);
        } else {
            self.add_term(m, &c.scale(&Rational::from_integer(BigInt::from(factor))));
        }
    }

    fn check_order(&self, other: &DiffPoly) -> Result<(), ScalarError> {
        if self.order != other.order {
            Err(ScalarError::OrderMismatch(self.order, other.order))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &DiffPoly) -> Result<DiffPoly, ScalarError> {
        self.check_order(other)?;
        let mut out = self.clone();
        out.add_assign_unchecked(other);
        Ok(out)
    }

    pub fn try_sub(&self, other: &DiffPoly) -> Result<DiffPoly, ScalarError> {
        self.check_order(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &-c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &DiffPoly) -> Result<DiffPoly, ScalarError> {
        self.check_order(other)?;
        let mut out = DiffPoly::zero(self.order);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let c = c1 * c2;
                if !c.is_zero() {
                    out.add_term(m1.mul(m2), &c);
                }
            }
        }
        Ok(out)
    }

    fn add_assign_unchecked(&mut self, other: &DiffPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c);
        }
    }

    pub fn scale(&self, c: &Scalar) -> DiffPoly {
        assert_eq!(c.order(), self.order, "scalar order must match the polynomial");
        DiffPoly::from_terms(self.terms.iter().map(|(m, x)| (m.clone(), x * c)), self.order)
    }

    pub fn scale_rational(&self, c: &Rational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero(self.order);
        }
        DiffPoly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x.scale(c))).collect(), order: self.order }
    }

    /// Applies `f` to every coefficient; the results must share order `order`.
    pub fn map_coeffs<F>(&self, order: u32, f: F) -> DiffPoly
    where
        F: Fn(&Scalar) -> Scalar,
    {
        DiffPoly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))), order)
    }

    pub fn try_map_coeffs<F, E>(&self, order: u32, f: F) -> Result<DiffPoly, E>
    where
        F: Fn(&Scalar) -> Result<Scalar, E>,
    {
        let mut out = DiffPoly::zero(order);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c)?);
        }
        Ok(out)
    }

    /// Coefficientwise `x ↦ x / (iε)`; the result has order `K − 1`.
    pub fn divide_by_i_eps(&self) -> Result<DiffPoly, ScalarError> {
        self.try_map_coeffs(self.order.saturating_sub(1), Scalar::divide_by_i_eps)
    }

    pub fn divide_by_tau(&self) -> Result<DiffPoly, ScalarError> {
        self.try_map_coeffs(self.order, Scalar::divide_by_tau)
    }

    pub fn truncate(&self, order: u32) -> DiffPoly {
        self.map_coeffs(order, |c| c.truncate(order))
    }

    pub fn raise_order(&self, order: u32) -> DiffPoly {
        self.map_coeffs(order, |c| c.raise_order(order))
    }

    /// Drops coefficient terms above `ε^max_eps` (order unchanged).
    pub fn filter_eps(&self, max_eps: u32) -> DiffPoly {
        self.map_coeffs(self.order, |c| c.filter_eps(max_eps))
    }

    /// Total x-derivative.
    pub fn x_derivative(&self) -> DiffPoly {
        let mut out = DiffPoly::zero(self.order);
        for (m, c) in &self.terms {
            for (factor, dm) in m.derivative_terms() {
                out.add_term_scaled(dm, c, factor);
            }
        }
        out
    }

    pub fn nth_x_derivative(&self, n: usize) -> DiffPoly {
        (0..n).fold(self.clone(), |p, _| p.x_derivative())
    }

    /// `∂p/∂u_k`.
    pub fn partial(&self, k: usize) -> DiffPoly {
        let mut out = DiffPoly::zero(self.order);
        for (m, c) in &self.terms {
            let mult = m.multiplicity(k);
            if mult > 0 {
                out.add_term_scaled(m.without_var(k).unwrap(), c, mult);
            }
        }
        out
    }

    pub fn max_order(&self) -> Option<usize> {
        self.terms.keys().filter_map(DiffMonomial::max_order).max()
    }

    /// `Σ_j c_j (iε ∂x)^j p`, summed while `ε^j` survives truncation.
    pub fn derivative_series<F>(&self, coeff: F) -> DiffPoly
    where
        F: Fn(u32) -> Rational,
    {
        let k = self.order;
        let mut out = DiffPoly::zero(k);
        let mut current = self.clone();
        for j in 0..=k {
            if current.is_zero() {
                break;
            }
            let c = coeff(j);
            if !c.is_zero() {
                let factor = Scalar::i_eps_pow(j, c, k);
                out.add_assign_unchecked(&current.scale(&factor));
            }
            // terms with ε-power above K − j − 1 cannot survive the next factor
            if j < k {
                current = current.filter_eps(k - j - 1).x_derivative();
            }
        }
        out
    }

    /// `Λ^n p = Σ_j (n iε)^j / j! ∂x^j p`.
    pub fn lambda_shift(&self, n: i64) -> DiffPoly {
        if n == 0 {
            return self.clone();
        }
        let mut fact = BigInt::one();
        let mut pow = BigInt::one();
        let mut table = Vec::with_capacity(self.order as usize + 1);
        for j in 0..=self.order {
            if j > 0 {
                fact *= BigInt::from(j);
                pow *= BigInt::from(n);
            }
            table.push(Rational::new(pow.clone(), fact.clone()));
        }
        self.derivative_series(|j| table[j as usize].clone())
    }

    /// Euler operator `δ/δu = Σ_k (−∂x)^k ∂/∂u_k`.
    pub fn variational_derivative(&self) -> DiffPoly {
        let Some(top) = self.max_order() else {
            return DiffPoly::zero(self.order);
        };
        let mut out = DiffPoly::zero(self.order);
        for k in (0..=top).rev() {
            // Horner: out ← ∂/∂u_k − ∂x(out)
            let d = out.x_derivative();
            out = self.partial(k).try_sub(&d).expect("same order");
        }
        out
    }

    /// Evolutionary derivation `D_Q p = Σ_k ∂x^k(Q) ∂p/∂u_k`.
    pub fn evolutionary_derivative(&self, q: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero(self.order);
        let Some(top) = self.max_order() else {
            return out;
        };
        let mut dq = q.clone();
        for k in 0..=top {
            let part = self.partial(k);
            if !part.is_zero() {
                out.add_assign_unchecked(&part.try_mul(&dq).expect("same order"));
            }
            if k < top {
                dq = dq.x_derivative();
            }
        }
        out
    }

    /// The variable-free part.
    pub fn constant_part(&self) -> Scalar {
        self.coeff(&DiffMonomial::one())
    }

    /// Representative of `∫ self dx` in which every monomial is either free of
    /// derivatives or nonlinear in its highest derivative. Two densities give
    /// the same functional exactly when these agree.
    pub fn density_normal_form(&self) -> DiffPoly {
        let mut rem = self.clone();
        let mut out = DiffPoly::zero(self.order);
        while let Some((m, c)) = rem.leading() {
            let (m, c) = (m.clone(), c.clone());
            match m.max_order() {
                Some(top) if top > 0 && m.multiplicity(top) == 1 => {
                    let rest = m.without_var(top).unwrap();
                    let j = rest.multiplicity(top - 1);
                    let coeff = c.div_rational(&Rational::from_integer(BigInt::from(j + 1)));
                    let cand = DiffPoly::term(rest.with_var(top - 1), coeff, self.order);
                    rem = rem.try_sub(&cand.x_derivative()).expect("same order");
                }
                _ => {
                    let t = DiffPoly::term(m, c, self.order);
                    rem = rem.try_sub(&t).expect("same order");
                    out.add_assign_unchecked(&t);
                }
            }
        }
        out
    }

    /// Integration by parts: returns `q` without variable-free part such that
    /// `∂x q = self`.
    pub fn formal_primitive(&self) -> Result<DiffPoly, DiffPolyError> {
        let mut rem = self.clone();
        let mut out = DiffPoly::zero(self.order);
        while let Some((m, c)) = rem.leading() {
            let stuck = || DiffPolyError::NotATotalDerivative(DiffPoly::term(m.clone(), c.clone(), self.order).to_string());
            let top = m.max_order().ok_or_else(stuck)?;
            if top == 0 || m.multiplicity(top) != 1 {
                return Err(stuck());
            }
            let rest = m.without_var(top).unwrap();
            let j = rest.multiplicity(top - 1);
            let cand_mono = rest.with_var(top - 1);
            let cand_coeff = c.div_rational(&Rational::from_integer(BigInt::from(j + 1)));
            let cand = DiffPoly::term(cand_mono, cand_coeff, self.order);
            rem = rem.try_sub(&cand.x_derivative())?;
            out.add_assign_unchecked(&cand);
        }
        Ok(out)
    }

    /// Degree under `deg u_k = k`, `deg ε = −1`. `Ok(None)` for the zero polynomial.
    pub fn homogeneity_degree(&self) -> Result<Option<i64>, DiffPolyError> {
        let mut degree = None;
        for (m, c) in &self.terms {
            for (e, _) in c.terms() {
                let d = m.weight() as i64 - e.eps as i64;
                match degree {
                    None => degree = Some(d),
                    Some(d0) if d0 != d => {
                        let single = Scalar::from_terms([(*e, Rational::one())], self.order);
                        return Err(DiffPolyError::NotHomogeneous(format!(
                            "{}*{} has degree {} but earlier terms have degree {}",
                            single, m, d, d0
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(degree)
    }

    pub fn tau_degree(&self) -> Option<u32> {
        self.terms.values().filter_map(Scalar::tau_degree).max()
    }

    /// No coefficient carries `i` or an odd power of ε.
    pub fn is_real_even(&self) -> bool {
        self.terms.values().all(Scalar::is_real_even)
    }

    pub fn non_real_even_part(&self) -> DiffPoly {
        self.map_coeffs(self.order, Scalar::non_real_even_part)
    }

    /// Restriction to `ε = 0`.
    pub fn at_eps_zero(&self) -> DiffPoly {
        self.filter_eps(0)
    }

    pub fn to_mu_form(&self) -> Result<MuDiffPoly, ScalarError> {
        let mut out = MuDiffPoly::default();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), to_mu_form(c)?);
        }
        Ok(out)
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.terms.iter().map(|(m, c)| render_term(m, c.len(), c.signed_terms(), || c.to_string()));
        f.write_str(&join_signed(items))
    }
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffPoly[K={}]({})", self.order, self)
    }
}

/// One `coefficient*monomial` term. Single-term coefficients are merged into
/// the product; longer ones are parenthesized.
fn render_term(
    m: &DiffMonomial,
    len: usize,
    signed: Vec<(bool, String)>,
    whole: impl Fn() -> String,
) -> (bool, String) {
    let vars = m.factors();
    if len == 1 {
        let (neg, body) = signed.into_iter().next().unwrap();
        if vars.is_empty() {
            (neg, body)
        } else if body == "1" {
            (neg, vars.join("*"))
        } else {
            (neg, format!("{}*{}", body, vars.join("*")))
        }
    } else if vars.is_empty() {
        (false, format!("({})", whole()))
    } else {
        (false, format!("({})*{}", whole(), vars.join("*")))
    }
}

macro_rules! forward_poly_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl std::ops::$trait<&DiffPoly> for &DiffPoly {
            type Output = DiffPoly;
            fn $method(self, rhs: &DiffPoly) -> DiffPoly {
                self.$try(rhs).expect("differential polynomial arithmetic")
            }
        }
    };
}

forward_poly_binop!(Add, add, try_add);
forward_poly_binop!(Sub, sub, try_sub);
forward_poly_binop!(Mul, mul, try_mul);

impl std::ops::Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        DiffPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(), order: self.order }
    }
}

impl std::ops::AddAssign<&DiffPoly> for DiffPoly {
    fn add_assign(&mut self, rhs: &DiffPoly) {
        self.check_order(rhs).expect("differential polynomial arithmetic");
        self.add_assign_unchecked(rhs);
    }
}

impl std::ops::SubAssign<&DiffPoly> for DiffPoly {
    fn sub_assign(&mut self, rhs: &DiffPoly) {
        self.check_order(rhs).expect("differential polynomial arithmetic");
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), &-c);
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct DiffTermJson {
    vars: Vec<(usize, u32)>,
    coeff: Scalar,
}

#[derive(Clone, Serialize, Deserialize)]
struct DiffPolyJson {
    terms: Vec<DiffTermJson>,
    #[serde(rename = "K")]
    k: u32,
}

impl From<DiffPoly> for DiffPolyJson {
    fn from(p: DiffPoly) -> Self {
        DiffPolyJson {
            terms: p.terms.iter().map(|(m, c)| DiffTermJson { vars: m.pairs(), coeff: c.clone() }).collect(),
            k: p.order,
        }
    }
}

impl TryFrom<DiffPolyJson> for DiffPoly {
    type Error = DiffPolyError;

    fn try_from(j: DiffPolyJson) -> Result<Self, DiffPolyError> {
        let mut p = DiffPoly::zero(j.k);
        for t in j.terms {
            if t.coeff.order() != j.k {
                return Err(DiffPolyError::Malformed(format!(
                    "coefficient order {} differs from K = {}",
                    t.coeff.order(),
                    j.k
                )));
            }
            if t.vars.iter().any(|&(_, m)| m == 0) {
                return Err(DiffPolyError::Malformed("zero multiplicity".into()));
            }
            p.add_term(DiffMonomial::from_pairs(&t.vars), &t.coeff);
        }
        Ok(p)
    }
}

/// Differential polynomial with μ-form coefficients, used at the display
/// boundary only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MuDiffPoly {
    terms: BTreeMap<DiffMonomial, MuScalar>,
}

impl MuDiffPoly {
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (DiffMonomial, MuScalar)>,
    {
        let mut out = MuDiffPoly::default();
        for (m, c) in terms {
            let merged = out.terms.get(&m).map(|x| x.add(&c)).unwrap_or(c);
            if merged.is_zero() {
                out.terms.remove(&m);
            } else {
                out.terms.insert(m, merged);
            }
        }
        out
    }

    pub fn coeff(&self, m: &DiffMonomial) -> MuScalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DiffMonomial, &MuScalar)> {
        self.terms.iter()
    }

    pub fn to_tau_gauge(&self, order: u32) -> Result<DiffPoly, ScalarError> {
        let mut out = DiffPoly::zero(order);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &c.to_tau_gauge(order)?);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct MuTermJson {
    mu: i64,
    eps: u32,
    coeff: String,
}

#[derive(Serialize)]
struct MuDiffTermJson {
    vars: Vec<(usize, u32)>,
    coeff: Vec<MuTermJson>,
}

impl Serialize for MuDiffPoly {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<MuDiffTermJson> = self
            .terms
            .iter()
            .map(|(m, c)| MuDiffTermJson {
                vars: m.pairs(),
                coeff: c
                    .terms()
                    .map(|(e, r)| MuTermJson { mu: e.mu, eps: e.eps, coeff: crate::scalars::format_rational(r) })
                    .collect(),
            })
            .collect();
        #[derive(Serialize)]
        struct Wrapper {
            terms: Vec<MuDiffTermJson>,
        }
        Wrapper { terms }.serialize(serializer)
    }
}

impl fmt::Display for MuDiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.terms.iter().map(|(m, c)| {
            let n = c.terms().count();
            let signed: Vec<(bool, String)> = c
                .terms()
                .map(|(e, r)| {
                    let single = MuScalar::monomial(e.mu, e.eps, r.clone());
                    let text = single.to_string();
                    match text.strip_prefix('-') {
                        Some(rest) => (true, rest.to_string()),
                        None => (false, text),
                    }
                })
                .collect();
            render_term(m, n, signed, || c.to_string())
        });
        f.write_str(&join_signed(items))
    }
}

/// Outcome of a zero test on a local functional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionalStatus {
    Zero,
    /// Nonzero variational derivative; carries it as witness.
    NonzeroVariation(DiffPoly),
    /// The density has a nonzero variable-free part.
    NonzeroConstant(Scalar),
}

/// `∫ density dx`, i.e. a differential polynomial modulo total derivatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFunctional {
    pub density: DiffPoly,
}

impl LocalFunctional {
    pub fn new(density: DiffPoly) -> Self {
        LocalFunctional { density }
    }

    pub fn order(&self) -> u32 {
        self.density.order()
    }

    pub fn variational_derivative(&self) -> DiffPoly {
        self.density.variational_derivative()
    }

    pub fn status(&self) -> FunctionalStatus {
        let c = self.density.constant_part();
        if !c.is_zero() {
            return FunctionalStatus::NonzeroConstant(c);
        }
        let v = self.variational_derivative();
        if v.is_zero() {
            FunctionalStatus::Zero
        } else {
            FunctionalStatus::NonzeroVariation(v)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.status() == FunctionalStatus::Zero
    }

    pub fn try_sub(&self, other: &LocalFunctional) -> Result<LocalFunctional, ScalarError> {
        Ok(LocalFunctional::new(self.density.try_sub(&other.density)?))
    }

    pub fn try_add(&self, other: &LocalFunctional) -> Result<LocalFunctional, ScalarError> {
        Ok(LocalFunctional::new(self.density.try_add(&other.density)?))
    }

    pub fn scale(&self, c: &Scalar) -> LocalFunctional {
        LocalFunctional::new(self.density.scale(c))
    }

    pub fn equals(&self, other: &LocalFunctional) -> Result<bool, ScalarError> {
        Ok(self.try_sub(other)?.is_zero())
    }

    /// The density in [`DiffPoly::density_normal_form`].
    pub fn normal_density(&self) -> DiffPoly {
        self.density.density_normal_form()
    }

    /// Variational derivative is free of `i` and odd ε-powers.
    pub fn is_real_even(&self) -> bool {
        self.variational_derivative().is_real_even()
    }

    /// A density for the same functional with only real, ε-even coefficients.
    /// Returns `None` if the functional itself is not real and even.
    pub fn real_even_density(&self) -> Option<DiffPoly> {
        let odd = self.density.non_real_even_part();
        if LocalFunctional::new(odd.clone()).is_zero() {
            Some(self.density.try_sub(&odd).expect("same order"))
        } else {
            None
        }
    }
}

pub fn functional_is_zero(f: &LocalFunctional) -> bool {
    f.is_zero()
}

pub fn functional_equal(f: &LocalFunctional, g: &LocalFunctional) -> Result<bool, ScalarError> {
    f.equals(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{rat, ScalarExp};

    const K: u32 = 4;

    fn c(r: Rational) -> Scalar {
        Scalar::from_rational(r, K)
    }

    fn u(k: usize) -> DiffPoly {
        DiffPoly::var(k, K)
    }

    fn mono(pairs: &[(usize, u32)], coeff: Scalar) -> DiffPoly {
        DiffPoly::term(DiffMonomial::from_pairs(pairs), coeff, K)
    }

    #[test]
    fn monomial_ordering_is_graded_from_the_top() {
        let a = DiffMonomial::from_pairs(&[(0, 1), (2, 1)]);
        let b = DiffMonomial::from_pairs(&[(1, 2)]);
        let c = DiffMonomial::from_pairs(&[(0, 5)]);
        let d = DiffMonomial::from_pairs(&[(2, 2)]);
        assert!(a > b && b > c && d > a);
        assert!(DiffMonomial::from_pairs(&[(1, 1), (2, 1)]) > a);
    }

    #[test]
    fn x_derivative_examples() {
        assert_eq!(u(0).x_derivative(), u(1));
        let half_u2 = (&u(0) * &u(0)).scale_rational(&rat(1, 2));
        assert_eq!(half_u2.x_derivative(), &u(0) * &u(1));
        let uuxx = &u(0) * &u(2);
        assert_eq!(uuxx.x_derivative(), &(&u(1) * &u(2)) + &(&u(0) * &u(3)));
    }

    #[test]
    fn lambda_shift_of_u() {
        let k = 3;
        let p = DiffPoly::u(k).lambda_shift(1);
        let expected = DiffPoly::from_terms(
            [
                (DiffMonomial::var(0), Scalar::one(k)),
                (DiffMonomial::var(1), Scalar::i_eps(k)),
                (DiffMonomial::var(2), Scalar::monomial(ScalarExp::new(0, 0, 2), rat(-1, 2), k)),
                (DiffMonomial::var(3), Scalar::monomial(ScalarExp::new(1, 0, 3), rat(-1, 6), k)),
            ],
            k,
        );
        assert_eq!(p, expected);

        let k = 2;
        let p = DiffPoly::u(k).lambda_shift(-1);
        let expected = DiffPoly::from_terms(
            [
                (DiffMonomial::var(0), Scalar::one(k)),
                (DiffMonomial::var(1), -Scalar::i_eps(k)),
                (DiffMonomial::var(2), Scalar::monomial(ScalarExp::new(0, 0, 2), rat(-1, 2), k)),
            ],
            k,
        );
        assert_eq!(p, expected);

        let constant = DiffPoly::constant(Scalar::tau(K));
        assert_eq!(constant.lambda_shift(3), constant);
    }

    #[test]
    fn lambda_shift_is_multiplicative_and_invertible() {
        let p = &(&u(0) * &u(1)) + &u(2).scale(&Scalar::tau(K));
        let q = &u(0) + &(&u(0) * &u(0));
        assert_eq!((&p * &q).lambda_shift(2), &p.lambda_shift(2) * &q.lambda_shift(2));
        assert_eq!(p.lambda_shift(-2).lambda_shift(2), p);
    }

    #[test]
    fn variational_derivative_examples() {
        let cube = mono(&[(0, 3)], c(rat(1, 6)));
        assert_eq!(cube.variational_derivative(), mono(&[(0, 2)], c(rat(1, 2))));
        assert_eq!((&u(0) * &u(2)).variational_derivative(), u(2).scale_rational(&rat(2, 1)));
        assert_eq!((&u(1) * &u(1)).variational_derivative(), u(2).scale_rational(&rat(-2, 1)));
    }

    #[test]
    fn euler_operator_agrees_with_brute_force_on_u_uxx() {
        // direct sum Σ_k (−∂)^k ∂/∂u_k without Horner
        let p = &(&u(0) * &u(2)) + &(&(&u(0) * &u(0)) * &u(3));
        let mut brute = DiffPoly::zero(K);
        for k in 0..=3 {
            let mut term = p.partial(k);
            for _ in 0..k {
                term = -&term.x_derivative();
            }
            brute += &term;
        }
        assert_eq!(p.variational_derivative(), brute);
    }

    #[test]
    fn formal_primitive_examples() {
        let uux = &u(0) * &u(1);
        assert_eq!(uux.formal_primitive().unwrap(), mono(&[(0, 2)], c(rat(1, 2))));
        let d = &(&u(1) * &u(2)) + &(&u(0) * &u(3));
        let prim = d.formal_primitive().unwrap();
        assert_eq!(prim, &u(0) * &u(2));
        assert_eq!(prim.x_derivative(), d);
        assert!(matches!(
            (&u(0) * &u(0)).formal_primitive(),
            Err(DiffPolyError::NotATotalDerivative(_))
        ));
        assert!((&u(1) * &u(1)).formal_primitive().is_err());
    }

    #[test]
    fn evolutionary_derivative_examples() {
        let q = &u(0) * &u(1);
        assert_eq!(u(0).evolutionary_derivative(&q), q);
        assert_eq!(u(1).evolutionary_derivative(&q), &(&u(1) * &u(1)) + &(&u(0) * &u(2)));
        let u2 = &u(0) * &u(0);
        assert_eq!(u2.evolutionary_derivative(&u(1)), (&u(0) * &u(1)).scale_rational(&rat(2, 1)));
    }

    #[test]
    fn functional_zero_tests() {
        assert!(LocalFunctional::new(u(1)).is_zero());
        assert!(LocalFunctional::new(&(&u(0) * &u(0)) * &u(1)).is_zero());
        let a = LocalFunctional::new(&u(0) * &u(2));
        let b = LocalFunctional::new(-&(&u(1) * &u(1)));
        assert!(a.equals(&b).unwrap());
        let constant = LocalFunctional::new(DiffPoly::one(K));
        assert!(matches!(constant.status(), FunctionalStatus::NonzeroConstant(_)));
        assert!(!LocalFunctional::new(u(0)).is_zero());
    }

    #[test]
    fn homogeneity_examples() {
        let e = |i: u8, p: u32, r: Rational| Scalar::monomial(ScalarExp::new(i, 0, p), r, K);
        let a1 = &(&u(0) + &u(1).scale(&e(1, 1, rat(-1, 2)))) + &u(2).scale(&e(0, 2, rat(-1, 12)));
        assert_eq!(a1.homogeneity_degree().unwrap(), Some(0));
        let f = &(&u(0) * &u(1)) + &u(3).scale(&e(0, 2, rat(1, 1)));
        assert_eq!(f.homogeneity_degree().unwrap(), Some(1));
        let bad = &u(0) + &u(0).scale(&Scalar::eps(K));
        assert!(matches!(bad.homogeneity_degree(), Err(DiffPolyError::NotHomogeneous(_))));
        assert_eq!(DiffPoly::zero(K).homogeneity_degree().unwrap(), None);
    }

    #[test]
    fn rendering() {
        let p = &mono(&[(0, 3)], c(rat(1, 6))) + &mono(&[(0, 1), (2, 1)], Scalar::monomial(ScalarExp::new(0, 1, 2), rat(-1, 24), K));
        assert_eq!(p.to_string(), "(1/6)*u^3 - (1/24)*t*e^2*u*u_xx");
        let q = u(1).scale(&(&Scalar::one(K) + &Scalar::i_eps(K)));
        assert_eq!(q.to_string(), "(1 + I*e)*u_x");
        assert_eq!(DiffPoly::zero(K).to_string(), "0");
    }

    #[test]
    fn json_round_trip() {
        let p = &mono(&[(0, 2), (3, 1)], Scalar::i_eps(K)) + &u(0);
        let js = serde_json::to_string(&p).unwrap();
        assert!(js.starts_with(r#"{"terms":[{"vars":[[0,1]]"#), "{js}");
        let back: DiffPoly = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn real_even_representative() {
        // u·u_x·iε is a total derivative, so dropping it keeps the functional
        let p = &(&u(0) * &u(0)) + &(&u(0) * &u(1)).scale(&Scalar::i_eps(K));
        let f = LocalFunctional::new(p);
        assert!(f.is_real_even());
        assert_eq!(f.real_even_density().unwrap(), &u(0) * &u(0));
        let g = LocalFunctional::new(&(&u(0) * &u(0)) * &DiffPoly::constant(Scalar::i_eps(K)));
        assert!(g.real_even_density().is_none());
    }
}
