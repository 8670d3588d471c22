//! Exact coefficient ring `Q(i)[τ][ε] / (ε^{K+1})`.
//!
//! A [`Scalar`] is a finite sum of terms `c · i^a · τ^t · ε^e` with rational
//! `c`, `a ∈ {0, 1}` and `e ≤ K`. The truncation order `K` is fixed when the
//! scalar is built; arithmetic between scalars of different orders is refused
//! instead of being silently coerced.
//!
//! The module also owns the Bernoulli table and the monomial-level change of
//! variables between the τ-gauge used internally and the μ-form in which the
//! ILW Hamiltonians are usually written (`μ = −1/τ`, `ε ↦ ε√(−τ)`).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary precision rational number, always kept in lowest terms.
pub type Rational = BigRational;

/// Shorthand for the rational `num / den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let bad = || ScalarError::BadRational(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("truncation order mismatch: {0} vs {1}")]
    OrderMismatch(u32, u32),
    #[error("not divisible by iε: term {0} has no ε factor")]
    NotDivisible(String),
    #[error("not divisible by τ: term {0} has no τ factor")]
    NotDivisibleByTau(String),
    #[error("scalar is not real and even in ε: offending term {0}")]
    NotRealEven(String),
    #[error("μ-form term {0} maps to a negative power of τ")]
    NegativeTauPower(String),
    #[error("malformed rational {0:?}")]
    BadRational(String),
    #[error("malformed scalar: {0}")]
    Malformed(String),
}

/// Exponents of one scalar monomial `i^i · τ^tau · ε^eps`.
///
/// Field order fixes the canonical ordering: by ε-power first, then τ, then i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarExp {
    pub eps: u32,
    pub tau: u32,
    pub i: u8,
}

impl ScalarExp {
    pub const ONE: ScalarExp = ScalarExp { eps: 0, tau: 0, i: 0 };

    pub fn new(i: u8, tau: u32, eps: u32) -> Self {
        ScalarExp { eps, tau, i: i % 2 }
    }
}

/// Element of the truncated ring `R_K`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScalarJson", into = "ScalarJson")]
pub struct Scalar {
    terms: BTreeMap<ScalarExp, Rational>,
    order: u32,
}

impl Scalar {
    pub fn zero(order: u32) -> Self {
        Scalar { terms: BTreeMap::new(), order }
    }

    pub fn one(order: u32) -> Self {
        Self::from_rational(Rational::one(), order)
    }

    pub fn from_rational(c: Rational, order: u32) -> Self {
        Self::monomial(ScalarExp::ONE, c, order)
    }

    pub fn from_int(n: i64, order: u32) -> Self {
        Self::from_rational(rat_int(n), order)
    }

    /// The single term `c · i^a τ^t ε^e`; vanishes if `e > K`.
    pub fn monomial(exp: ScalarExp, c: Rational, order: u32) -> Self {
        let mut s = Scalar::zero(order);
        if exp.eps <= order && !c.is_zero() {
            s.terms.insert(exp, c);
        }
        s
    }

    pub fn tau(order: u32) -> Self {
        Self::monomial(ScalarExp::new(0, 1, 0), Rational::one(), order)
    }

    pub fn eps(order: u32) -> Self {
        Self::monomial(ScalarExp::new(0, 0, 1), Rational::one(), order)
    }

    /// `iε`, the scale of one shift step.
    pub fn i_eps(order: u32) -> Self {
        Self::monomial(ScalarExp::new(1, 0, 1), Rational::one(), order)
    }

    /// `c · (iε)^k`, with `i^k` folded into the sign.
    pub fn i_eps_pow(k: u32, c: Rational, order: u32) -> Self {
        let c = if k % 4 >= 2 { -c } else { c };
        Self::monomial(ScalarExp::new((k % 2) as u8, 0, k), c, order)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&ScalarExp::ONE).is_some_and(|c| c.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ScalarExp, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &ScalarExp) -> Option<&Rational> {
        self.terms.get(exp)
    }

    /// Builds a scalar from raw terms, canonicalizing on the way.
    pub fn from_terms<I>(terms: I, order: u32) -> Self
    where
        I: IntoIterator<Item = (ScalarExp, Rational)>,
    {
        let mut s = Scalar::zero(order);
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s
    }

    fn add_term(&mut self, exp: ScalarExp, c: Rational) {
        if exp.eps > self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_order(&self, other: &Scalar) -> Result<(), ScalarError> {
        if self.order != other.order {
            Err(ScalarError::OrderMismatch(self.order, other.order))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.check_order(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.check_order(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.check_order(other)?;
        let mut out = Scalar::zero(self.order);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let eps = e1.eps + e2.eps;
                if eps > self.order {
                    continue;
                }
                let i = e1.i + e2.i;
                let c = c1 * c2;
                let c = if i == 2 { -c } else { c };
                out.add_term(ScalarExp { eps, tau: e1.tau + e2.tau, i: i % 2 }, c);
            }
        }
        Ok(out)
    }

    /// Multiplies by a rational constant.
    pub fn scale(&self, c: &Rational) -> Scalar {
        if c.is_zero() {
            return Scalar::zero(self.order);
        }
        Scalar {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
            order: self.order,
        }
    }

    /// Exact division by a nonzero rational.
    pub fn div_rational(&self, c: &Rational) -> Scalar {
        assert!(!c.is_zero(), "division of a scalar by zero");
        self.scale(&c.recip())
    }

    /// Multiplies by `τ^k`.
    pub fn mul_tau_pow(&self, k: u32) -> Scalar {
        Scalar {
            terms: self.terms.iter().map(|(e, c)| (ScalarExp { tau: e.tau + k, ..*e }, c.clone())).collect(),
            order: self.order,
        }
    }

    /// Solves `x · (iε) = self`. The top ε-order of `x` is not determined by
    /// `self`, so the quotient carries truncation order `K − 1`.
    pub fn divide_by_i_eps(&self) -> Result<Scalar, ScalarError> {
        if let Some((e, c)) = self.terms.iter().find(|(e, _)| e.eps == 0) {
            return Err(ScalarError::NotDivisible(fmt_term(e, c)));
        }
        let order = self.order.saturating_sub(1);
        let mut out = Scalar::zero(order);
        for (e, c) in &self.terms {
            // 1/i = −i
            let (i, c) = if e.i == 1 { (0, c.clone()) } else { (1, -c) };
            out.add_term(ScalarExp { eps: e.eps - 1, tau: e.tau, i }, c);
        }
        Ok(out)
    }

    pub fn divide_by_tau(&self) -> Result<Scalar, ScalarError> {
        if let Some((e, c)) = self.terms.iter().find(|(e, _)| e.tau == 0) {
            return Err(ScalarError::NotDivisibleByTau(fmt_term(e, c)));
        }
        Ok(Scalar {
            terms: self.terms.iter().map(|(e, c)| (ScalarExp { tau: e.tau - 1, ..*e }, c.clone())).collect(),
            order: self.order,
        })
    }

    /// Drops every term above `ε^order` and relabels with the lower order.
    pub fn truncate(&self, order: u32) -> Scalar {
        assert!(order <= self.order, "truncate can only lower the order");
        Scalar {
            terms: self.terms.iter().filter(|(e, _)| e.eps <= order).map(|(e, c)| (*e, c.clone())).collect(),
            order,
        }
    }

    /// Reinterprets the scalar at a higher truncation order. The new top
    /// coefficients are taken to be zero, which the caller must justify.
    pub fn raise_order(&self, order: u32) -> Scalar {
        assert!(order >= self.order, "raise_order can only increase the order");
        Scalar { terms: self.terms.clone(), order }
    }

    /// Keeps only terms whose ε-power is at most `max_eps`, without changing `K`.
    pub fn filter_eps(&self, max_eps: u32) -> Scalar {
        Scalar {
            terms: self.terms.iter().filter(|(e, _)| e.eps <= max_eps).map(|(e, c)| (*e, c.clone())).collect(),
            order: self.order,
        }
    }

    pub fn filter<F: Fn(&ScalarExp) -> bool>(&self, keep: F) -> Scalar {
        Scalar {
            terms: self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (*e, c.clone())).collect(),
            order: self.order,
        }
    }

    pub fn min_eps(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.eps).min()
    }

    pub fn tau_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.tau).max()
    }

    /// True when no term carries `i` or an odd power of ε.
    pub fn is_real_even(&self) -> bool {
        self.terms.keys().all(|e| e.i == 0 && e.eps % 2 == 0)
    }

    /// The part made of terms with `i` or odd ε-power.
    pub fn non_real_even_part(&self) -> Scalar {
        self.filter(|e| e.i != 0 || e.eps % 2 != 0)
    }
}

fn fmt_term(e: &ScalarExp, c: &Rational) -> String {
    Scalar { terms: BTreeMap::from([(*e, c.clone())]), order: e.eps }.to_string()
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar[K={}]({})", self.order, self)
    }
}

/// Writes one signed product `coeff*factor*factor...` into `out`; returns the
/// sign separately so callers can join terms with ` + ` / ` - `.
pub(crate) fn render_product(c: &Rational, factors: &[String]) -> (bool, String) {
    let negative = c.is_negative();
    let a = c.abs();
    let mut parts = Vec::new();
    if !a.is_one() || factors.is_empty() {
        if a.is_integer() {
            parts.push(a.numer().to_string());
        } else {
            parts.push(format!("({}/{})", a.numer(), a.denom()));
        }
    }
    parts.extend(factors.iter().cloned());
    (negative, parts.join("*"))
}

pub(crate) fn join_signed(items: impl IntoIterator<Item = (bool, String)>) -> String {
    let mut out = String::new();
    for (k, (neg, body)) in items.into_iter().enumerate() {
        match (k, neg) {
            (0, false) => out.push_str(&body),
            (0, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn power_factor(name: &str, p: i64) -> Option<String> {
    match p {
        0 => None,
        1 => Some(name.to_string()),
        _ => Some(format!("{name}^{p}")),
    }
}

impl Scalar {
    pub(crate) fn signed_terms(&self) -> Vec<(bool, String)> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let factors: Vec<String> = [
                    if e.i == 1 { Some("I".to_string()) } else { None },
                    power_factor("t", e.tau as i64),
                    power_factor("e", e.eps as i64),
                ]
                .into_iter()
                .flatten()
                .collect();
                render_product(c, &factors)
            })
            .collect()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_signed(self.signed_terms()))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.$try(rhs).expect("scalar arithmetic")
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$try(&rhs).expect("scalar arithmetic")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.check_order(rhs).expect("scalar arithmetic");
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.check_order(rhs).expect("scalar arithmetic");
        for (e, c) in &rhs.terms {
            self.add_term(*e, -c);
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(), order: self.order }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct ScalarTermJson {
    i: u8,
    tau: u32,
    eps: u32,
    num: String,
    den: String,
}

#[derive(Clone, Serialize, Deserialize)]
struct ScalarJson {
    terms: Vec<ScalarTermJson>,
    #[serde(rename = "K")]
    k: u32,
}

impl From<Scalar> for ScalarJson {
    fn from(s: Scalar) -> Self {
        ScalarJson {
            terms: s
                .terms
                .iter()
                .map(|(e, c)| ScalarTermJson {
                    i: e.i,
                    tau: e.tau,
                    eps: e.eps,
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
            k: s.order,
        }
    }
}

impl TryFrom<ScalarJson> for Scalar {
    type Error = ScalarError;

    fn try_from(j: ScalarJson) -> Result<Self, ScalarError> {
        let mut s = Scalar::zero(j.k);
        for t in j.terms {
            if t.i > 1 {
                return Err(ScalarError::Malformed(format!("i-exponent {} not reduced", t.i)));
            }
            if t.eps > j.k {
                return Err(ScalarError::Malformed(format!("ε^{} exceeds K = {}", t.eps, j.k)));
            }
            let c = parse_rational(&format!("{}/{}", t.num, t.den))?;
            s.add_term(ScalarExp::new(t.i, t.tau, t.eps), c);
        }
        Ok(s)
    }
}

/// Bernoulli number `B_n` with `Σ B_n z^n / n! = z / (e^z − 1)`, so `B_1 = −1/2`.
pub fn bernoulli(n: usize) -> Rational {
    static TABLE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(vec![Rational::one()]));
    let mut table = table.lock().unwrap_or_else(|p| p.into_inner());
    while table.len() <= n {
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let m = table.len();
        let mut binom = BigInt::one();
        let mut acc = Rational::zero();
        for (k, b) in table.iter().enumerate() {
            acc += b * Rational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        table.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    table[n].clone()
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exponents of a μ-form monomial `μ^mu · ε^eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MuExp {
    pub eps: u32,
    pub mu: i64,
}

/// Coefficient in μ-form: real, only even powers of ε, any integer power of μ.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MuScalar {
    terms: BTreeMap<MuExp, Rational>,
}

impl MuScalar {
    pub fn zero() -> Self {
        MuScalar::default()
    }

    pub fn monomial(mu: i64, eps: u32, c: Rational) -> Self {
        let mut m = MuScalar::zero();
        m.add_term(MuExp { eps, mu }, c);
        m
    }

    fn add_term(&mut self, exp: MuExp, c: Rational) {
        assert!(exp.eps.is_multiple_of(2), "μ-form scalars carry even ε-powers only");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MuExp, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mu: i64, eps: u32) -> Rational {
        self.terms.get(&MuExp { eps, mu }).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &MuScalar) -> MuScalar {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    /// Forward substitution `μ = −1/τ`, `ε ↦ ε√(−τ)` into a τ-gauge scalar:
    /// `μ^a ε^{2g} ↦ (−1)^{a+g} τ^{g−a} ε^{2g}`. Terms above `ε^order` drop.
    pub fn to_tau_gauge(&self, order: u32) -> Result<Scalar, ScalarError> {
        let mut out = Scalar::zero(order);
        for (e, c) in &self.terms {
            let g = (e.eps / 2) as i64;
            let tau = g - e.mu;
            if tau < 0 {
                return Err(ScalarError::NegativeTauPower(self.to_string()));
            }
            let c = if (e.mu + g).rem_euclid(2) == 1 { -c } else { c.clone() };
            out.add_term(ScalarExp::new(0, tau as u32, e.eps), c);
        }
        Ok(out)
    }
}

impl fmt::Display for MuScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.terms.iter().map(|(e, c)| {
            let factors: Vec<String> =
                [power_factor("m", e.mu), power_factor("e", e.eps as i64)].into_iter().flatten().collect();
            render_product(c, &factors)
        });
        f.write_str(&join_signed(items))
    }
}

/// Inverse of the gauge substitution: `ε^{2g} τ^k ↦ (−1)^k μ^{g−k} ε^{2g}`.
pub fn to_mu_form(s: &Scalar) -> Result<MuScalar, ScalarError> {
    let mut out = MuScalar::zero();
    for (e, c) in s.terms() {
        if e.i != 0 || e.eps % 2 != 0 {
            return Err(ScalarError::NotRealEven(fmt_term(e, c)));
        }
        let g = (e.eps / 2) as i64;
        let k = e.tau as i64;
        let c = if k % 2 == 1 { -c } else { c.clone() };
        out.add_term(MuExp { eps: e.eps, mu: g - k }, c);
    }
    Ok(out)
}
