//! Operators `Σ a_n Λ^n + (Σ b_n Λ^n) ∘ (iε∂x)` with differential polynomial
//! coefficients, where `Λ = exp(iε∂x)`.
//!
//! Normal form keeps every `iε∂x` on the right. Operators are at most first
//! order in `∂x`; composing two first-order operators is an error.
//!
//! Truncated series such as `L = Λ + Σ_{n≤N} a_n Λ^{-n}` carry a *floor*: the
//! coefficients strictly below it are unknown and never stored. Composition
//! propagates the floor so that every stored coefficient is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffpoly::DiffPoly;
use crate::scalars::{join_signed, Rational, Scalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("composition of two first-order operators leaves the first-order algebra")]
    SecondOrderOverflow,
    #[error("coefficient of S^{needed} requested but the operator is only known down to S^{floor}")]
    DepthInsufficient { needed: i64, floor: i64 },
    #[error("malformed operator: {0}")]
    Malformed(String),
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShiftOperatorJson", into = "ShiftOperatorJson")]
pub struct ShiftOperator {
    zero: BTreeMap<i64, DiffPoly>,
    first: BTreeMap<i64, DiffPoly>,
    floor: Option<i64>,
    order: u32,
}

impl ShiftOperator {
    pub fn zero(order: u32) -> Self {
        ShiftOperator { zero: BTreeMap::new(), first: BTreeMap::new(), floor: None, order }
    }

    pub fn identity(order: u32) -> Self {
        Self::monomial(0, DiffPoly::one(order))
    }

    /// `Λ^n`.
    pub fn shift(n: i64, order: u32) -> Self {
        Self::monomial(n, DiffPoly::one(order))
    }

    /// `c · Λ^n`.
    pub fn monomial(n: i64, c: DiffPoly) -> Self {
        let mut op = Self::zero(c.order());
        op.zero.insert(n, c);
        op.trim();
        op
    }

    /// `c · Λ^n ∘ (iε∂x)`.
    pub fn first_order_monomial(n: i64, c: DiffPoly) -> Self {
        let mut op = Self::zero(c.order());
        op.first.insert(n, c);
        op.trim();
        op
    }

    /// `iε∂x`.
    pub fn i_eps_dx(order: u32) -> Self {
        Self::first_order_monomial(0, DiffPoly::one(order))
    }

    pub fn from_parts(
        zero: BTreeMap<i64, DiffPoly>,
        first: BTreeMap<i64, DiffPoly>,
        floor: Option<i64>,
        order: u32,
    ) -> Result<Self, OpError> {
        if let Some(p) = zero.values().chain(first.values()).find(|p| p.order() != order) {
            return Err(ScalarError::OrderMismatch(order, p.order()).into());
        }
        let mut op = ShiftOperator { zero, first, floor, order };
        op.trim();
        Ok(op)
    }

    /// Declares every coefficient below `floor` unknown.
    pub fn with_floor(mut self, floor: i64) -> Self {
        self.floor = Some(self.floor.map_or(floor, |f| f.max(floor)));
        self.trim();
        self
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn is_zero(&self) -> bool {
        self.zero.is_empty() && self.first.is_empty()
    }

    pub fn has_first_order(&self) -> bool {
        !self.first.is_empty()
    }

    pub fn zero_part(&self) -> &BTreeMap<i64, DiffPoly> {
        &self.zero
    }

    pub fn first_part(&self) -> &BTreeMap<i64, DiffPoly> {
        &self.first
    }

    /// Coefficient of `Λ^n` (zero-order part).
    pub fn coeff(&self, n: i64) -> Result<DiffPoly, OpError> {
        self.check_known(n)?;
        Ok(self.zero.get(&n).cloned().unwrap_or_else(|| DiffPoly::zero(self.order)))
    }

    /// Coefficient of `Λ^n ∘ iε∂x`.
    pub fn first_coeff(&self, n: i64) -> Result<DiffPoly, OpError> {
        self.check_known(n)?;
        Ok(self.first.get(&n).cloned().unwrap_or_else(|| DiffPoly::zero(self.order)))
    }

    fn check_known(&self, n: i64) -> Result<(), OpError> {
        match self.floor {
            Some(f) if n < f => Err(OpError::DepthInsufficient { needed: n, floor: f }),
            _ => Ok(()),
        }
    }

    /// Highest power present in either part.
    pub fn top(&self) -> Option<i64> {
        self.zero.keys().chain(self.first.keys()).max().copied()
    }

    pub fn bottom(&self) -> Option<i64> {
        self.zero.keys().chain(self.first.keys()).min().copied()
    }

    fn trim(&mut self) {
        let floor = self.floor;
        let keep = |n: &i64, p: &mut DiffPoly| !p.is_zero() && floor.is_none_or(|f| *n >= f);
        self.zero.retain(keep);
        self.first.retain(keep);
    }

    /// Highest power at which unknown terms may sit, or known terms do.
    fn effective_top(&self) -> Option<i64> {
        match (self.top(), self.floor) {
            (Some(t), Some(f)) => Some(t.max(f - 1)),
            (Some(t), None) => Some(t),
            (None, Some(f)) => Some(f - 1),
            (None, None) => None,
        }
    }

    fn check_order(&self, other: &ShiftOperator) -> Result<(), OpError> {
        if self.order != other.order {
            Err(ScalarError::OrderMismatch(self.order, other.order).into())
        } else {
            Ok(())
        }
    }

    fn product_floor(&self, other: &ShiftOperator) -> Option<i64> {
        let a = self.floor.zip(other.effective_top()).map(|(f, t)| f + t);
        let b = other.floor.zip(self.effective_top()).map(|(f, t)| f + t);
        match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        }
    }

    pub fn compose(&self, other: &ShiftOperator) -> Result<ShiftOperator, OpError> {
        self.check_order(other)?;
        if self.has_first_order() && other.has_first_order() {
            return Err(OpError::SecondOrderOverflow);
        }
        let floor = self.product_floor(other);
        let known = |n: i64| floor.is_none_or(|f| n >= f);
        let k = self.order;
        let i_eps = Scalar::i_eps(k);
        let mut zero: BTreeMap<i64, DiffPoly> = BTreeMap::new();
        let mut first: BTreeMap<i64, DiffPoly> = BTreeMap::new();
        let acc = |map: &mut BTreeMap<i64, DiffPoly>, n: i64, p: DiffPoly| {
            map.entry(n).and_modify(|x| *x += &p).or_insert(p);
        };

        let powers: Vec<i64> = {
            let mut v: Vec<i64> = self.zero.keys().chain(self.first.keys()).copied().collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        for i in powers {
            let a = self.zero.get(&i);
            let b = self.first.get(&i);
            for (j, c) in &other.zero {
                let n = i + j;
                if !known(n) {
                    continue;
                }
                let shifted = c.lambda_shift(i);
                if let Some(b) = b {
                    // b Λ^i D ∘ c Λ^j = b (Λ^i c) Λ^{i+j} D + b Λ^i(iε c_x) Λ^{i+j}
                    let dc = shifted.x_derivative().scale(&i_eps);
                    acc(&mut zero, n, b * &dc);
                    acc(&mut first, n, b * &shifted);
                }
                if let Some(a) = a {
                    acc(&mut zero, n, a * &shifted);
                }
            }
            if let Some(a) = a {
                for (j, e) in &other.first {
                    let n = i + j;
                    if known(n) {
                        acc(&mut first, n, a * &e.lambda_shift(i));
                    }
                }
            }
        }
        let mut out = ShiftOperator { zero, first, floor, order: k };
        out.trim();
        Ok(out)
    }

    pub fn try_add(&self, other: &ShiftOperator) -> Result<ShiftOperator, OpError> {
        linear_combination(&[(Scalar::one(self.order), self), (Scalar::one(self.order), other)])
    }

    pub fn try_sub(&self, other: &ShiftOperator) -> Result<ShiftOperator, OpError> {
        linear_combination(&[(Scalar::one(self.order), self), (-Scalar::one(self.order), other)])
    }

    pub fn scale(&self, c: &Scalar) -> ShiftOperator {
        let mut out = self.map_coeffs(|p| p.scale(c));
        out.trim();
        out
    }

    pub fn scale_rational(&self, c: &Rational) -> ShiftOperator {
        let mut out = self.map_coeffs(|p| p.scale_rational(c));
        out.trim();
        out
    }

    fn map_coeffs<F: Fn(&DiffPoly) -> DiffPoly>(&self, f: F) -> ShiftOperator {
        ShiftOperator {
            zero: self.zero.iter().map(|(n, p)| (*n, f(p))).collect(),
            first: self.first.iter().map(|(n, p)| (*n, f(p))).collect(),
            floor: self.floor,
            order: self.order,
        }
    }

    /// Coefficientwise x-derivative (the operator `A_x`).
    pub fn x_derivative(&self) -> ShiftOperator {
        let mut out = self.map_coeffs(DiffPoly::x_derivative);
        out.trim();
        out
    }

    pub fn truncate(&self, order: u32) -> ShiftOperator {
        let mut out = self.map_coeffs(|p| p.truncate(order));
        out.order = order;
        out.trim();
        out
    }

    /// Reinterprets at a higher ε-order; new top coefficients are zero.
    pub fn raise_order(&self, order: u32) -> ShiftOperator {
        let mut out = self.map_coeffs(|p| p.raise_order(order));
        out.order = order;
        out
    }

    /// `c · iε∂x` with constant `c`, if that is what this operator is.
    fn as_scaled_dx(&self) -> Option<Scalar> {
        if !self.zero.is_empty() || self.first.len() != 1 || self.floor.is_some() {
            return None;
        }
        let p = self.first.get(&0)?;
        (p.len() == 1 && p.max_order().is_none()).then(|| p.constant_part())
    }

    /// `[A, B] = A∘B − B∘A`.
    pub fn commutator(&self, other: &ShiftOperator) -> Result<ShiftOperator, OpError> {
        self.check_order(other)?;
        let i_eps = Scalar::i_eps(self.order);
        if let Some(c) = other.as_scaled_dx() {
            // [A, c iε∂x] = −c iε A_x
            return Ok(self.x_derivative().scale(&-(&c * &i_eps)));
        }
        if let Some(c) = self.as_scaled_dx() {
            return Ok(other.x_derivative().scale(&(&c * &i_eps)));
        }
        self.compose(other)?.try_sub(&other.compose(self)?)
    }

    /// `A₊`: the terms with non-negative powers of `Λ`, in both parts.
    pub fn positive_part(&self) -> ShiftOperator {
        ShiftOperator {
            zero: self.zero.range(0..).map(|(n, p)| (*n, p.clone())).collect(),
            first: self.first.range(0..).map(|(n, p)| (*n, p.clone())).collect(),
            floor: self.floor.filter(|f| *f > 0),
            order: self.order,
        }
    }

    /// `A₋ = A − A₊`.
    pub fn negative_part(&self) -> ShiftOperator {
        ShiftOperator {
            zero: self.zero.range(..0).map(|(n, p)| (*n, p.clone())).collect(),
            first: self.first.range(..0).map(|(n, p)| (*n, p.clone())).collect(),
            floor: self.floor,
            order: self.order,
        }
    }

    /// `res A`, the `Λ^0` coefficient of the zero-order part.
    pub fn residue(&self) -> Result<DiffPoly, OpError> {
        self.coeff(0)
    }

    /// True if a `Λ^0 ∘ iε∂x` term is present, which `residue` ignores.
    pub fn has_first_order_residue(&self) -> bool {
        self.first.contains_key(&0)
    }

    /// `A^m` for `m ≥ 1` by repeated composition.
    pub fn power(&self, m: u32) -> Result<ShiftOperator, OpError> {
        assert!(m >= 1, "operator powers start at 1");
        if self.has_first_order() {
            return Err(OpError::SecondOrderOverflow);
        }
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    /// First nonzero coefficient, used as a failure witness.
    pub fn first_nonzero(&self) -> Option<(i64, bool, &DiffPoly)> {
        self.zero
            .iter()
            .map(|(n, p)| (*n, false, p))
            .chain(self.first.iter().map(|(n, p)| (*n, true, p)))
            .next()
    }
}

/// `Σ c_k A_k` over operators sharing a truncation order.
pub fn linear_combination(items: &[(Scalar, &ShiftOperator)]) -> Result<ShiftOperator, OpError> {
    let Some((_, head)) = items.first() else {
        return Err(OpError::Malformed("empty linear combination".into()));
    };
    let order = head.order;
    let mut out = ShiftOperator::zero(order);
    for (c, op) in items {
        for k in [op.order, c.order()] {
            if k != order {
                return Err(ScalarError::OrderMismatch(order, k).into());
            }
        }
        out.floor = match (out.floor, op.floor) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        for (n, p) in &op.zero {
            let p = p.scale(c);
            out.zero.entry(*n).and_modify(|x| *x += &p).or_insert(p);
        }
        for (n, p) in &op.first {
            let p = p.scale(c);
            out.first.entry(*n).and_modify(|x| *x += &p).or_insert(p);
        }
    }
    out.trim();
    Ok(out)
}

/// Memoized powers `A^m` of a fixed zero-order operator. Racing inserts
/// compute value-equal entries, so the last write simply wins.
#[derive(Debug)]
pub struct PowerCache {
    base: Arc<ShiftOperator>,
    powers: RwLock<BTreeMap<u32, Arc<ShiftOperator>>>,
}

impl PowerCache {
    pub fn new(base: ShiftOperator) -> Result<Self, OpError> {
        if base.has_first_order() {
            return Err(OpError::SecondOrderOverflow);
        }
        let base = Arc::new(base);
        let powers = RwLock::new(BTreeMap::from([(1, Arc::clone(&base))]));
        Ok(PowerCache { base, powers })
    }

    pub fn base(&self) -> &ShiftOperator {
        &self.base
    }

    pub fn get(&self, m: u32) -> Result<Arc<ShiftOperator>, OpError> {
        assert!(m >= 1, "operator powers start at 1");
        let (start, mut acc) = {
            let guard = self.powers.read().unwrap_or_else(|p| p.into_inner());
            if let Some(p) = guard.get(&m) {
                return Ok(Arc::clone(p));
            }
            let (k, p) = guard.range(..m).next_back().expect("power 1 always cached");
            (*k, Arc::clone(p))
        };
        for k in start + 1..=m {
            let next = Arc::new(acc.compose(&self.base)?);
            self.powers.write().unwrap_or_else(|p| p.into_inner()).insert(k, Arc::clone(&next));
            acc = next;
        }
        Ok(acc)
    }
}

fn shift_factor(n: i64) -> Option<String> {
    match n {
        0 => None,
        1 => Some("S".into()),
        _ => Some(format!("S^{n}")),
    }
}

fn symbol_factor(n: i64) -> Option<String> {
    match n {
        0 => None,
        1 => Some("exp(z)".into()),
        -1 => Some("exp(-z)".into()),
        _ => Some(format!("exp({n}*z)")),
    }
}

fn render_coeff_times(p: &DiffPoly, factors: &[String]) -> (bool, String) {
    let tail = factors.join("*");
    let body = p.to_string();
    let single = p.len() == 1 && p.terms().next().is_some_and(|(_, c)| c.len() == 1);
    if single {
        let (neg, body) = match body.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, body),
        };
        if tail.is_empty() {
            (neg, body)
        } else if body == "1" {
            (neg, tail)
        } else {
            (neg, format!("{body}*{tail}"))
        }
    } else if tail.is_empty() {
        (false, format!("({body})"))
    } else {
        (false, format!("({body})*{tail}"))
    }
}

impl ShiftOperator {
    fn render(&self, shift: fn(i64) -> Option<String>, dx: &[&str], tail: Option<String>) -> String {
        let mut items = Vec::new();
        let powers: Vec<i64> = {
            let mut v: Vec<i64> = self.zero.keys().chain(self.first.keys()).copied().collect();
            v.sort_unstable_by(|a, b| b.cmp(a));
            v.dedup();
            v
        };
        for n in powers {
            if let Some(p) = self.zero.get(&n) {
                items.push(render_coeff_times(p, &shift(n).into_iter().collect::<Vec<_>>()));
            }
            if let Some(p) = self.first.get(&n) {
                let mut f: Vec<String> = shift(n).into_iter().collect();
                f.extend(dx.iter().map(|s| s.to_string()));
                items.push(render_coeff_times(p, &f));
            }
        }
        if let Some(t) = tail {
            items.push((false, t));
        }
        join_signed(items)
    }

    /// Symbol rendering: `Λ^n ↦ exp(n z)` and `iε∂x ↦ z`.
    pub fn symbol_string(&self) -> String {
        let tail = self.floor.map(|f| format!("O(exp({}*z))", f - 1));
        self.render(symbol_factor, &["z"], tail)
    }
}

impl fmt::Display for ShiftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail = self.floor.map(|fl| format!("O(S^{})", fl - 1));
        f.write_str(&self.render(shift_factor, &["I", "e", "Dx"], tail))
    }
}

impl fmt::Debug for ShiftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShiftOperator[K={}]({})", self.order, self)
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct ShiftOperatorJson {
    zero: Vec<(i64, DiffPoly)>,
    first: Vec<(i64, DiffPoly)>,
    #[serde(rename = "K")]
    k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor: Option<i64>,
}

impl From<ShiftOperator> for ShiftOperatorJson {
    fn from(op: ShiftOperator) -> Self {
        ShiftOperatorJson {
            zero: op.zero.into_iter().collect(),
            first: op.first.into_iter().collect(),
            k: op.order,
            floor: op.floor,
        }
    }
}

impl TryFrom<ShiftOperatorJson> for ShiftOperator {
    type Error = OpError;

    fn try_from(j: ShiftOperatorJson) -> Result<Self, OpError> {
        let collect = |v: Vec<(i64, DiffPoly)>| -> Result<BTreeMap<i64, DiffPoly>, OpError> {
            let mut map = BTreeMap::new();
            for (n, p) in v {
                if map.insert(n, p).is_some() {
                    return Err(OpError::Malformed(format!("duplicate power {n}")));
                }
            }
            Ok(map)
        };
        ShiftOperator::from_parts(collect(j.zero)?, collect(j.first)?, j.floor, j.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffpoly::DiffMonomial;
    use crate::scalars::{rat, ScalarExp};

    const K: u32 = 3;

    fn u(k: usize) -> DiffPoly {
        DiffPoly::var(k, K)
    }

    #[test]
    fn shift_times_inverse_is_identity() {
        let a = ShiftOperator::shift(1, K).compose(&ShiftOperator::shift(-1, K)).unwrap();
        assert_eq!(a, ShiftOperator::identity(K));
    }

    #[test]
    fn dx_past_multiplication() {
        let d = ShiftOperator::i_eps_dx(K);
        let m = ShiftOperator::monomial(0, u(0));
        let got = d.compose(&m).unwrap();
        let want = ShiftOperator::first_order_monomial(0, u(0))
            .try_add(&ShiftOperator::monomial(0, u(1).scale(&Scalar::i_eps(K))))
            .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn single_cross_term() {
        let v = &u(0) * &u(0);
        let got = ShiftOperator::monomial(1, u(0)).compose(&ShiftOperator::monomial(-1, v.clone())).unwrap();
        assert_eq!(got, ShiftOperator::monomial(0, &u(0) * &v.lambda_shift(1)));
    }

    #[test]
    fn second_order_is_refused() {
        let d = ShiftOperator::i_eps_dx(K);
        let a = ShiftOperator::first_order_monomial(1, u(0));
        assert_eq!(a.compose(&d), Err(OpError::SecondOrderOverflow));
        assert_eq!(a.power(2), Err(OpError::SecondOrderOverflow));
    }

    #[test]
    fn commutator_examples() {
        let d = ShiftOperator::i_eps_dx(K);
        let m = ShiftOperator::monomial(2, u(0));
        assert_eq!(d.commutator(&m).unwrap(), ShiftOperator::monomial(2, u(1).scale(&Scalar::i_eps(K))));
        // general route agrees with the derivation shortcut
        let general = d.compose(&m).unwrap().try_sub(&m.compose(&d).unwrap()).unwrap();
        assert_eq!(general, d.commutator(&m).unwrap());

        let shift = ShiftOperator::shift(1, K);
        let c = shift.commutator(&ShiftOperator::monomial(0, u(0))).unwrap();
        let expected = &u(0).lambda_shift(1) - &u(0);
        assert_eq!(c, ShiftOperator::monomial(1, expected));
        assert!(m.commutator(&m).unwrap().is_zero());
    }

    #[test]
    fn positive_negative_split() {
        let a = ShiftOperator::from_parts(
            BTreeMap::from([(1, u(0)), (0, u(1)), (-1, u(2))]),
            BTreeMap::from([(0, u(0)), (-2, u(1))]),
            None,
            K,
        )
        .unwrap();
        let plus = a.positive_part();
        let minus = a.negative_part();
        assert_eq!(plus.try_add(&minus).unwrap(), a);
        assert_eq!(plus.positive_part(), plus);
        assert_eq!(a.residue().unwrap(), u(1));
        assert!(a.has_first_order_residue());
        assert!(ShiftOperator::monomial(-3, u(0)).positive_part().is_zero());
        assert!(ShiftOperator::shift(2, K).residue().unwrap().is_zero());
    }

    #[test]
    fn floor_tracks_known_coefficients() {
        // truncated L = Λ + u + a Λ^{-1}, known down to Λ^{-1}
        let l = ShiftOperator::from_parts(
            BTreeMap::from([(1, DiffPoly::one(K)), (0, u(0)), (-1, u(1))]),
            BTreeMap::new(),
            Some(-1),
            K,
        )
        .unwrap();
        let l2 = l.compose(&l).unwrap();
        assert_eq!(l2.floor(), Some(0));
        assert!(l2.residue().is_ok());
        let l3 = l2.compose(&l).unwrap();
        assert_eq!(l3.floor(), Some(1));
        assert!(matches!(l3.residue(), Err(OpError::DepthInsufficient { .. })));
        assert_eq!(l3.positive_part().floor(), Some(1));
        assert_eq!(l2.positive_part().floor(), None);
        assert_eq!(l.power(3).unwrap(), l3);
    }

    #[test]
    fn power_cache_matches_direct_powers() {
        let l = ShiftOperator::from_parts(
            BTreeMap::from([(1, DiffPoly::one(K)), (0, u(0))]),
            BTreeMap::new(),
            None,
            K,
        )
        .unwrap();
        let cache = PowerCache::new(l.clone()).unwrap();
        assert_eq!(*cache.get(3).unwrap(), l.power(3).unwrap());
        assert_eq!(*cache.get(2).unwrap(), l.power(2).unwrap());
        let lead = cache.get(4).unwrap().coeff(4).unwrap();
        assert_eq!(lead, DiffPoly::one(K));
    }

    #[test]
    fn rendering() {
        let t = DiffPoly::constant(Scalar::monomial(ScalarExp::new(0, 1, 0), rat(-1, 1), K));
        let cal_l = ShiftOperator::shift(1, K)
            .try_add(&ShiftOperator::monomial(0, u(0)))
            .unwrap()
            .try_add(&ShiftOperator::first_order_monomial(0, t))
            .unwrap();
        assert_eq!(cal_l.to_string(), "S + u - t*I*e*Dx");
        assert_eq!(cal_l.symbol_string(), "exp(z) + u - t*z");
        let a = ShiftOperator::monomial(-1, DiffPoly::term(DiffMonomial::var(0), Scalar::tau(K), K));
        assert_eq!(a.to_string(), "t*u*S^-1");
    }

    #[test]
    fn json_round_trip() {
        let a = ShiftOperator::monomial(-1, u(0)).try_add(&ShiftOperator::i_eps_dx(K)).unwrap().with_floor(-2);
        let js = serde_json::to_string(&a).unwrap();
        let back: ShiftOperator = serde_json::from_str(&js).unwrap();
        assert_eq!(back, a);
    }
}
