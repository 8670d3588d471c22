//! The ε = 0 limit, computed on its own code path.
//!
//! At ε = 0 the symbol of `L` is a series `L̂₀ = e^z + Σ_{n≥0} c_n e^{-nz}` whose
//! coefficients are polynomials in `u` and `τ`. Nothing here touches
//! [`DiffPoly`] or shift operators, so agreement with the full construction is
//! a genuine cross-check.
//!
//! Internally `L̂₀ = e^z (1 + β(q))` with `q = e^{-z}` and `β_k = c_{k-1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffpoly::{DiffMonomial, DiffPoly};
use crate::report::VerificationReport;
use crate::scalars::{format_rational, join_signed, parse_rational, rat_int, render_product, Rational, Scalar, ScalarExp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispersionlessError {
    #[error("fixed-point iteration did not stabilize after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("symbol must have leading term exp(z) with no z-linear part")]
    BadLeading,
    #[error("residue of power {power} needs depth {needed}, series has depth {depth}")]
    DepthInsufficient { power: u32, needed: usize, depth: usize },
    #[error("coefficient is not a polynomial in u and τ: {0}")]
    NotDispersionless(String),
}

/// Polynomial in `u` and `τ` with rational coefficients.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<UTauTermJson>", into = "Vec<UTauTermJson>")]
pub struct UTauPoly {
    // (u-power, τ-power) → coefficient
    terms: BTreeMap<(u32, u32), Rational>,
}

impl UTauPoly {
    pub fn zero() -> Self {
        UTauPoly::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, Rational::one())
    }

    pub fn u() -> Self {
        Self::monomial(1, 0, Rational::one())
    }

    pub fn monomial(u: u32, tau: u32, c: Rational) -> Self {
        let mut p = UTauPoly::zero();
        p.add_term(u, tau, c);
        p
    }

    fn add_term(&mut self, u: u32, tau: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((u, tau)).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&(u, tau));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, u: u32, tau: u32) -> Rational {
        self.terms.get(&(u, tau)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter()
    }

    pub fn u_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(u, _)| *u).max()
    }

    pub fn add(&self, other: &UTauPoly) -> UTauPoly {
        let mut out = self.clone();
        for ((u, t), c) in &other.terms {
            out.add_term(*u, *t, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &UTauPoly) -> UTauPoly {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &UTauPoly) -> UTauPoly {
        let mut out = UTauPoly::zero();
        for ((u1, t1), c1) in &self.terms {
            for ((u2, t2), c2) in &other.terms {
                out.add_term(u1 + u2, t1 + t2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> UTauPoly {
        let mut out = UTauPoly::zero();
        for ((u, t), x) in &self.terms {
            out.add_term(*u, *t, x * c);
        }
        out
    }

    pub fn mul_tau(&self, k: u32) -> UTauPoly {
        UTauPoly { terms: self.terms.iter().map(|((u, t), c)| ((*u, t + k), c.clone())).collect() }
    }

    /// `∂/∂u`.
    pub fn d_du(&self) -> UTauPoly {
        let mut out = UTauPoly::zero();
        for ((u, t), c) in &self.terms {
            if *u > 0 {
                out.add_term(u - 1, *t, c * rat_int(*u as i64));
            }
        }
        out
    }

    /// `∂_u^{-1} u^j = u^{j+1}/(j+1)`.
    pub fn u_antiderivative(&self) -> UTauPoly {
        let mut out = UTauPoly::zero();
        for ((u, t), c) in &self.terms {
            out.add_term(u + 1, *t, c / rat_int(*u as i64 + 1));
        }
        out
    }

    /// Embeds as a differential polynomial in `u` alone at order `K`.
    pub fn to_diffpoly(&self, order: u32) -> DiffPoly {
        DiffPoly::from_terms(
            self.terms.iter().map(|((u, t), c)| {
                (DiffMonomial::var_pow(0, *u), Scalar::monomial(ScalarExp::new(0, *t, 0), c.clone(), order))
            }),
            order,
        )
    }

    /// The ε = 0 part of a differential polynomial, which must involve `u` only
    /// (no derivatives) with real, τ-polynomial coefficients.
    pub fn from_eps_zero(p: &DiffPoly) -> Result<UTauPoly, DispersionlessError> {
        let mut out = UTauPoly::zero();
        for (m, c) in p.terms() {
            for (e, r) in c.terms() {
                if e.eps != 0 {
                    continue;
                }
                if e.i != 0 || m.weight() != 0 {
                    return Err(DispersionlessError::NotDispersionless(p.to_string()));
                }
                out.add_term(m.degree(), e.tau, r.clone());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for UTauPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items = self.terms.iter().map(|((u, t), c)| {
            let mut factors = Vec::new();
            match u {
                0 => {}
                1 => factors.push("u".to_string()),
                _ => factors.push(format!("u^{u}")),
            }
            match t {
                0 => {}
                1 => factors.push("t".to_string()),
                _ => factors.push(format!("t^{t}")),
            }
            render_product(c, &factors)
        });
        f.write_str(&join_signed(items))
    }
}

impl fmt::Debug for UTauPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UTauPoly({self})")
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct UTauTermJson {
    u: u32,
    tau: u32,
    coeff: String,
}

impl From<UTauPoly> for Vec<UTauTermJson> {
    fn from(p: UTauPoly) -> Self {
        p.terms
            .iter()
            .map(|((u, t), c)| UTauTermJson { u: *u, tau: *t, coeff: format_rational(c) })
            .collect()
    }
}

impl TryFrom<Vec<UTauTermJson>> for UTauPoly {
    type Error = String;

    fn try_from(v: Vec<UTauTermJson>) -> Result<Self, String> {
        let mut p = UTauPoly::zero();
        for t in v {
            p.add_term(t.u, t.tau, parse_rational(&t.coeff).map_err(|e| e.to_string())?);
        }
        Ok(p)
    }
}

/// Power series in `q = e^{-z}` truncated after `q^len-1`.
type QSeries = Vec<UTauPoly>;

fn q_mul(a: &[UTauPoly], b: &[UTauPoly], len: usize) -> QSeries {
    let mut out = vec![UTauPoly::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    out
}

fn q_one(len: usize) -> QSeries {
    let mut out = vec![UTauPoly::zero(); len];
    out[0] = UTauPoly::one();
    out
}

/// `log(1 + x)` for `x` without constant term.
fn q_log1p(x: &[UTauPoly], len: usize) -> QSeries {
    let mut out = vec![UTauPoly::zero(); len];
    let mut pow = q_one(len);
    for j in 1..len {
        pow = q_mul(&pow, x, len);
        let c = Rational::new(BigInt::from(if j % 2 == 1 { 1 } else { -1 }), BigInt::from(j));
        for (o, p) in out.iter_mut().zip(&pow) {
            *o = o.add(&p.scale(&c));
        }
    }
    out
}

/// `exp(x)` for `x` without constant term.
fn q_exp(x: &[UTauPoly], len: usize) -> QSeries {
    let mut out = q_one(len);
    let mut term = q_one(len);
    for j in 1..len {
        term = q_mul(&term, x, len).into_iter().map(|p| p.scale(&Rational::new(BigInt::one(), BigInt::from(j)))).collect();
        for (o, p) in out.iter_mut().zip(&term) {
            *o = o.add(p);
        }
    }
    out
}

/// `(1 + x)^{-1}` for `x` without constant term.
fn q_inv1p(x: &[UTauPoly], len: usize) -> QSeries {
    let neg: QSeries = x.iter().map(|p| p.scale(&-Rational::one())).collect();
    let mut out = q_one(len);
    let mut pow = q_one(len);
    for _ in 1..len {
        pow = q_mul(&pow, &neg, len);
        for (o, p) in out.iter_mut().zip(&pow) {
            *o = o.add(p);
        }
    }
    out
}

fn q_pow(x: &[UTauPoly], m: u32, len: usize) -> QSeries {
    (0..m).fold(q_one(len), |acc, _| q_mul(&acc, x, len))
}

/// `z_linear · z + lead · e^z + Σ_{n=0}^{depth} c_n e^{-nz}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeries {
    pub z_linear: Rational,
    pub lead: UTauPoly,
    pub coeffs: Vec<UTauPoly>,
}

impl SymbolSeries {
    pub fn depth(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, n: usize) -> &UTauPoly {
        &self.coeffs[n]
    }

    fn require_l_shape(&self) -> Result<(), DispersionlessError> {
        if self.lead != UTauPoly::one() || !self.z_linear.is_zero() {
            return Err(DispersionlessError::BadLeading);
        }
        Ok(())
    }

    /// `1 + β(q)` as a q-series through `q^{depth+1}`.
    fn normalized(&self) -> QSeries {
        let mut q = vec![UTauPoly::one()];
        q.extend(self.coeffs.iter().cloned());
        q
    }

    /// `β(q)` alone.
    fn beta(&self) -> QSeries {
        let mut q = vec![UTauPoly::zero()];
        q.extend(self.coeffs.iter().cloned());
        q
    }
}

impl fmt::Display for SymbolSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.z_linear.is_zero() {
            parts.push(render_product(&self.z_linear, &["z".to_string()]));
        }
        let mut push = |p: &UTauPoly, factor: Option<String>| {
            if p.is_zero() {
                return;
            }
            let single = p.terms().count() == 1;
            let text = p.to_string();
            let (neg, body) = if single {
                match text.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, text),
                }
            } else {
                (false, format!("({text})"))
            };
            parts.push(match factor {
                None => (neg, body),
                Some(f) if body == "1" => (neg, f),
                Some(f) => (neg, format!("{body}*{f}")),
            });
        };
        push(&self.lead, Some("exp(z)".into()));
        for (n, c) in self.coeffs.iter().enumerate() {
            let factor = match n {
                0 => None,
                1 => Some("exp(-z)".to_string()),
                _ => Some(format!("exp(-{n}*z)")),
            };
            push(c, factor);
        }
        f.write_str(&join_signed(parts))
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolSeriesJson {
    #[serde(rename = "zLinear")]
    z_linear: String,
    coeffs: Vec<(i64, UTauPoly)>,
}

impl Serialize for SymbolSeries {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut coeffs = vec![(-1, self.lead.clone())];
        coeffs.extend(self.coeffs.iter().enumerate().map(|(n, c)| (n as i64, c.clone())));
        SymbolSeriesJson { z_linear: format_rational(&self.z_linear), coeffs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymbolSeries {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = SymbolSeriesJson::deserialize(deserializer)?;
        let z_linear = parse_rational(&j.z_linear).map_err(D::Error::custom)?;
        let mut lead = UTauPoly::zero();
        let mut coeffs = Vec::new();
        for (n, c) in j.coeffs {
            match n {
                -1 => lead = c,
                n if n >= 0 => {
                    let n = n as usize;
                    if coeffs.len() <= n {
                        coeffs.resize(n + 1, UTauPoly::zero());
                    }
                    coeffs[n] = c;
                }
                _ => return Err(D::Error::custom(format!("power {n} below -1"))),
            }
        }
        Ok(SymbolSeries { z_linear, lead, coeffs })
    }
}

/// Solves `L̂₀ − τ log L̂₀ = e^z + u − τz` for `c_0 … c_depth` by fixed-point
/// iteration `L̂ ← e^z + u − τz + τ log L̂`, starting from `e^z + u`.
pub fn solve_symbol(depth: usize) -> Result<SymbolSeries, DispersionlessError> {
    assert!(depth >= 1, "symbol depth starts at 1");
    let mut current = SymbolSeries {
        z_linear: Rational::zero(),
        lead: UTauPoly::one(),
        coeffs: {
            let mut c = vec![UTauPoly::zero(); depth + 1];
            c[0] = UTauPoly::u();
            c
        },
    };
    let max_sweeps = depth + 2;
    for sweep in 1..=max_sweeps {
        let log = q_log1p(&current.beta(), depth + 1);
        let mut next = current.clone();
        for n in 1..=depth {
            next.coeffs[n] = log[n].mul_tau(1);
        }
        if next == current {
            return Ok(current);
        }
        current = next;
        if sweep == max_sweeps {
            break;
        }
    }
    Err(DispersionlessError::NonConvergence { sweeps: max_sweeps })
}

/// `log S = z + log(1 + β)`. The input fixes β through `q^{depth+1}`, so the
/// result is exact through `e^{-(depth+1)z}` and is returned at that depth.
pub fn symbol_log(s: &SymbolSeries) -> Result<SymbolSeries, DispersionlessError> {
    s.require_l_shape()?;
    let len = s.depth() + 2;
    let log = q_log1p(&s.beta(), len);
    Ok(SymbolSeries { z_linear: Rational::one(), lead: UTauPoly::zero(), coeffs: log })
}

/// Inverse of [`symbol_log`]: `exp(z + ℓ(q)) = e^z exp(ℓ(q))`, one depth lower.
pub fn symbol_exp(s: &SymbolSeries) -> Result<SymbolSeries, DispersionlessError> {
    if !s.z_linear.is_one() || !s.lead.is_zero() || s.coeffs.first().is_some_and(|c| !c.is_zero()) || s.depth() < 1 {
        return Err(DispersionlessError::BadLeading);
    }
    let len = s.depth() + 1;
    let e = q_exp(&s.coeffs, len);
    Ok(SymbolSeries { z_linear: Rational::zero(), lead: UTauPoly::one(), coeffs: e[1..].to_vec() })
}

/// `res S^m`, the `e^{0·z}` coefficient of `S^m`, i.e. `[q^m](1 + β)^m`.
pub fn symbol_residue_power(s: &SymbolSeries, m: u32) -> Result<UTauPoly, DispersionlessError> {
    s.require_l_shape()?;
    let needed = (m as usize).saturating_sub(1);
    if needed > s.depth() {
        return Err(DispersionlessError::DepthInsufficient { power: m, needed, depth: s.depth() });
    }
    if m == 0 {
        return Ok(UTauPoly::one());
    }
    let len = m as usize + 1;
    Ok(q_pow(&s.normalized(), m, len)[m as usize].clone())
}

/// `res S^m / m!`.
pub fn normalized_residue(s: &SymbolSeries, m: u32) -> Result<UTauPoly, DispersionlessError> {
    let fact = (1..=m as i64).fold(Rational::one(), |acc, k| acc * rat_int(k));
    Ok(symbol_residue_power(s, m)?.scale(&fact.recip()))
}

pub fn u_antiderivative(p: &UTauPoly) -> UTauPoly {
    p.u_antiderivative()
}

/// `(Π_{j=1}^{d} (∂_u^{-1} + τ/j)) u`.
pub fn antiderivative_product(d: u32) -> UTauPoly {
    (1..=d).fold(UTauPoly::u(), |acc, j| {
        acc.u_antiderivative().add(&acc.mul_tau(1).scale(&Rational::new(BigInt::one(), BigInt::from(j))))
    })
}

/// Coefficients `P_{d,j}`, `j = 1…d`, of `y Π_{i=1}^{d-1} (y + τ/i)`, expanded
/// here independently of the hierarchy module.
fn pd_coefficients(d: u32) -> Vec<Rational> {
    // poly[j] = coefficient of y^j (τ implicit)
    let mut poly = vec![Rational::zero(), Rational::one()];
    for i in 1..d {
        let shift = Rational::new(BigInt::one(), BigInt::from(i));
        let mut next = vec![Rational::zero(); poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            next[j + 1] += c;
            next[j] += c * &shift;
        }
        poly = next;
    }
    poly[1..].to_vec()
}

/// `Σ_j P_{d+1,j+1} τ^{d-j} u^{j+1}/(j+1)!`.
fn pd_side(d: u32) -> UTauPoly {
    let coeffs = pd_coefficients(d + 1);
    let mut out = UTauPoly::zero();
    let mut fact = Rational::one();
    for j in 0..=d {
        fact *= rat_int(j as i64 + 1);
        out = out.add(&UTauPoly::monomial(j + 1, d - j, &coeffs[j as usize] / &fact));
    }
    out
}

/// One failed sub-check: which one, and the nonzero difference.
fn first_failure(items: Vec<(&'static str, UTauPoly)>) -> Option<(DiffPoly, String)> {
    items
        .into_iter()
        .find(|(_, diff)| !diff.is_zero())
        .map(|(name, diff)| (diff.to_diffpoly(0), format!("sub-check {name} left {diff}")))
}

/// `∂L̂₀/∂u − 1/(1 − τ L̂₀^{-1})` through `e^{-depth·z}`.
pub fn derivative_identity_defect(s: &SymbolSeries) -> Result<Vec<UTauPoly>, DispersionlessError> {
    s.require_l_shape()?;
    let len = s.depth() + 1;
    // L̂₀^{-1} = q (1 + β)^{-1}
    let inv = q_inv1p(&s.beta(), len);
    let mut r = vec![UTauPoly::zero(); len];
    for n in 1..len {
        r[n] = inv[n - 1].mul_tau(1);
    }
    let mut geometric = q_one(len);
    let mut pow = q_one(len);
    for _ in 1..len {
        pow = q_mul(&pow, &r, len);
        for (g, p) in geometric.iter_mut().zip(&pow) {
            *g = g.add(p);
        }
    }
    Ok(s.coeffs.iter().zip(&geometric).map(|(c, g)| c.d_du().sub(g)).collect())
}

/// Runs the four dispersionless identities at index `d` on a symbol of the
/// given depth:
/// (a) `∂L̂₀/∂u = 1/(1 − τL̂₀^{-1})`;
/// (b) `∂_u R_{d+1} = R_d + (τ/d) ∂_u R_d` for `d ≥ 1`, with `R_m = res L̂₀^m/m!`;
/// (c) `R_{d+1} = Σ_j P_{d+1,j+1} τ^{d-j} u^{j+1}/(j+1)! = (Π_{j≤d}(∂_u^{-1}+τ/j)) u`;
/// (d) `∂_u(R_{d+2} − τ/(d+1) R_{d+1}) = R_{d+1}`.
pub fn check_dispersionless_identity(
    s: &SymbolSeries,
    d: u32,
) -> Result<VerificationReport, DispersionlessError> {
    let started = Instant::now();
    let r = |m: u32| normalized_residue(s, m);
    let mut items = Vec::new();

    let defect_a = derivative_identity_defect(s)?;
    if let Some(bad) = defect_a.into_iter().find(|p| !p.is_zero()) {
        items.push(("a", bad));
    }
    let r_d = r(d)?;
    let r_d1 = r(d + 1)?;
    let r_d2 = r(d + 2)?;
    if d >= 1 {
        let rhs = r_d.add(&r_d.d_du().mul_tau(1).scale(&Rational::new(BigInt::one(), BigInt::from(d))));
        items.push(("b", r_d1.d_du().sub(&rhs)));
    }
    items.push(("c", r_d1.sub(&pd_side(d))));
    items.push(("c'", r_d1.sub(&antiderivative_product(d))));
    let ham = r_d2.sub(&r_d1.mul_tau(1).scale(&Rational::new(BigInt::one(), BigInt::from(d + 1))));
    items.push(("d", ham.d_du().sub(&r_d1)));

    Ok(VerificationReport::from_difference("dispersionless", vec![d as i64], first_failure(items), started))
}

/// All identities for `d = 0..=d_max` at a depth large enough for each.
pub fn check_dispersionless_identities(
    d_max: u32,
    depth: usize,
) -> Result<Vec<VerificationReport>, DispersionlessError> {
    let s = solve_symbol(depth.max(d_max as usize + 1))?;
    (0..=d_max).map(|d| check_dispersionless_identity(&s, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    fn u_pow(j: u32, t: u32, c: Rational) -> UTauPoly {
        UTauPoly::monomial(j, t, c)
    }

    #[test]
    fn first_symbol_coefficients() {
        let s = solve_symbol(3).unwrap();
        assert_eq!(s.coeffs[0], UTauPoly::u());
        assert_eq!(s.coeffs[1], u_pow(1, 1, rat(1, 1)));
        for (n, c) in s.coeffs.iter().enumerate() {
            assert!(c.u_degree().unwrap_or(0) <= n as u32 + 1);
        }
    }

    #[test]
    fn symbol_is_stable_in_depth() {
        let a = solve_symbol(4).unwrap();
        let b = solve_symbol(6).unwrap();
        assert_eq!(a.coeffs[..], b.coeffs[..5]);
    }

    #[test]
    fn log_examples() {
        let pure = SymbolSeries { z_linear: Rational::zero(), lead: UTauPoly::one(), coeffs: vec![UTauPoly::zero(); 3] };
        let l = symbol_log(&pure).unwrap();
        assert!(l.z_linear.is_one() && l.coeffs.iter().all(UTauPoly::is_zero));

        let mut c = vec![UTauPoly::zero(); 3];
        c[0] = UTauPoly::u();
        let s = SymbolSeries { z_linear: Rational::zero(), lead: UTauPoly::one(), coeffs: c };
        let l = symbol_log(&s).unwrap();
        assert!(l.coeffs[0].is_zero());
        assert_eq!(l.coeffs[1], UTauPoly::u());
        assert_eq!(l.coeffs[2], u_pow(2, 0, rat(-1, 2)));
        assert_eq!(l.coeffs[3], u_pow(3, 0, rat(1, 3)));

        let bad = SymbolSeries { lead: UTauPoly::u(), ..s };
        assert_eq!(symbol_log(&bad), Err(DispersionlessError::BadLeading));
    }

    #[test]
    fn exp_log_round_trip() {
        let s = solve_symbol(5).unwrap();
        assert_eq!(symbol_exp(&symbol_log(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn residues_of_low_powers() {
        let s = solve_symbol(4).unwrap();
        assert_eq!(normalized_residue(&s, 1).unwrap(), UTauPoly::u());
        assert_eq!(normalized_residue(&s, 2).unwrap(), u_pow(2, 0, rat(1, 2)).add(&u_pow(1, 1, rat(1, 1))));
        let r3 = u_pow(3, 0, rat(1, 6)).add(&u_pow(2, 1, rat(3, 4))).add(&u_pow(1, 2, rat(1, 2)));
        assert_eq!(normalized_residue(&s, 3).unwrap(), r3);
        assert!(matches!(symbol_residue_power(&s, 6), Err(DispersionlessError::DepthInsufficient { .. })));
    }

    #[test]
    fn antiderivative_examples() {
        assert_eq!(UTauPoly::u().u_antiderivative(), u_pow(2, 0, rat(1, 2)));
        assert_eq!(UTauPoly::one().u_antiderivative(), UTauPoly::u());
        let r3 = u_pow(3, 0, rat(1, 6)).add(&u_pow(2, 1, rat(3, 4))).add(&u_pow(1, 2, rat(1, 2)));
        assert_eq!(antiderivative_product(2), r3);
        let p = u_pow(4, 3, rat(2, 7));
        assert_eq!(p.u_antiderivative().d_du(), p);
    }

    #[test]
    fn pd_expansion() {
        assert_eq!(pd_coefficients(1), vec![rat(1, 1)]);
        assert_eq!(pd_coefficients(3), vec![rat(1, 2), rat(3, 2), rat(1, 1)]);
        assert_eq!(pd_coefficients(4), vec![rat(1, 6), rat(1, 1), rat(11, 6), rat(1, 1)]);
    }

    #[test]
    fn identities_hold() {
        let s = solve_symbol(3).unwrap();
        assert!(derivative_identity_defect(&s).unwrap().iter().all(UTauPoly::is_zero));
        for report in check_dispersionless_identities(2, 4).unwrap() {
            assert!(report.pass, "{}", report.summary());
        }
    }

    #[test]
    fn json_round_trip() {
        let s = solve_symbol(3).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.starts_with(r#"{"zLinear":"0","coeffs":[[-1,[{"u":0,"tau":0,"coeff":"1"}]]"#), "{js}");
        let back: SymbolSeries = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rendering() {
        let mut c = vec![UTauPoly::zero(); 2];
        c[0] = UTauPoly::u();
        let s = SymbolSeries { z_linear: Rational::zero(), lead: UTauPoly::one(), coeffs: c };
        assert_eq!(s.to_string(), "exp(z) + u");
    }
}
