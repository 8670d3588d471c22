//! The operator `L` solving `L − τ log L = Λ + u − τ iε∂x`, its powers,
//! Hamiltonians and flows, and the checks that tie them to the ILW hierarchy.

mod hamiltonians;
mod lax;
mod verify;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffpoly::{DiffPoly, DiffPolyError};
use crate::dispersionless::DispersionlessError;
use crate::scalars::ScalarError;
use crate::shiftops::{OpError, PowerCache, ShiftOperator};

pub use hamiltonians::{
    ilw_equation_rhs, ilw_h1, ilw_h2_display, ilw_hamiltonian, ilw_t1_flow, pd_polynomial, poisson_bracket,
    PdPolynomial,
};
pub use lax::{build_lax, cal_l, lax_flow, lax_flow_via_commutator, lax_hamiltonian, log_operator};
pub use verify::{run_checks, standard_checks, verify, verify_all, Check};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("construction failed at step {step}: {reason}")]
    ConstructionFailure { step: usize, reason: String },
    #[error("index {index} needs Λ-depth {needed}, configuration has {available}")]
    DepthInsufficient { index: u32, needed: u32, available: u32 },
    #[error("commutator has a nonzero coefficient at Λ^{power}{}: {witness}", if *.first_order { " (first-order part)" } else { "" })]
    ResidualTerms { power: i64, first_order: bool, witness: DiffPoly },
    #[error("invalid Lax data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    DiffPoly(#[from] DiffPolyError),
    #[error(transparent)]
    Dispersionless(#[from] DispersionlessError),
}

pub type Result<T> = std::result::Result<T, HierarchyError>;

/// Truncation parameters: ε-order `K`, Λ-depth `N` (coefficients `a_0 … a_N`)
/// and the highest flow index `d_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchyConfig {
    #[serde(rename = "K")]
    pub eps_order: u32,
    #[serde(rename = "N")]
    pub lambda_depth: u32,
    #[serde(rename = "dMax")]
    pub d_max: u32,
}

impl HierarchyConfig {
    pub fn new(eps_order: u32, lambda_depth: u32, d_max: u32) -> Result<Self> {
        let c = HierarchyConfig { eps_order, lambda_depth, d_max };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_depth < 1 {
            return Err(HierarchyError::InvalidConfig("N must be at least 1".into()));
        }
        if self.lambda_depth < self.d_max + 1 {
            return Err(HierarchyError::InvalidConfig(format!(
                "N = {} is too small for dMax = {}: residues of L^{} need N >= {}",
                self.lambda_depth,
                self.d_max,
                self.d_max + 2,
                self.d_max + 1
            )));
        }
        Ok(())
    }
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig { eps_order: 6, lambda_depth: 5, d_max: 3 }
    }
}

/// Everything derived from one construction of `L`. Immutable once built;
/// powers of `L` are memoized and safe to share across threads.
#[derive(Debug)]
pub struct LaxData {
    config: HierarchyConfig,
    a: Vec<DiffPoly>,
    f: Vec<DiffPoly>,
    l: ShiftOperator,
    log_l: ShiftOperator,
    cal_l: ShiftOperator,
    powers: PowerCache,
}

impl LaxData {
    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn order(&self) -> u32 {
        self.config.eps_order
    }

    /// `a_0 … a_N`.
    pub fn a(&self) -> &[DiffPoly] {
        &self.a
    }

    /// `f_1 … f_N`; `f(n)` below is 1-based.
    pub fn f_coeffs(&self) -> &[DiffPoly] {
        &self.f
    }

    pub fn a_n(&self, n: usize) -> &DiffPoly {
        &self.a[n]
    }

    pub fn f_n(&self, n: usize) -> &DiffPoly {
        assert!(n >= 1, "log L coefficients start at f_1");
        &self.f[n - 1]
    }

    /// `L = Λ + Σ a_n Λ^{-n}`, known down to `Λ^{-N}`.
    pub fn l(&self) -> &ShiftOperator {
        &self.l
    }

    pub fn log_l(&self) -> &ShiftOperator {
        &self.log_l
    }

    /// `𝓛 = Λ + u − τ iε∂x`.
    pub fn cal_l(&self) -> &ShiftOperator {
        &self.cal_l
    }

    /// `L^m`, memoized.
    pub fn power(&self, m: u32) -> Result<Arc<ShiftOperator>> {
        Ok(self.powers.get(m)?)
    }

    /// `res L^m`; `res L^0 = 1`.
    pub fn residue(&self, m: u32) -> Result<DiffPoly> {
        if m == 0 {
            return Ok(DiffPoly::one(self.order()));
        }
        let needed = m.saturating_sub(1);
        if needed > self.config.lambda_depth {
            return Err(HierarchyError::DepthInsufficient { index: m, needed, available: self.config.lambda_depth });
        }
        Ok(self.power(m)?.residue()?)
    }

    /// Rebuilds derived operators from stored coefficients after checking the
    /// structural invariants: `a_0 = u`, `a_n = τ f_n`, degree-0 homogeneity,
    /// τ-degree at most `n`, and matching truncation orders.
    pub fn from_coefficients(config: HierarchyConfig, a: Vec<DiffPoly>, f: Vec<DiffPoly>) -> Result<Self> {
        config.validate()?;
        let k = config.eps_order;
        let n = config.lambda_depth as usize;
        let bad = |msg: String| Err(HierarchyError::InvalidData(msg));
        if a.len() != n + 1 || f.len() != n {
            return bad(format!("expected {} a-coefficients and {} f-coefficients, got {} and {}", n + 1, n, a.len(), f.len()));
        }
        if let Some(p) = a.iter().chain(&f).find(|p| p.order() != k) {
            return bad(format!("coefficient at order {} in data of order {k}", p.order()));
        }
        if a[0] != DiffPoly::u(k) {
            return bad(format!("a_0 must be u, found {}", a[0]));
        }
        for j in 1..=n {
            let tf = f[j - 1].scale(&crate::scalars::Scalar::tau(k));
            if a[j] != tf {
                return bad(format!("a_{j} differs from t*f_{j}"));
            }
            if a[j].tau_degree().unwrap_or(0) > j as u32 {
                return bad(format!("a_{j} has τ-degree above {j}"));
            }
        }
        for (j, p) in a.iter().enumerate() {
            match p.homogeneity_degree() {
                Ok(None) | Ok(Some(0)) => {}
                Ok(Some(d)) => return bad(format!("a_{j} has homogeneity degree {d}")),
                Err(e) => return bad(format!("a_{j}: {e}")),
            }
        }
        lax::assemble(config, a, f)
    }
}

#[derive(Serialize, Deserialize)]
struct LaxDataJson {
    #[serde(default = "crate::report::schema_string")]
    schema: String,
    config: HierarchyConfig,
    a: Vec<DiffPoly>,
    f: Vec<DiffPoly>,
}

impl Serialize for LaxData {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LaxDataJson {
            schema: crate::report::SCHEMA.to_string(),
            config: self.config,
            a: self.a.clone(),
            f: self.f.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LaxData {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = LaxDataJson::deserialize(deserializer)?;
        if j.schema != crate::report::SCHEMA {
            return Err(serde::de::Error::custom(format!("unknown schema {}", j.schema)));
        }
        LaxData::from_coefficients(j.config, j.a, j.f).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for LaxData {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.a == other.a && self.f == other.f
    }
}
