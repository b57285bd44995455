//! Lookup of the equilibrium angle ψ(W) used by the large-velocity force law.

use rotalign_core::coefficients::CoefficientTable;

use crate::{IbmError, Result};

/// Piecewise linear ψ(W) through sorted nodes. Queries outside the node range
/// are errors; a single node only answers for that exact W.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    w: Vec<f64>,
    psi: Vec<f64>,
}

impl PsiTable {
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(IbmError::Param("empty ψ table".into()));
        }
        if pairs.iter().any(|(w, p)| !(w.is_finite() && p.is_finite())) {
            return Err(IbmError::Param("non-finite ψ table entry".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(IbmError::Param("duplicate W in ψ table".into()));
        }
        let (w, psi) = pairs.into_iter().unzip();
        Ok(PsiTable { w, psi })
    }

    pub fn from_table(table: &CoefficientTable) -> Result<Self> {
        Self::from_pairs(table.rows.iter().map(|r| (r.a.w, r.psi)).collect())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.w[0], self.w[self.w.len() - 1])
    }

    pub fn contains(&self, w: f64) -> bool {
        let (lo, hi) = self.range();
        w >= lo && w <= hi
    }

    pub fn eval(&self, w: f64) -> Result<f64> {
        if !self.contains(w) {
            let (lo, hi) = self.range();
            return Err(IbmError::Param(format!("W={w} outside ψ table range [{lo}, {hi}]")));
        }
        let i = self.w.partition_point(|&x| x <= w);
        if i == 0 || i == self.w.len() {
            return Ok(self.psi[i.saturating_sub(1)]);
        }
        let (w0, w1) = (self.w[i - 1], self.w[i]);
        let t = (w - w0) / (w1 - w0);
        Ok(self.psi[i - 1] + t * (self.psi[i] - self.psi[i - 1]))
    }
}
