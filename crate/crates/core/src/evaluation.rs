//! Regret bookkeeping.
//!
//! Regret against the best fixed unit vector in hindsight is
//! `λ₁(Σ x xᵀ) − Σ (ŵᵀx)²`, so a ledger only needs the running outer-product
//! sum and the cumulative payoff.

use crate::error::{Error, Result};
use crate::symmat::{self, SymMatrix, Vector, TOL};

/// Per-block side information supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockDiagnostics {
    /// `(ŵᵀx)²` against the model spike, when known.
    pub alignment: Option<f64>,
    /// Rank-one certificate, for learners that produce one.
    pub rank_one_ok: Option<bool>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    /// Block index, starting at 0.
    pub t: usize,
    /// Observations seen after this block.
    pub n_end: usize,
    pub block_payoff: f64,
    /// Cumulative payoff after this block.
    pub cumulative_payoff: f64,
    pub alignment: Option<f64>,
    pub rank_one_ok: Option<bool>,
    pub eta: f64,
    /// `λ₁` of the outer-product sum after this block, when tracked.
    pub prefix_lambda1: Option<f64>,
}

/// `(wᵀx)²`.
pub fn alignment(w: &Vector, spike: &Vector) -> f64 {
    w.dot(spike).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    cumulative_payoff: f64,
    sum_outer: SymMatrix,
    sum_sq_norms: f64,
    per_block: Vec<DiagnosticsRecord>,
    n_seen: usize,
    track_prefix: bool,
}

impl RegretLedger {
    /// A ledger that eigensolves its running sum at every block boundary so
    /// that [`average_regret_curve`](Self::average_regret_curve) is available.
    pub fn new(d: usize) -> Self {
        RegretLedger {
            cumulative_payoff: 0.0,
            sum_outer: SymMatrix::zeros(d),
            sum_sq_norms: 0.0,
            per_block: Vec::new(),
            n_seen: 0,
            track_prefix: true,
        }
    }

    /// A ledger without per-block eigensolves. Callers that share one prefix
    /// spectrum across several learners use this and combine
    /// [`payoff_at`](Self::payoff_at) with their own `λ₁` values.
    pub fn without_prefix_tracking(d: usize) -> Self {
        RegretLedger {
            track_prefix: false,
            ..Self::new(d)
        }
    }

    pub fn dim(&self) -> usize {
        self.sum_outer.dim()
    }

    pub fn cumulative_payoff(&self) -> f64 {
        self.cumulative_payoff
    }

    pub fn sum_outer(&self) -> &SymMatrix {
        &self.sum_outer
    }

    /// `Σ ‖x‖²`, which equals `Tr(sum_outer)` up to rounding.
    pub fn sum_sq_norms(&self) -> f64 {
        self.sum_sq_norms
    }

    pub fn per_block(&self) -> &[DiagnosticsRecord] {
        &self.per_block
    }

    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    /// Accounts one block played with prediction `w_hat`.
    pub fn record_block(&mut self, w_hat: &Vector, block: &[Vector], diagnostics: BlockDiagnostics) -> Result<()> {
        let d = self.dim();
        if w_hat.len() != d {
            return Err(Error::invalid(format!(
                "prediction has dimension {}, ledger dimension is {d}",
                w_hat.len()
            )));
        }
        if (w_hat.norm() - 1.0).abs() > TOL.unit_norm {
            return Err(Error::invalid(format!("prediction norm {} is not 1", w_hat.norm())));
        }
        if let Some((i, x)) = block.iter().enumerate().find(|(_, x)| x.len() != d) {
            return Err(Error::invalid(format!(
                "observation {i} has dimension {}, ledger dimension is {d}",
                x.len()
            )));
        }
        let mut block_payoff = 0.0;
        for x in block {
            block_payoff += x.dot(w_hat).powi(2);
            self.sum_sq_norms += x.norm_squared();
            self.sum_outer.add_outer(x, 1.0);
        }
        self.cumulative_payoff += block_payoff;
        self.n_seen += block.len();
        let prefix_lambda1 = if self.track_prefix {
            Some(symmat::eigenvalues_sym(&self.sum_outer)?[0])
        } else {
            None
        };
        self.per_block.push(DiagnosticsRecord {
            t: self.per_block.len(),
            n_end: self.n_seen,
            block_payoff,
            cumulative_payoff: self.cumulative_payoff,
            alignment: diagnostics.alignment,
            rank_one_ok: diagnostics.rank_one_ok,
            eta: diagnostics.eta,
            prefix_lambda1,
        });
        Ok(())
    }

    fn require_data(&self) -> Result<()> {
        if self.n_seen == 0 {
            return Err(Error::invalid("ledger has seen no observations"));
        }
        Ok(())
    }

    /// `λ₁(Σ x xᵀ) − Σ (ŵᵀx)²`. Can be negative on short prefixes.
    pub fn regret(&self) -> Result<f64> {
        self.require_data()?;
        Ok(symmat::eigenvalues_sym(&self.sum_outer)?[0] - self.cumulative_payoff)
    }

    /// Top eigenpair of `Σ x xᵀ`.
    pub fn best_in_hindsight(&self) -> Result<(f64, Vector)> {
        self.require_data()?;
        symmat::top_eigenpair(&self.sum_outer)
    }

    /// `(n, regret_n / n)` at every block boundary.
    pub fn average_regret_curve(&self) -> Result<Vec<(usize, f64)>> {
        self.require_data()?;
        if !self.track_prefix {
            return Err(Error::invalid(
                "average regret curve needs a ledger with prefix tracking",
            ));
        }
        Ok(self
            .per_block
            .iter()
            .filter(|r| r.n_end > 0)
            .map(|r| {
                let l1 = r.prefix_lambda1.expect("tracked ledger stores prefix λ₁");
                (r.n_end, (l1 - r.cumulative_payoff) / r.n_end as f64)
            })
            .collect())
    }

    /// Cumulative payoff after the block that ends exactly at observation `n`.
    pub fn payoff_at(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        let i = self.per_block.binary_search_by_key(&n, |r| r.n_end).ok()?;
        Some(self.per_block[i].cumulative_payoff)
    }

    /// Fraction of certified blocks whose certificate failed.
    pub fn rank_one_error_rate(&self) -> Result<f64> {
        let flags: Vec<bool> = self.per_block.iter().filter_map(|r| r.rank_one_ok).collect();
        if flags.is_empty() {
            return Err(Error::invalid("no block carries a rank-one certificate"));
        }
        Ok(flags.iter().filter(|ok| !**ok).count() as f64 / flags.len() as f64)
    }
}
