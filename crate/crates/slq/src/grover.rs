//! Single-witness search through one integration call.
//!
//! When a Boolean function is promised to have exactly one satisfying
//! index, weighting each cell of the mean integrand by j/N turns the
//! weighted integral into (a known multiple of) the witness index itself.
//! Estimating that integral to a third of a slot and rounding recovers
//! the index with the integrator's confidence, using a single estimate
//! instead of a bit-by-bit bisection.

use crate::boolmean::{ensure_domain_within_capacity, family_for, BooleanOracle};
use crate::domain::SmoothIntegrand;
use crate::error::Result;
use crate::integrate::{self, BumpFamily};
use crate::ledger::QueryLedger;
use crate::Engine;

/// Builds the integrand whose weighted integral is int_h * j* / (16 N^4)
/// for a single witness j*: cell j carries j h_j(x) B(j) / (2 N sin^2).
/// The index weight is at most 1, so the smoothness envelope is the same
/// as the plain mean integrand's.
pub fn assemble_weighted_integrand(b: &BooleanOracle, fam: &BumpFamily) -> SmoothIntegrand {
    let n = fam.cells as f64;
    crate::boolmean::assemble_cell_weighted(fam, b, move |j| j as f64 / n)
}

/// Result of the single-witness recovery. `candidate` is what the scaled
/// estimate rounded to; `index` repeats it only when it landed in range
/// and the confirmation read came back true. An empty `index` means the
/// single-witness promise was violated or the run was unlucky.
#[derive(Debug, Clone)]
pub struct GroverOutcome {
    pub index: Option<u64>,
    pub candidate: i64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

impl GroverOutcome {
    pub fn confirmed(&self) -> bool {
        self.index.is_some()
    }
}

/// Recovers the unique satisfying index of `b`, correct with probability
/// at least 1 - delta when the promise holds.
///
/// One integration call at accuracy int_h/(48 N^4) keeps the scaled error
/// at most 1/3, so rounding lands on the witness exactly. The rounded
/// value is confirmed with a flagged read; out-of-range values and failed
/// confirmations are reported through an empty `index`, not an error,
/// since the promise cannot be checked locally.
pub fn grover_find(engine: &mut Engine, b: &BooleanOracle, delta: f64) -> Result<GroverOutcome> {
    let domain = b.domain();
    ensure_domain_within_capacity(engine, domain)?;
    let fam = family_for(engine, domain)?;
    let g = assemble_weighted_integrand(b, &fam);
    let n = domain as f64;
    let eps = fam.int_h / (48.0 * n.powi(4));
    let reads_before = b.calls();
    let flagged_before = b.flagged_calls();
    let est = integrate::integrate_weighted(engine, &g, eps, delta)?;
    let scaled = est.value * 16.0 * n.powi(4) / fam.int_h;
    let candidate = (scaled + 0.5).floor() as i64;
    let index = if candidate >= 0 && (candidate as u64) < domain {
        b.query_flagged(candidate as u64)
            .then_some(candidate as u64)
    } else {
        None
    };
    let mut ledger = est.ledger;
    ledger.rebill_input_reads(
        engine.backend,
        b.calls() - reads_before,
        b.flagged_calls() - flagged_before,
    );
    Ok(GroverOutcome {
        index,
        candidate,
        delta,
        ledger,
    })
}

impl Engine {
    /// See [`grover_find`].
    pub fn grover_find(&mut self, b: &BooleanOracle, delta: f64) -> Result<GroverOutcome> {
        grover_find(self, b, delta)
    }
}
