//! Query accounting.
//!
//! Every estimate in the pipeline returns a [`QueryLedger`] recording what
//! the run cost under the query model:
//!
//! * `power_queries`: applications of a controlled power of the walk
//!   unitary, one count per application regardless of the exponent. The
//!   classical backend reports the counts of the plan it stands in for, so
//!   cost scaling can be studied at accuracies where sampling backends
//!   are not feasible.
//! * `bit_queries`: evaluations of the run's own input oracle (the Boolean
//!   function, the vector entry, the distance matrix, the integrand),
//!   including flagged verification reads.
//! * `qubits_peak`: widest register the planned circuit would hold,
//!   ancilla bits plus log2(k+1).
//! * `classical_ops`: coarse count of ordinary arithmetic steps (grid
//!   sums, eigensolver sweeps, sampler iterations).
//!
//! # Billing discipline
//!
//! Reductions nest: a SAT call builds a mean oracle, which builds an
//! integrand, which builds a potential. Each layer re-bills the layer
//! below via [`QueryLedger::rebill_input_reads`]: the inner layer's plain
//! input reads are folded into `classical_ops`, and `bit_queries` is
//! recharged against the current layer's own input oracle. Under sampling
//! backends the input is only ever touched inside the simulated device,
//! so plain reads land in `classical_ops` there too and `bit_queries`
//! stays at zero. Flagged verification reads (witness confirmations,
//! threshold re-checks) survive every re-billing: they are genuine
//! queries in both cost models and are additionally mirrored in
//! `verify_bit_queries` so tests can exclude them.

use serde::Serialize;

use crate::config::Backend;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    pub power_queries: u64,
    pub bit_queries: u64,
    pub qubits_peak: u32,
    pub classical_ops: u64,
    /// Subset of `bit_queries` spent on flagged verification reads.
    /// Not part of the serialized report schema.
    #[serde(skip)]
    pub verify_bit_queries: u64,
}

impl QueryLedger {
    /// Componentwise sum, except `qubits_peak`, which is a maximum: two
    /// runs merged sequentially reuse the same register space.
    pub fn merge(&mut self, other: &QueryLedger) {
        self.power_queries += other.power_queries;
        self.bit_queries += other.bit_queries;
        self.qubits_peak = self.qubits_peak.max(other.qubits_peak);
        self.classical_ops += other.classical_ops;
        self.verify_bit_queries += other.verify_bit_queries;
    }

    pub fn merged(mut self, other: &QueryLedger) -> QueryLedger {
        self.merge(other);
        self
    }

    /// Recharge `bit_queries` against the current layer's input oracle.
    ///
    /// `reads` is how many plain evaluations of this layer's input the run
    /// consumed; `flagged` how many flagged verification reads. Inner
    /// plain reads move to `classical_ops`; inner flagged reads are kept
    /// (they were already real queries at the layer that issued them).
    pub fn rebill_input_reads(&mut self, backend: Backend, reads: u64, flagged: u64) {
        let inner_plain = self.bit_queries.saturating_sub(self.verify_bit_queries);
        self.classical_ops += inner_plain;
        self.bit_queries = self.verify_bit_queries;
        match backend {
            Backend::Classical => self.bit_queries += reads,
            Backend::Spectral | Backend::Dense => self.classical_ops += reads,
        }
        self.bit_queries += flagged;
        self.verify_bit_queries += flagged;
    }
}
