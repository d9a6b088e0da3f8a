//! A chain of reductions from combinatorial search problems down to the
//! smallest eigenvalue of a Sturm-Liouville operator on [0,1], solved
//! either by a classical tridiagonal eigensolver or by a simulated
//! quantum phase-estimation run billed in power queries.
//!
//! The stack, bottom to top:
//!
//! * [`domain`]: shared types (potentials, integrands, the discretized
//!   matrix, estimates with confidence).
//! * [`eigen`]: Sturm-sequence bisection, inverse-iteration eigenpairs,
//!   and a Richardson-extrapolated reference for the continuous problem.
//! * [`qpe`]: phase-estimation plans, outcome sampling (dense statevector
//!   or analytic spectral sampler), and the eigenvalue estimator.
//! * [`integrate`]: integrals weighted by sin^2(pi x), computed by
//!   encoding the integrand into a potential and reading the eigenvalue
//!   shift back out.
//! * [`boolmean`]: the mean of a Boolean oracle via a smooth bump-encoded
//!   integrand, exact after rounding when the accuracy beats 1/(2N).
//! * [`sat`]: CNF satisfiability (decision and smallest-witness search).
//! * [`grover`]: single-witness recovery from one weighted mean.
//! * [`minimize`]: minimum value and minimizer index of a bounded vector
//!   through threshold oracles.
//! * [`tsp`]: traveling salesman on explicit distance matrices through
//!   permutation unranking.
//! * [`oracle`]: independent brute-force and quadrature ground truth used
//!   by tests and the `verify` subcommand.
//!
//! Every estimator reports a [`ledger::QueryLedger`] alongside its value,
//! so the cost claims of the underlying algorithms can be checked
//! empirically; see the `query_ledgers` example.
//!
//! Runnable walkthroughs live in `examples/`: start with
//! `eigenvalue_basics`, then `phase_estimation`, then the reductions.

// Parameter checks are written as negated comparisons (`!(eps > 0.0)`)
// on purpose: they reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boolmean;
pub mod cli;
pub mod config;
pub mod domain;
pub mod eigen;
pub mod error;
pub mod grover;
pub mod integrate;
pub mod ledger;
pub mod minimize;
pub mod oracle;
pub mod qpe;
pub mod report;
pub mod sat;
pub mod tsp;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub use crate::config::{Backend, PipelineConfig};
pub use crate::error::{Error, Result};

/// Execution context threaded through every estimator: configuration,
/// backend choice, worker count, and the master random stream from which
/// per-run seeds are drawn.
pub struct Engine {
    pub config: PipelineConfig,
    pub backend: Backend,
    /// Worker threads for independent phase-estimation repetitions.
    /// Results are ordered by repetition index, so the count never
    /// changes the output.
    pub threads: usize,
    rng: ChaCha12Rng,
}

impl Engine {
    pub fn new(config: PipelineConfig, backend: Backend, seed: u64) -> Self {
        Engine {
            config,
            backend,
            threads: 1,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Default configuration with the deterministic classical backend.
    pub fn classical(seed: u64) -> Self {
        Engine::new(PipelineConfig::default(), Backend::Classical, seed)
    }

    /// Default configuration with the analytic sampling backend.
    pub fn spectral(seed: u64) -> Self {
        Engine::new(PipelineConfig::default(), Backend::Spectral, seed)
    }

    /// Default configuration with the statevector backend.
    pub fn dense(seed: u64) -> Self {
        Engine::new(PipelineConfig::default(), Backend::Dense, seed)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    /// Draw a fresh sub-seed from the master stream. Each estimate call
    /// consumes exactly one, so a fixed engine seed fixes every run.
    pub fn subseed(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
