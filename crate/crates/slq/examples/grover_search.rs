//! Recovering a promised unique witness from one weighted mean.
//!
//! When a function accepts exactly one input, the index-weighted mean
//! j/N over accepted slots IS the witness, scaled. One integration at
//! accuracy fine enough to round correctly recovers it, and a flagged
//! confirmation read makes the answer trustworthy: a violated promise
//! or an unlucky run reports an empty index instead of a wrong one.
//!
//! Run with: cargo run --example grover_search

use slq::boolmean::BooleanOracle;
use slq::Engine;

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(4);

    // Single witness at index 5 of 8.
    let b = BooleanOracle::from_fn(8, |j| j == 5);
    let found = engine.grover_find(&b, 0.1)?;
    println!(
        "unique witness: index = {:?} (candidate {}, confirmed = {})",
        found.index,
        found.candidate,
        found.confirmed()
    );
    println!(
        "cost: {} power queries at {} peak qubits",
        found.ledger.power_queries, found.ledger.qubits_peak
    );

    // Promise violated: two witnesses blend into a candidate that is
    // neither, the confirmation read rejects it, and the outcome says
    // so rather than erroring, because the promise cannot be checked
    // from one mean.
    let two = BooleanOracle::from_fn(8, |j| j == 1 || j == 2);
    let outcome = engine.grover_find(&two, 0.1)?;
    println!(
        "two witnesses: index = {:?}, candidate = {}",
        outcome.index, outcome.candidate
    );

    // No witness at all: the integral is zero, candidate 0, and the
    // confirmation read fails.
    let none = BooleanOracle::from_fn(8, |_| false);
    let outcome = engine.grover_find(&none, 0.1)?;
    println!(
        "no witness: index = {:?}, candidate = {}",
        outcome.index, outcome.candidate
    );
    Ok(())
}
