//! The acceptance fraction of a Boolean function, via integration.
//!
//! Each input slot of a Boolean oracle gets a smooth bump on its own
//! cell of [1/4, 3/4]; accepted slots contribute their bump, rejected
//! slots contribute nothing. Integrating the assembled function then
//! recovers the mean. Below accuracy 1/(2N) the rounded mean pins the
//! exact number of accepted inputs, which is what the satisfiability
//! layers build on.
//!
//! Run with: cargo run --example boolean_mean

use slq::boolmean::BooleanOracle;
use slq::Engine;

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(5);

    // A truth table, index 0 first. Tables whose length is not a power
    // of two are padded with rejecting slots.
    let b = BooleanOracle::from_bits(&[false, true, true, false, true, false, false, false]);
    let est = engine.boolean_mean(&b, 0.02, 0.05)?;
    println!(
        "table 01101000: mean = {} count = {:?} of {}",
        est.value,
        est.count,
        b.domain()
    );

    // A predicate over 4-bit inputs: accept when the popcount is even.
    let parity = BooleanOracle::from_fn(16, |j| j.count_ones() % 2 == 0);
    let est = engine.boolean_mean(&parity, 1.0 / 48.0, 0.05)?;
    println!(
        "even parity on 16 slots: mean = {} count = {:?}",
        est.value, est.count
    );
    println!(
        "cost: {} power queries, {} bit queries",
        est.ledger.power_queries, est.ledger.bit_queries
    );

    // Restriction views share the underlying function and its counters;
    // the lower half of the parity table has the same mean.
    let lower = parity.view(0, 8);
    let est = engine.boolean_mean(&lower, 1.0 / 24.0, 0.05)?;
    println!(
        "lower half: count = {:?} of {} (total reads so far: {})",
        est.count,
        lower.domain(),
        parity.calls()
    );

    // At looser accuracy the count is no longer pinned and the estimate
    // is reported as a plain mean.
    let loose = engine.boolean_mean(&parity, 0.2, 0.05)?;
    println!("loose run: mean = {} count = {:?}", loose.value, loose.count);
    Ok(())
}
