//! Minimum value and minimizer of a bounded vector.
//!
//! Entries are only reachable through counted reads, so the cost of
//! every answer is visible. The value search bisects thresholds, asking
//! "is any entry at most y" through the satisfiability layer; the index
//! search localizes the minimum, counts how many entries sit under the
//! threshold, and then finds the smallest such index.
//!
//! Run with: cargo run --example minimization

use slq::minimize::BoundedVector;
use slq::Engine;

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(9);

    // An explicit vector with entries bounded by 8 in magnitude.
    let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0, 7.0], 8.0)?;
    let value = engine.min_value(&x, 0.25, 0.05)?;
    println!(
        "min value ~ {} in [{}, {}] (true minimum -1)",
        value.value, value.interval.0, value.interval.1
    );

    let index = engine.min_index(&x, 0.25, 0.05)?;
    println!(
        "minimizer: index {} holds {} (threshold {}, verified = {})",
        index.index, index.value, index.threshold, index.verified
    );
    println!(
        "cost: {} power queries, {} entry reads",
        index.ledger.power_queries, index.ledger.bit_queries
    );

    // Integer entries and accuracy below 1/2 make rounding exact.
    let y = BoundedVector::from_entries(vec![4.0, 2.0, 2.0, 5.0, 3.0], 8.0)?;
    let v = engine.min_value(&y, 1.0 / 3.0, 0.05)?;
    println!(
        "\ninteger vector: rounded minimum = {} (ties at indices 1 and 2)",
        v.value.round()
    );
    let i = engine.min_index(&y, 1.0 / 3.0, 0.05)?;
    println!("tie resolves to the smallest index: {}", i.index);

    // Virtual vectors evaluate entries on demand and memoize them; the
    // closure runs once per distinct index no matter how the search
    // revisits it.
    let z = BoundedVector::from_fn(64, 70.0, |j| {
        let t = j as f64;
        (t - 41.3).abs() + 5.0
    })?;
    let i = engine.min_index(&z, 0.4, 0.05)?;
    println!(
        "\nvirtual vector of 64 entries: minimizer {} after {} entry reads",
        i.index,
        z.reads()
    );
    Ok(())
}
