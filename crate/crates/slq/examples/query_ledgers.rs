//! What every answer costs, and how the bill is kept honest.
//!
//! Each estimator returns a ledger: power queries (controlled powers of
//! the walk operator, the quantum-style unit), bit queries (reads of the
//! caller's input), peak qubits, and classical operations. When one
//! layer consumes another, the inner layer's input reads are re-billed
//! to the machinery account, so bit queries always count reads of YOUR
//! input, never internal bookkeeping. Flagged verification reads are the
//! exception: they survive every re-billing, so the confirmation cost
//! stays visible all the way up the stack.
//!
//! Run with: cargo run --example query_ledgers

use slq::boolmean::BooleanOracle;
use slq::sat::{cnf_oracle, parse_dimacs};
use slq::{Backend, Engine, PipelineConfig};

fn main() -> slq::Result<()> {
    // Satisfiability decisions read every one of the 2^n input slots a
    // bounded number of times; the power-query bill grows with n and
    // with the confidence demanded.
    println!("sat decide cost by size and confidence:");
    println!("{:>3} {:>6} {:>12} {:>12} {:>8}", "n", "delta", "power", "bit", "qubits");
    for n in [3u32, 4, 5] {
        for delta in [0.25, 0.05] {
            let mut engine = Engine::classical(1);
            let b = BooleanOracle::from_fn(1 << n, |j| j % 3 == 1);
            let d = engine.sat_decide(&b, delta)?;
            println!(
                "{n:>3} {delta:>6} {:>12} {:>12} {:>8}",
                d.ledger.power_queries, d.ledger.bit_queries, d.ledger.qubits_peak
            );
        }
    }

    // Layered calls: a search is n decisions plus one confirmation.
    // The confirmation is flagged, so it stays on the bill after the
    // layers merge.
    let formula = parse_dimacs("p cnf 4 2\n1 2 0\n-1 3 0\n", true)?;
    let b = cnf_oracle(&formula);
    let mut engine = Engine::classical(1);
    let s = engine.sat_search(&b, 0.1)?;
    println!(
        "\nsearch over 4 variables: witness {:?}, {} bit queries of {} slots",
        s.witness,
        s.ledger.bit_queries,
        b.domain()
    );

    // The sampling backend never reads the input table classically; the
    // only bit queries left on a search bill are the flagged
    // confirmations.
    let mut engine = Engine::new(PipelineConfig::default(), Backend::Spectral, 1);
    let b = cnf_oracle(&formula);
    let s = engine.sat_search(&b, 0.1)?;
    println!(
        "same search, sampling backend: {} bit queries (the confirmation reads)",
        s.ledger.bit_queries
    );

    // Ledgers merge by summing counts and taking the qubit peak, so a
    // pipeline's bill is the sum of its parts.
    let mut total = s.ledger;
    let d = engine.sat_decide(&b, 0.1)?;
    total.merge(&d.ledger);
    println!(
        "merged bill: {} power, {} bit, peak {} qubits",
        total.power_queries, total.bit_queries, total.qubits_peak
    );
    Ok(())
}
