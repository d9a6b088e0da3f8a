//! CNF satisfiability: decision and smallest-witness search.
//!
//! The decision reduces to one mean estimate at accuracy 1/(3N), tight
//! enough to recover the exact model count. The search bisects the
//! assignment space with one decision per variable, then confirms its
//! candidate with a single flagged read, so a wrong answer can only
//! come from an unlucky decision, never from a silent miss.
//!
//! Run with: cargo run --example sat_solving

use slq::oracle::brute_sat;
use slq::sat::{cnf_oracle, parse_dimacs};
use slq::Engine;

const FORMULA: &str = "\
c (x1 or not x2) and (x2 or x3) and (not x1 or not x3)
p cnf 3 3
1 -2 0
2 3 0
-1 -3 0
";

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(2);

    let formula = parse_dimacs(FORMULA, true)?;
    let b = cnf_oracle(&formula);

    let decision = engine.sat_decide(&b, 0.05)?;
    println!(
        "satisfiable: {} ({} of {} assignments)",
        decision.yes,
        decision.count_estimate,
        b.domain()
    );

    let search = engine.sat_search(&b, 0.05)?;
    match search.witness {
        Some(w) => {
            let bits: String = (0..formula.num_vars)
                .map(|i| if (w >> i) & 1 == 1 { '1' } else { '0' })
                .collect();
            println!("smallest witness: index {w} = assignment {bits} (x1 first)");
        }
        None => println!("no witness confirmed"),
    }
    println!(
        "search cost: {} power queries, {} bit queries",
        search.ledger.power_queries, search.ledger.bit_queries
    );

    // The independent ground truth agrees, including on which witness
    // is smallest.
    let (yes, witness) = brute_sat(&|j| formula.satisfied_by(j), formula.num_vars)?;
    assert_eq!(yes, decision.yes);
    assert_eq!(witness, search.witness);
    println!("brute-force enumeration agrees: {witness:?}");

    // An unsatisfiable formula: the count comes back zero and the
    // search's confirmation read fails, leaving the witness empty.
    let unsat = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n", true)?;
    let b = cnf_oracle(&unsat);
    let decision = engine.sat_decide(&b, 0.05)?;
    let search = engine.sat_search(&b, 0.05)?;
    println!(
        "\ncontradiction: satisfiable = {}, witness = {:?}",
        decision.yes, search.witness
    );
    Ok(())
}
