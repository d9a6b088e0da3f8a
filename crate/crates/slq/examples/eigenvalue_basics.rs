//! Smallest eigenvalues of the discretized operator -u'' + q u.
//!
//! A potential is any C^2 function q: [0,1] -> [0,1] whose first two
//! derivatives stay bounded by 1. The estimator returns the smallest
//! eigenvalue to a requested accuracy eta; for a constant potential the
//! answer is known exactly, which makes a good first check.
//!
//! Run with: cargo run --example eigenvalue_basics

use slq::domain::Potential;
use slq::Engine;

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(7);

    // The continuum answer for q = c is pi^2 + c.
    for c in [0.0, 0.25, 1.0] {
        let q = Potential::constant(c);
        let est = engine.estimate_lambda(&q, 0.05, 0.05)?;
        let exact = std::f64::consts::PI.powi(2) + c;
        println!(
            "q = {c:<4}  lambda = {:<18}  exact = {exact:<18}  |err| = {:.2e}",
            est.value,
            (est.value - exact).abs()
        );
    }

    // A gently modulated potential. The three numbers are sup bounds on
    // |q|, |q'|, |q''|; they must all stay at most 1 for the potential
    // to be admissible, so the amplitude here is kept small.
    let amp = 0.02;
    let w = 2.0 * std::f64::consts::PI;
    let q = Potential::from_fn(
        move |x| 0.5 + amp * (w * x).sin(),
        [0.5 + amp, amp * w, amp * w * w],
    );
    q.check_admissible(1024)?;
    let est = engine.estimate_lambda(&q, 0.05, 0.05)?;
    println!(
        "sine potential: lambda = {} (pi^2 + 1/2 = {})",
        est.value,
        std::f64::consts::PI.powi(2) + 0.5
    );
    println!(
        "cost: {} power queries, {} potential reads",
        est.ledger.power_queries, est.ledger.bit_queries
    );

    // Admissibility is checked, not assumed: a potential leaving [0,1]
    // is rejected before anything runs.
    let wild = Potential::constant(1.5);
    match wild.check_admissible(64) {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(()) => unreachable!("a potential above 1 must not pass"),
    }
    Ok(())
}
