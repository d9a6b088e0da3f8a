//! Inside the eigenvalue estimator: plans, registers, and samples.
//!
//! A plan picks the grid size k (a power of two minus one), the register
//! width b, and an odd repetition count r from the target accuracy eta
//! and failure probability delta. Each repetition reads the register
//! once per bit, so the power-query bill is exactly r * b. The two
//! sampling backends draw from the same distribution: `spectral` works
//! in the eigenbasis analytically, `dense` simulates the full register
//! statevector, and for small plans the two can be compared outcome by
//! outcome.
//!
//! Run with: cargo run --example phase_estimation

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use slq::domain::{build_matrix, Potential};
use slq::ledger::QueryLedger;
use slq::qpe::{make_plan, outcome_distribution, qpe_sample};
use slq::{Backend, Engine, PipelineConfig};

fn main() -> slq::Result<()> {
    let config = PipelineConfig::default();

    println!("plans chosen for a few accuracy targets:");
    println!("{:>6} {:>6} {:>5} {:>4} {:>3} {:>8} {:>7}", "eta", "delta", "k", "b", "r", "power", "qubits");
    for (eta, delta) in [(0.7, 0.3), (0.2, 0.25), (0.1, 0.25), (0.05, 0.05)] {
        let plan = make_plan(eta, delta, &config, Backend::Spectral, 0)?;
        println!(
            "{eta:>6} {delta:>6} {:>5} {:>4} {:>3} {:>8} {:>7}",
            plan.k, plan.b, plan.r, plan.power_queries, plan.qubits_peak
        );
    }

    // A coarse plan keeps the register small enough to enumerate the
    // full outcome distribution, so the two backends can be compared
    // exactly.
    let plan_s = make_plan(0.7, 0.3, &config, Backend::Spectral, 0)?;
    let plan_d = make_plan(0.7, 0.3, &config, Backend::Dense, 0)?;
    let t = build_matrix(&Potential::constant(0.0), plan_s.k as usize)?;
    let p_s = outcome_distribution(&t, &plan_s)?;
    let p_d = outcome_distribution(&t, &plan_d)?;
    let tv = 0.5
        * p_s
            .iter()
            .zip(&p_d)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    println!("\nspectral vs dense on 2^{} outcomes: TV distance = {tv:.3e}", plan_s.b);

    // Individual register samples: each lands near the true phase with
    // high probability and converts back to an eigenvalue readout.
    let lambda = slq::eigen::smallest_eigenvalue(&t, 1e-12)?;
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let mut ledger = QueryLedger::default();
    println!("true smallest eigenvalue of the k = {} grid: {lambda}", plan_s.k);
    for _ in 0..5 {
        let s = qpe_sample(&t, &plan_s, &mut rng, &mut ledger)?;
        println!(
            "  outcome {:>3} / 2^{}  ->  readout {:.4}",
            s.outcome, plan_s.b, s.lambda_readout
        );
    }

    // The full estimator wraps this in a median over r repetitions.
    let mut engine = Engine::spectral(1);
    let est = engine.estimate_lambda(&Potential::constant(0.0), 0.2, 0.25)?;
    println!(
        "\nmedian estimate at eta 0.2: {} ({} power queries = r * b)",
        est.value, est.ledger.power_queries
    );
    Ok(())
}
