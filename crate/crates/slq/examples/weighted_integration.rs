//! Integrals weighted by sin^2(pi x), computed through an eigenvalue.
//!
//! The integral of f(x) sin^2(pi x) over [0,1] is read off the smallest
//! eigenvalue of the potential 1/2 + c f for a small encoding scale c:
//! the eigenvalue shift away from pi^2 + 1/2 is proportional to the
//! integral, up to a second-order residual in c. The estimator chooses c
//! from the accuracy target and the smoothness bound M, then bills the
//! whole thing to the eigenvalue machinery.
//!
//! Run with: cargo run --example weighted_integration

use slq::domain::SmoothIntegrand;
use slq::oracle::quadrature;
use slq::Engine;

fn main() -> slq::Result<()> {
    let mut engine = Engine::classical(3);

    // f is given with one bound M dominating |f|, |f'|, |f''|.
    let f = SmoothIntegrand::from_fn(|x| (3.0 * x).cos(), 9.0);
    let eps = 1e-4;
    let est = engine.integrate_weighted(&f, eps, 0.05)?;

    // Independent check by adaptive quadrature on the same integrand.
    let reference = quadrature(
        &|x: f64| (3.0 * x).cos() * (std::f64::consts::PI * x).sin().powi(2),
        0.0,
        1.0,
        1e-12,
        &[],
    );
    println!("estimate  = {}", est.value);
    println!("reference = {}", reference.value);
    println!("gap       = {:.2e} (allowed {eps})", (est.value - reference.value).abs());
    println!(
        "cost: {} power queries, {} integrand evaluations",
        est.ledger.power_queries, est.ledger.bit_queries
    );

    // Constant integrands short-circuit: the weight integrates to 1/2.
    let c = SmoothIntegrand::constant(0.8);
    let exact = engine.integrate_weighted(&c, 1e-9, 0.05)?;
    println!("\nconstant 0.8: {} (exactly 0.4, trivial = {})", exact.value, exact.trivial);

    // When the requested accuracy already exceeds any possible value of
    // the integral, the answer is free and no queries are billed.
    let tiny = SmoothIntegrand::from_fn(|x| 1e-6 * x, 1e-6);
    let free = engine.integrate_weighted(&tiny, 0.5, 0.05)?;
    println!(
        "tiny integrand at eps 0.5: {} with {} queries (trivial = {})",
        free.value, free.ledger.power_queries, free.trivial
    );
    Ok(())
}
