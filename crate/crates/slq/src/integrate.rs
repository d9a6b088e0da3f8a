//! Weighted integration of smooth functions against the ground-mode
//! density sin^2(pi x).
//!
//! The route runs through the eigenvalue solver: the integrand is folded
//! into a potential q = 1/2 + c*f at a scale c small enough that the
//! smallest eigenvalue responds linearly, and the integral is read off the
//! eigenvalue's offset from the flat-potential reference. The scale also
//! controls the second-order residual, so shrinking c buys accuracy at the
//! price of a tighter eigenvalue tolerance.
//!
//! The module additionally owns the bump construction that later layers
//! use to encode discrete data as smooth integrands: scaled copies of one
//! C^2 profile tiled across [1/4, 3/4], one cell per data slot.

use crate::config::PipelineConfig;
use crate::domain::{potential_from_integrand, EstimateWithConfidence, SmoothIntegrand};
use crate::error::{Error, Result};
use crate::ledger::QueryLedger;
use crate::oracle;
use crate::qpe;
use crate::Engine;

/// Exponent of the default bump profile (x(1-x))^alpha.
pub const DEFAULT_BUMP_ALPHA: f64 = 3.0;

/// Sup norm of the default profile: h(1/2) = (1/4)^3.
const ALPHA3_SUP_H: f64 = 1.0 / 64.0;
/// Sup norm of the default profile's derivative, 3*sqrt(5)/125, attained
/// at the roots of 5x^2 - 5x + 1.
const ALPHA3_SUP_DH: f64 = 0.053_665_631_459_994_95;
/// Sup norm of the default profile's second derivative, attained at 1/2.
const ALPHA3_SUP_DDH: f64 = 3.0 / 8.0;
/// Integral of the default profile over [0, 1] (a beta integral).
const ALPHA3_INT_H: f64 = 1.0 / 140.0;

/// A family of N congruent bump cells tiling [1/4, 3/4].
///
/// Cell j occupies [x_j, x_j + 1/(2N)] with x_j = 1/4 + j/(2N) and carries
/// the profile compressed horizontally by 2N and scaled down by 4N^2, so
/// the assembled sum of any subset of cells stays inside one smoothness
/// class no matter which cells are switched on.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    /// Number of cells N; always a power of two.
    pub cells: u64,
    /// Profile exponent.
    pub alpha: f64,
    /// Integral of the unit profile over [0, 1].
    pub int_h: f64,
    /// Sup norms of the unit profile and its first two derivatives.
    pub sup_h: [f64; 3],
    /// Smoothness-class bound for any 0/1 combination of scaled cells:
    /// max of sup_h[0]/(4N^2), sup_h[1]/(2N), sup_h[2].
    pub m_const: f64,
}

/// Builds the family with the default cubic profile. The cell count must
/// be a power of two so that later bisection layers can split it evenly.
pub fn make_bump_family(cells: u64) -> Result<BumpFamily> {
    check_cells(cells)?;
    Ok(finish_family(
        cells,
        DEFAULT_BUMP_ALPHA,
        ALPHA3_INT_H,
        [ALPHA3_SUP_H, ALPHA3_SUP_DH, ALPHA3_SUP_DDH],
    ))
}

/// Builds the family with a custom profile exponent. Exponents at or
/// below 2 are rejected: the second derivative of the profile must vanish
/// at the cell edges or the assembled function loses its smoothness class
/// across cell boundaries.
pub fn make_bump_family_with(cells: u64, alpha: f64) -> Result<BumpFamily> {
    check_cells(cells)?;
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "profile exponent must exceed 2 for a C2 tiling, got {alpha}"
        )));
    }
    if (alpha - DEFAULT_BUMP_ALPHA).abs() < 1e-12 {
        return make_bump_family(cells);
    }
    let h = move |t: f64| (t * (1.0 - t)).powf(alpha);
    let dh = move |t: f64| alpha * (t * (1.0 - t)).powf(alpha - 1.0) * (1.0 - 2.0 * t);
    let ddh = move |t: f64| {
        let u = t * (1.0 - t);
        let s = 1.0 - 2.0 * t;
        alpha * (alpha - 1.0) * u.powf(alpha - 2.0) * s * s - 2.0 * alpha * u.powf(alpha - 1.0)
    };
    let grid = 1 << 14;
    let mut sup = [0.0f64; 3];
    for i in 1..grid {
        let t = i as f64 / grid as f64;
        sup[0] = sup[0].max(h(t).abs());
        sup[1] = sup[1].max(dh(t).abs());
        sup[2] = sup[2].max(ddh(t).abs());
    }
    let quad = oracle::quadrature(&h, 0.0, 1.0, 1e-12, &[0.5]);
    if !quad.converged {
        return Err(Error::Numerical("profile integral did not converge".into()));
    }
    Ok(finish_family(cells, alpha, quad.value, sup))
}

fn check_cells(cells: u64) -> Result<()> {
    if cells == 0 || !cells.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "cell count must be a positive power of two, got {cells}"
        )));
    }
    Ok(())
}

fn finish_family(cells: u64, alpha: f64, int_h: f64, sup_h: [f64; 3]) -> BumpFamily {
    let n = cells as f64;
    let m_const = (sup_h[0] / (4.0 * n * n))
        .max(sup_h[1] / (2.0 * n))
        .max(sup_h[2]);
    BumpFamily {
        cells,
        alpha,
        int_h,
        sup_h,
        m_const,
    }
}

impl BumpFamily {
    /// Left edge of cell j.
    pub fn cell_left(&self, j: u64) -> f64 {
        assert!(j < self.cells, "cell index {j} out of range");
        0.25 + j as f64 / (2.0 * self.cells as f64)
    }

    /// Width of every cell, 1/(2N).
    pub fn cell_width(&self) -> f64 {
        0.5 / self.cells as f64
    }

    /// The unit profile h(t) = (t(1-t))^alpha on [0, 1], zero outside.
    pub fn profile(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        let u = t * (1.0 - t);
        if self.alpha == DEFAULT_BUMP_ALPHA {
            u * u * u
        } else {
            u.powf(self.alpha)
        }
    }

    /// The scaled bump sitting on cell j: (1/(4N^2)) h(2N (x - x_j)),
    /// zero outside the cell.
    pub fn eval_cell(&self, j: u64, x: f64) -> f64 {
        let n = self.cells as f64;
        let t = 2.0 * n * (x - self.cell_left(j));
        self.profile(t) / (4.0 * n * n)
    }

    /// Integral of one scaled cell bump: int_h / (8 N^3).
    pub fn cell_integral(&self) -> f64 {
        let n = self.cells as f64;
        self.int_h / (8.0 * n * n * n)
    }
}

/// The encoding scale for accuracy `eps` and class bound `m`: large enough
/// to keep the eigenvalue tolerance workable, small enough that both the
/// linearization residual and the admissibility range stay inside budget.
pub fn choose_scale(eps: f64, m: f64, config: &PipelineConfig) -> f64 {
    let log_term = config.log_inv(eps);
    let linear = eps / (m * m * log_term);
    let range = 0.5 / m;
    let residual = eps / (2.0 * config.residual_safety_factor * config.c_res * m * m);
    linear.min(range).min(residual)
}

/// Estimates the weighted integral of `f` against 2 sin^2(pi x) dx over
/// [0, 1], divided by two; that is, the plain integral of f(x) sin^2(pi x).
///
/// Guarantees |estimate - integral| <= eps except with probability at most
/// delta (the failure budget is only spent by the sampling backends; the
/// classical backend is deterministic). Requires 0 < eps < min(1, M) where
/// M is the integrand's class bound; an eps of M or more makes the zero
/// answer already good enough, which is returned with the trivial flag set
/// and nothing billed.
pub fn integrate_weighted(
    engine: &mut Engine,
    f: &SmoothIntegrand,
    eps: f64,
    delta: f64,
) -> Result<EstimateWithConfidence> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    let m = f.bound_m;
    if eps >= m {
        return Ok(EstimateWithConfidence {
            value: 0.0,
            eta: eps,
            delta,
            ledger: QueryLedger::default(),
            shift_from_reference: None,
            trivial: true,
        });
    }
    if eps >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "accuracy must be below one for a nontrivial run, got {eps}"
        )));
    }
    let c = choose_scale(eps, m, &engine.config);
    let eta = c * eps;
    assert!(
        engine.config.c_res * c * m * m <= 0.5 * eps,
        "scale selection left the linearization residual above eps/2; \
         residual_safety_factor must be at least 1"
    );
    let q = potential_from_integrand(f, c)?;
    let reads_before = f.calls();
    let est = qpe::estimate_lambda(engine, &q, eta, delta)?;
    let shift = est
        .shift_from_reference
        .unwrap_or(est.value - qpe::reference_value());
    let mut ledger = est.ledger;
    ledger.rebill_input_reads(engine.backend, f.calls() - reads_before, 0);
    Ok(EstimateWithConfidence {
        value: shift / (2.0 * c),
        eta: eps,
        delta,
        ledger,
        shift_from_reference: None,
        trivial: false,
    })
}

impl Engine {
    /// See [`integrate_weighted`].
    pub fn integrate_weighted(
        &mut self,
        f: &SmoothIntegrand,
        eps: f64,
        delta: f64,
    ) -> Result<EstimateWithConfidence> {
        integrate_weighted(self, f, eps, delta)
    }
}
