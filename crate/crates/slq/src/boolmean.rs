//! Mean of a Boolean function over {0, ..., N-1} through the integration
//! pipeline.
//!
//! Each slot j gets a bump cell in [1/4, 3/4]; dividing out the sin^2
//! weight makes the weighted integral of the assembled function exactly
//! proportional to the number of slots switched on. Cell values are
//! memoized, so no matter how many grid points the lower layers evaluate,
//! the Boolean input is read at most once per slot.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use crate::domain::SmoothIntegrand;
use crate::error::{Error, Result};
use crate::integrate::{self, BumpFamily};
use crate::ledger::QueryLedger;
use crate::Engine;

/// A 0/1-valued function on {0, ..., N-1} with shared read counters,
/// where the domain size N is a power of two.
///
/// Plain reads and flagged reads are tracked separately: a flagged read is
/// one whose answer the caller commits to (verifying a found witness, say)
/// and it stays a genuine input query in every accounting layer above,
/// while plain reads get rebilled by whatever layer consumed them.
#[derive(Clone)]
pub struct BooleanOracle {
    eval: Arc<dyn Fn(u64) -> bool + Send + Sync>,
    domain: u64,
    calls: Arc<AtomicU64>,
    flagged: Arc<AtomicU64>,
}

impl std::fmt::Debug for BooleanOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BooleanOracle")
            .field("domain", &self.domain)
            .field("calls", &self.calls())
            .field("flagged", &self.flagged_calls())
            .finish()
    }
}

impl BooleanOracle {
    pub fn from_fn<F>(domain: u64, f: F) -> Self
    where
        F: Fn(u64) -> bool + Send + Sync + 'static,
    {
        assert!(
            domain > 0 && domain.is_power_of_two(),
            "oracle domain must be a positive power of two, got {domain}"
        );
        BooleanOracle {
            eval: Arc::new(f),
            domain,
            calls: Arc::new(AtomicU64::new(0)),
            flagged: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Table-backed oracle. The domain is the table length rounded up to
    /// a power of two; indices past the end read as false.
    pub fn from_bits(bits: &[bool]) -> Self {
        let table: Vec<bool> = bits.to_vec();
        let domain = table.len().next_power_of_two().max(1) as u64;
        BooleanOracle::from_fn(domain, move |j| {
            table.get(j as usize).copied().unwrap_or(false)
        })
    }

    /// Domain size N.
    pub fn domain(&self) -> u64 {
        self.domain
    }

    /// log2 of the domain size.
    pub fn vars(&self) -> u32 {
        self.domain.trailing_zeros()
    }

    pub fn query(&self, j: u64) -> bool {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.eval)(j)
    }

    /// A read whose answer is acted on directly. Counted apart from plain
    /// reads so higher layers keep billing it as a real input query.
    pub fn query_flagged(&self, j: u64) -> bool {
        self.flagged.fetch_add(1, Ordering::Relaxed);
        (self.eval)(j)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn flagged_calls(&self) -> u64 {
        self.flagged.load(Ordering::Relaxed)
    }

    /// The negated oracle. Shares this oracle's counters, since every read
    /// of the complement is a read of the original.
    pub fn complement(&self) -> BooleanOracle {
        let inner = Arc::clone(&self.eval);
        BooleanOracle {
            eval: Arc::new(move |j| !(inner)(j)),
            domain: self.domain,
            calls: Arc::clone(&self.calls),
            flagged: Arc::clone(&self.flagged),
        }
    }

    /// The restriction j -> self(offset + j) on a smaller power-of-two
    /// domain. Shares counters with the parent: restricted reads are
    /// reads of the original input.
    pub fn view(&self, offset: u64, domain: u64) -> BooleanOracle {
        assert!(
            domain > 0 && domain.is_power_of_two() && domain <= self.domain,
            "restriction domain {domain} invalid for parent domain {}",
            self.domain
        );
        assert!(
            offset <= self.domain - domain,
            "restriction window [{offset}, {offset}+{domain}) leaves the parent domain"
        );
        let inner = Arc::clone(&self.eval);
        BooleanOracle {
            eval: Arc::new(move |j| (inner)(offset + j)),
            domain,
            calls: Arc::clone(&self.calls),
            flagged: Arc::clone(&self.flagged),
        }
    }
}

/// Estimated mean of a Boolean function, with the exact count recovered
/// whenever the requested accuracy was tight enough to round.
#[derive(Debug, Clone)]
pub struct MeanEstimate {
    /// Best estimate of the mean; equals `count / N` when `count` is set.
    pub value: f64,
    /// Exact number of ones, present when eps < 1/(2N) made rounding
    /// reliable. Carries the run's failure probability delta.
    pub count: Option<u64>,
    /// The estimate before rounding and clamping.
    pub raw: f64,
    pub domain: u64,
    pub eta: f64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

/// Largest domain the mean estimator will tile into cells; one memo slot
/// is allocated per cell, so this bounds memory, not just work.
const MAX_ASSEMBLED_CELLS: u64 = 1 << 28;

/// Builds the bump family for `cells`, honoring a configured profile
/// exponent override.
pub(crate) fn family_for(engine: &Engine, cells: u64) -> Result<BumpFamily> {
    if engine.config.bump_alpha == integrate::DEFAULT_BUMP_ALPHA {
        integrate::make_bump_family(cells)
    } else {
        integrate::make_bump_family_with(cells, engine.config.bump_alpha)
    }
}

/// Checks a slot count against the configured bit-query budget and the
/// built-in assembly limit before anything is allocated or read.
pub(crate) fn ensure_domain_within_capacity(engine: &Engine, domain: u64) -> Result<()> {
    if let Some(budget) = engine.config.bit_query_budget {
        if domain > budget {
            return Err(Error::Capacity(format!(
                "run could read up to {domain} input bits, over the budget of {budget}"
            )));
        }
    }
    if domain > MAX_ASSEMBLED_CELLS {
        return Err(Error::Capacity(format!(
            "{domain} slots need {domain} assembled cells, over the limit of {MAX_ASSEMBLED_CELLS}"
        )));
    }
    Ok(())
}

/// Envelope for the smoothness class of any assembled cell sum: the cells
/// themselves contribute the family bound, and the 1/(2 sin^2) factor adds
/// lower-order terms that shrink with the cell count.
fn assembled_bound(fam: &BumpFamily) -> f64 {
    fam.m_const * (1.0 + 50.0 / fam.cells as f64)
}

/// Builds the smooth function whose weighted integral encodes the mean:
/// on cell j it is h_j(x) B(j) / (2 sin^2(pi x)), zero outside [1/4, 3/4].
/// Its weighted integral is int_h * mean / (16 N^2).
pub fn assemble_mean_integrand(fam: &BumpFamily, b: &BooleanOracle) -> SmoothIntegrand {
    assemble_cell_weighted(fam, b, |_| 1.0)
}

/// Same construction with an extra per-cell factor in [0, 1]; the factor
/// is constant within each cell, so the smoothness envelope is unchanged.
pub(crate) fn assemble_cell_weighted<W>(
    fam: &BumpFamily,
    b: &BooleanOracle,
    weight: W,
) -> SmoothIntegrand
where
    W: Fn(u64) -> f64 + Send + Sync + 'static,
{
    assert_eq!(
        fam.cells,
        b.domain(),
        "bump family must have one cell per oracle slot"
    );
    let fam = fam.clone();
    let b = b.clone();
    let memo: Arc<Vec<OnceLock<bool>>> =
        Arc::new((0..fam.cells).map(|_| OnceLock::new()).collect());
    let bound = assembled_bound(&fam);
    SmoothIntegrand::from_fn(
        move |x| {
            if x <= 0.25 || x >= 0.75 {
                return 0.0;
            }
            let n = fam.cells;
            let j = (((x - 0.25) * 2.0 * n as f64).floor() as u64).min(n - 1);
            let bit = *memo[j as usize].get_or_init(|| b.query(j));
            if !bit {
                return 0.0;
            }
            let s = (std::f64::consts::PI * x).sin();
            fam.eval_cell(j, x) * weight(j) / (2.0 * s * s)
        },
        bound,
    )
}

/// Estimates the fraction of the oracle's domain where `b` is true,
/// to within `eps` except with probability `delta`.
///
/// When eps < 1/(2N) the estimate pins the exact count of ones, reported
/// in `count`. The ledger bills at most one bit query per slot (plus any
/// flagged reads) regardless of how much grid work the layers below
/// performed.
pub fn boolean_mean(
    engine: &mut Engine,
    b: &BooleanOracle,
    eps: f64,
    delta: f64,
) -> Result<MeanEstimate> {
    let domain = b.domain();
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    if eps >= 0.5 {
        return Ok(MeanEstimate {
            value: 0.5,
            count: None,
            raw: 0.5,
            domain,
            eta: eps,
            delta,
            ledger: QueryLedger::default(),
        });
    }
    ensure_domain_within_capacity(engine, domain)?;
    let fam = family_for(engine, domain)?;
    let f = assemble_mean_integrand(&fam, b);
    let n = domain as f64;
    let eps_int = fam.int_h * eps / (16.0 * n * n);
    let reads_before = b.calls();
    let flagged_before = b.flagged_calls();
    let est = integrate::integrate_weighted(engine, &f, eps_int, delta)?;
    let raw = est.value * 16.0 * n * n / fam.int_h;
    let (value, count) = if eps < 0.5 / n {
        let rounded = (n * raw + 0.5).floor().clamp(0.0, n);
        (rounded / n, Some(rounded as u64))
    } else {
        (raw.clamp(0.0, 1.0), None)
    };
    let mut ledger = est.ledger;
    ledger.rebill_input_reads(
        engine.backend,
        b.calls() - reads_before,
        b.flagged_calls() - flagged_before,
    );
    Ok(MeanEstimate {
        value,
        count,
        raw,
        domain,
        eta: eps,
        delta,
        ledger,
    })
}

impl Engine {
    /// See [`boolean_mean`].
    pub fn boolean_mean(
        &mut self,
        b: &BooleanOracle,
        eps: f64,
        delta: f64,
    ) -> Result<MeanEstimate> {
        boolean_mean(self, b, eps, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::make_bump_family;
    use crate::oracle;
    use crate::Engine;

    fn weighted_integral(f: &SmoothIntegrand, cells: u64) -> f64 {
        let edges: Vec<f64> = (0..=cells)
            .map(|j| 0.25 + j as f64 / (2.0 * cells as f64))
            .collect();
        let quad = oracle::quadrature(
            &|x| f.eval(x) * (std::f64::consts::PI * x).sin().powi(2),
            0.25,
            0.75,
            1e-13,
            &edges,
        );
        assert!(quad.converged);
        quad.value
    }

    #[test]
    fn assembled_integral_encodes_the_mean() {
        let fam = make_bump_family(4).unwrap();
        for bits in [
            vec![true, false, true, true],
            vec![false, false, false, false],
            vec![true, true, true, true],
            vec![false, true, false, false],
        ] {
            let ones = bits.iter().filter(|&&v| v).count() as f64;
            let b = BooleanOracle::from_bits(&bits);
            let f = assemble_mean_integrand(&fam, &b);
            let expected = fam.int_h * (ones / 4.0) / (16.0 * 16.0);
            assert!(
                (weighted_integral(&f, 4) - expected).abs() < 1e-14,
                "bits {bits:?}"
            );
        }
    }

    #[test]
    fn assembled_function_stays_in_class() {
        let fam = make_bump_family(2).unwrap();
        let b = BooleanOracle::from_bits(&[true, true]);
        let f = assemble_mean_integrand(&fam, &b);
        let bound = f.bound_m;
        let h = 1e-5;
        let grid = 4000;
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for i in 1..grid {
            let x = i as f64 / grid as f64;
            let (lo, mid, hi) = (f.eval(x - h), f.eval(x), f.eval(x + h));
            s0 = s0.max(mid.abs());
            s1 = s1.max(((hi - lo) / (2.0 * h)).abs());
            s2 = s2.max(((hi - 2.0 * mid + lo) / (h * h)).abs());
        }
        assert!(s0 <= bound, "sup {s0} over bound {bound}");
        assert!(s1 <= bound, "sup of derivative {s1} over bound {bound}");
        assert!(
            s2 <= bound,
            "sup of second derivative {s2} over bound {bound}"
        );
        assert!(s2 > 0.15, "a flat function here would mean a wiring bug");

        assert_eq!(f.eval(0.25), 0.0);
        assert_eq!(f.eval(0.75), 0.0);
        assert_eq!(f.eval(0.1), 0.0);
        assert!(f.eval(0.25 + 1e-4) < 1e-6);
    }

    #[test]
    fn cells_are_read_at_most_once() {
        let fam = make_bump_family(8).unwrap();
        let b = BooleanOracle::from_fn(8, |j| j % 3 == 0);
        let f = assemble_mean_integrand(&fam, &b);
        for i in 0..10_000 {
            f.eval(i as f64 / 10_000.0);
        }
        assert!(b.calls() <= 8, "reads = {}", b.calls());
    }

    #[test]
    fn exact_counts_for_every_pattern_on_four_slots() {
        for pattern in 0u32..16 {
            let bits: Vec<bool> = (0..4).map(|i| pattern >> i & 1 == 1).collect();
            let ones = u64::from(pattern.count_ones());
            let b = BooleanOracle::from_bits(&bits);
            let mut engine = Engine::classical(17);
            let est = engine.boolean_mean(&b, 1.0 / 12.0, 0.2).unwrap();
            assert_eq!(est.count, Some(ones), "pattern {pattern:04b}");
            assert_eq!(est.value, ones as f64 / 4.0);
            assert!(est.ledger.bit_queries <= 4);
            assert!((est.raw - ones as f64 / 4.0).abs() < 1.0 / 12.0);
        }
    }

    #[test]
    fn exact_counts_on_wide_domains() {
        // Wider domains push the integration accuracy under a nanounit
        // and the encoding scale under the ulp of the potential's flat
        // background; counts must stay exact regardless.
        for n in [64u64, 128] {
            for (label, rule) in [
                ("all ones", Box::new(|_: u64| true) as Box<dyn Fn(u64) -> bool + Send + Sync>),
                ("every third", Box::new(|j: u64| j.is_multiple_of(3))),
                ("single bit", Box::new(move |j: u64| j == n - 2)),
            ] {
                let b = BooleanOracle::from_fn(n, rule);
                let expected = (0..n).filter(|&j| b.query(j)).count() as u64;
                let mut engine = Engine::classical(29);
                let est = engine.boolean_mean(&b, 1.0 / (3.0 * n as f64), 0.1).unwrap();
                assert_eq!(est.count, Some(expected), "{label} on {n} slots");
                assert_eq!(est.value, expected as f64 / n as f64);
            }
        }
    }

    #[test]
    fn count_requires_tight_accuracy() {
        let b = BooleanOracle::from_bits(&[true, false, false, false]);
        let mut engine = Engine::classical(2);
        let loose = engine.boolean_mean(&b, 0.125, 0.1).unwrap();
        assert!(loose.count.is_none());
        assert!((loose.value - 0.25).abs() <= 0.125);
        let tight = engine.boolean_mean(&b, 0.124, 0.1).unwrap();
        assert_eq!(tight.count, Some(1));
    }

    #[test]
    fn trivial_accuracy_answers_without_reading() {
        let b = BooleanOracle::from_bits(&[true, true, false, false]);
        let mut engine = Engine::classical(2);
        let est = engine.boolean_mean(&b, 0.5, 0.1).unwrap();
        assert_eq!(est.value, 0.5);
        assert_eq!(b.calls(), 0);
        assert_eq!(est.ledger.bit_queries, 0);
    }

    #[test]
    fn budget_gate_trips_before_reading() {
        let b = BooleanOracle::from_bits(&[true; 8]);
        let mut engine = Engine::classical(2);
        engine.config.bit_query_budget = Some(4);
        let err = engine.boolean_mean(&b, 0.01, 0.1).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn flagged_reads_survive_rebilling() {
        let b = BooleanOracle::from_bits(&[true, false]);
        assert!(b.query_flagged(0));
        assert_eq!(b.flagged_calls(), 1);
        assert_eq!(b.calls(), 0);

        let not_b = b.complement();
        assert!(!not_b.query(0));
        assert!(not_b.query(1));
        assert_eq!(b.calls(), 2, "complement reads tick the shared counter");
    }

    #[test]
    fn out_of_range_reads_are_false() {
        let b = BooleanOracle::from_bits(&[true]);
        assert!(b.query(0));
        assert!(!b.query(1));
        assert!(!b.query(u64::MAX));
    }

    #[test]
    fn sampling_backend_recovers_counts() {
        let bits = [true, true, false, false];
        let b = BooleanOracle::from_bits(&bits);
        let mut engine = Engine::spectral(23);
        let est = engine.boolean_mean(&b, 1.0 / 12.0, 0.2).unwrap();
        assert_eq!(est.count, Some(2));
        assert_eq!(est.ledger.bit_queries, 0);
        assert!(est.ledger.power_queries > 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let b = BooleanOracle::from_bits(&[true]);
        let mut engine = Engine::classical(1);
        assert!(engine.boolean_mean(&b, 0.0, 0.1).is_err());
        assert!(engine.boolean_mean(&b, 0.01, 0.0).is_err());
        assert!(engine.boolean_mean(&b, 0.01, 1.0).is_err());
    }

    #[test]
    #[should_panic(expected = "power of two")]
    fn rejects_non_power_of_two_domain() {
        BooleanOracle::from_fn(3, |_| false);
    }

    #[test]
    fn restriction_views_share_counters() {
        let b = BooleanOracle::from_bits(&[false, true, false, true, false, false, true, false]);
        let hi = b.view(4, 4);
        assert_eq!(hi.domain(), 4);
        assert!(hi.query(2), "slot 6 of the parent");
        assert!(!hi.query(0));
        assert_eq!(b.calls(), 2);

        let narrow = hi.view(2, 2);
        assert!(narrow.query(0), "views compose: slot 6 again");
        assert_eq!(b.calls(), 3);
        assert!(!narrow.query_flagged(1));
        assert_eq!(b.flagged_calls(), 1);
    }

    #[test]
    fn padded_tables_round_up_the_domain() {
        let b = BooleanOracle::from_bits(&[true, true, true]);
        assert_eq!(b.domain(), 4);
        assert_eq!(b.vars(), 2);
        assert!(!b.query(3), "padding slots read false");
    }
}
