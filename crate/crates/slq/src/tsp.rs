//! Traveling salesman through minimum search over unranked tours.
//!
//! Tours are addressed by integers: a factorial-base codec maps indices
//! injectively onto permutations, so the vector of tour lengths becomes a
//! bounded vector that [`crate::minimize`] can search without ever
//! materializing the m! entries. A preliminary loop localizes the largest
//! tour length to a power of two, which sets the bisection range; the
//! decision, minimum-length, and optimal-tour procedures then reduce to
//! one minimum search each, with all confidence budgets split exactly.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ledger::QueryLedger;
use crate::minimize::{min_index, min_value, threshold_oracle, BoundedVector};
use crate::sat::sat_decide;
use crate::Engine;

/// Largest city count the 64-bit tour index codec supports (21! overflows).
pub const MAX_CITIES: usize = 20;

/// Largest accepted distance entry; keeps every tour length exactly
/// representable and the bound arithmetic free of overflow.
pub const MAX_DISTANCE: u64 = 1 << 40;

/// Intercity distances: zero diagonal, positive integers off the
/// diagonal, symmetry not required. Reads are counted.
#[derive(Clone)]
pub struct DistanceMatrix {
    m: usize,
    d: Arc<Vec<Vec<u64>>>,
    reads: Arc<AtomicU64>,
    flagged: Arc<AtomicU64>,
}

impl std::fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistanceMatrix")
            .field("m", &self.m)
            .field("reads", &self.reads())
            .finish()
    }
}

impl DistanceMatrix {
    pub fn new(d: Vec<Vec<u64>>) -> Result<Self> {
        let m = d.len();
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 cities, got {m}"
            )));
        }
        if m > MAX_CITIES {
            return Err(Error::InvalidInput(format!(
                "{m} cities exceed the {MAX_CITIES}-city limit of the tour index codec"
            )));
        }
        for (j, row) in d.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "row {j} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                if j == k && v != 0 {
                    return Err(Error::InvalidInput(format!(
                        "diagonal entry ({j},{j}) must be 0, got {v}"
                    )));
                }
                if j != k && v == 0 {
                    return Err(Error::InvalidInput(format!(
                        "off-diagonal entry ({j},{k}) must be positive"
                    )));
                }
                if v > MAX_DISTANCE {
                    return Err(Error::InvalidInput(format!(
                        "entry ({j},{k}) is {v}, over the limit of {MAX_DISTANCE}"
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            m,
            d: Arc::new(d),
            reads: Arc::new(AtomicU64::new(0)),
            flagged: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn cities(&self) -> usize {
        self.m
    }

    /// Distance from city `a` to city `b` (1-based labels); one counted
    /// read.
    pub fn distance(&self, a: usize, b: usize) -> u64 {
        self.reads.fetch_add(1, Ordering::Relaxed);
        self.d[a - 1][b - 1]
    }

    fn distance_flagged(&self, a: usize, b: usize) -> u64 {
        self.flagged.fetch_add(1, Ordering::Relaxed);
        self.d[a - 1][b - 1]
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn flagged_reads(&self) -> u64 {
        self.flagged.load(Ordering::Relaxed)
    }

    /// Raw rows, for cross-checking against independent enumeration.
    pub fn rows(&self) -> &[Vec<u64>] {
        &self.d
    }
}

#[derive(Deserialize)]
struct MatrixJson {
    m: usize,
    d: Vec<Vec<u64>>,
}

/// Parses a distance matrix from either of the two accepted text forms:
/// a JSON object {"m": ..., "d": [[...]]}, or a token stream whose first
/// integer is the city count followed by the m*m entries row by row.
pub fn parse_distance_matrix(text: &str) -> Result<DistanceMatrix> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let parsed: MatrixJson =
            serde_json::from_str(trimmed).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
        if parsed.d.len() != parsed.m {
            return Err(Error::Parse(format!(
                "matrix JSON declares m={} but has {} rows",
                parsed.m,
                parsed.d.len()
            )));
        }
        return DistanceMatrix::new(parsed.d);
    }
    let mut tokens = trimmed.split_whitespace();
    let m: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty matrix input".into()))?
        .parse()
        .map_err(|_| Error::Parse("city count must be a nonnegative integer".into()))?;
    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = Vec::with_capacity(m);
        for c in 0..m {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix ends early at row {r}, column {c}")))?;
            let v: u64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad distance token {tok:?}")))?;
            row.push(v);
        }
        rows.push(row);
    }
    if let Some(extra) = tokens.next() {
        return Err(Error::Parse(format!(
            "trailing token {extra:?} after the {m}x{m} matrix"
        )));
    }
    DistanceMatrix::new(rows)
}

pub(crate) fn factorial(m: usize) -> u64 {
    (2..=m as u64).product()
}

/// Bits needed to index all m! tours: the exponent of the padded
/// power-of-two domain the codec addresses.
pub fn codec_bits(m: usize) -> u32 {
    assert!((1..=MAX_CITIES).contains(&m));
    factorial(m).next_power_of_two().trailing_zeros()
}

/// The j-th permutation of {1, ..., m} in factorial-base order: each
/// digit of j selects from the list of cities not yet placed. Indices at
/// or past m! clamp to the last permutation, so the padded power-of-two
/// domain stays injective below m! and constant above it.
pub fn decode_permutation(j: u64, m: usize) -> Vec<usize> {
    assert!((1..=MAX_CITIES).contains(&m));
    let mut j = j.min(factorial(m) - 1);
    let mut remaining: Vec<usize> = (1..=m).collect();
    let mut out = Vec::with_capacity(m);
    for i in (0..m).rev() {
        let f = factorial(i);
        out.push(remaining.remove((j / f) as usize));
        j %= f;
    }
    out
}

/// Inverse of [`decode_permutation`] on genuine permutations.
pub fn permutation_rank(perm: &[usize]) -> u64 {
    let m = perm.len();
    let mut remaining: Vec<usize> = (1..=m).collect();
    let mut rank = 0u64;
    for (i, &city) in perm.iter().enumerate() {
        let pos = remaining
            .iter()
            .position(|&c| c == city)
            .expect("argument must be a permutation of 1..=m");
        rank += pos as u64 * factorial(m - 1 - i);
        remaining.remove(pos);
    }
    rank
}

fn assert_permutation(perm: &[usize], m: usize) {
    assert_eq!(perm.len(), m, "tour must visit every city once");
    let mut seen = vec![false; m + 1];
    for &c in perm {
        assert!(c >= 1 && c <= m && !seen[c], "not a permutation of 1..={m}");
        seen[c] = true;
    }
}

/// Closed-tour length: the sum of consecutive distances plus the return
/// edge to the starting city. Costs m counted reads.
pub fn tour_length(d: &DistanceMatrix, perm: &[usize]) -> u64 {
    let m = d.cities();
    assert_permutation(perm, m);
    let mut total = 0u64;
    for i in 0..m {
        total += d.distance(perm[i], perm[(i + 1) % m]);
    }
    total
}

fn tour_length_flagged(d: &DistanceMatrix, perm: &[usize]) -> u64 {
    let m = d.cities();
    assert_permutation(perm, m);
    let mut total = 0u64;
    for i in 0..m {
        total += d.distance_flagged(perm[i], perm[(i + 1) % m]);
    }
    total
}

/// The tour-length vector x_j = length(decode(j)), entry-on-demand with
/// per-index memoization.
fn tour_vector(d: &DistanceMatrix, bound_m: f64) -> Result<BoundedVector> {
    let m = d.cities();
    let d = d.clone();
    BoundedVector::from_fn(factorial(m), bound_m, move |j| {
        tour_length(&d, &decode_permutation(j, m)) as f64
    })
}

/// A power-of-two upper bound on the longest tour.
#[derive(Debug, Clone)]
pub struct BoundOutcome {
    /// The bound M = 2^stop_exponent.
    pub bound: u64,
    pub stop_exponent: u32,
    pub delta: f64,
    pub ledger: QueryLedger,
}

fn ceil_log2(x: u64) -> u32 {
    x.next_power_of_two().trailing_zeros()
}

fn scan_d_max(d: &DistanceMatrix) -> u64 {
    let m = d.cities();
    let mut d_max = 1u64;
    for a in 1..=m {
        for b in 1..=m {
            if a != b {
                d_max = d_max.max(d.distance(a, b));
            }
        }
    }
    d_max
}

/// Runs the doubling loop against an existing tour vector and returns the
/// un-rebilled ledger along with the stop exponent.
fn bound_core(
    engine: &mut Engine,
    x: &BoundedVector,
    cap_exponent: u32,
    delta: f64,
) -> Result<(u32, QueryLedger)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    // The loop makes cap_exponent + 1 decisions (k = 0..=cap) and the
    // whole pass must succeed with probability (1-delta)^(1/2), half the
    // failure budget of the algorithm that called for the bound.
    let steps = f64::from(cap_exponent + 1);
    let per_step = 1.0 - (1.0 - delta).powf(1.0 / (2.0 * steps));
    let mut ledger = QueryLedger::default();
    for k in 0..=cap_exponent {
        let over = threshold_oracle(x, (1u64 << k) as f64).complement();
        let verdict = sat_decide(engine, &over, per_step)?;
        ledger.merge(&verdict.ledger);
        if !verdict.yes {
            return Ok((k, ledger));
        }
    }
    Err(Error::Numerical(format!(
        "no power of two up to 2^{cap_exponent} bounded the tours; \
         a bound-loop decision must have been wrong"
    )))
}

/// Localizes the largest tour length to a power of two M = 2^k by asking,
/// for k = 0, 1, ..., whether any tour exceeds 2^k and stopping at the
/// first "no". Succeeds (returns M at least the true maximum) with
/// probability at least (1-delta)^(1/2): the loop spends half the failure
/// budget of the procedures built on top of it.
pub fn estimate_distance_bound(
    engine: &mut Engine,
    d: &DistanceMatrix,
    delta: f64,
) -> Result<BoundOutcome> {
    let reads_before = d.reads();
    let flagged_before = d.flagged_reads();
    let m = d.cities() as u64;
    let d_max = scan_d_max(d);
    let cap = ceil_log2(m * d_max);
    let x = tour_vector(d, (m * d_max) as f64)?;
    let (stop, mut ledger) = bound_core(engine, &x, cap, delta)?;
    ledger.rebill_input_reads(
        engine.backend,
        d.reads() - reads_before,
        d.flagged_reads() - flagged_before,
    );
    Ok(BoundOutcome {
        bound: 1u64 << stop,
        stop_exponent: stop,
        delta,
        ledger,
    })
}

/// Verdict on "is there a tour of length at most `limit`".
#[derive(Debug, Clone)]
pub struct TspDecision {
    pub yes: bool,
    /// The rounded minimum-length estimate the verdict compared.
    pub optimal_estimate: u64,
    /// Power-of-two tour bound the bisection ran under.
    pub bound: u64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

/// Decides whether some tour has length at most `limit`, correct except
/// with probability `delta`: half the budget estimates the tour bound,
/// half localizes the minimum length to 1/3, which rounding turns exact.
pub fn tsp_decide(
    engine: &mut Engine,
    d: &DistanceMatrix,
    limit: u64,
    delta: f64,
) -> Result<TspDecision> {
    let reads_before = d.reads();
    let flagged_before = d.flagged_reads();
    let m = d.cities() as u64;
    let d_max = scan_d_max(d);
    let cap = ceil_log2(m * d_max);
    let x = tour_vector(d, (m * d_max) as f64)?;
    let (stop, mut ledger) = bound_core(engine, &x, cap, delta)?;
    let x = x.with_bound((1u64 << stop) as f64)?;

    let half = 1.0 - (1.0 - delta).sqrt();
    let located = min_value(engine, &x, 1.0 / 3.0, half)?;
    ledger.merge(&located.ledger);
    ledger.rebill_input_reads(
        engine.backend,
        d.reads() - reads_before,
        d.flagged_reads() - flagged_before,
    );
    let optimal_estimate = located.value.round().max(0.0) as u64;
    Ok(TspDecision {
        yes: optimal_estimate <= limit,
        optimal_estimate,
        bound: 1u64 << stop,
        delta,
        ledger,
    })
}

/// An optimal tour with its length.
#[derive(Debug, Clone)]
pub struct TourOutcome {
    /// Exact minimum tour length (integer distances make the rounded
    /// localization exact on success).
    pub length: u64,
    /// The optimal tour, smallest codec index first among ties.
    pub tour: Vec<usize>,
    /// Codec index of the returned tour.
    pub index: u64,
    /// Power-of-two tour bound the search ran under.
    pub bound: u64,
    /// Whether the flagged re-read confirmed the located entry sat under
    /// the acceptance threshold.
    pub verified: bool,
    pub delta: f64,
    pub ledger: QueryLedger,
}

fn tsp_solve(engine: &mut Engine, d: &DistanceMatrix, delta: f64) -> Result<TourOutcome> {
    let reads_before = d.reads();
    let flagged_before = d.flagged_reads();
    let m = d.cities();
    let d_max = scan_d_max(d);
    let cap = ceil_log2(m as u64 * d_max);
    let x = tour_vector(d, (m as u64 * d_max) as f64)?;
    let (stop, mut ledger) = bound_core(engine, &x, cap, delta)?;
    let x = x.with_bound((1u64 << stop) as f64)?;

    let half = 1.0 - (1.0 - delta).sqrt();
    let located = min_index(engine, &x, 1.0 / 3.0, half)?;
    ledger.merge(&located.ledger);

    let length = located.value.round().max(0.0) as u64;
    let tour = decode_permutation(located.index, m);
    let rescored = tour_length_flagged(d, &tour);
    if rescored != length {
        return Err(Error::Numerical(format!(
            "re-scored tour length {rescored} disagrees with the located minimum {length}"
        )));
    }
    ledger.rebill_input_reads(
        engine.backend,
        d.reads() - reads_before,
        d.flagged_reads() - flagged_before,
    );
    Ok(TourOutcome {
        length,
        tour,
        index: located.index,
        bound: 1u64 << stop,
        verified: located.verified,
        delta,
        ledger,
    })
}

/// The minimum closed-tour length, exact except with probability `delta`.
pub fn tsp_min_length(engine: &mut Engine, d: &DistanceMatrix, delta: f64) -> Result<TourOutcome> {
    tsp_solve(engine, d, delta)
}

/// A minimum-length tour, exact except with probability `delta`; among
/// optimal tours the one with the smallest codec index is returned.
pub fn tsp_optimal_tour(
    engine: &mut Engine,
    d: &DistanceMatrix,
    delta: f64,
) -> Result<TourOutcome> {
    tsp_solve(engine, d, delta)
}

impl Engine {
    /// See [`estimate_distance_bound`].
    pub fn estimate_distance_bound(
        &mut self,
        d: &DistanceMatrix,
        delta: f64,
    ) -> Result<BoundOutcome> {
        estimate_distance_bound(self, d, delta)
    }

    /// See [`tsp_decide`].
    pub fn tsp_decide(
        &mut self,
        d: &DistanceMatrix,
        limit: u64,
        delta: f64,
    ) -> Result<TspDecision> {
        tsp_decide(self, d, limit, delta)
    }

    /// See [`tsp_min_length`].
    pub fn tsp_min_length(&mut self, d: &DistanceMatrix, delta: f64) -> Result<TourOutcome> {
        tsp_min_length(self, d, delta)
    }

    /// See [`tsp_optimal_tour`].
    pub fn tsp_optimal_tour(&mut self, d: &DistanceMatrix, delta: f64) -> Result<TourOutcome> {
        tsp_optimal_tour(self, d, delta)
    }
}
