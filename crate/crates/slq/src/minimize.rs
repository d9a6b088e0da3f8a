//! Minimum of a bounded vector by threshold bisection.
//!
//! A comparison "is any entry <= y" is a satisfiability question about the
//! threshold oracle f_y(j) = (x_j <= y), so the minimum value can be
//! localized by bisecting [-M, M], and a minimizing index recovered by one
//! more threshold test plus the smallest-witness search. All confidence
//! budgets are split exactly so each composite succeeds with its stated
//! probability.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::boolmean::{boolean_mean, BooleanOracle};
use crate::error::{Error, Result};
use crate::ledger::QueryLedger;
use crate::sat::{sat_decide, sat_search};
use crate::Engine;

enum Source {
    Dense(Arc<Vec<f64>>),
    Virtual {
        eval: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
        memo: Arc<Mutex<HashMap<u64, f64>>>,
    },
}

impl Clone for Source {
    fn clone(&self) -> Self {
        match self {
            Source::Dense(v) => Source::Dense(Arc::clone(v)),
            Source::Virtual { eval, memo } => Source::Virtual {
                eval: Arc::clone(eval),
                memo: Arc::clone(memo),
            },
        }
    }
}

/// A vector of reals with |x_j| <= bound_M, readable one entry at a time,
/// with shared counters for plain and flagged reads.
///
/// The addressable domain is the length rounded up to a power of two;
/// reads past the true length repeat the last entry, which leaves the
/// minimum (and the smallest minimizing index) unchanged.
#[derive(Clone)]
pub struct BoundedVector {
    source: Source,
    len: u64,
    domain: u64,
    bound_m: f64,
    reads: Arc<AtomicU64>,
    flagged: Arc<AtomicU64>,
}

impl std::fmt::Debug for BoundedVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundedVector")
            .field("len", &self.len)
            .field("domain", &self.domain)
            .field("bound_m", &self.bound_m)
            .field("reads", &self.reads())
            .finish()
    }
}

fn check_bound(bound_m: f64) -> Result<()> {
    if !(bound_m > 0.0) || !bound_m.is_finite() {
        return Err(Error::InvalidInput(format!(
            "entry bound must be positive and finite, got {bound_m}"
        )));
    }
    Ok(())
}

impl BoundedVector {
    pub fn from_entries(entries: Vec<f64>, bound_m: f64) -> Result<Self> {
        check_bound(bound_m)?;
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector has no entries".into()));
        }
        for (j, &v) in entries.iter().enumerate() {
            if !v.is_finite() || v.abs() > bound_m {
                return Err(Error::InvalidInput(format!(
                    "entry {j} is {v}, outside [-{bound_m}, {bound_m}]"
                )));
            }
        }
        let len = entries.len() as u64;
        Ok(BoundedVector {
            source: Source::Dense(Arc::new(entries)),
            len,
            domain: len.next_power_of_two(),
            bound_m,
            reads: Arc::new(AtomicU64::new(0)),
            flagged: Arc::new(AtomicU64::new(0)),
        })
    }

    /// Entry-on-demand vector. The caller promises |f(j)| <= bound_m for
    /// j < len; values are memoized so whatever f reads underneath is
    /// consulted once per distinct index, while this vector's own read
    /// counters still tick on every access.
    pub fn from_fn<F>(len: u64, bound_m: f64, f: F) -> Result<Self>
    where
        F: Fn(u64) -> f64 + Send + Sync + 'static,
    {
        check_bound(bound_m)?;
        if len == 0 {
            return Err(Error::InvalidInput("vector has no entries".into()));
        }
        Ok(BoundedVector {
            source: Source::Virtual {
                eval: Arc::new(f),
                memo: Arc::new(Mutex::new(HashMap::new())),
            },
            len,
            domain: len.next_power_of_two(),
            bound_m,
            reads: Arc::new(AtomicU64::new(0)),
            flagged: Arc::new(AtomicU64::new(0)),
        })
    }

    /// True entry count, before padding.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Addressable power-of-two domain size.
    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn bound(&self) -> f64 {
        self.bound_m
    }

    fn fetch(&self, j: u64) -> f64 {
        assert!(j < self.domain, "index {j} outside domain {}", self.domain);
        let idx = j.min(self.len - 1);
        match &self.source {
            Source::Dense(v) => v[idx as usize],
            Source::Virtual { eval, memo } => {
                *memo.lock().unwrap().entry(idx).or_insert_with(|| eval(idx))
            }
        }
    }

    pub fn get(&self, j: u64) -> f64 {
        self.reads.fetch_add(1, Ordering::Relaxed);
        self.fetch(j)
    }

    /// A read whose value is acted on directly; kept separate so cost
    /// accounting can preserve it across re-billing layers.
    pub fn get_flagged(&self, j: u64) -> f64 {
        self.flagged.fetch_add(1, Ordering::Relaxed);
        self.fetch(j)
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn flagged_reads(&self) -> u64 {
        self.flagged.load(Ordering::Relaxed)
    }

    /// The same vector under a different declared bound, sharing memo and
    /// read counters. Dense entries are re-validated; for entry-on-demand
    /// vectors the tighter bound is the caller's promise, as at
    /// construction.
    pub fn with_bound(&self, bound_m: f64) -> Result<BoundedVector> {
        check_bound(bound_m)?;
        if let Source::Dense(v) = &self.source {
            if let Some((j, &bad)) = v.iter().enumerate().find(|(_, v)| v.abs() > bound_m) {
                return Err(Error::InvalidInput(format!(
                    "entry {j} is {bad}, outside [-{bound_m}, {bound_m}]"
                )));
            }
        }
        let mut out = self.clone();
        out.bound_m = bound_m;
        Ok(out)
    }
}

/// The comparison oracle f_y(j) = (x_j <= y). Every oracle evaluation
/// performs (and bills) one read of the vector.
pub fn threshold_oracle(x: &BoundedVector, y: f64) -> BooleanOracle {
    let x = x.clone();
    BooleanOracle::from_fn(x.domain(), move |j| x.get(j) <= y)
}

/// Localization of the minimum value.
#[derive(Debug, Clone)]
pub struct ValueOutcome {
    /// Midpoint of the final bracket; within eps of the true minimum
    /// except with probability delta.
    pub value: f64,
    /// Final bisection bracket, of width at most 2 eps.
    pub interval: (f64, f64),
    pub eps: f64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

fn check_eps(eps: f64, bound_m: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    if eps >= bound_m {
        return Err(Error::InvalidInput(format!(
            "accuracy {eps} is no better than the entry bound {bound_m}"
        )));
    }
    Ok(())
}

/// Estimates min_j x_j to within `eps`, except with probability `delta`.
///
/// Bisects [-M, M]: each of the ceil(log2(M/eps)) steps decides whether
/// any entry lies at or below the current midpoint, at a per-step
/// confidence chosen so all steps jointly succeed with probability
/// 1 - delta.
pub fn min_value(
    engine: &mut Engine,
    x: &BoundedVector,
    eps: f64,
    delta: f64,
) -> Result<ValueOutcome> {
    check_eps(eps, x.bound())?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    let m = x.bound();
    let steps = (m / eps).log2().ceil().max(1.0) as u32;
    let per_step = 1.0 - (1.0 - delta).powf(1.0 / f64::from(steps));
    let mut ledger = QueryLedger::default();
    let (mut a, mut b) = (-m, m);
    let mut y = 0.0;
    for _ in 0..steps {
        let verdict = sat_decide(engine, &threshold_oracle(x, y), per_step)?;
        ledger.merge(&verdict.ledger);
        if verdict.yes {
            b = y;
        } else {
            a = y;
        }
        y = 0.5 * (a + b);
    }
    Ok(ValueOutcome {
        value: y,
        interval: (a, b),
        eps,
        delta,
        ledger,
    })
}

/// A minimizing index with its re-read entry value.
#[derive(Debug, Clone)]
pub struct IndexOutcome {
    pub index: u64,
    /// The entry at `index`, re-read at the end with a flagged query.
    pub value: f64,
    /// Acceptance threshold the search used; on success value <= threshold
    /// and threshold <= min + eps.
    pub threshold: f64,
    /// Whether the final re-read confirmed value <= threshold.
    pub verified: bool,
    pub eps: f64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

/// Finds an index j with x_j within `eps` of the minimum, except with
/// probability `delta`; ties resolve to the smallest such index.
///
/// Three stages at confidence 1 - (1-delta)^(1/3) each: localize the
/// minimum value, count entries at or below it (raising the threshold by
/// eps when that count is zero), then search for the smallest index under
/// the threshold. The returned entry is re-read once, flagged, to make a
/// wrong answer detectable.
pub fn min_index(
    engine: &mut Engine,
    x: &BoundedVector,
    eps: f64,
    delta: f64,
) -> Result<IndexOutcome> {
    check_eps(eps, x.bound())?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    let per_stage = 1.0 - (1.0 - delta).powf(1.0 / 3.0);
    let located = min_value(engine, x, eps, per_stage)?;
    let mut ledger = located.ledger;
    let mut y = located.value;

    let n = x.domain();
    let occupancy = boolean_mean(
        engine,
        &threshold_oracle(x, y),
        1.0 / (3.0 * n as f64),
        per_stage,
    )?;
    ledger.merge(&occupancy.ledger);
    let z = occupancy
        .count
        .expect("accuracy 1/(3N) always pins the count");
    if z == 0 {
        y += eps;
    }

    let search = sat_search(engine, &threshold_oracle(x, y), per_stage)?;
    ledger.merge(&search.ledger);
    let index = search.candidate;

    let value = x.get_flagged(index);
    ledger.bit_queries += 1;
    ledger.verify_bit_queries += 1;
    Ok(IndexOutcome {
        index,
        value,
        threshold: y,
        verified: value <= y,
        eps,
        delta,
        ledger,
    })
}

impl Engine {
    /// See [`min_value`].
    pub fn min_value(&mut self, x: &BoundedVector, eps: f64, delta: f64) -> Result<ValueOutcome> {
        min_value(self, x, eps, delta)
    }

    /// See [`min_index`].
    pub fn min_index(&mut self, x: &BoundedVector, eps: f64, delta: f64) -> Result<IndexOutcome> {
        min_index(self, x, eps, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn brute_min(entries: &[f64]) -> (f64, u64) {
        let mut best = (f64::INFINITY, 0u64);
        for (j, &v) in entries.iter().enumerate() {
            if v < best.0 {
                best = (v, j as u64);
            }
        }
        best
    }

    #[test]
    fn threshold_oracle_compares_entries() {
        let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0, 5.0], 8.0).unwrap();
        let f = threshold_oracle(&x, 2.0);
        let table: Vec<bool> = (0..4).map(|j| f.query(j)).collect();
        assert_eq!(table, vec![false, true, true, false]);
        assert_eq!(x.reads(), 4, "each comparison reads one entry");

        let all = threshold_oracle(&x, 8.0);
        assert!((0..4).all(|j| all.query(j)));
        let none = threshold_oracle(&x, -8.1);
        assert!(!(0..4).any(|j| none.query(j)));
    }

    #[test]
    fn padding_repeats_the_last_entry() {
        let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0], 8.0).unwrap();
        assert_eq!(x.len(), 3);
        assert_eq!(x.domain(), 4);
        assert_eq!(x.get(3), 2.0);
        assert_eq!(x.get(2), 2.0);
    }

    #[test]
    fn virtual_vectors_memoize_the_inner_function() {
        let evals = Arc::new(AtomicU64::new(0));
        let counter = Arc::clone(&evals);
        let x = BoundedVector::from_fn(4, 10.0, move |j| {
            counter.fetch_add(1, Ordering::Relaxed);
            j as f64 - 2.0
        })
        .unwrap();
        for _ in 0..5 {
            assert_eq!(x.get(1), -1.0);
        }
        assert_eq!(evals.load(Ordering::Relaxed), 1, "inner function ran once");
        assert_eq!(x.reads(), 5, "but every access is a read of the vector");
    }

    #[test]
    fn locates_the_documented_example() {
        let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0, 7.0], 8.0).unwrap();
        let mut engine = Engine::classical(61);
        let out = engine.min_value(&x, 1.0 / 3.0, 0.1).unwrap();
        assert!(out.value >= -4.0 / 3.0 && out.value <= -2.0 / 3.0);
        assert!((out.value - -1.25).abs() < 1e-12, "deterministic bisection");
        let (a, b) = out.interval;
        assert!(a <= -1.0 && -1.0 <= b, "bracket holds the true minimum");
        assert!(b - a <= 2.0 / 3.0 + 1e-12);
    }

    #[test]
    fn constant_zero_vector_localizes_near_zero() {
        let x = BoundedVector::from_entries(vec![0.0; 4], 1.0).unwrap();
        let mut engine = Engine::classical(67);
        let out = engine.min_value(&x, 0.1, 0.1).unwrap();
        assert!(out.value.abs() <= 0.1);
    }

    #[test]
    fn random_vectors_localize_within_accuracy() {
        let mut rng = StdRng::seed_from_u64(0x3a1);
        let mut engine = Engine::classical(71);
        for _ in 0..10 {
            let entries: Vec<f64> = (0..16).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let (want, _) = brute_min(&entries);
            let x = BoundedVector::from_entries(entries.clone(), 10.0).unwrap();
            let out = engine.min_value(&x, 0.25, 0.05).unwrap();
            assert!(
                (out.value - want).abs() <= 0.25,
                "entries {entries:?} got {} want {want}",
                out.value
            );
            let (a, b) = out.interval;
            assert!(a - 1e-12 <= want && want <= b + 1e-12);
        }
    }

    #[test]
    fn index_search_returns_the_unique_minimizer() {
        let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0, 7.0], 8.0).unwrap();
        let mut engine = Engine::classical(73);
        let out = engine.min_index(&x, 1.0 / 3.0, 0.1).unwrap();
        assert_eq!(out.index, 1);
        assert_eq!(out.value, -1.0);
        assert!(out.verified);
        assert!(out.value <= out.threshold);
    }

    #[test]
    fn ties_resolve_to_the_smallest_index() {
        let x = BoundedVector::from_entries(vec![0.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        let mut engine = Engine::classical(79);
        let out = engine.min_index(&x, 0.1, 0.1).unwrap();
        assert_eq!(out.index, 0);
        assert!(out.verified);

        let x = BoundedVector::from_entries(vec![5.0, 2.0, 2.0, 9.0], 10.0).unwrap();
        let out = engine.min_index(&x, 1.0 / 3.0, 0.1).unwrap();
        assert_eq!(out.index, 1);
    }

    #[test]
    fn integer_vectors_round_to_the_exact_minimum() {
        let mut rng = StdRng::seed_from_u64(0x9e2);
        let mut engine = Engine::classical(83);
        for _ in 0..10 {
            let entries: Vec<f64> = (0..16).map(|_| rng.gen_range(-9..=9) as f64).collect();
            let (want_value, want_index) = brute_min(&entries);
            let x = BoundedVector::from_entries(entries.clone(), 10.0).unwrap();

            let value = engine.min_value(&x, 1.0 / 3.0, 0.05).unwrap();
            assert_eq!(value.value.round(), want_value, "entries {entries:?}");

            let index = engine.min_index(&x, 1.0 / 3.0, 0.05).unwrap();
            assert_eq!(index.index, want_index, "entries {entries:?}");
            assert_eq!(index.value, want_value);
            assert!(index.verified);
        }
    }

    #[test]
    fn padding_does_not_invent_a_minimum() {
        let x = BoundedVector::from_entries(vec![4.0, 1.0, 2.0], 8.0).unwrap();
        let mut engine = Engine::classical(89);
        let out = engine.min_index(&x, 1.0 / 3.0, 0.1).unwrap();
        assert_eq!(out.index, 1);
        assert_eq!(out.value, 1.0);
    }

    #[test]
    fn final_recheck_is_flagged() {
        let x = BoundedVector::from_entries(vec![2.0, -3.0], 4.0).unwrap();
        let mut engine = Engine::classical(97);
        let out = engine.min_index(&x, 0.5, 0.1).unwrap();
        assert_eq!(out.index, 1);
        assert_eq!(x.flagged_reads(), 1);
        assert!(
            out.ledger.verify_bit_queries >= 2,
            "search confirmation plus the entry re-read"
        );
    }

    #[test]
    fn sampling_backend_agrees_on_the_example() {
        let x = BoundedVector::from_entries(vec![3.0, -1.0, 2.0, 7.0], 8.0).unwrap();
        let mut engine = Engine::spectral(101);
        let out = engine.min_index(&x, 1.0 / 3.0, 0.2).unwrap();
        assert_eq!(out.index, 1);
        assert!(out.ledger.power_queries > 0);
        assert_eq!(
            out.ledger.bit_queries, out.ledger.verify_bit_queries,
            "plain reads fold into simulation work"
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = BoundedVector::from_entries(vec![1.0, 2.0], 4.0).unwrap();
        let mut engine = Engine::classical(103);
        assert!(engine.min_value(&x, 0.0, 0.1).is_err());
        assert!(engine.min_value(&x, 4.0, 0.1).is_err());
        assert!(engine.min_value(&x, 0.5, 1.0).is_err());
        assert!(engine.min_index(&x, 5.0, 0.1).is_err());
        assert!(BoundedVector::from_entries(vec![], 1.0).is_err());
        assert!(BoundedVector::from_entries(vec![2.0], 1.0).is_err());
        assert!(BoundedVector::from_entries(vec![f64::NAN], 1.0).is_err());
        assert!(BoundedVector::from_entries(vec![0.5], 0.0).is_err());
    }
}
