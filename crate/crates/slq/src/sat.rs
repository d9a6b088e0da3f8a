//! CNF satisfiability on top of exact-count Boolean means.
//!
//! Deciding satisfiability only needs the number of satisfying assignments
//! to accuracy better than half a slot, so [`sat_decide`] estimates the
//! mean of the assignment oracle to 1/(3N) and rounds. [`sat_search`]
//! finds the smallest satisfying assignment by bisection: each step asks
//! whether the lower half of the remaining index range contains a witness,
//! and a final flagged read confirms the candidate so an unsatisfiable
//! input is reported as such instead of returning garbage.

use crate::boolmean::{boolean_mean, BooleanOracle};
use crate::error::{Error, Result};
use crate::ledger::QueryLedger;
use crate::Engine;

/// A formula in conjunctive normal form over variables `1..=num_vars`.
///
/// Each clause is a list of signed literals: `v` stands for variable v,
/// `-v` for its negation. Clauses are never empty and never contain 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: u32, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for clause in &clauses {
            if clause.is_empty() {
                return Err(Error::InvalidInput("empty clause".into()));
            }
            for &lit in clause {
                if lit == 0 || lit == i32::MIN || lit.unsigned_abs() > num_vars {
                    return Err(Error::InvalidInput(format!(
                        "literal {lit} out of range for {num_vars} variables"
                    )));
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// True when the assignment packed into `j` satisfies every clause.
    /// Bit i of `j` is the value of variable i+1, least significant bit
    /// first; variables beyond bit 63 read as false.
    pub fn satisfied_by(&self, j: u64) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let idx = lit.unsigned_abs() - 1;
                let bit = idx < 64 && (j >> idx) & 1 == 1;
                if lit > 0 {
                    bit
                } else {
                    !bit
                }
            })
        })
    }
}

/// Parses DIMACS CNF text.
///
/// Lines starting with 'c' are comments; one header line
/// `p cnf <vars> <clauses>` must precede the clause tokens; every clause
/// is a run of nonzero literals terminated by 0, free to span or share
/// lines. Literals are range-checked against the header in both modes.
/// With `strict` set, the clause count must also match the header.
pub fn parse_dimacs(text: &str, strict: bool) -> Result<CnfFormula> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse("second header line".into()));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(Error::Parse(format!("malformed header {trimmed:?}")));
            }
            let nv: u32 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad variable count {:?}", fields[2])))?;
            let nc: usize = fields[3]
                .parse()
                .map_err(|_| Error::Parse(format!("bad clause count {:?}", fields[3])))?;
            header = Some((nv, nc));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| Error::Parse("clause before header".into()))?;
        for tok in trimmed.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad literal token {tok:?}")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(Error::Parse("empty clause".into()));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() > nv {
                    return Err(Error::Parse(format!(
                        "literal {lit} out of range for {nv} variables"
                    )));
                }
                current.push(lit);
            }
        }
    }
    let (num_vars, promised) = header.ok_or_else(|| Error::Parse("missing header line".into()))?;
    if !current.is_empty() {
        return Err(Error::Parse("unterminated clause at end of input".into()));
    }
    if strict && clauses.len() != promised {
        return Err(Error::Parse(format!(
            "header promises {promised} clauses, found {}",
            clauses.len()
        )));
    }
    Ok(CnfFormula { num_vars, clauses })
}

/// Wraps the formula as an oracle over all 2^n assignments.
pub fn cnf_oracle(formula: &CnfFormula) -> BooleanOracle {
    assert!(
        formula.num_vars < 64,
        "cannot index 2^{} assignments",
        formula.num_vars
    );
    let f = formula.clone();
    BooleanOracle::from_fn(1u64 << formula.num_vars, move |j| f.satisfied_by(j))
}

/// Verdict of the satisfiability decision, with the exact model count the
/// mean rounding produced along the way. Wrong with probability at most
/// `delta`.
#[derive(Debug, Clone)]
pub struct Decision {
    pub yes: bool,
    pub count_estimate: u64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

/// Decides whether `b` has any satisfying index.
///
/// Estimates the mean of `b` to within 1/(3N), tight enough that rounding
/// to the nearest multiple of 1/N recovers the exact number of ones; the
/// answer is YES when that count is positive.
pub fn sat_decide(engine: &mut Engine, b: &BooleanOracle, delta: f64) -> Result<Decision> {
    let eps = 1.0 / (3.0 * b.domain() as f64);
    let est = boolean_mean(engine, b, eps, delta)?;
    let count = est.count.expect("accuracy 1/(3N) always pins the count");
    Ok(Decision {
        yes: count > 0,
        count_estimate: count,
        delta,
        ledger: est.ledger,
    })
}

/// Result of the smallest-witness search. `candidate` is the index the
/// bisection settled on; `witness` repeats it only when the confirmation
/// read came back true.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub witness: Option<u64>,
    pub candidate: u64,
    pub delta: f64,
    pub ledger: QueryLedger,
}

/// Finds the smallest satisfying index of `b`.
///
/// Bisects the domain from the top bit down: each of the n steps decides
/// whether the lower half of the remaining range contains a witness, at
/// per-step confidence 1 - (1-delta)^(1/n) so the n steps jointly succeed
/// with probability at least 1 - delta. The final candidate is confirmed
/// with one flagged read; on a function with no witnesses the confirmation
/// fails and `witness` comes back empty.
pub fn sat_search(engine: &mut Engine, b: &BooleanOracle, delta: f64) -> Result<SearchOutcome> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    let n = b.vars();
    let mut ledger = QueryLedger::default();
    let mut candidate = 0u64;
    if n > 0 {
        let per_step = 1.0 - (1.0 - delta).powf(1.0 / f64::from(n));
        for k in (0..n).rev() {
            let half = b.view(candidate, 1u64 << k);
            let step = sat_decide(engine, &half, per_step)?;
            ledger.merge(&step.ledger);
            if !step.yes {
                candidate += 1u64 << k;
            }
        }
    }
    let confirmed = b.query_flagged(candidate);
    ledger.bit_queries += 1;
    ledger.verify_bit_queries += 1;
    Ok(SearchOutcome {
        witness: confirmed.then_some(candidate),
        candidate,
        delta,
        ledger,
    })
}

impl Engine {
    /// See [`sat_decide`].
    pub fn sat_decide(&mut self, b: &BooleanOracle, delta: f64) -> Result<Decision> {
        sat_decide(self, b, delta)
    }

    /// See [`sat_search`].
    pub fn sat_search(&mut self, b: &BooleanOracle, delta: f64) -> Result<SearchOutcome> {
        sat_search(self, b, delta)
    }
}
