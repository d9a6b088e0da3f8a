//! Independent ground truth: exhaustive solvers and high-precision
//! quadrature.
//!
//! Nothing in this module shares logic with the estimation pipeline. The
//! brute-force solvers enumerate, the quadrature integrates directly, and
//! agreement between the two sides is evidence rather than tautology.
//! The pipeline itself touches this module in exactly one place: the bump
//! family integrates its profile once at construction.

use crate::error::{Error, Result};

// ───────────────────────────── quadrature ─────────────────────────────

/// Result of an adaptive quadrature run. When the subdivision cap is hit
/// the value is still returned, with `converged` false and the achieved
/// error estimate in place of the requested one.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute
/// tolerance `abs_tol`, splitting first at the given breakpoints so that
/// piecewise-smooth integrands (bump cells, thresholded pieces) are
/// integrated panel by panel. Breakpoints outside (a, b) are ignored.
pub fn quadrature(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    breakpoints: &[f64],
) -> QuadResult {
    assert!(b > a, "empty integration interval");
    assert!(abs_tol > 0.0, "tolerance must be positive");

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    cuts.insert(0, a);
    cuts.push(b);

    let mut total = 0.0;
    let mut err = 0.0;
    let mut converged = true;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < f64::EPSILON * 4.0 {
            continue;
        }
        let share = abs_tol * (hi - lo) / (b - a);
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, hi, flo, fmid, fhi);
        let panel = adapt(
            f,
            lo,
            hi,
            flo,
            fmid,
            fhi,
            whole,
            share,
            MAX_DEPTH,
            &mut err,
            &mut converged,
        );
        total += panel;
    }
    QuadResult {
        value: total,
        error_estimate: err,
        converged,
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // The factor 15 is the Richardson gain of halving Simpson's rule.
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *converged = false;
        }
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    adapt(
        f,
        a,
        m,
        fa,
        flm,
        fm,
        left,
        0.5 * tol,
        depth - 1,
        err,
        converged,
    ) + adapt(
        f,
        m,
        b,
        fm,
        frm,
        fb,
        right,
        0.5 * tol,
        depth - 1,
        err,
        converged,
    )
}

// ─────────────────────────── brute solvers ────────────────────────────

/// Exhaustive satisfiability scan over all 2^n inputs. Returns whether
/// any witness exists and, if so, the smallest one.
pub fn brute_sat(b: &dyn Fn(u64) -> bool, n: u32) -> Result<(bool, Option<u64>)> {
    if n > 24 {
        return Err(Error::Capacity(format!(
            "brute-force satisfiability capped at 24 variables, got {n}"
        )));
    }
    for j in 0..(1u64 << n) {
        if b(j) {
            return Ok((true, Some(j)));
        }
    }
    Ok((false, None))
}

/// Exhaustive traveling-salesman scan: every permutation of the cities
/// 1..m in lexicographic order, keeping the first tour that strictly
/// improves the best closed-tour length seen so far. The returned tour is
/// therefore the lexicographically first optimum.
///
/// `d[i][j]` is the distance from city i+1 to city j+1; asymmetric
/// matrices are fine.
pub fn brute_tsp(m: usize, d: &[Vec<u64>]) -> Result<(u64, Vec<usize>)> {
    if m > 9 {
        return Err(Error::Capacity(format!(
            "brute-force tour scan capped at 9 cities, got {m}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidInput("need at least two cities".into()));
    }
    if d.len() != m || d.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidInput(format!(
            "distance matrix is not {m}x{m}"
        )));
    }

    let mut perm: Vec<usize> = (1..=m).collect();
    let mut best_len = u64::MAX;
    let mut best_tour = perm.clone();
    loop {
        let mut len = 0u64;
        for i in 0..m {
            let from = perm[i] - 1;
            let to = perm[(i + 1) % m] - 1;
            len += d[from][to];
        }
        if len < best_len {
            best_len = len;
            best_tour = perm.clone();
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((best_len, best_tour))
}

/// Advance to the next permutation in lexicographic order; false once the
/// sequence is fully descending.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
