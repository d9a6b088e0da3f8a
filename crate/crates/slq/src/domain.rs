//! Shared domain types: potentials on [0,1], smooth integrands, the
//! discretized tridiagonal operator, and estimates with confidence.
//!
//! A potential q lives in the admissible class when q maps [0,1] into
//! [0,1] and q, q', q'' are all bounded by 1 in the sup norm. The
//! pipeline manufactures its potentials as q(x) = 1/2 + c*f(x) from a
//! smooth integrand f, with c small enough that admissibility holds by
//! construction; such potentials remember their building blocks (the
//! [`Shape`]), which the backends exploit for certified fast paths.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ledger::QueryLedger;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a potential was built. Backends dispatch on this: constant and
/// modulated potentials admit closed-form or perturbative treatment at
/// any accuracy, while general potentials must go through the matrix
/// machinery with its floating-point floors.
#[derive(Clone)]
pub enum Shape {
    /// q(x) = v everywhere.
    Constant(f64),
    /// q(x) = 1/2 + scale * f(x).
    Modulated {
        scale: f64,
        integrand: SmoothIntegrand,
    },
    /// No structure known beyond the sup bounds.
    General,
}

/// A twice continuously differentiable function q: [0,1] -> R with
/// caller-supplied sup-norm bounds for q, q', q''.
///
/// Every evaluation through [`Potential::eval`] ticks a shared counter;
/// estimators read the counter before and after a run to bill oracle
/// access. Clones share the counter.
#[derive(Clone)]
pub struct Potential {
    eval: RealFn,
    pub sup_bounds: [f64; 3],
    shape: Shape,
    calls: Arc<AtomicU64>,
}

impl Potential {
    /// Wrap an arbitrary evaluation rule with its three sup bounds. The
    /// bounds are trusted here and spot-checked by [`check_admissible`]
    /// or at matrix-build time.
    pub fn from_fn<F>(f: F, sup_bounds: [f64; 3]) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Potential {
            eval: Arc::new(f),
            sup_bounds,
            shape: Shape::General,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// The constant potential q = v.
    pub fn constant(v: f64) -> Self {
        Potential {
            eval: Arc::new(move |_| v),
            sup_bounds: [v.abs(), 0.0, 0.0],
            shape: Shape::Constant(v),
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.eval)(x)
    }

    /// The offset q(x) - 1/2, at full relative precision where the shape
    /// allows it.
    ///
    /// For modulated potentials the offset is computed directly as
    /// c*f(x). Going through [`eval`](Self::eval) would form 1/2 + c*f(x)
    /// as a single double first, quantizing the offset to half an ulp of
    /// 1/2 (about 5.6e-17); certified shift estimates built on many such
    /// samples inherit that as an absolute accuracy floor, where this
    /// route keeps the error relative. Other shapes fall back to the
    /// plain subtraction. Bills the query counters exactly like `eval`.
    pub fn offset_from_half(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Modulated { scale, integrand } => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                scale * integrand.eval(x)
            }
            _ => self.eval(x) - 0.5,
        }
    }

    /// Evaluations so far, shared across clones.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Admissibility: all three sup bounds at most 1, and the sampled
    /// range inside [0,1]. Sampling here does not tick the query counter;
    /// validation is not part of any algorithm's query plan.
    pub fn check_admissible(&self, grid: usize) -> Result<()> {
        for (i, b) in self.sup_bounds.iter().enumerate() {
            if !(*b >= 0.0) || *b > 1.0 + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "sup bound of derivative order {i} is {b}, outside [0, 1]"
                )));
            }
        }
        let g = grid.max(2);
        for i in 0..=g {
            let x = i as f64 / g as f64;
            let v = (self.eval)(x);
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "potential leaves [0,1]: q({x}) = {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A twice continuously differentiable integrand f: [0,1] -> R with a
/// single bound M dominating the sup norms of f, f', f''. Evaluations
/// tick a shared counter, as for [`Potential`].
#[derive(Clone)]
pub struct SmoothIntegrand {
    eval: RealFn,
    pub bound_m: f64,
    calls: Arc<AtomicU64>,
}

impl SmoothIntegrand {
    pub fn from_fn<F>(f: F, bound_m: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(bound_m > 0.0, "class bound must be positive");
        SmoothIntegrand {
            eval: Arc::new(f),
            bound_m,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// The constant integrand f = v, with the tight class bound |v|.
    pub fn constant(v: f64) -> Self {
        SmoothIntegrand::from_fn(move |_| v, v.abs().max(f64::MIN_POSITIVE))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.eval)(x)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// q(x) = 1/2 + c*f(x). Rejects c outside (0, 1/(2M)]: beyond that the
/// range or the derivative bounds of the admissible class would break.
/// The resulting potential's sup bounds are (1/2 + cM, cM, cM), and each
/// evaluation forwards to f (ticking both counters).
pub fn potential_from_integrand(f: &SmoothIntegrand, c: f64) -> Result<Potential> {
    let m = f.bound_m;
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {c}"
        )));
    }
    if c > 1.0 / (2.0 * m) + 1e-15 {
        return Err(Error::InvalidInput(format!(
            "scale {c} exceeds admissibility limit 1/(2M) = {}",
            1.0 / (2.0 * m)
        )));
    }
    let inner = f.clone();
    Ok(Potential {
        eval: Arc::new(move |x| 0.5 + c * inner.eval(x)),
        sup_bounds: [0.5 + c * m, (c * m).min(1.0), (c * m).min(1.0)],
        shape: Shape::Modulated {
            scale: c,
            integrand: f.clone(),
        },
        calls: Arc::new(AtomicU64::new(0)),
    })
}

/// The k x k symmetric tridiagonal discretization of -u'' + q u on the
/// interior grid x_i = (i+1)/(k+1): diagonal 2(k+1)^2 + q(x_i), constant
/// off-diagonal -(k+1)^2.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub k: usize,
    pub diag: Vec<f64>,
    pub offdiag: f64,
}

impl TridiagonalSystem {
    /// Gershgorin enclosure of the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let e2 = 2.0 * self.offdiag.abs();
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - e2;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + e2;
        (lo, hi)
    }

    /// Row-sum norm, the natural scale for residual tolerances.
    pub fn norm_inf(&self) -> f64 {
        let e2 = 2.0 * self.offdiag.abs();
        self.diag.iter().map(|d| d.abs() + e2).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }
}

/// Build the discretized operator for an admissible potential. The k
/// diagonal samples are genuine oracle reads and tick q's counter;
/// sampled values outside [0,1] are rejected.
pub fn build_matrix(q: &Potential, k: usize) -> Result<TridiagonalSystem> {
    if k == 0 {
        return Err(Error::InvalidInput(
            "matrix dimension must be positive".into(),
        ));
    }
    for (i, b) in q.sup_bounds.iter().enumerate() {
        if *b > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "potential is not admissible: derivative-order-{i} bound {b} > 1"
            )));
        }
    }
    let kp1 = (k + 1) as f64;
    let lap = kp1 * kp1;
    let mut diag = Vec::with_capacity(k);
    for i in 0..k {
        let x = (i + 1) as f64 / kp1;
        let v = q.eval(x);
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::InvalidInput(format!(
                "potential leaves [0,1] at grid point {x}: {v}"
            )));
        }
        diag.push(2.0 * lap + v);
    }
    Ok(TridiagonalSystem {
        k,
        diag,
        offdiag: -lap,
    })
}

/// An estimate together with the accuracy it guarantees, the failure
/// probability it was run at, and what it cost.
#[derive(Debug, Clone)]
pub struct EstimateWithConfidence {
    pub value: f64,
    pub eta: f64,
    pub delta: f64,
    pub ledger: QueryLedger,
    /// For estimates of quantities that sit a hair away from a large
    /// known reference (eigenvalues near pi^2 + 1/2), the small offset
    /// from that reference, carried at full precision. `value` equals
    /// reference + shift rounded to one double; downstream consumers that
    /// divide the shift by a tiny scale must use this field, not the
    /// difference of two doubles.
    pub shift_from_reference: Option<f64>,
    /// Set when the requested accuracy made the answer free (for
    /// example, integrating to within epsilon when the integral cannot
    /// exceed epsilon); the value is returned without running anything.
    pub trivial: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matrix_k3() {
        let q = Potential::constant(0.0);
        let t = build_matrix(&q, 3).unwrap();
        assert_eq!(t.diag, vec![32.0, 32.0, 32.0]);
        assert_eq!(t.offdiag, -16.0);
    }

    #[test]
    fn constant_one_matrix_k1() {
        let q = Potential::constant(1.0);
        let t = build_matrix(&q, 1).unwrap();
        assert_eq!(t.diag, vec![9.0]);
        assert_eq!(t.offdiag, -4.0);
    }

    #[test]
    fn linear_potential_grid_samples() {
        let q = Potential::from_fn(|x| x, [1.0, 1.0, 0.0]);
        let t = build_matrix(&q, 3).unwrap();
        assert_eq!(t.diag, vec![32.25, 32.5, 32.75]);
    }

    #[test]
    fn build_rejects_k_zero_and_bad_range() {
        let q = Potential::constant(0.5);
        assert!(build_matrix(&q, 0).is_err());
        let bad = Potential::from_fn(|x| 1.5 * x, [1.0, 1.0, 0.0]);
        assert!(build_matrix(&bad, 7).is_err());
    }

    #[test]
    fn matrix_reads_are_counted() {
        let q = Potential::constant(0.3);
        build_matrix(&q, 5).unwrap();
        assert_eq!(q.calls(), 5);
    }

    #[test]
    fn gershgorin_contains_admissible_spectrum() {
        // For any admissible q the whole spectrum sits in
        // [0, 4(k+1)^2 + 1].
        for k in [1usize, 3, 10, 64] {
            let q = Potential::from_fn(
                |x| 0.5 + 0.5 * (std::f64::consts::TAU * x).sin().powi(2),
                [1.0, 1.0, 1.0],
            );
            let t = build_matrix(&q, k).unwrap();
            let (lo, hi) = t.gershgorin();
            let kp1 = (k + 1) as f64;
            assert!(lo >= -1e-9);
            assert!(hi <= 4.0 * kp1 * kp1 + 1.0 + 1e-9);
        }
    }

    #[test]
    fn modulated_potential_round_trips() {
        let f = SmoothIntegrand::from_fn(
            |x| (std::f64::consts::TAU * x).sin(),
            std::f64::consts::TAU * std::f64::consts::TAU,
        );
        let c = 0.01;
        let q = potential_from_integrand(&f, c).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let back = (q.eval(x) - 0.5) / c;
            assert!((back - f.eval(x)).abs() < 1e-12);
        }
        match q.shape() {
            Shape::Modulated { scale, .. } => assert_eq!(*scale, c),
            _ => panic!("modulated potential lost its construction"),
        }
    }

    #[test]
    fn modulated_scale_limit() {
        let f = SmoothIntegrand::constant(1.0);
        assert!(potential_from_integrand(&f, 0.5).is_ok());
        assert!(potential_from_integrand(&f, 0.5001).is_err());
        assert!(potential_from_integrand(&f, 0.0).is_err());
        let q = potential_from_integrand(&f, 0.5).unwrap();
        assert!((q.eval(0.7) - 1.0).abs() < 1e-15);
        q.check_admissible(64).unwrap();
    }

    #[test]
    fn zero_integrand_gives_flat_half() {
        let f = SmoothIntegrand::from_fn(|_| 0.0, 1.0);
        let q = potential_from_integrand(&f, 0.25).unwrap();
        for i in 0..=10 {
            assert_eq!(q.eval(i as f64 / 10.0), 0.5);
        }
    }

    #[test]
    fn admissibility_check_catches_range_escape() {
        let q = Potential::from_fn(
            |x| 0.5 + 0.6 * (2.0 * std::f64::consts::PI * x).sin(),
            [1.0, 1.0, 1.0],
        );
        assert!(q.check_admissible(256).is_err());
        assert_eq!(q.calls(), 0);
    }

    #[test]
    fn counters_shared_across_clones() {
        let q = Potential::constant(0.1);
        let q2 = q.clone();
        q.eval(0.5);
        q2.eval(0.25);
        assert_eq!(q.calls(), 2);
    }
}
