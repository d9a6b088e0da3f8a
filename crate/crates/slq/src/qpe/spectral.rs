//! Spectral sampling backend: draws register outcomes from the exact
//! measurement law Pr(m) = sum_i w_i K_b(phi_i - m/2^b) without ever
//! forming the register state.
//!
//! Two models implement the law. The materialized model eigendecomposes
//! the operator and carries explicit (phase, weight) components. The
//! virtual model serves potentials whose ground phase is known through
//! structure (constant, or a certified small modulation of 1/2): it
//! computes that phase in double-double precision straight from the
//! closed-form free spectrum, so the grid size never has to fit in
//! memory and the register width can far exceed what double precision
//! could read back.
//!
//! Outcome sampling for wide registers uses exact rejection: the target
//! kernel divided by the inverse-square proposal Q(u) proportional to
//! 1/(theta-u)^2 is (y/sin y)^2 with |y| <= pi/2 on the outcome window,
//! so acceptance is bounded below by 4/pi^2, and the proposal itself is
//! inverted exactly through the trigamma function.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::dd::{self, Dd};
use super::{
    first_order_shift, initial_state, kernel_weight, sample_from_pmf, PhaseEstimationPlan,
};
use crate::domain::{Potential, Shape, TridiagonalSystem};
use crate::eigen::leading_eigenpairs;
use crate::error::{Error, Result};

const MAX_RETAINED_MODES: usize = 64;
const MIXING_GRID: usize = 4096;
const MAX_MIXING_MODE: u32 = 33;
const ENUMERABLE_BITS: u32 = 20;
const F64_PHASE_BITS: u32 = 40;

/// Eigendecomposition-backed outcome model.
pub(crate) struct MaterializedModel {
    b: u32,
    phases: Vec<f64>,
    weights: Vec<f64>,
    pmf: Option<Vec<f64>>,
}

/// Leading eigenpairs of `t` paired with their overlap amplitudes
/// against the sine initial state: (lambda_i, a_i) ascending, plus the
/// retained probability mass sum a_i^2. Stops adding pairs once the
/// deficit drops below `delta`/10; a deficit that will not drop is a
/// capacity error.
pub(crate) fn components(t: &TridiagonalSystem, delta: f64) -> Result<(Vec<(f64, f64)>, f64)> {
    let k = t.k;
    let init = initial_state(k);
    let budget = delta / 10.0;
    let mut count = k.min(4);
    loop {
        let pairs = leading_eigenpairs(t, count, 1e-10)?;
        let comps: Vec<(f64, f64)> = pairs
            .iter()
            .map(|(lam, v)| {
                let a: f64 = v.iter().zip(&init).map(|(x, y)| x * y).sum();
                (*lam, a)
            })
            .collect();
        let mass: f64 = comps.iter().map(|(_, a)| a * a).sum();
        if 1.0 - mass < budget || count == k {
            return Ok((comps, mass.min(1.0)));
        }
        if count >= MAX_RETAINED_MODES {
            return Err(Error::Capacity(format!(
                "truncation-mass deficit {:.3e} still above budget {:.3e} after {count} modes",
                1.0 - mass,
                budget
            )));
        }
        count = (count * 2).min(k).min(MAX_RETAINED_MODES);
    }
}

impl MaterializedModel {
    pub fn build(t: &TridiagonalSystem, plan: &PhaseEstimationPlan) -> Result<MaterializedModel> {
        if plan.b > F64_PHASE_BITS {
            return Err(Error::Capacity(format!(
                "materialized phases carry about 16 digits; a {}-bit register needs more",
                plan.b
            )));
        }
        let (comps, mass) = components(t, plan.delta)?;
        let phases: Vec<f64> = comps
            .iter()
            .map(|(lam, _)| {
                let phi = lam / (4.0 * std::f64::consts::PI);
                phi - phi.floor()
            })
            .collect();
        let weights: Vec<f64> = comps.iter().map(|(_, a)| a * a / mass).collect();
        let pmf = if plan.b <= ENUMERABLE_BITS {
            let n = 1usize << plan.b;
            let mut pmf = vec![0.0f64; n];
            for (phi, w) in phases.iter().zip(&weights) {
                for (m, slot) in pmf.iter_mut().enumerate() {
                    *slot += w * kernel_weight(plan.b, phi - m as f64 / n as f64);
                }
            }
            let mut total = 0.0f64;
            let mut comp = 0.0f64;
            for p in &pmf {
                let y = p - comp;
                let t = total + y;
                comp = (t - total) - y;
                total = t;
            }
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::Numerical(format!(
                    "outcome distribution sums to {total}, expected 1"
                )));
            }
            Some(pmf)
        } else {
            None
        };
        Ok(MaterializedModel {
            b: plan.b,
            phases,
            weights,
            pmf,
        })
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.pmf.clone().expect("pmf enumerable only for b <= 20")
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> Result<u128> {
        if let Some(pmf) = &self.pmf {
            return Ok(sample_from_pmf(pmf, rng) as u128);
        }
        let mode = pick_weighted(&self.weights, rng);
        let scale = (self.b as f64).exp2();
        let y = self.phases[mode] * scale;
        let base = y.floor();
        let theta = y - base;
        let u = sample_kernel_offset(theta, self.b, rng)?;
        let modulus = 1i128 << self.b;
        Ok((base as i128 + u).rem_euclid(modulus) as u128)
    }
}

fn pick_weighted(weights: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.gen();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

struct VirtualMode {
    base: u128,
    theta: f64,
    weight: f64,
}

/// Closed-form outcome model for structured potentials at arbitrary
/// grid size.
pub(crate) struct VirtualModel {
    b: u32,
    modes: Vec<VirtualMode>,
    pub setup_ops: u64,
}

fn pi4() -> Dd {
    dd::pi().mul_pow2(2)
}

/// Free ground-family eigenvalue 4 (k+1)^2 sin^2(mode pi / (2(k+1))) in
/// double-double precision; k+1 is a power of two, so the prefactor is
/// an exact scaling.
fn free_lambda_dd(kp1: u64, mode: u32) -> Dd {
    let x = dd::pi()
        .mul(Dd::from_f64(mode as f64))
        .div(Dd::from_u128(2 * kp1 as u128));
    let s = dd::sin_taylor(x);
    let shift = 2 * kp1.trailing_zeros() as i32 + 2;
    s.mul(s).mul_pow2(shift)
}

/// Split an eigenvalue into the register's integer grid position and the
/// in-cell offset of its phase.
fn phase_parts(lambda: Dd, b: u32) -> (u128, f64) {
    let phi = lambda.div(pi4()).frac();
    let y = phi.mul_pow2(b as i32);
    let base = y.floor();
    let theta = y.sub(base).to_f64().clamp(0.0, 1.0);
    (base.to_u128(), theta)
}

impl VirtualModel {
    pub fn build(q: &Potential, plan: &PhaseEstimationPlan) -> Result<VirtualModel> {
        let kp1 = plan.k + 1;
        let mut modes = Vec::new();
        let mut setup_ops = 0u64;
        match q.shape() {
            Shape::Constant(v) => {
                let lam = free_lambda_dd(kp1, 1).add(Dd::from_f64(*v));
                let (base, theta) = phase_parts(lam, plan.b);
                modes.push(VirtualMode {
                    base,
                    theta,
                    weight: 1.0,
                });
            }
            Shape::Modulated { scale, integrand } => {
                let cm = scale * integrand.bound_m;
                let e1 = first_order_shift(q, cm, plan.eta)?;
                let ground = free_lambda_dd(kp1, 1)
                    .add(Dd::from_f64(0.5))
                    .add(Dd::from_f64(e1));
                // First-order mixing of the sine state into excited
                // modes; the coefficients come from the continuum gap
                // pi^2 (1 - mode^2) and a shared quadrature pass.
                let max_mode = MAX_MIXING_MODE.min(plan.k.min(u32::MAX as u64) as u32);
                let mut overlaps = vec![0.0f64; (max_mode as usize).saturating_sub(1)];
                let h = 1.0 / MIXING_GRID as f64;
                for i in 1..MIXING_GRID {
                    let x = i as f64 * h;
                    let e = q.offset_from_half(x);
                    let s1 = (std::f64::consts::PI * x).sin();
                    for (slot, mode) in overlaps.iter_mut().zip(2..=max_mode) {
                        *slot += e * s1 * (mode as f64 * std::f64::consts::PI * x).sin();
                    }
                }
                setup_ops += (MIXING_GRID as u64) * (max_mode as u64);
                let mut amps = vec![1.0f64];
                for (slot, mode) in overlaps.iter().zip(2..=max_mode) {
                    let gap = std::f64::consts::PI.powi(2) * (1.0 - (mode as f64) * (mode as f64));
                    amps.push(2.0 * (slot * h) / gap);
                }
                let norm: f64 = amps.iter().map(|a| a * a).sum();
                let (g_base, g_theta) = phase_parts(ground, plan.b);
                modes.push(VirtualMode {
                    base: g_base,
                    theta: g_theta,
                    weight: 1.0 / norm,
                });
                for (a, mode) in amps.iter().skip(1).zip(2..=max_mode) {
                    let lam = free_lambda_dd(kp1, mode).add(Dd::from_f64(0.5));
                    let (base, theta) = phase_parts(lam, plan.b);
                    modes.push(VirtualMode {
                        base,
                        theta,
                        weight: a * a / norm,
                    });
                }
            }
            Shape::General => {
                return Err(Error::InvalidInput(
                    "virtual spectral model requires a structured potential".into(),
                ))
            }
        }
        Ok(VirtualModel {
            b: plan.b,
            modes,
            setup_ops,
        })
    }

    /// One readout, returned as the offset of 4 pi m / 2^b from the
    /// reference energy pi^2 + 1/2, computed in extended precision so
    /// readouts far below one ulp of the eigenvalue survive.
    pub fn sample_shift(&self, rng: &mut ChaCha12Rng) -> Result<f64> {
        let pick: f64 = rng.gen();
        let mut idx = self.modes.len() - 1;
        let mut acc = 0.0;
        for (i, m) in self.modes.iter().enumerate() {
            acc += m.weight;
            if pick < acc {
                idx = i;
                break;
            }
        }
        let mode = &self.modes[idx];
        let u = sample_kernel_offset(mode.theta, self.b, rng)?;
        let modulus = 1i128 << self.b;
        let m = (mode.base as i128 + u).rem_euclid(modulus) as u128;
        let mu = Dd::from_u128(m)
            .mul(pi4())
            .mul_pow2(-(self.b as i32))
            .sub(dd::reference_energy());
        Ok(mu.to_f64())
    }
}

/// Trigamma function psi_1(x) for x > 0: recurrence up to x >= 10, then
/// the asymptotic series through the x^-9 term (about 11 correct
/// digits).
pub(crate) fn trigamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        * (1.0
            + inv
                * (0.5
                    + inv
                        * (1.0 / 6.0
                            + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0))))))
}

/// Smallest j >= 0 with psi_1(theta + j + 1) <= tau: inverts the tail
/// mass of the inverse-square proposal. Asymptotic initial guess, then
/// an exact monotone bracket-and-bisect on integers.
fn invert_tail(theta: f64, tau: f64) -> u64 {
    let psi = |j: u64| trigamma(theta + j as f64 + 1.0);
    if psi(0) <= tau {
        return 0;
    }
    let x = (1.0 + (1.0 + 2.0 * tau).sqrt()) / (2.0 * tau);
    let guess = (x - theta - 1.0).clamp(1.0, 4.6e18) as u64;
    let mut lo: u64 = 0;
    let mut hi: u64 = guess.max(1);
    let mut step: u64 = hi;
    while psi(hi) > tau {
        lo = hi;
        hi = hi.saturating_add(step);
        step = step.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if psi(mid) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Sample the integer offset u of a register outcome from its kernel
/// distribution P(u) = sin^2(pi theta) / (2^2b sin^2(pi (theta - u)/2^b))
/// over the window (-2^(b-1), 2^(b-1)], given the in-cell phase offset
/// theta in [0, 1].
///
/// Proposals come from Q(u) proportional to (theta - u)^-2 over all
/// integers, drawn by exact inverse-CDF through trigamma; P/Q equals
/// (y / sin y)^2 with y = pi (theta - u)/2^b, which the window keeps in
/// [-pi/2, pi/2], so rejection with envelope pi^2/4 is exact. Expected
/// acceptance is at least 4/pi^2.
pub(crate) fn sample_kernel_offset(theta: f64, b: u32, rng: &mut ChaCha12Rng) -> Result<i128> {
    assert!(b >= 1);
    if theta < 1e-14 {
        return Ok(0);
    }
    if 1.0 - theta < 1e-14 {
        return Ok(1);
    }
    let mass_left = trigamma(theta);
    let mass_right = trigamma(1.0 - theta);
    let total = mass_left + mass_right;
    let half = 1i128 << (b - 1);
    let scale = (b as f64).exp2();
    for _ in 0..100_000 {
        let v: f64 = rng.gen();
        let u: i128 = if v * total < mass_left {
            let tau = mass_left - v * total;
            -(invert_tail(theta, tau) as i128)
        } else {
            let tau = mass_right - (v * total - mass_left);
            1 + invert_tail(1.0 - theta, tau) as i128
        };
        if u < -half + 1 || u > half {
            continue;
        }
        let y = std::f64::consts::PI * (theta - u as f64) / scale;
        let ratio = if y.abs() < 1e-8 {
            1.0
        } else {
            let s = y / y.sin();
            s * s
        };
        let accept = ratio * 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
        if rng.gen::<f64>() < accept {
            return Ok(u);
        }
    }
    Err(Error::Numerical(
        "kernel offset sampler exhausted its iteration budget".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Backend, PipelineConfig};
    use crate::domain::{build_matrix, Potential};
    use crate::qpe::{make_plan, rep_rng};
    use std::f64::consts::PI;

    #[test]
    fn trigamma_known_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-10);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-10);
        assert!((trigamma(2.0) - (PI * PI / 6.0 - 1.0)).abs() < 1e-10);
        assert!((trigamma(10.0) - 0.105_166_335_681_685_6).abs() < 1e-11);
    }

    #[test]
    fn trigamma_reflection_identity() {
        for theta in [0.1, 0.37, 0.5, 0.93] {
            let lhs = trigamma(theta) + trigamma(1.0 - theta);
            let rhs = PI * PI / (PI * theta).sin().powi(2);
            assert!((lhs / rhs - 1.0).abs() < 1e-9, "theta {theta}");
        }
    }

    #[test]
    fn tail_inversion_matches_direct_scan() {
        let theta = 0.3;
        for frac in [0.9, 0.5, 0.1, 0.01, 1e-4] {
            let tau = trigamma(theta + 1.0) * frac;
            let j = invert_tail(theta, tau);
            assert!(trigamma(theta + j as f64 + 1.0) <= tau);
            if j > 0 {
                assert!(trigamma(theta + j as f64) > tau);
            }
        }
    }

    fn plan_for(k: u64, b: u32, backend: Backend) -> super::PhaseEstimationPlan {
        let mut plan = make_plan(0.2, 0.25, &PipelineConfig::default(), backend, 17).unwrap();
        plan.k = k;
        plan.b = b;
        plan.qubits_peak = b + (k + 1).trailing_zeros();
        plan
    }

    #[test]
    fn modal_outcome_of_free_potential() {
        let t = build_matrix(&Potential::constant(0.0), 3).unwrap();
        let plan = plan_for(3, 6, Backend::Spectral);
        let model = MaterializedModel::build(&t, &plan).unwrap();
        let pmf = model.pmf();
        let modal = pmf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(modal, 48);
        let sum: f64 = pmf.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_grid_phase_is_a_point_mass() {
        let model = MaterializedModel {
            b: 4,
            phases: vec![0.25],
            weights: vec![1.0],
            pmf: None,
        };
        let mut rng = rep_rng(5, 0);
        for _ in 0..20 {
            assert_eq!(model.sample(&mut rng).unwrap(), 4);
        }
    }

    #[test]
    fn offset_sampler_matches_kernel_law() {
        let theta = 0.3;
        let b = 6;
        let half = 1i128 << (b - 1);
        let exact: Vec<f64> = (-half + 1..=half)
            .map(|u| kernel_weight(b, (theta - u as f64) / (b as f64).exp2()))
            .collect();
        let total: f64 = exact.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut rng = rep_rng(99, 0);
        let trials = 40_000;
        let mut counts = vec![0u32; exact.len()];
        for _ in 0..trials {
            let u = sample_kernel_offset(theta, b, &mut rng).unwrap();
            counts[(u + half - 1) as usize] += 1;
        }
        let tv: f64 = exact
            .iter()
            .zip(&counts)
            .map(|(p, c)| (p - *c as f64 / trials as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn degenerate_offsets_are_deterministic() {
        let mut rng = rep_rng(1, 0);
        assert_eq!(sample_kernel_offset(1e-16, 9, &mut rng).unwrap(), 0);
        assert_eq!(sample_kernel_offset(1.0, 9, &mut rng).unwrap(), 1);
    }

    #[test]
    fn virtual_model_agrees_with_materialized_distribution() {
        let q = Potential::constant(0.0);
        let plan = plan_for(15, 9, Backend::Spectral);
        let t = build_matrix(&q, 15).unwrap();
        let pmf = MaterializedModel::build(&t, &plan).unwrap().pmf();
        let virt = VirtualModel::build(&q, &plan).unwrap();
        let mut rng = rep_rng(123, 0);
        let trials = 30_000;
        let mut counts = vec![0u32; pmf.len()];
        for _ in 0..trials {
            let shift = virt.sample_shift(&mut rng).unwrap();
            let lam = shift + super::super::reference_value();
            let m = (lam / (4.0 * PI) * 512.0).round() as usize % 512;
            counts[m] += 1;
        }
        let tv: f64 = pmf
            .iter()
            .zip(&counts)
            .map(|(p, c)| (p - *c as f64 / trials as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.03, "tv {tv}");
    }

    #[test]
    fn virtual_ground_phase_tracks_free_spectrum() {
        // k = 3: lambda = 32 - 16 sqrt(2); check the dd phase split
        // against direct arithmetic.
        let lam = free_lambda_dd(4, 1);
        assert!((lam.to_f64() - (32.0 - 16.0 * 2.0f64.sqrt())).abs() < 1e-13);
        let (base, theta) = phase_parts(lam, 6);
        let y = (32.0 - 16.0 * 2.0f64.sqrt()) / (4.0 * PI) * 64.0;
        assert_eq!(base, y.floor() as u128);
        assert!((theta - y.fract()).abs() < 1e-9);
    }

    #[test]
    fn retention_covers_smooth_potentials() {
        let q = Potential::from_fn(
            |x| 0.5 + 0.4 * (PI * x).sin() * (PI * x).sin(),
            [0.9, 0.4 * PI, 0.8 * PI * PI].map(|b: f64| b.min(1.0)),
        );
        let t = build_matrix(&q, 48).unwrap();
        let (comps, mass) = components(&t, 0.25).unwrap();
        assert!(mass > 1.0 - 0.025);
        assert!(comps.len() <= 16);
        assert!(comps[0].1.abs() > 0.99, "ground overlap {}", comps[0].1);
    }
}
