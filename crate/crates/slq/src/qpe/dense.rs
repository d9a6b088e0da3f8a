//! Dense backend: simulates the full phase-estimation register.
//!
//! The simulation works per eigencomponent of the target state, which is
//! exact because the controlled walk powers act diagonally there: each
//! component's register column starts uniform, picks up e^(i 2^t
//! lambda/2) on every basis state whose bit t is set (one pass per
//! controlled power), and goes through an explicit radix-2 inverse
//! Fourier transform. Outcome probabilities sum the squared amplitudes
//! across components. No closed-form kernel enters anywhere, which makes
//! this an independent check of the spectral law.

use num_complex::Complex64;

use super::spectral::components;
use super::PhaseEstimationPlan;
use crate::domain::TridiagonalSystem;
use crate::error::{Error, Result};

const MAX_STATE_BITS: u32 = 26;

pub(crate) struct DenseModel {
    pub pmf: Vec<f64>,
}

/// In-place DFT with negative-exponent kernel, the measurement-side
/// transform of phase estimation. Standard bit-reversal plus butterfly
/// passes; twiddles are recomputed from angle per butterfly to avoid
/// accumulation drift.
fn inverse_fourier(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> (usize::BITS - bits)) & (n - 1);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        for start in (0..n).step_by(len) {
            for off in 0..len / 2 {
                let w = Complex64::from_polar(1.0, ang * off as f64);
                let a = buf[start + off];
                let b = buf[start + off + len / 2] * w;
                buf[start + off] = a + b;
                buf[start + off + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
}

impl DenseModel {
    pub fn build(t: &TridiagonalSystem, plan: &PhaseEstimationPlan) -> Result<DenseModel> {
        if plan.b > MAX_STATE_BITS {
            return Err(Error::Capacity(format!(
                "dense register of 2^{} amplitudes exceeds memory budget",
                plan.b
            )));
        }
        let dim = 1usize << plan.b;
        let (comps, mass) = components(t, plan.delta)?;
        let mut pmf = vec![0.0f64; dim];
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        for (lam, a) in &comps {
            for slot in col.iter_mut() {
                *slot = Complex64::new(*a, 0.0);
            }
            for tbit in 0..plan.b {
                let w = Complex64::from_polar(1.0, (tbit as f64).exp2() * lam / 2.0);
                for (l, slot) in col.iter_mut().enumerate() {
                    if (l >> tbit) & 1 == 1 {
                        *slot *= w;
                    }
                }
            }
            inverse_fourier(&mut col);
            let scale = 1.0 / (dim as f64 * dim as f64);
            for (p, amp) in pmf.iter_mut().zip(&col) {
                *p += amp.norm_sqr() * scale;
            }
        }
        for p in pmf.iter_mut() {
            *p /= mass;
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "dense outcome distribution sums to {total}"
            )));
        }
        Ok(DenseModel { pmf })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Backend, PipelineConfig};
    use crate::domain::{build_matrix, Potential};
    use crate::qpe::spectral::MaterializedModel;
    use crate::qpe::{make_plan, rep_rng, sample_from_pmf};

    fn plan_for(k: u64, b: u32, backend: Backend) -> PhaseEstimationPlan {
        let mut plan = make_plan(0.2, 0.25, &PipelineConfig::default(), backend, 17).unwrap();
        plan.k = k;
        plan.b = b;
        plan.qubits_peak = b + (k + 1).trailing_zeros();
        plan
    }

    #[test]
    fn gate_simulation_reproduces_kernel_law() {
        let q = Potential::from_fn(|x| x, [1.0, 1.0, 0.0]);
        let t = build_matrix(&q, 7).unwrap();
        let dense = DenseModel::build(&t, &plan_for(7, 6, Backend::Dense)).unwrap();
        let spectral = MaterializedModel::build(&t, &plan_for(7, 6, Backend::Spectral))
            .unwrap()
            .pmf();
        let tv: f64 = dense
            .pmf
            .iter()
            .zip(&spectral)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 1e-6, "total variation {tv}");
    }

    #[test]
    fn modal_outcome_without_kernel_formula() {
        let t = build_matrix(&Potential::constant(0.0), 3).unwrap();
        let dense = DenseModel::build(&t, &plan_for(3, 6, Backend::Dense)).unwrap();
        let modal = dense
            .pmf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(modal, 48);
    }

    #[test]
    fn identical_uniforms_give_identical_samples() {
        let q = Potential::from_fn(|x| x, [1.0, 1.0, 0.0]);
        let t = build_matrix(&q, 7).unwrap();
        let dense = DenseModel::build(&t, &plan_for(7, 6, Backend::Dense)).unwrap();
        let spectral = MaterializedModel::build(&t, &plan_for(7, 6, Backend::Spectral)).unwrap();
        let mut r1 = rep_rng(42, 0);
        let mut r2 = rep_rng(42, 0);
        for _ in 0..500 {
            let a = sample_from_pmf(&dense.pmf, &mut r1);
            let b = spectral.sample(&mut r2).unwrap();
            assert_eq!(a as u128, b);
        }
    }

    #[test]
    fn register_size_is_capped() {
        let t = build_matrix(&Potential::constant(0.0), 3).unwrap();
        assert!(DenseModel::build(&t, &plan_for(3, 27, Backend::Dense)).is_err());
    }

    #[test]
    fn transform_of_pure_tone_is_a_point_mass() {
        // A register holding e^(2 pi i l m0 / n) transforms to the basis
        // state m0 exactly.
        let n = 64usize;
        let m0 = 13usize;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|l| {
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (l * m0) as f64 / n as f64)
            })
            .collect();
        inverse_fourier(&mut buf);
        for (m, amp) in buf.iter().enumerate() {
            if m == m0 {
                assert!((amp.norm() - n as f64).abs() < 1e-9);
            } else {
                assert!(amp.norm() < 1e-9, "leak at {m}: {amp}");
            }
        }
    }
}
