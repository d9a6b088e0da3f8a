//! Double-double arithmetic: unevaluated sums of two doubles giving
//! roughly 31 significant decimal digits.
//!
//! Phase readout turns an eigenvalue into a fraction of 4*pi, scales it
//! by 2^b, and later undoes both steps on an integer outcome. For large
//! register widths the round trip must preserve differences near 1e-25,
//! far below one ulp of the values involved, so those few steps run in
//! this extended format. Only the handful of operations that path needs
//! are implemented.

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn zero() -> Dd {
        Dd { hi: 0.0, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let (s2, e2) = two_sum(self.lo, o.lo);
        let (s1, e1) = quick_two_sum(s1, e1 + s2);
        Dd::new(s1, e1 + e2)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::new(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r.hi / o.hi;
        Dd::new(q1, q2).add(Dd::from_f64(q3))
    }

    /// Exact scaling by a power of two.
    pub fn mul_pow2(self, n: i32) -> Dd {
        let f = (n as f64).exp2();
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn floor(self) -> Dd {
        let fhi = self.hi.floor();
        if fhi == self.hi {
            Dd::new(fhi, self.lo.floor())
        } else {
            Dd { hi: fhi, lo: 0.0 }
        }
    }

    /// Fractional part, clamped into [0, 1).
    pub fn frac(self) -> Dd {
        let f = self.sub(self.floor());
        if f.hi < 0.0 {
            Dd::zero()
        } else if f.hi >= 1.0 {
            Dd { hi: 1.0, lo: 0.0 }.sub(Dd {
                hi: f64::EPSILON,
                lo: 0.0,
            })
        } else {
            f
        }
    }

    /// Exact conversion of an integer below 2^106.
    pub fn from_u128(m: u128) -> Dd {
        let hi = m as f64;
        let hi_u = hi as u128;
        let lo = if hi_u >= m {
            -((hi_u - m) as f64)
        } else {
            (m - hi_u) as f64
        };
        Dd::new(hi, lo)
    }

    /// Value as an integer, for nonnegative integer-valued inputs
    /// (e.g. the result of [`Dd::floor`]).
    pub fn to_u128(self) -> u128 {
        let hi = self.hi as i128;
        let lo = self.lo as i128;
        (hi + lo) as u128
    }
}

/// Pi to double-double precision.
pub(crate) fn pi() -> Dd {
    Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    }
}

/// The reference ground energy pi^2 + 1/2 that modulated potentials
/// perturb around.
pub(crate) fn reference_energy() -> Dd {
    pi().mul(pi()).add(Dd::from_f64(0.5))
}

/// sin(x) by Taylor series, valid for |x| <= 2. The series is summed
/// from a fresh power each term; sixty terms overshoot the precision of
/// the format by a wide margin.
pub(crate) fn sin_taylor(x: Dd) -> Dd {
    debug_assert!(x.hi.abs() <= 2.0 + 1e-9);
    let x2 = x.mul(x);
    let mut term = x;
    let mut sum = x;
    for i in 1..60u32 {
        let d = (2 * i) as f64 * (2 * i + 1) as f64;
        term = term.mul(x2).div(Dd::from_f64(-d));
        let next = sum.add(term);
        if next == sum {
            break;
        }
        sum = next;
    }
    sum
}
