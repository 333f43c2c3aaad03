//! Minimal binary floating point with a big-integer mantissa.
//!
//! Only what the cancelling double series needs: add, subtract, multiply,
//! scaling by machine integers, one general division and conversion to and
//! from `f64`. Every operation truncates to the working precision.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// `mant * 2^exp`, kept to at most `prec` mantissa bits.
#[derive(Debug, Clone, PartialEq)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_u64(x: u64) -> Self {
        BigFloat {
            mant: BigInt::from(x),
            exp: 0,
        }
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "BigFloat::from_f64 on non-finite value");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        BigFloat {
            mant: BigInt::from(m) * sign,
            exp: e,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// `floor(log2 |x|)`, or `None` for zero.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 + self.exp)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let shift = bits - 64;
        let (m, e) = if shift > 0 {
            (&self.mant >> (shift as usize), self.exp + shift)
        } else {
            (self.mant.clone(), self.exp)
        };
        let mf = m.to_f64().unwrap_or(f64::NAN);
        if e > 2000 {
            return mf.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0;
        }
        // split the scaling so intermediate powers stay finite
        let half = e / 2;
        mf * 2f64.powi(half as i32) * 2f64.powi((e - half) as i32)
    }

    fn normalize(mut self, prec: u32) -> Self {
        let bits = self.mant.bits();
        if bits > prec as u64 {
            let shift = bits - prec as u64;
            self.mant >>= shift as usize;
            self.exp += shift as i64;
        }
        self
    }

    pub fn neg(mut self) -> Self {
        self.mant = -self.mant;
        self
    }

    pub fn mul(&self, other: &BigFloat, prec: u32) -> BigFloat {
        BigFloat {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
        .normalize(prec)
    }

    pub fn mul_u64(&self, k: u64, prec: u32) -> BigFloat {
        BigFloat {
            mant: &self.mant * k,
            exp: self.exp,
        }
        .normalize(prec)
    }

    pub fn div_u64(&self, k: u64, prec: u32) -> BigFloat {
        assert!(k != 0, "division by zero");
        let extra = 64 + prec as usize;
        BigFloat {
            mant: (&self.mant << extra) / k,
            exp: self.exp - extra as i64,
        }
        .normalize(prec)
    }

    pub fn div(&self, other: &BigFloat, prec: u32) -> BigFloat {
        assert!(!other.is_zero(), "division by zero");
        let extra = prec as usize + other.mant.bits() as usize + 2;
        BigFloat {
            mant: (&self.mant << extra) / &other.mant,
            exp: self.exp - other.exp - extra as i64,
        }
        .normalize(prec)
    }

    pub fn add(&self, other: &BigFloat, prec: u32) -> BigFloat {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (hi, lo) = if self.exp >= other.exp {
            (self, other)
        } else {
            (other, self)
        };
        let hi_top = hi.mant.bits() as i64 + hi.exp;
        let lo_top = lo.mant.bits() as i64 + lo.exp;
        // the smaller operand sits entirely below the working precision
        if lo_top < hi_top - prec as i64 - 2 {
            return hi.clone();
        }
        if hi_top < lo_top - prec as i64 - 2 {
            return lo.clone();
        }
        let shift = (hi.exp - lo.exp) as usize;
        BigFloat {
            mant: (&hi.mant << shift) + &lo.mant,
            exp: lo.exp,
        }
        .normalize(prec)
    }

    pub fn sub(&self, other: &BigFloat, prec: u32) -> BigFloat {
        self.add(&other.clone().neg(), prec)
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_arithmetic() {
        for x in [1.0, -3.5, 1e-300, 6.02e23, 5e-324, 0.1] {
            assert_eq!(BigFloat::from_f64(x).to_f64(), x);
        }
        let p = 200;
        let a = BigFloat::from_f64(1e20);
        let b = BigFloat::from_f64(1.0);
        // (1e20 + 1) - 1e20 = 1 exactly, which f64 cannot do
        let s = a.add(&b, p).sub(&a, p);
        assert_eq!(s.to_f64(), 1.0);
        let third = BigFloat::from_u64(1).div_u64(3, p);
        assert!((third.mul_u64(3, p).to_f64() - 1.0).abs() < 1e-15);
        let q = BigFloat::from_f64(7.0).div(&BigFloat::from_f64(2.0), p);
        assert_eq!(q.to_f64(), 3.5);
    }
}
