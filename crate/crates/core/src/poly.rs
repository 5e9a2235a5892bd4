//! Polynomials over GF(2), stored as the bit pattern of their coefficients.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

/// Bit `i` of the backing integer is the coefficient of `x^i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryPoly(BigUint);

impl BinaryPoly {
    pub fn from_bits(bits: BigUint) -> Self {
        Self(bits)
    }

    /// `from_exponents(&[5, 2, 0])` is `x⁵ + x² + 1`. Repeated exponents cancel.
    pub fn from_exponents(exponents: &[usize]) -> Self {
        let mut bits = BigUint::zero();
        for &e in exponents {
            let on = bits.bit(e as u64);
            bits.set_bit(e as u64, !on);
        }
        Self(bits)
    }

    pub fn bits(&self) -> &BigUint {
        &self.0
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.0.is_zero() {
            None
        } else {
            Some(self.0.bits() as usize - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.0.bit(i as u64)
    }

    pub fn exponents(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.0.bits() as usize)
            .filter(|&i| self.coeff(i))
            .collect();
        out.reverse();
        out
    }
}

impl fmt::Display for BinaryPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let exps = self.exponents();
        if exps.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = exps
            .iter()
            .map(|&e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{e}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl fmt::Debug for BinaryPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPoly({self})")
    }
}
