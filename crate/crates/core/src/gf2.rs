//! Dense square matrices over GF(2).
//!
//! Rows are packed into `u64` words, least-significant bit first, so entry
//! `(i, j)` lives in bit `j % 64` of word `j / 64` of row `i`. Multiplication
//! XORs whole rows of the right operand selected by the set bits of each row of
//! the left operand, which is the usual word-parallel trick for F₂.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::poly::BinaryPoly;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("matrix does not satisfy A^{bound} = I")]
    NotAnnihilated { bound: BigUint },
    #[error("block list is empty")]
    EmptyBlocks,
    #[error("polynomial must have degree at least 1")]
    DegeneratePolynomial,
    #[error("invalid factorization: {0}")]
    InvalidFactorization(&'static str),
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

/// Square matrix over GF(2), bit-packed by rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zero(n: usize) -> Self {
        let stride = words_for(n);
        Self {
            n,
            stride,
            words: vec![0; n * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries. Any non-zero byte counts as 1.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let n = rows.len();
        if n == 0 {
            return Err(Gf2Error::DimensionTooSmall { min: 1, got: 0 });
        }
        let mut m = Self::zero(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Gf2Error::RaggedRows {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v != 0);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        (self.words[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.n && j < self.n);
        let w = &mut self.words[i * self.stride + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            self.row_words(i).iter().enumerate().all(|(w, &word)| {
                let expected = if i / WORD_BITS == w {
                    1u64 << (i % WORD_BITS)
                } else {
                    0
                };
                word == expected
            })
        })
    }

    pub fn checked_mul(&self, rhs: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.n != rhs.n {
            return Err(Gf2Error::DimensionMismatch(self.n, rhs.n));
        }
        let mut out = BitMatrix::zero(self.n);
        for i in 0..self.n {
            let acc = &mut out.words[i * self.stride..(i + 1) * self.stride];
            for (w, &word) in self.row_words(i).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let k = w * WORD_BITS + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    for (a, b) in acc.iter_mut().zip(rhs.row_words(k)) {
                        *a ^= *b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gauss–Jordan elimination on `[A | I]`.
    pub fn inverse(&self) -> Result<BitMatrix, Gf2Error> {
        let n = self.n;
        let mut left = self.clone();
        let mut right = BitMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| left.get(r, col))
                .ok_or(Gf2Error::Singular)?;
            if pivot != col {
                left.swap_rows(pivot, col);
                right.swap_rows(pivot, col);
            }
            let pivot_left = left.row_words(col).to_vec();
            let pivot_right = right.row_words(col).to_vec();
            for r in 0..n {
                if r != col && left.get(r, col) {
                    xor_into(left.row_words_mut(r), &pivot_left);
                    xor_into(right.row_words_mut(r), &pivot_right);
                }
            }
        }
        Ok(right)
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.n
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..self.n {
            let Some(pivot) = (rank..self.n).find(|&r| m.get(r, col)) else {
                continue;
            };
            m.swap_rows(pivot, rank);
            let pivot_row = m.row_words(rank).to_vec();
            for r in rank + 1..self.n {
                if m.get(r, col) {
                    xor_into(m.row_words_mut(r), &pivot_row);
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Left-to-right square-and-multiply. Not constant time.
    pub fn pow(&self, e: &BigUint) -> BitMatrix {
        let mut acc = BitMatrix::identity(self.n);
        for i in (0..e.bits()).rev() {
            acc = &acc * &acc;
            if e.bit(i) {
                acc = &acc * self;
            }
        }
        acc
    }

    pub fn pow_u64(&self, e: u64) -> BitMatrix {
        self.pow(&BigUint::from(e))
    }

    /// Exact multiplicative order, given a multiple of it in factored form.
    ///
    /// Starts from `bound.value()` and strips each prime factor for as long as
    /// the reduced exponent still annihilates the matrix.
    pub fn order(&self, bound: &FactoredOrder) -> Result<BigUint, Gf2Error> {
        if !self.pow(bound.value()).is_identity() {
            return Err(Gf2Error::NotAnnihilated {
                bound: bound.value().clone(),
            });
        }
        let mut d = bound.value().clone();
        for (q, k) in bound.factors() {
            for _ in 0..*k {
                let (reduced, rem) = d.div_rem(q);
                debug_assert!(rem.is_zero());
                if self.pow(&reduced).is_identity() {
                    d = reduced;
                } else {
                    break;
                }
            }
        }
        Ok(d)
    }

    /// `X · A · X⁻¹`.
    pub fn conjugate_by(&self, x: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        let x_inv = x.inverse()?;
        conjugate_with_inverse(x, self, &x_inv)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
        let mut m = BitMatrix::zero(n);
        let tail = n % WORD_BITS;
        for i in 0..n {
            let row = m.row_words_mut(i);
            for w in row.iter_mut() {
                *w = rng.next_u64();
            }
            if tail != 0 {
                if let Some(last) = row.last_mut() {
                    *last &= (1u64 << tail) - 1;
                }
            }
        }
        m
    }

    /// Entries as a vector of 0/1 rows; handy for tests and debugging.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            let row: String = (0..self.n)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

impl Mul for &BitMatrix {
    type Output = BitMatrix;

    /// Panics on dimension mismatch; use [`BitMatrix::checked_mul`] otherwise.
    fn mul(self, rhs: &BitMatrix) -> BitMatrix {
        match self.checked_mul(rhs) {
            Ok(m) => m,
            Err(e) => panic!("{e}"),
        }
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// `X · A · X⁻¹` with the inverse supplied by the caller.
pub fn conjugate_with_inverse(
    x: &BitMatrix,
    a: &BitMatrix,
    x_inv: &BitMatrix,
) -> Result<BitMatrix, Gf2Error> {
    x.checked_mul(a)?.checked_mul(x_inv)
}

pub fn conjugate(x: &BitMatrix, a: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    a.conjugate_by(x)
}

/// Uniform element of GL(n, 2) by rejection sampling.
pub fn random_nonsingular<R: RngCore + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<BitMatrix, Gf2Error> {
    if n == 0 {
        return Err(Gf2Error::DimensionTooSmall { min: 1, got: 0 });
    }
    loop {
        let m = BitMatrix::random(n, rng);
        if m.is_invertible() {
            return Ok(m);
        }
    }
}

/// Two nonsingular matrices with `R·S ≠ S·R`.
pub fn random_noncommuting_pair<R: RngCore + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<(BitMatrix, BitMatrix), Gf2Error> {
    if n < 2 {
        return Err(Gf2Error::DimensionTooSmall { min: 2, got: n });
    }
    loop {
        let r = random_nonsingular(n, rng)?;
        let s = random_nonsingular(n, rng)?;
        if &r * &s != &s * &r {
            return Ok((r, s));
        }
    }
}

/// Companion matrix of a polynomial of degree `m ≥ 1`: ones on the
/// superdiagonal, the low coefficients `c₀ … c_{m-1}` along the last row.
pub fn companion(poly: &BinaryPoly) -> Result<BitMatrix, Gf2Error> {
    let m = match poly.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(Gf2Error::DegeneratePolynomial),
    };
    let mut c = BitMatrix::zero(m);
    for i in 0..m - 1 {
        c.set(i, i + 1, true);
    }
    for j in 0..m {
        c.set(m - 1, j, poly.coeff(j));
    }
    Ok(c)
}

pub fn block_diag(blocks: &[BitMatrix]) -> Result<BitMatrix, Gf2Error> {
    if blocks.is_empty() {
        return Err(Gf2Error::EmptyBlocks);
    }
    let n = blocks.iter().map(BitMatrix::dim).sum();
    let mut out = BitMatrix::zero(n);
    let mut offset = 0;
    for b in blocks {
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if b.get(i, j) {
                    out.set(offset + i, offset + j, true);
                }
            }
        }
        offset += b.dim();
    }
    Ok(out)
}

/// An integer together with its factorization into distinct prime powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredOrder {
    factors: Vec<(BigUint, u32)>,
    value: BigUint,
}

impl FactoredOrder {
    /// The primes are trusted; only distinctness and positivity are checked.
    pub fn new(factors: Vec<(BigUint, u32)>) -> Result<Self, Gf2Error> {
        let mut value = BigUint::one();
        for (i, (q, k)) in factors.iter().enumerate() {
            if *q < BigUint::from(2u8) || *k == 0 {
                return Err(Gf2Error::InvalidFactorization(
                    "prime < 2 or zero multiplicity",
                ));
            }
            if factors[..i].iter().any(|(other, _)| other == q) {
                return Err(Gf2Error::InvalidFactorization("repeated prime"));
            }
            value *= q.pow(*k);
        }
        Ok(Self { factors, value })
    }

    pub fn from_primes<I: IntoIterator<Item = u128>>(primes: I) -> Result<Self, Gf2Error> {
        let mut factors: Vec<(BigUint, u32)> = Vec::new();
        for q in primes {
            let q = BigUint::from(q);
            match factors.iter_mut().find(|(p, _)| *p == q) {
                Some((_, k)) => *k += 1,
                None => factors.push((q, 1)),
            }
        }
        Self::new(factors)
    }

    pub fn factors(&self) -> &[(BigUint, u32)] {
        &self.factors
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }
}

/// Samples a uniform integer in `[low, high]`.
pub(crate) fn uniform_in<R: RngCore + ?Sized>(
    rng: &mut R,
    low: &BigUint,
    high: &BigUint,
) -> BigUint {
    use num_bigint::RandBigInt;
    rng.gen_biguint_range(low, &(high + 1u8))
}
