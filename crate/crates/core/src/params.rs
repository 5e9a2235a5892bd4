//! Degree table, primitivity testing, and generation of the secret master
//! matrix `M = B·N·B⁻¹` whose multiplicative order is `6p`.
//!
//! `N = blockdiag(D, C^cofactor)` where `C` is the companion matrix of a
//! primitive polynomial of degree `m` and `D` is a 4×4 block of exact order 6.
//! No element of GL(3, 2) has order 6, so `D` cannot be 3×3 and the matrix
//! dimension is `n = m + 4`.

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix, FactoredOrder};
use crate::poly::BinaryPoly;

pub const ORDER6_BLOCK_DIM: usize = 4;

/// Attempts for every rejection-sampling loop in the crate.
pub const MAX_ATTEMPTS: usize = 1000;

/// A built-in row: the prime factorization of `2^m − 1`, the designated large
/// prime `p`, and a default primitive polynomial.
#[derive(Debug, Clone, Copy)]
pub struct DegreeEntry {
    pub m: usize,
    pub prime_factors: &'static [u128],
    pub p: u128,
    pub default_poly: &'static [usize],
}

const DEGREES: &[DegreeEntry] = &[
    DegreeEntry {
        m: 2,
        prime_factors: &[3],
        p: 3,
        default_poly: &[2, 1, 0],
    },
    DegreeEntry {
        m: 3,
        prime_factors: &[7],
        p: 7,
        default_poly: &[3, 1, 0],
    },
    DegreeEntry {
        m: 5,
        prime_factors: &[31],
        p: 31,
        default_poly: &[5, 2, 0],
    },
    DegreeEntry {
        m: 7,
        prime_factors: &[127],
        p: 127,
        default_poly: &[7, 1, 0],
    },
    DegreeEntry {
        m: 11,
        prime_factors: &[23, 89],
        p: 89,
        default_poly: &[11, 2, 0],
    },
    DegreeEntry {
        m: 13,
        prime_factors: &[8191],
        p: 8191,
        default_poly: &[13, 4, 3, 1, 0],
    },
    DegreeEntry {
        m: 17,
        prime_factors: &[131_071],
        p: 131_071,
        default_poly: &[17, 3, 0],
    },
    DegreeEntry {
        m: 19,
        prime_factors: &[524_287],
        p: 524_287,
        default_poly: &[19, 5, 2, 1, 0],
    },
    DegreeEntry {
        m: 23,
        prime_factors: &[47, 178_481],
        p: 178_481,
        default_poly: &[23, 5, 0],
    },
    DegreeEntry {
        m: 31,
        prime_factors: &[2_147_483_647],
        p: 2_147_483_647,
        default_poly: &[31, 3, 0],
    },
    DegreeEntry {
        m: 61,
        prime_factors: &[2_305_843_009_213_693_951],
        p: 2_305_843_009_213_693_951,
        default_poly: &[61, 5, 2, 1, 0],
    },
    DegreeEntry {
        m: 89,
        prime_factors: &[618_970_019_642_690_137_449_562_111],
        p: 618_970_019_642_690_137_449_562_111,
        default_poly: &[89, 38, 0],
    },
    DegreeEntry {
        m: 127,
        prime_factors: &[170_141_183_460_469_231_731_687_303_715_884_105_727],
        p: 170_141_183_460_469_231_731_687_303_715_884_105_727,
        default_poly: &[127, 1, 0],
    },
];

pub fn supported_degrees() -> &'static [DegreeEntry] {
    DEGREES
}

pub fn lookup_degree(m: usize) -> Option<&'static DegreeEntry> {
    DEGREES.iter().find(|e| e.m == m)
}

impl DegreeEntry {
    pub fn factorization(&self) -> FactoredOrder {
        FactoredOrder::from_primes(self.prime_factors.iter().copied())
            .expect("built-in factorization is well formed")
    }

    pub fn cofactor(&self) -> BigUint {
        ((BigUint::one() << self.m) - 1u8) / BigUint::from(self.p)
    }
}

/// Public parameters of the master-matrix construction for one degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MParamSet {
    pub m: usize,
    pub poly: BinaryPoly,
    pub p: BigUint,
    pub cofactor: BigUint,
    pub factors: FactoredOrder,
    pub n: usize,
}

impl MParamSet {
    /// Parameters using the table's default primitive polynomial.
    pub fn for_degree(m: usize) -> Result<Self> {
        let entry = lookup_degree(m).ok_or(Error::UnsupportedDegree(m))?;
        Ok(Self::from_entry(
            entry,
            BinaryPoly::from_exponents(entry.default_poly),
        ))
    }

    /// Parameters with a caller-chosen polynomial, which must be primitive.
    pub fn with_poly(m: usize, poly: BinaryPoly) -> Result<Self> {
        let entry = lookup_degree(m).ok_or(Error::UnsupportedDegree(m))?;
        if poly.degree() != Some(m) {
            return Err(Error::InvalidParams(format!(
                "polynomial {poly} does not have degree {m}"
            )));
        }
        if !is_primitive(&poly, &entry.factorization()) {
            return Err(Error::InvalidParams(format!("{poly} is not primitive")));
        }
        Ok(Self::from_entry(entry, poly))
    }

    fn from_entry(entry: &DegreeEntry, poly: BinaryPoly) -> Self {
        Self {
            m: entry.m,
            poly,
            p: BigUint::from(entry.p),
            cofactor: entry.cofactor(),
            factors: entry.factorization(),
            n: entry.m + ORDER6_BLOCK_DIM,
        }
    }

    pub fn phi(&self) -> BigUint {
        &self.p * 6u8
    }

    /// `{2, 3, p}` as a factored bound for order checks on `M`.
    pub fn phi_factored(&self) -> Result<FactoredOrder> {
        Ok(FactoredOrder::new(vec![
            (BigUint::from(2u8), 1),
            (BigUint::from(3u8), 1),
            (self.p.clone(), 1),
        ])?)
    }
}

/// True iff the companion matrix of `poly` has order exactly `2^m − 1`.
///
/// `factors` must be the full factorization of `2^m − 1` for `m = deg(poly)`.
pub fn is_primitive(poly: &BinaryPoly, factors: &FactoredOrder) -> bool {
    let Some(m) = poly.degree() else {
        return false;
    };
    let full = (BigUint::one() << m) - 1u8;
    if *factors.value() != full || !poly.coeff(0) {
        return false;
    }
    let Ok(c) = gf2::companion(poly) else {
        return false;
    };
    matches!(c.order(factors), Ok(d) if d == full)
}

/// Random monic degree-`m` polynomial with constant term 1 that passes
/// [`is_primitive`].
pub fn find_primitive_poly<R: RngCore + ?Sized>(m: usize, rng: &mut R) -> Result<BinaryPoly> {
    let entry = lookup_degree(m).ok_or(Error::UnsupportedDegree(m))?;
    let factors = entry.factorization();
    for _ in 0..MAX_ATTEMPTS {
        let mut bits = gf2::uniform_in(rng, &BigUint::from(0u8), &((BigUint::one() << m) - 1u8));
        bits.set_bit(m as u64, true);
        bits.set_bit(0, true);
        let candidate = BinaryPoly::from_bits(bits);
        if is_primitive(&candidate, &factors) {
            return Ok(candidate);
        }
    }
    Err(Error::RetryExhausted(
        "searching for a primitive polynomial",
    ))
}

/// `blockdiag(J₂, C₃)` with `J₂ = [[1,1],[0,1]]` (order 2) and `C₃` the
/// companion of `x² + x + 1` (order 3), giving exact order 6.
pub fn build_order6_block() -> BitMatrix {
    let j2 = BitMatrix::from_rows(&[[1u8, 1], [0, 1]]).expect("2x2");
    let c3 = BitMatrix::from_rows(&[[0u8, 1], [1, 1]]).expect("2x2");
    gf2::block_diag(&[j2, c3]).expect("non-empty")
}

/// Alice's secret generator together with the basis change that hides it.
#[derive(Clone)]
pub struct MasterMatrix {
    pub generator: BitMatrix,
    pub basis: BitMatrix,
    pub params: MParamSet,
    pub phi: BigUint,
}

impl std::fmt::Debug for MasterMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MasterMatrix")
            .field("m", &self.params.m)
            .field("n", &self.params.n)
            .field("phi", &self.phi)
            .finish_non_exhaustive()
    }
}

impl MasterMatrix {
    /// `T = M⁶`, of order `p`.
    pub fn t(&self) -> BitMatrix {
        self.generator.pow_u64(6)
    }

    /// `U = M³`, of order `2p`.
    pub fn u(&self) -> BitMatrix {
        self.generator.pow_u64(3)
    }

    /// `V = M²`, of order `3p`.
    pub fn v(&self) -> BitMatrix {
        self.generator.pow_u64(2)
    }

    /// The block-diagonal `N` with `M = basis · N · basis⁻¹`.
    pub fn normal_form(&self) -> Result<BitMatrix> {
        normal_form(&self.params)
    }
}

fn normal_form(params: &MParamSet) -> Result<BitMatrix> {
    let c = gf2::companion(&params.poly)?.pow(&params.cofactor);
    Ok(gf2::block_diag(&[build_order6_block(), c])?)
}

pub fn generate_master_matrix<R: RngCore + ?Sized>(
    params: &MParamSet,
    rng: &mut R,
) -> Result<MasterMatrix> {
    if params.p <= BigUint::from(3u8) {
        return Err(Error::InvalidParams(format!(
            "p = {} leaves no room for an element of order 6p",
            params.p
        )));
    }
    let n_block = normal_form(params)?;
    let basis = gf2::random_nonsingular(params.n, rng)?;
    let generator = n_block.conjugate_by(&basis)?;

    // Conjugation preserves order, so a failure here means P was not primitive
    // and no fresh basis can fix it.
    let phi = params.phi();
    let got = generator.order(&params.phi_factored()?)?;
    if got != phi {
        return Err(Error::OrderVerificationFailed {
            expected: phi.to_string(),
            got: got.to_string(),
        });
    }
    Ok(MasterMatrix {
        generator,
        basis,
        params: params.clone(),
        phi,
    })
}
