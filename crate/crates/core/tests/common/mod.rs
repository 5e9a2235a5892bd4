#![allow(dead_code)]

use num_bigint::{BigUint, RandBigInt};
use rand::Rng;
use ssgk::BitMatrix;

/// Uniform `n×n` bit pattern, not necessarily invertible.
pub fn random_matrix<R: Rng>(n: usize, rng: &mut R) -> BitMatrix {
    let mut m = BitMatrix::zero(n);
    for i in 0..n {
        for j in 0..n {
            if rng.gen::<bool>() {
                m.set(i, j, true);
            }
        }
    }
    m
}

pub fn random_bigint<R: Rng>(rng: &mut R) -> BigUint {
    let bits = rng.gen_range(0..=300u64);
    rng.gen_biguint(bits)
}

/// Order by repeated multiplication, up to `limit`.
pub fn naive_order(m: &BitMatrix, limit: u64) -> Option<u64> {
    let mut acc = m.clone();
    for d in 1..=limit {
        if acc.is_identity() {
            return Some(d);
        }
        acc = &acc * m;
    }
    None
}
