//! Executable cryptanalysis of the key agreement at desk scale.
//!
//! Everything here relies on exhaustive search, so it is only meaningful for
//! small `p` (the `m = 5, 7, 11` rows of the degree table).

mod attack;
mod ddh;
pub mod modp;

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, FactoredOrder};
use crate::handshake::Transcript;

pub use attack::{mount_dlog_attack, AttackReport, LinearSystem};
pub use ddh::{ddh_simulate_h, DdhQuadruple};

/// Largest `p` accepted by the exhaustive attacks.
pub const MAX_ATTACK_PRIME: u64 = 1024;

/// `p` as a word, if it is small enough for the exhaustive attacks.
pub fn attack_prime(p: &BigUint) -> Result<u64> {
    match p.to_u64() {
        Some(v) if v <= MAX_ATTACK_PRIME => Ok(v),
        _ => Err(Error::ParameterTooLarge(format!(
            "p = {p} exceeds {MAX_ATTACK_PRIME}"
        ))),
    }
}

/// Smallest `e ∈ [0, max_exp]` with `base^e = target`.
pub fn brute_dlog(base: &BitMatrix, target: &BitMatrix, max_exp: u64) -> Option<u64> {
    let mut acc = BitMatrix::identity(base.dim());
    for e in 0..=max_exp {
        if acc == *target {
            return Some(e);
        }
        acc = &acc * base;
    }
    None
}

/// True iff no `x ∈ [1, 6p]` has `a^x = b`. Walks the powers of `a` once.
pub fn theorem2_scan(a: &BitMatrix, b: &BitMatrix, p: u64) -> bool {
    let mut acc = a.clone();
    for _ in 1..=6 * p {
        if acc == *b {
            return false;
        }
        acc = &acc * a;
    }
    true
}

/// Checks the case split used to rule out `A'^x = B'`, for `A'` of order `2p`
/// and `B'` of order `3p`: there is always a `k` with `(A'^x)^k = I` while
/// `B'^k ≠ I`. `k` is `2p`, `p`, `2` or `1` depending on `gcd(x, 2p)`.
pub fn theorem2_case_check(a: &BitMatrix, b: &BitMatrix, p: u64, x: u64) -> bool {
    let g = num_integer::gcd(x, 2 * p);
    let k = match g {
        1 => 2 * p,
        2 => p,
        g if g == p => 2,
        _ => 1,
    };
    let ax = a.pow_u64(x);
    ax.pow_u64(k).is_identity() && !b.pow_u64(k).is_identity()
}

/// Orders realized in GL(n, 2), by enumerating every `n×n` bit pattern.
pub fn gl_order_census(n: usize) -> Result<BTreeSet<u64>> {
    if n == 0 || n > 4 {
        return Err(Error::ParameterTooLarge(format!(
            "census needs 1 <= n <= 4, got {n}"
        )));
    }
    let cells = n * n;
    let mut orders = BTreeSet::new();
    for pattern in 0u32..(1 << cells) {
        let mut m = BitMatrix::zero(n);
        for bit in 0..cells {
            if pattern >> bit & 1 == 1 {
                m.set(bit / n, bit % n, true);
            }
        }
        if !m.is_invertible() {
            continue;
        }
        let mut acc = m.clone();
        let mut d = 1u64;
        while !acc.is_identity() {
            acc = &acc * &m;
            d += 1;
        }
        orders.insert(d);
    }
    Ok(orders)
}

fn has_order(m: &BitMatrix, primes: &[&BigUint]) -> bool {
    let Ok(bound) = FactoredOrder::new(primes.iter().map(|q| ((*q).clone(), 1)).collect()) else {
        return false;
    };
    matches!(m.order(&bound), Ok(d) if d == *bound.value())
}

/// Every `A_i` of order `2p`, every `B_i` of order `3p`, and `Y`, `K` of order
/// dividing `p`.
pub fn verify_transcript_orders(transcript: &Transcript, p: &BigUint) -> bool {
    let two = BigUint::from(2u8);
    let three = BigUint::from(3u8);
    let msg2 = &transcript.msg2;
    msg2.a.iter().all(|a| has_order(a, &[&two, p]))
        && msg2.b.iter().all(|b| has_order(b, &[&three, p]))
        && transcript.msg3.y.pow(p).is_identity()
        && transcript.key.0.pow(p).is_identity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handshake::{run_local_session, unblinded_tuples, PublicParams, Validation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c3() -> BitMatrix {
        BitMatrix::from_rows(&[[0u8, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn brute_dlog_examples() {
        let c = c3();
        assert_eq!(brute_dlog(&c, &BitMatrix::identity(2), 6), Some(0));
        assert_eq!(brute_dlog(&c, &c, 6), Some(1));
        assert_eq!(brute_dlog(&c, &c.pow_u64(2), 6), Some(2));
        let j2 = BitMatrix::from_rows(&[[1u8, 1], [0, 1]]).unwrap();
        assert_eq!(brute_dlog(&c, &j2, 6), None);
    }

    #[test]
    fn census_small() {
        assert_eq!(gl_order_census(1).unwrap(), BTreeSet::from([1]));
        assert_eq!(gl_order_census(2).unwrap(), BTreeSet::from([1, 2, 3]));
        assert_eq!(gl_order_census(3).unwrap(), BTreeSet::from([1, 2, 3, 4, 7]));
        assert!(gl_order_census(5).is_err());
        assert!(gl_order_census(0).is_err());
    }

    #[test]
    fn census_gl4_contains_six() {
        let orders = gl_order_census(4).unwrap();
        assert!(orders.contains(&6));
        assert_eq!(orders, BTreeSet::from([1, 2, 3, 4, 5, 6, 7, 15]));
    }

    fn session(seed: u64) -> crate::handshake::Session {
        let params = PublicParams::for_degree(5, 4).unwrap();
        run_local_session(
            &params,
            &mut ChaCha20Rng::seed_from_u64(seed),
            Validation::Structural,
        )
        .unwrap()
    }

    #[test]
    fn theorem2_holds_on_real_instance() {
        let s = session(4);
        let (a, b) = unblinded_tuples(&s.alice, &s.transcript.msg1);
        for i in 0..4 {
            for j in 0..4 {
                assert!(theorem2_scan(&a[j], &b[i], 31));
                assert!(theorem2_scan(&b[j], &a[i], 31));
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..50 {
            let x = rng.gen_range(1..=186);
            assert!(theorem2_case_check(&a[0], &b[0], 31, x), "x = {x}");
        }
        for x in [1, 2, 31, 62, 124] {
            assert!(theorem2_case_check(&a[0], &b[0], 31, x), "x = {x}");
        }
    }

    #[test]
    fn theorem2_negative_control() {
        let s = session(4);
        let a = &s.transcript.msg2.a[0];
        assert!(!theorem2_scan(a, a, 31));
    }

    #[test]
    fn transcript_order_checks() {
        let s = session(6);
        let p = BigUint::from(31u8);
        assert!(verify_transcript_orders(&s.transcript, &p));

        let mut bad = s.transcript.clone();
        bad.msg2.a[0] = BitMatrix::identity(9);
        assert!(!verify_transcript_orders(&bad, &p));

        let mut bad = s.transcript.clone();
        bad.msg3.y = bad.msg2.b[0].clone();
        assert!(!verify_transcript_orders(&bad, &p));
    }

    #[test]
    fn products_with_y_stay_in_order_2p() {
        let s = session(8);
        let tr = &s.transcript;
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let bound = FactoredOrder::from_primes([2, 31]).unwrap();
        for _ in 0..20 {
            let i = rng.gen_range(0..4);
            let x = rng.gen_range(0..186);
            let y = rng.gen_range(0..186);
            let prod = &tr.msg2.a[i].pow_u64(x) * &tr.msg3.y.pow_u64(y);
            let d = prod.order(&bound).unwrap();
            assert!((BigUint::from(62u8) % d).bits() == 0);
        }
    }
}
