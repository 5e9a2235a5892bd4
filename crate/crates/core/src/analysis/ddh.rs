//! The reduction simulator `H`: turning a Diffie-Hellman quadruple over
//! `T^{αζ_1}` into a protocol transcript.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::gf2::{self, conjugate_with_inverse, BitMatrix};
use crate::handshake::{Msg1, Msg2, Msg3, PublicParams, Session, SharedKey, Transcript};
use crate::params::{MasterMatrix, MAX_ATTEMPTS};

/// `(G1, G2, G3, G4)`; proper when it equals `(g, g^a, g^b, g^{ab})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdhQuadruple {
    pub g1: BitMatrix,
    pub g2: BitMatrix,
    pub g3: BitMatrix,
    pub g4: BitMatrix,
}

impl DdhQuadruple {
    /// `(T^{αζ_1}, Y', T^{γζ_1}, K')` with `Y' = R⁻¹YR` and `K' = S⁻¹KS`.
    pub fn from_session(session: &Session) -> Result<Self> {
        let alice = &session.alice;
        let p = &alice.master.params.p;
        let t = alice.master.t();
        let tr = &session.transcript;
        Ok(Self {
            g1: t.pow(&((&alice.alpha * &alice.zeta[0]) % p)),
            g2: tr.msg3.y.conjugate_by(&alice.r.inverse()?)?,
            g3: t.pow(&((&alice.gamma * &alice.zeta[0]) % p)),
            g4: tr.key.0.conjugate_by(&alice.s.inverse()?)?,
        })
    }

    /// The same quadruple with `G4` replaced by `T^c`.
    pub fn with_random_last(session: &Session, c: &BigUint) -> Result<Self> {
        let mut q = Self::from_session(session)?;
        q.g4 = session.alice.master.t().pow(c);
        Ok(q)
    }
}

/// `Σx_i ≡ 0 (mod modulus)` with every `x_i ≢ 0 (mod r)`. The first `t − 1`
/// entries come from `[1, p)`, the last closes the sum.
fn residue_tuple<R: RngCore + ?Sized>(
    t: usize,
    p: &BigUint,
    r: u8,
    rng: &mut R,
) -> Result<Vec<BigUint>> {
    let modulus = p * r;
    let one = BigUint::one();
    for _ in 0..MAX_ATTEMPTS {
        let mut xs = Vec::with_capacity(t);
        while xs.len() < t - 1 {
            let x = gf2::uniform_in(rng, &one, p);
            if !(&x % r).is_zero() {
                xs.push(x);
            }
        }
        let sum: BigUint = xs.iter().sum::<BigUint>() % &modulus;
        let last = (&modulus - sum) % &modulus;
        if !(&last % r).is_zero() {
            xs.push(last);
            return Ok(xs);
        }
    }
    Err(Error::RetryExhausted("drawing tuples for H"))
}

/// `x` has order `k·p` given `x^{kp} = I`: neither `x^k` nor `x^p` is `I`.
fn full_order(x: &BitMatrix, k: u64, p: &BigUint) -> bool {
    !x.pow_u64(k).is_identity() && !x.pow(p).is_identity()
}

/// Simulates a transcript from a quadruple, the generator, and the blinding
/// matrices.
///
/// `A_1` and `B_1` are `R·G1·U^{μ_1}·R⁻¹` and `S·G3·V^{σ_1}·S⁻¹`, i.e. the
/// loop body with `ζ'_1 = 1`. `H` draws `μ` with `Σμ_i ≡ 0 (mod 2p)` and every
/// `μ_i` odd, which no odd `t` can meet.
pub fn ddh_simulate_h<R: RngCore + ?Sized>(
    quad: &DdhQuadruple,
    master: &MasterMatrix,
    r: &BitMatrix,
    s: &BitMatrix,
    params: &PublicParams,
    rng: &mut R,
) -> Result<Transcript> {
    let t = params.t;
    if t % 2 == 1 {
        return Err(Error::Unsatisfiable(
            "H needs an odd-valued mu tuple summing to 0 mod 2p, impossible for odd t",
        ));
    }
    let p = params.p();
    let u = master.u();
    let v = master.v();
    let r_inv = r.inverse()?;
    let s_inv = s.inverse()?;
    let one = BigUint::one();

    let form = |z: &BigUint, mu: &BigUint, sigma: &BigUint| {
        let a = &quad.g1.pow(z) * &u.pow(mu);
        let b = &quad.g3.pow(z) * &v.pow(sigma);
        (full_order(&a, 2, p) && full_order(&b, 3, p)).then_some((a, b))
    };

    for _ in 0..MAX_ATTEMPTS {
        let mu = residue_tuple(t, p, 2, rng)?;
        let sigma = residue_tuple(t, p, 3, rng)?;
        let Some(first) = form(&one, &mu[0], &sigma[0]) else {
            continue;
        };
        let mut pairs = vec![first];
        for i in 1..t {
            let mut pair = None;
            for _ in 0..MAX_ATTEMPTS {
                let z = gf2::uniform_in(rng, &one, p);
                if let Some(found) = form(&z, &mu[i], &sigma[i]) {
                    pair = Some(found);
                    break;
                }
            }
            pairs.push(pair.ok_or(Error::RetryExhausted("drawing zeta' in H"))?);
        }

        let mut a = Vec::with_capacity(t);
        let mut b = Vec::with_capacity(t);
        for (a_prime, b_prime) in &pairs {
            a.push(conjugate_with_inverse(r, a_prime, &r_inv)?);
            b.push(conjugate_with_inverse(s, b_prime, &s_inv)?);
        }
        let y = conjugate_with_inverse(r, &quad.g2, &r_inv)?;
        let key = conjugate_with_inverse(s, &quad.g4, &s_inv)?;
        let degenerate_key = key.is_identity();
        return Ok(Transcript {
            params: params.clone(),
            msg1: Msg1 { mu, sigma },
            msg2: Msg2 { a, b },
            msg3: Msg3 { y },
            key: SharedKey(key),
            degenerate_key,
        });
    }
    Err(Error::RetryExhausted("forming A_1, B_1 in H"))
}
