//! The four-message key agreement.
//!
//! Bob opens with exponent tuples `(μ, σ)` and keeps `θ`. Alice answers with
//! conjugated powers of her secret generator, `A_i = R·T^{αζ_i}U^{μ_i}·R⁻¹`
//! and `B_i = S·T^{γζ_i}V^{σ_i}·S⁻¹`. Bob returns `Y = ∏ A_i^{θ_i}` and keeps
//! `K = ∏ B_i^{θ_i}`; Alice recovers the same `K = S·R⁻¹·Y^{γ/α}·R·S⁻¹`.
//! The `U` and `V` parts cancel because `Σμ_iθ_i ≡ 0 (mod 2p)` and
//! `Σσ_iθ_i ≡ 0 (mod 3p)`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::gf2::{self, conjugate_with_inverse, BitMatrix, FactoredOrder};
use crate::params::{self, MParamSet, MasterMatrix, MAX_ATTEMPTS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    pub mparams: MParamSet,
    pub t: usize,
}

impl PublicParams {
    pub fn new(mparams: MParamSet, t: usize) -> Result<Self> {
        if t < 4 {
            return Err(Error::InvalidParams(format!("t = {t}, need t >= 4")));
        }
        if mparams.p <= BigUint::from(t) {
            return Err(Error::InvalidParams(format!(
                "p = {} must exceed t = {t}",
                mparams.p
            )));
        }
        if t > u16::MAX as usize {
            return Err(Error::InvalidParams(format!(
                "t = {t} does not fit the wire format"
            )));
        }
        Ok(Self { mparams, t })
    }

    pub fn for_degree(m: usize, t: usize) -> Result<Self> {
        Self::new(MParamSet::for_degree(m)?, t)
    }

    pub fn p(&self) -> &BigUint {
        &self.mparams.p
    }

    pub fn n(&self) -> usize {
        self.mparams.n
    }
}

/// How much checking a receiver does on incoming matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// Lengths, dimensions and nonsingularity.
    #[default]
    Structural,
    /// Also verifies the multiplicative order of every received matrix.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msg1 {
    pub mu: Vec<BigUint>,
    pub sigma: Vec<BigUint>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct BobSecret {
    pub theta: Vec<BigUint>,
}

#[derive(Clone)]
pub struct AliceSecret {
    pub master: MasterMatrix,
    pub r: BitMatrix,
    pub s: BitMatrix,
    pub alpha: BigUint,
    pub gamma: BigUint,
    pub zeta: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msg2 {
    pub a: Vec<BitMatrix>,
    pub b: Vec<BitMatrix>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msg3 {
    pub y: BitMatrix,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SharedKey(pub BitMatrix);

impl SharedKey {
    pub fn matrix(&self) -> &BitMatrix {
        &self.0
    }

    /// Lowercase hex of the first 8 bytes of the encoded key matrix.
    pub fn fingerprint(&self) -> String {
        crate::wire::fingerprint(&self.0)
    }
}

impl fmt::Debug for BobSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BobSecret(t = {}, ..)", self.theta.len())
    }
}

impl fmt::Debug for AliceSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AliceSecret(n = {}, ..)", self.r.dim())
    }
}

impl fmt::Debug for SharedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SharedKey({})", self.fingerprint())
    }
}

/// One protocol instance `(μ, σ, A, B, Y, K)`. `key` is secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub params: PublicParams,
    pub msg1: Msg1,
    pub msg2: Msg2,
    pub msg3: Msg3,
    pub key: SharedKey,
    /// `K = I`, which happens when `Σζ_iθ_i ≡ 0 (mod p)`.
    pub degenerate_key: bool,
}

/// A local run with both parties' secrets retained, for analysis.
#[derive(Debug, Clone)]
pub struct Session {
    pub transcript: Transcript,
    pub alice: AliceSecret,
    pub bob: BobSecret,
}

/// Independent generators for the two roles, derived from one source.
///
/// Bob's stream is drawn first. The CLI and the network peers derive role
/// randomness the same way, so a seed reproduces the same transcript
/// whichever way the handshake is driven.
pub struct RoleRngs {
    pub bob: ChaCha20Rng,
    pub alice: ChaCha20Rng,
}

pub fn split_roles<R: RngCore + ?Sized>(rng: &mut R) -> RoleRngs {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let bob = ChaCha20Rng::from_seed(seed);
    rng.fill_bytes(&mut seed);
    let alice = ChaCha20Rng::from_seed(seed);
    RoleRngs { bob, alice }
}

pub fn role_rngs_from_seed(seed: u64, stream: u64) -> RoleRngs {
    let mut root = ChaCha20Rng::seed_from_u64(seed);
    root.set_stream(stream);
    split_roles(&mut root)
}

/// `a⁻¹ mod n` by the extended Euclidean algorithm.
pub fn mod_inverse(a: &BigUint, n: &BigUint) -> Result<BigUint> {
    if *n < BigUint::from(2u8) {
        return Err(Error::InvalidParams(format!("modulus {n} < 2")));
    }
    let not_coprime = || Error::NotCoprime {
        a: a.to_string(),
        modulus: n.to_string(),
    };
    let modulus = BigInt::from(n.clone());
    let (mut r0, mut r1) = (modulus.clone(), BigInt::from(a % n));
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let s2 = &s0 - &q * &s1;
        s0 = std::mem::replace(&mut s1, s2);
    }
    if !r0.is_one() {
        return Err(not_coprime());
    }
    Ok(s0.mod_floor(&modulus).to_biguint().expect("non-negative"))
}

/// `(a − b) mod n` for unsigned operands.
fn sub_mod(a: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    let diff =
        BigInt::from_biguint(Sign::Plus, a.clone()) - BigInt::from_biguint(Sign::Plus, b.clone());
    diff.mod_floor(&BigInt::from(n.clone()))
        .to_biguint()
        .expect("non-negative")
}

fn is_coprime(a: &BigUint, n: &BigUint) -> bool {
    a.gcd(n).is_one()
}

fn draw_until<R, F>(rng: &mut R, low: &BigUint, high: &BigUint, mut accept: F) -> Result<BigUint>
where
    R: RngCore + ?Sized,
    F: FnMut(&BigUint) -> bool,
{
    for _ in 0..MAX_ATTEMPTS {
        let x = gf2::uniform_in(rng, low, high);
        if accept(&x) {
            return Ok(x);
        }
    }
    Err(Error::RetryExhausted("drawing a constrained integer"))
}

pub fn dot(xs: &[BigUint], ys: &[BigUint]) -> BigUint {
    xs.iter().zip(ys).map(|(x, y)| x * y).sum()
}

/// Bob's exponent tuples, so that `Σμ_iθ_i ≡ 0 (mod 2p)` and
/// `Σσ_iθ_i ≡ 0 (mod 3p)`.
pub fn gen_exponent_tuples<R: RngCore + ?Sized>(
    params: &PublicParams,
    rng: &mut R,
) -> Result<(Msg1, BobSecret)> {
    let t = params.t;
    let p = params.p();
    let two_p = p * 2u8;
    let three_p = p * 3u8;
    let phi = p * 6u8;
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    let three = BigUint::from(3u8);

    for _ in 0..MAX_ATTEMPTS {
        let mut mu = Vec::with_capacity(t);
        let mut sigma = Vec::with_capacity(t);
        let mut theta = Vec::with_capacity(t);
        for _ in 0..t - 1 {
            sigma.push(draw_until(rng, &one, p, |x| !(x % &three).is_zero())?);
            mu.push(draw_until(rng, &one, p, |x| !(x % &two).is_zero())?);
            theta.push(gf2::uniform_in(rng, &one, p));
        }
        let sigma_rest = sub_mod(&three_p, &dot(&sigma, &theta), &phi);
        let mu_rest = sub_mod(&two_p, &dot(&mu, &theta), &phi);
        if !is_coprime(&sigma_rest, &phi) || !is_coprime(&mu_rest, &phi) {
            continue;
        }

        let theta_t = draw_until(rng, &one, &(&phi - 1u8), |x| is_coprime(x, &phi))?;
        let sigma_t = (mod_inverse(&theta_t, &three_p)? * (&sigma_rest % &three_p)) % &three_p;
        let mu_t = (mod_inverse(&theta_t, &two_p)? * (&mu_rest % &two_p)) % &two_p;
        if mu_t.is_zero()
            || sigma_t.is_zero()
            || (&mu_t % &two).is_zero()
            || (&sigma_t % &three).is_zero()
        {
            continue;
        }
        mu.push(mu_t);
        sigma.push(sigma_t);
        theta.push(theta_t);

        debug_assert!((dot(&mu, &theta) % &two_p).is_zero());
        debug_assert!((dot(&sigma, &theta) % &three_p).is_zero());
        return Ok((Msg1 { mu, sigma }, BobSecret { theta }));
    }
    Err(Error::RetryExhausted("generating exponent tuples"))
}

/// `T = M⁶`, `U = M³`, `V = M²` for one generator.
pub struct PowerBases {
    pub t: BitMatrix,
    pub u: BitMatrix,
    pub v: BitMatrix,
    p: BigUint,
}

impl PowerBases {
    pub fn new(master: &MasterMatrix) -> Self {
        Self {
            t: master.t(),
            u: master.u(),
            v: master.v(),
            p: master.params.p.clone(),
        }
    }

    /// `A'_i = T^{αζ_i}·U^{μ_i}` and `B'_i = T^{γζ_i}·V^{σ_i}` before conjugation.
    pub fn unblinded_pair(
        &self,
        alpha: &BigUint,
        gamma: &BigUint,
        zeta: &BigUint,
        mu: &BigUint,
        sigma: &BigUint,
    ) -> (BitMatrix, BitMatrix) {
        let p = &self.p;
        let a = &self.t.pow(&((alpha * zeta) % p)) * &self.u.pow(&(mu % (p * 2u8)));
        let b = &self.t.pow(&((gamma * zeta) % p)) * &self.v.pow(&(sigma % (p * 3u8)));
        (a, b)
    }
}

/// The unconjugated tuples `(A', B')` behind a run, recomputed from Alice's
/// secrets.
pub fn unblinded_tuples(secret: &AliceSecret, msg1: &Msg1) -> (Vec<BitMatrix>, Vec<BitMatrix>) {
    let bases = PowerBases::new(&secret.master);
    secret
        .zeta
        .iter()
        .zip(msg1.mu.iter().zip(&msg1.sigma))
        .map(|(z, (mu, sigma))| bases.unblinded_pair(&secret.alpha, &secret.gamma, z, mu, sigma))
        .unzip()
}

/// Alice's blinded tuples for a given generator, `α`, `γ`, `R` and `S`.
pub fn gen_blinded_tuples<R: RngCore + ?Sized>(
    master: &MasterMatrix,
    msg1: &Msg1,
    alpha: &BigUint,
    gamma: &BigUint,
    r: &BitMatrix,
    s: &BitMatrix,
    rng: &mut R,
) -> Result<(Msg2, Vec<BigUint>)> {
    let p = &master.params.p;
    let bases = PowerBases::new(master);
    let r_inv = r.inverse()?;
    let s_inv = s.inverse()?;
    let one = BigUint::one();

    let t = msg1.mu.len();
    let mut a = Vec::with_capacity(t);
    let mut b = Vec::with_capacity(t);
    let mut zeta = Vec::with_capacity(t);
    for (mu, sigma) in msg1.mu.iter().zip(&msg1.sigma) {
        let z = draw_until(rng, &one, p, |z| {
            !((alpha * z * 2u8 + mu) % p).is_zero() && !((gamma * z * 3u8 + sigma) % p).is_zero()
        })?;
        let (a_prime, b_prime) = bases.unblinded_pair(alpha, gamma, &z, mu, sigma);
        a.push(conjugate_with_inverse(r, &a_prime, &r_inv)?);
        b.push(conjugate_with_inverse(s, &b_prime, &s_inv)?);
        zeta.push(z);
    }
    Ok((Msg2 { a, b }, zeta))
}

impl Msg1 {
    pub fn validate(&self, params: &PublicParams) -> Result<()> {
        let t = params.t;
        if self.mu.len() != t || self.sigma.len() != t {
            return Err(Error::MalformedMessage(format!(
                "msg1 carries {}/{} exponents, expected {t}",
                self.mu.len(),
                self.sigma.len()
            )));
        }
        let two = BigUint::from(2u8);
        let three = BigUint::from(3u8);
        for i in 0..t - 1 {
            if (&self.mu[i] % &two).is_zero() {
                return Err(Error::MalformedMessage(format!("mu[{i}] is even")));
            }
            if (&self.sigma[i] % &three).is_zero() {
                return Err(Error::MalformedMessage(format!(
                    "sigma[{i}] is divisible by 3"
                )));
            }
        }
        Ok(())
    }
}

fn check_matrix(label: &str, m: &BitMatrix, n: usize) -> Result<()> {
    if m.dim() != n {
        return Err(Error::MalformedMessage(format!(
            "{label} has dimension {}, expected {n}",
            m.dim()
        )));
    }
    if !m.is_invertible() {
        return Err(Error::MalformedMessage(format!("{label} is singular")));
    }
    Ok(())
}

fn check_order(label: &str, m: &BitMatrix, bound: &FactoredOrder) -> Result<()> {
    match m.order(bound) {
        Ok(d) if d == *bound.value() => Ok(()),
        _ => Err(Error::MalformedMessage(format!(
            "{label} does not have order {}",
            bound.value()
        ))),
    }
}

impl Msg2 {
    pub fn validate(&self, params: &PublicParams, mode: Validation) -> Result<()> {
        let t = params.t;
        if self.a.len() != t || self.b.len() != t {
            return Err(Error::MalformedMessage(format!(
                "msg2 carries {}/{} matrices, expected {t}",
                self.a.len(),
                self.b.len()
            )));
        }
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            check_matrix(&format!("A[{i}]"), a, params.n())?;
            check_matrix(&format!("B[{i}]"), b, params.n())?;
        }
        if mode == Validation::Strict {
            let p = params.p().clone();
            let two_p = FactoredOrder::new(vec![(BigUint::from(2u8), 1), (p.clone(), 1)])?;
            let three_p = FactoredOrder::new(vec![(BigUint::from(3u8), 1), (p, 1)])?;
            for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
                check_order(&format!("A[{i}]"), a, &two_p)?;
                check_order(&format!("B[{i}]"), b, &three_p)?;
            }
        }
        Ok(())
    }
}

impl Msg3 {
    pub fn validate(&self, params: &PublicParams, mode: Validation) -> Result<()> {
        check_matrix("Y", &self.y, params.n())?;
        if mode == Validation::Strict && !self.y.pow(params.p()).is_identity() {
            return Err(Error::MalformedMessage("Y^p is not the identity".into()));
        }
        Ok(())
    }
}

pub fn bob_init<R: RngCore + ?Sized>(
    params: &PublicParams,
    rng: &mut R,
) -> Result<(Msg1, BobSecret)> {
    gen_exponent_tuples(params, rng)
}

pub fn alice_respond<R: RngCore + ?Sized>(
    params: &PublicParams,
    msg1: &Msg1,
    rng: &mut R,
) -> Result<(Msg2, AliceSecret)> {
    msg1.validate(params)?;
    let master = params::generate_master_matrix(&params.mparams, rng)?;
    let p = params.p();
    let one = BigUint::one();
    let alpha = gf2::uniform_in(rng, &one, &(p - 1u8));
    let gamma = gf2::uniform_in(rng, &one, &(p - 1u8));
    let (r, s) = gf2::random_noncommuting_pair(params.n(), rng)?;
    let (msg2, zeta) = gen_blinded_tuples(&master, msg1, &alpha, &gamma, &r, &s, rng)?;
    Ok((
        msg2,
        AliceSecret {
            master,
            r,
            s,
            alpha,
            gamma,
            zeta,
        },
    ))
}

/// `∏ X_i^{e_i}`, index ascending.
pub fn power_product(bases: &[BitMatrix], exps: &[BigUint]) -> BitMatrix {
    let n = bases.first().map_or(1, BitMatrix::dim);
    bases
        .iter()
        .zip(exps)
        .fold(BitMatrix::identity(n), |acc, (x, e)| &acc * &x.pow(e))
}

pub fn bob_complete(
    params: &PublicParams,
    msg2: &Msg2,
    secret: &BobSecret,
    mode: Validation,
) -> Result<(Msg3, SharedKey)> {
    msg2.validate(params, mode)?;
    if secret.theta.len() != params.t {
        return Err(Error::InvalidParams("theta length differs from t".into()));
    }
    let key = power_product(&msg2.b, &secret.theta);
    let y = power_product(&msg2.a, &secret.theta);
    Ok((Msg3 { y }, SharedKey(key)))
}

pub fn alice_finalize(
    params: &PublicParams,
    msg3: &Msg3,
    secret: &AliceSecret,
    mode: Validation,
) -> Result<SharedKey> {
    msg3.validate(params, mode)?;
    let p = params.p();
    let exponent = (&secret.gamma * mod_inverse(&secret.alpha, p)?) % p;
    let r_inv = secret.r.inverse()?;
    let s_inv = secret.s.inverse()?;
    // S·R⁻¹ · Y^e · R·S⁻¹
    let blind = &secret.s * &r_inv;
    let unblind = &secret.r * &s_inv;
    let key = &(&blind * &msg3.y.pow(&exponent)) * &unblind;
    Ok(SharedKey(key))
}

pub fn run_local_session<R: RngCore + ?Sized>(
    params: &PublicParams,
    rng: &mut R,
    mode: Validation,
) -> Result<Session> {
    let RoleRngs {
        bob: mut bob_rng,
        alice: mut alice_rng,
    } = split_roles(rng);
    let (msg1, bob) = bob_init(params, &mut bob_rng)?;
    let (msg2, alice) = alice_respond(params, &msg1, &mut alice_rng)?;
    let (msg3, bob_key) = bob_complete(params, &msg2, &bob, mode)?;
    let alice_key = alice_finalize(params, &msg3, &alice, mode)?;
    if alice_key != bob_key {
        return Err(Error::KeyMismatch);
    }
    let degenerate_key = bob_key.0.is_identity();
    Ok(Session {
        transcript: Transcript {
            params: params.clone(),
            msg1,
            msg2,
            msg3,
            key: bob_key,
            degenerate_key,
        },
        alice,
        bob,
    })
}

pub fn run_local_handshake<R: RngCore + ?Sized>(
    params: &PublicParams,
    rng: &mut R,
) -> Result<Transcript> {
    Ok(run_local_session(params, rng, Validation::Structural)?.transcript)
}
