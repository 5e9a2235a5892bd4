//! The discrete-log adversary: with a dlog oracle for the published tuples,
//! assemble systems (I), (II) and (III) and see what they pin down.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::modp::{self, add, inv, mul, sub};
use super::{attack_prime, brute_dlog};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::handshake::{power_product, AliceSecret, BobSecret, SharedKey, Transcript};

/// One system of congruences, plus its linearization for rank reporting.
///
/// `unknowns` lists the nonlinear unknowns as written (for (I): `α, β,
/// η_2..η_t`). `columns` names the linearized unknowns whose coefficients
/// appear in `coefficients`; for (I) each product `αη_j` is one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub name: &'static str,
    pub unknowns: Vec<String>,
    pub columns: Vec<String>,
    pub coefficients: Vec<Vec<u64>>,
    pub rhs: Vec<u64>,
    /// Modulus of each equation.
    pub moduli: Vec<u64>,
    /// Rank of `coefficients` over `F_p`.
    pub rank: usize,
}

impl LinearSystem {
    pub fn equation_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub p: u64,
    /// `A_j = A_1^{c_j}` for `j = 2..t`.
    pub c: Vec<u64>,
    /// `B_j = B_1^{d_j}` for `j = 2..t`.
    pub d: Vec<u64>,
    /// `Y = A_1^y`.
    pub y: u64,
    pub system_i: LinearSystem,
    pub system_ii: LinearSystem,
    pub system_iii: LinearSystem,
    /// Number of `α'` admitting some `ζ'` that satisfies (I) alone.
    pub alpha_candidates: usize,
    /// Number of `γ'` admitting some `ζ'` that satisfies (II) alone.
    pub gamma_candidates: usize,
    /// Distinct `γ'·α'⁻¹ mod p` over the per-system candidates.
    pub candidate_ratios: Vec<u64>,
    /// Distinct `Y^r` for `r` in `candidate_ratios`.
    pub implied_keys: Vec<BitMatrix>,
    /// Distinct `γ'·α'⁻¹` when (I) and (II) are solved with one shared `ζ'`.
    pub joint_ratios: Vec<u64>,
    /// Dimension over `F_p` of the exponent vectors `θ'` that reproduce `Y`
    /// and satisfy (III).
    pub theta_solution_dim: usize,
    /// `∏ B_i^{θ'_i}` for one such `θ'`.
    pub recovered_key: Option<SharedKey>,
    /// Whether the true secrets satisfy every equation, when supplied.
    pub secrets_consistent: Option<bool>,
}

impl AttackReport {
    pub fn recovered_key_matches(&self, key: &SharedKey) -> bool {
        self.recovered_key.as_ref() == Some(key)
    }
}

fn dlog(
    base: &BitMatrix,
    target: &BitMatrix,
    max: u64,
    what: impl FnOnce() -> String,
) -> Result<u64> {
    brute_dlog(base, target, max).ok_or_else(|| Error::DlogFailed { what: what() })
}

fn small(x: &BigUint, what: &str) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| Error::ParameterTooLarge(format!("{what} = {x} exceeds 64 bits")))
}

/// Recovers `ζ'_2..ζ'_t ∈ [1, p]` from `c_j·(k·x'ζ'_1 + e_1) ≡ k·x'ζ'_j + e_j
/// (mod k·p)`, or `None` if any `j` has no solution. Shared by (I) with `k = 2`
/// and (II) with `k = 3`.
fn follow_zeta(k: u64, p: u64, x: u64, z1: u64, logs: &[u64], e: &[u64]) -> Option<Vec<u64>> {
    let kp = k * p;
    let base = add(mul(k, mul(x, z1, kp), kp), e[0], kp);
    if num_integer::gcd(base, kp) != 1 {
        return None;
    }
    let kx_inv = inv(mul(k, x, p), p)?;
    let mut zeta = Vec::with_capacity(logs.len() + 1);
    zeta.push(z1);
    for (j, &cj) in logs.iter().enumerate() {
        let target = mul(cj, base, kp);
        let mut z = mul(sub(target, e[j + 1], p), kx_inv, p);
        if z == 0 {
            z = p;
        }
        let lhs = add(mul(k, mul(x, z, kp), kp), e[j + 1], kp);
        if lhs != target {
            return None;
        }
        zeta.push(z);
    }
    Some(zeta)
}

fn reduce(xs: &[BigUint], n: u64) -> Result<Vec<u64>> {
    xs.iter().map(|x| small(&(x % n), "exponent")).collect()
}

fn linearized(
    name: &'static str,
    logs: &[u64],
    e: &[u64],
    k_name: (&str, &str, &str),
    modulus: u64,
    p: u64,
) -> LinearSystem {
    let (scalar, inverse, aux) = k_name;
    let t = e.len();
    let mut unknowns = vec![scalar.to_string(), inverse.to_string()];
    unknowns.extend((2..=t).map(|j| format!("{aux}_{j}")));
    let mut columns: Vec<String> = (2..=t).map(|j| format!("{scalar}{aux}_{j}")).collect();
    columns.push(inverse.to_string());
    let coefficients: Vec<Vec<u64>> = (0..t - 1)
        .map(|row| {
            let mut r = vec![0; t];
            r[row] = 1;
            r[t - 1] = e[row + 1] % modulus;
            r
        })
        .collect();
    let rank = modp::rank(&coefficients, p);
    LinearSystem {
        name,
        unknowns,
        columns,
        coefficients,
        rhs: logs.to_vec(),
        moduli: vec![modulus; t - 1],
        rank,
    }
}

/// Runs the dlog adversary against a transcript.
///
/// Only the public part of the transcript is read (`μ, σ, A, B, Y`).
/// `truth` is used solely to fill in `secrets_consistent`.
pub fn mount_dlog_attack(
    transcript: &Transcript,
    truth: Option<(&AliceSecret, &BobSecret)>,
) -> Result<AttackReport> {
    let p = attack_prime(transcript.params.p())?;
    let t = transcript.params.t;
    let (two_p, three_p) = (2 * p, 3 * p);
    let msg2 = &transcript.msg2;
    if msg2.a.len() != t || msg2.b.len() != t || transcript.msg1.mu.len() != t {
        return Err(Error::MalformedMessage(
            "transcript lengths differ from t".into(),
        ));
    }

    let mut c = Vec::with_capacity(t - 1);
    let mut d = Vec::with_capacity(t - 1);
    for j in 1..t {
        c.push(dlog(&msg2.a[0], &msg2.a[j], two_p, || {
            format!("A_{} to base A_1", j + 1)
        })?);
        d.push(dlog(&msg2.b[0], &msg2.b[j], three_p, || {
            format!("B_{} to base B_1", j + 1)
        })?);
    }
    let y = dlog(&msg2.a[0], &transcript.msg3.y, two_p, || {
        "Y to base A_1".into()
    })?;

    let mu = reduce(&transcript.msg1.mu, two_p)?;
    let sigma = reduce(&transcript.msg1.sigma, three_p)?;

    let system_i = linearized("I", &c, &mu, ("α", "β", "η"), two_p, p);
    let system_ii = linearized("II", &d, &sigma, ("γ", "δ", "ξ"), three_p, p);
    let system_iii = LinearSystem {
        name: "III",
        unknowns: (1..=t).map(|i| format!("θ_{i}")).collect(),
        columns: (1..=t).map(|i| format!("θ_{i}")).collect(),
        coefficients: vec![mu.clone(), sigma.clone()],
        rhs: vec![0, 0],
        moduli: vec![two_p, three_p],
        rank: modp::rank(&[mu.clone(), sigma.clone()], p),
    };

    // Per-system enumeration over α' ∈ [1, p), ζ'_1 ∈ [1, p].
    let mut alphas = BTreeSet::new();
    let mut gammas = BTreeSet::new();
    let mut alpha_solutions = Vec::new();
    for x in 1..p {
        for z1 in 1..=p {
            if let Some(zeta) = follow_zeta(2, p, x, z1, &c, &mu) {
                alphas.insert(x);
                alpha_solutions.push((x, zeta));
            }
            if follow_zeta(3, p, x, z1, &d, &sigma).is_some() {
                gammas.insert(x);
            }
        }
    }
    let mut ratios = BTreeSet::new();
    for &a in &alphas {
        let a_inv = inv(a, p).expect("α' is a unit");
        for &g in &gammas {
            ratios.insert(mul(g, a_inv, p));
        }
    }
    let candidate_ratios: Vec<u64> = ratios.into_iter().collect();
    let mut implied_keys: Vec<BitMatrix> = Vec::new();
    for &r in &candidate_ratios {
        let k = transcript.msg3.y.pow_u64(r);
        if !implied_keys.contains(&k) {
            implied_keys.push(k);
        }
    }

    // Joint solve: (II) must hold with the ζ' already fixed by (I).
    let mut joint = BTreeSet::new();
    for (a, zeta) in &alpha_solutions {
        for g in joint_gammas(p, zeta, &d, &sigma) {
            joint.insert(mul(g, inv(*a, p).expect("unit"), p));
        }
    }

    // θ-route: solve μ·θ ≡ 0, σ·θ ≡ 0, Σ c_i θ_i ≡ y over F_p, then lift
    // with θ ≡ 0 (mod 6) so that the 2- and 3-parts vanish as well.
    let mut c_full = vec![1];
    c_full.extend(&c);
    let rows: Vec<Vec<u64>> = vec![mu.clone(), sigma.clone(), c_full];
    let (theta_solution_dim, recovered_key) = match modp::solve(&rows, &[0, 0, y % p], p) {
        Some((x, kernel)) => {
            let six_inv = inv(6, p).expect("p > 3");
            let theta: Vec<BigUint> = x
                .iter()
                .map(|&xi| BigUint::from(6 * mul(xi, six_inv, p)))
                .collect();
            let key = (power_product(&msg2.a, &theta) == transcript.msg3.y)
                .then(|| SharedKey(power_product(&msg2.b, &theta)));
            (kernel.len(), key)
        }
        None => (0, None),
    };

    let secrets_consistent = match truth {
        Some((alice, bob)) => Some(check_truth(p, &c, &d, y, &mu, &sigma, alice, bob)?),
        None => None,
    };

    Ok(AttackReport {
        p,
        c,
        d,
        y,
        system_i,
        system_ii,
        system_iii,
        alpha_candidates: alphas.len(),
        gamma_candidates: gammas.len(),
        candidate_ratios,
        implied_keys,
        joint_ratios: joint.into_iter().collect(),
        theta_solution_dim,
        recovered_key,
        secrets_consistent,
    })
}

/// All `γ' ∈ [1, p)` satisfying (II) for a fixed `ζ'`.
///
/// Modulo `p`, equation `j` reads `3γ'(d_jζ'_1 − ζ'_j) ≡ σ_j − d_jσ_1`, so each
/// equation either fixes `γ'` or is free of it. Survivors are then checked
/// modulo `3p`.
fn joint_gammas(p: u64, zeta: &[u64], d: &[u64], sigma: &[u64]) -> Vec<u64> {
    let three_p = 3 * p;
    let mut fixed: Option<u64> = None;
    for (j, &dj) in d.iter().enumerate() {
        let coeff = mul(3, sub(mul(dj, zeta[0], p), zeta[j + 1], p), p);
        let rhs = sub(sigma[j + 1], mul(dj, sigma[0], p), p);
        match inv(coeff, p) {
            Some(ci) => {
                let g = mul(rhs, ci, p);
                if g == 0 || fixed.is_some_and(|f| f != g) {
                    return Vec::new();
                }
                fixed = Some(g);
            }
            None if rhs != 0 => return Vec::new(),
            None => {}
        }
    }
    let pool: Vec<u64> = match fixed {
        Some(g) => vec![g],
        None => (1..p).collect(),
    };
    pool.into_iter()
        .filter(|&g| {
            let base = add(mul(3, mul(g, zeta[0], three_p), three_p), sigma[0], three_p);
            num_integer::gcd(base, three_p) == 1
                && d.iter().enumerate().all(|(j, &dj)| {
                    mul(dj, base, three_p)
                        == add(
                            mul(3, mul(g, zeta[j + 1], three_p), three_p),
                            sigma[j + 1],
                            three_p,
                        )
                })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn check_truth(
    p: u64,
    c: &[u64],
    d: &[u64],
    y: u64,
    mu: &[u64],
    sigma: &[u64],
    alice: &AliceSecret,
    bob: &BobSecret,
) -> Result<bool> {
    let (two_p, three_p) = (2 * p, 3 * p);
    let alpha = small(&alice.alpha, "alpha")?;
    let gamma = small(&alice.gamma, "gamma")?;
    let zeta = reduce(&alice.zeta, 6 * p)?;
    let theta = reduce(&bob.theta, 6 * p)?;

    // (I): c_j = αη_j + βμ_j with β = (2αζ_1 + μ_1)⁻¹ and η_j = 2βζ_j.
    let Some(beta) = inv(add(mul(2 * alpha, zeta[0], two_p), mu[0], two_p), two_p) else {
        return Ok(false);
    };
    let system_i = c.iter().enumerate().all(|(k, &cj)| {
        let j = k + 1;
        let eta = mul(2 * beta, zeta[j], two_p);
        cj == add(mul(alpha, eta, two_p), mul(beta, mu[j], two_p), two_p)
    });

    // (II): d_j = γξ_j + δσ_j with δ = (3γζ_1 + σ_1)⁻¹ and ξ_j = 3δζ_j.
    let Some(delta) = inv(
        add(mul(3 * gamma, zeta[0], three_p), sigma[0], three_p),
        three_p,
    ) else {
        return Ok(false);
    };
    let system_ii = d.iter().enumerate().all(|(k, &dj)| {
        let j = k + 1;
        let xi = mul(3 * delta, zeta[j], three_p);
        dj == add(
            mul(gamma, xi, three_p),
            mul(delta, sigma[j], three_p),
            three_p,
        )
    });

    // (III) and the exponent of Y.
    let dot = |xs: &[u64], n: u64| {
        xs.iter()
            .zip(&theta)
            .fold(0, |acc, (&x, &th)| add(acc, mul(x, th, n), n))
    };
    let system_iii = dot(mu, two_p) == 0 && dot(sigma, three_p) == 0;
    let sum_zt = dot(&zeta, two_p);
    let y_ok = y == mul(beta, mul(2 * alpha, sum_zt, two_p), two_p);

    Ok(system_i && system_ii && system_iii && y_ok)
}
