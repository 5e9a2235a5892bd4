use std::io::Write;
use std::net::TcpListener;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use ssgk::analysis::{
    self, ddh_simulate_h, gl_order_census, mount_dlog_attack, theorem2_scan, DdhQuadruple,
};
use ssgk::handshake::{
    alice_finalize, alice_respond, bob_complete, bob_init, split_roles, unblinded_tuples, RoleRngs,
};
use ssgk::params::find_primitive_poly;
use ssgk::peer::{self, PeerOutcome};
use ssgk::{run_local_session, Error, MParamSet, PublicParams, Result, Validation};

#[derive(Parser)]
#[command(
    name = "ssgk",
    version,
    about = "Secret-subgroup-generator key agreement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shape {
    /// Degree of the primitive polynomial.
    #[arg(long)]
    m: usize,
    /// Tuple length.
    #[arg(long)]
    t: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print the public parameters for a degree.
    Params {
        #[command(flatten)]
        shape: Shape,
        /// Draw a random primitive polynomial from this seed instead of the
        /// table default.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run both roles in-process and compare keys.
    Handshake {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        seed: u64,
        /// Verify the order of every received matrix.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run one side of the handshake over TCP.
    Peer {
        /// Accept connections and play the responder (Bob).
        #[arg(long, conflicts_with = "connect", required_unless_present = "connect")]
        listen: Option<String>,
        /// Connect and play the initiator (Alice).
        #[arg(long)]
        connect: Option<String>,
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        seed: u64,
        /// Per-message timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        /// Number of connections to serve before exiting.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        strict: bool,
    },
    /// Run one of the cryptanalysis experiments.
    Analyze {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Attack::Dlog)]
        attack: Attack,
        /// Matrix dimension for the census.
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Attack {
    Dlog,
    Theorem2,
    Census,
    Ddh,
}

fn mode(strict: bool) -> Validation {
    if strict {
        Validation::Strict
    } else {
        Validation::Structural
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnsupportedDegree(_) | Error::InvalidParams(_) | Error::ParameterTooLarge(_) => 2,
        _ => 1,
    }
}

fn usage(msg: &str) -> Error {
    Error::InvalidParams(msg.to_string())
}

fn cmd_params(shape: &Shape, seed: Option<u64>) -> Result<()> {
    let mparams = match seed {
        Some(seed) => {
            let poly = find_primitive_poly(shape.m, &mut ChaCha20Rng::seed_from_u64(seed))?;
            MParamSet::with_poly(shape.m, poly)?
        }
        None => MParamSet::for_degree(shape.m)?,
    };
    let params = PublicParams::new(mparams, shape.t)?;
    let mp = &params.mparams;
    println!("m: {}", mp.m);
    println!("t: {}", params.t);
    println!("poly: {}", mp.poly);
    println!("p: {}", mp.p);
    println!("cofactor: {}", mp.cofactor);
    println!("n: {}", mp.n);
    println!("order: {}", mp.phi());
    Ok(())
}

fn cmd_handshake(shape: &Shape, seed: u64, strict: bool, as_json: bool) -> Result<bool> {
    let params = PublicParams::for_degree(shape.m, shape.t)?;
    let mode = mode(strict);
    let RoleRngs { mut bob, mut alice } = split_roles(&mut ChaCha20Rng::seed_from_u64(seed));
    let (msg1, bob_secret) = bob_init(&params, &mut bob)?;
    let (msg2, alice_secret) = alice_respond(&params, &msg1, &mut alice)?;
    let (msg3, bob_key) = bob_complete(&params, &msg2, &bob_secret, mode)?;
    let alice_key = alice_finalize(&params, &msg3, &alice_secret, mode)?;
    let matched = alice_key == bob_key;
    let verdict = if matched { "MATCH" } else { "MISMATCH" };
    if as_json {
        let out = json!({
            "m": shape.m,
            "t": shape.t,
            "seed": seed,
            "alice_fingerprint": alice_key.fingerprint(),
            "bob_fingerprint": bob_key.fingerprint(),
            "degenerate_key": bob_key.matrix().is_identity(),
            "result": verdict,
        });
        println!("{out}");
    } else {
        println!("alice: {}", alice_key.fingerprint());
        println!("bob:   {}", bob_key.fingerprint());
        println!("{verdict}");
    }
    Ok(matched)
}

fn print_outcome(outcome: &PeerOutcome) {
    println!("role: {:?}", outcome.role);
    println!("fingerprint: {}", outcome.key.fingerprint());
    println!("compute_ms: {:.3}", outcome.compute.as_secs_f64() * 1e3);
}

#[allow(clippy::too_many_arguments)]
fn cmd_peer(
    listen: Option<&str>,
    connect: Option<&str>,
    shape: &Shape,
    seed: u64,
    timeout: u64,
    count: usize,
    strict: bool,
) -> Result<()> {
    let params = PublicParams::for_degree(shape.m, shape.t)?;
    let timeout = Duration::from_secs(timeout);
    match (listen, connect) {
        (Some(addr), None) => {
            let listener = TcpListener::bind(addr)?;
            println!("listening: {}", listener.local_addr()?);
            std::io::stdout().flush()?;
            let mut first_err = None;
            for outcome in peer::serve(&listener, &params, seed, count, timeout, mode(strict)) {
                match outcome {
                    Ok(o) => print_outcome(&o),
                    Err(e) => {
                        eprintln!("error: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
        (None, Some(addr)) => {
            let outcome = peer::connect(addr, &params, seed, timeout, mode(strict))?;
            print_outcome(&outcome);
            Ok(())
        }
        _ => Err(usage("exactly one of --listen or --connect is required")),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn need(v: Option<usize>, flag: &str) -> Result<usize> {
    v.ok_or_else(|| usage(&format!("--{flag} is required for this attack")))
}

fn cmd_analyze(
    m: Option<usize>,
    t: Option<usize>,
    seed: u64,
    attack: Attack,
    n: usize,
) -> Result<bool> {
    if let Attack::Census = attack {
        let orders: Vec<u64> = gl_order_census(n)?.into_iter().collect();
        println!("n: {n}");
        println!("orders: {}", join(&orders));
        return Ok(true);
    }
    let params = PublicParams::for_degree(need(m, "m")?, need(t, "t")?)?;
    let p = analysis::attack_prime(params.p())?;
    let session = run_local_session(
        &params,
        &mut ChaCha20Rng::seed_from_u64(seed),
        Validation::Strict,
    )?;
    let tr = &session.transcript;
    match attack {
        Attack::Census => unreachable!("handled above"),
        Attack::Dlog => {
            let r = mount_dlog_attack(tr, Some((&session.alice, &session.bob)))?;
            println!("p: {}", r.p);
            println!("c: {}", join(&r.c));
            println!("d: {}", join(&r.d));
            println!("y: {}", r.y);
            for sys in [&r.system_i, &r.system_ii, &r.system_iii] {
                println!(
                    "system {}: {} equations, {} unknowns ({}), rank {} over F_p",
                    sys.name,
                    sys.equation_count(),
                    sys.unknown_count(),
                    sys.unknowns.join(" "),
                    sys.rank
                );
            }
            println!("alpha_candidates: {}", r.alpha_candidates);
            println!("gamma_candidates: {}", r.gamma_candidates);
            println!("candidate_ratios: {}", r.candidate_ratios.len());
            println!("implied_keys: {}", r.implied_keys.len());
            println!("joint_ratios: {}", join(&r.joint_ratios));
            println!("theta_solution_dim: {}", r.theta_solution_dim);
            println!("key_recovered: {}", r.recovered_key_matches(&tr.key));
            println!(
                "secrets_consistent: {}",
                r.secrets_consistent.unwrap_or(false)
            );
            Ok(r.secrets_consistent == Some(true))
        }
        Attack::Theorem2 => {
            let (a, b) = unblinded_tuples(&session.alice, &tr.msg1);
            let mut pairs = 0;
            let mut holds = true;
            for aj in &a {
                for bi in &b {
                    holds &= theorem2_scan(aj, bi, p) && theorem2_scan(bi, aj, p);
                    pairs += 1;
                }
            }
            println!("p: {p}");
            println!("pairs_scanned: {pairs}");
            println!("exponents_per_pair: {}", 6 * p);
            println!("theorem2: {}", if holds { "holds" } else { "VIOLATED" });
            Ok(holds)
        }
        Attack::Ddh => {
            let alice = &session.alice;
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x4444);
            let proper = DdhQuadruple::from_session(&session)?;
            let sim = ddh_simulate_h(
                &proper,
                &alice.master,
                &alice.r,
                &alice.s,
                &params,
                &mut rng,
            )?;
            let c = BigUint::from(rng.gen_range(1..p));
            let random = DdhQuadruple::with_random_last(&session, &c)?;
            let sim_random = ddh_simulate_h(
                &random,
                &alice.master,
                &alice.r,
                &alice.s,
                &params,
                &mut rng,
            )?;
            let orders_ok = analysis::verify_transcript_orders(&sim, params.p());
            println!("orders_ok: {orders_ok}");
            println!("proper_key_matches: {}", sim.key == tr.key);
            println!("random_c: {c}");
            println!("random_key_differs: {}", sim_random.key != tr.key);
            Ok(orders_ok && sim.key == tr.key)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Params { shape, seed } => cmd_params(&shape, seed).map(|_| true),
        Command::Handshake {
            shape,
            seed,
            strict,
            json,
        } => cmd_handshake(&shape, seed, strict, json),
        Command::Peer {
            listen,
            connect,
            shape,
            seed,
            timeout,
            count,
            strict,
        } => cmd_peer(
            listen.as_deref(),
            connect.as_deref(),
            &shape,
            seed,
            timeout,
            count,
            strict,
        )
        .map(|_| true),
        Command::Analyze {
            m,
            t,
            seed,
            attack,
            n,
        } => cmd_analyze(m, t, seed, attack, n),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
