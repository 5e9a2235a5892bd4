//! The handshake over an ordered, reliable byte stream.
//!
//! The responder plays Bob because Bob speaks first: on connection it sends
//! the public parameters and `Msg1`, then waits for `Msg2` and answers with
//! `Msg3`. The initiator plays Alice.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::handshake::{
    alice_finalize, alice_respond, bob_complete, bob_init, role_rngs_from_seed, Msg1, Msg2, Msg3,
    PublicParams, SharedKey, Validation,
};
use crate::wire::{self, MsgType};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Connects and plays Alice.
    Initiator,
    /// Accepts and plays Bob.
    Responder,
}

#[derive(Debug, Clone)]
pub struct PeerOutcome {
    pub role: Role,
    pub key: SharedKey,
    pub msg1: Msg1,
    pub msg2: Msg2,
    pub msg3: Msg3,
    /// Time spent computing and encoding, excluding waits on the peer.
    pub compute: Duration,
}

/// Accumulates time spent inside the closures it runs.
#[derive(Default)]
struct Stopwatch(Duration);

impl Stopwatch {
    fn run<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0 += start.elapsed();
        out
    }
}

fn send<S: Write + ?Sized>(stream: &mut S, frame: Vec<u8>) -> Result<()> {
    stream.write_all(&frame)?;
    stream.flush()?;
    Ok(())
}

fn recv<S: Read + ?Sized>(stream: &mut S, expected: MsgType) -> Result<Vec<u8>> {
    Ok(wire::read_frame(stream)?.expect(expected)?)
}

/// Runs one handshake on `stream` and returns the agreed key along with the
/// messages exchanged.
pub fn peer_handshake<S, R>(
    role: Role,
    stream: &mut S,
    params: &PublicParams,
    rng: &mut R,
    mode: Validation,
) -> Result<PeerOutcome>
where
    S: Read + Write + ?Sized,
    R: RngCore + ?Sized,
{
    let mut clock = Stopwatch::default();
    match role {
        Role::Responder => {
            let (msg1, secret, hello) = clock.run(|| -> Result<_> {
                let (msg1, secret) = bob_init(params, rng)?;
                let hello = [wire::encode_params(params)?, wire::encode_msg1(&msg1)?].concat();
                Ok((msg1, secret, hello))
            })?;
            send(stream, hello)?;
            let payload = recv(stream, MsgType::Msg2)?;
            let (msg2, msg3, key, reply) = clock.run(|| -> Result<_> {
                let msg2 = wire::decode_msg2_payload(&payload)?;
                let (msg3, key) = bob_complete(params, &msg2, &secret, mode)?;
                let reply = wire::encode_msg3(&msg3)?;
                Ok((msg2, msg3, key, reply))
            })?;
            send(stream, reply)?;
            Ok(PeerOutcome {
                role,
                key,
                msg1,
                msg2,
                msg3,
                compute: clock.0,
            })
        }
        Role::Initiator => {
            let payload = recv(stream, MsgType::Params)?;
            let theirs = clock.run(|| wire::decode_params_payload(&payload))?;
            if theirs != *params {
                return Err(Error::MalformedMessage(format!(
                    "peer offered m = {}, t = {}, P = {}; expected m = {}, t = {}, P = {}",
                    theirs.mparams.m,
                    theirs.t,
                    theirs.mparams.poly,
                    params.mparams.m,
                    params.t,
                    params.mparams.poly
                )));
            }
            let payload = recv(stream, MsgType::Msg1)?;
            let (msg1, msg2, secret, reply) = clock.run(|| -> Result<_> {
                let msg1 = wire::decode_msg1_payload(&payload)?;
                let (msg2, secret) = alice_respond(params, &msg1, rng)?;
                let reply = wire::encode_msg2(&msg2)?;
                Ok((msg1, msg2, secret, reply))
            })?;
            send(stream, reply)?;
            let payload = recv(stream, MsgType::Msg3)?;
            let (msg3, key) = clock.run(|| -> Result<_> {
                let msg3 = wire::decode_msg3_payload(&payload)?;
                let key = alice_finalize(params, &msg3, &secret, mode)?;
                Ok((msg3, key))
            })?;
            Ok(PeerOutcome {
                role,
                key,
                msg1,
                msg2,
                msg3,
                compute: clock.0,
            })
        }
    }
}

pub fn configure(stream: &TcpStream, timeout: Duration) -> Result<()> {
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)?;
    Ok(())
}

/// Connects to `addr` and plays Alice with randomness derived from `seed`.
pub fn connect<A: ToSocketAddrs>(
    addr: A,
    params: &PublicParams,
    seed: u64,
    timeout: Duration,
    mode: Validation,
) -> Result<PeerOutcome> {
    let mut stream = TcpStream::connect(addr)?;
    configure(&stream, timeout)?;
    let mut rng = role_rngs_from_seed(seed, 0).alice;
    peer_handshake(Role::Initiator, &mut stream, params, &mut rng, mode)
}

/// Accepts `connections` peers, each handled on its own thread as Bob.
///
/// Connection `k` draws its randomness from stream `k` of `seed`, so the
/// first connection reproduces the in-process handshake for the same seed.
pub fn serve(
    listener: &TcpListener,
    params: &PublicParams,
    seed: u64,
    connections: usize,
    timeout: Duration,
    mode: Validation,
) -> Vec<Result<PeerOutcome>> {
    let mut handles = Vec::with_capacity(connections);
    for k in 0..connections {
        let stream = match listener.accept() {
            Ok((s, _)) => s,
            Err(e) => {
                handles.push(thread::spawn(move || Err(Error::from(e))));
                continue;
            }
        };
        let params = params.clone();
        handles.push(thread::spawn(move || {
            let mut stream = stream;
            configure(&stream, timeout)?;
            let mut rng = role_rngs_from_seed(seed, k as u64).bob;
            peer_handshake(Role::Responder, &mut stream, &params, &mut rng, mode)
        }));
    }
    handles
        .into_iter()
        .map(|h| h.join().unwrap_or(Err(Error::WorkerPanicked)))
        .collect()
}
