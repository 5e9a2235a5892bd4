//! Key agreement over a hidden cyclic subgroup of `GL(n, 2)`.
//!
//! Alice picks a secret matrix `M` of order `6p` and publishes conjugated
//! powers of `M³` and `M²`. Bob combines them with exponents whose
//! `U`- and `V`-parts cancel, and both sides end with the same element of
//! the order-`p` subgroup generated by a conjugate of `M⁶`.
//!
//! * [`gf2`] and [`poly`]: bit-packed matrices and polynomials over GF(2).
//! * [`params`]: degree table, primitive polynomials, master matrix.
//! * [`handshake`]: the protocol roles and an in-process driver.
//! * [`wire`] and [`peer`]: the framed byte format and a TCP transport.
//! * [`analysis`]: exhaustive cryptanalysis at small `p`.

pub mod analysis;
pub mod error;
pub mod gf2;
pub mod handshake;
pub mod params;
pub mod peer;
pub mod poly;
pub mod wire;

pub use error::{Error, Result};
pub use gf2::BitMatrix;
pub use handshake::{
    run_local_handshake, run_local_session, PublicParams, SharedKey, Transcript, Validation,
};
pub use params::MParamSet;
