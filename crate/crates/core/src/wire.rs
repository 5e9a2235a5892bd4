//! Byte-exact encoding of protocol messages.
//!
//! ```text
//! frame   = "SSGK" | version u8 (0x01) | type u8 | payload_len u32 LE | payload
//! matrix  = n u16 LE | n rows of ceil(n/8) bytes, entry (i, j) at bit j%8 of byte j/8
//! bigint  = len u16 LE | len bytes of little-endian magnitude, no high zero byte
//! msg1    = t u16 | μ_1..μ_t | σ_1..σ_t            (bigints)
//! msg2    = t u16 | A_1..A_t | B_1..B_t            (matrices)
//! msg3    = Y                                       (matrix)
//! params  = m u16 | p bigint | t u16 | P(x) bigint  (coefficient bits)
//! ```

use std::io::{Read, Write};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::handshake::{Msg1, Msg2, Msg3, PublicParams};
use crate::params::MParamSet;
use crate::poly::BinaryPoly;

pub const MAGIC: [u8; 4] = *b"SSGK";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
pub const MAX_PAYLOAD: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgType {
    Msg1 = 0x01,
    Msg2 = 0x02,
    Msg3 = 0x03,
    Params = 0x10,
}

impl TryFrom<u8> for MsgType {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self, WireError> {
        match b {
            0x01 => Ok(MsgType::Msg1),
            0x02 => Ok(MsgType::Msg2),
            0x03 => Ok(MsgType::Msg3),
            0x10 => Ok(MsgType::Params),
            other => Err(WireError::UnknownMsgType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("input truncated")]
    TruncatedInput,
    #[error("nonzero padding bits in matrix row {0}")]
    NonzeroPadBits(usize),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownMsgType(u8),
    #[error("expected {expected:?}, got {got:?}")]
    UnexpectedMsgType { expected: MsgType, got: MsgType },
    #[error("payload length {declared} does not match {actual} available bytes")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("payload of {0} bytes exceeds the limit")]
    PayloadTooLarge(usize),
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("non-canonical integer encoding")]
    NonCanonicalInt,
    #[error("matrix dimension 0")]
    ZeroDimension,
    #[error("value too large to encode: {0}")]
    Overflow(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one complete frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Frame, WireError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or(WireError::TruncatedInput)?;
        let (msg_type, len) = parse_header(header)?;
        let actual = bytes.len() - HEADER_LEN;
        if actual != len {
            return Err(WireError::LengthMismatch {
                declared: len,
                actual,
            });
        }
        Ok(Frame {
            msg_type,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }

    pub fn expect(self, expected: MsgType) -> Result<Vec<u8>, WireError> {
        if self.msg_type != expected {
            return Err(WireError::UnexpectedMsgType {
                expected,
                got: self.msg_type,
            });
        }
        Ok(self.payload)
    }
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(MsgType, usize), WireError> {
    let magic = [h[0], h[1], h[2], h[3]];
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    if h[4] != VERSION {
        return Err(WireError::UnsupportedVersion(h[4]));
    }
    let msg_type = MsgType::try_from(h[5])?;
    let len = u32::from_le_bytes([h[6], h[7], h[8], h[9]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(len));
    }
    Ok((msg_type, len))
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, frame: &Frame) -> Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. The header is validated before any payload is read.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Frame> {
    let mut header = [0u8; HEADER_LEN];
    read_exact(r, &mut header)?;
    let (msg_type, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    read_exact(r, &mut payload)?;
    Ok(Frame { msg_type, payload })
}

fn read_exact<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Decode(WireError::TruncatedInput)
        } else {
            Error::from(e)
        }
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::TruncatedInput)?;
        let out = self
            .buf
            .get(self.pos..end)
            .ok_or(WireError::TruncatedInput)?;
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn bigint(&mut self) -> Result<BigUint, WireError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        if bytes.last() == Some(&0) {
            return Err(WireError::NonCanonicalInt);
        }
        Ok(BigUint::from_bytes_le(bytes))
    }

    fn matrix(&mut self) -> Result<BitMatrix, WireError> {
        let n = self.u16()? as usize;
        if n == 0 {
            return Err(WireError::ZeroDimension);
        }
        let row_len = n.div_ceil(8);
        let mut m = BitMatrix::zero(n);
        for i in 0..n {
            let row = self.take(row_len)?;
            for (k, &byte) in row.iter().enumerate() {
                let valid = (n - 8 * k).min(8);
                if valid < 8 && byte >> valid != 0 {
                    return Err(WireError::NonzeroPadBits(i));
                }
                for bit in 0..valid {
                    if byte >> bit & 1 == 1 {
                        m.set(i, 8 * k + bit, true);
                    }
                }
            }
        }
        Ok(m)
    }

    fn finish(self) -> Result<(), WireError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            extra => Err(WireError::TrailingBytes(extra)),
        }
    }
}

fn put_u16(out: &mut Vec<u8>, v: usize, what: &'static str) -> Result<(), WireError> {
    let v = u16::try_from(v).map_err(|_| WireError::Overflow(what))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn put_bigint(out: &mut Vec<u8>, v: &BigUint) -> Result<(), WireError> {
    let bytes = if v.bits() == 0 {
        Vec::new()
    } else {
        v.to_bytes_le()
    };
    put_u16(out, bytes.len(), "integer length")?;
    out.extend_from_slice(&bytes);
    Ok(())
}

pub fn put_matrix(out: &mut Vec<u8>, m: &BitMatrix) -> Result<(), WireError> {
    let n = m.dim();
    put_u16(out, n, "matrix dimension")?;
    let row_len = n.div_ceil(8);
    for i in 0..n {
        let words = m.row_words(i);
        for k in 0..row_len {
            out.push((words[k / 8] >> (8 * (k % 8))) as u8);
        }
    }
    Ok(())
}

pub fn encode_matrix(m: &BitMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + m.dim() * m.dim().div_ceil(8));
    put_matrix(&mut out, m).expect("BitMatrix dimension fits in u16");
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<BitMatrix, WireError> {
    let mut r = Reader::new(bytes);
    let m = r.matrix()?;
    r.finish()?;
    Ok(m)
}

pub fn encode_bigint(v: &BigUint) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::new();
    put_bigint(&mut out, v)?;
    Ok(out)
}

pub fn decode_bigint(bytes: &[u8]) -> Result<BigUint, WireError> {
    let mut r = Reader::new(bytes);
    let v = r.bigint()?;
    r.finish()?;
    Ok(v)
}

/// Unpadded lowercase hex of the first 8 bytes of the encoded matrix.
pub fn fingerprint(m: &BitMatrix) -> String {
    let bytes = encode_matrix(m);
    hex::encode(&bytes[..bytes.len().min(8)])
}

fn frame(msg_type: MsgType, payload: Vec<u8>) -> Vec<u8> {
    Frame { msg_type, payload }.encode()
}

pub fn encode_msg1(msg: &Msg1) -> Result<Vec<u8>, WireError> {
    if msg.mu.len() != msg.sigma.len() {
        return Err(WireError::Overflow("mu and sigma lengths differ"));
    }
    let mut p = Vec::new();
    put_u16(&mut p, msg.mu.len(), "t")?;
    for v in msg.mu.iter().chain(&msg.sigma) {
        put_bigint(&mut p, v)?;
    }
    Ok(frame(MsgType::Msg1, p))
}

pub fn decode_msg1_payload(payload: &[u8]) -> Result<Msg1, WireError> {
    let mut r = Reader::new(payload);
    let t = r.u16()? as usize;
    let mu = (0..t).map(|_| r.bigint()).collect::<Result<_, _>>()?;
    let sigma = (0..t).map(|_| r.bigint()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(Msg1 { mu, sigma })
}

pub fn decode_msg1(bytes: &[u8]) -> Result<Msg1, WireError> {
    decode_msg1_payload(&Frame::decode(bytes)?.expect(MsgType::Msg1)?)
}

pub fn encode_msg2(msg: &Msg2) -> Result<Vec<u8>, WireError> {
    if msg.a.len() != msg.b.len() {
        return Err(WireError::Overflow("A and B lengths differ"));
    }
    let mut p = Vec::new();
    put_u16(&mut p, msg.a.len(), "t")?;
    for m in msg.a.iter().chain(&msg.b) {
        put_matrix(&mut p, m)?;
    }
    Ok(frame(MsgType::Msg2, p))
}

pub fn decode_msg2_payload(payload: &[u8]) -> Result<Msg2, WireError> {
    let mut r = Reader::new(payload);
    let t = r.u16()? as usize;
    let a = (0..t).map(|_| r.matrix()).collect::<Result<_, _>>()?;
    let b = (0..t).map(|_| r.matrix()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(Msg2 { a, b })
}

pub fn decode_msg2(bytes: &[u8]) -> Result<Msg2, WireError> {
    decode_msg2_payload(&Frame::decode(bytes)?.expect(MsgType::Msg2)?)
}

pub fn encode_msg3(msg: &Msg3) -> Result<Vec<u8>, WireError> {
    let mut p = Vec::new();
    put_matrix(&mut p, &msg.y)?;
    Ok(frame(MsgType::Msg3, p))
}

pub fn decode_msg3_payload(payload: &[u8]) -> Result<Msg3, WireError> {
    Ok(Msg3 {
        y: decode_matrix(payload)?,
    })
}

pub fn decode_msg3(bytes: &[u8]) -> Result<Msg3, WireError> {
    decode_msg3_payload(&Frame::decode(bytes)?.expect(MsgType::Msg3)?)
}

pub fn encode_params(params: &PublicParams) -> Result<Vec<u8>, WireError> {
    let mut p = Vec::new();
    put_u16(&mut p, params.mparams.m, "m")?;
    put_bigint(&mut p, &params.mparams.p)?;
    put_u16(&mut p, params.t, "t")?;
    put_bigint(&mut p, params.mparams.poly.bits())?;
    Ok(frame(MsgType::Params, p))
}

/// Decodes and re-validates public parameters against the degree table.
pub fn decode_params_payload(payload: &[u8]) -> Result<PublicParams, WireError> {
    let mut r = Reader::new(payload);
    let m = r.u16()? as usize;
    let p = r.bigint()?;
    let t = r.u16()? as usize;
    let poly = BinaryPoly::from_bits(r.bigint()?);
    r.finish()?;
    let invalid = |e: Error| WireError::InvalidParams(e.to_string());
    let mparams = MParamSet::with_poly(m, poly).map_err(invalid)?;
    if mparams.p != p {
        return Err(WireError::InvalidParams(format!(
            "p = {p} is not the designated prime for m = {m}"
        )));
    }
    PublicParams::new(mparams, t).map_err(invalid)
}

pub fn decode_params(bytes: &[u8]) -> Result<PublicParams, WireError> {
    decode_params_payload(&Frame::decode(bytes)?.expect(MsgType::Params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layout() {
        assert_eq!(
            encode_matrix(&BitMatrix::identity(2)),
            vec![0x02, 0x00, 0x01, 0x02]
        );
        let i9 = encode_matrix(&BitMatrix::identity(9));
        assert_eq!(&i9[..6], &[0x09, 0x00, 0x01, 0x00, 0x02, 0x00]);
        assert_eq!(&i9[i9.len() - 2..], &[0x00, 0x01]);
    }

    #[test]
    fn pad_bits_rejected() {
        let mut bytes = encode_matrix(&BitMatrix::identity(2));
        bytes[2] |= 0x80;
        assert_eq!(decode_matrix(&bytes), Err(WireError::NonzeroPadBits(0)));
        assert_eq!(decode_matrix(&[0, 0]), Err(WireError::ZeroDimension));
        assert_eq!(decode_matrix(&[2, 0, 1]), Err(WireError::TruncatedInput));
        assert_eq!(
            decode_matrix(&[2, 0, 1, 2, 0]),
            Err(WireError::TrailingBytes(1))
        );
    }

    #[test]
    fn bigint_canonical() {
        assert_eq!(encode_bigint(&BigUint::from(0u8)).unwrap(), vec![0, 0]);
        assert_eq!(
            encode_bigint(&BigUint::from(0x1234u16)).unwrap(),
            vec![2, 0, 0x34, 0x12]
        );
        assert_eq!(decode_bigint(&[0, 0]).unwrap(), BigUint::from(0u8));
        assert_eq!(
            decode_bigint(&[2, 0, 0x34, 0x00]),
            Err(WireError::NonCanonicalInt)
        );
        assert_eq!(decode_bigint(&[1, 0]), Err(WireError::TruncatedInput));
    }

    #[test]
    fn frame_header_checks() {
        let good = encode_msg3(&Msg3 {
            y: BitMatrix::identity(3),
        })
        .unwrap();
        assert_eq!(&good[..6], b"SSGK\x01\x03");
        assert_eq!(decode_msg3(&good).unwrap().y, BitMatrix::identity(3));

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(Frame::decode(&bad), Err(WireError::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(Frame::decode(&bad), Err(WireError::UnsupportedVersion(2)));
        let mut bad = good.clone();
        bad[5] = 0x07;
        assert_eq!(Frame::decode(&bad), Err(WireError::UnknownMsgType(7)));
        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(
            Frame::decode(&bad),
            Err(WireError::LengthMismatch { .. })
        ));
        assert!(matches!(
            decode_msg2(&good),
            Err(WireError::UnexpectedMsgType {
                expected: MsgType::Msg2,
                got: MsgType::Msg3
            })
        ));
    }

    #[test]
    fn streamed_frame_rejects_bad_magic_before_payload() {
        // Declared payload far larger than what follows; magic is checked first.
        let mut bytes = b"XXXX\x01\x01".to_vec();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        let err = read_frame(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, Error::Decode(WireError::BadMagic(_))));
    }

    #[test]
    fn fingerprint_is_prefix_hex() {
        assert_eq!(fingerprint(&BitMatrix::identity(2)), "02000102");
        assert_eq!(fingerprint(&BitMatrix::identity(9)), "0900010002000400");
    }
}
