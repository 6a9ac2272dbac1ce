//! Fixed-width byte values and the encodings every protocol formula uses.
//!
//! All XOR and concatenation operands are exactly [`WIDTH`] octets. Values of
//! other types pass through one of the `encode_*` functions first.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512_256};

use crate::cost::{self, Op};
use crate::error::{Error, Result};

/// Octet width of every XOR operand, digest and session key.
pub const WIDTH: usize = 32;

/// Tag hashed to represent the point at infinity.
pub(crate) const IDENTITY_TAG: &[u8] = b"gridauth/point-at-infinity";

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bytes32(pub [u8; WIDTH]);

impl Bytes32 {
    pub const ZERO: Bytes32 = Bytes32([0u8; WIDTH]);

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; WIDTH] = bytes.try_into().map_err(|_| Error::WidthMismatch {
            expected: WIDTH,
            got: bytes.len(),
        })?;
        Ok(Bytes32(arr))
    }

    pub fn as_bytes(&self) -> &[u8; WIDTH] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s.trim()).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_slice(&raw)
    }

    /// Flip bit `bit` (0 = most significant bit of the first octet).
    pub fn flip_bit(&mut self, bit: usize) {
        self.0[bit / 8] ^= 0x80 >> (bit % 8);
    }
}

impl fmt::Debug for Bytes32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bytes32({})", self.to_hex())
    }
}

impl fmt::Display for Bytes32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl BitXor for Bytes32 {
    type Output = Bytes32;

    fn bitxor(self, rhs: Bytes32) -> Bytes32 {
        xor32(&self, &rhs)
    }
}

impl Serialize for Bytes32 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Bytes32 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bytes32::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Octet-wise exclusive-or.
pub fn xor32(a: &Bytes32, b: &Bytes32) -> Bytes32 {
    cost::record(Op::Xor);
    let mut out = [0u8; WIDTH];
    for (o, (x, y)) in out.iter_mut().zip(a.0.iter().zip(b.0.iter())) {
        *o = x ^ y;
    }
    Bytes32(out)
}

/// XOR of two untyped buffers; both must be exactly [`WIDTH`] octets.
pub fn xor_slices(a: &[u8], b: &[u8]) -> Result<Bytes32> {
    Ok(xor32(&Bytes32::from_slice(a)?, &Bytes32::from_slice(b)?))
}

/// The protocol's one-way function `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HashAlg {
    #[default]
    #[serde(rename = "sha256")]
    Sha256,
    #[serde(rename = "sha512-256")]
    Sha512_256,
}

impl HashAlg {
    pub fn name(&self) -> &'static str {
        match self {
            HashAlg::Sha256 => "sha256",
            HashAlg::Sha512_256 => "sha512-256",
        }
    }

    pub(crate) fn digest_parts(&self, parts: &[&[u8]]) -> Bytes32 {
        fn run<D: Digest>(parts: &[&[u8]]) -> Bytes32 {
            let mut d = D::new();
            for p in parts {
                d.update(p);
            }
            Bytes32::from_slice(&d.finalize()).expect("256-bit digest")
        }
        match self {
            HashAlg::Sha256 => run::<Sha256>(parts),
            HashAlg::Sha512_256 => run::<Sha512_256>(parts),
        }
    }

    /// `h(data)`.
    pub fn hash(&self, data: &[u8]) -> Bytes32 {
        cost::record(Op::Hash);
        self.digest_parts(&[data])
    }

    /// `h(f1 ∥ f2 ∥ ...)` over fixed-width fields.
    pub fn hash_fields(&self, fields: &[&Bytes32]) -> Bytes32 {
        cost::record(Op::Hash);
        let parts: Vec<&[u8]> = fields.iter().map(|f| f.0.as_slice()).collect();
        self.digest_parts(&parts)
    }

    /// Identity strings and passphrases are hashed down to 32 octets.
    pub fn encode_str(&self, s: &str) -> Bytes32 {
        cost::record(Op::EncodeHash);
        self.digest_parts(&[s.as_bytes()])
    }

    pub(crate) fn encode_raw(&self, parts: &[&[u8]]) -> Bytes32 {
        cost::record(Op::EncodeHash);
        self.digest_parts(parts)
    }
}

impl FromStr for HashAlg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sha256" | "sha-256" => Ok(HashAlg::Sha256),
            "sha512-256" | "sha512_256" | "sha-512/256" => Ok(HashAlg::Sha512_256),
            other => Err(Error::UnknownHash(other.to_string())),
        }
    }
}

impl fmt::Display for HashAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Millisecond timestamp, big-endian, left-padded with zeros.
pub fn encode_timestamp(ms: u64) -> Bytes32 {
    let mut out = [0u8; WIDTH];
    out[WIDTH - 8..].copy_from_slice(&ms.to_be_bytes());
    Bytes32(out)
}

/// Counter value, big-endian, left-padded with zeros.
pub fn encode_counter(v: u64) -> Bytes32 {
    encode_timestamp(v)
}

/// Big-endian bytes left-padded to 32 octets.
pub fn encode_be(bytes: &[u8]) -> Result<Bytes32> {
    let start = bytes.iter().position(|&b| b != 0).unwrap_or(bytes.len());
    let trimmed = &bytes[start..];
    if trimmed.len() > WIDTH {
        return Err(Error::WidthMismatch {
            expected: WIDTH,
            got: trimmed.len(),
        });
    }
    let mut out = [0u8; WIDTH];
    out[WIDTH - trimmed.len()..].copy_from_slice(trimmed);
    Ok(Bytes32(out))
}
