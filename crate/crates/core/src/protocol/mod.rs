//! Setup, registration, login/authentication and the password/biometric
//! update phase as explicit state transitions.
//!
//! Every `+` in the scheme is XOR over 32-octet values. Operations take the
//! current clock reading and a randomness source as arguments; nothing here
//! reads a real clock.

mod messages;
mod server;
mod user;

pub use messages::{
    MsgA1, MsgA2, RegRequest, RegResponse, Timestamp, UpdateRequest, UpdateResponse, WireMessage,
};
pub use server::{ServerState, UserRecord};
pub use user::{Credentials, DeviceStore, PendingRegistration, PendingSession, PendingUpdate};

use rand_core::RngCore;

use crate::bytes::{Bytes32, HashAlg};
use crate::curve::{CurveParams, Point};
use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyExtractor, FuzzyParams};

/// Tunables fixed at setup time and published with the system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub hash: HashAlg,
    /// Freshness window in milliseconds.
    pub delta_t: u64,
    pub fuzzy: FuzzyParams,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            hash: HashAlg::Sha256,
            delta_t: 5_000,
            fuzzy: FuzzyParams::default(),
        }
    }
}

/// Public parameters: curve, generator, `PK_S`, `h`, and the freshness window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemParams {
    pub curve: CurveParams,
    pub server_pk: Point,
    pub hash: HashAlg,
    pub delta_t: u64,
    pub fuzzy: FuzzyParams,
}

impl SystemParams {
    pub fn extractor(&self) -> FuzzyExtractor {
        FuzzyExtractor {
            params: self.fuzzy,
            hash: self.hash,
        }
    }

    /// Rejects messages stamped in the future or older than `delta_t`.
    pub fn check_fresh(&self, sent: Timestamp, now: Timestamp) -> Result<()> {
        match now.checked_sub(sent) {
            Some(age) if age <= self.delta_t => Ok(()),
            _ => Err(Error::StaleTimestamp),
        }
    }

    /// `R3·G` with R3 read as a big-endian integer mod q.
    pub(crate) fn r3_point(&self, r3: &Bytes32) -> Point {
        let k = self.curve.reduce(r3);
        self.curve
            .scalar_mul(&k, &self.curve.g)
            .expect("generator is on the curve")
    }

    pub(crate) fn check_peer_point(&self, pt: &Point) -> Result<()> {
        if pt.is_identity() || !self.curve.is_on_curve(pt) {
            return Err(Error::InvalidPoint);
        }
        Ok(())
    }

    /// `h(ID_U ∥ ID_S ∥ S1 ∥ S2 ∥ R3·G ∥ PK_S ∥ DH ∥ t3)`; both sides use this order.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn session_key(
        &self,
        id_u: &Bytes32,
        id_s: &Bytes32,
        s1: &Bytes32,
        s2: &Bytes32,
        r3: &Bytes32,
        dh: &Point,
        t3: Timestamp,
    ) -> SessionKey {
        let r3g = self.curve.encode_point(&self.r3_point(r3), self.hash);
        let pk = self.curve.encode_point(&self.server_pk, self.hash);
        let dh = self.curve.encode_point(dh, self.hash);
        let t3 = crate::bytes::encode_timestamp(t3);
        SessionKey(
            self.hash
                .hash_fields(&[id_u, id_s, s1, s2, &r3g, &pk, &dh, &t3]),
        )
    }
}

/// The agreed 32-octet session key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SessionKey(pub Bytes32);

impl std::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SessionKey({})", self.0)
    }
}

/// Server initialisation: draws the secret `X` and publishes `PK_S = X·G`.
pub fn setup(
    curve: CurveParams,
    server_id: &str,
    config: &ProtocolConfig,
    rng: &mut impl RngCore,
) -> Result<(SystemParams, ServerState)> {
    curve.validate()?;
    config.fuzzy.check()?;
    let secret = curve.random_scalar(rng);
    let server_pk = curve.mul_base(&secret);
    let params = SystemParams {
        curve,
        server_pk,
        hash: config.hash,
        delta_t: config.delta_t,
        fuzzy: config.fuzzy,
    };
    let server = ServerState::new(secret, params.clone(), server_id.to_string());
    Ok((params, server))
}

#[cfg(test)]
mod tests;
