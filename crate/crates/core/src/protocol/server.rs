use std::collections::BTreeMap;

use rand_core::RngCore;

use super::{
    MsgA1, MsgA2, RegRequest, RegResponse, SessionKey, SystemParams, Timestamp, UpdateRequest,
    UpdateResponse,
};
use crate::bytes::{encode_counter, encode_timestamp, Bytes32};
use crate::curve::Scalar;
use crate::error::{Error, Result};

/// Per-user server record. `R2 = h(ID ∥ X ∥ y)` is recomputed on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub id: String,
    pub r1: Bytes32,
    pub r3: Bytes32,
    pub y: u64,
}

/// Server secret, public parameters and the user table.
#[derive(Clone)]
pub struct ServerState {
    secret: Scalar,
    pub params: SystemParams,
    pub server_id: String,
    users: BTreeMap<String, UserRecord>,
    next_counter: u64,
}

impl std::fmt::Debug for ServerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerState")
            .field("server_id", &self.server_id)
            .field("users", &self.users.len())
            .finish_non_exhaustive()
    }
}

impl ServerState {
    pub(crate) fn new(secret: Scalar, params: SystemParams, server_id: String) -> Self {
        ServerState {
            secret,
            params,
            server_id,
            users: BTreeMap::new(),
            next_counter: 0,
        }
    }

    /// Rebuilds a server from persisted parts, checking `PK_S = X·G`.
    pub fn restore(
        secret: Scalar,
        params: SystemParams,
        server_id: String,
        users: impl IntoIterator<Item = UserRecord>,
        next_counter: u64,
    ) -> Result<Self> {
        if params.curve.mul_base(&secret) != params.server_pk {
            return Err(Error::Malformed(
                "server public key does not match the secret".into(),
            ));
        }
        let users: BTreeMap<_, _> = users.into_iter().map(|u| (u.id.clone(), u)).collect();
        if users.values().any(|u| u.y >= next_counter) {
            return Err(Error::Malformed("counter behind stored records".into()));
        }
        Ok(ServerState {
            secret,
            params,
            server_id,
            users,
            next_counter,
        })
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn next_counter(&self) -> u64 {
        self.next_counter
    }

    pub fn users(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub fn user(&self, id: &str) -> Option<&UserRecord> {
        self.users.get(id)
    }

    /// `R2 = h(ID ∥ X ∥ y)`.
    pub fn r2(&self, id: &str, y: u64) -> Bytes32 {
        let h = self.params.hash;
        h.hash_fields(&[&h.encode_str(id), &self.secret.encode(), &encode_counter(y)])
    }

    /// Registration, server side: freshness check, fresh counter, `R3 = R2 ⊕ R1`.
    pub fn respond_registration(
        &mut self,
        req: &RegRequest,
        now: Timestamp,
    ) -> Result<RegResponse> {
        self.params.check_fresh(req.t_rg1, now)?;
        if self.users.contains_key(&req.id) {
            return Err(Error::DuplicateRegistration(req.id.clone()));
        }
        let y = self.next_counter;
        let r3 = self.r2(&req.id, y) ^ req.r1;
        self.next_counter += 1;
        self.users.insert(
            req.id.clone(),
            UserRecord {
                id: req.id.clone(),
                r1: req.r1,
                r3,
                y,
            },
        );
        Ok(RegResponse { r3, t: now })
    }

    /// Authentication, server side. Returns `M_A2` and `SK_SU`.
    ///
    /// The masked identity is resolved by trying each record's `R1`; the
    /// matching record must unmask to its own identity.
    pub fn respond_auth(
        &self,
        m1: &MsgA1,
        now: Timestamp,
        rng: &mut impl RngCore,
    ) -> Result<(MsgA2, SessionKey)> {
        let params = &self.params;
        let h = params.hash;
        params.check_fresh(m1.t1, now)?;
        let t1 = encode_timestamp(m1.t1);
        let (record, id_star) = self
            .users
            .values()
            .find_map(|rec| {
                let unmasked = m1.id_u1 ^ rec.r1 ^ t1;
                (unmasked == h.encode_str(&rec.id)).then_some((rec, unmasked))
            })
            .ok_or(Error::UnknownUser)?;

        let s1_star = h.hash_fields(&[&id_star, &record.r1, &t1]);
        if s1_star != m1.s1 {
            return Err(Error::AuthenticationFailure);
        }
        params.check_peer_point(&m1.u_point)?;

        let s = params.curve.random_scalar(rng);
        let t3 = now;
        let s_point = params.curve.mul_base(&s);
        let id_s = h.encode_str(&self.server_id);
        let t3_enc = encode_timestamp(t3);
        let s2 = h.hash_fields(&[&id_s, &record.r3, &t3_enc]);
        let dh = params.curve.scalar_mul(s.value(), &m1.u_point)?;
        let sk = params.session_key(&id_star, &id_s, &m1.s1, &s2, &record.r3, &dh, t3);
        let id_s1 = id_s ^ record.r3 ^ t3_enc;
        Ok((
            MsgA2 {
                id_s1,
                s2,
                s_point,
                t3,
            },
            sk,
        ))
    }

    /// Update, server side: `R3* = R2 ⊕ R1*` with the user's counter unchanged.
    pub fn respond_update(
        &mut self,
        req: &UpdateRequest,
        now: Timestamp,
    ) -> Result<UpdateResponse> {
        self.params.check_fresh(req.t_rg1, now)?;
        let y = self.users.get(&req.id).ok_or(Error::UnknownUser)?.y;
        let r3_star = self.r2(&req.id, y) ^ req.r1_star;
        let record = self.users.get_mut(&req.id).expect("checked above");
        record.r1 = req.r1_star;
        record.r3 = r3_star;
        Ok(UpdateResponse { r3_star, t: now })
    }
}
