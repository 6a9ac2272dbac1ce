use rand_core::RngCore;

use super::{
    MsgA1, MsgA2, RegRequest, RegResponse, SessionKey, SystemParams, Timestamp, UpdateRequest,
    UpdateResponse,
};
use crate::bytes::{encode_timestamp, Bytes32};
use crate::curve::Scalar;
use crate::error::{Error, Result};
use crate::fuzzy::{BiometricTemplate, HelperData};

/// What the user types and imprints at the device.
#[derive(Debug, Clone, Copy)]
pub struct Credentials<'a> {
    pub id: &'a str,
    pub password: &'a str,
    pub biometric: &'a BiometricTemplate,
}

impl<'a> Credentials<'a> {
    pub fn new(id: &'a str, password: &'a str, biometric: &'a BiometricTemplate) -> Self {
        Credentials {
            id,
            password,
            biometric,
        }
    }
}

/// `R1 = h(PW ∥ σ) ⊕ r`.
fn masked_r1(params: &SystemParams, password: &str, sigma: &Bytes32, r: &Scalar) -> Bytes32 {
    let h = params.hash;
    h.hash_fields(&[&h.encode_str(password), sigma]) ^ r.encode()
}

/// `R5 = h(ID ∥ PW ∥ R4)`.
fn r5(params: &SystemParams, id: &str, password: &str, r4: &Bytes32) -> Bytes32 {
    let h = params.hash;
    h.hash_fields(&[&h.encode_str(id), &h.encode_str(password), r4])
}

/// State held between sending `RegRequest` and receiving the response.
#[derive(Debug, Clone)]
pub struct PendingRegistration {
    id: String,
    password: String,
    sigma: Bytes32,
    helper: HelperData,
    r: Scalar,
    params: SystemParams,
}

impl PendingRegistration {
    /// Registration, user side, step one: `Gen(B)`, fresh `r`, masked `R1`.
    pub fn start(
        params: &SystemParams,
        creds: Credentials<'_>,
        now: Timestamp,
        rng: &mut impl RngCore,
    ) -> Result<(RegRequest, Self)> {
        let (sigma, helper) = params.extractor().gen(creds.biometric, rng)?;
        let r = params.curve.random_scalar(rng);
        let r1 = masked_r1(params, creds.password, &sigma, &r);
        let req = RegRequest {
            id: creds.id.to_string(),
            r1,
            t_rg1: now,
        };
        let pending = PendingRegistration {
            id: creds.id.to_string(),
            password: creds.password.to_string(),
            sigma,
            helper,
            r,
            params: params.clone(),
        };
        Ok((req, pending))
    }

    pub fn sigma(&self) -> &Bytes32 {
        &self.sigma
    }

    pub fn r(&self) -> &Scalar {
        &self.r
    }

    /// `R4 = R3 ⊕ σ`, `R5 = h(ID ∥ PW ∥ R4)`; σ and PW are dropped here.
    pub fn finalize(self, resp: &RegResponse) -> DeviceStore {
        let r4 = resp.r3 ^ self.sigma;
        DeviceStore {
            user_id: self.id.clone(),
            r3: resp.r3,
            r4,
            r5: r5(&self.params, &self.id, &self.password, &r4),
            helper: self.helper,
            r: self.r,
        }
    }
}

/// What the user device persists after registration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceStore {
    pub user_id: String,
    pub r3: Bytes32,
    pub r4: Bytes32,
    pub r5: Bytes32,
    pub helper: HelperData,
    pub r: Scalar,
}

impl DeviceStore {
    /// The local gate: `σ' = Rep(B, θ)`, `R4' = R3 ⊕ σ'`, check `R5' = R5`.
    pub fn verify_local(&self, params: &SystemParams, creds: Credentials<'_>) -> Result<Bytes32> {
        let sigma = params.extractor().rep(creds.biometric, &self.helper)?;
        let r4 = self.r3 ^ sigma;
        if r5(params, creds.id, creds.password, &r4) != self.r5 {
            return Err(Error::LocalAuthFailure);
        }
        Ok(sigma)
    }

    /// Login: passes the local gate, then builds `M_A1`.
    pub fn login_start(
        &self,
        params: &SystemParams,
        creds: Credentials<'_>,
        now: Timestamp,
        rng: &mut impl RngCore,
    ) -> Result<(MsgA1, PendingSession)> {
        let sigma = self.verify_local(params, creds)?;
        let h = params.hash;
        let u = params.curve.random_scalar(rng);
        let t1 = encode_timestamp(now);
        let r1 = masked_r1(params, creds.password, &sigma, &self.r);
        let id = h.encode_str(creds.id);
        let s1 = h.hash_fields(&[&id, &r1, &t1]);
        let id_u1 = id ^ r1 ^ t1;
        let u_point = params.curve.mul_base(&u);
        let msg = MsgA1 {
            s1,
            id_u1,
            u_point,
            t1: now,
        };
        let pending = PendingSession {
            id: creds.id.to_string(),
            u,
            r3: self.r3,
            s1,
            t1: now,
        };
        Ok((msg, pending))
    }

    /// Update, user side: old credentials must pass the gate; `R1* = h(PW* ∥ σ*) ⊕ r`.
    pub fn update_request(
        &self,
        params: &SystemParams,
        old: Credentials<'_>,
        new_password: &str,
        new_biometric: &BiometricTemplate,
        now: Timestamp,
        rng: &mut impl RngCore,
    ) -> Result<(UpdateRequest, PendingUpdate)> {
        self.verify_local(params, old)?;
        let (sigma, helper) = params.extractor().gen(new_biometric, rng)?;
        let r1_star = masked_r1(params, new_password, &sigma, &self.r);
        let req = UpdateRequest {
            id: old.id.to_string(),
            r1_star,
            t_rg1: now,
        };
        let pending = PendingUpdate {
            id: old.id.to_string(),
            password: new_password.to_string(),
            sigma,
            helper,
            r: self.r.clone(),
            params: params.clone(),
        };
        Ok((req, pending))
    }
}

/// User-side session state between `M_A1` and `M_A2`.
#[derive(Debug, Clone)]
pub struct PendingSession {
    id: String,
    u: Scalar,
    r3: Bytes32,
    s1: Bytes32,
    t1: Timestamp,
}

impl PendingSession {
    pub fn t1(&self) -> Timestamp {
        self.t1
    }

    /// Verifies `M_A2` and derives `SK_US`.
    pub fn finalize(
        &self,
        m2: &MsgA2,
        params: &SystemParams,
        now: Timestamp,
    ) -> Result<SessionKey> {
        let h = params.hash;
        params.check_fresh(m2.t3, now)?;
        let t3 = encode_timestamp(m2.t3);
        let id_s_star = m2.id_s1 ^ self.r3 ^ t3;
        if h.hash_fields(&[&id_s_star, &self.r3, &t3]) != m2.s2 {
            return Err(Error::AuthenticationFailure);
        }
        params.check_peer_point(&m2.s_point)?;
        let dh = params.curve.scalar_mul(self.u.value(), &m2.s_point)?;
        let id = h.encode_str(&self.id);
        Ok(params.session_key(&id, &id_s_star, &self.s1, &m2.s2, &self.r3, &dh, m2.t3))
    }
}

/// User-side state between `UpdateRequest` and its response.
#[derive(Debug, Clone)]
pub struct PendingUpdate {
    id: String,
    password: String,
    sigma: Bytes32,
    helper: HelperData,
    r: Scalar,
    params: SystemParams,
}

impl PendingUpdate {
    pub fn sigma(&self) -> &Bytes32 {
        &self.sigma
    }

    /// Replaces the device store with `{R3*, R4*, R5*, θ*}`.
    pub fn finalize(self, resp: &UpdateResponse) -> DeviceStore {
        let r4 = resp.r3_star ^ self.sigma;
        DeviceStore {
            user_id: self.id.clone(),
            r3: resp.r3_star,
            r4,
            r5: r5(&self.params, &self.id, &self.password, &r4),
            helper: self.helper,
            r: self.r,
        }
    }
}
