//! A deterministic simulated world: one server, enrolled users, a monotone
//! clock, and an append-only transcript of everything put on a channel.
//!
//! Messages are sent and delivered in separate steps so an adversary can
//! sit between them. Given the same [`WorldConfig`], every transcript byte is
//! reproducible.

mod scenarios;

pub use scenarios::{
    run_attack_suite, run_attack_suite_on, scenario_anonymity, scenario_impersonation,
    scenario_key_agreement, scenario_key_freshness, scenario_local_gate, scenario_mitm,
    scenario_replay, scenario_tamper, scenario_untraceability, scenario_update, AttackReport,
    Expected, ScenarioOutcome, Verdict,
};

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bytes::{Bytes32, HashAlg};
use crate::curve::CurveParams;
use crate::error::{Error, Result};
use crate::fuzzy::BiometricTemplate;
use crate::protocol::{
    setup, Credentials, DeviceStore, MsgA1, MsgA2, PendingRegistration, PendingSession,
    ProtocolConfig, RegRequest, RegResponse, ServerState, SessionKey, SystemParams, Timestamp,
    UpdateRequest, UpdateResponse, WireMessage,
};

/// Millisecond clock that never runs backwards.
#[derive(Debug, Clone)]
pub struct SimClock {
    now: Timestamp,
}

impl SimClock {
    pub fn new(start: Timestamp) -> Self {
        SimClock { now: start }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn advance(&mut self, delta: u64) {
        self.now += delta;
    }

    /// Moves to `t`, or stays put if `t` is in the past.
    pub fn advance_to(&mut self, t: Timestamp) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    UserToServer,
    ServerToUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Public,
    Secure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Honest,
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub channel: Channel,
    pub kind: &'static str,
    pub bytes: Vec<u8>,
    pub sent_at: Timestamp,
    pub origin: Origin,
}

/// What the adversary sees of one entry: bytes on the public channel, length only on the secure one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleEntry {
    pub index: usize,
    pub direction: Direction,
    pub channel: Channel,
    pub kind: &'static str,
    pub len: usize,
    pub bytes: Option<Vec<u8>>,
    pub sent_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, entry: TranscriptEntry) -> usize {
        self.entries.push(entry);
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&TranscriptEntry> {
        self.entries.get(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn adversary_view(&self) -> Vec<VisibleEntry> {
        self.entries
            .iter()
            .enumerate()
            .map(|(index, e)| VisibleEntry {
                index,
                direction: e.direction,
                channel: e.channel,
                kind: e.kind,
                len: e.bytes.len(),
                bytes: (e.channel == Channel::Public).then(|| e.bytes.clone()),
                sent_at: e.sent_at,
            })
            .collect()
    }

    /// SHA-256 over every entry, for reports.
    pub fn digest(&self) -> Bytes32 {
        let mut buf = Vec::new();
        for e in &self.entries {
            buf.push(e.direction as u8);
            buf.push(e.channel as u8);
            buf.push(e.origin as u8);
            buf.extend_from_slice(e.kind.as_bytes());
            buf.extend_from_slice(&e.sent_at.to_be_bytes());
            buf.extend_from_slice(&(e.bytes.len() as u64).to_be_bytes());
            buf.extend_from_slice(&e.bytes);
        }
        HashAlg::Sha256.digest_parts(&[&buf])
    }

    /// `direction channel kind t=.. ` header plus `field: hex` lines per entry.
    pub fn to_text(&self, curve: &CurveParams) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            let dir = match e.direction {
                Direction::UserToServer => "U->S",
                Direction::ServerToUser => "S->U",
            };
            let ch = match e.channel {
                Channel::Public => "public",
                Channel::Secure => "secure",
            };
            out.push_str(&format!("#{i} {dir} {ch} {} t={}\n", e.kind, e.sent_at));
            match decode_fields(e.kind, &e.bytes, curve) {
                Some(text) => out.push_str(&text),
                None => out.push_str(&format!("raw: {}\n", hex::encode(&e.bytes))),
            }
        }
        out
    }
}

fn decode_fields(kind: &str, bytes: &[u8], curve: &CurveParams) -> Option<String> {
    fn text<M: WireMessage>(bytes: &[u8], curve: &CurveParams) -> Option<String> {
        M::from_wire(bytes, curve).ok().map(|m| m.to_text(curve))
    }
    match kind {
        MsgA1::KIND => text::<MsgA1>(bytes, curve),
        MsgA2::KIND => text::<MsgA2>(bytes, curve),
        RegRequest::KIND => text::<RegRequest>(bytes, curve),
        RegResponse::KIND => text::<RegResponse>(bytes, curve),
        UpdateRequest::KIND => text::<UpdateRequest>(bytes, curve),
        UpdateResponse::KIND => text::<UpdateResponse>(bytes, curve),
        _ => None,
    }
}

/// How the adversary alters one field of a recorded message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mutation {
    /// Bit index within the field, most significant bit first.
    FlipBit(usize),
    Replace(Vec<u8>),
}

/// Dolev-Yao capabilities on the public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryAction {
    Record,
    Replay {
        index: usize,
        at: Timestamp,
    },
    Tamper {
        index: usize,
        field: &'static str,
        mutation: Mutation,
    },
    Inject {
        direction: Direction,
        kind: &'static str,
        bytes: Vec<u8>,
    },
    Drop {
        index: usize,
    },
}

/// Result of an adversary action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionResult {
    Observed(Vec<VisibleEntry>),
    Dropped,
    /// The recipient accepted the message; carries the key it derived.
    Accepted(SessionKey),
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub curve: CurveParams,
    pub protocol: ProtocolConfig,
    pub server_id: String,
    pub seed: u64,
    /// Delay applied to every honest delivery.
    pub hop_latency: u64,
    pub start_time: Timestamp,
}

impl WorldConfig {
    pub fn new(curve: CurveParams, seed: u64) -> Self {
        WorldConfig {
            curve,
            protocol: ProtocolConfig::default(),
            server_id: "substation-01".into(),
            seed,
            hop_latency: 15,
            start_time: 1_700_000_000_000,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        WorldConfig {
            seed,
            ..self.clone()
        }
    }
}

/// An enrolled user as the simulation knows them: secrets plus device.
#[derive(Debug, Clone)]
pub struct SimUser {
    pub id: String,
    pub password: String,
    pub biometric: BiometricTemplate,
    pub device: DeviceStore,
}

/// Keys and transcript positions from one complete handshake.
#[derive(Debug, Clone)]
pub struct SessionRun {
    pub m1_index: usize,
    pub m2_index: usize,
    pub m1: MsgA1,
    pub m2: MsgA2,
    pub sk_user: SessionKey,
    pub sk_server: SessionKey,
}

pub struct World {
    pub config: WorldConfig,
    pub params: SystemParams,
    pub server: ServerState,
    pub clock: SimClock,
    pub transcript: Transcript,
    rng: ChaCha20Rng,
    users: Vec<SimUser>,
    dropped: BTreeSet<usize>,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let (params, server) = setup(
            config.curve.clone(),
            &config.server_id,
            &config.protocol,
            &mut rng,
        )?;
        Ok(World {
            clock: SimClock::new(config.start_time),
            config,
            params,
            server,
            transcript: Transcript::default(),
            rng,
            users: Vec::new(),
            dropped: BTreeSet::new(),
        })
    }

    /// A world around an existing server; the config's curve and protocol
    /// settings are replaced by the server's.
    pub fn from_server(mut config: WorldConfig, server: ServerState) -> Self {
        config.curve = server.params.curve.clone();
        config.protocol = ProtocolConfig {
            hash: server.params.hash,
            delta_t: server.params.delta_t,
            fuzzy: server.params.fuzzy,
        };
        config.server_id = server.server_id.clone();
        World {
            clock: SimClock::new(config.start_time),
            rng: ChaCha20Rng::seed_from_u64(config.seed),
            params: server.params.clone(),
            config,
            server,
            transcript: Transcript::default(),
            users: Vec::new(),
            dropped: BTreeSet::new(),
        }
    }

    /// A world with one enrolled user (`meter-0001`).
    pub fn with_user(config: WorldConfig) -> Result<Self> {
        let mut w = World::new(config)?;
        w.enroll_next()?;
        Ok(w)
    }

    /// Enrolls `meter-NNNN` with the lowest number the server has not seen.
    pub fn enroll_next(&mut self) -> Result<usize> {
        let n = (1..)
            .find(|n| self.server.user(&format!("meter-{n:04}")).is_none())
            .expect("free id");
        self.enroll(&format!("meter-{n:04}"), &format!("grid-pass-{n:04}"))
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn user(&self, idx: usize) -> &SimUser {
        &self.users[idx]
    }

    pub fn users(&self) -> &[SimUser] {
        &self.users
    }

    fn record(
        &mut self,
        direction: Direction,
        channel: Channel,
        kind: &'static str,
        bytes: Vec<u8>,
        origin: Origin,
    ) -> usize {
        self.transcript.push(TranscriptEntry {
            direction,
            channel,
            kind,
            bytes,
            sent_at: self.clock.now(),
            origin,
        })
    }

    fn hop(&mut self) {
        self.clock.advance(self.config.hop_latency);
    }

    /// Registers a user over the secure channel with a random template.
    pub fn enroll(&mut self, id: &str, password: &str) -> Result<usize> {
        let biometric = BiometricTemplate::random(self.params.fuzzy.n, &mut self.rng);
        let creds = Credentials::new(id, password, &biometric);
        let (req, pending) =
            PendingRegistration::start(&self.params, creds, self.clock.now(), &mut self.rng)?;
        let curve = &self.params.curve;
        let wire = req.to_wire(curve);
        self.record(
            Direction::UserToServer,
            Channel::Secure,
            RegRequest::KIND,
            wire,
            Origin::Honest,
        );
        self.hop();
        let resp = self.server.respond_registration(&req, self.clock.now())?;
        let wire = resp.to_wire(&self.params.curve);
        self.record(
            Direction::ServerToUser,
            Channel::Secure,
            RegResponse::KIND,
            wire,
            Origin::Honest,
        );
        self.hop();
        let device = pending.finalize(&resp);
        self.users.push(SimUser {
            id: id.to_string(),
            password: password.to_string(),
            biometric,
            device,
        });
        Ok(self.users.len() - 1)
    }

    /// A fresh reading of the user's biometric with up to `max_flips` flipped bits per block.
    pub fn noisy_reading(&mut self, user: usize, max_flips: usize) -> BiometricTemplate {
        let fx = self.params.fuzzy;
        let mut t = self.users[user].biometric.clone();
        for block in 0..fx.k {
            let flips = (self.rng.next_u32() as usize) % (max_flips.min(fx.rho) + 1);
            let mut positions: Vec<usize> = (0..fx.rho).collect();
            for i in 0..flips {
                let j = i + (self.rng.next_u32() as usize) % (fx.rho - i);
                positions.swap(i, j);
                t.flip(block * fx.rho + positions[i]);
            }
        }
        t
    }

    /// The enrolled biometric with `tolerance + 1` flips in one random block.
    pub fn reading_beyond_tolerance(&mut self, user: usize) -> BiometricTemplate {
        let fx = self.params.fuzzy;
        let mut t = self.users[user].biometric.clone();
        let block = (self.rng.next_u32() as usize) % fx.k;
        for i in 0..=fx.tolerance() {
            t.flip(block * fx.rho + i);
        }
        t
    }

    /// User puts `M_A1` on the public channel; nothing is delivered yet.
    pub fn send_login(
        &mut self,
        user: usize,
        password: &str,
        reading: &BiometricTemplate,
    ) -> Result<(usize, PendingSession)> {
        let u = &self.users[user];
        let creds = Credentials::new(&u.id, password, reading);
        let (m1, pending) =
            u.device
                .login_start(&self.params, creds, self.clock.now(), &mut self.rng)?;
        let wire = m1.to_wire(&self.params.curve);
        let idx = self.record(
            Direction::UserToServer,
            Channel::Public,
            MsgA1::KIND,
            wire,
            Origin::Honest,
        );
        Ok((idx, pending))
    }

    /// Server processes `M_A1` bytes at the current time; its `M_A2` goes on the wire.
    pub fn deliver_to_server(&mut self, bytes: &[u8]) -> Result<(usize, SessionKey)> {
        let m1 = MsgA1::from_wire(bytes, &self.params.curve)?;
        let (m2, sk) = self
            .server
            .respond_auth(&m1, self.clock.now(), &mut self.rng)?;
        let wire = m2.to_wire(&self.params.curve);
        let idx = self.record(
            Direction::ServerToUser,
            Channel::Public,
            MsgA2::KIND,
            wire,
            Origin::Honest,
        );
        Ok((idx, sk))
    }

    /// User processes `M_A2` bytes against an outstanding session.
    pub fn deliver_to_user(
        &mut self,
        pending: &PendingSession,
        bytes: &[u8],
    ) -> Result<SessionKey> {
        let m2 = MsgA2::from_wire(bytes, &self.params.curve)?;
        pending.finalize(&m2, &self.params, self.clock.now())
    }

    fn deliver_entry(
        &mut self,
        direction: Direction,
        bytes: &[u8],
        awaiting: Option<&PendingSession>,
    ) -> Result<SessionKey> {
        match direction {
            Direction::UserToServer => self.deliver_to_server(bytes).map(|(_, sk)| sk),
            Direction::ServerToUser => {
                let pending = awaiting
                    .ok_or_else(|| Error::Malformed("no user session is waiting".into()))?;
                self.deliver_to_user(pending, bytes)
            }
        }
    }

    /// Honest forwarding of a public entry after one hop of latency.
    pub fn deliver(
        &mut self,
        index: usize,
        awaiting: Option<&PendingSession>,
    ) -> Result<Option<SessionKey>> {
        if self.dropped.contains(&index) {
            return Ok(None);
        }
        let entry = self.public_entry(index)?;
        self.hop();
        self.deliver_entry(entry.direction, &entry.bytes, awaiting)
            .map(Some)
    }

    fn public_entry(&self, index: usize) -> Result<TranscriptEntry> {
        let entry = self
            .transcript
            .get(index)
            .ok_or_else(|| Error::Malformed(format!("no transcript entry {index}")))?;
        if entry.channel != Channel::Public {
            return Err(Error::Malformed(
                "secure-channel contents are not visible".into(),
            ));
        }
        Ok(entry.clone())
    }

    /// Carries out one adversary action against the public channel.
    pub fn act(
        &mut self,
        action: AdversaryAction,
        awaiting: Option<&PendingSession>,
    ) -> Result<ActionResult> {
        match action {
            AdversaryAction::Record => Ok(ActionResult::Observed(self.transcript.adversary_view())),
            AdversaryAction::Drop { index } => {
                self.public_entry(index)?;
                self.dropped.insert(index);
                Ok(ActionResult::Dropped)
            }
            AdversaryAction::Replay { index, at } => {
                let entry = self.public_entry(index)?;
                self.clock.advance_to(at);
                self.record(
                    entry.direction,
                    Channel::Public,
                    entry.kind,
                    entry.bytes.clone(),
                    Origin::Adversary,
                );
                self.deliver_entry(entry.direction, &entry.bytes, awaiting)
                    .map(ActionResult::Accepted)
            }
            AdversaryAction::Tamper {
                index,
                field,
                mutation,
            } => {
                let entry = self.public_entry(index)?;
                let bytes = self.mutate(&entry, field, &mutation)?;
                self.record(
                    entry.direction,
                    Channel::Public,
                    entry.kind,
                    bytes.clone(),
                    Origin::Adversary,
                );
                self.deliver_entry(entry.direction, &bytes, awaiting)
                    .map(ActionResult::Accepted)
            }
            AdversaryAction::Inject {
                direction,
                kind,
                bytes,
            } => {
                self.record(
                    direction,
                    Channel::Public,
                    kind,
                    bytes.clone(),
                    Origin::Adversary,
                );
                self.deliver_entry(direction, &bytes, awaiting)
                    .map(ActionResult::Accepted)
            }
        }
    }

    fn mutate(&self, entry: &TranscriptEntry, field: &str, mutation: &Mutation) -> Result<Vec<u8>> {
        let range = field_range(entry.kind, &entry.bytes, field, &self.params.curve)?;
        let mut bytes = entry.bytes.clone();
        match mutation {
            Mutation::FlipBit(bit) => {
                if *bit >= range.len() * 8 {
                    return Err(Error::Malformed(format!("bit {bit} outside field {field}")));
                }
                bytes[range.start + bit / 8] ^= 0x80 >> (bit % 8);
            }
            Mutation::Replace(new) => {
                bytes.splice(range, new.iter().copied());
            }
        }
        Ok(bytes)
    }

    /// Full honest handshake for `user` with a within-tolerance noisy reading.
    pub fn run_honest_session(&mut self, user: usize) -> Result<SessionRun> {
        let tol = self.params.fuzzy.tolerance();
        let reading = self.noisy_reading(user, tol);
        let password = self.users[user].password.clone();
        let (m1_index, pending) = self.send_login(user, &password, &reading)?;
        let sk_server = self
            .deliver(m1_index, None)?
            .expect("honest delivery is not dropped");
        let m2_index = self.transcript.len() - 1;
        let sk_user = self
            .deliver(m2_index, Some(&pending))?
            .expect("honest delivery is not dropped");
        let curve = &self.params.curve;
        Ok(SessionRun {
            m1_index,
            m2_index,
            m1: MsgA1::from_wire(&self.transcript.entries()[m1_index].bytes, curve)?,
            m2: MsgA2::from_wire(&self.transcript.entries()[m2_index].bytes, curve)?,
            sk_user,
            sk_server,
        })
    }

    /// Password/biometric update over the secure channel. On success the
    /// user's credentials and device are replaced.
    pub fn update_credentials(
        &mut self,
        user: usize,
        old_password: &str,
        old_reading: &BiometricTemplate,
        new_password: &str,
    ) -> Result<()> {
        let new_bio = BiometricTemplate::random(self.params.fuzzy.n, &mut self.rng);
        let u = &self.users[user];
        let old = Credentials::new(&u.id, old_password, old_reading);
        let (req, pending) = u.device.update_request(
            &self.params,
            old,
            new_password,
            &new_bio,
            self.clock.now(),
            &mut self.rng,
        )?;
        let wire = req.to_wire(&self.params.curve);
        self.record(
            Direction::UserToServer,
            Channel::Secure,
            UpdateRequest::KIND,
            wire,
            Origin::Honest,
        );
        self.hop();
        let resp = self.server.respond_update(&req, self.clock.now())?;
        let wire = resp.to_wire(&self.params.curve);
        self.record(
            Direction::ServerToUser,
            Channel::Secure,
            UpdateResponse::KIND,
            wire,
            Origin::Honest,
        );
        self.hop();
        let u = &mut self.users[user];
        u.device = pending.finalize(&resp);
        u.password = new_password.to_string();
        u.biometric = new_bio;
        Ok(())
    }
}

/// Byte range of a named field within a wire message.
pub fn field_range(
    kind: &str,
    bytes: &[u8],
    field: &str,
    curve: &CurveParams,
) -> Result<std::ops::Range<usize>> {
    let layout = match kind {
        MsgA1::KIND => MsgA1::from_wire(bytes, curve)?.layout(curve),
        MsgA2::KIND => MsgA2::from_wire(bytes, curve)?.layout(curve),
        other => {
            return Err(Error::Malformed(format!(
                "{other} is not a public handshake message"
            )))
        }
    };
    layout
        .into_iter()
        .find(|(name, _)| *name == field)
        .map(|(_, r)| r)
        .ok_or_else(|| Error::Malformed(format!("{kind} has no field {field}")))
}

/// Field names of `M_A1` and `M_A2` in wire order.
pub const MSG_A1_FIELDS: [&str; 4] = ["S1", "ID_U1", "U_point", "t1"];
pub const MSG_A2_FIELDS: [&str; 4] = ["ID_S1", "S2", "S_point", "t3"];
