//! Adversary scenarios, one family per security property, and the suite
//! runner that collects them into a report.

use std::fmt;

use serde::Serialize;

use super::{
    ActionResult, AdversaryAction, Channel, Direction, Mutation, World, WorldConfig, MSG_A1_FIELDS,
    MSG_A2_FIELDS,
};
use crate::bytes::{encode_timestamp, Bytes32};
use crate::error::{ErrorKind, Result};
use crate::protocol::{MsgA1, MsgA2, ServerState, SessionKey, WireMessage};

/// What a scenario should observe if the protocol meets its claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Accepted,
    /// Any rejection when `None`.
    Rejected(Option<ErrorKind>),
    /// A negative control: the checked property must be seen to fail.
    Violated,
    /// Outcome is recorded without a pass/fail claim.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected(ErrorKind),
    Violated(String),
}

impl From<Result<()>> for Verdict {
    fn from(r: Result<()>) -> Self {
        match r {
            Ok(()) => Verdict::Accepted,
            Err(e) => Verdict::Rejected(e.kind()),
        }
    }
}

impl Expected {
    pub fn matches(&self, v: &Verdict) -> bool {
        match (self, v) {
            (Expected::Informational, _) => true,
            (Expected::Accepted, Verdict::Accepted) => true,
            (Expected::Rejected(None), Verdict::Rejected(_)) => true,
            (Expected::Rejected(Some(k)), Verdict::Rejected(got)) => k == got,
            (Expected::Violated, Verdict::Violated(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Accepted => f.write_str("accepted"),
            Expected::Rejected(None) => f.write_str("rejected"),
            Expected::Rejected(Some(k)) => write!(f, "rejected({k})"),
            Expected::Violated => f.write_str("violated"),
            Expected::Informational => f.write_str("informational"),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted => f.write_str("accepted"),
            Verdict::Rejected(k) => write!(f, "rejected({k})"),
            Verdict::Violated(why) => write!(f, "violated({why})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub family: &'static str,
    pub name: String,
    pub expected: Expected,
    pub observed: Verdict,
    pub pass: bool,
    pub transcript_hash: Bytes32,
}

impl ScenarioOutcome {
    fn new(
        family: &'static str,
        name: impl Into<String>,
        expected: Expected,
        observed: Verdict,
        world: &World,
    ) -> Self {
        ScenarioOutcome {
            family,
            name: name.into(),
            pass: expected.matches(&observed),
            expected,
            observed,
            transcript_hash: world.transcript.digest(),
        }
    }

    pub fn is_informational(&self) -> bool {
        self.expected == Expected::Informational
    }
}

fn key_verdict(r: Result<Option<SessionKey>>) -> Verdict {
    match r {
        Ok(_) => Verdict::Accepted,
        Err(e) => Verdict::Rejected(e.kind()),
    }
}

fn action_verdict(r: Result<ActionResult>) -> Verdict {
    match r {
        Ok(_) => Verdict::Accepted,
        Err(e) => Verdict::Rejected(e.kind()),
    }
}

fn credentials(world: &mut World, user: usize) -> (String, crate::BiometricTemplate) {
    let tol = world.params.fuzzy.tolerance();
    let reading = world.noisy_reading(user, tol);
    (world.user(user).password.clone(), reading)
}

/// Replayed handshake messages after and within the freshness window.
pub fn scenario_replay(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "replay";
    let delta = world.params.delta_t;
    let mut out = Vec::new();

    let run = world.run_honest_session(0)?;
    let at = world.transcript.entries()[run.m1_index].sent_at + delta + 1;
    let r = world.act(
        AdversaryAction::Replay {
            index: run.m1_index,
            at,
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "m_a1-after-window",
        Expected::Rejected(Some(ErrorKind::StaleTimestamp)),
        action_verdict(r),
        world,
    ));

    // The user starts a new login; the adversary swallows it and answers with the old M_A2.
    let (pw, reading) = credentials(world, 0);
    let (idx, pending) = world.send_login(0, &pw, &reading)?;
    world.act(AdversaryAction::Drop { index: idx }, None)?;
    let at = world.transcript.entries()[run.m2_index].sent_at + delta + 1;
    let r = world.act(
        AdversaryAction::Replay {
            index: run.m2_index,
            at,
        },
        Some(&pending),
    );
    out.push(ScenarioOutcome::new(
        F,
        "m_a2-after-window",
        Expected::Rejected(Some(ErrorKind::StaleTimestamp)),
        action_verdict(r),
        world,
    ));

    // Timestamps are the only replay defence, so same-window replays are measured, not judged.
    let run = world.run_honest_session(0)?;
    let now = world.clock.now();
    let r = world.act(
        AdversaryAction::Replay {
            index: run.m1_index,
            at: now,
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "m_a1-same-window",
        Expected::Informational,
        action_verdict(r),
        world,
    ));

    let (pw, reading) = credentials(world, 0);
    let (idx, pending) = world.send_login(0, &pw, &reading)?;
    world.act(AdversaryAction::Drop { index: idx }, None)?;
    let now = world.clock.now();
    let r = world.act(
        AdversaryAction::Replay {
            index: run.m2_index,
            at: now,
        },
        Some(&pending),
    );
    out.push(ScenarioOutcome::new(
        F,
        "m_a2-same-window",
        Expected::Informational,
        action_verdict(r),
        world,
    ));

    // Honest messages that arrive late.
    let (pw, reading) = credentials(world, 0);
    let (idx, _) = world.send_login(0, &pw, &reading)?;
    world.clock.advance(delta + 1);
    let r = world.deliver(idx, None);
    out.push(ScenarioOutcome::new(
        F,
        "inter-hop-delay",
        Expected::Rejected(Some(ErrorKind::StaleTimestamp)),
        key_verdict(r),
        world,
    ));
    Ok(out)
}

/// An active man in the middle: delaying and rewriting traffic in flight.
pub fn scenario_mitm(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "mitm";
    let delta = world.params.delta_t;
    let mut out = Vec::new();

    let (pw, reading) = credentials(world, 0);
    let (idx, _) = world.send_login(0, &pw, &reading)?;
    world.act(AdversaryAction::Drop { index: idx }, None)?;
    let at = world.clock.now() + delta + 1;
    let r = world.act(AdversaryAction::Replay { index: idx, at }, None);
    out.push(ScenarioOutcome::new(
        F,
        "held-m_a1",
        Expected::Rejected(Some(ErrorKind::StaleTimestamp)),
        action_verdict(r),
        world,
    ));

    // S1 does not cover the ECDH share, so swapping it goes unnoticed by
    // the server; the adversary still lacks R3 and the peers' keys diverge.
    let (pw, reading) = credentials(world, 0);
    let (idx, pending) = world.send_login(0, &pw, &reading)?;
    world.act(AdversaryAction::Drop { index: idx }, None)?;
    let curve = world.params.curve.clone();
    let a = curve.random_scalar(world.rng());
    let own_share = curve.point_to_wire(&curve.mul_base(&a));
    let tampered = world.act(
        AdversaryAction::Tamper {
            index: idx,
            field: "U_point",
            mutation: Mutation::Replace(own_share),
        },
        None,
    );
    let observed = match tampered {
        Err(e) => Verdict::Rejected(e.kind()),
        Ok(ActionResult::Accepted(sk_server)) => {
            let m2_index = world.transcript.len() - 1;
            match world.deliver(m2_index, Some(&pending)) {
                Ok(Some(sk_user)) if sk_user != sk_server => Verdict::Violated(
                    "server accepted substituted share; session keys diverge".into(),
                ),
                Ok(_) => Verdict::Accepted,
                Err(e) => Verdict::Rejected(e.kind()),
            }
        }
        Ok(_) => Verdict::Accepted,
    };
    out.push(ScenarioOutcome::new(
        F,
        "share-substitution",
        Expected::Informational,
        observed,
        world,
    ));
    Ok(out)
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn leak_check(world: &World) -> Verdict {
    let h = world.params.hash;
    let mut needles: Vec<(String, Vec<u8>)> = Vec::new();
    for u in world.users() {
        needles.push((u.id.clone(), u.id.as_bytes().to_vec()));
        needles.push((
            format!("enc({})", u.id),
            h.digest_parts(&[u.id.as_bytes()]).0.to_vec(),
        ));
    }
    let sid = &world.server.server_id;
    needles.push((sid.clone(), sid.as_bytes().to_vec()));
    needles.push((
        format!("enc({sid})"),
        h.digest_parts(&[sid.as_bytes()]).0.to_vec(),
    ));
    for entry in world.transcript.adversary_view() {
        let Some(bytes) = entry.bytes else { continue };
        for (label, needle) in &needles {
            if contains(&bytes, needle) {
                return Verdict::Violated(format!("entry {} carries {label}", entry.index));
            }
        }
    }
    Verdict::Accepted
}

/// No public message carries an identity, raw or encoded.
pub fn scenario_anonymity(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "anonymity";
    let mut out = Vec::new();
    world.run_honest_session(0)?;
    // The registration entries on the secure channel carry the raw id; only their lengths are visible.
    out.push(ScenarioOutcome::new(
        F,
        "honest-transcript",
        Expected::Accepted,
        leak_check(world),
        world,
    ));

    // The raw id does sit in the secure-channel bytes; the view must hide it.
    let id = world.user(0).id.clone();
    let in_secure = world
        .transcript
        .entries()
        .iter()
        .any(|e| e.channel == Channel::Secure && contains(&e.bytes, id.as_bytes()));
    let observed = match leak_check(world) {
        Verdict::Accepted if in_secure => Verdict::Accepted,
        Verdict::Accepted => Verdict::Violated("no secure-channel entry carries the id".into()),
        v => v,
    };
    out.push(ScenarioOutcome::new(
        F,
        "secure-channel-excluded",
        Expected::Accepted,
        observed,
        world,
    ));

    let leaky = world
        .params
        .hash
        .digest_parts(&[world.user(0).id.as_bytes()]);
    let _ = world.act(
        AdversaryAction::Inject {
            direction: Direction::UserToServer,
            kind: "DEBUG",
            bytes: leaky.0.to_vec(),
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "leaking-debug-message",
        Expected::Violated,
        leak_check(world),
        world,
    ));
    Ok(out)
}

/// Two honest sessions of one user must end with different keys.
pub fn scenario_key_freshness(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    let a = world.run_honest_session(0)?;
    let b = world.run_honest_session(0)?;
    let observed = if a.sk_user == b.sk_user || a.sk_server == b.sk_server {
        Verdict::Violated("session key repeated".into())
    } else {
        Verdict::Accepted
    };
    Ok(vec![ScenarioOutcome::new(
        "key-freshness",
        "two-sessions",
        Expected::Accepted,
        observed,
        world,
    )])
}

/// Single-bit flips in every handshake field, at the given bit positions.
///
/// `bits` may hold positions beyond a field's width; those are skipped.
pub fn scenario_tamper(world: &mut World, bits: &[usize]) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "message-authentication";
    let curve = world.params.curve.clone();
    let mut out = Vec::new();
    for field in MSG_A1_FIELDS {
        for &bit in bits {
            let (pw, reading) = credentials(world, 0);
            let (idx, _) = world.send_login(0, &pw, &reading)?;
            let e = world.transcript.entries()[idx].clone();
            let width = super::field_range(e.kind, &e.bytes, field, &curve)?.len() * 8;
            if bit >= width {
                continue;
            }
            world.act(AdversaryAction::Drop { index: idx }, None)?;
            world.clock.advance(world.config.hop_latency);
            let r = world.act(
                AdversaryAction::Tamper {
                    index: idx,
                    field,
                    mutation: Mutation::FlipBit(bit),
                },
                None,
            );
            out.push(ScenarioOutcome::new(
                F,
                format!("m_a1/{field}/bit{bit}"),
                Expected::Rejected(None),
                action_verdict(r),
                world,
            ));
        }
    }
    for field in MSG_A2_FIELDS {
        for &bit in bits {
            let (pw, reading) = credentials(world, 0);
            let (idx, pending) = world.send_login(0, &pw, &reading)?;
            world.deliver(idx, None)?;
            let m2_index = world.transcript.len() - 1;
            let e = world.transcript.entries()[m2_index].clone();
            let width = super::field_range(e.kind, &e.bytes, field, &curve)?.len() * 8;
            if bit >= width {
                continue;
            }
            world.act(AdversaryAction::Drop { index: m2_index }, None)?;
            world.clock.advance(world.config.hop_latency);
            let r = world.act(
                AdversaryAction::Tamper {
                    index: m2_index,
                    field,
                    mutation: Mutation::FlipBit(bit),
                },
                Some(&pending),
            );
            out.push(ScenarioOutcome::new(
                F,
                format!("m_a2/{field}/bit{bit}"),
                Expected::Rejected(None),
                action_verdict(r),
                world,
            ));
        }
    }
    Ok(out)
}

/// An adversary who knows the victim's id and a recorded transcript but no secrets.
pub fn scenario_impersonation(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "impersonation";
    let curve = world.params.curve.clone();
    let mut out = Vec::new();
    let run = world.run_honest_session(0)?;
    let random32 = |w: &mut World| {
        let mut b = [0u8; 32];
        rand_core::RngCore::fill_bytes(w.rng(), &mut b);
        Bytes32(b)
    };

    let a = curve.random_scalar(world.rng());
    let forged = MsgA1 {
        s1: random32(world),
        id_u1: random32(world),
        u_point: curve.mul_base(&a),
        t1: world.clock.now(),
    };
    let r = world.act(
        AdversaryAction::Inject {
            direction: Direction::UserToServer,
            kind: MsgA1::KIND,
            bytes: forged.to_wire(&curve),
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "forged-m_a1",
        Expected::Rejected(None),
        action_verdict(r),
        world,
    ));

    let mut stale_mask = run.m1.clone();
    world.clock.advance(world.config.hop_latency);
    stale_mask.t1 = world.clock.now();
    let r = world.act(
        AdversaryAction::Inject {
            direction: Direction::UserToServer,
            kind: MsgA1::KIND,
            bytes: stale_mask.to_wire(&curve),
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "recorded-id_u1-new-t1",
        Expected::Rejected(Some(ErrorKind::UnknownUser)),
        action_verdict(r),
        world,
    ));

    // Timestamps are public, so the mask can be re-timed; S1 still needs R1.
    let mut retimed = run.m1.clone();
    world.clock.advance(world.config.hop_latency);
    retimed.t1 = world.clock.now();
    retimed.id_u1 = run.m1.id_u1 ^ encode_timestamp(run.m1.t1) ^ encode_timestamp(retimed.t1);
    let r = world.act(
        AdversaryAction::Inject {
            direction: Direction::UserToServer,
            kind: MsgA1::KIND,
            bytes: retimed.to_wire(&curve),
        },
        None,
    );
    out.push(ScenarioOutcome::new(
        F,
        "retimed-id_u1",
        Expected::Rejected(Some(ErrorKind::AuthenticationFailure)),
        action_verdict(r),
        world,
    ));

    // Server impersonation towards a waiting user.
    let (pw, reading) = credentials(world, 0);
    let (idx, pending) = world.send_login(0, &pw, &reading)?;
    world.act(AdversaryAction::Drop { index: idx }, None)?;
    let b = curve.random_scalar(world.rng());
    let forged = MsgA2 {
        id_s1: random32(world),
        s2: random32(world),
        s_point: curve.mul_base(&b),
        t3: world.clock.now(),
    };
    let r = world.act(
        AdversaryAction::Inject {
            direction: Direction::ServerToUser,
            kind: MsgA2::KIND,
            bytes: forged.to_wire(&curve),
        },
        Some(&pending),
    );
    out.push(ScenarioOutcome::new(
        F,
        "forged-m_a2",
        Expected::Rejected(Some(ErrorKind::AuthenticationFailure)),
        action_verdict(r),
        world,
    ));
    Ok(out)
}

pub fn scenario_key_agreement(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    let run = world.run_honest_session(0)?;
    let observed = if run.sk_user == run.sk_server {
        Verdict::Accepted
    } else {
        Verdict::Violated("SK_US differs from SK_SU".into())
    };
    Ok(vec![ScenarioOutcome::new(
        "key-agreement",
        "honest-run",
        Expected::Accepted,
        observed,
        world,
    )])
}

fn linkage_verdict(a: &MsgA1, b: &MsgA1) -> Verdict {
    let mut same = Vec::new();
    if a.s1 == b.s1 {
        same.push("S1");
    }
    if a.id_u1 == b.id_u1 {
        same.push("ID_U1");
    }
    if a.u_point == b.u_point {
        same.push("U_point");
    }
    if same.is_empty() {
        Verdict::Accepted
    } else {
        Verdict::Violated(format!("repeated {}", same.join(",")))
    }
}

/// No field of `M_A1` repeats between sessions.
pub fn scenario_untraceability(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "untraceability";
    let mut out = Vec::new();
    let a = world.run_honest_session(0)?;
    let b = world.run_honest_session(0)?;
    out.push(ScenarioOutcome::new(
        F,
        "same-user",
        Expected::Accepted,
        linkage_verdict(&a.m1, &b.m1),
        world,
    ));

    let other = world.enroll_next()?;
    let c = world.run_honest_session(other)?;
    out.push(ScenarioOutcome::new(
        F,
        "two-users",
        Expected::Accepted,
        linkage_verdict(&a.m1, &c.m1),
        world,
    ));

    // ID_U1 ⊕ t1 = enc(ID) ⊕ R1 for every session of a user, computable from public bytes.
    let tag = |m: &MsgA1| m.id_u1 ^ encode_timestamp(m.t1);
    let observed = if tag(&a.m1) == tag(&b.m1) && tag(&a.m1) != tag(&c.m1) {
        Verdict::Violated("ID_U1 xor t1 is a per-user constant".into())
    } else {
        Verdict::Accepted
    };
    out.push(ScenarioOutcome::new(
        F,
        "masked-id-xor-timestamp",
        Expected::Informational,
        observed,
        world,
    ));

    // Control: identical seed and clock force identical nonces.
    let mut twin_a = World::with_user(world.config.clone())?;
    let mut twin_b = World::with_user(world.config.clone())?;
    let x = twin_a.run_honest_session(0)?;
    let y = twin_b.run_honest_session(0)?;
    out.push(ScenarioOutcome::new(
        F,
        "forced-nonce-reuse",
        Expected::Violated,
        linkage_verdict(&x.m1, &y.m1),
        &twin_b,
    ));
    Ok(out)
}

/// The device refuses to emit `M_A1` unless `R5' = R5`.
pub fn scenario_local_gate(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "local-gate";
    let mut out = Vec::new();
    let (pw, reading) = credentials(world, 0);

    let r = world.send_login(0, &format!("{pw}!"), &reading).map(|_| ());
    out.push(ScenarioOutcome::new(
        F,
        "wrong-password",
        Expected::Rejected(Some(ErrorKind::LocalAuthFailure)),
        r.into(),
        world,
    ));

    let bad = world.reading_beyond_tolerance(0);
    let r = world.send_login(0, &pw, &bad).map(|_| ());
    out.push(ScenarioOutcome::new(
        F,
        "biometric-beyond-tolerance",
        Expected::Rejected(Some(ErrorKind::LocalAuthFailure)),
        r.into(),
        world,
    ));

    let r = world.send_login(0, &pw, &reading).map(|_| ());
    out.push(ScenarioOutcome::new(
        F,
        "biometric-within-tolerance",
        Expected::Accepted,
        r.into(),
        world,
    ));
    Ok(out)
}

/// Password and biometric update, then logins with new and old credentials.
pub fn scenario_update(world: &mut World) -> Result<Vec<ScenarioOutcome>> {
    const F: &str = "update";
    let mut out = Vec::new();
    let (old_pw, old_reading) = credentials(world, 0);
    let old_bio = world.user(0).biometric.clone();

    let r = world.update_credentials(0, "not-the-password", &old_reading, "whatever");
    out.push(ScenarioOutcome::new(
        F,
        "wrong-old-password",
        Expected::Rejected(Some(ErrorKind::LocalAuthFailure)),
        r.into(),
        world,
    ));
    let r = world.run_honest_session(0).map(|_| ());
    out.push(ScenarioOutcome::new(
        F,
        "refused-update-leaves-state",
        Expected::Accepted,
        r.into(),
        world,
    ));

    world.update_credentials(0, &old_pw, &old_reading, "new-grid-pass")?;
    let observed = match world.run_honest_session(0) {
        Ok(run) if run.sk_user == run.sk_server => Verdict::Accepted,
        Ok(_) => Verdict::Violated("session keys differ after update".into()),
        Err(e) => Verdict::Rejected(e.kind()),
    };
    out.push(ScenarioOutcome::new(
        F,
        "new-credentials",
        Expected::Accepted,
        observed,
        world,
    ));

    let r = world.send_login(0, &old_pw, &old_bio).map(|_| ());
    out.push(ScenarioOutcome::new(
        F,
        "old-credentials",
        Expected::Rejected(Some(ErrorKind::LocalAuthFailure)),
        r.into(),
        world,
    ));
    Ok(out)
}

/// All scenario outcomes for one seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackReport {
    pub seed: u64,
    pub profile: String,
    pub outcomes: Vec<ScenarioOutcome>,
}

#[derive(Serialize)]
struct KvDoc<'a> {
    seed: u64,
    profile: &'a str,
    all_passed: bool,
    scenario: Vec<KvEntry<'a>>,
}

#[derive(Serialize)]
struct KvEntry<'a> {
    family: &'a str,
    name: &'a str,
    expected: String,
    observed: String,
    pass: bool,
    informational: bool,
    seed: u64,
    transcript_hash: String,
}

impl AttackReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ScenarioOutcome> {
        self.outcomes.iter().filter(|o| !o.pass)
    }

    pub fn families(&self) -> Vec<&'static str> {
        let mut f: Vec<_> = self.outcomes.iter().map(|o| o.family).collect();
        f.dedup();
        f
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "attack suite: profile={} seed={}\n",
            self.profile, self.seed
        );
        for o in &self.outcomes {
            let status = if o.is_informational() {
                "INFO"
            } else if o.pass {
                "PASS"
            } else {
                "FAIL"
            };
            out.push_str(&format!(
                "{status} {}/{} expected={} observed={}\n",
                o.family, o.name, o.expected, o.observed
            ));
        }
        let judged = self.outcomes.iter().filter(|o| !o.is_informational());
        let (n, passed) = judged.fold((0, 0), |(n, p), o| (n + 1, p + o.pass as usize));
        out.push_str(&format!("{passed}/{n} checks passed\n"));
        out
    }

    /// TOML document, one `[[scenario]]` table per outcome.
    pub fn to_kv(&self) -> String {
        let doc = KvDoc {
            seed: self.seed,
            profile: &self.profile,
            all_passed: self.all_passed(),
            scenario: self
                .outcomes
                .iter()
                .map(|o| KvEntry {
                    family: o.family,
                    name: &o.name,
                    expected: o.expected.to_string(),
                    observed: o.observed.to_string(),
                    pass: o.pass,
                    informational: o.is_informational(),
                    seed: self.seed,
                    transcript_hash: o.transcript_hash.to_hex(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("report serializes")
    }
}

/// Bit positions used by the suite's tamper family.
pub const SUITE_TAMPER_BITS: [usize; 3] = [0, 37, 255];

/// Runs every scenario family in its own world derived from `config` and `seed`.
pub fn run_attack_suite(config: &WorldConfig, seed: u64) -> Result<AttackReport> {
    run_suite(config, seed, World::new)
}

/// As [`run_attack_suite`], with every world starting from a copy of `server`.
pub fn run_attack_suite_on(
    server: &ServerState,
    config: &WorldConfig,
    seed: u64,
) -> Result<AttackReport> {
    run_suite(config, seed, |cfg| {
        Ok(World::from_server(cfg, server.clone()))
    })
}

fn run_suite(
    config: &WorldConfig,
    seed: u64,
    make: impl Fn(WorldConfig) -> Result<World>,
) -> Result<AttackReport> {
    type Scenario = fn(&mut World) -> Result<Vec<ScenarioOutcome>>;
    let families: [Scenario; 10] = [
        scenario_replay,
        scenario_mitm,
        scenario_anonymity,
        scenario_key_freshness,
        |w| scenario_tamper(w, &SUITE_TAMPER_BITS),
        scenario_impersonation,
        scenario_key_agreement,
        scenario_untraceability,
        scenario_local_gate,
        scenario_update,
    ];
    let mut outcomes = Vec::new();
    let mut profile = config.curve.name.clone();
    for (i, scenario) in families.iter().enumerate() {
        let mut world = make(config.with_seed(seed.wrapping_add(i as u64)))?;
        world.enroll_next()?;
        outcomes.extend(scenario(&mut world)?);
        profile = world.params.curve.name.clone();
    }
    Ok(AttackReport {
        seed,
        profile,
        outcomes,
    })
}
