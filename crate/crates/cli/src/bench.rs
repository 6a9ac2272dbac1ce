//! Per-phase operation counts and exact message sizes.

use gridauth_core::cost::{measure, OpCounts};
use gridauth_core::protocol::{
    MsgA1, MsgA2, PendingRegistration, RegRequest, RegResponse, UpdateRequest, UpdateResponse,
    WireMessage,
};
use gridauth_core::{setup, BiometricTemplate, Credentials, CurveParams, ProtocolConfig, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseCost {
    pub phase: &'static str,
    pub side: &'static str,
    #[serde(flatten)]
    pub counts: OpCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageSize {
    pub message: &'static str,
    pub bytes: usize,
    /// `field:octets` pairs in wire order.
    pub layout: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub profile: String,
    pub hash: String,
    pub seed: u64,
    pub phase: Vec<PhaseCost>,
    pub message: Vec<MessageSize>,
}

impl CostReport {
    pub fn get(&self, phase: &str, side: &str) -> Option<&OpCounts> {
        self.phase
            .iter()
            .find(|p| p.phase == phase && p.side == side)
            .map(|p| &p.counts)
    }

    pub fn message_size(&self, message: &str) -> Option<usize> {
        self.message
            .iter()
            .find(|m| m.message == message)
            .map(|m| m.bytes)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "cost report: profile={} hash={} seed={}\n\n",
            self.profile, self.hash, self.seed
        );
        out.push_str(&format!(
            "{:<14} {:<7} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
            "phase", "side", "hash", "enc", "smul", "padd", "xor", "rand"
        ));
        for p in &self.phase {
            let c = &p.counts;
            out.push_str(&format!(
                "{:<14} {:<7} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
                p.phase,
                p.side,
                c.hashes,
                c.encode_hashes,
                c.scalar_muls,
                c.point_adds,
                c.xors,
                c.random_draws
            ));
        }
        out.push_str("\nmessage sizes (octets):\n");
        for m in &self.message {
            out.push_str(&format!("{:<9} {:>4}  {}\n", m.message, m.bytes, m.layout));
        }
        out
    }

    pub fn to_kv(&self) -> String {
        toml::to_string(self).expect("cost report serializes")
    }
}

fn size_of<M: WireMessage>(m: &M, curve: &CurveParams) -> MessageSize {
    let fields = m.fields(curve);
    MessageSize {
        message: M::KIND,
        bytes: fields.iter().map(|(_, v)| v.len()).sum(),
        layout: fields
            .iter()
            .map(|(name, v)| format!("{name}:{}", v.len()))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

/// Runs setup, registration, login and update once, metering each step.
pub fn run(curve: CurveParams, config: &ProtocolConfig, seed: u64) -> Result<CostReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut phase = Vec::new();
    let mut push = |phase_name, side, counts| {
        phase.push(PhaseCost {
            phase: phase_name,
            side,
            counts,
        })
    };
    let t0 = 1_700_000_000_000;
    let id = "meter-0001";
    let pw = "grid-pass-0001";

    let (res, c) = measure(|| setup(curve.clone(), "substation-01", config, &mut rng));
    let (params, mut server) = res?;
    push("setup", "server", c);

    let bio = BiometricTemplate::random(params.fuzzy.n, &mut rng);
    let (res, c) = measure(|| {
        PendingRegistration::start(&params, Credentials::new(id, pw, &bio), t0, &mut rng)
    });
    let (req, pending) = res?;
    push("registration", "user", c);
    let (resp, c) = measure(|| server.respond_registration(&req, t0 + 1));
    let resp = resp?;
    push("registration", "server", c);
    let (device, c) = measure(|| pending.finalize(&resp));
    push("registration", "finish", c);

    let (res, c) =
        measure(|| device.login_start(&params, Credentials::new(id, pw, &bio), t0 + 2, &mut rng));
    let (m1, session) = res?;
    push("login", "user", c);
    let (res, c) = measure(|| server.respond_auth(&m1, t0 + 3, &mut rng));
    let (m2, _) = res?;
    push("login", "server", c);
    let (res, c) = measure(|| session.finalize(&m2, &params, t0 + 4));
    res?;
    push("login", "finish", c);

    let new_bio = BiometricTemplate::random(params.fuzzy.n, &mut rng);
    let (res, c) = measure(|| {
        device.update_request(
            &params,
            Credentials::new(id, pw, &bio),
            "grid-pass-0002",
            &new_bio,
            t0 + 5,
            &mut rng,
        )
    });
    let (ureq, upending) = res?;
    push("update", "user", c);
    let (res, c) = measure(|| server.respond_update(&ureq, t0 + 6));
    let uresp = res?;
    push("update", "server", c);
    let (_, c) = measure(|| upending.finalize(&uresp));
    push("update", "finish", c);

    let curve = &params.curve;
    let message = vec![
        size_of::<RegRequest>(&req, curve),
        size_of::<RegResponse>(&resp, curve),
        size_of::<MsgA1>(&m1, curve),
        size_of::<MsgA2>(&m2, curve),
        size_of::<UpdateRequest>(&ureq, curve),
        size_of::<UpdateResponse>(&uresp, curve),
    ];
    Ok(CostReport {
        profile: curve.name.clone(),
        hash: params.hash.name().to_string(),
        seed,
        phase,
        message,
    })
}
