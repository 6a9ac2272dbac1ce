//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated
//! type glue beyond what `wasm-bindgen` emits.

use gridauth_core::curve::profile;
use gridauth_core::protocol::{MsgA1, MsgA2, WireMessage};
use gridauth_core::sim::{AdversaryAction, Mutation, World, WorldConfig};
use gridauth_core::{BiometricTemplate, FuzzyExtractor, FuzzyParams, HashAlg, Point};
use num_bigint::BigUint;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Field {
    name: &'static str,
    hex: String,
}

#[derive(Serialize)]
struct Message {
    kind: &'static str,
    direction: &'static str,
    channel: &'static str,
    sent_at: u64,
    tampered: bool,
    fields: Vec<Field>,
}

#[derive(Serialize)]
struct Handshake {
    profile: String,
    delta_t: u64,
    latency: u64,
    messages: Vec<Message>,
    sk_user: Option<String>,
    sk_server: Option<String>,
    outcome: String,
    keys_match: bool,
}

fn fields<M: WireMessage>(bytes: &[u8], world: &World) -> Vec<Field> {
    match M::from_wire(bytes, &world.params.curve) {
        Ok(m) => m
            .fields(&world.params.curve)
            .into_iter()
            .map(|(name, v)| Field {
                name,
                hex: v.iter().map(|b| format!("{b:02x}")).collect(),
            })
            .collect(),
        Err(_) => vec![Field {
            name: "raw",
            hex: bytes.iter().map(|b| format!("{b:02x}")).collect(),
        }],
    }
}

fn handshake(
    curve: &str,
    seed: u32,
    delta_t: u32,
    latency: u32,
    tamper: &str,
    bit: u32,
) -> Result<Handshake, String> {
    let mut cfg = WorldConfig::new(profile(curve).map_err(|e| e.to_string())?, seed.into());
    cfg.protocol.delta_t = delta_t.into();
    let mut w = World::with_user(cfg).map_err(|e| e.to_string())?;
    // Enrollment runs at the default latency; the slider only affects the login.
    w.config.hop_latency = latency.into();
    let pw = w.user(0).password.clone();
    let tol = w.params.fuzzy.tolerance();
    let reading = w.noisy_reading(0, tol);

    let (m1, pending) = w.send_login(0, &pw, &reading).map_err(|e| e.to_string())?;
    let in_a1 = ["S1", "ID_U1", "U_point", "t1"].contains(&tamper);
    let in_a2 = ["ID_S1", "S2", "S_point", "t3"].contains(&tamper);
    let tamper_with = |w: &mut World, index| {
        w.act(AdversaryAction::Drop { index }, None)?;
        w.clock.advance(w.config.hop_latency);
        w.act(
            AdversaryAction::Tamper {
                index,
                field: leak(tamper),
                mutation: Mutation::FlipBit(bit as usize),
            },
            Some(&pending),
        )
    };
    let mut sk_server = None;
    let mut sk_user = None;
    let result = (|| {
        let sk = if in_a1 {
            match tamper_with(&mut w, m1)? {
                gridauth_core::sim::ActionResult::Accepted(sk) => Some(sk),
                _ => None,
            }
        } else {
            w.deliver(m1, None)?
        };
        sk_server = sk;
        let m2 = w.transcript.len() - 1;
        sk_user = if in_a2 {
            match tamper_with(&mut w, m2)? {
                gridauth_core::sim::ActionResult::Accepted(sk) => Some(sk),
                _ => None,
            }
        } else {
            w.deliver(m2, Some(&pending))?
        };
        Ok::<_, gridauth_core::Error>(())
    })();

    let messages = w
        .transcript
        .entries()
        .iter()
        .map(|e| Message {
            kind: e.kind,
            direction: match e.direction {
                gridauth_core::sim::Direction::UserToServer => "user → server",
                gridauth_core::sim::Direction::ServerToUser => "server → user",
            },
            channel: match e.channel {
                gridauth_core::sim::Channel::Public => "public",
                gridauth_core::sim::Channel::Secure => "secure",
            },
            sent_at: e.sent_at,
            tampered: e.origin == gridauth_core::sim::Origin::Adversary,
            fields: match e.kind {
                MsgA1::KIND => fields::<MsgA1>(&e.bytes, &w),
                MsgA2::KIND => fields::<MsgA2>(&e.bytes, &w),
                _ => vec![Field {
                    name: "length",
                    hex: format!("{} octets (hidden)", e.bytes.len()),
                }],
            },
        })
        .collect();
    let keys_match = matches!((&sk_user, &sk_server), (Some(a), Some(b)) if a == b);
    let outcome = match result {
        Ok(()) if keys_match => "both sides derived the same session key".to_string(),
        Ok(()) => "session keys differ".to_string(),
        Err(e) => format!("rejected: {}: {e}", e.kind()),
    };
    Ok(Handshake {
        profile: w.params.curve.name.clone(),
        delta_t: w.params.delta_t,
        latency: w.config.hop_latency,
        messages,
        sk_user: sk_user.map(|k| k.0.to_hex()),
        sk_server: sk_server.map(|k| k.0.to_hex()),
        outcome,
        keys_match,
    })
}

fn leak(field: &str) -> &'static str {
    [
        "S1", "ID_U1", "U_point", "t1", "ID_S1", "S2", "S_point", "t3",
    ]
    .into_iter()
    .find(|f| *f == field)
    .unwrap_or("S1")
}

fn json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

/// One login handshake in a seeded world. `tamper` names a field of
/// `M_A1`/`M_A2` whose `bit` the adversary flips in flight, or is empty.
#[wasm_bindgen]
pub fn run_handshake(
    curve: &str,
    seed: u32,
    delta_t: u32,
    latency: u32,
    tamper: &str,
    bit: u32,
) -> String {
    json(handshake(curve, seed, delta_t, latency, tamper, bit))
}

#[derive(Serialize)]
struct SweepPoint {
    flip_rate: f64,
    recovered: f64,
    within_tolerance: f64,
}

fn sweep(k: u32, rho: u32, trials: u32, seed: u32) -> Result<Vec<SweepPoint>, String> {
    let params = FuzzyParams::new(k as usize, rho as usize).map_err(|e| e.to_string())?;
    let fx = FuzzyExtractor::new(params, HashAlg::Sha256).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed.into());
    let mut out = Vec::new();
    for step in 0..=20 {
        let rate = step as f64 * 0.01;
        let (mut ok, mut within) = (0, 0);
        for _ in 0..trials {
            let w = BiometricTemplate::random(params.n, &mut rng);
            let (sigma, helper) = fx.gen(&w, &mut rng).map_err(|e| e.to_string())?;
            let threshold = (rate * u32::MAX as f64) as u32;
            let errors: Vec<bool> = (0..params.n).map(|_| rng.next_u32() < threshold).collect();
            within += errors
                .chunks(params.rho)
                .all(|b| b.iter().filter(|&&e| e).count() <= params.tolerance())
                as u32;
            ok += (fx
                .rep(&w.with_errors(&errors), &helper)
                .map_err(|e| e.to_string())?
                == sigma) as u32;
        }
        out.push(SweepPoint {
            flip_rate: rate,
            recovered: ok as f64 / trials as f64,
            within_tolerance: within as f64 / trials as f64,
        });
    }
    Ok(out)
}

/// Key-recovery rate against independent per-bit flip probability 0..20%.
#[wasm_bindgen]
pub fn fuzzy_sweep(k: u32, rho: u32, trials: u32, seed: u32) -> String {
    json(sweep(k, rho, trials, seed))
}

#[derive(Serialize)]
struct ToyCurve {
    p: u32,
    points: Vec<(u32, u32)>,
    generator: (u32, u32),
    order: u32,
    multiples: Vec<Option<(u32, u32)>>,
    k: u32,
    k_g: Option<(u32, u32)>,
}

fn small(p: &Point) -> Option<(u32, u32)> {
    let digit = |v: &BigUint| v.to_u32_digits().first().copied().unwrap_or(0);
    p.coords().map(|(x, y)| (digit(x), digit(y)))
}

fn toy(k: u32) -> Result<ToyCurve, String> {
    let curve = profile("toy23").map_err(|e| e.to_string())?;
    let p = small(&Point::new(curve.p.clone(), curve.p.clone()))
        .unwrap()
        .0;
    let mut points = Vec::new();
    for x in 0..p {
        for y in 0..p {
            let pt = Point::new(x.into(), y.into());
            if curve.is_on_curve(&pt) {
                points.push((x, y));
            }
        }
    }
    let order = small(&Point::new(curve.q.clone(), curve.q.clone()))
        .unwrap()
        .0;
    let multiples = (0..=order)
        .map(|i| curve.scalar_mul(&i.into(), &curve.g).map(|q| small(&q)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let k_g = small(
        &curve
            .scalar_mul(&k.into(), &curve.g)
            .map_err(|e| e.to_string())?,
    );
    Ok(ToyCurve {
        p,
        points,
        generator: small(&curve.g).unwrap(),
        order,
        multiples,
        k,
        k_g,
    })
}

/// All affine points of the 23-element toy curve, the generator's cycle, and k·G.
#[wasm_bindgen]
pub fn toy_curve(k: u32) -> String {
    json(toy(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn honest_handshake_agrees() {
        let v = parse(&run_handshake("p256", 1, 5000, 15, "", 0));
        assert_eq!(v["keys_match"], true);
        assert_eq!(v["messages"].as_array().unwrap().len(), 4);
        assert_eq!(v["messages"][0]["fields"][0]["name"], "length");
    }

    #[test]
    fn tampered_fields_are_rejected() {
        for field in [
            "S1", "ID_U1", "U_point", "t1", "ID_S1", "S2", "S_point", "t3",
        ] {
            let v = parse(&run_handshake("p256", 2, 5000, 15, field, 3));
            assert_eq!(v["keys_match"], false, "{field}");
            assert!(
                v["outcome"].as_str().unwrap().starts_with("rejected"),
                "{field}"
            );
        }
    }

    #[test]
    fn slow_links_go_stale() {
        let v = parse(&run_handshake("toy23", 1, 100, 200, "", 0));
        assert!(v["outcome"].as_str().unwrap().contains("StaleTimestamp"));
    }

    #[test]
    fn bad_input_reports_error() {
        assert!(parse(&run_handshake("p999", 1, 5000, 15, "", 0))["error"].is_string());
        assert!(parse(&fuzzy_sweep(8, 4, 10, 1))["error"].is_string());
    }

    #[test]
    fn sweep_starts_perfect() {
        let v = parse(&fuzzy_sweep(16, 5, 20, 1));
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[0]["recovered"], 1.0);
        for p in pts {
            assert!(p["recovered"].as_f64().unwrap() >= p["within_tolerance"].as_f64().unwrap());
        }
    }

    #[test]
    fn toy_curve_cycle() {
        let v = parse(&toy_curve(3));
        assert_eq!(v["points"].as_array().unwrap().len(), 27);
        let m = v["multiples"].as_array().unwrap();
        assert!(m[0].is_null() && m[7].is_null());
        assert_eq!(v["k_g"], m[3]);
        assert_eq!(v["generator"], serde_json::json!([17, 3]));
    }
}
