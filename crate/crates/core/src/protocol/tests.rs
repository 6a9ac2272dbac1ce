use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::bytes::{encode_counter, encode_timestamp};
use crate::curve::profile;
use crate::fuzzy::BiometricTemplate;

const T0: Timestamp = 1_700_000_000_000;

struct Fixture {
    params: SystemParams,
    server: ServerState,
    device: DeviceStore,
    bio: BiometricTemplate,
    sigma: Bytes32,
    rng: ChaCha20Rng,
}

fn fixture(curve: &str, seed: u64) -> Fixture {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (params, mut server) = setup(
        profile(curve).unwrap(),
        "substation-7",
        &ProtocolConfig::default(),
        &mut rng,
    )
    .unwrap();
    let bio = BiometricTemplate::random(params.fuzzy.n, &mut rng);
    let (req, pending) = PendingRegistration::start(
        &params,
        Credentials::new("meter-42", "hunter2", &bio),
        T0,
        &mut rng,
    )
    .unwrap();
    let sigma = *pending.sigma();
    let resp = server.respond_registration(&req, T0 + 10).unwrap();
    let device = pending.finalize(&resp);
    Fixture {
        params,
        server,
        device,
        bio,
        sigma,
        rng,
    }
}

impl Fixture {
    fn creds(&self) -> Credentials<'_> {
        Credentials::new("meter-42", "hunter2", &self.bio)
    }

    fn login(&mut self, now: Timestamp) -> Result<(MsgA1, PendingSession)> {
        let creds = Credentials::new("meter-42", "hunter2", &self.bio);
        self.device
            .login_start(&self.params, creds, now, &mut self.rng)
    }
}

#[test]
fn setup_publishes_x_times_g() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let curve = profile("p256").unwrap();
    let (params, server) = setup(curve.clone(), "s", &ProtocolConfig::default(), &mut rng).unwrap();
    assert_eq!(
        params.server_pk,
        curve.scalar_mul(server.secret().value(), &curve.g).unwrap()
    );
    let (_, other) = setup(
        curve,
        "s",
        &ProtocolConfig::default(),
        &mut ChaCha20Rng::seed_from_u64(2),
    )
    .unwrap();
    assert_ne!(other.secret(), server.secret());
}

#[test]
fn setup_rejects_singular_curve() {
    let mut curve = profile("toy23").unwrap();
    curve.c = 0u32.into();
    curve.d = 0u32.into();
    let err = setup(
        curve,
        "s",
        &ProtocolConfig::default(),
        &mut ChaCha20Rng::seed_from_u64(1),
    )
    .unwrap_err();
    assert_eq!(err, Error::SingularCurve);
}

#[test]
fn registration_request_masks_with_r() {
    let mut f = fixture("p256", 3);
    let h = f.params.hash;
    let (req, pending) = PendingRegistration::start(
        &f.params,
        Credentials::new("meter-42", "hunter2", &f.bio),
        T0 + 77,
        &mut f.rng,
    )
    .unwrap();
    assert_eq!(req.t_rg1, T0 + 77);
    assert_eq!(
        req.r1 ^ pending.r().encode(),
        h.hash_fields(&[&h.encode_str("hunter2"), pending.sigma()])
    );
    let (req2, _) = PendingRegistration::start(
        &f.params,
        Credentials::new("meter-42", "hunter2", &f.bio),
        T0,
        &mut f.rng,
    )
    .unwrap();
    assert_ne!(req.r1, req2.r1);
}

#[test]
fn registration_algebra() {
    let f = fixture("p256", 4);
    let h = f.params.hash;
    let rec = f.server.user("meter-42").unwrap();
    let r2 = h.hash_fields(&[
        &h.encode_str("meter-42"),
        &f.server.secret().encode(),
        &encode_counter(rec.y),
    ]);
    assert_eq!(rec.r3 ^ rec.r1, r2);
    assert_eq!(f.device.r3 ^ f.device.r4, f.sigma);
    assert_eq!(f.device.r3, rec.r3);
}

#[test]
fn registration_freshness_and_uniqueness() {
    let mut f = fixture("toy23", 5);
    let delta = f.params.delta_t;
    let (req, _) = PendingRegistration::start(
        &f.params,
        Credentials::new("meter-43", "pw", &f.bio),
        T0,
        &mut f.rng,
    )
    .unwrap();
    assert_eq!(
        f.server.respond_registration(&req, T0 + delta + 1),
        Err(Error::StaleTimestamp)
    );
    assert_eq!(
        f.server.respond_registration(&req, T0 - 1),
        Err(Error::StaleTimestamp)
    );
    f.server.respond_registration(&req, T0 + delta).unwrap();
    assert!(matches!(
        f.server.respond_registration(&req, T0 + 1),
        Err(Error::DuplicateRegistration(_))
    ));
    // Fresh counters per user.
    assert_eq!(f.server.user("meter-43").unwrap().y, 1);
}

#[test]
fn device_store_keeps_no_plain_secrets() {
    let f = fixture("p256", 6);
    let h = f.params.hash;
    let pw_digest = h.encode_str("hunter2");
    for field in [f.device.r3, f.device.r4, f.device.r5] {
        assert_ne!(field, f.sigma);
        assert_ne!(field, pw_digest);
    }
    // R5 re-derives from stored fields and the right password.
    f.device.verify_local(&f.params, f.creds()).unwrap();
}

#[test]
fn honest_run_agrees_on_key() {
    let mut f = fixture("p256", 7);
    let (m1, pending) = f.login(T0 + 100).unwrap();
    let (m2, sk_server) = f.server.respond_auth(&m1, T0 + 120, &mut f.rng).unwrap();
    let sk_user = pending.finalize(&m2, &f.params, T0 + 140).unwrap();
    assert_eq!(sk_user, sk_server);
}

#[test]
fn honest_run_agrees_on_toy_curve() {
    let mut f = fixture("toy23", 8);
    let (m1, pending) = f.login(T0).unwrap();
    let (m2, sk_server) = f.server.respond_auth(&m1, T0, &mut f.rng).unwrap();
    assert_eq!(pending.finalize(&m2, &f.params, T0).unwrap(), sk_server);
}

#[test]
fn masked_identity_unmasks_and_is_not_sent_in_clear() {
    let mut f = fixture("p256", 9);
    let h = f.params.hash;
    let (m1, _) = f.login(T0).unwrap();
    let r1 = f.server.user("meter-42").unwrap().r1;
    assert_eq!(
        m1.id_u1 ^ r1 ^ encode_timestamp(m1.t1),
        h.encode_str("meter-42")
    );
    assert_ne!(m1.id_u1, h.encode_str("meter-42"));
    assert_ne!(m1.s1, h.encode_str("meter-42"));
}

#[test]
fn login_gate() {
    let mut f = fixture("p256", 10);
    let fx = f.params.fuzzy;
    let wrong_pw = Credentials::new("meter-42", "hunter3", &f.bio);
    assert_eq!(
        f.device
            .login_start(&f.params, wrong_pw, T0, &mut f.rng)
            .unwrap_err(),
        Error::LocalAuthFailure
    );
    let wrong_id = Credentials::new("meter-41", "hunter2", &f.bio);
    assert_eq!(
        f.device
            .login_start(&f.params, wrong_id, T0, &mut f.rng)
            .unwrap_err(),
        Error::LocalAuthFailure
    );

    // Two flips in every block: still within tolerance.
    let mut noisy = f.bio.clone();
    for block in 0..fx.k {
        noisy.flip(block * fx.rho);
        noisy.flip(block * fx.rho + 3);
    }
    let creds = Credentials::new("meter-42", "hunter2", &noisy);
    f.device
        .login_start(&f.params, creds, T0, &mut f.rng)
        .unwrap();

    // Three flips in one block flips that secret bit.
    let mut too_noisy = f.bio.clone();
    for i in 0..3 {
        too_noisy.flip(5 * fx.rho + i);
    }
    let creds = Credentials::new("meter-42", "hunter2", &too_noisy);
    assert_eq!(
        f.device
            .login_start(&f.params, creds, T0, &mut f.rng)
            .unwrap_err(),
        Error::LocalAuthFailure
    );
}

#[test]
fn server_rejects_stale_future_and_forged_a1() {
    let mut f = fixture("p256", 11);
    let delta = f.params.delta_t;
    let (m1, _) = f.login(T0).unwrap();
    assert_eq!(
        f.server
            .respond_auth(&m1, T0 + delta + 1, &mut f.rng)
            .unwrap_err(),
        Error::StaleTimestamp
    );
    assert_eq!(
        f.server.respond_auth(&m1, T0 - 1, &mut f.rng).unwrap_err(),
        Error::StaleTimestamp
    );
    let mut forged = m1.clone();
    forged.s1.flip_bit(17);
    assert_eq!(
        f.server.respond_auth(&forged, T0, &mut f.rng).unwrap_err(),
        Error::AuthenticationFailure
    );
    let mut masked = m1.clone();
    masked.id_u1.flip_bit(200);
    assert_eq!(
        f.server.respond_auth(&masked, T0, &mut f.rng).unwrap_err(),
        Error::UnknownUser
    );
    let mut identity = m1.clone();
    identity.u_point = Point::Identity;
    assert_eq!(
        f.server
            .respond_auth(&identity, T0, &mut f.rng)
            .unwrap_err(),
        Error::InvalidPoint
    );
    let mut off_curve = m1;
    if let Point::Affine { y, .. } = &mut off_curve.u_point {
        *y += 1u32;
    }
    assert_eq!(
        f.server
            .respond_auth(&off_curve, T0, &mut f.rng)
            .unwrap_err(),
        Error::InvalidPoint
    );
}

#[test]
fn user_rejects_tampered_or_late_a2() {
    let mut f = fixture("p256", 12);
    let delta = f.params.delta_t;
    let (m1, pending) = f.login(T0).unwrap();
    let (m2, _) = f.server.respond_auth(&m1, T0 + 5, &mut f.rng).unwrap();
    assert_eq!(
        pending
            .finalize(&m2, &f.params, T0 + 6 + delta)
            .unwrap_err(),
        Error::StaleTimestamp
    );
    let mut tampered = m2.clone();
    tampered.id_s1.flip_bit(3);
    assert_eq!(
        pending.finalize(&tampered, &f.params, T0 + 6).unwrap_err(),
        Error::AuthenticationFailure
    );
    let mut bad_point = m2;
    bad_point.s_point = Point::Identity;
    assert_eq!(
        pending.finalize(&bad_point, &f.params, T0 + 6).unwrap_err(),
        Error::InvalidPoint
    );
}

#[test]
fn two_sessions_give_fresh_keys_and_unlinkable_messages() {
    let mut f = fixture("p256", 13);
    let run = |f: &mut Fixture, t: Timestamp| {
        let (m1, pending) = f.login(t).unwrap();
        let (m2, sk) = f.server.respond_auth(&m1, t + 1, &mut f.rng).unwrap();
        assert_eq!(pending.finalize(&m2, &f.params, t + 2).unwrap(), sk);
        (m1, sk)
    };
    let (a, ka) = run(&mut f, T0);
    let (b, kb) = run(&mut f, T0 + 1000);
    assert_ne!(ka, kb);
    assert_ne!(a.s1, b.s1);
    assert_ne!(a.id_u1, b.id_u1);
    assert_ne!(a.u_point, b.u_point);
}

#[test]
fn update_phase_end_to_end() {
    let mut f = fixture("p256", 14);
    let new_bio = BiometricTemplate::random(f.params.fuzzy.n, &mut f.rng);
    let (req, pending) = f
        .device
        .update_request(
            &f.params,
            Credentials::new("meter-42", "hunter2", &f.bio),
            "correct horse",
            &new_bio,
            T0 + 50,
            &mut f.rng,
        )
        .unwrap();
    let h = f.params.hash;
    assert_eq!(
        req.r1_star ^ f.device.r.encode(),
        h.hash_fields(&[&h.encode_str("correct horse"), pending.sigma()])
    );
    let y_before = f.server.user("meter-42").unwrap().y;
    let resp = f.server.respond_update(&req, T0 + 60).unwrap();
    let rec = f.server.user("meter-42").unwrap().clone();
    assert_eq!(rec.y, y_before);
    assert_eq!(rec.r3 ^ rec.r1, f.server.r2("meter-42", rec.y));
    let sigma_new = *pending.sigma();
    let old_device = f.device.clone();
    f.device = pending.finalize(&resp);
    assert_eq!(f.device.r3 ^ f.device.r4, sigma_new);

    // Old credentials are dead.
    assert_eq!(
        f.device.verify_local(&f.params, f.creds()).unwrap_err(),
        Error::LocalAuthFailure
    );
    // New credentials run a full handshake.
    let creds = Credentials::new("meter-42", "correct horse", &new_bio);
    let (m1, session) = f
        .device
        .login_start(&f.params, creds, T0 + 100, &mut f.rng)
        .unwrap();
    let (m2, sk) = f.server.respond_auth(&m1, T0 + 101, &mut f.rng).unwrap();
    assert_eq!(session.finalize(&m2, &f.params, T0 + 102).unwrap(), sk);
    // The pre-update device no longer matches the server's R1.
    let old_creds = Credentials::new("meter-42", "hunter2", &f.bio);
    let (m1, _) = old_device
        .login_start(&f.params, old_creds, T0 + 200, &mut f.rng)
        .unwrap();
    assert!(f.server.respond_auth(&m1, T0 + 200, &mut f.rng).is_err());
}

#[test]
fn update_refused_with_wrong_old_password() {
    let mut f = fixture("p256", 15);
    let new_bio = BiometricTemplate::random(f.params.fuzzy.n, &mut f.rng);
    let wrong = Credentials::new("meter-42", "nope", &f.bio);
    let err = f
        .device
        .update_request(&f.params, wrong, "new", &new_bio, T0, &mut f.rng)
        .unwrap_err();
    assert_eq!(err, Error::LocalAuthFailure);
    f.device.verify_local(&f.params, f.creds()).unwrap();
}

#[test]
fn update_for_unknown_user() {
    let mut f = fixture("toy23", 16);
    let req = UpdateRequest {
        id: "ghost".into(),
        r1_star: Bytes32::ZERO,
        t_rg1: T0,
    };
    assert_eq!(f.server.respond_update(&req, T0), Err(Error::UnknownUser));
    let mut late = req;
    late.id = "meter-42".into();
    assert_eq!(
        f.server.respond_update(&late, T0 + 10 * f.params.delta_t),
        Err(Error::StaleTimestamp)
    );
}
