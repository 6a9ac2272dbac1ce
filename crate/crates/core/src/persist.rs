//! Versioned TOML files for device and server state.
//!
//! Curves are referenced by profile name; big integers and 32-octet values
//! are lowercase hex without a prefix.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bytes::{Bytes32, HashAlg};
use crate::curve::{CurveParams, ProfileFile, Scalar};
use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyParams, HelperData};
use crate::protocol::{DeviceStore, ServerState, SystemParams, UserRecord};

pub const FORMAT_VERSION: u32 = 1;
const DEVICE_FORMAT: &str = "gridauth-device";
const SERVER_FORMAT: &str = "gridauth-server";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceFile {
    format: String,
    version: u32,
    profile: String,
    user_id: String,
    r3: Bytes32,
    r4: Bytes32,
    r5: Bytes32,
    helper: HelperData,
    r: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerFile {
    format: String,
    version: u32,
    profile: String,
    hash: HashAlg,
    delta_t: u64,
    fuzzy: FuzzyParams,
    server_id: String,
    secret: String,
    next_counter: u64,
    #[serde(default)]
    users: Vec<RecordEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordEntry {
    id: String,
    r1: Bytes32,
    r3: Bytes32,
    y: u64,
}

fn check_header(format: &str, version: u32, want: &str) -> Result<()> {
    if format != want {
        return Err(Error::Malformed(format!(
            "expected a {want} file, found {format:?}"
        )));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported {want} version {version}"
        )));
    }
    Ok(())
}

fn parse_scalar(hex: &str, curve: &CurveParams) -> Result<Scalar> {
    let v = BigUint::parse_bytes(hex.as_bytes(), 16)
        .ok_or_else(|| Error::Malformed(format!("invalid scalar hex {hex:?}")))?;
    Scalar::new(v, curve)
}

fn toml_err(e: impl std::fmt::Display) -> Error {
    Error::Malformed(e.to_string())
}

pub fn device_to_string(dev: &DeviceStore, curve: &CurveParams) -> String {
    let file = DeviceFile {
        format: DEVICE_FORMAT.into(),
        version: FORMAT_VERSION,
        profile: curve.name.clone(),
        user_id: dev.user_id.clone(),
        r3: dev.r3,
        r4: dev.r4,
        r5: dev.r5,
        helper: dev.helper.clone(),
        r: dev.r.to_hex(),
    };
    toml::to_string(&file).expect("device file serializes")
}

/// Parses a device file; its profile must match `curve`.
pub fn device_from_str(text: &str, curve: &CurveParams) -> Result<DeviceStore> {
    let file: DeviceFile = toml::from_str(text).map_err(toml_err)?;
    check_header(&file.format, file.version, DEVICE_FORMAT)?;
    if file.profile != curve.name {
        return Err(Error::Malformed(format!(
            "device file is for profile {:?}, not {:?}",
            file.profile, curve.name
        )));
    }
    Ok(DeviceStore {
        user_id: file.user_id,
        r3: file.r3,
        r4: file.r4,
        r5: file.r5,
        helper: file.helper,
        r: parse_scalar(&file.r, curve)?,
    })
}

pub fn server_to_string(server: &ServerState) -> String {
    let params = &server.params;
    let file = ServerFile {
        format: SERVER_FORMAT.into(),
        version: FORMAT_VERSION,
        profile: params.curve.name.clone(),
        hash: params.hash,
        delta_t: params.delta_t,
        fuzzy: params.fuzzy,
        server_id: server.server_id.clone(),
        secret: server.secret().to_hex(),
        next_counter: server.next_counter(),
        users: server
            .users()
            .map(|u| RecordEntry {
                id: u.id.clone(),
                r1: u.r1,
                r3: u.r3,
                y: u.y,
            })
            .collect(),
    };
    toml::to_string(&file).expect("server file serializes")
}

/// Parses a server file, resolving its curve in `profiles`.
pub fn server_from_str(text: &str, profiles: &ProfileFile) -> Result<ServerState> {
    let file: ServerFile = toml::from_str(text).map_err(toml_err)?;
    check_header(&file.format, file.version, SERVER_FORMAT)?;
    file.fuzzy.check()?;
    let curve = profiles.load(&file.profile)?;
    let secret = parse_scalar(&file.secret, &curve)?;
    let server_pk = curve.mul_base(&secret);
    let params = SystemParams {
        curve,
        server_pk,
        hash: file.hash,
        delta_t: file.delta_t,
        fuzzy: file.fuzzy,
    };
    let users = file.users.into_iter().map(|u| UserRecord {
        id: u.id,
        r1: u.r1,
        r3: u.r3,
        y: u.y,
    });
    ServerState::restore(secret, params, file.server_id, users, file.next_counter)
}
