//! ECC and biometric mutual authentication and key agreement for smart-grid
//! style user/server links, with a password and biometric update phase.
//!
//! The crate is layered bottom-up:
//!
//! - [`bytes`] and [`curve`]: 32-octet values, hashing, XOR, encodings and
//!   short-Weierstrass arithmetic over configurable curve profiles.
//! - [`fuzzy`]: a code-offset fuzzy extractor (Gen/Rep) over a repetition code.
//! - [`protocol`]: setup, registration, login/authentication and update as
//!   pure transitions over typed messages.
//! - [`persist`]: versioned text files for device and server state.
//! - [`sim`]: a deterministic world with an injectable clock, a transcript,
//!   and a Dolev-Yao adversary running the attack scenarios.
//! - [`cost`]: operation counters behind the bench report.

pub mod bytes;
pub mod cost;
pub mod curve;
mod error;
pub mod fuzzy;
pub mod persist;
pub mod protocol;
pub mod sim;

pub use bytes::{Bytes32, HashAlg};
pub use curve::{CurveParams, Point, Scalar};
pub use error::{Error, ErrorKind, Result};
pub use fuzzy::{BiometricTemplate, FuzzyExtractor, FuzzyParams, HelperData};
pub use protocol::{
    setup, Credentials, DeviceStore, ProtocolConfig, ServerState, SessionKey, SystemParams,
};
