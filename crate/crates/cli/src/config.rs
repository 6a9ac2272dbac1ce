//! Resolved configuration: flags, then `GRIDAUTH_*` environment variables,
//! then an optional TOML config file, then built-in defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use gridauth_core::curve::{builtin_profiles, ProfileFile};
use gridauth_core::sim::WorldConfig;
use gridauth_core::{CurveParams, FuzzyParams, HashAlg, ProtocolConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Kv,
}

/// Settings shared by every command. Unset values fall through to the
/// config file and then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Curve profile name
    #[arg(long, env = "GRIDAUTH_CURVE", global = true)]
    pub curve: Option<String>,
    /// Extra curve profiles (TOML), merged over the built-in ones
    #[arg(long, env = "GRIDAUTH_PROFILES", global = true)]
    pub profiles: Option<PathBuf>,
    /// Hash function: sha256 or sha512-256
    #[arg(long, env = "GRIDAUTH_HASH", global = true)]
    pub hash: Option<String>,
    /// Freshness window in milliseconds
    #[arg(long = "delta-t", env = "GRIDAUTH_DELTA_T", global = true)]
    pub delta_t: Option<u64>,
    /// Simulated delay per message hop in milliseconds
    #[arg(long, env = "GRIDAUTH_LATENCY", global = true)]
    pub latency: Option<u64>,
    #[arg(long, env = "GRIDAUTH_SEED", global = true)]
    pub seed: Option<u64>,
    /// Template length in bits (defaults to k * rho)
    #[arg(long = "fe-n", env = "GRIDAUTH_FE_N", global = true)]
    pub fe_n: Option<usize>,
    /// Number of secret bits
    #[arg(long = "fe-k", env = "GRIDAUTH_FE_K", global = true)]
    pub fe_k: Option<usize>,
    /// Repetition factor (odd)
    #[arg(long = "fe-rho", env = "GRIDAUTH_FE_RHO", global = true)]
    pub fe_rho: Option<usize>,
    #[arg(long = "server-id", env = "GRIDAUTH_SERVER_ID", global = true)]
    pub server_id: Option<String>,
    /// Persisted server state to start from
    #[arg(long = "server-state", env = "GRIDAUTH_SERVER_STATE", global = true)]
    pub server_state: Option<PathBuf>,
    /// Output file for the command's artifact
    #[arg(long, env = "GRIDAUTH_OUT", global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, env = "GRIDAUTH_FORMAT", global = true)]
    pub format: Option<Format>,
}

/// The config-file shape; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub curve: Option<String>,
    pub profiles: Option<PathBuf>,
    pub hash: Option<String>,
    pub delta_t: Option<u64>,
    pub latency: Option<u64>,
    pub seed: Option<u64>,
    pub fe_n: Option<usize>,
    pub fe_k: Option<usize>,
    pub fe_rho: Option<usize>,
    pub server_id: Option<String>,
    pub server_state: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = crate::read_file(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliConfig {
    pub curve: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<PathBuf>,
    pub hash: HashAlg,
    pub delta_t: u64,
    pub latency: u64,
    pub seed: u64,
    pub fe_n: usize,
    pub fe_k: usize,
    pub fe_rho: usize,
    pub server_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub server_state: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 20240611;

impl Default for CliConfig {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        let w = WorldConfig::new(p256(), 0);
        CliConfig {
            curve: "p256".into(),
            profiles: None,
            hash: p.hash,
            delta_t: p.delta_t,
            latency: w.hop_latency,
            seed: DEFAULT_SEED,
            fe_n: p.fuzzy.n,
            fe_k: p.fuzzy.k,
            fe_rho: p.fuzzy.rho,
            server_id: w.server_id,
            server_state: None,
            out: None,
            format: Format::Text,
        }
    }
}

fn p256() -> CurveParams {
    gridauth_core::curve::profile("p256").expect("built-in profile")
}

impl CliConfig {
    /// Layers `flags` over `file` over the defaults and validates the result.
    pub fn resolve(flags: &Overrides, file: Option<&FileConfig>) -> Result<Self, CliError> {
        let file = file.cloned().unwrap_or_default();
        let d = CliConfig::default();
        let hash = match flags.hash.clone().or(file.hash) {
            Some(h) => HashAlg::from_str(&h)?,
            None => d.hash,
        };
        let fe_k = flags.fe_k.or(file.fe_k).unwrap_or(d.fe_k);
        let fe_rho = flags.fe_rho.or(file.fe_rho).unwrap_or(d.fe_rho);
        let cfg = CliConfig {
            curve: flags.curve.clone().or(file.curve).unwrap_or(d.curve),
            profiles: flags.profiles.clone().or(file.profiles),
            hash,
            delta_t: flags.delta_t.or(file.delta_t).unwrap_or(d.delta_t),
            latency: flags.latency.or(file.latency).unwrap_or(d.latency),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            fe_n: flags.fe_n.or(file.fe_n).unwrap_or(fe_k * fe_rho),
            fe_k,
            fe_rho,
            server_id: flags
                .server_id
                .clone()
                .or(file.server_id)
                .unwrap_or(d.server_id),
            server_state: flags.server_state.clone().or(file.server_state),
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format).unwrap_or(d.format),
        };
        cfg.fuzzy()?;
        cfg.curve_params()?;
        Ok(cfg)
    }

    pub fn fuzzy(&self) -> Result<FuzzyParams, CliError> {
        let fx = FuzzyParams {
            n: self.fe_n,
            k: self.fe_k,
            rho: self.fe_rho,
        };
        fx.check()?;
        Ok(fx)
    }

    pub fn profile_file(&self) -> Result<ProfileFile, CliError> {
        let mut profiles = builtin_profiles();
        if let Some(path) = &self.profiles {
            let extra = ProfileFile::parse(&crate::read_file(path)?)?;
            profiles.profiles.extend(extra.profiles);
        }
        Ok(profiles)
    }

    pub fn curve_params(&self) -> Result<CurveParams, CliError> {
        Ok(self.profile_file()?.load(&self.curve)?)
    }

    pub fn protocol(&self) -> Result<ProtocolConfig, CliError> {
        Ok(ProtocolConfig {
            hash: self.hash,
            delta_t: self.delta_t,
            fuzzy: self.fuzzy()?,
        })
    }

    pub fn world(&self) -> Result<WorldConfig, CliError> {
        let mut w = WorldConfig::new(self.curve_params()?, self.seed);
        w.protocol = self.protocol()?;
        w.hop_latency = self.latency;
        w.server_id = self.server_id.clone();
        Ok(w)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
