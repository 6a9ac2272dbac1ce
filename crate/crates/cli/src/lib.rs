//! Command implementations behind the `gridauth` binary.
//!
//! Each `cmd_*` writes its human-readable output to `out` and returns
//! [`Status::Failed`] when a check it asserts does not hold. Configuration,
//! I/O and file-format problems surface as [`CliError`].

pub mod bench;
pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gridauth_core::curve::ProfileFile;
use gridauth_core::persist::{server_from_str, server_to_string};
use gridauth_core::sim::{run_attack_suite, run_attack_suite_on, AttackReport, World};
use gridauth_core::{setup, ErrorKind, ServerState};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use bench::CostReport;
pub use config::{CliConfig, FileConfig, Format, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    State {
        path: PathBuf,
        source: gridauth_core::Error,
    },
    #[error(transparent)]
    Core(#[from] gridauth_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failed => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gridauth",
    version,
    about = "ECC + biometric mutual authentication: demos, attack suite, cost report"
)]
pub struct Cli {
    /// TOML config file; flags and GRIDAUTH_* variables take precedence
    #[arg(long, env = "GRIDAUTH_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Setup, registration and one handshake; prints the transcript and both keys
    Demo,
    /// Enroll, authenticate, update password and biometric, re-authenticate
    UpdateDemo,
    /// Run the adversary scenario suite and write its report
    Attacks,
    /// Count operations per phase and report exact message sizes
    Bench,
    /// Emit fresh server state
    Keygen,
    /// Print the resolved configuration
    ShowConfig,
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Loads `--server-state` if one was given.
pub fn load_server(
    cfg: &CliConfig,
    profiles: &ProfileFile,
) -> Result<Option<ServerState>, CliError> {
    let Some(path) = &cfg.server_state else {
        return Ok(None);
    };
    let text = read_file(path)?;
    server_from_str(&text, profiles)
        .map(Some)
        .map_err(|source| CliError::State {
            path: path.clone(),
            source,
        })
}

fn world(cfg: &CliConfig) -> Result<World, CliError> {
    let wc = cfg.world()?;
    Ok(match load_server(cfg, &cfg.profile_file()?)? {
        Some(server) => World::from_server(wc, server),
        None => World::new(wc)?,
    })
}

fn header(out: &mut dyn Write, w: &World) -> Result<(), CliError> {
    let p = &w.params;
    writeln!(
        out,
        "profile={} hash={} delta_t={}ms latency={}ms seed={} fe=(n={},k={},rho={}) server={}",
        p.curve.name,
        p.hash,
        p.delta_t,
        w.config.hop_latency,
        w.config.seed,
        p.fuzzy.n,
        p.fuzzy.k,
        p.fuzzy.rho,
        w.server.server_id
    )
    .map_err(io)
}

/// Setup, registration and one honest handshake.
pub fn cmd_demo(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let mut w = world(cfg)?;
    header(out, &w)?;
    let result = w.enroll_next().and_then(|u| w.run_honest_session(u));
    let transcript = w.transcript.to_text(&w.params.curve);
    out.write_all(transcript.as_bytes()).map_err(io)?;
    if let Some(path) = &cfg.out {
        write_file(path, &transcript)?;
    }
    match result {
        Ok(run) => {
            writeln!(out, "SK_US = {}", run.sk_user.0.to_hex()).map_err(io)?;
            writeln!(out, "SK_SU = {}", run.sk_server.0.to_hex()).map_err(io)?;
            if run.sk_user == run.sk_server {
                writeln!(out, "keys match").map_err(io)?;
                Ok(Status::Success)
            } else {
                writeln!(out, "keys differ").map_err(io)?;
                Ok(Status::Failed)
            }
        }
        Err(e) => {
            writeln!(out, "handshake failed: {}: {e}", e.kind()).map_err(io)?;
            Ok(Status::Failed)
        }
    }
}

struct Steps<'a> {
    out: &'a mut dyn Write,
    ok: bool,
}

impl Steps<'_> {
    fn check(
        &mut self,
        name: &str,
        expect: &str,
        result: Result<String, String>,
        pass: bool,
    ) -> Result<(), CliError> {
        let tag = if pass { "ok  " } else { "FAIL" };
        let got = match result {
            Ok(s) | Err(s) => s,
        };
        self.ok &= pass;
        writeln!(self.out, "{tag} {name}: expected {expect}, got {got}").map_err(io)
    }
}

fn session(w: &mut World, user: usize) -> (Result<String, String>, bool) {
    match w.run_honest_session(user) {
        Ok(run) if run.sk_user == run.sk_server => (Ok("keys match".into()), true),
        Ok(_) => (Ok("keys differ".into()), false),
        Err(e) => (Err(format!("{}", e.kind())), false),
    }
}

fn local_failure(r: gridauth_core::Result<impl Sized>) -> (Result<String, String>, bool) {
    match r {
        Ok(_) => (Ok("accepted".into()), false),
        Err(e) => {
            let k = e.kind();
            (Err(k.to_string()), k == ErrorKind::LocalAuthFailure)
        }
    }
}

/// Enroll, authenticate, update, then check new and old credentials.
pub fn cmd_update_demo(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let mut w = world(cfg)?;
    header(out, &w)?;
    let u = w.enroll_next()?;
    let mut steps = Steps { out, ok: true };

    let (r, pass) = session(&mut w, u);
    steps.check("login before update", "keys match", r, pass)?;

    let tol = w.params.fuzzy.tolerance();
    let old_pw = w.user(u).password.clone();
    let old_bio = w.user(u).biometric.clone();
    let reading = w.noisy_reading(u, tol);
    let before = w.user(u).device.clone();
    let (r, pass) = local_failure(w.update_credentials(u, "wrong-password", &reading, "x"));
    steps.check(
        "update with wrong old password",
        "LocalAuthFailure",
        r,
        pass,
    )?;
    let unchanged = w.user(u).device == before;
    steps.check(
        "device state after refused update",
        "unchanged",
        Ok(if unchanged { "unchanged" } else { "modified" }.into()),
        unchanged,
    )?;
    let (r, pass) = session(&mut w, u);
    steps.check(
        "login with old credentials after refusal",
        "keys match",
        r,
        pass,
    )?;

    let new_pw = format!("{old_pw}-updated");
    let r = w.update_credentials(u, &old_pw, &reading, &new_pw);
    let pass = r.is_ok();
    let r = r
        .map(|_| "updated".to_string())
        .map_err(|e| e.kind().to_string());
    steps.check("update with correct old credentials", "updated", r, pass)?;

    let (r, pass) = session(&mut w, u);
    steps.check("login with new credentials", "keys match", r, pass)?;
    let (r, pass) = local_failure(w.send_login(u, &old_pw, &old_bio));
    steps.check("login with old credentials", "LocalAuthFailure", r, pass)?;

    let ok = steps.ok;
    if let Some(path) = &cfg.out {
        write_file(path, &w.transcript.to_text(&w.params.curve))?;
    }
    writeln!(
        out,
        "{}",
        if ok {
            "update demo passed"
        } else {
            "update demo FAILED"
        }
    )
    .map_err(io)?;
    Ok(if ok { Status::Success } else { Status::Failed })
}

/// The attack report for `cfg`, starting from `--server-state` when given.
pub fn attack_report(cfg: &CliConfig) -> Result<AttackReport, CliError> {
    let wc = cfg.world()?;
    Ok(match load_server(cfg, &cfg.profile_file()?)? {
        Some(server) => run_attack_suite_on(&server, &wc, cfg.seed)?,
        None => run_attack_suite(&wc, cfg.seed)?,
    })
}

pub fn render_report(report: &AttackReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Kv => report.to_kv(),
    }
}

pub fn cmd_attacks(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let report = attack_report(cfg)?;
    let text = render_report(&report, cfg.format);
    out.write_all(text.as_bytes()).map_err(io)?;
    if let Some(path) = &cfg.out {
        write_file(path, &text)?;
    }
    if report.all_passed() {
        return Ok(Status::Success);
    }
    for o in report.failures() {
        writeln!(out, "failed: {}/{}", o.family, o.name).map_err(io)?;
    }
    Ok(Status::Failed)
}

pub fn cost_report(cfg: &CliConfig) -> Result<CostReport, CliError> {
    Ok(bench::run(cfg.curve_params()?, &cfg.protocol()?, cfg.seed)?)
}

pub fn cmd_bench(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let report = cost_report(cfg)?;
    let text = match cfg.format {
        Format::Text => report.to_text(),
        Format::Kv => report.to_kv(),
    };
    out.write_all(text.as_bytes()).map_err(io)?;
    if let Some(path) = &cfg.out {
        write_file(path, &text)?;
    }
    Ok(Status::Success)
}

/// Fresh server state: new secret key, no users.
pub fn cmd_keygen(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let (_, server) = setup(
        cfg.curve_params()?,
        &cfg.server_id,
        &cfg.protocol()?,
        &mut rng,
    )?;
    let text = server_to_string(&server);
    match &cfg.out {
        Some(path) => {
            write_file(path, &text)?;
            writeln!(out, "server state written to {}", path.display()).map_err(io)?;
        }
        None => out.write_all(text.as_bytes()).map_err(io)?,
    }
    Ok(Status::Success)
}

pub fn cmd_show_config(cfg: &CliConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    out.write_all(cfg.to_toml().as_bytes()).map_err(io)?;
    Ok(Status::Success)
}

/// Resolves configuration and dispatches a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    let cfg = CliConfig::resolve(&cli.overrides, file.as_ref())?;
    match cli.command {
        Command::Demo => cmd_demo(&cfg, out),
        Command::UpdateDemo => cmd_update_demo(&cfg, out),
        Command::Attacks => cmd_attacks(&cfg, out),
        Command::Bench => cmd_bench(&cfg, out),
        Command::Keygen => cmd_keygen(&cfg, out),
        Command::ShowConfig => cmd_show_config(&cfg, out),
    }
}
