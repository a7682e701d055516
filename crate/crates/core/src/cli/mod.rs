//! The `yoccoz` command line: `render`, `nest`, `report` and `measure`.
//!
//! Settings come from an optional flat config file (`--config`), then `--set key=value`
//! overrides, then the dedicated flags. Every output carries the SHA-256 of the resolved
//! config and the precision profile; identical configs give byte-identical files.

pub mod config;
mod commands;
pub mod render;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub use commands::{measure, nest, render_cmd, report, Outcome};
pub use config::{Command, RunConfig};

use crate::error::Error;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    /// Outputs were written but an invariant check failed.
    pub const CHECK_FAILED: i32 = 1;
    /// Bad flags, config keys or values.
    pub const CONFIG: i32 = 2;
    /// Reading inputs or writing outputs failed.
    pub const IO: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    /// The parameter does not have the combinatorics the construction needs.
    pub const COMBINATORICS: i32 = 5;
    /// The nest stopped short of the requested depth; the levels built were written.
    pub const TRUNCATED: i32 = 6;
    pub const UNDER_RESOLVED: i32 = 7;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::Io(_) | Error::Serde(_) => exit::IO,
        Error::Combinatorics(_) | Error::NonRenormalizable { .. } | Error::Nesting(_) => exit::COMBINATORICS,
        Error::AngleBudget(_) => exit::TRUNCATED,
        Error::UnderResolved(_) => exit::UNDER_RESOLVED,
        _ => exit::NUMERICAL,
    }
}

#[derive(Parser, Debug)]
#[command(name = "yoccoz", version, about = "Puzzle pieces, parapieces and conformal scaling of z^2 + c")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, short = 'f')]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Parameter: `fibonacci`, `<re>` or `<re>,<im>`.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Escape-time image with optional piece overlay (PPM).
    Render {
        #[command(flatten)]
        common: Common,
        /// julia | mandelbrot
        #[arg(long)]
        plane: Option<String>,
        /// none | nest | para
        #[arg(long)]
        overlay: Option<String>,
    },
    /// Principal nest and parapieces as JSON, plus checks and superstable centers.
    Nest {
        #[command(flatten)]
        common: Common,
    },
    /// Scaling report (JSON and CSV).
    Report {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sections: m, para, k, hausdorff, winding.
        #[arg(long)]
        only: Option<String>,
    },
    /// Modulus or capacity of supplied piece JSON files.
    Measure {
        #[command(flatten)]
        common: Common,
        /// modulus | capacity
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        outer: Option<PathBuf>,
        #[arg(long)]
        inner: Option<PathBuf>,
        /// Capacity pole: `infinity` or `<re>,<im>`.
        #[arg(long, allow_hyphen_values = true)]
        pole: Option<String>,
    },
}

fn overrides(common: &Common, extra: Vec<(&str, Option<String>)>) -> crate::Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = common
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<crate::Result<_>>()?;
    let flags = [
        ("c", common.c.clone()),
        ("depth", common.depth.map(|d| d.to_string())),
        ("resolution", common.resolution.map(|r| r.to_string())),
        ("seed", common.seed.map(|s| s.to_string())),
        ("output", common.output.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags.into_iter().chain(extra) {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    }
    Ok(out)
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn resolve(sub: &Sub) -> crate::Result<RunConfig> {
    let (command, common, extra) = match sub {
        Sub::Render { common, plane, overlay } => (
            Command::Render,
            common,
            vec![("plane", plane.clone()), ("overlay", overlay.clone())],
        ),
        Sub::Nest { common } => (Command::Nest, common, vec![]),
        Sub::Report { common, only } => (Command::Report, common, vec![("only", only.clone())]),
        Sub::Measure { common, kind, outer, inner, pole } => (
            Command::Measure,
            common,
            vec![
                ("kind", kind.clone()),
                ("outer", path_string(outer)),
                ("inner", path_string(inner)),
                ("pole", pole.clone()),
            ],
        ),
    };
    let ov = overrides(common, extra)?;
    RunConfig::load(command, common.config.as_deref(), &ov)
}

/// Run the command described by `cfg`.
pub fn execute(cfg: &RunConfig) -> crate::Result<Outcome> {
    match cfg.command {
        Command::Render => render_cmd(cfg),
        Command::Nest => nest(cfg),
        Command::Report => report(cfg),
        Command::Measure => measure(cfg),
    }
}

/// Parse `args` (program name first), run, print a summary and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    let result = resolve(&cli.command).and_then(|cfg| execute(&cfg));
    match result {
        Ok(outcome) => {
            for f in &outcome.written {
                println!("wrote {}", f.display());
            }
            for d in &outcome.diagnostics {
                eprintln!("{d}");
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// `value` with `config_hash`, `precision` and `profile` added at the top level.
pub(crate) fn stamp(cfg: &RunConfig, mut value: Value) -> crate::Result<Value> {
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Serde("stamped output must be a JSON object".into()))?;
    obj.insert("config_hash".into(), json!(cfg.hash()));
    obj.insert("precision".into(), json!(config::PRECISION));
    obj.insert("profile".into(), serde_json::to_value(&cfg.profile)?);
    Ok(value)
}

/// Buffered outputs, written in order once every job has finished.
#[derive(Default)]
pub(crate) struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub(crate) fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub(crate) fn json(&mut self, cfg: &RunConfig, name: impl Into<String>, value: Value) -> crate::Result<()> {
        let mut s = serde_json::to_string_pretty(&stamp(cfg, value)?)?;
        s.push('\n');
        self.add(name, s.into_bytes());
        Ok(())
    }

    pub(crate) fn write(self, dir: &Path) -> crate::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut out = Vec::new();
        for (name, bytes) in self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display())))?;
            out.push(p);
        }
        Ok(out)
    }
}
