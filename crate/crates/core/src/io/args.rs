//! `qkd run|sweep|replay` argument handling.
//!
//! Settings come from an optional flat `key = value` file (`--config`) and
//! from flags; flags win. Keys use the flag names, with `_` accepted for `-`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::channel::EveMode;
use crate::config::{AllocationMode, Protocol, SessionConfig};
use crate::error::{Error, Result};
use crate::sweep::{parse_axis, SweepMode, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::config("format", format!("`{other}` not one of json|csv"))),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qkd", about = "BB84 / B92 / E91 quantum key distribution simulator")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Simulate one session.
    Run(Flags),
    /// Evaluate a (noise × eve) grid.
    Sweep(Flags),
    /// Recompute statistics from a recorded table (CSV).
    Replay {
        input: PathBuf,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// Flat `key = value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Probability (run) or axis `start:stop:step` / list (sweep).
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    eve: Option<String>,
    #[arg(long = "eve-mode")]
    eve_mode: Option<String>,
    #[arg(long = "bell-ratio")]
    bell_ratio: Option<String>,
    #[arg(long)]
    allocation: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long = "sample-fraction")]
    sample_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

const KEYS: [&str; 13] = [
    "protocol",
    "rounds",
    "noise",
    "eve",
    "eve-mode",
    "bell-ratio",
    "allocation",
    "threshold",
    "sample-fraction",
    "seed",
    "mode",
    "format",
    "out",
];

impl Flags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 13] {
        [
            ("protocol", &self.protocol),
            ("rounds", &self.rounds),
            ("noise", &self.noise),
            ("eve", &self.eve),
            ("eve-mode", &self.eve_mode),
            ("bell-ratio", &self.bell_ratio),
            ("allocation", &self.allocation),
            ("threshold", &self.threshold),
            ("sample-fraction", &self.sample_fraction),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("format", &self.format),
            ("out", &self.out),
        ]
    }
}

/// A fully resolved command.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run {
        config: SessionConfig,
        format: OutputFormat,
        out: Option<PathBuf>,
    },
    Sweep {
        spec: SweepSpec,
        format: OutputFormat,
        out: Option<PathBuf>,
    },
    Replay {
        input: PathBuf,
        format: OutputFormat,
        out: Option<PathBuf>,
    },
    /// Help or version text requested; `requested` is false when it is shown
    /// because no subcommand was given.
    Help { text: String, requested: bool },
}

type Settings = BTreeMap<&'static str, String>;

/// Parses a flat `key = value` settings text. `#` starts a comment line.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::parse(i + 1, format!("unknown key `{}`", k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn merge(flags: &Flags, file: Option<BTreeMap<String, String>>) -> Settings {
    let mut settings = Settings::new();
    if let Some(file) = file {
        for key in KEYS {
            if let Some(v) = file.get(key) {
                settings.insert(key, v.clone());
            }
        }
    }
    for (key, value) in flags.pairs() {
        if let Some(v) = value {
            settings.insert(key, v.clone());
        }
    }
    settings
}

fn field<T: FromStr>(settings: &Settings, key: &'static str, allowed: &str) -> Result<Option<T>> {
    settings
        .get(key)
        .map(|raw| {
            raw.parse::<T>()
                .map_err(|_| Error::config(key, format!("`{raw}` invalid; expected {allowed}")))
        })
        .transpose()
}

fn enum_field<T: FromStr<Err = Error>>(settings: &Settings, key: &'static str) -> Result<Option<T>> {
    settings.get(key).map(|raw| raw.parse::<T>()).transpose()
}

fn reject(settings: &Settings, keys: &[&'static str], context: &str) -> Result<()> {
    for &k in keys {
        if settings.contains_key(k) {
            return Err(Error::config(k, format!("not applicable to {context}")));
        }
    }
    Ok(())
}

fn protocol(settings: &Settings) -> Result<Protocol> {
    enum_field::<Protocol>(settings, "protocol")?
        .ok_or_else(|| Error::config("protocol", "required; one of bb84|b92|e91"))
}

fn e91_fields(settings: &Settings, p: Protocol) -> Result<()> {
    if p != Protocol::E91 {
        reject(settings, &["eve-mode", "bell-ratio", "allocation"], p.label())?;
    }
    Ok(())
}

fn format_and_out(settings: &Settings, default: OutputFormat) -> Result<(OutputFormat, Option<PathBuf>)> {
    let format = enum_field::<OutputFormat>(settings, "format")?.unwrap_or(default);
    Ok((format, settings.get("out").map(PathBuf::from)))
}

fn resolve_session(settings: &Settings) -> Result<SessionConfig> {
    let p = protocol(settings)?;
    reject(settings, &["mode"], "run")?;
    e91_fields(settings, p)?;
    let mut c = SessionConfig::new(p);
    if let Some(v) = field(settings, "rounds", "integer >= 1")? {
        c.rounds = v;
    }
    if let Some(v) = field(settings, "noise", "probability in [0, 1]")? {
        c.noise_p = v;
    }
    if let Some(v) = field(settings, "eve", "probability in [0, 1]")? {
        c.eve_p = v;
    }
    if let Some(v) = enum_field::<EveMode>(settings, "eve-mode")? {
        c.eve_mode = Some(v);
    }
    if let Some(v) = field(settings, "bell-ratio", "probability in [0, 1]")? {
        c.bell_ratio = Some(v);
    }
    if let Some(v) = enum_field::<AllocationMode>(settings, "allocation")? {
        c.allocation = Some(v);
    }
    if let Some(v) = field(settings, "threshold", "fraction in [0, 1]")? {
        c.qber_threshold = v;
    }
    if let Some(v) = field(settings, "sample-fraction", "fraction in (0, 1]")? {
        c.sample_fraction = v;
    }
    if let Some(v) = field(settings, "seed", "unsigned 64-bit integer")? {
        c.seed = v;
    }
    c.validate().map_err(rename_fields)?;
    Ok(c)
}

/// Maps internal field names back to the flag spelling.
fn rename_fields(e: Error) -> Error {
    match e {
        Error::Config { field, reason } => {
            let flag = match field.as_str() {
                "noise_p" => "noise",
                "eve_p" => "eve",
                "eve_mode" => "eve-mode",
                "bell_ratio" => "bell-ratio",
                "qber_threshold" => "threshold",
                "sample_fraction" => "sample-fraction",
                other => other,
            };
            Error::config(flag, reason)
        }
        other => other,
    }
}

fn resolve_sweep(settings: &Settings) -> Result<SweepSpec> {
    let p = protocol(settings)?;
    reject(settings, &["sample-fraction", "allocation"], "sweep")?;
    e91_fields(settings, p)?;
    let noise = parse_axis("noise", settings.get("noise").map(String::as_str).unwrap_or("0"))?;
    let eve = parse_axis("eve", settings.get("eve").map(String::as_str).unwrap_or("0"))?;
    let mode = enum_field::<SweepMode>(settings, "mode")?.unwrap_or(SweepMode::MonteCarlo);
    let mut spec = SweepSpec::new(p, noise, eve, mode);
    if let Some(v) = field(settings, "rounds", "integer >= 1")? {
        spec.rounds_per_cell = v;
    }
    if let Some(v) = enum_field::<EveMode>(settings, "eve-mode")? {
        spec.eve_mode = Some(v);
    }
    if let Some(v) = field(settings, "bell-ratio", "probability in [0, 1]")? {
        spec.bell_ratio = Some(v);
    }
    if let Some(v) = field(settings, "threshold", "fraction in [0, 1]")? {
        spec.qber_threshold = v;
    }
    if let Some(v) = field(settings, "seed", "unsigned 64-bit integer")? {
        spec.base_seed = v;
    }
    spec.validate().map_err(rename_fields)?;
    Ok(spec)
}

fn usage_error(e: &clap::Error) -> Error {
    let msg = e.to_string();
    let first = msg.lines().next().unwrap_or("invalid arguments");
    Error::Usage(first.trim_start_matches("error: ").to_string())
}

/// Parses command-line tokens (without the program name). `read_file`
/// supplies the contents of a `--config` path.
pub fn parse_config<I, S, F>(args: I, read_file: F) -> Result<Invocation>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
    F: Fn(&std::path::Path) -> std::io::Result<String>,
{
    let argv = std::iter::once(std::ffi::OsString::from("qkd")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let requested = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if requested || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                return Ok(Invocation::Help {
                    text: e.render().to_string(),
                    requested,
                });
            }
            return Err(usage_error(&e));
        }
    };
    let load = |flags: &Flags| -> Result<Settings> {
        let file = match &flags.config {
            Some(path) => {
                let text = read_file(path)
                    .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
                Some(parse_config_text(&text)?)
            }
            None => None,
        };
        Ok(merge(flags, file))
    };
    match cli.command {
        CliCommand::Run(flags) => {
            let settings = load(&flags)?;
            let config = resolve_session(&settings)?;
            let (format, out) = format_and_out(&settings, OutputFormat::Json)?;
            Ok(Invocation::Run { config, format, out })
        }
        CliCommand::Sweep(flags) => {
            let settings = load(&flags)?;
            let spec = resolve_sweep(&settings)?;
            let (format, out) = format_and_out(&settings, OutputFormat::Csv)?;
            Ok(Invocation::Sweep { spec, format, out })
        }
        CliCommand::Replay { input, format, out } => {
            let format = format.as_deref().map(str::parse).transpose()?.unwrap_or(OutputFormat::Json);
            Ok(Invocation::Replay { input, format, out })
        }
    }
}

impl SessionConfig {
    /// Settings-file text that parses back to this config.
    pub fn to_config_text(&self) -> String {
        let mut lines = vec![
            format!("protocol = {}", self.protocol.label()),
            format!("rounds = {}", self.rounds),
            format!("noise = {}", self.noise_p),
            format!("eve = {}", self.eve_p),
        ];
        if let Some(m) = self.eve_mode {
            lines.push(format!("eve-mode = {}", m.label()));
        }
        if let Some(r) = self.bell_ratio {
            lines.push(format!("bell-ratio = {r}"));
        }
        if let Some(a) = self.allocation {
            lines.push(format!("allocation = {}", a.label()));
        }
        lines.push(format!("threshold = {}", self.qber_threshold));
        lines.push(format!("sample-fraction = {}", self.sample_fraction));
        lines.push(format!("seed = {}", self.seed));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
