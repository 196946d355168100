//! Command-line front end: config parsing, command dispatch and report
//! rendering. Every report is a serializable struct; the text form is
//! rendered from the same struct the JSON form is serialized from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::coding::{build_full_scheme, CycleDirection, FullScheme, LevelContent, Slot, TransmissionScheme};
use crate::model::{assign_roles, ChannelGains, Flow, RateTuple, RoleAssignment, User};
use crate::oracle::{achievability_sweep, detour_sweep, enumerate_region, verify_lemma3, SweepConfig, SweepReport};
use crate::reduction::{assign_relay_levels, compute_beta, compute_gamma, reduce_network, LevelAssignment, ReducedGains};
use crate::region::{check_cycle_conditions, theorem1_inequalities, CycleCheck};
use crate::simulate::{run_end_to_end, MessageSet};

pub const SCHEMA_VERSION: u32 = 1;

const GAIN_KEYS: [&str; 6] = ["n14", "n24", "n34", "n41", "n42", "n43"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse `{token}`")]
    Parse { line: usize, token: String },
    #[error("line {line}: `{key}` must be a non-negative integer, got `{value}`")]
    Validation { line: usize, key: String, value: String },
    #[error("channel gains are incomplete: `{0}` is missing")]
    MissingGain(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

/// A network, a rate tuple and optional run parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigDocument {
    /// All six gains or none.
    pub gains: Option<ChannelGains>,
    pub rates: RateTuple,
    pub seed: Option<u64>,
    pub max_gain: Option<u32>,
    pub tuple_budget: Option<usize>,
}

fn rate_keys() -> [String; 12] {
    RateTuple::FLOWS.map(Flow::key)
}

fn is_known_key(key: &str) -> bool {
    GAIN_KEYS.contains(&key) || rate_keys().iter().any(|k| k == key) || matches!(key, "seed" | "max_gain" | "tuple_budget")
}

// Fills one key of the document; `value` is already a non-negative integer.
fn apply(
    doc: &mut ConfigDocument,
    gains: &mut [Option<u32>; 6],
    key: &str,
    value: u64,
    line: usize,
    raw: &str,
) -> Result<(), ConfigError> {
    let invalid = || ConfigError::Validation {
        line,
        key: key.to_string(),
        value: raw.to_string(),
    };
    let small = || u32::try_from(value).map_err(|_| invalid());
    if let Some(i) = GAIN_KEYS.iter().position(|k| *k == key) {
        gains[i] = Some(small()?);
    } else if let Some(i) = rate_keys().iter().position(|k| k == key) {
        doc.rates.0[i] = small()?;
    } else {
        match key {
            "seed" => doc.seed = Some(value),
            "max_gain" => doc.max_gain = Some(small()?),
            "tuple_budget" => {
                if value == 0 {
                    return Err(invalid());
                }
                doc.tuple_budget = Some(usize::try_from(value).map_err(|_| invalid())?);
            }
            _ => unreachable!("key checked by caller"),
        }
    }
    Ok(())
}

fn finish(mut doc: ConfigDocument, gains: [Option<u32>; 6]) -> Result<ConfigDocument, ConfigError> {
    if gains.iter().any(Option::is_some) {
        if let Some(i) = gains.iter().position(Option::is_none) {
            return Err(ConfigError::MissingGain(GAIN_KEYS[i].to_string()));
        }
        doc.gains = Some(ChannelGains::from_array(gains.map(Option::unwrap)));
    }
    Ok(doc)
}

/// Parses the line-oriented `key = value` format.
pub fn parse_config(text: &str) -> Result<ConfigDocument, ConfigError> {
    let mut doc = ConfigDocument::default();
    let mut gains = [None; 6];
    let mut seen = Vec::new();
    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                token: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !is_known_key(key) || seen.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                token: key.to_string(),
            });
        }
        seen.push(key);
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                token: content.to_string(),
            });
        }
        let parsed = if value.bytes().all(|b| b.is_ascii_digit()) {
            value.parse::<u64>().ok()
        } else {
            None
        };
        let Some(v) = parsed else {
            return Err(ConfigError::Validation {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        };
        apply(&mut doc, &mut gains, key, v, line, value)?;
    }
    finish(doc, gains)
}

/// Parses the JSON form: one flat object with the same keys.
pub fn parse_config_json(text: &str) -> Result<ConfigDocument, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        token: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(ConfigError::Parse {
            line: 1,
            token: "expected a JSON object".to_string(),
        });
    };
    let line_of = |key: &str| {
        text.find(&format!("\"{key}\""))
            .map(|pos| text[..pos].matches('\n').count() + 1)
            .unwrap_or(1)
    };
    let mut doc = ConfigDocument::default();
    let mut gains = [None; 6];
    for (key, v) in &map {
        let line = line_of(key);
        if !is_known_key(key) {
            return Err(ConfigError::Parse {
                line,
                token: key.clone(),
            });
        }
        let Some(n) = v.as_u64() else {
            return Err(ConfigError::Validation {
                line,
                key: key.clone(),
                value: v.to_string(),
            });
        };
        apply(&mut doc, &mut gains, key, n, line, &v.to_string())?;
    }
    finish(doc, gains)
}

/// Reads a config file, choosing the syntax from its extension.
pub fn load_config(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_config_json(&text)
    } else {
        parse_config(&text)
    }
}

fn config_entries(doc: &ConfigDocument) -> Vec<(String, u64)> {
    let mut out = Vec::new();
    if let Some(g) = doc.gains {
        for (k, v) in GAIN_KEYS.iter().zip(g.as_array()) {
            out.push((k.to_string(), u64::from(v)));
        }
    }
    for (k, v) in rate_keys().into_iter().zip(doc.rates.0) {
        if v > 0 {
            out.push((k, u64::from(v)));
        }
    }
    if let Some(s) = doc.seed {
        out.push(("seed".into(), s));
    }
    if let Some(m) = doc.max_gain {
        out.push(("max_gain".into(), u64::from(m)));
    }
    if let Some(b) = doc.tuple_budget {
        out.push(("tuple_budget".into(), b as u64));
    }
    out
}

/// Canonical `key = value` text; zero rates are omitted.
pub fn emit_config(doc: &ConfigDocument) -> String {
    config_entries(doc)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

pub fn emit_config_json(doc: &ConfigDocument) -> String {
    let map: serde_json::Map<String, Value> = config_entries(doc)
        .into_iter()
        .map(|(k, v)| (k, Value::from(v)))
        .collect();
    serde_json::to_string_pretty(&Value::Object(map)).expect("plain map")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    Reduce,
    Scheme,
    Simulate,
    Enumerate,
    Sweep,
    Lemma3,
    DetourSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Reduce => "reduce",
            Command::Scheme => "scheme",
            Command::Simulate => "simulate",
            Command::Enumerate => "enumerate",
            Command::Sweep => "sweep",
            Command::Lemma3 => "lemma3",
            Command::DetourSweep => "detour-sweep",
        }
    }

    fn needs_network(self) -> bool {
        matches!(
            self,
            Command::Check | Command::Reduce | Command::Scheme | Command::Simulate | Command::Enumerate
        )
    }
}

/// Region checks, scheme construction and simulation for the deterministic
/// 4-node relay network.
#[derive(Debug, Parser)]
#[command(name = "detrelay", version)]
pub struct CliArgs {
    #[arg(value_enum)]
    pub command: Command,
    /// Network/rate file (`key = value`, or JSON for *.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Emit machine-readable JSON.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_gain: Option<u32>,
    #[arg(long)]
    pub tuple_budget: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Flags {
    pub json: bool,
    pub seed: Option<u64>,
    pub max_gain: Option<u32>,
    pub tuple_budget: Option<usize>,
}

impl From<&CliArgs> for Flags {
    fn from(a: &CliArgs) -> Self {
        Flags {
            json: a.json,
            seed: a.seed,
            max_gain: a.max_gain,
            tuple_budget: a.tuple_budget,
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    fn input_error(msg: impl Into<String>) -> Self {
        CommandOutput {
            status: EXIT_INPUT,
            stdout: String::new(),
            stderr: msg.into() + "\n",
        }
    }
}

/// Parses arguments, loads the config and runs the command.
pub fn run_cli<I, T>(args: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            return if status == EXIT_PASS {
                CommandOutput {
                    status,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                CommandOutput::input_error(text.trim_end())
            };
        }
    };
    let config = match &args.config {
        Some(p) => match load_config(p) {
            Ok(c) => Some(c),
            Err(e) => return CommandOutput::input_error(format!("error: {e}")),
        },
        None => None,
    };
    run_command(args.command, config.as_ref(), &Flags::from(&args))
}

/// Runs one command. Status 0 on pass, 1 on violation or failure, 2 on
/// input error.
pub fn run_command(command: Command, config: Option<&ConfigDocument>, flags: &Flags) -> CommandOutput {
    let default = ConfigDocument::default();
    let doc = config.unwrap_or(&default);
    let network = match (command.needs_network(), doc.gains) {
        (true, None) => {
            return CommandOutput::input_error(format!(
                "error: `{}` needs a config with the six gains n14..n43",
                command.name()
            ))
        }
        (_, g) => g.unwrap_or_default(),
    };
    let seed = flags.seed.or(doc.seed);
    let max_gain = flags.max_gain.or(doc.max_gain);
    let tuple_budget = flags.tuple_budget.or(doc.tuple_budget);
    if tuple_budget == Some(0) {
        return CommandOutput::input_error("error: --tuple-budget must be at least 1");
    }
    let rates = doc.rates;

    let (passed, report) = match command {
        Command::Check => {
            let r = check_report(&network, &rates);
            (r.in_region, Report::Check(r))
        }
        Command::Reduce => {
            let r = reduce_report(&network, &rates);
            (r.in_region && r.error.is_none(), Report::Reduce(Box::new(r)))
        }
        Command::Scheme => match build_full_scheme(&network, &rates) {
            Ok(full) => (true, Report::Scheme(Box::new(scheme_report(&full)))),
            Err(e) => (false, Report::Error(e.to_string())),
        },
        Command::Simulate => {
            let r = simulate_report(&network, &rates, seed.unwrap_or(0));
            (r.all_ok, Report::Simulate(r))
        }
        Command::Enumerate => {
            let tuples: Vec<[u32; 12]> = enumerate_region(&network).map(|r| r.0).collect();
            let r = EnumerateReport {
                gains: network,
                count: tuples.len(),
                tuples,
            };
            (true, Report::Enumerate(r))
        }
        Command::Sweep => {
            let config = SweepConfig {
                max_gain: max_gain.unwrap_or(2),
                tuple_budget,
                seeds: seed.map_or(vec![0, 1], |s| vec![s]),
                parallelism: None,
            };
            let r = achievability_sweep(&config);
            (r.passed(), Report::Sweep(config, r))
        }
        Command::Lemma3 => {
            let max = max_gain.unwrap_or(4);
            let r = verify_lemma3(max);
            (r.passed(), Report::Reduced(max, r))
        }
        Command::DetourSweep => {
            let max = max_gain.unwrap_or(4);
            let r = detour_sweep(max);
            (r.passed(), Report::Reduced(max, r))
        }
    };
    let status = if passed { EXIT_PASS } else { EXIT_FAIL };
    let stdout = if flags.json {
        let mut v = json!({
            "schema": SCHEMA_VERSION,
            "command": command.name(),
            "status": status,
        });
        let body = report.to_json();
        v.as_object_mut().unwrap().insert("report".into(), body);
        serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
    } else {
        report.to_text()
    };
    CommandOutput {
        status,
        stdout,
        stderr: String::new(),
    }
}

enum Report {
    Check(CheckReport),
    Reduce(Box<ReduceReport>),
    Scheme(Box<SchemeReport>),
    Simulate(SimulateReport),
    Enumerate(EnumerateReport),
    Sweep(SweepConfig, SweepReport),
    Reduced(u32, SweepReport),
    Error(String),
}

impl Report {
    fn to_json(&self) -> Value {
        let v = match self {
            Report::Check(r) => serde_json::to_value(r),
            Report::Reduce(r) => serde_json::to_value(r),
            Report::Scheme(r) => serde_json::to_value(r),
            Report::Simulate(r) => serde_json::to_value(r),
            Report::Enumerate(r) => serde_json::to_value(r),
            Report::Sweep(c, r) => Ok(json!({ "config": c, "result": r })),
            Report::Reduced(m, r) => Ok(json!({ "max_reduced_gain": m, "result": r })),
            Report::Error(e) => Ok(json!({ "error": e })),
        };
        v.expect("report serializes")
    }

    fn to_text(&self) -> String {
        match self {
            Report::Check(r) => r.to_text(),
            Report::Reduce(r) => r.to_text(),
            Report::Scheme(r) => r.to_text(),
            Report::Simulate(r) => r.to_text(),
            Report::Enumerate(r) => r.to_text(),
            Report::Sweep(c, r) => {
                let budget = c.tuple_budget.map_or("all".to_string(), |b| b.to_string());
                format!(
                    "sweep: max_gain {}, tuples per network {}, seeds {:?}\n{}",
                    c.max_gain,
                    budget,
                    c.seeds,
                    sweep_text(r)
                )
            }
            Report::Reduced(m, r) => format!("max reduced gain {m}\n{}", sweep_text(r)),
            Report::Error(e) => format!("error: {e}\n"),
        }
    }
}

fn sweep_text(r: &SweepReport) -> String {
    let mut s = format!(
        "networks {}  tuples {}  skipped {}  failures {}  wall clock {:.3}s\n",
        r.networks_tested,
        r.tuples_tested,
        r.skipped,
        r.failures.len(),
        r.wall_clock.as_secs_f64()
    );
    for f in &r.failures {
        let _ = writeln!(s, "  FAIL gains {:?} rates {:?} [{}] {}", f.gains, f.rates, f.stage, f.detail);
    }
    s.push_str(if r.passed() { "PASS\n" } else { "FAIL\n" });
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityRow {
    pub label: String,
    pub expression: String,
    pub lhs: u32,
    pub rhs: u32,
    pub slack: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub gains: ChannelGains,
    pub rates: RateTuple,
    pub in_region: bool,
    pub inequalities: Vec<InequalityRow>,
}

pub fn check_report(gains: &ChannelGains, rates: &RateTuple) -> CheckReport {
    let inequalities: Vec<InequalityRow> = theorem1_inequalities(gains, &assign_roles(gains))
        .iter()
        .map(|q| {
            let lhs = q.lhs(rates);
            InequalityRow {
                label: q.label.clone(),
                expression: q.to_string(),
                lhs,
                rhs: q.rhs,
                slack: i64::from(q.rhs) - i64::from(lhs),
                holds: lhs <= q.rhs,
            }
        })
        .collect();
    CheckReport {
        gains: *gains,
        rates: *rates,
        in_region: inequalities.iter().all(|r| r.holds),
        inequalities,
    }
}

impl CheckReport {
    fn to_text(&self) -> String {
        let mut s = format!("network {}\nrates {}\n", self.gains, self.rates);
        let width = self.inequalities.iter().map(|r| r.expression.len()).max().unwrap_or(0);
        for r in &self.inequalities {
            let _ = writeln!(
                s,
                "  {:width$}  lhs {:>3}  slack {:>3}  {}",
                r.expression,
                r.lhs,
                r.slack,
                if r.holds { "ok" } else { "VIOLATED" }
            );
        }
        s.push_str(if self.in_region { "in region\n" } else { "out of region\n" });
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Roles {
    pub u: u8,
    pub v: u8,
    pub t: u8,
    pub w: u8,
    pub y: u8,
    pub z: u8,
}

impl From<&RoleAssignment> for Roles {
    fn from(r: &RoleAssignment) -> Self {
        Roles {
            u: r.u().number(),
            v: r.v().number(),
            t: r.t().number(),
            w: r.w().number(),
            y: r.y().number(),
            z: r.z().number(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub gains: ChannelGains,
    pub rates: RateTuple,
    pub roles: Roles,
    pub in_region: bool,
    pub levels: Option<LevelAssignment>,
    pub free_rx_levels: Vec<u32>,
    pub free_tx_levels: Vec<u32>,
    pub beta: i64,
    pub gamma: i64,
    pub reduced: Option<ReducedGains>,
    pub user_rates: [u32; 6],
    pub cycles: Option<CycleCheck>,
    pub error: Option<String>,
}

pub fn reduce_report(gains: &ChannelGains, rates: &RateTuple) -> ReduceReport {
    let roles = assign_roles(gains);
    let levels = assign_relay_levels(gains, rates, &roles);
    let reduced = reduce_network(gains, rates, &roles);
    let error = match (&levels, &reduced) {
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    let user_rates = rates.user_rates();
    let levels = levels.ok();
    ReduceReport {
        gains: *gains,
        rates: *rates,
        roles: Roles::from(&roles),
        in_region: crate::region::check_theorem1(gains, rates).in_region,
        free_rx_levels: levels.as_ref().map(LevelAssignment::free_rx_levels).unwrap_or_default(),
        free_tx_levels: levels.as_ref().map(LevelAssignment::free_tx_levels).unwrap_or_default(),
        levels,
        beta: compute_beta(gains, rates, &roles),
        gamma: compute_gamma(gains, rates, &roles),
        cycles: reduced.as_ref().ok().map(|r| check_cycle_conditions(r, &user_rates)),
        reduced: reduced.ok(),
        user_rates: user_rates.0,
        error,
    }
}

impl ReduceReport {
    fn to_text(&self) -> String {
        let r = &self.roles;
        let mut s = format!(
            "network {}\nrates {}\nroles u={} v={} t={} | w={} y={} z={}\n",
            self.gains, self.rates, r.u, r.v, r.t, r.w, r.y, r.z
        );
        if let Some(levels) = &self.levels {
            s.push_str("\nuplink (relay received levels)\n");
            s.push_str(&uplink_level_grid(&self.gains, levels));
            s.push_str("\ndownlink (relay transmit levels)\n");
            s.push_str(&downlink_level_grid(&self.gains, levels));
            let _ = writeln!(s, "\nfree relay rx levels {:?}", self.free_rx_levels);
            let _ = writeln!(s, "free relay tx levels {:?}", self.free_tx_levels);
        }
        let _ = writeln!(s, "beta {}  gamma {}", self.beta, self.gamma);
        if let Some(red) = &self.reduced {
            let _ = writeln!(
                s,
                "reduced uplink ({},{},{})  reduced downlink ({},{},{})  n* {}",
                red.uplink[0], red.uplink[1], red.uplink[2], red.downlink[0], red.downlink[1], red.downlink[2], red.n_star
            );
        }
        let _ = writeln!(s, "user rates {:?}", self.user_rates);
        if let Some(c) = &self.cycles {
            let _ = writeln!(
                s,
                "cycles: forward {} {} {}, backward {} {} {}",
                c.forward_sum,
                if c.forward_ok { "<=" } else { ">" },
                c.n_star,
                c.backward_sum,
                if c.backward_ok { "<=" } else { ">" },
                c.n_star
            );
        }
        if !self.in_region {
            s.push_str("rate tuple is out of region\n");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        s
    }
}

/// Aligned text table; the first column holds row labels.
pub fn text_grid(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width = vec![0; cols];
    for row in std::iter::once(headers).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |row: &[String]| {
        let cells: Vec<String> = row.iter().zip(&width).map(|(c, w)| format!("{c:^w$}")).collect();
        format!("| {} |\n", cells.join(" | "))
    };
    let rule = format!("+{}+\n", width.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("+"));
    let mut s = rule.clone();
    s.push_str(&line(headers));
    s.push_str(&rule);
    for row in rows {
        s.push_str(&line(row));
    }
    s.push_str(&rule);
    s
}

fn user_headers(first: &str, last: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    h.extend(User::ALL.iter().map(|u| format!("node {u}")));
    h.push(last.to_string());
    h
}

// Rows are relay received levels; user columns show the transmit level that
// lands there, blank where the user's signal does not reach.
fn uplink_rows(gains: &ChannelGains, user_cell: impl Fn(User, u32) -> String, relay_cell: impl Fn(u32) -> String) -> Vec<Vec<String>> {
    let q = gains.relay_rx_len();
    (1..=q)
        .map(|r| {
            let mut row = vec![r.to_string()];
            for u in User::ALL {
                let n = gains.up(u);
                let reach = r + n;
                row.push(if reach > q { user_cell(u, reach - q) } else { String::new() });
            }
            row.push(relay_cell(r));
            row
        })
        .collect()
}

fn downlink_rows(gains: &ChannelGains, relay_cell: impl Fn(u32) -> String, user_cell: impl Fn(User, u32) -> String) -> Vec<Vec<String>> {
    (1..=gains.relay_tx_len())
        .map(|l| {
            let mut row = vec![l.to_string(), relay_cell(l)];
            for u in User::ALL {
                row.push(if l <= gains.down(u) { user_cell(u, l) } else { String::new() });
            }
            row
        })
        .collect()
}

fn relay_bound(u: User) -> String {
    format!("x{u}4")
}

fn relay_origin(u: User) -> String {
    format!("x4{u}")
}

fn uplink_level_grid(gains: &ChannelGains, levels: &LevelAssignment) -> String {
    let rows = uplink_rows(
        gains,
        |u, l| {
            if levels.uplink_levels[u.index()].contains(&l) {
                relay_bound(u)
            } else {
                ".".into()
            }
        },
        |r| {
            User::ALL
                .iter()
                .find(|u| levels.relay_rx_levels[u.index()].contains(&r))
                .map_or("free".into(), |&u| relay_bound(u))
        },
    );
    text_grid(&user_headers("level", "relay rx"), &rows)
}

fn downlink_level_grid(gains: &ChannelGains, levels: &LevelAssignment) -> String {
    let owner = |l: u32| User::ALL.iter().copied().find(|u| levels.downlink_levels[u.index()].contains(&l));
    let rows = downlink_rows(
        gains,
        |l| owner(l).map_or("free".into(), relay_origin),
        |u, l| if owner(l) == Some(u) { relay_origin(u) } else { ".".into() },
    );
    let mut headers = vec!["level".to_string(), "relay tx".to_string()];
    headers.extend(User::ALL.iter().map(|u| format!("node {u}")));
    text_grid(&headers, &rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlacementRow {
    pub user: u8,
    pub level: u32,
    pub slot: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardRow {
    pub rx_level: u32,
    pub tx_level: u32,
    pub content: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelayRow {
    pub level: u32,
    pub slot: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeRow {
    pub user: u8,
    pub rx_level: u32,
    pub slot: String,
    pub side_info: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeLevels {
    pub uplink: Vec<PlacementRow>,
    pub relay_map: Vec<ForwardRow>,
    pub relay_insert: Vec<RelayRow>,
    pub relay_decode: Vec<RelayRow>,
    pub downlink_decode: Vec<DecodeRow>,
}

impl From<&TransmissionScheme> for SchemeLevels {
    fn from(s: &TransmissionScheme) -> Self {
        let relay_rows = |v: &[crate::coding::RelayLevel]| {
            v.iter()
                .map(|r| RelayRow {
                    level: r.level,
                    slot: r.slot.to_string(),
                })
                .collect()
        };
        SchemeLevels {
            uplink: User::ALL
                .iter()
                .flat_map(|&u| {
                    s.uplink_placement[u.index()].iter().map(move |b| PlacementRow {
                        user: u.number(),
                        level: b.level,
                        slot: b.slot.to_string(),
                    })
                })
                .collect(),
            relay_map: s
                .relay_map
                .iter()
                .map(|f| ForwardRow {
                    rx_level: f.rx_level,
                    tx_level: f.tx_level,
                    content: f.content.to_string(),
                })
                .collect(),
            relay_insert: relay_rows(&s.relay_insert),
            relay_decode: relay_rows(&s.relay_decode),
            downlink_decode: User::ALL
                .iter()
                .flat_map(|&u| {
                    s.downlink_decode[u.index()].iter().map(move |d| DecodeRow {
                        user: u.number(),
                        rx_level: d.rx_level,
                        slot: d.slot.to_string(),
                        side_info: d.side_info.iter().map(Slot::to_string).collect(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetourRow {
    pub lambda: u32,
    pub direction: CycleDirection,
    pub edge: [u8; 2],
    pub via: u8,
    pub original: [u32; 6],
    pub modified: [u32; 6],
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeReport {
    pub gains: ChannelGains,
    pub rates: RateTuple,
    pub roles: Roles,
    pub reduced: ReducedGains,
    pub detour: Option<DetourRow>,
    pub effective_user_rates: [u32; 6],
    pub rounds: u32,
    pub levels: SchemeLevels,
    #[serde(skip)]
    scheme: TransmissionScheme,
}

pub fn scheme_report(full: &FullScheme) -> SchemeReport {
    SchemeReport {
        gains: full.gains,
        rates: full.rates,
        roles: Roles::from(&full.roles),
        reduced: full.reduced,
        detour: full.detour.as_ref().map(|p| DetourRow {
            lambda: p.lambda,
            direction: p.direction,
            edge: [p.edge.0.number(), p.edge.1.number()],
            via: p.via.number(),
            original: p.original.0,
            modified: p.modified.0,
            note: p.routing_note(),
        }),
        effective_user_rates: full.effective.0,
        rounds: full.rounds(),
        levels: SchemeLevels::from(&full.scheme),
        scheme: full.scheme.clone(),
    }
}

impl SchemeReport {
    fn to_text(&self) -> String {
        let red = &self.reduced;
        let mut s = format!("network {}\nrates {}\n", self.gains, self.rates);
        let _ = writeln!(
            s,
            "reduced ({},{},{})/({},{},{})  beta {} gamma {}  n* {}",
            red.uplink[0], red.uplink[1], red.uplink[2], red.downlink[0], red.downlink[1], red.downlink[2], red.beta, red.gamma, red.n_star
        );
        match &self.detour {
            Some(d) => {
                let _ = writeln!(
                    s,
                    "detour ({:?} cycle, lambda {}): {}\n  user rates {:?} -> {:?}",
                    d.direction, d.lambda, d.note, d.original, d.modified
                );
            }
            None => s.push_str("no detour\n"),
        }
        let _ = writeln!(s, "rounds {}", self.rounds);
        s.push_str("\nuplink (relay received levels)\n");
        s.push_str(&self.uplink_grid());
        s.push_str("\ndownlink (relay transmit levels, decoded bit per receiver)\n");
        s.push_str(&self.downlink_grid());
        let side: Vec<String> = self
            .levels
            .downlink_decode
            .iter()
            .filter(|d| !d.side_info.is_empty())
            .map(|d| format!("node {} level {}: {} xor {}", d.user, d.rx_level, d.slot, d.side_info.join(",")))
            .collect();
        if !side.is_empty() {
            s.push_str("\nside information\n");
            for line in side {
                let _ = writeln!(s, "  {line}");
            }
        }
        s
    }

    fn uplink_grid(&self) -> String {
        let sc = &self.scheme;
        let mut sent: BTreeMap<(User, u32), String> = BTreeMap::new();
        for u in User::ALL {
            for b in &sc.uplink_placement[u.index()] {
                sent.insert((u, b.level), b.slot.to_string());
            }
        }
        let mut rx: BTreeMap<u32, String> = BTreeMap::new();
        for f in &sc.relay_map {
            rx.insert(f.rx_level, format!("{} -> tx {}", content_label(&f.content), f.tx_level));
        }
        for r in &sc.relay_decode {
            rx.insert(r.level, format!("{} (decoded)", r.slot));
        }
        let rows = uplink_rows(
            &self.gains,
            |u, l| sent.get(&(u, l)).cloned().unwrap_or_else(|| ".".into()),
            |r| rx.get(&r).cloned().unwrap_or_default(),
        );
        text_grid(&user_headers("level", "relay rx"), &rows)
    }

    fn downlink_grid(&self) -> String {
        let sc = &self.scheme;
        let mut tx: BTreeMap<u32, String> = BTreeMap::new();
        for f in &sc.relay_map {
            tx.insert(f.tx_level, content_label(&f.content));
        }
        for r in &sc.relay_insert {
            tx.insert(r.level, r.slot.to_string());
        }
        let mut got: BTreeMap<(User, u32), String> = BTreeMap::new();
        for u in User::ALL {
            for d in &sc.downlink_decode[u.index()] {
                got.insert((u, d.rx_level), d.slot.to_string());
            }
        }
        let rows = downlink_rows(
            &self.gains,
            |l| tx.get(&l).cloned().unwrap_or_default(),
            |u, l| got.get(&(u, l)).cloned().unwrap_or_else(|| ".".into()),
        );
        let mut headers = vec!["level".to_string(), "relay tx".to_string()];
        headers.extend(User::ALL.iter().map(|u| format!("node {u}")));
        text_grid(&headers, &rows)
    }
}

fn content_label(c: &LevelContent) -> String {
    match c {
        LevelContent::Clean(a) => a.to_string(),
        LevelContent::Xor(a, b) => format!("{a}+{b}"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MessageRow {
    pub flow: String,
    pub sent: String,
    pub decoded: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub gains: ChannelGains,
    pub rates: RateTuple,
    pub seed: u64,
    pub rounds: u32,
    pub messages: Vec<MessageRow>,
    pub all_ok: bool,
    pub error: Option<String>,
}

pub fn simulate_report(gains: &ChannelGains, rates: &RateTuple, seed: u64) -> SimulateReport {
    let mut report = SimulateReport {
        gains: *gains,
        rates: *rates,
        seed,
        rounds: 0,
        messages: Vec::new(),
        all_ok: false,
        error: None,
    };
    let full = match build_full_scheme(gains, rates) {
        Ok(f) => f,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.rounds = full.rounds();
    match run_end_to_end(gains, &full, &MessageSet::random(rates, seed)) {
        Ok(d) => {
            report.all_ok = d.all_ok();
            report.messages = d
                .messages
                .into_iter()
                .map(|m| MessageRow {
                    flow: m.flow.to_string(),
                    sent: m.sent,
                    decoded: m.decoded,
                    ok: m.ok,
                })
                .collect();
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

impl SimulateReport {
    fn to_text(&self) -> String {
        let mut s = format!("network {}\nrates {}\nseed {}  rounds {}\n", self.gains, self.rates, self.seed, self.rounds);
        for m in &self.messages {
            let _ = writeln!(
                s,
                "  {:<4} sent {:<8} decoded {:<8} {}",
                m.flow,
                m.sent,
                m.decoded,
                if m.ok { "ok" } else { "MISMATCH" }
            );
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        s.push_str(if self.all_ok { "all messages decoded\n" } else { "decoding failed\n" });
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerateReport {
    pub gains: ChannelGains,
    pub count: usize,
    pub tuples: Vec<[u32; 12]>,
}

impl EnumerateReport {
    fn to_text(&self) -> String {
        let mut s = format!("network {}\n# r12 r13 r14 r21 r23 r24 r31 r32 r34 r41 r42 r43\n", self.gains);
        for t in &self.tuples {
            let cells: Vec<String> = t.iter().map(u32::to_string).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        let _ = writeln!(s, "{} integral tuples", self.count);
        s
    }
}
