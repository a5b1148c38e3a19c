//! Line-oriented scenario scripts.
//!
//! ```text
//! open ab Alice Bob 1000000 push_sat=500000 slots=30 delta=14
//! pay p Alice>Bob>(Carol>Bob)*2 hold count=10
//! assert_pending ab 10
//! assert_fails Alice>Bob error=SlotFull
//! fail p
//! advance 144
//! assert_open ab
//! ```

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::events::Event;
use super::network::{FinalExpiry, PaymentRequest, Side, SimChannelSpec, SimConfig, SimNetwork};
use super::SimError;

pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("experiment1", include_str!("../../scenarios/experiment1.scn")),
    ("experiment2", include_str!("../../scenarios/experiment2.scn")),
    ("experiment3", include_str!("../../scenarios/experiment3.scn")),
    ("experiment4", include_str!("../../scenarios/experiment4.scn")),
    ("limits", include_str!("../../scenarios/limits.scn")),
];

/// Script text of a bundled scenario, by name with or without `.scn`.
pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".scn").unwrap_or(name);
    BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

const DEFAULT_AMOUNT_MSAT: u64 = 1_000_000;
const DEFAULT_PROBE_FINAL: u32 = 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub line: usize,
    pub command: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub steps: Vec<StepOutcome>,
    pub events: Vec<Event>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn failure(&self) -> Option<&StepOutcome> {
        self.steps.iter().find(|s| !s.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PayOpts {
    amount_msat: u64,
    hold: bool,
    count: usize,
    final_expiry: Option<FinalExpiry>,
    preimage: Option<String>,
}

impl Default for PayOpts {
    fn default() -> Self {
        Self { amount_msat: DEFAULT_AMOUNT_MSAT, hold: false, count: 1, final_expiry: None, preimage: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Command {
    Open(SimChannelSpec),
    Set(String, String),
    Pay { name: String, path: Vec<String>, opts: PayOpts },
    Fulfill(String),
    Fail(String),
    Advance(u32),
    AssertPending(String, usize),
    AssertFails { path: Vec<String>, opts: PayOpts, error: Option<String> },
    AssertSucceeds { path: Vec<String>, opts: PayOpts },
    AssertClosed(String),
    AssertOpen(String),
    AssertBalance { channel: String, node: String, msat: u64 },
    Reset,
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} {s:?}"))
}

/// Expand `A>B>(C>B)*3>A` into node names.
fn parse_path(s: &str) -> Result<Vec<String>, String> {
    fn seq(chars: &[char], pos: &mut usize, nested: bool) -> Result<Vec<String>, String> {
        let mut out = Vec::new();
        loop {
            if chars.get(*pos) == Some(&'(') {
                *pos += 1;
                let inner = seq(chars, pos, true)?;
                if chars.get(*pos) != Some(&')') {
                    return Err("unclosed '('".into());
                }
                *pos += 1;
                if chars.get(*pos) != Some(&'*') {
                    return Err("expected '*N' after ')'".into());
                }
                *pos += 1;
                let start = *pos;
                while chars.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                    *pos += 1;
                }
                let times: usize = chars[start..*pos].iter().collect::<String>().parse().map_err(|_| "bad repeat count")?;
                for _ in 0..times {
                    out.extend(inner.iter().cloned());
                }
            } else {
                let start = *pos;
                while chars.get(*pos).is_some_and(|c| !matches!(c, '>' | '(' | ')')) {
                    *pos += 1;
                }
                if start == *pos {
                    return Err("empty node name".into());
                }
                out.push(chars[start..*pos].iter().collect());
            }
            match chars.get(*pos) {
                Some('>') => *pos += 1,
                Some(')') if nested => return Ok(out),
                None => return Ok(out),
                Some(c) => return Err(format!("unexpected {c:?}")),
            }
        }
    }
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let out = seq(&chars, &mut pos, false)?;
    if out.len() < 2 {
        return Err("path needs at least two nodes".into());
    }
    Ok(out)
}

fn parse_pay_opts<'a>(args: impl Iterator<Item = &'a str>, error: &mut Option<String>) -> Result<PayOpts, String> {
    let mut o = PayOpts::default();
    for a in args {
        match a.split_once('=') {
            None if a == "hold" => o.hold = true,
            Some(("amount", v)) => o.amount_msat = num(v, "amount")?,
            Some(("count", v)) => o.count = num(v, "count")?,
            Some(("final", "max")) => o.final_expiry = Some(FinalExpiry::Max),
            Some(("final", v)) => o.final_expiry = Some(FinalExpiry::Blocks(num(v, "final")?)),
            Some(("hash", v)) => o.preimage = Some(v.to_string()),
            Some(("error", v)) => *error = Some(v.to_string()),
            _ => return Err(format!("unknown option {a:?}")),
        }
    }
    if o.count == 0 {
        return Err("count must be positive".into());
    }
    Ok(o)
}

fn parse_open(args: &[&str]) -> Result<SimChannelSpec, String> {
    let [id, a, b, cap, rest @ ..] = args else {
        return Err("usage: open ID A B CAPACITY_SAT [key=value ...]".into());
    };
    let mut spec = SimChannelSpec::new(*id, *a, *b, num(cap, "capacity")?);
    for opt in rest {
        let (k, v) = opt.split_once('=').ok_or_else(|| format!("expected key=value, got {opt:?}"))?;
        match k {
            "funder" if v == *a => spec.funder = Side::A,
            "funder" if v == *b => spec.funder = Side::B,
            "funder" => return Err(format!("funder {v:?} is not an endpoint")),
            "push_sat" => spec.push_sat = num(v, k)?,
            "slots" => spec.slot_limit = num(v, k)?,
            "delta" => {
                spec.policy_a.cltv_expiry_delta = num(v, k)?;
                spec.policy_b.cltv_expiry_delta = spec.policy_a.cltv_expiry_delta;
            }
            "delta_ab" => spec.policy_a.cltv_expiry_delta = num(v, k)?,
            "delta_ba" => spec.policy_b.cltv_expiry_delta = num(v, k)?,
            "min_htlc" => {
                spec.policy_a.htlc_minimum_msat = num(v, k)?;
                spec.policy_b.htlc_minimum_msat = spec.policy_a.htlc_minimum_msat;
            }
            "fee_base" => {
                spec.policy_a.fee_base_msat = num(v, k)?;
                spec.policy_b.fee_base_msat = spec.policy_a.fee_base_msat;
            }
            "fee_rate" => {
                spec.policy_a.fee_proportional_millionths = num(v, k)?;
                spec.policy_b.fee_proportional_millionths = spec.policy_a.fee_proportional_millionths;
            }
            "dust" => {
                spec.policy_a.dust_limit_sat = num(v, k)?;
                spec.policy_b.dust_limit_sat = spec.policy_a.dust_limit_sat;
            }
            _ => return Err(format!("unknown option {k:?}")),
        }
    }
    Ok(spec)
}

fn parse_line(line: &str) -> Result<Option<Command>, String> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let words: Vec<&str> = line.split_whitespace().collect();
    let (cmd, args) = (words[0], &words[1..]);
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("{cmd} takes {n} argument(s)"))
        }
    };
    let c = match cmd {
        "open" => Command::Open(parse_open(args)?),
        "set" => {
            want(2)?;
            Command::Set(args[0].to_string(), args[1].to_string())
        }
        "pay" => {
            let [name, path, rest @ ..] = args else {
                return Err("usage: pay NAME PATH [options]".into());
            };
            let mut err = None;
            let opts = parse_pay_opts(rest.iter().copied(), &mut err)?;
            if err.is_some() {
                return Err("error= only applies to assert_fails".into());
            }
            Command::Pay { name: name.to_string(), path: parse_path(path)?, opts }
        }
        "fulfill" | "fail" => {
            want(1)?;
            if cmd == "fulfill" {
                Command::Fulfill(args[0].to_string())
            } else {
                Command::Fail(args[0].to_string())
            }
        }
        "advance" => {
            want(1)?;
            Command::Advance(num(args[0], "block count")?)
        }
        "assert_pending" => {
            want(2)?;
            Command::AssertPending(args[0].to_string(), num(args[1], "count")?)
        }
        "assert_fails" | "assert_succeeds" => {
            let [path, rest @ ..] = args else {
                return Err(format!("usage: {cmd} PATH [options]"));
            };
            let mut error = None;
            let opts = parse_pay_opts(rest.iter().copied(), &mut error)?;
            let path = parse_path(path)?;
            if cmd == "assert_fails" {
                Command::AssertFails { path, opts, error }
            } else if error.is_some() {
                return Err("error= only applies to assert_fails".into());
            } else {
                Command::AssertSucceeds { path, opts }
            }
        }
        "assert_closed" | "assert_open" => {
            want(1)?;
            if cmd == "assert_closed" {
                Command::AssertClosed(args[0].to_string())
            } else {
                Command::AssertOpen(args[0].to_string())
            }
        }
        "assert_balance" => {
            want(3)?;
            Command::AssertBalance {
                channel: args[0].to_string(),
                node: args[1].to_string(),
                msat: num(args[2], "balance")?,
            }
        }
        "reset" => {
            want(0)?;
            Command::Reset
        }
        other => return Err(format!("unknown command {other:?}")),
    };
    Ok(Some(c))
}

fn parse_script(script: &str) -> Result<Vec<(usize, String, Command)>, ScenarioError> {
    let mut out = Vec::new();
    for (i, raw) in script.lines().enumerate() {
        match parse_line(raw) {
            Ok(Some(c)) => out.push((i + 1, raw.trim().to_string(), c)),
            Ok(None) => {}
            Err(message) => return Err(ScenarioError::Parse { line: i + 1, message }),
        }
    }
    Ok(out)
}

struct Runner {
    net: SimNetwork,
    names: BTreeMap<String, Vec<u64>>,
    events: Vec<Event>,
}

impl Runner {
    fn new() -> Self {
        Self { net: SimNetwork::new(SimConfig::default()), names: BTreeMap::new(), events: Vec::new() }
    }

    fn reset(&mut self) {
        self.events.extend(self.net.events().iter().cloned());
        let config = self.net.config;
        self.net = SimNetwork::new(config);
        self.names.clear();
    }

    fn send(&mut self, path: &[String], opts: &PayOpts, label: Option<String>, hold: bool) -> Result<u64, SimError> {
        let hops = self.net.route_by_nodes(path)?;
        let mut req = PaymentRequest::new(hops, opts.amount_msat);
        req.hold = hold;
        req.final_expiry = opts.final_expiry.unwrap_or(if opts.hold {
            FinalExpiry::Max
        } else {
            FinalExpiry::Blocks(DEFAULT_PROBE_FINAL)
        });
        req.preimage = opts.preimage.clone();
        req.label = label.clone();
        self.net.send_payment(&req).inspect_err(|e| {
            let height = self.net.height();
            self.net.log(Event::PaymentRejected { label, error: e.to_string(), height });
        })
    }

    /// Send `opts.count` payments; returns ids or the failing index and error.
    fn send_many(&mut self, name: Option<&str>, path: &[String], opts: &PayOpts) -> Result<Vec<u64>, String> {
        let mut ids = Vec::with_capacity(opts.count);
        for i in 0..opts.count {
            let label = name.map(|n| if opts.count == 1 { n.to_string() } else { format!("{n}.{}", i + 1) });
            match self.send(path, opts, label, opts.hold) {
                Ok(id) => ids.push(id),
                Err(e) => return Err(format!("payment {} of {} failed: {e}", i + 1, opts.count)),
            }
        }
        Ok(ids)
    }

    fn resolve(&mut self, name: &str, fulfill: bool) -> Result<String, String> {
        let ids = self.names.get(name).cloned().ok_or_else(|| format!("no payment named {name:?}"))?;
        for id in &ids {
            let r = if fulfill { self.net.fulfill_payment(*id) } else { self.net.fail_payment(*id) };
            r.map_err(|e| e.to_string())?;
        }
        Ok(format!("{} payment(s)", ids.len()))
    }

    fn step(&mut self, cmd: &Command) -> Result<String, String> {
        match cmd {
            Command::Open(spec) => self.net.open_channel(spec.clone()).map(|_| String::new()).map_err(|e| e.to_string()),
            Command::Set(k, v) => {
                let on = |v: &str| match v {
                    "on" | "true" => Ok(true),
                    "off" | "false" => Ok(false),
                    _ => Err(format!("expected on/off, got {v:?}")),
                };
                match k.as_str() {
                    "reject_duplicate_hash" => self.net.config.reject_duplicate_hash = on(v)?,
                    "locktime_max" => self.net.config.locktime_max = num(v, k)?,
                    "max_hops" => self.net.config.max_hops = num(v, k)?,
                    _ => return Err(format!("unknown setting {k:?}")),
                }
                Ok(String::new())
            }
            Command::Pay { name, path, opts } => {
                let ids = self.send_many(Some(name), path, opts)?;
                if ids.len() > 1 {
                    for (i, id) in ids.iter().enumerate() {
                        self.names.insert(format!("{name}.{}", i + 1), vec![*id]);
                    }
                }
                let n = ids.len();
                self.names.insert(name.clone(), ids);
                Ok(format!("{n} payment(s) added"))
            }
            Command::Fulfill(name) => self.resolve(name, true),
            Command::Fail(name) => self.resolve(name, false),
            Command::Advance(n) => {
                let closed = self.net.advance_blocks(*n).map_err(|e| e.to_string())?;
                Ok(format!("height {}, closed {:?}", self.net.height(), closed))
            }
            Command::AssertPending(ch, n) => {
                let c = self.net.channel(ch).ok_or_else(|| format!("no channel {ch:?}"))?;
                if c.pending.len() == *n {
                    Ok(format!("{n} pending"))
                } else {
                    Err(format!("expected {n} pending on {ch}, found {}", c.pending.len()))
                }
            }
            Command::AssertFails { path, opts, error } => match self.send(path, opts, None, true) {
                Ok(id) => {
                    self.net.fail_payment(id).map_err(|e| e.to_string())?;
                    Err("payment unexpectedly succeeded".into())
                }
                Err(e) => match error {
                    Some(kind) if kind != e.kind() => Err(format!("expected {kind}, got {}: {e}", e.kind())),
                    _ => Ok(format!("{}: {e}", e.kind())),
                },
            },
            Command::AssertSucceeds { path, opts } => {
                let ids = self.send_many(None, path, opts)?;
                Ok(format!("{} payment(s) succeeded", ids.len()))
            }
            Command::AssertClosed(ch) | Command::AssertOpen(ch) => {
                let c = self.net.channel(ch).ok_or_else(|| format!("no channel {ch:?}"))?;
                let want_open = matches!(cmd, Command::AssertOpen(_));
                if c.is_open() == want_open {
                    Ok(format!("{:?}", c.state))
                } else {
                    Err(format!("channel {ch} is {:?}", c.state))
                }
            }
            Command::AssertBalance { channel, node, msat } => {
                let c = self.net.channel(channel).ok_or_else(|| format!("no channel {channel:?}"))?;
                let side = c.side_of(node).ok_or_else(|| format!("{node} not on {channel}"))?;
                let have = c.balance_msat(side);
                if have == *msat {
                    Ok(format!("{have} msat"))
                } else {
                    Err(format!("expected {msat} msat for {node} on {channel}, found {have}"))
                }
            }
            Command::Reset => {
                self.reset();
                Ok(String::new())
            }
        }
    }
}

/// Parse and replay a script, stopping at the first failed step.
pub fn run_scenario(script: &str) -> Result<ScenarioReport, ScenarioError> {
    let commands = parse_script(script)?;
    let mut runner = Runner::new();
    let mut steps = Vec::with_capacity(commands.len());
    for (line, text, cmd) in &commands {
        let result = runner.step(cmd);
        let passed = result.is_ok();
        let detail = result.unwrap_or_else(|e| e);
        let is_check = text.starts_with("assert");
        if is_check || !passed {
            runner.net.log(Event::Check { line: *line, command: text.clone(), passed, detail: detail.clone() });
        }
        steps.push(StepOutcome { line: *line, command: text.clone(), passed, detail });
        if !passed {
            break;
        }
    }
    runner.reset();
    let passed = steps.iter().all(|s| s.passed);
    Ok(ScenarioReport { steps, events: runner.events, passed })
}
