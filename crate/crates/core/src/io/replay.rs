//! Record-level replay of published protocol tables.
//!
//! Replay recomputes statistics purely from the recorded bits and clicks;
//! no state is simulated, so rows that would be improbable under the Born
//! rule are still counted as recorded.

use serde::{Deserialize, Serialize};

use crate::config::Protocol;
use crate::error::{Error, Result};
use crate::metrics::{qber, risk_classify, sifted_rate, security_decision, QberReport, DEFAULT_QBER_THRESHOLD};
use crate::protocol::e91::{ChshEstimate, ChshPair, PairCounts};
use crate::qstate::Outcome;
use crate::summary::SessionSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum E91Purpose {
    Key,
    Bell,
    Discarded,
}

/// B92 state labels: |H⟩, |+⟩, |V⟩, |−⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateLabel {
    H,
    Plus,
    V,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReplayRecord {
    E91 {
        round: u64,
        a_basis: String,
        b_basis: String,
        a_bit: u8,
        b_bit: u8,
        purpose: E91Purpose,
    },
    B92 {
        row: u64,
        sender_bit: u8,
        sender_state: StateLabel,
        eve_test: Option<StateLabel>,
        eve_click: Option<bool>,
        eve_resend: Option<StateLabel>,
        eve_guessed: bool,
        receiver_test: StateLabel,
        receiver_click: bool,
        receiver_bit: Option<u8>,
    },
}

impl ReplayRecord {
    pub fn protocol(&self) -> Protocol {
        match self {
            ReplayRecord::E91 { .. } => Protocol::E91,
            ReplayRecord::B92 { .. } => Protocol::B92,
        }
    }
}

pub const E91_HEADER: [&str; 6] = ["round", "a_basis", "b_basis", "a_bit", "b_bit", "purpose"];
pub const B92_HEADER: [&str; 9] = [
    "row",
    "sender_bit",
    "sender_state",
    "eve_test",
    "eve_click",
    "eve_resend",
    "receiver_test",
    "receiver_click",
    "receiver_bit",
];

fn parse_bit(row: usize, field: &str, s: &str) -> Result<u8> {
    match s {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(row, format!("{field}: `{other}` is not a bit"))),
    }
}

fn parse_state(row: usize, field: &str, s: &str) -> Result<StateLabel> {
    let t = s.trim().trim_start_matches('|').trim_end_matches('⟩').trim_end_matches('>');
    match t {
        "H" => Ok(StateLabel::H),
        "+" => Ok(StateLabel::Plus),
        "V" => Ok(StateLabel::V),
        "-" | "−" => Ok(StateLabel::Minus),
        _ => Err(Error::parse(row, format!("{field}: `{s}` not one of H,+,V,−"))),
    }
}

fn parse_yes_no(row: usize, field: &str, s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "yes" | "y" | "1" | "true" => Ok(true),
        "no" | "n" | "0" | "false" => Ok(false),
        _ => Err(Error::parse(row, format!("{field}: `{s}` is not yes/no"))),
    }
}

fn blank(s: &str) -> bool {
    s.is_empty() || s == "-"
}

fn parse_e91_row(row: usize, f: &csv::StringRecord) -> Result<ReplayRecord> {
    let round = f[0]
        .parse()
        .map_err(|_| Error::parse(row, format!("round: `{}` is not an integer", &f[0])))?;
    let a_basis = f[1].to_string();
    let b_basis = f[2].to_string();
    if !matches!(a_basis.as_str(), "A1" | "A2") {
        return Err(Error::parse(row, format!("a_basis: `{a_basis}` not one of A1,A2")));
    }
    if !matches!(b_basis.as_str(), "B1" | "B3") {
        return Err(Error::parse(row, format!("b_basis: `{b_basis}` not one of B1,B3")));
    }
    let purpose = match f[5].to_ascii_lowercase().as_str() {
        "key" => E91Purpose::Key,
        "bell" => E91Purpose::Bell,
        "discarded" => E91Purpose::Discarded,
        other => return Err(Error::parse(row, format!("purpose: `{other}` not one of Key,Bell,Discarded"))),
    };
    Ok(ReplayRecord::E91 {
        round,
        a_basis,
        b_basis,
        a_bit: parse_bit(row, "a_bit", &f[3])?,
        b_bit: parse_bit(row, "b_bit", &f[4])?,
        purpose,
    })
}

fn parse_b92_row(row: usize, f: &csv::StringRecord) -> Result<ReplayRecord> {
    let row_no = f[0]
        .parse()
        .map_err(|_| Error::parse(row, format!("row: `{}` is not an integer", &f[0])))?;
    let sender_bit = parse_bit(row, "sender_bit", &f[1])?;
    let sender_state = parse_state(row, "sender_state", &f[2])?;
    let expected = if sender_bit == 0 { StateLabel::H } else { StateLabel::Plus };
    if sender_state != expected {
        return Err(Error::parse(row, format!("sender_state {sender_state:?} does not encode bit {sender_bit}")));
    }
    let eve_test = (!blank(&f[3])).then(|| parse_state(row, "eve_test", &f[3])).transpose()?;
    let eve_click = (!blank(&f[4])).then(|| parse_yes_no(row, "eve_click", &f[4])).transpose()?;
    let resend_raw = f[5].trim();
    let eve_guessed = resend_raw.ends_with("(g)");
    let resend_raw = resend_raw.trim_end_matches("(g)").trim();
    let eve_resend = (!blank(resend_raw)).then(|| parse_state(row, "eve_resend", resend_raw)).transpose()?;
    if let Some(t) = eve_test {
        if !matches!(t, StateLabel::V | StateLabel::Minus) {
            return Err(Error::parse(row, "eve_test must be V or −"));
        }
    }
    if let Some(r) = eve_resend {
        if !matches!(r, StateLabel::H | StateLabel::Plus) {
            return Err(Error::parse(row, "eve_resend must be H or +"));
        }
    }
    let receiver_test = parse_state(row, "receiver_test", &f[6])?;
    let receiver_click = parse_yes_no(row, "receiver_click", &f[7])?;
    let receiver_bit = (!blank(&f[8])).then(|| parse_bit(row, "receiver_bit", &f[8])).transpose()?;
    let inferred = match receiver_test {
        StateLabel::V => 1,
        StateLabel::Minus => 0,
        _ => return Err(Error::parse(row, "receiver_test must be V or −")),
    };
    match (receiver_click, receiver_bit) {
        (true, Some(b)) if b == inferred => {}
        (true, Some(b)) => {
            return Err(Error::parse(row, format!("a click on {receiver_test:?} reads bit {inferred}, not {b}")))
        }
        (true, None) => return Err(Error::parse(row, "click recorded without receiver_bit")),
        (false, Some(_)) => return Err(Error::parse(row, "receiver_bit recorded without a click")),
        (false, None) => {}
    }
    Ok(ReplayRecord::B92 {
        row: row_no,
        sender_bit,
        sender_state,
        eve_test,
        eve_click,
        eve_resend,
        eve_guessed,
        receiver_test,
        receiver_click,
        receiver_bit,
    })
}

/// Parses a replay table. The header selects the protocol; `#` lines are
/// comments. Row numbers in errors count data rows from 1.
pub fn parse_replay_csv(text: &str) -> Result<Vec<ReplayRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(0, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let protocol = if header == E91_HEADER {
        Protocol::E91
    } else if header == B92_HEADER {
        Protocol::B92
    } else {
        return Err(Error::parse(
            0,
            format!("header must be `{}` or `{}`", E91_HEADER.join(","), B92_HEADER.join(",")),
        ));
    };
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        out.push(match protocol {
            Protocol::E91 => parse_e91_row(row, &rec)?,
            _ => parse_b92_row(row, &rec)?,
        });
    }
    Ok(out)
}

/// Statistics recomputed from a replayed table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub summary: SessionSummary,
    pub qber: QberReport,
    /// E91 only.
    pub chsh: Option<ChshEstimate>,
    /// B92 only.
    pub conclusive: Option<u64>,
}

fn pair_of(a: &str, b: &str) -> ChshPair {
    match (a, b) {
        ("A1", "B1") => ChshPair::A1B1,
        ("A1", _) => ChshPair::A1B3,
        (_, "B1") => ChshPair::A2B1,
        _ => ChshPair::A2B3,
    }
}

fn outcome(bit: u8) -> Outcome {
    if bit == 0 {
        Outcome::Aligned
    } else {
        Outcome::Orthogonal
    }
}

/// Recomputes session statistics from records.
///
/// E91 correlations group every non-discarded row by its basis pair
/// regardless of purpose; the key QBER counts only rows marked Key.
pub fn replay(records: &[ReplayRecord]) -> Result<ReplayOutcome> {
    let first = records.first().ok_or_else(|| Error::parse(0, "no records"))?;
    let protocol = first.protocol();
    if let Some(i) = records.iter().position(|r| r.protocol() != protocol) {
        return Err(Error::parse(i + 1, format!("mixed protocols: expected {protocol}")));
    }
    let n = records.len() as u64;
    match protocol {
        Protocol::E91 => {
            let mut counts = [PairCounts::default(); 4];
            let (mut key_total, mut key_errors) = (0u64, 0u64);
            for r in records {
                if let ReplayRecord::E91 {
                    a_basis,
                    b_basis,
                    a_bit,
                    b_bit,
                    purpose,
                    ..
                } = r
                {
                    if *purpose == E91Purpose::Discarded {
                        continue;
                    }
                    counts[pair_of(a_basis, b_basis).index()].record(outcome(*a_bit), outcome(*b_bit));
                    if *purpose == E91Purpose::Key {
                        key_total += 1;
                        key_errors += u64::from(a_bit != b_bit);
                    }
                }
            }
            let report = qber(key_errors, key_total)?;
            let chsh = ChshEstimate::from_counts(counts)?;
            let decision = security_decision(chsh.s, report.fraction, DEFAULT_QBER_THRESHOLD);
            let summary = SessionSummary {
                protocol,
                rounds: n,
                noise_p: None,
                eve_p: None,
                eve_mode: None,
                bell_ratio: None,
                seed: None,
                sifted_rate: Some(sifted_rate(key_total, n)?),
                conclusive_rate: None,
                qber_percent: report.percent,
                chsh_s: Some(chsh.s),
                risk: risk_classify(&report, Some(chsh.s.abs())),
                decision: Some(decision),
            };
            Ok(ReplayOutcome {
                summary,
                qber: report,
                chsh: Some(chsh),
                conclusive: None,
            })
        }
        _ => {
            let (mut conclusive, mut errors) = (0u64, 0u64);
            for r in records {
                if let ReplayRecord::B92 {
                    sender_bit,
                    receiver_bit: Some(b),
                    ..
                } = r
                {
                    conclusive += 1;
                    errors += u64::from(b != sender_bit);
                }
            }
            let report = qber(errors, conclusive)?;
            let summary = SessionSummary {
                protocol,
                rounds: n,
                noise_p: None,
                eve_p: None,
                eve_mode: None,
                bell_ratio: None,
                seed: None,
                sifted_rate: None,
                conclusive_rate: Some(sifted_rate(conclusive, n)?),
                qber_percent: report.percent,
                chsh_s: None,
                risk: risk_classify(&report, None),
                decision: None,
            };
            Ok(ReplayOutcome {
                summary,
                qber: report,
                chsh: None,
                conclusive: Some(conclusive),
            })
        }
    }
}
