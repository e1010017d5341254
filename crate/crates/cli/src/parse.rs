//! Parsers for command-line values. Slots are 1-based on the command line
//! and 0-based everywhere else; symbols are 0-based throughout.

use std::path::PathBuf;

use byzmac::cq_channel::{example_channel, factorized_channel, load_channel};
use byzmac::simulator::AdversaryStrategy;
use byzmac::{CqMacChannel, Frozen, InputDistribution};

use crate::CliError;

/// Where a channel comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Example,
    Factorized(Vec<usize>),
    File(PathBuf),
}

impl ChannelSource {
    pub fn load(&self) -> Result<CqMacChannel, CliError> {
        match self {
            ChannelSource::Example => Ok(example_channel()),
            ChannelSource::Factorized(sizes) => Ok(factorized_channel(sizes)),
            ChannelSource::File(path) => {
                load_channel(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
            }
        }
    }
}

/// `builtin:example`, `builtin:factorized:2,3,2`, or a file path.
pub fn channel_source(s: &str) -> Result<ChannelSource, String> {
    match s.strip_prefix("builtin:") {
        None => Ok(ChannelSource::File(PathBuf::from(s))),
        Some("example") => Ok(ChannelSource::Example),
        Some(rest) => match rest.strip_prefix("factorized:") {
            Some(sizes) => {
                let sizes = usize_list(sizes)?;
                if sizes.is_empty() || sizes.contains(&0) {
                    return Err("factorized alphabets must be positive".into());
                }
                Ok(ChannelSource::Factorized(sizes))
            }
            None => Err(format!("unknown builtin channel `{rest}` (expected example or factorized:N,N,...)")),
        },
    }
}

pub fn usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a non-negative integer")))
        .collect()
}

pub fn real_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// Comma-separated probabilities; never renormalized.
pub fn distribution(s: &str) -> Result<InputDistribution, CliError> {
    let probs = real_list(s).map_err(CliError::Usage)?;
    InputDistribution::new(probs).map_err(|e| CliError::Usage(e.to_string()))
}

/// 1-based slot to 0-based.
pub fn slot(s: usize) -> Result<usize, CliError> {
    s.checked_sub(1).ok_or_else(|| CliError::Usage("slots are numbered from 1".into()))
}

/// 1-based decode order such as `2,1`.
pub fn order(s: &str) -> Result<Vec<usize>, CliError> {
    usize_list(s).map_err(CliError::Usage)?.into_iter().map(slot).collect()
}

/// `SLOT=point:SYMBOL` or `SLOT=dist:P,P,...`.
pub fn freeze(s: &str) -> Result<(usize, Frozen), CliError> {
    let bad = || CliError::Usage(format!("bad freeze `{s}` (expected SLOT=point:SYMBOL or SLOT=dist:P,...)"));
    let (slot_str, rule) = s.split_once('=').ok_or_else(bad)?;
    let slot_no = slot(slot_str.trim().parse().map_err(|_| bad())?)?;
    let frozen = if let Some(sym) = rule.strip_prefix("point:") {
        Frozen::Symbol(sym.trim().parse().map_err(|_| bad())?)
    } else if let Some(d) = rule.strip_prefix("dist:") {
        Frozen::Dist(distribution(d)?)
    } else {
        return Err(bad());
    };
    Ok((slot_no, frozen))
}

/// `SLOT:honest`, `SLOT:honest:P,...`, `SLOT:fixed:S-S-...`, `SLOT:worst` or `SLOT:worst:BUDGET`.
pub fn adversary(s: &str, messages: impl Fn(usize) -> Option<usize>) -> Result<(usize, AdversaryStrategy), CliError> {
    let bad = |why: &str| CliError::Usage(format!("bad adversary `{s}`: {why}"));
    let (slot_str, rest) = s.split_once(':').ok_or_else(|| bad("expected SLOT:STRATEGY"))?;
    let slot_no = slot(slot_str.trim().parse().map_err(|_| bad("slot is not a number"))?)?;
    let (kind, arg) = match rest.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (rest, None),
    };
    let strategy = match (kind, arg) {
        ("honest", None) => {
            let m = messages(slot_no).ok_or_else(|| bad("slot out of range"))?;
            AdversaryStrategy::Honest(InputDistribution::uniform(m))
        }
        ("honest", Some(d)) => AdversaryStrategy::Honest(distribution(d)?),
        ("fixed", Some(seq)) => AdversaryStrategy::FixedSequence(
            seq.split('-')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad("sequence symbols must be integers")))
                .collect::<Result<_, _>>()?,
        ),
        ("worst", None) => AdversaryStrategy::WorstCaseSearch { budget: 1000 },
        ("worst", Some(b)) => AdversaryStrategy::WorstCaseSearch { budget: b.parse().map_err(|_| bad("budget is not a number"))? },
        _ => return Err(bad("strategy must be honest, fixed:SEQ or worst[:BUDGET]")),
    };
    Ok((slot_no, strategy))
}
