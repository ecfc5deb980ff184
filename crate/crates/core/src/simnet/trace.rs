//! Run traces as JSON Lines.
//!
//! Schema, one object per line, discriminated by `"event"`:
//!
//! * `header`: `schema_version`, `seed`, `run_index`, `config` (the scenario
//!   that produced the run).
//! * `distribution`: the distribution outcome (lists, `true_q`,
//!   `inferred_q`, abort reason, decoy counts).
//! * `send`: `round` is the delivery round.
//! * `deliver`: `outcome` is `accepted`, `rejected` (with `reason`) or
//!   `controlled` (receiver is dishonest); `checked_chain` is the chain with
//!   the receiver's sublist appended, when one was formed.
//! * `absent`: an honest lieutenant got no round-0 message from the
//!   commander.
//! * `blocked`: a strategy tried to send as a party it does not control.
//! * `decision`: final accepted set and decision of an honest party.

use serde::{Deserialize, Serialize};

use crate::agreement::{AgreementMessage, RejectReason};
use crate::lists::{ConsistencyCandidate, Symbol, SymbolList};
use crate::qsd::DistributionOutcome;
use crate::PartyId;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum DeliveryOutcome {
    Accepted,
    Rejected { reason: RejectReason },
    Controlled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum TraceEvent {
    Header {
        schema_version: u32,
        seed: u64,
        run_index: u64,
        config: serde_json::Value,
    },
    Distribution {
        outcome: DistributionOutcome,
    },
    Send {
        round: usize,
        sender: PartyId,
        receiver: PartyId,
        message: AgreementMessage,
    },
    Deliver {
        round: usize,
        sender: PartyId,
        receiver: PartyId,
        message: AgreementMessage,
        outcome: DeliveryOutcome,
        checked_chain: Option<Vec<SymbolList>>,
    },
    Absent {
        round: usize,
        sender: PartyId,
        receiver: PartyId,
    },
    Blocked {
        round: usize,
        claimed_sender: PartyId,
        receiver: PartyId,
    },
    Decision {
        party: PartyId,
        accepted: Vec<Symbol>,
        decision: Symbol,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
}

impl RunTrace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { events })
    }

    pub fn header(&self) -> Option<(u64, u64, &serde_json::Value)> {
        self.events.iter().find_map(|e| match e {
            TraceEvent::Header {
                seed,
                run_index,
                config,
                ..
            } => Some((*seed, *run_index, config)),
            _ => None,
        })
    }
}

/// Checks the invariants every trace must satisfy:
///
/// * each accepted delivery in round `r` has a checked chain of `r + 1`
///   lists that is consistent with the value;
/// * each delivery matches an earlier send with the same sender, receiver,
///   round and message.
pub fn validate_trace(trace: &RunTrace) -> Result<(), String> {
    let mut sends: Vec<(usize, PartyId, PartyId, &AgreementMessage)> = Vec::new();
    for (i, e) in trace.events.iter().enumerate() {
        match e {
            TraceEvent::Send {
                round,
                sender,
                receiver,
                message,
            } => sends.push((*round, *sender, *receiver, message)),
            TraceEvent::Deliver {
                round,
                sender,
                receiver,
                message,
                outcome,
                checked_chain,
            } => {
                let key = (*round, *sender, *receiver, message);
                let Some(at) = sends.iter().position(|s| *s == key) else {
                    return Err(format!("event {i}: delivery without a matching send"));
                };
                sends.swap_remove(at);
                if *outcome == DeliveryOutcome::Accepted {
                    let Some(chain) = checked_chain else {
                        return Err(format!("event {i}: acceptance without a chain"));
                    };
                    if chain.len() != round + 1 {
                        return Err(format!(
                            "event {i}: chain of {} lists accepted in round {round}",
                            chain.len()
                        ));
                    }
                    if !ConsistencyCandidate::new(message.value, chain).is_consistent() {
                        return Err(format!("event {i}: accepted chain is not consistent"));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}
