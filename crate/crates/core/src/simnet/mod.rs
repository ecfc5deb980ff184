//! Synchronous round-based network with authenticated channels and a
//! catalog of Byzantine strategies.
//!
//! Round 0 carries the commander's messages; a message produced while
//! processing round `r` is delivered in round `r + 1`, up to the final round
//! `m + 1`. Each receiver sees its deliveries in ascending sender order.
//! Honest parties run the [`crate::agreement`] handlers. Dishonest parties
//! are driven by a [`Strategy`] that only ever sees an [`AdversaryView`].

mod forgery_experiment;
mod strategies;
mod trace;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::agreement::{
    commander_initiate, finalize_decision, handle_commander_message, handle_round_message,
    AgreementError, AgreementMessage, Decision, Handled, PartyState, ProtocolParams, RejectReason, Role,
    Verdict,
};
use crate::lists::{ListError, PositionSet, Symbol, SymbolList};
use crate::qsd::DistributionOutcome;
use crate::{PartyId, SimRng, COMMANDER};

pub use forgery_experiment::{forgery_trial, ForgeryExperiment};
pub use strategies::{
    EquivocatingCommander, ForgedSupportCommander, Forging, Honest, LateInjection, PaddingKind,
    SelectiveRelay, Silent, StrategySpec,
};
pub use trace::{validate_trace, DeliveryOutcome, RunTrace, TraceEvent, TRACE_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("distribution aborted; nothing to run")]
    Aborted,
    #[error(transparent)]
    Agreement(#[from] AgreementError),
}

impl From<ListError> for SimError {
    fn from(e: ListError) -> Self {
        SimError::Agreement(AgreementError::Support(e))
    }
}

impl SimError {
    /// Too little correlated support for a value someone had to send.
    pub fn is_support_shortfall(&self) -> bool {
        matches!(
            self,
            SimError::Agreement(AgreementError::Support(ListError::InsufficientSupport { .. }))
        )
    }
}

/// Everything about a run except the lists and the strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSetup {
    pub params: ProtocolParams,
    /// Parties driven by strategies.
    pub corrupt: BTreeSet<PartyId>,
    /// Order used by an honest commander and as the default for commander
    /// strategies.
    pub commander_order: Symbol,
    /// Number of relay rounds actually executed; `None` runs all `m + 1`.
    /// Anything shorter is a negative control.
    pub relay_rounds: Option<usize>,
}

impl ProtocolSetup {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if !self.params.alphabet.contains(self.commander_order) {
            return Err(SimError::Config(format!(
                "commander order {} outside the alphabet",
                self.commander_order
            )));
        }
        if let Some(&p) = self.corrupt.iter().find(|&&p| p >= self.params.n) {
            return Err(SimError::Config(format!("corrupt party {p} does not exist")));
        }
        Ok(())
    }

    fn last_round(&self) -> usize {
        let last = self.params.final_round();
        self.relay_rounds.map_or(last, |r| r.min(last))
    }
}

/// A message as seen by a controlled receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Received {
    pub round: usize,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub message: AgreementMessage,
}

/// The only data a strategy may read.
#[derive(Debug)]
pub struct AdversaryView<'a> {
    pub params: &'a ProtocolParams,
    /// Round in which the messages being produced will be delivered.
    pub round: usize,
    /// Which side of the coalition the strategy is playing. Any controlled
    /// party may send, but duties such as relaying belong to one side.
    pub role: Role,
    controlled: &'a BTreeSet<PartyId>,
    lists: &'a [(PartyId, SymbolList)],
    commander_second_list: Option<&'a SymbolList>,
    inferred_q: Option<&'a PositionSet>,
    received: &'a [Received],
}

impl<'a> AdversaryView<'a> {
    pub fn controlled(&self) -> &BTreeSet<PartyId> {
        self.controlled
    }

    pub fn controls_commander(&self) -> bool {
        self.controlled.contains(&COMMANDER)
    }

    /// Controlled lieutenants in ascending order.
    pub fn controlled_lieutenants(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.controlled.iter().copied().filter(|&p| p != COMMANDER)
    }

    /// Lieutenants outside the coalition. Party ids are public.
    pub fn other_lieutenants(&self) -> impl Iterator<Item = PartyId> + '_ {
        (1..self.params.n).filter(|p| !self.controlled.contains(p))
    }

    /// Own list of a controlled party; the commander's is its first list.
    pub fn list_of(&self, party: PartyId) -> Option<&'a SymbolList> {
        self.lists.iter().find(|(p, _)| *p == party).map(|(_, l)| l)
    }

    /// Controlled parties with their lists, ascending by id.
    pub fn lists(&self) -> &'a [(PartyId, SymbolList)] {
        self.lists
    }

    pub fn commander_second_list(&self) -> Option<&'a SymbolList> {
        self.commander_second_list
    }

    pub fn inferred_q(&self) -> Option<&'a PositionSet> {
        self.inferred_q
    }

    /// Every message delivered to a controlled party so far.
    pub fn received(&self) -> &'a [Received] {
        self.received
    }
}

/// Sends queued by a strategy. Only controlled parties can be senders.
#[derive(Debug)]
pub struct Outbox<'a> {
    controlled: &'a BTreeSet<PartyId>,
    n: usize,
    sends: Vec<Envelope>,
    blocked: Vec<(PartyId, PartyId)>,
}

impl<'a> Outbox<'a> {
    fn new(controlled: &'a BTreeSet<PartyId>, n: usize) -> Self {
        Self {
            controlled,
            n,
            sends: Vec::new(),
            blocked: Vec::new(),
        }
    }

    /// Queues `message` from `from` to `to`. Returns `false`, and sends
    /// nothing, when `from` is not controlled or `to` is not another party.
    pub fn send(&mut self, from: PartyId, to: PartyId, message: AgreementMessage) -> bool {
        if !self.controlled.contains(&from) || to >= self.n || to == from {
            self.blocked.push((from, to));
            return false;
        }
        self.sends.push(Envelope {
            sender: from,
            receiver: to,
            message,
        });
        true
    }
}

/// Drives every controlled party. Strategies collude: all of them see the
/// same coalition view.
pub trait Strategy {
    fn name(&self) -> &str;

    fn act(
        &mut self,
        view: &AdversaryView<'_>,
        out: &mut Outbox<'_>,
        rng: &mut SimRng,
    ) -> Result<(), SimError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Envelope {
    sender: PartyId,
    receiver: PartyId,
    message: AgreementMessage,
}

/// Final state of one honest party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyOutcome {
    pub party: PartyId,
    pub accepted: Vec<Symbol>,
    pub decision: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolResult {
    /// Honest lieutenants, ascending.
    pub lieutenants: Vec<PartyOutcome>,
    /// The honest commander's decision, if the commander is honest.
    pub commander: Option<Symbol>,
}

impl ProtocolResult {
    /// Honest lieutenants all ended with the same accepted set and decision.
    pub fn agreement(&self) -> bool {
        let mut sets = self.lieutenants.iter().map(|p| {
            let mut v = p.accepted.clone();
            v.sort_unstable();
            (v, p.decision)
        });
        match sets.next() {
            Some(first) => sets.all(|s| s == first),
            None => true,
        }
    }

    /// Every honest lieutenant decided `v`.
    pub fn all_decided(&self, v: Symbol) -> bool {
        self.lieutenants.iter().all(|p| p.decision == v)
    }
}

/// Runs rounds `0..=m+1` on a completed distribution, appending events to
/// `events`.
///
/// `commander_strategy` is consulted only when the commander is corrupt,
/// `lieutenant_strategy` only when some lieutenant is.
pub fn run_protocol(
    outcome: &DistributionOutcome,
    setup: &ProtocolSetup,
    commander_strategy: &mut dyn Strategy,
    lieutenant_strategy: &mut dyn Strategy,
    rng: &mut SimRng,
    events: &mut Vec<TraceEvent>,
) -> Result<ProtocolResult, SimError> {
    setup.validate()?;
    if outcome.is_aborted() {
        return Err(SimError::Aborted);
    }
    let params = &setup.params;
    let n = params.n;
    if outcome.lists.len() != n {
        return Err(SimError::Config(format!(
            "distribution has {} lists for {n} parties",
            outcome.lists.len()
        )));
    }
    let corrupt = &setup.corrupt;
    let commander_corrupt = corrupt.contains(&COMMANDER);
    let lieutenants_corrupt = corrupt.iter().any(|&p| p != COMMANDER);

    let coalition_lists: Vec<(PartyId, SymbolList)> = corrupt
        .iter()
        .map(|&p| (p, outcome.lists[p].clone()))
        .collect();
    let second_list = commander_corrupt.then(|| outcome.commander_second_list());
    let mut received: Vec<Received> = Vec::new();

    let mut honest: Vec<PartyState> = (1..n)
        .filter(|p| !corrupt.contains(p))
        .map(|p| PartyState::new(p, Role::Lieutenant, true, outcome.lists[p].clone()))
        .collect();

    let mut pending = Vec::new();
    let mut commander_decision = None;
    if !commander_corrupt {
        let mut commander = PartyState::new(COMMANDER, Role::Commander, true, outcome.lists[0].clone());
        let msg = commander_initiate(&mut commander, &outcome.inferred_q, setup.commander_order, params)?;
        commander_decision = Some(setup.commander_order);
        pending.extend((1..n).map(|receiver| Envelope {
            sender: COMMANDER,
            receiver,
            message: msg.clone(),
        }));
    }

    let mut adversary_turn = |round: usize,
                              received: &[Received],
                              rng: &mut SimRng,
                              events: &mut Vec<TraceEvent>|
     -> Result<Vec<Envelope>, SimError> {
        let view = |role| AdversaryView {
            params,
            round,
            role,
            controlled: corrupt,
            lists: &coalition_lists,
            commander_second_list: second_list.as_ref(),
            inferred_q: commander_corrupt.then_some(&outcome.inferred_q),
            received,
        };
        let mut out = Outbox::new(corrupt, n);
        if commander_corrupt {
            commander_strategy.act(&view(Role::Commander), &mut out, rng)?;
        }
        if lieutenants_corrupt {
            lieutenant_strategy.act(&view(Role::Lieutenant), &mut out, rng)?;
        }
        for (claimed_sender, receiver) in out.blocked {
            events.push(TraceEvent::Blocked {
                round,
                claimed_sender,
                receiver,
            });
        }
        Ok(out.sends)
    };

    if !corrupt.is_empty() {
        pending.extend(adversary_turn(0, &received, rng, events)?);
    }

    let last = setup.last_round();
    for round in 0..=last {
        pending.sort_by_key(|e| (e.sender, e.receiver));
        for env in &pending {
            events.push(TraceEvent::Send {
                round,
                sender: env.sender,
                receiver: env.receiver,
                message: env.message.clone(),
            });
        }
        // Per receiver, ascending sender; ties keep send order.
        pending.sort_by_key(|e| (e.receiver, e.sender));

        if round == 0 {
            for state in &honest {
                if !pending.iter().any(|e| e.receiver == state.party_id && e.sender == COMMANDER) {
                    events.push(TraceEvent::Absent {
                        round,
                        sender: COMMANDER,
                        receiver: state.party_id,
                    });
                }
            }
        }

        let mut next = Vec::new();
        for env in pending.drain(..) {
            let Some(state) = honest.iter_mut().find(|s| s.party_id == env.receiver) else {
                events.push(TraceEvent::Deliver {
                    round,
                    sender: env.sender,
                    receiver: env.receiver,
                    message: env.message.clone(),
                    outcome: DeliveryOutcome::Controlled,
                    checked_chain: None,
                });
                received.push(Received {
                    round,
                    sender: env.sender,
                    receiver: env.receiver,
                    message: env.message,
                });
                continue;
            };
            state.current_round = round;
            let handled = dispatch(state, env.sender, round, &env.message, params);
            let outcome = match handled.verdict {
                Verdict::Accept => DeliveryOutcome::Accepted,
                Verdict::Reject(reason) => DeliveryOutcome::Rejected { reason },
            };
            events.push(TraceEvent::Deliver {
                round,
                sender: env.sender,
                receiver: env.receiver,
                message: env.message,
                outcome,
                checked_chain: handled.checked_chain,
            });
            if let Some(relay) = handled.relay {
                let me = state.party_id;
                next.extend((1..n).filter(|&p| p != me).map(|receiver| Envelope {
                    sender: me,
                    receiver,
                    message: relay.clone(),
                }));
            }
        }

        if round < last {
            if !corrupt.is_empty() {
                next.extend(adversary_turn(round + 1, &received, rng, events)?);
            }
            pending = next;
        }
    }

    let lieutenants = honest
        .iter_mut()
        .map(|state| {
            let decision = finalize_decision(state, params);
            events.push(TraceEvent::Decision {
                party: state.party_id,
                accepted: state.accepted_values().to_vec(),
                decision,
            });
            debug_assert_eq!(state.decision, Decision::Decided(decision));
            PartyOutcome {
                party: state.party_id,
                accepted: state.accepted_values().to_vec(),
                decision,
            }
        })
        .collect();
    if let Some(d) = commander_decision {
        events.push(TraceEvent::Decision {
            party: COMMANDER,
            accepted: Vec::new(),
            decision: d,
        });
    }
    Ok(ProtocolResult {
        lieutenants,
        commander: commander_decision,
    })
}

/// Routes a delivery to the right handler: commander messages only in round
/// 0, lieutenant messages only afterwards.
pub(crate) fn dispatch(
    state: &mut PartyState,
    sender: PartyId,
    round: usize,
    message: &AgreementMessage,
    params: &ProtocolParams,
) -> Handled {
    match (round, sender == COMMANDER) {
        (0, true) => handle_commander_message(state, message, params),
        (r, false) if r > 0 => handle_round_message(state, message, r, params),
        _ => Handled {
            verdict: Verdict::Reject(RejectReason::UnexpectedSender),
            checked_chain: None,
            relay: None,
        },
    }
}

#[cfg(test)]
mod tests;
