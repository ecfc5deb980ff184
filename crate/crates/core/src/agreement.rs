//! The QBA(m) agreement rules for a single party.
//!
//! The commander sends `(P, v, [])` where `P` are correlated positions of its
//! list that carry `v`. A lieutenant appends its own sublist at `P` to the
//! chain and accepts `v` when the pair is consistent. In relay round `r` a
//! message is only accepted when the chain, after appending, holds exactly
//! `r + 1` lists; accepted messages are relayed until round `m`.
//!
//! Nothing here does I/O or scheduling; the network simulator drives these
//! handlers round by round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lists::{
    extract_sublist, select_support_positions, Alphabet, ConsistencyCandidate, ListError,
    PositionSet, Symbol, SymbolList,
};
use crate::PartyId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error(transparent)]
    Support(#[from] ListError),
    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
    #[error("order {value} is outside the alphabet 0..={w}")]
    ValueOutOfRange { value: Symbol, w: Symbol },
    #[error("party {0} is not the commander")]
    NotCommander(PartyId),
}

/// `(P, (v, L))` as it travels between parties.
///
/// Fields are kept raw because Byzantine senders may put anything in them;
/// [`validate_message`] decides whether they are well formed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgreementMessage {
    pub support_positions: Vec<usize>,
    pub value: Symbol,
    pub chain: Vec<SymbolList>,
}

impl AgreementMessage {
    pub fn new(support: &PositionSet, value: Symbol, chain: Vec<SymbolList>) -> Self {
        Self {
            support_positions: support.as_slice().to_vec(),
            value,
            chain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Commander,
    Lieutenant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pending,
    Decided(Symbol),
    AbortDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: usize,
    /// Number of dishonest parties tolerated.
    pub m: usize,
    pub alphabet: Alphabet,
    /// Smallest `|P|` any party accepts.
    pub min_support: usize,
    /// Decision when the accepted set is not a singleton.
    pub default_decision: Symbol,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), AgreementError> {
        let bad = |msg: String| Err(AgreementError::InvalidParams(msg));
        if self.n < 2 {
            return bad(format!("need at least 2 parties, got {}", self.n));
        }
        if self.m < 1 || self.m > self.n - 1 {
            return bad(format!("m = {} must satisfy 1 <= m <= n - 1 = {}", self.m, self.n - 1));
        }
        if (self.alphabet.w() as usize) < self.n {
            return bad(format!("w = {} must be at least n = {}", self.alphabet.w(), self.n));
        }
        if self.min_support < 1 {
            return bad("min_support must be at least 1".into());
        }
        if !self.alphabet.contains(self.default_decision) {
            return bad(format!("default decision {} outside the alphabet", self.default_decision));
        }
        Ok(())
    }

    /// Index of the last relay round, `m + 1`.
    pub fn final_round(&self) -> usize {
        self.m + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyState {
    pub party_id: PartyId,
    pub role: Role,
    pub honest: bool,
    pub own_list: SymbolList,
    /// `V_i` in insertion order; never shrinks and never repeats a value.
    accepted_values: Vec<Symbol>,
    pub current_round: usize,
    pub decision: Decision,
}

impl PartyState {
    pub fn new(party_id: PartyId, role: Role, honest: bool, own_list: SymbolList) -> Self {
        Self {
            party_id,
            role,
            honest,
            own_list,
            accepted_values: Vec::new(),
            current_round: 0,
            decision: Decision::Pending,
        }
    }

    pub fn accepted_values(&self) -> &[Symbol] {
        &self.accepted_values
    }

    fn accept(&mut self, v: Symbol) {
        if !self.accepted_values.contains(&v) {
            self.accepted_values.push(v);
        }
    }
}

/// Why a message was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RejectReason {
    Malformed,
    PositionOutOfRange,
    InsufficientSupport { found: usize, required: usize },
    ChainLength { expected: usize, found: usize },
    AlreadyAccepted,
    Inconsistent,
    /// Commander message outside round 0, or lieutenant message in round 0.
    UnexpectedSender,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

/// What a handler did with one incoming message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Handled {
    pub verdict: Verdict,
    /// The chain that was checked, with the receiver's sublist appended;
    /// `None` when the message was rejected before a sublist could be taken.
    pub checked_chain: Option<Vec<SymbolList>>,
    /// Message to send to every other lieutenant.
    pub relay: Option<AgreementMessage>,
}

impl Handled {
    fn reject(reason: RejectReason, checked_chain: Option<Vec<SymbolList>>) -> Self {
        Self {
            verdict: Verdict::Reject(reason),
            checked_chain,
            relay: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

/// Structural checks only: order and chain symbols in the alphabet, `P`
/// strictly ascending and 1-based, every chain entry of length `|P|`.
pub fn validate_message(msg: &AgreementMessage, alphabet: Alphabet) -> bool {
    alphabet.contains(msg.value)
        && PositionSet::from_strictly_ascending(&msg.support_positions).is_some()
        && msg.chain.iter().all(|entry| {
            entry.len() == msg.support_positions.len() && entry.within(alphabet)
        })
}

/// Builds the commander's message for order `v`. The commander's
/// own decision is fixed to `v` here.
pub fn commander_initiate(
    state: &mut PartyState,
    inferred_q: &PositionSet,
    v: Symbol,
    params: &ProtocolParams,
) -> Result<AgreementMessage, AgreementError> {
    if state.role != Role::Commander {
        return Err(AgreementError::NotCommander(state.party_id));
    }
    if !params.alphabet.contains(v) {
        return Err(AgreementError::ValueOutOfRange {
            value: v,
            w: params.alphabet.w(),
        });
    }
    let support = select_support_positions(&state.own_list, inferred_q, v, params.min_support)?;
    state.decision = Decision::Decided(v);
    Ok(AgreementMessage::new(&support, v, Vec::new()))
}

/// Validates the message, checks the support floor, and returns the chain
/// extended by the receiver's own sublist.
fn extend_chain(
    state: &PartyState,
    msg: &AgreementMessage,
    params: &ProtocolParams,
) -> Result<(PositionSet, Vec<SymbolList>), Handled> {
    if !validate_message(msg, params.alphabet) {
        return Err(Handled::reject(RejectReason::Malformed, None));
    }
    let support = PositionSet::from_strictly_ascending(&msg.support_positions)
        .expect("validated above");
    let own = extract_sublist(&state.own_list, &support)
        .map_err(|_| Handled::reject(RejectReason::PositionOutOfRange, None))?;
    let mut chain = msg.chain.clone();
    chain.push(own);
    if support.len() < params.min_support {
        return Err(Handled::reject(
            RejectReason::InsufficientSupport {
                found: support.len(),
                required: params.min_support,
            },
            Some(chain),
        ));
    }
    Ok((support, chain))
}

/// Handles a message received directly from the commander.
pub fn handle_commander_message(
    state: &mut PartyState,
    msg: &AgreementMessage,
    params: &ProtocolParams,
) -> Handled {
    let (support, chain) = match extend_chain(state, msg, params) {
        Ok(x) => x,
        Err(h) => return h,
    };
    if !ConsistencyCandidate::new(msg.value, &chain).is_consistent() {
        return Handled::reject(RejectReason::Inconsistent, Some(chain));
    }
    state.accepted_values.clear();
    state.accept(msg.value);
    Handled {
        verdict: Verdict::Accept,
        relay: Some(AgreementMessage::new(&support, msg.value, chain.clone())),
        checked_chain: Some(chain),
    }
}

/// Handles a message received from another lieutenant in relay round
/// `round` (1-based, at most `m + 1`).
pub fn handle_round_message(
    state: &mut PartyState,
    msg: &AgreementMessage,
    round: usize,
    params: &ProtocolParams,
) -> Handled {
    debug_assert!((1..=params.final_round()).contains(&round));
    let (support, chain) = match extend_chain(state, msg, params) {
        Ok(x) => x,
        Err(h) => return h,
    };
    if chain.len() != round + 1 {
        return Handled::reject(
            RejectReason::ChainLength {
                expected: round + 1,
                found: chain.len(),
            },
            Some(chain),
        );
    }
    if state.accepted_values.contains(&msg.value) {
        return Handled::reject(RejectReason::AlreadyAccepted, Some(chain));
    }
    if !ConsistencyCandidate::new(msg.value, &chain).is_consistent() {
        return Handled::reject(RejectReason::Inconsistent, Some(chain));
    }
    state.accept(msg.value);
    let relay = (round <= params.m).then(|| AgreementMessage::new(&support, msg.value, chain.clone()));
    Handled {
        verdict: Verdict::Accept,
        relay,
        checked_chain: Some(chain),
    }
}

/// A singleton accepted set decides its element; anything else
/// decides `params.default_decision`.
pub fn finalize_decision(state: &mut PartyState, params: &ProtocolParams) -> Symbol {
    let d = match state.accepted_values.as_slice() {
        [v] => *v,
        _ => params.default_decision,
    };
    state.decision = Decision::Decided(d);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(v: &[Symbol]) -> SymbolList {
        SymbolList::new(v.to_vec())
    }

    fn params(m: usize) -> ProtocolParams {
        ProtocolParams {
            n: 4,
            m,
            alphabet: Alphabet::new(4).unwrap(),
            min_support: 2,
            default_decision: 0,
        }
    }

    fn msg(p: &[usize], v: Symbol, chain: Vec<SymbolList>) -> AgreementMessage {
        AgreementMessage {
            support_positions: p.to_vec(),
            value: v,
            chain,
        }
    }

    fn lieutenant(list: &[Symbol]) -> PartyState {
        PartyState::new(1, Role::Lieutenant, true, sl(list))
    }

    #[test]
    fn commander_uses_correlated_support() {
        let mut c = PartyState::new(0, Role::Commander, true, sl(&[1, 2, 0, 0, 3, 2, 3]));
        let q = PositionSet::new([1, 2, 3, 5, 6, 7]).unwrap();
        let out = commander_initiate(&mut c, &q, 2, &params(1)).unwrap();
        assert_eq!(out, msg(&[2, 6], 2, vec![]));
        assert_eq!(c.decision, Decision::Decided(2));

        let mut c = PartyState::new(0, Role::Commander, true, sl(&[1, 1, 1]));
        assert!(matches!(
            commander_initiate(&mut c, &q.clone(), 4, &params(1)),
            Err(AgreementError::Support(ListError::IndexOutOfRange { .. }))
        ));
        let q3 = PositionSet::new([1, 2]).unwrap();
        assert!(matches!(
            commander_initiate(&mut c, &q3, 4, &params(1)),
            Err(AgreementError::Support(ListError::InsufficientSupport { .. }))
        ));
        let mut l = lieutenant(&[1]);
        assert!(commander_initiate(&mut l, &q3, 1, &params(1)).is_err());
    }

    #[test]
    fn lieutenant_accepts_consistent_commander_message() {
        let mut l = lieutenant(&[1, 0, 3, 4]);
        let h = handle_commander_message(&mut l, &msg(&[1, 2], 2, vec![]), &params(1));
        assert!(h.accepted());
        assert_eq!(l.accepted_values(), &[2]);
        assert_eq!(h.relay.unwrap().chain, vec![sl(&[1, 0])]);
    }

    #[test]
    fn commander_message_rejections() {
        let p = params(1);
        let mut l = lieutenant(&[1, 0, 3, 4]);
        // Own sublist holds v.
        let h = handle_commander_message(&mut l, &msg(&[1, 2], 1, vec![]), &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::Inconsistent));
        // Pre-filled chain containing v.
        let h = handle_commander_message(&mut l, &msg(&[3, 4], 2, vec![sl(&[2, 0])]), &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::Inconsistent));
        // Support below the floor.
        let h = handle_commander_message(&mut l, &msg(&[1], 2, vec![]), &p);
        assert!(matches!(h.verdict, Verdict::Reject(RejectReason::InsufficientSupport { .. })));
        // Positions past the end of the list.
        let h = handle_commander_message(&mut l, &msg(&[1, 9], 2, vec![]), &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::PositionOutOfRange));
        // Unsorted positions.
        let h = handle_commander_message(&mut l, &msg(&[2, 1], 2, vec![]), &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::Malformed));
        assert!(l.accepted_values().is_empty());
    }

    #[test]
    fn round_one_relay_is_accepted() {
        let p = params(1);
        let mut l = lieutenant(&[1, 0, 3, 4]);
        let relay = msg(&[3, 4], 2, vec![sl(&[0, 1])]);
        let h = handle_round_message(&mut l, &relay, 1, &p);
        assert!(h.accepted());
        assert_eq!(h.checked_chain.unwrap().len(), 2);
        assert_eq!(h.relay.unwrap().chain, vec![sl(&[0, 1]), sl(&[3, 4])]);
    }

    #[test]
    fn round_rules() {
        let p = params(1);
        let mut l = lieutenant(&[1, 0, 3, 4]);
        // Wrong chain length for the round.
        let h = handle_round_message(&mut l, &msg(&[3, 4], 2, vec![]), 1, &p);
        assert_eq!(
            h.verdict,
            Verdict::Reject(RejectReason::ChainLength { expected: 2, found: 1 })
        );
        // Chain already holding the receiver's own sublist collides with it.
        let h = handle_round_message(&mut l, &msg(&[3, 4], 2, vec![sl(&[3, 4])]), 1, &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::Inconsistent));
        // Accepted at the final round: no relay.
        let h = handle_round_message(&mut l, &msg(&[3, 4], 2, vec![sl(&[0, 1]), sl(&[1, 0])]), 2, &p);
        assert!(h.accepted());
        assert!(h.relay.is_none());
        // Same value again.
        let h = handle_round_message(&mut l, &msg(&[3, 4], 2, vec![sl(&[1, 0]), sl(&[0, 1])]), 2, &p);
        assert_eq!(h.verdict, Verdict::Reject(RejectReason::AlreadyAccepted));
        assert_eq!(l.accepted_values(), &[2]);
    }

    #[test]
    fn decisions() {
        let p = params(1);
        let mut l = lieutenant(&[]);
        assert_eq!(finalize_decision(&mut l, &p), 0);
        l.accept(2);
        assert_eq!(finalize_decision(&mut l, &p), 2);
        assert_eq!(l.decision, Decision::Decided(2));
        l.accept(1);
        l.accept(3);
        assert_eq!(finalize_decision(&mut l, &p), 0);
    }

    #[test]
    fn message_validation() {
        let a = Alphabet::new(4).unwrap();
        assert!(validate_message(&msg(&[1, 3], 2, vec![sl(&[0, 1])]), a));
        assert!(!validate_message(&msg(&[1, 3], 2, vec![sl(&[0, 1, 1])]), a));
        assert!(!validate_message(&msg(&[1, 3], 2, vec![sl(&[0, 7])]), a));
        assert!(!validate_message(&msg(&[1, 3], 5, vec![]), a));
        assert!(!validate_message(&msg(&[0, 3], 2, vec![]), a));
        assert!(!validate_message(&msg(&[3, 3], 2, vec![]), a));
    }

    #[test]
    fn params_validation() {
        let mut p = params(1);
        assert!(p.validate().is_ok());
        p.m = 0;
        assert!(p.validate().is_err());
        p.m = 4;
        assert!(p.validate().is_err());
        p.m = 3;
        p.min_support = 0;
        assert!(p.validate().is_err());
        p.min_support = 1;
        p.alphabet = Alphabet::new(3).unwrap();
        assert!(p.validate().is_err());
    }
}
