//! The Byzantine strategy catalog.

use serde::{Deserialize, Serialize};

use super::{dispatch, AdversaryView, Outbox, SimError, Strategy};
use crate::agreement::{commander_initiate, AgreementMessage, PartyState, Role};
use crate::lists::{extract_sublist, select_support_positions, PositionSet, Symbol, SymbolList};
use crate::{PartyId, SimRng, COMMANDER};

/// A strategy by name and parameters, as it appears in configs and traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum StrategySpec {
    Honest,
    Silent,
    SelectiveRelay {
        /// Lieutenants that get the relay; default is the lower half (by id)
        /// of the other lieutenants.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        relay_to: Option<Vec<PartyId>>,
    },
    Forging {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_value: Option<Symbol>,
    },
    Equivocating {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v1: Option<Symbol>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v2: Option<Symbol>,
        /// How many lieutenants (lowest ids first) get `v1`; default is half,
        /// rounded up.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        split: Option<usize>,
    },
    /// Sends a valid order to some lieutenants and nothing to the rest.
    SelectiveSend {
        /// Lieutenants that get the order; default is the lower half (by
        /// id), rounded up.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        send_to: Option<Vec<PartyId>>,
    },
    ForgedPadUncorrelated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Symbol>,
    },
    ForgedForeignPosition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Symbol>,
    },
    LateInjection {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v2: Option<Symbol>,
    },
}

impl StrategySpec {
    /// Strategies meant for corrupt lieutenants.
    pub fn lieutenant_catalog() -> Vec<StrategySpec> {
        vec![
            StrategySpec::Honest,
            StrategySpec::Silent,
            StrategySpec::SelectiveRelay { relay_to: None },
            StrategySpec::Forging { target_value: None },
        ]
    }

    /// Strategies meant for a corrupt commander.
    pub fn commander_catalog() -> Vec<StrategySpec> {
        vec![
            StrategySpec::Equivocating {
                v1: None,
                v2: None,
                split: None,
            },
            StrategySpec::Silent,
            StrategySpec::SelectiveSend { send_to: None },
            StrategySpec::ForgedPadUncorrelated { v: None },
            StrategySpec::ForgedForeignPosition { v: None },
            StrategySpec::LateInjection { v2: None },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Honest => "honest",
            StrategySpec::Silent => "silent",
            StrategySpec::SelectiveRelay { .. } => "selective-relay",
            StrategySpec::Forging { .. } => "forging",
            StrategySpec::Equivocating { .. } => "equivocating",
            StrategySpec::SelectiveSend { .. } => "selective-send",
            StrategySpec::ForgedPadUncorrelated { .. } => "forged-pad-uncorrelated",
            StrategySpec::ForgedForeignPosition { .. } => "forged-foreign-position",
            StrategySpec::LateInjection { .. } => "late-injection",
        }
    }

    /// The named strategy with default parameters.
    pub fn from_name(name: &str) -> Option<Self> {
        Self::lieutenant_catalog()
            .into_iter()
            .chain(Self::commander_catalog())
            .find(|s| s.name() == name)
    }

    /// `commander_order` is the scenario's order; `correlation_prob` is the
    /// device's public correlation probability.
    pub fn build(&self, commander_order: Symbol, correlation_prob: f64) -> Box<dyn Strategy> {
        match self.clone() {
            StrategySpec::Honest => Box::new(Honest::new(commander_order)),
            StrategySpec::Silent => Box::new(Silent),
            StrategySpec::SelectiveRelay { relay_to } => Box::new(SelectiveRelay::new(relay_to)),
            StrategySpec::Forging { target_value } => Box::new(Forging::new(target_value, correlation_prob)),
            StrategySpec::Equivocating { v1, v2, split } => Box::new(EquivocatingCommander {
                v1: v1.unwrap_or(commander_order),
                v2,
                split,
            }),
            StrategySpec::SelectiveSend { send_to } => Box::new(SelectiveSend {
                v: commander_order,
                send_to,
            }),
            StrategySpec::ForgedPadUncorrelated { v } => Box::new(ForgedSupportCommander {
                v: v.unwrap_or(commander_order),
                padding: PaddingKind::Uncorrelated,
            }),
            StrategySpec::ForgedForeignPosition { v } => Box::new(ForgedSupportCommander {
                v: v.unwrap_or(commander_order),
                padding: PaddingKind::ForeignCorrelated,
            }),
            StrategySpec::LateInjection { v2 } => Box::new(LateInjection {
                v1: commander_order,
                v2,
            }),
        }
    }
}

/// `(v + 1) mod (w + 1)`.
fn next_value(v: Symbol, view: &AdversaryView<'_>) -> Symbol {
    (v + 1) % view.params.alphabet.size() as Symbol
}

fn send_to_all_lieutenants(out: &mut Outbox<'_>, from: PartyId, n: usize, msg: &AgreementMessage) {
    for to in (1..n).filter(|&p| p != from) {
        out.send(from, to, msg.clone());
    }
}

/// The commander's own lists and `Q`; `None` when it is not controlled.
fn commander_knowledge<'a>(view: &AdversaryView<'a>) -> Option<(&'a SymbolList, &'a SymbolList, &'a PositionSet)> {
    Some((
        view.list_of(COMMANDER)?,
        view.commander_second_list()?,
        view.inferred_q()?,
    ))
}

/// Follows the agreement rules exactly for every controlled party.
#[derive(Debug, Clone)]
pub struct Honest {
    order: Symbol,
    states: Vec<PartyState>,
    seen: usize,
}

impl Honest {
    pub fn new(order: Symbol) -> Self {
        Self {
            order,
            states: Vec::new(),
            seen: 0,
        }
    }
}

impl Strategy for Honest {
    fn name(&self) -> &str {
        "honest"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        let n = view.params.n;
        if view.role == Role::Commander {
            if let (0, Some((list, _, q))) = (view.round, commander_knowledge(view)) {
                let mut commander = PartyState::new(COMMANDER, Role::Commander, false, list.clone());
                let msg = commander_initiate(&mut commander, q, self.order, view.params)?;
                send_to_all_lieutenants(out, COMMANDER, n, &msg);
            }
            return Ok(());
        }
        if view.round == 0 {
            self.states = view
                .controlled_lieutenants()
                .map(|p| PartyState::new(p, Role::Lieutenant, false, view.list_of(p).expect("controlled").clone()))
                .collect();
        }
        for r in &view.received()[self.seen..] {
            let Some(state) = self.states.iter_mut().find(|s| s.party_id == r.receiver) else {
                continue;
            };
            if let Some(relay) = dispatch(state, r.sender, r.round, &r.message, view.params).relay {
                send_to_all_lieutenants(out, state.party_id, n, &relay);
            }
        }
        self.seen = view.received().len();
        Ok(())
    }
}

/// Sends nothing, ever.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl Strategy for Silent {
    fn name(&self) -> &str {
        "silent"
    }

    fn act(&mut self, _: &AdversaryView<'_>, _: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        Ok(())
    }
}

/// Accepts the commander's message like an honest party but relays it to a
/// subset of lieutenants only, then stays silent.
#[derive(Debug, Clone)]
pub struct SelectiveRelay {
    relay_to: Option<Vec<PartyId>>,
    states: Vec<PartyState>,
    seen: usize,
}

impl SelectiveRelay {
    pub fn new(relay_to: Option<Vec<PartyId>>) -> Self {
        Self {
            relay_to,
            states: Vec::new(),
            seen: 0,
        }
    }
}

impl Strategy for SelectiveRelay {
    fn name(&self) -> &str {
        "selective-relay"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Lieutenant {
            return Ok(());
        }
        if view.round == 0 {
            self.states = view
                .controlled_lieutenants()
                .map(|p| PartyState::new(p, Role::Lieutenant, false, view.list_of(p).expect("controlled").clone()))
                .collect();
        }
        for r in &view.received()[self.seen..] {
            if r.round != 0 || r.sender != COMMANDER {
                continue;
            }
            let Some(state) = self.states.iter_mut().find(|s| s.party_id == r.receiver) else {
                continue;
            };
            let me = state.party_id;
            let Some(relay) = dispatch(state, r.sender, 0, &r.message, view.params).relay else {
                continue;
            };
            let targets = match &self.relay_to {
                Some(t) => t.clone(),
                None => {
                    let others: Vec<_> = (1..view.params.n).filter(|&p| p != me).collect();
                    others[..others.len() / 2].to_vec()
                }
            };
            for to in targets {
                out.send(me, to, relay.clone());
            }
        }
        self.seen = view.received().len();
        Ok(())
    }
}

/// Per-position posterior of a forger that sees only coalition data.
///
/// The receiver's symbol has two probability levels at each position:
/// `low = (1 - pc) / d` on the symbols the forger knows are taken and
/// `low + pc / free` on the `free` others, `pc` being the posterior
/// probability that the position is correlated.
#[derive(Debug, Clone)]
struct Beliefs {
    d: usize,
    /// Coalition symbols, `width` per position, ascending by party id.
    coalition: Vec<Symbol>,
    width: usize,
    /// Known symbols, sorted and deduplicated: `known[bounds[i]..bounds[i + 1]]`.
    known: Vec<Symbol>,
    bounds: Vec<usize>,
    pc: Vec<f64>,
    /// Length of the longest pairwise-distinct prefix of the coalition symbols.
    distinct_prefix: Vec<usize>,
}

impl Beliefs {
    fn new(d: usize, width: usize) -> Self {
        Self {
            d,
            coalition: Vec::new(),
            width,
            known: Vec::new(),
            bounds: vec![0],
            pc: Vec::new(),
            distinct_prefix: Vec::new(),
        }
    }

    /// Appends a position. `known` must be sorted, deduplicated and contain
    /// every coalition symbol.
    fn push(&mut self, coalition: &[Symbol], known: &[Symbol], pc: f64) {
        debug_assert_eq!(coalition.len(), self.width);
        let prefix = (0..coalition.len())
            .find(|&k| coalition[..k].contains(&coalition[k]))
            .unwrap_or(coalition.len());
        self.coalition.extend_from_slice(coalition);
        self.known.extend_from_slice(known);
        self.bounds.push(self.known.len());
        self.pc.push(pc);
        self.distinct_prefix.push(prefix);
    }

    fn len(&self) -> usize {
        self.pc.len()
    }

    fn coalition(&self, i: usize) -> &[Symbol] {
        &self.coalition[i * self.width..(i + 1) * self.width]
    }

    fn known(&self, i: usize) -> &[Symbol] {
        &self.known[self.bounds[i]..self.bounds[i + 1]]
    }

    /// Receiver probability of a known symbol and of any other symbol.
    fn levels(&self, i: usize) -> (f64, f64) {
        let low = (1.0 - self.pc[i]) / self.d as f64;
        let free = self.d - self.known(i).len();
        let high = if free > 0 { low + self.pc[i] / free as f64 } else { low };
        (low, high)
    }

    /// Probability that the receiver accepts position `i` of a chain holding
    /// the first `real` coalition symbols and `fabricated` guesses, with the
    /// guesses on the least likely receiver symbols. `None` when no such
    /// chain is consistent.
    #[cfg(test)]
    fn pass(&self, i: usize, real: usize, v: Symbol, fabricated: usize) -> Option<f64> {
        if !self.chain_valid(i, real) || self.coalition(i)[..real].contains(&v) {
            return None;
        }
        let v_known = self.known(i).binary_search(&v).is_ok();
        self.pass_by_kind(i, real, v_known, fabricated)
    }

    fn chain_valid(&self, i: usize, real: usize) -> bool {
        real <= self.distinct_prefix[i]
    }

    /// Pass probability at position `i` for a value off the chain. It depends on
    /// the value only through whether the forger knows it is taken.
    fn pass_by_kind(&self, i: usize, real: usize, v_known: bool, fabricated: usize) -> Option<f64> {
        let known = self.known(i).len();
        let (low, high) = self.levels(i);
        let low_pool = (known - real).checked_sub(usize::from(v_known))?;
        let high_pool = (self.d - known).checked_sub(usize::from(!v_known))?;
        if fabricated > low_pool + high_pool {
            return None;
        }
        let from_low = fabricated.min(low_pool);
        let fail = if v_known { low } else { high } + from_low as f64 * low + (fabricated - from_low) as f64 * high;
        let pass = 1.0 - fail;
        (pass > 0.0).then_some(pass)
    }

    /// The guesses the pass probability assumes: known symbols off the chain
    /// first, then the others, each group ascending.
    fn guesses(&self, i: usize, real: usize, v: Symbol, fabricated: usize) -> Vec<Symbol> {
        let known = self.known(i);
        let chain = &self.coalition(i)[..real];
        let low = known.iter().copied().filter(|x| *x != v && !chain.contains(x));
        let high = (0..self.d as Symbol).filter(|x| *x != v && known.binary_search(x).is_err());
        low.chain(high).take(fabricated).collect()
    }
}

/// Receiver-symbol posterior at every position.
///
/// A position is correlated with prior `cp`. Coalition symbols that repeat
/// mean uncorrelated; a commander message covering the position means
/// correlated and adds the commander's value to the known symbols. With
/// `j` distinct known symbols the likelihood ratio of correlated against
/// uncorrelated is `1 / D_j`, `D_j` the chance that `j` uniform symbols are
/// distinct. A correlated receiver symbol is uniform off the known symbols.
fn beliefs(view: &AdversaryView<'_>, cp: f64) -> Beliefs {
    let d = view.params.alphabet.size();
    let lieutenants: Vec<&SymbolList> = view
        .controlled_lieutenants()
        .map(|p| view.list_of(p).expect("controlled"))
        .collect();
    let len = lieutenants.first().map_or(0, |l| l.len());

    let mut commander_value: Vec<Option<Symbol>> = vec![None; len];
    for r in view.received().iter().filter(|r| r.sender == COMMANDER && r.round == 0) {
        if let Some(p) = PositionSet::from_strictly_ascending(&r.message.support_positions) {
            for k in p.iter().filter(|&k| k <= len) {
                commander_value[k - 1] = Some(r.message.value);
            }
        }
    }
    let commander = commander_knowledge(view);

    let mut out = Beliefs::new(d, lieutenants.len());
    let mut coalition = Vec::with_capacity(lieutenants.len());
    let mut known = Vec::with_capacity(lieutenants.len() + 2);
    for i in 0..len {
        coalition.clear();
        coalition.extend(lieutenants.iter().map(|l| l.as_slice()[i]));
        known.clear();
        known.extend_from_slice(&coalition);
        known.sort_unstable();
        let distinct = known.windows(2).all(|w| w[0] != w[1]);
        known.dedup();
        let pc = if let Some((first, second, q)) = commander {
            known.extend([first.as_slice()[i], second.as_slice()[i]]);
            if q.contains(i + 1) {
                1.0
            } else {
                0.0
            }
        } else if !distinct {
            0.0
        } else if let Some(vc) = commander_value[i] {
            known.push(vc);
            1.0
        } else {
            let dj: f64 = (0..known.len()).map(|t| (d - t) as f64 / d as f64).product();
            cp / (cp + (1.0 - cp) * dj)
        };
        known.sort_unstable();
        known.dedup();
        out.push(&coalition, &known, pc);
    }
    out
}

/// Lieutenant coalition that fabricates `(P, (v, L))` for a value it never
/// received, choosing `v`, `P` and fabricated entries to maximize the
/// posterior chance that honest receivers accept. It sends to every other
/// lieutenant in every relay round, with the chain length that round needs,
/// using the coalition's real sublists first and fabricated ones after.
#[derive(Debug, Clone)]
pub struct Forging {
    target: Option<Symbol>,
    correlation_prob: f64,
    beliefs: Option<Beliefs>,
}

impl Forging {
    pub fn new(target: Option<Symbol>, correlation_prob: f64) -> Self {
        Self {
            target,
            correlation_prob,
            beliefs: None,
        }
    }
}

/// The value and `s` positions that maximize the product of pass
/// probabilities for one round, with the log of that product. Among equal
/// pass probabilities lower positions come first; among equal scores the
/// first candidate wins.
///
/// At each position the pass probability is one of two numbers, one for
/// values the forger knows are taken and one for the rest, so each value's
/// histogram over the distinct pass probabilities is a shared count plus
/// corrections at the known symbols.
fn best_forgery(
    b: &Beliefs,
    real: usize,
    fabricated: usize,
    s: usize,
    candidates: &[Symbol],
) -> Option<(f64, Symbol, Vec<usize>)> {
    const NONE: usize = usize::MAX;
    let mut levels: Vec<f64> = Vec::new();
    let mut level_of = |p: Option<f64>| match p {
        None => NONE,
        Some(p) => levels.iter().position(|&l| l == p).unwrap_or_else(|| {
            levels.push(p);
            levels.len() - 1
        }),
    };
    let mut kinds: Vec<(usize, usize)> = Vec::with_capacity(b.len());
    for i in 0..b.len() {
        kinds.push(if b.chain_valid(i, real) {
            (
                level_of(b.pass_by_kind(i, real, true, fabricated)),
                level_of(b.pass_by_kind(i, real, false, fabricated)),
            )
        } else {
            (NONE, NONE)
        });
    }

    let width = levels.len();
    let mut shared = vec![0i64; width];
    let mut correction = vec![0i64; b.d * width];
    for (i, &(known_level, unknown_level)) in kinds.iter().enumerate() {
        if unknown_level != NONE {
            shared[unknown_level] += 1;
        }
        if !b.chain_valid(i, real) {
            continue;
        }
        let chain = &b.coalition(i)[..real];
        for &x in b.known(i) {
            let row = &mut correction[x as usize * width..(x as usize + 1) * width];
            if unknown_level != NONE {
                row[unknown_level] -= 1;
            }
            if known_level != NONE && !chain.contains(&x) {
                row[known_level] += 1;
            }
        }
    }

    let mut order: Vec<usize> = (0..width).collect();
    order.sort_unstable_by(|&a, &c| levels[c].total_cmp(&levels[a]));
    // (score, value, cut-off pass probability, positions taken at the cut-off)
    let mut best: Option<(f64, Symbol, f64, usize)> = None;
    for &v in candidates {
        let row = &correction[v as usize * width..(v as usize + 1) * width];
        let (mut need, mut score, mut cutoff) = (s, 0.0, None);
        for &l in &order {
            let take = ((shared[l] + row[l]) as usize).min(need);
            score += take as f64 * levels[l].ln();
            need -= take;
            if need == 0 {
                cutoff = Some((levels[l], take));
                break;
            }
        }
        let Some((cut, quota)) = cutoff else {
            continue;
        };
        if best.is_none_or(|(b, ..)| score > b) {
            best = Some((score, v, cut, quota));
        }
    }

    let (score, v, cut, mut quota) = best?;
    let mut positions = Vec::with_capacity(s);
    for (i, &(known_level, unknown_level)) in kinds.iter().enumerate() {
        if !b.chain_valid(i, real) || b.coalition(i)[..real].contains(&v) {
            continue;
        }
        let level = if b.known(i).binary_search(&v).is_ok() {
            known_level
        } else {
            unknown_level
        };
        if level == NONE {
            continue;
        }
        let p = levels[level];
        if p > cut {
            positions.push(i);
        } else if p == cut && quota > 0 {
            quota -= 1;
            positions.push(i);
        }
    }
    Some((score, v, positions))
}

impl Strategy for Forging {
    fn name(&self) -> &str {
        "forging"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Lieutenant {
            return Ok(());
        }
        let lieutenants: Vec<PartyId> = view.controlled_lieutenants().collect();
        let Some(&sender) = lieutenants.first() else {
            return Ok(());
        };
        if view.round == 0 {
            return Ok(());
        }
        let beliefs = self
            .beliefs
            .get_or_insert_with(|| beliefs(view, self.correlation_prob));

        let entries = view.round;
        let real = lieutenants.len().min(entries);
        let fabricated = entries - real;
        let s = view.params.min_support;

        let received: Vec<Symbol> = view.received().iter().map(|r| r.message.value).collect();
        let candidates: Vec<Symbol> = match self.target {
            Some(v) => vec![v],
            None => view
                .params
                .alphabet
                .symbols()
                .filter(|v| !received.contains(v))
                .collect(),
        };

        let Some((_, v, positions)) = best_forgery(beliefs, real, fabricated, s, &candidates) else {
            return Ok(());
        };

        let support = PositionSet::new(positions.iter().map(|i| i + 1)).expect("positions are 1-based");
        let mut chain: Vec<SymbolList> = lieutenants[..real]
            .iter()
            .map(|&p| extract_sublist(view.list_of(p).expect("controlled"), &support).expect("in range"))
            .collect();
        let mut fake = vec![SymbolList::new(Vec::with_capacity(s)); fabricated];
        for &i in &positions {
            for (list, x) in fake.iter_mut().zip(beliefs.guesses(i, real, v, fabricated)) {
                list.push(x);
            }
        }
        chain.extend(fake);

        let msg = AgreementMessage::new(&support, v, chain);
        for to in view.other_lieutenants() {
            out.send(sender, to, msg.clone());
        }
        Ok(())
    }
}

/// Sends one valid order to some lieutenants and another to the rest.
#[derive(Debug, Clone)]
pub struct EquivocatingCommander {
    pub v1: Symbol,
    pub v2: Option<Symbol>,
    pub split: Option<usize>,
}

impl Strategy for EquivocatingCommander {
    fn name(&self) -> &str {
        "equivocating"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Commander {
            return Ok(());
        }
        let Some((list, _, q)) = commander_knowledge(view) else {
            return Ok(());
        };
        if view.round != 0 {
            return Ok(());
        }
        let s = view.params.min_support;
        let v2 = self.v2.unwrap_or_else(|| next_value(self.v1, view));
        let m1 = AgreementMessage::new(&select_support_positions(list, q, self.v1, s)?, self.v1, Vec::new());
        let m2 = AgreementMessage::new(&select_support_positions(list, q, v2, s)?, v2, Vec::new());
        let lieutenants = view.params.n - 1;
        let split = self.split.unwrap_or(lieutenants.div_ceil(2)).min(lieutenants);
        for to in 1..view.params.n {
            let msg = if to <= split { &m1 } else { &m2 };
            out.send(COMMANDER, to, msg.clone());
        }
        Ok(())
    }
}

/// Commander that sends a consistent order to some lieutenants and stays
/// silent towards the others.
#[derive(Debug, Clone)]
pub struct SelectiveSend {
    pub v: Symbol,
    pub send_to: Option<Vec<PartyId>>,
}

impl Strategy for SelectiveSend {
    fn name(&self) -> &str {
        "selective-send"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Commander || view.round != 0 {
            return Ok(());
        }
        let Some((list, _, q)) = commander_knowledge(view) else {
            return Ok(());
        };
        let support = select_support_positions(list, q, self.v, view.params.min_support)?;
        let msg = AgreementMessage::new(&support, self.v, Vec::new());
        let lieutenants = view.params.n - 1;
        let default: Vec<PartyId> = (1..=lieutenants.div_ceil(2)).collect();
        for &to in self.send_to.as_ref().unwrap_or(&default) {
            out.send(COMMANDER, to, msg.clone());
        }
        Ok(())
    }
}

/// Where a forged-support commander takes its extra position from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaddingKind {
    /// An uncorrelated position where the commander's list holds `v`.
    Uncorrelated,
    /// A correlated position where neither commander particle nor any
    /// coalition lieutenant holds `v`, so some honest lieutenant may.
    ForeignCorrelated,
}

/// Sends the same `P` to every lieutenant: the genuine support of `v` plus
/// one position that is not genuine support.
#[derive(Debug, Clone)]
pub struct ForgedSupportCommander {
    pub v: Symbol,
    pub padding: PaddingKind,
}

impl Strategy for ForgedSupportCommander {
    fn name(&self) -> &str {
        match self.padding {
            PaddingKind::Uncorrelated => "forged-pad-uncorrelated",
            PaddingKind::ForeignCorrelated => "forged-foreign-position",
        }
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Commander {
            return Ok(());
        }
        let Some((first, second, q)) = commander_knowledge(view) else {
            return Ok(());
        };
        if view.round != 0 {
            return Ok(());
        }
        let v = self.v;
        let genuine = select_support_positions(first, q, v, view.params.min_support.saturating_sub(1))?;
        let coalition: Vec<&SymbolList> = view
            .controlled_lieutenants()
            .map(|p| view.list_of(p).expect("controlled"))
            .collect();
        let pad = (1..=first.len()).find(|&k| {
            let c = first.as_slice()[k - 1];
            match self.padding {
                PaddingKind::Uncorrelated => !q.contains(k) && c == v,
                PaddingKind::ForeignCorrelated => {
                    q.contains(k)
                        && c != v
                        && second.as_slice()[k - 1] != v
                        && coalition.iter().all(|l| l.as_slice()[k - 1] != v)
                }
            }
        });
        let support = match pad {
            Some(k) => genuine.union(&PositionSet::new([k]).expect("1-based")),
            None => genuine,
        };
        let msg = AgreementMessage::new(&support, v, Vec::new());
        send_to_all_lieutenants(out, COMMANDER, view.params.n, &msg);
        Ok(())
    }
}

/// Commander plus lieutenant coalition: an honest-looking round 0 with
/// `v1`, then a message for `v2` delivered to one honest lieutenant in the
/// final round, with the coalition's sublists and fabricated ones filling
/// the `m + 1` chain entries. The fabricated symbols avoid everything the
/// coalition knows, which is the best it can do without the honest lists.
#[derive(Debug, Clone)]
pub struct LateInjection {
    pub v1: Symbol,
    pub v2: Option<Symbol>,
}

impl Strategy for LateInjection {
    fn name(&self) -> &str {
        "late-injection"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        if view.role != Role::Commander {
            return Ok(());
        }
        let Some((first, second, q)) = commander_knowledge(view) else {
            return Ok(());
        };
        let params = view.params;
        let s = params.min_support;
        if view.round == 0 {
            let support = select_support_positions(first, q, self.v1, s)?;
            let msg = AgreementMessage::new(&support, self.v1, Vec::new());
            send_to_all_lieutenants(out, COMMANDER, params.n, &msg);
            return Ok(());
        }
        if view.round != params.final_round() {
            return Ok(());
        }
        let coalition: Vec<PartyId> = view.controlled_lieutenants().collect();
        let (Some(&sender), Some(target)) = (coalition.first(), view.other_lieutenants().next()) else {
            return Ok(());
        };
        let v2 = self.v2.unwrap_or_else(|| next_value(self.v1, view));
        let entries = params.final_round();
        let real = coalition.len().min(entries);
        let fabricated = entries - real;

        let all = select_support_positions(first, q, v2, s)?;
        let support = PositionSet::new(all.iter().take(s)).expect("1-based");
        let mut chain: Vec<SymbolList> = coalition[..real]
            .iter()
            .map(|&p| extract_sublist(view.list_of(p).expect("controlled"), &support).expect("in range"))
            .collect();
        let mut fake = vec![SymbolList::new(Vec::with_capacity(s)); fabricated];
        for k in support.iter() {
            let mut known = vec![first.as_slice()[k - 1], second.as_slice()[k - 1]];
            known.extend(coalition.iter().map(|&p| view.list_of(p).expect("controlled").as_slice()[k - 1]));
            let free: Vec<Symbol> = params.alphabet.symbols().filter(|x| !known.contains(x)).collect();
            if free.len() < fabricated {
                return Ok(());
            }
            for (list, &x) in fake.iter_mut().zip(&free) {
                list.push(x);
            }
        }
        chain.extend(fake);
        out.send(sender, target, AgreementMessage::new(&support, v2, chain));
        Ok(())
    }
}
