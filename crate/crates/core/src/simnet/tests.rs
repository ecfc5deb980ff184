use rand::SeedableRng;

use super::*;
use crate::lists::Alphabet;
use crate::qsd::{distribute_with_rng, DistributionConfig};

struct Case {
    n: usize,
    m: usize,
    corrupt: Vec<PartyId>,
    commander: StrategySpec,
    lieutenant: StrategySpec,
    order: Symbol,
    relay_rounds: Option<usize>,
    seed: u64,
    list_length: usize,
    min_support: usize,
}

impl Case {
    fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            corrupt: Vec::new(),
            commander: StrategySpec::Honest,
            lieutenant: StrategySpec::Honest,
            order: 2,
            relay_rounds: None,
            seed: 11,
            list_length: 240,
            min_support: 5,
        }
    }

    fn setup(&self) -> ProtocolSetup {
        ProtocolSetup {
            params: ProtocolParams {
                n: self.n,
                m: self.m,
                alphabet: Alphabet::new(self.n as Symbol).unwrap(),
                min_support: self.min_support,
                default_decision: 0,
            },
            corrupt: self.corrupt.iter().copied().collect(),
            commander_order: self.order,
            relay_rounds: self.relay_rounds,
        }
    }

    fn outcome(&self, rng: &mut SimRng) -> DistributionOutcome {
        let mut config = DistributionConfig::new(self.n, Alphabet::new(self.n as Symbol).unwrap(), self.list_length, 0);
        config.decoy_count = 0;
        distribute_with_rng(&config, None, rng).unwrap()
    }

    fn run_with(&self, lieutenant: &mut dyn Strategy) -> (ProtocolResult, RunTrace) {
        let mut rng = SimRng::seed_from_u64(self.seed);
        let outcome = self.outcome(&mut rng);
        let mut commander = self.commander.build(self.order, 0.5);
        let mut events = vec![TraceEvent::Distribution {
            outcome: outcome.clone(),
        }];
        let result = run_protocol(&outcome, &self.setup(), commander.as_mut(), lieutenant, &mut rng, &mut events).unwrap();
        (result, RunTrace { events })
    }

    fn run(&self) -> (ProtocolResult, RunTrace) {
        let mut lieutenant = self.lieutenant.build(self.order, 0.5);
        self.run_with(lieutenant.as_mut())
    }
}

fn accepts(trace: &RunTrace) -> Vec<(usize, PartyId)> {
    trace
        .events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Deliver {
                round,
                receiver,
                outcome: DeliveryOutcome::Accepted,
                ..
            } => Some((*round, *receiver)),
            _ => None,
        })
        .collect()
}

#[test]
fn all_honest() {
    let case = Case::new(4, 1);
    let (result, trace) = case.run();
    assert!(result.all_decided(2));
    assert_eq!(result.commander, Some(2));
    assert!(accepts(&trace).iter().all(|&(r, _)| r == 0));
    let relays = trace
        .events
        .iter()
        .filter(|e| matches!(e, TraceEvent::Send { round: 1, .. }))
        .count();
    // Each of the three lieutenants relays once to the two others.
    assert_eq!(relays, 6);
    validate_trace(&trace).unwrap();
}

#[test]
fn silent_lieutenant_does_not_stop_validity() {
    let mut case = Case::new(4, 1);
    case.corrupt = vec![3];
    case.lieutenant = StrategySpec::Silent;
    let (result, _) = case.run();
    assert_eq!(result.lieutenants.len(), 2);
    assert!(result.all_decided(2));
}

#[test]
fn equivocation_converges_to_default() {
    let mut case = Case::new(4, 2);
    case.corrupt = vec![0];
    case.commander = StrategySpec::Equivocating {
        v1: Some(2),
        v2: Some(3),
        split: None,
    };
    let (result, trace) = case.run();
    assert!(result.agreement());
    assert!(result.all_decided(0));
    for p in &result.lieutenants {
        let mut v = p.accepted.clone();
        v.sort_unstable();
        assert_eq!(v, vec![2, 3]);
    }
    validate_trace(&trace).unwrap();

    // Without relay rounds the split is visible.
    case.relay_rounds = Some(0);
    let (result, _) = case.run();
    assert!(!result.agreement());
}

#[test]
fn equivocation_with_selective_relay() {
    let mut case = Case::new(4, 2);
    case.corrupt = vec![0, 1];
    case.commander = StrategySpec::Equivocating {
        v1: Some(2),
        v2: Some(3),
        split: Some(1),
    };
    case.lieutenant = StrategySpec::SelectiveRelay { relay_to: Some(vec![2]) };
    let (result, trace) = case.run();
    assert!(result.agreement());
    validate_trace(&trace).unwrap();
}

#[test]
fn selective_relay_with_direct_delivery() {
    let mut case = Case::new(3, 1);
    case.corrupt = vec![1];
    case.lieutenant = StrategySpec::SelectiveRelay { relay_to: None };
    let (result, _) = case.run();
    assert!(result.all_decided(2));
}

#[test]
fn silent_commander_means_default() {
    let mut case = Case::new(4, 1);
    case.corrupt = vec![0];
    case.commander = StrategySpec::Silent;
    let (result, trace) = case.run();
    assert!(result.all_decided(0));
    let absences = trace
        .events
        .iter()
        .filter(|e| matches!(e, TraceEvent::Absent { .. }))
        .count();
    assert_eq!(absences, 3);
}

#[test]
fn sole_honest_lieutenant() {
    let mut case = Case::new(5, 4);
    case.corrupt = vec![1, 2, 3];
    case.lieutenant = StrategySpec::Silent;
    let (result, _) = case.run();
    assert_eq!(result.lieutenants.len(), 1);
    assert!(result.all_decided(2));
}

#[test]
fn forged_foreign_position_splits_lieutenants() {
    // With w = n every correlated position uses every symbol, so the padded
    // position puts v in some honest list. That lieutenant rejects both the
    // commander's message and every relay.
    let mut case = Case::new(4, 1);
    case.corrupt = vec![0];
    case.commander = StrategySpec::ForgedForeignPosition { v: Some(2) };
    let (result, trace) = case.run();
    validate_trace(&trace).unwrap();
    assert!(!result.agreement());
    let empty = result.lieutenants.iter().filter(|p| p.accepted.is_empty()).count();
    assert_eq!(empty, 1);
}

#[test]
fn honest_strategy_matches_honest_parties() {
    let sends = |trace: &RunTrace| -> Vec<TraceEvent> {
        trace
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Send { .. }))
            .cloned()
            .collect()
    };
    let honest = Case::new(4, 2);
    let mut corrupt = Case::new(4, 2);
    corrupt.corrupt = vec![0, 2];
    let (a, ta) = honest.run();
    let (b, tb) = corrupt.run();
    assert_eq!(sends(&ta), sends(&tb));
    assert!(a.all_decided(2) && b.all_decided(2));
}

#[test]
fn forger_is_rejected() {
    let mut case = Case::new(4, 2);
    case.corrupt = vec![1, 2];
    case.lieutenant = StrategySpec::Forging { target_value: None };
    // Short support makes forgeries easy; 100 positions make them hopeless.
    case.list_length = 2000;
    case.min_support = 100;
    for seed in 0..20 {
        case.seed = seed;
        let (result, trace) = case.run();
        assert!(result.all_decided(2), "seed {seed}");
        validate_trace(&trace).unwrap();
        let forged = trace.events.iter().any(|e| {
            matches!(e, TraceEvent::Send { sender: 1, message, .. } if message.value != 2)
        });
        assert!(forged);
    }
}

#[test]
fn same_seed_same_trace() {
    let mut case = Case::new(5, 2);
    case.corrupt = vec![0, 3];
    case.commander = StrategySpec::LateInjection { v2: None };
    case.lieutenant = StrategySpec::Forging { target_value: None };
    let (_, a) = case.run();
    let (_, b) = case.run();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    assert_eq!(RunTrace::from_jsonl(&a.to_jsonl()).unwrap(), a);
}

/// Tries to impersonate an honest party and to send as itself.
struct Impersonator;

impl Strategy for Impersonator {
    fn name(&self) -> &str {
        "impersonator"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        let msg = AgreementMessage {
            support_positions: vec![1],
            value: 1,
            chain: Vec::new(),
        };
        if view.round == 1 {
            assert!(!out.send(COMMANDER, 2, msg.clone()));
            assert!(!out.send(2, 3, msg.clone()));
            assert!(out.send(1, 2, msg));
        }
        Ok(())
    }
}

#[test]
fn senders_cannot_be_spoofed() {
    let mut case = Case::new(4, 1);
    case.corrupt = vec![1];
    let (_, trace) = case.run_with(&mut Impersonator);
    let blocked = trace
        .events
        .iter()
        .filter(|e| matches!(e, TraceEvent::Blocked { .. }))
        .count();
    assert_eq!(blocked, 2);
    for e in &trace.events {
        if let TraceEvent::Deliver { round: 1, sender, message, .. } = e {
            if message.value == 1 {
                assert_eq!(*sender, 1);
            }
        }
    }
    validate_trace(&trace).unwrap();
}

/// Sends every list it can see, at full length, to every lieutenant.
struct Spy {
    seen_lists: Vec<SymbolList>,
}

impl Strategy for Spy {
    fn name(&self) -> &str {
        "spy"
    }

    fn act(&mut self, view: &AdversaryView<'_>, out: &mut Outbox<'_>, _: &mut SimRng) -> Result<(), SimError> {
        assert!(view.lists().iter().all(|(p, _)| view.controlled().contains(p)));
        assert!(view.inferred_q().is_none() && view.commander_second_list().is_none());
        let mut chain: Vec<SymbolList> = view.lists().iter().map(|(_, l)| l.clone()).collect();
        for r in view.received() {
            chain.extend(r.message.chain.iter().cloned());
        }
        self.seen_lists.extend(chain.iter().cloned());
        let len = chain[0].len();
        let msg = AgreementMessage {
            support_positions: (1..=len).collect(),
            value: 0,
            chain,
        };
        let me = view.controlled_lieutenants().next().unwrap();
        for to in view.other_lieutenants() {
            out.send(me, to, msg.clone());
        }
        Ok(())
    }
}

#[test]
fn view_holds_only_coalition_data() {
    let mut case = Case::new(4, 2);
    case.corrupt = vec![1];
    let mut spy = Spy { seen_lists: Vec::new() };
    let (_, trace) = case.run_with(&mut spy);
    let TraceEvent::Distribution { outcome } = &trace.events[0] else {
        unreachable!()
    };
    // Honest lieutenants' full lists never leak; the spy only ever sees
    // its own list and P-sublists relayed to it.
    for honest in [2, 3] {
        assert!(!spy.seen_lists.contains(&outcome.lists[honest]));
    }
    assert!(!spy.seen_lists.contains(&outcome.lists[0]));
    for e in &trace.events {
        if let TraceEvent::Send { sender: 1, message, .. } = e {
            for entry in &message.chain {
                assert!(entry.len() < 240 || *entry == outcome.lists[1], "full-length foreign list leaked");
            }
        }
    }
}

#[test]
fn order_withheld_from_some_still_agrees() {
    let mut case = Case::new(5, 2);
    case.corrupt = vec![0];
    case.commander = StrategySpec::SelectiveSend { send_to: None };
    let (result, trace) = case.run();
    validate_trace(&trace).unwrap();
    assert!(result.all_decided(2));
    // Lieutenants 3 and 4 only ever hear the order through relays.
    let late: Vec<_> = accepts(&trace).into_iter().filter(|&(_, p)| p >= 3).collect();
    assert_eq!(late, vec![(1, 3), (1, 4)]);
}
