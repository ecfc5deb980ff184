//! Monte Carlo counterpart of the forgery oracle.
//!
//! One trial runs an honest distribution, hands the forger every list except
//! the last lieutenant's (and not `Q`), lets it build the message that is
//! most likely to pass, and asks the receiver's round-1 handler whether it
//! accepts. The forger is Bayes-optimal for that view, so the acceptance
//! rate converges to [`crate::lists::forgery::forgery_oracle`].

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::agreement::{handle_round_message, AgreementMessage, PartyState, ProtocolParams, Role};
use crate::lists::{Alphabet, PositionSet, Symbol, SymbolList};
use crate::qsd::{distribute_with_rng, DistributionConfig};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgeryExperiment {
    pub n: usize,
    pub alphabet: Alphabet,
    pub list_length: usize,
    pub support_size: usize,
    pub correlation_prob: f64,
}

/// Runs one forgery attempt; `true` when the receiver accepts.
pub fn forgery_trial(exp: &ForgeryExperiment, rng: &mut SimRng) -> Result<bool, SimError> {
    let config = DistributionConfig {
        n: exp.n,
        alphabet: exp.alphabet,
        list_length: exp.list_length,
        correlation_prob: exp.correlation_prob,
        decoy_count: 0,
        decoys_correlated_only: false,
        seed: 0,
    };
    let outcome = distribute_with_rng(&config, None, rng).map_err(|e| SimError::Config(e.to_string()))?;
    let params = ProtocolParams {
        n: exp.n,
        m: 1,
        alphabet: exp.alphabet,
        min_support: exp.support_size,
        default_decision: 0,
    };
    params.validate()?;
    if exp.support_size > exp.list_length {
        return Ok(false);
    }

    let d = exp.alphabet.size();
    let known_parties = exp.n - 1;
    let cp = exp.correlation_prob;
    let distinct_prob: f64 = (0..known_parties).map(|t| (d - t) as f64 / d as f64).product();

    // Receiver-symbol posterior per position.
    let receiver_prob: Vec<Vec<f64>> = (0..exp.list_length)
        .map(|i| {
            let mut known: Vec<Symbol> = outcome.lists[..known_parties].iter().map(|l| l.as_slice()[i]).collect();
            known.sort_unstable();
            let distinct = known.windows(2).all(|w| w[0] != w[1]);
            let pc = if distinct {
                cp / (cp + (1.0 - cp) * distinct_prob)
            } else {
                0.0
            };
            let free = (d - known_parties) as f64;
            (0..d as Symbol)
                .map(|x| {
                    let corr = if distinct && known.binary_search(&x).is_err() {
                        pc / free
                    } else {
                        0.0
                    };
                    corr + (1.0 - pc) / d as f64
                })
                .collect()
        })
        .collect();

    // Best fabricated symbol and pass probability per (position, v).
    let best_entry = |probs: &[f64], v: Symbol| -> (f64, Symbol) {
        (0..d as Symbol)
            .filter(|&f| f != v)
            .map(|f| (1.0 - probs[v as usize] - probs[f as usize], f))
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
    };

    let s = exp.support_size;
    let mut best: Option<(f64, Symbol, Vec<usize>)> = None;
    for v in exp.alphabet.symbols() {
        let mut scored: Vec<(f64, usize)> = receiver_prob
            .iter()
            .enumerate()
            .map(|(i, p)| (best_entry(p, v).0, i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(s);
        let score: f64 = scored.iter().map(|(p, _)| p.max(0.0).ln()).sum();
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, v, scored.into_iter().map(|(_, i)| i).collect()));
        }
    }
    let (_, v, mut positions) = best.expect("alphabet is never empty");
    positions.sort_unstable();

    let fabricated: SymbolList = positions.iter().map(|&i| best_entry(&receiver_prob[i], v).1).collect();
    let support = PositionSet::new(positions.iter().map(|i| i + 1)).expect("1-based");
    let msg = AgreementMessage::new(&support, v, vec![fabricated]);

    let receiver = exp.n - 1;
    let mut state = PartyState::new(receiver, Role::Lieutenant, true, outcome.lists[receiver].clone());
    Ok(handle_round_message(&mut state, &msg, 1, &params).accepted())
}
