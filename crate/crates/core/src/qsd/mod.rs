//! Simulated quantum source device.
//!
//! Each position of the lists is either correlated or not. Correlated
//! positions are drawn from the `(w+1)`-qudit state whose computational
//! outcomes are pairwise distinct; everything else comes from independent
//! uniform qudits, with the commander receiving an equal pair. Decoys in
//! random bases are mixed into every party's particle stream and checked
//! before anyone measures their data.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lists::{Alphabet, PositionSet, Symbol, SymbolList};
use crate::{PartyId, SimRng, COMMANDER};

pub mod channel;
pub mod statevector;

use channel::{Basis, ChannelAdversary, Particle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QsdError {
    #[error("invalid distribution config: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("dense state with {subsystems} qudits of dimension {dimension} is too large")]
    TooLarge { dimension: usize, subsystems: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    /// Number of parties, commander included.
    pub n: usize,
    pub alphabet: Alphabet,
    pub list_length: usize,
    pub correlation_prob: f64,
    /// Decoys per party channel.
    pub decoy_count: usize,
    /// Only place decoys next to correlated-position particles.
    #[serde(default)]
    pub decoys_correlated_only: bool,
    pub seed: u64,
}

impl DistributionConfig {
    /// Defaults: correlation probability 1/2 and one decoy per list position.
    pub fn new(n: usize, alphabet: Alphabet, list_length: usize, seed: u64) -> Self {
        Self {
            n,
            alphabet,
            list_length,
            correlation_prob: 0.5,
            decoy_count: list_length,
            decoys_correlated_only: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), QsdError> {
        if self.n < 2 {
            return Err(QsdError::Config(format!("need at least 2 parties, got {}", self.n)));
        }
        if (self.alphabet.w() as usize) < self.n {
            return Err(QsdError::Config(format!(
                "alphabet w = {} must be at least the number of parties {}",
                self.alphabet.w(),
                self.n
            )));
        }
        if !(self.correlation_prob > 0.0 && self.correlation_prob < 1.0) {
            return Err(QsdError::Config(format!(
                "correlation probability must lie in (0, 1), got {}",
                self.correlation_prob
            )));
        }
        if self.list_length == 0 {
            return Err(QsdError::Config("list length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Symbols measured at one position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionSample {
    /// One symbol per party; index 0 is the commander's list symbol (the
    /// first of its pair).
    pub party_symbols: Vec<Symbol>,
    pub commander_pair: (Symbol, Symbol),
}

/// Uncorrelated position: independent uniform symbols for the lieutenants,
/// an equal uniform pair for the commander.
pub fn sample_uncorrelated_position(n: usize, alphabet: Alphabet, rng: &mut SimRng) -> PositionSample {
    let a = rng.random_range(alphabet.symbols());
    let mut party_symbols = Vec::with_capacity(n);
    party_symbols.push(a);
    party_symbols.extend((1..n).map(|_| rng.random_range(alphabet.symbols())));
    PositionSample {
        party_symbols,
        commander_pair: (a, a),
    }
}

/// Correlated position: measure the `(w+1)`-qudit shifted state with
/// distinct offsets and hand `n + 1` of its particles to the parties.
pub fn sample_correlated_position(
    n: usize,
    alphabet: Alphabet,
    rng: &mut SimRng,
) -> Result<PositionSample, QsdError> {
    let d = alphabet.size();
    if d < n + 1 {
        return Err(QsdError::Config(format!(
            "correlated positions need w >= n (w = {}, n = {n})",
            alphabet.w()
        )));
    }
    let j = rng.random_range(0..d);
    // Offset 0 for the first particle, a random arrangement of 1..=w for the rest.
    let mut offsets: Vec<usize> = (0..d).collect();
    offsets[1..].shuffle(rng);
    // Which particle each delivered slot receives: commander first, commander
    // second, then lieutenants 1..n-1. Undelivered particles are dropped.
    let delivered = index::sample(rng, d, n + 1);
    let symbol = |slot: usize| ((j + offsets[delivered.index(slot)]) % d) as Symbol;

    let commander_pair = (symbol(0), symbol(1));
    let mut party_symbols = Vec::with_capacity(n);
    party_symbols.push(commander_pair.0);
    party_symbols.extend((2..=n).map(symbol));
    Ok(PositionSample {
        party_symbols,
        commander_pair,
    })
}

/// One decoy particle's life cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    pub channel: PartyId,
    /// Index in the channel's particle stream.
    pub insertion_index: usize,
    pub basis: Basis,
    pub prepared_symbol: Symbol,
    pub measured_symbol: Option<Symbol>,
}

/// True iff every decoy came back as prepared. A record that was never
/// measured counts as tampered.
pub fn check_decoys(records: &[DecoyRecord]) -> bool {
    records
        .iter()
        .all(|r| r.measured_symbol == Some(r.prepared_symbol))
}

/// Positions whose commander pair is unequal.
pub fn infer_correlated_positions(commander_pairs: &[(Symbol, Symbol)]) -> PositionSet {
    commander_pairs
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AbortReason {
    TamperingDetected { mismatched_decoys: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyStats {
    pub total: usize,
    pub mismatched: usize,
}

/// Result of one run of the distribution procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionOutcome {
    /// One list per party, commander first. Empty when aborted: nobody
    /// measures their data once tampering is detected.
    pub lists: Vec<SymbolList>,
    /// Ground truth, known only to the simulator.
    pub true_q: PositionSet,
    pub commander_pairs: Vec<(Symbol, Symbol)>,
    /// The commander's view of the correlated positions.
    pub inferred_q: PositionSet,
    pub abort: Option<AbortReason>,
    pub decoys: DecoyStats,
    #[serde(skip)]
    pub decoy_records: Vec<DecoyRecord>,
}

impl DistributionOutcome {
    pub fn is_aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// The commander's second-particle symbols as a list.
    pub fn commander_second_list(&self) -> SymbolList {
        self.commander_pairs.iter().map(|&(_, b)| b).collect()
    }
}

/// A channel adversary together with the party channels it sits on.
pub struct ChannelAttack<'a> {
    pub adversary: &'a mut dyn ChannelAdversary,
    pub channels: Vec<PartyId>,
}

/// Runs the distribution procedure with a generator seeded from `config.seed`.
pub fn distribute(
    config: &DistributionConfig,
    attack: Option<ChannelAttack<'_>>,
) -> Result<DistributionOutcome, QsdError> {
    let mut rng = SimRng::seed_from_u64(config.seed);
    distribute_with_rng(config, attack, &mut rng)
}

enum Slot {
    Data { second: bool },
    Decoy(usize),
}

/// Runs the distribution procedure drawing from `rng`.
pub fn distribute_with_rng(
    config: &DistributionConfig,
    mut attack: Option<ChannelAttack<'_>>,
    rng: &mut SimRng,
) -> Result<DistributionOutcome, QsdError> {
    config.validate()?;
    let n = config.n;
    let alphabet = config.alphabet;
    let len = config.list_length;

    // Preparation: sample every position's joint outcome up front.
    let mut correlated = Vec::with_capacity(len);
    let mut samples = Vec::with_capacity(len);
    for _ in 0..len {
        let c = rng.random_bool(config.correlation_prob);
        samples.push(if c {
            sample_correlated_position(n, alphabet, rng)?
        } else {
            sample_uncorrelated_position(n, alphabet, rng)
        });
        correlated.push(c);
    }

    let mut decoy_records = Vec::new();
    let mut measured: Vec<Vec<Symbol>> = vec![Vec::with_capacity(len); n];
    let mut commander_second = Vec::with_capacity(len);

    for party in 0..n {
        let per_position = if party == COMMANDER { 2 } else { 1 };
        let data_len = len * per_position;
        // Stream layout: which stream indices hold decoys.
        let is_decoy: Vec<bool> = if config.decoys_correlated_only {
            // Each decoy precedes a random particle of a correlated position.
            let anchors: Vec<usize> = (0..data_len)
                .filter(|&i| correlated[i / per_position])
                .collect();
            let mut before = vec![0usize; data_len];
            if !anchors.is_empty() {
                for _ in 0..config.decoy_count {
                    before[anchors[rng.random_range(0..anchors.len())]] += 1;
                }
            }
            before
                .into_iter()
                .flat_map(|k| std::iter::repeat_n(true, k).chain(std::iter::once(false)))
                .collect()
        } else {
            let stream_len = data_len + config.decoy_count;
            let mut v = vec![false; stream_len];
            for i in index::sample(rng, stream_len, config.decoy_count) {
                v[i] = true;
            }
            v
        };

        let mut slots = Vec::with_capacity(is_decoy.len());
        let mut stream = Vec::with_capacity(is_decoy.len());
        let mut next_data = 0;
        for (stream_index, &decoy) in is_decoy.iter().enumerate() {
            if decoy {
                let basis = Basis::random(rng);
                let symbol = rng.random_range(alphabet.symbols());
                slots.push(Slot::Decoy(decoy_records.len()));
                decoy_records.push(DecoyRecord {
                    channel: party,
                    insertion_index: stream_index,
                    basis,
                    prepared_symbol: symbol,
                    measured_symbol: None,
                });
                stream.push(Particle::prepare(basis, symbol));
            } else {
                let position = next_data / per_position;
                let second = party == COMMANDER && next_data % 2 == 1;
                next_data += 1;
                let sample = &samples[position];
                let outcome = match (party == COMMANDER, second) {
                    (true, false) => sample.commander_pair.0,
                    (true, true) => sample.commander_pair.1,
                    (false, _) => sample.party_symbols[party],
                };
                // Uncorrelated lieutenants get product states; everything
                // else is part of an entangled state.
                let particle = if correlated[position] || party == COMMANDER {
                    Particle::entangled(outcome)
                } else {
                    Particle::uniform(outcome)
                };
                slots.push(Slot::Data { second });
                stream.push(particle);
            }
        }

        // Transport.
        if let Some(att) = attack.as_mut() {
            if att.channels.contains(&party) {
                stream = stream
                    .into_iter()
                    .map(|p| att.adversary.transport(p, alphabet, rng))
                    .collect();
            }
        }

        // Decoy positions and bases are announced; the party measures decoys
        // as told and everything else in the computational basis.
        for (slot, particle) in slots.iter().zip(stream.iter_mut()) {
            match *slot {
                Slot::Decoy(r) => {
                    let rec = &mut decoy_records[r];
                    rec.measured_symbol = Some(particle.measure(rec.basis, alphabet, rng));
                }
                Slot::Data { second } => {
                    let s = particle.measure(Basis::Computational, alphabet, rng);
                    if second {
                        commander_second.push(s);
                    } else {
                        measured[party].push(s);
                    }
                }
            }
        }
    }

    let mismatched = decoy_records
        .iter()
        .filter(|r| r.measured_symbol != Some(r.prepared_symbol))
        .count();
    let decoys = DecoyStats {
        total: decoy_records.len(),
        mismatched,
    };
    let true_q: PositionSet = correlated
        .iter()
        .enumerate()
        .filter(|(_, &c)| c)
        .map(|(i, _)| i + 1)
        .collect();

    if !check_decoys(&decoy_records) {
        return Ok(DistributionOutcome {
            lists: Vec::new(),
            true_q,
            commander_pairs: Vec::new(),
            inferred_q: PositionSet::empty(),
            abort: Some(AbortReason::TamperingDetected {
                mismatched_decoys: mismatched,
            }),
            decoys,
            decoy_records,
        });
    }

    let commander_pairs: Vec<(Symbol, Symbol)> = measured[COMMANDER]
        .iter()
        .copied()
        .zip(commander_second)
        .collect();
    let inferred_q = infer_correlated_positions(&commander_pairs);
    Ok(DistributionOutcome {
        lists: measured.into_iter().map(SymbolList::new).collect(),
        true_q,
        commander_pairs,
        inferred_q,
        abort: None,
        decoys,
        decoy_records,
    })
}
