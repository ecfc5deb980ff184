//! Detectable Byzantine agreement from Q-correlated lists: list algebra, a
//! simulated quantum source device, the QBA(m) agreement rules, a
//! deterministic adversarial network simulator and a campaign harness.

pub mod agreement;
pub mod harness;
pub mod lists;
pub mod qsd;
pub mod simnet;

/// Generator used by every simulation path.
pub type SimRng = rand_chacha::ChaCha20Rng;

/// Parties are numbered `0..n`; the commander is party 0.
pub type PartyId = usize;

pub const COMMANDER: PartyId = 0;
