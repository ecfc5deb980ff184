//! Particles in transit and the quantum-channel adversaries that may touch
//! them.
//!
//! A [`Particle`] hides its state. The only things anyone outside this module
//! can do with it are measure it in one of the two bases or prepare a fresh
//! basis state, which is all an intercept-resend attacker can do.
//!
//! Data particles carry the computational-basis outcome the source device
//! sampled for the whole entangled state. That is exact for computational
//! measurements because all such measurements commute. A conjugate-basis
//! measurement of an entangled member leaves the partners' computational
//! marginals untouched and randomizes the measured particle, which is also
//! what happens here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lists::{Alphabet, Symbol};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Computational,
    Fourier,
}

impl Basis {
    pub fn random(rng: &mut SimRng) -> Self {
        if rng.random_bool(0.5) {
            Basis::Fourier
        } else {
            Basis::Computational
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum State {
    /// Product state `F|0>`; the stored outcome is its pre-sampled
    /// computational measurement.
    Uniform(Symbol),
    /// Member of an entangled state with a jointly pre-sampled outcome.
    Entangled(Symbol),
    /// `|x>` or `F|x>`.
    Pure(Basis, Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Particle {
    state: State,
}

impl Particle {
    pub(crate) fn uniform(outcome: Symbol) -> Self {
        Self {
            state: State::Uniform(outcome),
        }
    }

    pub(crate) fn entangled(outcome: Symbol) -> Self {
        Self {
            state: State::Entangled(outcome),
        }
    }

    /// A freshly prepared basis state.
    pub fn prepare(basis: Basis, symbol: Symbol) -> Self {
        Self {
            state: State::Pure(basis, symbol),
        }
    }

    /// Projective measurement in `basis`; the particle collapses onto the
    /// observed basis state.
    pub fn measure(&mut self, basis: Basis, alphabet: Alphabet, rng: &mut SimRng) -> Symbol {
        let outcome = match (&self.state, basis) {
            (State::Uniform(x), Basis::Computational) | (State::Entangled(x), Basis::Computational) => *x,
            (State::Uniform(_), Basis::Fourier) => 0,
            (State::Entangled(_), Basis::Fourier) => rng.random_range(alphabet.symbols()),
            (State::Pure(b, x), _) if *b == basis => *x,
            (State::Pure(_, _), _) => rng.random_range(alphabet.symbols()),
        };
        self.state = State::Pure(basis, outcome);
        outcome
    }
}

/// Acts on one particle at a time, with no access to anything else.
pub trait ChannelAdversary {
    fn name(&self) -> &str;

    fn transport(&mut self, particle: Particle, alphabet: Alphabet, rng: &mut SimRng) -> Particle;

    /// Particles this adversary has measured so far.
    fn intercepted(&self) -> u64 {
        0
    }
}

/// Forwards every particle untouched.
#[derive(Debug, Default, Clone)]
pub struct Identity;

impl ChannelAdversary for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn transport(&mut self, particle: Particle, _: Alphabet, _: &mut SimRng) -> Particle {
        particle
    }
}

/// How an intercept-resend attacker picks its measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterceptBasis {
    Computational,
    Random,
}

/// Measures each particle and forwards the post-measurement state.
#[derive(Debug, Clone)]
pub struct InterceptResend {
    basis: InterceptBasis,
    intercepted: u64,
}

impl InterceptResend {
    pub fn new(basis: InterceptBasis) -> Self {
        Self {
            basis,
            intercepted: 0,
        }
    }
}

impl ChannelAdversary for InterceptResend {
    fn name(&self) -> &str {
        match self.basis {
            InterceptBasis::Computational => "intercept-resend-computational",
            InterceptBasis::Random => "intercept-resend-random-basis",
        }
    }

    fn transport(&mut self, mut particle: Particle, alphabet: Alphabet, rng: &mut SimRng) -> Particle {
        let basis = match self.basis {
            InterceptBasis::Computational => Basis::Computational,
            InterceptBasis::Random => Basis::random(rng),
        };
        let seen = particle.measure(basis, alphabet, rng);
        self.intercepted += 1;
        Particle::prepare(basis, seen)
    }

    fn intercepted(&self) -> u64 {
        self.intercepted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> SimRng {
        SimRng::seed_from_u64(7)
    }

    #[test]
    fn same_basis_measurement_is_non_disturbing() {
        let a = Alphabet::new(4).unwrap();
        let mut r = rng();
        for basis in [Basis::Computational, Basis::Fourier] {
            let mut p = Particle::prepare(basis, 3);
            assert_eq!(p.measure(basis, a, &mut r), 3);
            assert_eq!(p.measure(basis, a, &mut r), 3);
        }
        let mut d = Particle::entangled(2);
        assert_eq!(d.measure(Basis::Computational, a, &mut r), 2);
    }

    #[test]
    fn conjugate_measurement_randomizes() {
        let a = Alphabet::new(4).unwrap();
        let mut r = rng();
        let trials = 50_000;
        let mut kept = 0;
        for _ in 0..trials {
            let mut p = Particle::prepare(Basis::Fourier, 1);
            p.measure(Basis::Computational, a, &mut r);
            if p.measure(Basis::Fourier, a, &mut r) == 1 {
                kept += 1;
            }
        }
        let rate = kept as f64 / trials as f64;
        assert!((rate - 0.2).abs() < 0.01, "{rate}");
    }

    #[test]
    fn uniform_source_particle_is_fourier_zero() {
        let a = Alphabet::new(3).unwrap();
        let mut r = rng();
        let mut p = Particle::uniform(2);
        assert_eq!(p.measure(Basis::Fourier, a, &mut r), 0);
    }
}
