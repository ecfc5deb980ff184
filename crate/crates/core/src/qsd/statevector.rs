//! Dense qudit statevectors used as the exact reference for the samplers and
//! for the decoy detection rates.
//!
//! Basis index convention: subsystem 0 is the most significant digit, so the
//! tuple `(j0, j1, ..., j_{q-1})` lives at `sum j_i * d^(q-1-i)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::channel::Basis;
use super::QsdError;
use crate::lists::Symbol;

/// Largest dense state we are willing to build.
pub const MAX_AMPLITUDES: usize = 1_000_000;

/// Amplitudes whose squared magnitude is below this are dropped from
/// measurement distributions.
const NEGLIGIBLE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    dimension: usize,
    subsystems: usize,
    amplitudes: Vec<Complex64>,
}

impl QuditState {
    fn zeros(dimension: usize, subsystems: usize) -> Result<Self, QsdError> {
        let len = checked_len(dimension, subsystems)?;
        Ok(Self {
            dimension,
            subsystems,
            amplitudes: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn subsystems(&self) -> usize {
        self.subsystems
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn amplitude(&self, tuple: &[usize]) -> Complex64 {
        self.amplitudes[self.index_of(tuple)]
    }

    fn index_of(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &j| acc * self.dimension + j)
    }

    fn tuple_of(&self, mut index: usize) -> Vec<Symbol> {
        let mut t = vec![0; self.subsystems];
        for slot in t.iter_mut().rev() {
            *slot = (index % self.dimension) as Symbol;
            index /= self.dimension;
        }
        t
    }

    /// `|psi> (x) |phi>`.
    pub fn tensor(&self, other: &QuditState) -> Result<QuditState, QsdError> {
        if self.dimension != other.dimension {
            return Err(QsdError::InvalidParameters(
                "tensor product of qudits with different dimensions".into(),
            ));
        }
        checked_len(self.dimension, self.subsystems + other.subsystems)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(QuditState {
            dimension: self.dimension,
            subsystems: self.subsystems + other.subsystems,
            amplitudes,
        })
    }

    /// Applies the d-point discrete Fourier transform to one subsystem.
    pub fn apply_dft(&mut self, subsystem: usize, inverse: bool) {
        let d = self.dimension;
        let f = dft_matrix(d, inverse);
        let stride = d.pow((self.subsystems - 1 - subsystem) as u32);
        let block = stride * d;
        let mut scratch = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for offset in 0..stride {
                for (x, out) in scratch.iter_mut().enumerate() {
                    *out = (0..d)
                        .map(|y| f[x][y] * self.amplitudes[base + offset + y * stride])
                        .sum();
                }
                for (y, v) in scratch.iter().enumerate() {
                    self.amplitudes[base + offset + y * stride] = *v;
                }
            }
        }
    }
}

fn checked_len(dimension: usize, subsystems: usize) -> Result<usize, QsdError> {
    let too_large = || QsdError::TooLarge {
        dimension,
        subsystems,
    };
    let len = u32::try_from(subsystems)
        .ok()
        .and_then(|q| dimension.checked_pow(q))
        .ok_or_else(too_large)?;
    if len > MAX_AMPLITUDES {
        return Err(too_large());
    }
    Ok(len)
}

/// `F[x][y] = e^{2 pi i x y / d} / sqrt(d)` (or its adjoint).
fn dft_matrix(d: usize, inverse: bool) -> Vec<Vec<Complex64>> {
    let sign = if inverse { -1.0 } else { 1.0 };
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|x| {
            (0..d)
                .map(|y| Complex64::from_polar(norm, sign * 2.0 * PI * (x * y) as f64 / d as f64))
                .collect()
        })
        .collect()
}

/// `sum_j e^{2 pi i j s / d} |j>|j + i_1>...|j + i_{q-1}>` (indices mod d),
/// normalized by `1/sqrt(d)`.
pub fn build_type3_statevector(
    d: usize,
    q: usize,
    offsets: &[usize],
    phase_s: usize,
) -> Result<QuditState, QsdError> {
    if d < 2 || q < 1 || offsets.len() + 1 != q || offsets.iter().any(|&i| i >= d) {
        return Err(QsdError::InvalidParameters(format!(
            "type-3 state needs d >= 2, q >= 1 and q - 1 offsets in [0, d) (d = {d}, q = {q}, offsets = {offsets:?})"
        )));
    }
    let mut state = QuditState::zeros(d, q)?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut tuple = vec![0usize; q];
    for j in 0..d {
        tuple[0] = j;
        for (slot, &i) in tuple[1..].iter_mut().zip(offsets) {
            *slot = (j + i) % d;
        }
        let idx = state.index_of(&tuple);
        state.amplitudes[idx] =
            Complex64::from_polar(norm, 2.0 * PI * (j * phase_s % d) as f64 / d as f64);
    }
    Ok(state)
}

/// Single-qudit uniform superposition `sum_j |j> / sqrt(d)`.
pub fn uniform_state(d: usize) -> Result<QuditState, QsdError> {
    build_type3_statevector(d, 1, &[], 0)
}

/// Two-qudit perfectly correlated state `sum_j |j>|j> / sqrt(d)`.
pub fn equal_pair_state(d: usize) -> Result<QuditState, QsdError> {
    build_type3_statevector(d, 2, &[0], 0)
}

/// Single-qudit basis state: `|x>` or `F|x>`.
pub fn basis_state(d: usize, basis: Basis, x: Symbol) -> Result<QuditState, QsdError> {
    let mut s = QuditState::zeros(d, 1)?;
    s.amplitudes[x as usize] = Complex64::new(1.0, 0.0);
    if basis == Basis::Fourier {
        s.apply_dft(0, false);
    }
    Ok(s)
}

/// Born-rule probabilities of a joint computational-basis measurement.
pub fn measurement_distribution(state: &QuditState) -> BTreeMap<Vec<Symbol>, f64> {
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a.norm_sqr()))
        .filter(|&(_, p)| p > NEGLIGIBLE)
        .map(|(i, p)| (state.tuple_of(i), p))
        .collect()
}

/// Outcome probabilities of measuring a single qudit in `basis`.
pub fn single_qudit_probabilities(state: &QuditState, basis: Basis) -> Vec<f64> {
    assert_eq!(state.subsystems, 1, "single-qudit measurement");
    let mut s = state.clone();
    if basis == Basis::Fourier {
        s.apply_dft(0, true);
    }
    s.amplitudes.iter().map(Complex64::norm_sqr).collect()
}

/// Probability that an intercept-resend attack measuring in `attack_basis`
/// is caught by one decoy whose basis is drawn uniformly from both bases and
/// whose symbol is uniform, computed from the states themselves.
pub fn decoy_detection_probability(d: usize, attack_basis: Basis) -> Result<f64, QsdError> {
    let mut survive = 0.0;
    let cases = 2.0 * d as f64;
    for prep_basis in [Basis::Computational, Basis::Fourier] {
        for x in 0..d as Symbol {
            let prepared = basis_state(d, prep_basis, x)?;
            for (y, py) in single_qudit_probabilities(&prepared, attack_basis)
                .into_iter()
                .enumerate()
            {
                if py <= NEGLIGIBLE {
                    continue;
                }
                let resent = basis_state(d, attack_basis, y as Symbol)?;
                let check = single_qudit_probabilities(&resent, prep_basis);
                survive += py * check[x as usize] / cases;
            }
        }
    }
    Ok(1.0 - survive)
}
