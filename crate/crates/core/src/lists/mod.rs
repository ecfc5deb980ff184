//! Symbol lists over the alphabet `W = {0, ..., w}` and the predicates the
//! agreement protocol is built on.
//!
//! Positions are 1-based everywhere in the public surface: `list.get(1)` is
//! the first element, and a [`PositionSet`] never contains `0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub mod forgery;

/// A symbol of the alphabet `W`.
pub type Symbol = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ListError {
    #[error("alphabet requires w >= 1, got w = {0}")]
    InvalidAlphabet(Symbol),
    #[error("position {position} out of range for list of length {len}")]
    IndexOutOfRange { position: usize, len: usize },
    #[error("positions are 1-based; 0 is not a valid position")]
    ZeroPosition,
    #[error("no lists supplied")]
    EmptyInput,
    #[error("list index {index} out of range for a set of {count} lists")]
    NoSuchList { index: usize, count: usize },
    #[error("symbol {symbol} is outside the alphabet 0..={w}")]
    SymbolOutOfRange { symbol: Symbol, w: Symbol },
    #[error("value {value} has {found} correlated supporting positions, {required} required")]
    InsufficientSupport {
        value: Symbol,
        found: usize,
        required: usize,
    },
    #[error("lists are not Q-correlated for the given positions")]
    NotQCorrelated,
    #[error("enumeration of {size} cases exceeds the configured bound {bound}")]
    TooLarge { size: u128, bound: u128 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("malformed symbol list: {0}")]
    Parse(String),
}

/// The alphabet `W = {0, 1, ..., w}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet {
    w: Symbol,
}

impl Alphabet {
    pub fn new(w: Symbol) -> Result<Self, ListError> {
        if w < 1 {
            return Err(ListError::InvalidAlphabet(w));
        }
        Ok(Self { w })
    }

    /// Largest symbol, `w`.
    pub fn w(&self) -> Symbol {
        self.w
    }

    /// Number of symbols, `w + 1`.
    pub fn size(&self) -> usize {
        self.w as usize + 1
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        symbol <= self.w
    }

    pub fn symbols(&self) -> std::ops::RangeInclusive<Symbol> {
        0..=self.w
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = ListError;

    fn try_from(w: u32) -> Result<Self, Self::Error> {
        Alphabet::new(w)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.w
    }
}

/// One party's private list. Serialized as comma-separated decimal symbols
/// in position order, e.g. `"1,2,0,0,3"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolList(Vec<Symbol>);

impl SymbolList {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Element at 1-based `position`.
    pub fn get(&self, position: usize) -> Option<Symbol> {
        position.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn push(&mut self, symbol: Symbol) {
        self.0.push(symbol);
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.iter().copied()
    }

    /// True when every element lies in `alphabet`.
    pub fn within(&self, alphabet: Alphabet) -> bool {
        self.0.iter().all(|&s| alphabet.contains(s))
    }
}

impl From<Vec<Symbol>> for SymbolList {
    fn from(v: Vec<Symbol>) -> Self {
        Self(v)
    }
}

impl FromIterator<Symbol> for SymbolList {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for SymbolList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SymbolList {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(Self::default());
        }
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<Symbol>()
                    .map_err(|e| ListError::Parse(format!("{part:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl Serialize for SymbolList {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SymbolList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered set of distinct 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct PositionSet(Vec<usize>);

impl PositionSet {
    /// Builds a set from arbitrary positions, sorting and removing duplicates.
    pub fn new<I: IntoIterator<Item = usize>>(positions: I) -> Result<Self, ListError> {
        let mut v: Vec<usize> = positions.into_iter().collect();
        if v.contains(&0) {
            return Err(ListError::ZeroPosition);
        }
        v.sort_unstable();
        v.dedup();
        Ok(Self(v))
    }

    /// Accepts `positions` only if already strictly ascending and 1-based.
    pub fn from_strictly_ascending(positions: &[usize]) -> Option<Self> {
        let ok = positions.first().is_none_or(|&p| p >= 1)
            && positions.windows(2).all(|w| w[0] < w[1]);
        ok.then(|| Self(positions.to_vec()))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.0.binary_search(&position).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &PositionSet) -> PositionSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        PositionSet(v)
    }

    fn check_bounds(&self, len: usize) -> Result<(), ListError> {
        match self.max() {
            Some(position) if position > len => Err(ListError::IndexOutOfRange { position, len }),
            _ => Ok(()),
        }
    }
}

impl<'de> Deserialize<'de> for PositionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        PositionSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl FromIterator<usize> for PositionSet {
    /// Panics on position 0; use [`PositionSet::new`] for untrusted input.
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PositionSet::new(iter).expect("positions are 1-based")
    }
}

/// A set of lists together with its correlated positions `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QCorrelatedSet {
    lists: Vec<SymbolList>,
    q_positions: PositionSet,
    alphabet: Alphabet,
}

impl QCorrelatedSet {
    pub fn new(
        lists: Vec<SymbolList>,
        q_positions: PositionSet,
        alphabet: Alphabet,
    ) -> Result<Self, ListError> {
        if !is_q_correlated(&lists, &q_positions, alphabet)? {
            return Err(ListError::NotQCorrelated);
        }
        Ok(Self {
            lists,
            q_positions,
            alphabet,
        })
    }

    pub fn lists(&self) -> &[SymbolList] {
        &self.lists
    }

    pub fn q_positions(&self) -> &PositionSet {
        &self.q_positions
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
}

/// A value together with a set of lists, to be tested for consistency.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyCandidate<'a> {
    pub value: Symbol,
    pub lists: &'a [SymbolList],
}

impl<'a> ConsistencyCandidate<'a> {
    pub fn new(value: Symbol, lists: &'a [SymbolList]) -> Self {
        Self { value, lists }
    }

    pub fn is_consistent(&self) -> bool {
        is_consistent(self)
    }
}

/// Checks equal length, alphabet membership and pairwise distinctness at
/// every position of `q_positions`.
///
/// Randomness of the elements is a property of the generator and is not
/// (and cannot be) checked on a single instance.
pub fn is_q_correlated(
    lists: &[SymbolList],
    q_positions: &PositionSet,
    alphabet: Alphabet,
) -> Result<bool, ListError> {
    let shortest = lists
        .iter()
        .map(SymbolList::len)
        .min()
        .ok_or(ListError::EmptyInput)?;
    q_positions.check_bounds(shortest)?;

    let len = lists[0].len();
    if lists.iter().any(|l| l.len() != len) {
        return Ok(false);
    }
    if !lists.iter().all(|l| l.within(alphabet)) {
        return Ok(false);
    }
    let distinct_at = |k: usize| {
        lists.iter().enumerate().all(|(i, a)| {
            lists[i + 1..]
                .iter()
                .all(|b| a.as_slice()[k - 1] != b.as_slice()[k - 1])
        })
    };
    Ok(q_positions.iter().all(distinct_at))
}

/// `L^R`: the elements of `list` at `positions`, in ascending position order.
pub fn extract_sublist(list: &SymbolList, positions: &PositionSet) -> Result<SymbolList, ListError> {
    positions.check_bounds(list.len())?;
    Ok(positions.iter().map(|k| list.as_slice()[k - 1]).collect())
}

/// The pair `(v, L)` is consistent when all lists have equal length, no
/// element equals `v`, and no two lists agree at any position. An empty set
/// of lists is vacuously consistent.
pub fn is_consistent(candidate: &ConsistencyCandidate<'_>) -> bool {
    let lists = candidate.lists;
    let Some(first) = lists.first() else {
        return true;
    };
    let len = first.len();
    if lists.iter().any(|l| l.len() != len) {
        return false;
    }
    let v = candidate.value;
    for k in 0..len {
        for (i, a) in lists.iter().enumerate() {
            let x = a.as_slice()[k];
            if x == v {
                return false;
            }
            if lists[i + 1..].iter().any(|b| b.as_slice()[k] == x) {
                return false;
            }
        }
    }
    true
}

/// The correlated positions of `commander_list` that carry `v`.
///
/// Fails with [`ListError::InsufficientSupport`] when fewer than
/// `min_support` such positions exist.
pub fn select_support_positions(
    commander_list: &SymbolList,
    q_positions: &PositionSet,
    v: Symbol,
    min_support: usize,
) -> Result<PositionSet, ListError> {
    q_positions.check_bounds(commander_list.len())?;
    let support = PositionSet(
        q_positions
            .iter()
            .filter(|&k| commander_list.as_slice()[k - 1] == v)
            .collect(),
    );
    if support.len() < min_support {
        return Err(ListError::InsufficientSupport {
            value: v,
            found: support.len(),
            required: min_support,
        });
    }
    Ok(support)
}

/// Test oracle: the support positions of `v` in the sender's list, projected
/// onto every other list, always form a consistent pair with `v`.
///
/// `sender_index` is a 0-based index into `set.lists()`.
pub fn property1_check(set: &QCorrelatedSet, sender_index: usize, v: Symbol) -> Result<bool, ListError> {
    let lists = set.lists();
    let sender = lists.get(sender_index).ok_or(ListError::NoSuchList {
        index: sender_index,
        count: lists.len(),
    })?;
    let support = select_support_positions(sender, set.q_positions(), v, 1)?;
    let others = lists
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != sender_index)
        .map(|(_, l)| extract_sublist(l, &support))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(is_consistent(&ConsistencyCandidate::new(v, &others)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sl(v: &[Symbol]) -> SymbolList {
        SymbolList::new(v.to_vec())
    }

    fn ps(v: &[usize]) -> PositionSet {
        PositionSet::new(v.iter().copied()).unwrap()
    }

    fn worked_example() -> Vec<SymbolList> {
        vec![
            sl(&[1, 2, 0, 0, 3, 2, 3]),
            sl(&[2, 1, 3, 0, 0, 0, 2]),
            sl(&[0, 3, 1, 3, 1, 1, 0]),
            sl(&[3, 0, 2, 2, 2, 3, 1]),
        ]
    }

    fn w(w: Symbol) -> Alphabet {
        Alphabet::new(w).unwrap()
    }

    #[test]
    fn worked_example_is_q_correlated() {
        let lists = worked_example();
        assert!(is_q_correlated(&lists, &ps(&[1, 2, 3, 5, 6, 7]), w(3)).unwrap());
        assert!(!is_q_correlated(&lists, &ps(&[3, 4, 5]), w(3)).unwrap());
    }

    #[test]
    fn q_correlated_edge_cases() {
        let lists = vec![sl(&[1, 1]), sl(&[1, 1])];
        assert!(is_q_correlated(&lists, &PositionSet::empty(), w(3)).unwrap());

        let ragged = vec![sl(&[1, 2, 3]), sl(&[2, 3])];
        assert!(!is_q_correlated(&ragged, &PositionSet::empty(), w(3)).unwrap());
        assert!(!is_q_correlated(&ragged, &ps(&[1]), w(3)).unwrap());

        assert_eq!(
            is_q_correlated(&ragged, &ps(&[3]), w(3)),
            Err(ListError::IndexOutOfRange { position: 3, len: 2 })
        );
        assert_eq!(is_q_correlated(&[], &PositionSet::empty(), w(3)), Err(ListError::EmptyInput));

        let out_of_alphabet = vec![sl(&[4]), sl(&[0])];
        assert!(!is_q_correlated(&out_of_alphabet, &ps(&[1]), w(3)).unwrap());
    }

    #[test]
    fn sublist_extraction() {
        let l = sl(&[1, 2, 0, 0, 3, 2, 3]);
        assert_eq!(extract_sublist(&l, &ps(&[2, 6])).unwrap(), sl(&[2, 2]));
        let short = sl(&[1, 2, 0]);
        assert_eq!(extract_sublist(&short, &PositionSet::empty()).unwrap(), sl(&[]));
        assert_eq!(extract_sublist(&short, &ps(&[1, 2, 3])).unwrap(), short);
        assert_eq!(
            extract_sublist(&short, &ps(&[4])),
            Err(ListError::IndexOutOfRange { position: 4, len: 3 })
        );
    }

    #[test]
    fn consistency_examples() {
        let ok = [sl(&[1, 0]), sl(&[3, 1]), sl(&[0, 3])];
        assert!(is_consistent(&ConsistencyCandidate::new(2, &ok)));
        assert!(!is_consistent(&ConsistencyCandidate::new(1, &[sl(&[1, 2])])));
        assert!(!is_consistent(&ConsistencyCandidate::new(0, &[sl(&[1, 2]), sl(&[1, 3])])));
        assert!(is_consistent(&ConsistencyCandidate::new(0, &[])));
        assert!(!is_consistent(&ConsistencyCandidate::new(0, &[sl(&[1, 2]), sl(&[3])])));
    }

    #[test]
    fn worked_example_sublists_are_consistent() {
        let lists = worked_example();
        let r = ps(&[2, 6]);
        let others: Vec<_> = lists[1..].iter().map(|l| extract_sublist(l, &r).unwrap()).collect();
        assert_eq!(others, vec![sl(&[1, 0]), sl(&[3, 1]), sl(&[0, 3])]);
        assert!(ConsistencyCandidate::new(2, &others).is_consistent());
    }

    #[test]
    fn support_selection() {
        let q = ps(&[1, 2, 3, 5, 6, 7]);
        assert_eq!(
            select_support_positions(&sl(&[1, 2, 0, 0, 3, 2, 3]), &q, 2, 2).unwrap(),
            ps(&[2, 6])
        );
        assert_eq!(
            select_support_positions(&sl(&[0, 0]), &ps(&[1, 2]), 3, 1),
            Err(ListError::InsufficientSupport {
                value: 3,
                found: 0,
                required: 1
            })
        );
        assert_eq!(
            select_support_positions(&sl(&[2, 2, 2]), &ps(&[1, 3]), 2, 2).unwrap(),
            ps(&[1, 3])
        );
    }

    #[test]
    fn property1_on_worked_example() {
        let set = QCorrelatedSet::new(worked_example(), ps(&[1, 2, 3, 5, 6, 7]), w(3)).unwrap();
        assert!(property1_check(&set, 0, 2).unwrap());
        // v = 3 sits at correlated positions 5 and 7 of the first list.
        assert_eq!(
            select_support_positions(&set.lists()[0], set.q_positions(), 3, 1).unwrap(),
            ps(&[5, 7])
        );
        assert!(property1_check(&set, 0, 3).unwrap());
        assert!(matches!(
            property1_check(&set, 9, 3),
            Err(ListError::NoSuchList { .. })
        ));
    }

    #[test]
    fn symbol_list_text_form() {
        let l = sl(&[1, 2, 0]);
        assert_eq!(l.to_string(), "1,2,0");
        assert_eq!("1,2,0".parse::<SymbolList>().unwrap(), l);
        assert_eq!("".parse::<SymbolList>().unwrap(), sl(&[]));
        assert!("1,x".parse::<SymbolList>().is_err());
        assert_eq!(serde_json::to_string(&l).unwrap(), "\"1,2,0\"");
    }

    #[test]
    fn position_set_normalizes_and_rejects_zero() {
        assert_eq!(ps(&[5, 2, 2, 7]).as_slice(), &[2, 5, 7]);
        assert_eq!(PositionSet::new([0, 1]), Err(ListError::ZeroPosition));
        assert!(PositionSet::from_strictly_ascending(&[1, 1]).is_none());
        assert!(PositionSet::from_strictly_ascending(&[0, 1]).is_none());
        assert!(PositionSet::from_strictly_ascending(&[1, 4]).is_some());
        assert!(serde_json::from_str::<PositionSet>("[0]").is_err());
        assert!(Alphabet::new(0).is_err());
    }

    proptest! {
        #[test]
        fn duplicate_lists_never_consistent(v in 0u32..6, list in prop::collection::vec(0u32..6, 1..20)) {
            let s = SymbolList::new(list);
            let pair = [s.clone(), s];
            prop_assert!(!is_consistent(&ConsistencyCandidate::new(v, &pair)));
        }

        #[test]
        fn projection_is_coherent(
            list in prop::collection::vec(0u32..10, 1..40),
            a in prop::collection::vec(1usize..40, 0..10),
            b in prop::collection::vec(1usize..40, 0..10),
        ) {
            let l = SymbolList::new(list);
            let r1 = PositionSet::new(a.into_iter().filter(|&p| p <= l.len())).unwrap();
            let r2 = PositionSet::new(b.into_iter().filter(|&p| p <= l.len())).unwrap();
            let both = r1.union(&r2);
            let sub = extract_sublist(&l, &both).unwrap();
            // Positions of r1 inside the union, renumbered 1-based.
            let inner = PositionSet::new(
                r1.iter().map(|p| both.as_slice().binary_search(&p).unwrap() + 1),
            ).unwrap();
            prop_assert_eq!(extract_sublist(&sub, &inner).unwrap(), extract_sublist(&l, &r1).unwrap());
        }
    }
}
