//! Exact forgery probabilities by enumeration of the source device's
//! randomness.
//!
//! The adversary modelled here knows every list except the receiver's and
//! does not know which positions are correlated. It chooses an order value
//! `v`, a set `P` of exactly `support_size` positions and a single fabricated
//! chain entry, and wins when the receiver's check of `(v, {F, L_r^P})`
//! passes. The returned probability is for the optimal such choice, made
//! separately for every possible view.
//!
//! Enumeration runs at the level of measured symbols: a correlated position
//! is a uniformly random injection of the `n + 1` delivered particles into
//! `W` (the commander receives two), an uncorrelated one is an equal pair for
//! the commander and independent uniform symbols for everyone else.

use std::collections::HashMap;

use super::{Alphabet, ListError, Symbol};

/// Default limit on enumerated cases before [`ListError::TooLarge`].
pub const DEFAULT_MAX_CASES: u128 = 20_000_000;

/// Enumeration settings for the forgery oracle.
#[derive(Debug, Clone, Copy)]
pub struct ForgeryOracle {
    pub correlation_prob: f64,
    pub max_cases: u128,
}

impl Default for ForgeryOracle {
    fn default() -> Self {
        Self {
            correlation_prob: 0.5,
            max_cases: DEFAULT_MAX_CASES,
        }
    }
}

/// Exact success probability of the optimal forger with the default
/// correlation probability of one half.
pub fn forgery_oracle(
    n: usize,
    alphabet: Alphabet,
    list_length: usize,
    support_size: usize,
) -> Result<f64, ListError> {
    ForgeryOracle::default().success_probability(n, alphabet, list_length, support_size)
}

/// A group of single-position views that are indistinguishable for the
/// forger: same receiver-symbol counts under both correlation outcomes.
#[derive(Debug, Clone)]
struct ViewClass {
    /// Number of distinct views in the class.
    multiplicity: u64,
    /// Probability of one view of the class.
    view_prob: f64,
    /// For each order value `v`, the largest joint probability of the view
    /// and a passing check, maximized over the fabricated symbol.
    best_pass: Vec<f64>,
}

impl ForgeryOracle {
    pub fn success_probability(
        &self,
        n: usize,
        alphabet: Alphabet,
        list_length: usize,
        support_size: usize,
    ) -> Result<f64, ListError> {
        if support_size == 0 || support_size > list_length {
            return Ok(0.0);
        }
        let classes = self.view_classes(n, alphabet)?;
        let sequences = multiset_count(classes.len() as u128, list_length as u128);
        if sequences > self.max_cases {
            return Err(ListError::TooLarge {
                size: sequences,
                bound: self.max_cases,
            });
        }

        let mut total = 0.0;
        let mut counts = vec![0usize; classes.len()];
        visit_multisets(&mut counts, 0, list_length, &mut |counts| {
            total += multiset_weight(counts, &classes) * best_forgery(counts, &classes, support_size);
        });
        Ok(total)
    }

    /// Largest single-position pass probability over all views. Every factor
    /// of a forgery's success is bounded by it, so `bound^|P|` bounds the
    /// whole forgery whatever the list length.
    pub fn per_position_bound(&self, n: usize, alphabet: Alphabet) -> Result<f64, ListError> {
        let classes = self.view_classes(n, alphabet)?;
        Ok(classes
            .iter()
            .flat_map(|c| c.best_pass.iter().map(move |&a| a / c.view_prob))
            .fold(0.0, f64::max))
    }

    fn view_classes(&self, n: usize, alphabet: Alphabet) -> Result<Vec<ViewClass>, ListError> {
        check_params(n, alphabet, self.correlation_prob)?;
        let d = alphabet.size();
        let known = n - 1;
        let views = (d as u128).pow(known as u32);
        let outcomes = falling_factorial(d as u128, n as u128 + 1) + (d as u128).pow(n as u32);
        let cases = views.max(outcomes);
        if cases > self.max_cases {
            return Err(ListError::TooLarge {
                size: cases,
                bound: self.max_cases,
            });
        }

        // Per view (base-d index of the known symbols): receiver-symbol counts,
        // first d entries for correlated outcomes, next d for uncorrelated.
        let views = views as usize;
        let mut hist = vec![0u32; views * 2 * d];
        let view_index = |lists: &[Symbol]| {
            // Receiver is the last party; the view is everyone before it.
            lists[..known].iter().fold(0usize, |acc, &s| acc * d + s as usize)
        };

        let mut slots = vec![0 as Symbol; n + 1];
        let mut used = vec![false; d];
        let mut corr_total = 0u64;
        for_each_injection(&mut slots, &mut used, 0, &mut |slots| {
            // slots[0], slots[1]: commander's pair; slots[2..]: lieutenants.
            let mut lists = Vec::with_capacity(n);
            lists.push(slots[0]);
            lists.extend_from_slice(&slots[2..]);
            let r = lists[n - 1] as usize;
            hist[view_index(&lists) * 2 * d + r] += 1;
            corr_total += 1;
        });

        let mut lists = vec![0 as Symbol; n];
        let mut unc_total = 0u64;
        for_each_tuple(&mut lists, d, 0, &mut |lists| {
            let r = lists[n - 1] as usize;
            hist[view_index(lists) * 2 * d + d + r] += 1;
            unc_total += 1;
        });

        let cp = self.correlation_prob;
        let wc = cp / corr_total as f64;
        let wu = (1.0 - cp) / unc_total as f64;

        let mut grouped: HashMap<&[u32], u64> = HashMap::new();
        for chunk in hist.chunks_exact(2 * d) {
            if chunk.iter().any(|&c| c > 0) {
                *grouped.entry(chunk).or_default() += 1;
            }
        }
        let mut keys: Vec<_> = grouped.into_iter().collect();
        keys.sort_unstable();

        Ok(keys
            .into_iter()
            .map(|(key, multiplicity)| {
                let (corr, unc) = key.split_at(d);
                let sc: u32 = corr.iter().sum();
                let su: u32 = unc.iter().sum();
                let mass = |excluded: &[usize]| {
                    let c = sc - excluded.iter().map(|&x| corr[x]).sum::<u32>();
                    let u = su - excluded.iter().map(|&x| unc[x]).sum::<u32>();
                    wc * c as f64 + wu * u as f64
                };
                let best_pass = (0..d)
                    .map(|v| {
                        (0..d)
                            .filter(|&f| f != v)
                            .map(|f| mass(&[v, f]))
                            .fold(0.0, f64::max)
                    })
                    .collect();
                ViewClass {
                    multiplicity,
                    view_prob: mass(&[]),
                    best_pass,
                }
            })
            .collect())
    }
}

/// Per-position bound in closed form. Agrees with
/// [`ForgeryOracle::per_position_bound`] wherever that is enumerable.
///
/// The best view is one where the `n - 1` known symbols are pairwise
/// distinct: the position is then correlated with the highest posterior,
/// and choosing both `v` and the fabricated symbol among the known symbols
/// makes a correlated position a certain pass.
pub fn closed_form_pass_bound(n: usize, alphabet: Alphabet, correlation_prob: f64) -> f64 {
    let d = alphabet.size() as f64;
    let cp = correlation_prob;
    let uncorrelated_pass = (d - 2.0) / d;
    if n <= 2 {
        // One known symbol: it serves as v; the fabricated entry is a guess.
        return cp * (d - 2.0) / (d - 1.0) + (1.0 - cp) * uncorrelated_pass;
    }
    let distinct: f64 = (0..n - 1).map(|i| (d - i as f64) / d).product();
    let posterior = cp / (cp + (1.0 - cp) * distinct);
    posterior + (1.0 - posterior) * uncorrelated_pass
}

fn check_params(n: usize, alphabet: Alphabet, cp: f64) -> Result<(), ListError> {
    if n < 2 || alphabet.size() < n + 1 || !(0.0..=1.0).contains(&cp) {
        return Err(ListError::InvalidParameters(format!(
            "need n >= 2, w >= n and correlation probability in [0, 1] (n = {n}, w = {}, p = {cp})",
            alphabet.w()
        )));
    }
    Ok(())
}

/// Probability of one fixed joint view assembled from the class counts, times
/// the number of joint views with these counts.
fn multiset_weight(counts: &[usize], classes: &[ViewClass]) -> f64 {
    let total: usize = counts.iter().sum();
    let mut w = factorial(total);
    for (&c, class) in counts.iter().zip(classes) {
        w /= factorial(c);
        w *= (class.multiplicity as f64 * class.view_prob).powi(c as i32);
    }
    w
}

/// Conditional success of the best (v, P) given the joint view.
fn best_forgery(counts: &[usize], classes: &[ViewClass], support: usize) -> f64 {
    let d = classes[0].best_pass.len();
    let mut ratios = Vec::new();
    (0..d)
        .map(|v| {
            ratios.clear();
            for (&c, class) in counts.iter().zip(classes) {
                let r = class.best_pass[v] / class.view_prob;
                ratios.extend(std::iter::repeat_n(r, c));
            }
            ratios.sort_unstable_by(|a, b| b.total_cmp(a));
            ratios[..support].iter().product::<f64>()
        })
        .fold(0.0, f64::max)
}

fn visit_multisets(counts: &mut [usize], from: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
    if remaining == 0 {
        f(counts);
        return;
    }
    if from == counts.len() {
        return;
    }
    for take in (0..=remaining).rev() {
        counts[from] = take;
        visit_multisets(counts, from + 1, remaining - take, f);
    }
    counts[from] = 0;
}

fn for_each_injection(
    slots: &mut [Symbol],
    used: &mut [bool],
    i: usize,
    f: &mut impl FnMut(&[Symbol]),
) {
    if i == slots.len() {
        f(slots);
        return;
    }
    for s in 0..used.len() {
        if !used[s] {
            used[s] = true;
            slots[i] = s as Symbol;
            for_each_injection(slots, used, i + 1, f);
            used[s] = false;
        }
    }
}

fn for_each_tuple(lists: &mut [Symbol], d: usize, i: usize, f: &mut impl FnMut(&[Symbol])) {
    if i == lists.len() {
        f(lists);
        return;
    }
    for s in 0..d {
        lists[i] = s as Symbol;
        for_each_tuple(lists, d, i + 1, f);
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn falling_factorial(d: u128, k: u128) -> u128 {
    (0..k).map(|i| d.saturating_sub(i)).product()
}

/// Number of multisets of size `k` drawn from `c` kinds.
fn multiset_count(c: u128, k: u128) -> u128 {
    if c == 0 {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r.saturating_mul(c + i - 1) / i;
    }
    r
}
