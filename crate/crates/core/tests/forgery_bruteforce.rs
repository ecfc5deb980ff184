//! Brute-force cross-check of the forgery oracle: enumerate every joint
//! outcome of the source device and every forger choice, with no
//! factorization across positions.

use std::collections::HashMap;

use qba_core::lists::forgery::forgery_oracle;
use qba_core::lists::Alphabet;

/// One position: the n list symbols (commander first) and its probability.
fn position_outcomes(n: usize, d: usize, cp: f64) -> Vec<(Vec<u32>, f64)> {
    let mut out = Vec::new();
    // Correlated: every injection of the n + 1 delivered particles.
    let mut inj = Vec::new();
    fn rec(cur: &mut Vec<u32>, k: usize, d: usize, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in 0..d as u32 {
            if !cur.contains(&s) {
                cur.push(s);
                rec(cur, k, d, out);
                cur.pop();
            }
        }
    }
    rec(&mut Vec::new(), n + 1, d, &mut inj);
    let wc = cp / inj.len() as f64;
    for slots in inj {
        let mut lists = vec![slots[0]];
        lists.extend_from_slice(&slots[2..]);
        out.push((lists, wc));
    }
    // Uncorrelated: commander pair (a, a), lieutenants independent.
    let total = d.pow(n as u32);
    let wu = (1.0 - cp) / total as f64;
    for idx in 0..total {
        let mut x = idx;
        let mut lists = Vec::with_capacity(n);
        for _ in 0..n {
            lists.push((x % d) as u32);
            x /= d;
        }
        out.push((lists, wu));
    }
    out
}

fn subsets(len: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << len))
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..len).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn brute_force(n: usize, w: u32, len: usize, support: usize) -> f64 {
    let d = w as usize + 1;
    let per = position_outcomes(n, d, 0.5);
    // Joint outcomes grouped by the forger's view (all lists but the last).
    let mut by_view: HashMap<Vec<u32>, Vec<(f64, Vec<u32>)>> = HashMap::new();
    let mut idx = vec![0usize; len];
    loop {
        let mut prob = 1.0;
        let mut view = Vec::new();
        let mut receiver = Vec::new();
        for &i in &idx {
            let (lists, p) = &per[i];
            prob *= p;
            view.extend_from_slice(&lists[..n - 1]);
            receiver.push(lists[n - 1]);
        }
        by_view.entry(view).or_default().push((prob, receiver));
        let mut k = 0;
        loop {
            if k == len {
                break;
            }
            idx[k] += 1;
            if idx[k] < per.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == len {
            break;
        }
    }

    let position_sets = subsets(len, support);
    let fabrications = d.pow(support as u32);
    let mut total = 0.0;
    for outcomes in by_view.values() {
        let mut best: f64 = 0.0;
        for v in 0..d as u32 {
            for p in &position_sets {
                for fab in 0..fabrications {
                    let mut x = fab;
                    let forged: Vec<u32> = (0..support)
                        .map(|_| {
                            let s = (x % d) as u32;
                            x /= d;
                            s
                        })
                        .collect();
                    let mass: f64 = outcomes
                        .iter()
                        .filter(|(_, r)| {
                            p.iter().zip(&forged).all(|(&k, &f)| f != v && r[k] != v && r[k] != f)
                        })
                        .map(|(pr, _)| pr)
                        .sum();
                    best = best.max(mass);
                }
            }
        }
        total += best;
    }
    total
}

#[test]
fn oracle_matches_brute_force_enumeration() {
    for (n, w, len) in [(3, 3, 1), (3, 3, 2), (3, 3, 3), (3, 4, 2), (4, 4, 1), (4, 4, 2)] {
        for support in 1..=len {
            let exact = brute_force(n, w, len, support);
            let oracle = forgery_oracle(n, Alphabet::new(w).unwrap(), len, support).unwrap();
            assert!(
                (exact - oracle).abs() < 1e-12,
                "n={n} w={w} L={len} s={support}: brute {exact} vs oracle {oracle}"
            );
        }
    }
}

#[test]
fn single_position_three_parties() {
    assert!((brute_force(3, 3, 1, 1) - 0.75).abs() < 1e-12);
}
