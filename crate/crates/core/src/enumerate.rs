//! Exhaustive enumeration of the bounded-quotient fractions `b/d` with
//! `d < N`, their denominators, and multiplicities.
//!
//! The walk is a depth-first extension of words over the alphabet. Appending
//! a letter `a` maps the second column `(b, d)` of the word's matrix to
//! `(b' + a b, d' + a d)`, where `(b', d')` is the first column, so
//! denominators strictly increase along every path and any prefix with
//! `d >= N` can be cut.
//!
//! Bounds are strict: only `d < N` is visited.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::Alphabet;
use crate::error::{Error, Result};

/// Which words over the alphabet are counted, and how often.
///
/// A rational `b/d < 1` has exactly two expansions, `[.., a]` with `a >= 2`
/// and `[.., a-1, 1]`. The modes differ in which of them must lie over the
/// alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Counting {
    /// The expansion with last quotient `>= 2` must lie over the alphabet.
    /// This is the classical bounded-quotient convention; under it the
    /// alphabet `{1}` has no fractions at all.
    #[default]
    Canonical,
    /// Either expansion may lie over the alphabet; each fraction counts
    /// once. Under it `{1}` yields the ratios of consecutive Fibonacci
    /// numbers, and `6` is a denominator for `{1,2,3,4}` via `5/6 = [1,4,1]`.
    Either,
    /// Every word over the alphabet counts, so a fraction both of whose
    /// expansions lie over the alphabet counts twice (orbit points
    /// `gamma e2` of the full semigroup).
    Orbit,
}

/// A visited fraction together with the word over the alphabet that
/// produced it.
#[derive(Clone, Copy, Debug)]
pub struct OrbitPoint<'a> {
    pub b: u64,
    pub d: u64,
    pub word: &'a [u32],
}

#[derive(Clone, Copy)]
struct Node {
    b_prev: u64,
    b: u64,
    d_prev: u64,
    d: u64,
}

impl Node {
    const ROOT: Node = Node {
        b_prev: 1,
        b: 0,
        d_prev: 0,
        d: 1,
    };

    #[inline]
    fn child(self, a: u64) -> Option<Node> {
        let d = a.checked_mul(self.d)?.checked_add(self.d_prev)?;
        let b = a.checked_mul(self.b)?.checked_add(self.b_prev)?;
        Some(Node {
            b_prev: self.b,
            b,
            d_prev: self.d,
            d,
        })
    }
}

#[inline]
fn counts(word: &[u32], alphabet: &Alphabet, counting: Counting) -> bool {
    match (word, counting) {
        ([] | [1], _) => false,
        ([.., 1], Counting::Canonical) => false,
        ([.., prev, 1], Counting::Either) => !alphabet.contains(prev + 1),
        _ => true,
    }
}

struct Walk<'a, F> {
    alphabet: &'a Alphabet,
    n: u64,
    counting: Counting,
    word: Vec<u32>,
    visit: F,
}

impl<F: FnMut(OrbitPoint<'_>)> Walk<'_, F> {
    fn descend(&mut self, node: Node) {
        if counts(&self.word, self.alphabet, self.counting) {
            (self.visit)(OrbitPoint {
                b: node.b,
                d: node.d,
                word: &self.word,
            });
        }
        for &a in self.alphabet.letters() {
            let Some(child) = node.child(a as u64) else { break };
            debug_assert!(child.d > node.d || node.d == 1);
            if child.d >= self.n {
                // letters are increasing, so larger letters overshoot too
                break;
            }
            self.word.push(a);
            self.descend(child);
            self.word.pop();
        }
    }
}

fn prefix_node(prefix: &[u32]) -> Option<Node> {
    prefix
        .iter()
        .try_fold(Node::ROOT, |node, &a| node.child(a as u64))
}

fn walk_from<F: FnMut(OrbitPoint<'_>)>(
    alphabet: &Alphabet,
    n: u64,
    counting: Counting,
    prefix: &[u32],
    visit: F,
) {
    let Some(node) = prefix_node(prefix) else { return };
    if node.d >= n {
        return;
    }
    let mut walk = Walk {
        alphabet,
        n,
        counting,
        word: prefix.to_vec(),
        visit,
    };
    walk.descend(node);
}

/// Visits every `b/d` with `d < n` whose expansion lies over the alphabet,
/// sequentially and in depth-first order.
pub fn enumerate_orbit<F: FnMut(OrbitPoint<'_>)>(alphabet: &Alphabet, n: u64, counting: Counting, visit: F) {
    walk_from(alphabet, n, counting, &[], visit);
}

/// Disjoint subtrees covering the whole walk: every word of length one is
/// visited by its own task without descending, and each two-letter prefix
/// roots a subtree.
enum Task {
    Single(u32),
    Subtree([u32; 2]),
}

fn tasks(alphabet: &Alphabet) -> Vec<Task> {
    let letters = alphabet.letters();
    let mut out: Vec<Task> = letters.iter().map(|&a| Task::Single(a)).collect();
    for &a in letters {
        for &b in letters {
            out.push(Task::Subtree([a, b]));
        }
    }
    out
}

fn run_task<F: FnMut(OrbitPoint<'_>)>(
    alphabet: &Alphabet,
    n: u64,
    counting: Counting,
    task: &Task,
    mut visit: F,
) {
    match task {
        Task::Single(a) => {
            let word = [*a];
            if let Some(node) = prefix_node(&word) {
                if node.d < n && counts(&word, alphabet, counting) {
                    visit(OrbitPoint {
                        b: node.b,
                        d: node.d,
                        word: &word,
                    });
                }
            }
        }
        Task::Subtree(prefix) => walk_from(alphabet, n, counting, prefix, visit),
    }
}

/// Collects the orbit as a sorted list of `(b, d)` pairs.
pub fn orbit_pairs(alphabet: &Alphabet, n: u64, counting: Counting) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = tasks(alphabet)
        .par_iter()
        .flat_map_iter(|task| {
            let mut local = Vec::new();
            run_task(alphabet, n, counting, task, |p| local.push((p.b, p.d)));
            local
        })
        .collect();
    out.sort_unstable_by_key(|&(b, d)| (d, b));
    out
}

const DENSE_LIMIT: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Counts {
    Dense(Vec<u32>),
    Sparse(BTreeMap<u64, u64>),
}

/// Multiplicities `d -> #{b : b/d counted}` for all `d < n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityTable {
    n: u64,
    counts: Counts,
}

impl MultiplicityTable {
    pub fn empty(n: u64) -> Self {
        let counts = if n <= DENSE_LIMIT {
            Counts::Dense(vec![0; n as usize])
        } else {
            Counts::Sparse(BTreeMap::new())
        };
        MultiplicityTable { n, counts }
    }

    /// Histogram of an arbitrary multiset of positive integers below `n`.
    pub fn from_values<I: IntoIterator<Item = u64>>(n: u64, values: I) -> Result<Self> {
        let mut t = MultiplicityTable::empty(n);
        for v in values {
            if v >= n {
                return Err(Error::input(format!("value {v} is not below the bound {n}")));
            }
            t.add(v, 1);
        }
        Ok(t)
    }

    /// Table from `(value, count)` pairs with values below `n`.
    pub fn from_counts<I: IntoIterator<Item = (u64, u64)>>(n: u64, pairs: I) -> Result<Self> {
        let mut t = MultiplicityTable::empty(n);
        for (v, c) in pairs {
            if v >= n {
                return Err(Error::input(format!("value {v} is not below the bound {n}")));
            }
            t.add(v, c);
        }
        Ok(t)
    }

    #[inline]
    pub fn add(&mut self, d: u64, count: u64) {
        match &mut self.counts {
            Counts::Dense(v) => v[d as usize] += count as u32,
            Counts::Sparse(m) => *m.entry(d).or_insert(0) += count,
        }
    }

    /// Adds another table with the same bound into this one.
    pub fn merge(&mut self, other: &MultiplicityTable) {
        assert_eq!(self.n, other.n, "merging tables with different bounds");
        match (&mut self.counts, &other.counts) {
            (Counts::Dense(a), Counts::Dense(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
            }
            _ => {
                for (d, c) in other.iter() {
                    self.add(d, c);
                }
            }
        }
    }

    pub fn bound(&self) -> u64 {
        self.n
    }

    pub fn get(&self, d: u64) -> u64 {
        match &self.counts {
            Counts::Dense(v) => v.get(d as usize).copied().unwrap_or(0) as u64,
            Counts::Sparse(m) => m.get(&d).copied().unwrap_or(0),
        }
    }

    /// Nonzero entries in increasing order of `d`.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match &self.counts {
            Counts::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(d, &c)| (d as u64, c as u64)),
            ),
            Counts::Sparse(m) => Box::new(m.iter().filter(|(_, &c)| c > 0).map(|(&d, &c)| (d, c))),
        }
    }

    /// Sum of all multiplicities.
    pub fn total(&self) -> u64 {
        self.iter().map(|(_, c)| c).sum()
    }

    /// Number of distinct denominators.
    pub fn support_len(&self) -> u64 {
        self.iter().count() as u64
    }

    pub fn support(&self) -> Vec<u64> {
        self.iter().map(|(d, _)| d).collect()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.iter().map(|(_, c)| c).max().unwrap_or(0)
    }

    /// Cumulative `(#R(m), #D(m))` for every bound `m <= n`, as arrays
    /// indexed by `m`. Dense tables only.
    fn cumulative(&self) -> (Vec<u64>, Vec<u64>) {
        let n = self.n as usize;
        let mut r = vec![0u64; n + 1];
        let mut dd = vec![0u64; n + 1];
        for m in 1..=n {
            let c = self.get((m - 1) as u64);
            r[m] = r[m - 1] + c;
            dd[m] = dd[m - 1] + u64::from(c > 0);
        }
        (r, dd)
    }
}

/// Multiplicity table of all counted fractions with `d < n`, computed in
/// parallel over disjoint word prefixes.
pub fn multiplicity_table(alphabet: &Alphabet, n: u64, counting: Counting) -> MultiplicityTable {
    tasks(alphabet)
        .par_iter()
        .fold(
            || MultiplicityTable::empty(n),
            |mut table, task| {
                run_task(alphabet, n, counting, task, |p| table.add(p.d, 1));
                table
            },
        )
        .reduce(
            || MultiplicityTable::empty(n),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}

/// All `d` in `[2, n)` that are not denominators.
pub fn exceptions(alphabet: &Alphabet, n: u64) -> Result<Vec<u64>> {
    exceptions_with(alphabet, Counting::Canonical, n)
}

pub fn exceptions_with(alphabet: &Alphabet, counting: Counting, n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::input("exceptions need N >= 2"));
    }
    let table = multiplicity_table(alphabet, n, counting);
    Ok((2..n).filter(|&d| table.get(d) == 0).collect())
}

/// Counts `#R(m)` for each bound in `bounds` from a single enumeration.
pub fn orbit_counts(alphabet: &Alphabet, counting: Counting, bounds: &[u64]) -> Vec<u64> {
    let Some(&top) = bounds.iter().max() else {
        return Vec::new();
    };
    let table = multiplicity_table(alphabet, top, counting);
    let (r, _) = table.cumulative();
    bounds.iter().map(|&m| r[m as usize]).collect()
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of `#R(N)` against `N`; approximates `2 delta`.
pub fn hensley_exponent(alphabet: &Alphabet, counting: Counting, bounds: &[u64]) -> Result<f64> {
    if bounds.len() < 3 || bounds.windows(2).any(|w| w[0] >= w[1]) || bounds[0] < 2 {
        return Err(Error::input(
            "need at least three strictly increasing bounds, all >= 2",
        ));
    }
    let counts = orbit_counts(alphabet, counting, bounds);
    if counts.contains(&0) {
        return Err(Error::input(
            "some bound has an empty orbit; cannot take logarithms",
        ));
    }
    let x: Vec<f64> = bounds.iter().map(|&m| (m as f64).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    Ok(ls_slope(&x, &y))
}

/// A failure of `b + a d` to be a denominator at the enlarged bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumsetCounterexample {
    pub b: u64,
    pub d: u64,
    pub a: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumsetReport {
    pub n: u64,
    pub enlarged_bound: u64,
    pub fractions_checked: u64,
    pub counterexamples: Vec<SumsetCounterexample>,
    /// `#D(N)`.
    pub distinct_d: u64,
    /// For each letter `a`, the number of distinct values `b + a d`.
    pub distinct_shifted: Vec<(u32, u64)>,
    /// `#D(N) * #{b + a d} >= #R(N)` for every letter `a`.
    pub product_bound_holds: bool,
}

/// For every `b/d` with `d < n`, checks that `d` and each `b + a d`
/// (for `a` in the alphabet) are denominators, the latter below
/// `(max letter + 1) n`.
pub fn sumset_check(alphabet: &Alphabet, counting: Counting, n: u64) -> SumsetReport {
    let big = (alphabet.max_letter() as u64 + 1) * n;
    let small = multiplicity_table(alphabet, n, counting);
    let large = multiplicity_table(alphabet, big, counting);
    let pairs = orbit_pairs(alphabet, n, counting);
    let mut counterexamples = Vec::new();
    let mut shifted: Vec<std::collections::HashSet<u64>> = vec![Default::default(); alphabet.len()];
    for &(b, d) in &pairs {
        if small.get(d) == 0 {
            counterexamples.push(SumsetCounterexample { b, d, a: 0 });
        }
        for (i, &a) in alphabet.letters().iter().enumerate() {
            let v = b + a as u64 * d;
            shifted[i].insert(v);
            if large.get(v) == 0 {
                counterexamples.push(SumsetCounterexample { b, d, a });
            }
        }
    }
    let distinct_d = small.support_len();
    let distinct_shifted: Vec<(u32, u64)> = alphabet
        .letters()
        .iter()
        .zip(&shifted)
        .map(|(&a, s)| (a, s.len() as u64))
        .collect();
    let total = pairs.len() as u64;
    let product_bound_holds = distinct_shifted
        .iter()
        .all(|&(_, s)| distinct_d as u128 * s as u128 >= total as u128);
    SumsetReport {
        n,
        enlarged_bound: big,
        fractions_checked: total,
        counterexamples,
        distinct_d,
        distinct_shifted,
        product_bound_holds,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityRow {
    pub n: u64,
    pub denominators: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub delta: f64,
    pub rows: Vec<DensityRow>,
    /// Largest multiplicity seen up to the top bound.
    pub max_multiplicity: u64,
}

/// `#D(N_i) / N_i^(2 delta)` on a grid of `points` log-spaced bounds up to
/// `n_max`.
pub fn density_ratio(
    alphabet: &Alphabet,
    counting: Counting,
    n_max: u64,
    delta: f64,
    points: usize,
) -> Result<DensityReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::input("delta must lie in [0, 1)"));
    }
    if n_max < 10 || points < 2 {
        return Err(Error::input("need n_max >= 10 and at least two grid points"));
    }
    let table = multiplicity_table(alphabet, n_max, counting);
    let (_, dcount) = table.cumulative();
    let lo = 10f64.ln();
    let hi = (n_max as f64).ln();
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|m| m.clamp(10, n_max))
        .collect();
    grid.dedup();
    let rows = grid
        .into_iter()
        .map(|m| {
            let denominators = dcount[m as usize];
            DensityRow {
                n: m,
                denominators,
                ratio: denominators as f64 / (m as f64).powf(2.0 * delta),
            }
        })
        .collect();
    Ok(DensityReport {
        delta,
        rows,
        max_multiplicity: table.max_multiplicity(),
    })
}

/// Matrices `(a b; c d)` of even products of generators with Frobenius
/// norm in `[lo, hi)`, each with its word.
#[derive(Clone, Debug)]
pub struct GammaElement {
    pub entries: [u64; 4],
    pub word: Vec<u32>,
}

/// Walks all even words of length >= 2 over the alphabet whose matrices
/// have norm below `hi`, reporting those with norm at least `lo`.
pub fn gamma_ball<F: FnMut(&[u64; 4], &[u32])>(alphabet: &Alphabet, lo: f64, hi: f64, mut visit: F) {
    fn norm2(e: &[u64; 4]) -> f64 {
        e.iter().map(|&x| (x as f64) * (x as f64)).sum()
    }
    fn go<F: FnMut(&[u64; 4], &[u32])>(
        alphabet: &Alphabet,
        lo2: f64,
        hi2: f64,
        e: [u64; 4],
        word: &mut Vec<u32>,
        visit: &mut F,
    ) {
        if word.len() >= 2 && word.len() % 2 == 0 {
            let n2 = norm2(&e);
            if n2 >= lo2 {
                visit(&e, word);
            }
        }
        for &a in alphabet.letters() {
            let a64 = a as u64;
            // (p' p; q' q) * (0 1; 1 a) = (p, p' + a p; q, q' + a q)
            let child = [e[1], e[0] + a64 * e[1], e[3], e[2] + a64 * e[3]];
            if norm2(&child) >= hi2 {
                break;
            }
            word.push(a);
            go(alphabet, lo2, hi2, child, word, visit);
            word.pop();
        }
    }
    let mut word = Vec::new();
    go(alphabet, lo * lo, hi * hi, [1, 0, 0, 1], &mut word, &mut visit);
}

/// Collects [`gamma_ball`] into a list sorted by word.
pub fn gamma_elements(alphabet: &Alphabet, lo: f64, hi: f64) -> Vec<GammaElement> {
    let mut out = Vec::new();
    gamma_ball(alphabet, lo, hi, |e, w| {
        out.push(GammaElement {
            entries: *e,
            word: w.to_vec(),
        })
    });
    out
}
