//! Matrix products in the even semigroup: near-multiplicativity of expanding
//! eigenvalues, and the pigeonholed ensembles `Xi(L; M, x, k)` and
//! `Omega_N = Xi_1 Xi_2 ... Xi_J`.
//!
//! A set `Xi` is cut out of the norm window `M/2 <= |g| < M` in four stages:
//! the expanding direction must lie within `1/log M` of a fixed target
//! direction, the expanding eigenvalue must fall in the most populated cell
//! of a `1/log L` geometric grid, and the word length must be the most
//! common one. `Omega_N` chains such sets at scales `N^(1/2), N^(1/4), ...`
//! so that every product has expanding eigenvalue comparable to `N`.
//!
//! Word length is the number of letters (always even). The augmented
//! ensembles used for density-one statements are not built here.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{spectral, word_to_matrix, Alphabet, CfWord, Mat2};
use crate::dimension::in_cantor_set;
use crate::enumerate::{gamma_ball, orbit_counts, Counting};
use crate::error::{Error, Result};

/// Smallest window scale the construction accepts.
pub const MIN_SCALE: f64 = 100.0;

fn dist(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] - v[0]).hypot(u[1] - v[1])
}

/// Unit vector `(x, 1)/sqrt(1 + x^2)`.
pub fn direction_of(x: f64) -> [f64; 2] {
    let n = x.hypot(1.0);
    [x / n, 1.0 / n]
}

/// `|lambda(g1 g2) / (lambda(g1) lambda(g2)) - 1|` together with the budget
/// `|v+(g1) - v+(g2)| + |g1|^-2 + |g2|^-2`.
pub fn mult_defect(g1: &Mat2, g2: &Mat2) -> Result<(f64, f64)> {
    let s1 = spectral(g1)?;
    let s2 = spectral(g2)?;
    let s12 = spectral(&(g1 * g2))?;
    let defect = (s12.lambda_plus / (s1.lambda_plus * s2.lambda_plus) - 1.0).abs();
    let budget = dist(s1.v_plus, s2.v_plus) + g1.norm_frobenius().powi(-2) + g2.norm_frobenius().powi(-2);
    Ok((defect, budget))
}

/// Drift of the expanding direction under right multiplication, and the
/// mirror statement for the contracting direction under left multiplication.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Drift {
    /// `|v+(g1 g2) - v+(g1)|`
    pub plus: f64,
    /// `|g1|^-2`
    pub plus_budget: f64,
    /// `|v-(g1 g2) - v-(g2)|`
    pub minus: f64,
    /// `|g2|^-2`
    pub minus_budget: f64,
}

/// Unit-vector distance between the directions of points `p` and `q`, given
/// an accurately computed `dp = p - q`.
fn direction_gap(p: f64, q: f64, dp: f64) -> f64 {
    let theta = (dp / (1.0 + p * q)).atan();
    2.0 * (theta.abs() / 2.0).sin()
}

/// Both drifts are evaluated through `v+(g1 g2) = g1 v+(g2 g1)` and
/// `v-(g1 g2) = g2^-1 v-(g2 g1)`, so that the difference of images under a
/// Moebius map is `(p - q) / ((c p + d)(c q + d))` and never suffers
/// cancellation, even when the drift is far below machine epsilon.
pub fn vplus_drift(g1: &Mat2, g2: &Mat2) -> Result<Drift> {
    let s1 = spectral(g1)?;
    let s2 = spectral(g2)?;
    let s21 = spectral(&(g2 * g1))?;
    let [a1, b1, c1, d1] = g1.to_f64();
    let [a2, b2, c2, d2] = g2.to_f64();

    let (pu, pw) = (s21.point(), s1.point());
    let den = |p: f64| c1 * p + d1;
    let image = |p: f64| (a1 * p + b1) / den(p);
    let plus = direction_gap(image(pu), image(pw), (pu - pw) / (den(pu) * den(pw)));

    let point_minus = |v: [f64; 2]| v[0] / v[1];
    let (qu, qw) = (point_minus(s21.v_minus), point_minus(s2.v_minus));
    let den = |p: f64| a2 - c2 * p;
    let image = |p: f64| (d2 * p - b2) / den(p);
    let minus = direction_gap(image(qu), image(qw), (qu - qw) / (den(qu) * den(qw)));

    Ok(Drift {
        plus,
        plus_budget: g1.norm_frobenius().powi(-2),
        minus,
        minus_budget: g2.norm_frobenius().powi(-2),
    })
}

/// Uniform random word of even length in `[min_len, max_len]`.
pub fn random_even_word<R: Rng>(alphabet: &Alphabet, min_len: usize, max_len: usize, rng: &mut R) -> CfWord {
    let lo = min_len.max(2).div_ceil(2);
    let hi = (max_len / 2).max(lo);
    let len = 2 * rng.gen_range(lo..=hi);
    let letters = alphabet.letters();
    let q = (0..len)
        .map(|_| letters[rng.gen_range(0..letters.len())])
        .collect();
    CfWord::new(q).expect("nonempty word over a valid alphabet")
}

/// Constant bounding every `defect / budget` ratio on sampled pairs of even
/// words (observed worst about 0.3 for `{1,2}`).
pub const CALIBRATED_C: f64 = 20.0;

/// Largest observed `defect / budget` ratios over random pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectCalibration {
    pub samples: usize,
    pub seed: u64,
    pub max_defect_ratio: f64,
    pub max_drift_plus_ratio: f64,
    pub max_drift_minus_ratio: f64,
}

/// Samples `samples` pairs of even words with lengths in `lengths` and
/// records the worst ratios of the product estimates to their budgets.
pub fn calibrate_constants(
    alphabet: &Alphabet,
    samples: usize,
    lengths: (usize, usize),
    seed: u64,
) -> Result<DefectCalibration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Mat2, Mat2)> = (0..samples)
        .map(|_| {
            let w1 = random_even_word(alphabet, lengths.0, lengths.1, &mut rng);
            let w2 = random_even_word(alphabet, lengths.0, lengths.1, &mut rng);
            (word_to_matrix(&w1), word_to_matrix(&w2))
        })
        .collect();
    let ratios: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|(g1, g2)| {
            let (d, b) = mult_defect(g1, g2)?;
            let dr = vplus_drift(g1, g2)?;
            Ok((d / b, dr.plus / dr.plus_budget, dr.minus / dr.minus_budget))
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&(f64, f64, f64)) -> f64| ratios.iter().map(f).fold(0.0, f64::max);
    Ok(DefectCalibration {
        samples,
        seed,
        max_defect_ratio: max(|r| r.0),
        max_drift_plus_ratio: max(|r| r.1),
        max_drift_minus_ratio: max(|r| r.2),
    })
}

/// `[2, 2, 2, ...] = sqrt 2 - 1` when 2 is a letter, otherwise the fixed
/// point of the smallest letter.
pub fn default_target(alphabet: &Alphabet) -> f64 {
    let a = if alphabet.contains(2) {
        2.0
    } else {
        alphabet.min_letter() as f64
    };
    ((a * a + 4.0).sqrt() - a) / 2.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XiMember {
    pub word: Vec<u32>,
    /// `(a, b, c, d)`
    pub entries: [u64; 4],
    pub norm: f64,
    pub lambda: f64,
    pub v_plus: [f64; 2],
}

impl XiMember {
    pub fn matrix(&self) -> Mat2 {
        let e = self.entries.map(|x| x as i64);
        Mat2::new(e[0], e[1], e[2], e[3])
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StageLog {
    pub s1: usize,
    pub s2: usize,
    pub s3: usize,
    pub s4: usize,
    /// Cells of the eigenvalue grid.
    pub lambda_classes: usize,
    /// Distinct word lengths in `S3`.
    pub length_classes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XiSet {
    pub members: Vec<XiMember>,
    /// Top of the selected eigenvalue cell.
    pub l: f64,
    pub m: f64,
    pub k: usize,
    pub x_target: f64,
    pub stages: StageLog,
}

fn member(e: &[u64; 4], word: &[u32]) -> Result<XiMember> {
    let m = Mat2::new(e[0] as i64, e[1] as i64, e[2] as i64, e[3] as i64);
    let s = spectral(&m)?;
    Ok(XiMember {
        word: word.to_vec(),
        entries: *e,
        norm: m.norm_frobenius(),
        lambda: s.lambda_plus,
        v_plus: s.v_plus,
    })
}

/// `|g| <= 2 tr g <= 4|g|` and `d < |g e2| < |g| < 2|g e2| < 4d`.
pub fn comparability_chains_hold(e: &[u64; 4]) -> bool {
    let [a, b, c, d] = e.map(|x| x as f64);
    let norm = (a * a + b * b + c * c + d * d).sqrt();
    let tr = a + d;
    let col = b.hypot(d);
    norm <= 2.0 * tr
        && 2.0 * tr <= 4.0 * norm
        && d < col
        && col < norm
        && norm < 2.0 * col
        && 2.0 * col < 4.0 * d
}

/// Index of the largest class, smallest index on ties.
fn argmax_class<K: Copy + Ord>(counts: &BTreeMap<K, usize>) -> Option<K> {
    let mut best: Option<(K, usize)> = None;
    for (&k, &c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k)
}

/// Builds `Xi(L; M, x, k)`.
pub fn build_xi(alphabet: &Alphabet, m: f64, x_target: f64) -> Result<XiSet> {
    if !(m.is_finite() && m >= MIN_SCALE) {
        return Err(Error::input(format!("M = {m} must be at least {MIN_SCALE}")));
    }
    if !in_cantor_set(alphabet, x_target, 10) {
        return Err(Error::input(format!(
            "target {x_target} is not in the limit set of {{{alphabet}}}"
        )));
    }
    let mut ball = Vec::new();
    gamma_ball(alphabet, m / 2.0, m, |e, w| ball.push((*e, w.to_vec())));
    let s1: Vec<XiMember> = ball
        .par_iter()
        .map(|(e, w)| member(e, w))
        .collect::<Result<_>>()?;

    let v = direction_of(x_target);
    let window = 1.0 / m.ln();
    let s2: Vec<&XiMember> = s1.iter().filter(|g| dist(g.v_plus, v) < window).collect();
    if s2.is_empty() {
        return Err(Error::Construction(format!(
            "no element with |g| in [{}, {m}) points within {window:.4} of the target",
            m / 2.0
        )));
    }

    // descending grid L_0 = 4M, L_{i+1} = L_i (1 - 1/log L_i), down past the smallest eigenvalue
    let lambda_min = s2.iter().map(|g| g.lambda).fold(f64::INFINITY, f64::min);
    let lambda_max = s2.iter().map(|g| g.lambda).fold(0.0, f64::max);
    let mut grid = vec![(4.0 * m).max(lambda_max)];
    while *grid.last().unwrap() >= lambda_min.min(m / 4.0) {
        let l = *grid.last().unwrap();
        grid.push(l * (1.0 - 1.0 / l.ln()));
    }
    let cell = |lambda: f64| grid.partition_point(|&l| l >= lambda) - 1;
    let mut lambda_counts = BTreeMap::new();
    for g in &s2 {
        *lambda_counts.entry(cell(g.lambda)).or_insert(0usize) += 1;
    }
    let chosen = argmax_class(&lambda_counts).expect("S2 is nonempty");
    let l = grid[chosen];
    let s3: Vec<&XiMember> = s2.iter().copied().filter(|g| cell(g.lambda) == chosen).collect();

    let mut length_counts = BTreeMap::new();
    for g in &s3 {
        *length_counts.entry(g.word.len()).or_insert(0usize) += 1;
    }
    let k = argmax_class(&length_counts).expect("S3 is nonempty");
    let members: Vec<XiMember> = s3
        .iter()
        .filter(|g| g.word.len() == k)
        .map(|g| (*g).clone())
        .collect();

    let stages = StageLog {
        s1: s1.len(),
        s2: s2.len(),
        s3: s3.len(),
        s4: members.len(),
        lambda_classes: grid.len() - 1,
        length_classes: length_counts.len(),
    };
    let xi = XiSet {
        members,
        l,
        m,
        k,
        x_target,
        stages,
    };
    check_xi(&xi)?;
    Ok(xi)
}

/// Member-wise invariants of a constructed set.
pub fn check_xi(xi: &XiSet) -> Result<()> {
    let v = direction_of(xi.x_target);
    let lower = xi.l * (1.0 - 1.0 / xi.l.ln());
    let ratio = xi.l / xi.m;
    if !(0.25 < ratio && ratio < 4.0) {
        return Err(Error::invariant(format!("L/M = {ratio} outside (1/4, 4)")));
    }
    for g in &xi.members {
        let bad = if !(xi.m / 2.0 <= g.norm && g.norm < xi.m) {
            Some("norm outside [M/2, M)")
        } else if dist(g.v_plus, v) >= 1.0 / xi.m.ln() {
            Some("expanding direction outside the window")
        } else if !(lower <= g.lambda && g.lambda <= xi.l) {
            Some("eigenvalue outside [L(1 - 1/log L), L]")
        } else if g.word.len() != xi.k {
            Some("word length differs from k")
        } else if !comparability_chains_hold(&g.entries) {
            Some("norm/trace/column comparisons fail")
        } else {
            None
        };
        if let Some(why) = bad {
            return Err(Error::invariant(format!("{why}: word {:?}", g.word)));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaEnsemble {
    pub n: f64,
    pub x_target: f64,
    pub factors: Vec<XiSet>,
    /// `N_j = L_j`
    pub scales: Vec<f64>,
    /// `alpha_j = L_j / M_j`
    pub alphas: Vec<f64>,
    /// Set when `N` was too small for two factors.
    pub degenerate: bool,
}

impl OmegaEnsemble {
    pub fn j(&self) -> usize {
        self.factors.len()
    }

    pub fn scale_product(&self) -> f64 {
        self.scales.iter().product()
    }

    /// `|Xi_1| ... |Xi_J|` as a float.
    pub fn cardinality(&self) -> f64 {
        self.factors.iter().map(|f| f.members.len() as f64).product()
    }
}

/// Chains `Xi` sets at scales `sqrt N`, then `N_{j-1}^(1/2) / alpha_{j-1}`
/// while that stays above [`MIN_SCALE`], finishing with `N_{J-1} / alpha_{J-1}^2`.
///
/// If even the last step would fall below [`MIN_SCALE`], a single set at
/// scale `N` is returned and flagged degenerate.
pub fn build_omega(alphabet: &Alphabet, n: f64, x_target: f64) -> Result<OmegaEnsemble> {
    if !(n.is_finite() && n >= 1e4) {
        return Err(Error::input(format!("N = {n} must be at least 1e4")));
    }
    let mut factors = vec![build_xi(alphabet, n.sqrt(), x_target)?];
    let mut degenerate = false;
    loop {
        let last = factors.last().unwrap();
        let (nj, aj) = (last.l, last.l / last.m);
        let next = nj.sqrt() / aj;
        if next >= MIN_SCALE {
            factors.push(build_xi(alphabet, next, x_target)?);
            continue;
        }
        let end = nj / (aj * aj);
        if end >= MIN_SCALE {
            factors.push(build_xi(alphabet, end, x_target)?);
        } else {
            degenerate = true;
        }
        break;
    }
    if degenerate {
        factors = vec![build_xi(alphabet, n, x_target)?];
    }
    let scales = factors.iter().map(|f| f.l).collect();
    let alphas = factors.iter().map(|f| f.l / f.m).collect();
    let ens = OmegaEnsemble {
        n,
        x_target,
        factors,
        scales,
        alphas,
        degenerate,
    };
    let ratio = ens.scale_product() / n;
    if !(0.25 < ratio && ratio < 4.0) {
        return Err(Error::invariant(format!(
            "prod N_j / N = {ratio} outside (1/4, 4)"
        )));
    }
    Ok(ens)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaSample {
    pub indices: Vec<usize>,
    pub lambda: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaCheck {
    pub samples: usize,
    pub seed: u64,
    pub j: usize,
    pub scales: Vec<f64>,
    /// Extremes of `lambda(product) / prod N_j`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Every sample has the ratio in `(1/2, 2)`.
    pub eigenvalue_ok: bool,
    /// Every sample has `|g| <= 2 lambda <= 16 N`.
    pub norm_ok: bool,
    /// Distinct index tuples gave distinct words.
    pub injective: bool,
    /// Every concatenated word splits back into its factors by the fixed lengths.
    pub parses_back: bool,
}

impl OmegaCheck {
    pub fn all_ok(&self) -> bool {
        self.eigenvalue_ok && self.norm_ok && self.injective && self.parses_back
    }
}

/// Draws `count` uniform tuples `(xi_1, ..., xi_J)` and checks the product
/// estimates on each.
pub fn sample_omega(ens: &OmegaEnsemble, count: usize, seed: u64) -> Result<(OmegaCheck, Vec<OmegaSample>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuples: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            ens.factors
                .iter()
                .map(|f| rng.gen_range(0..f.members.len()))
                .collect()
        })
        .collect();
    let lengths: Vec<usize> = ens.factors.iter().map(|f| f.k).collect();
    let prod_scale = ens.scale_product();
    let mut samples = Vec::with_capacity(count);
    let mut words = HashSet::new();
    let mut distinct_tuples = HashSet::new();
    let mut parses_back = true;
    for idx in &tuples {
        let mut word = Vec::new();
        let mut g = Mat2::identity();
        for (f, &i) in ens.factors.iter().zip(idx) {
            let xi = &f.members[i];
            word.extend_from_slice(&xi.word);
            g = &g * &xi.matrix();
        }
        let mut rest = &word[..];
        for (f, (&i, &k)) in ens.factors.iter().zip(idx.iter().zip(&lengths)) {
            let (head, tail) = rest.split_at(k);
            parses_back &= head == &f.members[i].word[..];
            rest = tail;
        }
        parses_back &= rest.is_empty();
        let s = spectral(&g)?;
        samples.push(OmegaSample {
            indices: idx.clone(),
            lambda: s.lambda_plus,
            norm: g.norm_frobenius(),
        });
        if distinct_tuples.insert(idx.clone()) {
            words.insert(word);
        }
    }
    let ratios = samples.iter().map(|s| s.lambda / prod_scale);
    let min_ratio = ratios.clone().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.fold(0.0, f64::max);
    let check = OmegaCheck {
        samples: count,
        seed,
        j: ens.j(),
        scales: ens.scales.clone(),
        min_ratio,
        max_ratio,
        eigenvalue_ok: 0.5 < min_ratio && max_ratio < 2.0,
        norm_ok: samples
            .iter()
            .all(|s| s.norm <= 2.0 * s.lambda && 2.0 * s.lambda <= 16.0 * ens.n),
        injective: words.len() == distinct_tuples.len(),
        parses_back,
    };
    Ok((check, samples))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CardinalityReport {
    pub n: f64,
    pub j: usize,
    pub factor_sizes: Vec<usize>,
    /// `log(prod |Xi_j|)`
    pub log_cardinality: f64,
    /// `log(prod |Xi_j|) / log N`, to be compared with `2 delta`.
    pub exponent: f64,
    /// `c` with `prod |Xi_j| = N^(2 delta) exp(-c (log log N)^2)`.
    pub fitted_c: f64,
    /// Reduced fractions with denominator below `N`.
    pub fraction_count: u64,
    /// `prod |Xi_j| / fraction_count`.
    pub ratio_to_fractions: f64,
}

/// Compares `|Omega_N|` against `N^(2 delta)` and the fraction count.
///
/// `fraction_count` is skipped (reported as 0) above `1e9`.
pub fn omega_cardinality_report(ens: &OmegaEnsemble, alphabet: &Alphabet, delta: f64) -> CardinalityReport {
    let log_card: f64 = ens.factors.iter().map(|f| (f.members.len() as f64).ln()).sum();
    let ln_n = ens.n.ln();
    let fitted_c = (2.0 * delta * ln_n - log_card) / ln_n.ln().powi(2);
    let fraction_count = if ens.n <= 1e9 {
        orbit_counts(alphabet, Counting::Canonical, &[ens.n as u64])[0]
    } else {
        0
    };
    CardinalityReport {
        n: ens.n,
        j: ens.j(),
        factor_sizes: ens.factors.iter().map(|f| f.members.len()).collect(),
        log_cardinality: log_card,
        exponent: log_card / ln_n,
        fitted_c,
        fraction_count,
        ratio_to_fractions: if fraction_count > 0 {
            log_card.exp() / fraction_count as f64
        } else {
            f64::NAN
        },
    }
}
