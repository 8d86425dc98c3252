//! Exponential sums `S(theta) = sum of e(theta d)` over a multiset of
//! denominators, the recovery of representation numbers by Fourier
//! inversion, and the distribution of `|S|^2` over major and minor arcs.
//!
//! `e(x) = exp(2 pi i x)`. Arc masses are computed exactly: `|S|^2` is a
//! trigonometric polynomial whose coefficients are the autocorrelation of
//! the multiplicity vector, so its integral over an interval has a closed
//! form.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cf::Alphabet;
use crate::enumerate::{multiplicity_table, Counting, MultiplicityTable};
use crate::error::{Error, Result};
use crate::products::OmegaEnsemble;

/// Largest multiset accepted from an ensemble.
pub const MAX_SOURCE: u64 = 10_000_000;
/// Largest DFT length.
pub const MAX_DFT: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    Orbit,
    Ensemble,
    Values,
}

/// A multiset of positive integers stored as `value -> count`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpSumSource {
    pub kind: SourceKind,
    /// Scale `N`: values are below `N` for orbits and at most `16N` for ensembles.
    pub scale: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl ExpSumSource {
    pub fn from_values<I: IntoIterator<Item = u64>>(values: I) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for v in values {
            if v == 0 {
                return Err(Error::input("values must be positive"));
            }
            *counts.entry(v).or_insert(0) += 1;
        }
        let scale = counts.keys().next_back().map_or(1, |m| m + 1);
        Ok(ExpSumSource {
            kind: SourceKind::Values,
            scale,
            counts,
        })
    }

    pub fn from_table(table: &MultiplicityTable) -> Self {
        ExpSumSource {
            kind: SourceKind::Orbit,
            scale: table.bound(),
            counts: table.iter().collect(),
        }
    }

    /// Denominators of all fractions in the orbit below `n`.
    pub fn from_orbit(alphabet: &Alphabet, n: u64, counting: Counting) -> Self {
        Self::from_table(&multiplicity_table(alphabet, n, counting))
    }

    /// Lower-right entries of every product in the ensemble.
    pub fn from_ensemble(ens: &OmegaEnsemble) -> Result<Self> {
        let size = ens.cardinality();
        if size > MAX_SOURCE as f64 {
            return Err(Error::resource(format!(
                "ensemble has {size:.3e} products, above {MAX_SOURCE}"
            )));
        }
        // fold factor by factor over distinct (c, d) bottom rows with counts
        let mut rows: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        rows.insert((0, 1), 1);
        for f in &ens.factors {
            let mut next = BTreeMap::new();
            for (&(c, d), &k) in &rows {
                for m in &f.members {
                    let [a2, b2, c2, d2] = m.entries;
                    let row = (c * a2 + d * c2, c * b2 + d * d2);
                    *next.entry(row).or_insert(0) += k;
                }
            }
            rows = next;
        }
        let mut counts = BTreeMap::new();
        for ((_, d), k) in rows {
            *counts.entry(d).or_insert(0) += k;
        }
        Ok(ExpSumSource {
            kind: SourceKind::Ensemble,
            scale: ens.n.ceil() as u64,
            counts,
        })
    }

    /// Size of the multiset, `S(0)`.
    pub fn size(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max_value(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// `sum of R(n)^2`.
    pub fn energy(&self) -> f64 {
        self.counts.values().map(|&c| (c as f64).powi(2)).sum()
    }
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// `S(theta)`.
pub fn s_n(source: &ExpSumSource, theta: f64) -> Complex64 {
    source
        .counts
        .iter()
        .map(|(&d, &c)| c as f64 * e((theta * d as f64).fract()))
        .sum()
}

/// `S(a/q)` with exact phase reduction.
pub fn s_rational(source: &ExpSumSource, a: u64, q: u64) -> Complex64 {
    source
        .counts
        .iter()
        .map(|(&d, &c)| c as f64 * e(((a as u128 * d as u128) % q as u128) as f64 / q as f64))
        .sum()
}

/// `S(a/q)` regrouped through the residue histogram of the source mod `q`.
pub fn s_rational_by_residues(source: &ExpSumSource, a: u64, q: u64) -> Complex64 {
    let mut hist = vec![0u64; q as usize];
    for (&d, &c) in &source.counts {
        hist[(d % q) as usize] += c;
    }
    hist.iter()
        .enumerate()
        .map(|(r, &c)| c as f64 * e(((a as u128 * r as u128) % q as u128) as f64 / q as f64))
        .sum()
}

/// `S(j/m)` for `j = 0..m`. Evaluated directly from a twiddle table when
/// affordable, otherwise by one FFT of the multiplicity vector.
pub fn s_on_grid(source: &ExpSumSource, m: usize) -> Result<Vec<Complex64>> {
    if m == 0 || m > MAX_DFT {
        return Err(Error::resource(format!("grid size {m} outside 1..={MAX_DFT}")));
    }
    let direct_cost = m as f64 * source.counts.len() as f64;
    if direct_cost <= 2e8 {
        let twiddle: Vec<Complex64> = (0..m).map(|k| e(k as f64 / m as f64)).collect();
        let m64 = m as u64;
        let out = (0..m64)
            .into_par_iter()
            .map(|j| {
                source
                    .counts
                    .iter()
                    .map(|(&d, &c)| twiddle[((j as u128 * d as u128) % m64 as u128) as usize] * c as f64)
                    .sum()
            })
            .collect();
        return Ok(out);
    }
    // S(j/m) = sum_d c_d e(j d / m) is m times the inverse DFT of the folded counts
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (&d, &c) in &source.counts {
        buf[(d % m as u64) as usize] += c as f64;
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    Ok(buf)
}

/// `next power of two >= 16 scale + 1`.
pub fn default_dft_len(source: &ExpSumSource) -> usize {
    (16 * source.scale + 1).next_power_of_two() as usize
}

#[derive(Clone, Debug)]
pub struct Representation {
    pub dft_len: usize,
    /// `R(n)` by counting.
    pub direct: MultiplicityTable,
    /// `R(n)` by Fourier inversion.
    pub inverted: MultiplicityTable,
    /// Largest distance of an inverted coefficient from the nearest integer.
    pub max_rounding: f64,
    pub agree: bool,
    /// `(1/M) sum |S(j/M)|^2`
    pub parseval_lhs: f64,
    /// `sum R(n)^2`
    pub parseval_rhs: f64,
}

impl Representation {
    pub fn parseval_relative_error(&self) -> f64 {
        (self.parseval_lhs - self.parseval_rhs).abs() / self.parseval_rhs.max(1.0)
    }
}

/// Representation numbers by histogram and by inverting `S` sampled at
/// `dft_len` equispaced points; refuses lengths that would alias.
pub fn representation_numbers(source: &ExpSumSource, dft_len: usize) -> Result<Representation> {
    let max = source.max_value();
    if (dft_len as u64) <= max {
        return Err(Error::input(format!(
            "DFT length {dft_len} would alias values up to {max}"
        )));
    }
    let bound = max + 1;
    let direct = MultiplicityTable::from_counts(bound, source.counts.iter().map(|(&d, &c)| (d, c)))?;
    let mut s = s_on_grid(source, dft_len)?;
    let m = dft_len as f64;
    let parseval_lhs = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
    // R(n) = (1/M) sum_j S(j/M) e(-j n / M)
    FftPlanner::new().plan_fft_forward(dft_len).process(&mut s);
    let mut max_rounding = 0.0f64;
    let mut inverted = MultiplicityTable::empty(bound);
    for (n, z) in s.iter().enumerate().take(bound as usize) {
        let v = z.re / m;
        let r = v.round();
        max_rounding = max_rounding.max((v - r).abs()).max((z.im / m).abs());
        if r >= 0.5 {
            inverted.add(n as u64, r as u64);
        }
    }
    for z in &s[bound as usize..] {
        max_rounding = max_rounding.max(z.norm() / m);
    }
    if max_rounding > 1e-6 {
        return Err(Error::Numerical {
            message: format!("inverted coefficients off integers by {max_rounding:e}"),
            iterations: 0,
            last_change: max_rounding,
        });
    }
    let agree = direct.iter().eq(inverted.iter());
    Ok(Representation {
        dft_len,
        direct,
        inverted,
        max_rounding,
        agree,
        parseval_lhs,
        parseval_rhs: source.energy(),
    })
}

/// Autocorrelation `A(h) = sum_d c_d c_{d+h}` for `h = 0..=max`.
fn autocorrelation(source: &ExpSumSource) -> Vec<f64> {
    let max = source.max_value() as usize;
    let len = (2 * max + 1).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (&d, &c) in &source.counts {
        buf[d as usize] = Complex64::new(c as f64, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    buf.iter_mut()
        .for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().take(max + 1).map(|z| z.re / len as f64).collect()
}

/// `integral over [u, v] of |S|^2`, from `|S(t)|^2 = A(0) + 2 sum_h A(h) cos(2 pi h t)`.
fn integral(acf: &[f64], u: f64, v: f64) -> f64 {
    let mut total = acf[0] * (v - u);
    for (h, &a) in acf.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        let w = 2.0 * PI * h as f64;
        total += 2.0 * a * ((w * v).sin() - (w * u).sin()) / w;
    }
    total
}

/// Union of the intervals `a/q + beta`, `Q/2 <= q < Q`, `(a, q) = 1`,
/// `lo <= |beta| < hi`, as merged pieces of `[0, 1]`.
fn arc_intervals(q_dy: u64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut raw = Vec::new();
    for q in (q_dy / 2).max(1)..q_dy {
        for a in 0..q {
            if a.gcd(&q) != 1 {
                continue;
            }
            let c = a as f64 / q as f64;
            for (s, t) in [(c + lo, c + hi), (c - hi, c - lo)] {
                // wrap into [0, 1)
                let shift = s.floor();
                let (s, t) = (s - shift, t - shift);
                if t <= 1.0 {
                    raw.push((s, t));
                } else {
                    raw.push((s, 1.0));
                    raw.push((0.0, t - 1.0));
                }
            }
        }
    }
    raw.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, t) in raw {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(t),
            _ => merged.push((s, t)),
        }
    }
    merged
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcMass {
    pub q: u64,
    pub k: u64,
    pub measure: f64,
    /// `integral of |S|^2 over W_{Q,K}`
    pub mass: f64,
    /// `mass / (|source|^2 / N)`
    pub ratio: f64,
}

/// `|S|^2` integrated over
/// `W_{Q,K} = {a/q + beta : Q/2 <= q < Q, (a,q) = 1, K/(2N) <= |beta| < K/N}`.
///
/// `K = 0` stands for the core `|beta| < 1/(2N)`.
pub fn arc_profile(source: &ExpSumSource, n: u64, q: u64, k: u64) -> Result<ArcMass> {
    let acf = autocorrelation(source);
    arc_mass_with(source, &acf, n, q, k)
}

/// [`arc_profile`] for every dyadic `2 <= Q' <= q_max` and
/// `K' in {0, 1, 2, 4, ..} <= k_max`, skipping pairs with `K' >= sqrt N / Q'`.
/// The corner `(q_max, k_max)` itself must be admissible.
pub fn arc_profiles(source: &ExpSumSource, n: u64, q_max: u64, k_max: u64) -> Result<Vec<ArcMass>> {
    let acf = autocorrelation(source);
    arc_mass_with(source, &acf, n, q_max, k_max)?;
    let root = (n as f64).sqrt();
    let mut out = Vec::new();
    let mut q = 2;
    while q <= q_max {
        let ks = std::iter::once(0).chain(std::iter::successors(Some(1u64), |k| Some(k * 2)));
        for k in ks.take_while(|&k| k <= k_max) {
            if (k as f64) < root / q as f64 {
                out.push(arc_mass_with(source, &acf, n, q, k)?);
            }
        }
        q *= 2;
    }
    Ok(out)
}

fn arc_mass_with(source: &ExpSumSource, acf: &[f64], n: u64, q: u64, k: u64) -> Result<ArcMass> {
    let root = (n as f64).sqrt();
    if q < 2 || q as f64 >= root {
        return Err(Error::input(format!("need 2 <= Q < sqrt N, got Q = {q}")));
    }
    if k as f64 >= root / q as f64 {
        return Err(Error::input(format!("need K < sqrt N / Q, got K = {k}")));
    }
    let nf = n as f64;
    let (lo, hi) = if k == 0 {
        (0.0, 0.5 / nf)
    } else {
        (k as f64 / (2.0 * nf), k as f64 / nf)
    };
    let pieces = arc_intervals(q, lo, hi);
    let measure = pieces.iter().map(|(s, t)| t - s).sum();
    let mass = pieces.iter().map(|&(s, t)| integral(acf, s, t)).sum::<f64>();
    let size = source.size() as f64;
    Ok(ArcMass {
        q,
        k,
        measure,
        mass,
        ratio: mass / (size * size / nf),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionClass {
    /// Dyadic bound with `Q/2 <= q < Q` for the Dirichlet denominator.
    pub q: u64,
    /// Dyadic bound with `K/(2N) <= |beta| < K/N`; 0 for `|beta| < 1/(2N)`.
    pub k: u64,
    pub points: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcPartition {
    pub n: u64,
    pub grid: usize,
    pub classes: Vec<PartitionClass>,
    pub total_mass: f64,
    /// `sum R(n)^2`
    pub energy: f64,
}

impl ArcPartition {
    pub fn relative_gap(&self) -> f64 {
        (self.total_mass - self.energy).abs() / self.energy
    }
}

/// Best approximation `a/q` of `x` with `q <= q_max` (last convergent).
fn dirichlet(x: f64, q_max: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut y = x;
    loop {
        let a = y.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > q_max {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a as f64;
        if frac < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    if q1 == 0 {
        (p0, q0)
    } else {
        (p1, q1)
    }
}

/// Splits a uniform grid on the circle by the Dirichlet approximation of
/// each point (denominator at most `sqrt N`) into dyadic `(Q, K)` classes
/// and sums `|S|^2` over each; the grid is fine enough that the total is
/// exactly `sum R(n)^2`.
pub fn arc_partition(source: &ExpSumSource, n: u64) -> Result<ArcPartition> {
    let grid = (2 * source.max_value() as usize + 1)
        .next_power_of_two()
        .max(1024);
    let s = s_on_grid(source, grid)?;
    let q_max = (n as f64).sqrt().floor() as u64;
    let nf = n as f64;
    let dyadic = |x: f64| -> u64 { 1u64 << (x.log2().floor() as i64 + 1).max(0) as u32 };
    let mut classes: BTreeMap<(u64, u64), (usize, f64)> = BTreeMap::new();
    for (j, z) in s.iter().enumerate() {
        let theta = j as f64 / grid as f64;
        let (a, q) = dirichlet(theta, q_max.max(1));
        let beta = (theta - a as f64 / q as f64).abs();
        let k = if beta * nf < 0.5 { 0 } else { dyadic(beta * nf) };
        let entry = classes.entry((dyadic(q as f64), k)).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += z.norm_sqr() / grid as f64;
    }
    let classes: Vec<PartitionClass> = classes
        .into_iter()
        .map(|((q, k), (points, mass))| PartitionClass { q, k, points, mass })
        .collect();
    let total_mass = classes.iter().map(|c| c.mass).sum();
    Ok(ArcPartition {
        n,
        grid,
        classes,
        total_mass,
        energy: source.energy(),
    })
}
