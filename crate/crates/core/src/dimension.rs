//! Hausdorff dimension of the Cantor set of infinite continued fractions
//! over an alphabet.
//!
//! The dimension `delta` is the unique `s` at which the leading eigenvalue
//! of the transfer operator
//!
//! ```text
//! (L_s f)(x) = sum over a in alphabet of (a + x)^(-2s) f(1 / (a + x))
//! ```
//!
//! equals one. The weight `(a + x)^(-2s)` is `|T_a'(x)|^s` for the inverse
//! branch `T_a(x) = 1/(a + x)` of the Gauss map.
//!
//! `L_s` is discretized by collocation: a function on the hull of the Cantor
//! set is represented by its values at Chebyshev nodes, evaluated off-grid by
//! barycentric Lagrange interpolation. Because every branch is analytic and
//! maps the hull strictly inside itself, the leading eigenvalue of the
//! collocation matrix converges geometrically in the node count.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{Alphabet, CfWord};
use crate::enumerate::{gamma_ball, ls_slope};
use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-12;

const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 100_000;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Smallest interval containing the Cantor set, found by iterating
/// `[lo, hi] -> [1/(max + hi), 1/(min + lo)]` from `[0, 1]`.
///
/// The endpoints converge to `[max, min, max, ...]` and `[min, max, min, ...]`.
pub fn hull(alphabet: &Alphabet) -> Interval {
    let amin = alphabet.min_letter() as f64;
    let amax = alphabet.max_letter() as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let nlo = 1.0 / (amax + hi);
        let nhi = 1.0 / (amin + lo);
        let change = (nlo - lo).abs().max((nhi - hi).abs());
        lo = nlo;
        hi = nhi;
        if change < 1e-15 {
            break;
        }
    }
    Interval { lo, hi }
}

/// Collocation matrix of `L_s` on Chebyshev nodes of the hull.
#[derive(Clone, Debug)]
pub struct TransferDiscretization {
    pub alphabet: Alphabet,
    pub s: f64,
    pub hull: Interval,
    pub nodes: Vec<f64>,
    /// Row-major `n x n`.
    pub matrix: Vec<f64>,
}

struct Chebyshev {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Chebyshev {
    /// First-kind points mapped to `[lo, hi]` with barycentric weights.
    fn new(n: usize, iv: Interval) -> Self {
        let mid = 0.5 * (iv.lo + iv.hi);
        let half = 0.5 * iv.width();
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let theta = PI * (2 * j + 1) as f64 / (2 * n) as f64;
            nodes.push(mid + half * theta.cos());
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            weights.push(sign * theta.sin());
        }
        Chebyshev { nodes, weights }
    }

    /// Writes the Lagrange basis values `l_j(y)` into `out`.
    fn basis_at(&self, y: f64, out: &mut [f64]) {
        if let Some(k) = self.nodes.iter().position(|&x| x == y) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (j, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let t = w / (y - x);
            out[j] = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }
}

impl TransferDiscretization {
    pub fn new(alphabet: &Alphabet, s: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("need at least two collocation nodes"));
        }
        let iv = hull(alphabet);
        if alphabet.len() == 1 {
            return Err(Error::input(
                "single-letter alphabet: the limit set is a point, nothing to discretize",
            ));
        }
        let cheb = Chebyshev::new(n, iv);
        let rows: Vec<Vec<f64>> = cheb
            .nodes
            .par_iter()
            .map(|&x| {
                let mut row = vec![0.0; n];
                let mut basis = vec![0.0; n];
                for &a in alphabet.letters() {
                    let ax = a as f64 + x;
                    let y = 1.0 / ax;
                    let w = ax.powf(-2.0 * s);
                    cheb.basis_at(y, &mut basis);
                    row.iter_mut().zip(&basis).for_each(|(r, l)| *r += w * l);
                }
                row
            })
            .collect();
        let matrix: Vec<f64> = rows.into_iter().flatten().collect();
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("non-finite collocation entry"));
        }
        Ok(TransferDiscretization {
            alphabet: alphabet.clone(),
            s,
            hull: iv,
            nodes: cheb.nodes,
            matrix,
        })
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.size();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * n..(i + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Perron eigenvalue of the collocation matrix by power iteration from the
/// constant function.
pub fn leading_eigenvalue(disc: &TransferDiscretization) -> Result<f64> {
    if !(0.0..=1.5).contains(&disc.s) {
        return Err(Error::input(format!("s = {} outside [0, 1.5]", disc.s)));
    }
    let n = disc.size();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0f64;
    let mut change = f64::INFINITY;
    for it in 0..POWER_MAX_ITER {
        disc.apply(&v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical {
                message: "power iteration collapsed".into(),
                iterations: it,
                last_change: change,
            });
        }
        // Rayleigh quotient v.Av with |v| = 1
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        change = (rq - lambda).abs();
        lambda = rq;
        let vec_change: f64 = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b / norm).abs())
            .fold(0.0, f64::max);
        v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / norm);
        if it > 2 && change <= POWER_TOL * lambda.abs() && vec_change <= 1e-12 {
            if lambda <= 0.0 {
                return Err(Error::invariant("leading eigenvalue is not positive"));
            }
            return Ok(lambda);
        }
    }
    Err(Error::Numerical {
        message: format!("power iteration did not converge (s = {})", disc.s),
        iterations: POWER_MAX_ITER,
        last_change: change,
    })
}

/// Leading eigenvalue of `L_s` with `n` collocation nodes.
pub fn eigenvalue_at(alphabet: &Alphabet, s: f64, n: usize) -> Result<f64> {
    leading_eigenvalue(&TransferDiscretization::new(alphabet, s, n)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionResult {
    pub delta: f64,
    pub eigenvalue_at_delta: f64,
    pub nodes: usize,
    pub residual: f64,
    /// `(s, lambda(s))` for every evaluation, in order.
    pub history: Vec<(f64, f64)>,
}

/// Hausdorff dimension of the Cantor set over `alphabet`.
///
/// Bisection on `lambda(s) - 1` down to a bracket of width `1e-4`, then
/// secant steps until the step falls below `tol / 10`.
pub fn dimension(alphabet: &Alphabet, tol: f64, nodes: usize) -> Result<DimensionResult> {
    if tol < 1e-13 {
        return Err(Error::input("tolerance below 1e-13 is beyond double precision"));
    }
    if alphabet.len() == 1 {
        return Ok(DimensionResult {
            delta: 0.0,
            eigenvalue_at_delta: 1.0,
            nodes,
            residual: 0.0,
            history: Vec::new(),
        });
    }
    let mut history = Vec::new();
    let mut eval = |s: f64| -> Result<f64> {
        let l = eigenvalue_at(alphabet, s, nodes)?;
        history.push((s, l));
        Ok(l - 1.0)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::invariant(format!(
            "no sign change on [0, 1]: lambda(0) - 1 = {f_lo}, lambda(1) - 1 = {f_hi}"
        )));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut s0, mut s1) = (lo, hi);
    let (mut f0, mut f1) = (eval(s0)?, eval(s1)?);
    for _ in 0..50 {
        if f1 == f0 {
            break;
        }
        let mut s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        if !(lo..=hi).contains(&s2) {
            s2 = 0.5 * (lo + hi);
        }
        let f2 = eval(s2)?;
        if f2 > 0.0 {
            lo = lo.max(s2);
        } else {
            hi = hi.min(s2);
        }
        let step = (s2 - s1).abs();
        (s0, f0, s1, f1) = (s1, f1, s2, f2);
        if step < tol / 10.0 || f2 == 0.0 {
            break;
        }
    }
    let residual = f1.abs();
    Ok(DimensionResult {
        delta: s1,
        eigenvalue_at_delta: f1 + 1.0,
        nodes,
        residual,
        history,
    })
}

/// `1 - (6/pi^2)/A - (72/pi^4) log(A)/A^2`, the large-`A` expansion of the
/// dimension for the alphabet `{1, ..., A}`.
pub fn hensley_asymptotic(a: u32) -> Result<f64> {
    if a < 2 {
        return Err(Error::input("asymptotic expansion needs A >= 2"));
    }
    let a = a as f64;
    Ok(1.0 - 6.0 / (PI * PI * a) - 72.0 * a.ln() / (PI.powi(4) * a * a))
}

/// Point `x/y` of the expanding eigenvector `(x, y)` of a determinant one
/// matrix with nonnegative entries and trace above 2.
pub fn expanding_point(e: &[u64; 4]) -> f64 {
    let (a, b, c, d) = (e[0] as f64, e[1] as f64, e[2] as f64, e[3] as f64);
    let half = 0.5 * (a + d);
    let root = ((half - 1.0) * (half + 1.0)).sqrt();
    if b != 0.0 {
        b / ((d - a) / 2.0 + root)
    } else {
        (half + root - d) / c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorRow {
    pub n: f64,
    pub in_interval: u64,
    pub in_inner: u64,
    pub total: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorReport {
    pub interval: Interval,
    /// Middle half of `interval`, used for the nested-ratio check.
    pub inner: Interval,
    pub rows: Vec<SectorRow>,
    /// Log-log slope of the interval count against `N` (zero counts skipped).
    pub slope: f64,
    /// `in_inner / in_interval` per row.
    pub nested_ratios: Vec<f64>,
    /// Largest relative deviation of the nested ratio over the top half of
    /// the grid from its final value.
    pub nested_spread: f64,
}

/// Counts `gamma` in the even semigroup with `|gamma| < N` and expanding
/// direction in `interval`, over a doubling grid of `N` ending at `n_max`.
pub fn sector_count_check(
    alphabet: &Alphabet,
    n_max: f64,
    interval: Interval,
    grid_points: usize,
) -> Result<SectorReport> {
    if !(0.0 <= interval.lo && interval.lo <= interval.hi && interval.hi <= 1.0) {
        return Err(Error::input("interval must lie inside [0, 1]"));
    }
    if grid_points < 2 || n_max < 4.0 {
        return Err(Error::input("need at least two grid points and N >= 4"));
    }
    let quarter = interval.width() / 4.0;
    let inner = Interval {
        lo: interval.lo + quarter,
        hi: interval.hi - quarter,
    };
    let grid: Vec<f64> = (0..grid_points)
        .rev()
        .map(|k| n_max / 2f64.powi(k as i32))
        .collect();
    // one walk to n_max; bucket each element by the first grid bound above its norm
    let mut rows: Vec<SectorRow> = grid
        .iter()
        .map(|&n| SectorRow {
            n,
            in_interval: 0,
            in_inner: 0,
            total: 0,
        })
        .collect();
    gamma_ball(alphabet, 0.0, n_max, |e, _| {
        let norm = e.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let x = expanding_point(e);
        let first = grid.partition_point(|&n| n <= norm);
        for row in &mut rows[first..] {
            row.total += 1;
            if interval.contains(x) {
                row.in_interval += 1;
            }
            if inner.contains(x) {
                row.in_inner += 1;
            }
        }
    });
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.in_interval > 0)
        .map(|r| (r.n.ln(), (r.in_interval as f64).ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        ls_slope(&x, &y)
    } else {
        0.0
    };
    let nested_ratios: Vec<f64> = rows
        .iter()
        .map(|r| {
            if r.in_interval == 0 {
                0.0
            } else {
                r.in_inner as f64 / r.in_interval as f64
            }
        })
        .collect();
    let last = *nested_ratios.last().unwrap();
    let nested_spread = nested_ratios[nested_ratios.len() / 2..]
        .iter()
        .map(|r| if last > 0.0 { (r - last).abs() / last } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(SectorReport {
        interval,
        inner,
        rows,
        slope,
        nested_ratios,
        nested_spread,
    })
}

/// Whether the first `depth` partial quotients of `x` all lie in the
/// alphabet (a finite proxy for membership in the Cantor set).
pub fn in_cantor_set(alphabet: &Alphabet, x: f64, depth: usize) -> bool {
    if !(0.0 < x && x < 1.0) {
        return false;
    }
    let mut y = x;
    let mut quotients = Vec::with_capacity(depth);
    for _ in 0..depth {
        let inv = 1.0 / y;
        let a = inv.floor();
        if !(1.0..=u32::MAX as f64).contains(&a) {
            return false;
        }
        quotients.push(a as u32);
        y = inv - a;
        if y <= 0.0 {
            break;
        }
    }
    CfWord::new(quotients)
        .map(|w| w.uses_only(alphabet))
        .unwrap_or(false)
}
