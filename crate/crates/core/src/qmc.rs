//! Two-dimensional lattice point sets `z_n = (n/d, bn/d mod 1)` and their
//! exact star discrepancy.
//!
//! The star discrepancy is the supremum over anchored boxes `[0,x) x [0,y)`
//! of `|xy - #points in box / N|`. The supremum is attained in the limit at
//! a finite set of corners: for the area-exceeds-count side at open boxes
//! with `x` and `y` drawn from the point coordinates or 1, and for the
//! count-exceeds-area side at closed boxes on the same grid. Evaluating
//! both on every grid corner gives the exact value in `O(N^2)`.
//!
//! The discrepancy over all axis-parallel rectangles is at most four times
//! the star discrepancy; only the latter is computed.

use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{cf_expand, Fraction};
use crate::error::{Error, Result};

pub const MAX_EXACT_POINTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet2D {
    pub points: Vec<(f64, f64)>,
    /// `(b, d)` when produced by [`zn_points`].
    pub provenance: Option<(u64, u64)>,
}

impl PointSet2D {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(p) = points
            .iter()
            .find(|(x, y)| !((0.0..1.0).contains(x) && (0.0..1.0).contains(y)))
        {
            return Err(Error::input(format!("point {p:?} is outside [0,1)^2")));
        }
        Ok(PointSet2D {
            points,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The set reflected in the diagonal.
    pub fn swapped(&self) -> PointSet2D {
        PointSet2D {
            points: self.points.iter().map(|&(x, y)| (y, x)).collect(),
            provenance: None,
        }
    }
}

/// `(n/d, (b n mod d)/d)` for `n = 1..=d` (the last point is the origin),
/// or `n = 1..d` with `drop_origin`.
pub fn zn_points(b: u64, d: u64, drop_origin: bool) -> Result<PointSet2D> {
    if !(1 <= b && b < d) {
        return Err(Error::input(format!("need 1 <= b < d, got b = {b}, d = {d}")));
    }
    if b.gcd(&d) != 1 {
        return Err(Error::input(format!("gcd({b}, {d}) != 1")));
    }
    let last = if drop_origin { d - 1 } else { d };
    let df = d as f64;
    let points = (1..=last)
        .map(|n| {
            let x = (n % d) as f64 / df;
            let y = ((b as u128 * n as u128) % d as u128) as f64 / df;
            (x, y)
        })
        .collect();
    Ok(PointSet2D {
        points,
        provenance: Some((b, d)),
    })
}

/// Exact star discrepancy.
pub fn star_discrepancy(ps: &PointSet2D) -> Result<f64> {
    let n = ps.len();
    if n == 0 {
        return Err(Error::input("empty point set"));
    }
    if n > MAX_EXACT_POINTS {
        return Err(Error::resource(format!(
            "{n} points exceed the exact-algorithm cap {MAX_EXACT_POINTS}; use --sampled"
        )));
    }
    let grid = Grid::new(ps);
    Ok(grid
        .xs
        .par_iter()
        .map(|&x| grid.column(ps, x))
        .reduce(|| 0.0, f64::max))
}

/// Sorted distinct coordinates (plus 1) and the y-rank of every point.
struct Grid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y_rank: Vec<usize>,
}

impl Grid {
    fn new(ps: &PointSet2D) -> Grid {
        let axis = |coord: fn(&(f64, f64)) -> f64| {
            let mut v: Vec<f64> = ps.points.iter().map(coord).collect();
            v.push(1.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let xs = axis(|p| p.0);
        let ys = axis(|p| p.1);
        let y_rank = ps
            .points
            .iter()
            .map(|p| ys.partition_point(|&y| y < p.1))
            .collect();
        Grid { xs, ys, y_rank }
    }

    /// Worst open and closed box with right edge at `x`, over all `y`.
    fn column(&self, ps: &PointSet2D, x: f64) -> f64 {
        let inv_n = 1.0 / ps.len() as f64;
        // histograms of y-ranks for points with px < x and px <= x
        let mut open = vec![0u32; self.ys.len()];
        let mut closed = vec![0u32; self.ys.len()];
        for (p, &r) in ps.points.iter().zip(&self.y_rank) {
            if p.0 < x {
                open[r] += 1;
            }
            if p.0 <= x {
                closed[r] += 1;
            }
        }
        let (mut below_open, mut upto_closed) = (0u32, 0u32);
        let mut worst = 0.0f64;
        for (j, &y) in self.ys.iter().enumerate() {
            // open box counts ranks < j, closed box counts ranks <= j
            upto_closed += closed[j];
            let area = x * y;
            worst = worst
                .max(area - below_open as f64 * inv_n)
                .max(upto_closed as f64 * inv_n - area);
            below_open += open[j];
        }
        worst
    }
}

/// Largest points accepted by [`star_discrepancy_sampled`].
pub const MAX_SAMPLED_POINTS: usize = 4_000_000;

/// Lower bound on the star discrepancy from `columns` right edges drawn
/// uniformly (with a fixed seed) from the exact candidate set; every `y`
/// is still scanned. Equal to the exact value once `columns` covers the
/// whole candidate set.
pub fn star_discrepancy_sampled(ps: &PointSet2D, columns: usize, seed: u64) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::input("empty point set"));
    }
    if columns == 0 {
        return Err(Error::input("need at least one column"));
    }
    if ps.len() > MAX_SAMPLED_POINTS {
        return Err(Error::resource(format!(
            "{} points exceed the sampled-algorithm cap {MAX_SAMPLED_POINTS}",
            ps.len()
        )));
    }
    let grid = Grid::new(ps);
    let picks: Vec<f64> = if columns >= grid.xs.len() {
        grid.xs.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, grid.xs.len(), columns)
            .into_iter()
            .map(|i| grid.xs[i])
            .collect()
    };
    Ok(picks
        .par_iter()
        .map(|&x| grid.column(ps, x))
        .reduce(|| 0.0, f64::max))
}

/// `(4A/log(A+1) + (4A+1)/log d) * log d / d`.
pub fn zaremba_bound(a: u32, d: u64) -> Result<f64> {
    if a < 1 || d < 2 {
        return Err(Error::input("need A >= 1 and d >= 2"));
    }
    let (a, ld) = (a as f64, (d as f64).ln());
    Ok((4.0 * a / (a + 1.0).ln() + (4.0 * a + 1.0) / ld) * ld / d as f64)
}

/// `log d / d`, the order of the smallest possible discrepancy of `d` points.
pub fn schmidt_floor(d: u64) -> Result<f64> {
    if d < 2 {
        return Err(Error::input("need d >= 2"));
    }
    Ok((d as f64).ln() / d as f64)
}

/// Inverse of `b` modulo `d`.
pub fn mod_inverse(b: u64, d: u64) -> Option<u64> {
    let e = (b as i128).extended_gcd(&(d as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(d as i128) as u64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanRow {
    pub b: u64,
    pub max_quotient: u32,
    pub star_discrepancy: f64,
}

/// Star discrepancy and largest partial quotient of `b/d` for every `b`
/// coprime to `d`.
pub fn multiplier_scan(d: u64) -> Result<Vec<ScanRow>> {
    if d < 3 {
        return Err(Error::input("need d >= 3"));
    }
    if d as usize > MAX_EXACT_POINTS {
        return Err(Error::resource(format!("d = {d} exceeds {MAX_EXACT_POINTS}")));
    }
    let bs: Vec<u64> = (1..d).filter(|b| b.gcd(&d) == 1).collect();
    bs.into_iter()
        .map(|b| {
            let w = cf_expand(Fraction::new(b, d)?)?;
            Ok(ScanRow {
                b,
                max_quotient: w.max_quotient(),
                star_discrepancy: star_discrepancy(&zn_points(b, d, false)?)?,
            })
        })
        .collect()
}
