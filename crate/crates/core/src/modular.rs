//! Reductions modulo `q`: the image of the semigroup in `GL_2(Z/q)`,
//! local admissibility of denominators, the lower-right entry distribution
//! of `SL_2(Z/q)` and its Fourier coefficients `nu_q`, the truncated
//! singular series, and a search for prime denominators whose numerator is
//! a primitive root.
//!
//! Admissibility is checked for every `q <= q_max` rather than for all `q`;
//! the bad modulus of the alphabet is never computed.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::Alphabet;
use crate::enumerate::{multiplicity_table, orbit_pairs, Counting, MultiplicityTable};
use crate::error::{Error, Result};

pub const MAX_CLOSURE_Q: u32 = 10_000;
/// Worklist size at which a closure is abandoned.
pub const MAX_CLOSURE_STATES: usize = 20_000_000;
pub const MAX_NU_Q: u32 = 50;
pub const DEFAULT_Q_MAX: u32 = 30;

type Res4 = [u32; 4];

// entries are below 2^14, so bit 63 is free for the parity
fn pack(m: &Res4, odd: bool) -> u64 {
    (m[0] as u64) | (m[1] as u64) << 16 | (m[2] as u64) << 32 | (m[3] as u64) << 48 | (odd as u64) << 63
}

fn unpack(x: u64) -> (Res4, bool) {
    let f = |s: u32| ((x >> s) & 0x7fff) as u32;
    ([f(0), f(16), f(32), f(48)], x >> 63 == 1)
}

/// Image of the semigroup generated by `(0 1; 1 a)` in `M_2(Z/q)`.
#[derive(Clone, Debug)]
pub struct ResidueClosure {
    pub q: u32,
    /// Reductions of even-length products.
    pub even: HashSet<Res4>,
    /// Reductions of odd-length products.
    pub odd: HashSet<Res4>,
    /// Lower-right entries over both parities, sorted.
    pub attainable_d: Vec<u32>,
}

impl ResidueClosure {
    pub fn elements(&self) -> HashSet<Res4> {
        self.even.union(&self.odd).copied().collect()
    }

    pub fn is_full(&self) -> bool {
        self.attainable_d.len() == self.q as usize
    }
}

fn mul_mod(l: &Res4, r: &Res4, q: u32) -> Res4 {
    let q = q as u64;
    let m = |x: u32, y: u32, z: u32, w: u32| ((x as u64 * y as u64 + z as u64 * w as u64) % q) as u32;
    [
        m(l[0], r[0], l[1], r[2]),
        m(l[0], r[1], l[1], r[3]),
        m(l[2], r[0], l[3], r[2]),
        m(l[2], r[1], l[3], r[3]),
    ]
}

fn generators_mod(alphabet: &Alphabet, q: u32) -> Vec<Res4> {
    let mut g: Vec<Res4> = alphabet
        .letters()
        .iter()
        .map(|&a| [0, 1 % q, 1 % q, a % q])
        .collect();
    g.dedup();
    g
}

/// Breadth-first closure under right multiplication by the generators,
/// starting from the generators, with word-length parity tracked.
pub fn closure_mod_q(alphabet: &Alphabet, q: u32) -> Result<ResidueClosure> {
    if q < 2 {
        return Err(Error::input("modulus must be at least 2"));
    }
    if q > MAX_CLOSURE_Q {
        return Err(Error::resource(format!(
            "q = {q} exceeds the closure cap {MAX_CLOSURE_Q}"
        )));
    }
    let gens = generators_mod(alphabet, q);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut queue = VecDeque::new();
    for g in &gens {
        if seen.insert(pack(g, true)) {
            queue.push_back((*g, true));
        }
    }
    while let Some((m, odd)) = queue.pop_front() {
        for g in &gens {
            let next = mul_mod(&m, g, q);
            if seen.insert(pack(&next, !odd)) {
                if seen.len() > MAX_CLOSURE_STATES {
                    return Err(Error::resource(format!(
                        "closure mod {q} exceeds {MAX_CLOSURE_STATES} states"
                    )));
                }
                queue.push_back((next, !odd));
            }
        }
    }
    let mut even = HashSet::new();
    let mut odd = HashSet::new();
    for &x in &seen {
        let (m, o) = unpack(x);
        if o {
            odd.insert(m);
        } else {
            even.insert(m);
        }
    }
    let mut attainable_d: Vec<u32> = seen.iter().map(|&x| unpack(x).0[3]).collect();
    attainable_d.sort_unstable();
    attainable_d.dedup();
    Ok(ResidueClosure {
        q,
        even,
        odd,
        attainable_d,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// Smallest modulus whose closure misses `d mod q`.
    pub witness: Option<u32>,
}

/// Closures for every `2 <= q <= q_max`, reusable across many `d`.
pub struct LocalTests {
    closures: Vec<(u32, HashSet<u32>)>,
}

impl LocalTests {
    pub fn new(alphabet: &Alphabet, q_max: u32) -> Result<Self> {
        if q_max < 2 {
            return Err(Error::input("q_max must be at least 2"));
        }
        let closures = (2..=q_max)
            .into_par_iter()
            .map(|q| Ok((q, closure_mod_q(alphabet, q)?.attainable_d.into_iter().collect())))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalTests { closures })
    }

    pub fn check(&self, d: u64) -> Admissibility {
        for (q, set) in &self.closures {
            if !set.contains(&((d % *q as u64) as u32)) {
                return Admissibility {
                    admissible: false,
                    witness: Some(*q),
                };
            }
        }
        Admissibility {
            admissible: true,
            witness: None,
        }
    }
}

/// Whether `d mod q` is attainable for every `q <= q_max`.
pub fn is_admissible(alphabet: &Alphabet, d: u64, q_max: u32) -> Result<Admissibility> {
    if d == 0 {
        return Err(Error::input("d must be positive"));
    }
    Ok(LocalTests::new(alphabet, q_max)?.check(d))
}

/// Counts of each lower-right entry over `SL_2(Z/q)`, by brute force over
/// all `q^4` matrices.
pub fn lower_right_distribution(q: u32) -> Result<Vec<u64>> {
    if q == 0 {
        return Err(Error::input("modulus must be positive"));
    }
    if q > MAX_NU_Q {
        return Err(Error::resource(format!(
            "q = {q} exceeds the SL_2 enumeration cap {MAX_NU_Q}"
        )));
    }
    let q64 = q as u64;
    let rows: Vec<u64> = (0..q64)
        .into_par_iter()
        .map(|d| {
            let mut count = 0u64;
            for a in 0..q64 {
                for b in 0..q64 {
                    for c in 0..q64 {
                        if (a * d + q64 * q64 - b * c) % q64 == 1 % q64 {
                            count += 1;
                        }
                    }
                }
            }
            count
        })
        .collect();
    Ok(rows)
}

/// `|SL_2(Z/q)|`
pub fn sl2_order(q: u64) -> u64 {
    let mut order = q * q * q;
    let mut n = q;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            order = order / (p * p) * (p * p - 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        order = order / (n * n) * (n * n - 1);
    }
    order
}

/// `(1/|SL_2(Z/q)|) sum over SL_2(Z/q) of e(a d / q)`, `d` the lower-right entry.
pub fn nu_q(q: u32, a: u32) -> Result<Complex64> {
    let dist = lower_right_distribution(q)?;
    let total: u64 = dist.iter().sum();
    let a = (a % q) as f64;
    let sum: Complex64 = dist
        .iter()
        .enumerate()
        .map(|(d, &c)| c as f64 * Complex64::from_polar(1.0, 2.0 * PI * a * d as f64 / q as f64))
        .sum();
    Ok(sum / total as f64)
}

/// Exact value of `nu_q(a)` when it is rational, which is the case when
/// `2a = 0 mod q` (every phase is then `+1` or `-1`).
pub fn nu_q_exact(q: u32, a: u32) -> Result<Option<Ratio<i64>>> {
    let a = a % q;
    if (2 * a) % q != 0 {
        return Ok(None);
    }
    let dist = lower_right_distribution(q)?;
    let total: u64 = dist.iter().sum();
    let signed: i64 = dist
        .iter()
        .enumerate()
        .map(|(d, &c)| {
            // e(a d / q) = (-1)^(2 a d / q)
            if (2 * a as u64 * d as u64 / q as u64) % 2 == 0 {
                c as i64
            } else {
                -(c as i64)
            }
        })
        .sum();
    Ok(Some(Ratio::new(signed, total as i64)))
}

/// `prod over p <= P, p not dividing n of (1 + 1/(p^2 - 1))` times
/// `prod over p <= P, p dividing n of (1 - 1/(p + 1))`.
pub fn singular_series(n: u64, p_max: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be positive"));
    }
    if p_max < 2 {
        return Err(Error::input("prime cutoff must be at least 2"));
    }
    let sieve = primal::Sieve::new(p_max as usize);
    Ok(sieve
        .primes_from(2)
        .take_while(|&p| p as u64 <= p_max)
        .map(|p| {
            let p = p as f64;
            if n % p as u64 == 0 {
                1.0 - 1.0 / (p + 1.0)
            } else {
                1.0 + 1.0 / (p * p - 1.0)
            }
        })
        .product())
}

/// Whether `g` generates `(Z/p)^*` for a prime `p`.
pub fn is_primitive_root(g: u64, p: u64) -> bool {
    if p == 2 {
        return g % 2 == 1;
    }
    if g % p == 0 {
        return false;
    }
    let mut n = p - 1;
    let mut factors = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            factors.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1)
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut acc = 1u128 % m128;
    let mut b = base as u128 % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// First fraction `b/d` (by `d`, then `b`) with `d < N` prime and `b` a
/// primitive root mod `d`.
pub fn primitive_root_witness(alphabet: &Alphabet, n: u64, counting: Counting) -> Result<Option<(u64, u64)>> {
    if n < 100 {
        return Err(Error::input("N must be at least 100"));
    }
    let pairs = orbit_pairs(alphabet, n, counting);
    Ok(pairs
        .into_iter()
        .find(|&(b, d)| primal::is_prime(d) && is_primitive_root(b, d)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidueRow {
    pub residue: u32,
    /// `|D cap [1, N) cap (r mod q)| / #{1 <= d < N : d = r mod q}`
    pub support_fraction: f64,
    /// Share of the total multiplicity carried by the class.
    pub mass_share: f64,
    /// Share predicted by the lower-right entries of the closure mod `q`.
    pub predicted_share: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidueProfile {
    pub q: u32,
    pub n: u64,
    pub rows: Vec<ResidueRow>,
    /// `max / min` of the support fractions.
    pub support_spread: f64,
    /// Largest `|mass / predicted - 1|`.
    pub mass_deviation: f64,
}

/// Distribution of denominators below `n` over residues mod each `q`,
/// compared with the equidistribution prediction from the closure mod `q`.
pub fn residue_profiles(
    alphabet: &Alphabet,
    counting: Counting,
    n: u64,
    moduli: &[u32],
) -> Result<Vec<ResidueProfile>> {
    if moduli.iter().any(|&q| q < 2) {
        return Err(Error::input("modulus must be at least 2"));
    }
    let table = multiplicity_table(alphabet, n, counting);
    moduli
        .iter()
        .map(|&q| profile_from_table(alphabet, &table, q))
        .collect()
}

fn profile_from_table(alphabet: &Alphabet, table: &MultiplicityTable, q: u32) -> Result<ResidueProfile> {
    let n = table.bound();
    let closure = closure_mod_q(alphabet, q)?;
    let mut predicted: HashMap<u32, u64> = HashMap::new();
    for m in closure.even.iter().chain(closure.odd.iter()) {
        *predicted.entry(m[3]).or_default() += 1;
    }
    let predicted_total: u64 = predicted.values().sum();
    let mut support = vec![0u64; q as usize];
    let mut mass = vec![0u64; q as usize];
    for (d, c) in table.iter() {
        let r = (d % q as u64) as usize;
        support[r] += 1;
        mass[r] += c;
    }
    let mass_total: u64 = mass.iter().sum();
    let rows: Vec<ResidueRow> = (0..q)
        .map(|r| {
            // 1 <= d < n with d = r mod q
            let first = if r == 0 { q as u64 } else { r as u64 };
            let class = if first < n {
                (n - 1 - first) / q as u64 + 1
            } else {
                0
            };
            ResidueRow {
                residue: r,
                support_fraction: support[r as usize] as f64 / class.max(1) as f64,
                mass_share: mass[r as usize] as f64 / mass_total.max(1) as f64,
                predicted_share: *predicted.get(&r).unwrap_or(&0) as f64 / predicted_total as f64,
            }
        })
        .collect();
    let fr: Vec<f64> = rows.iter().map(|r| r.support_fraction).collect();
    let min = fr.iter().copied().fold(f64::INFINITY, f64::min);
    let max = fr.iter().copied().fold(0.0, f64::max);
    let mass_deviation = rows
        .iter()
        .filter(|r| r.predicted_share > 0.0)
        .map(|r| (r.mass_share / r.predicted_share - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ResidueProfile {
        q,
        n,
        rows,
        support_spread: if min > 0.0 { max / min } else { f64::INFINITY },
        mass_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::exceptions;

    fn alpha(v: &[u32]) -> Alphabet {
        Alphabet::new(v.to_vec()).unwrap()
    }

    fn det(m: &Res4, q: u32) -> u32 {
        let q = q as u64;
        ((m[0] as u64 * m[3] as u64 + q * q - m[1] as u64 * m[2] as u64 % q) % q) as u32
    }

    #[test]
    fn closure_one_two_mod_five() {
        let c = closure_mod_q(&alpha(&[1, 2]), 5).unwrap();
        assert_eq!(c.even.len(), 120);
        assert!(c.even.iter().all(|m| det(m, 5) == 1));
        assert!(c.odd.iter().all(|m| det(m, 5) == 4));
        assert_eq!(c.attainable_d, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn closure_is_a_fixed_point() {
        for (letters, q) in [(&[1, 2][..], 12), (&[2, 4, 6, 8, 10], 8), (&[1, 3], 9)] {
            let a = alpha(letters);
            let c = closure_mod_q(&a, q).unwrap();
            let gens = generators_mod(&a, q);
            for g in &gens {
                assert!(c.odd.contains(g));
            }
            for m in &c.even {
                for g in &gens {
                    assert!(c.odd.contains(&mul_mod(m, g, q)));
                }
            }
            for m in &c.odd {
                for g in &gens {
                    assert!(c.even.contains(&mul_mod(m, g, q)));
                }
            }
        }
    }

    #[test]
    fn even_alphabet_misses_three_mod_four() {
        let a = alpha(&[2, 4, 6, 8, 10]);
        let c = closure_mod_q(&a, 4).unwrap();
        assert!(
            c.attainable_d.iter().all(|d| [0, 1, 2].contains(d)),
            "{:?}",
            c.attainable_d
        );
        let r = is_admissible(&a, 7, 30).unwrap();
        assert_eq!(r.witness, Some(4));
        assert!(!r.admissible);
    }

    #[test]
    fn fibonacci_mod_two() {
        let c = closure_mod_q(&alpha(&[1]), 2).unwrap();
        assert_eq!(c.attainable_d, vec![0, 1]);
        // Fibonacci numbers mod 10 against the closure mod 10
        let c10 = closure_mod_q(&alpha(&[1]), 10).unwrap();
        let (mut x, mut y) = (1u64, 1u64);
        let mut fib = HashSet::new();
        for _ in 0..200 {
            fib.insert((y % 10) as u32);
            (x, y) = (y, (x + y) % 10);
        }
        let attained: HashSet<u32> = c10.attainable_d.iter().copied().collect();
        assert_eq!(fib, attained);
    }

    #[test]
    fn local_fullness_up_to_thirty() {
        for letters in [&[1, 2][..], &[1, 2, 3]] {
            let a = alpha(letters);
            for q in 2..=30 {
                assert!(closure_mod_q(&a, q).unwrap().is_full(), "{letters:?} mod {q}");
            }
            assert!(is_admissible(&a, 123_456_789, 30).unwrap().admissible);
        }
    }

    #[test]
    fn six_is_locally_admissible_for_a4() {
        let a = alpha(&[1, 2, 3, 4]);
        assert!(is_admissible(&a, 6, 30).unwrap().admissible);
        assert!(exceptions(&a, 200).unwrap().contains(&6));
    }

    #[test]
    fn caps_are_enforced() {
        assert!(matches!(
            closure_mod_q(&alpha(&[1, 2]), 20_000),
            Err(Error::Resource(_))
        ));
        assert!(matches!(nu_q(51, 1), Err(Error::Resource(_))));
        assert!(closure_mod_q(&alpha(&[1, 2]), 1).is_err());
    }

    #[test]
    fn sl2_enumeration_orders() {
        for q in 1..=12u32 {
            let total: u64 = lower_right_distribution(q).unwrap().iter().sum();
            assert_eq!(total, sl2_order(q as u64), "q = {q}");
        }
        assert_eq!(lower_right_distribution(2).unwrap(), vec![2, 4]);
    }

    #[test]
    fn nu_values() {
        assert_eq!(nu_q_exact(2, 1).unwrap(), Some(Ratio::new(-1, 3)));
        assert_eq!(nu_q_exact(1, 0).unwrap(), Some(Ratio::from_integer(1)));
        assert_eq!(nu_q_exact(5, 1).unwrap(), None);
        for q in [1, 2, 6, 7, 12] {
            assert!((nu_q(q, 0).unwrap() - 1.0).norm() < 1e-12);
        }
        // prime modulus: nu_p(a) = -1/(p^2 - 1) for a != 0
        for p in [3u32, 5, 7, 11] {
            for a in 1..p {
                let v = nu_q(p, a).unwrap();
                assert!((v.re + 1.0 / (p * p - 1) as f64).abs() < 1e-12 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nu_parseval() {
        for q in [4u32, 6, 9, 10] {
            let dist = lower_right_distribution(q).unwrap();
            let total: u64 = dist.iter().sum();
            let lhs: f64 = (0..q).map(|a| nu_q(q, a).unwrap().norm_sqr()).sum();
            let rhs = q as f64
                * dist
                    .iter()
                    .map(|&c| (c as f64 / total as f64).powi(2))
                    .sum::<f64>();
            assert!((lhs - rhs).abs() < 1e-10, "q = {q}");
        }
    }

    #[test]
    fn local_factor_matches_fourier_expansion() {
        // 1 + sum_{a != 0} nu_p(a) e(-a n / p) against the closed-form factor
        for p in [2u32, 3, 5, 7] {
            for n in 1..=2 * p as u64 {
                let mut f = Complex64::new(1.0, 0.0);
                for a in 1..p {
                    let phase = -2.0 * PI * a as f64 * n as f64 / p as f64;
                    f += nu_q(p, a).unwrap() * Complex64::from_polar(1.0, phase);
                }
                let with_p = singular_series(n, p as u64).unwrap();
                let without_p = if p > 2 {
                    singular_series(n, p as u64 - 1).unwrap()
                } else {
                    1.0
                };
                assert!((f.re - with_p / without_p).abs() < 1e-12, "p = {p}, n = {n}");
            }
        }
    }

    #[test]
    fn singular_series_values() {
        let zeta2 = PI * PI / 6.0;
        let s1 = singular_series(1, 10_000).unwrap();
        assert!((s1 - zeta2).abs() < 1e-3);
        let s2 = singular_series(2, 10_000).unwrap();
        assert!((s2 - s1 * (2.0 / 3.0) / (4.0 / 3.0)).abs() < 1e-12);
        let primorial = 2 * 3 * 5 * 7 * 11 * 13 * 17 * 19 * 23u64;
        let sp = singular_series(primorial, 10_000).unwrap();
        assert!(0.0 < sp && sp < s1);
        assert!(singular_series(0, 10).is_err());
    }

    #[test]
    fn primitive_roots() {
        assert!(is_primitive_root(3, 7));
        assert!(!is_primitive_root(2, 7));
        assert!(is_primitive_root(2, 5));
        assert!(is_primitive_root(1, 2));
        let w = primitive_root_witness(&alpha(&[1, 2, 3, 4, 5]), 500, Counting::Canonical).unwrap();
        let (b, d) = w.unwrap();
        assert!(primal::is_prime(d) && is_primitive_root(b, d));
        // A = 1: consecutive Fibonacci pairs
        let (b, d) = primitive_root_witness(&alpha(&[1]), 100, Counting::Either)
            .unwrap()
            .unwrap();
        assert_eq!((b, d), (1, 2));
    }

    #[test]
    fn residues_for_a5() {
        let a = alpha(&[1, 2, 3, 4, 5]);
        let moduli: Vec<u32> = (2..=7).collect();
        for p in residue_profiles(&a, Counting::Canonical, 100_000, &moduli).unwrap() {
            let q = p.q;
            assert!(p.support_spread < 1.1, "q = {q}: {p:?}");
            assert!(p.mass_deviation < 0.1, "q = {q}: {p:?}");
        }
    }
}
