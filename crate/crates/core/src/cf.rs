//! Finite continued fractions and the matching 2x2 integer matrices.
//!
//! A word `[a1, ..., ak]` stands for the rational
//! `1/(a1 + 1/(a2 + ... + 1/ak))` and for the matrix product
//! `G(a1) G(a2) ... G(ak)` with `G(a) = (0 1; 1 a)`. The second column of
//! that product is `(b, d)` where `b/d` is the value of the word.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of allowed partial quotients, stored strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    letters: Vec<u32>,
}

impl Alphabet {
    /// Builds an alphabet from letters given in any order. Duplicates and
    /// zero are rejected.
    pub fn new(mut letters: Vec<u32>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::input("alphabet must be nonempty"));
        }
        if letters.contains(&0) {
            return Err(Error::input("partial quotients must be >= 1"));
        }
        letters.sort_unstable();
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("alphabet contains a repeated letter"));
        }
        Ok(Alphabet { letters })
    }

    /// The alphabet `{1, ..., a}`.
    pub fn range(a: u32) -> Result<Self> {
        Alphabet::new((1..=a).collect())
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_letter(&self) -> u32 {
        *self.letters.last().expect("nonempty")
    }

    pub fn min_letter(&self) -> u32 {
        self.letters[0]
    }

    pub fn contains(&self, a: u32) -> bool {
        self.letters.binary_search(&a).is_ok()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A reduced fraction `b/d` with `d > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction {
    b: u64,
    d: u64,
}

impl Fraction {
    pub fn new(b: u64, d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("denominator must be positive"));
        }
        if b.gcd(&d) != 1 {
            return Err(Error::input(format!("{b}/{d} is not reduced")));
        }
        Ok(Fraction { b, d })
    }

    pub fn numer(&self) -> u64 {
        self.b
    }

    pub fn denom(&self) -> u64 {
        self.d
    }

    pub fn to_f64(&self) -> f64 {
        self.b as f64 / self.d as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.b, self.d)
    }
}

/// A finite sequence of positive partial quotients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CfWord {
    quotients: Vec<u32>,
}

impl CfWord {
    pub fn new(quotients: Vec<u32>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::input(
                "a continued fraction word needs at least one quotient",
            ));
        }
        if quotients.contains(&0) {
            return Err(Error::input("partial quotients must be >= 1"));
        }
        Ok(CfWord { quotients })
    }

    pub fn quotients(&self) -> &[u32] {
        &self.quotients
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    pub fn uses_only(&self, alphabet: &Alphabet) -> bool {
        self.quotients.iter().all(|&a| alphabet.contains(a))
    }

    pub fn max_quotient(&self) -> u32 {
        self.quotients.iter().copied().max().unwrap_or(0)
    }

    /// Concatenation `self || other`.
    pub fn concat(&self, other: &CfWord) -> CfWord {
        let mut quotients = self.quotients.clone();
        quotients.extend_from_slice(&other.quotients);
        CfWord { quotients }
    }

    /// The other expansion of the same rational: `[.., a]` with `a >= 2`
    /// becomes `[.., a-1, 1]`, and `[.., a, 1]` becomes `[.., a+1]`.
    /// `None` for `[1]`.
    pub fn alternate(&self) -> Option<CfWord> {
        let q = &self.quotients;
        let last = *q.last()?;
        let mut out = q.clone();
        if last >= 2 {
            *out.last_mut().unwrap() = last - 1;
            out.push(1);
        } else if q.len() >= 2 {
            out.pop();
            *out.last_mut().unwrap() += 1;
        } else {
            return None;
        }
        Some(CfWord { quotients: out })
    }

    /// Value of the word by the convergent recursion, exact in 64 bits.
    pub fn value(&self) -> Result<Fraction> {
        // p/q with p_{-1}=1, p_0=0, q_{-1}=0, q_0=1 for the 1/(a1+...) convention
        let (mut p_prev, mut p) = (1u64, 0u64);
        let (mut q_prev, mut q) = (0u64, 1u64);
        for &a in &self.quotients {
            let a = a as u64;
            let p_next = a
                .checked_mul(p)
                .and_then(|x| x.checked_add(p_prev))
                .ok_or_else(|| Error::resource("word value overflows 64 bits"))?;
            let q_next = a
                .checked_mul(q)
                .and_then(|x| x.checked_add(q_prev))
                .ok_or_else(|| Error::resource("word value overflows 64 bits"))?;
            p_prev = p;
            p = p_next;
            q_prev = q;
            q = q_next;
        }
        Fraction::new(p, q)
    }
}

impl fmt::Display for CfWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.quotients.iter().map(|a| a.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Canonical expansion of `b/d`, `0 < b < d`; the last quotient is >= 2.
pub fn cf_expand(fraction: Fraction) -> Result<CfWord> {
    let (mut num, mut den) = (fraction.numer(), fraction.denom());
    if num == 0 || num >= den {
        return Err(Error::input(format!("expected 0 < b < d, got {}/{}", num, den)));
    }
    let mut quotients = Vec::new();
    while num != 0 {
        let a = den / num;
        let r = den % num;
        let a =
            u32::try_from(a).map_err(|_| Error::resource(format!("partial quotient {a} exceeds 32 bits")))?;
        quotients.push(a);
        den = num;
        num = r;
    }
    Ok(CfWord { quotients })
}

/// Returns the even-length expansion with the same value.
pub fn even_normalize(word: &CfWord) -> Result<CfWord> {
    if word.len() % 2 == 0 {
        return Ok(word.clone());
    }
    word.alternate()
        .ok_or_else(|| Error::input("[1] has no even-length expansion"))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Small([i64; 4]),
    Big(Box<[BigInt; 4]>),
}

/// An exact 2x2 integer matrix `(a b; c d)`.
///
/// Entries are kept in `i64` while they fit; products that would overflow
/// are carried out in arbitrary precision, and results that fit again are
/// demoted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    repr: Repr,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 {
            repr: Repr::Small([a, b, c, d]),
        }
    }

    pub fn from_big(entries: [BigInt; 4]) -> Self {
        let small: Option<Vec<i64>> = entries.iter().map(|x| x.to_i64()).collect();
        match small {
            Some(v) => Mat2::new(v[0], v[1], v[2], v[3]),
            None => Mat2 {
                repr: Repr::Big(Box::new(entries)),
            },
        }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    /// The semigroup generator `(0 1; 1 a)`.
    pub fn generator(a: u32) -> Self {
        Mat2::new(0, 1, 1, a as i64)
    }

    pub fn is_small(&self) -> bool {
        matches!(self.repr, Repr::Small(_))
    }

    pub fn entries_i64(&self) -> Option<[i64; 4]> {
        match &self.repr {
            Repr::Small(e) => Some(*e),
            Repr::Big(_) => None,
        }
    }

    pub fn entries_big(&self) -> [BigInt; 4] {
        match &self.repr {
            Repr::Small(e) => e.map(BigInt::from),
            Repr::Big(e) => (**e).clone(),
        }
    }

    pub fn to_f64(&self) -> [f64; 4] {
        match &self.repr {
            Repr::Small(e) => e.map(|x| x as f64),
            Repr::Big(e) => [0, 1, 2, 3].map(|i| e[i].to_f64().unwrap_or(f64::INFINITY)),
        }
    }

    pub fn transpose(&self) -> Mat2 {
        match &self.repr {
            Repr::Small([a, b, c, d]) => Mat2::new(*a, *c, *b, *d),
            Repr::Big(e) => {
                let [a, b, c, d] = (**e).clone();
                Mat2::from_big([a, c, b, d])
            }
        }
    }

    pub fn det(&self) -> BigInt {
        let [a, b, c, d] = self.entries_big();
        a * d - b * c
    }

    pub fn trace(&self) -> BigInt {
        match &self.repr {
            Repr::Small([a, _, _, d]) => BigInt::from(*a as i128 + *d as i128),
            Repr::Big(e) => &e[0] + &e[3],
        }
    }

    pub fn trace_f64(&self) -> f64 {
        let e = self.to_f64();
        e[0] + e[3]
    }

    /// Frobenius norm `sqrt(a^2 + b^2 + c^2 + d^2)`.
    pub fn norm_frobenius(&self) -> f64 {
        let e = self.to_f64();
        let scale = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * e.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
    }

    /// Second column `(b, d)`, i.e. the image of `e2`.
    pub fn column2_big(&self) -> (BigInt, BigInt) {
        let [_, b, _, d] = self.entries_big();
        (b, d)
    }

    /// `1 <= a <= min(b,c) <= max(b,c) < d`, which holds for every
    /// non-identity product of an even number of generators.
    pub fn satisfies_entry_order(&self) -> bool {
        let [a, b, c, d] = self.entries_big();
        let lo = if b < c { &b } else { &c };
        let hi = if b < c { &c } else { &b };
        a >= BigInt::one() && &a <= lo && hi < &d
    }

    fn mul_ref(&self, rhs: &Mat2) -> Mat2 {
        if let (Repr::Small(l), Repr::Small(r)) = (&self.repr, &rhs.repr) {
            if let Some(p) = small_mul(l, r) {
                return Mat2::new(p[0], p[1], p[2], p[3]);
            }
        }
        let [a, b, c, d] = self.entries_big();
        let [e, f, g, h] = rhs.entries_big();
        Mat2::from_big([
            &a * &e + &b * &g,
            &a * &f + &b * &h,
            &c * &e + &d * &g,
            &c * &f + &d * &h,
        ])
    }

    pub fn pow(&self, n: u32) -> Mat2 {
        let mut acc = Mat2::identity();
        for _ in 0..n {
            acc = acc.mul_ref(self);
        }
        acc
    }
}

fn small_mul(l: &[i64; 4], r: &[i64; 4]) -> Option<[i64; 4]> {
    let dot = |x0: i64, y0: i64, x1: i64, y1: i64| -> Option<i64> {
        x0.checked_mul(y0)?.checked_add(x1.checked_mul(y1)?)
    };
    Some([
        dot(l[0], r[0], l[1], r[2])?,
        dot(l[0], r[1], l[1], r[3])?,
        dot(l[2], r[0], l[3], r[2])?,
        dot(l[2], r[1], l[3], r[3])?,
    ])
}

impl Mul for &Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: &Mat2) -> Mat2 {
        self.mul_ref(rhs)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        self.mul_ref(&rhs)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries_big();
        write!(f, "({a} {b}; {c} {d})")
    }
}

/// Product of the generators of `word`, in order.
pub fn word_to_matrix(word: &CfWord) -> Mat2 {
    word.quotients()
        .iter()
        .fold(Mat2::identity(), |acc, &a| &acc * &Mat2::generator(a))
}

/// Reads `b/d` off the second column of a semigroup element.
///
/// The matrix must be a nonempty product of generators; this is checked by
/// rebuilding the product from the expansions of `b/d`.
pub fn matrix_to_fraction(m: &Mat2) -> Result<Fraction> {
    let (b, d) = m.column2_big();
    let det = m.det();
    if det.abs() != BigInt::one() {
        return Err(Error::input(format!("{m} has determinant {det}, not +-1")));
    }
    if m.entries_big().iter().any(|x| x.is_negative()) || b.is_zero() {
        return Err(Error::input(format!("{m} is not a product of generators")));
    }
    let (b, d) = match (b.to_u64(), d.to_u64()) {
        (Some(b), Some(d)) => (b, d),
        _ => return Err(Error::resource("second column exceeds 64 bits")),
    };
    let frac = Fraction::new(b, d)?;
    let candidates: Vec<CfWord> = match b.cmp(&d) {
        Ordering::Less => {
            let w = cf_expand(frac)?;
            let alt = w.alternate();
            std::iter::once(w).chain(alt).collect()
        }
        Ordering::Equal => vec![CfWord { quotients: vec![1] }],
        Ordering::Greater => Vec::new(),
    };
    if candidates.iter().any(|w| &word_to_matrix(w) == m) {
        Ok(frac)
    } else {
        Err(Error::input(format!("{m} is not a product of generators")))
    }
}

/// Eigen-data of a determinant one matrix with trace above 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Unit expanding eigenvector, nonnegative entries.
    pub v_plus: [f64; 2],
    /// Unit contracting eigenvector, second entry nonnegative.
    pub v_minus: [f64; 2],
}

impl SpectralData {
    /// The expanding direction `(x, y)` read as the point `x/y`.
    pub fn point(&self) -> f64 {
        self.v_plus[0] / self.v_plus[1]
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Expanding eigenvalue `(t + sqrt(t^2 - 4))/2` and both eigenvectors.
pub fn spectral(m: &Mat2) -> Result<SpectralData> {
    if m.det() != BigInt::one() {
        return Err(Error::input(format!("{m} does not have determinant 1")));
    }
    let tr = m.trace();
    if tr <= BigInt::from(2) {
        return Err(Error::invariant(format!(
            "trace {tr} of {m} is not above 2; no expanding eigenvalue"
        )));
    }
    let [a, b, c, d] = m.to_f64();
    let half = (a + d) / 2.0;
    let root = ((half - 1.0) * (half + 1.0)).sqrt();
    let lambda_plus = half + root;
    let lambda_minus = 1.0 / lambda_plus;
    // lambda+ - a, which also equals d - lambda-, without cancellation
    let gap = (d - a) / 2.0 + root;
    let v_plus = if b != 0.0 {
        unit([b, gap])
    } else {
        unit([lambda_plus - d, c])
    };
    let mut v_minus = if c != 0.0 {
        unit([-gap, c])
    } else {
        unit([b, lambda_minus - a])
    };
    if v_minus[1] < 0.0 || (v_minus[1] == 0.0 && v_minus[0] < 0.0) {
        v_minus = [-v_minus[0], -v_minus[1]];
    }
    let v_plus = if v_plus[0] < 0.0 || v_plus[1] < 0.0 {
        [-v_plus[0], -v_plus[1]]
    } else {
        v_plus
    };
    Ok(SpectralData {
        lambda_plus,
        lambda_minus,
        v_plus,
        v_minus,
    })
}

pub fn norm_frobenius(m: &Mat2) -> f64 {
    m.norm_frobenius()
}

pub fn trace(m: &Mat2) -> BigInt {
    m.trace()
}
