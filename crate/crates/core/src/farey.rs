//! Reduced rationals on the extended line, Farey/Stern–Brocot navigation,
//! primitive words and curve-class canonicalization.
//!
//! A [`Rational`] labels a complementary region of the trivalent tree dual
//! to the Farey tessellation. `1/0` is the single point at infinity; it is
//! always stored as `1/0` and takes the sign of its finite neighbour whenever
//! a mediant is formed.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FareyError {
    #[error("0/0 is not a rational")]
    ZeroOverZero,
    #[error("{0} is a vertex of the base triangle and has no Farey parents")]
    NoParents(Rational),
    #[error("{0} has no Farey path")]
    NoPath(Rational),
    #[error("{0}: negative slopes are not supported here")]
    Unsupported(Rational),
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

/// A reduced fraction `p/q` with `q >= 0` and `gcd(|p|, q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    p: i64,
    q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { p: 0, q: 1 };
    pub const ONE: Rational = Rational { p: 1, q: 1 };
    pub const INFINITY: Rational = Rational { p: 1, q: 0 };

    pub fn new(p: i64, q: i64) -> Result<Self, FareyError> {
        if p == 0 && q == 0 {
            return Err(FareyError::ZeroOverZero);
        }
        if q == 0 {
            return Ok(Self::INFINITY);
        }
        let g = gcd(p, q);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 {
            p = -p;
            q = -q;
        }
        Ok(Rational { p, q })
    }

    /// Builds `p/q` from a pair already known to be coprime, fixing only the
    /// sign convention.
    pub(crate) fn from_coprime(p: i64, q: i64) -> Self {
        debug_assert!(gcd(p, q) == 1, "{p}/{q} is not reduced");
        if q == 0 {
            Self::INFINITY
        } else if q < 0 {
            Rational { p: -p, q: -q }
        } else {
            Rational { p, q }
        }
    }

    pub fn integer(n: i64) -> Self {
        Rational { p: n, q: 1 }
    }

    pub fn numer(self) -> i64 {
        self.p
    }

    pub fn denom(self) -> i64 {
        self.q
    }

    pub fn is_infinite(self) -> bool {
        self.q == 0
    }

    pub fn is_negative(self) -> bool {
        self.p < 0
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        if self.is_infinite() {
            self
        } else {
            Rational { p: -self.p, q: self.q }
        }
    }

    /// `self + n` for an integer `n`; infinity is fixed.
    pub fn shift(self, n: i64) -> Self {
        if self.is_infinite() {
            self
        } else {
            Rational {
                p: self.p + n * self.q,
                q: self.q,
            }
        }
    }

    pub(crate) fn checked_shift(self, n: i64) -> Option<Self> {
        if self.is_infinite() {
            return Some(self);
        }
        let p = n.checked_mul(self.q)?.checked_add(self.p)?;
        Some(Rational { p, q: self.q })
    }

    /// `|ad - bc|` for `a/b = self`, `c/d = other`; Farey neighbours have
    /// determinant one.
    pub fn det(self, other: Rational) -> i128 {
        (self.p as i128 * other.q as i128 - self.q as i128 * other.p as i128).abs()
    }

    pub fn is_neighbour(self, other: Rational) -> bool {
        self.det(other) == 1
    }

    pub fn to_f64(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.p as f64 / self.q as f64
        }
    }

    /// Sum of continued-fraction partial quotients of `|p|/q`.
    pub fn partial_quotient_sum(self) -> u64 {
        let (mut a, mut b) = (self.p.unsigned_abs(), self.q.unsigned_abs());
        let mut sum = 0;
        while b != 0 {
            sum += a / b;
            let t = a % b;
            a = b;
            b = t;
        }
        sum
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = FareyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FareyError::Parse(s.to_string());
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: i64 = p.parse().map_err(|_| err())?;
        let q: i64 = q.parse().map_err(|_| err())?;
        Rational::new(p, q).map_err(|_| err())
    }
}

/// Farey sum of two neighbours. Infinity takes the sign of the other
/// argument, so `mediant(-1/1, 1/0) = -2/1`.
pub fn mediant(a: Rational, b: Rational) -> Rational {
    let sign_of = |inf: Rational, other: Rational| {
        if inf.is_infinite() && other.is_negative() {
            -1
        } else {
            inf.p
        }
    };
    let ap = sign_of(a, b);
    let bp = sign_of(b, a);
    Rational::new(ap + bp, a.q + b.q).expect("mediant of two rationals is never 0/0")
}

/// The region on the far side of the edge between `a` and `b`, opposite to
/// `opposite`. The two vertices adjacent to the edge `{a, b}` carry
/// `(a+c)/(b+d)` and `(a-c)/(b-d)`; one of them is `opposite`.
pub fn reflect(a: Rational, b: Rational, opposite: Rational) -> Rational {
    let sum = Rational::from_coprime(a.p + b.p, a.q + b.q);
    if sum != opposite {
        return sum;
    }
    Rational::from_coprime(a.p - b.p, a.q - b.q)
}

/// Overflow-checked variant of [`reflect`] used by deep tree searches.
pub(crate) fn checked_reflect(a: Rational, b: Rational, opposite: Rational) -> Option<Rational> {
    let sum = Rational::from_coprime(a.p.checked_add(b.p)?, a.q.checked_add(b.q)?);
    if sum != opposite {
        return Some(sum);
    }
    Some(Rational::from_coprime(
        a.p.checked_sub(b.p)?,
        a.q.checked_sub(b.q)?,
    ))
}

fn is_base_vertex(r: Rational) -> bool {
    r == Rational::ZERO || r == Rational::INFINITY || (r.q == 1 && r.p.abs() == 1)
}

/// The two Farey neighbours whose mediant is `r`, smaller one first.
pub fn farey_parents(r: Rational) -> Result<(Rational, Rational), FareyError> {
    if is_base_vertex(r) {
        return Err(FareyError::NoParents(r));
    }
    if r.is_negative() {
        let (lo, hi) = farey_parents(r.neg())?;
        return Ok((hi.neg(), lo.neg()));
    }
    let (p, q) = (r.p, r.q);
    // left parent a/b solves p*b - q*a = 1 with 0 < b <= q
    let mut b = mod_inverse(p.rem_euclid(q), q);
    if b == 0 {
        b = q;
    }
    let a = (p as i128 * b as i128 - 1) / q as i128;
    let a = a as i64;
    Ok((Rational::from_coprime(a, b), Rational::from_coprime(p - a, q - b)))
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    old_s.rem_euclid(m as i128) as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    L,
    R,
}

/// A Farey triangle as seen while descending the Stern–Brocot tree: two
/// parents and their mediant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub left: Rational,
    pub right: Rational,
    pub apex: Rational,
}

impl Triangle {
    /// `(0/1, 1/0, 1/1)`.
    pub const BASE: Triangle = Triangle {
        left: Rational::ZERO,
        right: Rational::INFINITY,
        apex: Rational::ONE,
    };

    /// Mirror of the base triangle across `0/1 -- 1/0`.
    pub const NEGATIVE_BASE: Triangle = Triangle {
        left: Rational::INFINITY,
        right: Rational::ZERO,
        apex: Rational { p: -1, q: 1 },
    };

    pub fn step(self, turn: Turn) -> Triangle {
        match turn {
            Turn::L => Triangle {
                left: self.left,
                right: self.apex,
                apex: mediant(self.left, self.apex),
            },
            Turn::R => Triangle {
                left: self.apex,
                right: self.right,
                apex: mediant(self.apex, self.right),
            },
        }
    }

    pub fn contains(self, r: Rational) -> bool {
        self.left == r || self.right == r || self.apex == r
    }
}

/// Sequence of Stern–Brocot turns from the base triangle. Negative targets
/// start from the mirrored base triangle `(-1/0, 0/1, -1/1)` and use mirrored
/// turns, so `L` always moves towards `0/1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FareyPath {
    pub turns: Vec<Turn>,
    pub negative: bool,
}

impl FareyPath {
    pub fn start(&self) -> Triangle {
        if self.negative {
            Triangle::NEGATIVE_BASE
        } else {
            Triangle::BASE
        }
    }

    /// Replays the mediant moves. The target is the apex of the result, except
    /// for `0/1` which is a vertex of the base triangle itself.
    pub fn replay(&self) -> Triangle {
        let mirror = |t: Turn| match (t, self.negative) {
            (t, false) => t,
            (Turn::L, true) => Turn::R,
            (Turn::R, true) => Turn::L,
        };
        self.turns
            .iter()
            .fold(self.start(), |tri, &t| tri.step(mirror(t)))
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

/// Continued-fraction walk to `r`. `0/1`, `1/1` and `-1/1` give empty paths.
pub fn farey_path(r: Rational) -> Result<FareyPath, FareyError> {
    if r.is_infinite() {
        return Err(FareyError::NoPath(r));
    }
    let negative = r.is_negative();
    let (mut a, mut b) = (r.p.unsigned_abs(), r.q.unsigned_abs());
    let mut turns = Vec::new();
    if a == 0 {
        return Ok(FareyPath { turns, negative });
    }
    // a/b = [c0; c1, ..., cn]; path is R^c0 L^c1 R^c2 ... with the last run shortened by one
    let mut runs = Vec::new();
    while b != 0 {
        runs.push(a / b);
        let t = a % b;
        a = b;
        b = t;
    }
    if let Some(last) = runs.last_mut() {
        *last -= 1;
    }
    for (k, &len) in runs.iter().enumerate() {
        let turn = if k % 2 == 0 { Turn::R } else { Turn::L };
        turns.extend(std::iter::repeat_n(turn, len as usize));
    }
    Ok(FareyPath { turns, negative })
}

/// Canonical representative of the class `{±p/q + 2k}`: the unique member of
/// `[0, 1]`, or `1/0`.
pub fn canonical_class(r: Rational) -> Rational {
    if r.is_infinite() {
        return r;
    }
    let (p, q) = (r.p, r.q);
    let mut m = p.rem_euclid(2 * q);
    if m > q {
        m = 2 * q - m;
    }
    Rational::from_coprime(m, q)
}

/// Word in the generators `a` (at `0/1`) and `b` (at `1/0`) obtained by
/// juxtaposition along the Farey tree, smaller fraction first.
pub fn primitive_word(r: Rational) -> Result<String, FareyError> {
    if r.is_negative() {
        return Err(FareyError::Unsupported(r));
    }
    if r == Rational::ZERO {
        return Ok("a".into());
    }
    if r.is_infinite() {
        return Ok("b".into());
    }
    let path = farey_path(r)?;
    let (mut left, mut right, mut apex) = ("a".to_string(), "b".to_string(), "ab".to_string());
    for &t in &path.turns {
        match t {
            Turn::L => {
                let w = format!("{left}{apex}");
                right = std::mem::replace(&mut apex, w);
            }
            Turn::R => {
                let w = format!("{apex}{right}");
                left = std::mem::replace(&mut apex, w);
            }
        }
    }
    Ok(apex)
}

/// Canonical classes `p/q` with `0 <= p <= q <= max_q`, ordered by `q` then `p`.
pub fn canonical_classes(max_q: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    for q in 1..=max_q {
        for p in 0..=q {
            if gcd(p, q) == 1 {
                out.push(Rational { p, q });
            }
        }
    }
    out
}
