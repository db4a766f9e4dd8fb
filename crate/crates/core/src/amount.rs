//! Exact monetary amounts.
//!
//! Bids and payments are rationals. Rules that rank bids by `v / sqrt(|S|)`
//! produce critical bids of the form `v * sqrt(a / b)`, so an [`Amount`] is a
//! finite sum `c_1 sqrt(m_1) + ... + c_n sqrt(m_n)` with rational `c_k` and
//! distinct square-free radicands `m_k`. Square roots of distinct square-free
//! integers are linearly independent over the rationals, so the canonical
//! form gives exact equality, and signs are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

/// Rational coefficient type.
pub type Rational = Ratio<i128>;

const OVERFLOW: &str = "amount arithmetic exceeded the 128-bit rational range";

fn q_add(a: &Rational, b: &Rational) -> Rational {
    a.checked_add(b).expect(OVERFLOW)
}

fn q_sub(a: &Rational, b: &Rational) -> Rational {
    a.checked_sub(b).expect(OVERFLOW)
}

fn q_mul(a: &Rational, b: &Rational) -> Rational {
    a.checked_mul(b).expect(OVERFLOW)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Term {
    radicand: u64,
    coeff: Rational,
}

/// An exact nonnegative-or-signed amount in the field of rationals extended by
/// square roots of integers.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Amount {
    // sorted by radicand, no zero coefficients
    terms: SmallVec<[Term; 1]>,
}

/// Splits `n` into `(a, m)` with `n = a^2 * m` and `m` square-free.
fn square_free_split(mut n: u64) -> (u64, u64) {
    let mut outer = 1u64;
    let mut rest = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            outer *= p;
        }
        if e % 2 == 1 {
            rest *= p;
        }
        p += 1;
    }
    (outer, rest * n)
}

fn largest_prime_factor(mut n: u64) -> u64 {
    let mut largest = 1;
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            largest = p;
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        n
    } else {
        largest
    }
}

impl Amount {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(n as i128))
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut terms = SmallVec::new();
        if !q.is_zero() {
            terms.push(Term { radicand: 1, coeff: q });
        }
        Amount { terms }
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Self::from_rational(Rational::new(numer as i128, denom as i128))
    }

    /// The exact square root of a nonnegative integer.
    pub fn sqrt_of(n: u64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        let (outer, radicand) = square_free_split(n);
        let mut terms = SmallVec::new();
        terms.push(Term {
            radicand,
            coeff: Rational::from_integer(outer as i128),
        });
        Amount { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|t| t.radicand == 1)
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [t] if t.radicand == 1 => Some(t.coeff),
            _ => None,
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Amount {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    radicand: t.radicand,
                    coeff: q_mul(&t.coeff, q),
                })
                .collect(),
        }
    }

    pub fn midpoint(&self, other: &Amount) -> Amount {
        (self + other).scale(&Rational::new(1, 2))
    }

    pub fn square(&self) -> Amount {
        self * self
    }

    pub fn signum(&self) -> Ordering {
        match self.terms.as_slice() {
            [] => Ordering::Equal,
            [t] => t.coeff.cmp(&Rational::zero()),
            _ => sign_filtered(&self.terms),
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| q_to_f64(&t.coeff) * (t.radicand as f64).sqrt())
            .sum()
    }

    pub fn max(self, other: Amount) -> Amount {
        if other > self {
            other
        } else {
            self
        }
    }

    fn from_terms(mut terms: Vec<(u64, Rational)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut out: SmallVec<[Term; 1]> = SmallVec::new();
        for (radicand, coeff) in terms {
            match out.last_mut() {
                Some(last) if last.radicand == radicand => {
                    last.coeff = q_add(&last.coeff, &coeff);
                }
                _ => out.push(Term { radicand, coeff }),
            }
        }
        out.retain(|t| !t.coeff.is_zero());
        Amount { terms: out }
    }
}

fn q_to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn sign_filtered(terms: &[Term]) -> Ordering {
    let mut approx = 0.0f64;
    let mut magnitude = 0.0f64;
    for t in terms {
        let v = q_to_f64(&t.coeff) * (t.radicand as f64).sqrt();
        approx += v;
        magnitude += v.abs();
    }
    let bound = magnitude * 1e-12;
    if approx > bound {
        return Ordering::Greater;
    }
    if approx < -bound {
        return Ordering::Less;
    }
    let big: Vec<(u64, BigRational)> = terms
        .iter()
        .map(|t| {
            (
                t.radicand,
                BigRational::new(BigInt::from(*t.coeff.numer()), BigInt::from(*t.coeff.denom())),
            )
        })
        .collect();
    sign_exact(big)
}

fn big_product(a: &[(u64, BigRational)], b: &[(u64, BigRational)]) -> Vec<(u64, BigRational)> {
    let mut out: Vec<(u64, BigRational)> = Vec::with_capacity(a.len() * b.len());
    for (ra, ca) in a {
        for (rb, cb) in b {
            let g = ra.gcd(rb);
            let radicand = (ra / g) * (rb / g);
            let coeff = ca * cb * BigRational::from_integer(BigInt::from(g));
            out.push((radicand, coeff));
        }
    }
    big_normalize(out)
}

fn big_normalize(mut terms: Vec<(u64, BigRational)>) -> Vec<(u64, BigRational)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(u64, BigRational)> = Vec::with_capacity(terms.len());
    for (r, c) in terms {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 += c,
            _ => out.push((r, c)),
        }
    }
    out.retain(|t| !t.1.is_zero());
    out
}

/// Exact sign of `sum c_k sqrt(m_k)` by eliminating one prime at a time:
/// write the sum as `P + Q sqrt(p)` and compare `P^2` with `p Q^2`.
fn sign_exact(terms: Vec<(u64, BigRational)>) -> Ordering {
    let terms = big_normalize(terms);
    if terms.is_empty() {
        return Ordering::Equal;
    }
    let p = terms.iter().map(|t| largest_prime_factor(t.0)).max().unwrap_or(1);
    if p == 1 {
        return terms[0].1.signum().to_i32().unwrap_or(0).cmp(&0);
    }
    let (with_p, without_p): (Vec<_>, Vec<_>) = terms.into_iter().partition(|t| t.0 % p == 0);
    let q_part: Vec<(u64, BigRational)> = with_p.into_iter().map(|(r, c)| (r / p, c)).collect();
    let sign_p = sign_exact(without_p.clone());
    let sign_q = sign_exact(q_part.clone());
    if sign_q == Ordering::Equal {
        return sign_p;
    }
    if sign_p == Ordering::Equal || sign_p == sign_q {
        return sign_q;
    }
    let mut diff = big_product(&without_p, &without_p);
    let p_big = BigRational::from_integer(BigInt::from(p));
    for (r, c) in big_product(&q_part, &q_part) {
        diff.push((r, -(c * &p_big)));
    }
    match sign_exact(diff) {
        Ordering::Greater => sign_p,
        Ordering::Less => sign_q,
        Ordering::Equal => Ordering::Equal,
    }
}

impl Ord for Amount {
    fn cmp(&self, other: &Self) -> Ordering {
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return a.cmp(&b);
        }
        (self - other).signum()
    }
}

impl PartialOrd for Amount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Amount> for &'a Amount {
    type Output = Amount;
    fn add(self, rhs: &'a Amount) -> Amount {
        if let (Some(a), Some(b)) = (self.as_rational(), rhs.as_rational()) {
            return Amount::from_rational(q_add(&a, &b));
        }
        let terms = self
            .terms
            .iter()
            .chain(rhs.terms.iter())
            .map(|t| (t.radicand, t.coeff))
            .collect();
        Amount::from_terms(terms)
    }
}

impl<'a> Sub<&'a Amount> for &'a Amount {
    type Output = Amount;
    fn sub(self, rhs: &'a Amount) -> Amount {
        if let (Some(a), Some(b)) = (self.as_rational(), rhs.as_rational()) {
            return Amount::from_rational(q_sub(&a, &b));
        }
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Amount> for &'a Amount {
    type Output = Amount;
    fn mul(self, rhs: &'a Amount) -> Amount {
        if let (Some(a), Some(b)) = (self.as_rational(), rhs.as_rational()) {
            return Amount::from_rational(q_mul(&a, &b));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let g = a.radicand.gcd(&b.radicand);
                let radicand = (a.radicand / g) * (b.radicand / g);
                let coeff = q_mul(
                    &q_mul(&a.coeff, &b.coeff),
                    &Rational::from_integer(g as i128),
                );
                terms.push((radicand, coeff));
            }
        }
        Amount::from_terms(terms)
    }
}

impl Neg for &Amount {
    type Output = Amount;
    fn neg(self) -> Amount {
        Amount {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    radicand: t.radicand,
                    coeff: -t.coeff,
                })
                .collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<Amount> for Amount {
            type Output = Amount;
            fn $f(self, rhs: Amount) -> Amount {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a Amount> for Amount {
            type Output = Amount;
            fn $f(self, rhs: &'a Amount) -> Amount {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Amount {
    type Output = Amount;
    fn neg(self) -> Amount {
        -&self
    }
}

impl std::iter::Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Amount> for Amount {
    fn sum<I: Iterator<Item = &'a Amount>>(iter: I) -> Amount {
        iter.fold(Amount::zero(), |acc, x| &acc + x)
    }
}

impl From<i64> for Amount {
    fn from(n: i64) -> Self {
        Amount::from_integer(n)
    }
}

impl From<Rational> for Amount {
    fn from(q: Rational) -> Self {
        Amount::from_rational(q)
    }
}

fn fmt_rational(q: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        return write!(f, "{}", q.numer());
    }
    // terminating decimals print as decimals, everything else as a fraction
    let mut d = *q.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let digits = twos.max(fives);
    if d == 1 && digits <= 18 {
        let scale = 10i128.pow(digits);
        if let Some(scaled) = q.numer().checked_mul(&(scale / q.denom())) {
            let sign = if scaled < 0 { "-" } else { "" };
            let abs = scaled.unsigned_abs();
            let int = abs / scale as u128;
            let frac = abs % scale as u128;
            return write!(f, "{sign}{int}.{frac:0width$}", width = digits as usize);
        }
    }
    write!(f, "{}/{}", q.numer(), q.denom())
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, t) in self.terms.iter().enumerate() {
            let coeff = if idx > 0 {
                if t.coeff < Rational::zero() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                t.coeff.abs()
            } else {
                t.coeff
            };
            if t.radicand == 1 {
                fmt_rational(&coeff, f)?;
            } else if coeff.is_one() {
                write!(f, "sqrt({})", t.radicand)?;
            } else if coeff == -Rational::one() {
                write!(f, "-sqrt({})", t.radicand)?;
            } else {
                fmt_rational(&coeff, f)?;
                write!(f, "*sqrt({})", t.radicand)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Amount({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid amount `{0}`: expected a decimal (\"2.5\") or a fraction (\"7/2\")")]
pub struct ParseAmountError(pub String);

const MAX_DIGITS: usize = 18;

fn parse_integer(s: &str, whole: &str) -> Result<i128, ParseAmountError> {
    if s.is_empty() || s.len() > MAX_DIGITS || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseAmountError(whole.to_string()));
    }
    s.parse::<i128>().map_err(|_| ParseAmountError(whole.to_string()))
}

/// Parses a rational literal: `"4"`, `"-2.75"`, `"7/2"`. No floating-point
/// intermediate is involved.
pub fn parse_rational(s: &str) -> Result<Rational, ParseAmountError> {
    let trimmed = s.trim();
    let (negative, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        let num = parse_integer(num.trim(), s)?;
        let den = parse_integer(den.trim(), s)?;
        if den == 0 {
            return Err(ParseAmountError(s.to_string()));
        }
        Rational::new(num, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        let int_part = if int.is_empty() { 0 } else { parse_integer(int, s)? };
        let frac_part = parse_integer(frac, s)?;
        let scale = 10i128.pow(frac.len() as u32);
        Rational::new(int_part * scale + frac_part, scale)
    } else {
        Rational::from_integer(parse_integer(body, s)?)
    };
    Ok(if negative { -value } else { value })
}

impl FromStr for Amount {
    type Err = ParseAmountError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Amount::from_rational)
    }
}

impl serde::Serialize for Amount {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
