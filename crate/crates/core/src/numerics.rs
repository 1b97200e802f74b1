//! Scalar arithmetic contract shared by every solver.
//!
//! Two backends implement [`Scalar`]: [`Rational`] (arbitrary-precision
//! exact rationals) and [`Float`] (64-bit binary floating point). Both parse
//! the same literal grammar:
//!
//! ```text
//! -?[0-9]+(\.[0-9]+)?      decimal
//! -?[0-9]+/[1-9][0-9]*     fraction
//! ```
//!
//! Decimal literals are read exactly as base-10 rationals by the exact
//! backend and with round-to-nearest-even by the float backend.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::error::{MdpError, Result};
use crate::kernel::{BellmanEngine, ExactEngine, PlainEngine};

/// Exact backend: canonical arbitrary-precision rationals.
pub type Rational = num_rational::BigRational;

/// Divisors with magnitude below this are rejected by the float backend.
pub const DENORMAL_GUARD: f64 = 1e-300;

/// Float-backend distributions may deviate from mass one by at most this
/// much before being rejected.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A malformed numeric literal, with the 0-based character position of the
/// first offending character.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid literal {text:?} at position {position}: {message}")]
pub struct LiteralError {
    pub text: String,
    pub position: usize,
    pub message: &'static str,
}

/// The arithmetic every solver is generic over.
///
/// `Display` renders the value in the literal grammar so that
/// `parse_literal(&x.to_string())` reproduces `x` (exactly for
/// [`Rational`], bit-for-bit for [`Float`]).
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + Ord
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
    const BACKEND: Backend;
    /// Engine used by the iterative solvers' inner loops.
    type Engine: BellmanEngine<Self>;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn parse_literal(text: &str) -> std::result::Result<Self, LiteralError>;
    fn checked_div(&self, rhs: &Self) -> Result<Self>;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Tolerance on probability mass, `None` when mass must be exact.
    fn mass_tolerance() -> Option<Self>;

    fn is_exact() -> bool {
        Self::BACKEND == Backend::Exact
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// `p / q` for machine integers.
    fn from_ratio(p: i64, q: i64) -> Result<Self> {
        Self::from_int(p).checked_div(&Self::from_int(q))
    }
}

/// Parses a literal into the backend `S`.
pub fn scalar_from_decimal<S: Scalar>(text: &str) -> std::result::Result<S, LiteralError> {
    S::parse_literal(text)
}

/// Syntactic form of a literal after validation against the grammar.
#[derive(Debug)]
enum LiteralShape<'a> {
    Decimal {
        negative: bool,
        int: &'a str,
        frac: &'a str,
    },
    Fraction {
        negative: bool,
        numer: &'a str,
        denom: &'a str,
    },
}

fn scan_literal(text: &str) -> std::result::Result<LiteralShape<'_>, LiteralError> {
    let fail = |position: usize, message: &'static str| LiteralError {
        text: text.to_owned(),
        position,
        message,
    };
    let bytes = text.as_bytes();
    let mut pos = 0;
    let negative = bytes.first() == Some(&b'-');
    if negative {
        pos += 1;
    }
    let digits = |from: usize| {
        bytes[from..]
            .iter()
            .position(|b| !b.is_ascii_digit())
            .map_or(bytes.len(), |k| from + k)
    };
    let int_end = digits(pos);
    if int_end == pos {
        return Err(fail(pos, "expected a digit"));
    }
    let int = &text[pos..int_end];
    match bytes.get(int_end) {
        None => Ok(LiteralShape::Decimal {
            negative,
            int,
            frac: "",
        }),
        Some(b'.') => {
            let frac_end = digits(int_end + 1);
            if frac_end == int_end + 1 {
                return Err(fail(int_end + 1, "expected a digit after '.'"));
            }
            if frac_end != bytes.len() {
                return Err(fail(frac_end, "unexpected character"));
            }
            Ok(LiteralShape::Decimal {
                negative,
                int,
                frac: &text[int_end + 1..frac_end],
            })
        }
        Some(b'/') => {
            let start = int_end + 1;
            match bytes.get(start) {
                Some(b'1'..=b'9') => {}
                Some(b'0') => return Err(fail(start, "denominator must not start with 0")),
                _ => return Err(fail(start, "expected a nonzero digit")),
            }
            let end = digits(start);
            if end != bytes.len() {
                return Err(fail(end, "unexpected character"));
            }
            Ok(LiteralShape::Fraction {
                negative,
                numer: int,
                denom: &text[start..end],
            })
        }
        Some(_) => Err(fail(int_end, "unexpected character")),
    }
}

fn digits_to_bigint(digits: &str) -> BigInt {
    // the scanner only lets ASCII digits through
    BigInt::parse_bytes(digits.as_bytes(), 10).expect("validated digit string")
}

fn exact_from_shape(shape: &LiteralShape<'_>) -> Rational {
    let (negative, value) = match *shape {
        LiteralShape::Decimal {
            negative,
            int,
            frac,
        } => {
            let mut all = String::with_capacity(int.len() + frac.len());
            all.push_str(int);
            all.push_str(frac);
            let scale = num_traits::pow(BigInt::from(10u8), frac.len());
            (negative, Rational::new(digits_to_bigint(&all), scale))
        }
        LiteralShape::Fraction {
            negative,
            numer,
            denom,
        } => (
            negative,
            Rational::new(digits_to_bigint(numer), digits_to_bigint(denom)),
        ),
    };
    if negative {
        -value
    } else {
        value
    }
}

impl Scalar for Rational {
    type Engine = ExactEngine;
    const BACKEND: Backend = Backend::Exact;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn parse_literal(text: &str) -> std::result::Result<Self, LiteralError> {
        scan_literal(text).map(|shape| exact_from_shape(&shape))
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if Zero::is_zero(rhs) {
            return Err(MdpError::Domain("division by zero".into()));
        }
        Ok(self / rhs)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn mass_tolerance() -> Option<Self> {
        None
    }
}

/// Float backend: a finite `f64`.
///
/// Ordering is total because the toolkit never produces NaN or infinities
/// from valid inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Float(f64);

impl Float {
    pub fn new(value: f64) -> Self {
        debug_assert!(value.is_finite(), "non-finite float {value}");
        Float(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Float {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Float {}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Float {
    fn cmp(&self, other: &Self) -> Ordering {
        // -0.0 and 0.0 compare equal, as in rational order
        self.0.partial_cmp(&other.0).unwrap_or_else(|| self.0.total_cmp(&other.0))
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Rust prints the shortest round-tripping digits without an exponent,
        // which stays inside the literal grammar.
        let mut text = format!("{}", self.0);
        if text == "-0" {
            text = "0".into();
        }
        f.write_str(&text)
    }
}

macro_rules! float_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Float {
            type Output = Float;
            fn $method(self, rhs: Float) -> Float {
                Float::new(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Float> for Float {
            type Output = Float;
            fn $method(self, rhs: &'a Float) -> Float {
                Float::new(self.0 $op rhs.0)
            }
        }
    };
}

float_binop!(Add, add, +);
float_binop!(Sub, sub, -);
float_binop!(Mul, mul, *);

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Scalar for Float {
    type Engine = PlainEngine<Float>;
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        Float(0.0)
    }

    fn one() -> Self {
        Float(1.0)
    }

    fn from_int(n: i64) -> Self {
        Float(n as f64)
    }

    fn parse_literal(text: &str) -> std::result::Result<Self, LiteralError> {
        let shape = scan_literal(text)?;
        let value = match shape {
            // std's parser rounds decimal strings to nearest, ties to even
            LiteralShape::Decimal { .. } => text.parse::<f64>().ok(),
            LiteralShape::Fraction { .. } => ToPrimitive::to_f64(&exact_from_shape(&shape)),
        };
        match value {
            Some(v) if v.is_finite() => Ok(Float(v)),
            _ => Err(LiteralError {
                text: text.to_owned(),
                position: 0,
                message: "value out of float range",
            }),
        }
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.0.abs() < DENORMAL_GUARD {
            return Err(MdpError::DivisionGuard {
                divisor: rhs.to_string(),
            });
        }
        let q = self.0 / rhs.0;
        if !q.is_finite() {
            return Err(MdpError::Domain(format!("{} / {} overflows", self, rhs)));
        }
        Ok(Float(q))
    }

    fn abs(&self) -> Self {
        Float(self.0.abs())
    }

    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }

    fn to_f64(&self) -> f64 {
        self.0
    }

    fn mass_tolerance() -> Option<Self> {
        Some(Float(FLOAT_MASS_TOLERANCE))
    }
}

/// Human-readable approximation with 15 significant digits.
pub fn approx_decimal<S: Scalar>(x: &S) -> String {
    format!("{:.14e}", x.to_f64())
}

/// A total map from states `0..n` to scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueFunction<S>(Vec<S>);

impl<S: Scalar> ValueFunction<S> {
    pub fn new(values: Vec<S>) -> Self {
        ValueFunction(values)
    }

    pub fn zeros(n: usize) -> Self {
        ValueFunction(vec![S::zero(); n])
    }

    pub fn constant(n: usize, value: S) -> Self {
        ValueFunction(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(MdpError::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    /// First state where `self > other`, if any.
    pub fn first_exceeding(&self, other: &Self) -> Result<Option<usize>> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).position(|(a, b)| a > b))
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> S {
        self.0
            .iter()
            .map(Scalar::abs)
            .max()
            .unwrap_or_else(S::zero)
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        ValueFunction(self.0.iter().map(f).collect())
    }
}

impl ValueFunction<Rational> {
    /// Converts float estimates to exact rationals through their decimal
    /// rendering, so the exact value equals what a value file would carry.
    pub fn from_float_values(values: &ValueFunction<Float>) -> Self {
        ValueFunction(
            values
                .iter()
                .map(|x| Rational::parse_literal(&x.to_string()).expect("float display is a literal"))
                .collect(),
        )
    }
}

impl<S> Index<usize> for ValueFunction<S> {
    type Output = S;
    fn index(&self, s: usize) -> &S {
        &self.0[s]
    }
}

impl<S> IndexMut<usize> for ValueFunction<S> {
    fn index_mut(&mut self, s: usize) -> &mut S {
        &mut self.0[s]
    }
}

impl<S> FromIterator<S> for ValueFunction<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        ValueFunction(iter.into_iter().collect())
    }
}

/// `max_s |u(s) - v(s)|`.
pub fn sup_dist<S: Scalar>(u: &ValueFunction<S>, v: &ValueFunction<S>) -> Result<S> {
    u.check_len(v)?;
    Ok(u.0
        .iter()
        .zip(&v.0)
        .map(|(a, b)| (a.clone() - b).abs())
        .max()
        .unwrap_or_else(S::zero))
}
