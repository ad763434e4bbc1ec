//! Scalars of the two supported valued fields.
//!
//! * `RealPower`: the reals with the absolute value `|x|_R^q`, `0 < q <= 1`,
//!   stored as binary64.
//! * `PAdic`: `Q_p` in floating-valuation form `p^v * u`, where the unit `u`
//!   holds `precision` base-`p` digits (`u mod p^precision`, `p` does not
//!   divide `u`). Multiplication is lossless; addition renormalizes and drops
//!   the digits that cancel.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Default number of significant base-`p` digits.
pub const DEFAULT_PRECISION: u32 = 24;

/// Largest modulus `p^precision` accepted; keeps unit products inside `u128`.
const MAX_MODULUS: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    RealPower { exponent: f64 },
    PAdic { prime: u64, precision: u32 },
}

impl FieldSpec {
    pub fn real(exponent: f64) -> Result<Self> {
        let f = FieldSpec::RealPower { exponent };
        f.validate()?;
        Ok(f)
    }

    pub fn padic(prime: u64, precision: u32) -> Result<Self> {
        let f = FieldSpec::PAdic { prime, precision };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::RealPower { exponent } => {
                if !(exponent > 0.0 && exponent <= 1.0) {
                    return Err(Error::InvalidField(format!(
                        "exponent {exponent} not in (0, 1]"
                    )));
                }
            }
            FieldSpec::PAdic { prime, precision } => {
                if !is_prime(prime) {
                    return Err(Error::InvalidField(format!("{prime} is not prime")));
                }
                if precision == 0 {
                    return Err(Error::InvalidField("precision must be >= 1".into()));
                }
                if checked_pow(prime, precision).map_or(true, |m| m > MAX_MODULUS) {
                    return Err(Error::InvalidField(format!(
                        "{prime}^{precision} exceeds the supported modulus 2^62"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_ultrametric(&self) -> bool {
        matches!(self, FieldSpec::PAdic { .. })
    }

    /// Size, in this field's units, of a rounding error of relative size
    /// `rel` on a value of norm `scale`. Over the reals `|rel * x|^q`, so
    /// for `q < 1` the floor is much coarser than `rel` itself. Over
    /// `Q_p` the last carried digit, `rel` is ignored.
    pub fn rounding_floor(&self, scale: f64, rel: f64) -> f64 {
        match self {
            FieldSpec::RealPower { exponent } => rel.powf(*exponent) * scale.max(1.0),
            FieldSpec::PAdic { prime, precision } => (*prime as f64).powi(-(*precision as i32) + 1) * scale.max(1.0),
        }
    }

    /// The field's absolute value.
    pub fn abs(&self, x: &Scalar) -> f64 {
        match (self, x) {
            (FieldSpec::RealPower { exponent }, Scalar::Real(v)) => real_abs(*v, *exponent),
            (FieldSpec::PAdic { .. }, Scalar::PAdic(a)) => a.abs(),
            _ => panic!("scalar {x:?} does not belong to field {self:?}"),
        }
    }

    pub fn zero(&self) -> Scalar {
        match *self {
            FieldSpec::RealPower { .. } => Scalar::Real(0.0),
            FieldSpec::PAdic { prime, precision } => Scalar::PAdic(PAdic::zero(prime, precision)),
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        match *self {
            FieldSpec::RealPower { .. } => Scalar::Real(n as f64),
            FieldSpec::PAdic { prime, precision } => {
                Scalar::PAdic(PAdic::from_i64(prime, precision, n))
            }
        }
    }

    pub fn from_ratio(&self, num: i64, den: i64) -> Result<Scalar> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        match self {
            FieldSpec::RealPower { .. } => Ok(Scalar::Real(num as f64 / den as f64)),
            FieldSpec::PAdic { .. } => Ok(self.from_i64(num) * self.from_i64(den).inv()?),
        }
    }

    /// Real fields accept any finite value; p-adic fields accept integral values only.
    pub fn from_f64(&self, x: f64) -> Result<Scalar> {
        if !x.is_finite() {
            return Err(Error::BadLiteral(x.to_string()));
        }
        match self {
            FieldSpec::RealPower { .. } => Ok(Scalar::Real(x)),
            FieldSpec::PAdic { .. } => {
                if x.fract() != 0.0 || x.abs() > 9.0e15 {
                    return Err(Error::BadLiteral(format!(
                        "{x} is not an integer; use p:v:u or a/b for p-adic literals"
                    )));
                }
                Ok(self.from_i64(x as i64))
            }
        }
    }

    /// A canonical element whose absolute value is `a` (or the closest one
    /// from below for p-adic fields, where absolute values are powers of `p`).
    pub fn element_with_abs(&self, a: f64) -> Scalar {
        match *self {
            FieldSpec::RealPower { exponent } => Scalar::Real(a.max(0.0).powf(1.0 / exponent)),
            FieldSpec::PAdic { prime, precision } => {
                if a <= 0.0 {
                    return Scalar::PAdic(PAdic::zero(prime, precision));
                }
                // |p^k| = p^-k <= a  <=>  k >= -log_p(a)
                let k = (-(a.ln() / (prime as f64).ln()) - 1e-9).ceil() as i64;
                Scalar::PAdic(PAdic::from_parts(prime, precision, k, 1))
            }
        }
    }

    /// Parses `p:v:u`, `a/b`, integers, and (real fields only) decimals.
    pub fn parse_literal(&self, text: &str) -> Result<Scalar> {
        let s = text.trim();
        let bad = || Error::BadLiteral(text.to_string());
        if s.contains(':') {
            let FieldSpec::PAdic { prime, precision } = *self else {
                return Err(Error::BadLiteral(format!(
                    "`{text}`: p-adic literal in a real field"
                )));
            };
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let p: u64 = parts[0].trim().parse().map_err(|_| bad())?;
            let v: i64 = parts[1].trim().parse().map_err(|_| bad())?;
            let u: i64 = parts[2].trim().parse().map_err(|_| bad())?;
            if p != prime {
                return Err(Error::BadLiteral(format!(
                    "`{text}`: prime {p} does not match field prime {prime}"
                )));
            }
            let unit = PAdic::from_i64(prime, precision, u);
            return Ok(Scalar::PAdic(unit.shift(v)));
        }
        if let Some((n, d)) = s.split_once('/') {
            let num: i64 = n.trim().parse().map_err(|_| bad())?;
            let den: i64 = d.trim().parse().map_err(|_| bad())?;
            return self.from_ratio(num, den);
        }
        match self {
            FieldSpec::RealPower { .. } => {
                let x: f64 = s.parse().map_err(|_| bad())?;
                if !x.is_finite() {
                    return Err(bad());
                }
                Ok(Scalar::Real(x))
            }
            FieldSpec::PAdic { .. } => {
                let n: i64 = s.parse().map_err(|_| bad())?;
                Ok(self.from_i64(n))
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::RealPower { exponent } => write!(f, "R^{exponent}"),
            FieldSpec::PAdic { prime, precision } => write!(f, "Q_{prime} (precision {precision})"),
        }
    }
}

fn real_abs(v: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        v.abs()
    } else {
        v.abs().powf(exponent)
    }
}

/// `p^-v` as binary64. Integer powers are exact up to 2^53, so the result is
/// the correctly rounded value and is consistent across call sites.
pub fn padic_abs(prime: u64, valuation: i64) -> f64 {
    let p = prime as f64;
    if valuation >= 0 {
        1.0 / p.powi(valuation as i32)
    } else {
        p.powi((-valuation) as i32)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// An element `p^valuation * unit` of `Q_p`, or zero (`unit == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdic {
    prime: u64,
    precision: u32,
    valuation: i64,
    unit: u64,
}

impl PAdic {
    pub fn zero(prime: u64, precision: u32) -> Self {
        PAdic { prime, precision, valuation: 0, unit: 0 }
    }

    fn modulus(&self) -> u64 {
        self.prime.pow(self.precision)
    }

    /// Builds `p^valuation * unit`, pulling any factors of `p` out of `unit`.
    pub fn from_parts(prime: u64, precision: u32, valuation: i64, unit: u64) -> Self {
        let m = prime.pow(precision);
        let mut u = unit;
        let mut v = valuation;
        if u == 0 {
            return Self::zero(prime, precision);
        }
        while u % prime == 0 {
            u /= prime;
            v += 1;
        }
        PAdic { prime, precision, valuation: v, unit: u % m }
    }

    pub fn from_i64(prime: u64, precision: u32, n: i64) -> Self {
        if n == 0 {
            return Self::zero(prime, precision);
        }
        let x = Self::from_parts(prime, precision, 0, n.unsigned_abs());
        if n < 0 {
            -x
        } else {
            x
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.unit == 0
    }

    /// `None` for zero (valuation +infinity).
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.valuation)
    }

    pub fn unit(&self) -> u64 {
        self.unit
    }

    pub fn abs(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            padic_abs(self.prime, self.valuation)
        }
    }

    /// Multiplication by `p^k`.
    pub fn shift(self, k: i64) -> Self {
        if self.is_zero() {
            self
        } else {
            PAdic { valuation: self.valuation + k, ..self }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = self.modulus();
        let u = mod_inverse(self.unit, m).expect("unit is coprime to p");
        Ok(PAdic { valuation: -self.valuation, unit: u, ..*self })
    }

    /// Addition that reports total cancellation instead of returning zero.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.assert_same_field(other);
        if self.is_zero() {
            return Ok(*other);
        }
        if other.is_zero() {
            return Ok(*self);
        }
        let (lo, hi) = if self.valuation <= other.valuation {
            (self, other)
        } else {
            (other, self)
        };
        let gap = hi.valuation - lo.valuation;
        if gap >= self.precision as i64 {
            return Ok(*lo);
        }
        let m = self.modulus() as u128;
        let shifted = (hi.unit as u128 * (self.prime as u128).pow(gap as u32)) % m;
        let s = (lo.unit as u128 + shifted) % m;
        if s == 0 {
            return Err(Error::PrecisionExhausted { precision: self.precision });
        }
        Ok(Self::from_parts(self.prime, self.precision, lo.valuation, s as u64))
    }

    fn assert_same_field(&self, other: &Self) {
        assert!(
            self.prime == other.prime && self.precision == other.precision,
            "mixed p-adic fields: {}^{} vs {}^{}",
            self.prime,
            self.precision,
            other.prime,
            other.precision
        );
    }
}

impl Neg for PAdic {
    type Output = PAdic;
    fn neg(self) -> PAdic {
        if self.is_zero() {
            self
        } else {
            PAdic { unit: self.modulus() - self.unit, ..self }
        }
    }
}

impl Add for PAdic {
    type Output = PAdic;
    /// Total cancellation yields exact zero.
    fn add(self, rhs: PAdic) -> PAdic {
        match self.checked_add(&rhs) {
            Ok(x) => x,
            Err(_) => PAdic::zero(self.prime, self.precision),
        }
    }
}

impl Mul for PAdic {
    type Output = PAdic;
    fn mul(self, rhs: PAdic) -> PAdic {
        self.assert_same_field(&rhs);
        if self.is_zero() || rhs.is_zero() {
            return PAdic::zero(self.prime, self.precision);
        }
        let m = self.modulus() as u128;
        let u = (self.unit as u128 * rhs.unit as u128 % m) as u64;
        PAdic { valuation: self.valuation + rhs.valuation, unit: u, ..self }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "{}:0:0", self.prime)
        } else {
            write!(f, "{}:{}:{}", self.prime, self.valuation, self.unit)
        }
    }
}

/// A field element; real values and p-adic values never mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Real(f64),
    PAdic(PAdic),
}

/// Exact hashable identity of a scalar (bit pattern for reals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKey {
    Real(u64),
    PAdic(i64, u64),
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Real(v) => *v == 0.0,
            Scalar::PAdic(a) => a.is_zero(),
        }
    }

    pub fn inv(&self) -> Result<Scalar> {
        match self {
            Scalar::Real(v) => {
                if *v == 0.0 {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(Scalar::Real(1.0 / v))
                }
            }
            Scalar::PAdic(a) => Ok(Scalar::PAdic(a.inv()?)),
        }
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Scalar> {
        Ok(*self * rhs.inv()?)
    }

    /// Like `+`, but p-adic total cancellation is an error.
    pub fn checked_add(&self, rhs: &Scalar) -> Result<Scalar> {
        match (self, rhs) {
            (Scalar::PAdic(a), Scalar::PAdic(b)) => Ok(Scalar::PAdic(a.checked_add(b)?)),
            _ => Ok(*self + *rhs),
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Scalar::Real(v) => Some(*v),
            Scalar::PAdic(_) => None,
        }
    }

    pub fn as_padic(&self) -> Option<&PAdic> {
        match self {
            Scalar::PAdic(a) => Some(a),
            Scalar::Real(_) => None,
        }
    }

    pub fn key(&self) -> ScalarKey {
        match self {
            Scalar::Real(v) => {
                let v = if *v == 0.0 { 0.0 } else { *v };
                ScalarKey::Real(v.to_bits())
            }
            Scalar::PAdic(a) => ScalarKey::PAdic(a.valuation, a.unit),
        }
    }
}

fn mixed(a: &Scalar, b: &Scalar) -> ! {
    panic!("mixed scalar kinds: {a:?} and {b:?}")
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Real(a), Scalar::Real(b)) => Scalar::Real(a + b),
            (Scalar::PAdic(a), Scalar::PAdic(b)) => Scalar::PAdic(a + b),
            (a, b) => mixed(&a, &b),
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Real(a), Scalar::Real(b)) => Scalar::Real(a * b),
            (Scalar::PAdic(a), Scalar::PAdic(b)) => Scalar::PAdic(a * b),
            (a, b) => mixed(&a, &b),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Real(a) => Scalar::Real(-a),
            Scalar::PAdic(a) => Scalar::PAdic(-a),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Real(v) => write!(f, "{v:?}"),
            Scalar::PAdic(a) => write!(f, "{a}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3() -> FieldSpec {
        FieldSpec::padic(3, DEFAULT_PRECISION).unwrap()
    }

    #[test]
    fn padic_abs_of_twelve() {
        let f = q3();
        let x = f.from_i64(12);
        assert_eq!(x.as_padic().unwrap().valuation(), Some(1));
        assert_eq!(x.as_padic().unwrap().unit(), 4);
        assert_eq!(f.abs(&x), 1.0 / 3.0);
        assert_eq!(f.abs(&f.zero()), 0.0);
    }

    #[test]
    fn real_power_abs() {
        let f = FieldSpec::real(0.5).unwrap();
        assert_eq!(f.abs(&Scalar::Real(-4.0)), 2.0);
        assert_eq!(f.abs(&Scalar::Real(0.0)), 0.0);
    }

    #[test]
    fn inverse_of_two_mod_625() {
        let f = FieldSpec::padic(5, 4).unwrap();
        let inv = f.from_i64(2).inv().unwrap();
        let a = *inv.as_padic().unwrap();
        assert_eq!(a.valuation(), Some(0));
        assert_eq!(a.unit(), 313);
        assert_eq!(f.from_i64(2) * inv, f.one());
    }

    #[test]
    fn seven_times_its_inverse() {
        let f = q3();
        let x = f.from_i64(7);
        assert_eq!(x * x.inv().unwrap(), f.one());
    }

    #[test]
    fn real_addition() {
        assert_eq!(Scalar::Real(1.5) + Scalar::Real(2.5), Scalar::Real(4.0));
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(q3().zero().inv(), Err(Error::DivisionByZero));
        assert_eq!(Scalar::Real(0.0).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn total_cancellation() {
        let f = q3();
        let x = f.from_i64(7);
        assert!((x - x).is_zero());
        assert!(matches!(
            x.checked_add(&-x),
            Err(Error::PrecisionExhausted { precision: 24 })
        ));
    }

    #[test]
    fn partial_cancellation_renormalizes() {
        let f = FieldSpec::padic(3, 4).unwrap();
        // 10 - 1 = 9 = 3^2
        let d = f.from_i64(10) - f.from_i64(1);
        assert_eq!(d.as_padic().unwrap().valuation(), Some(2));
        assert_eq!(d, f.from_i64(9));
    }

    #[test]
    fn literals() {
        let f = q3();
        assert_eq!(f.parse_literal("3:1:4").unwrap(), f.from_i64(12));
        assert_eq!(f.parse_literal("1/3").unwrap(), f.parse_literal("3:-1:1").unwrap());
        assert_eq!(f.parse_literal("-2").unwrap(), f.from_i64(-2));
        assert!(f.parse_literal("0.5").is_err());
        assert!(f.parse_literal("5:0:1").is_err());
        let r = FieldSpec::real(1.0).unwrap();
        assert_eq!(r.parse_literal("1/2").unwrap(), Scalar::Real(0.5));
        assert_eq!(r.parse_literal("-0.25").unwrap(), Scalar::Real(-0.25));
        assert!(r.parse_literal("3:0:1").is_err());
        assert!(r.parse_literal("inf").is_err());
    }

    #[test]
    fn field_validation() {
        assert!(FieldSpec::real(0.0).is_err());
        assert!(FieldSpec::real(1.5).is_err());
        assert!(FieldSpec::padic(4, 3).is_err());
        assert!(FieldSpec::padic(3, 0).is_err());
        assert!(FieldSpec::padic(7, 40).is_err());
        assert!(FieldSpec::padic(2, 62).is_ok());
    }

    #[test]
    fn element_with_abs_matches() {
        let f = q3();
        assert_eq!(f.abs(&f.element_with_abs(1.0 / 9.0)), 1.0 / 9.0);
        assert_eq!(f.abs(&f.element_with_abs(0.2)), 1.0 / 9.0);
        let r = FieldSpec::real(0.5).unwrap();
        assert!((r.abs(&r.element_with_abs(3.0)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn display_round_trips() {
        let f = q3();
        let x = f.parse_literal("3:-2:5").unwrap();
        assert_eq!(f.parse_literal(&x.to_string()).unwrap(), x);
        assert_eq!(f.parse_literal(&f.zero().to_string()).unwrap(), f.zero());
    }
}
