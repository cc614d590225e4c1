//! Scalar backends.
//!
//! Every algebraic routine in the crate is generic over [`RealField`]; the two
//! implementations are `f64` and [`Rational`] (arbitrary precision). Pointwise
//! evaluation at complex arguments goes through the associated
//! [`RealField::Complex`] type, which is `Complex64` or [`ComplexRational`].
//! Transcendental functions are only available on the floating-point types;
//! the exact types report `None`, which callers surface as
//! [`Error::InexactBackend`](crate::Error::InexactBackend).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::complex::{Complex, Complex64};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type ComplexRational = Complex<BigRational>;

pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// Exact conversion of the binary value for the rational types.
    fn from_f64(x: f64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// `None` for real fields when `z` has a nonzero imaginary part.
    fn from_c64(z: Complex64) -> Option<Self>;
    fn to_c64(&self) -> Complex64;
    fn is_zero(&self) -> bool;
    fn imaginary_unit() -> Option<Self>;

    fn exp(&self) -> Option<Self>;
    fn sin(&self) -> Option<Self>;
    fn cos(&self) -> Option<Self>;
    fn sinh(&self) -> Option<Self>;
    fn cosh(&self) -> Option<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

pub trait RealField: Field + PartialOrd + fmt::Display {
    type Complex: Field;

    /// Short name used in reports and on the command line.
    const NAME: &'static str;

    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;
    fn sqrt(&self) -> Option<Self>;

    fn to_complex(&self) -> Self::Complex {
        self.lift()
    }

    /// Converts into any other field, exactly when `Self` is exact.
    fn lift<F: Field>(&self) -> F {
        if Self::EXACT {
            F::from_rational(&self.to_rational())
        } else {
            F::from_f64(self.to_f64())
        }
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn imaginary_unit() -> Option<Self> {
        None
    }
    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }
    fn sin(&self) -> Option<Self> {
        Some(f64::sin(*self))
    }
    fn cos(&self) -> Option<Self> {
        Some(f64::cos(*self))
    }
    fn sinh(&self) -> Option<Self> {
        Some(f64::sinh(*self))
    }
    fn cosh(&self) -> Option<Self> {
        Some(f64::cosh(*self))
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl RealField for f64 {
    type Complex = Complex64;
    const NAME: &'static str = "float";

    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).expect("finite value")
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
}

impl Field for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).expect("finite value")
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then(|| Self::from_f64(z.re))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(RealField::to_f64(self), 0.0)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn imaginary_unit() -> Option<Self> {
        None
    }
    fn exp(&self) -> Option<Self> {
        Field::is_zero(self).then(One::one)
    }
    fn sin(&self) -> Option<Self> {
        Field::is_zero(self).then(Zero::zero)
    }
    fn cos(&self) -> Option<Self> {
        Field::is_zero(self).then(One::one)
    }
    fn sinh(&self) -> Option<Self> {
        Field::is_zero(self).then(Zero::zero)
    }
    fn cosh(&self) -> Option<Self> {
        Field::is_zero(self).then(One::one)
    }
    fn magnitude(&self) -> f64 {
        RealField::to_f64(&Signed::abs(self))
    }
}

impl RealField for Rational {
    type Complex = ComplexRational;
    const NAME: &'static str = "rational";

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn sqrt(&self) -> Option<Self> {
        if Signed::is_negative(self) {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| Rational::new(n, d))
    }
}

impl Field for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_rational(r: &Rational) -> Self {
        Complex64::new(RealField::to_f64(r), 0.0)
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn imaginary_unit() -> Option<Self> {
        Some(Complex64::i())
    }
    fn exp(&self) -> Option<Self> {
        Some(Complex64::exp(*self))
    }
    fn sin(&self) -> Option<Self> {
        Some(Complex64::sin(*self))
    }
    fn cos(&self) -> Option<Self> {
        Some(Complex64::cos(*self))
    }
    fn sinh(&self) -> Option<Self> {
        Some(Complex64::sinh(*self))
    }
    fn cosh(&self) -> Option<Self> {
        Some(Complex64::cosh(*self))
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn powi(&self, n: u32) -> Self {
        Complex64::powi(self, n as i32)
    }
}

impl Field for ComplexRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Complex::new(One::one(), Zero::zero())
    }
    fn from_f64(x: f64) -> Self {
        Complex::new(<Rational as Field>::from_f64(x), Zero::zero())
    }
    fn from_rational(r: &Rational) -> Self {
        Complex::new(r.clone(), Zero::zero())
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(Complex::new(
            <Rational as Field>::from_f64(z.re),
            <Rational as Field>::from_f64(z.im),
        ))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(RealField::to_f64(&self.re), RealField::to_f64(&self.im))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn imaginary_unit() -> Option<Self> {
        Some(Complex::new(Zero::zero(), One::one()))
    }
    fn exp(&self) -> Option<Self> {
        Field::is_zero(self).then(<Self as Field>::one)
    }
    fn sin(&self) -> Option<Self> {
        Field::is_zero(self).then(<Self as Field>::zero)
    }
    fn cos(&self) -> Option<Self> {
        Field::is_zero(self).then(<Self as Field>::one)
    }
    fn sinh(&self) -> Option<Self> {
        Field::is_zero(self).then(<Self as Field>::zero)
    }
    fn cosh(&self) -> Option<Self> {
        Field::is_zero(self).then(<Self as Field>::one)
    }
}

/// `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff<F: Field>(a: &F, b: &F) -> f64 {
    let scale = 1.0_f64.max(a.magnitude()).max(b.magnitude());
    (a.clone() - b.clone()).magnitude() / scale
}

/// Formats a real scalar for CSV output: integers without a fraction, exact
/// rationals as `p/q`.
pub fn render<R: RealField>(x: &R) -> String {
    format!("{x}")
}
