//! First- and second-level multicomplex scalars.
//!
//! A multicomplex number of level `n` is a pair `z1 + z2·iₙ` of level
//! `n − 1` numbers, with all imaginary units commuting and squaring to −1.
//! [`Multicomplex<T>`] implements that recursion once; [`Cplx`] is the
//! level-1 instance over `f64` and [`BiCplx`] the level-2 instance over
//! [`Cplx`].
//!
//! Every operation is written so that a value whose imaginary parts are all
//! zero follows the exact floating-point path of the plain `f64`
//! implementation. That keeps complex-step evaluations bit-compatible with
//! real evaluations of the same code.
//!
//! Piecewise functions (`relu`, `elu`, `abs`, `max2`) pick their branch from
//! the fully-real component only, then apply the chosen smooth branch to the
//! whole value.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// Errors raised by checked multicomplex operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("divisor is a zero divisor of the multicomplex ring (z1² + z2² = 0)")]
    ZeroDivisor,
    #[error("{func} requires a positive real part, got {real}")]
    NonPositiveReal { func: &'static str, real: f64 },
    #[error("negative integer power of zero")]
    ZeroToNegativePower,
}

/// Scalar kinds a network or objective can be evaluated with.
///
/// Implemented by `f64`, [`Cplx`] and [`BiCplx`]. The unchecked methods
/// follow IEEE semantics (NaN/inf propagate); use [`apply`] for
/// domain-checked evaluation.
pub trait Scalar:
    Copy
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
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn from_real(x: f64) -> Self;

    /// The fully-real component.
    fn real(&self) -> f64;

    /// Sum of absolute values of every real component.
    fn l1_norm(&self) -> f64;

    fn is_finite(&self) -> bool;

    fn scale(self, k: f64) -> Self;

    /// `true` when `self` has no multiplicative inverse.
    fn is_zero_divisor(&self) -> bool;

    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tan(self) -> Self;
    fn tanh(self) -> Self;
    fn atan(self) -> Self;
    /// Four-quadrant arctangent of `self / x`, branch chosen by real parts.
    fn atan2(self, x: Self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn one() -> Self {
        Self::from_real(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    /// Integer power by repeated squaring.
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// Logistic function. The branch on the real part only selects between
    /// two algebraically identical forms that avoid overflow.
    fn sigmoid(self) -> Self {
        if self.real() >= 0.0 {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    fn relu(self) -> Self {
        if self.real() > 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    /// ELU with unit scale.
    fn elu(self) -> Self {
        if self.real() > 0.0 {
            self
        } else {
            self.exp_m1()
        }
    }

    /// `x·sign(Re x)` with `sign(0) = +1`.
    fn abs(self) -> Self {
        if self.real() >= 0.0 {
            self
        } else {
            -self
        }
    }

    /// The argument with the larger real part; ties go to `self`.
    fn max2(self, other: Self) -> Self {
        if self.real() >= other.real() {
            self
        } else {
            other
        }
    }
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn real(&self) -> f64 {
        *self
    }
    fn l1_norm(&self) -> f64 {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn is_zero_divisor(&self) -> bool {
        *self == 0.0
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// `re + im·i` where `re`, `im` are themselves scalars of the level below.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Multicomplex<T> {
    pub re: T,
    pub im: T,
}

/// First-level complex number (C¹).
pub type Cplx = Multicomplex<f64>;

/// Second-level bicomplex number (C²): `z1 + z2·i₂`, with `z1`, `z2` over `i₁`.
pub type BiCplx = Multicomplex<Cplx>;

/// Coefficient of the mixed unit `i₁i₂` of a [`BiCplx`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImagPart2 {
    pub value: f64,
}

impl<T> Multicomplex<T> {
    pub const fn new(re: T, im: T) -> Self {
        Self { re, im }
    }
}

impl Cplx {
    /// The unit `i`.
    pub const I: Cplx = Cplx::new(0.0, 1.0);
}

impl BiCplx {
    /// Builds `x + a·i₁ + b·i₂ + c·i₁i₂`.
    pub const fn from_parts(x: f64, a: f64, b: f64, c: f64) -> Self {
        Self::new(Cplx::new(x, a), Cplx::new(b, c))
    }

    pub const I1: BiCplx = BiCplx::from_parts(0.0, 1.0, 0.0, 0.0);
    pub const I2: BiCplx = BiCplx::from_parts(0.0, 0.0, 1.0, 0.0);
    pub const I1I2: BiCplx = BiCplx::from_parts(0.0, 0.0, 0.0, 1.0);

    pub fn z1(&self) -> Cplx {
        self.re
    }

    pub fn z2(&self) -> Cplx {
        self.im
    }

    /// `Im⁽²⁾`: the `i₁i₂` coefficient.
    pub fn imag2(&self) -> ImagPart2 {
        ImagPart2 { value: self.im.im }
    }
}

impl<T: Scalar> Multicomplex<T> {
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// Division that rejects zero and zero-divisor denominators.
    pub fn checked_div(self, rhs: Self) -> Result<Self, DomainError> {
        if rhs.l1_norm() == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        if rhs.is_zero_divisor() {
            return Err(DomainError::ZeroDivisor);
        }
        Ok(self / rhs)
    }
}

impl<T: Scalar> Add for Multicomplex<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl<T: Scalar> Sub for Multicomplex<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl<T: Scalar> Mul for Multicomplex<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl<T: Scalar> Div for Multicomplex<T> {
    type Output = Self;
    /// Smith's algorithm, lifted to any level: the ratio is taken against the
    /// component with the larger magnitude so that a zero imaginary divisor
    /// reduces to the plain quotient `re / c`.
    fn div(self, rhs: Self) -> Self {
        let (a, b, c, d) = (self.re, self.im, rhs.re, rhs.im);
        if c.l1_norm() >= d.l1_norm() {
            let q = d / c;
            let den = c + d * q;
            Self::new((a + b * q) / den, (b - a * q) / den)
        } else {
            let q = c / d;
            let den = c * q + d;
            Self::new((a * q + b) / den, (b * q - a) / den)
        }
    }
}

impl<T: Scalar> Neg for Multicomplex<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $method:ident $op:tt),*) => {$(
        impl<T: Scalar> $tr for Multicomplex<T> {
            fn $method(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    )*};
}

assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

// Mixed operations with a real right-hand side, for convenience in
// hand-written promoted functions.
impl<T: Scalar> Add<f64> for Multicomplex<T> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self + Self::from_real(rhs)
    }
}

impl<T: Scalar> Sub<f64> for Multicomplex<T> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self - Self::from_real(rhs)
    }
}

impl<T: Scalar> Mul<f64> for Multicomplex<T> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> Div<f64> for Multicomplex<T> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self / Self::from_real(rhs)
    }
}

impl<T: Scalar> Scalar for Multicomplex<T> {
    fn from_real(x: f64) -> Self {
        Self::new(T::from_real(x), T::zero())
    }

    fn real(&self) -> f64 {
        self.re.real()
    }

    fn l1_norm(&self) -> f64 {
        self.re.l1_norm() + self.im.l1_norm()
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn scale(self, k: f64) -> Self {
        Self::new(self.re.scale(k), self.im.scale(k))
    }

    fn is_zero_divisor(&self) -> bool {
        // z is invertible iff z1² + z2² is; rescale first so the squares
        // cannot underflow.
        let s = self.l1_norm();
        if s == 0.0 {
            return true;
        }
        let u = self.scale(1.0 / s);
        (u.re * u.re + u.im * u.im).is_zero_divisor()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Self::new(e * self.im.cos(), e * self.im.sin())
    }

    fn exp_m1(self) -> Self {
        let (a, b) = (self.re, self.im);
        let half_sin = (b.scale(0.5)).sin();
        Self::new(
            a.exp_m1() * b.cos() - (half_sin * half_sin).scale(2.0),
            a.exp() * b.sin(),
        )
    }

    /// `ln(a + b·i) = ln a + ln(1 + (b/a)·i)`, valid for `Re a > 0`.
    fn ln(self) -> Self {
        let u = self.im / self.re;
        Self::new(self.re.ln() + (u * u).ln_1p().scale(0.5), u.atan())
    }

    /// `ln(1 + a + b·i) = ln1p(a) + ln(1 + (b/(1+a))·i)`.
    fn ln_1p(self) -> Self {
        let u = self.im / (T::one() + self.re);
        Self::new(self.re.ln_1p() + (u * u).ln_1p().scale(0.5), u.atan())
    }

    fn sin(self) -> Self {
        let (a, b) = (self.re, self.im);
        Self::new(a.sin() * b.cosh(), a.cos() * b.sinh())
    }

    fn cos(self) -> Self {
        let (a, b) = (self.re, self.im);
        Self::new(a.cos() * b.cosh(), -(a.sin() * b.sinh()))
    }

    fn sinh(self) -> Self {
        let (a, b) = (self.re, self.im);
        Self::new(a.sinh() * b.cos(), a.cosh() * b.sin())
    }

    fn cosh(self) -> Self {
        let (a, b) = (self.re, self.im);
        Self::new(a.cosh() * b.cos(), a.sinh() * b.sin())
    }

    fn tan(self) -> Self {
        self.sin() / self.cos()
    }

    /// `tanh(a + b·i) = (t + s·i)/(1 + t·s·i)` with `t = tanh a`, `s = tan b`,
    /// expanded so that `1 − t²` is taken as `sech² a` (no cancellation).
    fn tanh(self) -> Self {
        let (a, b) = (self.re, self.im);
        let sgn = if a.real() >= 0.0 { 1.0 } else { -1.0 };
        let e = a.scale(-2.0 * sgn).exp();
        let one_e = T::one() + e;
        let sech2 = e.scale(4.0) / (one_e * one_e);
        let t = a.tanh();
        let s = b.tan();
        let den = T::one() + t * t * s * s;
        Self::new(t * (T::one() + s * s) / den, s * sech2 / den)
    }

    fn atan(self) -> Self {
        let (a, b) = (self.re, self.im);
        let one_minus_b = T::one() - b;
        let re = a.scale(2.0).atan2(T::one() - a * a - b * b).scale(0.5);
        let im = (b.scale(4.0) / (a * a + one_minus_b * one_minus_b))
            .ln_1p()
            .scale(0.25);
        Self::new(re, im)
    }

    fn atan2(self, x: Self) -> Self {
        let (yr, xr) = (self.real(), x.real());
        if xr > 0.0 {
            (self / x).atan()
        } else if xr < 0.0 {
            let base = (self / x).atan();
            if yr >= 0.0 {
                base + Self::from_real(PI)
            } else {
                base - Self::from_real(PI)
            }
        } else if yr > 0.0 {
            Self::from_real(FRAC_PI_2) - (x / self).atan()
        } else if yr < 0.0 {
            Self::from_real(-FRAC_PI_2) - (x / self).atan()
        } else {
            Self::zero()
        }
    }

    /// Principal square root `u + v·i`, `u = √((|z| + a)/2)`, `v = b/(2u)`.
    fn sqrt(self) -> Self {
        let (a, b) = (self.re, self.im);
        let modulus = (a * a + b * b).sqrt();
        let u = (modulus + a).scale(0.5).sqrt();
        Self::new(u, b / u.scale(2.0))
    }
}

impl fmt::Display for Cplx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_sign_negative() {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl fmt::Display for BiCplx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:+}i₁ {:+}i₂ {:+}i₁i₂",
            self.re.re, self.re.im, self.im.re, self.im.im
        )
    }
}

/// The elementary functions supported by domain-checked evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFn {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sigmoid,
    Sqrt,
    PowInt(i32),
    Relu,
    Elu,
    Abs,
}

/// Applies `func` to `x` with domain checks.
pub fn apply<S: Scalar>(func: ElemFn, x: S) -> Result<S, DomainError> {
    let positive = |name: &'static str| {
        if x.real() > 0.0 {
            Ok(())
        } else {
            Err(DomainError::NonPositiveReal {
                func: name,
                real: x.real(),
            })
        }
    };
    Ok(match func {
        ElemFn::Exp => x.exp(),
        ElemFn::Log => {
            positive("log")?;
            x.ln()
        }
        ElemFn::Sin => x.sin(),
        ElemFn::Cos => x.cos(),
        ElemFn::Tanh => x.tanh(),
        ElemFn::Sigmoid => x.sigmoid(),
        ElemFn::Sqrt => {
            positive("sqrt")?;
            x.sqrt()
        }
        ElemFn::PowInt(n) => {
            if n < 0 && x.is_zero_divisor() {
                return Err(DomainError::ZeroToNegativePower);
            }
            x.powi(n)
        }
        ElemFn::Relu => x.relu(),
        ElemFn::Elu => x.elu(),
        ElemFn::Abs => x.abs(),
    })
}

/// Binary maximum, branching on real parts.
pub fn max2<S: Scalar>(a: S, b: S) -> S {
    a.max2(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cplx_basic_arithmetic() {
        let a = Cplx::new(1.0, 2.0);
        let b = Cplx::new(3.0, 4.0);
        assert_eq!(a * b, Cplx::new(-5.0, 10.0));
        assert_eq!(Cplx::I * Cplx::I, Cplx::new(-1.0, 0.0));
        assert_eq!(Cplx::new(2.5, 0.0) + Cplx::new(-1.5, 0.0), Cplx::new(1.0, 0.0));
        assert_eq!(-a, Cplx::new(-1.0, -2.0));
        assert_eq!(b - a, Cplx::new(2.0, 2.0));
        let q = (a * b) / b;
        assert!((q.re - 1.0).abs() < 1e-15 && (q.im - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cplx_division_by_zero_is_an_error() {
        let a = Cplx::new(1.0, 1.0);
        assert_eq!(a.checked_div(Cplx::zero()), Err(DomainError::DivisionByZero));
        // Tiny but nonzero divisors are fine.
        assert!(a.checked_div(Cplx::new(1e-200, 0.0)).is_ok());
    }

    #[test]
    fn bicomplex_units() {
        assert_eq!(BiCplx::I1 * BiCplx::I2, BiCplx::I1I2);
        assert_eq!(BiCplx::I1 * BiCplx::I1, BiCplx::from_real(-1.0));
        assert_eq!(BiCplx::I2 * BiCplx::I2, BiCplx::from_real(-1.0));
        assert_eq!(BiCplx::I1I2 * BiCplx::I1I2, BiCplx::from_real(1.0));
        assert_eq!(BiCplx::I1 * BiCplx::I2, BiCplx::I2 * BiCplx::I1);
    }

    #[test]
    fn bicomplex_zero_divisor_is_rejected() {
        let one = BiCplx::from_real(1.0);
        let zd = one + BiCplx::I1I2;
        assert_eq!(one.checked_div(zd), Err(DomainError::ZeroDivisor));
        assert_eq!(one.checked_div(BiCplx::zero()), Err(DomainError::DivisionByZero));
        assert!(one.checked_div(one + BiCplx::I1).is_ok());
        // (1 + i₁i₂)(1 − i₁i₂) = 0
        assert_eq!(zd * (one - BiCplx::I1I2), BiCplx::zero());
    }

    #[test]
    fn bicomplex_division_inverts_multiplication() {
        let a = BiCplx::from_parts(1.5, -0.25, 0.75, 2.0);
        let b = BiCplx::from_parts(-0.5, 1.0, 0.3, -0.2);
        let back = (a * b) / b;
        for (x, y) in [
            (back.re.re, a.re.re),
            (back.re.im, a.re.im),
            (back.im.re, a.im.re),
            (back.im.im, a.im.im),
        ] {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
        let unit = BiCplx::I1I2 / BiCplx::I1I2;
        assert_eq!(unit, BiCplx::one());
    }

    #[test]
    fn square_of_bicomplex_perturbation() {
        let (x, h) = (3.0, 1e-4);
        let z = BiCplx::from_parts(x, h, h, 0.0);
        let sq = z * z;
        assert_eq!(sq.imag2().value, 2.0 * h * h);
        assert!((sq.imag2().value / (h * h) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_first_derivative_at_zero() {
        let h = 1e-8;
        let y = Cplx::new(0.0, h).exp();
        assert!((y.im / h - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn relu_branches_on_real_part() {
        let y = Cplx::new(-2.0, 1e-8).relu();
        assert_eq!(y, Cplx::zero());
        let y = Cplx::new(2.0, -5.0).relu();
        assert_eq!(y, Cplx::new(2.0, -5.0));
        let b = BiCplx::from_parts(-1.0, 10.0, 10.0, 10.0).relu();
        assert_eq!(b, BiCplx::zero());
    }

    #[test]
    fn sin_second_derivative() {
        let (x, h) = (0.7_f64, 1e-5);
        let y = BiCplx::from_parts(x, h, h, 0.0).sin();
        let d2 = y.imag2().value / (h * h);
        assert!((d2 + x.sin()).abs() < 1e-9, "{d2}");
        assert!((d2 + 0.644218).abs() < 1e-6);
    }

    #[test]
    fn abs_sign_at_zero_is_positive() {
        let z = Cplx::new(0.0, -3.0);
        assert_eq!(z.abs(), z);
        assert_eq!(Cplx::new(-1.0, 2.0).abs(), Cplx::new(1.0, -2.0));
    }

    #[test]
    fn max2_uses_real_parts() {
        let a = Cplx::new(1.0, -100.0);
        let b = Cplx::new(0.5, 100.0);
        assert_eq!(max2(a, b), a);
        assert_eq!(max2(b, a), a);
    }

    #[test]
    fn checked_apply_rejects_bad_domains() {
        assert!(matches!(
            apply(ElemFn::Log, Cplx::new(-1.0, 0.0)),
            Err(DomainError::NonPositiveReal { func: "log", .. })
        ));
        assert!(matches!(
            apply(ElemFn::Sqrt, BiCplx::from_parts(0.0, 1.0, 0.0, 0.0)),
            Err(DomainError::NonPositiveReal { func: "sqrt", .. })
        ));
        assert_eq!(
            apply(ElemFn::PowInt(-2), Cplx::zero()),
            Err(DomainError::ZeroToNegativePower)
        );
        assert!(apply(ElemFn::Log, 2.0).is_ok());
    }

    #[test]
    fn powi_matches_repeated_product() {
        let z = Cplx::new(1.1, -0.3);
        assert_eq!(z.powi(3), z * z * z);
        assert_eq!(z.powi(0), Cplx::one());
        let inv = z.powi(-2) * z * z;
        assert!((inv.re - 1.0).abs() < 1e-15 && inv.im.abs() < 1e-15);
    }

    #[test]
    fn display_formats() {
        assert_eq!(Cplx::new(1.0, -2.0).to_string(), "1-2i");
        assert_eq!(Cplx::new(1.0, 2.0).to_string(), "1+2i");
    }
}
