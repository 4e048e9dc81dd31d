//! The field abstraction all generic code is written against.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Exact rational number.
pub type Rat = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("inverse does not exist: {0}")]
    NotInvertible(String),
    #[error("order mismatch: operands live in Q(zeta_{0}) and Q(zeta_{1}); re-embed explicitly")]
    OrderMismatch(u64, u64),
    #[error("square-root mismatch: operands extend by different radicands")]
    RadicandMismatch,
    #[error("no square root of {0} available in Q(zeta_{1})")]
    NoSquareRoot(String, u64),
    #[error("invalid scalar encoding: {0}")]
    Encoding(String),
}

/// A field of characteristic zero with exact arithmetic.
///
/// Arithmetic via the `std::ops` traits panics on structurally incompatible
/// operands (e.g. cyclotomic scalars of different orders that are not plainly
/// rational); callers validate compatibility once at the API boundary.
pub trait Field:
    Clone
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Send
    + Sync
    + 'static
{
    /// Multiplicative inverse; errors on zero.
    fn inv(&self) -> Result<Self, ScalarError>;

    /// Canonical embedding of the rationals.
    fn from_rat(r: &Rat) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rat(&Rat::from(BigInt::from(n)))
    }

    /// Approximate complex value, for diagnostics only.
    fn to_complex(&self) -> num_complex::Complex64;

    /// Short human-readable rendering.
    fn render(&self) -> String;
}

pub(crate) fn rat_to_f64(r: &Rat) -> f64 {
    // Exact conversion can overflow f64 for huge numerators; scale down first.
    let numer = r.numer();
    let denom = r.denom();
    let nb = numer.bits().max(1);
    let db = denom.bits().max(1);
    if nb < 900 && db < 900 {
        let n = bigint_to_f64(numer);
        let d = bigint_to_f64(denom);
        n / d
    } else {
        let shift = nb.max(db) - 512;
        let n = bigint_to_f64(&(numer >> shift));
        let d = bigint_to_f64(&(denom >> shift));
        n / d
    }
}

fn bigint_to_f64(b: &BigInt) -> f64 {
    let mut out = 0.0f64;
    let (sign, digits) = b.to_u64_digits();
    for d in digits.iter().rev() {
        out = out * 1.8446744073709552e19 + *d as f64;
    }
    if sign == num_bigint::Sign::Minus {
        -out
    } else {
        out
    }
}

/// Render a rational as `p` or `p/q`.
pub fn rat_render(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse a rational from `p` or `p/q` (optionally signed).
pub fn rat_parse(s: &str) -> Result<Rat, ScalarError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| ScalarError::Encoding(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| ScalarError::Encoding(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(ScalarError::Encoding(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

/// Quadratic extension `F(D)` of a field by a formal square root `D` with
/// `D^2 = theta`, stored as `a + b*D`. A zero `theta` acts as an
/// "unspecified" placeholder carried by base-field values (b = 0), so that
/// `Zero::zero()`/`One::one()` exist without a context; mixing two
/// different nonzero radicands panics.
#[derive(Clone)]
pub struct Quad<F: Field> {
    pub a: F,
    pub b: F,
    theta: F,
}

impl<F: Field> Quad<F> {
    pub fn new(a: F, b: F, theta: F) -> Self {
        Quad { a, b, theta }
    }

    pub fn from_base(a: F) -> Self {
        Quad {
            a,
            b: F::zero(),
            theta: F::zero(),
        }
    }

    /// The formal square root itself.
    pub fn gen_root(theta: F) -> Self {
        Quad {
            a: F::zero(),
            b: F::one(),
            theta,
        }
    }

    pub fn theta(&self) -> &F {
        &self.theta
    }

    /// Some(a) iff no D component.
    pub fn as_base(&self) -> Option<F> {
        if self.b.is_zero() {
            Some(self.a.clone())
        } else {
            None
        }
    }

    fn unify_theta(x: &Self, y: &Self) -> F {
        if x.theta.is_zero() {
            y.theta.clone()
        } else if y.theta.is_zero() || x.theta == y.theta {
            x.theta.clone()
        } else {
            panic!("{}", ScalarError::RadicandMismatch)
        }
    }
}

impl<F: Field> PartialEq for Quad<F> {
    fn eq(&self, other: &Self) -> bool {
        if self.a != other.a || self.b != other.b {
            return false;
        }
        self.b.is_zero() || self.theta == other.theta
    }
}

impl<F: Field> Debug for Quad<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl<F: Field> Add for Quad<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let theta = Self::unify_theta(&self, &rhs);
        Quad {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            theta,
        }
    }
}

impl<F: Field> Sub for Quad<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<F: Field> Neg for Quad<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Quad {
            a: -self.a,
            b: -self.b,
            theta: self.theta,
        }
    }
}

impl<F: Field> Mul for Quad<F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let theta = Self::unify_theta(&self, &rhs);
        let a = self.a.clone() * rhs.a.clone() + self.b.clone() * rhs.b.clone() * theta.clone();
        let b = self.a * rhs.b + self.b * rhs.a;
        Quad { a, b, theta }
    }
}

impl<F: Field> Zero for Quad<F> {
    fn zero() -> Self {
        Self::from_base(F::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl<F: Field> One for Quad<F> {
    fn one() -> Self {
        Self::from_base(F::one())
    }
}

impl<F: Field> Field for Quad<F> {
    fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        // (a + bD)^-1 = (a - bD) / (a^2 - b^2 theta).
        let norm =
            self.a.clone() * self.a.clone() - self.b.clone() * self.b.clone() * self.theta.clone();
        let ninv = norm
            .inv()
            .map_err(|_| ScalarError::NotInvertible("zero norm in quadratic extension".into()))?;
        Ok(Quad {
            a: self.a.clone() * ninv.clone(),
            b: -(self.b.clone() * ninv),
            theta: self.theta.clone(),
        })
    }

    fn from_rat(r: &Rat) -> Self {
        Self::from_base(F::from_rat(r))
    }

    fn to_complex(&self) -> num_complex::Complex64 {
        self.a.to_complex() + self.b.to_complex() * self.theta.to_complex().sqrt()
    }

    fn render(&self) -> String {
        if self.b.is_zero() {
            self.a.render()
        } else if self.a.is_zero() {
            format!("({})*D", self.b.render())
        } else {
            format!("{} + ({})*D", self.a.render(), self.b.render())
        }
    }
}

impl Field for Rat {
    fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            Err(ScalarError::DivisionByZero)
        } else {
            Ok(self.recip())
        }
    }

    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn to_complex(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(rat_to_f64(self), 0.0)
    }

    fn render(&self) -> String {
        rat_render(self)
    }
}
