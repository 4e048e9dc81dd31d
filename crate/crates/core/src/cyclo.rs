//! Exact cyclotomic arithmetic: `Q(zeta_N)` in the power basis
//! `1, zeta, ..., zeta^(phi(N)-1)` reduced modulo the N-th cyclotomic
//! polynomial, plus the quadratic extension by a formal square root `D`.

use crate::scalar::{rat_parse, rat_render, rat_to_f64, Field, Rat, ScalarError};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Euler totient by trial-division factorization.
pub fn euler_phi(mut n: u64) -> u64 {
    assert!(n >= 1);
    let mut phi = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut pk = 1;
            while n % p == 0 {
                n /= p;
                pk *= p;
            }
            phi *= pk - pk / p;
        }
        p += 1;
    }
    if n > 1 {
        phi *= n - 1;
    }
    phi
}

/// Monic coefficients (constant term first) of the N-th cyclotomic polynomial.
pub fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    fn compute(n: u64, memo: &mut HashMap<u64, Vec<BigInt>>) -> Vec<BigInt> {
        if let Some(v) = memo.get(&n) {
            return v.clone();
        }
        // x^n - 1 divided by Phi_d for every proper divisor d of n.
        let mut num = vec![BigInt::zero(); n as usize + 1];
        num[0] = -BigInt::one();
        num[n as usize] = BigInt::one();
        for d in 1..n {
            if n % d == 0 {
                let phi_d = compute(d, memo);
                num = poly_div_exact(&num, &phi_d);
            }
        }
        memo.insert(n, num.clone());
        num
    }
    let mut memo = HashMap::new();
    compute(n, &mut memo)
}

/// Exact division of integer polynomials (constant term first); panics on a
/// nonzero remainder, which never happens for cyclotomic factors.
fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dd = den.len() - 1;
    assert!(den[dd].is_one(), "divisor must be monic");
    let mut rem = num.to_vec();
    let nd = rem.len() - 1;
    let mut quo = vec![BigInt::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        quo[k] = c.clone();
        for j in 0..=dd {
            let t = &den[j] * &c;
            rem[k + j] -= t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact polynomial division");
    quo
}

/// Shared per-order data: the reduction of every power `zeta^j`, `j < N`, to
/// the power basis.
struct CycContext {
    #[allow(dead_code)]
    order: u64,
    phi: usize,
    /// `powers[j]` = coefficients of `zeta^j` in the basis, length `phi`.
    powers: Vec<Vec<Rat>>,
    /// Monic cyclotomic polynomial coefficients as rationals, length `phi+1`.
    min_poly: Vec<Rat>,
}

impl CycContext {
    fn new(order: u64) -> Self {
        let phi = euler_phi(order) as usize;
        let min_poly: Vec<Rat> = cyclotomic_poly(order)
            .into_iter()
            .map(Rat::from)
            .collect();
        let mut powers: Vec<Vec<Rat>> = Vec::with_capacity(order as usize);
        for j in 0..order as usize {
            if j < phi {
                let mut v = vec![Rat::zero(); phi];
                v[j] = Rat::one();
                powers.push(v);
            } else {
                // zeta^j = zeta * zeta^(j-1); the overflow term zeta^phi
                // rewrites as -(lower coefficients of the minimal polynomial).
                let prev = &powers[j - 1];
                let mut v = vec![Rat::zero(); phi];
                for i in 0..phi - 1 {
                    v[i + 1] = prev[i].clone();
                }
                let top = prev[phi - 1].clone();
                if !top.is_zero() {
                    for i in 0..phi {
                        let t = &min_poly[i] * &top;
                        v[i] -= t;
                    }
                }
                powers.push(v);
            }
        }
        CycContext {
            order,
            phi,
            powers,
            min_poly,
        }
    }
}

fn ctx(order: u64) -> Arc<CycContext> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CycContext>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(order)
        .or_insert_with(|| Arc::new(CycContext::new(order)))
        .clone()
}

/// An element of `Q(zeta_order)` in canonical (fully reduced) form: two equal
/// elements of the same field always hold identical coefficient vectors.
#[derive(Clone)]
pub struct CycScalar {
    #[allow(dead_code)]
    order: u64,
    coeffs: Vec<Rat>,
}

impl CycScalar {
    /// The zero of `Q(zeta_order)`.
    pub fn zero_of(order: u64) -> Self {
        CycScalar {
            order,
            coeffs: vec![Rat::zero(); euler_phi(order) as usize],
        }
    }

    /// Embed a rational into `Q(zeta_order)`.
    pub fn from_rat_of(order: u64, r: &Rat) -> Self {
        let mut s = Self::zero_of(order);
        s.coeffs[0] = r.clone();
        s
    }

    pub fn from_i64_of(order: u64, n: i64) -> Self {
        Self::from_rat_of(order, &Rat::from(BigInt::from(n)))
    }

    /// `zeta_order^k` (k may be negative).
    pub fn root_of_unity(order: u64, k: i64) -> Self {
        let c = ctx(order);
        let k = k.rem_euclid(order as i64) as usize;
        CycScalar {
            order,
            coeffs: c.powers[k].clone(),
        }
    }

    /// The imaginary unit `zeta_4`; requires `4 | order`.
    pub fn i_of(order: u64) -> Result<Self, ScalarError> {
        if order % 4 != 0 {
            return Err(ScalarError::NoSquareRoot("-1".into(), order));
        }
        Ok(Self::root_of_unity(order, (order / 4) as i64))
    }

    /// Square root of a positive integer, when `Q(zeta_order)` contains one:
    /// `sqrt(2)` needs `8 | order`; `sqrt(p)` for an odd prime `p` needs
    /// `p | order`, and additionally `4 | order` when `p = 3 (mod 4)`
    /// (quadratic Gauss sum). The returned root is the positive real one.
    pub fn sqrt_nat(order: u64, n: u64) -> Result<Self, ScalarError> {
        assert!(n >= 1);
        let mut out = Self::from_i64_of(order, 1);
        let mut m = n;
        // Pull out square factors.
        let mut p = 2u64;
        let mut odd_parts: Vec<u64> = Vec::new();
        let mut two_odd = false;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0u64;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                let half = p.pow((e / 2) as u32);
                out = out * Self::from_i64_of(order, half as i64);
                if e % 2 == 1 {
                    if p == 2 {
                        two_odd = true;
                    } else {
                        odd_parts.push(p);
                    }
                }
            }
            p += 1;
        }
        if m > 1 {
            if m == 2 {
                two_odd = true;
            } else {
                odd_parts.push(m);
            }
        }
        if two_odd {
            if order % 8 != 0 {
                return Err(ScalarError::NoSquareRoot("2".into(), order));
            }
            let e = (order / 8) as i64;
            let r = Self::root_of_unity(order, e) + Self::root_of_unity(order, -e);
            out = out * r;
        }
        for q in odd_parts {
            out = out * Self::sqrt_odd_prime(order, q)?;
        }
        Ok(out)
    }

    fn sqrt_odd_prime(order: u64, q: u64) -> Result<Self, ScalarError> {
        if order % q != 0 {
            return Err(ScalarError::NoSquareRoot(q.to_string(), order));
        }
        let step = (order / q) as i64;
        let mut gauss = Self::zero_of(order);
        for t in 0..q as i64 {
            gauss = gauss + Self::root_of_unity(order, step * ((t * t) % q as i64));
        }
        // Gauss: the sum equals sqrt(q) when q = 1 (mod 4) and i*sqrt(q)
        // when q = 3 (mod 4).
        if q % 4 == 1 {
            Ok(gauss)
        } else {
            let i = Self::i_of(order)
                .map_err(|_| ScalarError::NoSquareRoot(q.to_string(), order))?;
            Ok(gauss * i.inv().expect("i invertible"))
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn from_coeffs(order: u64, coeffs: Vec<Rat>) -> Result<Self, ScalarError> {
        let phi = euler_phi(order) as usize;
        if coeffs.len() != phi {
            return Err(ScalarError::Encoding(format!(
                "expected {} coefficients for Q(zeta_{}), got {}",
                phi,
                order,
                coeffs.len()
            )));
        }
        Ok(CycScalar { order, coeffs })
    }

    /// Some(r) iff the element is rational.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Re-embed into `Q(zeta_new_order)`; requires `order | new_order`.
    pub fn embed(&self, new_order: u64) -> Result<Self, ScalarError> {
        if new_order == self.order {
            return Ok(self.clone());
        }
        if new_order % self.order != 0 {
            return Err(ScalarError::OrderMismatch(self.order, new_order));
        }
        let step = (new_order / self.order) as i64;
        let mut out = Self::zero_of(new_order);
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let term =
                    Self::root_of_unity(new_order, step * j as i64).scale(c);
                out = out + term;
            }
        }
        Ok(out)
    }

    fn scale(mut self, r: &Rat) -> Self {
        for c in &mut self.coeffs {
            let t = &*c * r;
            *c = t;
        }
        self
    }

    /// Complex conjugate (the Galois automorphism `zeta -> zeta^-1`).
    pub fn conj(&self) -> Self {
        let c = ctx(self.order);
        let mut out = Self::zero_of(self.order);
        for (j, coeff) in self.coeffs.iter().enumerate() {
            if !coeff.is_zero() {
                let k = ((self.order as usize - j) % self.order as usize) as usize;
                for (i, p) in c.powers[k].iter().enumerate() {
                    let t = p * coeff;
                    out.coeffs[i] += t;
                }
            }
        }
        out
    }

    fn unify(a: &Self, b: &Self) -> Result<(Self, Self), ScalarError> {
        if a.order == b.order {
            Ok((a.clone(), b.clone()))
        } else if let Some(r) = a.as_rat() {
            Ok((Self::from_rat_of(b.order, &r), b.clone()))
        } else if let Some(r) = b.as_rat() {
            Ok((a.clone(), Self::from_rat_of(a.order, &r)))
        } else {
            Err(ScalarError::OrderMismatch(a.order, b.order))
        }
    }
}

impl PartialEq for CycScalar {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            self.coeffs == other.coeffs
        } else {
            match (self.as_rat(), other.as_rat()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
        }
    }
}

impl fmt::Debug for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Add for CycScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (mut a, b) = Self::unify(&self, &rhs).unwrap_or_else(|e| panic!("{e}"));
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }
}

impl Sub for CycScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for CycScalar {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in &mut self.coeffs {
            let t = -c.clone();
            *c = t;
        }
        self
    }
}

impl Mul for CycScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = Self::unify(&self, &rhs).unwrap_or_else(|e| panic!("{e}"));
        let c = ctx(a.order);
        let phi = c.phi;
        // Schoolbook product, then reduce every power through the table.
        let mut raw = vec![Rat::zero(); 2 * phi - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    raw[i + j] += x * y;
                }
            }
        }
        let mut out = vec![Rat::zero(); phi];
        for (k, v) in raw.into_iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            if k < phi {
                out[k] += v;
            } else {
                let pw = &c.powers[k % a.order as usize];
                for i in 0..phi {
                    if !pw[i].is_zero() {
                        out[i] += &pw[i] * &v;
                    }
                }
            }
        }
        CycScalar {
            order: a.order,
            coeffs: out,
        }
    }
}

impl Zero for CycScalar {
    fn zero() -> Self {
        Self::zero_of(1)
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl One for CycScalar {
    fn one() -> Self {
        Self::from_i64_of(1, 1)
    }
}

impl Field for CycScalar {
    fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let c = ctx(self.order);
        // Extended Euclid in Q[x] against the minimal polynomial.
        let inv_poly = poly_mod_inverse(&self.coeffs, &c.min_poly).ok_or_else(|| {
            ScalarError::NotInvertible("shared factor with the minimal polynomial".into())
        })?;
        let mut coeffs = inv_poly;
        coeffs.resize(c.phi, Rat::zero());
        Ok(CycScalar {
            order: self.order,
            coeffs,
        })
    }

    fn from_rat(r: &Rat) -> Self {
        Self::from_rat_of(1, r)
    }

    fn to_complex(&self) -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (j, cf) in self.coeffs.iter().enumerate() {
            if !cf.is_zero() {
                let ang = 2.0 * std::f64::consts::PI * j as f64 / self.order as f64;
                z += Complex64::from_polar(1.0, ang) * rat_to_f64(cf);
            }
        }
        z
    }

    fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = rat_render(c);
            let term = if j == 0 {
                cs
            } else {
                let base = if j == 1 {
                    format!("z{}", self.order)
                } else {
                    format!("z{}^{}", self.order, j)
                };
                if c.is_one() {
                    base
                } else if cs == "-1" {
                    format!("-{base}")
                } else {
                    format!("{cs}*{base}")
                }
            };
            parts.push(term);
        }
        let mut out = String::new();
        for (i, t) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(t);
            } else if let Some(stripped) = t.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(t);
            }
        }
        out
    }
}

/// Inverse of `a` modulo the monic polynomial `m` over Q, via extended Euclid.
fn poly_mod_inverse(a: &[Rat], m: &[Rat]) -> Option<Vec<Rat>> {
    fn deg(p: &[Rat]) -> Option<usize> {
        p.iter().rposition(|c| !c.is_zero())
    }
    fn trim(mut p: Vec<Rat>) -> Vec<Rat> {
        while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
            p.pop();
        }
        p
    }
    // Invariant: r0 = s0 * a (mod m), r1 = s1 * a (mod m).
    let mut r0: Vec<Rat> = m.to_vec();
    let mut r1: Vec<Rat> = trim(a.to_vec());
    let mut s0: Vec<Rat> = vec![Rat::zero()];
    let mut s1: Vec<Rat> = vec![Rat::one()];
    loop {
        let d1 = match deg(&r1) {
            None => return None,
            Some(0) => break,
            Some(d) => d,
        };
        let d0 = deg(&r0).unwrap();
        if d0 < d1 {
            std::mem::swap(&mut r0, &mut r1);
            std::mem::swap(&mut s0, &mut s1);
            continue;
        }
        // One long-division step set: full division of r0 by r1.
        let lead1 = r1[d1].clone();
        let mut rem = r0.clone();
        let mut quo = vec![Rat::zero(); d0 - d1 + 1];
        for k in (0..=d0 - d1).rev() {
            let c = &rem[k + d1] / &lead1;
            if c.is_zero() {
                continue;
            }
            quo[k] = c.clone();
            for j in 0..=d1 {
                let t = &r1[j] * &c;
                rem[k + j] -= t;
            }
        }
        let rem = trim(rem);
        // s_new = s0 - quo * s1
        let mut snew = vec![Rat::zero(); s0.len().max(quo.len() + s1.len())];
        for (i, c) in s0.iter().enumerate() {
            snew[i] += c;
        }
        for (i, qc) in quo.iter().enumerate() {
            if qc.is_zero() {
                continue;
            }
            for (j, sc) in s1.iter().enumerate() {
                if !sc.is_zero() {
                    snew[i + j] -= qc * sc;
                }
            }
        }
        r0 = r1;
        s0 = s1;
        r1 = rem;
        s1 = trim(snew);
    }
    let d = deg(&r1)?;
    if d != 0 {
        return None;
    }
    let c = r1[0].recip();
    Some(s1.into_iter().map(|x| x * &c).collect())
}

/// Quadratic extension of the cyclotomic field by a formal square root `D`.
pub type ExtScalar = crate::scalar::Quad<CycScalar>;

// ---- JSON encoding ---------------------------------------------------------

fn rats_to_json(rs: &[Rat]) -> serde_json::Value {
    serde_json::Value::Array(
        rs.iter()
            .map(|r| serde_json::Value::String(rat_render(r)))
            .collect(),
    )
}

fn rats_from_json(v: &serde_json::Value) -> Result<Vec<Rat>, ScalarError> {
    let arr = v
        .as_array()
        .ok_or_else(|| ScalarError::Encoding("expected array of rationals".into()))?;
    arr.iter()
        .map(|x| {
            x.as_str()
                .ok_or_else(|| ScalarError::Encoding("rational must be a string".into()))
                .and_then(rat_parse)
        })
        .collect()
}

impl CycScalar {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "order": self.order, "a": rats_to_json(&self.coeffs) })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ScalarError> {
        let order = v
            .get("order")
            .and_then(|o| o.as_u64())
            .ok_or_else(|| ScalarError::Encoding("scalar missing \"order\"".into()))?;
        if order == 0 {
            return Err(ScalarError::Encoding("order must be positive".into()));
        }
        let a = rats_from_json(
            v.get("a")
                .ok_or_else(|| ScalarError::Encoding("scalar missing \"a\"".into()))?,
        )?;
        Self::from_coeffs(order, a)
    }
}

impl crate::scalar::Quad<CycScalar> {
    /// Encodes `a` and `b`; the radicand is carried by the ambient algebra.
    pub fn to_json(&self) -> serde_json::Value {
        let order = self.a.order().max(self.b.order());
        let a = self.a.embed(order).expect("component orders divide");
        let b = self.b.embed(order).expect("component orders divide");
        serde_json::json!({
            "order": order,
            "a": rats_to_json(a.coeffs()),
            "b": rats_to_json(b.coeffs()),
        })
    }

    pub fn from_json(v: &serde_json::Value, theta: &CycScalar) -> Result<Self, ScalarError> {
        let a = CycScalar::from_json(v)?;
        let order = a.order();
        let b = match v.get("b") {
            Some(bv) => CycScalar::from_coeffs(order, rats_from_json(bv)?)?,
            None => CycScalar::zero_of(order),
        };
        Ok(ExtScalar::new(a, b, theta.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(order: u64, k: i64) -> CycScalar {
        CycScalar::root_of_unity(order, k)
    }

    #[test]
    fn totient_values() {
        let want = [
            (1, 1),
            (2, 1),
            (3, 2),
            (4, 2),
            (8, 4),
            (12, 4),
            (15, 8),
            (24, 8),
            (36, 12),
        ];
        for (n, p) in want {
            assert_eq!(euler_phi(n), p);
        }
    }

    #[test]
    fn minimal_polynomial_vanishes_on_primitive_root() {
        for n in 1..=48u64 {
            let zeta = z(n, 1);
            let poly = cyclotomic_poly(n);
            let mut acc = CycScalar::zero_of(n);
            let mut pw = CycScalar::from_i64_of(n, 1);
            for c in &poly {
                acc = acc + pw.clone() * CycScalar::from_rat_of(n, &Rat::from(c.clone()));
                pw = pw * zeta.clone();
            }
            assert!(acc.is_zero(), "Phi_{n} does not vanish at zeta_{n}");
            assert_eq!(poly.len() as u64 - 1, euler_phi(n));
        }
    }

    #[test]
    fn primitive_root_has_exact_order() {
        for n in [3u64, 4, 8, 9, 12, 20, 24] {
            let one = CycScalar::from_i64_of(n, 1);
            let mut pw = one.clone();
            for k in 1..n {
                pw = pw * z(n, 1);
                assert_eq!(pw, z(n, k as i64));
                assert!(pw != one, "zeta_{n}^{k} = 1 prematurely");
            }
            assert_eq!(pw * z(n, 1), one, "zeta_{n}^{n} != 1");
        }
    }

    #[test]
    fn third_roots_sum_to_zero() {
        let s = CycScalar::from_i64_of(3, 1) + z(3, 1) + z(3, 2);
        assert!(s.is_zero());
    }

    #[test]
    fn eighth_root_fourth_power_is_minus_one() {
        let m = z(8, 1) * z(8, 1) * z(8, 1) * z(8, 1);
        assert_eq!(m, CycScalar::from_i64_of(8, -1));
    }

    #[test]
    fn inverse_round_trip() {
        let x = z(12, 5) + CycScalar::from_i64_of(12, 3) * z(12, 2)
            - CycScalar::from_rat_of(12, &Rat::new(2.into(), 7.into()));
        let y = x.inv().unwrap();
        assert_eq!(x * y, CycScalar::from_i64_of(12, 1));
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(
            CycScalar::zero_of(5).inv(),
            Err(ScalarError::DivisionByZero)
        );
    }

    #[test]
    fn order_mismatch_is_rejected() {
        let a = z(3, 1);
        let b = z(4, 1);
        assert!(CycScalar::embed(&a, 4).is_err());
        assert!(std::panic::catch_unwind(|| a.clone() + b.clone()).is_err());
    }

    #[test]
    fn rationals_coerce_across_orders() {
        let a = CycScalar::from_i64_of(1, 2);
        let b = z(5, 1);
        let s = a + b.clone();
        assert_eq!(s - b, CycScalar::from_i64_of(5, 2));
    }

    #[test]
    fn embedding_preserves_value() {
        let a = z(3, 1);
        let e = a.embed(12).unwrap();
        assert_eq!(e.clone() * e.clone() * e, CycScalar::from_i64_of(12, 1));
        // zeta_12^4 is a primitive cube root.
        assert_eq!(a.embed(12).unwrap(), z(12, 4));
    }

    #[test]
    fn sqrt_two_squares_to_two() {
        let s = CycScalar::sqrt_nat(8, 2).unwrap();
        assert_eq!(s.clone() * s, CycScalar::from_i64_of(8, 2));
        assert!(CycScalar::sqrt_nat(12, 2).is_err());
    }

    #[test]
    fn sqrt_odd_primes_square_correctly() {
        for (order, p) in [(5u64, 5u64), (12, 3), (28, 7), (13, 13), (44, 11)] {
            let s = CycScalar::sqrt_nat(order, p).unwrap();
            assert_eq!(
                s.clone() * s,
                CycScalar::from_i64_of(order, p as i64),
                "sqrt({p}) in Q(zeta_{order})"
            );
        }
        // q = 3 (mod 4) without i available.
        assert!(CycScalar::sqrt_nat(3, 3).is_err());
    }

    #[test]
    fn sqrt_is_positive_real_branch() {
        for (order, n) in [(8u64, 2u64), (12, 3), (5, 5), (40, 10), (24, 6)] {
            let s = CycScalar::sqrt_nat(order, n).unwrap();
            let z = s.to_complex();
            assert!(z.im.abs() < 1e-9 && z.re > 0.0, "sqrt({n}): got {z}");
            assert!((z.re - (n as f64).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn complex_embedding_matches_roots_of_unity() {
        for (order, k) in [(4u64, 1i64), (8, 3), (12, 7), (5, 2)] {
            let z = CycScalar::root_of_unity(order, k).to_complex();
            let ang = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
            assert!((z.re - ang.cos()).abs() < 1e-9);
            assert!((z.im - ang.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn conjugation_is_an_involution_and_fixes_norm() {
        let x = z(12, 1) + CycScalar::from_i64_of(12, 2) * z(12, 3);
        assert_eq!(x.conj().conj(), x);
        let n = x.clone() * x.conj();
        let nz = n.to_complex();
        assert!(nz.im.abs() < 1e-9 && nz.re > 0.0);
    }

    #[test]
    fn ext_arithmetic_with_formal_root() {
        // theta = 5: (2 + 3D)(2 - 3D) = 4 - 45 = -41.
        let theta = CycScalar::from_i64_of(1, 5);
        let two = CycScalar::from_i64_of(1, 2);
        let three = CycScalar::from_i64_of(1, 3);
        let x = ExtScalar::new(two.clone(), three.clone(), theta.clone());
        let y = ExtScalar::new(two, -three, theta);
        let p = x * y;
        assert_eq!(p, ExtScalar::from_base(CycScalar::from_i64_of(1, -41)));
    }

    #[test]
    fn ext_inverse_round_trip() {
        let theta = CycScalar::from_i64_of(4, 3);
        let x = ExtScalar::new(z(4, 1), CycScalar::from_i64_of(4, 2), theta.clone());
        let y = x.inv().unwrap();
        assert_eq!(x * y, ExtScalar::one());
        // An element with vanishing norm: a = D with theta = a^2... use
        // (1 + D) with theta = 1, norm 0.
        let bad = ExtScalar::new(
            CycScalar::from_i64_of(1, 1),
            CycScalar::from_i64_of(1, 1),
            CycScalar::from_i64_of(1, 1),
        );
        assert!(bad.inv().is_err());
    }

    #[test]
    fn ext_complex_embedding() {
        // D with theta = 4 evaluates to 2.0.
        let d = ExtScalar::gen_root(CycScalar::from_i64_of(1, 4));
        let z = d.to_complex();
        assert!((z.re - 2.0).abs() < 1e-12 && z.im.abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let x = z(12, 5) + CycScalar::from_rat_of(12, &Rat::new(3.into(), 7.into()));
        let v = x.to_json();
        assert_eq!(CycScalar::from_json(&v).unwrap(), x);

        let theta = CycScalar::from_i64_of(12, 3);
        let e = ExtScalar::new(x.clone(), z(12, 2), theta.clone());
        let ev = e.to_json();
        assert_eq!(ExtScalar::from_json(&ev, &theta).unwrap(), e);

        // Wrong coefficient count is rejected.
        let bad = serde_json::json!({"order": 12, "a": ["1", "0"]});
        assert!(CycScalar::from_json(&bad).is_err());
    }
}
