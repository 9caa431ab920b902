//! Exact arithmetic in cyclotomic fields `Q(zeta_N)`.
//!
//! A [`Cyclotomic`] is stored in the power basis of its own order `n`,
//! reduced modulo the `n`-th cyclotomic polynomial. Values of different
//! orders combine by lifting both into `Q(zeta_lcm)`, so rationals can be
//! created without knowing the workspace order. Rational values are always
//! normalized to order 1.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, VoaError};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn big(q: Rational64) -> Rational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn cyclo_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<BigInt>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<BigInt>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (lowest degree first) of the monic cyclotomic polynomial `Phi_n`.
pub fn cyclotomic_poly(n: u32) -> Arc<Vec<BigInt>> {
    assert!(n > 0, "cyclotomic order must be positive");
    if let Some(p) = cyclo_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Phi_d for every proper divisor d
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_poly(d);
            num = poly_div_exact(&num, &div);
        }
    }
    let p = Arc::new(num);
    cyclo_cache().lock().unwrap().insert(n, p.clone());
    p
}

fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    let mut quot = vec![BigInt::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (i, di) in den.iter().enumerate() {
            rem[k + i] -= &c * di;
        }
        quot[k] = c;
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()));
    quot
}

pub fn euler_phi(n: u32) -> usize {
    (cyclotomic_poly(n).len() - 1) as usize
}

fn lcm(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

/// Exact element of `Q(zeta_order)`.
#[derive(Clone)]
pub struct Cyclotomic {
    order: u32,
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic { order: 1, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Cyclotomic { order: 1, coeffs: vec![q] }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(q: Rational64) -> Self {
        Self::from_rational(big(q))
    }

    /// `zeta_order^j`, reduced.
    pub fn zeta(j: i64, order: u32) -> Self {
        let e = j.rem_euclid(order as i64) as usize;
        let mut coeffs = vec![Rational::zero(); e + 1];
        coeffs[e] = Rational::one();
        Self::from_poly(order, coeffs)
    }

    /// `e^{2 pi i q}` in `Q(zeta_order)`; fails unless `q * order` is an integer.
    pub fn phase(q: &Rational64, order: u32) -> Result<Self> {
        let scaled = *q * Rational64::from_integer(order as i64);
        if !scaled.is_integer() {
            return Err(VoaError::DenominatorNotSupported {
                q: q.to_string(),
                needed: *q.denom(),
                order,
            });
        }
        Ok(Self::zeta(scaled.to_integer(), order))
    }

    /// Build from arbitrary power-basis coefficients (any length).
    pub fn from_poly(order: u32, mut coeffs: Vec<Rational>) -> Self {
        reduce_in_place(&mut coeffs, order);
        let mut out = Cyclotomic { order, coeffs };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.len() <= 1 {
            self.order = 1;
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// `Some(q)` when the value is rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    /// Power-basis coefficients in `Q(zeta_m)`; `m` must be a multiple of the order.
    pub fn lifted(&self, m: u32) -> Vec<Rational> {
        assert!(m % self.order == 0, "cannot lift order {} into {}", self.order, m);
        if self.coeffs.len() <= 1 || m == self.order {
            return self.coeffs.clone();
        }
        let k = (m / self.order) as usize;
        let mut poly = vec![Rational::zero(); (self.coeffs.len() - 1) * k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            poly[i * k] = c.clone();
        }
        reduce_in_place(&mut poly, m);
        while poly.last().is_some_and(|c| c.is_zero()) {
            poly.pop();
        }
        poly
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        if q.is_one() {
            return self.clone();
        }
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| rmul(c, q)).collect(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(VoaError::DivisionByZero);
        }
        if let Some(q) = self.as_rational() {
            return Ok(Self::from_rational(q.recip()));
        }
        let modulus: Vec<Rational> = cyclotomic_poly(self.order)
            .iter()
            .map(|c| Rational::from_integer(c.clone()))
            .collect();
        let (g, s) = ext_gcd(&self.coeffs, &modulus);
        // Phi_n irreducible, so gcd is a nonzero constant
        debug_assert_eq!(g.len(), 1);
        let ginv = g[0].recip();
        Ok(Self::from_poly(self.order, s.into_iter().map(|c| c * &ginv).collect()))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Text form with roots of unity expressed as powers of `zeta_n`, where
    /// `n` is a multiple of this value's order.
    pub fn render(&self, n: u32) -> String {
        if let Some(q) = self.as_rational() {
            return render_rational(&q);
        }
        let n = if n % self.order == 0 { n } else { self.order };
        let coeffs = self.lifted(n);
        let mut out = String::new();
        let mut first = true;
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            first = false;
            if i == 0 {
                out.push_str(&render_rational(&mag));
            } else {
                if !mag.is_one() {
                    out.push_str(&render_rational(&mag));
                    out.push(' ');
                }
                out.push_str(&format!("zeta({i})"));
            }
        }
        let single = coeffs.iter().filter(|c| !c.is_zero()).count() == 1;
        if single {
            out
        } else {
            format!("({out})")
        }
    }

    pub fn is_negative_rational(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_negative())
    }
}

pub fn render_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn render_ratio(q: &Rational64) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn reduce_in_place(poly: &mut Vec<Rational>, order: u32) {
    let phi = cyclotomic_poly(order);
    let d = phi.len() - 1;
    if poly.len() > d {
        for k in (d..poly.len()).rev() {
            let c = std::mem::take(&mut poly[k]);
            if c.is_zero() {
                continue;
            }
            // x^k = x^{k-d} * x^d and x^d = -(lower terms of Phi)
            for (i, pi) in phi.iter().enumerate().take(d) {
                if !pi.is_zero() {
                    poly[k - d + i] -= &c * Rational::from_integer(pi.clone());
                }
            }
        }
        poly.truncate(d);
    }
    while poly.last().is_some_and(|c| c.is_zero()) {
        poly.pop();
    }
}

fn trim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] = radd(&out[i + j], &rmul(x, y));
            }
        }
    }
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out: Vec<Rational> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

fn poly_divmod(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem = a.to_vec();
    trim(&mut rem);
    let db = b.len() - 1;
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let lead = b[db].clone();
    let mut quot = vec![Rational::zero(); rem.len() - db];
    while rem.len() >= b.len() {
        let k = rem.len() - 1 - db;
        let c = &rem[rem.len() - 1] / &lead;
        for (i, bi) in b.iter().enumerate() {
            rem[k + i] -= &c * bi;
        }
        quot[k] = c;
        rem.pop();
        trim(&mut rem);
    }
    (quot, rem)
}

/// Returns `(g, s)` with `s * a = g (mod m)`.
fn ext_gcd(a: &[Rational], m: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r0 = m.to_vec();
    let mut r1 = a.to_vec();
    let mut s0: Vec<Rational> = Vec::new();
    let mut s1: Vec<Rational> = vec![Rational::one()];
    trim(&mut r1);
    while !r1.is_empty() {
        let (q, r) = poly_divmod(&r0, &r1);
        let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    (r0, s0)
}

fn binary_op(
    a: &Cyclotomic,
    b: &Cyclotomic,
    f: impl Fn(&[Rational], &[Rational]) -> Vec<Rational>,
) -> Cyclotomic {
    let m = lcm(a.order, b.order);
    let la = a.lifted(m);
    let lb = b.lifted(m);
    Cyclotomic::from_poly(m, f(&la, &lb))
}

/// Product with an integer fast path; `BigRational` otherwise reduces by gcd.
fn rmul(a: &Rational, b: &Rational) -> Rational {
    if a.is_integer() && b.is_integer() {
        return Rational::from_integer(a.numer() * b.numer());
    }
    a * b
}

fn radd(a: &Rational, b: &Rational) -> Rational {
    if a.is_integer() && b.is_integer() {
        return Rational::from_integer(a.numer() + b.numer());
    }
    a + b
}

fn add_polys(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => radd(x, y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => Rational::zero(),
        })
        .collect()
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        if self.coeffs.len() <= 1 && other.coeffs.len() <= 1 {
            return self.coeffs == other.coeffs;
        }
        let m = lcm(self.order, other.order);
        self.lifted(m) == other.lifted(m)
    }
}

impl Eq for Cyclotomic {}

impl fmt::Debug for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(self.order))
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(self.order))
    }
}

impl<'a> Add<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if self.coeffs.len() == 1 || rhs.coeffs.len() == 1 || self.order == rhs.order {
            let order = if self.coeffs.len() == 1 { rhs.order } else { self.order };
            let mut out = Cyclotomic { order, coeffs: add_polys(&self.coeffs, &rhs.coeffs) };
            out.normalize();
            return out;
        }
        binary_op(self, rhs, add_polys)
    }
}

impl<'a> Sub<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        if self.is_zero() || rhs.is_zero() {
            return Cyclotomic::zero();
        }
        if self.coeffs.len() == 1 {
            return rhs.scale(&self.coeffs[0]);
        }
        if rhs.coeffs.len() == 1 {
            return self.scale(&rhs.coeffs[0]);
        }
        binary_op(self, rhs, poly_mul)
    }
}

impl<'a> Div<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Result<Cyclotomic>;
    fn div(self, rhs: &Cyclotomic) -> Result<Cyclotomic> {
        Ok(self * &rhs.inv()?)
    }
}

impl Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Cyclotomic> for Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, rhs: Cyclotomic) -> Cyclotomic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Cyclotomic> for Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, rhs: &Cyclotomic) -> Cyclotomic {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&Cyclotomic> for Cyclotomic {
    fn add_assign(&mut self, rhs: &Cyclotomic) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Cyclotomic> for Cyclotomic {
    fn sub_assign(&mut self, rhs: &Cyclotomic) {
        *self = &*self - rhs;
    }
}

impl From<i64> for Cyclotomic {
    fn from(n: i64) -> Self {
        Cyclotomic::from_int(n)
    }
}

impl From<Rational> for Cyclotomic {
    fn from(q: Rational) -> Self {
        Cyclotomic::from_rational(q)
    }
}

/// Generalized binomial coefficient `C(s, i)` for rational `s`.
pub fn binomial(s: &Rational, i: u32) -> Rational {
    let mut acc = Rational::one();
    for k in 0..i {
        acc *= s - Rational::from_integer(BigInt::from(k));
        acc /= Rational::from_integer(BigInt::from(k + 1));
    }
    acc
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn inv_factorial(n: u32) -> Rational {
    Rational::new(BigInt::one(), factorial(n))
}

/// Converts an exact rational known to be small into a machine ratio.
pub fn to_ratio(q: &Rational) -> Option<Rational64> {
    Some(Rational64::new(q.numer().to_i64()?, q.denom().to_i64()?))
}
