//! Truncated extended series.
//!
//! A term is keyed by `(s, l, p, a)` and stands for
//! `z^s (log z)^l y^p e^{a y}`. A series is exactly known on its validity
//! window `[lo, hi]`: `lo` bounds the support from below (everything below
//! is genuinely zero) and `hi` is the precision. `hi = None` marks a finite
//! series known at every degree.

use std::cmp::min;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::{Result, VoaError};
use crate::scalars::{big, binomial, render_ratio, Cyclotomic};

pub type Exponent = Rational64;

pub fn ex(n: i64, d: i64) -> Exponent {
    Exponent::new(n, d)
}

pub fn exi(n: i64) -> Exponent {
    Exponent::from_integer(n)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub exp: Exponent,
    pub log: u32,
    pub ypow: u32,
    pub group: Exponent,
}

impl Key {
    pub fn pow(exp: Exponent) -> Self {
        Key { exp, log: 0, ypow: 0, group: Exponent::zero() }
    }

    pub fn new(exp: Exponent, log: u32, ypow: u32, group: Exponent) -> Self {
        Key { exp, log, ypow, group }
    }

    pub fn is_plain(&self) -> bool {
        self.log == 0 && self.ypow == 0 && self.group.is_zero()
    }

    pub fn mul(&self, other: &Key) -> Key {
        Key {
            exp: self.exp + other.exp,
            log: self.log + other.log,
            ypow: self.ypow + other.ypow,
            group: self.group + other.group,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z^{}", self.exp)?;
        if self.log > 0 {
            write!(f, " log^{}", self.log)?;
        }
        if self.ypow > 0 {
            write!(f, " y^{}", self.ypow)?;
        }
        if !self.group.is_zero() {
            write!(f, " E({})", self.group)?;
        }
        Ok(())
    }
}

/// The factors of a key in series-expression syntax; empty for `z^0`.
pub fn render_key(k: &Key) -> String {
    let mut parts = Vec::new();
    if k.log > 0 {
        parts.push(if k.log == 1 { "log(z)".to_string() } else { format!("log(z)^{}", k.log) });
    }
    if k.ypow > 0 {
        parts.push(if k.ypow == 1 { "y".to_string() } else { format!("y^{}", k.ypow) });
    }
    if !k.exp.is_zero() {
        parts.push(format!("z^{{{}}}", render_ratio(&k.exp)));
    }
    if !k.group.is_zero() {
        parts.push(format!("E({})", render_ratio(&k.group)));
    }
    parts.join(" ")
}

/// A coefficient space over the cyclotomic scalars.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn scale(&self, c: &Cyclotomic) -> Self;

    fn sub_assign_ref(&mut self, other: &Self) {
        self.add_assign_ref(&other.scale(&Cyclotomic::from_int(-1)));
    }
}

impl Coeff for Cyclotomic {
    fn zero() -> Self {
        Cyclotomic::zero()
    }
    fn is_zero(&self) -> bool {
        Cyclotomic::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&self, c: &Cyclotomic) -> Self {
        self * c
    }
}

fn min_hi(a: Option<Exponent>, b: Option<Exponent>) -> Option<Exponent> {
    match (a, b) {
        (Some(x), Some(y)) => Some(min(x, y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

#[derive(Clone)]
pub struct ExtSeries<C> {
    terms: BTreeMap<Key, C>,
    lo: Exponent,
    hi: Option<Exponent>,
    log_bound: u32,
}

pub type ScalarSeries = ExtSeries<Cyclotomic>;

/// Equality means agreement on the common validity window.
impl<C: Coeff> PartialEq for ExtSeries<C> {
    fn eq(&self, other: &Self) -> bool {
        self.agrees_with(other)
    }
}

impl<C: Coeff> ExtSeries<C> {
    /// The zero series, known exactly.
    pub fn exact() -> Self {
        ExtSeries { terms: BTreeMap::new(), lo: Exponent::zero(), hi: None, log_bound: 0 }
    }

    /// Empty series known on `[lo, hi]`.
    pub fn windowed(lo: Exponent, hi: Exponent) -> Self {
        ExtSeries { terms: BTreeMap::new(), lo, hi: Some(hi), log_bound: 0 }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(Key::pow(Exponent::zero()), c)
    }

    pub fn monomial(key: Key, c: C) -> Self {
        let mut s = Self::exact();
        s.log_bound = key.log;
        s.lo = key.exp;
        s.add_term(key, c);
        s
    }

    pub fn with_log_bound(mut self, bound: u32) -> Self {
        self.log_bound = bound;
        self
    }

    pub fn lo(&self) -> Exponent {
        self.lo
    }

    pub fn hi(&self) -> Option<Exponent> {
        self.hi
    }

    pub fn log_bound(&self) -> u32 {
        self.log_bound
    }

    pub fn is_exact(&self) -> bool {
        self.hi.is_none()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Key, C)> {
        self.terms.into_iter()
    }

    /// Truncates the precision to `hi`, dropping terms above it.
    pub fn truncate(mut self, hi: Exponent) -> Self {
        let hi = match self.hi {
            Some(h) => min(h, hi),
            None => hi,
        };
        self.terms.retain(|k, _| k.exp <= hi);
        self.hi = Some(hi);
        if self.lo > hi {
            self.lo = hi;
        }
        self
    }

    /// `sum_k z^k f(c_k)` for an exact series; the result is known up to the
    /// smallest precision contributed by any `f(c_k)`.
    pub fn compose<D: Coeff>(&self, mut f: impl FnMut(&C) -> Result<ExtSeries<D>>) -> Result<ExtSeries<D>> {
        debug_assert!(self.is_exact(), "compose needs an exact outer series");
        let mut parts = Vec::new();
        let mut hi: Option<Exponent> = None;
        let mut lo: Option<Exponent> = None;
        for (k, c) in &self.terms {
            let img = f(c)?;
            if let Some(h) = img.hi {
                hi = min_hi(hi, Some(h + k.exp));
            }
            lo = Some(lo.map_or(img.lo + k.exp, |l: Exponent| min(l, img.lo + k.exp)));
            parts.push((k.clone(), img));
        }
        let mut out = ExtSeries { terms: BTreeMap::new(), lo: Exponent::zero(), hi, log_bound: self.log_bound };
        if let Some(l) = lo {
            out.lo = hi.map_or(l, |h| min(l, h));
        }
        for (k, img) in parts {
            out.log_bound = out.log_bound.max(self.log_bound + img.log_bound);
            for (k2, c2) in img.terms {
                out.add_term(k.mul(&k2), c2);
            }
        }
        Ok(out)
    }

    /// Lowers the support bound to `lo` if that is smaller.
    pub fn widen_lo(mut self, lo: Exponent) -> Self {
        if lo < self.lo {
            self.lo = lo;
        }
        self
    }

    /// Smallest exponent present, if any.
    pub fn min_exp(&self) -> Option<Exponent> {
        self.terms.keys().map(|k| k.exp).min()
    }

    /// Sets `lo` to the smallest stored exponent (or keeps it when empty).
    pub fn tighten(mut self) -> Self {
        if let Some(m) = self.min_exp() {
            self.lo = m;
        }
        self
    }

    /// Accumulates a term. Terms above the precision are dropped; the lower
    /// bound widens to admit the term.
    pub fn add_term(&mut self, key: Key, c: C) {
        if c.is_zero() {
            return;
        }
        if let Some(h) = self.hi {
            if key.exp > h {
                return;
            }
        }
        if key.exp < self.lo {
            self.lo = key.exp;
        }
        if key.log > self.log_bound {
            self.log_bound = key.log;
        }
        match self.terms.get_mut(&key) {
            Some(existing) => {
                existing.add_assign_ref(&c);
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    /// Coefficient lookup; a hard error above the validity window.
    pub fn coeff(&self, key: &Key) -> Result<C> {
        if let Some(h) = self.hi {
            if key.exp > h {
                return Err(VoaError::OutsideWindow { at: key.exp, hi: h });
            }
        }
        Ok(self.terms.get(key).cloned().unwrap_or_else(C::zero))
    }

    pub fn coeff_at(&self, exp: Exponent) -> Result<C> {
        self.coeff(&Key::pow(exp))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.hi = min_hi(self.hi, other.hi);
        out.lo = min(self.lo, other.lo);
        out.log_bound = self.log_bound.max(other.log_bound);
        if let Some(h) = out.hi {
            out.terms.retain(|k, _| k.exp <= h);
        }
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Cyclotomic::from_int(-1)))
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        let mut out = ExtSeries { terms: BTreeMap::new(), ..*self.shape() };
        if c.is_zero() {
            return out;
        }
        for (k, v) in &self.terms {
            out.terms.insert(k.clone(), v.scale(c));
        }
        out
    }

    fn shape(&self) -> Box<ExtSeries<C>> {
        Box::new(ExtSeries { terms: BTreeMap::new(), lo: self.lo, hi: self.hi, log_bound: self.log_bound })
    }

    /// Multiplies every key by `z^shift`, moving the window along.
    pub fn shift(&self, shift: Exponent) -> Self {
        ExtSeries {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (Key { exp: k.exp + shift, ..k.clone() }, c.clone()))
                .collect(),
            lo: self.lo + shift,
            hi: self.hi.map(|h| h + shift),
            log_bound: self.log_bound,
        }
    }

    /// Applies a coefficient map termwise, keeping the window.
    pub fn map<D: Coeff>(&self, mut f: impl FnMut(&C) -> D) -> ExtSeries<D> {
        let mut out = ExtSeries::<D> {
            terms: BTreeMap::new(),
            lo: self.lo,
            hi: self.hi,
            log_bound: self.log_bound,
        };
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }

    pub fn try_map<D: Coeff>(&self, mut f: impl FnMut(&C) -> Result<D>) -> Result<ExtSeries<D>> {
        let mut out = ExtSeries::<D> {
            terms: BTreeMap::new(),
            lo: self.lo,
            hi: self.hi,
            log_bound: self.log_bound,
        };
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Checks every stored exponent and group index lies in `(1/r)Z`.
    pub fn check_root_denom(&self, r: u32) -> Result<()> {
        for k in self.terms.keys() {
            if (r as i64) % k.exp.denom() != 0 {
                return Err(VoaError::ExponentNotRepresentable(k.exp));
            }
            if (r as i64) % k.group.denom() != 0 {
                return Err(VoaError::ExponentNotRepresentable(k.group));
            }
        }
        Ok(())
    }

    /// The derivation: `d/dz` on `z^s`, `d log z = z^{-1}`, `d y = z^{-1}`,
    /// `d e^{ay} = a z^{-1} e^{ay}`.
    pub fn derive(&self) -> Self {
        let mut out = ExtSeries {
            terms: BTreeMap::new(),
            lo: self.lo - Exponent::one(),
            hi: self.hi.map(|h| h - Exponent::one()),
            log_bound: self.log_bound,
        };
        for (k, c) in &self.terms {
            let e = k.exp - Exponent::one();
            // z^s and e^{ay} parts both produce the same key
            let lead = k.exp + k.group;
            if !lead.is_zero() {
                out.add_term(Key { exp: e, ..k.clone() }, c.scale(&Cyclotomic::from_ratio(lead)));
            }
            if k.log > 0 {
                out.add_term(
                    Key { exp: e, log: k.log - 1, ..k.clone() },
                    c.scale(&Cyclotomic::from_int(k.log as i64)),
                );
            }
            if k.ypow > 0 {
                out.add_term(
                    Key { exp: e, ypow: k.ypow - 1, ..k.clone() },
                    c.scale(&Cyclotomic::from_int(k.ypow as i64)),
                );
            }
        }
        out
    }

    /// `n`-fold derivative divided by `n!`.
    pub fn derive_n_over_factorial(&self, n: u32) -> Self {
        let mut cur = self.clone();
        for k in 1..=n {
            cur = cur.derive().scale(&Cyclotomic::from_rational(crate::scalars::rat(1, k as i64)));
        }
        cur
    }

    /// The homomorphism sending `e^{ay}` to `z^a` and `y` to `log z`.
    pub fn theta(&self, r: u32) -> Result<Self> {
        let min_group = self.terms.keys().map(|k| k.group).min().unwrap_or_else(Exponent::zero);
        for k in self.terms.keys() {
            if (r as i64) % k.group.denom() != 0 {
                return Err(VoaError::ExponentNotRepresentable(k.group));
            }
        }
        let mut out = ExtSeries {
            terms: BTreeMap::new(),
            lo: self.lo + min(min_group, Exponent::zero()),
            hi: self.hi.map(|h| h + min_group),
            log_bound: self.log_bound + self.terms.keys().map(|k| k.ypow).max().unwrap_or(0),
        };
        if let Some(h) = out.hi {
            if h < out.lo {
                return Err(VoaError::WindowUnderflow { lo: out.lo, hi: h });
            }
        }
        for (k, c) in &self.terms {
            out.add_term(Key::new(k.exp + k.group, k.log + k.ypow, 0, Exponent::zero()), c.clone());
        }
        Ok(out)
    }

    /// The substitution `z^{1/r} -> omega_r^{-1} z^{1/r}`: the coefficient at
    /// `z^s` picks up `e^{-2 pi i s}`.
    pub fn rotate_branch(&self, r: u32, order: u32) -> Result<Self> {
        let mut out = ExtSeries { terms: BTreeMap::new(), ..*self.shape() };
        for (k, c) in &self.terms {
            if !k.is_plain() {
                return Err(VoaError::KindMismatch(
                    "branch rotation needs a series without log, y or group terms".into(),
                ));
            }
            if (r as i64) % k.exp.denom() != 0 {
                return Err(VoaError::ExponentNotRepresentable(k.exp));
            }
            let ph = Cyclotomic::phase(&(-k.exp), order)?;
            out.add_term(k.clone(), c.scale(&ph));
        }
        Ok(out)
    }

    /// First key (in key order) where the two series differ, restricted to
    /// the common validity window. Both sides are lower-complete, so every
    /// exponent up to the common `hi` is compared.
    pub fn first_mismatch(&self, other: &Self) -> Option<(Key, C, C)> {
        let hi = min_hi(self.hi, other.hi);
        let within = |k: &Key| hi.is_none_or(|h| k.exp <= h);
        let mut keys: Vec<&Key> = self.terms.keys().chain(other.terms.keys()).filter(|k| within(k)).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let a = self.terms.get(k).cloned().unwrap_or_else(C::zero);
            let b = other.terms.get(k).cloned().unwrap_or_else(C::zero);
            if a != b {
                return Some((k.clone(), a, b));
            }
        }
        None
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.first_mismatch(other).is_none()
    }

    /// Agreement only on exponents in `[lo, hi]`.
    pub fn first_mismatch_in(&self, other: &Self, lo: Exponent, hi: Exponent) -> Option<(Key, C, C)> {
        let mut a = self.clone().truncate(hi);
        let mut b = other.clone().truncate(hi);
        a.terms.retain(|k, _| k.exp >= lo);
        b.terms.retain(|k, _| k.exp >= lo);
        a.first_mismatch(&b)
    }
}

/// Product of a scalar series with a `C`-valued series, exact on
/// `[a.lo + b.lo, min(a.lo + b.hi, b.lo + a.hi)]`.
pub fn series_mul<C: Coeff>(a: &ScalarSeries, b: &ExtSeries<C>) -> Result<ExtSeries<C>> {
    let lo = a.lo + b.lo;
    let hi = min_hi(b.hi.map(|h| a.lo + h), a.hi.map(|h| b.lo + h));
    if let Some(h) = hi {
        if h < lo {
            return Err(VoaError::WindowUnderflow { lo, hi: h });
        }
    }
    let bound = a.log_bound.max(b.log_bound);
    let mut out = ExtSeries { terms: BTreeMap::new(), lo, hi, log_bound: bound };
    for (ka, ca) in &a.terms {
        for (kb, cb) in &b.terms {
            let k = ka.mul(kb);
            if hi.is_some_and(|h| k.exp > h) {
                continue;
            }
            if k.log > bound {
                return Err(VoaError::LogBoundExceeded { power: k.log, bound });
            }
            out.add_term(k, cb.scale(ca));
        }
    }
    out.log_bound = bound;
    Ok(out)
}

impl<C: Coeff> Coeff for ExtSeries<C> {
    fn zero() -> Self {
        ExtSeries::exact()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self = self.add(other);
    }
    fn scale(&self, c: &Cyclotomic) -> Self {
        ExtSeries::scale(self, c)
    }
}

impl<C: Coeff> fmt::Debug for ExtSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtSeries[{}..{}]{{", self.lo, self.hi.map(|h| h.to_string()).unwrap_or_else(|| "exact".into()))?;
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}: {c:?}")?;
        }
        write!(f, "}}")
    }
}

impl ScalarSeries {
    pub fn z_pow(exp: Exponent) -> Self {
        Self::monomial(Key::pow(exp), Cyclotomic::one())
    }

    pub fn log_z() -> Self {
        Self::monomial(Key::new(Exponent::zero(), 1, 0, Exponent::zero()), Cyclotomic::one()).with_log_bound(1)
    }

    pub fn y() -> Self {
        Self::monomial(Key::new(Exponent::zero(), 0, 1, Exponent::zero()), Cyclotomic::one())
    }

    pub fn group(a: Exponent) -> Self {
        Self::monomial(Key::new(Exponent::zero(), 0, 0, a), Cyclotomic::one())
    }

    /// Text form, e.g. `3/2 z^{-5/2} + log(z)^2 z^{1/2} + E(1/2)`.
    pub fn render(&self, order: u32) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let (neg, mag) = if c.is_negative_rational() { (true, -c.clone()) } else { (false, c.clone()) };
            let factors = render_key(k);
            let coef = mag.render(order);
            let body = match (mag.is_one(), factors.is_empty()) {
                (true, true) => "1".to_string(),
                (true, false) => factors,
                (false, true) => coef,
                (false, false) => format!("{coef} {factors}"),
            };
            out.push_str(match (i, neg) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            });
            out.push_str(&body);
        }
        out
    }
}

/// Two-variable series keyed by `(s1, s2)` with a precision per variable.
#[derive(Clone, PartialEq, Debug)]
pub struct BiSeries<C> {
    terms: BTreeMap<(Exponent, Exponent), C>,
    pub hi1: Option<Exponent>,
    pub hi2: Option<Exponent>,
}

impl<C: Coeff> BiSeries<C> {
    pub fn new(hi1: Option<Exponent>, hi2: Option<Exponent>) -> Self {
        BiSeries { terms: BTreeMap::new(), hi1, hi2 }
    }

    pub fn add_term(&mut self, s1: Exponent, s2: Exponent, c: C) {
        if c.is_zero() || self.hi1.is_some_and(|h| s1 > h) || self.hi2.is_some_and(|h| s2 > h) {
            return;
        }
        let key = (s1, s2);
        match self.terms.get_mut(&key) {
            Some(e) => {
                e.add_assign_ref(&c);
                if e.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn get(&self, s1: Exponent, s2: Exponent) -> Result<C> {
        if let Some(h) = self.hi1.filter(|h| s1 > *h) {
            return Err(VoaError::OutsideWindow { at: s1, hi: h });
        }
        if let Some(h) = self.hi2.filter(|h| s2 > *h) {
            return Err(VoaError::OutsideWindow { at: s2, hi: h });
        }
        Ok(self.terms.get(&(s1, s2)).cloned().unwrap_or_else(C::zero))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Exponent, Exponent), &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = BiSeries::new(min_hi(self.hi1, other.hi1), min_hi(self.hi2, other.hi2));
        for ((a, b), c) in &self.terms {
            out.add_term(*a, *b, c.clone());
        }
        for ((a, b), c) in &other.terms {
            out.add_term(*a, *b, c.scale(&Cyclotomic::from_int(-1)));
        }
        out
    }

    /// Multiplies by `(x1 - x2)^k`. Exponents only increase, so the window
    /// is preserved.
    /// Multiplies by `(x1 - x2)`.
    pub fn times_difference(&self) -> Self {
        let mut out = BiSeries::new(self.hi1, self.hi2);
        let minus = Cyclotomic::from_rational(crate::scalars::rat(-1, 1));
        for ((a, b), v) in &self.terms {
            out.add_term(a + exi(1), *b, v.clone());
            out.add_term(*a, b + exi(1), v.scale(&minus));
        }
        out
    }

    pub fn times_difference_power(&self, k: u32) -> Self {
        let mut out = BiSeries::new(self.hi1, self.hi2);
        for j in 0..=k {
            let c = crate::scalars::binomial(&crate::scalars::rat(k as i64, 1), j);
            let c = if j % 2 == 1 { -c } else { c };
            let c = Cyclotomic::from_rational(c);
            for ((a, b), v) in &self.terms {
                out.add_term(a + exi((k - j) as i64), b + exi(j as i64), v.scale(&c));
            }
        }
        out
    }
}

/// `(x2 + x0)^s` expanded in nonnegative powers of `x0`, up to `x0^{i_max}`.
/// Keys are `(x2 exponent, x0 exponent)`.
pub fn binom_expand(s: Exponent, i_max: u32) -> BiSeries<Cyclotomic> {
    let mut out = BiSeries::new(None, Some(exi(i_max as i64)));
    for i in 0..=i_max {
        let c = binomial(&big(s), i);
        out.add_term(s - exi(i as i64), exi(i as i64), Cyclotomic::from_rational(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;
    use proptest::prelude::*;

    fn c(n: i64, d: i64) -> Cyclotomic {
        Cyclotomic::from_rational(rat(n, d))
    }

    #[test]
    fn half_powers_multiply() {
        let h = ScalarSeries::z_pow(ex(1, 2));
        let p = series_mul(&h, &h).unwrap();
        assert!(p.agrees_with(&ScalarSeries::z_pow(exi(1))));
    }

    #[test]
    fn telescoping_product_window() {
        let mut geo = ScalarSeries::windowed(exi(0), exi(6));
        for n in 0..=6 {
            geo.add_term(Key::pow(exi(n)), Cyclotomic::one());
        }
        let mut one_minus = ScalarSeries::exact();
        one_minus.add_term(Key::pow(exi(0)), Cyclotomic::one());
        one_minus.add_term(Key::pow(exi(1)), c(-1, 1));
        let p = series_mul(&one_minus, &geo).unwrap();
        assert_eq!(p.lo(), exi(0));
        assert_eq!(p.hi(), Some(exi(6)));
        // hand expansion: (1 - z)(1 + ... + z^6) = 1 - z^7, the z^7 term is beyond the window
        assert_eq!(p.len(), 1);
        assert!(p.coeff_at(exi(0)).unwrap().is_one());
        assert!(p.coeff_at(exi(7)).is_err());

        // both sides truncated at z^5 (precision [0, 5])
        let geo5 = geo.clone().truncate(exi(5));
        let one_minus5 = one_minus.clone().truncate(exi(5));
        let q = series_mul(&one_minus5, &geo5).unwrap();
        assert_eq!(q.hi(), Some(exi(5)));
        assert!(q.coeff_at(exi(5)).unwrap().is_zero());
        assert!(q.coeff_at(exi(6)).is_err());
    }

    #[test]
    fn log_times_inverse() {
        let p = series_mul(&ScalarSeries::log_z(), &ScalarSeries::z_pow(exi(-1))).unwrap();
        let (k, v) = p.terms().next().unwrap();
        assert_eq!(*k, Key::new(exi(-1), 1, 0, exi(0)));
        assert!(v.is_one());
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn log_bound_enforced() {
        let l = ScalarSeries::log_z();
        assert!(matches!(series_mul(&l, &l), Err(VoaError::LogBoundExceeded { .. })));
        assert!(series_mul(&l.clone().with_log_bound(2), &l).is_ok());
    }

    #[test]
    fn windows_shift_under_derive_and_theta() {
        let mut a = ScalarSeries::windowed(exi(-2), exi(3));
        a.add_term(Key::new(exi(-2), 0, 0, ex(-1, 2)), Cyclotomic::one());
        let d = a.derive();
        assert_eq!((d.lo(), d.hi()), (exi(-3), Some(exi(2))));
        let t = a.theta(2).unwrap();
        assert_eq!(t.hi(), Some(ex(5, 2)));
        assert!(t.coeff_at(exi(3)).is_err());
    }

    #[test]
    fn derive_examples() {
        let d = ScalarSeries::log_z().derive();
        assert!(d.agrees_with(&ScalarSeries::z_pow(exi(-1))));
        let d = ScalarSeries::z_pow(ex(1, 2)).derive();
        assert!(d.agrees_with(&ScalarSeries::z_pow(ex(-1, 2)).scale(&c(1, 2))));
        let a = ex(3, 2);
        let d = ScalarSeries::group(a).derive();
        let expect = ScalarSeries::monomial(Key::new(exi(-1), 0, 0, a), Cyclotomic::from_ratio(a));
        assert!(d.agrees_with(&expect));
    }

    #[test]
    fn derive_matches_termwise_exponential() {
        // e^{ay} = sum a^n y^n / n!; differentiate term by term up to y^8
        let a = ex(2, 3);
        let mut trunc = ScalarSeries::exact();
        let mut coef = rat(1, 1);
        for n in 0..=8u32 {
            trunc.add_term(Key::new(exi(0), 0, n, exi(0)), Cyclotomic::from_rational(coef.clone()));
            coef = coef * big(a) / rat(n as i64 + 1, 1);
        }
        let d = trunc.derive();
        // a z^{-1} e^{ay} expanded to y^7
        let mut coef = big(a);
        for n in 0..=7u32 {
            let got = d.coeff(&Key::new(exi(-1), 0, n, exi(0))).unwrap();
            assert_eq!(got, Cyclotomic::from_rational(coef.clone()));
            coef = coef * big(a) / rat(n as i64 + 1, 1);
        }
    }

    #[test]
    fn binom_examples() {
        let b = binom_expand(exi(1), 3);
        assert!(b.get(exi(1), exi(0)).unwrap().is_one());
        assert!(b.get(exi(0), exi(1)).unwrap().is_one());
        assert_eq!(b.len(), 2);
        let b = binom_expand(exi(-1), 4);
        for i in 0..=4 {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            assert_eq!(b.get(exi(-1 - i), exi(i)).unwrap(), c(sign, 1));
        }
        let b = binom_expand(ex(1, 2), 2);
        assert_eq!(b.get(ex(1, 2), exi(0)).unwrap(), c(1, 1));
        assert_eq!(b.get(ex(-1, 2), exi(1)).unwrap(), c(1, 2));
        assert_eq!(b.get(ex(-3, 2), exi(2)).unwrap(), c(-1, 8));
    }

    #[test]
    fn rotate_examples() {
        let s = ScalarSeries::z_pow(ex(1, 2)).rotate_branch(2, 8).unwrap();
        assert!(s.agrees_with(&ScalarSeries::z_pow(ex(1, 2)).scale(&c(-1, 1))));
        let s = ScalarSeries::z_pow(exi(1)).rotate_branch(5, 10).unwrap();
        assert!(s.agrees_with(&ScalarSeries::z_pow(exi(1))));
        let s = ScalarSeries::z_pow(ex(-3, 4)).rotate_branch(4, 8).unwrap();
        let ph = Cyclotomic::phase(&ex(3, 4), 8).unwrap();
        assert!(s.agrees_with(&ScalarSeries::z_pow(ex(-3, 4)).scale(&ph)));
        assert!(ScalarSeries::z_pow(ex(1, 3)).rotate_branch(2, 6).is_err());
    }

    #[test]
    fn theta_examples() {
        let t = ScalarSeries::group(ex(1, 3)).theta(3).unwrap();
        assert!(t.agrees_with(&ScalarSeries::z_pow(ex(1, 3))));
        let mut f = ScalarSeries::exact();
        f.add_term(Key::pow(exi(-2)), c(3, 1));
        f.add_term(Key::pow(exi(4)), c(-1, 5));
        assert!(f.theta(1).unwrap().agrees_with(&f));
        let ye = series_mul(&ScalarSeries::y(), &ScalarSeries::group(ex(-1, 2))).unwrap();
        let t = ye.theta(2).unwrap();
        let expect = series_mul(&ScalarSeries::z_pow(ex(-1, 2)), &ScalarSeries::log_z()).unwrap();
        assert!(t.agrees_with(&expect));
        assert!(ScalarSeries::group(ex(1, 3)).theta(2).is_err());
    }

    // random finite elements of C((z^{1/r})) (x) K_r[y] with log terms
    fn arb_series(r: i64) -> impl Strategy<Value = ScalarSeries> {
        prop::collection::vec((-6i64..6, 0u32..2, 0u32..2, -3i64..3, -4i64..4, 1i64..3), 0..5).prop_map(
            move |ts| {
                let mut s = ScalarSeries::exact().with_log_bound(4);
                for (e, l, p, g, n, d) in ts {
                    s.add_term(Key::new(ex(e, r), l, p, ex(g, r)), c(n, d));
                }
                s
            },
        )
    }

    fn arb_windowed(r: i64) -> impl Strategy<Value = ScalarSeries> {
        (arb_series(r), 0i64..8).prop_map(move |(s, h)| {
            let lo = s.lo();
            s.truncate(lo + ex(h, r))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn theta_commutes_with_derive(s in arb_series(2)) {
            let lhs = s.derive().theta(2).unwrap();
            let rhs = s.theta(2).unwrap().derive();
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn leibniz(a in arb_windowed(2), b in arb_windowed(2)) {
            let a = a.with_log_bound(4);
            if let Ok(ab) = series_mul(&a, &b) {
                let lhs = ab.derive();
                let rhs = series_mul(&a.derive(), &b).unwrap().add(&series_mul(&a, &b.derive()).unwrap());
                prop_assert!(lhs.agrees_with(&rhs), "{:?} vs {:?}", lhs, rhs);
            }
        }

        #[test]
        fn mul_commutes_and_associates(a in arb_windowed(3), b in arb_windowed(3), cc in arb_series(3)) {
            let a = a.with_log_bound(8);
            if let (Ok(ab), Ok(ba)) = (series_mul(&a, &b), series_mul(&b, &a)) {
                prop_assert!(ab.agrees_with(&ba));
                prop_assert_eq!(ab.hi(), ba.hi());
                if let (Ok(l), Ok(bc)) = (series_mul(&ab, &cc), series_mul(&b, &cc)) {
                    let r = series_mul(&a, &bc).unwrap();
                    prop_assert!(l.agrees_with(&r));
                }
            }
        }

        #[test]
        fn rotation_has_order_r(r in 1u32..7, ts in prop::collection::vec((-12i64..12, -4i64..4), 0..6)) {
            let mut s = ScalarSeries::exact();
            for (e, n) in ts { s.add_term(Key::pow(ex(e, r as i64)), c(n, 1)); }
            let order = 2 * r;
            let mut cur = s.clone();
            for _ in 0..r { cur = cur.rotate_branch(r, order).unwrap(); }
            prop_assert!(cur.agrees_with(&s));
        }
    }
}
