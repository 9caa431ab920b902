//! Rank-one Heisenberg Fock spaces and even-lattice sectors.
//!
//! Everything is expressed through a single free boson `b` with
//! `[b_m, b_n] = m kappa delta_{m+n,0}`. In the Heisenberg case `b = h` and
//! `kappa = gamma`; in the lattice case `b = alpha`, `kappa = 2 N_L` and
//! `h = c alpha(-1)1`, so `gamma = 2 N_L c^2`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Result, VoaError};
use crate::scalars::{binomial, rat, Cyclotomic, Rational};
use crate::series::{exi, Coeff, ExtSeries, Exponent, Key};

/// Charge sector `e^{m alpha}` shifted by a momentum `mu` of the boson zero mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Sector {
    pub charge: i64,
    pub momentum: Exponent,
}

impl Sector {
    pub fn vacuum() -> Self {
        Sector::default()
    }

    pub fn charge(m: i64) -> Self {
        Sector { charge: m, momentum: Exponent::zero() }
    }

    pub fn momentum(mu: Exponent) -> Self {
        Sector { charge: 0, momentum: mu }
    }
}

/// `b(-n_1)...b(-n_k)` applied to a sector vacuum, parts weakly decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub parts: Vec<u32>,
    pub sector: Sector,
}

impl Monomial {
    pub fn new(mut parts: Vec<u32>, sector: Sector) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Monomial { parts, sector }
    }

    pub fn vacuum(sector: Sector) -> Self {
        Monomial { parts: Vec::new(), sector }
    }

    pub fn level(&self) -> u32 {
        self.parts.iter().sum()
    }

    fn with_part(&self, n: u32) -> Monomial {
        let mut parts = self.parts.clone();
        let pos = parts.iter().position(|&p| p < n).unwrap_or(parts.len());
        parts.insert(pos, n);
        Monomial { parts, sector: self.sector.clone() }
    }

    fn count(&self, n: u32) -> usize {
        self.parts.iter().filter(|&&p| p == n).count()
    }

    fn without_part(&self, n: u32) -> Monomial {
        let mut parts = self.parts.clone();
        let pos = parts.iter().position(|&p| p == n).expect("part present");
        parts.remove(pos);
        Monomial { parts, sector: self.sector.clone() }
    }
}

/// Finite linear combination of monomials.
#[derive(Clone, PartialEq, Default)]
pub struct FockVector {
    terms: BTreeMap<Monomial, Cyclotomic>,
}

impl FockVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Self::term(m, Cyclotomic::one())
    }

    pub fn term(m: Monomial, c: Cyclotomic) -> Self {
        let mut v = Self::new();
        v.add_term(m, c);
        v
    }

    pub fn vacuum() -> Self {
        Self::from_monomial(Monomial::vacuum(Sector::vacuum()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Cyclotomic)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, m: &Monomial) -> Cyclotomic {
        self.terms.get(m).cloned().unwrap_or_else(Cyclotomic::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Cyclotomic) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                *e += &c;
                if e.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign_ref(other);
        out
    }

    pub fn scaled(&self, c: &Cyclotomic) -> Self {
        Coeff::scale(self, c)
    }

    /// Applies a map monomial-wise and extends linearly.
    pub fn map_linear(&self, mut f: impl FnMut(&Monomial) -> Result<FockVector>) -> Result<FockVector> {
        let mut out = FockVector::new();
        for (m, c) in &self.terms {
            out.add_assign_ref(&f(m)?.scaled(c));
        }
        Ok(out)
    }

    /// Keeps only the monomials satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        FockVector {
            terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// The scalar multiple of the sector-0 vacuum, if that is all there is.
    pub fn as_vacuum_multiple(&self) -> Option<Cyclotomic> {
        let vac = Monomial::vacuum(Sector::vacuum());
        if self.terms.keys().all(|m| *m == vac) {
            Some(self.get(&vac))
        } else {
            None
        }
    }
}

impl Coeff for FockVector {
    fn zero() -> Self {
        FockVector::new()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign_ref(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
    fn scale(&self, c: &Cyclotomic) -> Self {
        if c.is_zero() {
            return FockVector::new();
        }
        if c.is_one() {
            return self.clone();
        }
        FockVector { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }
}

impl fmt::Debug for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}) {:?}", c.render(c.order()), m.parts)?;
            if m.sector != Sector::vacuum() {
                write!(f, "[{}; {}]", m.sector.charge, m.sector.momentum)?;
            }
        }
        Ok(())
    }
}

/// State-valued series in one variable.
pub type StateSeries = ExtSeries<FockVector>;

/// A conformal vector of the family: `L(0) = L_std(0) - tilt * b(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalVector {
    pub state: FockVector,
    pub tilt: Exponent,
}

/// Which of the two conformal vectors of a workspace is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaChoice {
    Std,
    Tilde,
}

/// Outcome of the conditions on `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct HCheck {
    pub pass: bool,
    pub gamma: Option<Rational>,
    pub witness: Option<String>,
}

/// Parameters of the algebra and its modules.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraSpec {
    pub gamma: Exponent,
    pub lattice_halfnorm: u32,
    pub h_coeff: Exponent,
    pub root_denom: u32,
    pub cyclo_order: u32,
}

fn cy(q: Exponent) -> Cyclotomic {
    Cyclotomic::from_ratio(q)
}

fn int_binomial(top: i64, k: u32) -> Cyclotomic {
    Cyclotomic::from_rational(binomial(&rat(top, 1), k))
}

impl AlgebraSpec {
    pub fn heisenberg(gamma: Exponent) -> Self {
        AlgebraSpec { gamma, lattice_halfnorm: 0, h_coeff: exi(1), root_denom: 2, cyclo_order: 8 }
    }

    pub fn lattice(n_l: u32, c: Exponent) -> Self {
        let gamma = exi(2 * n_l as i64) * c * c;
        AlgebraSpec { gamma, lattice_halfnorm: n_l, h_coeff: c, root_denom: 2, cyclo_order: 8 }
    }

    pub fn with_orders(mut self, cyclo: u32, root_denom: u32) -> Self {
        self.cyclo_order = cyclo;
        self.root_denom = root_denom;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cyclo_order == 0 || self.root_denom == 0 {
            return Err(VoaError::Config("cyclotomic order and root denominator must be positive".into()));
        }
        if self.is_lattice() {
            let expect = exi(2 * self.lattice_halfnorm as i64) * self.h_coeff * self.h_coeff;
            if expect != self.gamma {
                return Err(VoaError::Config(format!(
                    "lattice gamma must equal 2 N_L c^2 = {expect}, got {}",
                    self.gamma
                )));
            }
        } else if self.h_coeff != exi(1) {
            return Err(VoaError::Config("Heisenberg workspaces take h to be the generator (hcoeff = 1)".into()));
        }
        Ok(())
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice_halfnorm > 0
    }

    /// `[b_1, b_{-1}]`.
    pub fn kappa(&self) -> Exponent {
        if self.is_lattice() {
            exi(2 * self.lattice_halfnorm as i64)
        } else {
            self.gamma
        }
    }

    /// `h = c b(-1)1`.
    pub fn c(&self) -> Exponent {
        if self.is_lattice() {
            self.h_coeff
        } else {
            exi(1)
        }
    }

    /// Eigenvalue of `b(0)` on a sector.
    pub fn b0(&self, s: &Sector) -> Exponent {
        self.kappa() * s.charge + s.momentum
    }

    /// Eigenvalue of `h(0)` on a sector.
    pub fn h0(&self, s: &Sector) -> Exponent {
        self.c() * self.b0(s)
    }

    pub fn vacuum(&self) -> FockVector {
        FockVector::vacuum()
    }

    /// The generator `b(-1)1` (the state `h` in the Heisenberg case, `alpha` on the lattice).
    pub fn generator(&self) -> FockVector {
        FockVector::from_monomial(Monomial::new(vec![1], Sector::vacuum()))
    }

    /// The distinguished `h`.
    pub fn h_state(&self) -> FockVector {
        self.generator().scaled(&cy(self.c()))
    }

    pub fn exp_state(&self, m: i64) -> FockVector {
        FockVector::from_monomial(Monomial::vacuum(Sector::charge(m)))
    }

    pub fn momentum_vacuum(&self, mu: Exponent) -> FockVector {
        FockVector::from_monomial(Monomial::vacuum(Sector::momentum(mu)))
    }

    fn check_exponent(&self, e: Exponent) -> Result<()> {
        if (self.root_denom as i64) % e.denom() != 0 {
            return Err(VoaError::ExponentNotIntegral(e));
        }
        Ok(())
    }

    /// `b(n)` on a monomial.
    pub fn b_mono(&self, n: i64, m: &Monomial) -> FockVector {
        match n.signum() {
            -1 => FockVector::from_monomial(m.with_part((-n) as u32)),
            0 => FockVector::term(m.clone(), cy(self.b0(&m.sector))),
            _ => {
                let k = m.count(n as u32);
                if k == 0 {
                    return FockVector::new();
                }
                let c = self.kappa() * n * k as i64;
                FockVector::term(m.without_part(n as u32), cy(c))
            }
        }
    }

    pub fn mode_b(&self, n: i64, v: &FockVector) -> FockVector {
        let mut out = FockVector::new();
        for (m, c) in v.terms() {
            out.add_assign_ref(&self.b_mono(n, m).scaled(c));
        }
        out
    }

    /// `h(n) v`.
    pub fn mode_apply(&self, n: i64, v: &FockVector) -> FockVector {
        self.mode_b(n, v).scaled(&cy(self.c()))
    }

    /// `Y(v, x) w` on `(-inf, hi]`, lower-complete.
    pub fn vertex_series(&self, v: &FockVector, w: &FockVector, hi: Exponent) -> Result<StateSeries> {
        let mut out = StateSeries::windowed(hi, hi);
        for (vm, vc) in v.terms() {
            for (wm, wc) in w.terms() {
                let c = vc * wc;
                let lo = self.with_vertex_mono(vm, wm, hi, |part| {
                    for (k, s) in part.terms().take_while(|(k, _)| k.exp <= hi) {
                        out.add_term(k.clone(), if c.is_one() { s.clone() } else { s.scaled(&c) });
                    }
                    part.lo()
                })?;
                out = out.widen_lo(lo);
            }
        }
        Ok(out)
    }

    /// Memoized per thread; a stored window is reused for any smaller `hi`
    /// and regrown with slack when a larger one is requested.
    fn with_vertex_mono<T>(&self, v: &Monomial, w: &Monomial, hi: Exponent, f: impl FnOnce(&StateSeries) -> T) -> Result<T> {
        let key = (self.gamma, self.lattice_halfnorm, self.h_coeff, v.clone(), w.clone());
        let mut f = Some(f);
        let (hit, stored) = VERTEX_MONO.with(|cache| {
            let cache = cache.borrow();
            match cache.get(&key) {
                Some(s) if s.hi().is_some_and(|h| h >= hi) => (Some((f.take().unwrap())(s)), None),
                Some(s) => (None, s.hi()),
                None => (None, None),
            }
        });
        if let Some(t) = hit {
            return Ok(t);
        }
        let grow = stored.map_or(hi, |h| hi.max(h + exi(4)));
        let s = self.vertex_mono_uncached(v, w, grow)?;
        let out = (f.take().unwrap())(&s);
        VERTEX_MONO.with(|cache| {
            let mut cache = cache.borrow_mut();
            if cache.len() >= VERTEX_MONO_CAP {
                cache.clear();
            }
            cache.insert(key, s);
        });
        Ok(out)
    }

    fn vertex_mono_uncached(&self, v: &Monomial, w: &Monomial, hi: Exponent) -> Result<StateSeries> {
        if !v.sector.momentum.is_zero() {
            return Err(VoaError::Config("vertex operators are defined for algebra states only".into()));
        }
        let charge = v.sector.charge;
        let fields = &v.parts;
        // annihilation side, keyed by (deferred mask, x power)
        let mut stage: BTreeMap<(u32, Exponent), FockVector> = BTreeMap::new();
        stage.insert((0, Exponent::zero()), FockVector::from_monomial(w.clone()));
        for (i, &ni) in fields.iter().enumerate() {
            let k = ni - 1;
            let mut next: BTreeMap<(u32, Exponent), FockVector> = BTreeMap::new();
            for ((mask, p), vec) in &stage {
                acc(&mut next, (mask | (1 << i), *p), vec.clone());
                for (m, c) in vec.terms() {
                    let max_n = m.parts.first().copied().unwrap_or(0) as i64;
                    for n in 0..=max_n {
                        let img = self.b_mono(n, m);
                        if img.is_empty() {
                            continue;
                        }
                        let coef = int_binomial(-n - 1, k) * c;
                        acc(&mut next, (*mask, p - exi(n + 1 + k as i64)), img.scaled(&coef));
                    }
                }
            }
            stage = next;
        }
        if charge != 0 {
            // E^+(-m alpha, x)
            let mut next = BTreeMap::new();
            for ((mask, p), vec) in stage {
                let mut cur: BTreeMap<Exponent, FockVector> = BTreeMap::new();
                cur.insert(p, vec);
                let mut j = 0i64;
                while !cur.is_empty() {
                    for (q, u) in &cur {
                        acc(&mut next, (mask, *q), u.clone());
                    }
                    j += 1;
                    let mut nxt: BTreeMap<Exponent, FockVector> = BTreeMap::new();
                    for (q, u) in &cur {
                        for (m, c) in u.terms() {
                            let mut seen = 0;
                            for &n in &m.parts {
                                if n == seen {
                                    continue;
                                }
                                seen = n;
                                let coef = cy(Exponent::new(-charge, n as i64 * j)) * c;
                                let img = self.b_mono(n as i64, m).scaled(&coef);
                                acc(&mut nxt, q - exi(n as i64), img);
                            }
                        }
                    }
                    cur = nxt;
                }
            }
            stage = next;
        }
        let mut out = StateSeries::windowed(hi, hi);
        let mut lo: Option<Exponent> = None;
        for ((mask, p), vec) in stage {
            if vec.is_empty() {
                continue;
            }
            let mut by_shift: BTreeMap<Exponent, FockVector> = BTreeMap::new();
            for (m, c) in vec.terms() {
                let e = self.b0(&m.sector) * charge;
                self.check_exponent(e)?;
                let mut shifted = m.clone();
                shifted.sector.charge += charge;
                acc(&mut by_shift, p + e, FockVector::term(shifted, c.clone()));
            }
            for (p, vec) in by_shift {
                lo = Some(lo.map_or(p, |l: Exponent| l.min(p)));
                if p > hi {
                    continue;
                }
                let budget = (hi - p).floor().to_integer();
                let created = self.creation(fields, mask, charge, vec, budget);
                for (d, u) in created {
                    out.add_term(Key::pow(p + exi(d)), u);
                }
            }
        }
        if let Some(l) = lo.filter(|l| *l <= hi) {
            out = out.widen_lo(l);
        }
        Ok(out)
    }

    /// Deferred creation parts and `E^-(-m alpha, x)`, keyed by the added power.
    fn creation(&self, fields: &[u32], mask: u32, charge: i64, vec: FockVector, budget: i64) -> BTreeMap<i64, FockVector> {
        let mut cur: BTreeMap<i64, FockVector> = BTreeMap::new();
        cur.insert(0, vec);
        for (i, &ni) in fields.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let k = ni - 1;
            let mut next = BTreeMap::new();
            for (d, u) in &cur {
                for extra in 0..=(budget - d) {
                    let p = ni as i64 + extra;
                    let coef = int_binomial(p - 1, k);
                    acc(&mut next, d + extra, self.mode_b(-p, u).scaled(&coef));
                }
            }
            cur = next;
        }
        if charge != 0 {
            let table = e_minus_table(charge, budget);
            let mut total: BTreeMap<i64, FockVector> = BTreeMap::new();
            for (d, u) in &cur {
                let mut by_deg: BTreeMap<i64, FockVector> = BTreeMap::new();
                for (parts, c) in table.iter().take_while(|(p, _)| p.iter().sum::<u32>() as i64 <= budget - d) {
                    let dl = parts.iter().sum::<u32>() as i64;
                    let slot = by_deg.entry(d + dl).or_default();
                    for (m, mc) in u.terms() {
                        let mut merged = m.parts.clone();
                        merged.extend_from_slice(parts);
                        slot.add_term(Monomial::new(merged, m.sector.clone()), c * mc);
                    }
                }
                for (k, v) in by_deg {
                    acc(&mut total, k, v);
                }
            }
            cur = total;
        }
        cur
    }

    /// `v_m w`.
    pub fn vertex_coeff(&self, v: &FockVector, m: i64, w: &FockVector) -> Result<FockVector> {
        let e = exi(-m - 1);
        let mut out = FockVector::new();
        for (vm, vc) in v.terms() {
            for (wm, wc) in w.terms() {
                let part = self.with_vertex_mono(vm, wm, e, |s| s.coeff_at(e))??;
                if !part.is_empty() {
                    out.add_assign_ref(&part.scaled(&(vc * wc)));
                }
            }
        }
        Ok(out)
    }

    /// `D v = v_{-2} 1`.
    pub fn translation(&self, v: &FockVector) -> Result<FockVector> {
        self.vertex_coeff(v, -2, &self.vacuum())
    }

    /// `omega = (1/2 kappa) b(-1)^2 1`.
    pub fn standard_omega(&self) -> Result<ConformalVector> {
        let k = self.kappa();
        if k.is_zero() {
            return Err(VoaError::NotConformal("gamma = 0 admits no conformal vector".into()));
        }
        let state = FockVector::term(Monomial::new(vec![1, 1], Sector::vacuum()), cy(Exponent::new(1, 2) / k));
        Ok(ConformalVector { state, tilt: Exponent::zero() })
    }

    pub fn omega(&self, choice: OmegaChoice) -> Result<ConformalVector> {
        let w = self.standard_omega()?;
        match choice {
            OmegaChoice::Std => Ok(w),
            OmegaChoice::Tilde => self.feigin_fuchs(&self.h_state(), &w),
        }
    }

    /// `L(n) w = omega_{n+1} w`.
    pub fn virasoro(&self, n: i64, w: &FockVector, omega: &ConformalVector) -> Result<FockVector> {
        self.vertex_coeff(&omega.state, n + 1, w)
    }

    /// `L(0)` eigenvalue of a monomial.
    pub fn weight(&self, m: &Monomial, omega: &ConformalVector) -> Result<Exponent> {
        let b0 = self.b0(&m.sector);
        let k = self.kappa();
        if k.is_zero() {
            return Err(VoaError::NotConformal("gamma = 0".into()));
        }
        Ok(b0 * b0 / (k * 2) + exi(m.level() as i64) - omega.tilt * b0)
    }

    /// `omega + 1/2 L(-1) h`.
    pub fn feigin_fuchs(&self, h: &FockVector, omega: &ConformalVector) -> Result<ConformalVector> {
        let check = self.h_condition_check(h, 3)?;
        if !check.pass {
            return Err(VoaError::HConditionFailed(check.witness.unwrap_or_default()));
        }
        let lm1 = self.virasoro(-1, h, omega)?;
        let state = omega.state.add(&lm1.scaled(&cy(Exponent::new(1, 2))));
        let t = h.get(&Monomial::new(vec![1], Sector::vacuum()));
        let t = t.as_rational().and_then(|q| crate::scalars::to_ratio(&q)).ok_or_else(|| {
            VoaError::HConditionFailed("h must be a rational multiple of the generator".into())
        })?;
        Ok(ConformalVector { state, tilt: omega.tilt + t / 2 })
    }

    /// `c = 2 <1*, L(2) L(-2) 1>`.
    pub fn central_charge(&self, omega: &ConformalVector) -> Result<Rational> {
        let l = self.virasoro(-2, &self.vacuum(), omega)?;
        let r = self.virasoro(2, &l, omega)?;
        let c = r
            .as_vacuum_multiple()
            .ok_or_else(|| VoaError::NotConformal(format!("L(2)L(-2)1 = {}", self.render(&r))))?;
        let q = c.as_rational().ok_or_else(|| VoaError::NotConformal("irrational central term".into()))?;
        Ok(q * rat(2, 1))
    }

    /// Checks `L(n) h = delta_{n,0} h` and `h_n h = delta_{n,1} gamma 1` for `0 <= n <= n_max`.
    /// At `gamma = 0` there is no conformal vector and only the mode
    /// conditions are checked.
    pub fn h_condition_check(&self, h: &FockVector, n_max: i64) -> Result<HCheck> {
        let fail = |w: String| Ok(HCheck { pass: false, gamma: None, witness: Some(w) });
        if !self.kappa().is_zero() {
            let omega = self.standard_omega()?;
            for n in 0..=n_max {
                let l = self.virasoro(n, h, &omega)?;
                let expect = if n == 0 { h.clone() } else { FockVector::new() };
                if l != expect {
                    return fail(format!("L({n})h = {}", self.render(&l)));
                }
            }
        }
        let mut gamma = None;
        for n in 0..=n_max.max(1) {
            let p = self.vertex_coeff(h, n, h)?;
            if n == 1 {
                match p.as_vacuum_multiple().and_then(|c| c.as_rational()) {
                    Some(g) => gamma = Some(g),
                    None => return fail(format!("h_1 h = {}", self.render(&p))),
                }
            } else if !p.is_empty() {
                return fail(format!("h_{n} h = {}", self.render(&p)));
            }
        }
        Ok(HCheck { pass: true, gamma, witness: None })
    }

    /// `e^{2 pi i k h(0)}` on each sector.
    pub fn sigma_h_power(&self, v: &FockVector, k: i64) -> Result<FockVector> {
        v.map_linear(|m| {
            let ph = Cyclotomic::phase(&(self.h0(&m.sector) * k), self.cyclo_order)?;
            Ok(FockVector::term(m.clone(), ph))
        })
    }

    pub fn sigma_h(&self, v: &FockVector) -> Result<FockVector> {
        self.sigma_h_power(v, 1)
    }

    /// `e^{2 pi i t L(0)}`.
    pub fn l0_phase(&self, v: &FockVector, t: Exponent, omega: &ConformalVector) -> Result<FockVector> {
        v.map_linear(|m| {
            let ph = Cyclotomic::phase(&(self.weight(m, omega)? * t), self.cyclo_order)?;
            Ok(FockVector::term(m.clone(), ph))
        })
    }

    /// `tau = e^{2 pi i L(0)}`.
    pub fn tau(&self, v: &FockVector, omega: &ConformalVector) -> Result<FockVector> {
        self.l0_phase(v, exi(1), omega)
    }

    /// Monomials of a sector at a given level.
    pub fn basis(&self, sector: &Sector, level: u32) -> Vec<Monomial> {
        partitions(level).into_iter().map(|p| Monomial { parts: p, sector: sector.clone() }).collect()
    }

    pub fn basis_up_to(&self, sector: &Sector, max_level: u32) -> Vec<Monomial> {
        (0..=max_level).flat_map(|l| self.basis(sector, l)).collect()
    }

    /// Monomials of a sector whose `L(0)` weight equals `wt`.
    pub fn basis_of_weight(&self, sector: &Sector, wt: Exponent, omega: &ConformalVector) -> Result<Vec<Monomial>> {
        let base = self.weight(&Monomial::vacuum(sector.clone()), omega)?;
        let d = wt - base;
        if !d.is_integer() || d.is_negative() {
            return Ok(Vec::new());
        }
        Ok(self.basis(sector, d.to_integer() as u32))
    }
}

/// Automorphisms used for twisting.
#[derive(Clone, Debug, PartialEq)]
pub enum Automorphism {
    Identity,
    /// `sigma_h^k = e^{2 pi i k h(0)}`
    SigmaH(i64),
    /// `e^{2 pi i t L(0)}` for the chosen conformal vector
    L0Phase { t: Exponent, omega: OmegaChoice },
}

impl Automorphism {
    pub fn apply(&self, alg: &AlgebraSpec, v: &FockVector) -> Result<FockVector> {
        match self {
            Automorphism::Identity => Ok(v.clone()),
            Automorphism::SigmaH(k) => alg.sigma_h_power(v, *k),
            Automorphism::L0Phase { t, omega } => alg.l0_phase(v, *t, &alg.omega(*omega)?),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Automorphism::Identity => "id".into(),
            Automorphism::SigmaH(k) => format!("sigma_h^{k}"),
            Automorphism::L0Phase { t, omega } => format!("exp(2 pi i {t} L(0)) [{omega:?}]"),
        }
    }
}

impl AlgebraSpec {
    /// Name of the generator in the text grammar.
    pub fn generator_name(&self) -> &'static str {
        if self.is_lattice() {
            "a"
        } else {
            "h"
        }
    }

    pub fn render_monomial(&self, m: &Monomial) -> String {
        let g = self.generator_name();
        let mut out = String::new();
        let mut i = 0;
        while i < m.parts.len() {
            let p = m.parts[i];
            let mut j = i;
            while j < m.parts.len() && m.parts[j] == p {
                j += 1;
            }
            out.push_str(&format!("{g}(-{p})"));
            if j - i > 1 {
                out.push_str(&format!("^{}", j - i));
            }
            i = j;
        }
        let s = &m.sector;
        if s.charge != 0 {
            out.push_str(&format!("e({})", s.charge));
        }
        if !s.momentum.is_zero() {
            out.push_str(&format!("|lam:{}>", crate::scalars::render_ratio(&s.momentum)));
        } else if s.charge == 0 {
            out.push_str("|0>");
        }
        out
    }

    /// Text form of a state; reparses to an equal value.
    pub fn render(&self, v: &FockVector) -> String {
        if v.is_empty() {
            return "0".into();
        }
        let n = self.cyclo_order;
        let mut out = String::new();
        for (i, (m, c)) in v.terms().enumerate() {
            let mono = self.render_monomial(m);
            let (neg, mag) = if c.is_negative_rational() { (true, -c.clone()) } else { (false, c.clone()) };
            let coef = match mag.render(n) {
                _ if mag.is_one() => String::new(),
                r if r.starts_with('-') => format!("({r}) "),
                r => format!("{r} "),
            };
            match (i, neg) {
                (0, false) => out.push_str(&format!("{coef}{mono}")),
                (0, true) => out.push_str(&format!("-{coef}{mono}")),
                (_, false) => out.push_str(&format!(" + {coef}{mono}")),
                (_, true) => out.push_str(&format!(" - {coef}{mono}")),
            }
        }
        out
    }
}

fn acc<K: Ord>(map: &mut BTreeMap<K, FockVector>, k: K, v: FockVector) {
    if v.is_empty() {
        return;
    }
    let e = map.entry(k).or_default();
    e.add_assign_ref(&v);
}

type VertexKey = (Exponent, u32, Exponent, Monomial, Monomial);

const VERTEX_MONO_CAP: usize = 20_000;

thread_local! {
    static VERTEX_MONO: std::cell::RefCell<std::collections::HashMap<VertexKey, StateSeries>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
    static E_MINUS: std::cell::RefCell<std::collections::HashMap<(i64, i64), std::rc::Rc<Vec<(Vec<u32>, Cyclotomic)>>>> =
        Default::default();
}

/// Terms `c_lambda b_{-lambda}` of `E^-(-m alpha, x) = exp(sum_n m b_{-n} x^n / n)`
/// up to degree `budget`, ordered by degree. `c_lambda = prod_n (m/n)^{k_n} / k_n!`
/// for part multiplicities `k_n`.
fn e_minus_table(charge: i64, budget: i64) -> std::rc::Rc<Vec<(Vec<u32>, Cyclotomic)>> {
    let budget = budget.max(0);
    E_MINUS.with(|cache| {
        if let Some(t) = cache.borrow().get(&(charge, budget)) {
            return t.clone();
        }
        let mut table = Vec::new();
        for d in 0..=budget as u32 {
            for parts in partitions(d) {
                let mut c = Rational::one();
                let mut i = 0;
                while i < parts.len() {
                    let n = parts[i];
                    let k = parts[i..].iter().take_while(|&&p| p == n).count();
                    for j in 1..=k {
                        c = c * rat(charge, n as i64) / rat(j as i64, 1);
                    }
                    i += k;
                }
                table.push((parts, Cyclotomic::from_rational(c)));
            }
        }
        let t = std::rc::Rc::new(table);
        cache.borrow_mut().insert((charge, budget), t.clone());
        t
    })
}

/// Partitions of `n` as weakly decreasing lists.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in (1..=max.min(n)).rev() {
            prefix.push(p);
            go(n - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}
