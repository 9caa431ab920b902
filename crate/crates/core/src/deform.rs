//! Pseudo-derivations, their exponentials, `Delta(h, z)`, the tensor vertex
//! action on `V (x) R`, and deformed module actions.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Result, VoaError};
use crate::fock::{AlgebraSpec, Automorphism, FockVector, Monomial, StateSeries};
use crate::scalars::{rat, to_ratio, Cyclotomic};
use crate::series::{exi, series_mul, Coeff, Exponent, ExtSeries, Key, ScalarSeries};
use crate::verify::{Report, Witness, WindowSpec};

/// An element of `V (x) R`: a state-valued series in `z`.
pub type TensorVec = ExtSeries<FockVector>;

/// A series in the vertex variable `x` with coefficients in `V (x) R`.
pub type TensorSeries = ExtSeries<TensorVec>;

/// Iteration cap for exponentials whose termination is argued rather than bounded.
const EXP_CAP: usize = 64;

/// Precondition under which `exp` of a pseudo-derivation is summed.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// `Phi^{d+1}` kills every input.
    Nilpotent(usize),
    /// `exp(X_{v,f})` for `v` of weight `k > 0` with the first `k` derivatives
    /// of `f` in positive powers of `z`; summed up to `z^{z_hi}`.
    Split { z_hi: Exponent },
    /// `exp(X_{v,y})` with `v_0` acting diagonally.
    Y,
}

impl Certificate {
    pub fn describe(&self) -> String {
        match self {
            Certificate::Nilpotent(d) => format!("nilpotent:{d}"),
            Certificate::Split { z_hi } => format!("split:{z_hi}"),
            Certificate::Y => "y".into(),
        }
    }
}

/// A lazily evaluated element of `Hom(V, V (x) R)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PseudoMap {
    Identity,
    Zero,
    /// `X_{v,f} = sum_n (1/n!) (d^n f) v_n`
    Xvf { v: FockVector, f: ScalarSeries },
    Exp { inner: Box<PseudoMap>, cert: Certificate },
    /// `z^{h(0)} exp(sum_k (-1)^{k-1} h_k z^{-k} / k)`
    DeltaH { h: FockVector, use_log: bool },
    /// `outer . inner`, extended `R`-linearly.
    Compose(Box<PseudoMap>, Box<PseudoMap>),
    /// `theta` (`e^{ay} -> z^a`, `y -> log z`) after `inner`.
    ThetaPush { inner: Box<PseudoMap>, r: u32 },
    /// `w -> v_n w (x) f`; not a pseudo-derivation in general.
    ModeTimes { v: FockVector, n: i64, f: ScalarSeries },
}

impl PseudoMap {
    pub fn x_vf(v: FockVector, f: ScalarSeries) -> Self {
        PseudoMap::Xvf { v, f }
    }

    pub fn exp(inner: PseudoMap, cert: Certificate) -> Self {
        PseudoMap::Exp { inner: Box::new(inner), cert }
    }

    /// Validates the conditions on `h` before building `Delta(h, z)`.
    pub fn delta_h(alg: &AlgebraSpec, h: FockVector, use_log: bool) -> Result<Self> {
        let check = alg.h_condition_check(&h, 3)?;
        if !check.pass {
            return Err(VoaError::HConditionFailed(check.witness.unwrap_or_default()));
        }
        Ok(PseudoMap::DeltaH { h, use_log })
    }

    pub fn compose(outer: PseudoMap, inner: PseudoMap) -> Self {
        PseudoMap::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn theta(inner: PseudoMap, r: u32) -> Self {
        PseudoMap::ThetaPush { inner: Box::new(inner), r }
    }

    /// Pseudo-endomorphism kinds, which send the vacuum to `1 (x) 1`.
    pub fn is_endo(&self) -> bool {
        match self {
            PseudoMap::Identity | PseudoMap::Exp { .. } | PseudoMap::DeltaH { .. } => true,
            PseudoMap::ThetaPush { inner, .. } => inner.is_endo(),
            PseudoMap::Compose(a, b) => a.is_endo() && b.is_endo(),
            _ => false,
        }
    }

    /// Pseudo-derivation kinds, which send the vacuum to zero.
    pub fn is_derivation(&self) -> bool {
        match self {
            PseudoMap::Zero | PseudoMap::Xvf { .. } | PseudoMap::ModeTimes { .. } => true,
            PseudoMap::ThetaPush { inner, .. } => inner.is_derivation(),
            _ => false,
        }
    }

    /// Descriptor text in the CLI grammar.
    pub fn describe(&self, alg: &AlgebraSpec) -> String {
        let n = alg.cyclo_order;
        match self {
            PseudoMap::Identity => "id".into(),
            PseudoMap::Zero => "0".into(),
            PseudoMap::Xvf { v, f } => format!("Xvf({}; {})", alg.render(v), f.render(n)),
            PseudoMap::Exp { inner, cert } => format!("exp({}; {})", inner.describe(alg), cert.describe()),
            PseudoMap::DeltaH { h, use_log: false } => format!("Delta({})", alg.render(h)),
            PseudoMap::DeltaH { h, use_log: true } => format!("Delta({}; log)", alg.render(h)),
            PseudoMap::Compose(a, b) => format!("compose({}; {})", a.describe(alg), b.describe(alg)),
            PseudoMap::ThetaPush { inner, r } => format!("theta({}; {r})", inner.describe(alg)),
            PseudoMap::ModeTimes { v, n: m, f } => format!("Mode({}; {m}; {})", alg.render(v), f.render(n)),
        }
    }

    /// The image of `w` in `V (x) R`.
    pub fn apply(&self, alg: &AlgebraSpec, w: &FockVector) -> Result<TensorVec> {
        match self {
            PseudoMap::Identity => Ok(TensorVec::constant(w.clone())),
            PseudoMap::Zero => Ok(TensorVec::exact()),
            PseudoMap::Xvf { v, f } => x_vf_apply(alg, v, f, w, 0),
            PseudoMap::ModeTimes { v, n, f } => series_mul(f, &TensorVec::constant(alg.vertex_coeff(v, *n, w)?)),
            PseudoMap::Exp { inner, cert } => exp_apply(alg, inner, cert, w),
            PseudoMap::DeltaH { h, .. } => {
                let log_z = ScalarSeries::log_z();
                let n = x_vf_apply_map(alg, h, &log_z, 1);
                let e = exp_nilpotent(alg, &n, w, EXP_CAP)?;
                h0_power(alg, h, &e)
            }
            PseudoMap::Compose(a, b) => a.apply_tensor(alg, &b.apply(alg, w)?),
            PseudoMap::ThetaPush { inner, r } => inner.apply(alg, w)?.theta(*r),
        }
    }

    /// The `R`-linear extension to `V (x) R`; the input must be exact.
    pub fn apply_tensor(&self, alg: &AlgebraSpec, t: &TensorVec) -> Result<TensorVec> {
        require_exact(t)?;
        t.compose(|s| self.apply(alg, s))
    }
}

fn require_exact<C: Coeff>(t: &ExtSeries<C>) -> Result<()> {
    if t.is_exact() {
        Ok(())
    } else {
        Err(VoaError::KindMismatch("operation needs an exactly known image (windowed exponential output)".into()))
    }
}

/// `sum_{n >= n_min} (1/n!) (d^n f) v_n w`.
fn x_vf_apply(alg: &AlgebraSpec, v: &FockVector, f: &ScalarSeries, w: &FockVector, n_min: u32) -> Result<TensorVec> {
    let modes = alg.vertex_series(v, w, exi(-1))?;
    let mut out = TensorVec::exact();
    let mut deriv = f.derive_n_over_factorial(n_min);
    let mut at = n_min;
    let mut by_mode: Vec<(u32, FockVector)> = Vec::new();
    for (k, s) in modes.terms() {
        if !k.exp.is_integer() {
            return Err(VoaError::ExponentNotIntegral(k.exp));
        }
        let n = (-k.exp - Exponent::one()).to_integer();
        if n >= n_min as i64 {
            by_mode.push((n as u32, s.clone()));
        }
    }
    by_mode.sort_by_key(|(n, _)| *n);
    for (n, s) in by_mode {
        while at < n {
            at += 1;
            deriv = deriv.derive().scale(&Cyclotomic::from_rational(rat(1, at as i64)));
        }
        out = out.add(&series_mul(&deriv, &TensorVec::constant(s))?);
    }
    Ok(out)
}

/// `X_{v,f}` restricted to modes `n >= n_min`, as a closure-friendly map.
fn x_vf_apply_map<'a>(
    alg: &'a AlgebraSpec,
    v: &'a FockVector,
    f: &'a ScalarSeries,
    n_min: u32,
) -> impl Fn(&FockVector) -> Result<TensorVec> + 'a {
    move |w| x_vf_apply(alg, v, f, w, n_min)
}

/// `exp(phi) w` for a `phi` that must vanish after at most `cap` steps.
fn exp_nilpotent(
    alg: &AlgebraSpec,
    phi: &dyn Fn(&FockVector) -> Result<TensorVec>,
    w: &FockVector,
    cap: usize,
) -> Result<TensorVec> {
    let mut term = TensorVec::constant(w.clone());
    let mut sum = term.clone();
    for n in 1..=cap + 1 {
        term = term.compose(phi)?.scale(&Cyclotomic::from_rational(rat(1, n as i64)));
        if term.is_empty() {
            return Ok(sum);
        }
        if n > cap {
            break;
        }
        sum = sum.add(&term);
    }
    Err(VoaError::CertificateViolation { state: alg.render(w), depth: cap + 1 })
}

/// Multiplies each monomial by `z^{lambda}`, `lambda` its `h(0)`-eigenvalue.
fn h0_power(alg: &AlgebraSpec, h: &FockVector, t: &TensorVec) -> Result<TensorVec> {
    let mut out = TensorVec::exact();
    for (k, s) in t.terms() {
        for (m, c) in s.terms() {
            let lambda = zero_mode_eigenvalue(alg, h, m)?;
            if (alg.root_denom as i64) % lambda.denom() != 0 {
                return Err(VoaError::ExponentNotRepresentable(lambda));
            }
            let key = Key { exp: k.exp + lambda, ..k.clone() };
            out.add_term(key, FockVector::term(m.clone(), c.clone()));
        }
    }
    Ok(out.tighten())
}

/// The eigenvalue of `v_0` on `m`, or an error if `m` is not an eigenvector.
fn zero_mode_eigenvalue(alg: &AlgebraSpec, v: &FockVector, m: &Monomial) -> Result<Exponent> {
    let img = alg.vertex_coeff(v, 0, &FockVector::from_monomial(m.clone()))?;
    let c = img.get(m);
    if img != FockVector::from_monomial(m.clone()).scaled(&c) {
        return Err(VoaError::KindMismatch(format!("zero mode is not diagonal on {}", alg.render_monomial(m))));
    }
    c.as_rational()
        .and_then(|q| to_ratio(&q))
        .ok_or_else(|| VoaError::KindMismatch("zero-mode eigenvalue is not rational".into()))
}

fn exp_apply(alg: &AlgebraSpec, inner: &PseudoMap, cert: &Certificate, w: &FockVector) -> Result<TensorVec> {
    match cert {
        Certificate::Nilpotent(d) => {
            let phi = |s: &FockVector| inner.apply(alg, s);
            exp_nilpotent(alg, &phi, w, *d)
        }
        Certificate::Y => {
            let (v, f) = match inner {
                PseudoMap::Xvf { v, f } if f.is_exact() && f.agrees_with(&ScalarSeries::y()) => (v, f),
                _ => return Err(VoaError::KindMismatch("the y-certificate needs exp(Xvf(v; y))".into())),
            };
            let n = x_vf_apply_map(alg, v, f, 1);
            let e = exp_nilpotent(alg, &n, w, EXP_CAP)?;
            let mut out = TensorVec::exact();
            for (k, s) in e.terms() {
                for (m, c) in s.terms() {
                    let lambda = zero_mode_eigenvalue(alg, v, m)?;
                    let key = Key { group: k.group + lambda, ..k.clone() };
                    out.add_term(key, FockVector::term(m.clone(), c.clone()));
                }
            }
            Ok(out.tighten())
        }
        Certificate::Split { z_hi } => {
            let (v, f) = match inner {
                PseudoMap::Xvf { v, f } => (v, f),
                _ => return Err(VoaError::KindMismatch("the split certificate needs exp(Xvf(v; f))".into())),
            };
            let k = split_weight(alg, v, f)?;
            let high = x_vf_apply_map(alg, v, f, k);
            let e = exp_nilpotent(alg, &high, w, EXP_CAP)?;
            let low = |s: &FockVector| -> Result<TensorVec> {
                let all = x_vf_apply(alg, v, f, s, 0)?;
                let hi_part = x_vf_apply(alg, v, f, s, k)?;
                Ok(all.sub(&hi_part))
            };
            e.compose(|s| exp_positive(alg, &low, s, *z_hi))
        }
    }
}

/// Checks the split hypotheses and returns the weight `k` of `v`.
fn split_weight(alg: &AlgebraSpec, v: &FockVector, f: &ScalarSeries) -> Result<u32> {
    let omega = alg.standard_omega()?;
    let weights: Vec<Exponent> = v.terms().map(|(m, _)| alg.weight(m, &omega)).collect::<Result<_>>()?;
    let k = match weights.first() {
        Some(k) if weights.iter().all(|x| x == k) && k.is_integer() && *k > Exponent::zero() => k.to_integer() as u32,
        _ => return Err(VoaError::KindMismatch("split certificate needs v homogeneous of positive weight".into())),
    };
    for n in 0..k {
        let d = f.derive_n_over_factorial(n);
        if d.terms().any(|(key, _)| !key.is_plain() || key.exp <= Exponent::zero()) {
            return Err(VoaError::KindMismatch(format!(
                "split certificate needs d^{n} f in positive powers of z, got {}",
                d.render(alg.cyclo_order)
            )));
        }
    }
    Ok(k)
}

/// `exp(phi) w` up to `z^{z_hi}` for a `phi` raising `z`-degree by positive
/// amounts; exact when the sum terminates first.
fn exp_positive(
    alg: &AlgebraSpec,
    phi: &dyn Fn(&FockVector) -> Result<TensorVec>,
    w: &FockVector,
    z_hi: Exponent,
) -> Result<TensorVec> {
    let mut term = TensorVec::constant(w.clone());
    let mut sum = term.clone();
    let mut truncated = false;
    for n in 1..=4 * EXP_CAP {
        let next = term.compose(phi)?.scale(&Cyclotomic::from_rational(rat(1, n as i64)));
        term = TensorVec::exact();
        for (k, s) in next.into_terms() {
            if k.exp > z_hi {
                truncated = true;
            } else {
                term.add_term(k, s);
            }
        }
        if term.is_empty() {
            return Ok(if truncated { sum.truncate(z_hi) } else { sum });
        }
        sum = sum.add(&term);
    }
    Err(VoaError::CertificateViolation { state: alg.render(w), depth: 4 * EXP_CAP })
}

/// `Y((a (x) f), x)(b (x) g) = Y(a, x) b (x) (e^{x d} f) g` on `(-inf, x_hi]`.
/// Both inputs must be exact.
pub fn tensor_vertex(alg: &AlgebraSpec, a: &TensorVec, b: &TensorVec, x_hi: Exponent) -> Result<TensorSeries> {
    require_exact(a)?;
    require_exact(b)?;
    let mut coeffs: BTreeMap<Exponent, TensorVec> = BTreeMap::new();
    let mut lo = x_hi;
    for (ka, sa) in a.terms() {
        let base = ScalarSeries::monomial(ka.clone(), Cyclotomic::one()).with_log_bound(ka.log);
        let mut derivs: Vec<ScalarSeries> = vec![base];
        for (kb, sb) in b.terms() {
            let ys = alg.vertex_series(sa, sb, x_hi)?;
            lo = lo.min(ys.lo());
            for (ke, st) in ys.terms() {
                let right = TensorVec::monomial(kb.clone(), st.clone()).with_log_bound(kb.log);
                let mut n = 0usize;
                while ke.exp + exi(n as i64) <= x_hi {
                    if derivs.len() <= n {
                        let next = derivs[n - 1].derive().scale(&Cyclotomic::from_rational(rat(1, n as i64)));
                        derivs.push(next);
                    }
                    if derivs[n].is_empty() {
                        break;
                    }
                    let bound = derivs[n].log_bound() + kb.log;
                    let term = series_mul(&derivs[n].clone().with_log_bound(bound), &right)?;
                    let slot = coeffs.entry(ke.exp + exi(n as i64)).or_insert_with(TensorVec::exact);
                    *slot = slot.add(&term);
                    n += 1;
                }
            }
        }
    }
    let mut out = TensorSeries::windowed(lo, x_hi);
    for (e, t) in coeffs {
        out.add_term(Key::pow(e), t);
    }
    Ok(out)
}

/// `Y(u, x)` applied factorwise to an element of `V (x) R`: `(Y(u, x) (x) 1) t`.
pub fn vertex_left(alg: &AlgebraSpec, u: &FockVector, t: &TensorVec, x_hi: Exponent) -> Result<TensorSeries> {
    require_exact(t)?;
    let mut coeffs: BTreeMap<Exponent, TensorVec> = BTreeMap::new();
    let mut lo = x_hi;
    for (kz, s) in t.terms() {
        let ys = alg.vertex_series(u, s, x_hi)?;
        lo = lo.min(ys.lo());
        for (ke, st) in ys.terms() {
            let slot = coeffs.entry(ke.exp).or_insert_with(TensorVec::exact);
            *slot = slot.add(&TensorVec::monomial(kz.clone(), st.clone()).with_log_bound(t.log_bound()));
        }
    }
    let mut out = TensorSeries::windowed(lo, x_hi);
    for (e, tv) in coeffs {
        out.add_term(Key::pow(e), tv);
    }
    Ok(out)
}

/// `Psi` applied to each `x`-coefficient of `Y(u, x) v`.
pub fn map_after_vertex(
    alg: &AlgebraSpec,
    psi: &PseudoMap,
    u: &FockVector,
    v: &FockVector,
    x_hi: Exponent,
) -> Result<TensorSeries> {
    alg.vertex_series(u, v, x_hi)?.try_map(|s| psi.apply(alg, s))
}

thread_local! {
    static APPLIED: std::cell::RefCell<std::collections::HashMap<String, TensorVec>> = Default::default();
}

/// `delta.apply(alg, v)`, exact, memoized per thread.
fn applied(alg: &AlgebraSpec, delta: &PseudoMap, v: &FockVector) -> Result<TensorVec> {
    let key = format!("{alg:?}|{}|{}", delta.describe(alg), alg.render(v));
    if let Some(d) = APPLIED.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(d);
    }
    let d = delta.apply(alg, v)?;
    require_exact(&d)?;
    APPLIED.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= 4096 {
            c.clear();
        }
        c.insert(key, d.clone());
    });
    Ok(d)
}

/// `Y_W(Delta(x) v, x) w` with the `R`-variable set equal to `x`.
pub fn twist_action(
    alg: &AlgebraSpec,
    delta: &PseudoMap,
    v: &FockVector,
    w: &FockVector,
    x_hi: Exponent,
) -> Result<StateSeries> {
    if !delta.is_endo() {
        return Err(VoaError::KindMismatch("twisting needs a pseudo-endomorphism".into()));
    }
    let d = applied(alg, delta, v)?;
    let mut out = StateSeries::windowed(x_hi, x_hi);
    for (k, c) in d.terms() {
        if !k.is_plain() {
            return Err(VoaError::KindMismatch(format!("cannot substitute x for z in a term with {k}; push through theta first")));
        }
        let ys = alg.vertex_series(c, w, x_hi - k.exp)?.shift(k.exp);
        out = out.add(&ys);
    }
    Ok(out)
}

/// The deformed mode `v^{Delta}_n w`: the `x^{-n-1}` coefficient of the twisted action.
pub fn deformed_mode(alg: &AlgebraSpec, delta: &PseudoMap, v: &FockVector, n: Exponent, w: &FockVector) -> Result<FockVector> {
    let at = -n - Exponent::one();
    twist_action(alg, delta, v, w, at)?.coeff_at(at)
}

/// `(D (x) 1) Psi(v) - Psi(D v)` and `-(1 (x) d) Psi(v)`.
pub fn d_compat_sides(alg: &AlgebraSpec, psi: &PseudoMap, v: &FockVector) -> Result<(TensorVec, TensorVec)> {
    let img = psi.apply(alg, v)?;
    let left = img.try_map(|s| alg.translation(s))?.sub(&psi.apply(alg, &alg.translation(v)?)?);
    let right = img.derive().scale(&Cyclotomic::from_int(-1));
    Ok((left, right))
}

/// `sum_s tau(z^s) (x) sigma(c_s)` with `tau z^s = e^{2 pi i s} z^s`.
pub fn sigma_tau(alg: &AlgebraSpec, sigma: &Automorphism, t: &TensorVec) -> Result<TensorVec> {
    let mut out = TensorVec::exact();
    for (k, s) in t.terms() {
        if !k.is_plain() {
            return Err(VoaError::KindMismatch(format!("branch rotation undefined on a term with {k}")));
        }
        let ph = Cyclotomic::phase(&k.exp, alg.cyclo_order)?;
        out.add_term(k.clone(), sigma.apply(alg, s)?.scaled(&ph));
    }
    Ok(out.widen_lo(t.lo()))
}

/// Checks `(sigma x tau) Delta(z) = Delta(z)` on each sample.
pub fn equivariance_check(alg: &AlgebraSpec, delta: &PseudoMap, sigma: &Automorphism, samples: &[FockVector]) -> Report {
    let mut report = Report::new("equivariance", alg, WindowSpec::exact());
    report.config.insert("delta".into(), delta.describe(alg));
    report.config.insert("sigma".into(), sigma.label());
    for v in samples {
        let sample = alg.render(v);
        report.samples.push(sample.clone());
        let sides = delta.apply(alg, v).and_then(|d| Ok((sigma_tau(alg, sigma, &d)?, d)));
        match sides {
            Ok((lhs, rhs)) => {
                if let Some((k, a, b)) = lhs.first_mismatch(&rhs) {
                    report.fail(Witness::from_states(alg, k.to_string(), &a, &b, &sample));
                }
            }
            Err(e) => report.inconclusive(format!("{sample}: {e}")),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Monomial, Sector};
    use crate::series::ex;

    fn vac(alg: &AlgebraSpec) -> FockVector {
        alg.vacuum()
    }

    fn q(n: i64, d: i64) -> Cyclotomic {
        Cyclotomic::from_rational(rat(n, d))
    }

    fn basis_states(alg: &AlgebraSpec, sector: Sector, depth: u32) -> Vec<FockVector> {
        alg.basis_up_to(&sector, depth).into_iter().map(FockVector::from_monomial).collect()
    }

    /// `exp(sum_k (-1)^{k-1} h_k z^{-k} / k) w` straight from the Heisenberg mode action.
    fn delta_oracle(alg: &AlgebraSpec, w: &FockVector) -> TensorVec {
        let step = |t: &TensorVec| {
            let mut out = TensorVec::exact();
            for (k, s) in t.terms() {
                for j in 1..=8i64 {
                    let img = alg.mode_apply(j, s).scaled(&q(if j % 2 == 1 { 1 } else { -1 }, j));
                    out.add_term(Key::pow(k.exp - exi(j)), img);
                }
            }
            out
        };
        let mut term = TensorVec::constant(w.clone());
        let mut sum = term.clone();
        for n in 1..=12 {
            term = step(&term).scale(&q(1, n));
            sum = sum.add(&term);
        }
        let mut out = TensorVec::exact();
        for (k, s) in sum.terms() {
            for (m, c) in s.terms() {
                let lam = alg.h0(&m.sector);
                out.add_term(Key::pow(k.exp + lam), FockVector::term(m.clone(), c.clone()));
            }
        }
        out
    }

    #[test]
    fn x_vf_log_matches_mode_formula() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let psi = PseudoMap::x_vf(alg.h_state(), ScalarSeries::log_z());
        let sector = Sector::momentum(ex(1, 2));
        for w in basis_states(&alg, sector, 3) {
            let got = psi.apply(&alg, &w).unwrap();
            let mut want = TensorVec::exact();
            want.add_term(Key::new(exi(0), 1, 0, exi(0)), alg.mode_apply(0, &w));
            for n in 1..=4i64 {
                let c = q(if n % 2 == 1 { 1 } else { -1 }, n);
                want.add_term(Key::pow(exi(-n)), alg.mode_apply(n, &w).scaled(&c));
            }
            assert_eq!(got.first_mismatch(&want), None, "{}", alg.render(&w));
        }
    }

    #[test]
    fn x_vf_negative_power_on_h() {
        for g in [1, 2] {
            let alg = AlgebraSpec::heisenberg(exi(g));
            for k in 1..=3 {
                let psi = PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-k)));
                let got = psi.apply(&alg, &alg.h_state()).unwrap();
                let want = TensorVec::monomial(Key::pow(exi(-k - 1)), vac(&alg).scaled(&Cyclotomic::from_int(-k * g)));
                assert_eq!(got.first_mismatch(&want), None);
            }
        }
    }

    #[test]
    fn vacuum_images() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let h2 = FockVector::from_monomial(Monomial::new(vec![1, 1], Sector::vacuum()));
        for f in [ScalarSeries::z_pow(exi(-1)), ScalarSeries::log_z(), ScalarSeries::y(), ScalarSeries::z_pow(ex(1, 2))] {
            for v in [alg.h_state(), h2.clone()] {
                let psi = PseudoMap::x_vf(v.clone(), f.clone());
                assert!(psi.apply(&alg, &vac(&alg)).unwrap().is_empty());
                let e = PseudoMap::exp(psi, Certificate::Nilpotent(8));
                assert_eq!(e.apply(&alg, &vac(&alg)).unwrap(), TensorVec::constant(vac(&alg)));
            }
        }
        let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
        assert_eq!(d.apply(&alg, &vac(&alg)).unwrap(), TensorVec::constant(vac(&alg)));
    }

    #[test]
    fn phi_k_on_h() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        for k in 1..=3 {
            let phi = PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-k))), Certificate::Nilpotent(6));
            let got = phi.apply(&alg, &alg.h_state()).unwrap();
            let mut want = TensorVec::constant(alg.h_state());
            want.add_term(Key::pow(exi(-k - 1)), vac(&alg).scaled(&Cyclotomic::from_int(-k)));
            assert_eq!(got.first_mismatch(&want), None);
        }
    }

    #[test]
    fn half_power_example() {
        for g in [1, 2] {
            let alg = AlgebraSpec::heisenberg(exi(g));
            let x = PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(ex(1, 2)));
            let mut want = TensorVec::constant(alg.h_state());
            want.add_term(Key::pow(ex(-1, 2)), vac(&alg).scaled(&q(g, 2)));
            for cert in [Certificate::Nilpotent(4), Certificate::Split { z_hi: exi(4) }] {
                let got = PseudoMap::exp(x.clone(), cert).apply(&alg, &alg.h_state()).unwrap();
                assert!(got.is_exact());
                assert_eq!(got.first_mismatch(&want), None);
            }
        }
    }

    #[test]
    fn split_certificate_sums_a_non_nilpotent_zero_mode() {
        let alg = AlgebraSpec::lattice(1, ex(1, 4));
        let e = alg.exp_state(1);
        let x = PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(ex(1, 2)));
        let got = PseudoMap::exp(x.clone(), Certificate::Split { z_hi: exi(3) }).apply(&alg, &e).unwrap();
        // h_0 e = (1/2) e, so exp(h_0 z^{1/2}) e = sum_j (z^{1/2}/2)^j / j! e
        assert_eq!(got.hi(), Some(exi(3)));
        for j in 0..=6i64 {
            let c = got.coeff_at(ex(j, 2)).unwrap();
            let want = q(1, 2).pow(j).unwrap().scale(&crate::scalars::inv_factorial(j as u32));
            assert_eq!(c.get(&Monomial::vacuum(Sector::charge(1))), want);
        }
        assert!(matches!(
            PseudoMap::exp(x, Certificate::Nilpotent(5)).apply(&alg, &e),
            Err(VoaError::CertificateViolation { depth: 6, .. })
        ));
    }

    #[test]
    fn certificate_violation_reports_depth() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let w = FockVector::from_monomial(Monomial::new(vec![1, 1], Sector::vacuum()));
        let phi = PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-1))), Certificate::Nilpotent(1));
        match phi.apply(&alg, &w) {
            Err(VoaError::CertificateViolation { state, depth }) => {
                assert_eq!(depth, 2);
                assert_eq!(state, "h(-1)^2|0>");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delta_examples() {
        for g in [1, 2] {
            let alg = AlgebraSpec::heisenberg(exi(g));
            let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
            let mut want = TensorVec::constant(alg.h_state());
            want.add_term(Key::pow(exi(-1)), vac(&alg).scaled(&Cyclotomic::from_int(g)));
            assert_eq!(d.apply(&alg, &alg.h_state()).unwrap().first_mismatch(&want), None);
        }
        let alg = AlgebraSpec::lattice(1, ex(1, 4));
        let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
        for m in -2..=2 {
            let want = TensorVec::monomial(Key::pow(ex(m, 2)), alg.exp_state(m));
            assert_eq!(d.apply(&alg, &alg.exp_state(m)).unwrap().first_mismatch(&want), None);
        }
    }

    #[test]
    fn delta_matches_mode_oracle() {
        let algs = [AlgebraSpec::heisenberg(exi(1)), AlgebraSpec::heisenberg(ex(1, 2)), AlgebraSpec::lattice(1, ex(1, 4))];
        for alg in &algs {
            for use_log in [false, true] {
                let d = PseudoMap::delta_h(alg, alg.h_state(), use_log).unwrap();
                for sector in [Sector::vacuum(), Sector::charge(1), Sector::charge(-1)] {
                    if !alg.is_lattice() && sector.charge != 0 {
                        continue;
                    }
                    for w in basis_states(alg, sector, 4) {
                        let got = d.apply(alg, &w).unwrap();
                        assert_eq!(got.first_mismatch(&delta_oracle(alg, &w)), None, "{}", alg.render(&w));
                    }
                }
            }
        }
    }

    #[test]
    fn delta_rejects_bad_h() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let bad = FockVector::from_monomial(Monomial::new(vec![2], Sector::vacuum()));
        assert!(matches!(PseudoMap::delta_h(&alg, bad, false), Err(VoaError::HConditionFailed(_))));
        let zero = AlgebraSpec::heisenberg(exi(0));
        assert!(PseudoMap::delta_h(&zero, zero.h_state(), false).is_ok());
    }

    #[test]
    fn delta_exponent_denominator() {
        let alg = AlgebraSpec::lattice(1, ex(1, 8));
        let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
        assert_eq!(d.apply(&alg, &alg.exp_state(1)), Err(VoaError::ExponentNotRepresentable(ex(1, 4))));
        let alg = alg.with_orders(8, 4);
        assert!(d.apply(&alg, &alg.exp_state(1)).is_ok());
    }

    #[test]
    fn theta_of_exp_y_is_log_delta() {
        let algs = [AlgebraSpec::heisenberg(exi(1)), AlgebraSpec::lattice(1, ex(1, 4)), AlgebraSpec::lattice(2, ex(1, 2))];
        for alg in &algs {
            let ey = PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::y()), Certificate::Y);
            let pushed = PseudoMap::theta(ey.clone(), alg.root_denom);
            let d = PseudoMap::delta_h(alg, alg.h_state(), true).unwrap();
            for sector in [Sector::vacuum(), Sector::charge(1), Sector::charge(-2)] {
                if !alg.is_lattice() && sector.charge != 0 {
                    continue;
                }
                for w in basis_states(alg, sector.clone(), 3) {
                    assert_eq!(pushed.apply(alg, &w).unwrap().first_mismatch(&d.apply(alg, &w).unwrap()), None);
                }
                if sector.charge != 0 {
                    let raw = ey.apply(alg, &FockVector::from_monomial(Monomial::vacuum(sector.clone()))).unwrap();
                    assert!(raw.terms().all(|(k, _)| k.group == alg.h0(&sector)));
                }
            }
        }
    }

    #[test]
    fn d_compatibility() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let h2 = FockVector::from_monomial(Monomial::new(vec![1, 1], Sector::vacuum()));
        let mut maps = Vec::new();
        for f in [ScalarSeries::z_pow(exi(-1)), ScalarSeries::z_pow(exi(-3)), ScalarSeries::z_pow(ex(1, 2)), ScalarSeries::y(), ScalarSeries::log_z()] {
            maps.push(PseudoMap::x_vf(alg.h_state(), f.clone()));
            maps.push(PseudoMap::x_vf(h2.clone(), f));
        }
        maps.push(PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-2))), Certificate::Nilpotent(8)));
        maps.push(PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::y()), Certificate::Y));
        maps.push(PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap());
        for psi in &maps {
            for w in basis_states(&alg, Sector::vacuum(), 3) {
                let (l, r) = d_compat_sides(&alg, psi, &w).unwrap();
                assert_eq!(l.first_mismatch(&r), None, "{} on {}", psi.describe(&alg), alg.render(&w));
            }
        }
    }

    #[test]
    fn x_vf_is_residue_of_tensor_field() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let h2 = FockVector::from_monomial(Monomial::new(vec![1, 1], Sector::vacuum()));
        for f in [ScalarSeries::z_pow(exi(-2)), ScalarSeries::log_z(), ScalarSeries::y(), ScalarSeries::z_pow(ex(1, 2))] {
            for v in [alg.h_state(), h2.clone()] {
                let a = series_mul(&f, &TensorVec::constant(v.clone())).unwrap();
                for w in basis_states(&alg, Sector::vacuum(), 3) {
                    let y = tensor_vertex(&alg, &a, &TensorVec::constant(w.clone()), exi(-1)).unwrap();
                    let res = y.coeff_at(exi(-1)).unwrap();
                    let direct = PseudoMap::x_vf(v.clone(), f.clone()).apply(&alg, &w).unwrap();
                    assert_eq!(res.first_mismatch(&direct), None);
                }
            }
        }
    }

    #[test]
    fn tensor_vertex_examples() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let one = vac(&alg);
        let g = ScalarSeries::z_pow(exi(-3));
        let b = series_mul(&g, &TensorVec::constant(one.clone())).unwrap();
        let a = TensorVec::monomial(Key::pow(exi(1)), one.clone());
        let y = tensor_vertex(&alg, &a, &b, exi(5)).unwrap();
        assert_eq!(y.coeff_at(exi(0)).unwrap(), TensorVec::monomial(Key::pow(exi(-2)), one.clone()));
        assert_eq!(y.coeff_at(exi(1)).unwrap(), TensorVec::monomial(Key::pow(exi(-3)), one.clone()));
        assert!(y.coeff_at(exi(2)).unwrap().is_empty());

        let lg = series_mul(&ScalarSeries::log_z(), &TensorVec::constant(one.clone())).unwrap();
        let y = tensor_vertex(&alg, &lg, &TensorVec::constant(one.clone()), exi(6)).unwrap();
        assert_eq!(y.coeff_at(exi(0)).unwrap(), lg);
        for i in 1..=6i64 {
            let c = q(if i % 2 == 1 { 1 } else { -1 }, i);
            assert_eq!(y.coeff_at(exi(i)).unwrap(), TensorVec::monomial(Key::pow(exi(-i)), one.scaled(&c)));
        }

        let af = series_mul(&ScalarSeries::z_pow(ex(1, 2)), &TensorVec::constant(alg.h_state())).unwrap();
        let y = tensor_vertex(&alg, &af, &TensorVec::constant(one), exi(3)).unwrap();
        assert_eq!(y.coeff_at(exi(0)).unwrap(), af);
    }

    #[test]
    fn identity_twist_is_untwisted() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let w = FockVector::from_monomial(Monomial::new(vec![2, 1], Sector::momentum(ex(3, 2))));
        let v = FockVector::from_monomial(Monomial::new(vec![1, 1], Sector::vacuum()));
        let got = twist_action(&alg, &PseudoMap::Identity, &v, &w, exi(4)).unwrap();
        assert_eq!(got.first_mismatch(&alg.vertex_series(&v, &w, exi(4)).unwrap()), None);
        let x = PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-1)));
        assert!(matches!(twist_action(&alg, &x, &v, &w, exi(4)), Err(VoaError::KindMismatch(_))));
    }

    #[test]
    fn phi_k_deformed_modes() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        for k in 1..=3i64 {
            let phi = PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-k))), Certificate::Nilpotent(8));
            for w in basis_states(&alg, Sector::vacuum(), 4) {
                for n in -4..=5i64 {
                    let got = deformed_mode(&alg, &phi, &alg.h_state(), exi(n), &w).unwrap();
                    let mut want = alg.mode_apply(n, &w);
                    if n == k {
                        want = want.sub(&w.scaled(&Cyclotomic::from_int(k)));
                    }
                    assert_eq!(got, want, "k={k} n={n} w={}", alg.render(&w));
                }
            }
            let mut s = vac(&alg);
            for m in 1..=5u32 {
                s = deformed_mode(&alg, &phi, &alg.h_state(), exi(k), &s).unwrap();
                assert_eq!(s, vac(&alg).scaled(&Cyclotomic::from_int(-k).pow(m as i64).unwrap()));
            }
        }
    }

    #[test]
    fn equivariance_examples() {
        let alg = AlgebraSpec::lattice(1, ex(1, 4));
        let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
        let mut samples = Vec::new();
        for m in -1..=1 {
            samples.extend(basis_states(&alg, Sector::charge(m), 2));
        }
        assert!(equivariance_check(&alg, &d, &Automorphism::SigmaH(1), &samples).passed());
        assert!(equivariance_check(&alg, &PseudoMap::Identity, &Automorphism::Identity, &samples).passed());
        let bad = equivariance_check(&alg, &d, &Automorphism::SigmaH(2), &samples);
        assert_eq!(bad.outcome, crate::verify::Outcome::Fail);
        let w = bad.witness.unwrap();
        assert_eq!(w.key, "z^-1/2");
        assert_eq!((w.left.as_str(), w.right.as_str()), ("-1", "1"));
    }

    #[test]
    fn equivariance_sign_convention_at_order_four() {
        // h(0) has eigenvalue m/4 on e^{m alpha}; sigma_h has order 4
        let alg = AlgebraSpec::lattice(1, ex(1, 8)).with_orders(8, 4);
        let d = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
        let samples: Vec<FockVector> = (-2..=2).map(|m| alg.exp_state(m)).collect();
        assert!(equivariance_check(&alg, &d, &Automorphism::SigmaH(-1), &samples).passed());
        assert!(!equivariance_check(&alg, &d, &Automorphism::SigmaH(1), &samples).passed());
        // the twisted action itself rotates by sigma_h^{-1}
        let w = alg.exp_state(1);
        let v = alg.exp_state(1);
        let y = twist_action(&alg, &d, &v, &w, exi(6)).unwrap();
        let rotated = y.rotate_branch(4, alg.cyclo_order).unwrap();
        let sv = alg.sigma_h_power(&v, -1).unwrap();
        assert_eq!(rotated.first_mismatch(&twist_action(&alg, &d, &sv, &w, exi(6)).unwrap()), None);
    }
}
