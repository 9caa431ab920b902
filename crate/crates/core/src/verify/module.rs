use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::action::ModuleAction;
use super::samples::CheckConfig;
use super::{Report, Witness, WindowSpec};
use crate::error::Result;
use crate::fock::{Automorphism, FockVector};
use crate::scalars::{big, binomial, render_ratio, Cyclotomic};
use crate::series::{exi, BiSeries, Coeff, Exponent, ExtSeries};

/// `Y_W(u, x1) Y_W(v, x2) w` on `(-inf, hi1] x (-inf, hi2]`.
pub fn product<A: ModuleAction>(
    a: &A,
    u: &FockVector,
    v: &FockVector,
    w: &A::Elem,
    hi1: Exponent,
    hi2: Exponent,
) -> Result<BiSeries<A::Elem>> {
    let mut out = BiSeries::new(Some(hi1), Some(hi2));
    for (k2, c2) in a.act(v, w, hi2)?.terms() {
        for (k1, c1) in a.act(u, c2, hi1)?.terms() {
            out.add_term(k1.exp, k2.exp, c1.clone());
        }
    }
    Ok(out)
}

/// `Y_W(v, x2) Y_W(u, x1) w`, keyed `(x1, x2)`.
fn product_reversed<A: ModuleAction>(
    a: &A,
    u: &FockVector,
    v: &FockVector,
    w: &A::Elem,
    hi1: Exponent,
    hi2: Exponent,
) -> Result<BiSeries<A::Elem>> {
    let mut out = BiSeries::new(Some(hi1), Some(hi2));
    for (k1, c1) in a.act(u, w, hi1)?.terms() {
        for (k2, c2) in a.act(v, c1, hi2)?.terms() {
            out.add_term(k1.exp, k2.exp, c2.clone());
        }
    }
    Ok(out)
}

/// `[Y_W(u, x1), Y_W(v, x2)] w`.
pub fn commutator<A: ModuleAction>(a: &A, u: &FockVector, v: &FockVector, w: &A::Elem, hi: Exponent) -> Result<BiSeries<A::Elem>> {
    Ok(product(a, u, v, w, hi, hi)?.sub(&product_reversed(a, u, v, w, hi, hi)?))
}

/// First differing key with both exponents at least `lo`.
pub fn bi_mismatch<C: Coeff>(x: &BiSeries<C>, y: &BiSeries<C>, lo: Exponent) -> Option<((Exponent, Exponent), C, C)> {
    let d = x.sub(y);
    let key = d.terms().map(|(&k, _)| k).find(|(s1, s2)| *s1 >= lo && *s2 >= lo)?;
    let at = |s: &BiSeries<C>| s.get(key.0, key.1).unwrap_or_else(|_| C::zero());
    Some((key, at(x), at(y)))
}

fn bi_key(v1: &str, v2: &str, (s1, s2): (Exponent, Exponent)) -> String {
    format!("{v1}^{{{}}} {v2}^{{{}}}", render_ratio(&s1), render_ratio(&s2))
}

fn triple_label<A: ModuleAction>(a: &A, u: &FockVector, v: &FockVector, w: &A::Elem) -> String {
    let alg = a.alg();
    format!("u={}; v={}; w={}", alg.render(u), alg.render(v), a.render(w))
}

fn base_report<A: ModuleAction>(id: &str, a: &A, cfg: &CheckConfig) -> Report {
    let mut r = Report::new(id, a.alg(), WindowSpec::new(cfg.lo, cfg.hi));
    r.config.insert("action".into(), a.label());
    r
}

/// Least `k <= k_max` with `(x1 - x2)^k [Y_W(u, x1), Y_W(v, x2)] w = 0` on the window.
pub fn find_commutativity_order<A: ModuleAction>(a: &A, u: &FockVector, v: &FockVector, w: &A::Elem, cfg: &CheckConfig) -> Report {
    let mut r = base_report("weak-commutativity", a, cfg);
    let sample = triple_label(a, u, v, w);
    r.samples.push(sample.clone());
    let c = match commutator(a, u, v, w, cfg.hi) {
        Ok(c) => c,
        Err(e) => {
            r.inconclusive(format!("{sample}: {e}"));
            return r;
        }
    };
    let empty = BiSeries::new(Some(cfg.hi), Some(cfg.hi));
    let mut last = None;
    let mut t = c;
    for k in 0..=cfg.k_max {
        if k > 0 {
            t = t.times_difference();
        }
        match bi_mismatch(&t, &empty, cfg.lo) {
            None => {
                r.k_used = Some(k);
                return r;
            }
            Some(m) => last = Some(m),
        }
    }
    if let Some((key, x, y)) = last {
        let key = format!("k={} | {}", cfg.k_max, bi_key("x1", "x2", key));
        r.fail(Witness::from_states(a.alg(), key, a.state(&x), a.state(&y), &sample));
    }
    r
}

/// `x0^k Y_W(Y(u, x0) v, x2) w` against `(x1 - x2)^k Y_W(u, x1) Y_W(v, x2) w`
/// at `x1^{1/r} = (x2 + x0)^{1/r}`, on `[lo, hi]^2` in `(x0, x2)`.
pub fn check_weak_associativity<A: ModuleAction>(
    a: &A,
    u: &FockVector,
    v: &FockVector,
    w: &A::Elem,
    k: u32,
    cfg: &CheckConfig,
) -> Report {
    let mut r = base_report("weak-associativity", a, cfg);
    let sample = triple_label(a, u, v, w);
    r.samples.push(sample.clone());
    r.k_used = Some(k);
    match associativity_sides(a, u, v, w, k, cfg.hi) {
        Ok((lhs, rhs)) => {
            if let Some((key, x, y)) = bi_mismatch(&lhs, &rhs, cfg.lo) {
                r.fail(Witness::from_states(a.alg(), bi_key("x0", "x2", key), a.state(&x), a.state(&y), &sample));
            }
        }
        Err(e) => r.inconclusive(format!("{sample}: {e}")),
    }
    r
}

fn associativity_sides<A: ModuleAction>(
    a: &A,
    u: &FockVector,
    v: &FockVector,
    w: &A::Elem,
    k: u32,
    hi: Exponent,
) -> Result<(BiSeries<A::Elem>, BiSeries<A::Elem>)> {
    let alg = a.alg();
    let kk = exi(k as i64);
    let mut lhs = BiSeries::new(Some(hi), Some(hi));
    for (ke, s) in alg.vertex_series(u, v, hi - kk)?.terms() {
        for (k2, c) in a.act(s, w, hi)?.terms() {
            lhs.add_term(ke.exp + kk, k2.exp, c.clone());
        }
    }
    // Support bounds: x2-degrees of F are at least lo(Y_W(v, x2) w), and by
    // commutativity x1-degrees are at least lo(Y_W(u, x1) w).
    let lo_u = a.act(u, w, hi)?.lo();
    let lo_v = a.act(v, w, hi)?.lo();
    // Only total degree s1 + s2 <= 2 hi reaches the window after substitution.
    let total = hi + hi - kk;
    let mut f = BiSeries::new(Some(hi + hi - lo_v), Some(hi + hi - lo_u));
    for (k2, c2) in a.act(v, w, hi + hi - lo_u)?.terms() {
        let h1 = (total - k2.exp).min(hi + hi - lo_v);
        for (k1, c1) in a.act(u, c2, h1)?.terms() {
            f.add_term(k1.exp, k2.exp, c1.clone());
        }
    }
    let f = f.times_difference_power(k);
    let mut rhs = BiSeries::new(Some(hi), Some(hi));
    let t0_max = hi.floor().to_integer();
    for (&(s1, s2), c) in f.terms() {
        for t0 in 0..=t0_max {
            let t2 = s1 + s2 - exi(t0);
            if t2 > hi {
                continue;
            }
            let b = binomial(&big(s1), t0.to_u32().expect("nonnegative"));
            if !b.is_zero() {
                rhs.add_term(exi(t0), t2, c.scale(&Cyclotomic::from_rational(b)));
            }
        }
    }
    Ok((lhs, rhs))
}

/// `Y_W(sigma v, x) w` against the branch rotation of `Y_W(v, x) w`.
pub fn check_sigma_compat<A: ModuleAction>(a: &A, sigma: &Automorphism, v: &FockVector, w: &A::Elem, cfg: &CheckConfig) -> Report {
    let alg = a.alg();
    let mut r = base_report("sigma-compatibility", a, cfg);
    r.config.insert("sigma".into(), sigma.label());
    let sample = format!("v={}; w={}", alg.render(v), a.render(w));
    r.samples.push(sample.clone());
    let sides = (|| -> Result<(ExtSeries<A::Elem>, ExtSeries<A::Elem>)> {
        let lhs = a.act(&sigma.apply(alg, v)?, w, cfg.hi)?;
        let rhs = a.act(v, w, cfg.hi)?.rotate_branch(alg.root_denom, alg.cyclo_order)?;
        Ok((lhs, rhs))
    })();
    match sides {
        Ok((lhs, rhs)) => {
            let fractional = lhs.terms().filter(|(k, _)| k.exp >= cfg.lo && !k.exp.is_integer()).count();
            if fractional > 0 {
                r.notes.push(format!("fractional-power coefficients compared: {fractional}"));
            }
            if let Some((key, x, y)) = lhs.first_mismatch_in(&rhs, cfg.lo, cfg.hi) {
                r.fail(Witness::from_states(alg, format!("x^{{{}}}", render_ratio(&key.exp)), a.state(&x), a.state(&y), &sample));
            }
        }
        Err(e) => r.inconclusive(format!("{sample}: {e}")),
    }
    r
}

/// `Y_W(1, x) w = w`.
pub fn check_vacuum<A: ModuleAction>(a: &A, w: &A::Elem, cfg: &CheckConfig) -> Report {
    let alg = a.alg();
    let mut r = base_report("vacuum", a, cfg);
    let sample = a.render(w);
    r.samples.push(sample.clone());
    match a.act(&alg.vacuum(), w, cfg.hi) {
        Ok(y) => {
            let want = ExtSeries::constant(w.clone()).truncate(cfg.hi);
            if let Some((key, x, z)) = y.first_mismatch_in(&want, cfg.lo, cfg.hi) {
                r.fail(Witness::from_states(alg, format!("x^{{{}}}", render_ratio(&key.exp)), a.state(&x), a.state(&z), &sample));
            }
        }
        Err(e) => r.inconclusive(format!("{sample}: {e}")),
    }
    r
}

/// Weak commutativity followed by weak associativity with the measured order
/// (raised, if needed, so that `x0^k Y(u, x0) v` has no negative powers).
pub fn check_locality<A: ModuleAction>(a: &A, u: &FockVector, v: &FockVector, w: &A::Elem, cfg: &CheckConfig) -> Report {
    let comm = find_commutativity_order(a, u, v, w, cfg);
    let Some(k) = comm.k_used.filter(|_| comm.passed()) else {
        return comm;
    };
    let k = match a.alg().vertex_series(u, v, exi(-1)) {
        Ok(s) => s.terms().map(|(key, _)| (-key.exp).ceil().to_integer() as u32).max().unwrap_or(0).max(k),
        Err(_) => k,
    };
    let mut r = check_weak_associativity(a, u, v, w, k, cfg);
    r.identity_id = "weak-commutativity+associativity".into();
    r.k_used = Some(k);
    r
}

/// Vacuum, optional sigma-compatibility, and weak commutativity/associativity
/// over all triples `(u, v, w)`. Without `sigma` this is the module variant.
pub fn check_twisted_module<A: ModuleAction>(
    a: &A,
    sigma: Option<&Automorphism>,
    us: &[FockVector],
    ws: &[A::Elem],
    cfg: &CheckConfig,
) -> Report {
    let id = if sigma.is_some() { "twisted-module" } else { "module-variant" };
    let mut r = base_report(id, a, cfg);
    if let Some(s) = sigma {
        r.config.insert("sigma".into(), s.label());
    }
    r.config.insert("depth".into(), cfg.depth.to_string());
    r.config.insert("kmax".into(), cfg.k_max.to_string());
    r.config.insert("seed".into(), cfg.seed.to_string());
    let mut parts: Vec<Report> = ws.par_iter().map(|w| check_vacuum(a, w, cfg)).collect();
    if let Some(s) = sigma {
        let pairs: Vec<(&FockVector, &A::Elem)> = us.iter().flat_map(|v| ws.iter().map(move |w| (v, w))).collect();
        parts.extend(pairs.par_iter().map(|(v, w)| check_sigma_compat(a, s, v, w, cfg)).collect::<Vec<_>>());
    }
    let triples: Vec<(&FockVector, &FockVector, &A::Elem)> =
        us.iter().flat_map(|u| us.iter().flat_map(move |v| ws.iter().map(move |w| (u, v, w)))).collect();
    parts.extend(triples.par_iter().map(|(u, v, w)| check_locality(a, u, v, w, cfg)).collect::<Vec<_>>());
    let mut k_max_used = None;
    for p in parts {
        k_max_used = k_max_used.max(p.k_used);
        r.samples.extend(p.samples.iter().map(|s| format!("{}: {s}", p.identity_id)));
        let p = Report { k_used: None, ..p };
        r.absorb(p);
    }
    r.k_used = k_max_used;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::{Certificate, PseudoMap};
    use crate::fock::{AlgebraSpec, Monomial, Sector};
    use crate::series::{ex, ScalarSeries};
    use crate::verify::{basis_states, Deformed, Outcome, Untwisted};

    fn cfg() -> CheckConfig {
        CheckConfig::default()
    }

    #[test]
    fn heisenberg_commutativity_order_is_two() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let a = Untwisted { alg: &alg };
        let w = alg.momentum_vacuum(ex(1, 2));
        let r = find_commutativity_order(&a, &alg.h_state(), &alg.h_state(), &w, &cfg());
        assert_eq!((r.outcome, r.k_used), (Outcome::Pass, Some(2)));
        let r = find_commutativity_order(&a, &alg.vacuum(), &alg.h_state(), &w, &cfg());
        assert_eq!(r.k_used, Some(0));
        let tight = CheckConfig { k_max: 1, ..cfg() };
        let r = find_commutativity_order(&a, &alg.h_state(), &alg.h_state(), &w, &tight);
        assert_eq!(r.outcome, Outcome::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn lattice_commutativity_order_measured() {
        let alg = AlgebraSpec::lattice(1, ex(1, 4));
        let a = Untwisted { alg: &alg };
        let e = alg.exp_state(1);
        let r = find_commutativity_order(&a, &e, &e, &alg.exp_state(-1), &CheckConfig::window(-4, 4));
        assert_eq!((r.outcome, r.k_used), (Outcome::Pass, Some(0)));
        let r = find_commutativity_order(&a, &e, &alg.exp_state(-1), &alg.vacuum(), &CheckConfig::window(-4, 4));
        assert_eq!((r.outcome, r.k_used), (Outcome::Pass, Some(2)));
    }

    #[test]
    fn weak_associativity_heisenberg() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let a = Untwisted { alg: &alg };
        let w = alg.momentum_vacuum(ex(3, 2));
        let h = alg.h_state();
        assert!(check_weak_associativity(&a, &h, &h, &w, 2, &cfg()).passed());
        assert!(check_weak_associativity(&a, &alg.vacuum(), &h, &w, 0, &cfg()).passed());
        let bad = check_weak_associativity(&a, &h, &h, &w, 1, &cfg());
        assert_eq!(bad.outcome, Outcome::Fail);
    }

    #[test]
    fn untwisted_module_passes() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let a = Untwisted { alg: &alg };
        let us = basis_states(&alg, &[Sector::vacuum()], 2);
        let ws = basis_states(&alg, &[Sector::momentum(ex(1, 2))], 1);
        let c = CheckConfig::window(-4, 4);
        let r = check_twisted_module(&a, Some(&Automorphism::Identity), &us, &ws, &c);
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.k_used, Some(4));
    }

    #[test]
    fn deformed_modules_pass() {
        let alg = AlgebraSpec::heisenberg(exi(1));
        let phi = PseudoMap::exp(PseudoMap::x_vf(alg.h_state(), ScalarSeries::z_pow(exi(-2))), Certificate::Nilpotent(8));
        let a = Deformed { alg: &alg, delta: phi };
        let us = basis_states(&alg, &[Sector::vacuum()], 2);
        let ws = basis_states(&alg, &[Sector::vacuum()], 1);
        let c = CheckConfig::window(-4, 4);
        assert!(check_twisted_module(&a, None, &us, &ws, &c).passed());
    }

    #[test]
    fn lattice_delta_twisted_module_passes() {
        let c = CheckConfig::window(-4, 4);
        let lat = AlgebraSpec::lattice(1, ex(1, 4));
        let d = PseudoMap::delta_h(&lat, lat.h_state(), false).unwrap();
        let a = Deformed { alg: &lat, delta: d };
        let us = vec![lat.h_state(), lat.exp_state(1), lat.exp_state(-1)];
        let ws = vec![lat.exp_state(1), FockVector::from_monomial(Monomial::new(vec![1], Sector::charge(-1)))];
        let r = check_twisted_module(&a, Some(&Automorphism::SigmaH(1)), &us, &ws, &c);
        assert!(r.passed(), "{}", r.summary());
        assert!(r.notes.iter().any(|n| n.contains("fractional-power")));
        let r = check_sigma_compat(&a, &Automorphism::SigmaH(2), &us[1], &ws[0], &c);
        assert_eq!(r.outcome, Outcome::Fail);
        assert!(r.witness.unwrap().key.contains("/2"));
    }

    #[test]
    fn contragredient_is_twisted_by_double_l0_phase() {
        use crate::dual::{Contragredient, DualVector};
        use crate::fock::OmegaChoice;
        use crate::verify::Dual;
        let c = CheckConfig::window(-3, 3);
        let lat = AlgebraSpec::lattice(1, ex(1, 4));
        let a = Dual { contra: Contragredient::new(&lat, lat.omega(OmegaChoice::Tilde).unwrap()) };
        let us = vec![lat.h_state(), lat.exp_state(1), lat.exp_state(-1)];
        let ws = vec![
            DualVector::dual_of(&lat.exp_state(1)),
            DualVector::basis(Monomial::new(vec![1], Sector::charge(-1))),
        ];
        let sigma = Automorphism::L0Phase { t: exi(2), omega: OmegaChoice::Tilde };
        let r = check_twisted_module(&a, Some(&sigma), &us, &ws, &c);
        assert!(r.passed(), "{}", r.summary());
        let r = check_sigma_compat(&a, &Automorphism::Identity, &us[1], &ws[0], &c);
        assert_eq!(r.outcome, Outcome::Fail);
    }
}
