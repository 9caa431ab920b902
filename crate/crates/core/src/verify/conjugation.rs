//! The operator identities behind the contragredient computations, checked
//! coefficient-wise on basis states.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::samples::CheckConfig;
use super::{Report, Witness, WindowSpec};
use crate::error::Result;
use crate::fock::{AlgebraSpec, ConformalVector, FockVector, OmegaChoice, StateSeries};
use crate::scalars::{binomial, big, inv_factorial, render_ratio, Cyclotomic};
use crate::series::{exi, BiSeries, Exponent, Key};

/// Keys are `(z0 exponent, z exponent)`.
type Table = BiSeries<FockVector>;

fn q(c: num_rational::BigRational) -> Cyclotomic {
    Cyclotomic::from_rational(c)
}

/// `z^{p L(0)} v`, grouped by exponent.
fn z_l0(alg: &AlgebraSpec, om: &ConformalVector, v: &FockVector, p: i64) -> Result<BTreeMap<Exponent, FockVector>> {
    let mut out: BTreeMap<Exponent, FockVector> = BTreeMap::new();
    for (m, c) in v.terms() {
        let e = alg.weight(m, om)? * p;
        out.entry(e).or_default().add_term(m.clone(), c.clone());
    }
    out.retain(|_, v| !v.is_empty());
    Ok(out)
}

/// `L(1)^j v / j!` for `j = 0, 1, ...` until it vanishes.
fn l1_ladder(alg: &AlgebraSpec, om: &ConformalVector, v: &FockVector) -> Result<Vec<FockVector>> {
    let mut out = Vec::new();
    let mut cur = v.clone();
    let mut j = 0u32;
    while !cur.is_empty() {
        out.push(cur.scaled(&q(inv_factorial(j))));
        cur = alg.virasoro(1, &cur, om)?;
        j += 1;
    }
    Ok(out)
}

fn series_of(map: BTreeMap<Exponent, FockVector>) -> StateSeries {
    let mut out = StateSeries::exact();
    for (e, v) in map {
        out.add_term(Key::pow(e), v);
    }
    out
}

/// `z^{L(0)} L(-1) z^{-L(0)} b` against `z L(-1) b`. With `literal`, the
/// uncorrected reading `z^{L(0)} L(-1) b` against `z^{-1} L(-1) z^{L(0)} b`.
pub fn l_minus_one_sides(alg: &AlgebraSpec, om: &ConformalVector, b: &FockVector, literal: bool) -> Result<(StateSeries, StateSeries)> {
    let lm1 = |v: &FockVector| alg.virasoro(-1, v, om);
    if literal {
        let left = series_of(z_l0(alg, om, &lm1(b)?, 1)?);
        let mut right = StateSeries::exact();
        for (e, c) in z_l0(alg, om, b, 1)? {
            right.add_term(Key::pow(e - 1), lm1(&c)?);
        }
        return Ok((left, right));
    }
    let mut left = StateSeries::exact();
    for (e, c) in z_l0(alg, om, b, -1)? {
        for (e2, c2) in z_l0(alg, om, &lm1(&c)?, 1)? {
            left.add_term(Key::pow(e + e2), c2);
        }
    }
    let mut right = StateSeries::exact();
    right.add_term(Key::pow(exi(1)), lm1(b)?);
    Ok((left, right))
}

/// `z^{L(0)} Y(a, z0) z^{-L(0)} w` against `Y(z^{L(0)} a, z0 z) w`.
fn y_scaling_sides(alg: &AlgebraSpec, om: &ConformalVector, a: &FockVector, w: &FockVector, hi: Exponent) -> Result<(Table, Table)> {
    let mut left = Table::new(Some(hi), None);
    for (e, c) in z_l0(alg, om, w, -1)? {
        for (k0, s) in alg.vertex_series(a, &c, hi)?.terms() {
            for (e2, c2) in z_l0(alg, om, s, 1)? {
                left.add_term(k0.exp, e + e2, c2);
            }
        }
    }
    let mut right = Table::new(Some(hi), None);
    for (ea, ca) in z_l0(alg, om, a, 1)? {
        for (k0, s) in alg.vertex_series(&ca, w, hi)?.terms() {
            right.add_term(k0.exp, k0.exp + ea, s.clone());
        }
    }
    Ok((left, right))
}

/// `z^{L(0)} e^{z0 L(1)} w` against `e^{z0 z^{-1} L(1)} z^{L(0)} w`.
fn exp_l1_scaling_sides(alg: &AlgebraSpec, om: &ConformalVector, w: &FockVector) -> Result<(Table, Table)> {
    let mut left = Table::new(None, None);
    for (j, c) in l1_ladder(alg, om, w)?.into_iter().enumerate() {
        for (e, c2) in z_l0(alg, om, &c, 1)? {
            left.add_term(exi(j as i64), e, c2);
        }
    }
    let mut right = Table::new(None, None);
    for (e, c) in z_l0(alg, om, w, 1)? {
        for (j, c2) in l1_ladder(alg, om, &c)?.into_iter().enumerate() {
            right.add_term(exi(j as i64), e - exi(j as i64), c2);
        }
    }
    Ok((left, right))
}

/// `e^{z L(1)} Y(a, z0) e^{-z L(1)} w` against
/// `Y(e^{z(1 - z z0) L(1)} (1 - z z0)^{-2 L(0)} a, z0 / (1 - z z0)) w`.
fn exp_l1_conjugation_sides(alg: &AlgebraSpec, om: &ConformalVector, a: &FockVector, w: &FockVector, hi: Exponent) -> Result<(Table, Table)> {
    let mut left = Table::new(Some(hi), None);
    for (j, c) in l1_ladder(alg, om, w)?.into_iter().enumerate() {
        let c = if j % 2 == 1 { c.scaled(&Cyclotomic::from_int(-1)) } else { c };
        for (k0, s) in alg.vertex_series(a, &c, hi)?.terms() {
            for (i, s2) in l1_ladder(alg, om, s)?.into_iter().enumerate() {
                left.add_term(k0.exp, exi((i + j) as i64), s2);
            }
        }
    }
    let mut right = Table::new(Some(hi), None);
    for (wa, ah) in z_l0(alg, om, a, 1)? {
        for (j, aj) in l1_ladder(alg, om, &ah)?.into_iter().enumerate() {
            for (k0, s) in alg.vertex_series(&aj, w, hi)?.terms() {
                // (1 - z z0)^{j - 2 wt a + m + 1} with z0^{-m-1} = z0^{k}
                let pow = exi(j as i64) - wa * 2 - k0.exp;
                let steps = (hi - k0.exp).floor().to_integer().to_u32().unwrap_or(0);
                for i in 0..=steps {
                    let b = binomial(&big(pow), i);
                    let b = if i % 2 == 1 { -b } else { b };
                    right.add_term(k0.exp + exi(i as i64), exi(j as i64 + i as i64), s.scaled(&q(b)));
                }
            }
        }
    }
    Ok((left, right))
}

/// `e^{z L~(1)} e^{-z L(1)} w` against `exp(sum_k (h(k)/k) (-z)^k) w`, where
/// `L~(1) = L(1) - h(1)` comes from the shifted conformal vector.
fn h_lemma_sides(alg: &AlgebraSpec, w: &FockVector) -> Result<(StateSeries, StateSeries)> {
    let om = alg.omega(OmegaChoice::Std)?;
    let tilde = alg.omega(OmegaChoice::Tilde)?;
    let mut left = StateSeries::exact();
    for (j, c) in l1_ladder(alg, &om, w)?.into_iter().enumerate() {
        let c = if j % 2 == 1 { c.scaled(&Cyclotomic::from_int(-1)) } else { c };
        for (i, c2) in l1_ladder(alg, &tilde, &c)?.into_iter().enumerate() {
            left.add_term(Key::pow(exi((i + j) as i64)), c2);
        }
    }
    let h = alg.h_state();
    let step = |t: &StateSeries| -> Result<StateSeries> {
        let mut out = StateSeries::exact();
        for (k, s) in t.terms() {
            let mut n = 1i64;
            loop {
                let img = alg.vertex_coeff(&h, n, s)?;
                if img.is_empty() && n > s.terms().map(|(m, _)| m.level() as i64).max().unwrap_or(0) {
                    break;
                }
                let c = crate::scalars::rat(if n % 2 == 1 { -1 } else { 1 }, n);
                out.add_term(Key::pow(k.exp + exi(n)), img.scaled(&q(c)));
                n += 1;
            }
        }
        Ok(out)
    };
    let mut term = StateSeries::exact();
    term.add_term(Key::pow(exi(0)), w.clone());
    let mut right = term.clone();
    let mut n = 1i64;
    while !term.is_empty() {
        term = step(&term)?.scale(&q(crate::scalars::rat(1, n)));
        right = right.add(&term);
        n += 1;
    }
    Ok((left, right))
}

fn table_mismatch(left: &Table, right: &Table, lo: Exponent) -> Option<((Exponent, Exponent), FockVector, FockVector)> {
    let d = left.sub(right);
    let key = d.terms().map(|(&k, _)| k).find(|(s0, _)| *s0 >= lo)?;
    let at = |t: &Table| t.get(key.0, key.1).unwrap_or_default();
    Some((key, at(left), at(right)))
}

fn fail_table(alg: &AlgebraSpec, r: &mut Report, id: &str, sides: Result<(Table, Table)>, lo: Exponent, sample: &str) {
    match sides {
        Ok((left, right)) => {
            if let Some(((s0, s), a, b)) = table_mismatch(&left, &right, lo) {
                let key = format!("{id} | z0^{{{}}} z^{{{}}}", render_ratio(&s0), render_ratio(&s));
                r.fail(Witness::from_states(alg, key, &a, &b, sample));
            }
        }
        Err(e) => r.inconclusive(format!("{id} at {sample}: {e}")),
    }
}

fn fail_series(alg: &AlgebraSpec, r: &mut Report, id: &str, sides: Result<(StateSeries, StateSeries)>, sample: &str) {
    match sides {
        Ok((left, right)) => {
            if let Some((k, a, b)) = left.first_mismatch(&right) {
                let key = format!("{id} | z^{{{}}}", render_ratio(&k.exp));
                r.fail(Witness::from_states(alg, key, &a, &b, sample));
            }
        }
        Err(e) => r.inconclusive(format!("{id} at {sample}: {e}")),
    }
}

/// All five identities for the conformal vector `om`, with `a` ranging over
/// `avs` and the state acted on over `ws`. The `h`-lemma always pairs the
/// standard and shifted conformal vectors.
pub fn check_conjugations(alg: &AlgebraSpec, om: &ConformalVector, avs: &[FockVector], ws: &[FockVector], cfg: &CheckConfig) -> Report {
    let mut r = Report::new("conjugations", alg, WindowSpec::new(cfg.lo, cfg.hi));
    r.config.insert("omega_tilt".into(), render_ratio(&om.tilt));
    for w in ws {
        let sample = format!("w={}", alg.render(w));
        r.samples.push(sample.clone());
        fail_series(alg, &mut r, "zL0-Lminus1", l_minus_one_sides(alg, om, w, false), &sample);
        fail_table(alg, &mut r, "zL0-expL1", exp_l1_scaling_sides(alg, om, w), cfg.lo, &sample);
        fail_series(alg, &mut r, "h-lemma", h_lemma_sides(alg, w), &sample);
        for a in avs {
            let sample = format!("a={}; w={}", alg.render(a), alg.render(w));
            r.samples.push(sample.clone());
            fail_table(alg, &mut r, "zL0-Y", y_scaling_sides(alg, om, a, w, cfg.hi), cfg.lo, &sample);
            fail_table(alg, &mut r, "expL1-Y", exp_l1_conjugation_sides(alg, om, a, w, cfg.hi), cfg.lo, &sample);
        }
    }
    r
}
