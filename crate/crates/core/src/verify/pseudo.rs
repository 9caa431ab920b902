use rayon::prelude::*;

use super::samples::CheckConfig;
use super::{Report, Witness, WindowSpec};
use crate::deform::{d_compat_sides, map_after_vertex, tensor_vertex, vertex_left, PseudoMap, TensorSeries, TensorVec};
use crate::error::Result;
use crate::fock::{AlgebraSpec, FockVector};
use crate::scalars::render_ratio;

fn base_report(id: &str, alg: &AlgebraSpec, map: &PseudoMap, cfg: &CheckConfig) -> Report {
    let mut r = Report::new(id, alg, WindowSpec::new(cfg.lo, cfg.hi));
    r.config.insert("map".into(), map.describe(alg));
    r
}

fn pair_label(alg: &AlgebraSpec, u: &FockVector, v: &FockVector) -> String {
    format!("u={}; v={}", alg.render(u), alg.render(v))
}

/// Compares two `x`-series of tensors on `[lo, hi]`.
fn compare_x(alg: &AlgebraSpec, r: &mut Report, left: &TensorSeries, right: &TensorSeries, cfg: &CheckConfig, sample: &str) {
    if let Some((k, a, b)) = left.first_mismatch_in(right, cfg.lo, cfg.hi) {
        let outer = format!("x^{{{}}}", render_ratio(&k.exp));
        r.fail(Witness::from_tensors(alg, &outer, &a, &b, sample));
    }
}

fn check_d_compat(alg: &AlgebraSpec, map: &PseudoMap, v: &FockVector, r: &mut Report) {
    let sample = alg.render(v);
    match d_compat_sides(alg, map, v) {
        Ok((left, right)) => {
            if !left.agrees_with(&right) {
                r.fail(Witness::from_tensors(alg, "D-compatibility", &left, &right, &sample));
            }
        }
        Err(e) => r.inconclusive(format!("D-compatibility at {sample}: {e}")),
    }
}

fn derivation_sides(
    alg: &AlgebraSpec,
    psi: &PseudoMap,
    u: &FockVector,
    v: &FockVector,
    hi: crate::series::Exponent,
) -> Result<(TensorSeries, TensorSeries)> {
    let left = map_after_vertex(alg, psi, u, v, hi)?.sub(&vertex_left(alg, u, &psi.apply(alg, v)?, hi)?);
    let right = tensor_vertex(alg, &psi.apply(alg, u)?, &TensorVec::constant(v.clone()), hi)?;
    Ok((left, right))
}

/// `Psi Y(u, x) v - (Y(u, x) (x) 1) Psi(v) = Y_ten(Psi(u), x)(v (x) 1)`, plus
/// `Psi(1) = 0` and D-compatibility on `u` and `v`.
pub fn check_pseudo_derivation(alg: &AlgebraSpec, psi: &PseudoMap, u: &FockVector, v: &FockVector, cfg: &CheckConfig) -> Report {
    let mut r = base_report("pseudo-derivation", alg, psi, cfg);
    let sample = pair_label(alg, u, v);
    r.samples.push(sample.clone());
    match psi.apply(alg, &alg.vacuum()) {
        Ok(img) => {
            if !img.agrees_with(&TensorVec::exact()) {
                r.fail(Witness::from_tensors(alg, "Psi(1)", &img, &TensorVec::exact(), "1"));
            }
        }
        Err(e) => r.inconclusive(format!("Psi(1): {e}")),
    }
    match derivation_sides(alg, psi, u, v, cfg.hi) {
        Ok((left, right)) => compare_x(alg, &mut r, &left, &right, cfg, &sample),
        Err(e) => r.inconclusive(format!("{sample}: {e}")),
    }
    check_d_compat(alg, psi, u, &mut r);
    check_d_compat(alg, psi, v, &mut r);
    r
}

/// `Delta Y(u, x) v = Y_ten(Delta(u), x) Delta(v)`, plus `Delta(1) = 1 (x) 1` and
/// D-compatibility on `u` and `v`.
pub fn check_pseudo_endo(alg: &AlgebraSpec, delta: &PseudoMap, u: &FockVector, v: &FockVector, cfg: &CheckConfig) -> Report {
    let mut r = base_report("pseudo-endomorphism", alg, delta, cfg);
    let sample = pair_label(alg, u, v);
    r.samples.push(sample.clone());
    let vac = alg.vacuum();
    match delta.apply(alg, &vac) {
        Ok(img) => {
            let one = TensorVec::constant(vac.clone());
            if !img.agrees_with(&one) {
                r.fail(Witness::from_tensors(alg, "Delta(1)", &img, &one, "1"));
            }
        }
        Err(e) => r.inconclusive(format!("Delta(1): {e}")),
    }
    let sides = || -> Result<(TensorSeries, TensorSeries)> {
        let left = map_after_vertex(alg, delta, u, v, cfg.hi)?;
        let right = tensor_vertex(alg, &delta.apply(alg, u)?, &delta.apply(alg, v)?, cfg.hi)?;
        Ok((left, right))
    };
    match sides() {
        Ok((left, right)) => compare_x(alg, &mut r, &left, &right, cfg, &sample),
        Err(e) => r.inconclusive(format!("{sample}: {e}")),
    }
    check_d_compat(alg, delta, u, &mut r);
    check_d_compat(alg, delta, v, &mut r);
    r
}

fn over_pairs(
    id: &str,
    alg: &AlgebraSpec,
    map: &PseudoMap,
    samples: &[FockVector],
    cfg: &CheckConfig,
    check: impl Fn(&FockVector, &FockVector) -> Report + Sync,
) -> Report {
    let pairs: Vec<(&FockVector, &FockVector)> = samples.iter().flat_map(|u| samples.iter().map(move |v| (u, v))).collect();
    let reports: Vec<Report> = pairs.par_iter().map(|(u, v)| check(u, v)).collect();
    let mut r = base_report(id, alg, map, cfg);
    for sub in reports {
        r.samples.extend(sub.samples.iter().cloned());
        r.absorb(sub);
    }
    r
}

/// [`check_pseudo_derivation`] on every ordered pair of samples.
pub fn check_pseudo_derivation_all(alg: &AlgebraSpec, psi: &PseudoMap, samples: &[FockVector], cfg: &CheckConfig) -> Report {
    over_pairs("pseudo-derivation", alg, psi, samples, cfg, |u, v| check_pseudo_derivation(alg, psi, u, v, cfg))
}

/// [`check_pseudo_endo`] on every ordered pair of samples.
pub fn check_pseudo_endo_all(alg: &AlgebraSpec, delta: &PseudoMap, samples: &[FockVector], cfg: &CheckConfig) -> Report {
    over_pairs("pseudo-endomorphism", alg, delta, samples, cfg, |u, v| check_pseudo_endo(alg, delta, u, v, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::Certificate;
    use crate::fock::Sector;
    use crate::series::{ex, exi, ScalarSeries};
    use crate::verify::{basis_states, Outcome};

    fn heis() -> AlgebraSpec {
        AlgebraSpec::heisenberg(exi(1))
    }

    #[test]
    fn x_vf_is_a_pseudo_derivation() {
        let alg = heis();
        let h = alg.h_state();
        let psi = PseudoMap::x_vf(h.clone(), ScalarSeries::z_pow(exi(-1)));
        let r = check_pseudo_derivation(&alg, &psi, &h, &h, &CheckConfig::default());
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn zero_map_passes() {
        let alg = heis();
        let h = alg.h_state();
        let r = check_pseudo_derivation(&alg, &PseudoMap::Zero, &h, &h, &CheckConfig::default());
        assert!(r.passed());
    }

    #[test]
    fn mode_times_z_fails_with_hand_computed_witness() {
        let alg = heis();
        let h = alg.h_state();
        let psi = PseudoMap::ModeTimes { v: h.clone(), n: 1, f: ScalarSeries::z_pow(exi(1)) };
        let r = check_pseudo_derivation(&alg, &psi, &h, &h, &CheckConfig::default());
        assert_eq!(r.outcome, Outcome::Fail);
        let w = r.witness.unwrap();
        // By hand: Psi Y(h,x)h - Y(h,x)Psi(h) = h (x) z, while
        // Y_ten(1 (x) z, x)(h (x) 1) = h (x) (z + x); first difference at x^1.
        assert_eq!(w.key, "x^{1} | z^{0}");
        assert_eq!((w.monomial.as_str(), w.left.as_str(), w.right.as_str()), ("h(-1)|0>", "0", "1"));
    }

    #[test]
    fn x_vf_depth_two_samples() {
        let alg = heis();
        let us = basis_states(&alg, &[Sector::vacuum()], 2);
        let cfg = CheckConfig::window(-4, 4);
        for f in [ScalarSeries::z_pow(exi(-3)), ScalarSeries::z_pow(ex(1, 2)), ScalarSeries::y()] {
            let psi = PseudoMap::x_vf(alg.h_state(), f);
            let r = check_pseudo_derivation_all(&alg, &psi, &us, &cfg);
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn delta_and_identity_are_pseudo_endomorphisms() {
        let alg = heis();
        let us = basis_states(&alg, &[Sector::vacuum()], 2);
        let cfg = CheckConfig::window(-4, 4);
        for d in [PseudoMap::Identity, PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap()] {
            let r = check_pseudo_endo_all(&alg, &d, &us, &cfg);
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn exp_y_is_a_pseudo_endomorphism() {
        let alg = heis();
        let h = alg.h_state();
        let d = PseudoMap::exp(PseudoMap::x_vf(h.clone(), ScalarSeries::y()), Certificate::Y);
        let r = check_pseudo_endo(&alg, &d, &h, &h, &CheckConfig::window(-4, 4));
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn broken_endo_fails() {
        let alg = heis();
        let h = alg.h_state();
        let d = PseudoMap::x_vf(h.clone(), ScalarSeries::z_pow(exi(-1)));
        let r = check_pseudo_endo(&alg, &d, &h, &h, &CheckConfig::default());
        assert_eq!(r.outcome, Outcome::Fail);
    }
}
