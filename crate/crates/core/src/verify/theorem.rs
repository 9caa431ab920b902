use super::samples::CheckConfig;
use super::{Report, Witness, WindowSpec};
use crate::deform::{twist_action, PseudoMap};
use crate::dual::double_dual;
use crate::error::Result;
use crate::fock::{AlgebraSpec, FockVector, OmegaChoice, StateSeries};
use crate::scalars::Cyclotomic;
use crate::series::{render_key, Exponent};

fn compare_states(alg: &AlgebraSpec, r: &mut Report, left: &StateSeries, right: &StateSeries, lo: Exponent, hi: Exponent, sample: &str) {
    if let Some((k, a, b)) = left.first_mismatch_in(right, lo, hi) {
        let key = render_key(&k);
        let key = if key.is_empty() { "z^{0}".to_string() } else { key };
        r.fail(Witness::from_states(alg, key, &a, &b, sample));
    }
}

/// `e^{-pi i h(0) / 2} a`, monomial by monomial.
pub fn quarter_turn(alg: &AlgebraSpec, a: &FockVector) -> Result<FockVector> {
    a.map_linear(|m| {
        let ph = Cyclotomic::phase(&(-alg.h0(&m.sector) / 4), alg.cyclo_order)?;
        Ok(FockVector::term(m.clone(), ph))
    })
}

/// The two sides of the main identity: `Y(Delta(h, z) e^{-pi i h(0)/2} a, z) u`
/// and `(Y')'(a, z) u` with the inner dual taken for `omega` and the outer one
/// for the shifted conformal vector.
pub fn thm_main_sides(alg: &AlgebraSpec, a: &FockVector, u: &FockVector, hi: Exponent) -> Result<(StateSeries, StateSeries)> {
    let delta = PseudoMap::delta_h(alg, alg.h_state(), false)?;
    let left = twist_action(alg, &delta, &quarter_turn(alg, a)?, u, hi)?;
    let omega = alg.omega(OmegaChoice::Std)?;
    let tilde = alg.omega(OmegaChoice::Tilde)?;
    let right = double_dual(alg, &omega, &tilde, a, u, hi)?;
    Ok((left, right))
}

/// Checks the isomorphism of the double dual with the `Delta`-twisted module
/// on every pair `(a, u)`.
pub fn check_thm_main(alg: &AlgebraSpec, avs: &[FockVector], us: &[FockVector], cfg: &CheckConfig) -> Report {
    let mut r = Report::new("thm-main", alg, WindowSpec::new(cfg.lo, cfg.hi));
    r.config.insert("inner".into(), "std".into());
    r.config.insert("outer".into(), "tilde".into());
    for a in avs {
        for u in us {
            let sample = format!("a={}; u={}", alg.render(a), alg.render(u));
            r.samples.push(sample.clone());
            match thm_main_sides(alg, a, u, cfg.hi) {
                Ok((left, right)) => compare_states(alg, &mut r, &left, &right, cfg.lo, cfg.hi, &sample),
                Err(e) => r.inconclusive(format!("{sample}: {e}")),
            }
        }
    }
    r
}

/// `(Y')'(v, z) w` against `Y(e^{2 pi i L(0)} v, z) w`, both duals taken for
/// the same conformal vector.
pub fn check_double_dual(alg: &AlgebraSpec, choice: OmegaChoice, vs: &[FockVector], ws: &[FockVector], cfg: &CheckConfig) -> Report {
    let mut r = Report::new("double-dual", alg, WindowSpec::new(cfg.lo, cfg.hi));
    r.config.insert("omega".into(), format!("{choice:?}").to_lowercase());
    let om = match alg.omega(choice) {
        Ok(om) => om,
        Err(e) => {
            r.inconclusive(e.to_string());
            return r;
        }
    };
    for v in vs {
        for w in ws {
            let sample = format!("v={}; w={}", alg.render(v), alg.render(w));
            r.samples.push(sample.clone());
            let sides = || -> Result<(StateSeries, StateSeries)> {
                let left = double_dual(alg, &om, &om, v, w, cfg.hi)?;
                let right = alg.vertex_series(&alg.tau(v, &om)?, w, cfg.hi)?;
                Ok((left, right))
            };
            match sides() {
                Ok((left, right)) => compare_states(alg, &mut r, &left, &right, cfg.lo, cfg.hi, &sample),
                Err(e) => r.inconclusive(format!("{sample}: {e}")),
            }
        }
    }
    r
}
