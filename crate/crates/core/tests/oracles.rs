//! Reference values pinned by oracles that do not go through the engine's
//! own derivations.

use voa_forge::cli::parse::parse_state;
use voa_forge::deform::{deformed_mode, twist_action, PseudoMap};
use voa_forge::dual::double_dual;
use voa_forge::fock::{AlgebraSpec, FockVector, OmegaChoice};
use voa_forge::scalars::rat;
use voa_forge::series::{ex, exi, Exponent};
use voa_forge::suite::phi;

/// `c = 1 - 12 gamma a^2` for `omega = h(-1)^2 / (2 gamma) + a h(-2)`, by Wick's theorem.
fn wick_central_charge(gamma: Exponent, a: Exponent) -> Exponent {
    exi(1) - gamma * a * a * 12
}

#[test]
fn tilde_central_charge_against_wick_formula() {
    for gamma in [exi(1), exi(2), ex(1, 2), ex(3, 5)] {
        let alg = AlgebraSpec::heisenberg(gamma);
        let om = alg.omega(OmegaChoice::Tilde).unwrap();
        let want_state = parse_state(&alg, &format!("{} h(-1)^2|0> + 1/2 h(-2)|0>", ex(1, 2) / gamma)).unwrap();
        assert_eq!(om.state, want_state);
        let c = alg.central_charge(&om).unwrap();
        let want = wick_central_charge(gamma, ex(1, 2));
        assert_eq!(c, rat(*want.numer(), *want.denom()));
    }
    let alg = AlgebraSpec::heisenberg(exi(1));
    assert_eq!(alg.central_charge(&alg.omega(OmegaChoice::Tilde).unwrap()).unwrap(), rat(-2, 1));
}

#[test]
fn phi_one_mode_is_shifted_by_minus_one() {
    let alg = AlgebraSpec::heisenberg(exi(1));
    let h = alg.h_state();
    let delta = phi(&alg, 1);
    let mut v = alg.vacuum();
    for m in 1..=5 {
        v = deformed_mode(&alg, &delta, &h, exi(1), &v).unwrap();
        let sign = if m % 2 == 0 { "" } else { "-" };
        assert_eq!(v, parse_state(&alg, &format!("{sign}|0>")).unwrap(), "power {m}");
    }
    // away from n = k the mode is untouched: h_{-1}|0> = h(-1)|0>
    let w = deformed_mode(&alg, &delta, &h, exi(-1), &alg.vacuum()).unwrap();
    assert_eq!(w, parse_state(&alg, "h(-1)|0>").unwrap());
}

#[test]
fn vacuum_sides_of_the_main_isomorphism_are_constant() {
    let alg = AlgebraSpec::lattice(1, ex(1, 4));
    let u = parse_state(&alg, "a(-1)e(-1)").unwrap();
    let delta = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
    let left = twist_action(&alg, &delta, &alg.vacuum(), &u, exi(3)).unwrap();
    let om = alg.omega(OmegaChoice::Std).unwrap();
    let tilde = alg.omega(OmegaChoice::Tilde).unwrap();
    let right = double_dual(&alg, &om, &tilde, &alg.vacuum(), &u, exi(3)).unwrap();
    for side in [&left, &right] {
        let terms: Vec<(String, FockVector)> = side.terms().map(|(k, c)| (k.to_string(), c.clone())).collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].1, u);
    }
}

#[test]
fn twisted_lattice_field_has_half_integer_exponent() {
    // h(0) e^alpha = 1/2, so Y(Delta(h, x) e^alpha, x) e^alpha starts at x^{1/2 + 1}
    let alg = AlgebraSpec::lattice(1, ex(1, 4));
    let e = alg.exp_state(1);
    let delta = PseudoMap::delta_h(&alg, alg.h_state(), false).unwrap();
    let y = twist_action(&alg, &delta, &e, &e, exi(4)).unwrap();
    let (k, c) = y.terms().next().unwrap();
    assert_eq!(k.exp, ex(5, 2));
    assert_eq!(c, &parse_state(&alg, "e(2)").unwrap());
}
