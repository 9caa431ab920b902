//! Contragredient modules in the monomial dual basis.

use std::fmt;

use crate::error::{Result, VoaError};
use crate::fock::{AlgebraSpec, ConformalVector, FockVector, Monomial, Sector, StateSeries};
use crate::scalars::{inv_factorial, Cyclotomic};
use crate::series::{exi, Coeff, ExtSeries, Exponent, Key};

/// A finite combination of dual-basis functionals `m*`.
#[derive(Clone, PartialEq, Default)]
pub struct DualVector(pub FockVector);

impl DualVector {
    pub fn basis(m: Monomial) -> Self {
        DualVector(FockVector::from_monomial(m))
    }

    pub fn dual_of(v: &FockVector) -> Self {
        DualVector(v.clone())
    }
}

impl Coeff for DualVector {
    fn zero() -> Self {
        DualVector(FockVector::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.0.add_assign_ref(&other.0);
    }
    fn scale(&self, c: &Cyclotomic) -> Self {
        DualVector(self.0.scaled(c))
    }
}

impl fmt::Debug for DualVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dual({:?})", self.0)
    }
}

pub type DualSeries = ExtSeries<DualVector>;

/// `<wp, w>` in the dual basis.
pub fn pair(wp: &DualVector, w: &FockVector) -> Cyclotomic {
    let mut out = Cyclotomic::zero();
    for (m, c) in wp.0.terms() {
        let d = w.get(m);
        if !d.is_zero() {
            out += &(c * &d);
        }
    }
    out
}

/// `e^{2 pi i phase L(0)} z^{z_power L(0)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct L0Op {
    pub z_power: Exponent,
    pub phase: Exponent,
}

impl L0Op {
    pub const fn new(z_power: (i64, i64), phase: (i64, i64)) -> Self {
        L0Op { z_power: Exponent::new_raw(z_power.0, z_power.1), phase: Exponent::new_raw(phase.0, phase.1) }
    }

    pub const Z2: L0Op = L0Op::new((2, 1), (0, 1));
    pub const Z_MINUS_2: L0Op = L0Op::new((-2, 1), (0, 1));
    pub const E_PI: L0Op = L0Op::new((0, 1), (1, 2));
    pub const E_MINUS_PI: L0Op = L0Op::new((0, 1), (-1, 2));
    pub const E_2PI: L0Op = L0Op::new((0, 1), (1, 1));
    /// `(-z^2)^{L(0)} := e^{pi i L(0)} z^{2 L(0)}`.
    pub const MINUS_Z2: L0Op = L0Op::new((2, 1), (1, 2));
    /// `(-z^{-2})^{L(0)} := e^{-pi i L(0)} z^{-2 L(0)}`.
    pub const MINUS_Z_MINUS_2: L0Op = L0Op::new((-2, 1), (-1, 2));
}

/// The contragredient of a module with respect to one conformal vector.
#[derive(Clone, Debug)]
pub struct Contragredient<'a> {
    pub alg: &'a AlgebraSpec,
    pub omega: ConformalVector,
}

struct Conjugated {
    weight: Exponent,
    phase: Cyclotomic,
    /// `L(1)^j v / j!`
    l1_powers: Vec<FockVector>,
}

impl<'a> Contragredient<'a> {
    pub fn new(alg: &'a AlgebraSpec, omega: ConformalVector) -> Self {
        Contragredient { alg, omega }
    }

    pub fn weight(&self, m: &Monomial) -> Result<Exponent> {
        self.alg.weight(m, &self.omega)
    }

    pub fn l(&self, n: i64, v: &FockVector) -> Result<FockVector> {
        self.alg.virasoro(n, v, &self.omega)
    }

    fn check_exp(&self, e: Exponent) -> Result<Exponent> {
        if (self.alg.root_denom as i64) % e.denom() != 0 {
            return Err(VoaError::ExponentNotRepresentable(e));
        }
        Ok(e)
    }

    /// `e^{z^e L(1)} v`.
    pub fn exp_l1(&self, v: &FockVector, e: Exponent) -> Result<StateSeries> {
        let mut out = StateSeries::exact();
        let mut cur = v.clone();
        let mut j = 0u32;
        while !cur.is_empty() {
            out.add_term(Key::pow(e * j as i64), cur.scaled(&Cyclotomic::from_rational(inv_factorial(j))));
            cur = self.l(1, &cur)?;
            j += 1;
        }
        Ok(out.tighten())
    }

    /// Applies an `L(0)` power monomial-wise.
    pub fn power_l0(&self, v: &FockVector, op: L0Op) -> Result<StateSeries> {
        let mut out = StateSeries::exact();
        for (m, c) in v.terms() {
            let wt = self.weight(m)?;
            let e = self.check_exp(op.z_power * wt)?;
            let ph = Cyclotomic::phase(&(op.phase * wt), self.alg.cyclo_order)?;
            out.add_term(Key::pow(e), FockVector::term(m.clone(), c * &ph));
        }
        Ok(out.tighten())
    }

    fn conjugate(&self, m: &Monomial) -> Result<Conjugated> {
        let weight = self.weight(m)?;
        let phase = Cyclotomic::phase(&(weight / 2), self.alg.cyclo_order)?;
        let mut l1_powers = Vec::new();
        let mut cur = FockVector::from_monomial(m.clone());
        let mut j = 0u32;
        while !cur.is_empty() {
            l1_powers.push(cur.scaled(&Cyclotomic::from_rational(inv_factorial(j))));
            cur = self.l(1, &cur)?;
            j += 1;
        }
        Ok(Conjugated { weight, phase, l1_powers })
    }

    fn element(&self, conj: &Conjugated, b: &Monomial, s: Exponent, w: &Monomial) -> Result<Cyclotomic> {
        let mut out = Cyclotomic::zero();
        let wf = FockVector::from_monomial(w.clone());
        for (j, u) in conj.l1_powers.iter().enumerate() {
            let n = s + conj.weight * 2 - exi(j as i64) - 1;
            if !n.is_integer() {
                continue;
            }
            let un = self.alg.vertex_coeff(u, n.to_integer(), &wf)?;
            let c = un.get(b);
            if !c.is_zero() {
                out += &c;
            }
        }
        Ok(&out * &conj.phase)
    }

    /// `<Y'(v, z)_s b*, w>`, the coefficient of `z^s`.
    pub fn matrix_element(&self, v: &FockVector, b: &Monomial, s: Exponent, w: &Monomial) -> Result<Cyclotomic> {
        let mut out = Cyclotomic::zero();
        for (vm, vc) in v.terms() {
            let conj = self.conjugate(vm)?;
            out += &(vc * &self.element(&conj, b, s, w)?);
        }
        Ok(out)
    }

    /// Sector and lowest exponent of `Y'(vm, z) b*`.
    fn target(&self, vm: &Monomial, bm: &Monomial, a: Exponent) -> Result<(Sector, Exponent)> {
        let sector = Sector { charge: bm.sector.charge - vm.sector.charge, momentum: bm.sector.momentum };
        let base = self.weight(&Monomial::vacuum(sector.clone()))?;
        let beta = self.weight(bm)?;
        Ok((sector, base - beta - a))
    }

    /// `Y'(v, z) wp` on `(-inf, hi]`, lower-complete.
    pub fn dual_vertex(&self, v: &FockVector, wp: &DualVector, hi: Exponent) -> Result<DualSeries> {
        let mut out = DualSeries::windowed(hi, hi);
        for (vm, vc) in v.terms() {
            let conj = self.conjugate(vm)?;
            for (bm, bc) in wp.0.terms() {
                let (sector, s0) = self.target(vm, bm, conj.weight)?;
                let coef = vc * bc;
                if s0 <= hi {
                    out = out.widen_lo(s0);
                }
                let mut d = 0i64;
                while s0 + d <= hi {
                    let s = s0 + d;
                    let mut acc = FockVector::new();
                    for w in self.alg.basis(&sector, d as u32) {
                        let c = self.element(&conj, bm, s, &w)?;
                        acc.add_term(w, &c * &coef);
                    }
                    out.add_term(Key::pow(self.check_exp(s)?), DualVector(acc));
                    d += 1;
                }
            }
        }
        Ok(out)
    }

    pub fn dual_vertex_coeff(&self, v: &FockVector, wp: &DualVector, s: Exponent) -> Result<DualVector> {
        self.dual_vertex(v, wp, s)?.coeff_at(s)
    }
}

/// `(Y')'(v, z) w`, the inner dual taken with `inner` and the outer one with `outer`.
pub fn double_dual(
    alg: &AlgebraSpec,
    inner: &ConformalVector,
    outer: &ConformalVector,
    v: &FockVector,
    w: &FockVector,
    hi: Exponent,
) -> Result<StateSeries> {
    let din = Contragredient::new(alg, inner.clone());
    let dout = Contragredient::new(alg, outer.clone());
    let mut out = StateSeries::windowed(hi, hi);
    for (vm, vc) in v.terms() {
        let conj = dout.conjugate(vm)?;
        let inner_conj: Vec<Vec<Conjugated>> = conj
            .l1_powers
            .iter()
            .map(|u| u.terms().map(|(um, _)| din.conjugate(um)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let a_in = din.weight(vm)?;
        for (wm, wc) in w.terms() {
            let sector = Sector { charge: wm.sector.charge + vm.sector.charge, momentum: wm.sector.momentum };
            let base_in = din.weight(&Monomial::vacuum(sector.clone()))?;
            let s0 = -conj.weight * 2 - din.weight(wm)? + a_in + base_in;
            if s0 <= hi {
                out = out.widen_lo(s0);
            }
            let coef = vc * wc;
            let mut d = 0i64;
            while s0 + d <= hi {
                let s = s0 + d;
                let mut acc = FockVector::new();
                for b in alg.basis(&sector, d as u32) {
                    let mut c = Cyclotomic::zero();
                    for (j, u) in conj.l1_powers.iter().enumerate() {
                        let t = exi(j as i64) - conj.weight * 2 - s;
                        for ((_, uc), ic) in u.terms().zip(&inner_conj[j]) {
                            let e = din.element(ic, &b, t, wm)?;
                            if !e.is_zero() {
                                c += &(uc * &e);
                            }
                        }
                    }
                    acc.add_term(b, &(&c * &conj.phase) * &coef);
                }
                out.add_term(Key::pow(s), acc);
                d += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::OmegaChoice;
    use crate::series::ex;

    fn heis() -> AlgebraSpec {
        AlgebraSpec::heisenberg(exi(1))
    }

    fn lattice() -> AlgebraSpec {
        AlgebraSpec::lattice(1, ex(1, 4))
    }

    fn vac(parts: &[u32]) -> FockVector {
        FockVector::from_monomial(Monomial::new(parts.to_vec(), Sector::vacuum()))
    }

    fn cy(q: Exponent) -> Cyclotomic {
        Cyclotomic::from_ratio(q)
    }

    #[test]
    fn pairing_examples() {
        let h = vac(&[1]);
        let hs = DualVector::dual_of(&h);
        assert!(pair(&hs, &h).is_one());
        assert!(pair(&hs, &vac(&[1, 1])).is_zero());
        assert!(pair(&hs, &vac(&[2])).is_zero());
    }

    #[test]
    fn exp_l1_examples() {
        let alg = heis();
        let d = Contragredient::new(&alg, alg.standard_omega().unwrap());
        assert_eq!(d.exp_l1(&alg.vacuum(), exi(1)).unwrap(), StateSeries::constant(alg.vacuum()));
        let h = alg.h_state();
        assert_eq!(d.exp_l1(&h, exi(1)).unwrap(), StateSeries::constant(h.clone()));
        let s = d.exp_l1(&vac(&[2]), exi(1)).unwrap();
        let mut expect = StateSeries::constant(vac(&[2]));
        expect.add_term(Key::pow(exi(1)), vac(&[1]).scaled(&cy(exi(2))));
        assert_eq!(s, expect);
    }

    #[test]
    fn power_l0_examples() {
        let alg = heis();
        let d = Contragredient::new(&alg, alg.standard_omega().unwrap());
        let h = alg.h_state();
        assert_eq!(d.power_l0(&h, L0Op::Z_MINUS_2).unwrap(), StateSeries::monomial(Key::pow(exi(-2)), h.clone()));
        assert_eq!(d.power_l0(&h, L0Op::E_PI).unwrap(), StateSeries::constant(h.scaled(&cy(exi(-1)))));
    }

    /// `(-z^2)^{L(0)} e^{z L(1)} (-z^{-2})^{L(0)} = e^{-z^{-1} L(1)}`.
    #[test]
    fn contragredient_conjugation_formula() {
        for (alg, choice) in [(heis(), OmegaChoice::Std), (heis(), OmegaChoice::Tilde), (lattice(), OmegaChoice::Tilde)] {
            let d = Contragredient::new(&alg, alg.omega(choice).unwrap());
            for s in [Sector::vacuum(), Sector::charge(1), Sector::momentum(exi(1))] {
                let foreign = if alg.is_lattice() { s.momentum != exi(0) } else { s.charge != 0 };
                if foreign {
                    continue;
                }
                for m in alg.basis_up_to(&s, 5) {
                    let v = FockVector::from_monomial(m);
                    let lhs = d
                        .power_l0(&v, L0Op::MINUS_Z_MINUS_2)
                        .unwrap()
                        .compose(|u| d.exp_l1(u, exi(1)))
                        .unwrap()
                        .compose(|u| d.power_l0(u, L0Op::MINUS_Z2))
                        .unwrap();
                    let rhs = d.exp_l1(&v, exi(-1)).unwrap().compose(|u| Ok(StateSeries::constant(u.clone()))).unwrap();
                    let neg = rhs.terms().fold(StateSeries::exact(), |mut acc, (k, c)| {
                        let sign = if (k.exp.to_integer() % 2) != 0 { -1 } else { 1 };
                        acc.add_term(k.clone(), c.scaled(&Cyclotomic::from_int(sign)));
                        acc
                    });
                    assert_eq!(lhs, neg);
                }
            }
        }
    }

    #[test]
    fn dual_vertex_examples() {
        let alg = heis();
        let d = Contragredient::new(&alg, alg.standard_omega().unwrap());
        let wp = DualVector::basis(Monomial::new(vec![2, 1], Sector::vacuum()));
        let s = d.dual_vertex(&alg.vacuum(), &wp, exi(3)).unwrap();
        assert_eq!(s, DualSeries::constant(wp.clone()).truncate(exi(3)));

        for g in [exi(1), ex(2, 3)] {
            let alg = AlgebraSpec::heisenberg(g);
            let d = Contragredient::new(&alg, alg.standard_omega().unwrap());
            let vs = DualVector::dual_of(&alg.vacuum());
            let s = d.dual_vertex(&alg.h_state(), &vs, exi(2)).unwrap();
            let hm = Monomial::new(vec![1], Sector::vacuum());
            for e in -3..=2 {
                let c = pair(&s.coeff_at(exi(e)).unwrap(), &FockVector::from_monomial(hm.clone()));
                let expect = if e == 0 { cy(-g) } else { Cyclotomic::zero() };
                assert_eq!(c, expect);
            }
        }
    }

    /// `<w', Y(v,z) w> = <Y'(e^{zL(1)} e^{-pi i L(0)} z^{-2L(0)} v, z^{-1}) w', w>`.
    #[test]
    fn back_relation() {
        for (alg, choice) in [(heis(), OmegaChoice::Std), (lattice(), OmegaChoice::Tilde)] {
            let om = alg.omega(choice).unwrap();
            let d = Contragredient::new(&alg, om.clone());
            let vs = [alg.h_state(), vac(&[2]), vac(&[1, 1]), alg.exp_state(if alg.is_lattice() { 1 } else { 0 })];
            let sector = if alg.is_lattice() { Sector::charge(-1) } else { Sector::momentum(ex(1, 2)) };
            for v in &vs {
                let (vm, _) = v.terms().next().unwrap();
                let a = alg.weight(vm, &om).unwrap();
                let ph = Cyclotomic::phase(&(-a / 2), alg.cyclo_order).unwrap();
                let l1 = d.exp_l1(v, exi(1)).unwrap();
                for w in alg.basis_up_to(&sector, 2) {
                    let wf = FockVector::from_monomial(w.clone());
                    let y = alg.vertex_series(v, &wf, exi(3)).unwrap();
                    for (k, coeff) in y.terms() {
                        for (b, c) in coeff.terms() {
                            let s = k.exp;
                            let mut rhs = Cyclotomic::zero();
                            for (kj, uj) in l1.terms() {
                                let t = -a * 2 + kj.exp - s;
                                rhs += &d.matrix_element(uj, b, t, &w).unwrap();
                            }
                            assert_eq!(*c, &rhs * &ph, "coefficient z^{s} at {b:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn double_dual_is_tau_twist() {
        for (alg, choice) in [(heis(), OmegaChoice::Std), (heis(), OmegaChoice::Tilde), (lattice(), OmegaChoice::Tilde)] {
            let om = alg.omega(choice).unwrap();
            let vs = [alg.h_state(), alg.exp_state(if alg.is_lattice() { 1 } else { 0 }), om.state.clone()];
            let ws = if alg.is_lattice() {
                vec![alg.exp_state(1), FockVector::from_monomial(Monomial::new(vec![1], Sector::charge(-1)))]
            } else {
                vec![alg.momentum_vacuum(ex(1, 2)), FockVector::from_monomial(Monomial::new(vec![1], Sector::momentum(exi(1))))]
            };
            for v in &vs {
                for w in &ws {
                    let dd = double_dual(&alg, &om, &om, v, w, exi(2)).unwrap();
                    let tv = alg.tau(v, &om).unwrap();
                    let y = alg.vertex_series(&tv, w, exi(2)).unwrap();
                    assert_eq!(dd, y, "v = {v:?}, w = {w:?}");
                }
            }
        }
        let alg = lattice();
        let om = alg.omega(OmegaChoice::Tilde).unwrap();
        let e = alg.exp_state(1);
        let w = alg.exp_state(1);
        let dd = double_dual(&alg, &om, &om, &e, &w, exi(3)).unwrap();
        let y = alg.vertex_series(&e, &w, exi(3)).unwrap();
        assert!(!y.is_empty());
        assert_eq!(dd, y.scale(&Cyclotomic::phase(&ex(3, 4), 8).unwrap()));
    }

    #[test]
    fn dual_is_sigma_twisted() {
        let alg = lattice();
        let om = alg.omega(OmegaChoice::Tilde).unwrap();
        let d = Contragredient::new(&alg, om.clone());
        let vs = [alg.exp_state(1), alg.h_state(), alg.exp_state(-1)];
        let wp = DualVector::basis(Monomial::new(vec![1], Sector::charge(1)));
        let mut fractional = false;
        for v in &vs {
            let sv = alg.l0_phase(v, exi(2), &om).unwrap();
            let lhs = d.dual_vertex(&sv, &wp, exi(2)).unwrap();
            let rhs = d.dual_vertex(v, &wp, exi(2)).unwrap().rotate_branch(2, alg.cyclo_order).unwrap();
            fractional |= lhs.terms().any(|(k, _)| !k.exp.is_integer());
            assert_eq!(lhs, rhs);
        }
        assert!(fractional);
    }
}
