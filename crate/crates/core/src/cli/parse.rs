//! Recursive-descent parser for states, dual states, series literals and
//! pseudo-map descriptors.
//!
//! The accepted text is exactly what the renderers emit, so
//! `parse(render(x)) == x` for every value the engine prints.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::deform::{Certificate, PseudoMap};
use crate::error::{Result, VoaError};
use crate::fock::{AlgebraSpec, FockVector, Monomial, Sector};
use crate::scalars::Cyclotomic;
use crate::series::{Exponent, Key, ScalarSeries};

/// A parsed expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    State(FockVector),
    /// `dual(<state>)`: the functional dual to a basis expansion.
    DualState(FockVector),
    Series(ScalarSeries),
    Map(PseudoMap),
}

impl Ast {
    pub fn render(&self, alg: &AlgebraSpec) -> String {
        match self {
            Ast::State(v) => alg.render(v),
            Ast::DualState(v) => format!("dual({})", alg.render(v)),
            Ast::Series(s) => s.render(alg.cyclo_order),
            Ast::Map(m) => m.describe(alg),
        }
    }
}

pub fn parse_state(alg: &AlgebraSpec, text: &str) -> Result<FockVector> {
    Parser::new(alg, text).whole(|p| p.state())
}

pub fn parse_dual_state(alg: &AlgebraSpec, text: &str) -> Result<FockVector> {
    Parser::new(alg, text).whole(|p| {
        p.expect("dual(")?;
        let v = p.state()?;
        p.expect(")")?;
        Ok(v)
    })
}

pub fn parse_series(alg: &AlgebraSpec, text: &str) -> Result<ScalarSeries> {
    Parser::new(alg, text).whole(|p| p.series())
}

pub fn parse_map(alg: &AlgebraSpec, text: &str) -> Result<PseudoMap> {
    Parser::new(alg, text).whole(|p| p.map())
}

pub fn parse_scalar(alg: &AlgebraSpec, text: &str) -> Result<Cyclotomic> {
    Parser::new(alg, text).whole(|p| p.scalar())
}

/// Tries the descriptor, dual, state and series grammars in that order.
pub fn parse_any(alg: &AlgebraSpec, text: &str) -> Result<Ast> {
    let t = text.trim_start();
    if t.starts_with("dual(") {
        return parse_dual_state(alg, text).map(Ast::DualState);
    }
    let map_heads = ["id", "Xvf(", "exp(", "Delta(", "Mode(", "compose(", "theta("];
    if t == "0" || map_heads.iter().any(|h| t.starts_with(h)) {
        return parse_map(alg, text).map(Ast::Map);
    }
    match parse_state(alg, text) {
        Ok(v) => Ok(Ast::State(v)),
        Err(state_err) => parse_series(alg, text).map(Ast::Series).map_err(|_| state_err),
    }
}

struct Parser<'a> {
    alg: &'a AlgebraSpec,
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(alg: &'a AlgebraSpec, src: &'a str) -> Self {
        Parser { alg, src, pos: 0 }
    }

    fn whole<T>(mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let out = f(&mut self)?;
        self.ws();
        if self.pos < self.src.len() {
            return Err(self.error("end of input"));
        }
        Ok(out)
    }

    fn error(&self, expected: &str) -> VoaError {
        VoaError::Parse { position: self.pos, expected: expected.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Consumes `tok` after optional whitespace.
    fn eat(&mut self, tok: &str) -> bool {
        let save = self.pos;
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            self.pos = save;
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.ws();
            Err(self.error(&format!("'{tok}'")))
        }
    }

    fn digits(&mut self) -> Option<&'a str> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.src[start..self.pos])
    }

    fn uint(&mut self) -> Result<u64> {
        self.ws();
        let at = self.pos;
        let d = self.digits().ok_or_else(|| self.error("integer"))?;
        d.parse().map_err(|_| VoaError::Parse { position: at, expected: "integer that fits in 64 bits".into() })
    }

    fn int(&mut self) -> Result<i64> {
        self.ws();
        let neg = self.eat("-");
        let n = self.uint()? as i64;
        Ok(if neg { -n } else { n })
    }

    fn big_ratio(&mut self) -> Result<BigRational> {
        self.ws();
        let n: BigInt = self.digits().ok_or_else(|| self.error("number"))?.parse().expect("digits");
        if self.rest().starts_with('/') {
            self.pos += 1;
            let at = self.pos;
            let d: BigInt = self.digits().ok_or_else(|| self.error("denominator"))?.parse().expect("digits");
            if d == BigInt::from(0) {
                return Err(VoaError::Parse { position: at, expected: "nonzero denominator".into() });
            }
            return Ok(BigRational::new(n, d));
        }
        Ok(BigRational::from_integer(n))
    }

    /// `[-] p[/q]` with 64-bit parts.
    fn exponent(&mut self) -> Result<Exponent> {
        self.ws();
        let neg = self.eat("-");
        let n = self.uint()? as i64;
        let d = if self.rest().starts_with('/') {
            self.pos += 1;
            let at = self.pos;
            match self.uint()? {
                0 => return Err(VoaError::Parse { position: at, expected: "nonzero denominator".into() }),
                d => d as i64,
            }
        } else {
            1
        };
        Ok(Exponent::new(if neg { -n } else { n }, d))
    }

    fn starts_scalar(&mut self) -> bool {
        let save = self.pos;
        self.ws();
        let r = self.rest();
        let ok = r.starts_with(|c: char| c.is_ascii_digit()) || r.starts_with("zeta(") || r.starts_with('(') || r.starts_with("-");
        self.pos = save;
        ok
    }

    /// Atom: `[-] (rational | zeta(j) | '(' sum ')')`.
    fn scalar_atom(&mut self) -> Result<Cyclotomic> {
        let neg = self.eat("-");
        self.ws();
        let v = if self.eat("zeta(") {
            let j = self.int()?;
            self.expect(")")?;
            Cyclotomic::zeta(j, self.alg.cyclo_order)
        } else if self.eat("(") {
            let s = self.scalar()?;
            self.expect(")")?;
            s
        } else if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            Cyclotomic::from_rational(self.big_ratio()?)
        } else {
            return Err(self.error("scalar"));
        };
        Ok(if neg { -v } else { v })
    }

    /// Juxtaposed atoms multiply: `2 zeta(3)`.
    fn scalar_product(&mut self) -> Result<Cyclotomic> {
        let mut v = self.scalar_atom()?;
        loop {
            let save = self.pos;
            self.ws();
            let r = self.rest();
            if r.starts_with("zeta(") || r.starts_with('(') || r.starts_with(|c: char| c.is_ascii_digit()) {
                let next = self.scalar_atom()?;
                v = &v * &next;
            } else {
                self.pos = save;
                return Ok(v);
            }
        }
    }

    /// `product (± product)*`.
    fn scalar(&mut self) -> Result<Cyclotomic> {
        let mut v = self.scalar_product()?;
        loop {
            if self.eat("+") {
                v = &v + &self.scalar_product()?;
            } else if self.eat("-") {
                v = &v + &(-self.scalar_product()?);
            } else {
                return Ok(v);
            }
        }
    }

    /// `[±] term (± term)*` where each term is `[scalar] monomial`.
    fn state(&mut self) -> Result<FockVector> {
        let save = self.pos;
        if self.eat("0") {
            self.ws();
            if matches!(self.peek(), None | Some(';') | Some(')')) {
                return Ok(FockVector::new());
            }
            self.pos = save;
        }
        let mut out = FockVector::new();
        let mut sign = if self.eat("-") {
            -1
        } else {
            self.eat("+");
            1
        };
        loop {
            let t = self.state_term()?;
            out = if sign < 0 { out.sub(&t) } else { out.add(&t) };
            if self.eat("+") {
                sign = 1;
            } else if self.eat("-") {
                sign = -1;
            } else {
                return Ok(out);
            }
        }
    }

    fn state_term(&mut self) -> Result<FockVector> {
        self.ws();
        let coef = if self.starts_scalar() && !self.rest().starts_with("-") { Some(self.scalar_product()?) } else { None };
        let v = self.monomial()?;
        Ok(match coef {
            Some(c) => v.scaled(&c),
            None => v,
        })
    }

    /// Modes followed by a vacuum: `h(-2)h(-1)^2|0>`, `a(-1)e(2)`, `e(1)|lam:1/2>`.
    fn monomial(&mut self) -> Result<FockVector> {
        self.ws();
        let mut parts = Vec::new();
        let mut hcount = 0usize;
        loop {
            let r = self.rest();
            let gen = if r.starts_with("h(") {
                'h'
            } else if r.starts_with("a(") {
                'a'
            } else if r.starts_with('h') && parts.is_empty() {
                self.pos += 1;
                return Ok(self.alg.h_state());
            } else {
                break;
            };
            self.pos += 2;
            self.expect("-")?;
            let n = self.uint()?;
            if n == 0 || n > u32::MAX as u64 {
                return Err(self.error("positive mode index"));
            }
            self.expect(")")?;
            let pow = if self.rest().starts_with('^') {
                self.pos += 1;
                self.uint()? as usize
            } else {
                1
            };
            if gen == 'h' {
                hcount += pow;
            }
            parts.extend(std::iter::repeat(n as u32).take(pow));
        }
        let mut sector = Sector::vacuum();
        if self.rest().starts_with("e(") {
            if !self.alg.is_lattice() {
                return Err(self.error("|0> or |lam:q> (e(m) needs a lattice workspace)"));
            }
            self.pos += 2;
            sector.charge = self.int()?;
            self.expect(")")?;
            if self.rest().starts_with("|lam:") {
                self.pos += 5;
                sector.momentum = self.exponent()?;
                self.expect(">")?;
            }
        } else if self.rest().starts_with("|0>") {
            self.pos += 3;
        } else if self.rest().starts_with("|lam:") {
            self.pos += 5;
            sector.momentum = self.exponent()?;
            self.expect(">")?;
        } else {
            return Err(self.error("|0>, |lam:q> or e(m)"));
        }
        let c = Cyclotomic::from_ratio(self.alg.c());
        let mut v = FockVector::from_monomial(Monomial::new(parts, sector));
        for _ in 0..hcount {
            v = v.scaled(&c);
        }
        Ok(v)
    }

    /// `[±] term (± term)*`, each term `[scalar] factor*` with factors
    /// `log(z)^n`, `y^n`, `z^{q}` and `E(q)`.
    fn series(&mut self) -> Result<ScalarSeries> {
        let mut out = ScalarSeries::exact();
        let mut log_bound = 0;
        let mut sign = if self.eat("-") {
            -1
        } else {
            self.eat("+");
            1
        };
        loop {
            let (k, c) = self.series_term()?;
            log_bound = log_bound.max(k.log);
            let c = if sign < 0 { -c } else { c };
            out.add_term(k, c);
            if self.eat("+") {
                sign = 1;
            } else if self.eat("-") {
                sign = -1;
            } else {
                return Ok(out.with_log_bound(log_bound));
            }
        }
    }

    fn series_term(&mut self) -> Result<(Key, Cyclotomic)> {
        let coef = if self.starts_scalar() { Some(self.scalar_product()?) } else { None };
        let mut key = Key::pow(Exponent::from_integer(0));
        let mut any = false;
        loop {
            if self.eat("log(z)") {
                key.log += self.power()?;
            } else if self.eat("y") {
                key.ypow += self.power()?;
            } else if self.eat("z") {
                if self.rest().starts_with("^{") {
                    self.pos += 2;
                    key.exp += self.exponent()?;
                    self.expect("}")?;
                } else if self.rest().starts_with('^') {
                    self.pos += 1;
                    key.exp += Exponent::from_integer(self.int()?);
                } else {
                    key.exp += Exponent::from_integer(1);
                }
            } else if self.eat("E(") {
                key.group += self.exponent()?;
                self.expect(")")?;
            } else {
                break;
            }
            any = true;
        }
        match (coef, any) {
            (Some(c), _) => Ok((key, c)),
            (None, true) => Ok((key, Cyclotomic::one())),
            (None, false) => {
                self.ws();
                Err(self.error("scalar, log(z), y, z^{q} or E(q)"))
            }
        }
    }

    fn power(&mut self) -> Result<u32> {
        if self.rest().starts_with('^') {
            self.pos += 1;
            let at = self.pos;
            u32::try_from(self.uint()?).map_err(|_| VoaError::Parse { position: at, expected: "small power".into() })
        } else {
            Ok(1)
        }
    }

    /// Pseudo-map descriptors as printed by [`PseudoMap::describe`].
    fn map(&mut self) -> Result<PseudoMap> {
        self.ws();
        let at = self.pos;
        if self.eat("Xvf(") {
            let v = self.state()?;
            self.expect(";")?;
            let f = self.series()?;
            self.expect(")")?;
            Ok(PseudoMap::x_vf(v, f))
        } else if self.eat("exp(") {
            let inner = self.map()?;
            self.expect(";")?;
            let cert = self.certificate()?;
            self.expect(")")?;
            Ok(PseudoMap::exp(inner, cert))
        } else if self.eat("Delta(") {
            let h = self.state()?;
            let use_log = self.eat(";");
            if use_log {
                self.expect("log")?;
            }
            self.expect(")")?;
            PseudoMap::delta_h(self.alg, h, use_log).map_err(|e| match e {
                VoaError::HConditionFailed(w) => VoaError::Config(format!("Delta at {at}: h condition fails: {w}")),
                other => other,
            })
        } else if self.eat("Mode(") {
            let v = self.state()?;
            self.expect(";")?;
            let n = self.int()?;
            self.expect(";")?;
            let f = self.series()?;
            self.expect(")")?;
            Ok(PseudoMap::ModeTimes { v, n, f })
        } else if self.eat("compose(") {
            let outer = self.map()?;
            self.expect(";")?;
            let inner = self.map()?;
            self.expect(")")?;
            Ok(PseudoMap::compose(outer, inner))
        } else if self.eat("theta(") {
            let inner = self.map()?;
            self.expect(";")?;
            let r = self.uint()?;
            self.expect(")")?;
            if r == 0 || r > u32::MAX as u64 {
                return Err(self.error("positive branch order"));
            }
            Ok(PseudoMap::theta(inner, r as u32))
        } else if self.eat("id") {
            Ok(PseudoMap::Identity)
        } else if self.eat("0") {
            Ok(PseudoMap::Zero)
        } else {
            Err(self.error("id, 0, Xvf(, exp(, Delta(, Mode(, compose( or theta("))
        }
    }

    fn certificate(&mut self) -> Result<Certificate> {
        if self.eat("nilpotent:") {
            Ok(Certificate::Nilpotent(self.uint()? as usize))
        } else if self.eat("split:") {
            Ok(Certificate::Split { z_hi: self.exponent()? })
        } else if self.eat("y") {
            Ok(Certificate::Y)
        } else {
            self.ws();
            Err(self.error("nilpotent:d, split:q or y"))
        }
    }
}
