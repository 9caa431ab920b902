//! Workspace configuration.
//!
//! Values are layered: built-in defaults, then a `key = value` file, then
//! command-line flags. Later layers win key by key.
//!
//! File keys (`#` starts a comment):
//!
//! | key       | value                         | default          |
//! |-----------|-------------------------------|------------------|
//! | `gamma`   | rational level                | `1`, or `2N c^2` |
//! | `lattice` | `N`, with `<alpha,alpha> = 2N`; `0` = Heisenberg | `0` |
//! | `hcoeff`  | rational `c` in `h = c a(-1)` | `1/(4N)`         |
//! | `cyclo`   | cyclotomic order              | `8`              |
//! | `rootden` | series root denominator       | `2`              |
//! | `logbound`| maximal `log z` power         | `2`              |
//! | `window`  | `LO:HI`                       | `-6:6`           |
//! | `depth`   | sample depth                  | `3`              |
//! | `kmax`    | commutativity order bound     | `6`              |
//! | `seed`    | RNG seed                      | `0`              |
//! | `omega`   | `std` or `tilde`              | `std`            |

use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, VoaError};
use crate::fock::{AlgebraSpec, OmegaChoice};
use crate::series::{exi, Exponent};
use crate::verify::CheckConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct WorkspaceConfig {
    pub gamma: Exponent,
    pub lattice_halfnorm: u32,
    pub h_coeff: Exponent,
    pub cyclo_order: u32,
    pub root_denom: u32,
    pub log_bound: u32,
    pub lo: Exponent,
    pub hi: Exponent,
    pub k_max: u32,
    pub depth: u32,
    pub seed: u64,
    pub omega: OmegaChoice,
}

pub fn omega_name(o: OmegaChoice) -> &'static str {
    match o {
        OmegaChoice::Std => "std",
        OmegaChoice::Tilde => "tilde",
    }
}

/// One configuration layer; `None` leaves the value below untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<Exponent>,
    pub lattice: Option<u32>,
    pub hcoeff: Option<Exponent>,
    pub cyclo: Option<u32>,
    pub rootden: Option<u32>,
    pub logbound: Option<u32>,
    pub window: Option<(Exponent, Exponent)>,
    pub depth: Option<u32>,
    pub kmax: Option<u32>,
    pub seed: Option<u64>,
    pub omega: Option<OmegaChoice>,
}

fn bad(what: &str, value: &str) -> VoaError {
    VoaError::Config(format!("invalid {what}: {value:?}"))
}

fn num<T: FromStr>(what: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(what, value))
}

pub fn parse_rational(value: &str) -> Result<Exponent> {
    num("rational", value)
}

pub fn parse_window(value: &str) -> Result<(Exponent, Exponent)> {
    let (lo, hi) = value.split_once(':').ok_or_else(|| bad("window (want LO:HI)", value))?;
    Ok((parse_rational(lo)?, parse_rational(hi)?))
}

pub fn parse_omega(value: &str) -> Result<OmegaChoice> {
    match value.trim() {
        "std" => Ok(OmegaChoice::Std),
        "tilde" => Ok(OmegaChoice::Tilde),
        _ => Err(bad("omega (want std or tilde)", value)),
    }
}

impl Overrides {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "gamma" => self.gamma = Some(parse_rational(value)?),
            "lattice" | "lattice_halfnorm" => self.lattice = Some(num("lattice", value)?),
            "hcoeff" | "h_coeff" => self.hcoeff = Some(parse_rational(value)?),
            "cyclo" | "cyclo_order" => self.cyclo = Some(num("cyclo", value)?),
            "rootden" | "root_denom" => self.rootden = Some(num("rootden", value)?),
            "logbound" | "log_bound" => self.logbound = Some(num("logbound", value)?),
            "window" => self.window = Some(parse_window(value)?),
            "depth" => self.depth = Some(num("depth", value)?),
            "kmax" | "k_max" => self.kmax = Some(num("kmax", value)?),
            "seed" => self.seed = Some(num("seed", value)?),
            "omega" => self.omega = Some(parse_omega(value)?),
            _ => return Err(VoaError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| VoaError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            out.set(k.trim(), v.trim())
                .map_err(|e| VoaError::Config(format!("line {}: {}", i + 1, e.to_string().trim_start_matches("invalid workspace: "))))?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| VoaError::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// `self` on top of `below`.
    pub fn over(self, below: Overrides) -> Overrides {
        Overrides {
            gamma: self.gamma.or(below.gamma),
            lattice: self.lattice.or(below.lattice),
            hcoeff: self.hcoeff.or(below.hcoeff),
            cyclo: self.cyclo.or(below.cyclo),
            rootden: self.rootden.or(below.rootden),
            logbound: self.logbound.or(below.logbound),
            window: self.window.or(below.window),
            depth: self.depth.or(below.depth),
            kmax: self.kmax.or(below.kmax),
            seed: self.seed.or(below.seed),
            omega: self.omega.or(below.omega),
        }
    }
}

impl WorkspaceConfig {
    /// Fills unset values with defaults and validates the result.
    pub fn resolve(o: Overrides) -> Result<Self> {
        let n = o.lattice.unwrap_or(0);
        let h_coeff = o.hcoeff.unwrap_or(if n > 0 { Exponent::new(1, 4 * n as i64) } else { exi(1) });
        let gamma = o.gamma.unwrap_or(if n > 0 { exi(2 * n as i64) * h_coeff * h_coeff } else { exi(1) });
        let (lo, hi) = o.window.unwrap_or((exi(-6), exi(6)));
        let cfg = WorkspaceConfig {
            gamma,
            lattice_halfnorm: n,
            h_coeff,
            cyclo_order: o.cyclo.unwrap_or(8),
            root_denom: o.rootden.unwrap_or(2),
            log_bound: o.logbound.unwrap_or(2),
            lo,
            hi,
            k_max: o.kmax.unwrap_or(6),
            depth: o.depth.unwrap_or(3),
            seed: o.seed.unwrap_or(0),
            omega: o.omega.unwrap_or(OmegaChoice::Std),
        };
        if cfg.lo > cfg.hi {
            return Err(VoaError::Config(format!("empty window {}:{}", cfg.lo, cfg.hi)));
        }
        cfg.algebra().validate()?;
        Ok(cfg)
    }

    pub fn algebra(&self) -> AlgebraSpec {
        let base = if self.lattice_halfnorm > 0 {
            AlgebraSpec::lattice(self.lattice_halfnorm, self.h_coeff)
        } else {
            AlgebraSpec::heisenberg(self.gamma)
        };
        AlgebraSpec { gamma: self.gamma, h_coeff: self.h_coeff, ..base }.with_orders(self.cyclo_order, self.root_denom)
    }

    pub fn check(&self) -> CheckConfig {
        CheckConfig { lo: self.lo, hi: self.hi, depth: self.depth, k_max: self.k_max, seed: self.seed, ..CheckConfig::default() }
    }
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self::resolve(Overrides::default()).expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ex;

    #[test]
    fn defaults_are_heisenberg_level_one() {
        let c = WorkspaceConfig::default();
        assert_eq!((c.gamma, c.lattice_halfnorm, c.cyclo_order), (exi(1), 0, 8));
        assert_eq!(c.check(), CheckConfig::default());
    }

    #[test]
    fn file_layer_and_flag_layer() {
        let file = Overrides::from_text("# lattice workspace\nlattice = 1\nhcoeff = 1/4   # h = a/4\nwindow = -4:4\n\n").unwrap();
        let flags = Overrides { window: Some((exi(-2), exi(3))), ..Default::default() };
        let c = WorkspaceConfig::resolve(flags.over(file)).unwrap();
        assert_eq!((c.gamma, c.h_coeff), (ex(1, 8), ex(1, 4)));
        assert_eq!((c.lo, c.hi), (exi(-2), exi(3)));
        assert!(c.algebra().is_lattice());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(Overrides::from_text("gamma 1").is_err());
        assert!(Overrides::from_text("colour = red").is_err());
        assert!(WorkspaceConfig::resolve(Overrides { cyclo: Some(0), ..Default::default() }).is_err());
        assert!(WorkspaceConfig::resolve(Overrides { window: Some((exi(2), exi(1))), ..Default::default() }).is_err());
        let bad_gamma = Overrides { lattice: Some(1), gamma: Some(exi(1)), ..Default::default() };
        assert!(WorkspaceConfig::resolve(bad_gamma).is_err());
    }
}
