//! Command-line front end.
//!
//! Exit codes: `0` every check passed, `1` at least one failure, `2` usage,
//! configuration or parse error, `3` inconclusive results without failures.

pub mod config;
pub mod parse;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::deform::{deformed_mode, equivariance_check, PseudoMap};
use crate::dual::{Contragredient, DualVector};
use crate::error::{Result, VoaError};
use crate::fock::{AlgebraSpec, Automorphism, FockVector, Sector};
use crate::scalars::render_rational;
use crate::series::{render_key, Coeff, ExtSeries};
use crate::suite;
use crate::verify::{
    basis_states, check_conjugations, check_double_dual, check_pseudo_derivation_all, check_pseudo_endo_all, check_thm_main,
    check_twisted_module, sample_set, CheckConfig, Deformed, Dual, Outcome, Report, Untwisted,
};
use config::{parse_rational, Overrides, WorkspaceConfig};

#[derive(Parser, Debug)]
#[command(name = "voa-forge", version, about = "Exact checks for Heisenberg and lattice vertex algebras")]
pub struct Cli {
    #[command(flatten)]
    pub workspace: WorkspaceArgs,

    /// Write the JSON report here.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

/// Workspace flags; they override the config file key by key.
#[derive(Args, Debug, Default)]
pub struct WorkspaceArgs {
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "LO:HI", allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, global = true, value_name = "D")]
    pub depth: Option<String>,
    #[arg(long, global = true, value_name = "K")]
    pub kmax: Option<String>,
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<String>,
    #[arg(long, global = true, value_name = "Q", allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub lattice: Option<String>,
    #[arg(long, global = true, value_name = "Q", allow_hyphen_values = true)]
    pub hcoeff: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub cyclo: Option<String>,
    #[arg(long, global = true, value_name = "R")]
    pub rootden: Option<String>,
    #[arg(long, global = true, value_name = "std|tilde")]
    pub omega: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one object and print it.
    #[command(subcommand)]
    Compute(ComputeCmd),
    /// Run one identity check.
    Verify(VerifyArgs),
    /// Run a named bundle of acceptance criteria (`duality`, `deformation`).
    Suite { name: String },
}

#[derive(Subcommand, Debug)]
pub enum ComputeCmd {
    /// `Delta(h, z) v`.
    Delta {
        #[arg(long, default_value = "h(-1)|0>")]
        state: String,
        /// Keep `log z` instead of a branch of `z^{h(0)}`.
        #[arg(long)]
        log: bool,
    },
    /// The mode `v_n w`, or the deformed mode when `--psi` is given.
    Mode {
        #[arg(long, default_value = "h(-1)|0>")]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        n: String,
        #[arg(long, default_value = "|0>")]
        on: String,
        #[arg(long)]
        psi: Option<String>,
    },
    /// `Y(v, z) w` on the window.
    Vertex {
        #[arg(long, default_value = "h(-1)|0>")]
        state: String,
        #[arg(long, default_value = "|0>")]
        on: String,
    },
    /// Central charge of the selected conformal vector.
    CentralCharge,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// pseudo-derivation, pseudo-endomorphism, twisted-module, thm-main,
    /// conjugations, double-dual, equivariance
    pub id: String,
    /// Pseudo-map descriptor, e.g. `Xvf(h; z^{-1})` or `Delta(h)`.
    #[arg(long)]
    pub psi: Option<String>,
    /// Algebra samples (repeatable); defaults depend on the check.
    #[arg(long = "state")]
    pub states: Vec<String>,
    /// Module samples (repeatable).
    #[arg(long = "on")]
    pub on: Vec<String>,
    /// `h`, `h^K` for `sigma_h^K`, or `l0:T` for `e^{2 pi i T L(0)}`.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Check the contragredient action instead of a deformation.
    #[arg(long)]
    pub contragredient: bool,
}

impl WorkspaceArgs {
    fn overrides(&self) -> Result<Overrides> {
        let mut o = Overrides::default();
        let flags = [
            ("window", &self.window),
            ("depth", &self.depth),
            ("kmax", &self.kmax),
            ("seed", &self.seed),
            ("gamma", &self.gamma),
            ("lattice", &self.lattice),
            ("hcoeff", &self.hcoeff),
            ("cyclo", &self.cyclo),
            ("rootden", &self.rootden),
            ("omega", &self.omega),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                o.set(key, v)?;
            }
        }
        Ok(o)
    }

    /// Defaults, then the file, then the flags.
    pub fn resolve(&self) -> Result<WorkspaceConfig> {
        let file = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        WorkspaceConfig::resolve(self.overrides()?.over(file))
    }
}

/// What a command produced: a printable table, a JSON value, and reports.
struct Output {
    lines: Vec<String>,
    json: serde_json::Value,
    reports: Vec<Report>,
}

pub fn exit_code(reports: &[Report]) -> i32 {
    if reports.iter().any(|r| r.outcome == Outcome::Fail) {
        1
    } else if reports.iter().any(|r| r.outcome == Outcome::Inconclusive) {
        3
    } else {
        0
    }
}

pub fn run(cli: &Cli) -> i32 {
    let out = cli.workspace.resolve().and_then(|ws| dispatch(&cli.command, &ws));
    let out = match out {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    for line in &out.lines {
        println!("{line}");
    }
    if let Some(path) = &cli.json {
        let text = serde_json::to_string_pretty(&out.json).expect("json value serializes");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return 2;
        }
    }
    exit_code(&out.reports)
}

fn series_lines<C: Coeff>(s: &ExtSeries<C>, ws: &WorkspaceConfig, render: impl Fn(&C) -> String) -> (Vec<String>, serde_json::Value) {
    let mut lines = Vec::new();
    let mut terms = serde_json::Map::new();
    for (k, c) in s.terms().filter(|(k, _)| k.exp >= ws.lo) {
        let key = render_key(k);
        let key = if key.is_empty() { "1".to_string() } else { key };
        let value = render(c);
        lines.push(format!("{key:>20}  {value}"));
        terms.insert(key, value.into());
    }
    (lines, serde_json::Value::Object(terms))
}

fn compute(cmd: &ComputeCmd, ws: &WorkspaceConfig) -> Result<Output> {
    let alg = ws.algebra();
    let (lines, json) = match cmd {
        ComputeCmd::Delta { state, log } => {
            let v = parse::parse_state(&alg, state)?;
            let d = PseudoMap::delta_h(&alg, alg.h_state(), *log).map_err(|e| VoaError::Config(e.to_string()))?;
            let (lines, terms) = series_lines(&d.apply(&alg, &v)?, ws, |c| alg.render(c));
            (lines, json!({ "command": "delta", "state": alg.render(&v), "terms": terms }))
        }
        ComputeCmd::Mode { state, n, on, psi } => {
            let v = parse::parse_state(&alg, state)?;
            let w = parse::parse_state(&alg, on)?;
            let n = parse_rational(n)?;
            let map = match psi {
                Some(p) => parse::parse_map(&alg, p)?,
                None => PseudoMap::Identity,
            };
            let out = deformed_mode(&alg, &map, &v, n, &w)?;
            let text = alg.render(&out);
            (vec![text.clone()], json!({ "command": "mode", "map": map.describe(&alg), "value": text }))
        }
        ComputeCmd::Vertex { state, on } => {
            let v = parse::parse_state(&alg, state)?;
            let w = parse::parse_state(&alg, on)?;
            let (lines, terms) = series_lines(&alg.vertex_series(&v, &w, ws.hi)?, ws, |c| alg.render(c));
            (lines, json!({ "command": "vertex", "terms": terms }))
        }
        ComputeCmd::CentralCharge => {
            let c = render_rational(&alg.central_charge(&alg.omega(ws.omega)?)?);
            (vec![c.clone()], json!({ "command": "central-charge", "omega": config::omega_name(ws.omega), "value": c }))
        }
    };
    Ok(Output { lines, json, reports: Vec::new() })
}

fn states(alg: &AlgebraSpec, texts: &[String], default: impl FnOnce() -> Vec<FockVector>) -> Result<Vec<FockVector>> {
    if texts.is_empty() {
        return Ok(default());
    }
    texts.iter().map(|t| parse::parse_state(alg, t)).collect()
}

fn parse_sigma(text: &str, ws: &WorkspaceConfig) -> Result<Automorphism> {
    let t = text.trim();
    if t == "id" {
        return Ok(Automorphism::Identity);
    }
    if t == "h" {
        return Ok(Automorphism::SigmaH(1));
    }
    if let Some(k) = t.strip_prefix("h^") {
        return k.trim().parse().map(Automorphism::SigmaH).map_err(|_| VoaError::Config(format!("invalid sigma: {text:?}")));
    }
    if let Some(q) = t.strip_prefix("l0:") {
        return Ok(Automorphism::L0Phase { t: parse_rational(q)?, omega: ws.omega });
    }
    Err(VoaError::Config(format!("invalid sigma: {text:?} (want id, h, h^K or l0:T)")))
}

/// The module sector used for defaults: charge 1 on a lattice, momentum 1/2 otherwise.
fn module_sector(alg: &AlgebraSpec) -> Sector {
    if alg.is_lattice() {
        Sector::charge(1)
    } else {
        Sector::momentum(crate::series::ex(1, 2))
    }
}

fn verify(args: &VerifyArgs, ws: &WorkspaceConfig) -> Result<Report> {
    let alg = ws.algebra();
    let cfg: CheckConfig = ws.check();
    let map = |default: &str| parse::parse_map(&alg, args.psi.as_deref().unwrap_or(default));
    let sigma = args.sigma.as_deref().map(|s| parse_sigma(s, ws)).transpose()?;
    let vacuum_samples = || sample_set(&alg, &[Sector::vacuum()], &cfg);
    let report = match args.id.as_str() {
        "pseudo-derivation" => {
            let psi = map("Xvf(h; z^{-1})")?;
            check_pseudo_derivation_all(&alg, &psi, &states(&alg, &args.states, vacuum_samples)?, &cfg)
        }
        "pseudo-endomorphism" => {
            let delta = map("Delta(h)")?;
            check_pseudo_endo_all(&alg, &delta, &states(&alg, &args.states, vacuum_samples)?, &cfg)
        }
        "twisted-module" | "module-variant" => {
            let us = states(&alg, &args.states, vacuum_samples)?;
            let ws_states = states(&alg, &args.on, vacuum_samples)?;
            if args.contragredient {
                let a = Dual { contra: Contragredient { alg: &alg, omega: alg.omega(ws.omega)? } };
                let duals: Vec<DualVector> = ws_states.iter().map(DualVector::dual_of).collect();
                check_twisted_module(&a, sigma.as_ref(), &us, &duals, &cfg)
            } else {
                match map("id")? {
                    PseudoMap::Identity => check_twisted_module(&Untwisted { alg: &alg }, sigma.as_ref(), &us, &ws_states, &cfg),
                    delta => check_twisted_module(&Deformed { alg: &alg, delta }, sigma.as_ref(), &us, &ws_states, &cfg),
                }
            }
        }
        "thm-main" => {
            let avs = states(&alg, &args.states, || {
                let h = alg.h_state();
                let mut v = vec![alg.vacuum(), h.clone(), alg.mode_apply(-1, &h)];
                if alg.is_lattice() {
                    v.push(alg.exp_state(1));
                }
                v
            })?;
            let us = states(&alg, &args.on, || basis_states(&alg, &[module_sector(&alg)], 1))?;
            check_thm_main(&alg, &avs, &us, &cfg)
        }
        "conjugations" => {
            let om = alg.omega(ws.omega)?;
            let basis = || basis_states(&alg, &[Sector::vacuum()], cfg.depth);
            check_conjugations(&alg, &om, &states(&alg, &args.states, basis)?, &states(&alg, &args.on, basis)?, &cfg)
        }
        "double-dual" => {
            let vs = states(&alg, &args.states, || {
                let h = alg.h_state();
                let mut v = vec![h.clone(), alg.mode_apply(-1, &h)];
                if alg.is_lattice() {
                    v.push(alg.exp_state(1));
                }
                v
            })?;
            let us = states(&alg, &args.on, || basis_states(&alg, &[module_sector(&alg)], 1))?;
            check_double_dual(&alg, ws.omega, &vs, &us, &cfg)
        }
        "equivariance" => {
            let delta = map("Delta(h)")?;
            let sigma = sigma.unwrap_or(Automorphism::SigmaH(1));
            let samples = states(&alg, &args.states, || {
                let mut sectors = vec![Sector::vacuum()];
                if alg.is_lattice() {
                    sectors.extend([Sector::charge(1), Sector::charge(-1)]);
                }
                basis_states(&alg, &sectors, cfg.depth)
            })?;
            equivariance_check(&alg, &delta, &sigma, &samples)
        }
        other => return Err(VoaError::Config(format!("unknown identity {other:?}"))),
    };
    Ok(report)
}

fn dispatch(cmd: &Command, ws: &WorkspaceConfig) -> Result<Output> {
    match cmd {
        Command::Compute(c) => compute(c, ws),
        Command::Verify(args) => {
            let r = verify(args, ws)?;
            let json = serde_json::to_value(&r).expect("report serializes");
            Ok(Output { lines: vec![r.summary()], json, reports: vec![r] })
        }
        Command::Suite { name } => {
            let criteria = suite::suite(name).ok_or_else(|| {
                let known: Vec<&str> = suite::SUITES.iter().map(|(n, _)| *n).collect();
                VoaError::Config(format!("unknown suite {name:?} (known: {})", known.join(", ")))
            })?;
            let mut lines = Vec::new();
            let mut reports = Vec::new();
            for c in criteria {
                let r = c.run();
                lines.push(format!("[{:>2}] {:<20} {}", c.number, c.id, r.summary()));
                reports.push(r);
            }
            let json = json!({ "suite": name, "reports": reports });
            Ok(Output { lines, json, reports })
        }
    }
}
