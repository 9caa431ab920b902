use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::deform::TensorVec;
use crate::fock::{AlgebraSpec, FockVector};
use crate::scalars::render_ratio;
use crate::series::{render_key, Exponent, Key};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// First mismatching coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Series position, e.g. `x^{-2}` or `x1^{-1} x2^{0} | z^{1/2} log^1`.
    pub key: String,
    pub monomial: String,
    pub left: String,
    pub right: String,
    /// The sample the mismatch occurred on.
    pub sample: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lo: String,
    pub hi: String,
}

impl WindowSpec {
    pub fn new(lo: Exponent, hi: Exponent) -> Self {
        WindowSpec { lo: render_ratio(&lo), hi: render_ratio(&hi) }
    }

    /// For comparisons of exactly known (finite) series.
    pub fn exact() -> Self {
        WindowSpec { lo: "-inf".into(), hi: "inf".into() }
    }
}

impl Witness {
    /// Witness from two differing state vectors at a series position.
    pub fn from_states(alg: &AlgebraSpec, key: String, left: &FockVector, right: &FockVector, sample: &str) -> Self {
        let diff = left.sub(right);
        let (monomial, l, r) = match diff.terms().next() {
            Some((m, _)) => {
                let n = alg.cyclo_order;
                (alg.render_monomial(m), left.get(m).render(n), right.get(m).render(n))
            }
            None => ("-".into(), alg.render(left), alg.render(right)),
        };
        Witness { key, monomial, left: l, right: r, sample: sample.into() }
    }

    /// Witness from two differing elements of `V (x) R`.
    pub fn from_tensors(alg: &AlgebraSpec, outer: &str, left: &TensorVec, right: &TensorVec, sample: &str) -> Self {
        match left.first_mismatch(right) {
            Some((k, a, b)) => {
                let key = if outer.is_empty() { render_z_key(&k) } else { format!("{outer} | {}", render_z_key(&k)) };
                Witness::from_states(alg, key, &a, &b, sample)
            }
            None => Witness { key: outer.into(), monomial: "-".into(), left: "?".into(), right: "?".into(), sample: sample.into() },
        }
    }
}

fn render_z_key(k: &Key) -> String {
    let r = render_key(k);
    if r.is_empty() {
        "z^{0}".into()
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub identity_id: String,
    pub config: BTreeMap<String, String>,
    pub samples: Vec<String>,
    pub window: WindowSpec,
    pub k_used: Option<u32>,
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    /// Free-form detail, e.g. the limiting coefficient of an inconclusive run.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(identity_id: &str, alg: &AlgebraSpec, window: WindowSpec) -> Self {
        let mut config = BTreeMap::new();
        config.insert("gamma".into(), render_ratio(&alg.gamma));
        config.insert("lattice".into(), alg.lattice_halfnorm.to_string());
        config.insert("hcoeff".into(), render_ratio(&alg.h_coeff));
        config.insert("cyclo".into(), alg.cyclo_order.to_string());
        config.insert("rootden".into(), alg.root_denom.to_string());
        Report {
            identity_id: identity_id.into(),
            config,
            samples: Vec::new(),
            window,
            k_used: None,
            outcome: Outcome::Pass,
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// Records a failure unless one is already recorded.
    pub fn fail(&mut self, w: Witness) {
        if self.outcome != Outcome::Fail {
            self.outcome = Outcome::Fail;
            self.witness = Some(w);
        }
    }

    pub fn inconclusive(&mut self, note: String) {
        if self.outcome == Outcome::Pass {
            self.outcome = Outcome::Inconclusive;
        }
        self.notes.push(note);
    }

    /// Folds a sub-report in: fail beats inconclusive beats pass.
    pub fn absorb(&mut self, other: Report) {
        match other.outcome {
            Outcome::Fail => {
                if let Some(w) = other.witness {
                    self.fail(w);
                }
            }
            Outcome::Inconclusive => {
                if self.outcome == Outcome::Pass {
                    self.outcome = Outcome::Inconclusive;
                }
            }
            Outcome::Pass => {}
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("{}: {n}", other.identity_id)));
        if self.k_used.is_none() {
            self.k_used = other.k_used;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary for terminal output.
    pub fn summary(&self) -> String {
        let outcome = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        };
        let mut line = format!("{outcome:<12} {} ({} samples, window [{}, {}])", self.identity_id, self.samples.len(), self.window.lo, self.window.hi);
        if let Some(k) = self.k_used {
            line.push_str(&format!(", k = {k}"));
        }
        if let Some(w) = &self.witness {
            line.push_str(&format!("\n             witness at {} on {}: {} != {} [sample {}]", w.key, w.monomial, w.left, w.right, w.sample));
        }
        line
    }
}
