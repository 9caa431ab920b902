//! Exact, windowed verification of the identities, each producing a [`Report`].

mod action;
mod conjugation;
mod module;
mod pseudo;
mod report;
mod samples;
mod theorem;

pub use conjugation::{check_conjugations, l_minus_one_sides};
pub use action::{Deformed, Dual, ModuleAction, Untwisted};
pub use module::{
    bi_mismatch, check_locality, check_sigma_compat, check_twisted_module, check_vacuum, check_weak_associativity,
    commutator, find_commutativity_order, product,
};
pub use pseudo::{check_pseudo_derivation, check_pseudo_derivation_all, check_pseudo_endo, check_pseudo_endo_all};
pub use report::{Outcome, Report, Witness, WindowSpec};
pub use theorem::{check_double_dual, check_thm_main, quarter_turn, thm_main_sides};
pub use samples::{basis_states, random_combinations, sample_set, CheckConfig};
