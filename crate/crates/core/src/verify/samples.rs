use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{AlgebraSpec, FockVector, Sector};
use crate::scalars::Cyclotomic;
use crate::series::{exi, Exponent};

/// Window, depth and sampling parameters shared by the checks.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub lo: Exponent,
    pub hi: Exponent,
    pub depth: u32,
    pub k_max: u32,
    pub seed: u64,
    /// Random linear combinations added to each basis sample set.
    pub n_random: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { lo: exi(-6), hi: exi(6), depth: 3, k_max: 6, seed: 0, n_random: 2 }
    }
}

impl CheckConfig {
    pub fn window(lo: i64, hi: i64) -> Self {
        CheckConfig { lo: exi(lo), hi: exi(hi), ..Default::default() }
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }
}

/// All monomials of the given sectors up to `depth`, as vectors.
pub fn basis_states(alg: &AlgebraSpec, sectors: &[Sector], depth: u32) -> Vec<FockVector> {
    sectors
        .iter()
        .flat_map(|s| alg.basis_up_to(s, depth))
        .map(FockVector::from_monomial)
        .collect()
}

/// `n` seeded random combinations of up to three pool elements with small
/// integer coefficients. Pool elements are combined only within one sector.
pub fn random_combinations(pool: &[FockVector], n: usize, seed: u64) -> Vec<FockVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if pool.is_empty() {
        return out;
    }
    while out.len() < n {
        let first = &pool[rng.gen_range(0..pool.len())];
        let sector = first.terms().next().map(|(m, _)| m.sector.clone());
        let mut v = FockVector::new();
        for _ in 0..3 {
            let pick = &pool[rng.gen_range(0..pool.len())];
            if pick.terms().next().map(|(m, _)| m.sector.clone()) != sector {
                continue;
            }
            let c = match rng.gen_range(-3i64..=3) {
                0 => 1,
                c => c,
            };
            v = v.add(&pick.scaled(&Cyclotomic::from_int(c)));
        }
        if !v.is_empty() {
            out.push(v);
        }
    }
    out
}

/// Basis states followed by `n_random` random combinations of them.
pub fn sample_set(alg: &AlgebraSpec, sectors: &[Sector], cfg: &CheckConfig) -> Vec<FockVector> {
    let mut out = basis_states(alg, sectors, cfg.depth);
    let extra = random_combinations(&out, cfg.n_random, cfg.seed);
    out.extend(extra);
    out
}
