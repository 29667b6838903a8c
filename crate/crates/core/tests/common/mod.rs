#![allow(dead_code)]

use irid::random::{random_model, RandomModelParams};
use irid::{Config, IridModel, Policy};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn models(seed: u64, n: usize, params: RandomModelParams) -> Vec<IridModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_model(&mut rng, &params)).collect()
}

/// A uniformly random admissible policy per decision.
pub fn random_policies(model: &IridModel, rng: &mut impl Rng) -> Vec<Policy> {
    model
        .decisions()
        .into_iter()
        .map(|d| {
            Policy::from_fn(model, d, |c| {
                *model.admissible(d, c).unwrap().choose(rng).unwrap()
            })
            .unwrap()
        })
        .collect()
}

/// Every configuration of `vars`, row-major.
pub fn configs(model: &IridModel, vars: &[irid::VarId]) -> Vec<Config> {
    let cards: Vec<usize> = vars.iter().map(|&v| model.card(v)).collect();
    let mut out = Vec::new();
    irid::factors::for_each_config(&cards, |c| {
        out.push(vars.iter().copied().zip(c.iter().copied()).collect());
    });
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
