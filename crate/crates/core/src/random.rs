//! Random small models for property tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::factors::{for_each_config, Config};
use crate::model::{
    ArrowSpec, ConstraintSpec, CptSpec, IridModel, ModelSpecs, NodeSpec, Objective, ValueSpec,
};

#[derive(Clone, Copy, Debug)]
pub struct RandomModelParams {
    pub max_chance: usize,
    pub max_decisions: usize,
    /// Largest decision frame; chance nodes are always binary.
    pub max_alternatives: usize,
    pub arrow_probability: f64,
    pub zero_probability: f64,
    /// Models whose admissible policy space is larger are redrawn, so the
    /// exhaustive oracle stays cheap.
    pub max_policy_space: u128,
}

impl Default for RandomModelParams {
    fn default() -> Self {
        RandomModelParams {
            max_chance: 5,
            max_decisions: 2,
            max_alternatives: 3,
            arrow_probability: 0.4,
            zero_probability: 0.15,
            max_policy_space: 1 << 16,
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn cards_of(nodes: &[NodeSpec], names: &[String]) -> Vec<usize> {
    names
        .iter()
        .map(|n| {
            nodes
                .iter()
                .find(|s| &s.id == n)
                .and_then(|s| s.frame.as_ref())
                .map_or(0, |f| f.len())
        })
        .collect()
}

fn random_row(rng: &mut impl Rng, card: usize, zero_p: f64) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..card)
            .map(|_| {
                if rng.random_bool(zero_p) {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for x in row.iter_mut() {
                *x /= total;
            }
            // exact unit sum keeps validation away from rounding
            let head: f64 = row[..card - 1].iter().sum();
            row[card - 1] = (1.0 - head).max(0.0);
            return row;
        }
    }
}

/// Number of deterministic policy combinations that respect the constraints.
pub fn policy_space(model: &IridModel) -> u128 {
    let mut total = 1u128;
    for d in model.decisions() {
        let scope = model.parents(d);
        let cards: Vec<usize> = scope.iter().map(|&v| model.card(v)).collect();
        for_each_config(&cards, |c| {
            let cfg: Config = scope.iter().copied().zip(c.iter().copied()).collect();
            let n = model.admissible(d, &cfg).map_or(0, |a| a.len());
            total = total.saturating_mul(n as u128);
        });
    }
    total
}

/// A valid model with no-forgetting and completely ordered decisions, random
/// structure, tables and constraints. Chance nodes that nothing depends on
/// are left in place, so barren nodes occur.
pub fn random_model(rng: &mut impl Rng, params: &RandomModelParams) -> IridModel {
    loop {
        let m = draw_model(rng, params);
        if policy_space(&m) <= params.max_policy_space {
            return m;
        }
    }
}

fn draw_model(rng: &mut impl Rng, params: &RandomModelParams) -> IridModel {
    let n_chance = rng.random_range(1..=params.max_chance.max(1));
    let n_dec = rng.random_range(1..=params.max_decisions.max(1));

    // slot s: observed before decision s (s < n_dec) or never (s = n_dec)
    let slots: Vec<usize> = (0..n_chance).map(|_| rng.random_range(0..=n_dec)).collect();
    let mut order: Vec<(String, bool)> = Vec::new();
    for s in 0..=n_dec {
        for (i, _) in slots.iter().enumerate().filter(|(_, &x)| x == s) {
            order.push((format!("X{i}"), false));
        }
        if s < n_dec {
            order.push((format!("D{s}"), true));
        }
    }

    let mut nodes = Vec::new();
    for (name, is_dec) in &order {
        if *is_dec {
            let k = rng.random_range(2..=params.max_alternatives.max(2));
            nodes.push(NodeSpec::decision(name, labels("a", k)));
        } else {
            nodes.push(NodeSpec::chance(name, labels("x", 2)));
        }
    }
    nodes.push(NodeSpec::value("V"));

    let mut arrows = Vec::new();
    let mut cpts = Vec::new();
    let mut constraints = Vec::new();
    for (pos, (name, is_dec)) in order.iter().enumerate() {
        if *is_dec {
            // everything observed so far, including earlier decisions
            let parents: Vec<String> = order[..pos].iter().map(|(n, _)| n.clone()).collect();
            let scope: Vec<String> = parents
                .iter()
                .filter(|_| rng.random_bool(0.35))
                .take(2)
                .cloned()
                .collect();
            for p in &parents {
                if scope.contains(p) {
                    arrows.push(ArrowSpec::relevance(p, name));
                } else {
                    arrows.push(ArrowSpec::informational(p, name));
                }
            }
            let card = nodes[pos].frame.as_ref().unwrap().len();
            let alts = labels("a", card);
            let rows: usize = cards_of(&nodes, &scope).iter().product();
            let cells = (0..rows)
                .map(|_| {
                    let mut allow: Vec<String> = alts
                        .iter()
                        .filter(|_| rng.random_bool(0.7))
                        .cloned()
                        .collect();
                    if allow.is_empty() {
                        allow.push(alts.choose(rng).unwrap().clone());
                    }
                    allow
                })
                .collect();
            constraints.push(ConstraintSpec {
                decision: name.clone(),
                scope,
                cells,
            });
        } else {
            let parents: Vec<String> = order[..pos]
                .iter()
                .map(|(n, _)| n.clone())
                .filter(|_| rng.random_bool(params.arrow_probability))
                .take(3)
                .collect();
            for p in &parents {
                arrows.push(ArrowSpec::relevance(p, name));
            }
            let rows: usize = cards_of(&nodes, &parents).iter().product();
            cpts.push(CptSpec {
                child: name.clone(),
                parents,
                rows: (0..rows)
                    .map(|_| random_row(rng, 2, params.zero_probability))
                    .collect(),
            });
        }
    }

    let mut vparents: Vec<String> = order
        .iter()
        .map(|(n, _)| n.clone())
        .filter(|_| rng.random_bool(0.5))
        .take(4)
        .collect();
    if vparents.is_empty() {
        vparents.push(order.last().unwrap().0.clone());
    }
    for p in &vparents {
        arrows.push(ArrowSpec::relevance(p, "V"));
    }
    let rows: usize = cards_of(&nodes, &vparents).iter().product();
    let values = (0..rows)
        .map(|_| rng.random_range(-100..=100) as f64)
        .collect();

    ModelSpecs {
        nodes,
        arrows,
        cpts,
        constraints,
        value: ValueSpec {
            parents: vparents,
            values,
        },
        objective: Objective::Maximize,
    }
    .build()
    .expect("generated model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let m = random_model(&mut rng, &RandomModelParams::default());
            assert!(!m.decisions().is_empty());
            assert!(m.decisions().len() <= 2);
            assert!(m.chance_nodes().count() <= 5);
            assert!(policy_space(&m) <= 1 << 16);
        }
    }
}
