mod common;

use std::collections::BTreeSet;

use common::{close, configs, models, random_policies};
use irid::graph_ops::last_stage_context;
use irid::model::fix_policies;
use irid::random::RandomModelParams;
use irid::{
    absorb_decision, compute_partition, exact_expectation, exhaustive_policy_search, moralize,
    relevance_subgraph, remove_barren, solve, Config, EnumerationBudget, NodeKind, SolveOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn desk_scale() -> RandomModelParams {
    RandomModelParams {
        max_chance: 4,
        max_decisions: 2,
        max_alternatives: 2,
        ..Default::default()
    }
}

#[test]
fn moral_edges_are_arrows_or_married_parents() {
    for m in models(21, 100, RandomModelParams::default()) {
        let g = relevance_subgraph(&m);
        let moral = moralize(&g);
        let vs: Vec<_> = g.vertices().iter().copied().collect();
        for &x in &vs {
            for &y in &vs {
                if x >= y {
                    continue;
                }
                let arrow = g.has_arrow(x, y) || g.has_arrow(y, x);
                let married = vs.iter().any(|&z| g.has_arrow(x, z) && g.has_arrow(y, z));
                assert_eq!(moral.has_edge(x, y), arrow || married, "{x} {y}\n{m}");
            }
        }
    }
}

#[test]
fn partition_blocks_are_disjoint_and_exhaustive() {
    for m in models(
        22,
        100,
        RandomModelParams {
            max_decisions: 3,
            ..Default::default()
        },
    ) {
        let p = compute_partition(&m);
        let mut seen = BTreeSet::new();
        for b in p.blocks() {
            for &v in b {
                assert!(seen.insert(v), "{v} in two blocks");
            }
        }
        let expected: BTreeSet<_> = m
            .variables()
            .filter(|&v| m.kind(v) != NodeKind::Value)
            .collect();
        assert_eq!(seen, expected);
        assert!(p.block(0).iter().all(|&v| m.kind(v) == NodeKind::Chance));
        for (i, &d) in m.decisions().iter().enumerate() {
            assert_eq!(p.decision_of_block(i + 1), Some(d));
            assert!(p.block(i + 1).contains(&d));
        }
    }
}

#[test]
fn barren_removal_keeps_the_optimum() {
    let budget = EnumerationBudget::default();
    let mut removed_something = 0;
    for m in models(23, 50, desk_scale()) {
        let r = remove_barren(&m);
        if r.variables().count() < m.variables().count() {
            removed_something += 1;
        }
        let (_, full) = exhaustive_policy_search(&m, &budget).unwrap();
        let (pr, pruned) = exhaustive_policy_search(&r, &budget).unwrap();
        assert!(close(full, pruned, 1e-9), "{full} vs {pruned}\n{m}");
        // the pruned optimum stays optimal once the surviving policies are
        // put back into the full model
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = random_policies(&m, &mut rng);
        for p in ps.iter_mut() {
            if let Some(q) = pr.iter().find(|q| q.decision() == p.decision()) {
                *p = q.clone();
            }
        }
        let v = exact_expectation(&m, &ps, &budget).unwrap();
        assert!(close(v, full, 1e-9), "{v} vs {full}\n{m}");
    }
    assert!(removed_something > 5);
}

#[test]
fn barren_removal_is_idempotent() {
    for m in models(24, 50, RandomModelParams::default()) {
        let once = remove_barren(&m);
        assert_eq!(remove_barren(&once), once);
    }
}

#[test]
fn absorption_preserves_the_joint() {
    let budget = EnumerationBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut all = models(
        25,
        60,
        RandomModelParams {
            max_chance: 4,
            ..Default::default()
        },
    );
    all.push(irid::bundled::wildcatter_irid());
    for m in all {
        let policies = random_policies(&m, &mut rng);
        let last = *m.decisions().last().unwrap();
        let pl = policies.iter().find(|p| p.decision() == last).unwrap();
        let a = absorb_decision(&m, last, pl).unwrap();
        let rest: Vec<_> = policies
            .iter()
            .filter(|p| p.decision() != last)
            .cloned()
            .collect();

        let before = exact_expectation(&m, &policies, &budget).unwrap();
        let after = exact_expectation(&a, &rest, &budget).unwrap();
        assert!(close(before, after, 1e-9), "{before} vs {after}");

        // joint over the surviving variables
        let bn = fix_policies(&m, &policies).unwrap();
        let abn = fix_policies(&a, &rest).unwrap();
        let vars: Vec<_> = a
            .variables()
            .filter(|&v| a.kind(v) != NodeKind::Value)
            .collect();
        for c in configs(&a, &vars) {
            let full: Config = c.clone().with(last, pl.choice(&c).unwrap());
            let p = bn.joint_probability(&full).unwrap();
            let q = abn.joint_probability(&c).unwrap();
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }
}

#[test]
fn stage_context_sets_are_consistent() {
    for m in models(26, 100, RandomModelParams::default()) {
        let m = remove_barren(&m);
        if m.decisions().is_empty() {
            continue;
        }
        let (_, ctx) = last_stage_context(&m).unwrap();
        let v = m.value_node();
        assert!(ctx.gamma_prime.contains(&ctx.decision));
        assert!(!ctx.gamma_prime.contains(&v));
        assert!(ctx.dependency_set.is_disjoint(&ctx.gamma_prime));
        assert!(!ctx.dependency_set.contains(&v));
        // the decision only ever depends on what it observes
        let parents = m.parents(ctx.decision);
        assert!(
            ctx.dependency_set.iter().all(|d| parents.contains(d)),
            "{m}"
        );
    }
}

#[test]
fn dp_value_survives_barren_removal() {
    for m in models(27, 30, desk_scale()) {
        let a = solve(&m, &SolveOptions::exact()).unwrap();
        let b = solve(&remove_barren(&m), &SolveOptions::exact()).unwrap();
        assert!(close(a.expected_value, b.expected_value, 1e-9));
    }
}
