//! Brute-force ground truth for small models: exact expectations by full
//! enumeration and globally optimal policies by exhaustive search.

use crate::error::{IridError, Result};
use crate::factors::{config_count, for_each_config, Config, DenseState, Factor, VarId};
use crate::graph_ops::StageContext;
use crate::model::{IridModel, NodeKind, Policy};

/// Hard caps on enumeration sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_joint_configs: u128,
    pub max_policy_combinations: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_joint_configs: 10_000_000,
            max_policy_combinations: 1_000_000,
        }
    }
}

enum Step<'m> {
    Chance {
        var: VarId,
        card: usize,
        factor: &'m Factor,
    },
    Decision {
        var: VarId,
        slot: usize,
        scope: Vec<VarId>,
        cards: Vec<usize>,
    },
}

/// Depth-first enumerator over a model with pluggable decision tables.
struct Evaluator<'m> {
    steps: Vec<Step<'m>>,
    value: &'m Factor,
    capacity: usize,
}

impl<'m> Evaluator<'m> {
    fn new(model: &'m IridModel, budget: &EnumerationBudget) -> Result<Self> {
        let decisions = model.decisions();
        let mut steps = Vec::new();
        let mut cards = Vec::new();
        for v in model.topological_order() {
            match model.kind(v) {
                NodeKind::Chance => {
                    cards.push(model.card(v));
                    steps.push(Step::Chance {
                        var: v,
                        card: model.card(v),
                        factor: model.cpt(v).expect("validated").factor(),
                    });
                }
                NodeKind::Decision => {
                    cards.push(model.card(v));
                    let scope = model.parents(v);
                    let pc = scope.iter().map(|&p| model.card(p)).collect();
                    steps.push(Step::Decision {
                        var: v,
                        slot: decisions.iter().position(|&d| d == v).unwrap(),
                        scope,
                        cards: pc,
                    });
                }
                NodeKind::Value => {}
            }
        }
        let needed = config_count(&cards);
        if needed > budget.max_joint_configs {
            return Err(IridError::BudgetExceeded {
                what: "joint configurations",
                needed,
                cap: budget.max_joint_configs,
            });
        }
        Ok(Evaluator {
            steps,
            value: model.value_table().factor(),
            capacity: model.capacity(),
        })
    }

    /// E[V] with decision tables indexed by position in the decision order.
    fn expectation(&self, tables: &[&[usize]]) -> f64 {
        let mut state = DenseState::new(self.capacity);
        self.dfs(0, &mut state, 1.0, tables)
    }

    fn dfs(&self, i: usize, state: &mut DenseState, weight: f64, tables: &[&[usize]]) -> f64 {
        let Some(step) = self.steps.get(i) else {
            return weight * self.value.evaluate_total(state);
        };
        match step {
            Step::Chance { var, card, factor } => {
                let mut total = 0.0;
                for x in 0..*card {
                    state.set(*var, x);
                    let p = factor.evaluate_total(state);
                    if p != 0.0 {
                        total += self.dfs(i + 1, state, weight * p, tables);
                    }
                }
                state.unset(*var);
                total
            }
            Step::Decision {
                var,
                slot,
                scope,
                cards,
            } => {
                let mut row = 0;
                for (&p, &c) in scope.iter().zip(cards) {
                    row = row * c + state.get(p).expect("parents precede children");
                }
                state.set(*var, tables[*slot][row]);
                let total = self.dfs(i + 1, state, weight, tables);
                state.unset(*var);
                total
            }
        }
    }
}

/// Expected value of V when every decision follows the given policy.
pub fn exact_expectation(
    model: &IridModel,
    policies: &[Policy],
    budget: &EnumerationBudget,
) -> Result<f64> {
    let mut tables = Vec::new();
    for d in model.decisions() {
        let p = policies
            .iter()
            .find(|p| p.decision() == d)
            .ok_or_else(|| IridError::MissingPolicy(model.name(d).into()))?;
        if p.scope() != model.parents(d).as_slice() {
            return Err(IridError::InvalidPolicy {
                decision: model.name(d).into(),
                reason: "scope differs from the decision's parents".into(),
            });
        }
        tables.push(p.table());
    }
    let eval = Evaluator::new(model, budget)?;
    Ok(eval.expectation(&tables))
}

/// Exact conditional expectation of the stage value given an assignment of
/// the dependency set and the stage decision.
pub fn exact_stage_expectation(
    ctx: &StageContext,
    fixed: &Config,
    budget: &EnumerationBudget,
) -> Result<f64> {
    for v in ctx.fixed_vars() {
        if !fixed.contains(v) {
            return Err(IridError::IncompleteConfig(
                ctx.describe(&Config::new().with(v, 0)),
            ));
        }
    }
    let cards: Vec<usize> = ctx.free.iter().map(|&v| ctx.card(v)).collect();
    let needed = config_count(&cards);
    if needed > budget.max_joint_configs {
        return Err(IridError::BudgetExceeded {
            what: "stage configurations",
            needed,
            cap: budget.max_joint_configs,
        });
    }
    let probs: Vec<&Factor> = ctx.probability_factors().map(|f| &f.factor).collect();
    let value = ctx.value_factor();
    let mut state = DenseState::from_config(ctx.capacity, fixed);
    let (mut mass, mut mean) = (0.0, 0.0);
    for_each_config(&cards, |c| {
        for (&v, &x) in ctx.free.iter().zip(c) {
            state.set(v, x);
        }
        let w: f64 = probs.iter().map(|f| f.evaluate_total(&state)).product();
        if w != 0.0 {
            mass += w;
            mean += w / mass * (value.evaluate_total(&state) - mean);
        }
    });
    if mass == 0.0 {
        return Err(IridError::ZeroNormalizer {
            config: ctx.describe(fixed),
        });
    }
    Ok(mean)
}

/// Tries every constraint-respecting combination of deterministic policies and
/// returns the best one with its expected value. Combinations are visited in
/// odometer order (decisions in path order, cells row-major, alternatives in
/// frame order, last cell fastest); only strict improvements replace the
/// incumbent.
pub fn exhaustive_policy_search(
    model: &IridModel,
    budget: &EnumerationBudget,
) -> Result<(Vec<Policy>, f64)> {
    let decisions = model.decisions();
    // (decision slot, admissible alternatives) per cell
    let mut cells: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut sizes = Vec::new();
    for (slot, &d) in decisions.iter().enumerate() {
        let scope = model.parents(d);
        let cards: Vec<usize> = scope.iter().map(|&p| model.card(p)).collect();
        let mut err = None;
        for_each_config(&cards, |c| {
            let cfg: Config = scope.iter().copied().zip(c.iter().copied()).collect();
            match model.admissible(d, &cfg) {
                Ok(a) => cells.push((slot, a)),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        sizes.push(config_count(&cards) as usize);
    }
    let needed = cells
        .iter()
        .fold(1u128, |acc, (_, a)| acc.saturating_mul(a.len() as u128));
    if needed > budget.max_policy_combinations {
        return Err(IridError::BudgetExceeded {
            what: "policy combinations",
            needed,
            cap: budget.max_policy_combinations,
        });
    }
    let eval = Evaluator::new(model, budget)?;
    let objective = model.objective();

    let mut counters = vec![0usize; cells.len()];
    let mut tables: Vec<Vec<usize>> = sizes.iter().map(|&n| vec![0; n]).collect();
    let mut offsets = Vec::with_capacity(cells.len());
    {
        let mut seen = vec![0usize; decisions.len()];
        for (slot, alts) in &cells {
            offsets.push(seen[*slot]);
            tables[*slot][seen[*slot]] = alts[0];
            seen[*slot] += 1;
        }
    }

    let mut best_tables = tables.clone();
    let mut best = f64::NAN;
    loop {
        let refs: Vec<&[usize]> = tables.iter().map(Vec::as_slice).collect();
        let value = eval.expectation(&refs);
        if best.is_nan() || objective.improves(value, best) {
            best = value;
            best_tables.clone_from(&tables);
        }
        // advance the odometer
        let mut i = cells.len();
        loop {
            if i == 0 {
                let policies = decisions
                    .iter()
                    .zip(best_tables)
                    .map(|(&d, t)| Policy::new(model, d, t))
                    .collect::<Result<Vec<_>>>()?;
                return Ok((policies, best));
            }
            i -= 1;
            let (slot, alts) = &cells[i];
            counters[i] += 1;
            if counters[i] < alts.len() {
                tables[*slot][offsets[i]] = alts[counters[i]];
                break;
            }
            counters[i] = 0;
            tables[*slot][offsets[i]] = alts[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::wildcatter_irid;
    use crate::graph_ops::last_stage_context;
    use crate::model::{ArrowSpec, ModelSpecs, NodeSpec, Objective, ValueSpec};

    fn constant_policies(m: &IridModel, t: &str, d: &str) -> Vec<Policy> {
        let tv = m.var("T").unwrap();
        let dv = m.var("D").unwrap();
        vec![
            Policy::constant(m, tv, m.value_index(tv, t).unwrap()).unwrap(),
            Policy::from_fn(m, dv, |c| {
                let want = m.value_index(dv, d).unwrap();
                let adm = m.admissible(dv, c).unwrap();
                if adm.contains(&want) {
                    want
                } else {
                    adm[0]
                }
            })
            .unwrap(),
        ]
    }

    #[test]
    fn no_test_then_drill() {
        let m = wildcatter_irid();
        let v =
            exact_expectation(&m, &constant_policies(&m, "nt", "d"), &Default::default()).unwrap();
        assert!((v - 250_000.0).abs() < 0.005, "{v}");
    }

    #[test]
    fn no_test_no_drill() {
        let m = wildcatter_irid();
        let v =
            exact_expectation(&m, &constant_policies(&m, "nt", "nd"), &Default::default()).unwrap();
        assert!((v + 1_200_000.0).abs() < 0.005, "{v}");
    }

    #[test]
    fn constant_value_is_returned() {
        let m = wildcatter_irid().map_values(|_| 7.5);
        let v =
            exact_expectation(&m, &constant_policies(&m, "t1", "d"), &Default::default()).unwrap();
        assert!((v - 7.5).abs() < 1e-12);
    }

    #[test]
    fn missing_policy() {
        let m = wildcatter_irid();
        let p = constant_policies(&m, "nt", "d");
        let err = exact_expectation(&m, &p[..1], &Default::default()).unwrap_err();
        assert_eq!(err, IridError::MissingPolicy("D".into()));
    }

    #[test]
    fn joint_budget() {
        let m = wildcatter_irid();
        let b = EnumerationBudget {
            max_joint_configs: 10,
            ..Default::default()
        };
        let err = exact_expectation(&m, &constant_policies(&m, "nt", "d"), &b).unwrap_err();
        assert!(matches!(err, IridError::BudgetExceeded { needed: 72, .. }));
    }

    #[test]
    fn stage_expectation_after_test_one_clear() {
        let m = wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        let fixed = m
            .config(&[("B", "$2M"), ("T", "t1"), ("R", "c"), ("D", "d")])
            .unwrap();
        let v = exact_stage_expectation(&ctx, &fixed, &Default::default()).unwrap();
        assert!((v - 846_153.846_153).abs() < 0.01, "{v}");
    }

    #[test]
    fn stage_expectation_impossible_evidence() {
        let m = wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        let fixed = m
            .config(&[("B", "$2M"), ("T", "nt"), ("R", "c"), ("D", "d")])
            .unwrap();
        let err = exact_stage_expectation(&ctx, &fixed, &Default::default()).unwrap_err();
        assert!(matches!(err, IridError::ZeroNormalizer { .. }));
    }

    #[test]
    fn stage_expectation_constant_value() {
        let m = wildcatter_irid().map_values(|_| -3.0);
        let (_, ctx) = last_stage_context(&m).unwrap();
        let fixed = m
            .config(&[("B", "$1M"), ("T", "t2"), ("R", "o"), ("D", "nd")])
            .unwrap();
        let v = exact_stage_expectation(&ctx, &fixed, &Default::default()).unwrap();
        assert_eq!(v, -3.0);
    }

    fn one_decision(values: Vec<f64>, objective: Objective) -> IridModel {
        ModelSpecs {
            nodes: vec![NodeSpec::decision("d", ["a", "b"]), NodeSpec::value("v")],
            arrows: vec![ArrowSpec::relevance("d", "v")],
            cpts: vec![],
            constraints: vec![],
            value: ValueSpec {
                parents: vec!["d".into()],
                values,
            },
            objective,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn single_binary_decision() {
        let m = one_decision(vec![1.0, 0.0], Objective::Maximize);
        let (p, v) = exhaustive_policy_search(&m, &Default::default()).unwrap();
        assert_eq!(p[0].table(), &[0]);
        assert_eq!(v, 1.0);

        let m = one_decision(vec![1.0, 0.0], Objective::Minimize);
        let (p, v) = exhaustive_policy_search(&m, &Default::default()).unwrap();
        assert_eq!(p[0].table(), &[1]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ties_keep_the_first_combination() {
        let m = one_decision(vec![2.0, 2.0], Objective::Maximize);
        let (p, _) = exhaustive_policy_search(&m, &Default::default()).unwrap();
        assert_eq!(p[0].table(), &[0]);
    }

    #[test]
    fn wildcatter_optimum() {
        let m = wildcatter_irid();
        let (p, v) = exhaustive_policy_search(&m, &Default::default()).unwrap();
        assert!((v - 334_750.0).abs() < 1e-6, "{v}");
        let t = m.var("T").unwrap();
        let b2 = m.config(&[("B", "$2M")]).unwrap();
        let b1 = m.config(&[("B", "$1M")]).unwrap();
        assert_eq!(m.label(t, p[0].choice(&b2).unwrap()), "t2");
        assert_eq!(m.label(t, p[0].choice(&b1).unwrap()), "nt");
    }

    #[test]
    fn policy_budget() {
        let m = wildcatter_irid();
        let b = EnumerationBudget {
            max_policy_combinations: 100,
            ..Default::default()
        };
        let err = exhaustive_policy_search(&m, &b).unwrap_err();
        assert!(matches!(
            err,
            IridError::BudgetExceeded {
                what: "policy combinations",
                ..
            }
        ));
    }
}
