//! Backward dynamic programming over decision stages.
//!
//! Each stage builds the context of the last remaining decision, picks the
//! best admissible alternative for every configuration of the dependency set,
//! and absorbs the resulting decision function into the model before moving
//! one stage back.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{IridError, Result};
use crate::factors::{for_each_config, Config, VarId};
use crate::gibbs::{self, derive_seed, SamplerConfig};
use crate::graph_ops::{
    absorb_decision, build_stage_context, compute_partition, moralize, relevance_subgraph,
    remove_barren, StageContext,
};
use crate::model::{IridModel, Objective, Policy};
use crate::oracle::{self, EnumerationBudget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Gibbs,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Gibbs => "gibbs",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    /// Required for the Gibbs backend, absent otherwise.
    pub sampler: Option<SamplerConfig>,
    pub objective_override: Option<Objective>,
    /// Share one random stream across the alternatives of a cell.
    pub crn: bool,
    pub budget: EnumerationBudget,
}

impl SolveOptions {
    pub fn exact() -> Self {
        SolveOptions {
            backend: Backend::Exact,
            sampler: None,
            objective_override: None,
            crn: false,
            budget: EnumerationBudget::default(),
        }
    }

    pub fn gibbs(sampler: SamplerConfig) -> Self {
        SolveOptions {
            backend: Backend::Gibbs,
            sampler: Some(sampler),
            ..SolveOptions::exact()
        }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective_override = Some(objective);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.backend, &self.sampler) {
            (Backend::Exact, None) => Ok(()),
            (Backend::Gibbs, Some(s)) => s.validate(),
            (Backend::Exact, Some(_)) => Err(IridError::InvalidSamplerConfig(
                "sampler settings given for the exact backend".into(),
            )),
            (Backend::Gibbs, None) => Err(IridError::InvalidSamplerConfig(
                "the gibbs backend needs sampler settings".into(),
            )),
        }
    }
}

/// Value recorded for one alternative of a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlternativeValue {
    pub alternative: usize,
    pub value: f64,
    /// Present for sampled values.
    pub std_error: Option<f64>,
    pub n: Option<usize>,
}

/// One optimized cell: a configuration of the stage's dependency set.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDiagnostic {
    pub stage: usize,
    pub decision: VarId,
    pub config: Config,
    pub evaluated: Vec<AlternativeValue>,
    pub chosen: usize,
    /// The configuration has probability zero given the stage factors; the
    /// first admissible alternative was taken.
    pub unreachable: bool,
}

impl CellDiagnostic {
    pub fn value_of(&self, alternative: usize) -> Option<&AlternativeValue> {
        self.evaluated.iter().find(|a| a.alternative == alternative)
    }

    pub fn chosen_value(&self) -> Option<&AlternativeValue> {
        self.value_of(self.chosen)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// One policy per decision of the input model, in path order.
    pub policies: Vec<Policy>,
    pub expected_value: f64,
    /// Standard error of the terminal value (Gibbs backend only).
    pub expected_value_std_error: Option<f64>,
    pub diagnostics: Vec<CellDiagnostic>,
    pub backend: Backend,
    pub sampler: Option<SamplerConfig>,
    pub objective: Objective,
    pub crn: bool,
}

impl Solution {
    pub fn policy(&self, decision: VarId) -> Option<&Policy> {
        self.policies.iter().find(|p| p.decision() == decision)
    }

    /// Same decision tables (ignores values and diagnostics).
    pub fn same_policies(&self, other: &Solution) -> bool {
        self.policies == other.policies
    }
}

/// How a single cell is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum CellBackend<'a> {
    Exact(&'a EnumerationBudget),
    /// `cell` is the cell's index within its stage, used for seed derivation.
    Gibbs {
        sampler: &'a SamplerConfig,
        cell: usize,
        crn: bool,
    },
}

fn is_zero_mass(e: &IridError) -> bool {
    matches!(
        e,
        IridError::ZeroNormalizer { .. } | IridError::NoPositiveState { .. }
    )
}

/// Evaluates every admissible alternative at one dependency-set configuration
/// and keeps the best; ties go to the earliest alternative in frame order.
pub fn optimize_cell(
    ctx: &StageContext,
    predecessor: &Config,
    admissible: &[usize],
    objective: Objective,
    backend: CellBackend<'_>,
) -> Result<CellDiagnostic> {
    let mut evaluated = Vec::with_capacity(admissible.len());
    for &a in admissible {
        let fixed = predecessor.clone().with(ctx.decision, a);
        let outcome = match backend {
            CellBackend::Exact(budget) => {
                oracle::exact_stage_expectation(ctx, &fixed, budget).map(|v| AlternativeValue {
                    alternative: a,
                    value: v,
                    std_error: None,
                    n: None,
                })
            }
            CellBackend::Gibbs { sampler, cell, crn } => {
                let seed = derive_seed(sampler.seed, ctx.stage, cell, (!crn).then_some(a));
                let cfg = sampler.with_seed(seed);
                gibbs::estimate_expectation(ctx, &fixed, ctx.value_factor(), &cfg).map(|e| {
                    AlternativeValue {
                        alternative: a,
                        value: e.mean,
                        std_error: Some(e.std_error),
                        n: Some(e.n),
                    }
                })
            }
        };
        match outcome {
            Ok(v) => evaluated.push(v),
            Err(e) if is_zero_mass(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let mut best: Option<&AlternativeValue> = None;
    for v in &evaluated {
        if best.is_none_or(|b| objective.improves(v.value, b.value)) {
            best = Some(v);
        }
    }
    let (chosen, unreachable) = match best {
        Some(b) => (b.alternative, false),
        None => (admissible[0], true),
    };
    Ok(CellDiagnostic {
        stage: ctx.stage,
        decision: ctx.decision,
        config: predecessor.clone(),
        evaluated,
        chosen,
        unreachable,
    })
}

/// Expected value of V once every decision has been absorbed.
pub fn terminal_expected_value(
    model: &IridModel,
    options: &SolveOptions,
) -> Result<(f64, Option<f64>)> {
    match (options.backend, &options.sampler) {
        (Backend::Gibbs, Some(s)) => {
            let cfg = s.with_seed(derive_seed(s.seed, 0, 0, None));
            let e = gibbs::ancestral_expectation(model, &cfg)?;
            Ok((e.mean, Some(e.std_error)))
        }
        _ => Ok((
            oracle::exact_expectation(model, &[], &options.budget)?,
            None,
        )),
    }
}

fn first_admissible_policy(model: &IridModel, d: VarId) -> Result<Policy> {
    let mut err = None;
    let p = Policy::from_fn(model, d, |c| match model.admissible(d, c) {
        Ok(a) => a[0],
        Err(e) => {
            err = Some(e);
            0
        }
    });
    match err {
        Some(e) => Err(e),
        None => p,
    }
}

/// Solves the model stage by stage, last decision first.
pub fn solve(model: &IridModel, options: &SolveOptions) -> Result<Solution> {
    options.validate()?;
    let objective = options.objective_override.unwrap_or(model.objective());
    let mut working = remove_barren(model).with_objective(objective);
    let mut solved: BTreeMap<VarId, Policy> = BTreeMap::new();
    let mut diagnostics = Vec::new();

    while !working.decisions().is_empty() {
        let partition = compute_partition(&working);
        let moral = moralize(&relevance_subgraph(&working));
        let ctx = build_stage_context(&working, &partition, &moral, partition.stages())?;
        let decision = ctx.decision;
        let deps: Vec<VarId> = ctx.dependency_set.iter().copied().collect();
        let cards: Vec<usize> = deps.iter().map(|&v| ctx.card(v)).collect();
        let mut cells = Vec::new();
        for_each_config(&cards, |c| {
            cells.push(
                deps.iter()
                    .copied()
                    .zip(c.iter().copied())
                    .collect::<Config>(),
            );
        });
        let constraint = working.constraint(decision);
        let admissible = cells
            .iter()
            .map(|c| constraint.allowed_at(c).map(<[usize]>::to_vec))
            .collect::<Result<Vec<_>>>()?;

        let outcomes: Vec<CellDiagnostic> = cells
            .par_iter()
            .zip(admissible.par_iter())
            .enumerate()
            .map(|(i, (cell, adm))| {
                let backend = match &options.sampler {
                    Some(s) if options.backend == Backend::Gibbs => CellBackend::Gibbs {
                        sampler: s,
                        cell: i,
                        crn: options.crn,
                    },
                    _ => CellBackend::Exact(&options.budget),
                };
                optimize_cell(&ctx, cell, adm, objective, backend)
            })
            .collect::<Result<Vec<_>>>()?;

        let chosen: BTreeMap<Config, usize> = outcomes
            .iter()
            .map(|d| (d.config.clone(), d.chosen))
            .collect();
        let policy = Policy::from_fn(&working, decision, |c| chosen[&c.project(&deps)])?;
        working = absorb_decision(&working, decision, &policy)?;
        solved.insert(decision, policy);
        diagnostics.extend(outcomes);
    }

    let (expected_value, expected_value_std_error) = terminal_expected_value(&working, options)?;

    let policies = model
        .decisions()
        .into_iter()
        .map(|d| match solved.remove(&d) {
            Some(p) => Ok(p),
            None => first_admissible_policy(model, d),
        })
        .collect::<Result<Vec<_>>>()?;
    diagnostics.sort_by_key(|d| d.stage);

    Ok(Solution {
        policies,
        expected_value,
        expected_value_std_error,
        diagnostics,
        backend: options.backend,
        sampler: options.sampler,
        objective,
        crn: options.crn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::wildcatter_irid;
    use crate::graph_ops::last_stage_context;
    use crate::model::{ArrowSpec, ModelSpecs, NodeSpec, ValueSpec};

    #[test]
    fn wildcatter_exact() {
        let m = wildcatter_irid();
        let s = solve(&m, &SolveOptions::exact()).unwrap();
        assert!(
            (s.expected_value - 334_750.0).abs() < 1e-6,
            "{}",
            s.expected_value
        );
        let d = m.var("D").unwrap();
        let nd = m.value_index(d, "nd").unwrap();
        let pd = s.policy(d).unwrap();
        for r in ["o", "c", "nr"] {
            let c = m.config(&[("B", "$1M"), ("T", "t2"), ("R", r)]).unwrap();
            assert_eq!(pd.choice(&c).unwrap(), nd);
        }
    }

    #[test]
    fn forced_cell_evaluates_only_the_admissible_alternative() {
        let m = wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        let d = m.var("D").unwrap();
        let nd = m.value_index(d, "nd").unwrap();
        let cell = m.config(&[("B", "$1M"), ("T", "t2"), ("R", "c")]).unwrap();
        let adm = m.admissible(d, &cell).unwrap();
        assert_eq!(adm, vec![nd]);
        let b = EnumerationBudget::default();
        let out = optimize_cell(
            &ctx,
            &cell,
            &adm,
            Objective::Maximize,
            CellBackend::Exact(&b),
        )
        .unwrap();
        assert_eq!(out.chosen, nd);
        assert_eq!(out.evaluated.len(), 1);
    }

    #[test]
    fn no_test_cell_prefers_drilling() {
        let m = wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        let d = m.var("D").unwrap();
        let cell = m.config(&[("B", "$2M"), ("T", "nt"), ("R", "nr")]).unwrap();
        let b = EnumerationBudget::default();
        let out = optimize_cell(
            &ctx,
            &cell,
            &[0, 1],
            Objective::Maximize,
            CellBackend::Exact(&b),
        )
        .unwrap();
        assert_eq!(m.label(d, out.chosen), "d");
        assert!((out.value_of(0).unwrap().value - 250_000.0).abs() < 1e-6);
        assert!((out.value_of(1).unwrap().value + 1_200_000.0).abs() < 1e-6);
    }

    #[test]
    fn zero_mass_cell_is_flagged() {
        let m = wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        let cell = m.config(&[("B", "$2M"), ("T", "nt"), ("R", "c")]).unwrap();
        let b = EnumerationBudget::default();
        let out = optimize_cell(
            &ctx,
            &cell,
            &[0, 1],
            Objective::Maximize,
            CellBackend::Exact(&b),
        )
        .unwrap();
        assert!(out.unreachable);
        assert_eq!(out.chosen, 0);
    }

    fn flat(values: Vec<f64>) -> IridModel {
        ModelSpecs {
            nodes: vec![
                NodeSpec::decision("d", ["a", "b", "c"]),
                NodeSpec::value("v"),
            ],
            arrows: vec![ArrowSpec::relevance("d", "v")],
            cpts: vec![],
            constraints: vec![],
            value: ValueSpec {
                parents: vec!["d".into()],
                values,
            },
            objective: Objective::Maximize,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn single_decision_argmax() {
        let m = flat(vec![1.0, 5.0, 3.0]);
        let s = solve(&m, &SolveOptions::exact()).unwrap();
        assert_eq!(s.policies[0].table(), &[1]);
        assert_eq!(s.expected_value, 5.0);
        let s = solve(
            &m,
            &SolveOptions::exact().with_objective(Objective::Minimize),
        )
        .unwrap();
        assert_eq!(s.policies[0].table(), &[0]);
        assert_eq!(s.expected_value, 1.0);
    }

    #[test]
    fn exact_ties_go_to_frame_order() {
        let m = flat(vec![2.0, 4.0, 4.0]);
        let s = solve(&m, &SolveOptions::exact()).unwrap();
        assert_eq!(s.policies[0].table(), &[1]);
    }

    #[test]
    fn constant_value_table() {
        let m = wildcatter_irid().map_values(|_| 42.0);
        let s = solve(&m, &SolveOptions::exact()).unwrap();
        assert_eq!(s.expected_value, 42.0);
    }

    #[test]
    fn sampler_presence_must_match_backend() {
        let mut o = SolveOptions::exact();
        o.sampler = Some(SamplerConfig::default());
        assert!(o.validate().is_err());
        let mut o = SolveOptions::gibbs(SamplerConfig::default());
        o.sampler = None;
        assert!(o.validate().is_err());
    }

    #[test]
    fn gibbs_matches_exact_on_wildcatter() {
        let m = wildcatter_irid();
        let exact = solve(&m, &SolveOptions::exact()).unwrap();
        let g = solve(
            &m,
            &SolveOptions::gibbs(SamplerConfig::default().with_seed(42)),
        )
        .unwrap();
        assert!(g.same_policies(&exact));
        let se = g.expected_value_std_error.unwrap();
        assert!((g.expected_value - exact.expected_value).abs() <= 4.0 * se + 1.0);
    }
}
