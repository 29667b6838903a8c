//! Structural steps of the stagewise solver: barren-node removal, information
//! partitioning, relevance subgraph and moralization, per-stage factor
//! selection, and absorption of a solved decision into its successors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{IridError, Result};
use crate::factors::{Config, Factor, VarId};
use crate::model::{ArrowKind, Cpt, IridModel, NodeKind, Policy, ValueTable};

/// Deletes, to a fixpoint, every non-value node without children together
/// with its conditional or constraint.
pub fn remove_barren(model: &IridModel) -> IridModel {
    let mut removed: BTreeSet<VarId> = BTreeSet::new();
    loop {
        let fresh: Vec<VarId> = model
            .variables()
            .filter(|&v| v != model.value_node() && !removed.contains(&v))
            .filter(|&v| model.children(v).into_iter().all(|c| removed.contains(&c)))
            .collect();
        if fresh.is_empty() {
            break;
        }
        removed.extend(fresh);
    }
    if removed.is_empty() {
        return model.clone();
    }
    let nodes = model
        .node_map()
        .iter()
        .filter(|(v, _)| !removed.contains(v))
        .map(|(&v, n)| (v, n.clone()))
        .collect();
    let arrows = model
        .arrow_map()
        .iter()
        .filter(|((a, b), _)| !removed.contains(a) && !removed.contains(b))
        .map(|(&k, &kind)| (k, kind))
        .collect();
    let cpts = model
        .cpt_map()
        .iter()
        .filter(|(v, _)| !removed.contains(v))
        .map(|(&v, c)| (v, c.clone()))
        .collect();
    let constraints = model
        .constraint_map()
        .iter()
        .filter(|(v, _)| !removed.contains(v))
        .map(|(&v, c)| (v, c.clone()))
        .collect();
    IridModel::from_parts(
        nodes,
        model.capacity(),
        arrows,
        cpts,
        constraints,
        model.value_node(),
        model.value_table().clone(),
        model.objective(),
    )
    .expect("removing barren nodes keeps a model valid")
}

/// Information blocks: `blocks[0]` holds the chance variables observed before
/// the first decision; `blocks[i]` holds decision `i` and the chance variables
/// first observed by decision `i + 1`; the last block also collects the
/// variables no decision observes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagePartition {
    blocks: Vec<BTreeSet<VarId>>,
    decisions: Vec<VarId>,
}

impl StagePartition {
    pub fn blocks(&self) -> &[BTreeSet<VarId>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &BTreeSet<VarId> {
        &self.blocks[i]
    }

    /// Number of decision stages.
    pub fn stages(&self) -> usize {
        self.decisions.len()
    }

    /// Decision of block `i` (1-based stages).
    pub fn decision_of_block(&self, i: usize) -> Option<VarId> {
        i.checked_sub(1)
            .and_then(|j| self.decisions.get(j))
            .copied()
    }

    pub fn decisions(&self) -> &[VarId] {
        &self.decisions
    }

    /// Union of blocks `0..stage`.
    pub fn predecessors(&self, stage: usize) -> BTreeSet<VarId> {
        self.blocks[..stage.min(self.blocks.len())]
            .iter()
            .flatten()
            .copied()
            .collect()
    }
}

/// Partitions the non-value variables into information blocks. Both arrow
/// kinds into a decision count as observation.
pub fn compute_partition(model: &IridModel) -> StagePartition {
    let decisions = model.decisions();
    let k = decisions.len();
    let mut blocks = vec![BTreeSet::new(); k + 1];
    for (i, &d) in decisions.iter().enumerate() {
        blocks[i + 1].insert(d);
    }
    for x in model.chance_nodes() {
        let first = decisions
            .iter()
            .position(|&d| model.arrow_kind(x, d).is_some());
        let block = match first {
            Some(j) => j,
            None => k,
        };
        blocks[block].insert(x);
    }
    StagePartition { blocks, decisions }
}

/// Directed graph over variable ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiGraph {
    vertices: BTreeSet<VarId>,
    arrows: BTreeSet<(VarId, VarId)>,
}

impl DiGraph {
    pub fn new(vertices: impl IntoIterator<Item = VarId>) -> Self {
        DiGraph {
            vertices: vertices.into_iter().collect(),
            arrows: BTreeSet::new(),
        }
    }

    pub fn add_arrow(&mut self, from: VarId, to: VarId) {
        self.vertices.insert(from);
        self.vertices.insert(to);
        self.arrows.insert((from, to));
    }

    pub fn vertices(&self) -> &BTreeSet<VarId> {
        &self.vertices
    }

    pub fn arrows(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.arrows
    }

    pub fn has_arrow(&self, from: VarId, to: VarId) -> bool {
        self.arrows.contains(&(from, to))
    }

    pub fn parents(&self, v: VarId) -> Vec<VarId> {
        self.arrows
            .iter()
            .filter(|&&(_, b)| b == v)
            .map(|&(a, _)| a)
            .collect()
    }
}

/// The model graph with informational arrows dropped. Relevance arrows into
/// decisions stay.
pub fn relevance_subgraph(model: &IridModel) -> DiGraph {
    let mut g = DiGraph::new(model.variables());
    for (a, b, kind) in model.arrows() {
        if kind == ArrowKind::Relevance {
            g.add_arrow(a, b);
        }
    }
    g
}

/// Undirected graph; edges stored with the smaller id first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoralGraph {
    vertices: BTreeSet<VarId>,
    edges: BTreeSet<(VarId, VarId)>,
}

impl MoralGraph {
    fn key(a: VarId, b: VarId) -> (VarId, VarId) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn vertices(&self) -> &BTreeSet<VarId> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.edges
    }

    pub fn has_edge(&self, a: VarId, b: VarId) -> bool {
        self.edges.contains(&Self::key(a, b))
    }

    pub fn neighbors(&self, v: VarId) -> BTreeSet<VarId> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Drops arrow directions and marries every pair of co-parents.
pub fn moralize(graph: &DiGraph) -> MoralGraph {
    let mut edges = BTreeSet::new();
    let mut parents: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
    for &(a, b) in graph.arrows() {
        if a != b {
            edges.insert(MoralGraph::key(a, b));
        }
        parents.entry(b).or_default().push(a);
    }
    for ps in parents.values() {
        for (i, &p) in ps.iter().enumerate() {
            for &q in &ps[i + 1..] {
                if p != q {
                    edges.insert(MoralGraph::key(p, q));
                }
            }
        }
    }
    MoralGraph {
        vertices: graph.vertices().clone(),
        edges,
    }
}

/// Which conditional a stage factor came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorRole {
    /// CPT of a chance node.
    Chance(VarId),
    /// Placeholder conditional of the stage decision given its constraint
    /// scope: the admissibility indicator.
    Decision(VarId),
    /// The value table.
    Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageFactor {
    pub role: FactorRole,
    /// Conditioning variables (for the value table: its parents).
    pub parents: Vec<VarId>,
    pub factor: Factor,
}

impl StageFactor {
    pub fn child(&self) -> Option<VarId> {
        match self.role {
            FactorRole::Chance(v) | FactorRole::Decision(v) => Some(v),
            FactorRole::Value => None,
        }
    }

    pub fn is_probability(&self) -> bool {
        !matches!(self.role, FactorRole::Value)
    }
}

/// Everything one stage of the solver needs.
#[derive(Clone, Debug)]
pub struct StageContext {
    pub stage: usize,
    pub decision: VarId,
    /// Block members connected to the value node; always contains `decision`.
    pub gamma_prime: BTreeSet<VarId>,
    /// Variables the stage decision depends on, outside `gamma_prime` and V.
    pub dependency_set: BTreeSet<VarId>,
    /// Selected conditionals, in model variable order of their child, the
    /// value table last.
    pub factors: Vec<StageFactor>,
    /// `gamma_prime` without the decision, in model variable order.
    pub free: Vec<VarId>,
    /// Frame size per variable in `free ∪ dependency_set ∪ {decision}`.
    pub cards: BTreeMap<VarId, usize>,
    /// Capacity for dense states.
    pub capacity: usize,
    labels: BTreeMap<VarId, (String, Vec<String>)>,
}

impl StageContext {
    pub fn probability_factors(&self) -> impl Iterator<Item = &StageFactor> {
        self.factors.iter().filter(|f| f.is_probability())
    }

    pub fn value_factor(&self) -> &Factor {
        &self
            .factors
            .iter()
            .find(|f| f.role == FactorRole::Value)
            .expect("stage context carries the value table")
            .factor
    }

    /// Variables a fixed configuration must assign.
    pub fn fixed_vars(&self) -> Vec<VarId> {
        let mut v: Vec<VarId> = self.dependency_set.iter().copied().collect();
        v.push(self.decision);
        v.sort();
        v
    }

    pub fn card(&self, v: VarId) -> usize {
        self.cards[&v]
    }

    /// Human-readable `name=label` list.
    pub fn describe(&self, config: &Config) -> String {
        config
            .iter()
            .map(|(v, x)| match self.labels.get(&v) {
                Some((name, frame)) => {
                    format!("{}={}", name, frame.get(x).map_or("?", String::as_str))
                }
                None => format!("{v}={x}"),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Selects the stage-`stage` block members relevant to V, the variables the
/// stage decision depends on, and the conditionals that mention a relevant
/// member.
pub fn build_stage_context(
    model: &IridModel,
    partition: &StagePartition,
    moral: &MoralGraph,
    stage: usize,
) -> Result<StageContext> {
    let decision = partition
        .decision_of_block(stage)
        .ok_or(IridError::StageOutOfRange {
            stage,
            stages: partition.stages(),
        })?;
    let value = model.value_node();
    let block = partition.block(stage);

    // members of the block reachable from V inside the subgraph on block ∪ {V}
    let mut gamma_prime = BTreeSet::new();
    let mut seen = BTreeSet::from([value]);
    let mut queue = VecDeque::from([value]);
    while let Some(v) = queue.pop_front() {
        for n in moral.neighbors(v) {
            if block.contains(&n) && seen.insert(n) {
                gamma_prime.insert(n);
                queue.push_back(n);
            }
        }
    }
    gamma_prime.insert(decision);

    let mut dependency_set: BTreeSet<VarId> = gamma_prime
        .iter()
        .flat_map(|&g| moral.neighbors(g))
        .filter(|n| *n != value && !gamma_prime.contains(n))
        .collect();

    let touches = |vars: &[VarId]| vars.iter().any(|v| gamma_prime.contains(v));
    let mut factors = Vec::new();
    for v in model.variables() {
        match model.kind(v) {
            NodeKind::Chance => {
                let cpt = model.cpt(v).expect("validated");
                if gamma_prime.contains(&v) || touches(cpt.parents()) {
                    factors.push(StageFactor {
                        role: FactorRole::Chance(v),
                        parents: cpt.parents().to_vec(),
                        factor: cpt.factor().clone(),
                    });
                }
            }
            NodeKind::Decision if v == decision => {
                let c = model.constraint(v);
                factors.push(StageFactor {
                    role: FactorRole::Decision(v),
                    parents: c.scope().to_vec(),
                    factor: c.indicator(model.card(v)),
                });
            }
            _ => {}
        }
    }
    let vt = model.value_table();
    // degenerate stages (decision cut off from V) still need V's inputs fixed
    for &p in vt.parents() {
        if !gamma_prime.contains(&p) {
            dependency_set.insert(p);
        }
    }
    factors.push(StageFactor {
        role: FactorRole::Value,
        parents: vt.parents().to_vec(),
        factor: vt.factor().clone(),
    });

    let free: Vec<VarId> = gamma_prime
        .iter()
        .copied()
        .filter(|&v| v != decision)
        .collect();
    let cards = gamma_prime
        .iter()
        .chain(dependency_set.iter())
        .map(|&v| (v, model.card(v)))
        .collect();
    let labels = gamma_prime
        .iter()
        .chain(dependency_set.iter())
        .map(|&v| {
            let frame = model
                .frame(v)
                .map(|f| f.labels().to_vec())
                .unwrap_or_default();
            (v, (model.name(v).to_string(), frame))
        })
        .collect();
    Ok(StageContext {
        stage,
        decision,
        gamma_prime,
        dependency_set,
        factors,
        free,
        cards,
        capacity: model.capacity(),
        labels,
    })
}

/// Convenience: partition, relevance subgraph, moral graph and the context of
/// the last stage.
pub fn last_stage_context(model: &IridModel) -> Result<(StagePartition, StageContext)> {
    let partition = compute_partition(model);
    let moral = moralize(&relevance_subgraph(model));
    let k = partition.stages();
    let ctx = build_stage_context(model, &partition, &moral, k)?;
    Ok((partition, ctx))
}

/// Substitutes a solved decision function into every conditional where the
/// decision is a parent and deletes the decision. Its zero-one conditional is
/// not kept; the decision's parents become parents of its former children.
pub fn absorb_decision(model: &IridModel, decision: VarId, policy: &Policy) -> Result<IridModel> {
    model.expect_decision(decision)?;
    let children = model.children(decision);
    if children
        .iter()
        .any(|&c| model.kind(c) == NodeKind::Decision)
    {
        return Err(IridError::NotLastDecision(model.name(decision).into()));
    }
    if policy.decision() != decision || policy.scope() != model.parents(decision).as_slice() {
        return Err(IridError::IncompletePolicy(model.name(decision).into()));
    }
    let pscope = policy.scope();

    let rewire = |parents: &[VarId]| -> Vec<VarId> {
        let mut out = Vec::with_capacity(parents.len() + pscope.len());
        for &p in parents {
            if p == decision {
                for &q in pscope {
                    if !parents.contains(&q) && !out.contains(&q) {
                        out.push(q);
                    }
                }
            } else if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    };
    // old factor composed with the decision function
    let compose = |old: &Factor, new_scope: Vec<VarId>| -> Result<Factor> {
        let cards: Vec<usize> = new_scope.iter().map(|&v| model.card(v)).collect();
        let mut err = None;
        let f = Factor::from_fn(new_scope.clone(), cards, |c| {
            let mut cfg: Config = new_scope.iter().copied().zip(c.iter().copied()).collect();
            match policy.choice(&cfg) {
                Ok(d) => {
                    cfg.set(decision, d);
                    old.evaluate(&cfg).unwrap_or(f64::NAN)
                }
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(f),
        }
    };

    let mut cpts: BTreeMap<VarId, Cpt> = model.cpt_map().clone();
    let mut value: ValueTable = model.value_table().clone();
    for &c in &children {
        if c == model.value_node() {
            let parents = rewire(value.parents());
            let factor = compose(value.factor(), parents.clone())?;
            value = ValueTable::new(parents, factor);
        } else {
            let old = &model.cpt_map()[&c];
            let parents = rewire(old.parents());
            let mut scope = parents.clone();
            scope.push(c);
            let factor = compose(old.factor(), scope)?;
            cpts.insert(c, Cpt::new(c, parents, factor));
        }
    }

    let mut arrows: BTreeMap<(VarId, VarId), ArrowKind> = model
        .arrow_map()
        .iter()
        .filter(|((a, b), _)| *a != decision && *b != decision)
        .map(|(&k, &kind)| (k, kind))
        .collect();
    for &c in &children {
        for &p in pscope {
            arrows.entry((p, c)).or_insert(ArrowKind::Relevance);
        }
    }
    let nodes = model
        .node_map()
        .iter()
        .filter(|(v, _)| **v != decision)
        .map(|(&v, n)| (v, n.clone()))
        .collect();
    let constraints = model
        .constraint_map()
        .iter()
        .filter(|(v, _)| **v != decision)
        .map(|(&v, c)| (v, c.clone()))
        .collect();
    IridModel::from_parts(
        nodes,
        model.capacity(),
        arrows,
        cpts,
        constraints,
        model.value_node(),
        value,
        model.objective(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::model::{ArrowSpec, CptSpec, ModelSpecs, NodeSpec, Objective, ValueSpec};

    fn ids(m: &IridModel, names: &[&str]) -> BTreeSet<VarId> {
        names.iter().map(|n| m.var(n).unwrap()).collect()
    }

    #[test]
    fn wildcatter_is_free_of_barren_nodes() {
        let m = bundled::wildcatter_irid();
        assert_eq!(remove_barren(&m), m);
    }

    fn with_leaf() -> ModelSpecs {
        let mut s = bundled::wildcatter_specs();
        s.nodes.push(NodeSpec::chance("X", ["a", "b"]));
        s.nodes.push(NodeSpec::chance("Y", ["a", "b"]));
        s.arrows.push(ArrowSpec::relevance("O", "X"));
        s.arrows.push(ArrowSpec::relevance("X", "Y"));
        s.cpts.push(CptSpec {
            child: "X".into(),
            parents: vec!["O".into()],
            rows: vec![vec![0.5, 0.5], vec![0.1, 0.9]],
        });
        s.cpts.push(CptSpec {
            child: "Y".into(),
            parents: vec!["X".into()],
            rows: vec![vec![0.5, 0.5], vec![0.3, 0.7]],
        });
        s
    }

    #[test]
    fn barren_chain_is_removed_to_fixpoint() {
        let m = with_leaf().build().unwrap();
        let r = remove_barren(&m);
        assert!(r.var("X").is_err());
        assert!(r.var("Y").is_err());
        assert_eq!(r.to_specs(), bundled::wildcatter_irid().to_specs());
    }

    #[test]
    fn unused_leaf_is_removed() {
        let mut s = with_leaf();
        s.nodes.retain(|n| n.id != "Y");
        s.arrows.retain(|a| a.to != "Y");
        s.cpts.retain(|c| c.child != "Y");
        let r = remove_barren(&s.build().unwrap());
        assert!(r.var("X").is_err());
    }

    #[test]
    fn wildcatter_partition() {
        let m = bundled::wildcatter_irid();
        let p = compute_partition(&m);
        assert_eq!(p.blocks().len(), 3);
        assert_eq!(p.block(0), &ids(&m, &["B"]));
        assert_eq!(p.block(1), &ids(&m, &["T", "R"]));
        assert_eq!(p.block(2), &ids(&m, &["D", "O"]));
        assert_eq!(p.decision_of_block(1), Some(m.var("T").unwrap()));
        assert_eq!(p.decision_of_block(2), Some(m.var("D").unwrap()));
    }

    #[test]
    fn partition_without_chance_nodes() {
        let m = ModelSpecs {
            nodes: vec![
                NodeSpec::decision("A", ["x", "y"]),
                NodeSpec::decision("C", ["x", "y"]),
                NodeSpec::value("V"),
            ],
            arrows: vec![
                ArrowSpec::informational("A", "C"),
                ArrowSpec::relevance("A", "V"),
                ArrowSpec::relevance("C", "V"),
            ],
            cpts: vec![],
            constraints: vec![],
            value: ValueSpec {
                parents: vec!["A".into(), "C".into()],
                values: vec![1.0, 2.0, 3.0, 4.0],
            },
            objective: Objective::Maximize,
        }
        .build()
        .unwrap();
        let p = compute_partition(&m);
        assert!(p.block(0).is_empty());
        assert_eq!(p.block(1), &ids(&m, &["A"]));
        assert_eq!(p.block(2), &ids(&m, &["C"]));
    }

    #[test]
    fn wildcatter_relevance_subgraph() {
        let m = bundled::wildcatter_irid();
        let g = relevance_subgraph(&m);
        let expected: BTreeSet<(VarId, VarId)> = [
            ("O", "R"),
            ("T", "R"),
            ("B", "D"),
            ("T", "D"),
            ("O", "V"),
            ("T", "V"),
            ("D", "V"),
        ]
        .iter()
        .map(|(a, b)| (m.var(a).unwrap(), m.var(b).unwrap()))
        .collect();
        assert_eq!(g.arrows(), &expected);
    }

    #[test]
    fn informational_only_decision_is_isolated() {
        let m = bundled::wildcatter_info_only();
        let g = relevance_subgraph(&m);
        let d = m.var("D").unwrap();
        assert!(g.parents(d).is_empty());
    }

    #[test]
    fn wildcatter_moral_graph() {
        let m = bundled::wildcatter_irid();
        let mg = moralize(&relevance_subgraph(&m));
        let expected: BTreeSet<(VarId, VarId)> = [
            ("O", "R"),
            ("T", "R"),
            ("O", "T"),
            ("B", "D"),
            ("T", "D"),
            ("B", "T"),
            ("O", "V"),
            ("T", "V"),
            ("D", "V"),
            ("O", "D"),
        ]
        .iter()
        .map(|(a, b)| MoralGraph::key(m.var(a).unwrap(), m.var(b).unwrap()))
        .collect();
        assert_eq!(mg.edges(), &expected);
    }

    #[test]
    fn moralize_small_graphs() {
        let (x, y, z) = (VarId(0), VarId(1), VarId(2));
        let mut g = DiGraph::new([x, y]);
        g.add_arrow(x, y);
        let mg = moralize(&g);
        assert_eq!(mg.edges().len(), 1);
        assert!(mg.has_edge(y, x));

        let mut g = DiGraph::new([x, y, z]);
        g.add_arrow(x, z);
        g.add_arrow(y, z);
        let mg = moralize(&g);
        assert_eq!(mg.edges().len(), 3);
        assert!(mg.has_edge(x, y));
    }

    #[test]
    fn wildcatter_last_stage_context() {
        let m = bundled::wildcatter_irid();
        let (_, ctx) = last_stage_context(&m).unwrap();
        assert_eq!(ctx.gamma_prime, ids(&m, &["D", "O"]));
        assert_eq!(ctx.dependency_set, ids(&m, &["T", "R", "B"]));
        let roles: Vec<FactorRole> = ctx.factors.iter().map(|f| f.role).collect();
        assert_eq!(
            roles,
            vec![
                FactorRole::Chance(m.var("O").unwrap()),
                FactorRole::Chance(m.var("R").unwrap()),
                FactorRole::Decision(m.var("D").unwrap()),
                FactorRole::Value,
            ]
        );
        let d = ctx
            .factors
            .iter()
            .find(|f| f.role == FactorRole::Decision(m.var("D").unwrap()))
            .unwrap();
        assert_eq!(
            d.parents.iter().copied().collect::<BTreeSet<_>>(),
            ids(&m, &["T", "B"])
        );
        assert_eq!(ctx.free, vec![m.var("O").unwrap()]);
    }

    #[test]
    fn stage_out_of_range() {
        let m = bundled::wildcatter_irid();
        let p = compute_partition(&m);
        let mg = moralize(&relevance_subgraph(&m));
        assert!(matches!(
            build_stage_context(&m, &p, &mg, 3),
            Err(IridError::StageOutOfRange {
                stage: 3,
                stages: 2
            })
        ));
        assert!(build_stage_context(&m, &p, &mg, 0).is_err());
    }

    #[test]
    fn member_without_moral_path_to_value_is_excluded() {
        // Q is never observed, so it lands in the last block, but its only
        // moral neighbour is its child B, which sits in an earlier block.
        let mut s = bundled::wildcatter_specs();
        s.nodes.push(NodeSpec::chance("Q", ["a", "b"]));
        s.arrows.push(ArrowSpec::relevance("Q", "B"));
        s.cpts.push(CptSpec {
            child: "Q".into(),
            parents: vec![],
            rows: vec![vec![0.5, 0.5]],
        });
        let b = s.cpts.iter_mut().find(|c| c.child == "B").unwrap();
        b.parents = vec!["Q".into()];
        b.rows = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let m = s.build().unwrap();
        let (p, ctx) = last_stage_context(&m).unwrap();
        let q = m.var("Q").unwrap();
        assert!(p.block(2).contains(&q));
        assert!(!ctx.gamma_prime.contains(&q));
        assert!(!ctx.dependency_set.contains(&q));
    }

    #[test]
    fn single_decision_block() {
        let m = ModelSpecs {
            nodes: vec![NodeSpec::decision("A", ["x", "y"]), NodeSpec::value("V")],
            arrows: vec![ArrowSpec::relevance("A", "V")],
            cpts: vec![],
            constraints: vec![],
            value: ValueSpec {
                parents: vec!["A".into()],
                values: vec![1.0, 2.0],
            },
            objective: Objective::Maximize,
        }
        .build()
        .unwrap();
        let (_, ctx) = last_stage_context(&m).unwrap();
        assert_eq!(ctx.gamma_prime, ids(&m, &["A"]));
        assert!(ctx.dependency_set.is_empty());
        assert_eq!(ctx.factors.len(), 2);
        assert!(ctx.free.is_empty());
    }

    #[test]
    fn absorbing_drill_rewires_value_parents() {
        let m = bundled::wildcatter_irid();
        let d = m.var("D").unwrap();
        let policy = Policy::from_fn(&m, d, |cfg| m.admissible(d, cfg).unwrap()[0]).unwrap();
        let a = absorb_decision(&m, d, &policy).unwrap();
        assert!(a.var("D").is_err());
        let parents: BTreeSet<VarId> = a.value_table().parents().iter().copied().collect();
        assert_eq!(parents, ids(&m, &["O", "T", "R", "B"]));
        assert_eq!(a.decisions(), vec![m.var("T").unwrap()]);
        for p in ["T", "R", "B"] {
            assert_eq!(
                a.arrow_kind(m.var(p).unwrap(), m.value_node()),
                Some(ArrowKind::Relevance)
            );
        }
    }

    #[test]
    fn absorbing_constant_policy_slices_value_table() {
        let m = bundled::wildcatter_irid();
        let d = m.var("D").unwrap();
        let nd = m.value_index(d, "nd").unwrap();
        // D=nd is admissible everywhere
        let policy = Policy::constant(&m, d, nd).unwrap();
        let a = absorb_decision(&m, d, &policy).unwrap();
        let old = m.value_table().factor();
        let new = a.value_table().factor();
        let o = m.var("O").unwrap();
        let t = m.var("T").unwrap();
        for (ov, tv, bv, rv) in [(0, 0, 0, 0), (1, 2, 1, 2), (0, 1, 1, 1)] {
            let cfg = Config::new()
                .with(o, ov)
                .with(t, tv)
                .with(m.var("B").unwrap(), bv)
                .with(m.var("R").unwrap(), rv);
            assert_eq!(
                new.evaluate(&cfg).unwrap(),
                old.evaluate(&cfg.clone().with(d, nd)).unwrap()
            );
        }
    }

    #[test]
    fn absorbing_a_non_final_decision_is_refused() {
        let m = bundled::wildcatter_irid();
        let t = m.var("T").unwrap();
        let p = Policy::constant(&m, t, 0).unwrap();
        assert!(matches!(
            absorb_decision(&m, t, &p),
            Err(IridError::NotLastDecision(_))
        ));
    }
}
