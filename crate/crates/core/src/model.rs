//! Information/relevance influence diagrams: construction and validation.
//!
//! A model is a DAG of chance, decision and value nodes. Chance nodes carry
//! conditional probability tables, decision nodes carry a constraint that maps
//! configurations of a subset of their parents to the alternatives allowed
//! there, and the single value node carries a real-valued table over its
//! parents. Arrows into chance and value nodes, and into a decision from its
//! constraint scope, are *relevance* arrows; every other arrow into a decision
//! is *informational*.
//!
//! Validation enforces acyclicity, a directed path through all decisions
//! (complete ordering) and no-forgetting, besides the usual table checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{IridError, Result};
use crate::factors::{config_count, for_each_config, Assignment, Config, Factor, VarId};

/// Absolute tolerance on CPT row sums.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Ordered, duplicate-free list of value labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    labels: Vec<String>,
}

impl Frame {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Frame {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn check(&self, var: &str) -> Result<()> {
        if self.labels.is_empty() {
            return Err(IridError::EmptyFrame(var.into()));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Err(IridError::DuplicateLabel {
                    var: var.into(),
                    label: l.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Chance,
    Decision,
    Value,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Chance => "chance",
            NodeKind::Decision => "decision",
            NodeKind::Value => "value",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArrowKind {
    Relevance,
    Informational,
}

impl ArrowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArrowKind::Relevance => "relevance",
            ArrowKind::Informational => "informational",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Objective {
    #[default]
    Maximize,
    Minimize,
}

impl Objective {
    /// True when `candidate` is strictly better than `incumbent`, beyond
    /// floating-point noise.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        let slack = 1e-10 * candidate.abs().max(incumbent.abs()).max(1.0);
        match self {
            Objective::Maximize => candidate > incumbent + slack,
            Objective::Minimize => candidate < incumbent - slack,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Maximize => "maximize",
            Objective::Minimize => "minimize",
        }
    }
}

// ---------------------------------------------------------------------------
// Name-based model descriptions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    pub frame: Option<Frame>,
}

impl NodeSpec {
    pub fn chance<S: Into<String>>(id: &str, labels: impl IntoIterator<Item = S>) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Chance,
            frame: Some(Frame::new(labels)),
        }
    }

    pub fn decision<S: Into<String>>(id: &str, labels: impl IntoIterator<Item = S>) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Decision,
            frame: Some(Frame::new(labels)),
        }
    }

    pub fn value(id: &str) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Value,
            frame: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrowSpec {
    pub from: String,
    pub to: String,
    pub kind: ArrowKind,
}

impl ArrowSpec {
    pub fn relevance(from: &str, to: &str) -> Self {
        ArrowSpec {
            from: from.into(),
            to: to.into(),
            kind: ArrowKind::Relevance,
        }
    }

    pub fn informational(from: &str, to: &str) -> Self {
        ArrowSpec {
            from: from.into(),
            to: to.into(),
            kind: ArrowKind::Informational,
        }
    }
}

/// One probability vector over the child's frame per parent configuration,
/// parent configurations in row-major order of `parents`.
#[derive(Clone, Debug, PartialEq)]
pub struct CptSpec {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Allowed labels per scope configuration, row-major over `scope`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    pub decision: String,
    pub scope: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

/// One real per parent configuration, row-major over `parents`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueSpec {
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

/// Everything needed to build a model, in name-based form.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpecs {
    pub nodes: Vec<NodeSpec>,
    pub arrows: Vec<ArrowSpec>,
    pub cpts: Vec<CptSpec>,
    pub constraints: Vec<ConstraintSpec>,
    pub value: ValueSpec,
    pub objective: Objective,
}

impl ModelSpecs {
    pub fn build(self) -> Result<IridModel> {
        IridModel::build(
            self.nodes,
            self.arrows,
            self.cpts,
            self.constraints,
            self.value,
            self.objective,
        )
    }
}

// ---------------------------------------------------------------------------
// Validated model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub frame: Option<Frame>,
}

/// Conditional of a chance node. The backing factor has scope `parents ++ [child]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    factor: Factor,
}

impl Cpt {
    pub fn new(child: VarId, parents: Vec<VarId>, factor: Factor) -> Self {
        debug_assert_eq!(factor.scope().last(), Some(&child));
        Cpt {
            child,
            parents,
            factor,
        }
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    /// Probability vector for one parent configuration (positional).
    pub fn row(&self, parent_config: &[usize]) -> &[f64] {
        let card = *self.factor.cards().last().unwrap();
        let row: usize = parent_config
            .iter()
            .zip(self.factor.cards())
            .fold(0, |acc, (x, c)| acc * c + x);
        &self.factor.values()[row * card..(row + 1) * card]
    }
}

/// Constraint on a decision: allowed alternatives (sorted frame indices) per
/// configuration of `scope`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    decision: VarId,
    scope: Vec<VarId>,
    scope_cards: Vec<usize>,
    allowed: Vec<Vec<usize>>,
}

impl Constraint {
    pub fn decision(&self) -> VarId {
        self.decision
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.allowed
    }

    pub fn is_unconstrained(&self, card: usize) -> bool {
        self.allowed.iter().all(|a| a.len() == card)
    }

    pub fn allowed_at<A: Assignment + ?Sized>(&self, a: &A) -> Result<&[usize]> {
        let mut row = 0;
        for (&v, &c) in self.scope.iter().zip(&self.scope_cards) {
            let x = a
                .value_of(v)
                .ok_or_else(|| IridError::IncompleteConfig(v.to_string()))?;
            row = row * c + x;
        }
        Ok(&self.allowed[row])
    }

    /// Indicator over `scope ++ [decision]`: 1 where allowed.
    pub fn indicator(&self, decision_card: usize) -> Factor {
        let mut scope = self.scope.clone();
        scope.push(self.decision);
        let mut cards = self.scope_cards.clone();
        cards.push(decision_card);
        let n = cards.len();
        let mut row = 0usize;
        let mut values = Vec::with_capacity(self.allowed.len() * decision_card);
        for_each_config(&cards, |c| {
            if c[n - 1] == 0 && !values.is_empty() {
                row += 1;
            }
            values.push(if self.allowed[row].contains(&c[n - 1]) {
                1.0
            } else {
                0.0
            });
        });
        Factor::new(scope, cards, values).expect("indicator is consistent")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    parents: Vec<VarId>,
    factor: Factor,
}

impl ValueTable {
    pub fn new(parents: Vec<VarId>, factor: Factor) -> Self {
        ValueTable { parents, factor }
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }
}

/// A deterministic decision function: one alternative per configuration of
/// the decision's parents (model variable order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    decision: VarId,
    decision_card: usize,
    scope: Vec<VarId>,
    cards: Vec<usize>,
    table: Vec<usize>,
}

impl Policy {
    /// Checks coverage and constraint compliance.
    pub fn new(model: &IridModel, decision: VarId, table: Vec<usize>) -> Result<Policy> {
        model.expect_decision(decision)?;
        let scope = model.parents(decision);
        let cards: Vec<usize> = scope.iter().map(|&v| model.card(v)).collect();
        let expected = cards.iter().product::<usize>();
        if table.len() != expected {
            return Err(IridError::IncompletePolicy(model.name(decision).into()));
        }
        let p = Policy {
            decision,
            decision_card: model.card(decision),
            scope,
            cards,
            table,
        };
        p.check_constraint(model)?;
        Ok(p)
    }

    /// Builds the table by calling `choose` on every parent configuration.
    pub fn from_fn(
        model: &IridModel,
        decision: VarId,
        mut choose: impl FnMut(&Config) -> usize,
    ) -> Result<Policy> {
        model.expect_decision(decision)?;
        let scope = model.parents(decision);
        let cards: Vec<usize> = scope.iter().map(|&v| model.card(v)).collect();
        let mut table = Vec::with_capacity(cards.iter().product());
        for_each_config(&cards, |c| {
            let cfg: Config = scope.iter().copied().zip(c.iter().copied()).collect();
            table.push(choose(&cfg));
        });
        Policy::new(model, decision, table)
    }

    /// The same alternative everywhere.
    pub fn constant(model: &IridModel, decision: VarId, alternative: usize) -> Result<Policy> {
        Policy::from_fn(model, decision, |_| alternative)
    }

    fn check_constraint(&self, model: &IridModel) -> Result<()> {
        let constraint = model.constraint(self.decision);
        let mut bad = None;
        let mut i = 0;
        for_each_config(&self.cards, |c| {
            if bad.is_some() {
                return;
            }
            let cfg: Config = self.scope.iter().copied().zip(c.iter().copied()).collect();
            let chosen = self.table[i];
            i += 1;
            let ok = chosen < self.decision_card
                && constraint
                    .allowed_at(&cfg)
                    .map(|a| a.contains(&chosen))
                    .unwrap_or(false);
            if !ok {
                bad = Some(cfg);
            }
        });
        match bad {
            None => Ok(()),
            Some(cfg) => Err(IridError::InvalidPolicy {
                decision: model.name(self.decision).into(),
                reason: format!("inadmissible choice at ({})", model.describe(&cfg)),
            }),
        }
    }

    pub fn decision(&self) -> VarId {
        self.decision
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Chosen alternative at an assignment covering the scope.
    pub fn choice<A: Assignment + ?Sized>(&self, a: &A) -> Result<usize> {
        let mut row = 0;
        for (&v, &c) in self.scope.iter().zip(&self.cards) {
            let x = a
                .value_of(v)
                .ok_or_else(|| IridError::IncompleteConfig(v.to_string()))?;
            row = row * c + x;
        }
        Ok(self.table[row])
    }

    /// Zero-one conditional over `scope ++ [decision]`.
    pub fn to_conditional(&self) -> Factor {
        let mut scope = self.scope.clone();
        scope.push(self.decision);
        let mut cards = self.cards.clone();
        cards.push(self.decision_card);
        let d = self.decision_card;
        let mut values = vec![0.0; self.table.len() * d];
        for (row, &chosen) in self.table.iter().enumerate() {
            values[row * d + chosen] = 1.0;
        }
        Factor::new(scope, cards, values).expect("policy table is consistent")
    }
}

/// Zero-one conditional of a policy (one-hot rows on the chosen alternative).
pub fn policy_to_conditional(policy: &Policy) -> Factor {
    policy.to_conditional()
}

/// A validated information/relevance influence diagram. Immutable after build.
#[derive(Clone, Debug, PartialEq)]
pub struct IridModel {
    nodes: BTreeMap<VarId, Node>,
    names: BTreeMap<String, VarId>,
    capacity: usize,
    arrows: BTreeMap<(VarId, VarId), ArrowKind>,
    cpts: BTreeMap<VarId, Cpt>,
    constraints: BTreeMap<VarId, Constraint>,
    value_node: VarId,
    value: ValueTable,
    objective: Objective,
}

impl IridModel {
    /// Builds and validates a model from name-based descriptions.
    /// Decisions without a constraint spec are unconstrained.
    pub fn build(
        nodes: Vec<NodeSpec>,
        arrows: Vec<ArrowSpec>,
        cpts: Vec<CptSpec>,
        constraints: Vec<ConstraintSpec>,
        value: ValueSpec,
        objective: Objective,
    ) -> Result<IridModel> {
        // nodes
        let mut names = BTreeMap::new();
        let mut node_map = BTreeMap::new();
        for (i, spec) in nodes.into_iter().enumerate() {
            if names.insert(spec.id.clone(), VarId(i)).is_some() {
                return Err(IridError::DuplicateVariable(spec.id));
            }
            match (&spec.kind, &spec.frame) {
                (NodeKind::Value, Some(_)) => return Err(IridError::UnexpectedFrame(spec.id)),
                (NodeKind::Value, None) => {}
                (_, None) => return Err(IridError::MissingFrame(spec.id)),
                (_, Some(f)) => f.check(&spec.id)?,
            }
            node_map.insert(
                VarId(i),
                Node {
                    name: spec.id,
                    kind: spec.kind,
                    frame: spec.frame,
                },
            );
        }
        let value_nodes: Vec<VarId> = node_map
            .iter()
            .filter(|(_, n)| n.kind == NodeKind::Value)
            .map(|(&v, _)| v)
            .collect();
        if value_nodes.len() != 1 {
            return Err(IridError::MultipleValueNodes(value_nodes.len()));
        }
        let value_node = value_nodes[0];
        let lookup = |name: &str| -> Result<VarId> {
            names
                .get(name)
                .copied()
                .ok_or_else(|| IridError::UnknownVariable(name.into()))
        };

        // arrows
        let mut arrow_map = BTreeMap::new();
        for a in &arrows {
            let key = (lookup(&a.from)?, lookup(&a.to)?);
            if arrow_map.insert(key, a.kind).is_some() {
                return Err(IridError::DuplicateArrow {
                    from: a.from.clone(),
                    to: a.to.clone(),
                });
            }
        }

        // tables
        let capacity = node_map.len();
        let card = |v: VarId| node_map[&v].frame.as_ref().map_or(0, Frame::len);
        let mut cpt_map = BTreeMap::new();
        for spec in cpts {
            let child = lookup(&spec.child)?;
            if node_map[&child].kind != NodeKind::Chance {
                return Err(IridError::WrongNodeKind(spec.child, "chance"));
            }
            let parents = spec
                .parents
                .iter()
                .map(|p| lookup(p))
                .collect::<Result<Vec<_>>>()?;
            for &p in &parents {
                if node_map[&p].kind == NodeKind::Value {
                    return Err(IridError::ValueNodeNotSink(node_map[&p].name.clone()));
                }
            }
            let parent_cards: Vec<usize> = parents.iter().map(|&p| card(p)).collect();
            let rows = config_count(&parent_cards) as usize;
            if spec.rows.len() != rows {
                return Err(IridError::TableSizeMismatch {
                    table: format!("cpt `{}`", spec.child),
                    expected: rows,
                    found: spec.rows.len(),
                });
            }
            let ccard = card(child);
            let mut values = Vec::with_capacity(rows * ccard);
            for row in &spec.rows {
                if row.len() != ccard {
                    return Err(IridError::TableSizeMismatch {
                        table: format!("cpt `{}` row", spec.child),
                        expected: ccard,
                        found: row.len(),
                    });
                }
                values.extend_from_slice(row);
            }
            let mut scope = parents.clone();
            scope.push(child);
            let mut cards = parent_cards;
            cards.push(ccard);
            let factor = Factor::new(scope, cards, values)
                .map_err(|_| IridError::DuplicateVariable(spec.child.clone()))?;
            if cpt_map
                .insert(child, Cpt::new(child, parents, factor))
                .is_some()
            {
                return Err(IridError::DuplicateTable(spec.child));
            }
        }

        let mut constraint_map = BTreeMap::new();
        for spec in constraints {
            let decision = lookup(&spec.decision)?;
            if node_map[&decision].kind != NodeKind::Decision {
                return Err(IridError::WrongNodeKind(spec.decision, "decision"));
            }
            let scope = spec
                .scope
                .iter()
                .map(|p| lookup(p))
                .collect::<Result<Vec<_>>>()?;
            for (&v, name) in scope.iter().zip(&spec.scope) {
                if !arrow_map.contains_key(&(v, decision)) {
                    return Err(IridError::ConstraintScopeNotParents {
                        decision: spec.decision.clone(),
                        var: name.clone(),
                    });
                }
            }
            let scope_cards: Vec<usize> = scope.iter().map(|&v| card(v)).collect();
            let rows = config_count(&scope_cards) as usize;
            if spec.cells.len() != rows {
                return Err(IridError::TableSizeMismatch {
                    table: format!("constraint `{}`", spec.decision),
                    expected: rows,
                    found: spec.cells.len(),
                });
            }
            let frame = node_map[&decision].frame.as_ref().unwrap();
            let mut allowed = Vec::with_capacity(rows);
            for cell in &spec.cells {
                let mut idx = cell
                    .iter()
                    .map(|l| {
                        frame.index_of(l).ok_or_else(|| IridError::ValueNotInFrame {
                            var: spec.decision.clone(),
                            value: l.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                idx.dedup();
                allowed.push(idx);
            }
            let c = Constraint {
                decision,
                scope,
                scope_cards,
                allowed,
            };
            if constraint_map.insert(decision, c).is_some() {
                return Err(IridError::DuplicateTable(spec.decision));
            }
        }
        for (&v, n) in &node_map {
            if n.kind == NodeKind::Decision {
                constraint_map.entry(v).or_insert_with(|| Constraint {
                    decision: v,
                    scope: vec![],
                    scope_cards: vec![],
                    allowed: vec![(0..card(v)).collect()],
                });
            }
        }

        let vparents = value
            .parents
            .iter()
            .map(|p| lookup(p))
            .collect::<Result<Vec<_>>>()?;
        let vcards: Vec<usize> = vparents.iter().map(|&v| card(v)).collect();
        let vfactor = Factor::new(vparents.clone(), vcards, value.values).map_err(|e| match e {
            IridError::TableSizeMismatch {
                expected, found, ..
            } => IridError::TableSizeMismatch {
                table: "value table".into(),
                expected,
                found,
            },
            other => other,
        })?;

        let model = IridModel {
            nodes: node_map,
            names,
            capacity,
            arrows: arrow_map,
            cpts: cpt_map,
            constraints: constraint_map,
            value_node,
            value: ValueTable::new(vparents, vfactor),
            objective,
        };
        model.validate()?;
        Ok(model)
    }

    /// Assembles a model from already-resolved parts and validates it.
    /// Used by structural transformations.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        nodes: BTreeMap<VarId, Node>,
        capacity: usize,
        arrows: BTreeMap<(VarId, VarId), ArrowKind>,
        cpts: BTreeMap<VarId, Cpt>,
        constraints: BTreeMap<VarId, Constraint>,
        value_node: VarId,
        value: ValueTable,
        objective: Objective,
    ) -> Result<IridModel> {
        let names = nodes.iter().map(|(&v, n)| (n.name.clone(), v)).collect();
        let m = IridModel {
            nodes,
            names,
            capacity,
            arrows,
            cpts,
            constraints,
            value_node,
            value,
            objective,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks every structural and numerical invariant.
    pub fn validate(&self) -> Result<()> {
        // value node is a sink
        if self.arrows.keys().any(|&(from, _)| from == self.value_node) {
            return Err(IridError::ValueNodeNotSink(
                self.name(self.value_node).into(),
            ));
        }
        for &(from, to) in self.arrows.keys() {
            if !self.nodes.contains_key(&from) {
                return Err(IridError::UnknownVariable(from.to_string()));
            }
            if !self.nodes.contains_key(&to) {
                return Err(IridError::UnknownVariable(to.to_string()));
            }
        }
        let order = self.topological_order_checked()?;

        // constraint scopes are parents
        for c in self.constraints.values() {
            for &v in &c.scope {
                if !self.arrows.contains_key(&(v, c.decision)) {
                    return Err(IridError::ConstraintScopeNotParents {
                        decision: self.name(c.decision).into(),
                        var: self.name(v).into(),
                    });
                }
            }
        }

        // arrow kinds
        for (&(from, to), &kind) in &self.arrows {
            let expected = match self.kind(to) {
                NodeKind::Decision if !self.constraints[&to].scope.contains(&from) => {
                    ArrowKind::Informational
                }
                _ => ArrowKind::Relevance,
            };
            if kind != expected {
                return Err(IridError::ArrowKindMismatch {
                    from: self.name(from).into(),
                    to: self.name(to).into(),
                    expected: expected.as_str(),
                });
            }
        }

        // complete ordering and no-forgetting
        let decisions: Vec<VarId> = order
            .iter()
            .copied()
            .filter(|&v| self.kind(v) == NodeKind::Decision)
            .collect();
        for w in decisions.windows(2) {
            if !self.arrows.contains_key(&(w[0], w[1])) {
                return Err(IridError::DecisionsNotTotallyOrdered {
                    from: self.name(w[0]).into(),
                    to: self.name(w[1]).into(),
                });
            }
        }
        for (i, &earlier) in decisions.iter().enumerate() {
            for &from in &self.parents(earlier) {
                for &later in &decisions[i + 1..] {
                    if !self.arrows.contains_key(&(from, later)) {
                        return Err(IridError::NoForgettingViolated {
                            from: self.name(from).into(),
                            earlier: self.name(earlier).into(),
                            later: self.name(later).into(),
                        });
                    }
                }
            }
        }

        // constraint cells
        for c in self.constraints.values() {
            for (row, cell) in c.allowed.iter().enumerate() {
                if cell.is_empty() {
                    return Err(IridError::EmptyConstraintCell {
                        decision: self.name(c.decision).into(),
                        row,
                        config: self.describe_row(&c.scope, row),
                    });
                }
            }
        }

        // conditionals
        for (&v, node) in &self.nodes {
            if node.kind != NodeKind::Chance {
                if self.cpts.contains_key(&v) {
                    return Err(IridError::WrongNodeKind(node.name.clone(), "chance"));
                }
                continue;
            }
            let cpt = self
                .cpts
                .get(&v)
                .ok_or_else(|| IridError::MissingCpt(node.name.clone()))?;
            let graph: BTreeSet<VarId> = self.parents(v).into_iter().collect();
            let table: BTreeSet<VarId> = cpt.parents.iter().copied().collect();
            if graph != table || table.len() != cpt.parents.len() {
                return Err(IridError::ParentMismatch {
                    node: node.name.clone(),
                });
            }
            let card = self.card(v);
            for (row, probs) in cpt.factor.values().chunks(card).enumerate() {
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(IridError::ProbabilityOutOfRange {
                        child: node.name.clone(),
                        row,
                        config: self.describe_row(&cpt.parents, row),
                    });
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(IridError::CptRowNotNormalized {
                        child: node.name.clone(),
                        row,
                        config: self.describe_row(&cpt.parents, row),
                        sum,
                    });
                }
            }
        }

        // value table
        let graph: BTreeSet<VarId> = self.parents(self.value_node).into_iter().collect();
        let table: BTreeSet<VarId> = self.value.parents.iter().copied().collect();
        if graph != table {
            return Err(IridError::ParentMismatch {
                node: self.name(self.value_node).into(),
            });
        }
        for (row, x) in self.value.factor.values().iter().enumerate() {
            if !x.is_finite() {
                return Err(IridError::NonFiniteEntry {
                    table: "value table".into(),
                    config: self.describe_row(&self.value.parents, row),
                });
            }
        }
        Ok(())
    }

    fn topological_order_checked(&self) -> Result<Vec<VarId>> {
        let mut indeg: BTreeMap<VarId, usize> = self.nodes.keys().map(|&v| (v, 0)).collect();
        for &(_, to) in self.arrows.keys() {
            *indeg.get_mut(&to).unwrap() += 1;
        }
        // smallest-id-first Kahn: deterministic order close to declaration order
        let mut ready: BTreeSet<VarId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children(v) {
                let d = indeg.get_mut(&c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = indeg
                .iter()
                .find(|(v, _)| !order.contains(v))
                .map(|(&v, _)| v)
                .unwrap();
            return Err(IridError::CycleDetected(self.name(stuck).into()));
        }
        Ok(order)
    }

    // --- accessors ------------------------------------------------------------

    /// Upper bound on `VarId` values, for dense state vectors.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn var(&self, name: &str) -> Result<VarId> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| IridError::UnknownVariable(name.into()))
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.nodes.contains_key(&v)
    }

    pub fn node(&self, v: VarId) -> &Node {
        &self.nodes[&v]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (VarId, &Node)> {
        self.nodes.iter().map(|(&v, n)| (v, n))
    }

    pub(crate) fn node_map(&self) -> &BTreeMap<VarId, Node> {
        &self.nodes
    }

    pub fn name(&self, v: VarId) -> &str {
        self.nodes.get(&v).map_or("?", |n| n.name.as_str())
    }

    pub fn kind(&self, v: VarId) -> NodeKind {
        self.nodes[&v].kind
    }

    pub fn frame(&self, v: VarId) -> Option<&Frame> {
        self.nodes[&v].frame.as_ref()
    }

    /// Frame size; 0 for the value node.
    pub fn card(&self, v: VarId) -> usize {
        self.frame(v).map_or(0, Frame::len)
    }

    pub fn label(&self, v: VarId, index: usize) -> &str {
        self.frame(v)
            .and_then(|f| f.labels().get(index))
            .map_or("?", String::as_str)
    }

    pub fn value_index(&self, v: VarId, label: &str) -> Result<usize> {
        self.frame(v)
            .and_then(|f| f.index_of(label))
            .ok_or_else(|| IridError::ValueNotInFrame {
                var: self.name(v).into(),
                value: label.into(),
            })
    }

    /// All variables in model (declaration) order.
    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn chance_nodes(&self) -> impl Iterator<Item = VarId> + '_ {
        self.nodes
            .iter()
            .filter(|(_, n)| n.kind == NodeKind::Chance)
            .map(|(&v, _)| v)
    }

    /// Decisions in path (temporal) order.
    pub fn decisions(&self) -> Vec<VarId> {
        self.topological_order()
            .into_iter()
            .filter(|&v| self.kind(v) == NodeKind::Decision)
            .collect()
    }

    pub fn value_node(&self) -> VarId {
        self.value_node
    }

    pub fn arrows(&self) -> impl Iterator<Item = (VarId, VarId, ArrowKind)> + '_ {
        self.arrows.iter().map(|(&(a, b), &k)| (a, b, k))
    }

    pub(crate) fn arrow_map(&self) -> &BTreeMap<(VarId, VarId), ArrowKind> {
        &self.arrows
    }

    pub fn arrow_kind(&self, from: VarId, to: VarId) -> Option<ArrowKind> {
        self.arrows.get(&(from, to)).copied()
    }

    /// Parents in model variable order.
    pub fn parents(&self, v: VarId) -> Vec<VarId> {
        self.arrows
            .keys()
            .filter(|&&(_, to)| to == v)
            .map(|&(from, _)| from)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn children(&self, v: VarId) -> Vec<VarId> {
        self.arrows
            .range((v, VarId(0))..=(v, VarId(usize::MAX)))
            .map(|(&(_, to), _)| to)
            .collect()
    }

    pub fn topological_order(&self) -> Vec<VarId> {
        self.topological_order_checked()
            .expect("validated model is acyclic")
    }

    pub fn cpt(&self, v: VarId) -> Option<&Cpt> {
        self.cpts.get(&v)
    }

    pub fn cpts(&self) -> impl Iterator<Item = &Cpt> {
        self.cpts.values()
    }

    pub(crate) fn cpt_map(&self) -> &BTreeMap<VarId, Cpt> {
        &self.cpts
    }

    /// Constraint of a decision (always present; empty scope when unconstrained).
    pub fn constraint(&self, decision: VarId) -> &Constraint {
        &self.constraints[&decision]
    }

    pub(crate) fn constraint_map(&self) -> &BTreeMap<VarId, Constraint> {
        &self.constraints
    }

    pub fn value_table(&self) -> &ValueTable {
        &self.value
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    /// Same model with the value table replaced entry-wise by `f(v)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> IridModel {
        let mut m = self.clone();
        let old = &self.value.factor;
        let values = old.values().iter().map(|&x| f(x)).collect();
        m.value.factor = Factor::new(old.scope().to_vec(), old.cards().to_vec(), values).unwrap();
        m
    }

    pub(crate) fn expect_decision(&self, v: VarId) -> Result<()> {
        match self.nodes.get(&v) {
            Some(n) if n.kind == NodeKind::Decision => Ok(()),
            Some(n) => Err(IridError::UnknownDecision(n.name.clone())),
            None => Err(IridError::UnknownDecision(v.to_string())),
        }
    }

    /// Alternatives allowed for `decision` under a configuration of its parents.
    pub fn admissible(&self, decision: VarId, parent_config: &Config) -> Result<Vec<usize>> {
        self.expect_decision(decision)?;
        for p in self.parents(decision) {
            if !parent_config.contains(p) {
                return Err(IridError::IncompleteConfig(self.name(p).into()));
            }
        }
        Ok(self
            .constraint(decision)
            .allowed_at(parent_config)?
            .to_vec())
    }

    // --- labelled configurations --------------------------------------------

    /// Builds a configuration from `(variable, label)` pairs.
    pub fn config(&self, pairs: &[(&str, &str)]) -> Result<Config> {
        let mut c = Config::new();
        for &(var, label) in pairs {
            let v = self.var(var)?;
            c.set(v, self.value_index(v, label)?);
        }
        Ok(c)
    }

    /// `B=$1M, T=t2`
    pub fn describe(&self, config: &Config) -> String {
        config
            .iter()
            .map(|(v, x)| format!("{}={}", self.name(v), self.label(v, x)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn describe_row(&self, vars: &[VarId], row: usize) -> String {
        let cards: Vec<usize> = vars.iter().map(|&v| self.card(v)).collect();
        let mut rem = row;
        let mut idx = vec![0; vars.len()];
        for i in (0..vars.len()).rev() {
            idx[i] = rem % cards[i];
            rem /= cards[i];
        }
        let cfg: Config = vars.iter().copied().zip(idx).collect();
        self.describe(&cfg)
    }

    // --- back to specs ----------------------------------------------------------

    pub fn node_specs(&self) -> Vec<NodeSpec> {
        self.nodes
            .values()
            .map(|n| NodeSpec {
                id: n.name.clone(),
                kind: n.kind,
                frame: n.frame.clone(),
            })
            .collect()
    }

    pub fn arrow_specs(&self) -> Vec<ArrowSpec> {
        self.arrows
            .iter()
            .map(|(&(a, b), &kind)| ArrowSpec {
                from: self.name(a).into(),
                to: self.name(b).into(),
                kind,
            })
            .collect()
    }

    pub fn cpt_specs(&self) -> Vec<CptSpec> {
        self.cpts
            .values()
            .map(|c| {
                let card = self.card(c.child);
                CptSpec {
                    child: self.name(c.child).into(),
                    parents: c.parents.iter().map(|&p| self.name(p).into()).collect(),
                    rows: c
                        .factor
                        .values()
                        .chunks(card)
                        .map(<[f64]>::to_vec)
                        .collect(),
                }
            })
            .collect()
    }

    pub fn constraint_specs(&self) -> Vec<ConstraintSpec> {
        self.constraints
            .values()
            .map(|c| ConstraintSpec {
                decision: self.name(c.decision).into(),
                scope: c.scope.iter().map(|&v| self.name(v).into()).collect(),
                cells: c
                    .allowed
                    .iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|&i| self.label(c.decision, i).to_string())
                            .collect()
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn to_specs(&self) -> ModelSpecs {
        ModelSpecs {
            nodes: self.node_specs(),
            arrows: self.arrow_specs(),
            cpts: self.cpt_specs(),
            constraints: self.constraint_specs(),
            value: self.value_spec(),
            objective: self.objective,
        }
    }

    pub fn value_spec(&self) -> ValueSpec {
        ValueSpec {
            parents: self
                .value
                .parents
                .iter()
                .map(|&v| self.name(v).into())
                .collect(),
            values: self.value.factor.values().to_vec(),
        }
    }
}

impl fmt::Display for IridModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let count = |k| self.nodes.values().filter(|n| n.kind == k).count();
        write!(
            f,
            "IRID: {} chance, {} decision, 1 value node, {} arrows ({})",
            count(NodeKind::Chance),
            count(NodeKind::Decision),
            self.arrows.len(),
            self.objective.as_str()
        )
    }
}

/// Read-only view of a model whose decisions all have fixed policies: every
/// node now has a conditional and the product of conditionals is the joint.
#[derive(Clone, Debug)]
pub struct BayesNetView<'m> {
    model: &'m IridModel,
    conditionals: Vec<(VarId, Factor)>,
}

impl<'m> BayesNetView<'m> {
    pub fn model(&self) -> &'m IridModel {
        self.model
    }

    /// Conditionals of chance and decision nodes, in model variable order.
    pub fn conditionals(&self) -> &[(VarId, Factor)] {
        &self.conditionals
    }

    pub fn value_factor(&self) -> &'m Factor {
        self.model.value.factor()
    }

    /// Product of all conditionals at a total configuration.
    pub fn joint_probability(&self, config: &Config) -> Result<f64> {
        let mut p = 1.0;
        for (_, f) in &self.conditionals {
            p *= f.evaluate(config)?;
        }
        Ok(p)
    }
}

/// Turns the model into a Bayesian network by supplying one policy per decision.
pub fn fix_policies<'m>(model: &'m IridModel, policies: &[Policy]) -> Result<BayesNetView<'m>> {
    let mut conditionals = Vec::new();
    for (v, node) in model.nodes() {
        match node.kind {
            NodeKind::Chance => conditionals.push((v, model.cpts[&v].factor.clone())),
            NodeKind::Decision => {
                let p = policies
                    .iter()
                    .find(|p| p.decision == v)
                    .ok_or_else(|| IridError::MissingPolicy(node.name.clone()))?;
                if p.scope != model.parents(v) {
                    return Err(IridError::InvalidPolicy {
                        decision: node.name.clone(),
                        reason: "scope differs from the decision's parents".into(),
                    });
                }
                conditionals.push((v, p.to_conditional()));
            }
            NodeKind::Value => {}
        }
    }
    Ok(BayesNetView {
        model,
        conditionals,
    })
}
