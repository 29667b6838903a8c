//! Dense table factors over finite variables.
//!
//! A [`Factor`] stores one real number per configuration of its scope in
//! row-major order: the last scope variable varies fastest. Conditionals,
//! zero-one policy tables, constraint indicators and the value table are all
//! factors; probability products never include the value table.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{IridError, Result};

/// Index of a variable in its model. Stable across barren removal and
/// decision absorption.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Read access to a (partial) assignment of frame indices.
pub trait Assignment {
    fn value_of(&self, var: VarId) -> Option<usize>;
}

/// A partial or total assignment of variables to frame indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config(BTreeMap<VarId, usize>);

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: VarId, value: usize) -> Self {
        self.0.insert(var, value);
        self
    }

    pub fn set(&mut self, var: VarId, value: usize) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn remove(&mut self, var: VarId) -> Option<usize> {
        self.0.remove(&var)
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&v, &x)| (v, x))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.keys().copied()
    }

    /// Keeps only the listed variables.
    pub fn project(&self, vars: &[VarId]) -> Config {
        Config(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(&v, &x)| (v, x))
                .collect(),
        )
    }

    /// Union; on overlap `other` wins.
    pub fn merged(&self, other: &Config) -> Config {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(&v, &x)| (v, x)));
        out
    }
}

impl Assignment for Config {
    fn value_of(&self, var: VarId) -> Option<usize> {
        self.get(var)
    }
}

impl FromIterator<(VarId, usize)> for Config {
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Config(iter.into_iter().collect())
    }
}

/// Flat assignment indexed by `VarId`, used on hot paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseState(Vec<usize>);

impl DenseState {
    const UNSET: usize = usize::MAX;

    pub fn new(capacity: usize) -> Self {
        DenseState(vec![Self::UNSET; capacity])
    }

    pub fn from_config(capacity: usize, config: &Config) -> Self {
        let mut s = Self::new(capacity);
        for (v, x) in config.iter() {
            s.set(v, x);
        }
        s
    }

    #[inline]
    pub fn set(&mut self, var: VarId, value: usize) {
        self.0[var.0] = value;
    }

    #[inline]
    pub fn get(&self, var: VarId) -> Option<usize> {
        match self.0.get(var.0) {
            Some(&x) if x != Self::UNSET => Some(x),
            _ => None,
        }
    }

    pub fn unset(&mut self, var: VarId) {
        self.0[var.0] = Self::UNSET;
    }

    pub fn to_config(&self) -> Config {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != Self::UNSET)
            .map(|(i, &x)| (VarId(i), x))
            .collect()
    }
}

impl Assignment for DenseState {
    #[inline]
    fn value_of(&self, var: VarId) -> Option<usize> {
        self.get(var)
    }
}

/// `base` with one variable overridden.
pub struct Overridden<'a, A: ?Sized> {
    pub base: &'a A,
    pub var: VarId,
    pub value: usize,
}

impl<A: Assignment + ?Sized> Assignment for Overridden<'_, A> {
    #[inline]
    fn value_of(&self, var: VarId) -> Option<usize> {
        if var == self.var {
            Some(self.value)
        } else {
            self.base.value_of(var)
        }
    }
}

/// Calls `f` on every configuration of `cards` in row-major order.
pub fn for_each_config(cards: &[usize], mut f: impl FnMut(&[usize])) {
    if cards.contains(&0) {
        return;
    }
    let mut cur = vec![0usize; cards.len()];
    loop {
        f(&cur);
        let mut i = cards.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Number of configurations, saturating.
pub fn config_count(cards: &[usize]) -> u128 {
    cards
        .iter()
        .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        assert_eq!(scope.len(), cards.len(), "scope and cards differ in length");
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(IridError::DuplicateVariable(v.to_string()));
            }
        }
        let expected = cards.iter().product::<usize>();
        if values.len() != expected {
            return Err(IridError::TableSizeMismatch {
                table: "factor".into(),
                expected,
                found: values.len(),
            });
        }
        let strides = strides_for(&cards);
        Ok(Factor {
            scope,
            cards,
            strides,
            values,
        })
    }

    /// Builds a factor by evaluating `f` at every configuration.
    pub fn from_fn(
        scope: Vec<VarId>,
        cards: Vec<usize>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(cards.iter().product());
        for_each_config(&cards, |c| values.push(f(c)));
        Factor::new(scope, cards, values).expect("from_fn builds a consistent table")
    }

    pub fn constant(value: f64) -> Self {
        Factor {
            scope: vec![],
            cards: vec![],
            strides: vec![],
            values: vec![value],
        }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.scope.contains(&var)
    }

    pub fn card_of(&self, var: VarId) -> Option<usize> {
        self.scope
            .iter()
            .position(|&v| v == var)
            .map(|i| self.cards[i])
    }

    /// Row-major offset of a configuration given positionally.
    pub fn offset_of(&self, config: &[usize]) -> usize {
        debug_assert_eq!(config.len(), self.scope.len());
        config.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn at(&self, config: &[usize]) -> f64 {
        self.values[self.offset_of(config)]
    }

    fn offset<A: Assignment + ?Sized>(&self, a: &A) -> Result<usize> {
        let mut off = 0;
        for ((&v, &card), &stride) in self.scope.iter().zip(&self.cards).zip(&self.strides) {
            let x = a
                .value_of(v)
                .ok_or_else(|| IridError::IncompleteConfig(v.to_string()))?;
            if x >= card {
                return Err(IridError::ValueNotInFrame {
                    var: v.to_string(),
                    value: x.to_string(),
                });
            }
            off += x * stride;
        }
        Ok(off)
    }

    /// Entry at an assignment covering the whole scope.
    pub fn evaluate<A: Assignment + ?Sized>(&self, a: &A) -> Result<f64> {
        Ok(self.values[self.offset(a)?])
    }

    /// Like [`Factor::evaluate`] but the caller guarantees full, in-frame coverage.
    #[inline]
    pub fn evaluate_total<A: Assignment + ?Sized>(&self, a: &A) -> f64 {
        let mut off = 0;
        for (&v, &stride) in self.scope.iter().zip(&self.strides) {
            let x = a.value_of(v).expect("total assignment");
            off += x * stride;
        }
        self.values[off]
    }

    /// Slices the table at the assigned variables. Variables outside the scope
    /// are ignored.
    pub fn restrict(&self, config: &Config) -> Result<Factor> {
        let mut keep = Vec::new();
        let mut base = 0;
        for (i, &v) in self.scope.iter().enumerate() {
            match config.get(v) {
                Some(x) if x >= self.cards[i] => {
                    return Err(IridError::ValueNotInFrame {
                        var: v.to_string(),
                        value: x.to_string(),
                    })
                }
                Some(x) => base += x * self.strides[i],
                None => keep.push(i),
            }
        }
        let scope: Vec<VarId> = keep.iter().map(|&i| self.scope[i]).collect();
        let cards: Vec<usize> = keep.iter().map(|&i| self.cards[i]).collect();
        let strides: Vec<usize> = keep.iter().map(|&i| self.strides[i]).collect();
        Ok(Factor::from_fn(scope, cards, |c| {
            let off: usize = c.iter().zip(&strides).map(|(x, s)| x * s).sum();
            self.values[base + off]
        }))
    }

    /// Same table with `var` renamed to `to`.
    pub fn relabel(&self, var: VarId, to: VarId) -> Factor {
        let mut f = self.clone();
        for v in f.scope.iter_mut() {
            if *v == var {
                *v = to;
            }
        }
        f
    }
}

/// Distribution of `target` given the rest of `state`: proportional to the
/// product, over the factors containing `target`, of each factor evaluated with
/// `target` set to each candidate value. Factors not mentioning `target` are
/// skipped.
pub fn full_conditional<A: Assignment + ?Sized>(
    target: VarId,
    state: &A,
    factors: &[&Factor],
) -> Result<Vec<f64>> {
    let relevant: Vec<&Factor> = factors
        .iter()
        .copied()
        .filter(|f| f.contains(target))
        .collect();
    let card = relevant
        .first()
        .and_then(|f| f.card_of(target))
        .ok_or_else(|| IridError::UnknownVariable(target.to_string()))?;
    let mut weights = vec![1.0; card];
    for (value, w) in weights.iter_mut().enumerate() {
        let probe = Overridden {
            base: state,
            var: target,
            value,
        };
        for f in &relevant {
            *w *= f.evaluate(&probe)?;
            if *w == 0.0 {
                break;
            }
        }
    }
    normalize(&mut weights).ok_or_else(|| IridError::AllZeroSupport(target.to_string()))?;
    Ok(weights)
}

/// Normalizes in place; `None` if the total is zero or not finite.
pub fn normalize(weights: &mut [f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return None;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Some(total)
}
