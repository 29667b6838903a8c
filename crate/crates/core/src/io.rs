//! JSON model files and solution output.
//!
//! A model document has the top-level keys `schema_version`, `objective`,
//! `nodes`, `arrows`, `cpts`, `constraints` and `value`. Table rows are keyed
//! by labelled parent configurations (`given`), so row order in the file does
//! not matter. Probabilities left out of a CPT row are zero; a decision with
//! no constraint entry is unconstrained.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::error::{IridError, Result};
use crate::factors::{for_each_config, Config, VarId};
use crate::model::{
    ArrowKind, ArrowSpec, ConstraintSpec, CptSpec, Frame, IridModel, ModelSpecs, NodeKind,
    NodeSpec, Objective, ValueSpec,
};
use crate::solver::Solution;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindEntry {
    Chance,
    Decision,
    Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ArrowKindEntry {
    Relevance,
    Informational,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ObjectiveEntry {
    #[default]
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    kind: KindEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrowEntry {
    from: String,
    to: String,
    kind: ArrowKindEntry,
}

type Given = BTreeMap<String, String>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptRow {
    given: Given,
    p: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptEntry {
    child: String,
    #[serde(default)]
    parents: Vec<String>,
    rows: Vec<CptRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintCell {
    given: Given,
    allow: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintEntry {
    decision: String,
    #[serde(default)]
    scope: Vec<String>,
    cells: Vec<ConstraintCell>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueCell {
    given: Given,
    v: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueEntry {
    #[serde(default)]
    parents: Vec<String>,
    cells: Vec<ValueCell>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: String,
    #[serde(default)]
    objective: ObjectiveEntry,
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    arrows: Vec<ArrowEntry>,
    #[serde(default)]
    cpts: Vec<CptEntry>,
    #[serde(default)]
    constraints: Vec<ConstraintEntry>,
    value: ValueEntry,
}

fn at(path: impl Into<String>, e: IridError) -> IridError {
    IridError::AtField {
        path: path.into(),
        source: Box::new(e),
    }
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> IridError {
    IridError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn read_file(bytes: &[u8]) -> Result<ModelFile> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let file: ModelFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => schema(path, strip_location(&inner)),
            _ => IridError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: strip_location(&inner),
            },
        }
    })?;
    de.end().map_err(|e| IridError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_location(&e),
    })?;
    if file.schema_version.split('.').next() != Some("1") {
        return Err(schema(
            "schema_version",
            format!("unsupported version `{}`", file.schema_version),
        ));
    }
    Ok(file)
}

fn strip_location(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

/// Name → frame lookup over the declared nodes.
struct Frames<'f> {
    nodes: &'f [NodeEntry],
}

impl Frames<'_> {
    fn frame(&self, name: &str) -> Result<&[String]> {
        let n = self
            .nodes
            .iter()
            .find(|n| n.id == name)
            .ok_or_else(|| IridError::UnknownVariable(name.into()))?;
        match (&n.kind, &n.frame) {
            (KindEntry::Value, _) => Err(IridError::ValueNodeNotSink(name.into())),
            (_, Some(f)) => Ok(f),
            (_, None) => Err(IridError::MissingFrame(name.into())),
        }
    }

    /// Row-major index of a labelled configuration of `vars`.
    fn row_of(&self, vars: &[String], given: &Given, path: &str) -> Result<usize> {
        for k in given.keys() {
            if !vars.contains(k) {
                return Err(schema(
                    format!("{path}.given"),
                    format!("`{k}` is not in the scope"),
                ));
            }
        }
        let mut row = 0;
        for v in vars {
            let frame = self.frame(v).map_err(|e| at(format!("{path}.given"), e))?;
            let label = given
                .get(v)
                .ok_or_else(|| schema(format!("{path}.given"), format!("missing `{v}`")))?;
            let x = frame.iter().position(|l| l == label).ok_or_else(|| {
                at(
                    format!("{path}.given.{v}"),
                    IridError::ValueNotInFrame {
                        var: v.clone(),
                        value: label.clone(),
                    },
                )
            })?;
            row = row * frame.len() + x;
        }
        Ok(row)
    }

    fn rows(&self, vars: &[String], path: &str) -> Result<usize> {
        let mut n = 1usize;
        for (k, v) in vars.iter().enumerate() {
            let f = self.frame(v).map_err(|e| at(format!("{path}[{k}]"), e))?;
            n = n.saturating_mul(f.len());
        }
        Ok(n)
    }
}

/// Where each table row came from in the file.
#[derive(Default)]
struct Origins {
    cpt_rows: BTreeMap<String, (usize, Vec<usize>)>,
    constraint_cells: BTreeMap<String, (usize, Vec<usize>)>,
}

fn missing_row(table: &str, vars: &[String], frames: &Frames<'_>, row: usize) -> IridError {
    let mut idx = Vec::with_capacity(vars.len());
    let mut rem = row;
    for v in vars.iter().rev() {
        let f = frames.frame(v).unwrap_or(&[]);
        let len = f.len().max(1);
        idx.push(f.get(rem % len).cloned().unwrap_or_default());
        rem /= len;
    }
    idx.reverse();
    let config = vars
        .iter()
        .zip(idx)
        .map(|(v, l)| format!("{v}={l}"))
        .collect::<Vec<_>>()
        .join(", ");
    IridError::MissingTableEntry {
        table: table.into(),
        config,
    }
}

fn to_specs(file: &ModelFile) -> Result<(ModelSpecs, Origins)> {
    let frames = Frames { nodes: &file.nodes };
    let mut origins = Origins::default();

    let nodes = file
        .nodes
        .iter()
        .map(|n| NodeSpec {
            id: n.id.clone(),
            kind: match n.kind {
                KindEntry::Chance => NodeKind::Chance,
                KindEntry::Decision => NodeKind::Decision,
                KindEntry::Value => NodeKind::Value,
            },
            frame: n.frame.clone().map(Frame::new),
        })
        .collect();
    let arrows = file
        .arrows
        .iter()
        .map(|a| ArrowSpec {
            from: a.from.clone(),
            to: a.to.clone(),
            kind: match a.kind {
                ArrowKindEntry::Relevance => ArrowKind::Relevance,
                ArrowKindEntry::Informational => ArrowKind::Informational,
            },
        })
        .collect();

    let mut cpts = Vec::new();
    for (i, c) in file.cpts.iter().enumerate() {
        let path = format!("cpts[{i}]");
        let frame = frames
            .frame(&c.child)
            .map_err(|e| at(format!("{path}.child"), e))?;
        let n = frames.rows(&c.parents, &format!("{path}.parents"))?;
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut from = vec![0; n];
        for (j, r) in c.rows.iter().enumerate() {
            let rpath = format!("{path}.rows[{j}]");
            let row = frames.row_of(&c.parents, &r.given, &rpath)?;
            if rows[row].is_some() {
                return Err(schema(rpath, "duplicate row"));
            }
            let mut p = vec![0.0; frame.len()];
            for (label, &q) in &r.p {
                let x = frame.iter().position(|l| l == label).ok_or_else(|| {
                    at(
                        format!("{rpath}.p.{label}"),
                        IridError::ValueNotInFrame {
                            var: c.child.clone(),
                            value: label.clone(),
                        },
                    )
                })?;
                p[x] = q;
            }
            rows[row] = Some(p);
            from[row] = j;
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                r.ok_or_else(|| {
                    at(
                        format!("{path}.rows"),
                        missing_row(&format!("cpt `{}`", c.child), &c.parents, &frames, k),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        origins.cpt_rows.entry(c.child.clone()).or_insert((i, from));
        cpts.push(CptSpec {
            child: c.child.clone(),
            parents: c.parents.clone(),
            rows,
        });
    }

    let mut constraints = Vec::new();
    for (i, c) in file.constraints.iter().enumerate() {
        let path = format!("constraints[{i}]");
        frames
            .frame(&c.decision)
            .map_err(|e| at(format!("{path}.decision"), e))?;
        let n = frames.rows(&c.scope, &format!("{path}.scope"))?;
        let mut cells: Vec<Option<Vec<String>>> = vec![None; n];
        let mut from = vec![0; n];
        for (j, cell) in c.cells.iter().enumerate() {
            let cpath = format!("{path}.cells[{j}]");
            let row = frames.row_of(&c.scope, &cell.given, &cpath)?;
            if cells[row].is_some() {
                return Err(schema(cpath, "duplicate cell"));
            }
            cells[row] = Some(cell.allow.clone());
            from[row] = j;
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                r.ok_or_else(|| {
                    at(
                        format!("{path}.cells"),
                        missing_row(
                            &format!("constraint `{}`", c.decision),
                            &c.scope,
                            &frames,
                            k,
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        origins
            .constraint_cells
            .entry(c.decision.clone())
            .or_insert((i, from));
        constraints.push(ConstraintSpec {
            decision: c.decision.clone(),
            scope: c.scope.clone(),
            cells,
        });
    }

    let v = &file.value;
    let n = frames.rows(&v.parents, "value.parents")?;
    let mut values: Vec<Option<f64>> = vec![None; n];
    for (j, cell) in v.cells.iter().enumerate() {
        let cpath = format!("value.cells[{j}]");
        let row = frames.row_of(&v.parents, &cell.given, &cpath)?;
        if values[row].is_some() {
            return Err(schema(cpath, "duplicate cell"));
        }
        values[row] = Some(cell.v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            x.ok_or_else(|| {
                at(
                    "value.cells",
                    missing_row("value table", &v.parents, &frames, k),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let specs = ModelSpecs {
        nodes,
        arrows,
        cpts,
        constraints,
        value: ValueSpec {
            parents: v.parents.clone(),
            values,
        },
        objective: match file.objective {
            ObjectiveEntry::Maximize => Objective::Maximize,
            ObjectiveEntry::Minimize => Objective::Minimize,
        },
    };
    Ok((specs, origins))
}

/// Attaches the most specific file location to a build error.
fn locate(file: &ModelFile, origins: &Origins, e: IridError) -> IridError {
    use IridError::*;
    let node = |name: &str| file.nodes.iter().position(|n| n.id == name);
    let arrow = |from: &str, to: &str| {
        file.arrows
            .iter()
            .position(|a| a.from == from && a.to == to)
    };
    let cpt = |name: &str| file.cpts.iter().position(|c| c.child == name);
    let constraint = |name: &str| file.constraints.iter().position(|c| c.decision == name);

    let path = match &e {
        DuplicateVariable(n) | MissingFrame(n) | UnexpectedFrame(n) | EmptyFrame(n) => {
            node(n).map(|i| format!("nodes[{i}]"))
        }
        DuplicateLabel { var, .. } => node(var).map(|i| format!("nodes[{i}].frame")),
        MultipleValueNodes(_) => Some("nodes".into()),
        ValueNodeNotSink(n) => file
            .arrows
            .iter()
            .position(|a| &a.from == n)
            .map(|i| format!("arrows[{i}]")),
        DuplicateArrow { from, to } => file
            .arrows
            .iter()
            .rposition(|a| &a.from == from && &a.to == to)
            .map(|i| format!("arrows[{i}]")),
        ArrowKindMismatch { from, to, .. } => arrow(from, to).map(|i| format!("arrows[{i}].kind")),
        DecisionsNotTotallyOrdered { .. } | NoForgettingViolated { .. } | CycleDetected(_) => {
            Some("arrows".into())
        }
        UnknownVariable(_) => Some("arrows".into()),
        MissingCpt(_) => Some("cpts".into()),
        ParentMismatch { node: n } => match cpt(n) {
            Some(i) => Some(format!("cpts[{i}].parents")),
            None => Some("value.parents".into()),
        },
        CptRowNotNormalized { child, row, .. } | ProbabilityOutOfRange { child, row, .. } => {
            origins
                .cpt_rows
                .get(child)
                .map(|(i, from)| format!("cpts[{i}].rows[{}]", from[*row]))
        }
        EmptyConstraintCell { decision, row, .. } => origins
            .constraint_cells
            .get(decision)
            .map(|(i, from)| format!("constraints[{i}].cells[{}]", from[*row])),
        ConstraintScopeNotParents { decision, .. } => {
            constraint(decision).map(|i| format!("constraints[{i}].scope"))
        }
        ValueNotInFrame { var, .. } => constraint(var).map(|i| format!("constraints[{i}].cells")),
        DuplicateTable(n) => file
            .cpts
            .iter()
            .rposition(|c| &c.child == n)
            .map(|i| format!("cpts[{i}]"))
            .or_else(|| {
                file.constraints
                    .iter()
                    .rposition(|c| &c.decision == n)
                    .map(|i| format!("constraints[{i}]"))
            }),
        WrongNodeKind(n, "chance") => cpt(n).map(|i| format!("cpts[{i}].child")),
        WrongNodeKind(n, _) => constraint(n).map(|i| format!("constraints[{i}].decision")),
        NonFiniteEntry { .. } => Some("value.cells".into()),
        _ => None,
    };
    match path {
        Some(p) => at(p, e),
        None => e,
    }
}

/// Parses a model document into name-based descriptions without
/// validating the model as a whole.
pub fn parse_model_specs(bytes: &[u8]) -> Result<ModelSpecs> {
    let file = read_file(bytes)?;
    Ok(to_specs(&file)?.0)
}

/// Parses and validates a model document.
pub fn parse_model(bytes: &[u8]) -> Result<IridModel> {
    let file = read_file(bytes)?;
    let (specs, origins) = to_specs(&file)?;
    specs.build().map_err(|e| locate(&file, &origins, e))
}

fn labelled(vars: &[String], frames: &[&Frame], c: &[usize]) -> Given {
    vars.iter()
        .zip(frames)
        .zip(c)
        .map(|((v, f), &x)| (v.clone(), f.labels()[x].clone()))
        .collect()
}

fn model_file(model: &IridModel) -> ModelFile {
    let specs = model.to_specs();
    let frame_of = |name: &str| -> &Frame {
        let v = model.var(name).expect("name from the model");
        model.frame(v).expect("non-value node")
    };
    let frames_of = |vars: &[String]| -> Vec<&Frame> { vars.iter().map(|v| frame_of(v)).collect() };
    let cards_of = |fs: &[&Frame]| -> Vec<usize> { fs.iter().map(|f| f.len()).collect() };

    let cpts = specs
        .cpts
        .iter()
        .map(|c| {
            let fs = frames_of(&c.parents);
            let child = frame_of(&c.child);
            let mut rows = Vec::new();
            let mut k = 0;
            for_each_config(&cards_of(&fs), |cfg| {
                rows.push(CptRow {
                    given: labelled(&c.parents, &fs, cfg),
                    p: child
                        .labels()
                        .iter()
                        .cloned()
                        .zip(c.rows[k].iter().copied())
                        .collect(),
                });
                k += 1;
            });
            CptEntry {
                child: c.child.clone(),
                parents: c.parents.clone(),
                rows,
            }
        })
        .collect();
    let constraints = specs
        .constraints
        .iter()
        .map(|c| {
            let fs = frames_of(&c.scope);
            let mut cells = Vec::new();
            let mut k = 0;
            for_each_config(&cards_of(&fs), |cfg| {
                cells.push(ConstraintCell {
                    given: labelled(&c.scope, &fs, cfg),
                    allow: c.cells[k].clone(),
                });
                k += 1;
            });
            ConstraintEntry {
                decision: c.decision.clone(),
                scope: c.scope.clone(),
                cells,
            }
        })
        .collect();
    let fs = frames_of(&specs.value.parents);
    let mut vcells = Vec::new();
    let mut k = 0;
    for_each_config(&cards_of(&fs), |cfg| {
        vcells.push(ValueCell {
            given: labelled(&specs.value.parents, &fs, cfg),
            v: specs.value.values[k],
        });
        k += 1;
    });

    ModelFile {
        schema_version: SCHEMA_VERSION.into(),
        objective: match specs.objective {
            Objective::Maximize => ObjectiveEntry::Maximize,
            Objective::Minimize => ObjectiveEntry::Minimize,
        },
        nodes: specs
            .nodes
            .iter()
            .map(|n| NodeEntry {
                id: n.id.clone(),
                kind: match n.kind {
                    NodeKind::Chance => KindEntry::Chance,
                    NodeKind::Decision => KindEntry::Decision,
                    NodeKind::Value => KindEntry::Value,
                },
                frame: n.frame.as_ref().map(|f| f.labels().to_vec()),
            })
            .collect(),
        arrows: specs
            .arrows
            .iter()
            .map(|a| ArrowEntry {
                from: a.from.clone(),
                to: a.to.clone(),
                kind: match a.kind {
                    ArrowKind::Relevance => ArrowKindEntry::Relevance,
                    ArrowKind::Informational => ArrowKindEntry::Informational,
                },
            })
            .collect(),
        cpts,
        constraints,
        value: ValueEntry {
            parents: specs.value.parents.clone(),
            cells: vcells,
        },
    }
}

/// Serializes a model as a JSON document that parses back to an equal model.
pub fn write_model(model: &IridModel) -> String {
    let mut s = serde_json::to_string_pretty(&model_file(model)).expect("model serializes");
    s.push('\n');
    s
}

/// Hex SHA-256 of the canonical serialization.
pub fn model_hash(model: &IridModel) -> String {
    hex::encode(Sha256::digest(write_model(model).as_bytes()))
}

/// Currency amount: an integer when whole, two decimals otherwise.
fn money(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let r = (x * 100.0).round() / 100.0;
    let s = if r == 0.0 {
        "0".to_string()
    } else if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{r:.0}")
    } else {
        format!("{r:.2}")
    };
    Value::Number(Number::from_str(&s).expect("decimal literal"))
}

fn named_config(model: &IridModel, config: &Config) -> Value {
    let m: Map<String, Value> = config
        .iter()
        .map(|(v, x)| (model.name(v).to_string(), Value::from(model.label(v, x))))
        .collect();
    Value::Object(m)
}

fn config_of(scope: &[VarId], c: &[usize]) -> Config {
    scope.iter().copied().zip(c.iter().copied()).collect()
}

/// Canonical JSON for a solution of `model`: sorted keys, fixed number
/// formatting, byte-identical for identical inputs.
pub fn serialize_solution(model: &IridModel, solution: &Solution) -> String {
    let policies: Vec<Value> = solution
        .policies
        .iter()
        .map(|p| {
            let d = p.decision();
            let mut cells = Vec::new();
            for_each_config(p.cards(), |c| {
                let cfg = config_of(p.scope(), c);
                let choice = p.choice(&cfg).expect("full configuration");
                cells.push(json!({
                    "given": named_config(model, &cfg),
                    "choice": model.label(d, choice),
                }));
            });
            json!({
                "decision": model.name(d),
                "scope": p.scope().iter().map(|&v| model.name(v)).collect::<Vec<_>>(),
                "cells": cells,
            })
        })
        .collect();

    let diagnostics: Vec<Value> = solution
        .diagnostics
        .iter()
        .map(|cell| {
            let d = cell.decision;
            let alternatives: Vec<Value> = cell
                .evaluated
                .iter()
                .map(|a| {
                    let mut m = Map::new();
                    m.insert(
                        "alternative".into(),
                        Value::from(model.label(d, a.alternative)),
                    );
                    m.insert("value".into(), money(a.value));
                    if let Some(se) = a.std_error {
                        m.insert("std_error".into(), money(se));
                    }
                    if let Some(n) = a.n {
                        m.insert("n".into(), Value::from(n));
                    }
                    Value::Object(m)
                })
                .collect();
            json!({
                "stage": cell.stage,
                "decision": model.name(d),
                "given": named_config(model, &cell.config),
                "alternatives": alternatives,
                "chosen": model.label(d, cell.chosen),
                "unreachable": cell.unreachable,
            })
        })
        .collect();

    let sampler = match &solution.sampler {
        Some(s) => json!({
            "seed": s.seed,
            "burn_in": s.burn_in,
            "samples": s.samples,
            "thinning": s.thinning,
            "crn": solution.crn,
        }),
        None => Value::Null,
    };
    let mut root = Map::new();
    root.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    root.insert("model_hash".into(), Value::from(model_hash(model)));
    root.insert("backend".into(), Value::from(solution.backend.as_str()));
    root.insert("objective".into(), Value::from(solution.objective.as_str()));
    root.insert("sampler".into(), sampler);
    root.insert("expected_value".into(), money(solution.expected_value));
    if let Some(se) = solution.expected_value_std_error {
        root.insert("expected_value_std_error".into(), money(se));
    }
    root.insert("policies".into(), Value::Array(policies));
    root.insert("diagnostics".into(), Value::Array(diagnostics));

    let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json value serializes");
    s.push('\n');
    s
}

/// Fixed-width table per decision, rows in frame order of the scope.
pub fn format_policy_table(model: &IridModel, solution: &Solution) -> String {
    let mut out = String::new();
    for p in &solution.policies {
        let d = p.decision();
        let mut headers: Vec<&str> = p.scope().iter().map(|&v| model.name(v)).collect();
        headers.push(model.name(d));
        let mut rows: Vec<Vec<&str>> = Vec::new();
        for_each_config(p.cards(), |c| {
            let cfg = config_of(p.scope(), c);
            let mut row: Vec<&str> = p
                .scope()
                .iter()
                .zip(c)
                .map(|(&v, &x)| model.label(v, x))
                .collect();
            row.push(model.label(d, p.choice(&cfg).expect("full configuration")));
            rows.push(row);
        });
        let widths: Vec<usize> = (0..headers.len())
            .map(|i| {
                rows.iter()
                    .map(|r| r[i].chars().count())
                    .chain([headers[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[&str]| -> String {
            let n = cells.len();
            let mut s = String::from(" ");
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == n - 1 {
                    s.push_str("| ");
                }
                let _ = write!(s, " {c:<w$} ");
            }
            s.trim_end().to_string()
        };
        let _ = writeln!(out, "decision {}", model.name(d));
        let _ = writeln!(out, "{}", line(&headers));
        let rule: usize = widths.iter().map(|w| w + 2).sum::<usize>() + 3;
        let _ = writeln!(out, " {}", "-".repeat(rule));
        for r in &rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out.push('\n');
    }
    let _ = write!(out, "expected value: {}", money(solution.expected_value));
    if let Some(se) = solution.expected_value_std_error {
        let _ = write!(out, " (std error {})", money(se));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{self, wildcatter_irid};

    #[test]
    fn bundled_models_parse() {
        for src in [
            bundled::WILDCATTER_IRID,
            bundled::WILDCATTER_IRID_LISTING_R,
            bundled::WILDCATTER_IRID_TABLE1_PAYOFFS,
            bundled::WILDCATTER_INFO_ONLY,
            bundled::WILDCATTER_NO_BUDGET,
            bundled::WILDCATTER_BUDGET_WORKAROUND,
        ] {
            parse_model(src.as_bytes()).unwrap();
        }
    }

    #[test]
    fn info_only_has_no_constraints() {
        let m = bundled::wildcatter_info_only();
        for d in m.decisions() {
            assert!(m.constraint(d).is_unconstrained(m.card(d)));
            for p in m.parents(d) {
                assert_eq!(m.arrow_kind(p, d), Some(ArrowKind::Informational));
            }
        }
    }

    #[test]
    fn round_trip() {
        let m = wildcatter_irid();
        let back = parse_model(write_model(&m).as_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_hash(&back), model_hash(&m));
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_model(b"{\n  \"nodes\": [,]\n}").unwrap_err();
        match err {
            IridError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_error_has_field() {
        let src =
            bundled::WILDCATTER_IRID.replacen("\"kind\": \"chance\"", "\"kind\": \"random\"", 1);
        match parse_model(src.as_bytes()).unwrap_err() {
            IridError::Schema { field, .. } => assert_eq!(field, "nodes[0].kind"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unnormalized_row_is_located() {
        let src = bundled::WILDCATTER_IRID.replacen("\"w\": 0.6", "\"w\": 0.57", 1);
        let err = parse_model(src.as_bytes()).unwrap_err();
        match &err {
            IridError::AtField { path, source } => {
                assert_eq!(path, "cpts[1].rows[0]");
                assert!(matches!(**source, IridError::CptRowNotNormalized { .. }));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.is_validation());
    }

    #[test]
    fn money_formatting() {
        assert_eq!(money(250_000.0).to_string(), "250000");
        assert_eq!(money(846_153.846_153).to_string(), "846153.85");
        assert_eq!(money(-0.001).to_string(), "0");
        assert_eq!(money(12.5).to_string(), "12.50");
    }
}
