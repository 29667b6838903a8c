use thiserror::Error;

pub type Result<T> = std::result::Result<T, IridError>;

/// Everything that can go wrong while building, transforming or solving a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IridError {
    // --- model construction -------------------------------------------------
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` declared more than once")]
    DuplicateVariable(String),
    #[error("node `{0}` needs a frame")]
    MissingFrame(String),
    #[error("value node `{0}` must not declare a frame")]
    UnexpectedFrame(String),
    #[error("frame of `{0}` is empty")]
    EmptyFrame(String),
    #[error("frame of `{var}` repeats label `{label}`")]
    DuplicateLabel { var: String, label: String },
    #[error("directed cycle through `{0}`")]
    CycleDetected(String),
    #[error("model must have exactly one value node, found {0}")]
    MultipleValueNodes(usize),
    #[error("value node `{0}` has outgoing arrows")]
    ValueNodeNotSink(String),
    #[error("decisions are not completely ordered: no arrow `{from}` -> `{to}`")]
    DecisionsNotTotallyOrdered { from: String, to: String },
    #[error("no-forgetting violated: `{from}` -> `{earlier}` but not `{from}` -> `{later}`")]
    NoForgettingViolated {
        from: String,
        earlier: String,
        later: String,
    },
    #[error("arrow `{from}` -> `{to}` should be {expected}")]
    ArrowKindMismatch {
        from: String,
        to: String,
        expected: &'static str,
    },
    #[error("duplicate arrow `{from}` -> `{to}`")]
    DuplicateArrow { from: String, to: String },
    #[error("table parents of `{node}` do not match its graph parents")]
    ParentMismatch { node: String },
    #[error("constraint scope of `{decision}` includes non-parent `{var}`")]
    ConstraintScopeNotParents { decision: String, var: String },
    #[error("missing conditional for chance node `{0}`")]
    MissingCpt(String),
    #[error("more than one table given for `{0}`")]
    DuplicateTable(String),
    #[error("`{0}` is not a {1} node")]
    WrongNodeKind(String, &'static str),
    #[error("CPT row of `{child}` at ({config}) does not sum to 1 (sum {sum})")]
    CptRowNotNormalized {
        child: String,
        row: usize,
        config: String,
        sum: f64,
    },
    #[error("CPT entry of `{child}` at ({config}) is outside [0, 1]")]
    ProbabilityOutOfRange {
        child: String,
        row: usize,
        config: String,
    },
    #[error("constraint on `{decision}` allows nothing at ({config})")]
    EmptyConstraintCell {
        decision: String,
        row: usize,
        config: String,
    },
    #[error("{table}: missing entry at ({config})")]
    MissingTableEntry { table: String, config: String },
    #[error("{table}: expected {expected} entries, found {found}")]
    TableSizeMismatch {
        table: String,
        expected: usize,
        found: usize,
    },
    #[error("{table}: non-finite entry at ({config})")]
    NonFiniteEntry { table: String, config: String },

    // --- queries -----------------------------------------------------------
    #[error("`{0}` is not a decision node")]
    UnknownDecision(String),
    #[error("configuration does not assign `{0}`")]
    IncompleteConfig(String),
    #[error("value index {value} is not in the frame of `{var}`")]
    ValueNotInFrame { var: String, value: String },
    #[error("no policy supplied for decision `{0}`")]
    MissingPolicy(String),
    #[error("policy for `{decision}` is invalid: {reason}")]
    InvalidPolicy { decision: String, reason: String },
    #[error("policy for `{0}` does not cover every parent configuration")]
    IncompletePolicy(String),
    #[error("`{0}` is not the last remaining decision")]
    NotLastDecision(String),

    // --- factors / sampling --------------------------------------------------
    #[error("every value of `{0}` has zero probability in the current state")]
    AllZeroSupport(String),
    #[error("stage {stage} out of range (model has {stages} decision stages)")]
    StageOutOfRange { stage: usize, stages: usize },
    #[error("no positive-probability completion of ({config})")]
    NoPositiveState { config: String },
    #[error("conditioning event ({config}) has probability zero")]
    ZeroNormalizer { config: String },
    #[error("invalid sampler configuration: {0}")]
    InvalidSamplerConfig(String),
    #[error("enumeration budget exceeded: {what} needs {needed}, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    // --- file I/O -------------------------------------------------------------
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("at `{path}`: {source}")]
    AtField {
        path: String,
        source: Box<IridError>,
    },
}

impl IridError {
    /// Strips any field-path wrappers.
    pub fn root(&self) -> &IridError {
        match self {
            IridError::AtField { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that mean the model itself is malformed.
    pub fn is_validation(&self) -> bool {
        use IridError::*;
        !matches!(
            self.root(),
            AllZeroSupport(_)
                | NoPositiveState { .. }
                | ZeroNormalizer { .. }
                | BudgetExceeded { .. }
                | InvalidSamplerConfig(_)
                | StageOutOfRange { .. }
        )
    }
}
