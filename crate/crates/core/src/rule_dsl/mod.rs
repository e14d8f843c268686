//! The controller's rule language: `.rbr` parsing, static validation, the
//! finite percept partition, and decision-tree compilation.
//!
//! ```text
//! rule stop_on_contact: when contact do stop
//! rule avoid: when trip_latched and distance >= 0.8 do turn_away
//! rule cruise: when always do hold_course
//! ```

mod ast;
mod parser;
mod partition;
mod tree;
mod validate;

use thiserror::Error;

pub use ast::{fmt_number, Action, CmpOp, ConditionExpr, Field, FieldKind, Rule, RuleSet, Valuation};
pub use parser::{parse, parse_named};
pub use partition::{partition_percepts, ruleset_cuts, CellSpace, Cut, Dimension, Segment};
pub use tree::{compile_decision_tree, DecisionTree, Test};
pub use validate::{validate, Diagnostic, DiagnosticKind, Severity};

pub(crate) use ast::clamp_unit;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{column}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown field `{name}` at {line}:{column}")]
    UnknownField { name: String, line: usize, column: usize },
    #[error("duplicate rule id `{id}` on line {line}")]
    DuplicateRuleId { id: String, line: usize },
    #[error("rule set failed validation: {}", .0.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Diagnostic>),
}
