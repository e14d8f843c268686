use std::fmt;

use serde::Serialize;

use super::ast::{ConditionExpr, RuleSet};
use super::partition::partition_percepts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    MissingCatchAll,
    /// Rule can never be the first match.
    ShadowedRule {
        index: usize,
        id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warn => "WARN",
            Severity::Error => "ERROR",
        };
        match &self.kind {
            DiagnosticKind::MissingCatchAll => {
                write!(f, "{sev} MissingCatchAll: last rule's condition is not `always`")
            }
            DiagnosticKind::ShadowedRule { index, id } => write!(
                f,
                "{sev} ShadowedRule(rule {}): `{id}` is fully covered by earlier rules",
                index + 1
            ),
        }
    }
}

/// Static checks over a parsed program. Diagnostics come out in rule order,
/// shadowing before the catch-all check.
pub fn validate(rs: &RuleSet) -> Vec<Diagnostic> {
    let space = partition_percepts(rs);
    let mut reachable = vec![false; rs.rules.len()];
    for cell in 0..space.len() {
        if let Some(i) = rs.first_match(&space.representative(cell)) {
            reachable[i] = true;
        }
    }
    let mut out = Vec::new();
    let last = rs.rules.len().saturating_sub(1);
    for (i, rule) in rs.rules.iter().enumerate() {
        if i > 0 && !reachable[i] {
            out.push(Diagnostic {
                severity: Severity::Warn,
                kind: DiagnosticKind::ShadowedRule {
                    index: i,
                    id: rule.id.clone(),
                },
            });
        }
        if i == last && rule.condition != ConditionExpr::Always {
            out.push(Diagnostic {
                severity: Severity::Error,
                kind: DiagnosticKind::MissingCatchAll,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse;

    #[test]
    fn missing_catch_all() {
        let rs = parse("rule a: when contact do stop\nrule b: when not contact do hold_course\n").unwrap();
        assert_eq!(
            validate(&rs),
            vec![Diagnostic {
                severity: Severity::Error,
                kind: DiagnosticKind::MissingCatchAll
            }]
        );
    }

    #[test]
    fn shadowed_second_rule() {
        let rs = parse(
            "rule a: when contact do stop\nrule b: when contact do reverse\nrule c: when always do hold_course\n",
        )
        .unwrap();
        let diags = validate(&rs);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warn);
        assert_eq!(
            diags[0].kind,
            DiagnosticKind::ShadowedRule {
                index: 1,
                id: "b".into()
            }
        );
        assert!(diags[0].to_string().contains("rule 2"));
    }

    #[test]
    fn clean_program() {
        let rs = parse("rule stop_on_contact: when contact do stop\nrule cruise: when always do hold_course").unwrap();
        assert!(validate(&rs).is_empty());
    }

    #[test]
    fn partial_overlap_is_not_shadowing() {
        let rs = parse(
            "rule a: when distance < 1 do stop\nrule b: when distance < 2 do reverse\nrule c: when always do hold_course\n",
        )
        .unwrap();
        assert!(validate(&rs).is_empty());
    }

    #[test]
    fn covered_catch_all_warns() {
        let rs = parse(
            "rule a: when contact do stop\nrule b: when not contact do reverse\nrule c: when always do hold_course\n",
        )
        .unwrap();
        let diags = validate(&rs);
        assert_eq!(diags.len(), 1);
        assert!(matches!(diags[0].kind, DiagnosticKind::ShadowedRule { index: 2, .. }));
    }

    #[test]
    fn deterministic_order() {
        let rs = parse(
            "rule a: when contact do stop\nrule b: when contact do reverse\nrule c: when contact and voted_trip do stop\n",
        )
        .unwrap();
        let d1 = validate(&rs);
        assert_eq!(d1, validate(&rs));
        let kinds: Vec<_> = d1.iter().map(|d| d.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                DiagnosticKind::ShadowedRule {
                    index: 1,
                    id: "b".into()
                },
                DiagnosticKind::ShadowedRule {
                    index: 2,
                    id: "c".into()
                },
                DiagnosticKind::MissingCatchAll,
            ]
        );
    }
}
