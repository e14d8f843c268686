//! Compilation of a first-match rule program into an equivalent decision tree.

use std::fmt;

use serde::Serialize;

use super::ast::{Action, ConditionExpr, Field, RuleSet, Valuation};
use super::partition::{partition_percepts, CellSpace, Dimension};
use super::{validate, DslError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Test {
    /// High branch when the flag is set.
    Flag { field: Field },
    /// Low branch when `x < threshold`, or `x <= threshold` if `inclusive`.
    Threshold {
        field: Field,
        threshold: f64,
        inclusive: bool,
    },
}

impl Test {
    /// True selects the low branch.
    fn goes_low(&self, v: &Valuation) -> bool {
        match *self {
            Test::Flag { field } => !v.flag(field),
            Test::Threshold {
                field,
                threshold,
                inclusive,
            } => {
                let x = v.number(field);
                if inclusive {
                    x <= threshold
                } else {
                    x < threshold
                }
            }
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Test::Flag { field } => write!(f, "{field}"),
            Test::Threshold {
                field,
                threshold,
                inclusive,
            } => write!(f, "{field} {} {threshold}", if *inclusive { ">" } else { ">=" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum DecisionTree {
    Leaf {
        action: Action,
        rule: String,
    },
    Split {
        test: Test,
        low: Box<DecisionTree>,
        high: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn eval(&self, v: &Valuation) -> &Action {
        self.leaf(v).0
    }

    /// Action and originating rule id for a valuation.
    pub fn leaf(&self, v: &Valuation) -> (&Action, &str) {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf { action, rule } => return (action, rule),
                DecisionTree::Split { test, low, high } => {
                    node = if test.goes_low(v) { low } else { high };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Split { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 1,
            DecisionTree::Split { low, high, .. } => low.leaf_count() + high.leaf_count(),
        }
    }

    /// Whether every root-to-leaf path tests each split point at most once.
    pub fn paths_test_once(&self) -> bool {
        fn walk(node: &DecisionTree, seen: &mut Vec<Test>) -> bool {
            match node {
                DecisionTree::Leaf { .. } => true,
                DecisionTree::Split { test, low, high } => {
                    if seen.contains(test) {
                        return false;
                    }
                    seen.push(*test);
                    let ok = walk(low, seen) && walk(high, seen);
                    seen.pop();
                    ok
                }
            }
        }
        walk(self, &mut Vec::new())
    }

    fn fmt_indent(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            DecisionTree::Leaf { action, rule } => writeln!(f, "{pad}{action}  [{rule}]"),
            DecisionTree::Split { test, low, high } => {
                writeln!(f, "{pad}if {test}:")?;
                high.fmt_indent(f, depth + 1)?;
                writeln!(f, "{pad}else:")?;
                low.fmt_indent(f, depth + 1)
            }
        }
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indent(f, 0)
    }
}

/// Per-dimension inclusive coordinate ranges of the cell space.
#[derive(Clone)]
struct Region {
    ranges: Vec<(usize, usize)>,
}

fn kleene_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn kleene_or(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

struct Compiler<'a> {
    rs: &'a RuleSet,
    space: &'a CellSpace,
}

impl Compiler<'_> {
    /// Truth of `expr` over the whole region, `None` if it varies.
    fn eval(&self, expr: &ConditionExpr, region: &Region) -> Option<bool> {
        match expr {
            ConditionExpr::Always => Some(true),
            ConditionExpr::Atom(field) => {
                let d = self.space.dim_index(*field).expect("referenced field has a dimension");
                let (lo, hi) = region.ranges[d];
                (lo == hi).then_some(lo == 1)
            }
            ConditionExpr::Cmp { field, op, value } => {
                let d = self.space.dim_index(*field).expect("referenced field has a dimension");
                let Dimension::Numeric { segments, .. } = &self.space.dims()[d] else {
                    unreachable!("comparison on a boolean dimension")
                };
                let (lo, hi) = region.ranges[d];
                let first = op.apply(segments[lo].representative(), *value);
                segments[lo..=hi]
                    .iter()
                    .all(|s| op.apply(s.representative(), *value) == first)
                    .then_some(first)
            }
            ConditionExpr::And(a, b) => kleene_and(self.eval(a, region), self.eval(b, region)),
            ConditionExpr::Or(a, b) => kleene_or(self.eval(a, region), self.eval(b, region)),
            ConditionExpr::Not(a) => self.eval(a, region).map(|x| !x),
        }
    }

    /// First sub-expression atom that is not constant over the region.
    fn undecided_atom<'e>(&self, expr: &'e ConditionExpr, region: &Region) -> Option<&'e ConditionExpr> {
        match expr {
            ConditionExpr::Always => None,
            ConditionExpr::Atom(_) | ConditionExpr::Cmp { .. } => self.eval(expr, region).is_none().then_some(expr),
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => self
                .undecided_atom(a, region)
                .or_else(|| self.undecided_atom(b, region)),
            ConditionExpr::Not(a) => self.undecided_atom(a, region),
        }
    }

    fn build(&self, region: Region) -> DecisionTree {
        for rule in &self.rs.rules {
            match self.eval(&rule.condition, &region) {
                Some(false) => continue,
                Some(true) => {
                    return DecisionTree::Leaf {
                        action: rule.action,
                        rule: rule.id.clone(),
                    }
                }
                None => {
                    let atom = self
                        .undecided_atom(&rule.condition, &region)
                        .expect("an undecided condition has an undecided atom");
                    let (test, d, split_at) = self.split_point(atom, &region);
                    let (lo, hi) = region.ranges[d];
                    let mut low = region.clone();
                    low.ranges[d] = (lo, split_at - 1);
                    let mut high = region;
                    high.ranges[d] = (split_at, hi);
                    return DecisionTree::Split {
                        test,
                        low: Box::new(self.build(low)),
                        high: Box::new(self.build(high)),
                    };
                }
            }
        }
        unreachable!("validated programs end in a catch-all")
    }

    /// Test, dimension, and first coordinate of the high side.
    fn split_point(&self, atom: &ConditionExpr, region: &Region) -> (Test, usize, usize) {
        match atom {
            ConditionExpr::Atom(field) => {
                let d = self.space.dim_index(*field).unwrap();
                (Test::Flag { field: *field }, d, 1)
            }
            ConditionExpr::Cmp { field, op, value } => {
                let d = self.space.dim_index(*field).unwrap();
                let Dimension::Numeric { segments, .. } = &self.space.dims()[d] else {
                    unreachable!()
                };
                let inclusive = op.closed_at_threshold();
                let (lo, hi) = region.ranges[d];
                let k = (lo..=hi)
                    .find(|&i| {
                        let r = segments[i].representative();
                        if inclusive {
                            r > *value
                        } else {
                            r >= *value
                        }
                    })
                    .expect("undecided comparison changes within the range");
                (
                    Test::Threshold {
                        field: *field,
                        threshold: *value,
                        inclusive,
                    },
                    d,
                    k,
                )
            }
            _ => unreachable!("split on a compound expression"),
        }
    }
}

/// Compiles a validated rule program into a decision tree that agrees with
/// first-match evaluation on every cell of its percept partition.
pub fn compile_decision_tree(rs: &RuleSet) -> Result<DecisionTree, DslError> {
    let diags = validate(rs);
    if diags.iter().any(|d| d.is_error()) {
        return Err(DslError::ValidationFailed(diags));
    }
    let space = partition_percepts(rs);
    let region = Region {
        ranges: space.dims().iter().map(|d| (0, d.arity() - 1)).collect(),
    };
    Ok(Compiler { rs, space: &space }.build(region))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse;

    #[test]
    fn one_boolean_split() {
        let rs = parse("rule s: when contact do stop\nrule c: when always do hold_course\n").unwrap();
        let tree = compile_decision_tree(&rs).unwrap();
        assert_eq!(
            tree,
            DecisionTree::Split {
                test: Test::Flag { field: Field::Contact },
                low: Box::new(DecisionTree::Leaf {
                    action: Action::HoldCourse,
                    rule: "c".into()
                }),
                high: Box::new(DecisionTree::Leaf {
                    action: Action::Stop,
                    rule: "s".into()
                }),
            }
        );
    }

    #[test]
    fn catch_all_only_is_a_leaf() {
        let rs = parse("rule c: when always do reverse\n").unwrap();
        let tree = compile_decision_tree(&rs).unwrap();
        assert_eq!(
            tree,
            DecisionTree::Leaf {
                action: Action::Reverse,
                rule: "c".into()
            }
        );
    }

    #[test]
    fn refuses_invalid_programs() {
        let rs = parse("rule s: when contact do stop\n").unwrap();
        assert!(matches!(compile_decision_tree(&rs), Err(DslError::ValidationFailed(_))));
    }

    #[test]
    fn twelve_cell_program_agrees_everywhere() {
        let rs = parse(
            "rule a: when distance < 1.5 and contact do stop\nrule b: when distance < 3.0 and voted_trip do turn_away\nrule c: when always do hold_course\n",
        )
        .unwrap();
        let tree = compile_decision_tree(&rs).unwrap();
        let space = partition_percepts(&rs);
        assert_eq!(space.len(), 12);
        for cell in 0..space.len() {
            let v = space.representative(cell);
            let i = rs.first_match(&v).unwrap();
            assert_eq!(tree.leaf(&v), (&rs.rules[i].action, rs.rules[i].id.as_str()));
        }
        assert!(tree.paths_test_once());
    }

    #[test]
    fn inclusive_thresholds_split_at_the_point() {
        let rs = parse(
            "rule a: when distance <= 2 do stop\nrule b: when distance > 2 and speed >= 1 do reverse\nrule c: when always do hold_course\n",
        )
        .unwrap();
        let tree = compile_decision_tree(&rs).unwrap();
        let mut v = Valuation::default();
        v.set_number(Field::Distance, 2.0);
        assert_eq!(tree.eval(&v), &Action::Stop);
        v.set_number(Field::Distance, 2.0000001);
        v.set_number(Field::Speed, 1.0);
        assert_eq!(tree.eval(&v), &Action::Reverse);
        v.set_number(Field::Speed, 0.999);
        assert_eq!(tree.eval(&v), &Action::HoldCourse);
    }
}
