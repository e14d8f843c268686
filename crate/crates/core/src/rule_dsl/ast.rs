//! Rule program syntax tree and the fixed percept vocabulary.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Percept and belief fields a rule condition may reference.
///
/// The first three are numeric, the rest boolean. `trip_latched` and
/// `ticks_since_trip` come from the controller's beliefs rather than the
/// sensor feed, but rules address them the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Distance,
    Speed,
    TicksSinceTrip,
    ClassifierDetect,
    SonarTrip,
    VotedTrip,
    Contact,
    TripLatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Numeric,
    Boolean,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::Distance,
        Field::Speed,
        Field::TicksSinceTrip,
        Field::ClassifierDetect,
        Field::SonarTrip,
        Field::VotedTrip,
        Field::Contact,
        Field::TripLatched,
    ];
    pub const NUMERIC: [Field; 3] = [Field::Distance, Field::Speed, Field::TicksSinceTrip];
    pub const BOOLEAN: [Field; 5] = [
        Field::ClassifierDetect,
        Field::SonarTrip,
        Field::VotedTrip,
        Field::Contact,
        Field::TripLatched,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Distance => "distance",
            Field::Speed => "speed",
            Field::TicksSinceTrip => "ticks_since_trip",
            Field::ClassifierDetect => "classifier_detect",
            Field::SonarTrip => "sonar_trip",
            Field::VotedTrip => "voted_trip",
            Field::Contact => "contact",
            Field::TripLatched => "trip_latched",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn kind(self) -> FieldKind {
        match self {
            Field::Distance | Field::Speed | Field::TicksSinceTrip => FieldKind::Numeric,
            _ => FieldKind::Boolean,
        }
    }

    /// Slot in [`Valuation::numeric`] or [`Valuation::boolean`].
    pub fn slot(self) -> usize {
        match self {
            Field::Distance => 0,
            Field::Speed => 1,
            Field::TicksSinceTrip => 2,
            Field::ClassifierDetect => 0,
            Field::SonarTrip => 1,
            Field::VotedTrip => 2,
            Field::Contact => 3,
            Field::TripLatched => 4,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point in the rule vocabulary: every field has a value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Valuation {
    pub numeric: [f64; 3],
    pub boolean: [bool; 5],
}

impl Valuation {
    pub fn number(&self, field: Field) -> f64 {
        debug_assert_eq!(field.kind(), FieldKind::Numeric);
        self.numeric[field.slot()]
    }

    pub fn flag(&self, field: Field) -> bool {
        debug_assert_eq!(field.kind(), FieldKind::Boolean);
        self.boolean[field.slot()]
    }

    pub fn set_number(&mut self, field: Field, value: f64) {
        debug_assert_eq!(field.kind(), FieldKind::Numeric);
        self.numeric[field.slot()] = value;
    }

    pub fn set_flag(&mut self, field: Field, value: bool) {
        debug_assert_eq!(field.kind(), FieldKind::Boolean);
        self.boolean[field.slot()] = value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    /// Whether the comparison's truth changes *after* the threshold value
    /// itself (`<=`, `>`), as opposed to at it (`<`, `>=`).
    pub fn closed_at_threshold(self) -> bool {
        matches!(self, CmpOp::Le | CmpOp::Gt)
    }
}

/// Applicability condition of a rule.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionExpr {
    Always,
    Atom(Field),
    Cmp { field: Field, op: CmpOp, value: f64 },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
}

impl ConditionExpr {
    pub fn eval(&self, v: &Valuation) -> bool {
        match self {
            ConditionExpr::Always => true,
            ConditionExpr::Atom(f) => v.flag(*f),
            ConditionExpr::Cmp { field, op, value } => op.apply(v.number(*field), *value),
            ConditionExpr::And(a, b) => a.eval(v) && b.eval(v),
            ConditionExpr::Or(a, b) => a.eval(v) || b.eval(v),
            ConditionExpr::Not(a) => !a.eval(v),
        }
    }

    /// Visits every numeric comparison in the expression.
    pub fn for_each_cmp(&self, f: &mut impl FnMut(Field, CmpOp, f64)) {
        match self {
            ConditionExpr::Always | ConditionExpr::Atom(_) => {}
            ConditionExpr::Cmp { field, op, value } => f(*field, *op, *value),
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
                a.for_each_cmp(f);
                b.for_each_cmp(f);
            }
            ConditionExpr::Not(a) => a.for_each_cmp(f),
        }
    }

    pub fn for_each_atom(&self, f: &mut impl FnMut(Field)) {
        match self {
            ConditionExpr::Always | ConditionExpr::Cmp { .. } => {}
            ConditionExpr::Atom(field) => f(*field),
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
            ConditionExpr::Not(a) => a.for_each_atom(f),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ConditionExpr::Or(..) => 0,
            ConditionExpr::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            ConditionExpr::Always => f.write_str("always")?,
            ConditionExpr::Atom(field) => write!(f, "{field}")?,
            ConditionExpr::Cmp { field, op, value } => write!(f, "{field} {} {}", op.symbol(), fmt_number(*value))?,
            // Left-associative chains print flat; a right operand of the same
            // operator keeps its parentheses so the tree shape survives re-parsing.
            ConditionExpr::Or(a, b) => {
                a.fmt_prec(f, 0)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 1)?;
            }
            ConditionExpr::And(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, 2)?;
            }
            ConditionExpr::Not(a) => {
                f.write_str("not ")?;
                a.fmt_prec(f, 2)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Controller output. Thrust components of `SetThrust` live in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stop,
    Reverse,
    TurnAway,
    HoldCourse,
    SetThrust { left: f64, right: f64 },
}

impl Action {
    /// Builds a `SetThrust`, clamping both components into `[-1, 1]`.
    pub fn set_thrust(left: f64, right: f64) -> Action {
        Action::SetThrust {
            left: clamp_unit(left),
            right: clamp_unit(right),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Action::Stop => "stop",
            Action::Reverse => "reverse",
            Action::TurnAway => "turn_away",
            Action::HoldCourse => "hold_course",
            Action::SetThrust { .. } => "set_thrust",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Action> {
        match word {
            "stop" => Some(Action::Stop),
            "reverse" => Some(Action::Reverse),
            "turn_away" => Some(Action::TurnAway),
            "hold_course" => Some(Action::HoldCourse),
            _ => None,
        }
    }

    /// Whether this action is one of the avoidance responses.
    pub fn is_avoidance(&self) -> bool {
        matches!(self, Action::Stop | Action::Reverse | Action::TurnAway)
    }
}

pub(crate) fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1.0, 1.0)
    }
}

// Thrust components are finite after clamping, so bitwise equality is a
// proper equivalence (with -0.0 folded into 0.0).
impl Eq for Action {}

impl Hash for Action {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        if let Action::SetThrust { left, right } = self {
            (left + 0.0).to_bits().hash(state);
            (right + 0.0).to_bits().hash(state);
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::SetThrust { left, right } => {
                write!(f, "set_thrust({}, {})", fmt_number(*left), fmt_number(*right))
            }
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub condition: ConditionExpr,
    pub action: Action,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: when {} do {}", self.id, self.condition, self.action)
    }
}

/// An ordered rule program. First matching rule wins.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub name: String,
    pub rules: Vec<Rule>,
    pub source_hash: u64,
}

impl RuleSet {
    /// Assembles a rule set from already-built rules, computing its hash.
    pub fn from_rules(name: impl Into<String>, rules: Vec<Rule>) -> RuleSet {
        let mut rs = RuleSet {
            name: name.into(),
            rules,
            source_hash: 0,
        };
        rs.source_hash = crate::content_hash64(rs.canonical_text().as_bytes());
        rs
    }

    /// Canonical program text: one rule per line, LF-terminated.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }

    /// Index of the first rule whose condition holds.
    pub fn first_match(&self, v: &Valuation) -> Option<usize> {
        self.rules.iter().position(|r| r.condition.eval(v))
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Copy of this rule set without the named rule, rehashed.
    pub fn without_rule(&self, id: &str) -> RuleSet {
        let rules = self.rules.iter().filter(|r| r.id != id).cloned().collect();
        RuleSet::from_rules(self.name.clone(), rules)
    }

    /// Fields referenced anywhere in the program, in vocabulary order.
    pub fn referenced_fields(&self) -> Vec<Field> {
        let mut seen = [false; 8];
        for rule in &self.rules {
            rule.condition.for_each_atom(&mut |f| seen[f as usize] = true);
            rule.condition.for_each_cmp(&mut |f, _, _| seen[f as usize] = true);
        }
        Field::ALL.iter().copied().filter(|f| seen[*f as usize]).collect()
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_number(x: f64) -> String {
    let x = x + 0.0;
    let s = format!("{x}");
    if s.contains('e') {
        // Display never uses exponents for f64, but keep the grammar honest.
        format!("{x:.17}")
    } else {
        s
    }
}
