//! Temporal properties over model states and the `.prop` file syntax.
//!
//! ```text
//! # one property per line
//! respond : G( voted_trip -> F<=2 (action=stop | action=reverse | action=turn_away) )
//! halt    : G( contact -> X action=stop )
//! ```

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::rbr_engine::{Action, Percept};

use super::state::ModelState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Stop,
    Reverse,
    TurnAway,
    HoldCourse,
    SetThrust,
}

impl ActionKind {
    pub fn of(a: &Action) -> ActionKind {
        match a {
            Action::Stop => ActionKind::Stop,
            Action::Reverse => ActionKind::Reverse,
            Action::TurnAway => ActionKind::TurnAway,
            Action::HoldCourse => ActionKind::HoldCourse,
            Action::SetThrust { .. } => ActionKind::SetThrust,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ActionKind::Stop => "stop",
            ActionKind::Reverse => "reverse",
            ActionKind::TurnAway => "turn_away",
            ActionKind::HoldCourse => "hold_course",
            ActionKind::SetThrust => "set_thrust",
        }
    }

    fn from_name(s: &str) -> Option<ActionKind> {
        [
            ActionKind::Stop,
            ActionKind::Reverse,
            ActionKind::TurnAway,
            ActionKind::HoldCourse,
            ActionKind::SetThrust,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// Formula over a state and, through `Next`, the states after it.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    ActionIs(ActionKind),
    Contact,
    VotedTrip,
    TripLatched,
    GuardLatched,
    WdtAbove(u32),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    Next(Box<StateFormula>),
}

impl StateFormula {
    pub fn action_is(a: ActionKind) -> Self {
        StateFormula::ActionIs(a)
    }

    /// Number of future states the formula looks at.
    pub fn lookahead(&self) -> usize {
        match self {
            StateFormula::Not(a) => a.lookahead(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.lookahead().max(b.lookahead())
            }
            StateFormula::Next(a) => 1 + a.lookahead(),
            _ => 0,
        }
    }

    /// Evaluates at `window[0]`; `window` must hold at least
    /// `lookahead() + 1` consecutive (state, percept) pairs.
    pub fn eval(&self, window: &[(&ModelState, &Percept)]) -> bool {
        let (s, p) = window[0];
        match self {
            StateFormula::True => true,
            StateFormula::False => false,
            StateFormula::ActionIs(k) => ActionKind::of(&s.last_action) == *k,
            StateFormula::Contact => p.contact,
            StateFormula::VotedTrip => p.voted_trip,
            StateFormula::TripLatched => s.beliefs.trip_latched,
            StateFormula::GuardLatched => s.guard_latched,
            StateFormula::WdtAbove(n) => s.wdt_counter > *n,
            StateFormula::Not(a) => !a.eval(window),
            StateFormula::And(a, b) => a.eval(window) && b.eval(window),
            StateFormula::Or(a, b) => a.eval(window) || b.eval(window),
            StateFormula::Implies(a, b) => !a.eval(window) || b.eval(window),
            StateFormula::Next(a) => a.eval(&window[1..]),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            StateFormula::Implies(..) => 0,
            StateFormula::Or(..) => 1,
            StateFormula::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            StateFormula::True => f.write_str("true")?,
            StateFormula::False => f.write_str("false")?,
            StateFormula::ActionIs(k) => write!(f, "action={}", k.name())?,
            StateFormula::Contact => f.write_str("contact")?,
            StateFormula::VotedTrip => f.write_str("voted_trip")?,
            StateFormula::TripLatched => f.write_str("trip_latched")?,
            StateFormula::GuardLatched => f.write_str("guard_latched")?,
            StateFormula::WdtAbove(n) => write!(f, "wdt>{n}")?,
            StateFormula::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 3)?;
            }
            StateFormula::Next(a) => {
                f.write_str("X ")?;
                a.fmt_prec(f, 3)?;
            }
            StateFormula::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 3)?;
            }
            StateFormula::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 2)?;
            }
            StateFormula::Implies(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 0)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Temporal {
    /// `G(φ)`
    Globally(StateFormula),
    /// `G(φ -> F<=k ψ)`: from every φ-state, every path meets ψ within
    /// `k` transitions.
    BoundedResponse {
        trigger: StateFormula,
        response: StateFormula,
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub formula: Temporal,
}

impl Property {
    pub fn globally(name: impl Into<String>, phi: StateFormula) -> Self {
        Property {
            name: name.into(),
            formula: Temporal::Globally(phi),
        }
    }

    pub fn bounded_response(name: impl Into<String>, trigger: StateFormula, k: usize, response: StateFormula) -> Self {
        Property {
            name: name.into(),
            formula: Temporal::BoundedResponse { trigger, response, k },
        }
    }

    /// Parses `G( expr )` or `G( expr -> F<=k expr )`.
    pub fn parse(name: &str, text: &str) -> Result<Property, PropertyError> {
        let mut p = PropParser::new(text, 1, 0);
        let formula = p.temporal()?;
        p.expect_end()?;
        Ok(Property {
            name: name.to_string(),
            formula,
        })
    }
}

impl fmt::Display for Temporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temporal::Globally(phi) => write!(f, "G({phi})"),
            Temporal::BoundedResponse { trigger, response, k } => {
                write!(f, "G(")?;
                trigger.fmt_prec(f, 1)?;
                write!(f, " -> F<={k} ")?;
                response.fmt_prec(f, 3)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.name, self.formula)
    }
}

impl Serialize for Property {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("property syntax error at line {line}, column {column}: {message}")]
pub struct PropertyError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct PropParser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col_offset: usize,
}

impl<'a> PropParser<'a> {
    fn new(text: &'a str, line: usize, col_offset: usize) -> Self {
        PropParser {
            src: text.as_bytes(),
            pos: 0,
            line,
            col_offset,
        }
    }

    fn err(&self, message: impl Into<String>) -> PropertyError {
        PropertyError {
            line: self.line,
            column: self.col_offset + self.pos + 1,
            message: message.into(),
        }
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), PropertyError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn expect_end(&mut self) -> Result<(), PropertyError> {
        self.ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn word(&mut self) -> &'a str {
        self.ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii")
    }

    fn number(&mut self) -> Result<u64, PropertyError> {
        self.ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| {
                self.pos = start;
                self.err("expected a non-negative integer")
            })
    }

    fn temporal(&mut self) -> Result<Temporal, PropertyError> {
        self.ws();
        let save = self.pos;
        if self.word() != "G" {
            self.pos = save;
            return Err(self.err("expected `G(`"));
        }
        self.expect("(")?;
        let lhs = self.or_expr()?;
        let formula = if self.eat("->") {
            self.ws();
            let save = self.pos;
            if self.word() == "F" {
                self.expect("<=")?;
                let k_at = self.pos;
                let k = self.number()? as usize;
                if k == 0 {
                    self.pos = k_at;
                    return Err(self.err("bounded response needs k >= 1"));
                }
                let response = self.or_expr()?;
                if lhs.lookahead() > 0 || response.lookahead() > 0 {
                    return Err(self.err("X is not supported inside a bounded response"));
                }
                Temporal::BoundedResponse {
                    trigger: lhs,
                    response,
                    k,
                }
            } else {
                self.pos = save;
                let rhs = self.implication()?;
                Temporal::Globally(StateFormula::Implies(Box::new(lhs), Box::new(rhs)))
            }
        } else {
            Temporal::Globally(lhs)
        };
        self.expect(")")?;
        Ok(formula)
    }

    fn implication(&mut self) -> Result<StateFormula, PropertyError> {
        let lhs = self.or_expr()?;
        if self.eat("->") {
            let rhs = self.implication()?;
            Ok(StateFormula::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<StateFormula, PropertyError> {
        let mut lhs = self.and_expr()?;
        while self.eat("|") {
            let rhs = self.and_expr()?;
            lhs = StateFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<StateFormula, PropertyError> {
        let mut lhs = self.unary()?;
        while self.eat("&") {
            let rhs = self.unary()?;
            lhs = StateFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<StateFormula, PropertyError> {
        if self.eat("!") {
            return Ok(StateFormula::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let inner = self.implication()?;
            self.expect(")")?;
            return Ok(inner);
        }
        let start = self.pos;
        let word = self.word();
        Ok(match word {
            "X" => StateFormula::Next(Box::new(self.unary()?)),
            "true" => StateFormula::True,
            "false" => StateFormula::False,
            "contact" => StateFormula::Contact,
            "voted_trip" => StateFormula::VotedTrip,
            "trip_latched" => StateFormula::TripLatched,
            "guard_latched" => StateFormula::GuardLatched,
            "action" => {
                self.expect("=")?;
                let at = self.pos;
                let name = self.word();
                match ActionKind::from_name(name) {
                    Some(k) => StateFormula::ActionIs(k),
                    None => {
                        self.pos = at;
                        self.ws();
                        return Err(self.err(format!("unknown action `{name}`")));
                    }
                }
            }
            "wdt" => {
                self.expect(">")?;
                let n = self.number()?;
                StateFormula::WdtAbove(u32::try_from(n).map_err(|_| self.err("wdt bound too large"))?)
            }
            "" => {
                self.pos = start;
                self.ws();
                return Err(self.err("expected an atom, `!`, `X` or `(`"));
            }
            other => {
                self.pos = start;
                self.ws();
                return Err(self.err(format!("unknown atom `{other}`")));
            }
        })
    }
}

/// Parses a `.prop` file: `name : G(...)` per line, `#` comments.
pub fn parse_properties(text: &str) -> Result<Vec<Property>, PropertyError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some(colon) = line.find(':') else {
            return Err(PropertyError {
                line: line_no,
                column: 1,
                message: "expected `name : G(...)`".into(),
            });
        };
        let name = line[..colon].trim();
        let valid_name = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !valid_name {
            return Err(PropertyError {
                line: line_no,
                column: 1,
                message: format!("invalid property name `{name}`"),
            });
        }
        let mut p = PropParser::new(&line[colon + 1..], line_no, colon + 1);
        let formula = p.temporal()?;
        p.expect_end()?;
        out.push(Property {
            name: name.to_string(),
            formula,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_response_line() {
        let props =
            parse_properties("respond : G(voted_trip -> F<=2 (action=stop | action=reverse | action=turn_away))\n")
                .unwrap();
        assert_eq!(props.len(), 1);
        match &props[0].formula {
            Temporal::BoundedResponse { trigger, k, response } => {
                assert_eq!(*trigger, StateFormula::VotedTrip);
                assert_eq!(*k, 2);
                assert!(matches!(response, StateFormula::Or(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn next_inside_globally() {
        let props = parse_properties("halt : G( contact -> X action=stop )").unwrap();
        assert_eq!(
            props[0].formula,
            Temporal::Globally(StateFormula::Implies(
                Box::new(StateFormula::Contact),
                Box::new(StateFormula::Next(Box::new(StateFormula::ActionIs(ActionKind::Stop))))
            ))
        );
    }

    #[test]
    fn display_reparses() {
        let src = "a : G(!(contact & wdt>3) | trip_latched -> guard_latched -> X X action=hold_course)\nb : G(voted_trip & !contact -> F<=4 action=stop)\n";
        for p in parse_properties(src).unwrap() {
            let again = parse_properties(&p.to_string()).unwrap();
            assert_eq!(again, vec![p]);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_properties("ok : G(contact)\n\nbad : G(contact -> F<=0 action=stop)\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse_properties("x : G(action=fly)").unwrap_err();
        assert_eq!((err.line, err.column), (1, 14));
        assert!(parse_properties("x : F(contact)").is_err());
        assert!(parse_properties("G(contact)").is_err());
        assert!(parse_properties("x : G(contact").is_err());
        assert!(parse_properties("x : G(contact -> F<=2 X action=stop)").is_err());
        assert!(parse_properties("x : G(contact) trailing").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let props = parse_properties("# header\n\n  a : G(true) # ok\n").unwrap();
        assert_eq!(props.len(), 1);
        assert_eq!(props[0].name, "a");
    }
}
