//! Recursive-descent parser for `.rbr` rule programs.

use std::collections::HashSet;

use super::ast::{Action, CmpOp, ConditionExpr, Field, FieldKind, Rule, RuleSet};
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Colon,
    Comma,
    LParen,
    RParen,
    Cmp(CmpOp),
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, DslError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        match c {
            '\n' => {
                push(&mut out, Tok::Newline);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            ':' => push(&mut out, Tok::Colon),
            ',' => push(&mut out, Tok::Comma),
            '(' => push(&mut out, Tok::LParen),
            ')' => push(&mut out, Tok::RParen),
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                push(&mut out, Tok::Cmp(op));
                if eq {
                    i += 1;
                    col += 1;
                }
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let lexeme: String = chars[i..j].iter().collect();
                let value = parse_decimal(&lexeme).ok_or_else(|| DslError::Syntax {
                    line,
                    column: col,
                    expected: vec!["finite decimal number".into()],
                    found: format!("`{lexeme}`"),
                })?;
                push(&mut out, Tok::Number(value));
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_lowercase() || chars[j].is_ascii_digit() || chars[j] == '_')
                {
                    j += 1;
                }
                push(&mut out, Tok::Ident(chars[i..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            other => {
                return Err(DslError::Syntax {
                    line,
                    column: col,
                    expected: vec!["rule text".into()],
                    found: format!("character {other:?}"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// `-?digits(.digits)?` or `-?.digits`; rejects anything that is not finite.
fn parse_decimal(lexeme: &str) -> Option<f64> {
    let body = lexeme.strip_prefix('-').unwrap_or(lexeme);
    let mut parts = body.split('.');
    let int = parts.next()?;
    let frac = parts.next();
    if parts.next().is_some() || (int.is_empty() && frac.is_none_or(str::is_empty)) {
        return None;
    }
    if frac == Some("") {
        return None;
    }
    let v: f64 = lexeme.parse().ok()?;
    v.is_finite().then_some(v)
}

const KEYWORDS: [&str; 7] = ["rule", "when", "do", "and", "or", "not", "always"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), DslError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn program(&mut self) -> Result<Vec<(Rule, usize)>, DslError> {
        let mut rules = Vec::new();
        self.skip_newlines();
        loop {
            if self.peek().tok == Tok::Eof {
                if rules.is_empty() {
                    return Err(self.error(&["rule"]));
                }
                return Ok(rules);
            }
            let line = self.peek().line;
            rules.push((self.rule()?, line));
            match self.peek().tok {
                Tok::Newline => self.skip_newlines(),
                Tok::Eof => {}
                _ => return Err(self.error(&["and", "or", "end of line"])),
            }
        }
    }

    fn rule(&mut self) -> Result<Rule, DslError> {
        self.expect_keyword("rule")?;
        let id = match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error(&["rule identifier"])),
        };
        self.bump();
        self.expect(Tok::Colon, ":")?;
        self.expect_keyword("when")?;
        let condition = self.expr()?;
        if !self.at_keyword("do") {
            return Err(self.error(&["and", "or", "do"]));
        }
        self.bump();
        let action = self.action()?;
        Ok(Rule { id, condition, action })
    }

    fn expr(&mut self) -> Result<ConditionExpr, DslError> {
        let mut lhs = self.term()?;
        while self.at_keyword("or") {
            self.bump();
            let rhs = self.term()?;
            lhs = ConditionExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ConditionExpr, DslError> {
        let mut lhs = self.factor()?;
        while self.at_keyword("and") {
            self.bump();
            let rhs = self.factor()?;
            lhs = ConditionExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ConditionExpr, DslError> {
        let here = self.peek().clone();
        match &here.tok {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(e)
            }
            Tok::Ident(word) if word == "not" => {
                self.bump();
                Ok(ConditionExpr::Not(Box::new(self.factor()?)))
            }
            Tok::Ident(word) if word == "always" => {
                self.bump();
                Ok(ConditionExpr::Always)
            }
            Tok::Ident(word) if !KEYWORDS.contains(&word.as_str()) => {
                let field = Field::from_name(word).ok_or_else(|| DslError::UnknownField {
                    name: word.clone(),
                    line: here.line,
                    column: here.column,
                })?;
                self.bump();
                match (field.kind(), &self.peek().tok) {
                    (FieldKind::Numeric, Tok::Cmp(op)) => {
                        let op = *op;
                        self.bump();
                        match self.peek().tok {
                            Tok::Number(value) => {
                                self.bump();
                                Ok(ConditionExpr::Cmp { field, op, value })
                            }
                            _ => Err(self.error(&["number"])),
                        }
                    }
                    (FieldKind::Numeric, _) => Err(self.error(&["<", "<=", ">", ">="])),
                    (FieldKind::Boolean, Tok::Cmp(_)) => Err(self.error(&["and", "or", "do", ")"])),
                    (FieldKind::Boolean, _) => Ok(ConditionExpr::Atom(field)),
                }
            }
            _ => Err(self.error(&["not", "(", "field name", "always"])),
        }
    }

    fn number(&mut self) -> Result<f64, DslError> {
        match self.peek().tok {
            Tok::Number(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn action(&mut self) -> Result<Action, DslError> {
        let word = match &self.peek().tok {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.error(&ACTION_WORDS)),
        };
        if let Some(a) = Action::from_keyword(&word) {
            self.bump();
            return Ok(a);
        }
        if word != "set_thrust" {
            return Err(self.error(&ACTION_WORDS));
        }
        self.bump();
        self.expect(Tok::LParen, "(")?;
        let left = self.number()?;
        self.expect(Tok::Comma, ",")?;
        let right = self.number()?;
        self.expect(Tok::RParen, ")")?;
        Ok(Action::set_thrust(left, right))
    }
}

const ACTION_WORDS: [&str; 5] = ["stop", "reverse", "turn_away", "hold_course", "set_thrust"];

/// Parses a rule program into a [`RuleSet`] with the given name.
pub fn parse_named(name: &str, text: &str) -> Result<RuleSet, DslError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let rules = parser.program()?;
    let mut seen = HashSet::new();
    for (rule, line) in &rules {
        if !seen.insert(rule.id.clone()) {
            return Err(DslError::DuplicateRuleId {
                id: rule.id.clone(),
                line: *line,
            });
        }
    }
    Ok(RuleSet::from_rules(name, rules.into_iter().map(|(r, _)| r).collect()))
}

/// Parses a rule program named `ruleset`.
pub fn parse(text: &str) -> Result<RuleSet, DslError> {
    parse_named("ruleset", text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let rs = parse("rule stop_on_contact: when contact do stop\nrule cruise: when always do hold_course").unwrap();
        assert_eq!(rs.rules.len(), 2);
        assert_eq!(rs.rules[0].action, Action::Stop);
        assert_eq!(rs.rules[1].condition, ConditionExpr::Always);
    }

    #[test]
    fn conjunction_with_negation() {
        let rs = parse(
            "rule r1: when distance < 1.5 and not contact do turn_away\nrule fallback: when always do hold_course\n",
        )
        .unwrap();
        let expected = ConditionExpr::And(
            Box::new(ConditionExpr::Cmp {
                field: Field::Distance,
                op: CmpOp::Lt,
                value: 1.5,
            }),
            Box::new(ConditionExpr::Not(Box::new(ConditionExpr::Atom(Field::Contact)))),
        );
        assert_eq!(rs.rules[0].condition, expected);
    }

    #[test]
    fn unknown_field() {
        match parse("rule r1: when depth < 2 do stop") {
            Err(DslError::UnknownField { name, line, column }) => {
                assert_eq!(name, "depth");
                assert_eq!((line, column), (1, 15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids() {
        let err = parse("rule a: when contact do stop\nrule a: when always do stop\n").unwrap_err();
        assert!(matches!(err, DslError::DuplicateRuleId { ref id, line: 2 } if id == "a"));
    }

    #[test]
    fn syntax_error_reports_location_and_expectations() {
        let err = parse("rule a: when contact stop\n").unwrap_err();
        match err {
            DslError::Syntax {
                line, column, expected, ..
            } => {
                assert_eq!((line, column), (1, 22));
                assert!(expected.contains(&"do".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numeric_field_needs_comparison() {
        assert!(matches!(
            parse("rule a: when distance do stop\n"),
            Err(DslError::Syntax { .. })
        ));
        assert!(matches!(
            parse("rule a: when contact < 1 do stop\n"),
            Err(DslError::Syntax { .. })
        ));
    }

    #[test]
    fn empty_program_is_a_syntax_error() {
        assert!(matches!(parse("# nothing\n\n"), Err(DslError::Syntax { .. })));
    }

    #[test]
    fn comments_blank_lines_and_precedence() {
        let rs = parse(
            "# header\n\nrule a: when contact or voted_trip and not (speed >= 0.25) do set_thrust(-2, 0.5) # tail\n\nrule b: when always do stop\n",
        )
        .unwrap();
        assert!(matches!(rs.rules[0].condition, ConditionExpr::Or(..)));
        assert_eq!(rs.rules[0].action, Action::set_thrust(-1.0, 0.5));
    }

    #[test]
    fn malformed_numbers() {
        for bad in ["1.", "-", ".", "1.2.3", "--1"] {
            let text = format!("rule a: when distance < {bad} do stop\n");
            assert!(parse(&text).is_err(), "{bad} accepted");
        }
        let rs = parse("rule a: when distance < .5 do stop\nrule b: when always do stop\n").unwrap();
        assert_eq!(
            rs.rules[0].condition,
            ConditionExpr::Cmp {
                field: Field::Distance,
                op: CmpOp::Lt,
                value: 0.5
            }
        );
    }

    #[test]
    fn keyword_cannot_be_rule_id() {
        assert!(parse("rule always: when always do stop\n").is_err());
    }

    #[test]
    fn canonical_text_reparses_identically() {
        let src = "rule a: when (contact or voted_trip) and distance <= 2 do reverse\nrule b: when not not contact or (speed > 1 or sonar_trip) do turn_away\nrule c: when always do hold_course\n";
        let rs = parse(src).unwrap();
        let again = parse(&rs.canonical_text()).unwrap();
        assert_eq!(rs, again);
    }
}
