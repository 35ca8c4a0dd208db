//! Knowledge-base documents and query strings.
//!
//! ```text
//! tree
//! # comment
//! constraint (N | M) [0.35]
//! constraint (M | N) [17/20, 1]
//! ```

use std::fmt::Write as _;

use cctree::model::{BasicEvent, ConditionalConstraint, ConjunctiveEvent, KnowledgeBase};
use cctree::rational::{format_rational, parse_rational, Probability};
use cctree::tree::{validate_tree, ConstraintTree, Query};
use cctree::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Tree,
    Kb,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declaration {
    pub constraint: ConditionalConstraint,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KbDocument {
    pub mode: Mode,
    pub declarations: Vec<Declaration>,
}

impl KbDocument {
    pub fn knowledge_base(&self) -> Result<KnowledgeBase> {
        KnowledgeBase::from_constraints(self.declarations.iter().map(|d| d.constraint.clone()).collect())
    }

    /// The validated tree; kb-mode documents are refused.
    pub fn tree(&self) -> Result<ConstraintTree> {
        if self.mode != Mode::Tree {
            return Err(Error::Precondition(
                "document is in kb mode; tree engines need a `tree` document".into(),
            ));
        }
        validate_tree(&self.knowledge_base()?)
    }

    pub fn render(&self) -> String {
        let mut out = String::from(match self.mode {
            Mode::Tree => "tree\n",
            Mode::Kb => "kb\n",
        });
        for d in &self.declarations {
            let _ = writeln!(out, "{}", render_constraint(&d.constraint));
        }
        out
    }
}

pub fn render_constraint(c: &ConditionalConstraint) -> String {
    let bounds = if c.is_point() {
        format_rational(c.lower.value())
    } else {
        format!(
            "{}, {}",
            format_rational(c.lower.value()),
            format_rational(c.upper.value())
        )
    };
    format!("constraint ({} | {}) [{bounds}]", c.conclusion, c.premise)
}

/// Character cursor over one line, tracking 1-based columns.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Cursor { text, pos: 0, line }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_space();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    /// Text up to (not including) the first of `stops`.
    fn until(&mut self, stops: &[char]) -> Result<&'a str> {
        self.skip_space();
        let rest = &self.text[self.pos..];
        let end = rest
            .find(stops)
            .ok_or_else(|| self.error(format!("expected one of {stops:?}")))?;
        self.pos += end;
        Ok(rest[..end].trim())
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

fn parse_event(cur: &Cursor<'_>, text: &str, allow_top: bool) -> Result<ConjunctiveEvent> {
    if text == "*" {
        return if allow_top {
            Ok(ConjunctiveEvent::Top)
        } else {
            Err(cur.error("`*` premises are only allowed in kb documents"))
        };
    }
    if text.is_empty() {
        return Err(cur.error("empty event"));
    }
    let atoms = text
        .split_whitespace()
        .map(BasicEvent::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| cur.error(e.to_string()))?;
    ConjunctiveEvent::new(atoms).map_err(|e| cur.error(e.to_string()))
}

/// `(F | E)` with the cursor after the closing parenthesis.
fn parse_pair(cur: &mut Cursor<'_>, allow_top: bool) -> Result<(ConjunctiveEvent, ConjunctiveEvent)> {
    cur.expect('(')?;
    let f = cur.until(&['|'])?;
    let conclusion = parse_event(cur, f, false)?;
    cur.expect('|')?;
    let e = cur.until(&[')'])?;
    let premise = parse_event(cur, e, allow_top)?;
    cur.expect(')')?;
    Ok((conclusion, premise))
}

fn parse_bound(cur: &Cursor<'_>, text: &str) -> Result<Probability> {
    let value = parse_rational(text).map_err(|e| cur.error(e.to_string()))?;
    Probability::new(value).map_err(|e| cur.error(e.to_string()))
}

fn parse_constraint(cur: &mut Cursor<'_>, allow_top: bool) -> Result<ConditionalConstraint> {
    let (conclusion, premise) = parse_pair(cur, allow_top)?;
    cur.expect('[')?;
    let inner = cur.until(&[']'])?;
    let (lower, upper) = match inner.split_once(',') {
        Some((l, u)) => (parse_bound(cur, l.trim())?, parse_bound(cur, u.trim())?),
        None => {
            let p = parse_bound(cur, inner)?;
            (p.clone(), p)
        }
    };
    cur.expect(']')?;
    if !cur.at_end() {
        return Err(cur.error("unexpected text after the constraint"));
    }
    ConditionalConstraint::new(conclusion, premise, lower, upper).map_err(|e| cur.error(e.to_string()))
}

/// Parses a `tree` or `kb` document. Tree documents are also validated as trees.
pub fn parse_kb(text: &str) -> Result<KbDocument> {
    let mut mode = None;
    let mut declarations = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(body, line);
        let Some(m) = mode else {
            mode = Some(match body.trim() {
                "tree" => Mode::Tree,
                "kb" => Mode::Kb,
                _ => return Err(cur.error("expected header `tree` or `kb`")),
            });
            continue;
        };
        let keyword = cur.until(&['('])?;
        if keyword != "constraint" {
            return Err(Cursor::new(body, line).error("expected `constraint (H | G) [l, u]`"));
        }
        let constraint = parse_constraint(&mut cur, m == Mode::Kb)?;
        declarations.push(Declaration { constraint, line });
    }
    let mode = mode.ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "empty document".into(),
    })?;
    let doc = KbDocument { mode, declarations };
    if mode == Mode::Tree {
        doc.tree()?;
    } else {
        doc.knowledge_base()?;
    }
    Ok(doc)
}

/// Parses `(F | E)`, where `E` may be `*`.
pub fn parse_query(text: &str) -> Result<Query> {
    let mut cur = Cursor::new(text, 1);
    let (conclusion, premise) = parse_pair(&mut cur, true)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected text after the query"));
    }
    Query::new(conclusion, premise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cctree::fixtures;
    use cctree::rational::ratio;

    const KB_L: &str = include_str!("../fixtures/kb_l.cct");
    const TWEETY: &str = include_str!("../fixtures/tweety.kb");

    #[test]
    fn kb_l_document() {
        let doc = parse_kb(KB_L).unwrap();
        assert_eq!(doc.declarations.len(), 16);
        let t = doc.tree().unwrap();
        assert_eq!(t.kb(), fixtures::kb_l().kb());
    }

    #[test]
    fn tweety_document() {
        let doc = parse_kb(TWEETY).unwrap();
        assert_eq!(doc.mode, Mode::Kb);
        let kb = doc.knowledge_base().unwrap();
        assert_eq!(kb.events().len(), 2);
        assert!(doc.tree().is_err());
    }

    #[test]
    fn round_trip() {
        for text in [KB_L, TWEETY] {
            let doc = parse_kb(text).unwrap();
            let again = parse_kb(&doc.render()).unwrap();
            assert_eq!(doc.knowledge_base().unwrap(), again.knowledge_base().unwrap());
            assert_eq!(doc.mode, again.mode);
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_kb("tree\nconstraint (N|M) [0.5, 0.4]\n") {
            Err(Error::Parse { line: 2, message, .. }) => assert!(message.contains("[1/2, 2/5]"), "{message}"),
            other => panic!("{other:?}"),
        }
        match parse_kb("kb\nconstraint (N|M) [0.5, 0.6\n") {
            Err(Error::Parse { line: 2, column, .. }) => assert!(column > 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_kb("tree\nconstraint (N|*) [1]\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_kb("graph\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_kb("# nothing\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_kb("tree\nconstraint (N|M) [0.5]\n"),
            Err(Error::MissingReverse(..))
        ));
    }

    #[test]
    fn queries() {
        let q = parse_query("(Q R S T U | M)").unwrap();
        assert_eq!(q, Query::named(&["Q", "R", "S", "T", "U"], &["M"]).unwrap());
        let q = parse_query("(su | bo ho)").unwrap();
        assert_eq!(q, Query::named(&["su"], &["bo", "ho"]).unwrap());
        assert_eq!(parse_query("(ostrich | *)").unwrap().premise, ConjunctiveEvent::Top);
        assert!(matches!(parse_query("(B | B)"), Err(Error::Overlap(_))));
        assert!(parse_query("(B | C) extra").is_err());
        assert!(parse_query("B | C").is_err());
    }

    #[test]
    fn point_form() {
        let doc = parse_kb("kb\nconstraint (b|a) [3/4]\n").unwrap();
        let c = &doc.declarations[0].constraint;
        assert_eq!((c.lower.value(), c.upper.value()), (&ratio(3, 4), &ratio(3, 4)));
        assert_eq!(render_constraint(c), "constraint (b | a) [3/4]");
    }
}
