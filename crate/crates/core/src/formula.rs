//! Modal propositional formulas: syntax tree, parser, printer and
//! structural queries.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Prefix reserved for placeholder atoms introduced by [`modal_decompose`].
/// User atoms can never start with it because the grammar requires a
/// lowercase letter first.
pub const PLACEHOLDER_PREFIX: &str = "_b";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn top() -> Formula {
        Formula::imp(Formula::Bottom, Formula::Bottom)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bottom)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn boxed(a: Formula) -> Formula {
        Formula::Box(Box::new(a))
    }

    /// `a <-> b` as the conjunction of both implications.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    /// Conjunction of `parts`, `true` when empty.
    pub fn conj<I: IntoIterator<Item = Formula>>(parts: I) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::top)
    }

    /// Disjunction of `parts`, `false` when empty.
    pub fn disj<I: IntoIterator<Item = Formula>>(parts: I) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Bottom)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Bottom => 1,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => 1 + a.size() + b.size(),
            Formula::Box(a) => 1 + a.size(),
        }
    }

    pub fn is_box_free(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Bottom => true,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_box_free() && b.is_box_free()
            }
            Formula::Box(_) => false,
        }
    }

    /// True if the formula has no `->` node, including under boxes.
    pub fn is_implication_free(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Bottom => true,
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.is_implication_free() && b.is_implication_free()
            }
            Formula::Imp(..) => false,
            Formula::Box(a) => a.is_implication_free(),
        }
    }

    /// Atom names occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Box(a) => a.collect_atoms(out),
        }
    }

    /// Replace atoms by formulas; atoms without an entry are kept.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Formula>) -> Formula {
        match self {
            Formula::Atom(p) => map(p).unwrap_or_else(|| self.clone()),
            Formula::Bottom => Formula::Bottom,
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Imp(a, b) => Formula::imp(a.substitute(map), b.substitute(map)),
            Formula::Box(a) => Formula::boxed(a.substitute(map)),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

// Binding strength used by the printer: higher binds tighter.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Imp(a, b) if **b == Formula::Bottom && **a != Formula::Bottom => 4,
        Formula::Imp(a, b) if **a == Formula::Bottom && **b == Formula::Bottom => 5,
        Formula::Imp(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Box(_) => 4,
        Formula::Atom(_) | Formula::Bottom => 5,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(f) < min {
        write!(out, "(")?;
        write_formula(f, out)?;
        write!(out, ")")
    } else {
        write_formula(f, out)
    }
}

fn write_formula(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::Atom(p) => write!(out, "{p}"),
        Formula::Bottom => write!(out, "false"),
        Formula::Imp(a, b) if **a == Formula::Bottom && **b == Formula::Bottom => {
            write!(out, "true")
        }
        Formula::Imp(a, b) if **b == Formula::Bottom => {
            write!(out, "~")?;
            write_at(a, 4, out)
        }
        Formula::Imp(a, b) => {
            write_at(a, 2, out)?;
            write!(out, " -> ")?;
            write_at(b, 1, out)
        }
        Formula::Or(a, b) => {
            write_at(a, 2, out)?;
            write!(out, " | ")?;
            write_at(b, 3, out)
        }
        Formula::And(a, b) => {
            write_at(a, 3, out)?;
            write!(out, " & ")?;
            write_at(b, 4, out)
        }
        Formula::Box(a) => {
            write!(out, "[]")?;
            write_at(a, 4, out)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {pos}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    False,
    True,
    Not,
    Box,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => Token::Not,
            b'&' => Token::And,
            b'|' => Token::Or,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'[' if bytes.get(i + 1) == Some(&b']') => {
                i += 1;
                Token::Box
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Token::Arrow
            }
            b'a'..=b'z' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                match &text[start..=i] {
                    "false" => Token::False,
                    "true" => Token::True,
                    name => Token::Ident(name.to_string()),
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    pos: i,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        tokens.push((start, tok));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError {
            pos: self.offset(),
            message: message.to_string(),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let left = self.or_expr()?;
        if self.peek() == Some(&Token::Arrow) {
            self.pos += 1;
            let right = self.formula()?;
            return Ok(Formula::imp(left, right));
        }
        Ok(left)
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and_expr()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            left = Formula::or(left, self.and_expr()?);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Box) => {
                self.pos += 1;
                Ok(Formula::boxed(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let tok = self.peek().cloned();
        match tok {
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            Some(Token::False) => {
                self.pos += 1;
                Ok(Formula::Bottom)
            }
            Some(Token::True) => {
                self.pos += 1;
                Ok(Formula::top())
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected a formula")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parses the surface syntax, expanding `~A` to `A -> false` and `true` to
/// `false -> false`.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let f = parser.formula()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// The smallest set containing `f` and closed under immediate subformulas.
pub fn subsentences(f: &Formula) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !out.insert(g.clone()) {
            continue;
        }
        match g {
            Formula::Atom(_) | Formula::Bottom => {}
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Formula::Box(a) => stack.push(a),
        }
    }
    out
}

/// Subformulas listed so that every formula comes after its immediate
/// subformulas (ordered by size, then structurally).
pub fn subsentences_ordered(f: &Formula) -> Vec<Formula> {
    let mut subs: Vec<Formula> = subsentences(f).into_iter().collect();
    subs.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    subs
}

pub fn boxdepth(f: &Formula) -> usize {
    match f {
        Formula::Atom(_) | Formula::Bottom => 0,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => boxdepth(a).max(boxdepth(b)),
        Formula::Box(a) => 1 + boxdepth(a),
    }
}

/// A formula written as a box-free skeleton over its atoms and fresh
/// placeholders, with each placeholder standing for a boxed formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub skeleton: Formula,
    /// `boxed_parts[i]` is the `B` with placeholder `placeholders[i]` standing for `[]B`.
    pub boxed_parts: Vec<Formula>,
    pub placeholders: Vec<String>,
}

impl Decomposition {
    /// Substitutes `[]B_i` back for each placeholder.
    pub fn recompose(&self) -> Formula {
        self.recompose_with(&self.boxed_parts)
    }

    /// Substitutes `[]parts[i]` for placeholder `i`.
    pub fn recompose_with(&self, parts: &[Formula]) -> Formula {
        assert_eq!(parts.len(), self.placeholders.len());
        self.skeleton.substitute(&|name| {
            self.placeholders
                .iter()
                .position(|q| q == name)
                .map(|i| Formula::boxed(parts[i].clone()))
        })
    }
}

pub fn placeholder_name(index: usize) -> String {
    format!("{PLACEHOLDER_PREFIX}{}", index + 1)
}

/// Splits `f` into its propositional skeleton and its maximal boxed parts.
/// Parts are numbered by first occurrence in a left-to-right preorder walk;
/// syntactically identical parts share one placeholder.
pub fn modal_decompose(f: &Formula) -> Decomposition {
    fn walk(f: &Formula, parts: &mut Vec<Formula>) -> Formula {
        match f {
            Formula::Atom(_) | Formula::Bottom => f.clone(),
            Formula::And(a, b) => {
                let a = walk(a, parts);
                Formula::and(a, walk(b, parts))
            }
            Formula::Or(a, b) => {
                let a = walk(a, parts);
                Formula::or(a, walk(b, parts))
            }
            Formula::Imp(a, b) => {
                let a = walk(a, parts);
                Formula::imp(a, walk(b, parts))
            }
            Formula::Box(inner) => {
                let idx = match parts.iter().position(|p| p == &**inner) {
                    Some(i) => i,
                    None => {
                        parts.push((**inner).clone());
                        parts.len() - 1
                    }
                };
                Formula::Atom(placeholder_name(idx))
            }
        }
    }
    let mut parts = Vec::new();
    let skeleton = walk(f, &mut parts);
    let placeholders = (0..parts.len()).map(placeholder_name).collect();
    Decomposition {
        skeleton,
        boxed_parts: parts,
        placeholders,
    }
}
