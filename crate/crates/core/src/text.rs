//! Text formats: the line-oriented model format and the property formula
//! language.
//!
//! Both parsers report every failure as [`Error::Syntax`] carrying a
//! [`SourceSpan`] (1-based line and column of the offending token). Parsing
//! is locale-independent: numbers always use `.` as the decimal separator,
//! with no sign, grouping, or exponent.
//!
//! # Model files
//!
//! ```text
//! # comment                 "#" starts a comment anywhere on a line
//! dtmc                      or "ctmc"
//! states 3
//! init 0
//! label goal 2              zero or more; repeated names merge as a union
//! trans 0 1 0.5             FROM TO WEIGHT; repeating (FROM, TO) is an error
//! trans 0 2 0.5
//! trans 1 1 1.0
//! trans 2 2 1.0
//! ```
//!
//! Sections appear in the order shown; weights are probabilities for `dtmc`
//! rows (each row must sum to 1 within 1e-9) and exit rates for `ctmc` rows
//! (a state with no transitions is absorbing). Lines may end in LF or CRLF.
//!
//! # Formulas
//!
//! ```text
//! state := atom | "true" | "false" | "!" state | state "&" state
//!        | state "|" state | "P>=" real "[" path "]" | "(" state ")"
//! path  := "X" state | state "U<=" bound state
//!        | "F<=" bound state | "G<=" bound state
//! bound := integer | real "t"
//! ```
//!
//! `!` binds tighter than `&`, which binds tighter than `|`; both binary
//! operators are left-associative. `F<=b φ` is sugar for `true U<=b φ`.
//! `G<=b φ` and the comparisons `P>`, `P<`, `P<=` are also accepted and are
//! normalized at parse time: under indifference-region testing strict and
//! non-strict thresholds are indistinguishable, so `P>` parses like `P>=`,
//! `P<`/`P<=` become the negation of the dual `P>=` property, and
//! `P~θ [G<=b φ]` rewrites through `Pr(G φ) = 1 − Pr(F !φ)` to a negated or
//! plain `P>=(1−θ) [true U<=b !φ]`. The reserved words `true`, `false`, `P`,
//! `X`, `U`, `F`, `G` cannot be used as atoms.

use crate::error::{Error, Result};
use crate::formula::{Bound, Formula, PathFormula};
use crate::model::{Model, ModelKind, StateId, ValidatedModel};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// A 1-based (line, column) position in an input text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

fn syntax(line: u32, col: u32, message: impl Into<String>) -> Error {
    Error::Syntax { span: SourceSpan { line, col }, message: message.into() }
}

// --------------------------------------------------------------------------
// Model files
// --------------------------------------------------------------------------

/// Parse and validate a model file. Validation failures are reported with
/// the span of the offending line (for row-level problems, the row's first
/// `trans` line; for a missing row, the `states` line).
pub fn parse_model(src: &str) -> Result<ValidatedModel> {
    #[derive(PartialEq)]
    enum Section {
        Kind,
        States,
        Init,
        Body,
    }

    let mut section = Section::Kind;
    let mut kind = ModelKind::Dtmc;
    let mut n_states = 0usize;
    let mut init = 0usize;
    let mut labels: BTreeMap<String, BTreeSet<StateId>> = BTreeMap::new();
    let mut rows: Vec<Vec<(StateId, f64)>> = Vec::new();
    let mut seen_pairs: HashMap<(StateId, StateId), SourceSpan> = HashMap::new();
    let mut row_span: Vec<Option<SourceSpan>> = Vec::new();
    let mut states_span = SourceSpan { line: 1, col: 1 };
    let mut trans_seen = false;
    let mut last_line = 0u32;

    for (idx, line) in src.lines().enumerate() {
        let line_no = idx as u32 + 1;
        last_line = line_no;
        let toks = tokenize_line(line);
        let toks: Vec<(u32, &str)> = match toks.iter().position(|&(_, t)| t.starts_with('#')) {
            Some(i) => toks[..i].to_vec(),
            None => toks,
        };
        if toks.is_empty() {
            continue;
        }
        let (col0, word) = toks[0];
        let arity = |want: usize| -> Result<()> {
            if toks.len() < 1 + want {
                Err(syntax(line_no, col0, format!("'{word}' expects {want} argument(s)")))
            } else if toks.len() > 1 + want {
                Err(syntax(line_no, toks[1 + want].0, format!("unexpected extra token after '{word}' line")))
            } else {
                Ok(())
            }
        };
        match (word, &section) {
            ("dtmc" | "ctmc", Section::Kind) => {
                arity(0)?;
                kind = if word == "dtmc" { ModelKind::Dtmc } else { ModelKind::Ctmc };
                section = Section::States;
            }
            ("states", Section::States) => {
                arity(1)?;
                n_states = parse_usize(toks[1], line_no, "state count")?;
                if n_states == 0 {
                    return Err(syntax(line_no, toks[1].0, "state count must be positive"));
                }
                states_span = SourceSpan { line: line_no, col: col0 };
                rows = vec![Vec::new(); n_states];
                row_span = vec![None; n_states];
                section = Section::Init;
            }
            ("init", Section::Init) => {
                arity(1)?;
                init = parse_state(toks[1], line_no, n_states)?;
                section = Section::Body;
            }
            ("label", Section::Body) => {
                if trans_seen {
                    return Err(syntax(line_no, col0, "label lines must appear before trans lines"));
                }
                if toks.len() < 3 {
                    return Err(syntax(line_no, col0, "'label' expects a name and at least one state"));
                }
                let name = toks[1].1.to_string();
                let set = labels.entry(name).or_default();
                for &tok in &toks[2..] {
                    set.insert(parse_state(tok, line_no, n_states)?);
                }
            }
            ("trans", Section::Body) => {
                arity(3)?;
                trans_seen = true;
                let from = parse_state(toks[1], line_no, n_states)?;
                let to = parse_state(toks[2], line_no, n_states)?;
                let w = parse_weight(toks[3], line_no)?;
                let span = SourceSpan { line: line_no, col: col0 };
                if let Some(first) = seen_pairs.insert((from, to), span) {
                    return Err(syntax(
                        line_no,
                        col0,
                        format!("duplicate transition {from} -> {to} (first given at {first})"),
                    ));
                }
                if w == 0.0 {
                    return Err(Error::NegativeOrZeroWeight {
                        state: from,
                        target: to,
                        weight: w,
                        span: Some(SourceSpan { line: line_no, col: toks[3].0 }),
                    });
                }
                if row_span[from].is_none() {
                    row_span[from] = Some(span);
                }
                rows[from].push((to, w));
            }
            _ => {
                let expected = match section {
                    Section::Kind => "'dtmc' or 'ctmc'",
                    Section::States => "'states N'",
                    Section::Init => "'init S'",
                    Section::Body => "'label' or 'trans'",
                };
                return Err(syntax(line_no, col0, format!("expected {expected}, found '{word}'")));
            }
        }
    }

    if section != Section::Body {
        return Err(syntax(
            last_line + 1,
            1,
            match section {
                Section::Kind => "unexpected end of file: expected 'dtmc' or 'ctmc'",
                Section::States => "unexpected end of file: expected 'states N'",
                _ => "unexpected end of file: expected 'init S'",
            },
        ));
    }

    let model = Model { kind, n_states, init, rows, labels };
    model.validate().map_err(|e| match e {
        Error::RowSumInvalid { state, sum, .. } => Error::RowSumInvalid {
            state,
            sum,
            span: Some(row_span[state].unwrap_or(states_span)),
        },
        Error::EmptyDtmcRow { state, .. } => {
            Error::EmptyDtmcRow { state, span: Some(states_span) }
        }
        Error::NegativeOrZeroWeight { state, target, weight, .. } => Error::NegativeOrZeroWeight {
            state,
            target,
            weight,
            span: row_span[state],
        },
        other => other,
    })
}

/// Split a line into whitespace-separated tokens with 1-based columns
/// (counted in characters).
pub(crate) fn tokenize_line(line: &str) -> Vec<(u32, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(u32, usize)> = None;
    let mut col = 0u32;
    for (byte, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((c, b)) = start.take() {
                out.push((c, &line[b..byte]));
            }
        } else if start.is_none() {
            start = Some((col, byte));
        }
    }
    if let Some((c, b)) = start {
        out.push((c, &line[b..]));
    }
    out
}

fn parse_usize((col, text): (u32, &str), line: u32, what: &str) -> Result<usize> {
    if !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax(line, col, format!("expected {what} (a nonnegative integer), found '{text}'")));
    }
    text.parse::<usize>()
        .map_err(|_| syntax(line, col, format!("{what} '{text}' is out of range")))
}

fn parse_state(tok: (u32, &str), line: u32, n_states: usize) -> Result<StateId> {
    let s = parse_usize(tok, line, "state id")?;
    if s >= n_states {
        return Err(Error::DanglingTarget {
            reference: s,
            n_states,
            span: Some(SourceSpan { line, col: tok.0 }),
        });
    }
    Ok(s)
}

fn parse_weight((col, text): (u32, &str), line: u32) -> Result<f64> {
    if !is_plain_decimal(text) {
        return Err(syntax(
            line,
            col,
            format!("expected a weight as an unsigned decimal (like 0.25), found '{text}'"),
        ));
    }
    text.parse::<f64>()
        .map_err(|_| syntax(line, col, format!("weight '{text}' is out of range")))
}

/// `digits` or `digits.digits` — nothing else.
fn is_plain_decimal(text: &str) -> bool {
    let mut parts = text.split('.');
    let (int, frac, rest) = (parts.next(), parts.next(), parts.next());
    if rest.is_some() {
        return false;
    }
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match (int, frac) {
        (Some(i), None) => digits(i),
        (Some(i), Some(f)) => digits(i) && digits(f),
        _ => false,
    }
}

// --------------------------------------------------------------------------
// Formula lexer
// --------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Le,
    /// `P` followed by a comparison operator.
    PCmp(Cmp),
    Ident(String),
    Number { value: f64, text: String, time: bool },
    KwTrue,
    KwFalse,
    KwX,
    KwU,
    KwF,
    KwG,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn run(mut self) -> Result<Vec<(SourceSpan, Tok)>> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let span = SourceSpan { line: self.line, col: self.col };
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let tok = match c {
                '!' => {
                    self.bump();
                    Tok::Bang
                }
                '&' => {
                    self.bump();
                    Tok::Amp
                }
                '|' => {
                    self.bump();
                    Tok::Pipe
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '[' => {
                    self.bump();
                    Tok::LBracket
                }
                ']' => {
                    self.bump();
                    Tok::RBracket
                }
                '<' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Le
                    } else {
                        return Err(syntax(span.line, span.col, "expected '<=' (strict step bounds are not supported)"));
                    }
                }
                '0'..='9' => self.lex_number(span)?,
                c if c.is_alphabetic() || c == '_' => self.lex_word(span)?,
                other => {
                    return Err(syntax(span.line, span.col, format!("unexpected character '{other}'")));
                }
            };
            out.push((span, tok));
        }
        Ok(out)
    }

    fn lex_number(&mut self, span: SourceSpan) -> Result<Tok> {
        let mut text = String::new();
        while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
            text.push(self.bump().unwrap());
        }
        if self.chars.peek() == Some(&'.') {
            text.push(self.bump().unwrap());
            if !matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                return Err(syntax(span.line, span.col, "malformed number: expected digits after '.'"));
            }
            while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                text.push(self.bump().unwrap());
            }
        }
        let time = if self.chars.peek() == Some(&'t') {
            self.bump();
            true
        } else {
            false
        };
        if matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_' || *c == '.') {
            return Err(syntax(span.line, span.col, format!("malformed number starting at '{text}'")));
        }
        let value: f64 = text
            .parse()
            .map_err(|_| syntax(span.line, span.col, format!("number '{text}' is out of range")))?;
        Ok(Tok::Number { value, text, time })
    }

    fn lex_word(&mut self, span: SourceSpan) -> Result<Tok> {
        let mut word = String::new();
        while matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_') {
            word.push(self.bump().unwrap());
        }
        Ok(match word.as_str() {
            "true" => Tok::KwTrue,
            "false" => Tok::KwFalse,
            "X" => Tok::KwX,
            "U" => Tok::KwU,
            "F" => Tok::KwF,
            "G" => Tok::KwG,
            "P" => {
                let second = {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    ahead.next()
                };
                let cmp = match (self.chars.peek(), second) {
                    (Some('>'), Some('=')) => {
                        self.bump();
                        self.bump();
                        Cmp::Ge
                    }
                    (Some('>'), _) => {
                        self.bump();
                        Cmp::Gt
                    }
                    (Some('<'), Some('=')) => {
                        self.bump();
                        self.bump();
                        Cmp::Le
                    }
                    (Some('<'), _) => {
                        self.bump();
                        Cmp::Lt
                    }
                    _ => {
                        return Err(syntax(
                            span.line,
                            span.col,
                            "'P' must be followed by a comparison (>=, >, <=, <)",
                        ));
                    }
                };
                Tok::PCmp(cmp)
            }
            _ => Tok::Ident(word),
        })
    }
}

// --------------------------------------------------------------------------
// Formula parser
// --------------------------------------------------------------------------

struct Parser {
    toks: Vec<(SourceSpan, Tok)>,
    pos: usize,
    end: SourceSpan,
}

/// Path formula as written, before `G` is rewritten away.
enum RawPath {
    Plain(PathFormula),
    AllAlong { f: Formula, bound: Bound },
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map(|(s, _)| *s).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            let s = self.span();
            Err(syntax(s.line, s.col, format!("expected {what}")))
        }
    }

    fn parse_or(&mut self) -> Result<Formula> {
        let mut f = self.parse_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.parse_and()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn parse_and(&mut self) -> Result<Formula> {
        let mut f = self.parse_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.parse_unary()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn parse_unary(&mut self) -> Result<Formula> {
        if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            return Ok(Formula::not(self.parse_unary()?));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Formula> {
        let span = self.span();
        match self.bump() {
            Some(Tok::KwTrue) => Ok(Formula::True),
            Some(Tok::KwFalse) => Ok(Formula::False),
            Some(Tok::Ident(a)) => Ok(Formula::Atom(a)),
            Some(Tok::LParen) => {
                let f = self.parse_or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::PCmp(cmp)) => self.parse_prob(cmp),
            Some(other) => Err(syntax(
                span.line,
                span.col,
                format!("expected a state formula, found {}", describe(&other)),
            )),
            None => Err(syntax(span.line, span.col, "expected a state formula, found end of input")),
        }
    }

    fn parse_prob(&mut self, cmp: Cmp) -> Result<Formula> {
        let span = self.span();
        let theta = match self.bump() {
            Some(Tok::Number { value, time: false, .. }) => value,
            _ => {
                return Err(syntax(span.line, span.col, "expected a probability threshold after the comparison"));
            }
        };
        if !(0.0..=1.0).contains(&theta) {
            return Err(syntax(span.line, span.col, format!("threshold {theta} is outside [0, 1]")));
        }
        self.expect(Tok::LBracket, "'[' before the path formula")?;
        let raw = self.parse_path()?;
        self.expect(Tok::RBracket, "']' after the path formula")?;

        // Normalize to the primary form: only P>= survives parsing. With an
        // indifference region a strict comparison is indistinguishable from
        // the non-strict one, and Pr(G<=b f) = 1 - Pr(true U<=b !f) lets the
        // "globally" form ride on until with a flipped comparison.
        let (theta, cmp, path) = match raw {
            RawPath::Plain(p) => (theta, cmp, p),
            RawPath::AllAlong { f, bound } => {
                let flipped = match cmp {
                    Cmp::Ge => Cmp::Le,
                    Cmp::Gt => Cmp::Lt,
                    Cmp::Le => Cmp::Ge,
                    Cmp::Lt => Cmp::Gt,
                };
                (
                    1.0 - theta,
                    flipped,
                    PathFormula::Until { lhs: Formula::True, rhs: Formula::not(f), bound },
                )
            }
        };
        let prob = Formula::prob(theta, path);
        Ok(match cmp {
            Cmp::Ge | Cmp::Gt => prob,
            Cmp::Le | Cmp::Lt => Formula::not(prob),
        })
    }

    fn parse_path(&mut self) -> Result<RawPath> {
        match self.peek() {
            Some(Tok::KwX) => {
                self.pos += 1;
                Ok(RawPath::Plain(PathFormula::Next(self.parse_or()?)))
            }
            Some(Tok::KwF) => {
                self.pos += 1;
                let bound = self.parse_bound()?;
                let f = self.parse_or()?;
                Ok(RawPath::Plain(PathFormula::Until { lhs: Formula::True, rhs: f, bound }))
            }
            Some(Tok::KwG) => {
                self.pos += 1;
                let bound = self.parse_bound()?;
                let f = self.parse_or()?;
                Ok(RawPath::AllAlong { f, bound })
            }
            _ => {
                let lhs = self.parse_or()?;
                let s = self.span();
                match self.bump() {
                    Some(Tok::KwU) => {}
                    _ => return Err(syntax(s.line, s.col, "expected 'U<=' in the path formula")),
                }
                let bound = self.parse_bound()?;
                let rhs = self.parse_or()?;
                Ok(RawPath::Plain(PathFormula::Until { lhs, rhs, bound }))
            }
        }
    }

    fn parse_bound(&mut self) -> Result<Bound> {
        self.expect(Tok::Le, "'<=' before the bound")?;
        let span = self.span();
        match self.bump() {
            Some(Tok::Number { value, text, time: true }) => {
                let _ = text;
                Ok(Bound::Time(value))
            }
            Some(Tok::Number { text, time: false, .. }) => {
                if text.contains('.') {
                    return Err(syntax(
                        span.line,
                        span.col,
                        "step bound must be an integer (append 't' for a time bound)",
                    ));
                }
                let k: u64 = text
                    .parse()
                    .map_err(|_| syntax(span.line, span.col, format!("step bound '{text}' is out of range")))?;
                Ok(Bound::Steps(k))
            }
            _ => Err(syntax(span.line, span.col, "expected a bound (integer steps, or a real followed by 't')")),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Bang => "'!'".into(),
        Tok::Amp => "'&'".into(),
        Tok::Pipe => "'|'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBracket => "'['".into(),
        Tok::RBracket => "']'".into(),
        Tok::Le => "'<='".into(),
        Tok::PCmp(_) => "a probability operator".into(),
        Tok::Ident(a) => format!("atom '{a}'"),
        Tok::Number { text, .. } => format!("number '{text}'"),
        Tok::KwTrue => "'true'".into(),
        Tok::KwFalse => "'false'".into(),
        Tok::KwX => "'X'".into(),
        Tok::KwU => "'U'".into(),
        Tok::KwF => "'F'".into(),
        Tok::KwG => "'G'".into(),
    }
}

/// Parse a state formula; see the module docs for the grammar.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let toks = Lexer::new(src).run()?;
    let end = toks
        .last()
        .map(|(s, t)| SourceSpan { line: s.line, col: s.col + token_width(t) })
        .unwrap_or(SourceSpan { line: 1, col: 1 });
    let mut p = Parser { toks, pos: 0, end };
    let mut f = p.parse_or()?;
    if p.pos < p.toks.len() {
        let s = p.span();
        return Err(syntax(s.line, s.col, "unexpected trailing input after the formula"));
    }
    f.normalize_ids();
    Ok(f)
}

fn token_width(t: &Tok) -> u32 {
    match t {
        Tok::Ident(a) => a.chars().count() as u32,
        Tok::Number { text, time, .. } => text.chars().count() as u32 + *time as u32,
        Tok::KwTrue | Tok::KwFalse => 4,
        Tok::Le => 2,
        Tok::PCmp(Cmp::Ge) | Tok::PCmp(Cmp::Le) => 3,
        Tok::PCmp(_) => 2,
        _ => 1,
    }
}

/// Render a formula in the canonical concrete syntax; `parse_formula`
/// round-trips it to an equal AST.
pub fn render_formula(f: &Formula) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Bound, Formula, PathFormula};

    #[test]
    fn parses_minimal_dtmc() {
        let v = parse_model("dtmc\nstates 2\ninit 0\nlabel goal 1\ntrans 0 1 1.0\ntrans 1 1 1.0\n").unwrap();
        assert_eq!(v.kind(), ModelKind::Dtmc);
        assert_eq!(v.n_states(), 2);
        assert!(v.atom_holds("goal", 1));
    }

    #[test]
    fn row_sum_error_points_at_the_offending_row() {
        let err = parse_model("dtmc\nstates 2\ninit 0\ntrans 0 1 0.5\ntrans 1 1 1.0\n").unwrap_err();
        match err {
            Error::RowSumInvalid { state: 0, span: Some(s), .. } => {
                assert_eq!((s.line, s.col), (4, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn one_state_ctmc_with_no_transitions_is_valid() {
        let v = parse_model("ctmc\nstates 1\ninit 0\n").unwrap();
        assert!(v.is_absorbing(0));
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let src = "# header\r\ndtmc\r\n\r\nstates 2 # two states\r\ninit 0\r\ntrans 0 1 1.0\r\ntrans 1 1 1.0\r\n";
        assert!(parse_model(src).is_ok());
    }

    #[test]
    fn duplicate_transition_is_rejected() {
        let err =
            parse_model("dtmc\nstates 2\ninit 0\ntrans 0 1 0.5\ntrans 0 1 0.5\ntrans 1 1 1.0\n").unwrap_err();
        match err {
            Error::Syntax { span, message } => {
                assert_eq!(span.line, 5);
                assert!(message.contains("duplicate transition"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn label_after_trans_and_unknown_directive_are_syntax_errors() {
        let err = parse_model("dtmc\nstates 2\ninit 0\ntrans 0 1 1.0\nlabel g 1\ntrans 1 1 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { span, .. } if span.line == 5));

        let err = parse_model("dtmc\nstates 1\ninit 0\nedge 0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { span, .. } if span.line == 4));
    }

    #[test]
    fn zero_weight_and_dangling_target_carry_spans() {
        let err = parse_model("dtmc\nstates 2\ninit 0\ntrans 0 1 0\ntrans 1 1 1.0\n").unwrap_err();
        match err {
            Error::NegativeOrZeroWeight { span: Some(s), .. } => assert_eq!((s.line, s.col), (4, 11)),
            other => panic!("unexpected error {other:?}"),
        }

        let err = parse_model("dtmc\nstates 2\ninit 0\ntrans 0 7 1.0\ntrans 1 1 1.0\n").unwrap_err();
        match err {
            Error::DanglingTarget { reference: 7, span: Some(s), .. } => {
                assert_eq!((s.line, s.col), (4, 9))
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncated_file_reports_eof() {
        let err = parse_model("dtmc\nstates 2\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { span, .. } if span.line == 3 && span.col == 1));
    }

    #[test]
    fn repeated_label_names_merge() {
        let v = parse_model(
            "dtmc\nstates 3\ninit 0\nlabel g 1\nlabel g 2\ntrans 0 1 1.0\ntrans 1 1 1.0\ntrans 2 2 1.0\n",
        )
        .unwrap();
        assert!(v.atom_holds("g", 1) && v.atom_holds("g", 2));
    }

    #[test]
    fn parses_eventually_sugar() {
        let f = parse_formula("P>=0.9 [ F<=10 goal ]").unwrap();
        let mut want = Formula::eventually(0.9, Bound::Steps(10), Formula::atom("goal"));
        want.normalize_ids();
        assert_eq!(f, want);
    }

    #[test]
    fn parses_boolean_precedence() {
        let f = parse_formula("!(a | b) & c").unwrap();
        let want = Formula::and(
            Formula::not(Formula::or(Formula::atom("a"), Formula::atom("b"))),
            Formula::atom("c"),
        );
        assert_eq!(f, want);

        // '&' binds tighter than '|', both left-associative.
        let g = parse_formula("a | b & c | d").unwrap();
        let want = Formula::or(
            Formula::or(Formula::atom("a"), Formula::and(Formula::atom("b"), Formula::atom("c"))),
            Formula::atom("d"),
        );
        assert_eq!(g, want);
    }

    #[test]
    fn parses_time_bound() {
        let f = parse_formula("P>=0.5 [ a U<=4.5t b ]").unwrap();
        let mut want = Formula::prob(
            0.5,
            PathFormula::Until { lhs: Formula::atom("a"), rhs: Formula::atom("b"), bound: Bound::Time(4.5) },
        );
        want.normalize_ids();
        assert_eq!(f, want);
    }

    #[test]
    fn comparisons_normalize_by_duality() {
        let f = parse_formula("P<0.3 [ X a ]").unwrap();
        let mut want = Formula::not(Formula::prob(0.3, PathFormula::Next(Formula::atom("a"))));
        want.normalize_ids();
        assert_eq!(f, want);

        let g = parse_formula("P>0.3 [ X a ]").unwrap();
        let mut want = Formula::prob(0.3, PathFormula::Next(Formula::atom("a")));
        want.normalize_ids();
        assert_eq!(g, want);
    }

    #[test]
    fn globally_rewrites_through_duality() {
        let f = parse_formula("P>=0.8 [ G<=5 safe ]").unwrap();
        let mut want = Formula::not(Formula::prob(
            1.0 - 0.8,
            PathFormula::Until {
                lhs: Formula::True,
                rhs: Formula::not(Formula::atom("safe")),
                bound: Bound::Steps(5),
            },
        ));
        want.normalize_ids();
        assert_eq!(f, want);
    }

    #[test]
    fn every_parse_error_carries_a_span() {
        for (src, line, col) in [
            ("P>=0.9 F<=10 goal ]", 1, 8),
            ("P>=1.5 [ X a ]", 1, 4),
            ("a &", 1, 4),
            ("a U<=3 b", 1, 3),
            ("P>=0.5 [ a U<=3.5 b ]", 1, 15),
            ("(a | b", 1, 7),
            ("0,5", 1, 2),
        ] {
            match parse_formula(src) {
                Err(Error::Syntax { span, .. }) => {
                    assert_eq!((span.line, span.col), (line, col), "source: {src}")
                }
                other => panic!("expected a syntax error for {src:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn reserved_words_cannot_be_atoms() {
        assert!(parse_formula("true & X").is_err());
        assert!(parse_formula("P").is_err());
    }

    #[test]
    fn render_parse_round_trip_on_a_corpus() {
        let corpus = [
            "a",
            "true",
            "!a & b | c",
            "P>=0.9 [ true U<=10 goal ]",
            "P>=0.25 [ a & b U<=3 c ]",
            "P>=0.5 [ X !(a | b) ]",
            "P>=0.5 [ a U<=4.5t b ] & P>=0.125 [ X c ]",
            "!(P>=0.75 [ X P>=0.5 [ true U<=2 a ] ])",
        ];
        for src in corpus {
            let f = parse_formula(src).unwrap();
            let rendered = render_formula(&f);
            let g = parse_formula(&rendered).unwrap();
            assert_eq!(f, g, "round trip through {rendered:?}");
        }
    }

    #[test]
    fn sugar_renders_in_primary_form_and_reparses() {
        let f = parse_formula("P>=0.9 [ F<=10 goal ]").unwrap();
        assert_eq!(render_formula(&f), "P>=0.9 [ true U<=10 goal ]");
        assert_eq!(parse_formula(&render_formula(&f)).unwrap(), f);
    }
}
