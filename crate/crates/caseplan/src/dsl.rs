//! The textual language for domains (`.pdom`), abstraction theories
//! (`.pabs`), problems (`.pprob`), cases (`.pcase`), and case-base indexes
//! (`casebase.idx`), with semantic validation of the domain well-formedness
//! rules.
//!
//! Syntax sketch (comments run from `#` to end of line):
//!
//! ```text
//! domain counting
//! essentials
//!   value/1
//! rules
//!   reachable(X) :- value(X).
//! operator inc(X, Y)
//!   pre: value(X), sum(X, 1, Y)
//!   add: value(Y)
//!   del: value(X)
//! ```
//!
//! Atoms are Prolog-like; variables start with an uppercase letter or `_`;
//! integers are the only numeric literals. The `format_*` functions emit a
//! canonical form for which `parse(format(m))` structurally equals `m`.

use std::fmt;

use crate::domain::{Domain, InstantiatedOperator, OperatorSchema, PlanningCase, Problem, State};
use crate::logic::{Atom, HornClause, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub col: usize,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {} [{}]: {}",
            self.line, self.col, sev, self.code, self.message
        )
    }
}

/// The kind of a DSL source file, inferred from the extension or the
/// leading keyword.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Domain,
    Theory,
    Problem,
    Case,
    CasebaseIndex,
}

pub fn detect_kind(path: &str, text: &str) -> Option<SourceKind> {
    if path.ends_with(".pdom") {
        return Some(SourceKind::Domain);
    }
    if path.ends_with(".pabs") {
        return Some(SourceKind::Theory);
    }
    if path.ends_with(".pprob") {
        return Some(SourceKind::Problem);
    }
    if path.ends_with(".pcase") {
        return Some(SourceKind::Case);
    }
    if path.ends_with("casebase.idx") {
        return Some(SourceKind::CasebaseIndex);
    }
    let first = text
        .lines()
        .map(|l| l.trim())
        .find(|l| !l.is_empty() && !l.starts_with('#'))?;
    let kw = first.split_whitespace().next()?;
    match kw {
        "domain" => Some(SourceKind::Domain),
        "theory" => Some(SourceKind::Theory),
        "problem" => Some(SourceKind::Problem),
        "case" => Some(SourceKind::Case),
        "casebase" => Some(SourceKind::CasebaseIndex),
        _ => None,
    }
}

const KEYWORDS: &[&str] = &[
    "domain",
    "theory",
    "problem",
    "case",
    "casebase",
    "essentials",
    "rules",
    "operator",
    "init",
    "goal",
    "plan",
    "alpha",
    "beta",
    "source",
    "pre",
    "add",
    "del",
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Kw(&'static str),
    Ident(String),
    UIdent(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    Slash,
    Colon,
    Implies, // :-
}

#[derive(Clone, Debug)]
struct SpannedTok {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer;

impl Lexer {
    fn lex(text: &str) -> Result<Vec<SpannedTok>, Diagnostic> {
        let mut out = Vec::new();
        let mut line = 1usize;
        let mut col = 1usize;
        let mut chars = text.chars().peekable();
        while let Some(&ch) = chars.peek() {
            let (tline, tcol) = (line, col);
            let bump = |c: char, line: &mut usize, col: &mut usize| {
                if c == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            };
            match ch {
                '#' => {
                    while let Some(&c) = chars.peek() {
                        chars.next();
                        bump(c, &mut line, &mut col);
                        if c == '\n' {
                            break;
                        }
                    }
                }
                c if c.is_whitespace() => {
                    chars.next();
                    bump(c, &mut line, &mut col);
                }
                '(' | ')' | ',' | '.' | '/' => {
                    chars.next();
                    bump(ch, &mut line, &mut col);
                    let tok = match ch {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '.' => Tok::Dot,
                        _ => Tok::Slash,
                    };
                    out.push(SpannedTok {
                        tok,
                        line: tline,
                        col: tcol,
                    });
                }
                ':' => {
                    chars.next();
                    bump(':', &mut line, &mut col);
                    if chars.peek() == Some(&'-') {
                        chars.next();
                        bump('-', &mut line, &mut col);
                        out.push(SpannedTok {
                            tok: Tok::Implies,
                            line: tline,
                            col: tcol,
                        });
                    } else {
                        out.push(SpannedTok {
                            tok: Tok::Colon,
                            line: tline,
                            col: tcol,
                        });
                    }
                }
                '-' => {
                    chars.next();
                    bump('-', &mut line, &mut col);
                    let mut digits = String::new();
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            digits.push(c);
                            chars.next();
                            bump(c, &mut line, &mut col);
                        } else {
                            break;
                        }
                    }
                    if digits.is_empty() {
                        return Err(Diagnostic {
                            severity: Severity::Error,
                            line: tline,
                            col: tcol,
                            code: "E-SYNTAX",
                            message: "expected digits after '-'".into(),
                        });
                    }
                    let value: i64 = digits.parse().map_err(|_| Diagnostic {
                        severity: Severity::Error,
                        line: tline,
                        col: tcol,
                        code: "E-SYNTAX",
                        message: "integer literal out of range".into(),
                    })?;
                    out.push(SpannedTok {
                        tok: Tok::Int(-value),
                        line: tline,
                        col: tcol,
                    });
                }
                c if c.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            digits.push(d);
                            chars.next();
                            bump(d, &mut line, &mut col);
                        } else {
                            break;
                        }
                    }
                    let value: i64 = digits.parse().map_err(|_| Diagnostic {
                        severity: Severity::Error,
                        line: tline,
                        col: tcol,
                        code: "E-SYNTAX",
                        message: "integer literal out of range".into(),
                    })?;
                    out.push(SpannedTok {
                        tok: Tok::Int(value),
                        line: tline,
                        col: tcol,
                    });
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut word = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_alphanumeric() || d == '_' {
                            word.push(d);
                            chars.next();
                            bump(d, &mut line, &mut col);
                        } else {
                            break;
                        }
                    }
                    let tok = if let Some(kw) = KEYWORDS.iter().find(|k| **k == word) {
                        Tok::Kw(kw)
                    } else if word.starts_with(|c: char| c.is_uppercase() || c == '_') {
                        Tok::UIdent(word)
                    } else {
                        Tok::Ident(word)
                    };
                    out.push(SpannedTok {
                        tok,
                        line: tline,
                        col: tcol,
                    });
                }
                _ => {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        line: tline,
                        col: tcol,
                        code: "E-SYNTAX",
                        message: format!("unexpected character {:?}", ch),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// An atom together with its (line, column) source position.
type SpannedAtom = (Atom, (usize, usize));

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, Vec<Diagnostic>> {
        match Lexer::lex(text) {
            Ok(toks) => Ok(Parser { toks, pos: 0 }),
            Err(d) => Err(vec![d]),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn error(&mut self, code: &'static str, message: String) -> Diagnostic {
        let (line, col) = self.here();
        Diagnostic {
            severity: Severity::Error,
            line,
            col,
            code,
            message,
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_kw(&mut self, kw: &'static str) -> Result<(), Diagnostic> {
        match self.next() {
            Some(Tok::Kw(k)) if k == kw => Ok(()),
            other => Err(self.error(
                "E-SYNTAX",
                format!("expected keyword '{}', found {:?}", kw, other),
            )),
        }
    }

    fn expect_ident(&mut self) -> Result<String, Diagnostic> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.error(
                "E-SYNTAX",
                format!("expected identifier, found {:?}", other),
            )),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(self.error("E-SYNTAX", format!("expected {:?}, found {:?}", tok, other))),
        }
    }

    fn parse_term(&mut self) -> Result<Term, Diagnostic> {
        match self.next() {
            Some(Tok::UIdent(v)) => Ok(Term::var(&v)),
            Some(Tok::Int(i)) => Ok(Term::Int(i)),
            Some(Tok::Ident(name)) => {
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.parse_term()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.parse_term()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Term::comp(&name, args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            other => Err(self.error("E-SYNTAX", format!("expected term, found {:?}", other))),
        }
    }

    fn parse_atom(&mut self) -> Result<Atom, Diagnostic> {
        let name = self.expect_ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            args.push(self.parse_term()?);
            while self.eat(&Tok::Comma) {
                args.push(self.parse_term()?);
            }
            self.expect(Tok::RParen)?;
        }
        Ok(Atom::new(&name, args))
    }

    /// Atoms separated by commas; ends when the next token cannot start an
    /// atom (a keyword, EOF, or punctuation).
    fn parse_atom_list(&mut self) -> Result<Vec<Atom>, Diagnostic> {
        Ok(self
            .parse_atom_list_spanned()?
            .into_iter()
            .map(|(a, _)| a)
            .collect())
    }

    /// Like parse_atom_list, but keeps the source position of each atom for
    /// positioned semantic diagnostics.
    fn parse_atom_list_spanned(&mut self) -> Result<Vec<SpannedAtom>, Diagnostic> {
        let mut out = Vec::new();
        while matches!(self.peek(), Some(Tok::Ident(_))) {
            let span = self.here();
            out.push((self.parse_atom()?, span));
            self.eat(&Tok::Comma);
        }
        Ok(out)
    }

    fn parse_clause(&mut self) -> Result<HornClause, Diagnostic> {
        let head = self.parse_atom()?;
        let mut body = Vec::new();
        if self.eat(&Tok::Implies) {
            body.push(self.parse_atom()?);
            while self.eat(&Tok::Comma) {
                body.push(self.parse_atom()?);
            }
        }
        self.expect(Tok::Dot)?;
        Ok(HornClause { head, body })
    }

    fn parse_section_kw(&mut self, kw: &'static str) -> Result<(), Diagnostic> {
        self.expect_kw(kw)
    }
}

fn single(d: Diagnostic) -> Vec<Diagnostic> {
    vec![d]
}

/// Parses and validates a domain file.
pub fn parse_domain(text: &str) -> Result<Domain, Vec<Diagnostic>> {
    let mut p = Parser::new(text)?;
    p.expect_kw("domain").map_err(single)?;
    let name = p.expect_ident().map_err(single)?;
    p.parse_section_kw("essentials").map_err(single)?;
    let mut essentials = Vec::new();
    let mut ess_spans = Vec::new();
    while matches!(p.peek(), Some(Tok::Ident(_))) {
        ess_spans.push(p.here());
        let pname = p.expect_ident().map_err(single)?;
        p.expect(Tok::Slash).map_err(single)?;
        let arity = match p.next() {
            Some(Tok::Int(i)) if i >= 0 => i as usize,
            other => {
                return Err(single(
                    p.error("E-SYNTAX", format!("expected arity, found {:?}", other)),
                ))
            }
        };
        essentials.push((Sym::new(&pname), arity));
        p.eat(&Tok::Comma);
    }
    let mut rules = Vec::new();
    let mut rule_spans = Vec::new();
    if p.peek() == Some(&Tok::Kw("rules")) {
        p.next();
        while matches!(p.peek(), Some(Tok::Ident(_))) {
            rule_spans.push(p.here());
            rules.push(p.parse_clause().map_err(single)?);
        }
    }
    let mut operators = Vec::new();
    let mut op_spans = Vec::new();
    while p.peek() == Some(&Tok::Kw("operator")) {
        p.next();
        op_spans.push(p.here());
        let oname = p.expect_ident().map_err(single)?;
        p.expect(Tok::LParen).map_err(single)?;
        let mut params = Vec::new();
        if !p.eat(&Tok::RParen) {
            loop {
                match p.next() {
                    Some(Tok::UIdent(v)) => params.push(Sym::new(&v)),
                    other => {
                        return Err(single(p.error(
                            "E-SYNTAX",
                            format!("expected parameter variable, found {:?}", other),
                        )))
                    }
                }
                if p.eat(&Tok::RParen) {
                    break;
                }
                p.expect(Tok::Comma).map_err(single)?;
            }
        }
        let section = |p: &mut Parser, kw: &'static str| -> Result<Vec<Atom>, Vec<Diagnostic>> {
            p.expect_kw(kw).map_err(single)?;
            p.expect(Tok::Colon).map_err(single)?;
            p.parse_atom_list().map_err(single)
        };
        let pre = section(&mut p, "pre")?;
        let add = section(&mut p, "add")?;
        let del = section(&mut p, "del")?;
        operators.push(OperatorSchema {
            name: Sym::new(&oname),
            params,
            pre,
            add,
            del,
        });
    }
    if let Some(t) = p.peek() {
        return Err(single(
            p.error("E-SYNTAX", format!("unexpected trailing input {:?}", t)),
        ));
    }
    let domain = Domain {
        name: Sym::new(&name),
        essentials,
        rules,
        operators,
    };
    // The same conditions Domain::check enforces, reported with source
    // positions.
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut err = |span: (usize, usize), code: &'static str, message: String| {
        diags.push(Diagnostic {
            severity: Severity::Error,
            line: span.0,
            col: span.1,
            code,
            message,
        });
    };
    let mut seen = std::collections::BTreeSet::new();
    for ((pred, _), span) in domain.essentials.iter().zip(&ess_spans) {
        if !seen.insert(*pred) {
            err(
                *span,
                "E-DUP-NAME",
                format!("duplicate essential predicate {}", pred),
            );
        }
    }
    for (rule, span) in domain.rules.iter().zip(&rule_spans) {
        if domain.is_essential(rule.head.pred) {
            err(
                *span,
                "E-ESS-HEAD",
                format!(
                    "rule head {} uses the essential predicate {}",
                    rule.head, rule.head.pred
                ),
            );
        }
    }
    let mut op_names = std::collections::BTreeSet::new();
    for (op, span) in domain.operators.iter().zip(&op_spans) {
        if !op_names.insert(op.name) {
            err(
                *span,
                "E-DUP-NAME",
                format!("duplicate operator name {}", op.name),
            );
        }
        for msg in op.check_var_scopes() {
            err(*span, "E-VAR-SCOPE", msg);
        }
        for atom in op.add.iter().chain(op.del.iter()) {
            match domain.essentials.iter().find(|(p, _)| *p == atom.pred) {
                None => err(
                    *span,
                    "E-SEMANTIC",
                    format!(
                        "operator {}: effect atom {} is not essential",
                        op.name, atom
                    ),
                ),
                Some((_, arity)) if atom.args.len() != *arity => err(
                    *span,
                    "E-ARITY",
                    format!("operator {}: effect atom {} has wrong arity", op.name, atom),
                ),
                _ => {}
            }
        }
    }
    if diags.is_empty() {
        Ok(domain)
    } else {
        Err(diags)
    }
}

fn check_state_atoms(
    atoms: &[SpannedAtom],
    domain: &Domain,
    diags: &mut Vec<Diagnostic>,
    section: &str,
) {
    let mut err = |span: (usize, usize), code: &'static str, message: String| {
        diags.push(Diagnostic {
            severity: Severity::Error,
            line: span.0,
            col: span.1,
            code,
            message,
        });
    };
    for (a, span) in atoms {
        match domain.essentials.iter().find(|(p, _)| *p == a.pred) {
            None => err(
                *span,
                "E-UNKNOWN-PRED",
                format!(
                    "{}: {} is not an essential predicate of {}",
                    section, a.pred, domain.name
                ),
            ),
            Some((_, arity)) if a.args.len() != *arity => err(
                *span,
                "E-ARITY",
                format!("{}: atom {} has wrong arity", section, a),
            ),
            _ => {}
        }
        if !a.is_ground() {
            err(
                *span,
                "E-NONGROUND",
                format!("{}: atom {} is not ground", section, a),
            );
        }
    }
}

/// Parses a problem file against an already-parsed domain.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<(String, Problem), Vec<Diagnostic>> {
    let mut p = Parser::new(text)?;
    p.expect_kw("problem").map_err(single)?;
    let name = p.expect_ident().map_err(single)?;
    p.expect_kw("init").map_err(single)?;
    let init = p.parse_atom_list_spanned().map_err(single)?;
    p.expect_kw("goal").map_err(single)?;
    let goal = p.parse_atom_list_spanned().map_err(single)?;
    if let Some(t) = p.peek() {
        return Err(single(
            p.error("E-SYNTAX", format!("unexpected trailing input {:?}", t)),
        ));
    }
    let mut diags = Vec::new();
    check_state_atoms(&init, domain, &mut diags, "init");
    check_state_atoms(&goal, domain, &mut diags, "goal");
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok((
        name,
        Problem {
            initial: State::new(init.into_iter().map(|(a, _)| a)),
            goal: State::new(goal.into_iter().map(|(a, _)| a)),
        },
    ))
}

/// Optional provenance carried by stored abstract cases.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseMeta {
    pub alpha: Vec<Atom>,
    pub beta: Vec<usize>,
    pub source: Option<String>,
}

/// Parses a case file (problem plus plan, with optional provenance) against
/// a domain.
pub fn parse_case(
    text: &str,
    domain: &Domain,
) -> Result<(String, PlanningCase, CaseMeta), Vec<Diagnostic>> {
    let mut p = Parser::new(text)?;
    p.expect_kw("case").map_err(single)?;
    let name = p.expect_ident().map_err(single)?;
    p.expect_kw("init").map_err(single)?;
    let init = p.parse_atom_list_spanned().map_err(single)?;
    p.expect_kw("goal").map_err(single)?;
    let goal = p.parse_atom_list_spanned().map_err(single)?;
    p.expect_kw("plan").map_err(single)?;
    let mut plan = Vec::new();
    while matches!(p.peek(), Some(Tok::Ident(_))) {
        let atom = p.parse_atom().map_err(single)?;
        p.eat(&Tok::Comma);
        let schema = match domain.operator(atom.pred) {
            Some(s) => s,
            None => {
                return Err(single(
                    p.error("E-UNKNOWN-OP", format!("unknown operator {}", atom.pred)),
                ))
            }
        };
        match crate::domain::instantiate(schema, &atom.args) {
            Ok(op) => plan.push(op),
            Err(e) => {
                return Err(single(
                    p.error("E-ARITY", format!("plan step {}: {}", atom, e)),
                ))
            }
        }
    }
    let mut meta = CaseMeta::default();
    if p.peek() == Some(&Tok::Kw("alpha")) {
        p.next();
        meta.alpha = p.parse_atom_list().map_err(single)?;
    }
    if p.peek() == Some(&Tok::Kw("beta")) {
        p.next();
        while let Some(Tok::Int(i)) = p.peek() {
            let i = *i;
            p.next();
            if i < 0 {
                return Err(single(p.error("E-SYNTAX", "negative beta index".into())));
            }
            meta.beta.push(i as usize);
            p.eat(&Tok::Comma);
        }
    }
    if p.peek() == Some(&Tok::Kw("source")) {
        p.next();
        meta.source = Some(p.expect_ident().map_err(single)?);
    }
    if let Some(t) = p.peek() {
        return Err(single(
            p.error("E-SYNTAX", format!("unexpected trailing input {:?}", t)),
        ));
    }
    let mut diags = Vec::new();
    check_state_atoms(&init, domain, &mut diags, "init");
    check_state_atoms(&goal, domain, &mut diags, "goal");
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok((
        name,
        PlanningCase {
            problem: Problem {
                initial: State::new(init.into_iter().map(|(a, _)| a)),
                goal: State::new(goal.into_iter().map(|(a, _)| a)),
            },
            plan,
        },
        meta,
    ))
}

/// Parses an abstraction theory file. Every rule head must be an abstract
/// essential atom; body atoms must be drawn from the concrete or abstract
/// vocabulary (or the built-ins). The two domains must not share symbols.
pub fn parse_theory(
    text: &str,
    concrete: &Domain,
    abstract_dom: &Domain,
) -> Result<Vec<HornClause>, Vec<Diagnostic>> {
    let mut p = Parser::new(text)?;
    p.expect_kw("theory").map_err(single)?;
    let _name = p.expect_ident().map_err(single)?;
    p.expect_kw("rules").map_err(single)?;
    let mut rules = Vec::new();
    while matches!(p.peek(), Some(Tok::Ident(_))) {
        rules.push(p.parse_clause().map_err(single)?);
    }
    if let Some(t) = p.peek() {
        return Err(single(
            p.error("E-SYNTAX", format!("unexpected trailing input {:?}", t)),
        ));
    }
    let mut diags = Vec::new();
    for (pc, _) in &concrete.essentials {
        if abstract_dom.is_essential(*pc) {
            diags.push(Diagnostic {
                severity: Severity::Error,
                line: 1,
                col: 1,
                code: "E-SYMBOL-CLASH",
                message: format!("predicate {} is essential in both levels", pc),
            });
        }
    }
    let known = |pred: crate::logic::Sym| {
        concrete.is_essential(pred)
            || abstract_dom.is_essential(pred)
            || concrete.rules.iter().any(|r| r.head.pred == pred)
            || abstract_dom.rules.iter().any(|r| r.head.pred == pred)
            || crate::domain::is_builtin_atom(&Atom { pred, args: vec![] })
    };
    for r in &rules {
        if !abstract_dom.is_essential(r.head.pred) {
            diags.push(Diagnostic {
                severity: Severity::Error,
                line: 1,
                col: 1,
                code: "E-ESS-HEAD",
                message: format!(
                    "theory rule head {} is not an abstract essential atom",
                    r.head
                ),
            });
        }
        for b in &r.body {
            if !known(b.pred) && !rules.iter().any(|r2| r2.head.pred == b.pred) {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    line: 1,
                    col: 1,
                    code: "E-UNKNOWN-PRED",
                    message: format!("theory body atom {} uses an unknown predicate", b),
                });
            }
        }
    }
    if diags.is_empty() {
        Ok(rules)
    } else {
        Err(diags)
    }
}

/// Parses a case-base index: entries `name length`, one per line, in
/// descending plan-length order.
pub fn parse_casebase_index(text: &str) -> Result<Vec<(String, usize)>, Vec<Diagnostic>> {
    let mut p = Parser::new(text)?;
    p.expect_kw("casebase").map_err(single)?;
    let mut entries = Vec::new();
    while matches!(p.peek(), Some(Tok::Ident(_))) {
        let name = p.expect_ident().map_err(single)?;
        let len = match p.next() {
            Some(Tok::Int(i)) if i >= 0 => i as usize,
            other => {
                return Err(single(p.error(
                    "E-SYNTAX",
                    format!("expected plan length, found {:?}", other),
                )))
            }
        };
        entries.push((name, len));
    }
    if let Some(t) = p.peek() {
        return Err(single(
            p.error("E-SYNTAX", format!("unexpected trailing input {:?}", t)),
        ));
    }
    for w in entries.windows(2) {
        if w[0].1 < w[1].1 {
            return Err(single(Diagnostic {
                severity: Severity::Error,
                line: 1,
                col: 1,
                code: "E-ORDER",
                message: "casebase entries must be in descending plan-length order".into(),
            }));
        }
    }
    Ok(entries)
}

fn fmt_atoms(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text for a domain; `parse_domain(format_domain(d))` equals `d`.
pub fn format_domain(d: &Domain) -> String {
    let mut out = String::new();
    out.push_str(&format!("domain {}\n\n", d.name));
    out.push_str("essentials\n");
    for (p, a) in &d.essentials {
        out.push_str(&format!("  {}/{}\n", p, a));
    }
    if !d.rules.is_empty() {
        out.push_str("\nrules\n");
        for r in &d.rules {
            out.push_str(&format!("  {}\n", r));
        }
    }
    for o in &d.operators {
        out.push_str(&format!(
            "\noperator {}({})\n",
            o.name,
            o.params
                .iter()
                .map(|p| p.as_str().to_owned())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("  pre: {}\n", fmt_atoms(&o.pre)));
        out.push_str(&format!("  add: {}\n", fmt_atoms(&o.add)));
        out.push_str(&format!("  del: {}\n", fmt_atoms(&o.del)));
    }
    out
}

pub fn format_theory(name: &str, rules: &[HornClause]) -> String {
    let mut out = String::new();
    out.push_str(&format!("theory {}\n\nrules\n", name));
    for r in rules {
        out.push_str(&format!("  {}\n", r));
    }
    out
}

fn fmt_state(state: &State) -> String {
    let mut out = String::new();
    for a in &state.atoms {
        out.push_str(&format!("  {}\n", a));
    }
    out
}

pub fn format_problem(name: &str, p: &Problem) -> String {
    format!(
        "problem {}\n\ninit\n{}\ngoal\n{}",
        name,
        fmt_state(&p.initial),
        fmt_state(&p.goal)
    )
}

fn fmt_op(op: &InstantiatedOperator) -> String {
    op.to_string()
}

pub fn format_case(name: &str, c: &PlanningCase, meta: &CaseMeta) -> String {
    let mut out = format!(
        "case {}\n\ninit\n{}\ngoal\n{}\nplan\n",
        name,
        fmt_state(&c.problem.initial),
        fmt_state(&c.problem.goal)
    );
    for op in &c.plan {
        out.push_str(&format!("  {}\n", fmt_op(op)));
    }
    if !meta.alpha.is_empty() {
        out.push_str("\nalpha\n");
        for a in &meta.alpha {
            out.push_str(&format!("  {}\n", a));
        }
    }
    if !meta.beta.is_empty() {
        out.push_str("\nbeta\n");
        out.push_str("  ");
        out.push_str(
            &meta
                .beta
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push('\n');
    }
    if let Some(src) = &meta.source {
        out.push_str(&format!("\nsource {}\n", src));
    }
    out
}

pub fn format_casebase(entries: &[(String, usize)]) -> String {
    let mut out = String::from("casebase\n");
    for (name, len) in entries {
        out.push_str(&format!("  {} {}\n", name, len));
    }
    out
}
