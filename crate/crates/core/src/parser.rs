//! Prolog-like surface syntax for programs and abstraction libraries.
//!
//! ```text
//! memberzero(A) :- head(A,B),zero(B).
//! memberzero(A) ← tail(A,B),memberzero(B).
//! ```
//!
//! Lowercase identifiers are predicate symbols or constants, uppercase ones are
//! variables. A variable in callee position is higher-order, and so is every
//! argument position it flows into; lowercase identifiers in such positions
//! parse as predicate references.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use crate::abstractor::Abstraction;
use crate::ast::{
    is_variable_name, AstError, Atom, Callee, Clause, Definition, PredicateSymbol, Program, Term,
    Variable,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: PathBuf,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file.display(), self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {level}: {}", self.span, self.message)
    }
}

/// One or more error diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// A parse result together with any non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseDiagnostic>,
}

/// Higher-order argument positions of a known predicate, mapped to the arity
/// of the predicate expected there.
pub type HoSignature = BTreeMap<usize, usize>;

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub allow_higher_order: bool,
    pub file: PathBuf,
    /// Signatures of abstractions defined elsewhere (e.g. a loaded library).
    pub signatures: HashMap<String, HoSignature>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            allow_higher_order: true,
            file: PathBuf::from("<input>"),
            signatures: HashMap::new(),
        }
    }
}

impl ParseOptions {
    pub fn first_order() -> Self {
        Self {
            allow_higher_order: false,
            ..Self::default()
        }
    }

    pub fn with_file(mut self, file: impl Into<PathBuf>) -> Self {
        self.file = file.into();
        self
    }

    pub fn with_library(mut self, library: &[Abstraction]) -> Self {
        for a in library {
            self.signatures
                .insert(a.name().name().to_string(), a.ho_signature());
        }
        self
    }
}

pub fn parse_program(text: &str, options: &ParseOptions) -> Result<Parsed<Program>, ParseError> {
    let parsed = parse_clauses(text, options)?;
    let spans = parsed.head_spans;
    let program = Program::from_clauses(parsed.clauses)
        .map_err(|e| ast_error(e, spans.first().cloned().unwrap_or_else(|| start_span(options))))?;
    Ok(Parsed {
        value: program,
        warnings: parsed.warnings,
    })
}

/// Deterministic text form; `parse_program(print_program(p))` reproduces `p`.
pub fn print_program(program: &Program) -> String {
    program.to_string()
}

/// Parses abstraction definitions. Every definition must carry at least one
/// higher-order head argument.
pub fn parse_abstraction_library(
    text: &str,
    options: &ParseOptions,
) -> Result<Vec<Abstraction>, ParseError> {
    let parsed = parse_clauses(text, options)?;
    let mut first_span: HashMap<PredicateSymbol, SourceSpan> = HashMap::new();
    for (c, s) in parsed.clauses.iter().zip(&parsed.head_spans) {
        first_span.entry(c.head_symbol().clone()).or_insert_with(|| s.clone());
    }
    let definitions = crate::ast::defs(parsed.clauses)
        .map_err(|e| ast_error(e, start_span(options)))?;
    let mut out = Vec::with_capacity(definitions.len());
    let mut errors = Vec::new();
    for d in definitions {
        let span = first_span[d.symbol()].clone();
        match Abstraction::from_definition(d) {
            Ok(a) => out.push(a),
            Err(e) => errors.push(error_at(span, e.to_string())),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseError { diagnostics: errors })
    }
}

/// Library text: one block per abstraction, preceded by a comment listing the
/// definitions it was abstracted from when known.
pub fn export_abstraction_library(library: &[Abstraction]) -> String {
    let mut out = String::new();
    for a in library {
        if !a.origins().is_empty() {
            let uses: Vec<String> = a
                .origins()
                .iter()
                .map(|o| format!("{}{}", o.definition.name(), o.tuple))
                .collect();
            out.push_str(&format!(
                "% {}: {} higher-order variable(s), abstracts {}\n",
                a.name().name(),
                a.ho_var_count(),
                uses.join(", ")
            ));
        }
        out.push_str(&a.definition().to_string());
    }
    out
}

fn start_span(options: &ParseOptions) -> SourceSpan {
    SourceSpan {
        file: options.file.clone(),
        line: 1,
        column: 1,
    }
}

fn error_at(span: SourceSpan, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic {
        span,
        severity: Severity::Error,
        message: message.into(),
    }
}

fn ast_error(e: AstError, span: SourceSpan) -> ParseError {
    ParseError {
        diagnostics: vec![error_at(span, e.to_string())],
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lower(s) | Tok::Upper(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Neck => f.write_str("`:-`"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    file: &'a PathBuf,
}

impl<'a> Lexer<'a> {
    fn span(&self) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn word(&mut self, first: char) -> String {
        let mut s = String::from(first);
        while let Some(&c) = self.chars.peek() {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let span = self.span();
            let Some(c) = self.bump() else { break };
            let tok = match c {
                c if c.is_whitespace() => continue,
                '%' => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '←' => Tok::Neck,
                ':' if self.chars.peek() == Some(&'-') => {
                    self.bump();
                    Tok::Neck
                }
                '-' if self.chars.peek().is_some_and(|c| c.is_ascii_digit()) => {
                    let digits = self.word('-');
                    Tok::Number(digits)
                }
                c if c.is_ascii_digit() => Tok::Number(self.word(c)),
                c if c.is_ascii_lowercase() => Tok::Lower(self.word(c)),
                c if c.is_ascii_uppercase() || c == '_' => Tok::Upper(self.word(c)),
                other => {
                    return Err(ParseError {
                        diagnostics: vec![error_at(span, format!("unexpected character `{other}`"))],
                    })
                }
            };
            if let Tok::Number(n) = &tok {
                if !n.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()) {
                    return Err(ParseError {
                        diagnostics: vec![error_at(span, format!("malformed number `{n}`"))],
                    });
                }
            }
            out.push((tok, span));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Raw syntax

#[derive(Debug, Clone)]
enum RawTerm {
    Lower(String),
    Upper(String),
    Number(String),
}

#[derive(Debug, Clone)]
struct RawAtom {
    name: String,
    callee_is_var: bool,
    args: Vec<(RawTerm, SourceSpan)>,
    span: SourceSpan,
}

#[derive(Debug, Clone)]
struct RawClause {
    head: RawAtom,
    body: Vec<RawAtom>,
}

impl RawClause {
    fn atoms(&self) -> impl Iterator<Item = &RawAtom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }
}

struct RawParser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    end: SourceSpan,
}

impl RawParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> SourceSpan {
        self.toks
            .get(self.pos)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| self.end.clone())
    }

    fn next(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, expected: &str, clause_start: &SourceSpan) -> ParseDiagnostic {
        match self.toks.get(self.pos) {
            Some((tok, span)) => error_at(span.clone(), format!("expected {expected}, found {tok}")),
            None => error_at(
                clause_start.clone(),
                "unterminated clause: missing `.` before end of input",
            ),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str, start: &SourceSpan) -> Result<(), ParseDiagnostic> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(what, start))
        }
    }

    fn clauses(mut self) -> Result<Vec<RawClause>, ParseDiagnostic> {
        let mut out = Vec::new();
        while self.peek().is_some() {
            out.push(self.clause()?);
        }
        Ok(out)
    }

    fn clause(&mut self) -> Result<RawClause, ParseDiagnostic> {
        let start = self.span();
        let head = self.atom(&start)?;
        let mut body = Vec::new();
        if self.peek() == Some(&Tok::Neck) {
            self.pos += 1;
            loop {
                body.push(self.atom(&start)?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Dot, "`,` or `.`", &start)?;
        Ok(RawClause { head, body })
    }

    fn atom(&mut self, start: &SourceSpan) -> Result<RawAtom, ParseDiagnostic> {
        let (name, callee_is_var, span) = match self.next() {
            Some((Tok::Lower(n), s)) => (n, false, s),
            Some((Tok::Upper(n), s)) => (n, true, s),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("an atom", start));
            }
        };
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                let term = match self.next() {
                    Some((Tok::Lower(n), s)) => (RawTerm::Lower(n), s),
                    Some((Tok::Upper(n), s)) => (RawTerm::Upper(n), s),
                    Some((Tok::Number(n), s)) => (RawTerm::Number(n), s),
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("a term", start));
                    }
                };
                args.push(term);
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `)`", start)),
                }
            }
        }
        Ok(RawAtom {
            name,
            callee_is_var,
            args,
            span,
        })
    }
}

// ---------------------------------------------------------------------------
// Classification

struct ParsedClauses {
    clauses: Vec<Clause>,
    head_spans: Vec<SourceSpan>,
    warnings: Vec<ParseDiagnostic>,
}

fn parse_clauses(text: &str, options: &ParseOptions) -> Result<ParsedClauses, ParseError> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
        file: &options.file,
    };
    let toks = lexer.tokens()?;
    let end = toks
        .last()
        .map(|(_, s)| s.clone())
        .unwrap_or_else(|| start_span(options));
    let raw = RawParser { toks, pos: 0, end }
        .clauses()
        .map_err(|d| ParseError { diagnostics: vec![d] })?;

    let mut errors = Vec::new();
    let ho_positions = higher_order_positions(&raw, options, &mut errors);
    check_arities(&raw, &ho_positions, &mut errors);
    if !errors.is_empty() {
        return Err(ParseError { diagnostics: errors });
    }

    let mut clauses = Vec::with_capacity(raw.len());
    let mut head_spans = Vec::with_capacity(raw.len());
    for rc in &raw {
        match build_clause(rc, &ho_positions, options) {
            Ok(c) => {
                clauses.push(c);
                head_spans.push(rc.head.span.clone());
            }
            Err(d) => errors.push(d),
        }
    }
    if !errors.is_empty() {
        return Err(ParseError { diagnostics: errors });
    }

    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (c, s) in clauses.iter().zip(&head_spans) {
        if !seen.insert(c) {
            warnings.push(ParseDiagnostic {
                span: s.clone(),
                severity: Severity::Warning,
                message: format!("duplicate clause `{c}`"),
            });
        }
    }
    Ok(ParsedClauses {
        clauses,
        head_spans,
        warnings,
    })
}

/// Variables of one clause that range over predicates, with their arity.
fn clause_ho_vars(
    rc: &RawClause,
    positions: &HashMap<String, HoSignature>,
    errors: &mut Vec<ParseDiagnostic>,
) -> HashMap<String, usize> {
    let mut vars: HashMap<String, usize> = HashMap::new();
    let mut note = |name: &str, arity: usize, span: &SourceSpan, errors: &mut Vec<ParseDiagnostic>| {
        match vars.get(name) {
            Some(&a) if a != arity => errors.push(error_at(
                span.clone(),
                format!("higher-order variable `{name}` used with arities {a} and {arity}"),
            )),
            Some(_) => {}
            None => {
                vars.insert(name.to_string(), arity);
            }
        }
    };
    for atom in rc.atoms() {
        if atom.callee_is_var {
            note(&atom.name, atom.args.len(), &atom.span, errors);
        } else if let Some(sig) = positions.get(&atom.name) {
            for (&pos, &arity) in sig {
                if let Some((RawTerm::Upper(v), span)) = atom.args.get(pos) {
                    note(v, arity, span, errors);
                }
            }
        }
    }
    vars
}

fn higher_order_positions(
    raw: &[RawClause],
    options: &ParseOptions,
    errors: &mut Vec<ParseDiagnostic>,
) -> HashMap<String, HoSignature> {
    let mut positions = options.signatures.clone();
    loop {
        let mut changed = false;
        for rc in raw {
            let mut scratch = Vec::new();
            let vars = clause_ho_vars(rc, &positions, &mut scratch);
            for atom in rc.atoms().filter(|a| !a.callee_is_var) {
                for (pos, (term, _)) in atom.args.iter().enumerate() {
                    let RawTerm::Upper(v) = term else { continue };
                    let Some(&arity) = vars.get(v) else { continue };
                    let sig = positions.entry(atom.name.clone()).or_default();
                    if let std::collections::btree_map::Entry::Vacant(e) = sig.entry(pos) {
                        e.insert(arity);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for rc in raw {
        clause_ho_vars(rc, &positions, errors);
        if !options.allow_higher_order {
            for atom in rc.atoms().filter(|a| a.callee_is_var) {
                errors.push(error_at(
                    atom.span.clone(),
                    format!(
                        "variable `{}` in callee position, but higher-order constructs are not allowed",
                        atom.name
                    ),
                ));
            }
        }
    }
    positions
}

fn check_arities(
    raw: &[RawClause],
    positions: &HashMap<String, HoSignature>,
    errors: &mut Vec<ParseDiagnostic>,
) {
    let mut arities: HashMap<String, usize> = HashMap::new();
    let mut check = |name: &str, arity: usize, span: &SourceSpan| match arities.get(name) {
        Some(&a) if a != arity => errors.push(error_at(
            span.clone(),
            format!("predicate `{name}` used with arity {arity}, but earlier with arity {a}"),
        )),
        Some(_) => {}
        None => {
            arities.insert(name.to_string(), arity);
        }
    };
    for rc in raw {
        for atom in rc.atoms() {
            if atom.callee_is_var {
                continue;
            }
            check(&atom.name, atom.args.len(), &atom.span);
            if let Some(sig) = positions.get(&atom.name) {
                for (&pos, &arity) in sig {
                    if let Some((RawTerm::Lower(p), span)) = atom.args.get(pos) {
                        check(p, arity, span);
                    }
                }
            }
        }
    }
}

fn build_clause(
    rc: &RawClause,
    positions: &HashMap<String, HoSignature>,
    options: &ParseOptions,
) -> Result<Clause, ParseDiagnostic> {
    let mut scratch = Vec::new();
    let ho_vars = clause_ho_vars(rc, positions, &mut scratch);
    let build_atom = |atom: &RawAtom| -> Result<Atom, ParseDiagnostic> {
        let sig = if atom.callee_is_var {
            None
        } else {
            positions.get(&atom.name)
        };
        let mut args = Vec::with_capacity(atom.args.len());
        for (pos, (term, span)) in atom.args.iter().enumerate() {
            let ho_arity = sig.and_then(|s| s.get(&pos)).copied();
            let t = match (term, ho_arity) {
                (RawTerm::Lower(p), Some(arity)) => {
                    Term::PredRef(PredicateSymbol::new(p.clone(), arity).map_err(|e| error_at(span.clone(), e.to_string()))?)
                }
                (RawTerm::Number(n), Some(_)) => {
                    return Err(error_at(
                        span.clone(),
                        format!("number `{n}` in a higher-order argument position"),
                    ))
                }
                (RawTerm::Upper(v), _) => Term::Var(variable(v, ho_vars.contains_key(v), span)?),
                (RawTerm::Lower(c), None) | (RawTerm::Number(c), None) => Term::Const(c.clone()),
            };
            if t.is_higher_order() && !options.allow_higher_order {
                return Err(error_at(
                    span.clone(),
                    "higher-order argument, but higher-order constructs are not allowed",
                ));
            }
            args.push(t);
        }
        let callee = if atom.callee_is_var {
            Callee::Var(variable(&atom.name, true, &atom.span)?)
        } else {
            Callee::Pred(
                PredicateSymbol::new(atom.name.clone(), args.len())
                    .map_err(|e| error_at(atom.span.clone(), e.to_string()))?,
            )
        };
        Atom::new(callee, args).map_err(|e| error_at(atom.span.clone(), e.to_string()))
    };
    if rc.head.callee_is_var {
        return Err(error_at(
            rc.head.span.clone(),
            format!("clause head `{}` must be a predicate symbol", rc.head.name),
        ));
    }
    let head = build_atom(&rc.head)?;
    let body = rc.body.iter().map(build_atom).collect::<Result<Vec<_>, _>>()?;
    Clause::new(head, body).map_err(|e| error_at(rc.head.span.clone(), e.to_string()))
}

fn variable(name: &str, higher_order: bool, span: &SourceSpan) -> Result<Variable, ParseDiagnostic> {
    debug_assert!(is_variable_name(name));
    let v = if higher_order {
        Variable::higher_order(name)
    } else {
        Variable::first_order(name)
    };
    v.map_err(|e| error_at(span.clone(), e.to_string()))
}

/// Definition helper used by tests and the CLI: parse a single definition.
pub fn parse_definition(text: &str) -> Result<Definition, ParseError> {
    let p = parse_program(text, &ParseOptions::default())?.value;
    match p.definitions() {
        [d] => Ok(d.clone()),
        other => Err(ParseError {
            diagnostics: vec![error_at(
                start_span(&ParseOptions::default()),
                format!("expected exactly one definition, found {}", other.len()),
            )],
        }),
    }
}
