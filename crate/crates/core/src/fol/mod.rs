//! Abstract syntax for the FOL dialect: a quantifier prefix followed by a
//! propositional-style body over predicate literals.
//!
//! ```text
//! S     -> F | Q F
//! Q     -> QUANT VAR | QUANT VAR Q
//! F     -> '¬' '(' F ')' | '(' F ')' | F OP F | L
//! OP    -> '⊕' | '∨' | '∧' | '→' | '↔'
//! L     -> '¬' PRED '(' TERMS ')' | PRED '(' TERMS ')'
//! TERMS -> TERM | TERM ',' TERMS
//! ```
//!
//! The `F OP F` production is ambiguous; the parser resolves it with the
//! precedence `∧ > ∨ > ⊕ > → > ↔` (see [`Connective::precedence`]).

mod lexer;
mod parser;
mod print;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use lexer::{tokenize, Token};
pub use parser::{parse, SyntaxError, SyntaxErrorKind};
pub use print::leaves;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn symbol(self) -> &'static str {
        match self {
            Quantifier::Forall => "∀",
            Quantifier::Exists => "∃",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Quantifier::Forall => Quantifier::Exists,
            Quantifier::Exists => Quantifier::Forall,
        }
    }
}

/// Binary connectives, ordered from loosest to tightest binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connective {
    Iff,
    Implies,
    Xor,
    Or,
    And,
}

impl Connective {
    pub const ALL: [Connective; 5] = [
        Connective::Iff,
        Connective::Implies,
        Connective::Xor,
        Connective::Or,
        Connective::And,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Connective::Iff => "↔",
            Connective::Implies => "→",
            Connective::Xor => "⊕",
            Connective::Or => "∨",
            Connective::And => "∧",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            Connective::Iff => 1,
            Connective::Implies => 2,
            Connective::Xor => 3,
            Connective::Or => 4,
            Connective::And => 5,
        }
    }

    /// Only implication groups to the right.
    pub fn is_right_assoc(self) -> bool {
        matches!(self, Connective::Implies)
    }

    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Connective::Iff => a == b,
            Connective::Implies => !a || b,
            Connective::Xor => a != b,
            Connective::Or => a || b,
            Connective::And => a && b,
        }
    }
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single lowercase letter optionally followed by digits (`x`, `y2`).
/// Such names are variables even when they are not bound by the prefix.
pub fn is_simple_var_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// Classifies an argument name given the set of variables bound in the prefix.
pub fn classify_term(name: &str, bound: &HashSet<&str>) -> Term {
    if bound.contains(name) || is_simple_var_name(name) {
        Term::Var(name.to_string())
    } else {
        Term::Const(name.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub negated: bool,
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Literal {
    pub fn atom(&self) -> Atom {
        Atom::new(self.predicate.clone(), self.args.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Binary {
        op: Connective,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    /// `¬( .. )`; the parentheses belong to the negation.
    Not(Box<Formula>),
    /// Parentheses present in the source text.
    Group(Box<Formula>),
    Literal(Literal),
}

impl Formula {
    pub fn binary(op: Connective, left: Formula, right: Formula) -> Self {
        Formula::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Binary { left, right, .. } => vec![left, right],
            Formula::Not(inner) | Formula::Group(inner) => vec![inner],
            Formula::Literal(_) => Vec::new(),
        }
    }

    pub fn child_mut(&mut self, index: u8) -> Option<&mut Formula> {
        match (self, index) {
            (Formula::Binary { left, .. }, 0) => Some(left),
            (Formula::Binary { right, .. }, 1) => Some(right),
            (Formula::Not(inner) | Formula::Group(inner), 0) => Some(inner),
            _ => None,
        }
    }

    pub fn at(&self, path: &NodePath) -> Option<&Formula> {
        let mut node = self;
        for &step in &path.0 {
            node = *node.children().get(step as usize)?;
        }
        Some(node)
    }

    pub fn at_mut(&mut self, path: &NodePath) -> Option<&mut Formula> {
        let mut node = self;
        for &step in &path.0 {
            node = node.child_mut(step)?;
        }
        Some(node)
    }

    /// Literal occurrences, left to right.
    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.walk(&mut |node, _| {
            if let Formula::Literal(lit) = node {
                out.push(lit);
            }
        });
        out
    }

    /// Pre-order traversal with the path of every node.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Formula, &NodePath)) {
        fn go<'a>(node: &'a Formula, path: &mut Vec<u8>, visit: &mut dyn FnMut(&'a Formula, &NodePath)) {
            visit(node, &NodePath(path.clone()));
            for (i, child) in node.children().into_iter().enumerate() {
                path.push(i as u8);
                go(child, path, visit);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), visit);
    }

    pub fn paths(&self) -> Vec<NodePath> {
        let mut out = Vec::new();
        self.walk(&mut |_, p| out.push(p.clone()));
        out
    }

    pub fn eval(&self, lookup: &dyn Fn(&Literal) -> bool) -> bool {
        match self {
            Formula::Binary { op, left, right } => op.eval(left.eval(lookup), right.eval(lookup)),
            Formula::Not(inner) => !inner.eval(lookup),
            Formula::Group(inner) => inner.eval(lookup),
            Formula::Literal(lit) => lookup(lit) != lit.negated,
        }
    }
}

/// Location of a node inside a formula body: child indices from the root
/// (`0` = left or only child, `1` = right child).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(pub Vec<u8>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: u8) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        NodePath(v)
    }

    pub fn parent(&self) -> Option<(NodePath, u8)> {
        let (&last, rest) = self.0.split_last()?;
        Some((NodePath(rest.to_vec()), last))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantifiedVar {
    pub quantifier: Quantifier,
    pub var: String,
}

impl fmt::Display for QuantifiedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.quantifier, self.var)
    }
}

/// One parsed FOL formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FolRule {
    pub prefix: Vec<QuantifiedVar>,
    pub body: Formula,
}

impl FolRule {
    pub fn bound_vars(&self) -> HashSet<&str> {
        self.prefix.iter().map(|q| q.var.as_str()).collect()
    }

    /// Variables used in literal arguments that the prefix does not bind,
    /// in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let bound = self.bound_vars();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for lit in self.body.literals() {
            for arg in &lit.args {
                if let Term::Var(v) = arg {
                    if !bound.contains(v.as_str()) && seen.insert(v.clone()) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }

    /// Distinct positive atoms in left-to-right first-occurrence order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut seen = HashSet::new();
        self.body
            .literals()
            .into_iter()
            .map(Literal::atom)
            .filter(|a| seen.insert(a.canonical_text.clone()))
            .collect()
    }

    pub fn literal_count(&self) -> usize {
        self.body.literals().len()
    }

    /// Canonical Unicode rendering; same as `to_string()`.
    pub fn print_canonical(&self) -> String {
        self.to_string()
    }

    /// True when printing and re-parsing yields this exact tree.
    pub fn is_canonical(&self) -> bool {
        parse(&self.to_string()).is_ok_and(|r| &r == self)
    }
}

impl std::str::FromStr for FolRule {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// The positive form of a literal; the unit of truth-table columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
    pub canonical_text: String,
}

impl Atom {
    pub fn new(predicate: String, args: Vec<Term>) -> Self {
        let canonical_text = print::literal_text(false, &predicate, &args);
        Atom {
            predicate,
            args,
            canonical_text,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text)
    }
}

pub fn atoms(rule: &FolRule) -> Vec<Atom> {
    rule.atoms()
}

pub fn print_canonical(rule: &FolRule) -> String {
    rule.to_string()
}

/// Splits an identifier into its CamelCase words: `EUCountry` gives
/// `["EU", "Country"]`, `ColorChangedToRed` gives four words.
pub fn camel_words(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '-' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = current.chars().last().as_ref() {
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_ascii_digit())
                || (prev.is_ascii_digit() && c.is_alphabetic())
                || (prev.is_uppercase() && c.is_uppercase() && next.is_some_and(|n| n.is_lowercase()));
            if boundary {
                words.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Extra checks layered on top of grammaticality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationPolicy {
    /// Reject predicates with at least this many CamelCase words.
    pub max_predicate_words: Option<usize>,
}

pub fn validate(text: &str) -> Verdict {
    validate_with(text, ValidationPolicy::default())
}

pub fn validate_with(text: &str, policy: ValidationPolicy) -> Verdict {
    if text.trim().is_empty() {
        return Verdict::Invalid("empty".into());
    }
    let rule = match parse(text) {
        Ok(rule) => rule,
        Err(e) => return Verdict::Invalid(e.to_string()),
    };
    if let Some(limit) = policy.max_predicate_words {
        if let Some(lit) = rule
            .body
            .literals()
            .into_iter()
            .find(|l| camel_words(&l.predicate).len() >= limit)
        {
            return Verdict::Invalid(format!("predicate name too long: {}", lit.predicate));
        }
    }
    Verdict::Valid
}
