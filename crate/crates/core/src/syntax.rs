//! Vocabularies, terms and first-order formulas in negation normal form.
//!
//! [`RawFormula`] is what the parser produces: negation may sit anywhere.
//! [`Formula`] is the NNF form every game works on; negation only appears
//! as the sign of a [`Literal`]. Conjunction and disjunction are n-ary with
//! a non-empty child list.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

/// Name of the reserved nullary atom that holds in every structure.
pub const VERUM: &str = "TRUE";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("symbol `{0}` declared more than once")]
    Duplicate(String),
    #[error("symbol name `{0}` is reserved")]
    Reserved(String),
    #[error("empty symbol name")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational vocabulary, optionally with constants and identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    relations: Vec<RelationSymbol>,
    constants: Vec<String>,
    identity: bool,
}

/// True for names of the form `c<digits>`, which are set aside for the
/// witness constants of the model existence game.
pub fn is_reserved_constant(name: &str) -> bool {
    name.len() > 1 && name.starts_with('c') && name[1..].bytes().all(|b| b.is_ascii_digit())
}

impl Vocabulary {
    pub fn new<I, S>(relations: I, constants: Vec<String>, identity: bool) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let relations: Vec<RelationSymbol> =
            relations.into_iter().map(|(name, arity)| RelationSymbol { name: name.into(), arity }).collect();
        let mut seen = BTreeSet::new();
        for name in relations.iter().map(|r| &r.name).chain(constants.iter()) {
            if name.is_empty() {
                return Err(VocabularyError::Empty);
            }
            if name == VERUM {
                return Err(VocabularyError::Reserved(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(VocabularyError::Duplicate(name.clone()));
            }
        }
        if let Some(c) = constants.iter().find(|c| is_reserved_constant(c)) {
            return Err(VocabularyError::Reserved(c.clone()));
        }
        Ok(Vocabulary { relations, constants, identity })
    }

    /// Purely relational vocabulary.
    pub fn relational<I, S>(relations: I, identity: bool) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        Self::new(relations, Vec::new(), identity)
    }

    pub fn empty(identity: bool) -> Self {
        Vocabulary { relations: Vec::new(), constants: Vec::new(), identity }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn identity(&self) -> bool {
        self.identity
    }

    pub fn with_identity(mut self, identity: bool) -> Self {
        self.identity = identity;
        self
    }

    /// Index and arity of a relation symbol.
    pub fn relation(&self, name: &str) -> Option<(usize, usize)> {
        self.relations.iter().position(|r| r.name == name).map(|i| (i, self.relations[i].arity))
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub fn is_relational(&self) -> bool {
        self.constants.is_empty()
    }

    /// Same symbols with the same arities, in the same order.
    pub fn same_symbols(&self, other: &Vocabulary) -> bool {
        self.relations == other.relations && self.constants == other.constants
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// The reserved nullary atom `TRUE`.
    Verum,
    Rel {
        name: String,
        args: Vec<Term>,
    },
    Eq(Term, Term),
}

impl Atom {
    pub fn rel(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom::Rel { name: name.into(), args }
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Atom::Eq(a, b)
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        let (rel, pair): (&[Term], Option<[&Term; 2]>) = match self {
            Atom::Verum => (&[], None),
            Atom::Rel { args, .. } => (args, None),
            Atom::Eq(a, b) => (&[], Some([a, b])),
        };
        rel.iter().chain(pair.into_iter().flatten())
    }

    fn vars_into(&self, out: &mut BTreeSet<String>) {
        for t in self.terms() {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { positive: false, atom }
    }

    pub fn negated(&self) -> Self {
        Literal { positive: !self.positive, atom: self.atom.clone() }
    }
}

/// A first-order formula in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Lit(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn lit(positive: bool, atom: Atom) -> Self {
        Formula::Lit(Literal { positive, atom })
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(var.into(), Box::new(body))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn verum() -> Self {
        Formula::lit(true, Atom::Verum)
    }

    /// Maximal nesting depth of quantifiers.
    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::Lit(_) => 0,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(Formula::quantifier_rank).max().unwrap_or(0),
            Formula::Forall(_, b) | Formula::Exists(_, b) => 1 + b.quantifier_rank(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit(l) => l.atom.vars_into(out),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.free_vars_into(out)),
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let mut inner = BTreeSet::new();
                b.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Lit(_) => 1,
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::size).sum::<usize>(),
            Formula::Forall(_, b) | Formula::Exists(_, b) => 1 + b.size(),
        }
    }

    /// True if some literal uses the identity symbol.
    pub fn uses_identity(&self) -> bool {
        match self {
            Formula::Lit(l) => matches!(l.atom, Atom::Eq(..)),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(Formula::uses_identity),
            Formula::Forall(_, b) | Formula::Exists(_, b) => b.uses_identity(),
        }
    }

    /// The formula viewed as a raw formula (negated literals become `Not`).
    pub fn to_raw(&self) -> RawFormula {
        match self {
            Formula::Lit(l) if l.positive => RawFormula::Atom(l.atom.clone()),
            Formula::Lit(l) => RawFormula::Not(Box::new(RawFormula::Atom(l.atom.clone()))),
            Formula::And(cs) => RawFormula::And(cs.iter().map(Formula::to_raw).collect()),
            Formula::Or(cs) => RawFormula::Or(cs.iter().map(Formula::to_raw).collect()),
            Formula::Forall(v, b) => RawFormula::Forall(v.clone(), Box::new(b.to_raw())),
            Formula::Exists(v, b) => RawFormula::Exists(v.clone(), Box::new(b.to_raw())),
        }
    }

    /// The negation, pushed down to the literals.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(l.negated()),
            Formula::And(cs) => Formula::Or(cs.iter().map(Formula::negate).collect()),
            Formula::Or(cs) => Formula::And(cs.iter().map(Formula::negate).collect()),
            Formula::Forall(v, b) => Formula::Exists(v.clone(), Box::new(b.negate())),
            Formula::Exists(v, b) => Formula::Forall(v.clone(), Box::new(b.negate())),
        }
    }
}

/// Parser output: like [`Formula`] but with negation allowed anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RawFormula {
    Atom(Atom),
    Not(Box<RawFormula>),
    And(Vec<RawFormula>),
    Or(Vec<RawFormula>),
    Forall(String, Box<RawFormula>),
    Exists(String, Box<RawFormula>),
}

impl RawFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(body: RawFormula) -> Self {
        RawFormula::Not(Box::new(body))
    }

    pub fn quantifier_rank(&self) -> usize {
        match self {
            RawFormula::Atom(_) => 0,
            RawFormula::Not(b) => b.quantifier_rank(),
            RawFormula::And(cs) | RawFormula::Or(cs) => cs.iter().map(RawFormula::quantifier_rank).max().unwrap_or(0),
            RawFormula::Forall(_, b) | RawFormula::Exists(_, b) => 1 + b.quantifier_rank(),
        }
    }

    /// Negation normal form: De Morgan, quantifier duality and double
    /// negation, without any other restructuring.
    pub fn to_nnf(&self) -> Formula {
        self.nnf(true)
    }

    fn nnf(&self, positive: bool) -> Formula {
        match self {
            RawFormula::Atom(a) => Formula::lit(positive, a.clone()),
            RawFormula::Not(b) => b.nnf(!positive),
            RawFormula::And(cs) if positive => Formula::And(cs.iter().map(|c| c.nnf(true)).collect()),
            RawFormula::And(cs) => Formula::Or(cs.iter().map(|c| c.nnf(false)).collect()),
            RawFormula::Or(cs) if positive => Formula::Or(cs.iter().map(|c| c.nnf(true)).collect()),
            RawFormula::Or(cs) => Formula::And(cs.iter().map(|c| c.nnf(false)).collect()),
            RawFormula::Forall(v, b) if positive => Formula::forall(v.clone(), b.nnf(true)),
            RawFormula::Forall(v, b) => Formula::exists(v.clone(), b.nnf(false)),
            RawFormula::Exists(v, b) if positive => Formula::exists(v.clone(), b.nnf(true)),
            RawFormula::Exists(v, b) => Formula::forall(v.clone(), b.nnf(false)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(v: &str) -> Atom {
        Atom::rel("P", vec![Term::var(v)])
    }

    fn q(v: &str) -> Atom {
        Atom::rel("Q", vec![Term::var(v)])
    }

    #[test]
    fn nnf_de_morgan() {
        let raw = RawFormula::not(RawFormula::And(vec![RawFormula::Atom(p("x")), RawFormula::Atom(q("x"))]));
        assert_eq!(raw.to_nnf(), Formula::Or(vec![Formula::lit(false, p("x")), Formula::lit(false, q("x"))]));
    }

    #[test]
    fn nnf_quantifier_duality() {
        let raw = RawFormula::not(RawFormula::Forall("x".into(), Box::new(RawFormula::Atom(p("x")))));
        assert_eq!(raw.to_nnf(), Formula::exists("x", Formula::lit(false, p("x"))));
    }

    #[test]
    fn nnf_double_negation() {
        let raw = RawFormula::not(RawFormula::not(RawFormula::Atom(p("x"))));
        assert_eq!(raw.to_nnf(), Formula::lit(true, p("x")));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Formula::lit(true, p("x")).quantifier_rank(), 0);
        let r = Atom::rel("R", vec![Term::var("x"), Term::var("y")]);
        let f = Formula::forall("x", Formula::exists("y", Formula::lit(true, r)));
        assert_eq!(f.quantifier_rank(), 2);
    }

    #[test]
    fn free_variables() {
        let r = Atom::rel("R", vec![Term::var("x"), Term::var("y")]);
        let open = Formula::lit(true, r.clone());
        assert_eq!(open.free_vars().into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
        let f = Formula::exists("x", Formula::lit(true, r));
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec!["y"]);
    }

    #[test]
    fn vocabulary_rejects_reserved_and_duplicates() {
        assert!(Vocabulary::new([("P", 1)], vec!["c3".into()], false).is_err());
        assert!(Vocabulary::new([("P", 1), ("P", 2)], vec![], false).is_err());
        assert!(Vocabulary::new([("P", 1)], vec!["P".into()], false).is_err());
        assert!(Vocabulary::new([("TRUE", 0)], vec![], false).is_err());
        assert!(Vocabulary::new([("P", 1)], vec!["cat".into()], false).is_ok());
        assert!(is_reserved_constant("c0") && is_reserved_constant("c12"));
        assert!(!is_reserved_constant("c") && !is_reserved_constant("cx"));
    }
}
