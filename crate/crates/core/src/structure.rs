//! Finite structures and the recursive truth definition.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::syntax::{Atom, Formula, Literal, RawFormula, Term, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("the domain is empty")]
    EmptyDomain,
    #[error("element `{0}` listed twice")]
    DuplicateElement(String),
    #[error("`{0}` is not in the domain")]
    UnknownElement(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("`{name}` has arity {expected}, got a tuple of length {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("constant `{0}` is not interpreted")]
    MissingConstant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("`{name}` has arity {expected}, applied to {found} term(s)")]
    Arity { name: String, expected: usize, found: usize },
    #[error("equality used over a vocabulary without identity")]
    NoIdentity,
}

/// Variable name to element index.
pub type Assignment = BTreeMap<String, usize>;

/// A finite structure. Elements are addressed by their position in the
/// domain list; the string ids are only for input and output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Structure {
    vocab: Vocabulary,
    domain: Vec<String>,
    relations: Vec<Vec<bool>>,
    constants: Vec<Option<usize>>,
}

fn tuple_index(n: usize, args: &[usize]) -> usize {
    args.iter().fold(0, |acc, &a| acc * n + a)
}

impl Structure {
    /// A structure with every relation empty and no constant interpreted.
    pub fn new(vocab: Vocabulary, domain: Vec<String>) -> Result<Self, StructureError> {
        if domain.is_empty() {
            return Err(StructureError::EmptyDomain);
        }
        for (i, e) in domain.iter().enumerate() {
            if domain[..i].contains(e) {
                return Err(StructureError::DuplicateElement(e.clone()));
            }
        }
        let n = domain.len();
        let relations = vocab.relations().iter().map(|r| vec![false; n.pow(r.arity as u32)]).collect();
        let constants = vec![None; vocab.constants().len()];
        Ok(Structure { vocab, domain, relations, constants })
    }

    /// Domain `"0"`, `"1"`, ... of the given size.
    pub fn numbered(vocab: Vocabulary, size: usize) -> Result<Self, StructureError> {
        Self::new(vocab, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn with_identity(mut self, identity: bool) -> Self {
        self.vocab = self.vocab.with_identity(identity);
        self
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn element(&self, id: &str) -> Option<usize> {
        self.domain.iter().position(|e| e == id)
    }

    pub fn element_id(&self, e: usize) -> &str {
        &self.domain[e]
    }

    pub fn insert(&mut self, rel: &str, tuple: &[usize]) -> Result<(), StructureError> {
        let (r, arity) = self.vocab.relation(rel).ok_or_else(|| StructureError::UnknownRelation(rel.into()))?;
        if arity != tuple.len() {
            return Err(StructureError::Arity { name: rel.into(), expected: arity, found: tuple.len() });
        }
        if let Some(&bad) = tuple.iter().find(|&&a| a >= self.size()) {
            return Err(StructureError::UnknownElement(bad.to_string()));
        }
        let i = tuple_index(self.size(), tuple);
        self.relations[r][i] = true;
        Ok(())
    }

    /// Like [`insert`](Self::insert) with element ids.
    pub fn insert_ids(&mut self, rel: &str, tuple: &[&str]) -> Result<(), StructureError> {
        let t = tuple
            .iter()
            .map(|id| self.element(id).ok_or_else(|| StructureError::UnknownElement((*id).into())))
            .collect::<Result<Vec<_>, _>>()?;
        self.insert(rel, &t)
    }

    pub fn set_constant(&mut self, name: &str, e: usize) -> Result<(), StructureError> {
        let c = self.vocab.constant(name).ok_or_else(|| StructureError::UnknownConstant(name.into()))?;
        if e >= self.size() {
            return Err(StructureError::UnknownElement(e.to_string()));
        }
        self.constants[c] = Some(e);
        Ok(())
    }

    /// Checks that every constant is interpreted.
    pub fn validate(&self) -> Result<(), StructureError> {
        match self.constants.iter().position(Option::is_none) {
            Some(c) => Err(StructureError::MissingConstant(self.vocab.constants()[c].clone())),
            None => Ok(()),
        }
    }

    /// Relation `rel` (by vocabulary index) at an element tuple.
    #[inline]
    pub fn holds(&self, rel: usize, args: &[usize]) -> bool {
        self.relations[rel][tuple_index(self.size(), args)]
    }

    pub fn constant_value(&self, c: usize) -> Option<usize> {
        self.constants[c]
    }

    /// The tuples of a relation in lexicographic order.
    pub fn tuples(&self, rel: usize) -> Vec<Vec<usize>> {
        let arity = self.vocab.relations()[rel].arity;
        let n = self.size();
        let mut out = Vec::new();
        for (i, &b) in self.relations[rel].iter().enumerate() {
            if b {
                let mut t = vec![0; arity];
                let mut rest = i;
                for slot in t.iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                out.push(t);
            }
        }
        out
    }

    fn term_value(&self, t: &Term, env: &[(&str, usize)]) -> Result<usize, EvalError> {
        match t {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|&(_, e)| e)
                .ok_or_else(|| EvalError::Unassigned(v.clone())),
            Term::Const(c) => {
                let i = self.vocab.constant(c).ok_or_else(|| EvalError::UnknownConstant(c.clone()))?;
                self.constants[i].ok_or_else(|| EvalError::UnknownConstant(c.clone()))
            }
        }
    }

    fn atom_holds(&self, atom: &Atom, env: &[(&str, usize)]) -> Result<bool, EvalError> {
        match atom {
            Atom::Verum => Ok(true),
            Atom::Rel { name, args } => {
                let (r, arity) = self.vocab.relation(name).ok_or_else(|| EvalError::UnknownRelation(name.clone()))?;
                if arity != args.len() {
                    return Err(EvalError::Arity { name: name.clone(), expected: arity, found: args.len() });
                }
                let mut tuple = Vec::with_capacity(arity);
                for a in args {
                    tuple.push(self.term_value(a, env)?);
                }
                Ok(self.holds(r, &tuple))
            }
            Atom::Eq(a, b) => {
                if !self.vocab.identity() {
                    return Err(EvalError::NoIdentity);
                }
                Ok(self.term_value(a, env)? == self.term_value(b, env)?)
            }
        }
    }

    /// Whether the literal belongs to the set of literals `s` satisfies.
    pub fn satisfies_literal(&self, lit: &Literal, s: &Assignment) -> Result<bool, EvalError> {
        let env: Vec<(&str, usize)> = s.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        Ok(self.atom_holds(&lit.atom, &env)? == lit.positive)
    }

    /// Tarski's truth definition, by direct recursion on the formula.
    pub fn tarski_truth(&self, f: &Formula, s: &Assignment) -> Result<bool, EvalError> {
        let mut env: Vec<(&str, usize)> = s.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        self.truth(f, &mut env)
    }

    fn truth<'f>(&self, f: &'f Formula, env: &mut Vec<(&'f str, usize)>) -> Result<bool, EvalError> {
        match f {
            Formula::Lit(l) => Ok(self.atom_holds(&l.atom, env)? == l.positive),
            Formula::And(cs) => {
                for c in cs {
                    if !self.truth(c, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(cs) => {
                for c in cs {
                    if self.truth(c, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Forall(x, body) | Formula::Exists(x, body) => {
                let universal = matches!(f, Formula::Forall(..));
                for a in 0..self.size() {
                    env.push((x.as_str(), a));
                    let v = self.truth(body, env);
                    env.pop();
                    if v? != universal {
                        return Ok(!universal);
                    }
                }
                Ok(universal)
            }
        }
    }

    /// Truth of a formula that may contain negation anywhere.
    pub fn tarski_truth_raw(&self, f: &RawFormula, s: &Assignment) -> Result<bool, EvalError> {
        let mut env: Vec<(&str, usize)> = s.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        self.truth_raw(f, &mut env)
    }

    fn truth_raw<'f>(&self, f: &'f RawFormula, env: &mut Vec<(&'f str, usize)>) -> Result<bool, EvalError> {
        match f {
            RawFormula::Atom(a) => self.atom_holds(a, env),
            RawFormula::Not(b) => Ok(!self.truth_raw(b, env)?),
            RawFormula::And(cs) => {
                for c in cs {
                    if !self.truth_raw(c, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            RawFormula::Or(cs) => {
                for c in cs {
                    if self.truth_raw(c, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            RawFormula::Forall(x, body) | RawFormula::Exists(x, body) => {
                let universal = matches!(f, RawFormula::Forall(..));
                for a in 0..self.size() {
                    env.push((x.as_str(), a));
                    let v = self.truth_raw(body, env);
                    env.pop();
                    if v? != universal {
                        return Ok(!universal);
                    }
                }
                Ok(universal)
            }
        }
    }

    /// The structure with elements renamed: element `i` of `self` becomes
    /// element `perm[i]` of the result, which keeps the same id list.
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        let n = self.size();
        let mut out = self.clone();
        for (r, table) in self.relations.iter().enumerate() {
            let arity = self.vocab.relations()[r].arity;
            let fresh = &mut out.relations[r];
            fresh.iter_mut().for_each(|b| *b = false);
            for (i, &b) in table.iter().enumerate() {
                if b {
                    let mut rest = i;
                    let mut mapped = vec![0; arity];
                    for slot in mapped.iter_mut().rev() {
                        *slot = perm[rest % n];
                        rest /= n;
                    }
                    fresh[tuple_index(n, &mapped)] = true;
                }
            }
        }
        for c in out.constants.iter_mut() {
            *c = c.map(|e| perm[e]);
        }
        out
    }

    /// Whether `f` (element `i` to `f[i]`) is an isomorphism onto `other`.
    pub fn is_isomorphism(&self, other: &Structure, f: &[usize]) -> bool {
        self.vocab.same_symbols(&other.vocab)
            && self.size() == other.size()
            && f.len() == self.size()
            && {
                let mut seen = vec![false; other.size()];
                f.iter().all(|&b| b < other.size() && !core::mem::replace(&mut seen[b], true))
            }
            && {
                let p = self.permuted(f);
                p.relations == other.relations && p.constants == other.constants
            }
    }

    /// Brute force over all bijections.
    pub fn find_isomorphism(&self, other: &Structure) -> Option<Vec<usize>> {
        if !self.vocab.same_symbols(&other.vocab) || self.size() != other.size() {
            return None;
        }
        let mut perm: Vec<usize> = (0..self.size()).collect();
        loop {
            let p = self.permuted(&perm);
            if p.relations == other.relations && p.constants == other.constants {
                return Some(perm);
            }
            if !next_permutation(&mut perm) {
                return None;
            }
        }
    }

    /// A code shared by exactly the structures isomorphic to this one
    /// (same vocabulary assumed): the least relation encoding over all
    /// relabellings.
    pub fn canonical_code(&self) -> Vec<u8> {
        let mut perm: Vec<usize> = (0..self.size()).collect();
        let mut best: Option<Vec<u8>> = None;
        loop {
            let p = self.permuted(&perm);
            let mut code = Vec::with_capacity(1 + p.relations.iter().map(Vec::len).sum::<usize>());
            code.push(self.size() as u8);
            for t in &p.relations {
                code.extend(t.iter().map(|&b| b as u8));
            }
            code.extend(p.constants.iter().map(|c| c.map_or(u8::MAX, |e| e as u8)));
            if best.as_ref().is_none_or(|b| code < *b) {
                best = Some(code);
            }
            if !next_permutation(&mut perm) {
                return best.unwrap();
            }
        }
    }

    /// The same structure with its elements renamed to `prefix0`, `prefix1`, ...
    pub fn relabelled(&self, prefix: &str) -> Structure {
        let mut s = self.clone();
        s.domain = (0..self.size()).map(|i| format!("{prefix}{i}")).collect();
        s
    }
}

/// Advances to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Name of the order relation of [`linear_order`].
pub const ORDER: &str = "Lt";

/// The strict linear order on `0 < 1 < ... < n-1`, with identity.
pub fn linear_order(n: usize) -> Structure {
    let vocab = Vocabulary::relational([(ORDER, 2)], true).unwrap();
    let mut s = Structure::numbered(vocab, n).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            s.relations[0][tuple_index(n, &[i, j])] = true;
        }
    }
    s
}

/// A set of `n` elements over the empty vocabulary, with identity.
pub fn pure_set(n: usize) -> Structure {
    Structure::numbered(Vocabulary::empty(true), n).unwrap()
}

/// Every structure over `vocab` with domain `0..k`, for `1 <= k <= max_size`.
pub fn enumerate_structures(vocab: &Vocabulary, max_size: usize) -> Enumeration {
    Enumeration { vocab: vocab.clone(), max_size, size: 1, bits: None, consts: Vec::new() }
}

pub struct Enumeration {
    vocab: Vocabulary,
    max_size: usize,
    size: usize,
    bits: Option<Vec<bool>>,
    consts: Vec<usize>,
}

impl Iterator for Enumeration {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        loop {
            if self.size > self.max_size {
                return None;
            }
            let n = self.size;
            match &mut self.bits {
                None => {
                    let total: usize = self.vocab.relations().iter().map(|r| n.pow(r.arity as u32)).sum();
                    self.bits = Some(vec![false; total]);
                    self.consts = vec![0; self.vocab.constants().len()];
                }
                Some(bits) => {
                    if !odometer(&mut self.consts, n) && !odometer_bits(bits) {
                        self.size += 1;
                        self.bits = None;
                        continue;
                    }
                }
            }
            let bits = self.bits.as_ref().unwrap();
            let mut s = Structure::numbered(self.vocab.clone(), n).unwrap();
            let mut offset = 0;
            for t in s.relations.iter_mut() {
                let len = t.len();
                t.copy_from_slice(&bits[offset..offset + len]);
                offset += len;
            }
            for (slot, &c) in s.constants.iter_mut().zip(&self.consts) {
                *slot = Some(c);
            }
            return Some(s);
        }
    }
}

fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn odometer_bits(bits: &mut [bool]) -> bool {
    for b in bits.iter_mut() {
        *b = !*b;
        if *b {
            return true;
        }
    }
    false
}

/// One representative per isomorphism class, in first-seen order.
pub fn isomorphism_classes(structures: impl IntoIterator<Item = Structure>) -> Vec<Structure> {
    let mut seen = hashbrown::HashSet::new();
    structures.into_iter().filter(|s| seen.insert(s.canonical_code())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_nnf};

    fn p_structure() -> Structure {
        let v = Vocabulary::relational([("P", 1)], true).unwrap();
        let mut m = Structure::numbered(v, 2).unwrap();
        m.insert("P", &[0]).unwrap();
        m
    }

    fn truth(m: &Structure, text: &str) -> bool {
        m.tarski_truth(&parse_nnf(text, m.vocabulary()).unwrap(), &Assignment::new()).unwrap()
    }

    #[test]
    fn literals() {
        let m = p_structure();
        let s: Assignment = [("x".into(), 0), ("y".into(), 0)].into_iter().collect();
        let px = Literal::pos(Atom::rel("P", vec![Term::var("x")]));
        assert!(m.satisfies_literal(&px, &s).unwrap());
        assert!(!m.satisfies_literal(&px.negated(), &s).unwrap());
        assert!(m.satisfies_literal(&Literal::pos(Atom::eq(Term::var("x"), Term::var("y"))), &s).unwrap());
        let pz = Literal::pos(Atom::rel("P", vec![Term::var("z")]));
        assert_eq!(m.satisfies_literal(&pz, &s), Err(EvalError::Unassigned("z".into())));
    }

    #[test]
    fn quantifiers() {
        let m = p_structure();
        assert!(truth(&m, "exists x. P(x)"));
        assert!(!truth(&m, "forall x. P(x)"));
        assert!(truth(&m, "forall x. exists y. !(x = y)"));
        let raw = parse_formula("!(forall x. P(x))", m.vocabulary()).unwrap();
        assert!(m.tarski_truth_raw(&raw, &Assignment::new()).unwrap());
    }

    #[test]
    fn enumeration_counts() {
        let p = Vocabulary::relational([("P", 1)], true).unwrap();
        assert_eq!(enumerate_structures(&p, 1).count(), 2);
        assert_eq!(enumerate_structures(&p, 2).count(), 6);
        assert_eq!(enumerate_structures(&Vocabulary::empty(true), 3).count(), 3);
        let r = Vocabulary::relational([("R", 2)], true).unwrap();
        assert_eq!(enumerate_structures(&r, 2).count(), 2 + 16);
        let all: Vec<_> = enumerate_structures(&r, 2).collect();
        for (i, a) in all.iter().enumerate() {
            assert!(all[..i].iter().all(|b| b != a));
        }
    }

    #[test]
    fn isomorphism_class_counts() {
        let r = Vocabulary::relational([("R", 2)], true).unwrap();
        let counts: Vec<usize> =
            (1..=3).map(|k| isomorphism_classes(enumerate_structures(&r, k).filter(|s| s.size() == k)).len()).collect();
        assert_eq!(counts, [2, 10, 104]);
    }

    #[test]
    fn isomorphisms() {
        let a = linear_order(3);
        let b = a.permuted(&[2, 0, 1]);
        let f = a.find_isomorphism(&b).unwrap();
        assert!(a.is_isomorphism(&b, &f));
        assert_eq!(a.canonical_code(), b.canonical_code());
        assert!(a.find_isomorphism(&linear_order(2)).is_none());
        assert_eq!(a.tuples(0), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn builder_errors() {
        let mut m = p_structure();
        assert_eq!(m.insert_ids("P", &["2"]), Err(StructureError::UnknownElement("2".into())));
        assert!(matches!(m.insert("P", &[0, 1]), Err(StructureError::Arity { .. })));
        assert_eq!(Structure::new(Vocabulary::empty(true), vec![]), Err(StructureError::EmptyDomain));
    }
}
