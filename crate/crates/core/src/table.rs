//! Subformula occurrences of a root formula, compiled against a vocabulary.
//!
//! Node ids are dense, assigned in preorder, with the root at 0. Variables
//! are interned per table. Every node records its sorted free variables and
//! a *shape* id: two nodes share a shape id iff their subtrees are
//! structurally identical.

use alloc::string::String;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::syntax::{Atom, Formula, Literal, Term, Vocabulary};

pub type NodeId = u32;
pub type VarId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CTerm {
    Var(VarId),
    Const(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CAtom {
    Verum,
    Rel { rel: usize, args: Vec<CTerm> },
    Eq(CTerm, CTerm),
}

impl CAtom {
    pub fn terms(&self) -> impl Iterator<Item = &CTerm> {
        let (rel, pair): (&[CTerm], Option<[&CTerm; 2]>) = match self {
            CAtom::Verum => (&[], None),
            CAtom::Rel { args, .. } => (args, None),
            CAtom::Eq(a, b) => (&[], Some([a, b])),
        };
        rel.iter().chain(pair.into_iter().flatten())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CLiteral {
    pub positive: bool,
    pub atom: CAtom,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Lit(CLiteral),
    And,
    Or,
    Forall(VarId),
    Exists(VarId),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Sorted free variables of the subtree.
    pub free: Vec<VarId>,
    pub rank: usize,
    pub shape: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("the vocabulary has no identity symbol")]
    NoIdentity,
    #[error("empty conjunction or disjunction")]
    EmptyConnective,
}

type ShapeKey = (NodeKind, Vec<u32>);

#[derive(Debug, Clone)]
pub struct SubformulaTable {
    nodes: Vec<Node>,
    vars: Vec<String>,
    vocab: Vocabulary,
    shapes: HashMap<ShapeKey, u32>,
}

impl SubformulaTable {
    pub fn new(root: &Formula, vocab: &Vocabulary) -> Result<Self, TableError> {
        let mut t =
            SubformulaTable { nodes: Vec::new(), vars: Vec::new(), vocab: vocab.clone(), shapes: HashMap::new() };
        t.add(root, None)?;
        Ok(t)
    }

    fn var_id(&mut self, name: &str) -> VarId {
        match self.vars.iter().position(|v| v == name) {
            Some(i) => i as VarId,
            None => {
                self.vars.push(name.into());
                (self.vars.len() - 1) as VarId
            }
        }
    }

    fn term(&mut self, t: &Term) -> Result<CTerm, TableError> {
        Ok(match t {
            Term::Var(v) => CTerm::Var(self.var_id(v)),
            Term::Const(c) => {
                CTerm::Const(self.vocab.constant(c).ok_or_else(|| TableError::UnknownConstant(c.clone()))?)
            }
        })
    }

    fn literal(&mut self, l: &Literal) -> Result<CLiteral, TableError> {
        let atom = match &l.atom {
            Atom::Verum => CAtom::Verum,
            Atom::Rel { name, args } => {
                let (rel, arity) =
                    self.vocab.relation(name).ok_or_else(|| TableError::UnknownRelation(name.clone()))?;
                if arity != args.len() {
                    return Err(TableError::Arity { name: name.clone(), expected: arity, found: args.len() });
                }
                let args = args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?;
                CAtom::Rel { rel, args }
            }
            Atom::Eq(a, b) => {
                if !self.vocab.identity() {
                    return Err(TableError::NoIdentity);
                }
                CAtom::Eq(self.term(a)?, self.term(b)?)
            }
        };
        Ok(CLiteral { positive: l.positive, atom })
    }

    fn add(&mut self, f: &Formula, parent: Option<NodeId>) -> Result<NodeId, TableError> {
        let id = self.nodes.len() as NodeId;
        let kind = match f {
            Formula::Lit(l) => NodeKind::Lit(self.literal(l)?),
            Formula::And(cs) | Formula::Or(cs) if cs.is_empty() => return Err(TableError::EmptyConnective),
            Formula::And(_) => NodeKind::And,
            Formula::Or(_) => NodeKind::Or,
            Formula::Forall(v, _) => NodeKind::Forall(self.var_id(v)),
            Formula::Exists(v, _) => NodeKind::Exists(self.var_id(v)),
        };
        self.nodes.push(Node { kind, parent, children: Vec::new(), free: Vec::new(), rank: 0, shape: 0 });
        let children: Vec<NodeId> = match f {
            Formula::Lit(_) => Vec::new(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(|c| self.add(c, Some(id))).collect::<Result<_, _>>()?,
            Formula::Forall(_, b) | Formula::Exists(_, b) => alloc::vec![self.add(b, Some(id))?],
        };
        let node = &self.nodes[id as usize];
        let mut free: Vec<VarId> = match &node.kind {
            NodeKind::Lit(l) => {
                l.atom.terms().filter_map(|t| if let CTerm::Var(v) = t { Some(*v) } else { None }).collect()
            }
            NodeKind::Forall(x) | NodeKind::Exists(x) => {
                self.nodes[children[0] as usize].free.iter().copied().filter(|v| v != x).collect()
            }
            _ => children.iter().flat_map(|&c| self.nodes[c as usize].free.iter().copied()).collect(),
        };
        free.sort_unstable();
        free.dedup();
        let rank = match node.kind {
            NodeKind::Lit(_) => 0,
            NodeKind::Forall(_) | NodeKind::Exists(_) => 1 + self.nodes[children[0] as usize].rank,
            _ => children.iter().map(|&c| self.nodes[c as usize].rank).max().unwrap_or(0),
        };
        let key: ShapeKey = (node.kind.clone(), children.iter().map(|&c| self.nodes[c as usize].shape).collect());
        let next = self.shapes.len() as u32;
        let shape = *self.shapes.entry(key).or_insert(next);
        let node = &mut self.nodes[id as usize];
        node.children = children;
        node.free = free;
        node.rank = rank;
        node.shape = shape;
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v as usize]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name).map(|i| i as VarId)
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// True if the root has no free variables.
    pub fn is_sentence(&self) -> bool {
        self.nodes[0].free.is_empty()
    }

    /// Shape id of an arbitrary formula, if some node of this table has
    /// exactly that subtree.
    pub fn shape_of(&self, f: &Formula) -> Option<u32> {
        let kind = match f {
            Formula::Lit(l) => NodeKind::Lit(self.lookup_literal(l)?),
            Formula::And(_) => NodeKind::And,
            Formula::Or(_) => NodeKind::Or,
            Formula::Forall(v, _) => NodeKind::Forall(self.var_by_name(v)?),
            Formula::Exists(v, _) => NodeKind::Exists(self.var_by_name(v)?),
        };
        let children: Vec<u32> = match f {
            Formula::Lit(_) => Vec::new(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(|c| self.shape_of(c)).collect::<Option<_>>()?,
            Formula::Forall(_, b) | Formula::Exists(_, b) => alloc::vec![self.shape_of(b)?],
        };
        self.shapes.get(&(kind, children)).copied()
    }

    fn lookup_term(&self, t: &Term) -> Option<CTerm> {
        match t {
            Term::Var(v) => self.var_by_name(v).map(CTerm::Var),
            Term::Const(c) => self.vocab.constant(c).map(CTerm::Const),
        }
    }

    fn lookup_literal(&self, l: &Literal) -> Option<CLiteral> {
        let atom = match &l.atom {
            Atom::Verum => CAtom::Verum,
            Atom::Rel { name, args } => {
                let (rel, _) = self.vocab.relation(name)?;
                CAtom::Rel { rel, args: args.iter().map(|a| self.lookup_term(a)).collect::<Option<_>>()? }
            }
            Atom::Eq(a, b) => CAtom::Eq(self.lookup_term(a)?, self.lookup_term(b)?),
        };
        Some(CLiteral { positive: l.positive, atom })
    }

    /// Rebuilds the subformula rooted at `id`.
    pub fn formula_at(&self, id: NodeId) -> Formula {
        let node = self.node(id);
        let kids = || node.children.iter().map(|&c| self.formula_at(c)).collect();
        match &node.kind {
            NodeKind::Lit(l) => Formula::Lit(self.literal_at(l)),
            NodeKind::And => Formula::And(kids()),
            NodeKind::Or => Formula::Or(kids()),
            NodeKind::Forall(v) => Formula::forall(self.var_name(*v), self.formula_at(node.children[0])),
            NodeKind::Exists(v) => Formula::exists(self.var_name(*v), self.formula_at(node.children[0])),
        }
    }

    pub fn literal_at(&self, l: &CLiteral) -> Literal {
        let term = |t: &CTerm| match t {
            CTerm::Var(v) => Term::Var(self.var_name(*v).into()),
            CTerm::Const(c) => Term::Const(self.vocab.constants()[*c].clone()),
        };
        let atom = match &l.atom {
            CAtom::Verum => Atom::Verum,
            CAtom::Rel { rel, args } => {
                Atom::rel(self.vocab.relations()[*rel].name.clone(), args.iter().map(term).collect())
            }
            CAtom::Eq(a, b) => Atom::Eq(term(a), term(b)),
        };
        Literal { positive: l.positive, atom }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_nnf;

    #[test]
    fn preorder_ids_and_parents() {
        let v = Vocabulary::relational([("P", 1), ("R", 2)], true).unwrap();
        let f = parse_nnf("forall x. (P(x) | exists y. R(x, y))", &v).unwrap();
        let t = SubformulaTable::new(&f, &v).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.node(0).parent.is_none());
        for id in 1..t.len() as NodeId {
            let p = t.node(id).parent.unwrap();
            assert!(p < id);
            assert_eq!(t.node(p).children.iter().filter(|&&c| c == id).count(), 1);
        }
        assert!(t.is_sentence());
        let ex = t.nodes().iter().position(|n| matches!(n.kind, NodeKind::Exists(_))).unwrap();
        assert_eq!(t.node(ex as NodeId).free, alloc::vec![t.var_by_name("x").unwrap()]);
        assert_eq!(t.node(0).rank, 2);
        assert_eq!(t.formula_at(0), f);
    }

    #[test]
    fn shapes_identify_equal_subtrees() {
        let v = Vocabulary::relational([("P", 1)], false).unwrap();
        let f = parse_nnf("(exists x. P(x)) & (exists x. P(x)) & forall x. P(x)", &v).unwrap();
        let t = SubformulaTable::new(&f, &v).unwrap();
        let kids = &t.node(0).children;
        assert_eq!(t.node(kids[0]).shape, t.node(kids[1]).shape);
        assert_ne!(t.node(kids[0]).shape, t.node(kids[2]).shape);
        let probe = parse_nnf("exists x. P(x)", &v).unwrap();
        assert_eq!(t.shape_of(&probe), Some(t.node(kids[0]).shape));
        assert_eq!(t.shape_of(&parse_nnf("exists x. !P(x)", &v).unwrap()), None);
    }

    #[test]
    fn compile_errors() {
        let v = Vocabulary::relational([("P", 1)], false).unwrap();
        let f = Formula::lit(true, Atom::rel("Q", alloc::vec![]));
        assert_eq!(SubformulaTable::new(&f, &v).unwrap_err(), TableError::UnknownRelation("Q".into()));
        let g = Formula::lit(true, Atom::Eq(Term::var("x"), Term::var("y")));
        assert_eq!(SubformulaTable::new(&g, &v).unwrap_err(), TableError::NoIdentity);
        assert_eq!(SubformulaTable::new(&Formula::And(alloc::vec![]), &v).unwrap_err(), TableError::EmptyConnective);
    }
}
