//! The evaluation game G(M, φ).
//!
//! A position is a subformula together with an assignment restricted to
//! that subformula's free variables. Key strings have the form
//! `<node>|x=a,y=b` with pairs sorted by variable name and elements given
//! by their ids.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::kernel::{solve, Game, Player, Turn};
use crate::structure::{Assignment, Structure};
use crate::syntax::Formula;
use crate::table::{CAtom, CLiteral, CTerm, NodeId, NodeKind, SubformulaTable, TableError, VarId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalGameError {
    #[error("formula has free variables: {0}")]
    NotSentence(String),
    #[error("formula and structure have different vocabularies")]
    VocabularyMismatch,
    #[error("{0}")]
    Table(#[from] TableError),
    #[error("constant `{0}` is not interpreted")]
    Uninterpreted(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvalPosition {
    pub node: NodeId,
    /// Sorted by variable, covering exactly the free variables of `node`.
    pub env: Vec<(VarId, usize)>,
}

impl EvalPosition {
    pub fn value(&self, v: VarId) -> Option<usize> {
        self.env.iter().find(|(x, _)| *x == v).map(|&(_, a)| a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMove {
    Child(usize),
    Element(usize),
}

/// Truth of a compiled literal under a variable lookup.
pub fn literal_holds(m: &Structure, lit: &CLiteral, value: impl Fn(VarId) -> usize) -> bool {
    let term = |t: &CTerm| match *t {
        CTerm::Var(v) => value(v),
        CTerm::Const(c) => m.constant_value(c).expect("constants checked at construction"),
    };
    let holds = match &lit.atom {
        CAtom::Verum => true,
        CAtom::Rel { rel, args } => {
            let mut tuple = [0usize; 8];
            if args.len() <= tuple.len() {
                for (slot, a) in tuple.iter_mut().zip(args) {
                    *slot = term(a);
                }
                m.holds(*rel, &tuple[..args.len()])
            } else {
                m.holds(*rel, &args.iter().map(term).collect::<Vec<_>>())
            }
        }
        CAtom::Eq(a, b) => term(a) == term(b),
    };
    holds == lit.positive
}

#[derive(Debug, Clone)]
pub struct EvalGame {
    structure: Arc<Structure>,
    table: Arc<SubformulaTable>,
    start: EvalPosition,
}

impl EvalGame {
    /// G(M, φ) for a sentence φ.
    pub fn new(m: Arc<Structure>, phi: &Formula) -> Result<Self, EvalGameError> {
        let table = Arc::new(SubformulaTable::new(phi, m.vocabulary())?);
        Self::with_table(m, table)
    }

    /// Shares an already compiled sentence.
    pub fn with_table(m: Arc<Structure>, table: Arc<SubformulaTable>) -> Result<Self, EvalGameError> {
        if !table.is_sentence() {
            let names: Vec<&str> = table.node(0).free.iter().map(|&v| table.var_name(v)).collect();
            return Err(EvalGameError::NotSentence(names.join(", ")));
        }
        Self::with_assignment(m, table, &Assignment::new())
    }

    /// The game on a possibly open root formula, started from `s`, which
    /// must cover the root's free variables.
    pub fn with_assignment(
        m: Arc<Structure>,
        table: Arc<SubformulaTable>,
        s: &Assignment,
    ) -> Result<Self, EvalGameError> {
        if !table.vocabulary().same_symbols(m.vocabulary()) {
            return Err(EvalGameError::VocabularyMismatch);
        }
        if let Some(c) = (0..m.vocabulary().constants().len()).find(|&c| m.constant_value(c).is_none()) {
            return Err(EvalGameError::Uninterpreted(m.vocabulary().constants()[c].clone()));
        }
        let mut env = Vec::new();
        for &v in &table.node(0).free {
            match s.get(table.var_name(v)) {
                Some(&a) if a < m.size() => env.push((v, a)),
                _ => return Err(EvalGameError::NotSentence(table.var_name(v).into())),
            }
        }
        Ok(EvalGame { structure: m, table, start: EvalPosition { node: 0, env } })
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn table(&self) -> &Arc<SubformulaTable> {
        &self.table
    }

    fn restrict(&self, node: NodeId, env: impl Iterator<Item = (VarId, usize)>) -> Vec<(VarId, usize)> {
        let free = &self.table.node(node).free;
        let mut out: Vec<(VarId, usize)> = env.filter(|(v, _)| free.binary_search(v).is_ok()).collect();
        out.sort_unstable();
        out
    }

    /// The position at `node` under `env`, with dead bindings dropped.
    pub fn position(&self, node: NodeId, env: &[(VarId, usize)]) -> EvalPosition {
        EvalPosition { node, env: self.restrict(node, env.iter().copied()) }
    }

    /// Winner at a literal position.
    pub fn literal_winner(&self, p: &EvalPosition) -> Option<Player> {
        match &self.table.node(p.node).kind {
            NodeKind::Lit(l) => {
                Some(if literal_holds(&self.structure, l, |v| p.value(v).expect("free variable bound")) {
                    Player::Eloise
                } else {
                    Player::Abelard
                })
            }
            _ => None,
        }
    }
}

impl Game for EvalGame {
    type Position = EvalPosition;
    type Move = EvalMove;
    type Key = EvalPosition;

    fn initial(&self) -> EvalPosition {
        self.start.clone()
    }

    fn turn(&self, p: &EvalPosition) -> Turn {
        match &self.table.node(p.node).kind {
            NodeKind::Lit(_) => Turn::Over(self.literal_winner(p).unwrap()),
            NodeKind::And | NodeKind::Forall(_) => Turn::To(Player::Abelard),
            NodeKind::Or | NodeKind::Exists(_) => Turn::To(Player::Eloise),
        }
    }

    fn legal_moves(&self, p: &EvalPosition) -> Vec<EvalMove> {
        let node = self.table.node(p.node);
        match node.kind {
            NodeKind::Lit(_) => Vec::new(),
            NodeKind::And | NodeKind::Or => (0..node.children.len()).map(EvalMove::Child).collect(),
            NodeKind::Forall(_) | NodeKind::Exists(_) => (0..self.structure.size()).map(EvalMove::Element).collect(),
        }
    }

    fn apply(&self, p: &EvalPosition, m: &EvalMove) -> EvalPosition {
        let node = self.table.node(p.node);
        match (*m, &node.kind) {
            (EvalMove::Child(i), NodeKind::And | NodeKind::Or) => {
                let c = node.children[i];
                EvalPosition { node: c, env: self.restrict(c, p.env.iter().copied()) }
            }
            (EvalMove::Element(a), &NodeKind::Forall(x) | &NodeKind::Exists(x)) => {
                let c = node.children[0];
                let env = p.env.iter().copied().filter(|(v, _)| *v != x).chain(core::iter::once((x, a)));
                EvalPosition { node: c, env: self.restrict(c, env) }
            }
            _ => panic!("move {m:?} does not fit node {}", p.node),
        }
    }

    fn key(&self, p: &EvalPosition) -> EvalPosition {
        p.clone()
    }

    fn key_string(&self, p: &EvalPosition) -> String {
        let mut pairs: Vec<(&str, &str)> =
            p.env.iter().map(|&(v, a)| (self.table.var_name(v), self.structure.element_id(a))).collect();
        pairs.sort_unstable();
        let body: Vec<String> = pairs.iter().map(|(v, a)| format!("{v}={a}")).collect();
        format!("{}|{}", p.node, body.join(","))
    }

    fn move_string(&self, m: &EvalMove) -> String {
        match *m {
            EvalMove::Child(i) => format!("child:{i}"),
            EvalMove::Element(a) => format!("elem:{}", self.structure.element_id(a)),
        }
    }
}

/// φ is true in M iff Eloise wins G(M, φ).
pub fn is_true(m: Arc<Structure>, phi: &Formula) -> Result<bool, EvalGameError> {
    let game = EvalGame::new(m, phi)?;
    let winner = match solve(&game, None) {
        Ok(sol) => sol.winner,
        Err(e) => unreachable!("unbounded solve of a finite game: {e}"),
    };
    Ok(winner == Player::Eloise)
}
