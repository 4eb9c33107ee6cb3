//! Hintikka formulas ψ^{m,n}_{M,s}, the strategies that go with them, and
//! distinguishing sentences.
//!
//! The variables are `x0, x1, ...`. At rank 0 the formula is the
//! conjunction of every literal over `x0..x{n-1}` that `s` satisfies:
//! relations in vocabulary order with argument tuples in lexicographic
//! order, then equalities `xi = xj` for `i < j`. At rank m+1 it is
//!
//! ```text
//! (forall xn. OR_a ψ^{m,n+1}_{s a}) & (AND_a exists xn. ψ^{m,n+1}_{s a})
//! ```
//!
//! Identical disjuncts and conjuncts are merged and one-element
//! conjunctions and disjunctions are replaced by their element. An empty
//! literal list becomes `TRUE`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::ef::{EfError, EfGame, EfMove, EfPosition, Side};
use crate::eval::{literal_holds, EvalGame, EvalMove, EvalPosition};
use crate::kernel::{solve, Game, Player, Responder, StrategyError, Turn};
use crate::oracle::Dag;
use crate::structure::{Assignment, Structure};
use crate::syntax::{Atom, Formula, Literal, Term};
use crate::table::{NodeId, NodeKind, SubformulaTable, VarId};

pub fn var_name(i: usize) -> String {
    format!("x{i}")
}

/// Memoized builder of ψ^{m,n}_{M,s}.
pub struct HintikkaBuilder {
    structure: Arc<Structure>,
    memo: HashMap<(usize, Vec<usize>), Formula>,
}

fn dedup(items: Vec<Formula>) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::with_capacity(items.len());
    for f in items {
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

fn conj(mut items: Vec<Formula>) -> Formula {
    match items.len() {
        0 => Formula::verum(),
        1 => items.pop().unwrap(),
        _ => Formula::And(items),
    }
}

fn disj(mut items: Vec<Formula>) -> Formula {
    if items.len() == 1 {
        items.pop().unwrap()
    } else {
        Formula::Or(items)
    }
}

impl HintikkaBuilder {
    pub fn new(structure: Arc<Structure>) -> Self {
        HintikkaBuilder { structure, memo: HashMap::new() }
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    /// The literals over `x0..x{n-1}` satisfied by `s`, in the fixed order.
    pub fn literals(&self, s: &[usize]) -> Vec<Literal> {
        let m = &self.structure;
        let n = s.len();
        let mut out = Vec::new();
        for (r, sym) in m.vocabulary().relations().iter().enumerate() {
            let k = sym.arity;
            for code in 0..n.pow(k as u32) {
                let mut idx = alloc::vec![0usize; k];
                let mut rest = code;
                for slot in idx.iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                let tuple: Vec<usize> = idx.iter().map(|&i| s[i]).collect();
                let atom = Atom::rel(sym.name.clone(), idx.iter().map(|&i| Term::var(var_name(i))).collect());
                out.push(Literal { positive: m.holds(r, &tuple), atom });
            }
        }
        if m.vocabulary().identity() {
            for i in 0..n {
                for j in i + 1..n {
                    let atom = Atom::eq(Term::var(var_name(i)), Term::var(var_name(j)));
                    out.push(Literal { positive: s[i] == s[j], atom });
                }
            }
        }
        out
    }

    /// ψ^{m,n}_{M,s} with n = `s.len()`.
    pub fn formula(&mut self, m: usize, s: &[usize]) -> Formula {
        let key = (m, s.to_vec());
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let f = if m == 0 {
            conj(self.literals(s).into_iter().map(Formula::Lit).collect())
        } else {
            let x = var_name(s.len());
            let mut ext = s.to_vec();
            ext.push(0);
            let mut children = Vec::new();
            for a in 0..self.structure.size() {
                *ext.last_mut().unwrap() = a;
                children.push(self.formula(m - 1, &ext));
            }
            let children = dedup(children);
            let forall = Formula::forall(x.clone(), disj(children.clone()));
            let exists = conj(children.into_iter().map(|c| Formula::exists(x.clone(), c)).collect());
            Formula::And(alloc::vec![forall, exists])
        };
        self.memo.insert(key, f.clone());
        f
    }
}

/// ψ^{m,n}_{M,s}.
pub fn hintikka_formula(m: &Arc<Structure>, rank: usize, s: &[usize]) -> Formula {
    HintikkaBuilder::new(m.clone()).formula(rank, s)
}

/// ψ^{m,0}_{M,∅} compiled, with the shape id of every ψ^{m-n,n}_{M,s}.
pub struct HintikkaIndex {
    structure: Arc<Structure>,
    rank: usize,
    formula: Formula,
    table: Arc<SubformulaTable>,
    depth: Vec<usize>,
    xs: Vec<Option<VarId>>,
    shapes: HashMap<Vec<usize>, u32>,
}

impl HintikkaIndex {
    pub fn new(structure: Arc<Structure>, rank: usize) -> Self {
        let mut builder = HintikkaBuilder::new(structure.clone());
        let formula = builder.formula(rank, &[]);
        let table =
            Arc::new(SubformulaTable::new(&formula, structure.vocabulary()).expect("built over the vocabulary"));
        let mut depth = alloc::vec![0; table.len()];
        for id in 1..table.len() {
            let p = table.node(id as NodeId).parent.unwrap() as usize;
            let q = matches!(table.node(p as NodeId).kind, NodeKind::Forall(_) | NodeKind::Exists(_));
            depth[id] = depth[p] + q as usize;
        }
        let xs = (0..=rank).map(|i| table.var_by_name(&var_name(i))).collect();
        let mut shapes = HashMap::new();
        let mut layer: Vec<Vec<usize>> = alloc::vec![Vec::new()];
        for n in 0..=rank {
            let mut next = Vec::new();
            for s in layer {
                let f = builder.formula(rank - n, &s);
                shapes.insert(s.clone(), table.shape_of(&f).expect("every type occurs in the sentence"));
                if n < rank {
                    for a in 0..structure.size() {
                        let mut t = s.clone();
                        t.push(a);
                        next.push(t);
                    }
                }
            }
            layer = next;
        }
        HintikkaIndex { structure, rank, formula, table, depth, xs, shapes }
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn table(&self) -> &Arc<SubformulaTable> {
        &self.table
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Shape id of ψ^{m-n,n}_{M,s}, n = `s.len()`.
    pub fn shape(&self, s: &[usize]) -> u32 {
        self.shapes[s]
    }

    /// Number of quantifiers above `node`.
    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node as usize]
    }

    /// Values of `x0..x{q-1}` at `p`; variables not free there read as 0.
    fn values(&self, p: &EvalPosition, q: usize) -> Vec<usize> {
        (0..q).map(|i| self.xs[i].and_then(|v| p.value(v)).unwrap_or(0)).collect()
    }

    /// Some element `a` with ψ_{s a} of the given shape.
    fn element_with_shape(&self, s: &[usize], shape: u32) -> Option<usize> {
        let mut t = s.to_vec();
        t.push(0);
        (0..self.structure.size()).find(|&a| {
            *t.last_mut().unwrap() = a;
            self.shapes.get(&t) == Some(&shape)
        })
    }

    fn check_table(&self, game: &EvalGame) -> Result<(), StrategyError> {
        if game.table().len() != self.table.len() {
            return Err(StrategyError::Other("game is not played on this Hintikka sentence".into()));
        }
        Ok(())
    }
}

/// Eloise's mirroring strategy in G(M, ψ^{m,0}_{M,∅}).
#[derive(Clone)]
pub struct XiEloise {
    index: Arc<HintikkaIndex>,
}

/// ψ^{m,0}_{M,∅} together with Eloise's strategy on M.
pub fn xi_e(m: Arc<Structure>, rank: usize) -> (Formula, XiEloise) {
    let index = Arc::new(HintikkaIndex::new(m, rank));
    (index.formula.clone(), XiEloise { index })
}

impl XiEloise {
    pub fn from_index(index: Arc<HintikkaIndex>) -> Self {
        XiEloise { index }
    }
}

impl Responder<EvalGame> for XiEloise {
    fn choose(&mut self, game: &EvalGame, at: &EvalPosition) -> Result<EvalMove, StrategyError> {
        let ix = &self.index;
        ix.check_table(game)?;
        let node = ix.table.node(at.node);
        let q = ix.depth(at.node);
        let s = ix.values(at, q);
        match node.kind {
            NodeKind::Or => {
                let target = ix.shape(&s);
                node.children
                    .iter()
                    .position(|&c| ix.table.node(c).shape == target)
                    .map(EvalMove::Child)
                    .ok_or_else(|| StrategyError::Invariant(format!("no disjunct for {s:?}")))
            }
            NodeKind::Exists(_) => {
                let body = ix.table.node(node.children[0]).shape;
                ix.element_with_shape(&s, body)
                    .map(EvalMove::Element)
                    .ok_or_else(|| StrategyError::Invariant(format!("no witness for {s:?}")))
            }
            _ => Err(StrategyError::Other("not Eloise's turn".into())),
        }
    }

    fn fork(&self) -> Box<dyn Responder<EvalGame>> {
        Box::new(self.clone())
    }
}

/// Abelard's strategy in G(N, ψ^{m,0}_{M,∅}) driven by an Abelard
/// strategy τ for EF_m(M, N).
pub struct XiAbelard {
    index: Arc<HintikkaIndex>,
    ef: Arc<EfGame>,
    ef_pos: EfPosition,
    tau: Box<dyn Responder<EfGame>>,
    pick: Option<(Side, usize)>,
}

pub fn xi_a(
    tau: Box<dyn Responder<EfGame>>,
    index: Arc<HintikkaIndex>,
    n: Arc<Structure>,
) -> Result<XiAbelard, EfError> {
    let ef = Arc::new(EfGame::new(index.structure.clone(), n, index.rank)?);
    let ef_pos = ef.initial();
    Ok(XiAbelard { index, ef, ef_pos, tau, pick: None })
}

impl XiAbelard {
    fn ef_live(&self) -> bool {
        self.ef.turn(&self.ef_pos) == Turn::To(Player::Abelard)
    }

    fn left_values(&self) -> Vec<usize> {
        self.ef_pos.pairs.iter().map(|&(a, _)| a).collect()
    }

    fn ef_reply(&mut self, side: Side, e: usize) {
        let mv = EfMove::Reply(side, e);
        self.tau.observe(&self.ef, &self.ef_pos, &mv);
        self.ef_pos = self.ef.apply(&self.ef_pos, &mv);
        self.pick = None;
    }

    /// The N-side of the EF pairing must agree with the N-game assignment,
    /// and at the head of each ψ^{i,n} the M-side must name its type.
    fn check_pairing(&self, at: &EvalPosition) -> Result<(), StrategyError> {
        let ix = &self.index;
        if self.ef.turn(&self.ef_pos) == Turn::Over(Player::Abelard) {
            return Ok(());
        }
        for (j, &(_, b)) in self.ef_pos.pairs.iter().enumerate() {
            if let Some(v) = ix.xs[j].and_then(|x| at.value(x)) {
                if v != b {
                    return Err(StrategyError::Invariant(format!("x{j} is {v} in the game but {b} in the pairing")));
                }
            }
        }
        let q = ix.depth(at.node);
        if q == self.ef_pos.pairs.len()
            && self.pick.is_none()
            && ix.table.node(at.node).shape != ix.shape(&self.left_values())
        {
            return Err(StrategyError::Invariant("position is not the Hintikka formula of the pairing".into()));
        }
        Ok(())
    }
}

impl Responder<EvalGame> for XiAbelard {
    fn choose(&mut self, game: &EvalGame, at: &EvalPosition) -> Result<EvalMove, StrategyError> {
        self.index.check_table(game)?;
        self.check_pairing(at)?;
        let ix = self.index.clone();
        let node = ix.table.node(at.node);
        match node.kind {
            NodeKind::And if node.rank == 0 => {
                let unsatisfied = node.children.iter().position(|&c| match &ix.table.node(c).kind {
                    NodeKind::Lit(l) => !literal_holds(game.structure(), l, |v| at.value(v).unwrap_or(0)),
                    _ => false,
                });
                Ok(EvalMove::Child(unsatisfied.unwrap_or(0)))
            }
            NodeKind::And if matches!(ix.table.node(node.children[0]).kind, NodeKind::Forall(_)) => {
                if !self.ef_live() {
                    return Ok(EvalMove::Child(0));
                }
                let mv = self.tau.choose(&self.ef, &self.ef_pos)?;
                let EfMove::Pick(side, e) = mv else {
                    return Err(StrategyError::Other("EF strategy answered out of turn".into()));
                };
                self.tau.observe(&self.ef, &self.ef_pos, &mv);
                self.ef_pos = self.ef.apply(&self.ef_pos, &mv);
                self.pick = Some((side, e));
                Ok(EvalMove::Child(if side == Side::Right { 0 } else { 1 }))
            }
            NodeKind::And => {
                let Some((Side::Left, a)) = self.pick else {
                    return Ok(EvalMove::Child(0));
                };
                let mut s = self.left_values();
                s.push(a);
                let target = ix.shape(&s);
                node.children
                    .iter()
                    .position(|&c| ix.table.node(ix.table.node(c).children[0]).shape == target)
                    .map(EvalMove::Child)
                    .ok_or_else(|| StrategyError::Invariant(format!("no existential conjunct for {s:?}")))
            }
            NodeKind::Forall(_) => match self.pick {
                Some((Side::Right, b)) => Ok(EvalMove::Element(b)),
                _ => Ok(EvalMove::Element(0)),
            },
            _ => Err(StrategyError::Other("not Abelard's turn".into())),
        }
    }

    fn observe(&mut self, _game: &EvalGame, from: &EvalPosition, mv: &EvalMove) {
        let ix = self.index.clone();
        let node = ix.table.node(from.node);
        match (self.pick, &node.kind, *mv) {
            (Some((Side::Right, _)), NodeKind::Or, EvalMove::Child(j)) => {
                let shape = ix.table.node(node.children[j]).shape;
                if let Some(a) = ix.element_with_shape(&self.left_values(), shape) {
                    self.ef_reply(Side::Left, a);
                }
            }
            (Some((Side::Right, _)), NodeKind::Forall(_), EvalMove::Element(_)) => {
                let body = ix.table.node(node.children[0]);
                if !matches!(body.kind, NodeKind::Or) {
                    if let Some(a) = ix.element_with_shape(&self.left_values(), body.shape) {
                        self.ef_reply(Side::Left, a);
                    }
                }
            }
            (Some((Side::Left, _)), NodeKind::Exists(_), EvalMove::Element(b)) => self.ef_reply(Side::Right, b),
            _ => {}
        }
    }

    fn fork(&self) -> Box<dyn Responder<EvalGame>> {
        Box::new(XiAbelard {
            index: self.index.clone(),
            ef: self.ef.clone(),
            ef_pos: self.ef_pos.clone(),
            tau: self.tau.fork(),
            pick: self.pick,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistinguishError {
    #[error("{0}")]
    Ef(#[from] EfError),
    #[error("the Hintikka sentence fails the truth check: {0}")]
    Oracle(String),
}

/// ψ^{m,0}_{M,∅} if Abelard wins EF_m(M, N), checked to hold in M and fail
/// in N; `None` if Eloise wins.
pub fn distinguishing_sentence(
    m: Arc<Structure>,
    n: Arc<Structure>,
    rank: usize,
) -> Result<Option<Formula>, DistinguishError> {
    let game = EfGame::new(m.clone(), n.clone(), rank)?;
    let winner = match solve(&game, None) {
        Ok(sol) => sol.winner,
        Err(e) => unreachable!("unbounded solve of a finite game: {e}"),
    };
    if winner == Player::Eloise {
        return Ok(None);
    }
    let phi = hintikka_formula(&m, rank, &[]);
    let dag = Dag::new(&phi, m.vocabulary()).map_err(|e| DistinguishError::Oracle(format!("{e}")))?;
    let empty = Assignment::new();
    let in_m = dag.truth(&m, &empty).map_err(|e| DistinguishError::Oracle(format!("{e}")))?;
    let in_n = dag.truth(&n, &empty).map_err(|e| DistinguishError::Oracle(format!("{e}")))?;
    if !in_m || in_n {
        return Err(DistinguishError::Oracle(format!("true in left: {in_m}, true in right: {in_n}")));
    }
    Ok(Some(phi))
}
