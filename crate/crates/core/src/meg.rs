//! The model existence game MEG(φ) under a finite budget.
//!
//! A position is a finite set of pairs (subformula, C-assignment), where
//! C-assignments map variables to witness constants `c0, c1, ...`. Abelard
//! picks an unfulfilled obligation of some pair; for disjunctions and
//! existentials Eloise supplies the choice. Abelard wins as soon as the set
//! holds a ground atom with both signs. When no obligation is left the set
//! is saturated and Eloise wins; a play cut off by the step bound is also
//! hers.
//!
//! Pair strings are `<node>|x=c0,y=c1` with variables sorted by name;
//! position keys are the sorted pair strings joined by `;`, followed by
//! `#ask=<kind>:<pair>` while Eloise owes an answer.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::kernel::{Game, Player, PositionalStrategy, Responder, SolveError, Solver, StrategyError, Turn};
use crate::structure::Structure;
use crate::syntax::{Formula, Vocabulary};
use crate::table::{CAtom, CTerm, NodeId, NodeKind, SubformulaTable, TableError, VarId};

pub type Const = u8;

/// Most witness constants a budget may allow.
pub const MAX_CONSTS: usize = 64;

pub fn const_name(c: Const) -> String {
    format!("c{c}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Budget {
    pub max_consts: usize,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MegError {
    #[error("formula has free variables")]
    NotSentence,
    #[error("the model existence game needs a formula without identity")]
    Identity,
    #[error("the model existence game needs a relational vocabulary")]
    Constants,
    #[error("budget must allow between 1 and {MAX_CONSTS} constants and at least one step")]
    Budget,
    #[error("{0}")]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MegPair {
    pub node: NodeId,
    /// Sorted by variable, covering exactly the free variables of `node`.
    pub env: Vec<(VarId, Const)>,
}

impl MegPair {
    pub fn value(&self, v: VarId) -> Option<Const> {
        self.env.iter().find(|(x, _)| *x == v).map(|&(_, c)| c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ask {
    Disj(MegPair),
    Exists(MegPair),
}

impl Ask {
    pub fn pair(&self) -> &MegPair {
        match self {
            Ask::Disj(p) | Ask::Exists(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MegMove {
    /// Abelard adds a conjunct of a conjunction pair.
    Conj(MegPair, usize),
    /// Abelard instantiates a universal pair at a constant.
    Univ(MegPair, Const),
    /// Abelard asks Eloise for a disjunct.
    AskDisj(MegPair),
    /// Abelard asks Eloise for a witness.
    AskExists(MegPair),
    ChooseChild(usize),
    ChooseConst(Const),
}

type GroundAtom = (usize, Vec<Const>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MegPosition {
    pub pairs: BTreeSet<MegPair>,
    pub pending: Option<Ask>,
    pub steps: usize,
    /// Bit `i` set iff `c_i` occurs in some pair.
    pub used: u64,
    pub contradiction: Option<(MegPair, MegPair)>,
    ground: BTreeMap<GroundAtom, (bool, MegPair)>,
}

impl MegPosition {
    pub fn constants_used(&self) -> impl Iterator<Item = Const> + '_ {
        (0..64u8).filter(move |&c| self.used >> c & 1 == 1)
    }

    /// Constants a universal pair must be instantiated at: those used, and c0.
    pub fn instantiation_set(&self) -> u64 {
        self.used | 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MegKey {
    pairs: BTreeSet<MegPair>,
    pending: Option<Ask>,
    steps: usize,
}

#[derive(Debug, Clone)]
pub struct MegGame {
    table: Arc<SubformulaTable>,
    budget: Budget,
}

impl MegGame {
    pub fn new(phi: &Formula, vocab: &Vocabulary, budget: Budget) -> Result<Self, MegError> {
        if !vocab.is_relational() {
            return Err(MegError::Constants);
        }
        if phi.uses_identity() {
            return Err(MegError::Identity);
        }
        if budget.max_consts == 0 || budget.max_consts > MAX_CONSTS || budget.max_steps == 0 {
            return Err(MegError::Budget);
        }
        let table = SubformulaTable::new(phi, vocab)?;
        if !table.is_sentence() {
            return Err(MegError::NotSentence);
        }
        Ok(MegGame { table: Arc::new(table), budget })
    }

    pub fn table(&self) -> &Arc<SubformulaTable> {
        &self.table
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn root(&self) -> MegPair {
        MegPair { node: 0, env: Vec::new() }
    }

    fn restrict(&self, node: NodeId, env: impl Iterator<Item = (VarId, Const)>) -> Vec<(VarId, Const)> {
        let free = &self.table.node(node).free;
        let mut out: Vec<_> = env.filter(|(v, _)| free.binary_search(v).is_ok()).collect();
        out.sort_unstable();
        out
    }

    /// The pair for child `i` of a conjunction or disjunction pair.
    pub fn child_pair(&self, p: &MegPair, i: usize) -> MegPair {
        let c = self.table.node(p.node).children[i];
        MegPair { node: c, env: self.restrict(c, p.env.iter().copied()) }
    }

    /// The body of a quantifier pair with its variable sent to `c`.
    pub fn instance(&self, p: &MegPair, c: Const) -> MegPair {
        let node = self.table.node(p.node);
        let x = match node.kind {
            NodeKind::Forall(x) | NodeKind::Exists(x) => x,
            _ => panic!("pair {} is not quantified", p.node),
        };
        let body = node.children[0];
        let env = p.env.iter().copied().filter(|(v, _)| *v != x).chain(core::iter::once((x, c)));
        MegPair { node: body, env: self.restrict(body, env) }
    }

    fn ground(&self, p: &MegPair) -> Option<(bool, Option<GroundAtom>)> {
        let NodeKind::Lit(l) = &self.table.node(p.node).kind else {
            return None;
        };
        let atom = match &l.atom {
            CAtom::Verum => None,
            CAtom::Rel { rel, args } => Some((
                *rel,
                args.iter()
                    .map(|t| match *t {
                        CTerm::Var(v) => p.value(v).expect("free variable bound"),
                        CTerm::Const(_) => unreachable!("relational vocabulary"),
                    })
                    .collect(),
            )),
            CAtom::Eq(..) => unreachable!("identity rejected at construction"),
        };
        Some((l.positive, atom))
    }

    /// Adds a pair, recording the constants it uses and any contradiction.
    pub fn add_pair(&self, pos: &mut MegPosition, pair: MegPair) {
        if pos.pairs.contains(&pair) {
            return;
        }
        for &(_, c) in &pair.env {
            pos.used |= 1 << c;
        }
        match self.ground(&pair) {
            Some((false, None)) if pos.contradiction.is_none() => {
                pos.contradiction = Some((pair.clone(), pair.clone()))
            }
            Some((sign, Some(atom))) => match pos.ground.get(&atom) {
                Some((other, q)) if *other != sign => {
                    if pos.contradiction.is_none() {
                        pos.contradiction = Some((q.clone(), pair.clone()));
                    }
                }
                Some(_) => {}
                None => {
                    pos.ground.insert(atom, (sign, pair.clone()));
                }
            },
            _ => {}
        }
        pos.pairs.insert(pair);
    }

    pub fn is_fulfilled(&self, pos: &MegPosition, task: &Task) -> bool {
        match task {
            Task::Conj(p, i) => pos.pairs.contains(&self.child_pair(p, *i)),
            Task::Univ(p, c) => pos.pairs.contains(&self.instance(p, *c)),
            Task::Disj(p) => {
                (0..self.table.node(p.node).children.len()).any(|i| pos.pairs.contains(&self.child_pair(p, i)))
            }
            Task::Exists(p) => (0..self.budget.max_consts as Const).any(|c| pos.pairs.contains(&self.instance(p, c))),
        }
    }

    /// Every obligation of `p`, in a fixed order, with universal pairs
    /// instantiated at the constants of `consts`.
    pub fn tasks(&self, p: &MegPair, consts: u64) -> Vec<Task> {
        let node = self.table.node(p.node);
        match node.kind {
            NodeKind::Lit(_) => Vec::new(),
            NodeKind::And => (0..node.children.len()).map(|i| Task::Conj(p.clone(), i)).collect(),
            NodeKind::Or => alloc::vec![Task::Disj(p.clone())],
            NodeKind::Forall(_) => {
                (0..64u8).filter(|c| consts >> c & 1 == 1).map(|c| Task::Univ(p.clone(), c)).collect()
            }
            NodeKind::Exists(_) => alloc::vec![Task::Exists(p.clone())],
        }
    }

    /// Abelard's legal moves: every unfulfilled obligation.
    pub fn abelard_moves(&self, pos: &MegPosition) -> Vec<MegMove> {
        let consts = pos.instantiation_set();
        pos.pairs
            .iter()
            .flat_map(|p| self.tasks(p, consts))
            .filter(|t| !self.is_fulfilled(pos, t))
            .map(|t| t.to_move())
            .collect()
    }

    /// The pair a move adds, if any.
    pub fn added_pair(&self, from: &MegPosition, mv: &MegMove) -> Option<MegPair> {
        match (mv, &from.pending) {
            (MegMove::Conj(p, i), None) => Some(self.child_pair(p, *i)),
            (MegMove::Univ(p, c), None) => Some(self.instance(p, *c)),
            (MegMove::ChooseChild(i), Some(Ask::Disj(p))) => Some(self.child_pair(p, *i)),
            (MegMove::ChooseConst(c), Some(Ask::Exists(p))) => Some(self.instance(p, *c)),
            _ => None,
        }
    }

    pub fn pair_string(&self, p: &MegPair) -> String {
        let mut vars: Vec<(&str, Const)> = p.env.iter().map(|&(v, c)| (self.table.var_name(v), c)).collect();
        vars.sort_unstable();
        let body: Vec<String> = vars.iter().map(|(v, c)| format!("{v}={}", const_name(*c))).collect();
        format!("{}|{}", p.node, body.join(","))
    }

    pub fn parse_pair(&self, text: &str) -> Option<MegPair> {
        let (node, rest) = text.split_once('|')?;
        let node: NodeId = node.parse().ok()?;
        if node as usize >= self.table.len() {
            return None;
        }
        let mut env = Vec::new();
        for part in rest.split(',').filter(|s| !s.is_empty()) {
            let (v, c) = part.split_once('=')?;
            let c: Const = c.strip_prefix('c')?.parse().ok()?;
            env.push((self.table.var_by_name(v)?, c));
        }
        env.sort_unstable();
        let pair = MegPair { node, env };
        (self.restrict(node, pair.env.iter().copied()) == pair.env
            && pair.env.len() == self.table.node(node).free.len())
        .then_some(pair)
    }
}

impl Game for MegGame {
    type Position = MegPosition;
    type Move = MegMove;
    type Key = MegKey;

    fn initial(&self) -> MegPosition {
        let mut pos = MegPosition {
            pairs: BTreeSet::new(),
            pending: None,
            steps: 0,
            used: 0,
            contradiction: None,
            ground: BTreeMap::new(),
        };
        self.add_pair(&mut pos, self.root());
        pos
    }

    fn turn(&self, p: &MegPosition) -> Turn {
        if p.contradiction.is_some() {
            Turn::Over(Player::Abelard)
        } else if p.pending.is_some() {
            Turn::To(Player::Eloise)
        } else if self.abelard_moves(p).is_empty() {
            Turn::Over(Player::Eloise)
        } else {
            Turn::To(Player::Abelard)
        }
    }

    fn legal_moves(&self, p: &MegPosition) -> Vec<MegMove> {
        match &p.pending {
            None if p.contradiction.is_none() => self.abelard_moves(p),
            None => Vec::new(),
            Some(Ask::Disj(q)) => (0..self.table.node(q.node).children.len()).map(MegMove::ChooseChild).collect(),
            Some(Ask::Exists(_)) => (0..self.budget.max_consts as Const).map(MegMove::ChooseConst).collect(),
        }
    }

    fn apply(&self, p: &MegPosition, m: &MegMove) -> MegPosition {
        let mut next = p.clone();
        next.steps += 1;
        match m {
            MegMove::AskDisj(q) => next.pending = Some(Ask::Disj(q.clone())),
            MegMove::AskExists(q) => next.pending = Some(Ask::Exists(q.clone())),
            _ => {
                let pair = self.added_pair(p, m).unwrap_or_else(|| panic!("move {m:?} does not fit the position"));
                next.pending = None;
                self.add_pair(&mut next, pair);
            }
        }
        next
    }

    fn key(&self, p: &MegPosition) -> MegKey {
        MegKey { pairs: p.pairs.clone(), pending: p.pending.clone(), steps: p.steps }
    }

    fn key_string(&self, p: &MegPosition) -> String {
        let mut entries: Vec<String> = p.pairs.iter().map(|q| self.pair_string(q)).collect();
        entries.sort_unstable();
        let mut s = entries.join(";");
        match &p.pending {
            Some(Ask::Disj(q)) => s.push_str(&format!("#ask=or:{}", self.pair_string(q))),
            Some(Ask::Exists(q)) => s.push_str(&format!("#ask=exists:{}", self.pair_string(q))),
            None => {}
        }
        s
    }

    fn move_string(&self, m: &MegMove) -> String {
        match m {
            MegMove::Conj(p, i) => format!("and:{i}@{}", self.pair_string(p)),
            MegMove::Univ(p, c) => format!("forall:{}@{}", const_name(*c), self.pair_string(p)),
            MegMove::AskDisj(p) => format!("or@{}", self.pair_string(p)),
            MegMove::AskExists(p) => format!("exists@{}", self.pair_string(p)),
            MegMove::ChooseChild(i) => format!("child:{i}"),
            MegMove::ChooseConst(c) => format!("const:{}", const_name(*c)),
        }
    }

    fn truncation_winner(&self) -> Option<Player> {
        Some(Player::Eloise)
    }
}

/// An obligation σ₀ keeps in its queue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Task {
    Conj(MegPair, usize),
    Disj(MegPair),
    Univ(MegPair, Const),
    Exists(MegPair),
}

impl Task {
    pub fn to_move(&self) -> MegMove {
        match self {
            Task::Conj(p, i) => MegMove::Conj(p.clone(), *i),
            Task::Disj(p) => MegMove::AskDisj(p.clone()),
            Task::Univ(p, c) => MegMove::Univ(p.clone(), *c),
            Task::Exists(p) => MegMove::AskExists(p.clone()),
        }
    }
}

/// The bookkeeping of σ₀: a FIFO queue of obligations. Every new pair
/// queues its obligations; a universal pair is queued at every constant
/// known so far, and again for each constant that shows up later.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sigma0State {
    queue: VecDeque<Task>,
    foralls: Vec<MegPair>,
    known: u64,
}

impl Sigma0State {
    pub fn new(game: &MegGame) -> Self {
        let mut s = Sigma0State { queue: VecDeque::new(), foralls: Vec::new(), known: 1 };
        s.on_added(game, game.root());
        s
    }

    pub fn on_added(&mut self, game: &MegGame, pair: MegPair) {
        for &(_, c) in &pair.env {
            if self.known >> c & 1 == 0 {
                self.known |= 1 << c;
                for q in &self.foralls {
                    self.queue.push_back(Task::Univ(q.clone(), c));
                }
            }
        }
        if matches!(game.table.node(pair.node).kind, NodeKind::Forall(_)) {
            self.foralls.push(pair.clone());
        }
        self.queue.extend(game.tasks(&pair, self.known));
    }

    /// Index and move of the first unfulfilled task.
    pub fn next(&self, game: &MegGame, pos: &MegPosition) -> Option<(usize, MegMove)> {
        self.queue.iter().enumerate().find(|(_, t)| !game.is_fulfilled(pos, t)).map(|(i, t)| (i, t.to_move()))
    }

    /// Drops the tasks up to and including `index`.
    pub fn pop_through(&mut self, index: usize) {
        self.queue.drain(..=index);
    }

    /// Forgets the first queued task that produces `mv`, with everything
    /// before it.
    pub fn consume(&mut self, mv: &MegMove) {
        if let Some(i) = self.queue.iter().position(|t| t.to_move() == *mv) {
            self.pop_through(i);
        }
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

/// σ₀ as Abelard's responder in [`MegGame`].
#[derive(Debug, Clone)]
pub struct Sigma0 {
    state: Sigma0State,
}

pub fn sigma0(game: &MegGame) -> Sigma0 {
    Sigma0 { state: Sigma0State::new(game) }
}

impl Responder<MegGame> for Sigma0 {
    fn observe(&mut self, game: &MegGame, from: &MegPosition, mv: &MegMove) {
        if from.pending.is_none() {
            self.state.consume(mv);
        }
        if let Some(pair) = game.added_pair(from, mv) {
            if !from.pairs.contains(&pair) {
                self.state.on_added(game, pair);
            }
        }
    }

    fn choose(&mut self, game: &MegGame, at: &MegPosition) -> Result<MegMove, StrategyError> {
        self.state
            .next(game, at)
            .map(|(_, m)| m)
            .ok_or_else(|| StrategyError::Other("every obligation is fulfilled".into()))
    }

    fn fork(&self) -> Box<dyn Responder<MegGame>> {
        Box::new(self.clone())
    }
}

/// MEG(φ) with Abelard fixed to σ₀ and Eloise restricted to one
/// representative per class of interchangeable answers: the constants in
/// use and the least unused one. If every constant of the budget is in
/// use, Eloise may instead declare the budget exhausted, which ends the
/// play with a configurable winner.
#[derive(Debug, Clone)]
pub struct TableauGame {
    meg: MegGame,
    truncation: Player,
    exhausted: Player,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableauPosition {
    pub meg: MegPosition,
    pub sigma: Sigma0State,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TableauMove {
    Task(MegMove),
    Answer(MegMove),
    Exhausted,
}

impl TableauGame {
    pub fn new(meg: MegGame, truncation: Player, exhausted: Player) -> Self {
        TableauGame { meg, truncation, exhausted }
    }

    pub fn meg(&self) -> &MegGame {
        &self.meg
    }

    /// Eloise's representative witnesses for an existential prompt.
    pub fn witness_choices(&self, pos: &MegPosition) -> (Vec<Const>, bool) {
        let mut out: Vec<Const> = pos.constants_used().collect();
        match (0..self.meg.budget.max_consts as Const).find(|&c| pos.used >> c & 1 == 0) {
            Some(fresh) => {
                out.push(fresh);
                (out, false)
            }
            None => (out, true),
        }
    }
}

impl Game for TableauGame {
    type Position = TableauPosition;
    type Move = TableauMove;
    type Key = (MegKey, Sigma0State, bool);

    fn initial(&self) -> TableauPosition {
        TableauPosition { meg: self.meg.initial(), sigma: Sigma0State::new(&self.meg), exhausted: false }
    }

    fn turn(&self, p: &TableauPosition) -> Turn {
        if p.exhausted {
            return Turn::Over(self.exhausted);
        }
        self.meg.turn(&p.meg)
    }

    fn legal_moves(&self, p: &TableauPosition) -> Vec<TableauMove> {
        match &p.meg.pending {
            None => p.sigma.next(&self.meg, &p.meg).map(|(_, m)| TableauMove::Task(m)).into_iter().collect(),
            Some(Ask::Disj(q)) => (0..self.meg.table.node(q.node).children.len())
                .map(|i| TableauMove::Answer(MegMove::ChooseChild(i)))
                .collect(),
            Some(Ask::Exists(_)) => {
                let (choices, exhausted) = self.witness_choices(&p.meg);
                let mut out: Vec<TableauMove> =
                    choices.into_iter().map(|c| TableauMove::Answer(MegMove::ChooseConst(c))).collect();
                if exhausted {
                    out.push(TableauMove::Exhausted);
                }
                out
            }
        }
    }

    fn apply(&self, p: &TableauPosition, m: &TableauMove) -> TableauPosition {
        let mut next = p.clone();
        let mv = match m {
            TableauMove::Exhausted => {
                next.exhausted = true;
                return next;
            }
            TableauMove::Task(mv) => {
                let (i, _) = p.sigma.next(&self.meg, &p.meg).expect("σ₀ has a task");
                next.sigma.pop_through(i);
                mv
            }
            TableauMove::Answer(mv) => mv,
        };
        let added = self.meg.added_pair(&p.meg, mv);
        next.meg = self.meg.apply(&p.meg, mv);
        if let Some(pair) = added {
            if !p.meg.pairs.contains(&pair) {
                next.sigma.on_added(&self.meg, pair);
            }
        }
        next
    }

    fn key(&self, p: &TableauPosition) -> Self::Key {
        (self.meg.key(&p.meg), p.sigma.clone(), p.exhausted)
    }

    fn key_string(&self, p: &TableauPosition) -> String {
        let mut s = self.meg.key_string(&p.meg);
        if p.exhausted {
            s.push_str("#exhausted");
        }
        s
    }

    fn move_string(&self, m: &TableauMove) -> String {
        match m {
            TableauMove::Task(mv) | TableauMove::Answer(mv) => self.meg.move_string(mv),
            TableauMove::Exhausted => "exhausted".into(),
        }
    }

    fn truncation_winner(&self) -> Option<Player> {
        Some(self.truncation)
    }
}

/// Eloise in [`MegGame`] following a winning strategy of the tableau game,
/// which she tracks by replaying σ₀'s bookkeeping alongside the play.
pub struct TableauEloise {
    game: Arc<TableauGame>,
    strategy: Arc<PositionalStrategy<TableauGame>>,
    shadow: TableauPosition,
}

impl TableauEloise {
    pub fn new(game: Arc<TableauGame>, strategy: Arc<PositionalStrategy<TableauGame>>) -> Self {
        let shadow = game.initial();
        TableauEloise { game, strategy, shadow }
    }
}

impl Responder<MegGame> for TableauEloise {
    fn observe(&mut self, _game: &MegGame, from: &MegPosition, mv: &MegMove) {
        let tm = if from.pending.is_none() { TableauMove::Task(mv.clone()) } else { TableauMove::Answer(mv.clone()) };
        self.shadow = self.game.apply(&self.shadow, &tm);
    }

    fn choose(&mut self, game: &MegGame, at: &MegPosition) -> Result<MegMove, StrategyError> {
        if game.key(at) != self.game.meg.key(&self.shadow.meg) {
            return Err(StrategyError::Invariant("play left the σ₀ schedule".into()));
        }
        match self.strategy.get(&self.game, &self.shadow) {
            Some(TableauMove::Answer(m)) => Ok(m.clone()),
            Some(_) => Err(StrategyError::Budget("no witness constant left".into())),
            None => Err(StrategyError::Uncovered(self.game.key_string(&self.shadow))),
        }
    }

    fn fork(&self) -> Box<dyn Responder<MegGame>> {
        Box::new(TableauEloise {
            game: self.game.clone(),
            strategy: self.strategy.clone(),
            shadow: self.shadow.clone(),
        })
    }
}

/// A refutation: a finite tree in which every branch ends in a
/// contradiction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tableau {
    /// `rule` fired on `principal`; for branching rules `children[i]`
    /// continues with `added[i]`, otherwise there is one child that
    /// continues with all of `added`.
    Step {
        rule: Rule,
        principal: MegPair,
        added: Vec<MegPair>,
        children: Vec<Tableau>,
    },
    Closed {
        contradiction: (MegPair, MegPair),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    And,
    Or,
    Forall,
    Exists,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::And => "and",
            Rule::Or => "or",
            Rule::Forall => "forall",
            Rule::Exists => "exists",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        [Rule::And, Rule::Or, Rule::Forall, Rule::Exists].into_iter().find(|r| r.name() == name)
    }
}

impl Tableau {
    pub fn size(&self) -> usize {
        match self {
            Tableau::Step { children, .. } => 1 + children.iter().map(Tableau::size).sum::<usize>(),
            Tableau::Closed { .. } => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Tableau::Step { children, .. } => 1 + children.iter().map(Tableau::depth).max().unwrap_or(0),
            Tableau::Closed { .. } => 0,
        }
    }

    /// Checks that the tree is a refutation of the game's sentence: every
    /// rule is applied to a pair on its branch and adds what the rule
    /// prescribes, existential steps branch over every constant in use and
    /// one fresh constant, and every leaf holds a complementary pair.
    pub fn check(&self, game: &MegGame) -> Result<(), String> {
        self.check_from(game, &game.initial())
    }

    fn check_from(&self, game: &MegGame, pos: &MegPosition) -> Result<(), String> {
        match self {
            Tableau::Closed { contradiction: (a, b) } => {
                if !pos.pairs.contains(a) || !pos.pairs.contains(b) {
                    return Err("leaf names a pair that is not on its branch".into());
                }
                match (game.ground(a), game.ground(b)) {
                    (Some((false, None)), _) if a == b => Ok(()),
                    (Some((sa, Some(ga))), Some((sb, Some(gb)))) if sa != sb && ga == gb => Ok(()),
                    _ => Err(format!("{} and {} do not contradict", game.pair_string(a), game.pair_string(b))),
                }
            }
            Tableau::Step { rule, principal, added, children } => {
                if !pos.pairs.contains(principal) {
                    return Err(format!("principal {} is not on its branch", game.pair_string(principal)));
                }
                let node = game.table.node(principal.node);
                let expected: Vec<MegPair> = match (rule, &node.kind) {
                    (Rule::And, NodeKind::And) => {
                        if added.len() != 1
                            || !(0..node.children.len()).any(|i| game.child_pair(principal, i) == added[0])
                        {
                            return Err("and step must add one conjunct".into());
                        }
                        added.clone()
                    }
                    (Rule::Forall, NodeKind::Forall(_)) => {
                        if added.len() != 1
                            || !(0..game.budget.max_consts as Const).any(|c| game.instance(principal, c) == added[0])
                        {
                            return Err("forall step must add one instance".into());
                        }
                        added.clone()
                    }
                    (Rule::Or, NodeKind::Or) => {
                        (0..node.children.len()).map(|i| game.child_pair(principal, i)).collect()
                    }
                    (Rule::Exists, NodeKind::Exists(_)) => {
                        let mut cs: Vec<Const> = pos.constants_used().collect();
                        if let Some(fresh) = (0..game.budget.max_consts as Const).find(|&c| pos.used >> c & 1 == 0) {
                            cs.push(fresh);
                        }
                        cs.into_iter().map(|c| game.instance(principal, c)).collect()
                    }
                    _ => return Err(format!("rule {} does not apply to node {}", rule.name(), principal.node)),
                };
                if *added != expected {
                    return Err(format!("{} step adds the wrong pairs", rule.name()));
                }
                let branching = matches!(rule, Rule::Or | Rule::Exists);
                if branching && children.len() != added.len() || !branching && children.len() != 1 {
                    return Err(format!("{} step has {} children", rule.name(), children.len()));
                }
                for (i, child) in children.iter().enumerate() {
                    let mut next = pos.clone();
                    if branching {
                        game.add_pair(&mut next, added[i].clone());
                    } else {
                        for a in added {
                            game.add_pair(&mut next, a.clone());
                        }
                    }
                    child.check_from(game, &next)?;
                }
                Ok(())
            }
        }
    }
}

/// Saturation: every obligation of every pair is met and no ground atom
/// occurs with both signs.
pub fn hintikka_saturated(game: &MegGame, pairs: &BTreeSet<MegPair>) -> bool {
    let table = &game.table;
    let mut used = 1u64;
    for p in pairs {
        for &(_, c) in &p.env {
            used |= 1 << c;
        }
    }
    let mut signs: BTreeMap<GroundAtom, bool> = BTreeMap::new();
    for p in pairs {
        let node = table.node(p.node);
        let ok = match node.kind {
            NodeKind::Lit(_) => match game.ground(p) {
                Some((false, None)) => false,
                Some((sign, Some(atom))) => *signs.entry(atom).or_insert(sign) == sign,
                _ => true,
            },
            NodeKind::And => (0..node.children.len()).all(|i| pairs.contains(&game.child_pair(p, i))),
            NodeKind::Or => (0..node.children.len()).any(|i| pairs.contains(&game.child_pair(p, i))),
            NodeKind::Forall(_) => {
                (0..64u8).filter(|c| used >> c & 1 == 1).all(|c| pairs.contains(&game.instance(p, c)))
            }
            NodeKind::Exists(_) => (0..game.budget.max_consts as Const).any(|c| pairs.contains(&game.instance(p, c))),
        };
        if !ok {
            return false;
        }
    }
    true
}

/// The constants of the final set form the domain (just `c0` if none
/// occurs); a relation holds of a tuple iff the positive atom is in the set.
pub fn build_model(game: &MegGame, pos: &MegPosition) -> Result<Structure, String> {
    if let Some((a, b)) = &pos.contradiction {
        return Err(format!("the set contains {} and {}", game.pair_string(a), game.pair_string(b)));
    }
    let consts: Vec<Const> = if pos.used == 0 { alloc::vec![0] } else { pos.constants_used().collect() };
    let vocab = game.table.vocabulary().clone();
    let mut m = Structure::new(vocab, consts.iter().map(|&c| const_name(c)).collect()).map_err(|e| e.to_string())?;
    let index = |c: Const| consts.iter().position(|&d| d == c).expect("constant in domain");
    for p in &pos.pairs {
        if let Some((true, Some((rel, args)))) = game.ground(p) {
            let tuple: Vec<usize> = args.iter().map(|&c| index(c)).collect();
            let name = game.table.vocabulary().relations()[rel].name.to_owned();
            m.insert(&name, &tuple).map_err(|e| e.to_string())?;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    ConstantsExhausted,
    StepsExhausted,
    /// The search hit its position limit.
    SearchExhausted,
}

impl UnknownReason {
    pub fn name(self) -> &'static str {
        match self {
            UnknownReason::ConstantsExhausted => "constants-exhausted",
            UnknownReason::StepsExhausted => "steps-exhausted",
            UnknownReason::SearchExhausted => "search-exhausted",
        }
    }
}

/// Positions the bounded search may label before giving up.
pub const POSITION_LIMIT: usize = 2_000_000;

/// Result of the bounded tableau searches.
pub enum Search {
    /// Abelard wins even if exhaustion and truncation count for Eloise.
    Refuted(Tableau),
    /// Eloise wins even if exhaustion and truncation count for Abelard.
    Saturates {
        game: Arc<TableauGame>,
        strategy: Arc<PositionalStrategy<TableauGame>>,
    },
    Unknown(UnknownReason),
}

pub fn search(meg: &MegGame) -> Search {
    let steps = Some(meg.budget.max_steps);
    let limit = Some(POSITION_LIMIT);
    let run = |truncation: Player, exhausted: Player| {
        let game = TableauGame::new(meg.clone(), truncation, exhausted);
        let result = Solver::new(&game).with_step_bound(steps).with_position_limit(limit).solve();
        (game, result)
    };
    let (optimistic, result) = run(Player::Eloise, Player::Eloise);
    match result {
        Err(SolveError::PositionLimit(_)) => return Search::Unknown(UnknownReason::SearchExhausted),
        Err(SolveError::StepBound) => unreachable!("the tableau game has a truncation rule"),
        Ok(sol) if sol.winner == Player::Abelard => {
            return Search::Refuted(extract_tableau(&optimistic, &optimistic.initial()))
        }
        Ok(_) => {}
    }
    let (pessimistic, result) = run(Player::Abelard, Player::Abelard);
    match result {
        Err(_) => return Search::Unknown(UnknownReason::SearchExhausted),
        Ok(sol) if sol.winner == Player::Eloise => {
            return Search::Saturates { game: Arc::new(pessimistic), strategy: Arc::new(sol.strategy) };
        }
        Ok(_) => {}
    }
    let (_, result) = run(Player::Abelard, Player::Eloise);
    match result {
        Ok(sol) if sol.winner == Player::Eloise => Search::Unknown(UnknownReason::ConstantsExhausted),
        Ok(_) => Search::Unknown(UnknownReason::StepsExhausted),
        Err(_) => Search::Unknown(UnknownReason::SearchExhausted),
    }
}

/// Reads the refutation off a position Abelard wins, following σ₀ and
/// branching over every Eloise answer.
fn extract_tableau(game: &TableauGame, p: &TableauPosition) -> Tableau {
    let meg = &game.meg;
    if let Some(c) = &p.meg.contradiction {
        return Tableau::Closed { contradiction: c.clone() };
    }
    let moves = game.legal_moves(p);
    let [TableauMove::Task(mv)] = moves.as_slice() else {
        panic!("a won position is either closed or σ₀ to move");
    };
    let next = game.apply(p, &moves[0]);
    match mv {
        MegMove::Conj(q, _) | MegMove::Univ(q, _) => {
            let rule = if matches!(mv, MegMove::Conj(..)) { Rule::And } else { Rule::Forall };
            let added = alloc::vec![meg.added_pair(&p.meg, mv).unwrap()];
            Tableau::Step { rule, principal: q.clone(), added, children: alloc::vec![extract_tableau(game, &next)] }
        }
        MegMove::AskDisj(q) | MegMove::AskExists(q) => {
            let rule = if matches!(mv, MegMove::AskDisj(_)) { Rule::Or } else { Rule::Exists };
            let mut added = Vec::new();
            let mut children = Vec::new();
            for answer in game.legal_moves(&next) {
                let TableauMove::Answer(a) = &answer else {
                    panic!("exhaustion is an Eloise win in the refutation search");
                };
                added.push(meg.added_pair(&next.meg, a).unwrap());
                children.push(extract_tableau(game, &game.apply(&next, &answer)));
            }
            Tableau::Step { rule, principal: q.clone(), added, children }
        }
        _ => unreachable!("σ₀ only fires obligations"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{play, FirstMove};
    use crate::parse::parse_nnf;

    fn vocab() -> Vocabulary {
        Vocabulary::relational([("P", 1), ("R", 2)], false).unwrap()
    }

    fn game(text: &str, k: usize, d: usize) -> MegGame {
        let v = vocab();
        MegGame::new(&parse_nnf(text, &v).unwrap(), &v, Budget { max_consts: k, max_steps: d }).unwrap()
    }

    #[test]
    fn rules() {
        let g = game("(exists x. P(x)) & (exists x. !P(x))", 2, 50);
        let start = g.initial();
        assert_eq!(g.turn(&start), Turn::To(Player::Abelard));
        let moves = g.legal_moves(&start);
        assert_eq!(moves, alloc::vec![MegMove::Conj(g.root(), 0), MegMove::Conj(g.root(), 1)]);
        let p = g.apply(&start, &moves[0]);
        let ask = g.legal_moves(&p);
        assert_eq!(ask, alloc::vec![MegMove::Conj(g.root(), 1), MegMove::AskExists(g.child_pair(&g.root(), 0))]);
        let q = g.apply(&p, &ask[1]);
        assert_eq!(g.turn(&q), Turn::To(Player::Eloise));
        assert_eq!(g.legal_moves(&q).len(), 2);
        let r = g.apply(&q, &MegMove::ChooseConst(1));
        assert_eq!(r.used, 0b10);
        assert_eq!(g.key_string(&r), "0|;1|;2|x=c1");
        assert_eq!(g.move_string(&ask[1]), "exists@1|");
    }

    #[test]
    fn contradiction_ends_the_game() {
        let g = game("exists x. (P(x) & !P(x))", 2, 50);
        let mut pos = g.initial();
        pos = g.apply(&pos, &MegMove::AskExists(g.root()));
        pos = g.apply(&pos, &MegMove::ChooseConst(0));
        let conj = g.instance(&g.root(), 0);
        pos = g.apply(&pos, &MegMove::Conj(conj.clone(), 0));
        assert_eq!(g.turn(&pos), Turn::To(Player::Abelard));
        pos = g.apply(&pos, &MegMove::Conj(conj, 1));
        assert_eq!(g.turn(&pos), Turn::Over(Player::Abelard));
        assert!(pos.contradiction.is_some());
    }

    #[test]
    fn sigma0_order() {
        let g = game("(exists x. P(x)) & exists y. R(y, y)", 2, 50);
        let mut s = sigma0(&g);
        let start = g.initial();
        assert_eq!(s.choose(&g, &start).unwrap(), MegMove::Conj(g.root(), 0));
        let p = g.apply(&start, &MegMove::Conj(g.root(), 0));
        s.observe(&g, &start, &MegMove::Conj(g.root(), 0));
        assert_eq!(s.choose(&g, &p).unwrap(), MegMove::Conj(g.root(), 1));
    }

    #[test]
    fn universal_reinstantiated_for_new_constants() {
        let g = game("(forall x. P(x)) & exists y. R(y, y)", 3, 50);
        let mut e = FirstMoveOr(1);
        let mut s = sigma0(&g);
        let rec = play(&g, &mut e, &mut s, Some(50)).unwrap();
        let univ: Vec<String> =
            rec.steps.iter().filter(|st| matches!(st.mv, MegMove::Univ(..))).map(|st| g.move_string(&st.mv)).collect();
        assert_eq!(univ, ["forall:c0@1|", "forall:c1@1|"]);
        assert_eq!(rec.winner, Player::Eloise);
        assert!(!rec.truncated);
        assert!(hintikka_saturated(&g, &rec.final_position.pairs));
        let m = build_model(&g, &rec.final_position).unwrap();
        assert_eq!(m.domain(), ["c0", "c1"]);
        assert!(m.holds(1, &[1, 1]) && m.holds(0, &[0]) && m.holds(0, &[1]));
    }

    /// Answers every witness prompt with a fixed constant.
    #[derive(Clone)]
    struct FirstMoveOr(Const);

    impl Responder<MegGame> for FirstMoveOr {
        fn choose(&mut self, game: &MegGame, at: &MegPosition) -> Result<MegMove, StrategyError> {
            match at.pending {
                Some(Ask::Exists(_)) => Ok(MegMove::ChooseConst(self.0)),
                _ => <FirstMove as Responder<MegGame>>::choose(&mut FirstMove, game, at),
            }
        }
        fn fork(&self) -> Box<dyn Responder<MegGame>> {
            Box::new(self.clone())
        }
    }

    #[test]
    fn truncated_play() {
        let g = game("exists x. P(x)", 2, 1);
        let rec = play(&g, &mut FirstMove, &mut sigma0(&g), Some(1)).unwrap();
        assert!(rec.truncated);
        assert_eq!(rec.winner, Player::Eloise);
    }

    #[test]
    fn refutations() {
        for text in ["exists x. (P(x) & !P(x))", "(forall x. P(x)) & (exists x. !P(x))"] {
            let g = game(text, 2, 50);
            let Search::Refuted(t) = search(&g) else { panic!("{text} not refuted") };
            t.check(&g).unwrap();
        }
    }

    #[test]
    fn saturating_strategy() {
        let g = game("exists x. P(x)", 2, 50);
        let Search::Saturates { game: tg, strategy } = search(&g) else { panic!() };
        let mut e = TableauEloise::new(tg, strategy);
        let rec = play(&g, &mut e, &mut sigma0(&g), Some(50)).unwrap();
        let m = build_model(&g, &rec.final_position).unwrap();
        assert_eq!(m.domain(), ["c0"]);
        assert_eq!(m.tuples(0), alloc::vec![alloc::vec![0]]);
    }

    #[test]
    fn saturation_check() {
        let g = game("exists x. P(x)", 2, 50);
        let mut s = BTreeSet::new();
        s.insert(g.root());
        assert!(!hintikka_saturated(&g, &s));
        s.insert(g.instance(&g.root(), 0));
        assert!(hintikka_saturated(&g, &s));
        let h = game("forall x. P(x)", 2, 50);
        let mut t = BTreeSet::new();
        t.insert(h.root());
        assert!(!hintikka_saturated(&h, &t));
    }

    #[test]
    fn tampered_tableau_fails_the_check() {
        let g = game("(forall x. P(x)) & (exists x. !P(x))", 2, 50);
        let Search::Refuted(t) = search(&g) else { panic!() };
        let Tableau::Step { principal, added, children, .. } = t else { panic!() };
        let bad = Tableau::Step { rule: Rule::Or, principal, added, children };
        assert!(bad.check(&g).is_err());
    }
}
