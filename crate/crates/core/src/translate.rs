//! Strategy translations between the games.
//!
//! * [`Phi`] turns an Eloise strategy in G(M, φ) into one in MEG(φ) by
//!   reading witness constants through π(c_i) = the (i mod |M|)-th element.
//! * [`psi_translate`] plays an Eloise strategy in MEG(φ) against σ₀, builds
//!   a model from the final set Γ and returns the Eloise strategy
//!   [`PsiResponder`] in G(model, φ) that stays inside Γ.
//! * [`Theta`] combines an Eloise strategy in G(M, φ) with one in EF_m(M, N)
//!   into an Eloise strategy in G(N, φ), for φ of rank at most m.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::ef::{EfGame, EfMove, EfPosition, Side};
use crate::eval::{EvalGame, EvalMove, EvalPosition};
use crate::kernel::{play, Game, PlayError, PlayRecord, Player, Responder, StrategyError, Turn};
use crate::meg::{
    build_model, hintikka_saturated, search, sigma0, Ask, Budget, Const, MegError, MegGame, MegMove, MegPair,
    MegPosition, Search, Tableau, TableauEloise, UnknownReason,
};
use crate::structure::Structure;
use crate::syntax::{Formula, Vocabulary};
use crate::table::NodeKind;

struct Sim {
    pos: EvalPosition,
    tau: Box<dyn Responder<EvalGame>>,
}

impl Sim {
    fn fork(&self) -> Sim {
        Sim { pos: self.pos.clone(), tau: self.tau.fork() }
    }
}

/// Φ(τ): Eloise in MEG(φ) shadowing τ in G(M, φ). Each pair of the
/// position keeps its own copy of the simulated play of G(M, φ) it stands
/// for, and every pair is a C-translation of its simulated position.
pub struct Phi {
    eval: Arc<EvalGame>,
    sims: BTreeMap<MegPair, Sim>,
    error: Option<StrategyError>,
}

impl Phi {
    /// `eval` must be G(M, φ) for the same compiled φ as the MEG.
    pub fn new(eval: Arc<EvalGame>, tau: Box<dyn Responder<EvalGame>>, meg: &MegGame) -> Result<Self, String> {
        if eval.table().len() != meg.table().len() || eval.structure().size() == 0 {
            return Err("the evaluation game is not over the same sentence".into());
        }
        let mut sims = BTreeMap::new();
        sims.insert(meg.root(), Sim { pos: eval.initial(), tau });
        Ok(Phi { eval, sims, error: None })
    }

    /// π(c_i).
    pub fn pi(&self, c: Const) -> usize {
        c as usize % self.eval.structure().size()
    }

    fn translation_of(&self, q: &MegPair, pos: &EvalPosition) -> bool {
        q.node == pos.node
            && q.env.len() == pos.env.len()
            && q.env.iter().all(|&(v, c)| pos.value(v) == Some(self.pi(c)))
    }

    /// The simulated position and strategy copy for `q`, reached from the
    /// simulation of its parent by `em`.
    fn advance(&self, sim: &Sim, em: EvalMove, q: &MegPair) -> Result<Sim, StrategyError> {
        let mut next = sim.fork();
        next.tau.observe(&self.eval, &sim.pos, &em);
        next.pos = self.eval.apply(&sim.pos, &em);
        if !self.translation_of(q, &next.pos) {
            return Err(StrategyError::Invariant(format!(
                "pair at node {} is not a translation of {}",
                q.node,
                self.eval.key_string(&next.pos)
            )));
        }
        Ok(next)
    }

    fn ask(&mut self, game: &MegGame, ask: &Ask, used: u64) -> Result<MegMove, StrategyError> {
        let p = ask.pair();
        let sim = self
            .sims
            .get_mut(p)
            .ok_or_else(|| StrategyError::Invariant(format!("no simulated play for pair {}", p.node)))?;
        match (ask, sim.tau.choose(&self.eval, &sim.pos)?) {
            (Ask::Disj(_), EvalMove::Child(i)) => Ok(MegMove::ChooseChild(i)),
            (Ask::Exists(_), EvalMove::Element(a)) => {
                let k = game.budget().max_consts as Const;
                let preimages = (0..k).filter(|&c| self.pi(c) == a);
                let reused = preimages.clone().find(|&c| used >> c & 1 == 1);
                reused
                    .or_else(|| preimages.clone().next())
                    .map(MegMove::ChooseConst)
                    .ok_or_else(|| StrategyError::Budget(format!("no constant below c{k} maps to element {a}")))
            }
            (_, m) => Err(StrategyError::Other(format!("τ answered {m:?} to a {ask:?} prompt"))),
        }
    }

    /// Every pair any play against Φ can reach: conjuncts, instances at
    /// every constant of the budget, and Φ's answers, whose witnesses are
    /// taken over every constant that π sends to τ's element. Returns the
    /// closure, or the first contradiction or strategy failure in it.
    pub fn closure(&self, game: &MegGame) -> Result<BTreeSet<MegPair>, String> {
        let mut sims: BTreeMap<MegPair, Sim> = BTreeMap::new();
        let root = game.root();
        sims.insert(root.clone(), self.sims.get(&root).ok_or("Φ has left the initial position")?.fork());
        let mut acc = game.initial();
        let mut todo = alloc::vec![root];
        let k = game.budget().max_consts as Const;
        while let Some(p) = todo.pop() {
            let node = game.table().node(p.node);
            let mut sim = sims[&p].fork();
            let steps: Vec<(EvalMove, MegPair)> = match node.kind {
                NodeKind::Lit(_) => Vec::new(),
                NodeKind::And => {
                    (0..node.children.len()).map(|i| (EvalMove::Child(i), game.child_pair(&p, i))).collect()
                }
                NodeKind::Forall(_) => (0..k).map(|c| (EvalMove::Element(self.pi(c)), game.instance(&p, c))).collect(),
                NodeKind::Or => match sim.tau.choose(&self.eval, &sim.pos).map_err(|e| e.to_string())? {
                    EvalMove::Child(i) if i < node.children.len() => {
                        alloc::vec![(EvalMove::Child(i), game.child_pair(&p, i))]
                    }
                    m => return Err(format!("τ answered {m:?} at {}", self.eval.key_string(&sim.pos))),
                },
                NodeKind::Exists(_) => match sim.tau.choose(&self.eval, &sim.pos).map_err(|e| e.to_string())? {
                    EvalMove::Element(a) if a < self.eval.structure().size() => {
                        let out: Vec<_> = (0..k)
                            .filter(|&c| self.pi(c) == a)
                            .map(|c| (EvalMove::Element(a), game.instance(&p, c)))
                            .collect();
                        if out.is_empty() {
                            return Err(format!("no constant below c{k} maps to element {a}"));
                        }
                        out
                    }
                    m => return Err(format!("τ answered {m:?} at {}", self.eval.key_string(&sim.pos))),
                },
            };
            for (em, q) in steps {
                if sims.contains_key(&q) {
                    continue;
                }
                let next = self.advance(&sim, em, &q).map_err(|e| e.to_string())?;
                sims.insert(q.clone(), next);
                game.add_pair(&mut acc, q.clone());
                if let Some((a, b)) = &acc.contradiction {
                    return Err(format!("closure contains {} and {}", game.pair_string(a), game.pair_string(b)));
                }
                todo.push(q);
            }
        }
        Ok(acc.pairs)
    }
}

impl Responder<MegGame> for Phi {
    fn observe(&mut self, game: &MegGame, from: &MegPosition, mv: &MegMove) {
        let Some(q) = game.added_pair(from, mv) else { return };
        if from.pairs.contains(&q) || self.error.is_some() {
            return;
        }
        let (parent, em) = match (mv, &from.pending) {
            (MegMove::Conj(p, i), _) => (p, EvalMove::Child(*i)),
            (MegMove::Univ(p, c), _) => (p, EvalMove::Element(self.pi(*c))),
            (MegMove::ChooseChild(i), Some(ask)) => (ask.pair(), EvalMove::Child(*i)),
            (MegMove::ChooseConst(c), Some(ask)) => (ask.pair(), EvalMove::Element(self.pi(*c))),
            _ => return,
        };
        let Some(sim) = self.sims.get(parent) else {
            self.error = Some(StrategyError::Invariant(format!("no simulated play for pair {}", parent.node)));
            return;
        };
        match self.advance(sim, em, &q) {
            Ok(sim) => {
                self.sims.insert(q, sim);
            }
            Err(e) => self.error = Some(e),
        }
    }

    fn choose(&mut self, game: &MegGame, at: &MegPosition) -> Result<MegMove, StrategyError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let ask = at.pending.clone().ok_or_else(|| StrategyError::Other("not Eloise's turn".into()))?;
        self.ask(game, &ask, at.used)
    }

    fn fork(&self) -> Box<dyn Responder<MegGame>> {
        Box::new(Phi {
            eval: self.eval.clone(),
            sims: self.sims.iter().map(|(k, v)| (k.clone(), v.fork())).collect(),
            error: self.error.clone(),
        })
    }
}

/// Eloise in G(model, φ) staying inside a saturated set Γ: at a
/// disjunction she picks a disjunct whose pair is in Γ, at an existential
/// a witness whose instance is.
#[derive(Debug, Clone)]
pub struct PsiResponder {
    meg: MegGame,
    gamma: Arc<BTreeSet<MegPair>>,
    /// The constant each domain element stands for.
    consts: Vec<Const>,
}

impl PsiResponder {
    pub fn gamma(&self) -> &BTreeSet<MegPair> {
        &self.gamma
    }

    fn pair_of(&self, at: &EvalPosition) -> MegPair {
        MegPair { node: at.node, env: at.env.iter().map(|&(v, a)| (v, self.consts[a])).collect() }
    }
}

impl Responder<EvalGame> for PsiResponder {
    fn choose(&mut self, game: &EvalGame, at: &EvalPosition) -> Result<EvalMove, StrategyError> {
        let p = self.pair_of(at);
        if !self.gamma.contains(&p) {
            return Err(StrategyError::Invariant(format!("position {} is not in Γ", game.key_string(at))));
        }
        let node = game.table().node(at.node);
        let found = match node.kind {
            NodeKind::Or => (0..node.children.len())
                .find(|&i| self.gamma.contains(&self.meg.child_pair(&p, i)))
                .map(EvalMove::Child),
            NodeKind::Exists(_) => (0..self.consts.len())
                .find(|&e| self.gamma.contains(&self.meg.instance(&p, self.consts[e])))
                .map(EvalMove::Element),
            _ => return Err(StrategyError::Other("not Eloise's turn".into())),
        };
        found.ok_or_else(|| StrategyError::Invariant(format!("Γ has no successor of {}", game.key_string(at))))
    }

    fn fork(&self) -> Box<dyn Responder<EvalGame>> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsiError {
    #[error("{0}")]
    Play(#[from] PlayError),
    #[error("the strategy lost against σ₀")]
    Lost,
    #[error("the play against σ₀ did not saturate within {0} steps")]
    Truncated(usize),
    #[error("the final set is not saturated")]
    NotSaturated,
    #[error("{0}")]
    Model(String),
}

pub struct PsiOutcome {
    pub model: Structure,
    pub strategy: PsiResponder,
    pub play: PlayRecord<MegGame>,
}

/// Ψ(τ): plays τ against σ₀ and reads off the model and its strategy.
pub fn psi_translate(tau: &mut dyn Responder<MegGame>, game: &MegGame) -> Result<PsiOutcome, PsiError> {
    let d = game.budget().max_steps;
    let record = play(game, tau, &mut sigma0(game), Some(d))?;
    if record.truncated {
        return Err(PsiError::Truncated(d));
    }
    if record.winner != Player::Eloise {
        return Err(PsiError::Lost);
    }
    let last = &record.final_position;
    if !hintikka_saturated(game, &last.pairs) {
        return Err(PsiError::NotSaturated);
    }
    let model = build_model(game, last).map_err(PsiError::Model)?;
    let consts = if last.used == 0 { alloc::vec![0] } else { last.constants_used().collect() };
    let strategy = PsiResponder { meg: game.clone(), gamma: Arc::new(last.pairs.clone()), consts };
    Ok(PsiOutcome { model, strategy, play: record })
}

/// Result of the bounded model existence search.
#[allow(clippy::large_enum_variant)]
pub enum MegOutcome {
    Refuted(Tableau),
    /// A model built from a saturated play, with Eloise's strategy in its
    /// evaluation game.
    ModelFound(PsiOutcome),
    Unknown(UnknownReason),
}

/// Decides MEG(φ) within the budget: a refutation if Abelard wins even
/// when exhaustion and truncation count for Eloise, a model if Eloise
/// saturates within the budget against σ₀, otherwise unknown.
pub fn solve_meg(phi: &Formula, vocab: &Vocabulary, budget: Budget) -> Result<MegOutcome, MegError> {
    let game = MegGame::new(phi, vocab, budget)?;
    Ok(match search(&game) {
        Search::Refuted(t) => MegOutcome::Refuted(t),
        Search::Saturates { game: tg, strategy } => {
            let mut tau = TableauEloise::new(tg, strategy);
            let out = psi_translate(&mut tau, &game).expect("a saturating strategy yields a model");
            MegOutcome::ModelFound(out)
        }
        Search::Unknown(r) => MegOutcome::Unknown(r),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThetaError {
    #[error("the back-and-forth game is not played between the two evaluation structures")]
    Structures,
    #[error("the two evaluation games are over different sentences")]
    Sentences,
    #[error("the sentence has rank {rank} but the back-and-forth game only {rounds} rounds")]
    Rank { rank: usize, rounds: usize },
}

/// Θ(σ, τ): Eloise in G(N, φ). Moves in G(N, φ) are relayed to a
/// simulated G(M, φ) played by σ, with elements carried across by the
/// simulated EF_m(M, N) played by τ. At every step the two positions sit
/// at the same node and each variable's pair of values is a pair of the
/// EF position.
pub struct Theta {
    m_game: Arc<EvalGame>,
    sigma: Box<dyn Responder<EvalGame>>,
    m_pos: EvalPosition,
    ef: Arc<EfGame>,
    tau: Box<dyn Responder<EfGame>>,
    ef_pos: EfPosition,
    own: Option<EvalMove>,
    error: Option<StrategyError>,
}

impl Theta {
    pub fn new(
        m_game: Arc<EvalGame>,
        sigma: Box<dyn Responder<EvalGame>>,
        ef: Arc<EfGame>,
        tau: Box<dyn Responder<EfGame>>,
        n_game: &EvalGame,
    ) -> Result<Self, ThetaError> {
        if ef.left() != m_game.structure() || ef.right() != n_game.structure() {
            return Err(ThetaError::Structures);
        }
        let (mt, nt) = (m_game.table(), n_game.table());
        if mt.len() != nt.len() || (0..mt.len() as u32).any(|i| mt.node(i).shape != nt.node(i).shape) {
            return Err(ThetaError::Sentences);
        }
        let rank = mt.node(0).rank;
        if rank > ef.rounds() {
            return Err(ThetaError::Rank { rank, rounds: ef.rounds() });
        }
        let m_pos = m_game.initial();
        let ef_pos = ef.initial();
        Ok(Theta { m_game, sigma, m_pos, ef, tau, ef_pos, own: None, error: None })
    }

    /// The first broken invariant, if any.
    pub fn error(&self) -> Option<&StrategyError> {
        self.error.as_ref()
    }

    fn m_step(&mut self, mv: EvalMove) {
        self.sigma.observe(&self.m_game, &self.m_pos, &mv);
        self.m_pos = self.m_game.apply(&self.m_pos, &mv);
    }

    /// One EF round in which Abelard picks `e` on `side`; returns τ's reply.
    fn ef_round(&mut self, side: Side, e: usize) -> Result<usize, StrategyError> {
        if self.ef.turn(&self.ef_pos) != Turn::To(Player::Abelard) {
            return Err(StrategyError::Budget("the back-and-forth game has no round left".into()));
        }
        let pick = EfMove::Pick(side, e);
        self.tau.observe(&self.ef, &self.ef_pos, &pick);
        self.ef_pos = self.ef.apply(&self.ef_pos, &pick);
        let reply = self.tau.choose(&self.ef, &self.ef_pos)?;
        if !self.ef.legal_moves(&self.ef_pos).contains(&reply) {
            return Err(StrategyError::Other(format!("τ played the illegal reply {}", self.ef.move_string(&reply))));
        }
        self.tau.observe(&self.ef, &self.ef_pos, &reply);
        self.ef_pos = self.ef.apply(&self.ef_pos, &reply);
        if self.ef_pos.broken {
            return Err(StrategyError::Invariant("τ's pairing stopped being a partial isomorphism".into()));
        }
        let EfMove::Reply(_, r) = reply else { unreachable!() };
        Ok(r)
    }

    fn check_square(&self, n_pos: &EvalPosition) -> Result<(), StrategyError> {
        let ok = n_pos.node == self.m_pos.node
            && n_pos.env.len() == self.m_pos.env.len()
            && n_pos.env.iter().all(|&(v, b)| self.m_pos.value(v).is_some_and(|a| self.ef_pos.pairs.contains(&(a, b))));
        if ok {
            Ok(())
        } else {
            Err(StrategyError::Invariant(format!(
                "positions {} and {} are not matched by {}",
                self.m_game.key_string(&self.m_pos),
                n_pos.node,
                self.ef.key_string(&self.ef_pos)
            )))
        }
    }

    fn relay(&mut self, n_game: &EvalGame, from: &EvalPosition, mv: &EvalMove) -> Result<(), StrategyError> {
        match *mv {
            EvalMove::Child(_) => self.m_step(*mv),
            EvalMove::Element(b) => {
                let a = self.ef_round(Side::Right, b)?;
                self.m_step(EvalMove::Element(a));
            }
        }
        self.check_square(&n_game.apply(from, mv))
    }

    fn answer(&mut self, n_game: &EvalGame, at: &EvalPosition) -> Result<EvalMove, StrategyError> {
        let mv = match self.sigma.choose(&self.m_game, &self.m_pos)? {
            EvalMove::Child(i) => {
                self.m_step(EvalMove::Child(i));
                EvalMove::Child(i)
            }
            EvalMove::Element(a) => {
                self.m_step(EvalMove::Element(a));
                EvalMove::Element(self.ef_round(Side::Left, a)?)
            }
        };
        self.check_square(&n_game.apply(at, &mv))?;
        Ok(mv)
    }
}

impl Responder<EvalGame> for Theta {
    fn observe(&mut self, game: &EvalGame, from: &EvalPosition, mv: &EvalMove) {
        if self.own.take().is_some_and(|own| own == *mv) || self.error.is_some() {
            return;
        }
        if let Err(e) = self.relay(game, from, mv) {
            self.error = Some(e);
        }
    }

    fn choose(&mut self, game: &EvalGame, at: &EvalPosition) -> Result<EvalMove, StrategyError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        match self.answer(game, at) {
            Ok(mv) => {
                self.own = Some(mv);
                Ok(mv)
            }
            Err(e) => {
                self.error = Some(e.clone());
                Err(e)
            }
        }
    }

    fn fork(&self) -> Box<dyn Responder<EvalGame>> {
        Box::new(Theta {
            m_game: self.m_game.clone(),
            sigma: self.sigma.fork(),
            m_pos: self.m_pos.clone(),
            ef: self.ef.clone(),
            tau: self.tau.fork(),
            ef_pos: self.ef_pos.clone(),
            own: self.own,
            error: self.error.clone(),
        })
    }
}
