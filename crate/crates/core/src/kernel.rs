//! Finite two-player win/lose games: solving by backward induction,
//! strategies, exhaustive strategy checking and plays.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::hash::Hash;
use hashbrown::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Eloise,
    Abelard,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Eloise => Player::Abelard,
            Player::Abelard => Player::Eloise,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Player::Eloise => "eloise",
            Player::Abelard => "abelard",
        }
    }

    pub fn from_name(name: &str) -> Option<Player> {
        match name.to_ascii_lowercase().as_str() {
            "eloise" => Some(Player::Eloise),
            "abelard" => Some(Player::Abelard),
            _ => None,
        }
    }
}

impl core::fmt::Display for Player {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Player::Eloise => "Eloise",
            Player::Abelard => "Abelard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    To(Player),
    Over(Player),
}

/// A finite game. Keys must determine the mover, the legal moves, the keys
/// of successor positions and the number of moves played so far.
pub trait Game {
    type Position: Clone + Debug;
    type Move: Clone + PartialEq + Debug;
    type Key: Clone + Eq + Hash;

    fn initial(&self) -> Self::Position;
    fn turn(&self, p: &Self::Position) -> Turn;
    /// Non-empty whenever the game is not over.
    fn legal_moves(&self, p: &Self::Position) -> Vec<Self::Move>;
    fn apply(&self, p: &Self::Position, m: &Self::Move) -> Self::Position;
    fn key(&self, p: &Self::Position) -> Self::Key;
    fn key_string(&self, p: &Self::Position) -> String;
    fn move_string(&self, m: &Self::Move) -> String;

    /// Winner of a play cut off by a step bound, if the game defines one.
    fn truncation_winner(&self) -> Option<Player> {
        None
    }

    fn parse_move(&self, p: &Self::Position, text: &str) -> Option<Self::Move> {
        self.legal_moves(p).into_iter().find(|m| self.move_string(m) == text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("step bound reached in a game without a truncation rule")]
    StepBound,
    #[error("position limit of {0} exceeded")]
    PositionLimit(usize),
}

#[derive(Debug, Clone)]
struct Label<M> {
    winner: Player,
    best: Option<M>,
}

/// Memoized backward induction. The first winning move in legal-move
/// order is recorded for the mover.
pub struct Solver<'g, G: Game> {
    game: &'g G,
    step_bound: Option<usize>,
    position_limit: Option<usize>,
    memo: HashMap<G::Key, Label<G::Move>>,
}

impl<'g, G: Game> Solver<'g, G> {
    pub fn new(game: &'g G) -> Self {
        Solver { game, step_bound: None, position_limit: None, memo: HashMap::new() }
    }

    pub fn with_step_bound(mut self, bound: Option<usize>) -> Self {
        self.step_bound = bound;
        self
    }

    pub fn with_position_limit(mut self, limit: Option<usize>) -> Self {
        self.position_limit = limit;
        self
    }

    pub fn game(&self) -> &'g G {
        self.game
    }

    /// Number of positions labelled so far.
    pub fn explored(&self) -> usize {
        self.memo.len()
    }

    /// Winner from `p`, reached after `depth` moves.
    pub fn winner_at(&mut self, p: &G::Position, depth: usize) -> Result<Player, SolveError> {
        let key = self.game.key(p);
        if let Some(l) = self.memo.get(&key) {
            return Ok(l.winner);
        }
        let label = match self.game.turn(p) {
            Turn::Over(w) => Label { winner: w, best: None },
            Turn::To(_) if self.step_bound.is_some_and(|b| depth >= b) => {
                Label { winner: self.game.truncation_winner().ok_or(SolveError::StepBound)?, best: None }
            }
            Turn::To(mover) => {
                let mut best = None;
                for m in self.game.legal_moves(p) {
                    let child = self.game.apply(p, &m);
                    if self.winner_at(&child, depth + 1)? == mover {
                        best = Some(m);
                        break;
                    }
                }
                let winner = if best.is_some() { mover } else { mover.opponent() };
                Label { winner, best }
            }
        };
        if let Some(limit) = self.position_limit {
            if self.memo.len() >= limit {
                return Err(SolveError::PositionLimit(limit));
            }
        }
        let w = label.winner;
        self.memo.insert(key, label);
        Ok(w)
    }

    /// Labels every legal move at `p` by the winner of the position it leads to.
    pub fn move_labels(&mut self, p: &G::Position, depth: usize) -> Result<Vec<(G::Move, Player)>, SolveError> {
        let mut out = Vec::new();
        for m in self.game.legal_moves(p) {
            let w = self.winner_at(&self.game.apply(p, &m), depth + 1)?;
            out.push((m, w));
        }
        Ok(out)
    }

    /// The recorded winning move at `p`, if the mover wins there.
    pub fn best_move(&mut self, p: &G::Position, depth: usize) -> Result<Option<G::Move>, SolveError> {
        self.winner_at(p, depth)?;
        Ok(self.memo.get(&self.game.key(p)).and_then(|l| l.best.clone()))
    }

    /// Solves from the initial position and extracts the winner's strategy
    /// on every position reachable while the winner follows it.
    pub fn solve(&mut self) -> Result<Solution<G>, SolveError> {
        let start = self.game.initial();
        let winner = self.winner_at(&start, 0)?;
        let mut moves = HashMap::new();
        let mut stack = alloc::vec![(start, 0usize)];
        let mut seen = hashbrown::HashSet::new();
        while let Some((p, depth)) = stack.pop() {
            let key = self.game.key(&p);
            if !seen.insert(key.clone()) {
                continue;
            }
            if self.step_bound.is_some_and(|b| depth >= b) {
                continue;
            }
            match self.game.turn(&p) {
                Turn::Over(_) => {}
                Turn::To(mover) if mover == winner => {
                    let m = self.best_move(&p, depth)?.expect("winner has a recorded move");
                    stack.push((self.game.apply(&p, &m), depth + 1));
                    moves.insert(key, m);
                }
                Turn::To(_) => {
                    for m in self.game.legal_moves(&p) {
                        stack.push((self.game.apply(&p, &m), depth + 1));
                    }
                }
            }
        }
        Ok(Solution { winner, strategy: PositionalStrategy { player: winner, moves } })
    }
}

/// Solves `game` from its initial position.
pub fn solve<G: Game>(game: &G, step_bound: Option<usize>) -> Result<Solution<G>, SolveError> {
    Solver::new(game).with_step_bound(step_bound).solve()
}

pub struct Solution<G: Game> {
    pub winner: Player,
    pub strategy: PositionalStrategy<G>,
}

/// A move for each position key where the player is to move.
pub struct PositionalStrategy<G: Game> {
    pub player: Player,
    pub moves: HashMap<G::Key, G::Move>,
}

impl<G: Game> Clone for PositionalStrategy<G> {
    fn clone(&self) -> Self {
        PositionalStrategy { player: self.player, moves: self.moves.clone() }
    }
}

impl<G: Game> PositionalStrategy<G> {
    pub fn get(&self, game: &G, p: &G::Position) -> Option<&G::Move> {
        self.moves.get(&game.key(p))
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Serialized key to serialized move, for every position the strategy
    /// reaches against all opponent lines.
    pub fn dump(&self, game: &G) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut stack = alloc::vec![game.initial()];
        let mut seen = hashbrown::HashSet::new();
        while let Some(p) = stack.pop() {
            if !seen.insert(game.key(&p)) {
                continue;
            }
            match game.turn(&p) {
                Turn::Over(_) => {}
                Turn::To(mover) if mover == self.player => {
                    if let Some(m) = self.get(game, &p) {
                        out.insert(game.key_string(&p), game.move_string(m));
                        stack.push(game.apply(&p, m));
                    }
                }
                Turn::To(_) => stack.extend(game.legal_moves(&p).iter().map(|m| game.apply(&p, m))),
            }
        }
        out
    }

    pub fn responder(self) -> StrategyResponder<G> {
        StrategyResponder { strategy: Arc::new(self) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("no move recorded for position {0}")]
    Uncovered(String),
    #[error("invariant broken: {0}")]
    Invariant(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Other(String),
}

/// A possibly history-dependent move policy for one player. `observe` is
/// called for every move of the play, the responder's own included.
pub trait Responder<G: Game> {
    fn observe(&mut self, _game: &G, _from: &G::Position, _mv: &G::Move) {}
    fn choose(&mut self, game: &G, at: &G::Position) -> Result<G::Move, StrategyError>;
    /// An independent copy carrying the same state.
    fn fork(&self) -> Box<dyn Responder<G>>;
}

pub struct StrategyResponder<G: Game> {
    strategy: Arc<PositionalStrategy<G>>,
}

impl<G: Game> Clone for StrategyResponder<G> {
    fn clone(&self) -> Self {
        StrategyResponder { strategy: self.strategy.clone() }
    }
}

impl<G: Game + 'static> Responder<G> for StrategyResponder<G> {
    fn choose(&mut self, game: &G, at: &G::Position) -> Result<G::Move, StrategyError> {
        self.strategy.get(game, at).cloned().ok_or_else(|| StrategyError::Uncovered(game.key_string(at)))
    }

    fn fork(&self) -> Box<dyn Responder<G>> {
        Box::new(self.clone())
    }
}

/// Plays the first legal move everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstMove;

impl<G: Game + 'static> Responder<G> for FirstMove {
    fn choose(&mut self, game: &G, at: &G::Position) -> Result<G::Move, StrategyError> {
        game.legal_moves(at).into_iter().next().ok_or_else(|| StrategyError::Other("no legal move".into()))
    }

    fn fork(&self) -> Box<dyn Responder<G>> {
        Box::new(*self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyFailure {
    #[error("{player} loses after [{}]", history.join(", "))]
    Lost { player: Player, history: Vec<String> },
    #[error("strategy failed after [{}]: {error}", history.join(", "))]
    Strategy { history: Vec<String>, error: StrategyError },
    #[error("illegal move {mv} after [{}]", history.join(", "))]
    Illegal { history: Vec<String>, mv: String },
    #[error("step bound reached after [{}]", history.join(", "))]
    StepBound { history: Vec<String> },
}

/// Checks that `player` wins every play in which they follow `r`, against
/// all opponent moves. The responder is forked at every opponent branch.
pub fn verify_strategy<G: Game>(
    game: &G,
    r: Box<dyn Responder<G>>,
    player: Player,
    step_bound: Option<usize>,
) -> Result<(), VerifyFailure> {
    let mut history = Vec::new();
    verify_from(game, &game.initial(), r, player, step_bound, &mut history)
}

fn verify_from<G: Game>(
    game: &G,
    p: &G::Position,
    mut r: Box<dyn Responder<G>>,
    player: Player,
    step_bound: Option<usize>,
    history: &mut Vec<String>,
) -> Result<(), VerifyFailure> {
    let mover = match game.turn(p) {
        Turn::Over(w) if w == player => return Ok(()),
        Turn::Over(_) => return Err(VerifyFailure::Lost { player, history: history.clone() }),
        Turn::To(_) if step_bound.is_some_and(|b| history.len() >= b) => {
            return match game.truncation_winner() {
                Some(w) if w == player => Ok(()),
                Some(_) => Err(VerifyFailure::Lost { player, history: history.clone() }),
                None => Err(VerifyFailure::StepBound { history: history.clone() }),
            };
        }
        Turn::To(m) => m,
    };
    let legal = game.legal_moves(p);
    if mover == player {
        let m = r.choose(game, p).map_err(|error| VerifyFailure::Strategy { history: history.clone(), error })?;
        if !legal.contains(&m) {
            return Err(VerifyFailure::Illegal { history: history.clone(), mv: game.move_string(&m) });
        }
        r.observe(game, p, &m);
        history.push(game.move_string(&m));
        verify_from(game, &game.apply(p, &m), r, player, step_bound, history)?;
        history.pop();
        return Ok(());
    }
    let last = legal.len() - 1;
    let mut r = Some(r);
    for (i, m) in legal.iter().enumerate() {
        let mut branch = if i == last { r.take().unwrap() } else { r.as_ref().unwrap().fork() };
        branch.observe(game, p, m);
        history.push(game.move_string(m));
        verify_from(game, &game.apply(p, m), branch, player, step_bound, history)?;
        history.pop();
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PlayStep<G: Game> {
    pub position: G::Position,
    pub mover: Player,
    pub mv: G::Move,
}

#[derive(Debug, Clone)]
pub struct PlayRecord<G: Game> {
    pub steps: Vec<PlayStep<G>>,
    pub final_position: G::Position,
    pub winner: Player,
    pub truncated: bool,
}

impl<G: Game> PlayRecord<G> {
    /// (position key, mover, move) triples followed by the final key.
    pub fn transcript(&self, game: &G) -> (Vec<(String, Player, String)>, String) {
        let steps =
            self.steps.iter().map(|s| (game.key_string(&s.position), s.mover, game.move_string(&s.mv))).collect();
        (steps, game.key_string(&self.final_position))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlayError {
    #[error("{player} failed: {error}")]
    Strategy { player: Player, error: StrategyError },
    #[error("{player} played the illegal move {mv}")]
    Illegal { player: Player, mv: String },
    #[error("step bound reached in a game without a truncation rule")]
    StepBound,
}

/// Plays the two responders against each other.
pub fn play<G: Game>(
    game: &G,
    eloise: &mut dyn Responder<G>,
    abelard: &mut dyn Responder<G>,
    step_bound: Option<usize>,
) -> Result<PlayRecord<G>, PlayError> {
    let mut p = game.initial();
    let mut steps = Vec::new();
    loop {
        let mover = match game.turn(&p) {
            Turn::Over(winner) => return Ok(PlayRecord { steps, final_position: p, winner, truncated: false }),
            Turn::To(_) if step_bound.is_some_and(|b| steps.len() >= b) => {
                let winner = game.truncation_winner().ok_or(PlayError::StepBound)?;
                return Ok(PlayRecord { steps, final_position: p, winner, truncated: true });
            }
            Turn::To(m) => m,
        };
        let r: &mut dyn Responder<G> = if mover == Player::Eloise { &mut *eloise } else { &mut *abelard };
        let m = r.choose(game, &p).map_err(|error| PlayError::Strategy { player: mover, error })?;
        if !game.legal_moves(&p).contains(&m) {
            return Err(PlayError::Illegal { player: mover, mv: game.move_string(&m) });
        }
        eloise.observe(game, &p, &m);
        abelard.observe(game, &p, &m);
        let next = game.apply(&p, &m);
        steps.push(PlayStep { position: p, mover, mv: m });
        p = next;
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    /// Nim with one heap: take one or two, the player who cannot move loses.
    pub struct Nim(pub u8);

    impl Game for Nim {
        type Position = (u8, Player);
        type Move = u8;
        type Key = (u8, Player);

        fn initial(&self) -> (u8, Player) {
            (self.0, Player::Eloise)
        }
        fn turn(&self, p: &(u8, Player)) -> Turn {
            if p.0 == 0 {
                Turn::Over(p.1.opponent())
            } else {
                Turn::To(p.1)
            }
        }
        fn legal_moves(&self, p: &(u8, Player)) -> Vec<u8> {
            (1..=p.0.min(2)).collect()
        }
        fn apply(&self, p: &(u8, Player), m: &u8) -> (u8, Player) {
            (p.0 - m, p.1.opponent())
        }
        fn key(&self, p: &(u8, Player)) -> (u8, Player) {
            *p
        }
        fn key_string(&self, p: &(u8, Player)) -> String {
            format!("{}|{}", p.0, p.1.name())
        }
        fn move_string(&self, m: &u8) -> String {
            format!("take:{m}")
        }
    }

    #[test]
    fn nim_winners() {
        for n in 0..12u8 {
            let sol = solve(&Nim(n), None).unwrap();
            let expected = if n % 3 == 0 { Player::Abelard } else { Player::Eloise };
            assert_eq!(sol.winner, expected, "heap {n}");
            verify_strategy(&Nim(n), Box::new(sol.strategy.clone().responder()), sol.winner, None).unwrap();
            let loser = sol.winner.opponent();
            assert!(verify_strategy(&Nim(n), Box::new(FirstMove), loser, None).is_err());
        }
    }

    #[test]
    fn play_matches_solution() {
        let game = Nim(7);
        let sol = solve(&game, None).unwrap();
        let mut e = sol.strategy.responder();
        let rec = play(&game, &mut e, &mut FirstMove, None).unwrap();
        assert_eq!(rec.winner, Player::Eloise);
        assert!(!rec.truncated);
        let (steps, last) = rec.transcript(&game);
        assert_eq!(steps[0], ("7|eloise".into(), Player::Eloise, "take:1".into()));
        assert_eq!(last, "0|abelard");
    }

    #[test]
    fn step_bound_without_truncation_rule() {
        assert_eq!(solve(&Nim(9), Some(3)).err(), Some(SolveError::StepBound));
        assert_eq!(
            verify_strategy(&Nim(9), Box::new(FirstMove), Player::Eloise, Some(2)),
            Err(VerifyFailure::StepBound { history: vec!["take:1".into(), "take:1".into()] })
        );
    }

    #[test]
    fn labels_and_dump() {
        let game = Nim(4);
        let mut solver = Solver::new(&game);
        let labels = solver.move_labels(&game.initial(), 0).unwrap();
        assert_eq!(labels, vec![(1, Player::Eloise), (2, Player::Abelard)]);
        let sol = solver.solve().unwrap();
        let dump = sol.strategy.dump(&game);
        assert_eq!(dump.get("4|eloise").map(String::as_str), Some("take:1"));
        assert!(dump.keys().all(|k| k.ends_with("eloise")));
    }
}
