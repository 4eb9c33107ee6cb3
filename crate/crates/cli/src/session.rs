//! Interactive plays of one game between a human and the engine.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use gamelogic_core::ef::EfGame;
use gamelogic_core::eval::EvalGame;
use gamelogic_core::kernel::{Game, Player, Responder, Solver, Turn};
use gamelogic_core::meg::{sigma0, Budget, MegGame, Sigma0};

use crate::error::CliError;
use crate::files::{self, formula_arities, StructureFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Eloise,
    Abelard,
}

impl From<Player> for Role {
    fn from(p: Player) -> Role {
        match p {
            Player::Eloise => Role::Eloise,
            Player::Abelard => Role::Abelard,
        }
    }
}

impl Role {
    pub fn player(self) -> Player {
        match self {
            Role::Eloise => Player::Eloise,
            Role::Abelard => Player::Abelard,
        }
    }
}

fn default_consts() -> usize {
    3
}

fn default_steps() -> usize {
    40
}

/// Body of `POST /session`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "game", rename_all = "lowercase")]
pub enum CreateRequest {
    Eval {
        model: StructureFile,
        formula: String,
        human: Role,
    },
    Ef {
        left: StructureFile,
        right: StructureFile,
        rounds: usize,
        human: Role,
    },
    Meg {
        formula: String,
        #[serde(default = "default_consts")]
        max_consts: usize,
        #[serde(default = "default_steps")]
        max_steps: usize,
        human: Role,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub position: String,
    pub mover: Role,
    #[serde(rename = "move")]
    pub mv: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct View {
    pub game: &'static str,
    pub human: Role,
    pub position: String,
    pub legal_moves: Vec<String>,
    pub to_move: Option<Role>,
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Label {
    #[serde(rename = "move")]
    pub mv: String,
    pub winner: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveError {
    Over,
    NotYourTurn,
    Illegal(String),
}

impl std::fmt::Display for MoveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MoveError::Over => write!(f, "the game is over"),
            MoveError::NotYourTurn => write!(f, "it is not the human's turn"),
            MoveError::Illegal(m) => write!(f, "`{m}` is not a legal move here"),
        }
    }
}

/// The engine's side of a session.
trait Machine<G: Game>: Send {
    fn choose(&mut self, game: &G, at: &G::Position, depth: usize) -> G::Move;
    fn observe(&mut self, _game: &G, _from: &G::Position, _mv: &G::Move) {}
}

fn first_move<G: Game>(game: &G, at: &G::Position) -> G::Move {
    game.legal_moves(at).into_iter().next().expect("a position in play has a legal move")
}

/// The solver's move where the machine wins, otherwise the first legal move.
struct Solved;

impl<G: Game> Machine<G> for Solved {
    fn choose(&mut self, game: &G, at: &G::Position, depth: usize) -> G::Move {
        match Solver::new(game).best_move(at, depth) {
            Ok(Some(m)) => m,
            _ => first_move(game, at),
        }
    }
}

struct FirstLegal;

impl<G: Game> Machine<G> for FirstLegal {
    fn choose(&mut self, game: &G, at: &G::Position, _depth: usize) -> G::Move {
        first_move(game, at)
    }
}

/// Abelard firing every task in queue order.
struct Queue(Sigma0);

impl Machine<MegGame> for Queue {
    fn choose(&mut self, game: &MegGame, at: &<MegGame as Game>::Position, _depth: usize) -> <MegGame as Game>::Move {
        self.0.choose(game, at).unwrap_or_else(|_| first_move(game, at))
    }

    fn observe(&mut self, game: &MegGame, from: &<MegGame as Game>::Position, mv: &<MegGame as Game>::Move) {
        self.0.observe(game, from, mv);
    }
}

struct Live<G: Game> {
    kind: &'static str,
    game: Arc<G>,
    position: G::Position,
    history: Vec<Step>,
    human: Player,
    machine: Box<dyn Machine<G>>,
    step_bound: Option<usize>,
    explainable: bool,
}

trait Play: Send {
    fn view(&self) -> View;
    fn history(&self) -> &[Step];
    fn human_move(&mut self, text: &str) -> Result<Vec<String>, MoveError>;
    fn explain(&self) -> Option<Vec<Label>>;
}

impl<G> Live<G>
where
    G: Game + Send + Sync + 'static,
    G::Position: Send,
{
    fn truncated(&self) -> bool {
        self.step_bound.is_some_and(|b| self.history.len() >= b)
            && matches!(self.game.turn(&self.position), Turn::To(_))
    }

    fn mover(&self) -> Option<Player> {
        match self.game.turn(&self.position) {
            Turn::To(p) if !self.truncated() => Some(p),
            _ => None,
        }
    }

    fn apply(&mut self, mover: Player, mv: G::Move) -> String {
        self.machine.observe(&self.game, &self.position, &mv);
        let text = self.game.move_string(&mv);
        self.history.push(Step {
            position: self.game.key_string(&self.position),
            mover: mover.into(),
            mv: text.clone(),
        });
        self.position = self.game.apply(&self.position, &mv);
        text
    }

    fn machine_turns(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(p) = self.mover().filter(|&p| p != self.human) {
            let mv = self.machine.choose(&self.game, &self.position, self.history.len());
            out.push(self.apply(p, mv));
        }
        out
    }
}

impl<G> Play for Live<G>
where
    G: Game + Send + Sync + 'static,
    G::Position: Send,
{
    fn view(&self) -> View {
        let status = match self.game.turn(&self.position) {
            Turn::Over(Player::Eloise) => "eloise_won",
            Turn::Over(Player::Abelard) => "abelard_won",
            Turn::To(_) if self.truncated() => "truncated",
            Turn::To(_) => "ongoing",
        };
        let to_move = self.mover();
        let legal_moves = match to_move {
            Some(_) => self.game.legal_moves(&self.position).iter().map(|m| self.game.move_string(m)).collect(),
            None => Vec::new(),
        };
        View {
            game: self.kind,
            human: self.human.into(),
            position: self.game.key_string(&self.position),
            legal_moves,
            to_move: to_move.map(Role::from),
            status,
        }
    }

    fn history(&self) -> &[Step] {
        &self.history
    }

    fn human_move(&mut self, text: &str) -> Result<Vec<String>, MoveError> {
        match self.mover() {
            None => return Err(MoveError::Over),
            Some(p) if p != self.human => return Err(MoveError::NotYourTurn),
            Some(_) => {}
        }
        let mv = self.game.parse_move(&self.position, text).ok_or_else(|| MoveError::Illegal(text.into()))?;
        self.apply(self.human, mv);
        Ok(self.machine_turns())
    }

    fn explain(&self) -> Option<Vec<Label>> {
        if !self.explainable {
            return None;
        }
        if self.mover().is_none() {
            return Some(Vec::new());
        }
        let labels = Solver::new(&*self.game).move_labels(&self.position, self.history.len()).ok()?;
        Some(
            labels
                .into_iter()
                .map(|(m, winner)| Label { mv: self.game.move_string(&m), winner: winner.into() })
                .collect(),
        )
    }
}

/// One running session.
pub struct Session {
    play: Box<dyn Play>,
    created: Vec<String>,
}

fn live<G>(
    kind: &'static str,
    game: G,
    human: Player,
    machine: Box<dyn Machine<G>>,
    step_bound: Option<usize>,
) -> Session
where
    G: Game + Send + Sync + 'static,
    G::Position: Send,
{
    let game = Arc::new(game);
    let mut l = Live {
        kind,
        position: game.initial(),
        game,
        history: Vec::new(),
        human,
        machine,
        step_bound,
        explainable: step_bound.is_none(),
    };
    let created = l.machine_turns();
    Session { play: Box::new(l), created }
}

impl Session {
    pub fn create(req: CreateRequest) -> Result<Session, CliError> {
        let user = |e: &dyn std::fmt::Display| CliError::User(e.to_string());
        Ok(match req {
            CreateRequest::Eval { model, formula, human } => {
                let vocab = files::vocabulary(&[&model], &formula_arities(&formula)?, true)?;
                let m = model.to_structure(&vocab)?;
                let phi = files::parse_sentence(&formula, &vocab)?;
                let game = EvalGame::new(Arc::new(m), &phi).map_err(|e| user(&e))?;
                live("eval", game, human.player(), Box::new(Solved), None)
            }
            CreateRequest::Ef { left, right, rounds, human } => {
                let vocab = files::vocabulary(&[&left, &right], &Default::default(), true)?;
                let (m, n) = (left.to_structure(&vocab)?, right.to_structure(&vocab)?);
                let game = EfGame::new(Arc::new(m), Arc::new(n), rounds).map_err(|e| user(&e))?;
                live("ef", game, human.player(), Box::new(Solved), None)
            }
            CreateRequest::Meg { formula, max_consts, max_steps, human } => {
                let vocab = files::formula_vocabulary(&formula, true)?;
                let phi = files::parse_sentence(&formula, &vocab)?;
                let game = MegGame::new(&phi, &vocab, Budget { max_consts, max_steps }).map_err(|e| user(&e))?;
                let machine: Box<dyn Machine<MegGame>> = match human {
                    Role::Eloise => Box::new(Queue(sigma0(&game))),
                    Role::Abelard => Box::new(FirstLegal),
                };
                live("meg", game, human.player(), machine, Some(max_steps))
            }
        })
    }

    /// Machine moves played before the human's first turn.
    pub fn opening_moves(&self) -> &[String] {
        &self.created
    }

    pub fn view(&self) -> View {
        self.play.view()
    }

    pub fn history(&self) -> &[Step] {
        self.play.history()
    }

    /// Plays the human's move and the machine's replies.
    pub fn human_move(&mut self, text: &str) -> Result<Vec<String>, MoveError> {
        self.play.human_move(text)
    }

    /// Winner after each legal move; `None` for games without a solved table.
    pub fn explain(&self) -> Option<Vec<Label>> {
        self.play.explain()
    }
}
