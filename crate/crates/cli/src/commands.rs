//! The batch subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gamelogic_core::ef::EfGame;
use gamelogic_core::eval::EvalGame;
use gamelogic_core::hintikka::{distinguishing_sentence, xi_a, DistinguishError, HintikkaIndex, XiEloise};
use gamelogic_core::kernel::{play, solve, verify_strategy, Game, Player, Responder, Solution, StrategyError};
use gamelogic_core::meg::{sigma0, Budget, MegGame, Tableau};
use gamelogic_core::oracle::Dag;
use gamelogic_core::parse::print_formula;
use gamelogic_core::structure::{Assignment, Structure};
use gamelogic_core::syntax::{Formula, Vocabulary};
use gamelogic_core::translate::{solve_meg, MegOutcome, Phi, Theta};

use crate::error::CliError;
use crate::files::{self, formula_arities, StrategyFile, StructureFile};
use crate::report::{sha256_hex, Input, RunReport};

#[derive(Debug, Parser)]
#[command(name = "gamelogic", version, about = "Evaluation, model existence and Ehrenfeucht-Fraisse games")]
pub struct Cli {
    /// Write a JSON run report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Read structures and formulas without the identity symbol.
    #[arg(long, global = true)]
    pub no_identity: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the evaluation game of a sentence on a structure.
    Eval {
        model: PathBuf,
        /// Formula text, or a file holding it.
        formula: String,
        #[arg(long, value_name = "PATH")]
        dump_strategy: Option<PathBuf>,
    },
    /// Solve the Ehrenfeucht-Fraisse game of two structures.
    Ef {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        rounds: usize,
        #[arg(long, value_name = "PATH")]
        dump_strategy: Option<PathBuf>,
    },
    /// Print a sentence of the given rank true in left and false in right.
    Distinguish {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        rounds: usize,
    },
    /// Search for a model or a refutation of a sentence.
    Meg {
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_consts: usize,
        #[arg(long, default_value_t = 60)]
        max_steps: usize,
        #[arg(long, value_name = "PATH")]
        dump_tableau: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        dump_model: Option<PathBuf>,
    },
    /// Run a strategy translation and verify its output.
    Translate {
        #[command(subcommand)]
        kind: Translation,
    },
    /// Check a dumped strategy against every opponent line.
    Verify {
        #[arg(long)]
        game: GameKind,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long)]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_name = "PATH")]
        strategy: PathBuf,
        #[arg(long)]
        player: PlayerArg,
    },
    /// Serve the session protocol over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_name = "DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Translation {
    /// Eloise's strategy in G(M, phi) to one in the model existence game.
    Phi {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_consts: usize,
        #[arg(long, default_value_t = 40)]
        max_steps: usize,
    },
    /// Eloise's model existence strategy to a model and her strategy in it.
    Psi {
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_consts: usize,
        #[arg(long, default_value_t = 60)]
        max_steps: usize,
    },
    /// Transfer a winning strategy in G(M, phi) to G(N, phi) along EF_m(M, N).
    Theta {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        rounds: usize,
    },
    /// The distinguishing sentence with strategies for both players.
    Xi {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        rounds: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameKind {
    Eval,
    Ef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlayerArg {
    Eloise,
    Abelard,
}

impl PlayerArg {
    fn player(self) -> Player {
        match self {
            PlayerArg::Eloise => Player::Eloise,
            PlayerArg::Abelard => Player::Abelard,
        }
    }
}

/// Shared state of one invocation.
pub struct Run {
    pub report: RunReport,
    pub identity: bool,
    pub out: Vec<String>,
}

impl Run {
    pub fn new(argv: Vec<String>, identity: bool) -> Self {
        Run { report: RunReport::new(argv), identity, out: Vec::new() }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.out.push(line.into());
    }

    fn structure_file(&mut self, role: &str, path: &Path) -> Result<StructureFile, CliError> {
        let text = self.report.read_input(role, path)?;
        StructureFile::parse(&text).map_err(|e| match e {
            CliError::User(m) => CliError::User(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn formula_text(&mut self, arg: &str) -> Result<String, CliError> {
        let path = Path::new(arg);
        if path.is_file() {
            return self.report.read_input("formula", path).map(|t| t.trim().to_string());
        }
        self.report.inputs.push(Input {
            role: "formula".into(),
            path: "<inline>".into(),
            sha256: sha256_hex(arg.as_bytes()),
        });
        Ok(arg.to_string())
    }

    fn dump(&mut self, name: &str, path: &Path, text: &str) -> Result<(), CliError> {
        files::write(path, text)?;
        self.report.artifact(name, json!({"path": path.display().to_string(), "sha256": sha256_hex(text.as_bytes())}));
        Ok(())
    }

    fn winner(&mut self, w: Player) {
        self.report.winner = Some(w.name().into());
    }
}

/// Runs a batch command, filling `run.out` and `run.report`.
pub fn execute(run: &mut Run, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Eval { model, formula, dump_strategy } => eval(run, model, formula, dump_strategy.as_deref()),
        Command::Ef { left, right, rounds, dump_strategy } => ef(run, left, right, *rounds, dump_strategy.as_deref()),
        Command::Distinguish { left, right, rounds } => distinguish(run, left, right, *rounds),
        Command::Meg { formula, max_consts, max_steps, dump_tableau, dump_model } => meg(
            run,
            formula,
            Budget { max_consts: *max_consts, max_steps: *max_steps },
            dump_tableau.as_deref(),
            dump_model.as_deref(),
        ),
        Command::Translate { kind } => translate(run, kind),
        Command::Verify { game, model, formula, left, right, rounds, strategy, player } => {
            let inputs = GameInputs { model, formula, left, right, rounds };
            verify(run, *game, &inputs, strategy, player.player())
        }
        Command::Serve { .. } => Err(CliError::User("serve is not a batch command".into())),
    }
}

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

fn solved<G: Game>(game: &G) -> Solution<G> {
    match solve(game, None) {
        Ok(sol) => sol,
        Err(e) => unreachable!("unbounded solve of a finite game: {e}"),
    }
}

fn truth(m: &Structure, f: &Formula) -> Result<bool, CliError> {
    m.tarski_truth(f, &Assignment::new()).map_err(user)
}

/// One structure and a sentence over its vocabulary.
fn load_model(run: &mut Run, model: &Path, formula: &str) -> Result<(Arc<Structure>, Formula), CliError> {
    let file = run.structure_file("model", model)?;
    let text = run.formula_text(formula)?;
    let vocab = files::vocabulary(&[&file], &formula_arities(&text)?, run.identity)?;
    let m = file.to_structure(&vocab)?;
    let phi = files::parse_sentence(&text, &vocab)?;
    Ok((Arc::new(m), phi))
}

type Loaded = (Arc<Structure>, Arc<Structure>, Option<Formula>);

/// Two structures over a common vocabulary, and a sentence if given.
fn load_pair(run: &mut Run, left: &Path, right: &Path, formula: Option<&str>) -> Result<Loaded, CliError> {
    let l = run.structure_file("left", left)?;
    let r = run.structure_file("right", right)?;
    let text = formula.map(|f| run.formula_text(f)).transpose()?;
    let hints = match &text {
        Some(t) => formula_arities(t)?,
        None => BTreeMap::new(),
    };
    let vocab = files::vocabulary(&[&l, &r], &hints, run.identity)?;
    let phi = text.map(|t| files::parse_sentence(&t, &vocab)).transpose()?;
    Ok((Arc::new(l.to_structure(&vocab)?), Arc::new(r.to_structure(&vocab)?), phi))
}

fn strategy_file<G: Game>(kind: &str, game: &G, sol: &Solution<G>) -> String {
    files::to_json(&StrategyFile {
        game: kind.into(),
        player: sol.strategy.player.name().into(),
        moves: sol.strategy.dump(game),
    })
}

fn eval(run: &mut Run, model: &Path, formula: &str, dump: Option<&Path>) -> Result<(), CliError> {
    let (m, phi) = load_model(run, model, formula)?;
    let game = EvalGame::new(m.clone(), &phi).map_err(user)?;
    let sol = solved(&game);
    let tarski = truth(&m, &phi)?;
    if tarski != (sol.winner == Player::Eloise) {
        return Err(CliError::Oracle(format!("{} wins the evaluation game but the sentence is {tarski}", sol.winner)));
    }
    run.say(format!("{tarski} ({} wins)", sol.winner));
    run.report.outcome = tarski.to_string();
    run.winner(sol.winner);
    run.report.stat("strategy_positions", sol.strategy.len());
    if let Some(path) = dump {
        run.dump("strategy", path, &strategy_file("eval", &game, &sol))?;
    }
    Ok(())
}

/// N satisfies the Hintikka sentence of M exactly when Eloise wins.
fn hintikka_check(m: &Arc<Structure>, n: &Structure, rounds: usize, winner: Player) -> Result<(), CliError> {
    let index = HintikkaIndex::new(m.clone(), rounds);
    let dag = Dag::new(index.formula(), m.vocabulary()).map_err(user)?;
    let holds = dag.truth(n, &Assignment::new()).map_err(user)?;
    if holds != (winner == Player::Eloise) {
        return Err(CliError::Oracle(format!(
            "{winner} wins EF_{rounds} but the Hintikka sentence evaluates to {holds}"
        )));
    }
    Ok(())
}

fn ef(run: &mut Run, left: &Path, right: &Path, rounds: usize, dump: Option<&Path>) -> Result<(), CliError> {
    let (m, n, _) = load_pair(run, left, right, None)?;
    let game = EfGame::new(m.clone(), n.clone(), rounds).map_err(user)?;
    let sol = solved(&game);
    hintikka_check(&m, &n, rounds, sol.winner)?;
    run.say(format!("{} wins EF_{rounds}", sol.winner));
    run.report.outcome = format!("{} wins EF_{rounds}", sol.winner.name());
    run.winner(sol.winner);
    run.report.stat("strategy_positions", sol.strategy.len());
    if let Some(path) = dump {
        run.dump("strategy", path, &strategy_file("ef", &game, &sol))?;
    }
    Ok(())
}

fn distinguish(run: &mut Run, left: &Path, right: &Path, rounds: usize) -> Result<(), CliError> {
    let (m, n, _) = load_pair(run, left, right, None)?;
    match distinguishing_sentence(m, n, rounds) {
        Ok(Some(f)) => {
            let text = print_formula(&f);
            run.say(text.clone());
            run.report.outcome = "distinguished".into();
            run.winner(Player::Abelard);
            run.report.stat("sentence_size", f.size());
            run.report.artifact("sentence", text);
        }
        Ok(None) => {
            run.say(format!("elementarily {rounds}-equivalent"));
            run.report.outcome = format!("elementarily {rounds}-equivalent");
            run.winner(Player::Eloise);
        }
        Err(DistinguishError::Oracle(e)) => return Err(CliError::Oracle(e)),
        Err(e) => return Err(user(e)),
    }
    Ok(())
}

pub fn tableau_json(t: &Tableau, game: &MegGame) -> Value {
    match t {
        Tableau::Step { rule, principal, added, children } => json!({
            "rule": rule.name(),
            "principal": game.pair_string(principal),
            "added": added.iter().map(|p| game.pair_string(p)).collect::<Vec<_>>(),
            "children": children.iter().map(|c| tableau_json(c, game)).collect::<Vec<_>>(),
        }),
        Tableau::Closed { contradiction: (a, b) } => json!({
            "contradiction": [game.pair_string(a), game.pair_string(b)],
        }),
    }
}

/// A sentence for the model existence game, with the vocabulary it uses.
fn meg_input(run: &mut Run, formula: &str, budget: Budget) -> Result<(Formula, Vocabulary, MegGame), CliError> {
    let text = run.formula_text(formula)?;
    let vocab = files::formula_vocabulary(&text, run.identity)?;
    let phi = files::parse_sentence(&text, &vocab)?;
    let game = MegGame::new(&phi, &vocab, budget).map_err(user)?;
    Ok((phi, vocab, game))
}

fn model_line(m: &Structure) -> String {
    serde_json::to_string(&StructureFile::from_structure(m)).expect("serializable")
}

fn meg(
    run: &mut Run,
    formula: &str,
    budget: Budget,
    dump_tableau: Option<&Path>,
    dump_model: Option<&Path>,
) -> Result<(), CliError> {
    let (phi, vocab, game) = meg_input(run, formula, budget)?;
    match solve_meg(&phi, &vocab, budget).map_err(user)? {
        MegOutcome::Refuted(t) => {
            t.check(&game).map_err(|e| CliError::Oracle(format!("ill-formed tableau: {e}")))?;
            run.say(format!("REFUTED (tableau with {} nodes, depth {})", t.size(), t.depth()));
            run.report.outcome = "refuted".into();
            run.winner(Player::Abelard);
            run.report.stat("tableau_nodes", t.size());
            run.report.stat("tableau_depth", t.depth());
            if let Some(path) = dump_tableau {
                run.dump("tableau", path, &files::to_json(&tableau_json(&t, &game)))?;
            }
        }
        MegOutcome::ModelFound(out) => {
            if !truth(&out.model, &phi)? {
                return Err(CliError::Oracle("the extracted model does not satisfy the sentence".into()));
            }
            run.say("MODEL FOUND");
            run.say(model_line(&out.model));
            run.report.outcome = "model found".into();
            run.winner(Player::Eloise);
            run.report.stat("model_size", out.model.size());
            run.report.stat("play_length", out.play.steps.len());
            run.report.artifact("model", StructureFile::from_structure(&out.model));
            if let Some(path) = dump_model {
                run.dump("model_file", path, &files::to_json(&StructureFile::from_structure(&out.model)))?;
            }
        }
        MegOutcome::Unknown(reason) => {
            run.say(format!("UNKNOWN ({})", reason.name()));
            run.report.outcome = format!("unknown ({})", reason.name());
        }
    }
    Ok(())
}

fn verified<G: Game>(game: &G, r: Box<dyn Responder<G>>, player: Player) -> Result<(), CliError> {
    verify_strategy(game, r, player, None).map_err(|e| CliError::Verification(e.to_string()))
}

fn translate(run: &mut Run, kind: &Translation) -> Result<(), CliError> {
    match kind {
        Translation::Phi { model, formula, max_consts, max_steps } => {
            let budget = Budget { max_consts: *max_consts, max_steps: *max_steps };
            let (m, phi) = load_model(run, model, formula)?;
            let meg = MegGame::new(&phi, m.vocabulary(), budget).map_err(user)?;
            let eval = Arc::new(EvalGame::with_table(m, meg.table().clone()).map_err(user)?);
            let tau = solved(&*eval);
            if tau.winner != Player::Eloise {
                return Err(user("the sentence is false in the model"));
            }
            let make = || Phi::new(eval.clone(), Box::new(tau.strategy.clone().responder()), &meg).map_err(user);
            let closure = make()?.closure(&meg).map_err(CliError::Verification)?;
            let record = play(&meg, &mut make()?, &mut sigma0(&meg), Some(budget.max_steps))
                .map_err(|e| CliError::Verification(e.to_string()))?;
            if record.winner != Player::Eloise {
                let (steps, _) = record.transcript(&meg);
                let moves: Vec<String> = steps.into_iter().map(|(_, _, m)| m).collect();
                return Err(CliError::Verification(format!("Eloise loses after [{}]", moves.join(", "))));
            }
            run.say(format!("every reachable pair ({}) is true in the model under the constant map", closure.len()));
            run.say(format!(
                "the play against the exhaustive Abelard lasts {} moves and Eloise wins",
                record.steps.len()
            ));
            run.say("VERIFIED");
            run.report.stat("closure_pairs", closure.len());
            run.report.stat("play_length", record.steps.len());
        }
        Translation::Psi { formula, max_consts, max_steps } => {
            let budget = Budget { max_consts: *max_consts, max_steps: *max_steps };
            let (phi, vocab, _) = meg_input(run, formula, budget)?;
            let out = match solve_meg(&phi, &vocab, budget).map_err(user)? {
                MegOutcome::ModelFound(out) => out,
                MegOutcome::Refuted(_) => {
                    return Err(user("the sentence is refuted, Eloise has no strategy to translate"))
                }
                MegOutcome::Unknown(r) => return Err(user(format!("no strategy within the budget ({})", r.name()))),
            };
            let model = Arc::new(out.model);
            run.say(format!("model: {}", model_line(&model)));
            run.report.artifact("model", StructureFile::from_structure(&model));
            run.report.stat("model_size", model.size());
            let game = EvalGame::new(model, &phi).map_err(user)?;
            verified(&game, Box::new(out.strategy), Player::Eloise)?;
            run.say("VERIFIED");
        }
        Translation::Theta { left, right, formula, rounds } => {
            let (m, n, phi) = load_pair(run, left, right, Some(formula))?;
            let phi = phi.expect("formula given");
            let m_game = Arc::new(EvalGame::new(m.clone(), &phi).map_err(user)?);
            let sigma = solved(&*m_game);
            if sigma.winner != Player::Eloise {
                return Err(user("the sentence is false in the left structure"));
            }
            let ef = Arc::new(EfGame::new(m, n.clone(), *rounds).map_err(user)?);
            let tau = solved(&*ef);
            if tau.winner != Player::Eloise {
                return Err(user(format!("Abelard wins EF_{rounds}, there is nothing to transfer")));
            }
            let n_game = EvalGame::with_table(n, m_game.table().clone()).map_err(user)?;
            let theta = Theta::new(
                m_game.clone(),
                Box::new(sigma.strategy.responder()),
                ef,
                Box::new(tau.strategy.responder()),
                &n_game,
            )
            .map_err(user)?;
            verified(&n_game, Box::new(theta), Player::Eloise)?;
            run.say("VERIFIED");
        }
        Translation::Xi { left, right, rounds } => {
            let (m, n, _) = load_pair(run, left, right, None)?;
            let ef = EfGame::new(m.clone(), n.clone(), *rounds).map_err(user)?;
            let tau = solved(&ef);
            if tau.winner != Player::Abelard {
                return Err(user(format!(
                    "Eloise wins EF_{rounds}, no sentence of rank {rounds} separates the structures"
                )));
            }
            let index = Arc::new(HintikkaIndex::new(m.clone(), *rounds));
            let phi = index.formula().clone();
            let dag = Dag::new(&phi, m.vocabulary()).map_err(user)?;
            let empty = Assignment::new();
            if !dag.truth(&m, &empty).map_err(user)? || dag.truth(&n, &empty).map_err(user)? {
                return Err(CliError::Oracle("the sentence does not separate the structures".into()));
            }
            let text = print_formula(&phi);
            run.say(text.clone());
            run.report.artifact("sentence", text);
            let m_game = EvalGame::with_table(m, index.table().clone()).map_err(user)?;
            verified(&m_game, Box::new(XiEloise::from_index(index.clone())), Player::Eloise)?;
            run.say("Eloise on the left structure: VERIFIED");
            let n_game = EvalGame::with_table(n.clone(), index.table().clone()).map_err(user)?;
            let abelard = xi_a(Box::new(tau.strategy.responder()), index, n).map_err(user)?;
            verified(&n_game, Box::new(abelard), Player::Abelard)?;
            run.say("Abelard on the right structure: VERIFIED");
            run.say("VERIFIED");
        }
    }
    run.report.outcome = "verified".into();
    Ok(())
}

/// A dumped strategy replayed by key lookup.
struct DumpResponder {
    moves: Arc<BTreeMap<String, String>>,
}

impl<G: Game + 'static> Responder<G> for DumpResponder {
    fn choose(&mut self, game: &G, at: &G::Position) -> Result<G::Move, StrategyError> {
        let key = game.key_string(at);
        let text = self.moves.get(&key).ok_or_else(|| StrategyError::Uncovered(key.clone()))?;
        game.parse_move(at, text).ok_or_else(|| StrategyError::Other(format!("`{text}` is not a legal move at {key}")))
    }

    fn fork(&self) -> Box<dyn Responder<G>> {
        Box::new(DumpResponder { moves: self.moves.clone() })
    }
}

struct GameInputs<'a> {
    model: &'a Option<PathBuf>,
    formula: &'a Option<String>,
    left: &'a Option<PathBuf>,
    right: &'a Option<PathBuf>,
    rounds: &'a Option<usize>,
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::User(format!("--{flag} is required for this game")))
}

fn verify(run: &mut Run, kind: GameKind, inputs: &GameInputs, strategy: &Path, player: Player) -> Result<(), CliError> {
    let text = run.report.read_input("strategy", strategy)?;
    let file: StrategyFile = serde_json::from_str(&text).map_err(|e| user(format!("bad strategy file: {e}")))?;
    let expected = match kind {
        GameKind::Eval => "eval",
        GameKind::Ef => "ef",
    };
    if file.game != expected {
        return Err(user(format!("the strategy is for a {} game, not {expected}", file.game)));
    }
    if Player::from_name(&file.player) != Some(player) {
        return Err(user(format!("the strategy is for {}, not {}", file.player, player.name())));
    }
    let r = DumpResponder { moves: Arc::new(file.moves) };
    match kind {
        GameKind::Eval => {
            let (m, phi) = load_model(run, required(inputs.model, "model")?, required(inputs.formula, "formula")?)?;
            let game = EvalGame::new(m, &phi).map_err(user)?;
            verified(&game, Box::new(r), player)?;
        }
        GameKind::Ef => {
            let (m, n, _) = load_pair(run, required(inputs.left, "left")?, required(inputs.right, "right")?, None)?;
            let game = EfGame::new(m, n, *required(inputs.rounds, "rounds")?).map_err(user)?;
            verified(&game, Box::new(r), player)?;
        }
    }
    run.say("VERIFIED");
    run.report.outcome = "verified".into();
    run.winner(player);
    Ok(())
}
