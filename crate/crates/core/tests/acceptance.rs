//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use gamelogic_core::corpus::{
    meg_vocabulary, sentences, structure_families, StructureFamily, SATISFIABLE, UNSATISFIABLE,
};
use gamelogic_core::ef::{solve_ef, EfGame};
use gamelogic_core::eval::{is_true, EvalGame};
use gamelogic_core::hintikka::{distinguishing_sentence, xi_a, HintikkaIndex, XiEloise};
use gamelogic_core::kernel::{play, solve, verify_strategy, Player, PositionalStrategy};
use gamelogic_core::meg::{sigma0, Budget, MegGame};
use gamelogic_core::oracle::Dag;
use gamelogic_core::parse::{parse_formula, parse_nnf, print_formula};
use gamelogic_core::structure::{linear_order, pure_set, Assignment, Structure};
use gamelogic_core::syntax::Formula;
use gamelogic_core::table::SubformulaTable;
use gamelogic_core::translate::{solve_meg, MegOutcome, Phi, Theta};

const MAX_ROUNDS: usize = 3;
const TRUTH_LIMIT_S: f64 = 60.0;
const BRIDGE_LIMIT_S: f64 = 120.0;
const MEG_BUDGET: Budget = Budget { max_consts: 3, max_steps: 60 };
const PHI_BUDGET: Budget = Budget { max_consts: 3, max_steps: 40 };

struct Family {
    inner: StructureFamily,
    all: Vec<Arc<Structure>>,
    classes: Vec<Arc<Structure>>,
    sentences: Vec<Formula>,
    tables: Vec<Arc<SubformulaTable>>,
}

fn load() -> Vec<Family> {
    structure_families()
        .into_iter()
        .map(|inner| {
            let sentences = sentences(&inner.vocab, 200);
            let tables = sentences.iter().map(|f| Arc::new(SubformulaTable::new(f, &inner.vocab).unwrap())).collect();
            Family {
                all: inner.all.iter().cloned().map(Arc::new).collect(),
                classes: inner.classes.iter().cloned().map(Arc::new).collect(),
                inner,
                sentences,
                tables,
            }
        })
        .collect()
}

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn count(passed: usize, total: usize, what: &str) -> Outcome {
        Outcome { ok: passed == total && total > 0, detail: format!("{passed}/{total} {what}") }
    }
}

fn report(id: usize, name: &str, limit: Option<f64>, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut out = run();
    let secs = start.elapsed().as_secs_f64();
    let mut timing = format!("{secs:.1} s");
    if let Some(limit) = limit {
        timing.push_str(&format!(", limit {limit:.0} s"));
        if secs >= limit {
            out.ok = false;
        }
    }
    println!("{} {id}: {name}: {} ({timing})", if out.ok { "PASS" } else { "FAIL" }, out.detail);
    out.ok
}

fn ef_winner(m: &Arc<Structure>, n: &Arc<Structure>, rounds: usize) -> (Player, PositionalStrategy<EfGame>) {
    solve_ef(m.clone(), n.clone(), rounds).unwrap()
}

fn truth_adequacy(fams: &[Family]) -> Outcome {
    let (mut agree, mut total) = (0, 0);
    for fam in fams {
        for m in &fam.all {
            for f in &fam.sentences {
                total += 1;
                let game = is_true(m.clone(), f).unwrap();
                let oracle = m.tarski_truth(f, &Assignment::new()).unwrap();
                if game == oracle {
                    agree += 1;
                } else {
                    eprintln!("truth mismatch: {} in {:?}", print_formula(f), m.domain());
                }
            }
        }
    }
    Outcome::count(agree, total, "structure/sentence games agree with the Tarski oracle")
}

fn determinacy(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for fam in fams {
        for m in &fam.all {
            for t in &fam.tables {
                total += 1;
                let game = EvalGame::with_table(m.clone(), t.clone()).unwrap();
                let sol = solve(&game, None).unwrap();
                if verify_strategy(&game, Box::new(sol.strategy.responder()), sol.winner, None).is_ok() {
                    ok += 1;
                }
            }
        }
        for m in &fam.classes {
            for n in &fam.classes {
                for rounds in 0..=MAX_ROUNDS {
                    total += 1;
                    let (winner, strategy) = ef_winner(m, n, rounds);
                    let game = EfGame::new(m.clone(), n.clone(), rounds).unwrap();
                    if verify_strategy(&game, Box::new(strategy.responder()), winner, None).is_ok() {
                        ok += 1;
                    }
                }
            }
        }
    }
    Outcome::count(ok, total, "evaluation and EF games verified for the solver's winner")
}

fn bridge(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    let empty = Assignment::new();
    for fam in fams {
        for m in &fam.classes {
            for rounds in 0..=MAX_ROUNDS {
                let index = HintikkaIndex::new(m.clone(), rounds);
                let dag = Dag::new(index.formula(), &fam.inner.vocab).unwrap();
                for n in &fam.classes {
                    total += 1;
                    let (winner, _) = ef_winner(m, n, rounds);
                    if (winner == Player::Eloise) == dag.truth(n, &empty).unwrap() {
                        ok += 1;
                    } else {
                        eprintln!("bridge mismatch in {} at m={rounds}", fam.inner.name);
                    }
                }
            }
        }
    }
    Outcome::count(ok, total, "pairs where the EF winner matches the Hintikka sentence")
}

fn pure_sets() -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for rounds in 0..=4 {
        for a in 1..=6 {
            for b in 1..=6 {
                let (winner, _) = ef_winner(&Arc::new(pure_set(a)), &Arc::new(pure_set(b)), rounds);
                let equivalent = a == b || (a >= rounds && b >= rounds);
                total += 1;
                if (winner == Player::Eloise) == equivalent {
                    ok += 1;
                } else {
                    eprintln!("pure sets {a}, {b} at m={rounds}: {winner}");
                }
            }
        }
    }
    Outcome::count(ok, total, "pure set pairs won by Eloise exactly when both sizes reach m or agree")
}

fn orders() -> Outcome {
    let (mut ok, mut total) = (0, 0);
    let ls: Vec<Arc<Structure>> = (1..=9).map(|n| Arc::new(linear_order(n))).collect();
    for rounds in 0..=3usize {
        for a in 1..=9usize {
            for b in 1..=9usize {
                let (winner, _) = ef_winner(&ls[a - 1], &ls[b - 1], rounds);
                let threshold = (1usize << rounds) - 1;
                let equivalent = a == b || (a >= threshold && b >= threshold);
                total += 1;
                let claim = a >= 1 << rounds && b >= 1 << rounds;
                if (winner == Player::Eloise) == equivalent && (!claim || winner == Player::Eloise) {
                    ok += 1;
                } else {
                    eprintln!("orders {a}, {b} at m={rounds}: {winner}");
                }
            }
        }
    }
    total += 1;
    if ef_winner(&ls[0], &ls[1], 2).0 == Player::Abelard {
        ok += 1;
    }
    Outcome::count(ok, total, "order pairs including the EF_2(L_1, L_2) control")
}

/// Truth of every sentence in every class representative, with the
/// solver's strategy when Eloise wins.
type Sigmas = HashMap<(usize, usize), PositionalStrategy<EvalGame>>;

fn transfer(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for fam in fams {
        let mut sigmas: Sigmas = HashMap::new();
        let mut games: HashMap<(usize, usize), Arc<EvalGame>> = HashMap::new();
        for (i, m) in fam.classes.iter().enumerate() {
            for (j, t) in fam.tables.iter().enumerate() {
                let game = Arc::new(EvalGame::with_table(m.clone(), t.clone()).unwrap());
                let sol = solve(&*game, None).unwrap();
                if sol.winner == Player::Eloise {
                    sigmas.insert((i, j), sol.strategy);
                    games.insert((i, j), game);
                }
            }
        }
        for (i, m) in fam.classes.iter().enumerate() {
            for (k, n) in fam.classes.iter().enumerate() {
                for rounds in 0..=MAX_ROUNDS {
                    let candidates: Vec<usize> = (0..fam.sentences.len())
                        .filter(|&j| fam.sentences[j].quantifier_rank() <= rounds && sigmas.contains_key(&(i, j)))
                        .collect();
                    if candidates.is_empty() {
                        continue;
                    }
                    let (winner, tau) = ef_winner(m, n, rounds);
                    if winner != Player::Eloise {
                        continue;
                    }
                    let tau = Arc::new(tau);
                    let ef = Arc::new(EfGame::new(m.clone(), n.clone(), rounds).unwrap());
                    for j in candidates {
                        total += 1;
                        let n_game = EvalGame::with_table(n.clone(), fam.tables[j].clone()).unwrap();
                        let theta = Theta::new(
                            games[&(i, j)].clone(),
                            Box::new(sigmas[&(i, j)].clone().responder()),
                            ef.clone(),
                            Box::new((*tau).clone().responder()),
                            &n_game,
                        )
                        .unwrap();
                        match verify_strategy(&n_game, Box::new(theta), Player::Eloise, None) {
                            Ok(()) => ok += 1,
                            Err(e) => eprintln!("transfer failed in {} ({k}): {e}", fam.inner.name),
                        }
                    }
                }
            }
        }
    }
    Outcome::count(ok, total, "transferred strategies verified on G(N, φ)")
}

fn distinguishing(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    let empty = Assignment::new();
    for fam in fams {
        for m in &fam.classes {
            for rounds in 0..=MAX_ROUNDS {
                let index = Arc::new(HintikkaIndex::new(m.clone(), rounds));
                let phi = index.formula().clone();
                let dag = Dag::new(&phi, &fam.inner.vocab).unwrap();
                let m_game = EvalGame::with_table(m.clone(), index.table().clone()).unwrap();
                let mut eloise_ok = None;
                for n in &fam.classes {
                    let (winner, tau) = ef_winner(m, n, rounds);
                    if winner != Player::Abelard {
                        continue;
                    }
                    total += 1;
                    let eloise_ok = *eloise_ok.get_or_insert_with(|| {
                        phi.quantifier_rank() == rounds
                            && dag.truth(m, &empty).unwrap()
                            && verify_strategy(
                                &m_game,
                                Box::new(XiEloise::from_index(index.clone())),
                                Player::Eloise,
                                None,
                            )
                            .is_ok()
                    });
                    let n_game = EvalGame::with_table(n.clone(), index.table().clone()).unwrap();
                    let abelard = xi_a(Box::new(tau.responder()), index.clone(), n.clone()).unwrap();
                    let abelard_ok = !dag.truth(n, &empty).unwrap()
                        && verify_strategy(&n_game, Box::new(abelard), Player::Abelard, None).is_ok();
                    if eloise_ok && abelard_ok {
                        ok += 1;
                    } else {
                        eprintln!("distinguishing failed in {} at m={rounds}", fam.inner.name);
                    }
                }
            }
        }
    }
    let l1 = Arc::new(linear_order(1));
    let l2 = Arc::new(linear_order(2));
    total += 1;
    if distinguishing_sentence(l1, l2, 2).unwrap().is_some_and(|f| f.quantifier_rank() == 2) {
        ok += 1;
    }
    Outcome::count(ok, total, "Abelard-won pairs with a verified distinguishing sentence")
}

fn shadowing(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for fam in fams {
        for f in fam.sentences.iter().filter(|f| !f.uses_identity()) {
            let model = fam.classes.iter().find(|m| m.size() <= 3 && m.tarski_truth(f, &Assignment::new()).unwrap());
            let Some(m) = model else { continue };
            total += 1;
            let meg = MegGame::new(f, &fam.inner.vocab, PHI_BUDGET).unwrap();
            let eval = Arc::new(EvalGame::with_table(m.clone(), meg.table().clone()).unwrap());
            let tau = solve(&*eval, None).unwrap().strategy;
            let make = || Phi::new(eval.clone(), Box::new(tau.clone().responder()), &meg).unwrap();
            let closed = make().closure(&meg);
            let played = play(&meg, &mut make(), &mut sigma0(&meg), Some(PHI_BUDGET.max_steps));
            match (closed, played) {
                (Ok(_), Ok(rec)) if rec.winner == Player::Eloise => ok += 1,
                (c, p) => eprintln!("shadowing failed for {}: {:?} {:?}", print_formula(f), c.err(), p.err()),
            }
        }
    }
    Outcome::count(ok, total, "satisfiable identity-free sentences where Φ survives every play")
}

fn model_existence() -> Outcome {
    let v = meg_vocabulary();
    let (mut ok, mut total) = (0, 0);
    for text in SATISFIABLE {
        total += 1;
        let f = parse_nnf(text, &v).unwrap();
        match solve_meg(&f, &v, MEG_BUDGET).unwrap() {
            MegOutcome::ModelFound(out) => {
                let model = Arc::new(out.model);
                let game = EvalGame::new(model.clone(), &f).unwrap();
                if model.tarski_truth(&f, &Assignment::new()).unwrap()
                    && verify_strategy(&game, Box::new(out.strategy), Player::Eloise, None).is_ok()
                {
                    ok += 1;
                } else {
                    eprintln!("model for {text} fails");
                }
            }
            _ => eprintln!("no model for {text}"),
        }
    }
    for text in UNSATISFIABLE {
        total += 1;
        let f = parse_nnf(text, &v).unwrap();
        let game = MegGame::new(&f, &v, MEG_BUDGET).unwrap();
        match solve_meg(&f, &v, MEG_BUDGET).unwrap() {
            MegOutcome::Refuted(t) if t.check(&game).is_ok() => ok += 1,
            _ => eprintln!("no refutation for {text}"),
        }
    }
    Outcome::count(ok, total, "fixed sentences decided with a verified model or a well-formed refutation")
}

fn round_trip(fams: &[Family]) -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for fam in fams {
        for f in &fam.sentences {
            total += 1;
            let text = print_formula(f);
            let back = parse_nnf(&text, &fam.inner.vocab).unwrap();
            let negated = parse_formula(&format!("!({})", print_formula(&f.negate())), &fam.inner.vocab).unwrap();
            let nnf = negated.to_nnf();
            let preserved = fam.classes.iter().all(|m| {
                let t = m.tarski_truth(f, &Assignment::new()).unwrap();
                t == m.tarski_truth(&nnf, &Assignment::new()).unwrap()
                    && t == m.tarski_truth_raw(&negated, &Assignment::new()).unwrap()
            });
            if back == *f && print_formula(&back) == text && preserved {
                ok += 1;
            } else {
                eprintln!("round trip failed for {text}");
            }
        }
    }
    Outcome::count(ok, total, "sentences survive print/parse and NNF conversion")
}

fn main() -> ExitCode {
    let fams = load();
    let summary: Vec<String> =
        fams.iter().map(|f| format!("{} {}/{}", f.inner.name, f.all.len(), f.classes.len())).collect();
    println!("corpus (structures/classes): {}; 200 sentences per vocabulary", summary.join(", "));
    let results = [
        report(1, "truth adequacy", Some(TRUTH_LIMIT_S), || truth_adequacy(&fams)),
        report(2, "determinacy", None, || determinacy(&fams)),
        report(3, "EF and Hintikka sentences", Some(BRIDGE_LIMIT_S), || bridge(&fams)),
        report(4, "pure sets", None, pure_sets),
        report(5, "linear orders", None, orders),
        report(6, "strategy transfer along EF", None, || transfer(&fams)),
        report(7, "distinguishing sentences", None, || distinguishing(&fams)),
        report(8, "evaluation strategies shadowed in MEG", None, || shadowing(&fams)),
        report(9, "model existence", None, model_existence),
        report(10, "round trip", None, || round_trip(&fams)),
    ];
    if results.iter().all(|&r| r) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
