use std::sync::Arc;

use proptest::prelude::*;

use gamelogic_core::ef::{solve_ef, EfGame, EfMove, Side};
use gamelogic_core::eval::is_true;
use gamelogic_core::hintikka::hintikka_formula;
use gamelogic_core::kernel::{Game, Player, Solver};
use gamelogic_core::meg::Budget;
use gamelogic_core::oracle::tarski_truth_memo;
use gamelogic_core::parse::{parse_nnf, print_formula};
use gamelogic_core::structure::{enumerate_structures, Assignment, Structure};
use gamelogic_core::syntax::{Atom, Formula, RawFormula, Term, Vocabulary};
use gamelogic_core::translate::{solve_meg, MegOutcome};

const VARS: [&str; 3] = ["x", "y", "z"];

fn vocab(identity: bool) -> Vocabulary {
    Vocabulary::relational([("P", 1), ("R", 2)], identity).unwrap()
}

fn structure(identity: bool) -> impl Strategy<Value = Structure> {
    (1usize..=3, any::<u16>()).prop_map(move |(n, bits)| {
        let mut m = Structure::numbered(vocab(identity), n).unwrap();
        let mut bit = 0;
        for a in 0..n {
            if bits >> bit & 1 == 1 {
                m.insert("P", &[a]).unwrap();
            }
            bit += 1;
        }
        for a in 0..n {
            for b in 0..n {
                if bits >> bit & 1 == 1 {
                    m.insert("R", &[a, b]).unwrap();
                }
                bit = (bit + 1) % 16;
            }
        }
        m
    })
}

fn atom(identity: bool) -> impl Strategy<Value = Atom> {
    let var = || (0..3usize).prop_map(|i| Term::var(VARS[i]));
    let mut choices = vec![
        var().prop_map(|t| Atom::rel("P", vec![t])).boxed(),
        (var(), var()).prop_map(|(a, b)| Atom::rel("R", vec![a, b])).boxed(),
    ];
    if identity {
        choices.push((var(), var()).prop_map(|(a, b)| Atom::eq(a, b)).boxed());
    }
    proptest::strategy::Union::new(choices)
}

fn raw(identity: bool) -> impl Strategy<Value = RawFormula> {
    atom(identity).prop_map(RawFormula::Atom).prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(RawFormula::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(RawFormula::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(RawFormula::Or),
            ((0..3usize), inner.clone()).prop_map(|(v, b)| RawFormula::Forall(VARS[v].into(), Box::new(b))),
            ((0..3usize), inner).prop_map(|(v, b)| RawFormula::Exists(VARS[v].into(), Box::new(b))),
        ]
    })
}

/// Closes a formula by quantifying its free variables.
fn close(raw: RawFormula, universal: bool) -> RawFormula {
    let free = raw.to_nnf().free_vars();
    free.into_iter().fold(raw, |body, v| {
        if universal {
            RawFormula::Forall(v, Box::new(body))
        } else {
            RawFormula::Exists(v, Box::new(body))
        }
    })
}

fn sentence(identity: bool) -> impl Strategy<Value = Formula> {
    (raw(identity), any::<bool>()).prop_map(|(r, u)| close(r, u).to_nnf())
}

fn truth(m: &Structure, f: &Formula) -> bool {
    m.tarski_truth(f, &Assignment::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nnf_is_idempotent(r in raw(true)) {
        let f = r.to_nnf();
        prop_assert_eq!(f.to_raw().to_nnf(), f);
    }

    #[test]
    fn nnf_preserves_truth_and_rank(r in raw(true), m in structure(true), universal in any::<bool>()) {
        let r = close(r, universal);
        let f = r.to_nnf();
        prop_assert_eq!(f.quantifier_rank(), r.quantifier_rank());
        prop_assert_eq!(truth(&m, &f), m.tarski_truth_raw(&r, &Assignment::new()).unwrap());
    }

    #[test]
    fn negation_flips_truth(f in sentence(true), m in structure(true)) {
        prop_assert_eq!(truth(&m, &f.negate()), !truth(&m, &f));
    }

    #[test]
    fn print_parse_round_trip(f in sentence(true)) {
        let text = print_formula(&f);
        let back = parse_nnf(&text, &vocab(true)).unwrap();
        prop_assert_eq!(print_formula(&back), text);
        prop_assert_eq!(back, f);
    }

    #[test]
    fn evaluation_game_matches_tarski(f in sentence(true), m in structure(true)) {
        let expected = truth(&m, &f);
        prop_assert_eq!(tarski_truth_memo(&m, &f).unwrap(), expected);
        prop_assert_eq!(is_true(Arc::new(m), &f).unwrap(), expected);
    }

    #[test]
    fn truth_is_isomorphism_invariant(f in sentence(true), m in structure(true), seed in any::<u8>()) {
        let n = m.size();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(seed as usize % n);
        if seed & 1 == 1 && n > 1 {
            perm.swap(0, 1);
        }
        prop_assert_eq!(truth(&m.permuted(&perm), &f), truth(&m, &f));
    }

    #[test]
    fn ef_is_symmetric_and_monotone(a in structure(true), b in structure(true)) {
        let (a, b) = (Arc::new(a), Arc::new(b));
        let mut previous = Player::Eloise;
        for m in 0..=3 {
            let (w, _) = solve_ef(a.clone(), b.clone(), m).unwrap();
            prop_assert_eq!(w, solve_ef(b.clone(), a.clone(), m).unwrap().0);
            if previous == Player::Abelard {
                prop_assert_eq!(w, Player::Abelard);
            }
            previous = w;
        }
    }

    #[test]
    fn ef_equivalence_preserves_sentences(f in sentence(true), a in structure(true), b in structure(true)) {
        let rank = f.quantifier_rank();
        let (w, _) = solve_ef(Arc::new(a.clone()), Arc::new(b.clone()), rank).unwrap();
        if w == Player::Eloise {
            prop_assert_eq!(truth(&a, &f), truth(&b, &f));
        }
    }

    #[test]
    fn ef_keys_ignore_pick_order(a in structure(true), b in structure(true), picks in prop::collection::vec((0..3usize, 0..3usize), 2)) {
        let game = EfGame::new(Arc::new(a), Arc::new(b), 3).unwrap();
        let pairs: Vec<(usize, usize)> = picks
            .iter()
            .map(|&(x, y)| (x % game.left().size(), y % game.right().size()))
            .collect();
        let run = |order: &[(usize, usize)]| {
            let mut p = game.initial();
            for &(x, y) in order {
                if p.broken {
                    break;
                }
                p = game.apply(&p, &EfMove::Pick(Side::Left, x));
                p = game.apply(&p, &EfMove::Reply(Side::Right, y));
            }
            p
        };
        let forward = run(&pairs);
        let backward = run(&[pairs[1], pairs[0]]);
        if game.key(&forward) == game.key(&backward) {
            let mut solver = Solver::new(&game);
            let w1 = solver.winner_at(&forward, 2).unwrap();
            let w2 = Solver::new(&game).winner_at(&backward, 2).unwrap();
            prop_assert_eq!(w1, w2);
        }
    }

    #[test]
    fn structures_satisfy_their_hintikka_sentences(m in structure(true), rank in 0usize..=2) {
        let m = Arc::new(m);
        let psi = hintikka_formula(&m, rank, &[]);
        prop_assert_eq!(psi.quantifier_rank(), rank);
        prop_assert!(tarski_truth_memo(&m, &psi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn model_existence_agrees_with_small_models(f in sentence(false)) {
        let v = vocab(false);
        let budget = Budget { max_consts: 3, max_steps: 60 };
        let small_model = enumerate_structures(&v, 2).any(|m| truth(&m, &f));
        match solve_meg(&f, &v, budget).unwrap() {
            MegOutcome::ModelFound(out) => prop_assert!(truth(&out.model, &f)),
            MegOutcome::Refuted(_) => prop_assert!(!small_model),
            MegOutcome::Unknown(_) => {}
        }
    }
}
