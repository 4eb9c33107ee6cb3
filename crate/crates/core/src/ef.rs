//! The m-round Ehrenfeucht–Fraïssé game EF_m(M, N).
//!
//! Each round Abelard picks an element on either side and Eloise answers
//! on the other. The pairing is checked after every answer; Abelard wins
//! as soon as it stops being a partial isomorphism. Key strings look like
//! `n=2|0:1,2:0|pending=left:1`, pairs sorted, elements given by id.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::kernel::{solve, Game, Player, PositionalStrategy, Responder, StrategyError, Turn};
use crate::structure::Structure;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EfError {
    #[error("the two structures have different vocabularies")]
    VocabularyMismatch,
    #[error("constants are not supported in the back-and-forth game")]
    Constants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EfPosition {
    /// (left element, right element) in the order the rounds were played.
    pub pairs: Vec<(usize, usize)>,
    pub pending: Option<(Side, usize)>,
    pub broken: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EfMove {
    Pick(Side, usize),
    /// An element on the given side, opposite the pending pick.
    Reply(Side, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EfKey {
    rounds: usize,
    pairs: Vec<(usize, usize)>,
    pending: Option<(Side, usize)>,
    broken: bool,
}

#[derive(Debug, Clone)]
pub struct EfGame {
    left: Arc<Structure>,
    right: Arc<Structure>,
    rounds: usize,
    identity: bool,
}

impl EfGame {
    pub fn new(left: Arc<Structure>, right: Arc<Structure>, rounds: usize) -> Result<Self, EfError> {
        let (lv, rv) = (left.vocabulary(), right.vocabulary());
        if !lv.same_symbols(rv) || lv.identity() != rv.identity() {
            return Err(EfError::VocabularyMismatch);
        }
        if !lv.is_relational() {
            return Err(EfError::Constants);
        }
        let identity = lv.identity();
        Ok(EfGame { left, right, rounds, identity })
    }

    pub fn left(&self) -> &Arc<Structure> {
        &self.left
    }

    pub fn right(&self) -> &Arc<Structure> {
        &self.right
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn structure(&self, side: Side) -> &Arc<Structure> {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Whether the last pair keeps `pairs` a partial isomorphism, given
    /// that the earlier pairs already form one.
    pub fn extends_partial_isomorphism(&self, pairs: &[(usize, usize)]) -> bool {
        let Some((&(a, b), rest)) = pairs.split_last() else {
            return self.nullary_agree();
        };
        if self.identity && rest.iter().any(|&(x, y)| (x == a) != (y == b)) {
            return false;
        }
        let newest = pairs.len() - 1;
        let mut idx = [0usize; 8];
        let mut ta = [0usize; 8];
        let mut tb = [0usize; 8];
        for (r, sym) in self.left.vocabulary().relations().iter().enumerate() {
            let k = sym.arity;
            if k == 0 {
                continue;
            }
            assert!(k <= idx.len(), "relation arity above 8");
            idx[..k].iter_mut().for_each(|i| *i = 0);
            loop {
                if idx[..k].contains(&newest) {
                    for j in 0..k {
                        ta[j] = pairs[idx[j]].0;
                        tb[j] = pairs[idx[j]].1;
                    }
                    if self.left.holds(r, &ta[..k]) != self.right.holds(r, &tb[..k]) {
                        return false;
                    }
                }
                let mut j = 0;
                while j < k {
                    idx[j] += 1;
                    if idx[j] < pairs.len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == k {
                    break;
                }
            }
        }
        true
    }

    fn nullary_agree(&self) -> bool {
        self.left
            .vocabulary()
            .relations()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.arity == 0)
            .all(|(r, _)| self.left.holds(r, &[]) == self.right.holds(r, &[]))
    }

    /// Whether every pair list prefix is a partial isomorphism.
    pub fn is_partial_isomorphism(&self, pairs: &[(usize, usize)]) -> bool {
        (0..=pairs.len()).all(|i| self.extends_partial_isomorphism(&pairs[..i]))
    }
}

impl Game for EfGame {
    type Position = EfPosition;
    type Move = EfMove;
    type Key = EfKey;

    fn initial(&self) -> EfPosition {
        EfPosition { pairs: Vec::new(), pending: None, broken: !self.nullary_agree() }
    }

    fn turn(&self, p: &EfPosition) -> Turn {
        if p.broken {
            Turn::Over(Player::Abelard)
        } else if p.pending.is_some() {
            Turn::To(Player::Eloise)
        } else if p.pairs.len() >= self.rounds {
            Turn::Over(Player::Eloise)
        } else {
            Turn::To(Player::Abelard)
        }
    }

    fn legal_moves(&self, p: &EfPosition) -> Vec<EfMove> {
        match p.pending {
            Some((side, _)) => {
                (0..self.structure(side.other()).size()).map(|e| EfMove::Reply(side.other(), e)).collect()
            }
            None => (0..self.left.size())
                .map(|a| EfMove::Pick(Side::Left, a))
                .chain((0..self.right.size()).map(|b| EfMove::Pick(Side::Right, b)))
                .collect(),
        }
    }

    fn apply(&self, p: &EfPosition, m: &EfMove) -> EfPosition {
        match (*m, p.pending) {
            (EfMove::Pick(side, e), None) => {
                EfPosition { pairs: p.pairs.clone(), pending: Some((side, e)), broken: false }
            }
            (EfMove::Reply(_, e), Some((side, picked))) => {
                let mut pairs = p.pairs.clone();
                pairs.push(if side == Side::Left { (picked, e) } else { (e, picked) });
                let broken = !self.extends_partial_isomorphism(&pairs);
                EfPosition { pairs, pending: None, broken }
            }
            _ => panic!("move {m:?} does not fit the position"),
        }
    }

    fn key(&self, p: &EfPosition) -> EfKey {
        let mut pairs = p.pairs.clone();
        pairs.sort_unstable();
        pairs.dedup();
        EfKey { rounds: p.pairs.len(), pairs, pending: p.pending, broken: p.broken }
    }

    fn key_string(&self, p: &EfPosition) -> String {
        let mut pairs: Vec<String> =
            p.pairs.iter().map(|&(a, b)| format!("{}:{}", self.left.element_id(a), self.right.element_id(b))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut s = format!("n={}|{}", p.pairs.len(), pairs.join(","));
        if let Some((side, e)) = p.pending {
            s.push_str(&format!("|pending={}:{}", side.name(), self.structure(side).element_id(e)));
        }
        s
    }

    fn move_string(&self, m: &EfMove) -> String {
        match *m {
            EfMove::Pick(side, e) => format!("{}:{}", side.name(), self.structure(side).element_id(e)),
            EfMove::Reply(side, e) => format!("reply:{}", self.structure(side).element_id(e)),
        }
    }

    fn parse_move(&self, p: &EfPosition, text: &str) -> Option<EfMove> {
        let (head, id) = text.split_once(':')?;
        let m = match (head, p.pending) {
            ("left", None) => EfMove::Pick(Side::Left, self.left.element(id)?),
            ("right", None) => EfMove::Pick(Side::Right, self.right.element(id)?),
            ("reply", Some((side, _))) => EfMove::Reply(side.other(), self.structure(side.other()).element(id)?),
            _ => return None,
        };
        self.legal_moves(p).contains(&m).then_some(m)
    }
}

/// Winner of EF_m(M, N) and their strategy.
pub fn solve_ef(
    left: Arc<Structure>,
    right: Arc<Structure>,
    rounds: usize,
) -> Result<(Player, PositionalStrategy<EfGame>), EfError> {
    let game = EfGame::new(left, right, rounds)?;
    match solve(&game, None) {
        Ok(sol) => Ok((sol.winner, sol.strategy)),
        Err(e) => unreachable!("unbounded solve of a finite game: {e}"),
    }
}

/// Eloise's answer by a fixed isomorphism `f` from left to right.
#[derive(Debug, Clone)]
pub struct IsomorphismReplies {
    forward: Vec<usize>,
    backward: Vec<usize>,
}

impl IsomorphismReplies {
    pub fn new(f: Vec<usize>) -> Self {
        let mut backward = alloc::vec![0; f.len()];
        for (a, &b) in f.iter().enumerate() {
            backward[b] = a;
        }
        IsomorphismReplies { forward: f, backward }
    }
}

impl Responder<EfGame> for IsomorphismReplies {
    fn choose(&mut self, _game: &EfGame, at: &EfPosition) -> Result<EfMove, StrategyError> {
        match at.pending {
            Some((Side::Left, a)) => Ok(EfMove::Reply(Side::Right, self.forward[a])),
            Some((Side::Right, b)) => Ok(EfMove::Reply(Side::Left, self.backward[b])),
            None => Err(StrategyError::Other("not Eloise's turn".into())),
        }
    }

    fn fork(&self) -> Box<dyn Responder<EfGame>> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::verify_strategy;
    use crate::structure::{linear_order, pure_set};
    use crate::syntax::Vocabulary;

    fn winner(a: Structure, b: Structure, m: usize) -> Player {
        solve_ef(Arc::new(a), Arc::new(b), m).unwrap().0
    }

    #[test]
    fn zero_rounds() {
        assert_eq!(winner(linear_order(1), linear_order(5), 0), Player::Eloise);
    }

    #[test]
    fn small_orders() {
        assert_eq!(winner(linear_order(1), linear_order(2), 2), Player::Abelard);
        assert_eq!(winner(linear_order(1), linear_order(2), 1), Player::Eloise);
        assert_eq!(winner(linear_order(4), linear_order(5), 2), Player::Eloise);
        assert_eq!(winner(linear_order(3), linear_order(4), 2), Player::Eloise);
        assert_eq!(winner(linear_order(2), linear_order(3), 2), Player::Abelard);
    }

    #[test]
    fn pure_sets() {
        assert_eq!(winner(pure_set(3), pure_set(4), 3), Player::Eloise);
        assert_eq!(winner(pure_set(2), pure_set(3), 3), Player::Abelard);
    }

    #[test]
    fn identity_replies_on_isomorphic_pair() {
        let a = linear_order(3);
        let b = a.permuted(&[1, 2, 0]);
        let f = a.find_isomorphism(&b).unwrap();
        let game = EfGame::new(Arc::new(a), Arc::new(b), 3).unwrap();
        verify_strategy(&game, Box::new(IsomorphismReplies::new(f)), Player::Eloise, None).unwrap();
    }

    #[test]
    fn nullary_relations_are_checked_first() {
        let v = Vocabulary::relational([("Q", 0)], true).unwrap();
        let a = Structure::numbered(v.clone(), 1).unwrap();
        let mut b = Structure::numbered(v, 1).unwrap();
        b.insert("Q", &[]).unwrap();
        assert_eq!(winner(a, b, 0), Player::Abelard);
    }

    #[test]
    fn keys_and_moves() {
        let game = EfGame::new(Arc::new(linear_order(2)), Arc::new(linear_order(3)), 2).unwrap();
        let p = game.apply(&game.initial(), &EfMove::Pick(Side::Right, 2));
        assert_eq!(game.key_string(&p), "n=0||pending=right:2");
        assert_eq!(game.legal_moves(&p).len(), 2);
        let q = game.apply(&p, &EfMove::Reply(Side::Left, 1));
        assert_eq!(game.key_string(&q), "n=1|1:2");
        assert_eq!(game.move_string(&EfMove::Reply(Side::Left, 1)), "reply:1");
        assert_eq!(game.parse_move(&q, "left:0"), Some(EfMove::Pick(Side::Left, 0)));
        assert_eq!(game.parse_move(&q, "reply:0"), None);
    }

    #[test]
    fn vocabulary_checks() {
        let with_eq = linear_order(2);
        let without = linear_order(2).with_identity(false);
        assert_eq!(EfGame::new(Arc::new(with_eq), Arc::new(without), 1).err(), Some(EfError::VocabularyMismatch));
    }
}
