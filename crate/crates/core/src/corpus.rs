//! Deterministic test corpora: enumerated structures and sentences.
//!
//! Sentences are NNF formulas over the variables `x`, `y`, `z` built from
//! literals, binary `&` and `|`, and quantifiers. Formulas of a given size
//! (node count), variable scope and rank bound are counted exactly and
//! picked by unranking evenly spaced indices.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use hashbrown::{HashMap, HashSet};

use crate::parse::print_formula;
use crate::structure::{enumerate_structures, isomorphism_classes, linear_order, pure_set, Structure};
use crate::syntax::{Atom, Formula, Term, Vocabulary};

const VARS: [&str; 3] = ["x", "y", "z"];

/// Counts and unranks sentences over one vocabulary.
pub struct SentenceSpace {
    vocab: Vocabulary,
    memo: HashMap<(usize, u8, usize), u128>,
}

impl SentenceSpace {
    pub fn new(vocab: Vocabulary) -> Self {
        SentenceSpace { vocab, memo: HashMap::new() }
    }

    fn atoms(&self, scope: u8) -> Vec<Atom> {
        let vars: Vec<&str> = (0..3).filter(|i| scope >> i & 1 == 1).map(|i| VARS[i]).collect();
        let mut out = Vec::new();
        for r in self.vocab.relations() {
            let k = r.arity;
            let total = vars.len().pow(k as u32);
            for mut code in 0..total {
                let mut args = vec![Term::var(""); k];
                for slot in args.iter_mut().rev() {
                    *slot = Term::var(vars[code % vars.len()]);
                    code /= vars.len();
                }
                out.push(Atom::rel(r.name.clone(), args));
            }
        }
        if self.vocab.identity() {
            for (i, a) in vars.iter().enumerate() {
                for b in &vars[i..] {
                    out.push(Atom::eq(Term::var(*a), Term::var(*b)));
                }
            }
        }
        out
    }

    /// Number of formulas with `size` nodes, free variables within `scope`
    /// and rank at most `rank`.
    pub fn count(&mut self, size: usize, scope: u8, rank: usize) -> u128 {
        if size == 0 {
            return 0;
        }
        if let Some(&c) = self.memo.get(&(size, scope, rank)) {
            return c;
        }
        let c = if size == 1 {
            2 * self.atoms(scope).len() as u128
        } else {
            let mut c = 0u128;
            for i in 1..size - 1 {
                c += 2 * self.count(i, scope, rank) * self.count(size - 1 - i, scope, rank);
            }
            if rank > 0 {
                for v in 0..3 {
                    c += 2 * self.count(size - 1, scope | 1 << v, rank - 1);
                }
            }
            c
        };
        self.memo.insert((size, scope, rank), c);
        c
    }

    /// The `index`-th formula counted by [`count`](Self::count).
    pub fn unrank(&mut self, size: usize, scope: u8, rank: usize, mut index: u128) -> Formula {
        assert!(index < self.count(size, scope, rank), "index out of range");
        if size == 1 {
            let atoms = self.atoms(scope);
            let n = atoms.len() as u128;
            return Formula::lit(index < n, atoms[(index % n) as usize].clone());
        }
        for disjunction in [false, true] {
            for i in 1..size - 1 {
                let (l, r) = (self.count(i, scope, rank), self.count(size - 1 - i, scope, rank));
                if index < l * r {
                    let a = self.unrank(i, scope, rank, index / r);
                    let b = self.unrank(size - 1 - i, scope, rank, index % r);
                    return if disjunction { Formula::Or(vec![a, b]) } else { Formula::And(vec![a, b]) };
                }
                index -= l * r;
            }
        }
        for universal in [true, false] {
            for (v, name) in VARS.iter().enumerate() {
                let c = self.count(size - 1, scope | 1 << v, rank - 1);
                if index < c {
                    let body = self.unrank(size - 1, scope | 1 << v, rank - 1, index);
                    return if universal { Formula::forall(*name, body) } else { Formula::exists(*name, body) };
                }
                index -= c;
            }
        }
        unreachable!("index within count")
    }
}

/// Sizes searched for sentences of each rank bound.
const SIZES: [(usize, core::ops::RangeInclusive<usize>); 3] = [(1, 2..=7), (2, 3..=9), (3, 4..=11)];

/// `count` distinct sentences of rank at most 3, spread evenly over rank
/// bounds and sizes.
pub fn sentences(vocab: &Vocabulary, count: usize) -> Vec<Formula> {
    let mut space = SentenceSpace::new(vocab.clone());
    let mut seen = HashSet::new();
    let mut buckets: Vec<Vec<Formula>> = Vec::new();
    let per_rank = count.div_ceil(SIZES.len());
    for (rank, sizes) in SIZES {
        let sizes: Vec<usize> = sizes.filter(|&n| space.count(n, 0, rank) > 0).collect();
        if sizes.is_empty() {
            continue;
        }
        let per_size = per_rank.div_ceil(sizes.len()) + 2;
        for n in sizes {
            let total = space.count(n, 0, rank);
            let take = (per_size as u128).min(total);
            let mut bucket = Vec::new();
            for j in 0..take {
                let f = space.unrank(n, 0, rank, j * total / take + total / (2 * take));
                if seen.insert(print_formula(&f)) {
                    bucket.push(f);
                }
            }
            buckets.push(bucket);
        }
    }
    let mut out = Vec::new();
    let mut round = 0;
    while out.len() < count && buckets.iter().any(|b| round < b.len()) {
        for b in &buckets {
            if out.len() < count {
                if let Some(f) = b.get(round) {
                    out.push(f.clone());
                }
            }
        }
        round += 1;
    }
    out
}

/// A vocabulary of the corpus with its structures.
pub struct StructureFamily {
    pub name: String,
    pub vocab: Vocabulary,
    /// Every structure of the family.
    pub all: Vec<Structure>,
    /// One structure per isomorphism class.
    pub classes: Vec<Structure>,
}

/// The structure corpus: all structures of size at most 3 over {P},
/// {R} and {P, R}, the linear orders L_1..L_9 and the pure sets of
/// sizes 1..6, all with identity.
pub fn structure_families() -> Vec<StructureFamily> {
    let mut out = Vec::new();
    for (name, rels) in [("P", vec![("P", 1)]), ("R", vec![("R", 2)]), ("PR", vec![("P", 1), ("R", 2)])] {
        let vocab = Vocabulary::relational(rels, true).expect("valid vocabulary");
        let all: Vec<Structure> = enumerate_structures(&vocab, 3).collect();
        let classes = isomorphism_classes(all.clone());
        out.push(StructureFamily { name: name.into(), vocab, all, classes });
    }
    let orders: Vec<Structure> = (1..=9).map(linear_order).collect();
    out.push(StructureFamily {
        name: "orders".into(),
        vocab: orders[0].vocabulary().clone(),
        all: orders.clone(),
        classes: orders,
    });
    let sets: Vec<Structure> = (1..=6).map(pure_set).collect();
    out.push(StructureFamily {
        name: "sets".into(),
        vocab: sets[0].vocabulary().clone(),
        all: sets.clone(),
        classes: sets,
    });
    out
}

/// Identity-free satisfiable sentences over {P, R}.
pub const SATISFIABLE: [&str; 20] = [
    "exists x. P(x)",
    "exists x. exists y. R(x, y)",
    "(forall x. (P(x) | !P(x))) & exists x. P(x)",
    "forall x. exists y. R(x, y)",
    "(exists x. P(x)) & (exists x. !P(x))",
    "forall x. (P(x) | exists y. R(x, y))",
    "exists x. (P(x) & forall y. R(x, y))",
    "forall x. forall y. (R(x, y) | R(y, x))",
    "(forall x. exists y. (R(x, y) & P(y))) & exists x. !R(x, x)",
    "exists x. forall y. !R(y, x)",
    "forall x. (!P(x) | exists y. (R(x, y) & !P(y)))",
    "(exists x. P(x)) & forall x. (!P(x) | !R(x, x))",
    "forall x. exists y. (R(x, y) & !R(y, x))",
    "exists x. exists y. (R(x, y) & !R(y, x))",
    "forall x. forall y. (!R(x, y) | P(x))",
    "(forall x. P(x)) & exists x. exists y. R(x, y)",
    "exists x. (P(x) & exists y. (R(x, y) & !P(y)))",
    "forall x. (P(x) | !P(x))",
    "exists x. forall y. (R(x, y) | P(y))",
    "(exists x. R(x, x)) & forall x. (!R(x, x) | P(x))",
];

/// Identity-free unsatisfiable sentences over {P, R}.
pub const UNSATISFIABLE: [&str; 20] = [
    "exists x. (P(x) & !P(x))",
    "(forall x. P(x)) & (exists x. !P(x))",
    "(exists x. R(x, x)) & forall x. !R(x, x)",
    "forall x. (P(x) & !P(x))",
    "(forall x. forall y. R(x, y)) & exists x. !R(x, x)",
    "(exists x. P(x)) & forall x. !P(x)",
    "(forall x. (!P(x) | exists y. R(x, y))) & (exists x. P(x)) & forall x. forall y. !R(x, y)",
    "exists x. (P(x) & forall y. !P(y))",
    "(forall x. exists y. R(x, y)) & forall x. forall y. !R(x, y)",
    "exists x. forall y. (R(x, y) & !R(y, y))",
    "(forall x. (P(x) | R(x, x))) & exists x. (!P(x) & !R(x, x))",
    "forall x. exists y. (P(y) & !P(x))",
    "(forall x. forall y. (!R(x, y) | !R(y, x))) & exists x. R(x, x)",
    "(exists x. exists y. R(x, y)) & forall x. forall y. !R(x, y)",
    "(forall x. P(x)) & exists x. exists y. (R(x, y) & !P(y))",
    "exists x. ((P(x) | R(x, x)) & !P(x) & !R(x, x))",
    "(forall x. (!P(x) | !R(x, x))) & exists x. (P(x) & R(x, x))",
    "forall x. forall y. (P(x) & !P(y))",
    "(exists x. !P(x)) & forall x. (P(x) & exists y. R(x, y))",
    "(forall x. forall y. (!R(x, y) | P(y))) & exists x. (R(x, x) & !P(x))",
];

/// The vocabulary of [`SATISFIABLE`] and [`UNSATISFIABLE`].
pub fn meg_vocabulary() -> Vocabulary {
    Vocabulary::relational([("P", 1), ("R", 2)], false).expect("valid vocabulary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_nnf;
    use crate::structure::Assignment;

    #[test]
    fn counts_small_cases() {
        let v = Vocabulary::relational([("P", 1)], false).unwrap();
        let mut s = SentenceSpace::new(v);
        assert_eq!(s.count(1, 0, 3), 0);
        assert_eq!(s.count(1, 1, 0), 2);
        assert_eq!(s.count(2, 0, 1), 6 * 2);
        let all: Vec<String> = (0..12).map(|i| print_formula(&s.unrank(2, 0, 1, i))).collect();
        let unique: HashSet<&String> = all.iter().collect();
        assert_eq!(unique.len(), 12);
        assert!(all.contains(&String::from("forall x. P(x)")));
        assert!(all.contains(&String::from("exists z. !P(z)")));
    }

    #[test]
    fn unranked_formulas_match_their_bucket() {
        let v = Vocabulary::relational([("P", 1), ("R", 2)], true).unwrap();
        let mut s = SentenceSpace::new(v);
        let total = s.count(6, 0, 2);
        for j in 0..50u128 {
            let f = s.unrank(6, 0, 2, j * total / 50);
            assert_eq!(f.size(), 6);
            assert!(f.quantifier_rank() <= 2);
            assert!(f.is_sentence());
        }
    }

    #[test]
    fn corpus_shape() {
        for fam in structure_families() {
            let fs = sentences(&fam.vocab, 200);
            assert_eq!(fs.len(), 200, "{}", fam.name);
            assert!(fs.iter().all(|f| f.is_sentence() && f.quantifier_rank() <= 3));
            assert!(fs.iter().any(|f| f.quantifier_rank() == 3));
        }
    }

    #[test]
    fn fixed_lists_parse_and_behave_on_small_structures() {
        let v = meg_vocabulary();
        let structures: Vec<Structure> = enumerate_structures(&v, 2).collect();
        for text in SATISFIABLE {
            let f = parse_nnf(text, &v).unwrap();
            assert!(!f.uses_identity());
            let m3: Vec<Structure> = enumerate_structures(&v, 3).collect();
            assert!(m3.iter().any(|m| m.tarski_truth(&f, &Assignment::new()).unwrap()), "{text}");
        }
        for text in UNSATISFIABLE {
            let f = parse_nnf(text, &v).unwrap();
            assert!(structures.iter().all(|m| !m.tarski_truth(&f, &Assignment::new()).unwrap()), "{text}");
        }
    }
}
