//! Structure files, formula inputs and strategy dumps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gamelogic_core::parse::parse_nnf;
use gamelogic_core::structure::Structure;
use gamelogic_core::syntax::{Formula, Vocabulary, VERUM};

use crate::error::CliError;

/// The JSON form of a finite structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub domain: Vec<String>,
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
}

impl StructureFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::User(format!("bad structure file: {e}")))
    }

    pub fn from_structure(m: &Structure) -> Self {
        let vocab = m.vocabulary();
        let relations = vocab
            .relations()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let tuples =
                    m.tuples(i).iter().map(|t| t.iter().map(|&e| m.element_id(e).to_string()).collect()).collect();
                (r.name.clone(), tuples)
            })
            .collect();
        let constants = vocab
            .constants()
            .iter()
            .enumerate()
            .filter_map(|(i, c)| m.constant_value(i).map(|e| (c.clone(), m.element_id(e).to_string())))
            .collect();
        StructureFile { domain: m.domain().to_vec(), relations, constants }
    }

    /// Arities of the non-empty relations.
    fn arities(&self) -> Result<BTreeMap<String, usize>, CliError> {
        let mut out = BTreeMap::new();
        for (name, tuples) in &self.relations {
            if let Some(first) = tuples.first() {
                if let Some(bad) = tuples.iter().find(|t| t.len() != first.len()) {
                    return Err(CliError::User(format!(
                        "relation {name} mixes tuples of length {} and {}",
                        first.len(),
                        bad.len()
                    )));
                }
                out.insert(name.clone(), first.len());
            }
        }
        Ok(out)
    }

    /// Builds the structure over `vocab`. Relations the file omits are empty.
    pub fn to_structure(&self, vocab: &Vocabulary) -> Result<Structure, CliError> {
        let user = |e: &dyn std::fmt::Display| CliError::User(e.to_string());
        let mut m = Structure::new(vocab.clone(), self.domain.clone()).map_err(|e| user(&e))?;
        for (name, tuples) in &self.relations {
            for t in tuples {
                let ids: Vec<&str> = t.iter().map(String::as_str).collect();
                m.insert_ids(name, &ids).map_err(|e| user(&e))?;
            }
        }
        for (name, id) in &self.constants {
            let e =
                m.element(id).ok_or_else(|| CliError::User(format!("constant {name} names unknown element {id}")))?;
            m.set_constant(name, e).map_err(|e| user(&e))?;
        }
        m.validate().map_err(|e| user(&e))?;
        Ok(m)
    }
}

/// Relation arities as written in formula text. Only a scan: the parser
/// checks the formula itself later.
pub fn formula_arities(text: &str) -> Result<BTreeMap<String, usize>, CliError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: BTreeMap<String, usize> = BTreeMap::new();
    let mut i = 0;
    while i < chars.len() {
        if !(chars[i].is_alphabetic() || chars[i] == '_') {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        let name: String = chars[start..i].iter().collect();
        if !chars[start].is_uppercase() || name == VERUM {
            continue;
        }
        let mut j = i;
        while j < chars.len() && chars[j].is_whitespace() {
            j += 1;
        }
        let arity = if chars.get(j) == Some(&'(') {
            let close = chars[j..].iter().position(|&c| c == ')').map_or(chars.len(), |k| j + k);
            let inside: String = chars[j + 1..close].iter().collect();
            if inside.trim().is_empty() {
                0
            } else {
                inside.split(',').count()
            }
        } else {
            0
        };
        match out.get(&name) {
            Some(&a) if a != arity => {
                return Err(CliError::User(format!("relation {name} is used with {a} and {arity} arguments")))
            }
            _ => {
                out.insert(name, arity);
            }
        }
    }
    Ok(out)
}

/// The common vocabulary of some structure files, with arities of empty
/// relations taken from `hints`.
pub fn vocabulary(
    files: &[&StructureFile],
    hints: &BTreeMap<String, usize>,
    identity: bool,
) -> Result<Vocabulary, CliError> {
    let mut arities: BTreeMap<String, Option<usize>> = BTreeMap::new();
    for f in files {
        for name in f.relations.keys() {
            arities.entry(name.clone()).or_insert(None);
        }
        for (name, a) in f.arities()? {
            match arities.get(&name) {
                Some(Some(b)) if *b != a => {
                    return Err(CliError::User(format!("relation {name} has arity {a} in one file and {b} in another")))
                }
                _ => {
                    arities.insert(name, Some(a));
                }
            }
        }
    }
    let mut relations = Vec::new();
    for (name, a) in arities {
        let a = a.or_else(|| hints.get(&name).copied()).ok_or_else(|| {
            CliError::User(format!("cannot tell the arity of the empty relation {name}; use it in the formula"))
        })?;
        relations.push((name, a));
    }
    let mut constants: Vec<String> = files.iter().flat_map(|f| f.constants.keys().cloned()).collect();
    constants.sort();
    constants.dedup();
    Vocabulary::new(relations, constants, identity).map_err(|e| CliError::User(e.to_string()))
}

/// The vocabulary a formula mentions, for inputs without a structure.
pub fn formula_vocabulary(text: &str, identity: bool) -> Result<Vocabulary, CliError> {
    let rels = formula_arities(text)?;
    Vocabulary::new(rels, Vec::new(), identity).map_err(|e| CliError::User(e.to_string()))
}

pub fn parse_sentence(text: &str, vocab: &Vocabulary) -> Result<Formula, CliError> {
    let f = parse_nnf(text, vocab).map_err(|e| CliError::User(format!("formula: {e}")))?;
    if !f.is_sentence() {
        let free: Vec<String> = f.free_vars().into_iter().collect();
        return Err(CliError::User(format!("formula has free variables: {}", free.join(", "))));
    }
    Ok(f)
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

/// A positional strategy as a table from position keys to moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub game: String,
    pub player: String,
    pub moves: BTreeMap<String, String>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scans_arities() {
        let a = formula_arities("forall x. (P(x) | exists y. R(x, y)) & Q & TRUE & Z()").unwrap();
        let expected: BTreeMap<String, usize> =
            [("P", 1), ("Q", 0), ("R", 2), ("Z", 0)].map(|(n, a)| (n.to_string(), a)).into();
        assert_eq!(a, expected);
        assert!(formula_arities("P(x) & P(x, y)").is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(StructureFile::parse(r#"{"domain": ["a"], "relations": {}, "extra": 1}"#).is_err());
        assert!(StructureFile::parse(r#"{"domain": ["a"]}"#).is_err());
    }

    #[test]
    fn round_trips_structures() {
        let f = StructureFile::parse(
            r#"{"domain": ["a", "b"], "relations": {"R": [["a", "b"]], "P": []}, "constants": {"k": "b"}}"#,
        )
        .unwrap();
        let hints = formula_arities("P(x)").unwrap();
        let v = vocabulary(&[&f], &hints, true).unwrap();
        let m = f.to_structure(&v).unwrap();
        assert_eq!(StructureFile::from_structure(&m), f);
        assert!(vocabulary(&[&f], &BTreeMap::new(), true).is_err());
    }

    #[test]
    fn merges_vocabularies() {
        let a = StructureFile::parse(r#"{"domain": ["0"], "relations": {"P": [["0"]]}}"#).unwrap();
        let b = StructureFile::parse(r#"{"domain": ["0"], "relations": {"R": [["0", "0"]]}}"#).unwrap();
        let v = vocabulary(&[&a, &b], &BTreeMap::new(), false).unwrap();
        assert_eq!(v.relations().len(), 2);
        assert!(a.to_structure(&v).unwrap().tuples(1).is_empty());
        let c = StructureFile::parse(r#"{"domain": ["0"], "relations": {"P": [["0", "0"]]}}"#).unwrap();
        assert!(vocabulary(&[&a, &c], &BTreeMap::new(), false).is_err());
    }
}
