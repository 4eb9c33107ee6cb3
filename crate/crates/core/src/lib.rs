#![no_std]
extern crate alloc;

pub mod corpus;
pub mod ef;
pub mod eval;
pub mod hintikka;
pub mod kernel;
pub mod meg;
pub mod oracle;
pub mod parse;
pub mod structure;
pub mod syntax;
pub mod table;
pub mod translate;
