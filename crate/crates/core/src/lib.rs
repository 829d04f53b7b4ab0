//! Core of the know-how toolkit: an RDF data model with a Turtle subset,
//! a SPARQL-subset query engine, the process/execution vocabulary, article
//! extraction and execution-state derivation.
//!
//! The crate is `no_std` and only needs `alloc`; IO, HTTP and the CLI live
//! in the `knowhow` crate.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod execution;
pub mod extraction;
mod lex;
pub mod query;
pub mod rdf;
pub mod vocab;

pub use lex::Position;
