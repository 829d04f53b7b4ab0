//! Endpoints, federation, execution tracking and the `knowhow` command line
//! built on `knowhow-core`.

pub mod cli;
pub mod corpus;
pub mod endpoint;
pub mod exec;
pub mod federation;
pub mod results;
pub mod store;
