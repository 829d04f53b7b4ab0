#![allow(dead_code)]

pub mod dag;
pub mod query;
pub mod turtle_reader;
