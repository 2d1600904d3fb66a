//! Library surface of the CLI crate: the scenario-file schema, shared by
//! the binary and its integration tests.

pub mod config;
