//! Doctest shim for the guide in `book/`.
//!
//! mdbook cannot run snippets against the crate, so each chapter is included
//! here as hidden rustdoc; `cargo test --doc` then compiles and runs every
//! code block in the book against the current API.

#![allow(unused)]

#[doc = include_str!("../../../book/src/model.md")]
pub mod _ch_model {}

#[doc = include_str!("../../../book/src/reduced-basis.md")]
pub mod _ch_reduced_basis {}

#[doc = include_str!("../../../book/src/disorder.md")]
pub mod _ch_disorder {}

#[doc = include_str!("../../../book/src/propagation.md")]
pub mod _ch_propagation {}

#[doc = include_str!("../../../book/src/observables.md")]
pub mod _ch_observables {}

#[doc = include_str!("../../../book/src/level-statistics.md")]
pub mod _ch_level_statistics {}

#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod _ch_ensembles {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod _ch_cli {}
