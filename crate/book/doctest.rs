//! Doctest shim: every Rust listing in the guide compiles and runs under
//! `cargo test -p dgqa-guide`.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("src/distortions.md")]
pub mod distortions {}

#[doc = include_str!("src/features.md")]
pub mod features {}

#[doc = include_str!("src/training.md")]
pub mod training {}

#[doc = include_str!("src/selection.md")]
pub mod selection {}

#[doc = include_str!("src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("src/artifacts.md")]
pub mod artifacts {}
