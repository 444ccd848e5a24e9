//! Doc-test harness for the book under `book/`.
//!
//! Each chapter is included as module documentation, so every Rust code
//! block in the book compiles and runs under `cargo test --doc`. When a
//! block fails, the failing module name points at the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/power-model.md")]
pub mod power_model {}

#[doc = include_str!("../../../book/src/utilities.md")]
pub mod utilities {}

#[doc = include_str!("../../../book/src/realtime-selection.md")]
pub mod realtime_selection {}

#[doc = include_str!("../../../book/src/filetransfer-selection.md")]
pub mod filetransfer_selection {}

#[doc = include_str!("../../../book/src/fluid-model.md")]
pub mod fluid_model {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
