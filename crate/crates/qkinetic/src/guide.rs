//! The user guide, compiled: each chapter of the book under `book/` is
//! included as module documentation so that every code snippet in the
//! guide runs as a doc-test and can never drift from the library.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral_chapter {}

#[doc = include_str!("../../../book/src/histories.md")]
pub mod histories_chapter {}

#[doc = include_str!("../../../book/src/kernel.md")]
pub mod kernel_chapter {}

#[doc = include_str!("../../../book/src/series.md")]
pub mod series_chapter {}

#[doc = include_str!("../../../book/src/scaling.md")]
pub mod scaling_chapter {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_chapter {}
