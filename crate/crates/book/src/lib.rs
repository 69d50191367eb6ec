//! Compiles the code samples of the guide in `book/` as doc-tests, so the
//! book cannot drift away from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/features.md")]
pub mod features {}

#[doc = include_str!("../../../book/src/classifiers.md")]
pub mod classifiers {}

#[doc = include_str!("../../../book/src/similarity.md")]
pub mod similarity {}

#[doc = include_str!("../../../book/src/style-transfer.md")]
pub mod style_transfer {}

#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
