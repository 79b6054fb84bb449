//! The guide's code examples, compiled and run as doc-tests. Each module
//! inlines one chapter from `book/src/`, so an example that drifts from the
//! library fails `cargo test` instead of rotting in the rendered book.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/eigenforms.md")]
pub mod eigenforms {}

#[doc = include_str!("../../../book/src/sym2.md")]
pub mod sym2 {}

#[doc = include_str!("../../../book/src/restriction.md")]
pub mod restriction {}

#[doc = include_str!("../../../book/src/short-intervals.md")]
pub mod short_intervals {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
