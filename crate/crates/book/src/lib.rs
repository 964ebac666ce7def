//! The guide's chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/polynomials.md")]
pub mod polynomials {}

#[doc = include_str!("../../../book/src/poisson.md")]
pub mod poisson {}

#[doc = include_str!("../../../book/src/blowups.md")]
pub mod blowups {}

#[doc = include_str!("../../../book/src/trig.md")]
pub mod trig {}

#[doc = include_str!("../../../book/src/fourier.md")]
pub mod fourier {}

#[doc = include_str!("../../../book/src/lift.md")]
pub mod lift {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
