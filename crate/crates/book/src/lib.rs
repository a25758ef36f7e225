//! The waternet guide. Each module holds one chapter so that its code
//! samples run as doc-tests.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}

#[doc = include_str!("../../../book/src/blending.md")]
pub mod blending {}

#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}

#[doc = include_str!("../../../book/src/checking.md")]
pub mod checking {}

#[doc = include_str!("../../../book/src/trials.md")]
pub mod trials {}

#[doc = include_str!("../../../book/src/lp.md")]
pub mod lp {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
