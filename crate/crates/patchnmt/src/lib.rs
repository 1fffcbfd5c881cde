//! File formats, repository walking and the command-line pipeline around
//! `patchnmt-core`.

pub use patchnmt_core as core;

pub mod escape;
pub mod formats;
pub mod manifest;
pub mod walk;
pub mod pipeline;
pub mod cli;
