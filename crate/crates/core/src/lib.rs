//! Core of the patch-learning toolkit.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std`: Java-subset lexing and abstraction, method-level AST
//! differencing, dataset assembly, the attention encoder-decoder with its
//! training loop, beam-search decoding and the evaluation metrics. File
//! formats, repository walking and the command line live in the companion
//! `patchnmt` crate.
#![no_std]

extern crate alloc;

pub mod lexabs;
pub mod treediff;
pub mod miner;
pub mod dataset;
pub mod seq2seq;
pub mod decode;
pub mod eval;
