// SPDX-License-Identifier: Apache-2.0

pub mod frontend;
pub mod basis;
pub mod cli;
pub mod coverage;
pub mod executor;
pub mod graph;
pub mod interactions;
pub mod mutation;
pub mod word;

pub use word::Word;
