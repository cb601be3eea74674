// SPDX-License-Identifier: Apache-2.0

//! Whole-transaction paths and basis path sets.
//!
//! A whole-transaction path starts at a transaction entry and ends when the
//! entry's frame closes, with calls, returns and cascading reverts properly
//! nested. Each path maps to a vector counting how often it traverses each
//! edge of the entry's reachable subgraph; a basis path set is a maximal
//! linearly independent set of such vectors.

mod generate;
mod path;
mod rank;
mod search;

pub use generate::{generate_wtpbs, BasisError, BasisPathSet};
pub use path::{path_vector, validate_wtp, Frame, PathError, Terminal, Violation, ViolationKind, WholeTxPath};
pub use rank::{span_contains, vector_rank, Echelon};
pub use search::{baseline_path, complete_from_prefix, Budgets, CallContext, PathSearch};
