//! Synthesis for bounded Petri games with one system player and any number
//! of environment players.
//!
//! A game is a bounded Petri net whose places are split between the system
//! and the environment, with exactly one system token in every reachable
//! marking. The system wins if it has a strategy that avoids bad markings,
//! stays deterministic and never deadlocks while the net could still move.
//!
//! [`solver::decide`] answers that question symbolically, one SAT query per
//! reachable marking and attractor round, with a 2SAT fast path when at most
//! two environment tokens are ever present. [`graph_game`] builds the
//! explicit two-player game as a reference, and [`unfold`] unrolls a winning
//! strategy into a branching process for structural checks.

pub mod dot;
pub mod error;
pub mod format;
pub mod game;
pub mod graph_game;
pub mod multiset;
pub mod net;
pub mod reductions;
pub mod sat;
pub mod solver;
pub mod strategy;
pub mod twosat;
pub mod unfold;

pub use error::{Error, Result};
pub use format::{parse, serialize};
pub use game::{BadSpec, PetriGame, TransitionKind, ValidationReport};
pub use graph_game::{solve_explicit, BadClass, Variant, Winner};
pub use multiset::Multiset;
pub use net::{Marking, NetBuilder, PetriNet, PlaceId, TransitionId};
pub use solver::{decide, Mode, SolveOptions, Verdict};
pub use strategy::{validate_strategy, CommitmentStrategy};
pub use unfold::{unfold, UnfoldingPrefix};
