//! Width-based lookahead planning over typed STRIPS.
//!
//! The crate is `no_std` and only needs `alloc`. It covers parsing of the
//! typed STRIPS subset of PDDL ([`pddl`]), lazy grounding and successor
//! generation ([`ground`]), novelty tables with object abstraction
//! ([`novelty`]), the IW / AIW / BAIW / C-AIW lookahead trees
//! ([`lookahead`]) and the relational graph encodings consumed by a graph
//! network scorer ([`encode`]).
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod encode;
pub mod ground;
pub mod lookahead;
pub mod novelty;
pub mod pddl;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use ground::{AtomId, GroundAction, GroundError, State, Task};
pub use lookahead::{lookahead, LookaheadConfig, LookaheadTree, Variant};
pub use novelty::{NoveltyTable, Reduction};
