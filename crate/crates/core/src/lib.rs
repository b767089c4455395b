//! Populations of memory-driven agents playing a two-word naming game.
//!
//! Every agent remembers its last `H` interactions and produces word A with a
//! probability read from a [`PolicyTable`] indexed by that memory. The crate
//! provides the finite-population Monte Carlo engine ([`sim`]), the
//! deterministic large-population limit and its fixed-point stability
//! ([`meanfield`]), the classical minimal naming game used as a baseline
//! ([`baseline`]) and the statistics used to summarise runs ([`analysis`]).

pub mod analysis;
pub mod baseline;
mod error;
pub mod meanfield;
pub mod policy;
pub mod sim;
pub mod state;
pub mod transition;

pub use error::{Error, Result};
pub use policy::{synth_policy, PolicyMetadata, PolicyTable, SynthKind, WordPair};
pub use sim::{run, run_batch, Outcome, RunResult, SimConfig};
pub use state::{
    decode_state, encode_state, state_count, MemoryState, Pair, StateIndex, Word,
    DEFAULT_HISTORY_LEN,
};
pub use transition::TransitionTable;
