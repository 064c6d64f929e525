//! Bilocal classical theory: states, effects, transformations.

pub mod process;
pub mod state;
pub mod tensor;

pub use process::Process;
pub use state::{
    deterministic_effect, pair, par_effects, par_states, point_effect, point_state, pure_effect, pure_state,
    uniform_state, BctEffect, BctState,
};
pub use tensor::{
    coarse_grain, compose_par, compose_seq, decompose, identity, identity_par, is_channel, lift, nu, nu_inv,
    par_with_identity, recompose, reversible, reversible_bipartite_view, reversible_on, reversible_spec_of, swap,
    AtomicTerm, BipartiteReversibleView, Instrument, ReversibleSpec, TransformationTensor,
};
