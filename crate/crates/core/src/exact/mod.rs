//! Exact computations on the finite state spaces: the k-particle chain on
//! Ω_{N,k} and the two-particle merging chain.

mod chain;
mod gap;
mod lift;
mod mixing;
mod sparse;
mod two_particle;
mod uniformize;

pub use chain::{build_chain, build_chain_with_budget, ChainMatrix, DEFAULT_STATE_BUDGET};
pub use gap::{gap_of, lanczos_gap, GapResult};
pub use lift::{lift_eigenfunction, stationary_moments};
pub use mixing::{
    censored_tv_at, extremal_starts, mix_exact, mixing_time, sandwich, tv_curve, tv_to_uniform, CensoredComparison,
    ExactMixing, MixingCurve, Starts,
};
pub use sparse::SparseGenerator;
pub use two_particle::{no_merge_probability, no_merge_spectral, two_particle_check, TwoParticleChain, TwoParticleReport};
pub use uniformize::{poisson_window, propagate, propagate_piecewise, DEFAULT_TOL};
