//! Pairwise and multiple elastic alignment.

mod dp;
mod karcher;
mod polish;

pub use dp::{amplitude_distance, dp_align, dp_cost, DpConfig, PairwiseAlignment, MIN_LATTICE_NODES};
pub use karcher::{
    center_orbit, karcher_mean, multiple_align, KarcherConfig, MultipleAlignment, MultipleAlignmentResult,
};

pub(crate) use karcher::{align_with_candidate, initial_template, polish_members, reconstruct_template, relative_change, template_step};
