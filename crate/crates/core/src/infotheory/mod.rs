//! Entropic measures of shared information between a system and fragments of
//! its environment.

pub mod branching;
pub mod measures;
pub mod theorems;

pub use branching::{make_branching_state, realize_dense, two_branch_gram, BranchingState, DenseRealization};
pub use measures::*;
pub use theorems::{
    deficit_report, lemma1_check, random_branch_probs, random_branching_state, random_gram, theorem1_check,
    DeficitReport, LemmaReport, Records,
};
