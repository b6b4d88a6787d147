//! All-to-all σz model `H = σ_z^S Σ_i d_i σ_z^i + Σ_{j<k} g_jk σ_z^j σ_z^k`
//! started from `|+⟩^{⊗(N+1)}`.

pub mod analysis;
pub mod model;
pub mod reduced;

pub use analysis::{
    consensus_timeseries, decoherence_time, ensemble_average, log_time_grid, pip, redundancy, relaxation_time,
    ConsensusRow, EnsembleResult, FragmentAssignment, FragmentSampler, PipPoint, TimeSeriesSpec,
};
pub use model::{sample_couplings, SpinModelParams, SpinRealization};
pub use reduced::{reduced_dm_factorized, ConditionedSnapshot, SpinSnapshot, FRAGMENT_CAP};
