//! Simulation toolkit for the XZZX surface code under biased Pauli noise.

pub mod code;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod matching;
pub mod noise;
pub mod pauli;
pub mod stats;
pub mod verify;

pub use code::{
    CodeDescription, Diagonal, LatticeGeometry, LogicalClass, Restriction, StabilizerCode, SymmetryDirection,
    Syndrome,
};
pub use decoder::{
    adjudicate, adjudicate_spacetime, decode_2d, decode_3d, decode_infinite_bias, ml_decode, Correction, Outcome,
    SyndromeVolume, WeightParams,
};
pub use error::{Error, Result};
pub use matching::{min_weight_perfect_matching, Matching, WeightedGraph};
pub use noise::{
    derive_seed, hashing_bound, sample_error, sample_spacetime, BiasSpec, PauliChannel, PhenomenologicalNoise,
    SpacetimeSample, TemporalClosure,
};
pub use pauli::{Bits, Pauli, PauliOperator};
pub use stats::{
    aspect_ratio_optimum, estimate_gamma, fit_subthreshold, fit_threshold, rare_event_estimate, run_batch,
    AnsatzFit, BatchParams, DecoderId, RareEventEstimate, ThresholdFit, TrialBatch,
};
