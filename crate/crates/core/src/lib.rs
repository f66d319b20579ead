//! Soft-output MU-MIMO detection: a sort-free, threshold-pruned tree search
//! with approximate reliability estimation, exhaustive oracles, linear
//! baselines, and a seeded Monte-Carlo link simulator with operation
//! counting.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod coding;
pub mod complexity;
pub mod constellation;
pub mod detect;
pub mod error;
pub mod linalg;
pub mod sim;

pub use complexity::{max_complexity_bound, ComplexityReport, Phase};
pub use constellation::{Constellation, NeighborOrdering, SymbolIndex};
pub use detect::{
    dare_detect, exclusion_probability_bound, CandidateList, DareConfig, DareOutput, LlrVector,
};
pub use error::{Error, Result};
pub use linalg::{regularized_qr, CMatrix, CVector, QrFactors, C64};
