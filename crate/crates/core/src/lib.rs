//! Heavy-tailed sums under dependence: large-deviation ratios, random sums
//! and ruin probabilities, with deterministic parallel Monte Carlo.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod counting;
pub mod dependence;
pub mod deviation;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod marginals;
pub mod mc;
pub mod risk;
pub mod stream;
mod textual;
pub mod trend;

pub use counting::{CountingSpec, LambdaCurve, LambdaEstimate, RandomSumScanConfig};
pub use dependence::{DependenceKind, DependenceSpec, DominatingEstimate, SequenceSampler};
pub use deviation::{Method, RatioEntry, RatioReport, RatioScanConfig, Regime, TailEstimate, Tolerances, Verdict};
pub use diagnostics::{EmpiricalTail, IndexEstimate, TailRatioCurve, TailSource};
pub use error::{Error, Result};
pub use risk::{Functional, ReinsuranceReport, ReinsuranceScanConfig, RiskModelSpec, RiskPath, RuinEstimate, RuinReport, TauSpec};
pub use marginals::{MarginalSpec, Moments, TailIndices};
pub use stream::{Role, SliceSource, StreamKey, Substream, UniformSource};
pub use trend::{TrendReport, TrendVerdict};
