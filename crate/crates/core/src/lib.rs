//! Multiple imputation of multivariate normal data by joint modelling and
//! by fully conditional specification, together with the conversion between
//! a joint normal–inverse-Wishart prior and the per-variable
//! normal–inverse-gamma priors under which the two samplers agree.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amputation;
pub mod analysis;
pub mod data;
pub mod error;
pub mod fcs;
pub mod gaussian;
pub mod harness;
pub mod jm;
pub mod linalg;
pub mod prior;
pub mod samplers;

pub use amputation::{AmputationSpec, Mechanism};
pub use analysis::{EvalSummary, OrderEffectResult, PooledEstimate, PosteriorComparison};
pub use data::IncompleteData;
pub use error::{Error, Result};
pub use fcs::{FcsTraceHook, NigPosterior, TraceEvent, VisitSequence};
pub use gaussian::{ConditionalRegression, GaussianParams, PartitionedGaussian};
pub use harness::{ExperimentConfig, Method, PriorSpec};
pub use jm::JmState;
pub use prior::{NigPrior, NiwPrior, ScaleConvention};
pub use samplers::{RngSeed, SimRng};
