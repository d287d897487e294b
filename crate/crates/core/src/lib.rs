//! Estimation of the average causal effect of a binary treatment on a binary
//! outcome when the treatment is missing for some rows or only available
//! through a text-classifier proxy.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! over immutable inputs; IO, corpus ingestion and the experiment runner live
//! in the `causal-text` companion crate.
//!
//! Module map:
//!
//! * [`tabular`]: rows, datasets, stratum counts and the backdoor functional.
//! * [`synthgen`]: synthetic generators for the missing-data and
//!   measurement-error settings.
//! * [`textclf`]: L2-regularized logistic regression over bag-of-words plus
//!   structured features.
//! * [`missing`]: multiple imputation and its baselines.
//! * [`measure`]: matrix adjustment of classifier proxies and its baselines.
//! * [`oracle`]: exact enumeration over tiny discrete joints.

#![cfg_attr(not(feature = "std"), no_std)]
// small fixed-size tables read best with explicit indices
#![allow(clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod measure;
pub mod missing;
pub mod oracle;
pub mod rng;
pub mod synthgen;
pub mod tabular;
pub mod textclf;

pub use error::{Error, Result};
pub use tabular::{
    conditional_prob, stratum_counts, tau_simple, Assignment, DataRow, Dataset, EffectEstimate,
    Estimator, Provenance, Record, Sample, StratumTable, TreatmentTruth, Triple, Var,
};
