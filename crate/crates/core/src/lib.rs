//! Privacy wrappers for untrusted black-box functions.
//!
//! A wrapper gets query access to `f` on subsets of a dataset `x` and releases a
//! differentially private estimate of `f(x)`, whatever `f` actually computes.
//! Every query stays within a bounded down neighborhood of `x`.

pub mod autosense;
pub mod blackbox;
pub mod builtins;
pub mod claimed;
pub mod dataset;
pub mod double_mono;
pub mod error;
pub mod lattice;
pub mod noise;
pub mod output;
pub mod range;
pub mod shifted_inverse;
pub mod stability;
pub mod verification;

pub use autosense::{autosense_wrap, monotonize, MonotonizedBox};
pub use blackbox::{BlackBox, Evaluator, SubsetRef};
pub use builtins::Builtin;
pub use claimed::{lipschitz_filter, modified_tahoe, small_diameter, subset_extension};
pub use dataset::{multiset_adapter, multiset_projection, Dataset, Element};
pub use double_mono::double_mono_wrap;
pub use error::{Error, Result};
pub use lattice::{LatticeView, DEFAULT_BUDGET};
pub use noise::RandomStream;
pub use output::{Profile, Release, WrapperOutput};
pub use range::RangeSpec;
pub use shifted_inverse::{shifted_inverse, GippInstance, GippSolver, PureExpMech, ShiftedInverseParams};
