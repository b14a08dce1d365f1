//! Entanglement-depth and non-k-stretchability witnesses from symmetric
//! informationally complete measurements.

pub mod basis;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod infoquant;
pub mod partitions;
pub mod povm;
pub mod states;

pub use basis::{canonical_families, gell_mann_basis, group_basis, Grouping, OperatorBasis};
pub use error::{Error, Result};
pub use linalg::{DensityMatrix, HermitianOperator, Matrix, Spectrum, C64};
pub use povm::{build_stpovm, RChoice, RRange, SymmetricMeasurement};
pub use infoquant::{CollectiveMoments, CollectiveObservable, MonotoneFunction, Quantity, SpectralState};
pub use partitions::{BoundInputs, BoundValues, MSource, StretchPartition};
pub use states::{antisymmetric_state, ghz_qudit, IsotropicFamily, PureStateDescriptor};
pub use criteria::{evaluate, threshold_p, CriterionReport, StateInput, Verdict};
