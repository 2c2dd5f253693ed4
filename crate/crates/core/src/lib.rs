#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod factorization;
pub mod fourier;
pub mod hilbert;
pub mod minvalue;
pub mod par;
pub mod paraconj;
pub mod report;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
pub use factorization::{BlaschkeProduct, OuterFactor, ReconstructionResult, StopReason};
pub use minvalue::{mqmv_retrieve, MinSearchConfig};
pub use par::Execution;
pub use paraconj::{mqpc_retrieve, PencilConfig};
pub use report::{compare_report, run, ErrorTable, Method, RunConfig, RunReport, Source};
pub use sampling::{CircleGrid, ComplexSamples, ModulusField, RealSamples};
