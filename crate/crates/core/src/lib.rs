//! Block Gram-Schmidt QR variants with stability measurement tooling.

pub mod error;
pub mod events;
pub mod harness;
pub mod kernels;
pub mod mat;
pub mod matgen;
pub mod metrics;
pub mod muscles;
pub mod rng;
pub mod skeletons;

pub use error::{Error, Result};
pub use events::{Event, EventKind, EventLog, Origin};
pub use mat::{BlockLayout, Mat};
pub use matgen::{MatrixKind, MatrixSpec};
pub use metrics::StabilityReport;
pub use muscles::{MuscleId, MuscleParams, QRResult, RunStatus};
pub use rng::Rng;
pub use skeletons::{BlockQRResult, SkeletonId, SkeletonOptions};
