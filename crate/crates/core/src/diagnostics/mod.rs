//! Transforms, functionals, identities and constraint checks evaluated on
//! snapshots of a closed-loop run.

pub mod grid;
pub mod kernels;
pub mod lyapunov;
pub mod mismatch;
pub mod monitor;
pub mod norms;
pub mod residuals;
pub mod transform;

pub use kernels::{kernels, Kernels};
pub use lyapunov::{lyapunov, LyapunovSample, LyapunovWeights};
pub use mismatch::{f_bounds, f_identity, BoundConstants, BoundReport, FIdentity};
pub use monitor::{constraint_monitor, FirstViolations, MonitorReport, RowFlags};
pub use norms::norm_xi;
pub use residuals::{target_residuals, TargetResiduals};
pub use transform::{direct_transform, inverse_transform, round_trip_error, InverseResult, TransformSpec, TransformedState};
