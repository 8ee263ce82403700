//! Path following from an interior anchor at `t = 1` down to a Nash equilibrium at `t → 0`.

mod export;
mod system;
mod tracer;
mod transform;

pub use export::{export_path, read_path_json, PathExport, PathFormat};
pub use system::{Homotopy, PathPoint};
pub use tracer::{random_anchor, trace, trace_many, TraceResult, TraceStatus, TracerConfig};
pub use transform::{ln_phi, phi, phi_prime, psi, r_of_t, Psi, TransformParams};
