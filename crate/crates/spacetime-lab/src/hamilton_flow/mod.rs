//! Hamilton flow of `p`: integration, convexity at infinity, non-trapping
//! certificates and the global escape function.

pub mod certify;
pub mod convexity;
pub mod escape;
pub mod export;
pub mod integrator;
pub mod trajectory;

pub use certify::{certify_nontrapping, past_incoming_time, CertError, CertifyOptions, NonTrappingCertificate};
pub use convexity::{check_convexity, ConvexityLattice, ConvexityReport};
pub use escape::{build_escape_function, escape_q, verify_escape_inequality, EscapeError, EscapeFunction, EscapeOptions, EscapeReport};
pub use export::{write_json, write_trajectory_csv};
pub use integrator::{DopriOptions, Solution, StepFailure};
pub use trajectory::{integrate_flow, FlowError, PhaseTrajectory};
