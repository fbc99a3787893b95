//! Built-in objectives and seeded instance generators.

pub mod classic;
pub mod instance;
pub mod lp;
pub mod snl;

pub use classic::{classic_suite, Beale, DenseQuadratic, Himmelblau, NamedProblem, Quartic, Rosenbrock};
pub use instance::Instance;
pub use lp::{lp_generate, LpInstance, LpParams, LpProblem};
pub use snl::{snl_generate, Edge, SnlInstance, SnlParams, SnlProblem};
