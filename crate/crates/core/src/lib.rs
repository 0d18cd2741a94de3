//! Derivative-free global optimization of expectation-valued objectives
//! `f(x) = E[F(x, Y)]` with kinetic variable-sample consensus methods.
//!
//! The main solver (LKBO-FVSe) evolves an interacting particle ensemble with
//! Nanbu-style collision steps against a freshly sampled scatterer each
//! iterate, together with:
//!
//! - an sY variant that averages the estimator over several realizations per
//!   iterate,
//! - standard CBO and fixed-sample CBO-FFS baselines sharing the same
//!   consensus kernel,
//! - moment diagnostics (empirical mean/variance traces and the approximated
//!   moment ODE system with a Dormand–Prince integrator),
//! - convergence-condition calculators (`C_α`, `μ`, `ν`),
//! - a benchmark harness producing success-rate/error tables from many
//!   seeded realizations.
//!
//! Everything draws through deterministic splittable [`prng::RngStream`]s, so
//! runs replay bit-exactly under a fixed master seed.

pub mod baselines;
pub mod consensus;
pub mod diagnostics;
pub mod dsmc;
pub mod format;
pub mod harness;
pub mod moments;
pub mod objectives;
pub mod ode;
pub mod prng;
pub mod report;
pub mod sampling;

pub use consensus::{ConsensusPoint, DiffusionKind, ParticleEnsemble};
pub use dsmc::{IterateState, OptimizerParams};
pub use harness::{BenchmarkResult, ExperimentSpec, OptimizerKind, RunRecord};
pub use moments::{ApproxSystemParams, MomentState};
pub use objectives::StochasticObjective;
pub use prng::RngStream;
pub use report::{PhaseTrace, RunReport, TraceOptions};
pub use sampling::{SampleBatch, SampleLaw, ScalarLaw};
