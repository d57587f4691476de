//! Suspension flows over discrete systems, singular time changes, and the
//! machinery to probe their entropy and expansiveness numerically.

pub mod discrete;
pub mod entropy;
pub mod error;
pub mod expansive;
pub mod measure;
pub mod scenario;
pub mod suspension;
pub mod symbolic;
pub mod torus;

pub use discrete::{BasePoint, DiscreteSystem, SymbolSeq};
pub use entropy::{CountCell, EntropyEstimate, SlopeFit};
pub use error::{Error, Result};
pub use expansive::{FlowFalsifierOutcome, MapFalsifierOutcome, ReparamGrid, SingCheck, Tracking};
pub use measure::{GammaExpectation, MeasureSampler, SamplerKind};
pub use scenario::{bundled_suite, run_scenario, Analysis, Report, Scenario, Verdict};
pub use suspension::{ASingSample, Brake, ClockValue, Profile, SingularSet, SingularSuspension};
pub use symbolic::{Certificate, Subshift};
pub use torus::{FiberPoint, MappingTorus};
