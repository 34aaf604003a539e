//! Input-selection chains, the execution automaton, their composition and
//! exact evaluation of `P=? [ F "error" ]`.

pub mod analysis;
pub mod automaton;
pub mod chain;
pub mod compose;
pub mod export;
pub mod input;

pub use analysis::{analyze, brute_force_probability, probability_of_error, AnalysisOptions, AnalysisResult, Engine};
pub use automaton::{ClosedFormEngine, FaAction, FaState, LayerEngine, Outcome, SimulatorEngine, TpuFaAutomaton, ERROR_LABEL};
pub use chain::{Dtmc, Probability, Transition};
pub use compose::{compose_model, ComposedModel, ModelStatistics};
pub use export::{export_model, write_model, ExportedModel, ERROR_PROPERTY};
pub use input::{build_is_dtmc, InputDistribution};
