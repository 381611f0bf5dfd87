//! The six-step transfer protocol: planning, canonical states, and three
//! execution modes (closed-form ideal maps, numeric integration, and the
//! exact inverse sequence).

pub mod exec;
pub mod ideal;
pub mod numeric;
pub mod plan;
pub mod states;

pub use exec::{ProtocolState, RunOutput, StepOutcome};
pub use ideal::{run_ideal, run_reverse};
pub use numeric::{run_numeric, DriveModel, NumericOptions};
pub use plan::{plan, ProtocolPlan, ProtocolStep, StepKind};
pub use states::{ideal_intermediates, initial_state, protocol_space, target_state};
