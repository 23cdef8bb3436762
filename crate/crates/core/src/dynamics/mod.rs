//! Trajectory simulation: a direct Markov simulator and the monotone grand
//! coupling driven by corner-flip clocks, with optional censoring.

mod censoring;
mod clock;
mod coalescence;
mod ensemble;
mod markov;

pub use censoring::{BlockedSet, CensoringScheme};
pub use clock::{center_count, level_bounds, ClockMode, Ring};
pub use coalescence::{default_max_time, run_coalescence, CoalescenceMode, CoalescenceRecord};
pub use ensemble::{CoupledEnsemble, EventRecord, Member, RingOutcome, MAX_MEMBERS};
pub use markov::{step_markov, MarkovPath};
