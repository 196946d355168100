//! Capacity region, achievable scheme and bit-level simulator for the
//! deterministic 4-node relay network in which node 4 both relays between
//! users 1..3 and exchanges its own private messages with them.
//!
//! Pipeline: [`region`] decides membership, [`reduction`] reserves levels
//! for the relay's own traffic, [`coding`] builds the simple ordering scheme
//! (after a detour when a 3-cycle is overloaded), [`simulate`] runs it bit by
//! bit, and [`oracle`] sweeps all of this exhaustively.

pub mod cli;
pub mod coding;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod region;
pub mod simulate;

pub use coding::{build_full_scheme, build_sos, plan_detour, DetourPlan, FullScheme, TransmissionScheme};
pub use model::{assign_roles, ChannelGains, Flow, Node, RateTuple, RoleAssignment, User, UserRates};
pub use reduction::{assign_relay_levels, reduce_network, LevelAssignment, ReducedGains};
pub use region::{check_cycle_conditions, check_theorem1, check_theorem2, RegionVerdict};
pub use simulate::{run_end_to_end, DecodeReport, MessageSet};
