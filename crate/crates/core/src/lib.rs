//! Budget-constrained Katz-centrality network formation game.
//!
//! Agents allocate a bounded resource to out-neighbours permitted by a fixed
//! underlying topology; the resulting weighted digraph determines every
//! agent's Katz centrality (discount fixed at 1, budgets below 1), which is
//! the agent's utility.
//!
//! Modules, bottom-up:
//!
//! - [`instance`]: topologies, budgets, allocation profiles, feasibility,
//!   random generation and the JSON document formats.
//! - [`centrality`]: Katz centralities by dense solve and by truncated
//!   series, plus the per-agent walk decomposition behind best responses.
//! - [`game`]: the v-map, its fixed point (the unique equilibrium
//!   centralities), exact best responses and Nash certification.
//! - [`dynamics`]: sequential best-response dynamics and the finite-time
//!   modified variant, with traces.
//! - [`analysis`]: structural checks of equilibrium networks (condensation,
//!   hierarchy, SCC uniformity, cycle parity, complete-topology closed form).

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod centrality;
pub mod dynamics;
mod error;
pub mod game;
pub mod instance;
pub mod linalg;

pub use error::{Error, Result};
pub use instance::{AllocationProfile, GameInstance, UnderlyingTopology};

/// Default convergence / certification tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
