//! Background agents: analytical recomputation, search indexing and
//! thumbnail rendering.

mod analytical;
mod indexing;
mod thumbnail;

pub use analytical::{run_analytical, AgentRunRecord, AnalyticalAgentSpec, ProductSpec, RunOutcome, Scheduler};
pub use indexing::run_indexing_agent;
pub use thumbnail::{render_svg, ThumbnailAgent, ThumbnailRun};
