//! Learning agents for the joint radio and NFV-core allocation environment:
//! a small MLP toolkit, soft actor-critic, DDPG, MA-DDPG, the two-stage
//! disjoint baseline and a uniform random policy, all behind one [`Trainer`]
//! registry.

pub mod adam;
pub mod checkpoint;
pub mod critic;
pub mod ddpg;
pub mod disjoint;
mod error;
pub mod maddpg;
pub mod mlp;
pub mod policy;
pub mod random;
pub mod replay;
pub mod sac;
pub mod trainer;

pub use error::AgentError;
pub use trainer::{CurveRow, Registry, TrainReport, TrainSettings, Trainer};
