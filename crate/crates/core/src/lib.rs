//! System model, MDP environment and brute-force oracle for joint radio and
//! NFV-core resource allocation with an energy-efficiency objective.

pub mod config;
pub mod env;
pub mod nfv;
pub mod objective;
pub mod oracle;
pub mod radio;
pub mod scenarios;

pub use config::NetworkConfig;
