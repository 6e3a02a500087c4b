use thiserror::Error;

use jrnra_core::env::EnvError;

use crate::mlp::MlpError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("training diverged: loss {loss:e} at episode {episode}")]
    Diverged { loss: f64, episode: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}
