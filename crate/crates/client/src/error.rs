use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("server rejected request (HTTP {status}): {message}")]
    Request { status: u16, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server returned no vectors for {} key(s): {}", missing.len(), missing.join(", "))]
    PartialFailure { missing: Vec<String> },

    #[error("fetch failed after {succeeded} of {total} batch(es) succeeded: {source}")]
    Populate {
        succeeded: usize,
        total: usize,
        #[source]
        source: Box<ClientError>,
    },

    #[error(transparent)]
    Store(#[from] vwsd_core::Error),
}

impl ClientError {
    /// True for network-level failures (unreachable server, timeouts,
    /// exhausted retries), as opposed to data or protocol problems.
    pub fn is_transport(&self) -> bool {
        match self {
            ClientError::Transport { .. } => true,
            ClientError::Populate { source, .. } => source.is_transport(),
            _ => false,
        }
    }
}
