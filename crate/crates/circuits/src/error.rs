use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit parameters: {0}")]
    Parameter(String),
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("no gate time for `{0}`")]
    MissingGateTime(String),
    #[error("gate `{0}` is not available in the {1} gate set")]
    NotNative(String, String),
    #[error("gate {gate} acts on non-adjacent qubits")]
    NotAdjacent { gate: String },
    #[error("cannot simulate: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, CircuitError>;
