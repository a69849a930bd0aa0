use thiserror::Error;

pub type Result<T> = std::result::Result<T, CarpoolError>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CarpoolError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("instance too large: {what} is {actual}, limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("rider {rider} is not a member of the group")]
    RiderNotInGroup { rider: usize },
    #[error("group of {size} riders exceeds car capacity {capacity}")]
    GroupTooLarge { size: usize, capacity: usize },
    #[error("empty group")]
    EmptyGroup,
    #[error("operation requires homogeneous carpool disutility")]
    HeterogeneousGamma,
    #[error("operation requires a series-parallel network")]
    NotSeriesParallel,
    #[error("infeasible trip vector: {0}")]
    InfeasibleTrips(String),
    #[error("epsilon must satisfy 0 < epsilon < 1/(2|M|) = {bound}, got {epsilon}")]
    InvalidEpsilon { epsilon: String, bound: String },
    #[error("auction exceeded its iteration guard of {0}")]
    NonTermination(String),
    #[error("linear program is {0}")]
    LinearProgram(&'static str),
    #[error("negative utility {utility} for rider {rider}")]
    NegativeUtility { rider: String, utility: String },
    #[error("no market equilibrium: LP optimum {lp} exceeds integer optimum {ip}")]
    NoEquilibrium { lp: String, ip: String },
    #[error("unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String },
}
