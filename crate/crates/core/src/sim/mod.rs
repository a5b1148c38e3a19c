//! Deterministic HTLC simulator: channels, held payments, block expiry and
//! force-closes, plus a small scenario language and plan verification.

mod events;
mod network;
mod scenario;
mod verify;

pub use events::{write_event_log, Event};
pub use network::{
    ChannelState, FinalExpiry, HopRef, LiveHop, PaymentRequest, PaymentState, PendingHtlc, Side,
    SimChannel, SimChannelSpec, SimConfig, SimNetwork, SimPayment, SimPolicy, DEFAULT_LOCKTIME_MAX,
    DEFAULT_MAX_HOPS,
};
pub use scenario::{builtin_scenario, run_scenario, ScenarioError, ScenarioReport, StepOutcome, BUILTIN_SCENARIOS};
pub use verify::{execute_isolation, execute_plan, ChannelCheck, VerifyConfig, VerifyError, VerifyReport};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("route is empty")]
    EmptyRoute,
    #[error("route has {hops} hops, limit is {max}")]
    RouteTooLong { hops: usize, max: usize },
    #[error("channel {0} not found")]
    ChannelNotFound(String),
    #[error("channel {0} is closed")]
    ChannelClosed(String),
    #[error("no channel between {from} and {to}")]
    NoChannel { from: String, to: String },
    #[error("{node} is not an endpoint of channel {channel}")]
    NotAnEndpoint { channel: String, node: String },
    #[error("hop {hop} does not start where the previous hop ended")]
    BrokenPath { hop: usize },
    #[error("total lock of {total} blocks exceeds {max}")]
    LocktimeExceeded { total: u64, max: u32 },
    #[error("{amount_msat} msat on {channel} is below the minimum of {minimum_msat}")]
    AmountBelowMinimum { channel: String, amount_msat: u64, minimum_msat: u64 },
    #[error("{amount_msat} msat on {channel} is below the dust threshold of {dust_msat}")]
    BelowDust { channel: String, amount_msat: u64, dust_msat: u64 },
    #[error("channel {channel} already holds {limit} HTLCs")]
    SlotFull { channel: String, limit: u32 },
    #[error("channel {channel} needs {needed_msat} msat, has {available_msat}")]
    InsufficientBalance { channel: String, needed_msat: u64, available_msat: u64 },
    #[error("payment hash {0} already in flight")]
    DuplicateHash(String),
    #[error("channel id {0} already used")]
    DuplicateChannel(String),
    #[error("channel {0} has zero capacity")]
    ZeroCapacity(String),
    #[error("channel {0} joins a node to itself")]
    SelfChannel(String),
    #[error("channel {0} pushes more than its capacity")]
    PushExceedsCapacity(String),
    #[error("channel {0} has a zero slot limit")]
    ZeroSlots(String),
    #[error("unknown payment {0}")]
    UnknownPayment(u64),
    #[error("payment {0} already resolved")]
    AlreadyResolved(u64),
    #[error("payment {payment} lost hop on force-closed channel {channel}")]
    HopForceClosed { payment: u64, channel: String },
    #[error("must advance at least one block")]
    ZeroBlocks,
}

impl SimError {
    /// Variant name, as used by `error=` in scenarios.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::EmptyRoute => "EmptyRoute",
            SimError::RouteTooLong { .. } => "RouteTooLong",
            SimError::ChannelNotFound(_) => "ChannelNotFound",
            SimError::ChannelClosed(_) => "ChannelClosed",
            SimError::NoChannel { .. } => "NoChannel",
            SimError::NotAnEndpoint { .. } => "NotAnEndpoint",
            SimError::BrokenPath { .. } => "BrokenPath",
            SimError::LocktimeExceeded { .. } => "LocktimeExceeded",
            SimError::AmountBelowMinimum { .. } => "AmountBelowMinimum",
            SimError::BelowDust { .. } => "BelowDust",
            SimError::SlotFull { .. } => "SlotFull",
            SimError::InsufficientBalance { .. } => "InsufficientBalance",
            SimError::DuplicateHash(_) => "DuplicateHash",
            SimError::DuplicateChannel(_) => "DuplicateChannel",
            SimError::ZeroCapacity(_) => "ZeroCapacity",
            SimError::SelfChannel(_) => "SelfChannel",
            SimError::PushExceedsCapacity(_) => "PushExceedsCapacity",
            SimError::ZeroSlots(_) => "ZeroSlots",
            SimError::UnknownPayment(_) => "UnknownPayment",
            SimError::AlreadyResolved(_) => "AlreadyResolved",
            SimError::HopForceClosed { .. } => "HopForceClosed",
            SimError::ZeroBlocks => "ZeroBlocks",
        }
    }
}
