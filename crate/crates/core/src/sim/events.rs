use std::io::Write;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ChannelOpened {
        channel: String,
        a: String,
        b: String,
        capacity_sat: u64,
        slot_limit: u32,
        height: u32,
    },
    PaymentAdded {
        payment: u64,
        label: Option<String>,
        channels: Vec<String>,
        amount_msat: u64,
        first_expiry: u32,
        height: u32,
    },
    PaymentRejected {
        label: Option<String>,
        error: String,
        height: u32,
    },
    PaymentFulfilled {
        payment: u64,
        height: u32,
    },
    PaymentFailed {
        payment: u64,
        height: u32,
    },
    BlocksMined {
        count: u32,
        height: u32,
    },
    ForceClosed {
        channel: String,
        expired_payment: u64,
        expiry_height: u32,
        height: u32,
    },
    Check {
        line: usize,
        command: String,
        passed: bool,
        detail: String,
    },
}

/// One JSON object per line.
pub fn write_event_log<W: Write>(events: &[Event], mut out: W) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
