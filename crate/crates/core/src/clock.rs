//! Time source. Runs driven by the scripted backend use [`LogicalClock`] so
//! timestamps, and therefore traces and event logs, are reproducible.

use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Starts at 2024-01-01T00:00:00Z and advances one second per reading.
#[derive(Debug)]
pub struct LogicalClock {
    next: AtomicI64,
}

pub const LOGICAL_EPOCH: i64 = 1_704_067_200;

impl LogicalClock {
    pub fn new() -> Self {
        Self::starting_at(LOGICAL_EPOCH)
    }

    pub fn starting_at(unix_secs: i64) -> Self {
        Self { next: AtomicI64::new(unix_secs) }
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for LogicalClock {
    fn now(&self) -> DateTime<Utc> {
        let secs = self.next.fetch_add(1, Ordering::SeqCst);
        Utc.timestamp_opt(secs, 0).single().expect("in range")
    }
}
