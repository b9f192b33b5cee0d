//! Round-by-round tracing controlled by the `BACKUP2C_LOG` env variable.
//!
//! Levels: `off` (default), `info`, `debug`.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Off = 0,
    Info = 1,
    Debug = 2,
}

static LEVEL: OnceLock<Level> = OnceLock::new();

pub fn level() -> Level {
    *LEVEL.get_or_init(|| match std::env::var("BACKUP2C_LOG").as_deref() {
        Ok("info") => Level::Info,
        Ok("debug") => Level::Debug,
        _ => Level::Off,
    })
}

pub fn enabled(at: Level) -> bool {
    level() >= at
}

macro_rules! trace_info {
    ($($arg:tt)*) => {
        if $crate::diag::enabled($crate::diag::Level::Info) {
            eprintln!("[b2c info] {}", format!($($arg)*));
        }
    };
}

macro_rules! trace_debug {
    ($($arg:tt)*) => {
        if $crate::diag::enabled($crate::diag::Level::Debug) {
            eprintln!("[b2c debug] {}", format!($($arg)*));
        }
    };
}

pub(crate) use trace_debug;
pub(crate) use trace_info;
