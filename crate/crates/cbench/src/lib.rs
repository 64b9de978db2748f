//! Session-oriented HTTP service and batch command line over
//! [`cbench_core`].

pub mod api;
pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod jobs;
pub mod pipeline;
pub mod session;
