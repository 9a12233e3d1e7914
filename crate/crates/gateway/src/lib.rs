//! Command-line tool and HTTP service around `nutrifilter-core`.

pub mod app;
pub mod cli;
pub mod config;
pub mod http;
