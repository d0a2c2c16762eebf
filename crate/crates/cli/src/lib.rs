//! Command-line front end and HTTP service over `artctx_core::pipeline`.

pub mod args;
pub mod commands;
pub mod service;
