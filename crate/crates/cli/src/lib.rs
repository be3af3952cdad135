//! Pipeline commands behind the `onset` binary.

pub mod commands;
pub mod config;
pub mod layout;

pub use config::RunConfig;
pub use layout::Layout;
