//! Command-line front end and HTTP service for the `onoma` toolkit.

pub mod cli;
pub mod config;
pub mod mock;
pub mod server;
pub mod services;

pub use cli::run;
pub use config::AppConfig;
pub use services::Services;
