pub mod api;
pub mod cli;
pub mod error;
pub mod plot;
pub mod session;
pub mod store;
