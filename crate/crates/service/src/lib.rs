//! REST service and command-line driver over `gnnx-core`.
//!
//! [`api::Api`] turns typed requests into JSON response bodies; the HTTP
//! routes in [`http`] and the commands in [`cli`] are thin shells around it.

pub mod api;
pub mod cli;
pub mod http;
pub mod layout;
pub mod registry;
pub mod schemas;

pub use api::{Api, ApiError};
pub use registry::{ModelKind, Registry, RegistryError};
