//! Engine lifecycle, JSON documents, HTTP server and command line.

use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::IngestError;

mod api;
mod cli;
mod config;
mod engine;
mod http;

pub use api::{
    history_doc, parse_route_request, prediction_doc, route_doc, stations_doc, ApiError, RouteRequest, API_VERSION,
};
pub use cli::{route_request_body, run_cli, Cli, CliFailure, Command};
pub use config::EngineConfig;
pub use engine::{ingest_inputs, Engine, Ingested, LoadReports};
pub use http::{router, serve, spawn_poller, SharedEngine};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{key}: file not found: {}", path.display())]
    MissingInput { key: &'static str, path: PathBuf },
    #[error("{key}: {source}")]
    Input {
        key: &'static str,
        #[source]
        source: IngestError,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
