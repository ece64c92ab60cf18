//! Command line: `ingest`, `serve`, `route`, `predict`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use super::api::{self, ApiError, API_VERSION};
use super::{ingest_inputs, Engine, EngineConfig, EngineError};
use crate::ingest::{save_store, serialize_road_geojson};

#[derive(Debug, Parser)]
#[command(name = "bikeroute", version, about = "Bike-share availability forecasts and walk/bike/walk routing")]
pub struct Cli {
    /// Engine config file (TOML).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse all inputs, save the snapshot store and annotated road network.
    Ingest,
    /// Serve the HTTP API.
    Serve {
        /// Overrides `listen` from the config.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Recommend a route and print the response document.
    Route {
        /// "lat,lon"
        #[arg(long, allow_hyphen_values = true)]
        origin: String,
        /// "lat,lon"
        #[arg(long, allow_hyphen_values = true)]
        destination: String,
        #[arg(long, default_value = "optimal")]
        scheme: String,
        /// "alpha,beta,gamma"; normalized to sum 1.
        #[arg(long, allow_hyphen_values = true)]
        weights: Option<String>,
        /// RFC 3339; defaults to the configured `now`.
        #[arg(long)]
        departure: Option<String>,
    },
    /// Forecast one station and print the response document.
    Predict {
        #[arg(long)]
        station: String,
        /// Buckets ahead; defaults to `horizon` from the config.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliFailure {
    pub exit_code: i32,
    pub message: String,
}

impl std::fmt::Display for CliFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<EngineError> for CliFailure {
    fn from(e: EngineError) -> Self {
        let exit_code = match e {
            EngineError::Config(_) => 2,
            _ => 3,
        };
        CliFailure { exit_code, message: e.to_string() }
    }
}

impl From<ApiError> for CliFailure {
    fn from(e: ApiError) -> Self {
        CliFailure { exit_code: 1, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> CliFailure {
    CliFailure { exit_code: 2, message: message.into() }
}

fn print(out: &mut dyn Write, doc: &Value) -> Result<(), CliFailure> {
    let text = serde_json::to_string_pretty(doc).expect("documents serialize");
    writeln!(out, "{text}").map_err(|e| CliFailure { exit_code: 3, message: e.to_string() })
}

/// "lat,lon" into a request point; range checks happen in request parsing.
fn latlon_arg(field: &str, raw: &str) -> Result<Value, CliFailure> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some([lat, lon]) => Ok(json!({ "lat": lat, "lon": lon })),
        _ => Err(usage(format!("{field}: expected \"lat,lon\", got {raw:?}"))),
    }
}

fn weights_arg(raw: &str) -> Result<Value, CliFailure> {
    let nums: Option<Vec<f64>> = raw.split(',').map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some([a, b, g]) => Ok(json!({ "alpha": a, "beta": b, "gamma": g })),
        _ => Err(usage(format!("weights: expected \"alpha,beta,gamma\", got {raw:?}"))),
    }
}

/// The request body `route` builds, so the CLI and `POST /route` share one
/// validation path.
pub fn route_request_body(
    origin: &str,
    destination: &str,
    scheme: &str,
    weights: Option<&str>,
    departure: Option<&str>,
) -> Result<Value, CliFailure> {
    let mut body = json!({
        "origin": latlon_arg("origin", origin)?,
        "destination": latlon_arg("destination", destination)?,
        "scheme": scheme,
    });
    if let Some(w) = weights {
        body["weights"] = weights_arg(w)?;
    }
    if let Some(d) = departure {
        body["departure_time"] = json!(d);
    }
    Ok(body)
}

fn ingest(config: &EngineConfig, out: &mut dyn Write) -> Result<(), CliFailure> {
    let store_path = config
        .snapshot_store
        .clone()
        .ok_or_else(|| usage("config: snapshot_store must be set for ingest"))?;
    let ingested = ingest_inputs(config)?;
    save_store(&ingested.store, &store_path)
        .map_err(|source| EngineError::Input { key: "snapshot_store", source })?;
    let mut outputs = json!({ "snapshot_store": store_path });
    if let Some(path) = &config.annotated_network {
        std::fs::write(path, serialize_road_geojson(&ingested.network)).map_err(EngineError::Io)?;
        outputs["annotated_network"] = json!(path);
    }
    print(
        out,
        &json!({
            "api_version": API_VERSION,
            "reports": ingested.reports,
            "stations": ingested.registry.len(),
            "stored_snapshots": ingested.store.iter().map(|s| s.filled()).sum::<usize>(),
            "crimes": ingested.crimes.len(),
            "road_nodes": ingested.network.node_count(),
            "road_edges": ingested.network.edge_count(),
            "outputs": outputs,
        }),
    )
}

/// Runs one parsed command line, writing documents to `out`.
pub fn run_cli(cli: Cli, out: &mut dyn Write) -> Result<(), CliFailure> {
    let path = cli.config.ok_or_else(|| usage("missing --config <FILE>"))?;
    let mut config = EngineConfig::from_file(&path)?;
    match cli.command {
        Command::Ingest => ingest(&config, out),
        Command::Serve { listen } => {
            if let Some(l) = listen {
                config.listen = l;
            }
            let rt = tokio::runtime::Runtime::new().map_err(EngineError::Io)?;
            rt.block_on(super::serve(config))?;
            Ok(())
        }
        Command::Route { origin, destination, scheme, weights, departure } => {
            let body = route_request_body(&origin, &destination, &scheme, weights.as_deref(), departure.as_deref())?;
            let engine = Engine::load(config)?;
            let request = api::parse_route_request(&body, engine.now())?;
            print(out, &api::route_doc(&engine, &request)?)
        }
        Command::Predict { station, horizon } => {
            let horizon = horizon.unwrap_or(config.horizon);
            let engine = Engine::load(config)?;
            print(out, &api::prediction_doc(&engine, &station, horizon)?)
        }
    }
}
