//! Serve the HTTP API over the demo data.
//!
//! ```text
//! cargo run --example http_server
//! curl localhost:8080/stations
//! curl 'localhost:8080/stations/102/prediction?horizon=6'
//! curl -X POST localhost:8080/route -d '{"origin":{"lat":40.7297,"lon":-74.0004},
//!      "destination":{"lat":40.7383,"lon":-73.9893},"scheme":"optimal"}'
//! ```

use std::path::PathBuf;

use bikeroute::service::{serve, EngineConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt().init();
    let mut config = EngineConfig::from_file(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/engine.toml"))?;
    if let Some(listen) = std::env::args().nth(1) {
        config.listen = listen;
    }
    serve(config).await?;
    Ok(())
}
