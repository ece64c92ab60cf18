pub mod geo;
pub mod ingest;
pub mod model;
pub mod predict;
pub mod routing;
pub mod service;
pub mod spatial;
