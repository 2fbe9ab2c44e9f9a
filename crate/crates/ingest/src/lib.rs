//! Gridded-data ingestion.
