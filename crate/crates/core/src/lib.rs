//! Stock correlation networks from end-of-day price histories.
//!
//! The pipeline runs ingest -> returns -> correlation -> network, with an
//! optional transfer-forecasting experiment on top of the graph.
//!
//! ```
//! use stocknet::synthetic::{planted_sectors, SectorSpec};
//! use stocknet::{build_graph, build_panel, compute_returns, correlation_matrix};
//! use stocknet::{connected_components, CalendarPolicy, ReturnMode};
//!
//! let market = planted_sectors(&SectorSpec::default()).unwrap();
//! let panel = build_panel(&market.table, CalendarPolicy::Union).unwrap();
//! let returns = compute_returns(&panel, ReturnMode::Simple).unwrap();
//! let matrix = correlation_matrix(&returns, 100).unwrap();
//! let graph = build_graph(&matrix, 0.5).unwrap();
//! assert_eq!(connected_components(&graph).len(), 3);
//! ```

pub mod config;
pub mod correlation;
mod csvio;
pub mod error;
pub mod ingest;
pub mod network;
pub mod pipeline;
pub mod returns;
pub mod synthetic;
pub mod transfer;

pub use config::{ConfigFile, PipelineConfig};
pub use correlation::{correlation_matrix, pearson, top_pairs, CorrelationMatrix, Pearson};
pub use error::{Error, ErrorCode, Result};
pub use ingest::{
    build_panel, parse_eod, prune_universe, CalendarPolicy, ColumnSchema, EodRow,
    PriceHistoryTable, PricePanel,
};
pub use network::{
    build_graph, connected_components, degree_and_clustering, export_graph, hop_distance,
    maximal_cliques, neighborhood, CompanyGraph, ExportFormat, GraphSummary,
};
pub use returns::{compute_returns, ReturnMode, ReturnsPanel};
pub use transfer::{transfer_experiment, ErrorReport, TransferConfig, TransferRow};
