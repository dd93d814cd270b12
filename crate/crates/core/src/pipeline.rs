//! Subcommand drivers. Each stage reads the previous stage's CSV artifacts
//! from the output directory, so running the stages one by one gives the same
//! files as [`run_pipeline`] and the same values as [`analyze`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::correlation::{correlation_matrix, top_pairs, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::ingest::{
    self, build_panel, exclude_symbols, prune_universe, PriceHistoryTable, PricePanel,
    TableBuilder,
};
use crate::network::{
    build_graph, connected_components, degree_and_clustering, export_graph, maximal_cliques,
    CompanyGraph, GraphSummary,
};
use crate::returns::{compute_returns, ReturnsPanel};
use crate::transfer::{transfer_experiment, write_transfer_csv, TransferRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Written next to the panel by the ingest stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestManifest {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub rows_parsed: usize,
    pub tickers_parsed: usize,
    pub tickers: usize,
    pub calendar_length: usize,
    pub missing_values: usize,
    pub calendar_policy: String,
    pub window_start: Option<String>,
    pub window_end: Option<String>,
    pub exclude_symbols: Vec<String>,
    pub date_format: String,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path, stage: &str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(
                e.kind(),
                format!("{e}; run the {stage} stage first or fix the path"),
            ),
        )
    })
}

/// Reads and parses every configured input, returning the raw table and
/// per-file digests.
pub fn load_inputs(cfg: &PipelineConfig) -> Result<(PriceHistoryTable, Vec<InputDigest>)> {
    cfg.validate_paths()?;
    let files: Vec<PathBuf> = ingest::expand_inputs(&cfg.inputs)?;
    let mut builder = TableBuilder::default();
    let mut digests = Vec::with_capacity(files.len());
    for file in &files {
        let bytes = fs::read(file).map_err(|e| Error::io(file, e))?;
        digests.push(InputDigest {
            path: file.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        ingest::add_file_bytes(&mut builder, file, &bytes, &cfg.schema)?;
    }
    let table = builder.finish()?;
    if table.is_empty() {
        return Err(Error::EmptyResult("inputs contain no data rows".into()));
    }
    Ok((table, digests))
}

/// Applies the configured window and exclusions.
pub fn select_universe(table: &PriceHistoryTable, cfg: &PipelineConfig) -> Result<PriceHistoryTable> {
    match cfg.window {
        Some((start, end)) => prune_universe(table, start, end, &cfg.exclude_symbols),
        None => exclude_symbols(table, &cfg.exclude_symbols),
    }
}

/// Everything the library pipeline computes from a price table.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub universe: PriceHistoryTable,
    pub panel: PricePanel,
    pub returns: ReturnsPanel,
    pub matrix: CorrelationMatrix,
    pub graph: CompanyGraph,
}

/// In-process pipeline: universe selection, panel, returns, correlation and
/// graph.
pub fn analyze(table: &PriceHistoryTable, cfg: &PipelineConfig) -> Result<Analysis> {
    let universe = select_universe(table, cfg)?;
    let panel = build_panel(&universe, cfg.calendar_policy)?;
    let returns = compute_returns(&panel, cfg.returns_mode)?;
    let matrix = correlation_matrix(&returns, cfg.min_overlap)?;
    let mut graph = build_graph(&matrix, cfg.threshold)?;
    if let Some(path) = &cfg.attributes {
        let bytes = read_file(path, "attributes")?;
        graph.join_attributes(bytes.as_slice(), Some(&path.display().to_string()))?;
    }
    Ok(Analysis {
        universe,
        panel,
        returns,
        matrix,
        graph,
    })
}

pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestManifest> {
    let (table, inputs) = load_inputs(cfg)?;
    let universe = select_universe(&table, cfg)?;
    let panel = build_panel(&universe, cfg.calendar_policy)?;
    info!(
        "ingest: {} rows, {} tickers parsed; {} tickers over {} dates kept",
        table.row_count(),
        table.len(),
        panel.tickers().len(),
        panel.calendar().len()
    );
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    write_file(&cfg.panel_path(), &buf)?;
    let manifest = IngestManifest {
        tool: "stocknet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs,
        rows_parsed: table.row_count(),
        tickers_parsed: table.len(),
        tickers: panel.tickers().len(),
        calendar_length: panel.calendar().len(),
        missing_values: panel.missing_count(),
        calendar_policy: cfg.calendar_policy.to_string(),
        window_start: cfg.window.map(|w| w.0.to_string()),
        window_end: cfg.window.map(|w| w.1.to_string()),
        exclude_symbols: cfg.exclude_symbols.clone(),
        date_format: cfg.schema.date_format.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Internal(format!("manifest: {e}")))?;
    json.push(b'\n');
    write_file(&cfg.manifest_path(), &json)?;
    Ok(manifest)
}

pub fn load_panel(cfg: &PipelineConfig) -> Result<PricePanel> {
    let path = cfg.panel_path();
    let bytes = read_file(&path, "ingest")?;
    PricePanel::read_csv(bytes.as_slice(), Some(&path.display().to_string()))
}

/// Correlates the persisted panel and writes the matrix and pair files.
pub fn run_correlate(cfg: &PipelineConfig) -> Result<CorrelationMatrix> {
    let panel = load_panel(cfg)?;
    let returns = compute_returns(&panel, cfg.returns_mode)?;
    if let Some(path) = &cfg.returns_out {
        let mut buf = Vec::new();
        returns.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    if cfg.min_overlap > returns.calendar().len() {
        warn!(
            "min-overlap {} exceeds the {} return rows; every off-diagonal coefficient will be absent",
            cfg.min_overlap,
            returns.calendar().len()
        );
    }
    let matrix = correlation_matrix(&returns, cfg.min_overlap)?;
    info!(
        "correlate: {} tickers, {} defined pairs",
        matrix.len(),
        matrix.defined_pairs()
    );
    if let Some(best) = top_pairs(&matrix, 1).first() {
        info!("correlate: strongest pair {}-{} rho {:.4}", best.a, best.b, best.rho);
    }
    let mut buf = Vec::new();
    matrix.write_matrix_csv(&mut buf)?;
    write_file(&cfg.matrix_path(), &buf)?;
    let mut buf = Vec::new();
    matrix.write_pairs_csv(&mut buf)?;
    write_file(&cfg.pairs_path(), &buf)?;
    Ok(matrix)
}

pub fn load_matrix(cfg: &PipelineConfig) -> Result<CorrelationMatrix> {
    let matrix_path = cfg.matrix_path();
    let matrix = read_file(&matrix_path, "correlate")?;
    let pairs = read_file(&cfg.pairs_path(), "correlate")?;
    CorrelationMatrix::read_csv(
        matrix.as_slice(),
        pairs.as_slice(),
        cfg.min_overlap,
        Some(&matrix_path.display().to_string()),
    )
}

pub fn load_graph(cfg: &PipelineConfig) -> Result<CompanyGraph> {
    let matrix = load_matrix(cfg)?;
    let mut graph = build_graph(&matrix, cfg.threshold)?;
    if let Some(path) = &cfg.attributes {
        let bytes = read_file(path, "attributes")?;
        let applied = graph.join_attributes(bytes.as_slice(), Some(&path.display().to_string()))?;
        info!("graph: applied {applied} attribute rows");
    }
    Ok(graph)
}

#[derive(Debug, Clone)]
pub struct GraphReport {
    pub graph: CompanyGraph,
    pub summary: GraphSummary,
    pub cliques: Vec<Vec<String>>,
    pub text: String,
}

/// Structure report for a graph: summary statistics and maximal cliques.
pub fn graph_report(graph: CompanyGraph, cfg: &PipelineConfig) -> Result<GraphReport> {
    let summary = degree_and_clustering(&graph);
    let cliques = maximal_cliques(&graph, cfg.min_clique_size, cfg.clique_cap)?;
    let text = render_summary(&graph, &summary, &cliques, cfg.min_clique_size);
    Ok(GraphReport {
        graph,
        summary,
        cliques,
        text,
    })
}

pub fn run_graph(cfg: &PipelineConfig) -> Result<GraphReport> {
    let graph = load_graph(cfg)?;
    let report = graph_report(graph, cfg)?;
    let mut buf = Vec::new();
    export_graph(&report.graph, cfg.format, &mut buf)?;
    write_file(&cfg.graph_path(), &buf)?;
    write_file(&cfg.summary_path(), report.text.as_bytes())?;
    info!(
        "graph: {} nodes, {} edges, {} components",
        report.summary.node_count, report.summary.edge_count, report.summary.component_count
    );
    Ok(report)
}

pub fn render_summary(
    graph: &CompanyGraph,
    summary: &GraphSummary,
    cliques: &[Vec<String>],
    min_clique_size: usize,
) -> String {
    const LISTED: usize = 10;
    let mut s = String::new();
    let _ = writeln!(s, "threshold: rho > {}", graph.threshold());
    let _ = writeln!(s, "nodes: {}", summary.node_count);
    let _ = writeln!(s, "edges: {}", summary.edge_count);
    let sizes: Vec<String> = summary.component_sizes.iter().map(usize::to_string).collect();
    let _ = writeln!(
        s,
        "components: {} (sizes: {})",
        summary.component_count,
        sizes.join(", ")
    );
    let _ = writeln!(s, "triangles: {}", summary.triangles);
    let _ = writeln!(s, "clustering coefficient: {:.6}", summary.clustering_coefficient);
    s.push_str("degree histogram:\n");
    for (degree, count) in &summary.degree_histogram {
        let _ = writeln!(s, "  {degree}: {count}");
    }
    let mut by_degree: Vec<(usize, &str)> = (0..graph.node_count())
        .map(|i| (graph.degree(i), graph.nodes()[i].as_str()))
        .collect();
    by_degree.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    s.push_str("top degree:\n");
    for (degree, name) in by_degree.iter().take(LISTED) {
        let _ = writeln!(s, "  {name} {degree}");
    }
    let _ = writeln!(
        s,
        "maximal cliques (size >= {min_clique_size}): {}",
        cliques.len()
    );
    for clique in cliques.iter().take(LISTED) {
        let _ = writeln!(s, "  [{}] {}", clique.len(), clique.join(", "));
    }
    let components = connected_components(graph);
    s.push_str("component members:\n");
    for c in components.iter().take(LISTED) {
        let _ = writeln!(s, "  [{}] {}", c.len(), c.join(", "));
    }
    s
}

pub fn run_transfer(cfg: &PipelineConfig) -> Result<Vec<TransferRow>> {
    let source = cfg
        .source
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("transfer needs a source ticker".into()))?;
    if cfg.targets.is_empty() {
        return Err(Error::InvalidArgument("transfer needs at least one target".into()));
    }
    let panel = load_panel(cfg)?;
    let returns = compute_returns(&panel, cfg.returns_mode)?;
    let graph = load_graph(cfg)?;
    let rows = transfer_experiment(&returns, &graph, source, &cfg.targets, &cfg.transfer)?;
    let mut buf = Vec::new();
    write_transfer_csv(&rows, &mut buf)?;
    write_file(&cfg.transfer_path(), &buf)?;
    for row in &rows {
        info!(
            "transfer {} -> {}: rmse {:.4e} mae {:.4e}",
            source, row.report.target, row.report.rmse, row.report.mae
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: IngestManifest,
    pub matrix: CorrelationMatrix,
    pub graph: GraphReport,
    pub transfer: Option<Vec<TransferRow>>,
}

/// All stages in order; transfer runs only when a source is configured.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let manifest = run_ingest(cfg)?;
    let matrix = run_correlate(cfg)?;
    let graph = run_graph(cfg)?;
    let transfer = match cfg.source {
        Some(_) => Some(run_transfer(cfg)?),
        None => None,
    };
    Ok(PipelineOutcome {
        manifest,
        matrix,
        graph,
        transfer,
    })
}
