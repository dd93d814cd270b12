//! C ABI over the stocknet library.
//!
//! Every fallible function returns an [`SnStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`sn_last_error`] on the same thread until the next failing call.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned through `char **` out-pointers are owned by the caller
//! and released with [`sn_string_free`]; `const char *` results are borrowed
//! from their handle.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::NaiveDate;
use libc::size_t;

use stocknet::network::{connected_components, export_graph, hop_distance};
use stocknet::transfer::{transfer_experiment, TransferConfig, TransferRow};
use stocknet::{
    build_graph, build_panel, compute_returns, correlation_matrix, parse_eod, prune_universe, CalendarPolicy,
    ColumnSchema, CompanyGraph, CorrelationMatrix, Error, ErrorCode, ExportFormat, PriceHistoryTable,
    PricePanel, ReturnMode, ReturnsPanel,
};

/// Result codes. Values 2 through 6 and 70 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    Usage = 2,
    Parse = 3,
    Data = 4,
    UnknownTicker = 5,
    Io = 6,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 7,
    /// Rust code panicked; the handle arguments are left untouched.
    Panic = 8,
    Internal = 70,
}

impl From<ErrorCode> for SnStatus {
    fn from(code: ErrorCode) -> Self {
        match code {
            ErrorCode::Usage => SnStatus::Usage,
            ErrorCode::Parse => SnStatus::Parse,
            ErrorCode::Data => SnStatus::Data,
            ErrorCode::UnknownTicker => SnStatus::UnknownTicker,
            ErrorCode::Io => SnStatus::Io,
            ErrorCode::Internal => SnStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnCalendarPolicy {
    Union = 0,
    Intersection = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnReturnMode {
    Simple = 0,
    Diff = 1,
    Log = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnExportFormat {
    Gexf = 0,
    Graphml = 1,
    Dot = 2,
    EdgeCsv = 3,
}

/// Column names for CSV parsing. NULL fields take the defaults
/// (`ticker`, `date`, `close`, `%Y-%m-%d`).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SnSchema {
    pub ticker: *const c_char,
    pub date: *const c_char,
    pub close: *const c_char,
    pub date_format: *const c_char,
}

/// One transfer result. `target` is borrowed from the report handle.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SnTransferRow {
    pub target: *const c_char,
    pub rmse: f64,
    pub mae: f64,
    pub n_predictions: size_t,
    /// Graph hops from the source; -1 when unreachable.
    pub hop_distance: i64,
}

pub struct SnTable(PriceHistoryTable);
pub struct SnPanel(PricePanel);
pub struct SnReturns(ReturnsPanel);

pub struct SnMatrix {
    inner: CorrelationMatrix,
    names: Vec<CString>,
}

pub struct SnGraph {
    inner: CompanyGraph,
    names: Vec<CString>,
}

pub struct SnTransferReport {
    rows: Vec<TransferRow>,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.code().into(), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            SnStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(SnStatus::NullPointer, format!("{name} is NULL"))
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SnStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn text_list(p: *const *const c_char, n: size_t, name: &str) -> FfiResult<Vec<String>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null(name));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .map(|&s| text(s, name).map(str::to_owned))
        .collect()
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn c_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<CString> {
    names.map(|s| CString::new(s).unwrap_or_default()).collect()
}

fn date(s: &str, name: &str) -> FfiResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| Failure(SnStatus::Usage, format!("{name}: expected YYYY-MM-DD, got '{s}' ({e})")))
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from a stocknet function returning `char *` ownership, and
/// must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// tables

/// Parses EoD CSV bytes into a table. `schema` may be NULL.
///
/// # Safety
/// `data` must point to `len` readable bytes; `schema`, if not NULL, must
/// point to a valid `SnSchema` whose non-NULL fields are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sn_table_parse_csv(
    data: *const u8,
    len: size_t,
    schema: *const SnSchema,
    out: *mut *mut SnTable,
) -> SnStatus {
    guard(|| {
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let mut s = ColumnSchema::default();
        if let Some(custom) = schema.as_ref() {
            for (field, value) in [
                (&mut s.ticker, custom.ticker),
                (&mut s.date, custom.date),
                (&mut s.close, custom.close),
                (&mut s.date_format, custom.date_format),
            ] {
                if !value.is_null() {
                    *field = text(value, "schema field")?.to_owned();
                }
            }
        }
        emit(out, SnTable(parse_eod(bytes, &s)?))
    })
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_table_ticker_count(table: *const SnTable, out: *mut size_t) -> SnStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        *out.as_mut().ok_or_else(|| null("out"))? = t.0.len();
        Ok(())
    })
}

/// Keeps tickers listed over the whole window and not excluded. Dates are
/// `YYYY-MM-DD`.
///
/// # Safety
/// `table` must be a live handle; `exclude` must hold `n_exclude` valid C
/// strings (or be NULL when `n_exclude` is 0).
#[no_mangle]
pub unsafe extern "C" fn sn_table_prune(
    table: *const SnTable,
    window_start: *const c_char,
    window_end: *const c_char,
    exclude: *const *const c_char,
    n_exclude: size_t,
    out: *mut *mut SnTable,
) -> SnStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        let start = date(text(window_start, "window_start")?, "window_start")?;
        let end = date(text(window_end, "window_end")?, "window_end")?;
        let exclude = text_list(exclude, n_exclude, "exclude")?;
        emit(out, SnTable(prune_universe(&t.0, start, end, &exclude)?))
    })
}

/// # Safety
/// `table` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_table_free(table: *mut SnTable) {
    free_handle(table)
}

// ---------------------------------------------------------------------------
// panels and returns

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_panel_build(
    table: *const SnTable,
    policy: SnCalendarPolicy,
    out: *mut *mut SnPanel,
) -> SnStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        let policy = match policy {
            SnCalendarPolicy::Union => CalendarPolicy::Union,
            SnCalendarPolicy::Intersection => CalendarPolicy::Intersection,
        };
        emit(out, SnPanel(build_panel(&t.0, policy)?))
    })
}

/// Dates, tickers and missing cells of a panel. Any out-pointer may be NULL.
///
/// # Safety
/// `panel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_panel_shape(
    panel: *const SnPanel,
    dates: *mut size_t,
    tickers: *mut size_t,
    missing: *mut size_t,
) -> SnStatus {
    guard(|| {
        let p = &borrow(panel, "panel")?.0;
        for (slot, v) in [(dates, p.calendar().len()), (tickers, p.tickers().len()), (missing, p.missing_count())] {
            if let Some(slot) = slot.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `panel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_panel_free(panel: *mut SnPanel) {
    free_handle(panel)
}

/// # Safety
/// `panel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_returns_compute(
    panel: *const SnPanel,
    mode: SnReturnMode,
    out: *mut *mut SnReturns,
) -> SnStatus {
    guard(|| {
        let p = borrow(panel, "panel")?;
        let mode = match mode {
            SnReturnMode::Simple => ReturnMode::Simple,
            SnReturnMode::Diff => ReturnMode::Diff,
            SnReturnMode::Log => ReturnMode::Log,
        };
        emit(out, SnReturns(compute_returns(&p.0, mode)?))
    })
}

/// # Safety
/// `returns` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_returns_free(returns: *mut SnReturns) {
    free_handle(returns)
}

// ---------------------------------------------------------------------------
// correlation

/// # Safety
/// `returns` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_matrix_compute(
    returns: *const SnReturns,
    min_overlap: size_t,
    out: *mut *mut SnMatrix,
) -> SnStatus {
    guard(|| {
        let r = borrow(returns, "returns")?;
        let inner = correlation_matrix(&r.0, min_overlap)?;
        let names = c_names(inner.tickers().iter().map(String::as_str));
        emit(out, SnMatrix { inner, names })
    })
}

/// Number of tickers (rows and columns).
///
/// # Safety
/// `matrix` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sn_matrix_size(matrix: *const SnMatrix) -> size_t {
    matrix.as_ref().map_or(0, |m| m.inner.len())
}

/// Ticker of row `i`, borrowed from the handle; NULL when out of range.
///
/// # Safety
/// `matrix` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sn_matrix_ticker(matrix: *const SnMatrix, i: size_t) -> *const c_char {
    matrix
        .as_ref()
        .and_then(|m| m.names.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Coefficient at `(i, j)`. `*defined` is 0 when the coefficient is absent,
/// in which case `*rho` is NaN.
///
/// # Safety
/// `matrix` must be a live handle; `rho` and `defined` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_matrix_get(
    matrix: *const SnMatrix,
    i: size_t,
    j: size_t,
    rho: *mut f64,
    defined: *mut bool,
) -> SnStatus {
    guard(|| {
        let m = &borrow(matrix, "matrix")?.inner;
        if i >= m.len() || j >= m.len() {
            return Err(Failure(SnStatus::Usage, format!("index ({i}, {j}) outside {0}x{0}", m.len())));
        }
        let v = m.rho(i, j);
        *rho.as_mut().ok_or_else(|| null("rho"))? = v.unwrap_or(f64::NAN);
        *defined.as_mut().ok_or_else(|| null("defined"))? = v.is_some();
        Ok(())
    })
}

/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_matrix_free(matrix: *mut SnMatrix) {
    free_handle(matrix)
}

// ---------------------------------------------------------------------------
// graphs

/// Thresholded graph: edge iff rho > `threshold`.
///
/// # Safety
/// `matrix` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_graph_build(
    matrix: *const SnMatrix,
    threshold: f64,
    out: *mut *mut SnGraph,
) -> SnStatus {
    guard(|| {
        let m = borrow(matrix, "matrix")?;
        let inner = build_graph(&m.inner, threshold)?;
        let names = c_names(inner.nodes().iter().map(String::as_str));
        emit(out, SnGraph { inner, names })
    })
}

/// # Safety
/// `graph` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sn_graph_node_count(graph: *const SnGraph) -> size_t {
    graph.as_ref().map_or(0, |g| g.inner.node_count())
}

/// # Safety
/// `graph` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sn_graph_edge_count(graph: *const SnGraph) -> size_t {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// # Safety
/// `graph` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sn_graph_component_count(graph: *const SnGraph) -> size_t {
    graph.as_ref().map_or(0, |g| connected_components(&g.inner).len())
}

/// Node `i` in lexicographic order, borrowed from the handle; NULL when out
/// of range.
///
/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sn_graph_node(graph: *const SnGraph, i: size_t) -> *const c_char {
    graph
        .as_ref()
        .and_then(|g| g.names.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Shortest-path hops between two tickers; -1 when either is absent or they
/// are disconnected.
///
/// # Safety
/// `graph` must be a live handle; `a`, `b` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_graph_hops(
    graph: *const SnGraph,
    a: *const c_char,
    b: *const c_char,
    out: *mut i64,
) -> SnStatus {
    guard(|| {
        let g = borrow(graph, "graph")?;
        let hops = hop_distance(&g.inner, text(a, "a")?, text(b, "b")?);
        *out.as_mut().ok_or_else(|| null("out"))? = hops.map_or(-1, |h| h as i64);
        Ok(())
    })
}

/// Serializes the graph; the caller frees `*out` with [`sn_string_free`].
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_graph_export(
    graph: *const SnGraph,
    format: SnExportFormat,
    out: *mut *mut c_char,
) -> SnStatus {
    guard(|| {
        let g = borrow(graph, "graph")?;
        let format = match format {
            SnExportFormat::Gexf => ExportFormat::Gexf,
            SnExportFormat::Graphml => ExportFormat::Graphml,
            SnExportFormat::Dot => ExportFormat::Dot,
            SnExportFormat::EdgeCsv => ExportFormat::EdgeCsv,
        };
        let mut buf = Vec::new();
        export_graph(&g.inner, format, &mut buf)?;
        let s = CString::new(buf).map_err(|_| Failure(SnStatus::Internal, "export contains NUL".into()))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_graph_free(graph: *mut SnGraph) {
    free_handle(graph)
}

// ---------------------------------------------------------------------------
// transfer

/// Fits the autoregressive baseline on `source` and evaluates it on each
/// target. Rows are ordered by rmse.
///
/// # Safety
/// `returns` and `graph` must be live handles; `source` NUL-terminated;
/// `targets` must hold `n_targets` valid C strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_transfer_run(
    returns: *const SnReturns,
    graph: *const SnGraph,
    source: *const c_char,
    targets: *const *const c_char,
    n_targets: size_t,
    window: size_t,
    split: f64,
    out: *mut *mut SnTransferReport,
) -> SnStatus {
    guard(|| {
        let r = borrow(returns, "returns")?;
        let g = borrow(graph, "graph")?;
        let source = text(source, "source")?;
        let targets = text_list(targets, n_targets, "targets")?;
        let rows = transfer_experiment(&r.0, &g.inner, source, &targets, &TransferConfig { window, split })?;
        let names = c_names(rows.iter().map(|r| r.report.target.as_str()));
        emit(out, SnTransferReport { rows, names })
    })
}

/// # Safety
/// `report` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sn_transfer_len(report: *const SnTransferReport) -> size_t {
    report.as_ref().map_or(0, |r| r.rows.len())
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_transfer_row(
    report: *const SnTransferReport,
    i: size_t,
    out: *mut SnTransferRow,
) -> SnStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let row = r
            .rows
            .get(i)
            .ok_or_else(|| Failure(SnStatus::Usage, format!("row {i} outside {}", r.rows.len())))?;
        *out.as_mut().ok_or_else(|| null("out"))? = SnTransferRow {
            target: r.names[i].as_ptr(),
            rmse: row.report.rmse,
            mae: row.report.mae,
            n_predictions: row.report.n_predictions,
            hop_distance: row.hop_distance.map_or(-1, |h| h as i64),
        };
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_transfer_free(report: *mut SnTransferReport) {
    free_handle(report)
}
