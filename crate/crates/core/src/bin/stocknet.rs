use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use stocknet::config::{ConfigFile, DateValue, PipelineConfig};
use stocknet::correlation::{format_rho, top_pairs};
use stocknet::error::{Error, Result};
use stocknet::pipeline;
use stocknet::synthetic::{planted_factor, planted_sectors, FactorSpec, SectorSpec};
use stocknet::transfer::TransferRow;
use stocknet::{CalendarPolicy, ExportFormat, ReturnMode};

#[derive(Parser, Debug)]
#[command(name = "stocknet", version, about = "Correlation networks from end-of-day stock prices")]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Directory for stage artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// -v for progress, -vv for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse price files and write the aligned panel.
    Ingest(Overrides),
    /// Compute returns and the correlation matrix from the panel.
    Correlate(Overrides),
    /// Threshold the matrix into a graph, export it and summarize structure.
    Graph(Overrides),
    /// Fit on the source ticker and evaluate on targets.
    Transfer(Overrides),
    /// Run ingest, correlate, graph and (with --source) transfer.
    Pipeline(Overrides),
    /// Write a seeded synthetic market as CSV files.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Input CSV file or directory (repeatable).
    #[arg(long = "input", short = 'i', value_name = "PATH")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    ticker_column: Option<String>,
    #[arg(long)]
    date_column: Option<String>,
    #[arg(long)]
    open_column: Option<String>,
    #[arg(long)]
    high_column: Option<String>,
    #[arg(long)]
    low_column: Option<String>,
    #[arg(long)]
    close_column: Option<String>,
    #[arg(long)]
    volume_column: Option<String>,
    /// chrono format string for the date column.
    #[arg(long)]
    date_format: Option<String>,
    #[arg(long, value_name = "YYYY-MM-DD")]
    window_start: Option<String>,
    #[arg(long, value_name = "YYYY-MM-DD")]
    window_end: Option<String>,
    /// Symbols to drop (comma separated, repeatable).
    #[arg(long = "exclude", value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, value_parser = parse_from_str::<CalendarPolicy>)]
    calendar_policy: Option<CalendarPolicy>,
    #[arg(long, value_parser = parse_from_str::<ReturnMode>)]
    returns_mode: Option<ReturnMode>,
    #[arg(long)]
    min_overlap: Option<usize>,
    #[arg(long)]
    matrix_out: Option<PathBuf>,
    #[arg(long)]
    pairs_out: Option<PathBuf>,
    #[arg(long)]
    returns_out: Option<PathBuf>,
    /// Edge rule is rho > threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_parser = parse_from_str::<ExportFormat>)]
    format: Option<ExportFormat>,
    #[arg(long)]
    min_clique_size: Option<usize>,
    #[arg(long)]
    clique_cap: Option<usize>,
    /// ticker,key,value CSV of node attributes.
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Graph export path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    transfer_out: Option<PathBuf>,
    #[arg(long)]
    source: Option<String>,
    /// Comma separated tickers, or @FILE with one or more per line.
    #[arg(long)]
    targets: Option<String>,
    /// Autoregressive lag count.
    #[arg(long)]
    window: Option<usize>,
    /// Chronological train fraction.
    #[arg(long)]
    split: Option<f64>,
}

fn parse_from_str<T>(s: &str) -> std::result::Result<T, String>
where
    T: std::str::FromStr<Err = Error>,
{
    s.parse().map_err(|e: Error| e.to_string())
}

fn split_list(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn read_targets(spec: &str) -> Result<Vec<String>> {
    match spec.strip_prefix('@') {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(split_list(&text))
        }
        None => Ok(split_list(spec)),
    }
}

impl Overrides {
    fn into_config(self, out_dir: Option<PathBuf>) -> Result<ConfigFile> {
        let nonempty = |v: Vec<String>| (!v.is_empty()).then_some(v);
        Ok(ConfigFile {
            inputs: (!self.inputs.is_empty()).then_some(self.inputs),
            ticker_column: self.ticker_column,
            date_column: self.date_column,
            open_column: self.open_column,
            high_column: self.high_column,
            low_column: self.low_column,
            close_column: self.close_column,
            volume_column: self.volume_column,
            date_format: self.date_format,
            window_start: self.window_start.map(DateValue::Text),
            window_end: self.window_end.map(DateValue::Text),
            exclude_symbols: nonempty(self.exclude),
            calendar_policy: self.calendar_policy,
            returns_mode: self.returns_mode,
            min_overlap: self.min_overlap,
            threshold: self.threshold,
            format: self.format,
            min_clique_size: self.min_clique_size,
            clique_cap: self.clique_cap,
            attributes: self.attributes,
            out_dir,
            matrix_out: self.matrix_out,
            pairs_out: self.pairs_out,
            returns_out: self.returns_out,
            graph_out: self.out,
            transfer_out: self.transfer_out,
            source: self.source,
            targets: self.targets.as_deref().map(read_targets).transpose()?,
            window: self.window,
            split: self.split,
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Three sectors of ten tickers with a common market factor.
    Sectors,
    /// Tickers A and B sharing a persistent factor, C independent.
    Factor,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Sectors)]
    kind: SynthKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trading days.
    #[arg(long)]
    days: Option<usize>,
    /// Destination directory; one CSV per ticker.
    #[arg(long, value_name = "DIR")]
    dest: PathBuf,
}

fn resolve_config(cli_config: Option<&Path>, overrides: Overrides, out_dir: Option<PathBuf>) -> Result<PipelineConfig> {
    let base = match cli_config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    PipelineConfig::resolve(base.overlay(overrides.into_config(out_dir)?))
}

fn print_transfer(rows: &[TransferRow]) {
    println!("{:<12} {:>14} {:>14} {:>6} {:>5}", "ticker", "rmse", "mae", "n", "hops");
    for row in rows {
        let hops = row
            .hop_distance
            .map_or_else(|| "inf".to_owned(), |h| h.to_string());
        println!(
            "{:<12} {:>14.6e} {:>14.6e} {:>6} {:>5}",
            row.report.target, row.report.rmse, row.report.mae, row.report.n_predictions, hops
        );
    }
}

fn synth(args: &SynthArgs) -> Result<()> {
    let (table, attributes) = match args.kind {
        SynthKind::Sectors => {
            let mut spec = SectorSpec::default();
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            if let Some(days) = args.days {
                spec.days = days;
            }
            let market = planted_sectors(&spec)?;
            let attrs = market.attributes_csv();
            (market.table, Some(attrs))
        }
        SynthKind::Factor => {
            let mut spec = FactorSpec::default();
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            if let Some(days) = args.days {
                spec.days = days;
            }
            (planted_factor(&spec)?, None)
        }
    };
    let prices = args.dest.join("prices");
    fs::create_dir_all(&prices).map_err(|e| Error::io(&prices, e))?;
    for ticker in table.tickers() {
        let one = stocknet::PriceHistoryTable::from_rows(
            table
                .get(ticker)
                .into_iter()
                .flat_map(|h| h.rows().iter().map(|r| (ticker, *r))),
        )?;
        let path = prices.join(format!("{ticker}.csv"));
        let mut buf = Vec::new();
        one.write_csv(&mut buf)?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    }
    if let Some(text) = attributes {
        let path = args.dest.join("attributes.csv");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    println!("wrote {} tickers to {}", table.len(), prices.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    let out_dir = cli.out_dir.clone();
    match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Ingest(o) => {
            let cfg = resolve_config(config, o, out_dir)?;
            let m = pipeline::run_ingest(&cfg)?;
            println!(
                "ingested {} rows for {} tickers; panel {} tickers x {} dates ({} missing) -> {}",
                m.rows_parsed,
                m.tickers_parsed,
                m.tickers,
                m.calendar_length,
                m.missing_values,
                cfg.panel_path().display()
            );
            Ok(())
        }
        Command::Correlate(o) => {
            let cfg = resolve_config(config, o, out_dir)?;
            let matrix = pipeline::run_correlate(&cfg)?;
            println!(
                "{} tickers, {} defined pairs -> {}",
                matrix.len(),
                matrix.defined_pairs(),
                cfg.matrix_path().display()
            );
            for p in top_pairs(&matrix, 5) {
                println!("  {} {} {}", p.a, p.b, format_rho(p.rho));
            }
            Ok(())
        }
        Command::Graph(o) => {
            let cfg = resolve_config(config, o, out_dir)?;
            let report = pipeline::run_graph(&cfg)?;
            print!("{}", report.text);
            println!("graph -> {}", cfg.graph_path().display());
            Ok(())
        }
        Command::Transfer(o) => {
            let cfg = resolve_config(config, o, out_dir)?;
            let rows = pipeline::run_transfer(&cfg)?;
            print_transfer(&rows);
            Ok(())
        }
        Command::Pipeline(o) => {
            let cfg = resolve_config(config, o, out_dir)?;
            let outcome = pipeline::run_pipeline(&cfg)?;
            print!("{}", outcome.graph.text);
            if let Some(rows) = &outcome.transfer {
                print_transfer(rows);
            }
            println!("artifacts in {}", cfg.out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_env("STOCKNET_LOG")
        .init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error[internal]: thread pool: {e}");
            return ExitCode::from(70);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.code();
            eprintln!("error[{}]: {e}", code.as_str());
            ExitCode::from(code.exit_code() as u8)
        }
    }
}
