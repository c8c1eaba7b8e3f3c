use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use formcheck_cli::analyze::analyze;
use formcheck_cli::build_db::build_db;
use formcheck_cli::gen::gen_synthetic;
use formcheck_cli::io::{read_database, read_labels, LABELS_FILE};
use formcheck_cli::sweep::{format_table, parse_ratios, sweep, write_csv, Corpus};
use formcheck_cli::io::load_frames;
use formcheck_cli::{exit_code, input_error, EXIT_INPUT};
use formcheck_core::analysis::AnalysisConfig;
use formcheck_core::matching::DEFAULT_EA_RATIO;
use formcheck_core::synth::SynthKind;
use formcheck_service::{load_database, resolve_db_path, AppState, DB_ENV};

#[derive(Parser)]
#[command(name = "formcheck", version, about = "Exercise pose matching and form diagnosis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an exemplar database from labeled frame files.
    BuildDb {
        #[arg(long)]
        input_dir: PathBuf,
        /// JSON object mapping frame file names to "plank" or "squat".
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EA_RATIO)]
        ea_ratio: f64,
    },
    /// Diagnose frames, printing one JSON line per frame and a summary line.
    Analyze {
        #[arg(long)]
        db: PathBuf,
        /// A directory of frame files or a JSON-lines file.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        ea_ratio: Option<f64>,
        /// Neighbors voting on the label.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        refine_squat: bool,
        #[arg(long)]
        refine_plank: bool,
        /// Degrees.
        #[arg(long)]
        plank_threshold: Option<f64>,
        /// Radians.
        #[arg(long)]
        knee_tolerance: Option<f64>,
        #[arg(long)]
        weight_threshold: Option<f64>,
    },
    /// Misclassification rate of a labeled corpus for several E-A ratios.
    SweepEa {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to labels.json inside the corpus directory.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "2,1,0.5")]
        ratios: String,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write seeded synthetic frames with labels and ground-truth errors.
    GenSynthetic {
        #[arg(long)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        /// Fraction of the bounding-box diagonal.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the streaming feedback service.
    Serve {
        /// Overridden by the FDR_DB environment variable.
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        ea_ratio: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildDb { input_dir, labels, out, ea_ratio } => {
            let report = build_db(&input_dir, &labels, ea_ratio)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            std::fs::write(&out, report.db.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
            println!("{}", report.counts_line());
        }
        Command::Analyze { db, frames, ea_ratio, k, refine_squat, refine_plank, plank_threshold, knee_tolerance, weight_threshold } => {
            let db = read_database(&db)?;
            let frames = load_frames(&frames)?;
            let mut config = AnalysisConfig { ea_ratio, k, refine_squat, refine_plank, ..AnalysisConfig::default() };
            config.params.plank_angle_threshold = plank_threshold.unwrap_or(config.params.plank_angle_threshold);
            config.params.knee_tolerance = knee_tolerance.unwrap_or(config.params.knee_tolerance);
            config.params.weight_fraction_threshold = weight_threshold.unwrap_or(config.params.weight_fraction_threshold);
            if k == 0 {
                return Err(input_error("--k must be positive"));
            }
            if let Some(r) = ea_ratio {
                db.clone().with_ea_ratio(r)?;
            }
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            analyze(&frames, &db, &config, &mut out)?;
            out.flush()?;
        }
        Command::SweepEa { db, corpus, labels, ratios, csv } => {
            let ratios = parse_ratios(&ratios)?;
            let db = read_database(&db)?;
            let labels = read_labels(&labels.unwrap_or_else(|| corpus.join(LABELS_FILE)))?;
            let corpus = Corpus::load(&corpus, &labels)?;
            let rows = sweep(&db, &corpus, &ratios)?;
            print!("{}", format_table(&rows));
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_csv(&rows, file)?;
            }
        }
        Command::GenSynthetic { kind, n, noise, seed, out } => {
            let names = gen_synthetic(kind, n, noise, seed, &out)?;
            println!("wrote {} {kind} frames to {}", names.len(), out.display());
        }
        Command::Serve { db, port, host, ea_ratio } => {
            let path = resolve_db_path(db, std::env::var(DB_ENV).ok())
                .ok_or_else(|| input_error(format!("no database: pass --db or set {DB_ENV}")))?;
            let db = load_database(&path, ea_ratio).map_err(|e| input_error(e.to_string()))?;
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|_| input_error(format!("bad address {host}:{port}")))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(formcheck_service::bind_and_serve(Arc::new(AppState::new(db)), addr))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
