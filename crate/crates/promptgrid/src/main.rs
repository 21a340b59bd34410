use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use promptgrid::commands;
use promptgrid::config::AppConfig;
use promptgrid::mockllm::{serve_blocking, MockConfig};

#[derive(Parser)]
#[command(name = "promptgrid", version, about = "Prompt-based annotation experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and score the Naive Bayes baseline on the configured split.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: <config dir>/baseline)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute the model × template × sample grid.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fill the missing cells of an interrupted run.
    Resume {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Score a run directory: per-cell reports, comparison table, plot data.
    Score {
        #[arg(long)]
        run_dir: PathBuf,
        /// Output directory (default: <run_dir>/scores)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render a static SVG of the tier/size trend.
        #[arg(long)]
        svg: bool,
    },
    /// Score an external predictions file (CSV: id,predicted_label).
    Import {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Output directory (default: <config dir>/imported)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-method comparison table from a scored run plus optional
    /// baseline/imported reports.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        imported: Option<PathBuf>,
        /// Output directory (default: <run_dir>/report)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the deterministic mock endpoint in the foreground.
    MockServe {
        #[arg(long)]
        profile: PathBuf,
        /// Port to bind on 127.0.0.1; 0 picks an ephemeral port.
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
}

fn run(cli: Cli) -> promptgrid::Result<()> {
    match cli.command {
        Command::Baseline { config, out } => {
            let app = AppConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| app.base_dir().join("baseline"));
            let artifacts = commands::cmd_baseline(&app, &out_dir)?;
            print!(
                "{}",
                serde_json::to_string_pretty(&artifacts.report.rounded_for_display())
                    .expect("report serializes")
            );
            println!();
            eprintln!("model:  {}", artifacts.model_path.display());
            eprintln!("report: {}", artifacts.report_path.display());
            eprintln!("table:  {}", artifacts.table_path.display());
        }
        Command::Run { config } => {
            let app = AppConfig::load(&config)?;
            let summary = commands::cmd_run(&app)?;
            println!(
                "records written: {}, errors: {}",
                summary.records_written, summary.errors
            );
        }
        Command::Resume { run_dir } => {
            let summary = commands::cmd_resume(&run_dir)?;
            println!(
                "records written: {}, errors: {}",
                summary.records_written, summary.errors
            );
        }
        Command::Score { run_dir, out, svg } => {
            let out_dir = out.unwrap_or_else(|| run_dir.join("scores"));
            let artifacts = commands::cmd_score(&run_dir, &out_dir, svg)?;
            for warning in &artifacts.warnings {
                eprintln!("warning: {warning}");
            }
            println!("scored {} cells", artifacts.cells.len());
            println!("table: {}", artifacts.table_path.display());
            println!("plot:  {}", artifacts.plot_path.display());
            if let Some(path) = &artifacts.svg_path {
                println!("svg:   {}", path.display());
            }
        }
        Command::Import {
            config,
            predictions,
            out,
        } => {
            let app = AppConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| app.base_dir().join("imported"));
            let report = commands::cmd_import(&app, &predictions, &out_dir)?;
            print!(
                "{}",
                serde_json::to_string_pretty(&report.rounded_for_display())
                    .expect("report serializes")
            );
            println!();
        }
        Command::Report {
            run_dir,
            baseline,
            imported,
            out,
        } => {
            let out_dir = out.unwrap_or_else(|| run_dir.join("report"));
            let table = commands::cmd_report(
                &run_dir,
                baseline.as_deref(),
                imported.as_deref(),
                &out_dir,
            )?;
            print!("{}", table.to_text());
        }
        Command::MockServe { profile, port } => {
            let config = MockConfig::from_file(&profile)?;
            serve_blocking(config, port)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
