use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use driftbench_core::data_io::{batch_file_name, format_sample_line, Dataset};
use driftbench_core::experiment::{
    self, export_projections, export_report, load_experiment_dataset, projections_csv,
    write_atomic, ProjectionView, ReportFormat,
};
use driftbench_core::preprocess::{feature_extrema, normalize_dataset};
use driftbench_core::{EvalReport, ExperimentConfig, MethodName};

#[derive(Debug, Parser)]
#[command(name = "driftbench", version, about = "Gas-sensor drift adaptation benchmark")]
struct Cli {
    /// TOML configuration (flat dotted keys); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding batch1.dat .. batch10.dat.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the synthetic dataset used when no data directory is given.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the batch files and report what was read.
    Ingest {
        #[arg(long, value_enum, default_value_t = IngestReport::Counts)]
        report: IngestReport,
    },
    /// Min-max scale every batch with batch-1 extrema; writes batchN.dat files under --out.
    Normalize {
        /// Print per-batch minimum and maximum after scaling.
        #[arg(long)]
        stats: bool,
    },
    /// Export two-component projections as `batch_id,label,x,y,clipped` CSV.
    Project {
        #[arg(long, value_enum)]
        method: ProjectMethod,
        #[arg(long, default_value_t = 2)]
        components: usize,
    },
    /// Run adaptation methods and write report.csv / report.json under --out.
    Run {
        #[arg(long, value_enum, default_value_t = RunMethod::All)]
        method: RunMethod,
    },
    /// Print a previously written report.json.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportView::Table)]
        format: ReportView,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IngestReport {
    Counts,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProjectMethod {
    Pca,
    Lda,
    LdaPerBatch,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RunMethod {
    None,
    Means,
    Drca,
    Ldsp,
    Selftrain,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportView {
    Table,
    Csv,
    Json,
}

impl Cli {
    fn resolve_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)
                .with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.data_dir {
            cfg.data_dir = Some(d.clone());
        }
        if let Some(s) = self.seed {
            cfg.synthetic.seed = s;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_path(&self) -> Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("--out is required for this command"),
        }
    }
}

fn load(cfg: &ExperimentConfig) -> Result<(Dataset, String)> {
    let (ds, source) = load_experiment_dataset(cfg)?;
    if cfg.data_dir.is_none() {
        log::info!("no --data-dir given; using {source}");
    }
    Ok((ds, source))
}

fn ingest(cfg: &ExperimentConfig) -> Result<()> {
    let (ds, source) = load(cfg)?;
    println!("source: {source}");
    println!("{:>8} {:>8}", "batch", "samples");
    for (id, n) in ds.counts() {
        println!("{id:>8} {n:>8}");
    }
    println!("{:>8} {:>8}", "total", ds.total_samples());
    Ok(())
}

fn normalize(cli: &Cli, cfg: &ExperimentConfig, stats: bool) -> Result<()> {
    let (ds, _) = load(cfg)?;
    let (normalized, _) = normalize_dataset(&ds)?;
    if let Some(dir) = &cli.out {
        for b in normalized.batches() {
            let mut body = String::new();
            for s in &b.samples {
                body.push_str(&format_sample_line(s));
                body.push('\n');
            }
            write_atomic(&dir.join(batch_file_name(b.batch_id)), body.as_bytes())?;
        }
        println!("wrote {} batch files to {}", normalized.num_batches(), dir.display());
    }
    if stats {
        println!("{:>8} {:>14} {:>14}", "batch", "min", "max");
        for b in normalized.batches() {
            if let Some((lo, hi)) = feature_extrema(&b.samples) {
                println!("{:>8} {lo:>14.6} {hi:>14.6}", b.batch_id);
            }
        }
    }
    if cli.out.is_none() && !stats {
        bail!("nothing to do: pass --out <dir> and/or --stats");
    }
    Ok(())
}

fn project(cli: &Cli, cfg: &ExperimentConfig, method: ProjectMethod, components: usize) -> Result<()> {
    if components != 2 {
        bail!("only --components 2 is supported (x,y output)");
    }
    let out = cli.out_path()?;
    let (ds, _) = load(cfg)?;
    let ds = if cfg.normalize { normalize_dataset(&ds)?.0 } else { ds };
    let view = match method {
        ProjectMethod::Pca => ProjectionView::PcaBatch1,
        ProjectMethod::Lda => ProjectionView::LdaBatch1,
        ProjectMethod::LdaPerBatch => ProjectionView::LdaPerBatch,
    };
    let points = export_projections(&ds, view)?;
    write_atomic(out, projections_csv(&points).as_bytes())?;
    let clipped = points.iter().filter(|p| p.clipped).count();
    println!("wrote {} points ({clipped} flagged clipped) to {}", points.len(), out.display());
    Ok(())
}

fn run(cli: &Cli, mut cfg: ExperimentConfig, method: RunMethod) -> Result<()> {
    let out = cli.out_path()?.to_path_buf();
    cfg.methods = match method {
        RunMethod::All => MethodName::ALL.to_vec(),
        RunMethod::None => vec![MethodName::None],
        RunMethod::Means => vec![MethodName::Means],
        RunMethod::Drca => vec![MethodName::Drca],
        RunMethod::Ldsp => vec![MethodName::Ldsp],
        RunMethod::Selftrain => vec![MethodName::SelfTrain],
    };
    let (ds, source) = load(&cfg)?;
    let report = experiment::run_experiment(&cfg, &ds, &source)?;
    let files = export_report(&report, &out, &[ReportFormat::Csv, ReportFormat::Json])?;
    print!("{}", report.accuracy_table());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn report(input: &Path, format: ReportView) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report = EvalReport::from_json(&text)?;
    match format {
        ReportView::Table => print!("{}", report.accuracy_table()),
        ReportView::Csv => print!("{}", report.to_csv()),
        ReportView::Json => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,driftbench_core::classifier=error")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Report { input, format } => report(input, *format),
        Command::Ingest { report: IngestReport::Counts } => ingest(&cli.resolve_config()?),
        Command::Normalize { stats } => normalize(&cli, &cli.resolve_config()?, *stats),
        Command::Project { method, components } => {
            project(&cli, &cli.resolve_config()?, *method, *components)
        }
        Command::Run { method } => run(&cli, cli.resolve_config()?, *method),
    }
}
