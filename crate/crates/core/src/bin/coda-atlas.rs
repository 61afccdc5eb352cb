use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coda_atlas::fixture::{seed_from_env, synthetic_table};
use coda_atlas::pipeline::{
    Analysis, BiplotSettings, ClusterSettings, PipelineSettings, RenderSettings, MANIFEST_FILE,
};
use coda_atlas::report::{write_reports, ReportSet};
use coda_atlas::{parse_table, write_table, Cut, Error, IngestConfig, Linkage};

#[derive(Parser)]
#[command(name = "coda-atlas", version, about = "Log-ratio biplots, rankings and clusters for indicator tables")]
struct Cli {
    /// Indicator CSV; the seeded synthetic table when omitted.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// JSON ingestion config (locale, units, zero handling, ratio catalog).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the input and print a validation report.
    Validate,
    /// Descriptive statistics per part and per ratio.
    Describe,
    /// Skewness and outlier diagnostics, raw against log scale.
    Diagnose,
    /// Centered log-ratio matrix.
    Clr,
    /// Fit the biplot and write the model.
    Biplot(BiplotArgs),
    /// Rank entities along the link of a named ratio.
    Rank {
        #[arg(long)]
        ratio: String,
        #[command(flatten)]
        biplot: BiplotArgs,
    },
    /// Agglomerative clustering on Aitchison distances.
    Cluster(ClusterArgs),
    /// Draw the biplot as SVG.
    Render(RenderArgs),
    /// Run every stage and write a manifest.
    Pipeline {
        #[command(flatten)]
        biplot: BiplotArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long, value_delimiter = ',')]
        links: Option<Vec<String>>,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 800)]
        height: u32,
    },
    /// Write the seeded synthetic table as CSV.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Clone)]
struct BiplotArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2)]
    rank: usize,
}

impl From<&BiplotArgs> for BiplotSettings {
    fn from(a: &BiplotArgs) -> Self {
        Self { alpha: a.alpha, rank: a.rank }
    }
}

#[derive(Args, Clone)]
struct ClusterArgs {
    #[arg(long, default_value = "complete")]
    linkage: Linkage,
    /// Number of clusters.
    #[arg(long, conflicts_with = "threshold")]
    clusters: Option<usize>,
    /// Merge distance at which to cut the dendrogram.
    #[arg(long)]
    threshold: Option<f64>,
}

impl From<&ClusterArgs> for ClusterSettings {
    fn from(a: &ClusterArgs) -> Self {
        let cut = match (a.clusters, a.threshold) {
            (Some(k), _) => Cut::Count(k),
            (None, Some(h)) => Cut::Threshold(h),
            (None, None) => Cut::LargestGap,
        };
        Self { linkage: a.linkage, cut }
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Comma-separated ratio names; every catalog ratio when omitted.
    #[arg(long, value_delimiter = ',')]
    links: Option<Vec<String>>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 800)]
    height: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn load(cli: &Cli) -> Result<Analysis, Error> {
    let config = match &cli.config {
        Some(path) => IngestConfig::from_json(&String::from_utf8_lossy(&read(path)?))?,
        None => IngestConfig::default(),
    };
    let table = match &cli.input {
        Some(path) => parse_table(&read(path)?, &config)?,
        None => synthetic_table(seed_from_env().map_err(|m| Error::Io { path: "CODA_ATLAS_SEED".into(), message: m })?),
    };
    Ok(Analysis::new(table, config.ratios()))
}

fn emit(out: &ReportSet, dir: &Path) -> Result<(), Error> {
    let manifest = write_reports(out, dir)?;
    for entry in &manifest.files {
        println!("{}", dir.join(&entry.file).display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Command::Generate { seed } = &cli.command {
        let seed = match seed {
            Some(s) => *s,
            None => seed_from_env().map_err(|m| Error::Io { path: "CODA_ATLAS_SEED".into(), message: m })?,
        };
        print!("{}", write_table(&synthetic_table(seed)));
        return Ok(());
    }

    let analysis = load(cli)?;
    let mut out = ReportSet::new();
    match &cli.command {
        Command::Validate => {
            print!("{}", analysis.validation_report());
            return Ok(());
        }
        Command::Describe => analysis.describe(&mut out)?,
        Command::Diagnose => analysis.diagnose(&mut out)?,
        Command::Clr => analysis.clr(&mut out),
        Command::Biplot(args) => analysis.biplot(&args.into(), &mut out)?,
        Command::Rank { ratio, biplot } => analysis.rank(ratio, &biplot.into(), &mut out)?,
        Command::Cluster(args) => analysis.cluster(&args.into(), &mut out)?,
        Command::Render(args) => {
            let settings = RenderSettings {
                alpha: args.alpha,
                links: args.links.clone(),
                width: args.width,
                height: args.height,
            };
            analysis.render(&settings, &mut out)?
        }
        Command::Pipeline { biplot, cluster, links, width, height } => {
            let settings = PipelineSettings {
                biplot: biplot.into(),
                cluster: cluster.into(),
                render: RenderSettings { alpha: biplot.alpha, links: links.clone(), width: *width, height: *height },
            };
            let out = analysis.run_pipeline(&settings)?;
            let manifest = write_reports(&out, &cli.out)?;
            let text = manifest.to_json();
            let path = cli.out.join(MANIFEST_FILE);
            fs::write(&path, &text).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
            print!("{text}");
            return Ok(());
        }
        Command::Generate { .. } => unreachable!(),
    }
    emit(&out, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(1)
        }
    }
}
