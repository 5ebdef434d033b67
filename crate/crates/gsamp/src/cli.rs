//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gsamp_core::experiment::{prepare, synthetic_problem};
use gsamp_core::sampling::greedy_select;
use gsamp_core::spectral::eigendecompose;
use gsamp_core::{Dataset, ObservationMask, Seed};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::{io, parallel, report, table1};

#[derive(Debug, Parser)]
#[command(name = "gsamp", version, about = "Adaptive message passing estimators for graph signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo comparison and write MSE reports.
    Run(RunArgs),
    /// Generate a synthetic bandlimited dataset.
    Synth(SynthArgs),
    /// Run the six-setting noise grid and print one table per setting.
    Table1(RunArgs),
    /// Write the greedy observation mask for a station set.
    Mask(MaskArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Stations CSV with header `id,lat,lon`.
    #[arg(long, requires = "signal", conflicts_with = "synthetic")]
    pub stations: Option<PathBuf>,
    /// Signal CSV, one row per station.
    #[arg(long, requires = "stations")]
    pub signal: Option<PathBuf>,
    /// Use the synthetic surrogate described by the config.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Logarithmic ordinate in the MSE chart.
    #[arg(long)]
    pub log_scale: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of stations; overrides `synthetic.nodes`.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Number of time steps; overrides `synthetic.steps`.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `stations.csv` and `signal.csv`.
    #[arg(long, required_unless_present_all = ["stations", "signal"])]
    pub out: Option<PathBuf>,
    /// Explicit stations CSV path.
    #[arg(long, requires = "signal")]
    pub stations: Option<PathBuf>,
    /// Explicit signal CSV path.
    #[arg(long, requires = "stations")]
    pub signal: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stations CSV; without it the synthetic station set is used.
    #[arg(long)]
    pub stations: Option<PathBuf>,
    /// Output mask CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<Config> {
    let mut c = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn synthetic_dataset(config: &Config, nodes: usize, steps: usize) -> Result<Dataset> {
    if steps < 2 {
        return Err(Error::Usage(format!("need at least 2 time steps, got {steps}")));
    }
    if nodes < 2 {
        return Err(Error::Usage(format!("need at least 2 nodes, got {nodes}")));
    }
    let bandwidth = config.run_config(nodes, config.noise, None).effective_bandwidth(nodes);
    let spec = config.synthetic.spec(bandwidth);
    let (data, _, _) = synthetic_problem(nodes, steps, config.k, Seed(config.seed), &spec)?;
    Ok(data)
}

fn dataset(config: &Config, data: &DataArgs) -> Result<(Dataset, Vec<(String, String)>)> {
    match (&data.stations, &data.signal) {
        (Some(st), Some(sg)) => Ok((
            io::load_dataset(st, sg)?,
            vec![
                ("stations".into(), st.display().to_string()),
                ("signal".into(), sg.display().to_string()),
            ],
        )),
        _ if data.synthetic => {
            let s = &config.synthetic;
            Ok((
                synthetic_dataset(config, s.nodes, s.steps)?,
                vec![("data".into(), format!("synthetic nodes={} steps={}", s.nodes, s.steps))],
            ))
        }
        _ => Err(Error::Usage(
            "provide --stations and --signal, or --synthetic".into(),
        )),
    }
}

fn pinned_mask(config: &Config) -> Result<Option<ObservationMask>> {
    config.mask.as_deref().map(io::load_mask).transpose()
}

fn config_label(path: Option<&Path>) -> (String, String) {
    (
        "config".into(),
        path.map_or("(defaults)".into(), |p| p.display().to_string()),
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let (data, mut extra) = dataset(&config, &args.data)?;
    let rc = config.run_config(data.n_nodes(), config.noise, pinned_mask(&config)?);
    let setup = prepare(&rc, &data)?;
    let report = parallel::monte_carlo(&rc, &data, &setup, args.threads)?;
    extra.insert(0, config_label(args.config.as_deref()));
    report::write_report(&report, &args.out, args.log_scale, &extra, &config.source)?;
    print!("{}", report::summary_table(&report));
    Ok(())
}

pub fn cmd_table1(args: &RunArgs) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let (data, mut extra) = dataset(&config, &args.data)?;
    let tables = table1::run(&config, &data, pinned_mask(&config)?, args.threads)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("table1.csv");
    std::fs::write(&csv_path, table1::csv(&tables)).map_err(|e| Error::io(&csv_path, e))?;
    extra.insert(0, config_label(args.config.as_deref()));
    extra.push((
        "reference_comparison".into(),
        table1::is_reference_shape(&data).to_string(),
    ));
    if let Some(first) = tables.first() {
        let meta = report::metadata_text(&first.report, &extra, &config.source);
        let p = args.out.join("metadata.txt");
        std::fs::write(&p, meta).map_err(|e| Error::io(&p, e))?;
    }
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            println!();
        }
        print!("{}", table1::render(t));
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let nodes = args.nodes.unwrap_or(config.synthetic.nodes);
    let steps = args.steps.unwrap_or(config.synthetic.steps);
    let data = synthetic_dataset(&config, nodes, steps)?;
    let (st, sg) = match (&args.stations, &args.signal, &args.out) {
        (Some(st), Some(sg), _) => (st.clone(), sg.clone()),
        (_, _, Some(dir)) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            (dir.join("stations.csv"), dir.join("signal.csv"))
        }
        _ => return Err(Error::Usage("provide --out or --stations with --signal".into())),
    };
    io::write_dataset(&st, &sg, &data)?;
    println!("wrote {} and {}", st.display(), sg.display());
    Ok(())
}

pub fn cmd_mask(args: &MaskArgs) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let coords = match &args.stations {
        Some(p) => io::load_stations(p)?,
        None => gsamp_core::experiment::synth_points(config.synthetic.nodes, Seed(config.seed)),
    };
    let n = coords.len();
    let graph = gsamp_core::graph::build_knn_graph(&coords, config.k)?;
    let basis = eigendecompose(&graph.laplacian())?;
    let rc = config.run_config(n, config.noise, None);
    let mask = greedy_select(&basis, rc.observed, rc.effective_bandwidth(n))?;
    io::write_mask(&args.out, &mask)?;
    println!("{} of {} nodes observed", mask.observed_count(), n);
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Mask(a) => cmd_mask(a),
    }
}
