use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use recagglo::pipeline::config::{load_pairs, set_generator_key, split_pair};
use recagglo::pipeline::run::{run_gen, write_bench, write_grid, write_profile};
use recagglo::pipeline::{
    run_cluster, run_grid_search, run_scaling_bench, run_weights_train, PipelineConfig,
    WeightStrategy,
};
use recagglo::synthgen::GeneratorConfig;
use recagglo::{AttributeSchema, Error, Result};

#[derive(Parser)]
#[command(
    name = "recagglo",
    version,
    about = "Recursive agglomerative clustering of order data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the inputs, write clusters, metrics and verdicts.
    Cluster(Common),
    /// Score every (rho_s, rho_mc) combination of the configured grid.
    GridSearch(Common),
    /// Time clustering on growing subsamples.
    Bench(Common),
    /// Generate a synthetic dataset with planted fraud campaigns.
    Gen(GenArgs),
    /// Derive attribute weights from training data.
    WeightsTrain(TrainArgs),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = split_pair)]
    set: Vec<(String, String)>,
    /// Input CSV; repeatable.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// unit, cardinality, label or file.
    #[arg(long)]
    weights: Option<String>,
}

impl Common {
    fn pipeline(&self) -> Result<PipelineConfig> {
        let mut pairs = match &self.config {
            Some(p) => load_pairs(p)?,
            None => Vec::new(),
        };
        if !self.input.is_empty() {
            let joined: Vec<String> = self.input.iter().map(|p| p.display().to_string()).collect();
            pairs.push(("input".into(), joined.join(",")));
        }
        let flag = |k: &str, v: Option<String>| v.map(|v| (k.to_owned(), v));
        pairs.extend(flag(
            "output_dir",
            self.out.as_ref().map(|p| p.display().to_string()),
        ));
        pairs.extend(flag("seed", self.seed.map(|s| s.to_string())));
        pairs.extend(flag("workers", self.workers.map(|s| s.to_string())));
        pairs.extend(flag("weights", self.weights.clone()));
        pairs.extend(self.set.iter().cloned());
        PipelineConfig::from_pairs(&pairs)
    }
}

#[derive(Args)]
struct GenArgs {
    /// key=value generator configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one generator key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = split_pair)]
    set: Vec<(String, String)>,
    /// Output directory for data.csv, ground_truth.csv and schema.txt.
    #[arg(long)]
    out: PathBuf,
    /// Attribute schema; the built-in order layout when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// cardinality or label.
    #[arg(long, default_value = "label")]
    strategy: String,
    /// Weight file to write.
    #[arg(long)]
    output: PathBuf,
    /// Optional per-attribute Simpson profile CSV (label strategy).
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster(args) => {
            let out = run_cluster(&args.pipeline()?)?;
            print!("{}", out.report.to_key_value());
        }
        Command::GridSearch(args) => {
            let rows = run_grid_search(&args.pipeline()?)?;
            write_grid(&rows, std::io::stdout())?;
        }
        Command::Bench(args) => {
            let rows = run_scaling_bench(&args.pipeline()?)?;
            write_bench(&rows, std::io::stdout())?;
        }
        Command::Gen(args) => {
            let mut gen = GeneratorConfig::default();
            let mut pairs = match &args.config {
                Some(p) => load_pairs(p)?,
                None => Vec::new(),
            };
            pairs.extend(args.seed.map(|s| ("seed".to_owned(), s.to_string())));
            pairs.extend(args.set.iter().cloned());
            for (k, v) in &pairs {
                set_generator_key(&mut gen, k, v)?;
            }
            let schema = match &args.schema {
                Some(p) => AttributeSchema::load(p)?,
                None => AttributeSchema::default_orders(),
            };
            let (data, truth) = run_gen(&gen, &schema, &args.out)?;
            println!(
                "records={} campaigns={} out={}",
                data.n(),
                truth.campaign_count(),
                args.out.display()
            );
        }
        Command::WeightsTrain(args) => {
            let cfg = args.common.pipeline()?;
            let strategy: WeightStrategy = args.strategy.parse()?;
            let (weights, profile) = run_weights_train(&cfg, strategy, &args.output)?;
            if let (Some(path), Some(profile)) = (&args.profile, &profile) {
                let schema = recagglo::pipeline::run::load_schema(&cfg)?;
                let f = std::fs::File::create(path).map_err(Error::Io)?;
                write_profile(profile, &weights, &schema, f)?;
            }
            println!(
                "wrote {} weights to {}",
                weights.len(),
                args.output.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
