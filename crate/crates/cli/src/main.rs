use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mibridge::data::write_matrix_csv;
use mibridge::{harness, ExperimentConfig, IncompleteData, Mechanism, Method, NiwPrior, PriorSpec, RngSeed};

#[derive(Parser)]
#[command(name = "mibridge", version, about = "Joint-model and chained-equation multiple imputation with matched priors")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one replication of the simulation design and write it as CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Replication index; each index has its own random stream.
        #[arg(long, default_value_t = 0)]
        replication: usize,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Multiply impute a CSV file with empty cells marking missing values.
    Impute {
        /// Incomplete data, CSV with a header row.
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value = "FCS")]
        method: Method,
        /// Joint (normal-inverse-Wishart) prior or list of regression priors,
        /// as JSON. Defaults to the weakly informative joint prior.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Comma-separated visit order for chained equations.
        #[arg(long, value_delimiter = ',')]
        visit: Option<Vec<String>>,
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        burn_in: usize,
        /// Number of completed datasets.
        #[arg(short, long, default_value_t = 5)]
        m: usize,
        #[arg(short, long, default_value = "imputations")]
        output_dir: PathBuf,
    },
    /// Repeated-sampling bias, coverage and interval width of the pooled mean.
    CoverageStudy(RunArgs),
    /// Batch-means test for an effect of the visit order on a regression slope.
    OrderEffect(RunArgs),
    /// Compare one coefficient's posterior under both samplers.
    PosteriorCompare(RunArgs),
    /// Decompose a joint prior into the matching regression priors.
    TransformPrior {
        /// Joint prior as JSON.
        #[arg(short, long)]
        input: PathBuf,
        /// Only this column (0-based).
        #[arg(long)]
        column: Option<usize>,
        /// Output JSON (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Experiment configuration: a JSON file, with individual fields overridable.
#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    n_cases: Option<usize>,
    #[arg(long)]
    mechanism: Option<Mechanism>,
    #[arg(long)]
    prop_missing: Option<f64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.replications {
            cfg.n_replications = v;
        }
        if let Some(v) = self.n_cases {
            cfg.n_cases = v;
        }
        if let Some(v) = self.mechanism {
            cfg.mechanism = v;
        }
        if let Some(v) = self.prop_missing {
            cfg.prop_missing_rows = v;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = self.m {
            cfg.m_imputations = v;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            );
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { run, replication, output } => {
            let cfg = run.config()?;
            let data = cfg.simulate_replication(replication)?;
            log::info!("{} of {} cells missing", data.n_missing(), data.n_rows() * data.n_cols());
            write_output(output.as_deref(), |w| Ok(data.to_writer(w)?))
        }
        Command::Impute { input, method, prior, visit, seed, burn_in, m, output_dir } => {
            if method == Method::Both {
                bail!("choose either JM or FCS for imputation");
            }
            let data = IncompleteData::read_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let prior: PriorSpec = match prior {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing prior {}", path.display()))?,
                None => PriorSpec::Joint(NiwPrior::weakly_informative(data.n_cols())),
            };
            prior.check_dim(data.n_cols())?;
            let visit = visit.unwrap_or_else(|| data.column_names().to_vec());
            let completed = harness::impute(&data, &prior, method, &visit, RngSeed(seed), 0, burn_in, m)?;
            std::fs::create_dir_all(&output_dir)?;
            for (k, c) in completed.iter().enumerate() {
                let path = output_dir.join(format!("imputation_{}.csv", k + 1));
                write_matrix_csv(std::fs::File::create(&path)?, data.column_names(), c)?;
            }
            log::info!("wrote {} datasets to {}", completed.len(), output_dir.display());
            Ok(())
        }
        Command::CoverageStudy(run) => {
            let report = harness::run_coverage_study(&run.config()?)?;
            print_json(&serde_json::to_value(&report.summaries)?)
        }
        Command::OrderEffect(run) => {
            let cfg = run.config()?;
            let study = harness::run_order_effect(&cfg)?;
            print_json(&serde_json::json!({
                "replications": study.replications.len(),
                "failed": study.failures.len(),
                "fraction_excluding_zero": study.exclusion_fraction,
            }))
        }
        Command::PosteriorCompare(run) => {
            let mut cfg = run.config()?;
            if run.method.is_none() {
                cfg.method = Method::Both;
            }
            let report = harness::run_posterior_compare(&cfg)?;
            print_json(&serde_json::json!({
                "ks_statistic": report.comparison.ks_statistic,
                "n_draws_per_sampler": cfg.posterior_draws,
            }))
        }
        Command::TransformPrior { input, column, output } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let out = harness::transform_prior(&text, column)?;
            write_output(output.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &out)?;
                writeln!(w)?;
                Ok(())
            })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        super::Cli::command().debug_assert();
    }
}
