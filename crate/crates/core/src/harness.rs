//! Experiment configuration and the end-to-end runners: coverage study,
//! visit-order study, joint-versus-conditional posterior comparison and
//! prior transformation. Each runner has a pure form returning a report
//! and a `run_*` form that also writes the report under `output_dir`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::amputation::{self, AmputationSpec, Mechanism};
use crate::analysis::{self, EvalSummary, OrderEffectDesign, OrderEffectStudy, PooledEstimate, PosteriorComparison};
use crate::data::IncompleteData;
use crate::error::{Error, Result};
use crate::fcs::{self, TraceEvent, VisitSequence};
use crate::gaussian::{self, GaussianParams};
use crate::jm::{self, JmState};
use crate::prior::{self, NigPrior, NiwPrior};
use crate::samplers::{RngSeed, DATA_CHAIN, JM_CHAIN_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "JM", alias = "jm")]
    Jm,
    #[serde(rename = "FCS", alias = "fcs")]
    Fcs,
    #[serde(rename = "both")]
    Both,
}

impl Method {
    fn expand(self) -> &'static [Method] {
        match self {
            Method::Jm => &[Method::Jm],
            Method::Fcs => &[Method::Fcs],
            Method::Both => &[Method::Jm, Method::Fcs],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Jm => "JM",
            Method::Fcs => "FCS",
            Method::Both => "both",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jm" => Ok(Method::Jm),
            "fcs" => Ok(Method::Fcs),
            "both" => Ok(Method::Both),
            _ => Err(Error::InvalidParameter(format!("unknown method `{s}` (expected jm, fcs or both)"))),
        }
    }
}

/// A joint prior (decomposed on demand for FCS) or explicit per-column
/// regression priors (FCS only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Joint(NiwPrior),
    Conditional(Vec<NigPrior>),
}

impl PriorSpec {
    pub fn joint(&self) -> Result<&NiwPrior> {
        match self {
            PriorSpec::Joint(p) => Ok(p),
            PriorSpec::Conditional(_) => {
                Err(Error::InvalidParameter("the joint-model sampler needs a normal–inverse-Wishart prior".into()))
            }
        }
    }

    pub fn conditionals(&self) -> Result<Vec<NigPrior>> {
        match self {
            PriorSpec::Joint(p) => prior::decompose_all(p),
            PriorSpec::Conditional(v) => Ok(v.clone()),
        }
    }

    /// Errors unless the prior describes `p` variables.
    pub fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            PriorSpec::Joint(pr) if pr.dim() != p => {
                Err(Error::Dimension(format!("prior covers {} variables, data has {p}", pr.dim())))
            }
            PriorSpec::Conditional(v) => {
                for c in v {
                    if c.j >= p || c.n_coef() != p {
                        return Err(Error::Dimension(format!("regression prior for column {} does not fit {p} variables", c.j)));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Full description of a simulation run. Defaults reproduce the standard
/// design: 200 cases, 500 replications, half the rows missing one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_cases: usize,
    pub n_replications: usize,
    pub mechanism: Mechanism,
    pub prop_missing_rows: f64,
    pub method: Method,
    pub m_imputations: usize,
    pub burn_in: usize,
    pub order_effect_iters: usize,
    pub n_batches: usize,
    pub posterior_draws: usize,
    pub prior: PriorSpec,
    pub visit_sequence: Vec<String>,
    pub column_names: Vec<String>,
    pub population_mean: Vec<f64>,
    pub population_cov: Vec<Vec<f64>>,
    /// Column whose mean is the coverage-study estimand.
    pub target: String,
    /// Regression traced by the order-effect and posterior studies.
    pub response: String,
    pub coefficient: String,
    /// Worker threads; `None` lets the pool decide.
    pub workers: Option<usize>,
    pub max_failure_rate: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pop = amputation::simulation_population();
        let s = |v: &str| v.to_string();
        Self {
            seed: 20_240_601,
            n_cases: 200,
            n_replications: 500,
            mechanism: Mechanism::Mcar,
            prop_missing_rows: 0.5,
            method: Method::Fcs,
            m_imputations: 5,
            burn_in: 10,
            order_effect_iters: 1000,
            n_batches: 20,
            posterior_draws: 2000,
            prior: PriorSpec::Joint(NiwPrior::weakly_informative(3)),
            visit_sequence: vec![s("z"), s("x"), s("y")],
            column_names: amputation::SIMULATION_COLUMNS.iter().map(|c| c.to_string()).collect(),
            population_mean: pop.mu().iter().copied().collect(),
            population_cov: prior::matrix_to_rows(pop.sigma()),
            target: s("y"),
            response: s("y"),
            coefficient: s("x"),
            workers: None,
            max_failure_rate: 0.01,
            output_dir: PathBuf::from("mibridge-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_cases", self.n_cases),
            ("n_replications", self.n_replications),
            ("m_imputations", self.m_imputations),
            ("order_effect_iters", self.order_effect_iters),
            ("posterior_draws", self.posterior_draws),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.m_imputations < 2 {
            return Err(Error::InvalidParameter("pooling needs m_imputations >= 2".into()));
        }
        if self.n_batches < 2 || !self.order_effect_iters.is_multiple_of(self.n_batches) {
            return Err(Error::InvalidParameter("order_effect_iters must be a multiple of n_batches >= 2".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(Error::InvalidParameter("max_failure_rate must be a fraction".into()));
        }
        let p = self.column_names.len();
        self.population()?;
        self.prior.check_dim(p)?;
        self.amputation_spec()?;
        for name in self.visit_sequence.iter().chain([&self.target, &self.response, &self.coefficient]) {
            self.column(name)?;
        }
        if self.response == self.coefficient {
            return Err(Error::InvalidParameter("response and coefficient columns must differ".into()));
        }
        if self.visit_sequence.len() != p {
            return Err(Error::InvalidParameter("visit_sequence must list every column once".into()));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown column `{name}`")))
    }

    pub fn population(&self) -> Result<GaussianParams> {
        let p = self.column_names.len();
        if self.population_mean.len() != p || self.population_cov.len() != p {
            return Err(Error::Dimension(format!("population does not match {p} columns")));
        }
        GaussianParams::new(DVector::from_vec(self.population_mean.clone()), prior::matrix_from_rows(&self.population_cov)?)
    }

    pub fn amputation_spec(&self) -> Result<AmputationSpec> {
        AmputationSpec::one_cell_per_row(self.mechanism, self.prop_missing_rows, self.column_names.len())
    }

    /// Data of replication `rep`, drawn from its own stream.
    pub fn simulate_replication(&self, rep: usize) -> Result<IncompleteData> {
        let mut rng = RngSeed(self.seed).stream(rep as u64, DATA_CHAIN);
        let complete = amputation::generate_complete(&mut rng, self.n_cases, &self.population()?)?;
        amputation::ampute(&mut rng, &complete, self.column_names.clone(), &self.amputation_spec()?)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w);
        }
        b.build().map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
    }
}

/// `m` completed datasets from independent chains of `method`.
#[allow(clippy::too_many_arguments)]
pub fn impute(
    data: &IncompleteData,
    prior: &PriorSpec,
    method: Method,
    visit: &[String],
    seed: RngSeed,
    replication: u64,
    burn_in: usize,
    m: usize,
) -> Result<Vec<DMatrix<f64>>> {
    match method {
        Method::Fcs => {
            let visit = VisitSequence::from_names(visit, data)?;
            fcs::fcs_impute(data, &prior.conditionals()?, &visit, seed, replication, burn_in, m)
        }
        Method::Jm => {
            let niw = prior.joint()?;
            (0..m as u64)
                .into_par_iter()
                .map(|c| {
                    let mut rng = seed.stream(replication, JM_CHAIN_BASE + c);
                    jm::jm_impute(data, niw, &mut rng, burn_in, 1, 1).map(|mut v| v.remove(0))
                })
                .collect()
        }
        Method::Both => Err(Error::InvalidParameter("choose a single imputation method".into())),
    }
}

/// Sample mean of column `j` and its squared standard error for each dataset.
pub fn mean_estimates(completed: &[DMatrix<f64>], j: usize) -> Vec<(f64, f64)> {
    completed
        .iter()
        .map(|c| {
            let col = c.column(j);
            let n = col.len() as f64;
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var / n)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub method: String,
    pub incomplete_rows: usize,
    pub qbar: f64,
    pub ubar: f64,
    pub b: f64,
    pub t_var: f64,
    pub df: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub truth: f64,
    #[serde(flatten)]
    pub summary: EvalSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rows: Vec<ReplicationRow>,
    pub summaries: Vec<MethodSummary>,
    pub failures: Vec<Failure>,
}

fn one_replication(cfg: &ExperimentConfig, rep: usize, target: usize, truth: f64) -> Result<Vec<ReplicationRow>> {
    let data = cfg.simulate_replication(rep)?;
    let incomplete_rows = (0..data.n_rows()).filter(|&i| (0..data.n_cols()).any(|j| data.is_missing(i, j))).count();
    cfg.method
        .expand()
        .iter()
        .map(|&method| {
            let sets = impute(
                &data,
                &cfg.prior,
                method,
                &cfg.visit_sequence,
                RngSeed(cfg.seed),
                rep as u64,
                cfg.burn_in,
                cfg.m_imputations,
            )?;
            let p: PooledEstimate = analysis::pool(&mean_estimates(&sets, target))?;
            Ok(ReplicationRow {
                replication: rep,
                method: method.label().to_string(),
                incomplete_rows,
                qbar: p.qbar,
                ubar: p.ubar,
                b: p.b,
                t_var: p.t_var,
                df: p.df,
                ci_low: p.ci_low,
                ci_high: p.ci_high,
                covered: p.ci_low <= truth && truth <= p.ci_high,
            })
        })
        .collect()
}

fn split_failures<T>(outcomes: Vec<Result<T>>, what: &str) -> (Vec<T>, Vec<Failure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (replication, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("{what} replication {replication} excluded: {e}");
                failures.push(Failure { replication, error: e.to_string() });
            }
        }
    }
    (ok, failures)
}

fn check_failure_rate(cfg: &ExperimentConfig, n_failed: usize) -> Result<()> {
    if n_failed as f64 > cfg.max_failure_rate * cfg.n_replications as f64 {
        return Err(Error::Degenerate(format!(
            "{n_failed} of {} replications failed (limit {:.1}%)",
            cfg.n_replications,
            100.0 * cfg.max_failure_rate
        )));
    }
    Ok(())
}

/// generate → ampute → impute → pool, for every replication, then evaluate.
pub fn coverage_study(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let target = cfg.column(&cfg.target)?;
    let truth = cfg.population_mean[target];
    let outcomes: Vec<Result<Vec<ReplicationRow>>> = cfg.pool()?.install(|| {
        (0..cfg.n_replications)
            .into_par_iter()
            .map(|rep| one_replication(cfg, rep, target, truth))
            .collect()
    });
    let (ok, failures) = split_failures(outcomes, "coverage");
    let rows: Vec<ReplicationRow> = ok.into_iter().flatten().collect();
    let mut summaries = Vec::new();
    for &method in cfg.method.expand() {
        let pooled: Vec<PooledEstimate> = rows
            .iter()
            .filter(|r| r.method == method.label())
            .map(|r| PooledEstimate {
                m: cfg.m_imputations,
                qbar: r.qbar,
                ubar: r.ubar,
                b: r.b,
                t_var: r.t_var,
                df: r.df,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
            })
            .collect();
        if !pooled.is_empty() {
            summaries.push(MethodSummary {
                method: method.label().to_string(),
                truth,
                summary: analysis::evaluate(&pooled, truth)?,
            });
        }
    }
    Ok(CoverageReport { rows, summaries, failures })
}

/// Provenance written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub git_describe: String,
    pub wall_clock_seconds: f64,
    pub n_replications: usize,
    pub n_failed: usize,
    pub failures: Vec<Failure>,
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn finish(cfg: &ExperimentConfig, command: &str, started: Instant, failures: &[Failure]) -> Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        seed: cfg.seed,
        git_describe: git_describe(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        n_replications: cfg.n_replications,
        n_failed: failures.len(),
        failures: failures.to_vec(),
    };
    write_json(&cfg.output_dir.join("manifest.json"), &manifest)?;
    check_failure_rate(cfg, failures.len())
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("config.json"), cfg)
}

/// [`coverage_study`] plus `config.json`, `replications.csv`,
/// `summary.json` and `manifest.json`.
pub fn run_coverage_study(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    let started = Instant::now();
    cfg.validate()?;
    prepare_output(cfg)?;
    let report = coverage_study(cfg)?;
    write_csv_rows(&cfg.output_dir.join("replications.csv"), &report.rows)?;
    write_json(&cfg.output_dir.join("summary.json"), &report.summaries)?;
    finish(cfg, "coverage-study", started, &report.failures)?;
    Ok(report)
}

impl ExperimentConfig {
    pub fn order_effect_design(&self) -> Result<OrderEffectDesign> {
        if self.visit_sequence.len() < 2 {
            return Err(Error::InvalidParameter("order-effect study needs at least two visited columns".into()));
        }
        Ok(OrderEffectDesign {
            population: self.population()?,
            column_names: self.column_names.clone(),
            n_cases: self.n_cases,
            n_replications: self.n_replications,
            amputation: self.amputation_spec()?,
            priors: self.prior.conditionals()?,
            visit: self.visit_sequence.clone(),
            response: self.response.clone(),
            coefficient: self.coefficient.clone(),
            after: (self.visit_sequence[0].clone(), self.visit_sequence[1].clone()),
            burn_in: self.burn_in,
            kept: self.order_effect_iters,
            n_batches: self.n_batches,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OrderEffectRow {
    replication: usize,
    mean_diff: f64,
    se: f64,
    ci_low: f64,
    ci_high: f64,
    excludes_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OrderEffectSummary {
    n_replications: usize,
    n_completed: usize,
    n_excluding_zero: usize,
    exclusion_fraction: f64,
    after: (String, String),
    n_batches: usize,
    kept_iterations: usize,
}

pub fn order_effect(cfg: &ExperimentConfig) -> Result<OrderEffectStudy> {
    cfg.validate()?;
    let design = cfg.order_effect_design()?;
    cfg.pool()?.install(|| analysis::order_effect_experiment(RngSeed(cfg.seed), &design))
}

/// [`order_effect`] plus `order_effect.csv`, `order_effect_summary.json`
/// and the manifest.
pub fn run_order_effect(cfg: &ExperimentConfig) -> Result<OrderEffectStudy> {
    let started = Instant::now();
    cfg.validate()?;
    prepare_output(cfg)?;
    let study = order_effect(cfg)?;
    let rows: Vec<OrderEffectRow> = study
        .replications
        .iter()
        .map(|r| OrderEffectRow {
            replication: r.replication,
            mean_diff: r.result.mean_diff,
            se: r.result.se,
            ci_low: r.result.ci_low,
            ci_high: r.result.ci_high,
            excludes_zero: r.result.excludes_zero,
        })
        .collect();
    write_csv_rows(&cfg.output_dir.join("order_effect.csv"), &rows)?;
    let design = cfg.order_effect_design()?;
    write_json(
        &cfg.output_dir.join("order_effect_summary.json"),
        &OrderEffectSummary {
            n_replications: cfg.n_replications,
            n_completed: rows.len(),
            n_excluding_zero: rows.iter().filter(|r| r.excludes_zero).count(),
            exclusion_fraction: study.exclusion_fraction,
            after: design.after,
            n_batches: cfg.n_batches,
            kept_iterations: cfg.order_effect_iters,
        },
    )?;
    let failures: Vec<Failure> =
        study.failures.iter().map(|(r, e)| Failure { replication: *r, error: e.clone() }).collect();
    finish(cfg, "order-effect", started, &failures)?;
    Ok(study)
}

/// Posterior draws of the slope of `coefficient` in the regression of
/// `response` on the other variables, as the functional of the joint-model `θ`.
#[allow(clippy::too_many_arguments)]
pub fn jm_coefficient_draws<R: Rng + ?Sized>(
    data: &IncompleteData,
    prior: &NiwPrior,
    rng: &mut R,
    burn_in: usize,
    n_draws: usize,
    response: usize,
    coefficient: usize,
) -> Result<Vec<f64>> {
    let k = slope_index(data.n_cols(), response, coefficient)?;
    let mut state = JmState::initialize(data, prior, rng)?;
    let mut out = Vec::with_capacity(n_draws);
    for it in 0..burn_in + n_draws {
        state = jm::jm_gibbs_step(state, data, prior, rng)?;
        if it >= burn_in {
            let reg = gaussian::to_regression(&gaussian::partition(&state.params, response)?)?;
            out.push(reg.beta[k]);
        }
    }
    Ok(out)
}

/// The same slope as drawn by the FCS update of `response`.
#[allow(clippy::too_many_arguments)]
pub fn fcs_coefficient_draws<R: Rng + ?Sized>(
    data: &IncompleteData,
    priors: &[NigPrior],
    visit: &VisitSequence,
    rng: &mut R,
    burn_in: usize,
    n_draws: usize,
    response: usize,
    coefficient: usize,
) -> Result<Vec<f64>> {
    let k = slope_index(data.n_cols(), response, coefficient)?;
    if !visit.order().contains(&response) {
        return Err(Error::Degenerate("the response column has no missing cells, so FCS never redraws it".into()));
    }
    let draws = std::sync::Mutex::new(Vec::with_capacity(n_draws));
    let hook = |e: &TraceEvent<'_>| {
        if e.iteration >= burn_in && e.column == response {
            draws.lock().unwrap().push(e.regression.beta[k]);
        }
    };
    fcs::fcs_iterate(data, priors, visit, rng, burn_in + n_draws, 0, Some(&hook))?;
    Ok(draws.into_inner().unwrap())
}

fn slope_index(p: usize, response: usize, coefficient: usize) -> Result<usize> {
    crate::linalg::others(p, response)
        .iter()
        .position(|&c| c == coefficient)
        .ok_or_else(|| Error::InvalidParameter("coefficient column must differ from the response".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub comparison: PosteriorComparison,
    pub jm_draws: Vec<f64>,
    pub fcs_draws: Vec<f64>,
}

/// Both samplers on replication 0's data, `posterior_draws` kept draws each.
pub fn posterior_comparison(cfg: &ExperimentConfig) -> Result<PosteriorReport> {
    cfg.validate()?;
    let data = cfg.simulate_replication(0)?;
    let (resp, coef) = (cfg.column(&cfg.response)?, cfg.column(&cfg.coefficient)?);
    let seed = RngSeed(cfg.seed);
    let jm_draws = jm_coefficient_draws(
        &data,
        cfg.prior.joint()?,
        &mut seed.stream(0, JM_CHAIN_BASE),
        cfg.burn_in,
        cfg.posterior_draws,
        resp,
        coef,
    )?;
    let visit = VisitSequence::from_names(&cfg.visit_sequence, &data)?;
    let fcs_draws = fcs_coefficient_draws(
        &data,
        &cfg.prior.conditionals()?,
        &visit,
        &mut seed.stream(0, 0),
        cfg.burn_in,
        cfg.posterior_draws,
        resp,
        coef,
    )?;
    let comparison = analysis::posterior_compare(&jm_draws, &fcs_draws)?;
    Ok(PosteriorReport { comparison, jm_draws, fcs_draws })
}

#[derive(Serialize)]
struct QqRow {
    percentile: u32,
    jm: f64,
    fcs: f64,
}

#[derive(Serialize)]
struct DrawRow {
    draw: usize,
    jm: f64,
    fcs: f64,
}

/// [`posterior_comparison`] plus `qq_pairs.csv`, `draws.csv`, `ks.json`
/// and the manifest.
pub fn run_posterior_compare(cfg: &ExperimentConfig) -> Result<PosteriorReport> {
    let started = Instant::now();
    cfg.validate()?;
    if cfg.method != Method::Both {
        return Err(Error::InvalidParameter("posterior comparison needs method \"both\"".into()));
    }
    prepare_output(cfg)?;
    let report = posterior_comparison(cfg)?;
    let qq: Vec<QqRow> = report
        .comparison
        .qq_pairs
        .iter()
        .map(|&(percentile, jm, fcs)| QqRow { percentile, jm, fcs })
        .collect();
    write_csv_rows(&cfg.output_dir.join("qq_pairs.csv"), &qq)?;
    let draws: Vec<DrawRow> = report
        .jm_draws
        .iter()
        .zip(&report.fcs_draws)
        .enumerate()
        .map(|(draw, (&jm, &fcs))| DrawRow { draw, jm, fcs })
        .collect();
    write_csv_rows(&cfg.output_dir.join("draws.csv"), &draws)?;
    write_json(
        &cfg.output_dir.join("ks.json"),
        &serde_json::json!({
            "ks_statistic": report.comparison.ks_statistic,
            "n_draws_per_sampler": cfg.posterior_draws,
            "response": cfg.response,
            "coefficient": cfg.coefficient,
        }),
    )?;
    finish(cfg, "posterior-compare", started, &[])?;
    Ok(report)
}

/// Decomposed priors for every column (or only `column`) of the joint
/// prior in `input`, with the conventions and a hash of the source.
pub fn transform_prior(input: &str, column: Option<usize>) -> Result<serde_json::Value> {
    let joint: NiwPrior = serde_json::from_str(input)?;
    let columns: Vec<usize> = match column {
        Some(j) if j >= joint.dim() => return Err(Error::IndexOutOfRange { index: j, dim: joint.dim() }),
        Some(j) => vec![j],
        None => (0..joint.dim()).collect(),
    };
    let mut out = Vec::with_capacity(columns.len());
    for j in columns {
        let (cond, _) = prior::decompose(&joint, j)?;
        let (loc, scale, df) = prior::marginal_t_params(&cond);
        out.push(serde_json::json!({
            "column": j,
            "prior": cond,
            "sigma2_inverse_gamma": { "shape": cond.ig_shape(), "scale": cond.ig_scale() },
            "coef_cov_at_sigma_scale": prior::matrix_to_rows(&cond.coef_cov_at_sigma_scale()),
            "coef_marginal_t": {
                "location": loc.iter().copied().collect::<Vec<_>>(),
                "scale": prior::matrix_to_rows(&scale),
                "df": df,
            },
        }));
    }
    Ok(serde_json::json!({
        "inverse_wishart_convention":
            "W^-1(df, S): density proportional to |Σ|^{-(df+p+1)/2} exp(-tr(S Σ^-1)/2)",
        "scale_convention": joint.convention(),
        "trace_matrix": match joint.convention() {
            prior::ScaleConvention::Precision => "S = inverse(lambda)",
            prior::ScaleConvention::Covariance => "S = lambda",
        },
        "source_sha256": hex::encode(Sha256::digest(input.as_bytes())),
        "joint": joint,
        "conditionals": out,
    }))
}
