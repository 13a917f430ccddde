//! Rubin's-rules pooling, frequentist evaluation of repeated imputations,
//! batch-means intervals for chain traces and two-sample distribution checks.

use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::amputation::{self, AmputationSpec};
use crate::error::{Error, Result};
use crate::fcs::{self, TraceEvent, VisitSequence};
use crate::gaussian::GaussianParams;
use crate::linalg;
use crate::prior::NigPrior;
use crate::samplers::{RngSeed, DATA_CHAIN};

pub const NOMINAL_LEVEL: f64 = 0.95;

/// Upper `p` quantile of Student's t; `df = ∞` gives the normal quantile.
pub fn t_quantile(df: f64, p: f64) -> f64 {
    if df.is_infinite() {
        Normal::standard().inverse_cdf(p)
    } else {
        StudentsT::new(0.0, 1.0, df)
            .expect("positive df")
            .inverse_cdf(p)
    }
}

/// Rubin's-rules summary of `m` completed-data analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub m: usize,
    pub qbar: f64,
    pub ubar: f64,
    pub b: f64,
    pub t_var: f64,
    pub df: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Pools `(point, variance)` pairs from `m >= 2` imputations.
pub fn pool(estimates: &[(f64, f64)]) -> Result<PooledEstimate> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!("pooling needs at least 2 imputations, got {m}")));
    }
    if estimates.iter().any(|&(q, u)| !q.is_finite() || !(u > 0.0) || !u.is_finite()) {
        return Err(Error::InvalidParameter("variances must be positive and estimates finite".into()));
    }
    let mf = m as f64;
    let qbar = estimates.iter().map(|e| e.0).sum::<f64>() / mf;
    let ubar = estimates.iter().map(|e| e.1).sum::<f64>() / mf;
    let b = estimates.iter().map(|e| (e.0 - qbar).powi(2)).sum::<f64>() / (mf - 1.0);
    let inflated = (1.0 + 1.0 / mf) * b;
    let t_var = ubar + inflated;
    let df = if b > 0.0 {
        (mf - 1.0) * (1.0 + ubar / inflated).powi(2)
    } else {
        f64::INFINITY
    };
    let half = t_quantile(df, 0.5 + NOMINAL_LEVEL / 2.0) * t_var.sqrt();
    Ok(PooledEstimate { m, qbar, ubar, b, t_var, df, ci_low: qbar - half, ci_high: qbar + half })
}

/// Bias, coverage and mean interval width over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub bias: f64,
    pub coverage: f64,
    pub ci_width: f64,
    pub n_reps: usize,
}

pub fn evaluate(results: &[PooledEstimate], truth: f64) -> Result<EvalSummary> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("no replications to evaluate".into()));
    }
    let n = results.len() as f64;
    let bias = results.iter().map(|r| r.qbar).sum::<f64>() / n - truth;
    let covered = results
        .iter()
        .filter(|r| r.ci_low <= truth && truth <= r.ci_high)
        .count();
    let ci_width = results.iter().map(|r| r.ci_high - r.ci_low).sum::<f64>() / n;
    Ok(EvalSummary { bias, coverage: covered as f64 / n, ci_width, n_reps: results.len() })
}

/// Batch-means interval for the mean of a chain trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectResult {
    /// Trace mean minus the null value.
    pub mean_diff: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub excludes_zero: bool,
    pub n_batches: usize,
}

/// Splits `trace` into `n_batches` contiguous equal batches and builds a
/// t interval from the spread of the batch means.
pub fn batch_means_ci(trace: &[f64], n_batches: usize, mean_null: f64) -> Result<OrderEffectResult> {
    if n_batches < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 batches, got {n_batches}")));
    }
    if trace.is_empty() || !trace.len().is_multiple_of(n_batches) {
        return Err(Error::InvalidParameter(format!(
            "trace length {} is not a positive multiple of {n_batches}",
            trace.len()
        )));
    }
    let len = trace.len() / n_batches;
    let means: Vec<f64> = trace
        .chunks_exact(len)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let k = n_batches as f64;
    let grand = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    if !(se > 0.0) {
        return Err(Error::Degenerate("batch means are identical; standard error is zero".into()));
    }
    let mean_diff = grand - mean_null;
    let half = t_quantile(k - 1.0, 0.5 + NOMINAL_LEVEL / 2.0) * se;
    let (ci_low, ci_high) = (mean_diff - half, mean_diff + half);
    Ok(OrderEffectResult {
        mean_diff,
        se,
        ci_low,
        ci_high,
        excludes_zero: !(ci_low <= 0.0 && 0.0 <= ci_high),
        n_batches,
    })
}

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS statistic and matched quantiles at percentiles 1..=99.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorComparison {
    pub ks_statistic: f64,
    /// `(percentile, quantile of first sample, quantile of second sample)`
    pub qq_pairs: Vec<(u32, f64, f64)>,
}

pub fn posterior_compare(draws_jm: &[f64], draws_fcs: &[f64]) -> Result<PosteriorComparison> {
    if draws_jm.len() < 100 || draws_fcs.len() < 100 {
        return Err(Error::InvalidParameter("posterior comparison needs at least 100 draws per side".into()));
    }
    let (a, b) = (sorted(draws_jm), sorted(draws_fcs));
    let qq_pairs = (1..=99)
        .map(|pct| {
            let p = pct as f64 / 100.0;
            (pct, quantile_sorted(&a, p), quantile_sorted(&b, p))
        })
        .collect();
    Ok(PosteriorComparison { ks_statistic: ks_two_sample(&a, &b), qq_pairs })
}

/// Least-squares coefficients of `y` on `x` (no intercept added).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() || x.nrows() < x.ncols() {
        return Err(Error::Dimension(format!("OLS with {} rows and {} columns", x.nrows(), x.ncols())));
    }
    let ch = linalg::cholesky(&(x.transpose() * x), "XᵀX")?;
    Ok(ch.solve(&(x.transpose() * y)))
}

/// OLS slope of `coefficient` in the regression of `response` on every
/// other column (plus intercept) of `completed`.
pub fn ols_slope(completed: &DMatrix<f64>, response: usize, coefficient: usize) -> Result<f64> {
    let rows: Vec<usize> = (0..completed.nrows()).collect();
    let x = fcs::design_matrix(completed, response, &rows);
    let y = completed.column(response).into_owned();
    let b = ols(&x, &y)?;
    let k = linalg::others(completed.ncols(), response)
        .iter()
        .position(|&c| c == coefficient)
        .ok_or_else(|| Error::InvalidParameter("coefficient column equals the response".into()))?;
    Ok(b[k + 1])
}

/// Simulation design for the visit-order experiment.
#[derive(Debug, Clone)]
pub struct OrderEffectDesign {
    pub population: GaussianParams,
    pub column_names: Vec<String>,
    pub n_cases: usize,
    pub n_replications: usize,
    pub amputation: AmputationSpec,
    pub priors: Vec<NigPrior>,
    pub visit: Vec<String>,
    /// Regression `response ~ everything else`; the slope of `coefficient`
    /// is traced.
    pub response: String,
    pub coefficient: String,
    /// The slope is recorded right after each of these two columns is updated.
    pub after: (String, String),
    pub burn_in: usize,
    pub kept: usize,
    pub n_batches: usize,
}

impl OrderEffectDesign {
    /// The default study: 200 cases from the simulation population, half
    /// the rows missing one cell (MCAR), visit order `z, x, y`, slope of
    /// `x` in `y ~ x + z` traced after the `z` and `x` updates, 10 burn-in
    /// and 1000 kept sweeps in 20 batches.
    pub fn simulation(n_replications: usize) -> Self {
        let prior = crate::prior::NiwPrior::weakly_informative(3);
        let s = |v: &str| v.to_string();
        Self {
            population: amputation::simulation_population(),
            column_names: amputation::SIMULATION_COLUMNS.iter().map(|c| c.to_string()).collect(),
            n_cases: 200,
            n_replications,
            amputation: AmputationSpec::one_cell_per_row(amputation::Mechanism::Mcar, 0.5, 3)
                .expect("valid by construction"),
            priors: crate::prior::decompose_all(&prior).expect("valid by construction"),
            visit: vec![s("z"), s("x"), s("y")],
            response: s("y"),
            coefficient: s("x"),
            after: (s("z"), s("x")),
            burn_in: 10,
            kept: 1000,
            n_batches: 20,
        }
    }
}

/// One replication of the order-effect experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectReplication {
    pub replication: usize,
    pub result: OrderEffectResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectStudy {
    pub replications: Vec<OrderEffectReplication>,
    /// `(replication, error message)`
    pub failures: Vec<(usize, String)>,
    pub exclusion_fraction: f64,
}

/// Difference trace `slope after first − slope after second` of one chain.
pub fn order_effect_trace(design: &OrderEffectDesign, seed: RngSeed, replication: usize) -> Result<Vec<f64>> {
    let names = &design.column_names;
    let idx = |n: &str| {
        names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown column `{n}`")))
    };
    let (resp, coef) = (idx(&design.response)?, idx(&design.coefficient)?);
    let (first, second) = (idx(&design.after.0)?, idx(&design.after.1)?);
    let rep = replication as u64;
    let mut rng = seed.stream(rep, DATA_CHAIN);
    let complete = amputation::generate_complete(&mut rng, design.n_cases, &design.population)?;
    let data = amputation::ampute(&mut rng, &complete, names.clone(), &design.amputation)?;
    let visit = VisitSequence::from_names(&design.visit, &data)?;
    for c in [first, second] {
        if !visit.order().contains(&c) {
            return Err(Error::Degenerate(format!("column `{}` has no missing cells to update", names[c])));
        }
    }
    let total = design.burn_in + design.kept;
    let slots = Mutex::new(vec![[f64::NAN; 2]; design.kept]);
    let failure = Mutex::new(None);
    let hook = |e: &TraceEvent<'_>| {
        if e.iteration < design.burn_in || (e.column != first && e.column != second) {
            return;
        }
        let k = usize::from(e.column == second);
        match ols_slope(e.completed, resp, coef) {
            Ok(b) => slots.lock().unwrap()[e.iteration - design.burn_in][k] = b,
            Err(err) => {
                failure.lock().unwrap().get_or_insert(err);
            }
        }
    };
    fcs::fcs_iterate(&data, &design.priors, &visit, &mut seed.stream(rep, 0), total, 0, Some(&hook))?;
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    Ok(slots.into_inner().unwrap().iter().map(|s| s[0] - s[1]).collect())
}

/// Runs every replication (in parallel, merged by index) and reports the
/// fraction of batch-means intervals that exclude zero.
pub fn order_effect_experiment(seed: RngSeed, design: &OrderEffectDesign) -> Result<OrderEffectStudy> {
    if design.n_replications == 0 || design.kept == 0 {
        return Err(Error::InvalidParameter("order-effect study needs replications and kept iterations".into()));
    }
    let outcomes: Vec<Result<OrderEffectResult>> = (0..design.n_replications)
        .into_par_iter()
        .map(|r| batch_means_ci(&order_effect_trace(design, seed, r)?, design.n_batches, 0.0))
        .collect();
    let mut replications = Vec::new();
    let mut failures = Vec::new();
    for (replication, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(result) => replications.push(OrderEffectReplication { replication, result }),
            Err(e) => {
                log::warn!("order-effect replication {replication} failed: {e}");
                failures.push((replication, e.to_string()));
            }
        }
    }
    let excluded = replications.iter().filter(|r| r.result.excludes_zero).count();
    let exclusion_fraction = if replications.is_empty() { f64::NAN } else { excluded as f64 / replications.len() as f64 };
    Ok(OrderEffectStudy { replications, failures, exclusion_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngSeed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn t_quantiles_match_tables() {
        let table = [
            (1.0, 12.706204736174707),
            (4.0, 2.7764451051977934),
            (19.0, 2.0930240544082634),
            (30.0, 2.0422724563012373),
            (120.0, 1.9799304050824413),
        ];
        for (df, want) in table {
            let got = t_quantile(df, 0.975);
            assert!((got - want).abs() < 1e-10 * want, "df {df}: {got} vs {want}");
        }
        assert!((t_quantile(f64::INFINITY, 0.975) - 1.959963984540054).abs() < 1e-12);
    }

    #[test]
    fn pool_identical_imputations() {
        let p = pool(&[(3.0, 0.04), (3.0, 0.04), (3.0, 0.04)]).unwrap();
        assert_eq!(p.b, 0.0);
        assert_eq!(p.t_var, p.ubar);
        assert!(p.df.is_infinite());
        assert_relative_eq!(p.ci_high - p.qbar, 1.959963984540054 * 0.2, epsilon = 1e-12);
    }

    #[test]
    fn pool_two_imputations_by_hand() {
        let p = pool(&[(0.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!((p.qbar, p.ubar, p.b, p.t_var), (1.0, 1.0, 2.0, 4.0));
        assert_relative_eq!(p.df, 16.0 / 9.0, epsilon = 1e-14);
        assert!(p.ci_low < p.ci_high);
    }

    #[test]
    fn pool_errors() {
        assert!(pool(&[(1.0, 1.0)]).is_err());
        assert!(pool(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn evaluate_trivial() {
        let r = PooledEstimate { m: 5, qbar: 4.0, ubar: 0.1, b: 0.0, t_var: 0.1, df: 10.0, ci_low: 3.0, ci_high: 5.0 };
        let s = evaluate(&[r, r, r], 4.0).unwrap();
        assert_eq!((s.bias, s.coverage, s.ci_width, s.n_reps), (0.0, 1.0, 2.0, 3));
        assert!(evaluate(&[], 4.0).is_err());
    }

    proptest! {
        #[test]
        fn pool_is_permutation_invariant(
            est in prop::collection::vec((-5.0..5.0_f64, 0.01..2.0_f64), 2..8),
            rot in 0usize..8,
        ) {
            let a = pool(&est).unwrap();
            let mut shuffled = est.clone();
            shuffled.rotate_left(rot % est.len());
            shuffled.reverse();
            let b = pool(&shuffled).unwrap();
            prop_assert!((a.qbar - b.qbar).abs() < 1e-12);
            prop_assert!((a.t_var - b.t_var).abs() < 1e-12);
            prop_assert!((a.ci_low - b.ci_low).abs() < 1e-9);
            prop_assert!(a.t_var >= a.ubar && a.df > 0.0 && a.ci_low < a.ci_high);
        }

        #[test]
        fn coverage_drops_when_intervals_shrink(
            centers in prop::collection::vec(-1.0..1.0_f64, 1..30),
            widths in prop::collection::vec(0.01..2.0_f64, 30),
        ) {
            let rs: Vec<PooledEstimate> = centers.iter().zip(&widths).map(|(&c, &w)| PooledEstimate {
                m: 5, qbar: c, ubar: 1.0, b: 0.1, t_var: 1.1, df: 20.0, ci_low: c - w, ci_high: c + w,
            }).collect();
            let half: Vec<PooledEstimate> = rs.iter().map(|r| {
                let h = (r.ci_high - r.ci_low) / 4.0;
                PooledEstimate { ci_low: r.qbar - h, ci_high: r.qbar + h, ..*r }
            }).collect();
            prop_assert!(evaluate(&half, 0.0).unwrap().coverage <= evaluate(&rs, 0.0).unwrap().coverage);
        }

        #[test]
        fn qq_pairs_are_monotone(
            a in prop::collection::vec(-10.0..10.0_f64, 100..300),
            b in prop::collection::vec(-10.0..10.0_f64, 100..300),
        ) {
            let c = posterior_compare(&a, &b).unwrap();
            for w in c.qq_pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1 && w[0].2 <= w[1].2);
            }
        }

        #[test]
        fn ks_matches_brute_force(
            a in prop::collection::vec(-3i32..3, 1..40),
            b in prop::collection::vec(-3i32..3, 1..40),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let brute = a.iter().chain(&b).map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs()).fold(0.0, f64::max);
            prop_assert!((ks_two_sample(&a, &b) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn batch_means_is_calibrated_on_iid_traces() {
        let mut rng = RngSeed(21).rng();
        let trials = 2000;
        let mut covered = 0;
        for _ in 0..trials {
            let trace: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let r = batch_means_ci(&trace, 20, 0.0).unwrap();
            assert_eq!(r.excludes_zero, !(r.ci_low <= 0.0 && 0.0 <= r.ci_high));
            if !r.excludes_zero {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
    }

    #[test]
    fn batch_means_degenerate_inputs() {
        assert!(matches!(batch_means_ci(&[1.0; 1000], 20, 0.0), Err(Error::Degenerate(_))));
        assert!(batch_means_ci(&[1.0; 999], 20, 0.0).is_err());
        assert!(batch_means_ci(&[1.0; 1000], 1, 0.0).is_err());
    }

    #[test]
    fn batch_means_inflation_for_ar1() {
        // long-run / marginal variance of AR(1) is (1+ρ)/(1-ρ)
        let rho: f64 = 0.9;
        let expected = ((1.0 + rho) / (1.0 - rho)).sqrt();
        let mut rng = RngSeed(22).rng();
        let n = 10_000;
        let reps = 20;
        let mut ratio = 0.0;
        for _ in 0..reps {
            let mut x = rng.sample::<f64, _>(StandardNormal) / (1.0 - rho * rho).sqrt();
            let trace: Vec<f64> = (0..n)
                .map(|_| {
                    x = rho * x + rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect();
            let mean = trace.iter().sum::<f64>() / n as f64;
            let sd = (trace.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let naive = sd / (n as f64).sqrt();
            ratio += batch_means_ci(&trace, 20, 0.0).unwrap().se / naive;
        }
        ratio /= reps as f64;
        assert!((ratio - expected).abs() < 0.25 * expected, "{ratio} vs {expected}");
    }

    #[test]
    fn compare_identical_and_shifted() {
        let mut rng = RngSeed(23).rng();
        let a: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let same = posterior_compare(&a, &a).unwrap();
        assert_eq!(same.ks_statistic, 0.0);
        assert!(same.qq_pairs.iter().all(|&(_, x, y)| x == y));
        assert_eq!(same.qq_pairs.len(), 99);
        let b: Vec<f64> = (0..10_000).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let n = Normal::standard();
        let oracle = n.cdf(0.5) - n.cdf(-0.5);
        let ks = posterior_compare(&a, &b).unwrap().ks_statistic;
        assert!((ks - oracle).abs() < 0.02, "{ks} vs {oracle}");
        assert!(posterior_compare(&a[..50], &b).is_err());
    }

    #[test]
    fn ols_by_hand() {
        let x = DMatrix::from_row_slice(4, 2, &[1., 0., 1., 1., 1., 2., 1., 3.]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let b = ols(&x, &y).unwrap();
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 2.0, epsilon = 1e-12);
        assert!(ols(&DMatrix::from_element(3, 2, 1.0), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn ols_slope_picks_the_named_column() {
        // y = 2 + 3x - z exactly
        let c = DMatrix::from_fn(10, 3, |i, j| {
            let (x, z) = (i as f64, (i * i % 7) as f64);
            [x, 2.0 + 3.0 * x - z, z][j]
        });
        assert_relative_eq!(ols_slope(&c, 1, 0).unwrap(), 3.0, epsilon = 1e-10);
        assert_relative_eq!(ols_slope(&c, 1, 2).unwrap(), -1.0, epsilon = 1e-10);
        assert!(ols_slope(&c, 1, 1).is_err());
    }

    #[test]
    fn order_effect_smoke_run_is_deterministic() {
        let mut design = OrderEffectDesign::simulation(8);
        design.kept = 200;
        let a = order_effect_experiment(RngSeed(50), &design).unwrap();
        let b = order_effect_experiment(RngSeed(50), &design).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replications.len() + a.failures.len(), 8);
        assert!(a.failures.is_empty());
        assert!(a.replications.iter().all(|r| r.result.se > 0.0 && r.result.n_batches == 20));
        assert!((0.0..=1.0).contains(&a.exclusion_fraction));
    }

    #[test]
    fn order_effect_trace_has_one_entry_per_kept_sweep() {
        let mut design = OrderEffectDesign::simulation(1);
        design.kept = 60;
        let t = order_effect_trace(&design, RngSeed(51), 0).unwrap();
        assert_eq!(t.len(), 60);
        assert!(t.iter().all(|v| v.is_finite()));
        design.after = (String::from("z"), String::from("q"));
        assert!(order_effect_trace(&design, RngSeed(51), 0).is_err());
    }
}
