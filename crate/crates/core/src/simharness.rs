//! Monte-Carlo drivers for the six simulation models: size/power tables,
//! null histograms and change-point accuracy.
//!
//! Replication `k` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` on stream `k`, so results do not depend on
//! scheduling.

use crate::changepoint::{detect_change_point, window_statistic, H2Form, WindowPlan};
use crate::clt::{meanvar, CltMethod};
use crate::error::{invalid, Error, Result};
use crate::model::{
    fisher_eigenvalues, generate_two_sample, pencil_eigenvalues, sample_covariance, FisherEigs,
    MomentProfile, Population, RatioProfile, SigmaSpec, SpectrumH,
};
use crate::regress::{fit_mle, regression_tester, RegressionDesign};
use crate::spectral::SpectralFn;
use crate::spiketest::{check_alpha, SpikeTester};
use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::fmt::Write as _;

/// Simulation model number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ModelId {
    /// Conjugated spiked `Σ1 = U diag(10, 8, 8, 6, 1, …) U^T`, `Σ2 = I`.
    M1,
    /// Diagonal `Σ1 = diag(36, 25, 25, 16, 2, …, 2, 1, …, 1)`, `Σ2 = I`.
    M2,
    /// Regression with identity error covariance and five active regressors.
    M3,
    /// As model 3 with Toeplitz(0.9) errors.
    M4,
    /// Mean-shifted Gaussian sequence with a variance jump.
    M5,
    /// Five-factor sequence whose idiosyncratic covariance changes.
    M6,
}

impl TryFrom<u8> for ModelId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            1 => ModelId::M1,
            2 => ModelId::M2,
            3 => ModelId::M3,
            4 => ModelId::M4,
            5 => ModelId::M5,
            6 => ModelId::M6,
            other => return invalid(format!("unknown model {other}")),
        })
    }
}

impl From<ModelId> for u8 {
    fn from(m: ModelId) -> u8 {
        match m {
            ModelId::M1 => 1,
            ModelId::M2 => 2,
            ModelId::M3 => 3,
            ModelId::M4 => 4,
            ModelId::M5 => 5,
            ModelId::M6 => 6,
        }
    }
}

impl ModelId {
    pub fn is_fisher(&self) -> bool {
        matches!(self, ModelId::M1 | ModelId::M2)
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, ModelId::M3 | ModelId::M4)
    }

    pub fn is_changepoint(&self) -> bool {
        matches!(self, ModelId::M5 | ModelId::M6)
    }
}

pub const MODEL1_SPIKES: [f64; 4] = [10.0, 8.0, 8.0, 6.0];
pub const MODEL2_SPIKES: [f64; 4] = [36.0, 25.0, 25.0, 16.0];

/// Generator of a per-replication random stream.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn default_f() -> String {
    "log".into()
}

/// Size/power experiment for models 1–4.
///
/// For models 1–2, `c1 = p/n1` and `c2 = p/n2`. For models 3–4, `c1 = p/r1`,
/// `c2 = p/(n - r)` and the nuisance block has `r2` regressors (default
/// `r1 / 4`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelId,
    pub population: Population,
    pub p: usize,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub r2: Option<usize>,
    pub m0_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Spectral function for models 1–2 (`x` or `log`).
    #[serde(default = "default_f")]
    pub f: String,
    /// Mean/variance method for models 1–2; defaults to the closed form when
    /// `H = δ1` and the general contour otherwise.
    #[serde(default)]
    pub method: Option<CltMethod>,
}

impl ExperimentSpec {
    pub fn new(model: ModelId, p: usize, c1: f64, c2: f64, m0_grid: Vec<usize>, replications: usize, seed: u64) -> Self {
        ExperimentSpec {
            model,
            population: Population::Gaussian,
            p,
            c1,
            c2,
            r2: None,
            m0_grid,
            replications,
            seed,
            alpha: 0.05,
            f: default_f(),
            method: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.is_changepoint() {
            return invalid("models 5 and 6 are run through ChangePointSpec");
        }
        if self.replications == 0 {
            return invalid("replication count must be at least 1");
        }
        if self.m0_grid.is_empty() {
            return invalid("M0 grid is empty");
        }
        check_alpha(self.alpha)?;
        if self.model == ModelId::M2 && self.p % 2 == 1 {
            return invalid("model 2 needs even p");
        }
        if self.p < 10 {
            return invalid("models need p >= 10");
        }
        self.ratios()?;
        Ok(())
    }

    /// Ratio profile of the eigenvalue problem (for regression `n1 = r1`,
    /// `n2 = n - r`).
    pub fn ratios(&self) -> Result<RatioProfile> {
        RatioProfile::from_ratios(self.p, self.c1, self.c2)
    }

    /// `(n, r, r1)` of the regression models.
    pub fn regression_dims(&self) -> Result<(usize, usize, usize)> {
        let rp = self.ratios()?;
        let r1 = rp.n1;
        let r2 = self.r2.unwrap_or(r1 / 4);
        let r = r1 + r2;
        Ok((rp.n2 + r, r, r1))
    }

    pub fn true_m0(&self) -> usize {
        if self.model.is_regression() {
            5
        } else {
            4
        }
    }

    pub fn scenario(&self) -> String {
        format!(
            "model{}-{}-p{}-c{}-{}",
            u8::from(self.model),
            match self.population {
                Population::Gaussian => "gaussian",
                Population::Gamma => "gamma",
            },
            self.p,
            self.c1,
            self.c2
        )
    }

    /// Non-spiked finite-p spectrum of the model.
    pub fn bulk_spectrum(&self) -> Result<SpectrumH> {
        match self.model {
            ModelId::M2 => {
                let p = self.p as f64;
                let rest = p - 4.0;
                SpectrumH::new(vec![(1.0, (p / 2.0) / rest), (2.0, (p / 2.0 - 4.0) / rest)])
            }
            _ => Ok(SpectrumH::delta1()),
        }
    }

    /// Limiting spectrum used for the mean and variance terms.
    pub fn limit_spectrum(&self) -> Result<SpectrumH> {
        match self.model {
            ModelId::M2 => SpectrumH::new(vec![(1.0, 0.5), (2.0, 0.5)]),
            _ => Ok(SpectrumH::delta1()),
        }
    }

    /// Tester shared by all replications.
    pub fn tester(&self) -> Result<SpikeTester> {
        let ratios = self.ratios()?;
        if self.model.is_regression() {
            return regression_tester(&ratios, self.alpha);
        }
        let f: SpectralFn = self.f.parse()?;
        let limit = self.limit_spectrum()?;
        let method = self.method.unwrap_or(if limit.is_delta1() {
            CltMethod::ClosedForm
        } else {
            CltMethod::ContourGeneral
        });
        let m = MomentProfile::for_population(self.population);
        let mv = meanvar(method, &f, ratios.c_n1, ratios.c_n2, &limit, &m)?;
        SpikeTester::with_meanvar(f, self.bulk_spectrum()?, self.alpha, ratios, mv)
    }

    /// Eigenvalues of one replication.
    pub fn sample_eigenvalues(&self, rep: u64) -> Result<FisherEigs> {
        let mut rng = replication_rng(self.seed, rep);
        let ratios = self.ratios()?;
        let p = self.p;
        match self.model {
            ModelId::M1 | ModelId::M2 => {
                let sigma1 = if self.model == ModelId::M1 {
                    SigmaSpec::Conjugated(SigmaSpec::spiked_diagonal(p, &MODEL1_SPIKES, 1.0))
                } else {
                    let mut d = SigmaSpec::spiked_diagonal(p, &MODEL2_SPIKES, 1.0);
                    for v in d.iter_mut().take(p / 2).skip(4) {
                        *v = 2.0;
                    }
                    SigmaSpec::Diagonal(d)
                };
                let (x, y) = generate_two_sample(&sigma1, &SigmaSpec::Identity, &ratios, self.population, &mut rng)?;
                let s1 = sample_covariance(&x, false)?;
                let s2 = sample_covariance(&y, false)?;
                fisher_eigenvalues(&s1, &s2, ratios.n1, ratios.n2)
            }
            ModelId::M3 | ModelId::M4 => {
                let design = self.regression_sample(&mut rng)?;
                let fac = fit_mle(&design)?;
                FisherEigs::new(pencil_eigenvalues(&fac.h, &fac.g)?, ratios.n1, ratios.n2)
            }
            _ => invalid("not a size/power model"),
        }
    }

    fn regression_sample(&self, rng: &mut ChaCha8Rng) -> Result<RegressionDesign> {
        let (n, r, r1) = self.regression_dims()?;
        let p = self.p;
        let w = Population::Gaussian.matrix(r, n, rng);
        // Only the first five columns of the coefficient matrix are non-zero.
        let active = Population::Gaussian.matrix(p, 5, rng);
        let v = match self.model {
            ModelId::M4 => SigmaSpec::Toeplitz { rho: 0.9, scale: 1.0 },
            _ => SigmaSpec::Identity,
        };
        let e = self.population.matrix(p, n, rng);
        let e = match v.sqrt(p, rng)? {
            Some(root) => root * e,
            None => e,
        };
        RegressionDesign::new(&active * w.rows(0, 5) + e, w, r1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePowerRow {
    pub scenario: String,
    pub m0: usize,
    pub replications: usize,
    pub rejections: usize,
    pub frequency: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePowerTable {
    pub rows: Vec<SizePowerRow>,
    pub failed: usize,
}

impl SizePowerTable {
    pub fn frequency(&self, m0: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.m0 == m0).map(|r| r.frequency)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,m0,replications,rejections,frequency,std_error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.scenario, r.m0, r.replications, r.rejections, r.frequency, r.std_error
            );
        }
        out
    }
}

fn check_failures(failed: usize, total: usize, first: Option<String>) -> Result<()> {
    if failed * 100 > total {
        return Err(Error::Replications {
            failed,
            total,
            first: first.unwrap_or_default(),
        });
    }
    Ok(())
}

fn split_results<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut failed = 0;
    let mut first = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    check_failures(failed, total, first)?;
    Ok(ok)
}

/// Rejection frequencies at each `M0` of the grid.
pub fn run_size_power(spec: &ExperimentSpec) -> Result<SizePowerTable> {
    spec.validate()?;
    let tester = spec.tester()?;
    let results: Vec<Result<Vec<bool>>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let eigs = spec.sample_eigenvalues(rep)?;
            spec.m0_grid
                .iter()
                .map(|&m0| tester.test(&eigs, m0, None).map(|r| r.rejected()))
                .collect()
        })
        .collect();
    let total = results.len();
    let ok = split_results(results)?;
    let n = ok.len();
    let scenario = spec.scenario();
    let rows = spec
        .m0_grid
        .iter()
        .enumerate()
        .map(|(j, &m0)| {
            let rejections = ok.iter().filter(|r| r[j]).count();
            let frequency = rejections as f64 / n as f64;
            SizePowerRow {
                scenario: scenario.clone(),
                m0,
                replications: n,
                rejections,
                frequency,
                std_error: (frequency * (1.0 - frequency) / n as f64).sqrt(),
            }
        })
        .collect();
    Ok(SizePowerTable {
        rows,
        failed: total - n,
    })
}

/// Standardised statistics at the true `M0`, one per replication.
pub fn null_scores(spec: &ExperimentSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let tester = spec.tester()?;
    let m0 = spec.true_m0();
    let results: Vec<Result<f64>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|rep| Ok(tester.test(&spec.sample_eigenvalues(rep)?, m0, None)?.z_score))
        .collect();
    split_results(results)
}

/// Window statistics on independent stationary Gaussian windows with
/// `q11 = q12 = 2p`.
pub fn window_null_scores(p: usize, replications: usize, seed: u64, form: H2Form) -> Result<Vec<f64>> {
    if replications == 0 {
        return invalid("replication count must be at least 1");
    }
    let results: Vec<Result<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let g1 = Population::Gaussian.matrix(p, 2 * p, &mut rng);
            let g2 = Population::Gaussian.matrix(p, 2 * p, &mut rng);
            Ok(window_statistic(&g1, &g2, 1, form, 0.05)?.z_score)
        })
        .collect();
    split_results(results)
}

/// Binned scores with the standard normal density at bin centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub normal_density: Vec<f64>,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
}

impl NullHistogram {
    /// 40 equal bins on [-4, 4]; values outside are not binned.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return invalid("no scores to bin");
        }
        let bins = 40;
        let (lo, hi) = (-4.0, 4.0);
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &z in &scores {
            if (lo..hi).contains(&z) {
                counts[((z - lo) / width) as usize] += 1;
            } else if z == hi {
                counts[bins - 1] += 1;
            }
        }
        let normal = Normal::standard();
        let normal_density = edges.windows(2).map(|e| normal.pdf(0.5 * (e[0] + e[1]))).collect();
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let variance = if scores.len() > 1 {
            scores.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(NullHistogram {
            edges,
            counts,
            normal_density,
            ks_distance: ks_normal(&scores),
            scores,
            mean,
            variance,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,count,normal_density\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", self.edges[k], self.edges[k + 1], c, self.normal_density[k]);
        }
        out
    }
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `z`
/// and the standard normal.
pub fn ks_normal(z: &[f64]) -> f64 {
    let mut s: Vec<f64> = z.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let normal = Normal::standard();
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Null histogram at the true `M0`.
pub fn run_null_histogram(spec: &ExperimentSpec) -> Result<NullHistogram> {
    NullHistogram::from_scores(null_scores(spec)?)
}

/// Change-point benchmark for models 5 and 6. Indices are zero-based; the
/// default change is at `⌊2T/3⌋` and the two outliers sit at `⌊T/3⌋` and
/// `⌊T/3⌋ + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSpec {
    pub model: ModelId,
    pub rho: f64,
    pub p: usize,
    pub t_len: usize,
    #[serde(default)]
    pub change_at: Option<usize>,
    #[serde(default)]
    pub outliers: Option<Vec<usize>>,
    pub outlier_value: f64,
    pub runs: usize,
    pub seed: u64,
    pub plan: WindowPlan,
    /// Accepted distance from the true change (default `s`).
    #[serde(default)]
    pub tolerance: Option<usize>,
    /// Replaces the normal critical value with a bound on `|z|`.
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl ChangePointSpec {
    pub fn new(model: ModelId, rho: f64, p: usize, t_len: usize, runs: usize, seed: u64) -> Self {
        ChangePointSpec {
            model,
            rho,
            p,
            t_len,
            change_at: None,
            outliers: None,
            outlier_value: 20.0,
            runs,
            seed,
            plan: WindowPlan::default_for(p),
            tolerance: None,
            threshold: None,
        }
    }

    pub fn change_index(&self) -> usize {
        self.change_at.unwrap_or(2 * self.t_len / 3)
    }

    pub fn outlier_indices(&self) -> Vec<usize> {
        self.outliers.clone().unwrap_or_else(|| vec![self.t_len / 3, self.t_len / 3 + 1])
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance.unwrap_or(self.plan.s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.model.is_changepoint() {
            return invalid("change-point benchmark needs model 5 or 6");
        }
        if self.runs == 0 {
            return invalid("run count must be at least 1");
        }
        if !(self.rho > 0.0) {
            return invalid("rho must be positive");
        }
        self.plan.validate(self.p)?;
        let first = self.plan.q11 + self.plan.q12;
        if self.t_len < first + self.plan.s {
            return invalid(format!(
                "T = {} is shorter than the first window plus a run ({})",
                self.t_len,
                first + self.plan.s
            ));
        }
        if self.change_index() >= self.t_len || self.outlier_indices().iter().any(|&o| o >= self.t_len) {
            return invalid("change or outlier index beyond the sequence");
        }
        Ok(())
    }

    /// One p×T sequence.
    pub fn sample(&self, run: u64) -> Result<DMatrix<f64>> {
        let mut rng = replication_rng(self.seed, run);
        let (p, t) = (self.p, self.t_len);
        let cut = self.change_index();
        let mut x = Population::Gaussian.matrix(p, t, &mut rng);
        match self.model {
            ModelId::M5 => {
                let scale = self.rho.sqrt();
                for j in 0..t {
                    for i in 0..p {
                        if j >= cut {
                            x[(i, j)] *= scale;
                        }
                        x[(i, j)] += 0.6;
                    }
                }
            }
            ModelId::M6 => {
                let unif = Uniform::new(0.5, 1.5).expect("valid uniform bounds");
                let a = DMatrix::from_fn(p, 5, |_, _| unif.sample(&mut rng));
                let f = Population::Gaussian.matrix(5, t, &mut rng);
                let root = SigmaSpec::Toeplitz { rho: 0.8, scale: self.rho }
                    .sqrt(p, &mut rng)?
                    .expect("Toeplitz root");
                let post = &root * x.columns(cut, t - cut);
                x.columns_mut(cut, t - cut).copy_from(&post);
                x += a * f;
            }
            _ => return invalid("not a change-point model"),
        }
        for o in self.outlier_indices() {
            x.column_mut(o).add_scalar_mut(self.outlier_value);
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePointOutcome {
    pub detected: Option<usize>,
    pub correct: bool,
    pub outlier_reported: bool,
    pub anomalies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSummary {
    pub accuracy: f64,
    pub runs: usize,
    pub outlier_reports: usize,
    pub misses: usize,
    pub outcomes: Vec<ChangePointOutcome>,
}

impl ChangePointSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,detected,correct,outlier_reported,anomalies\n");
        for (k, o) in self.outcomes.iter().enumerate() {
            let det = o.detected.map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{k},{det},{},{},{}", o.correct, o.outlier_reported, o.anomalies);
        }
        out
    }
}

pub fn run_changepoint_benchmark(spec: &ChangePointSpec) -> Result<ChangePointSummary> {
    spec.validate()?;
    let truth = spec.change_index();
    let tol = spec.tolerance();
    let outliers = spec.outlier_indices();
    let results: Vec<Result<ChangePointOutcome>> = (0..spec.runs as u64)
        .into_par_iter()
        .map(|run| {
            let x = spec.sample(run)?;
            let st = detect_change_point(&x, &spec.plan, 1, spec.threshold)?;
            let near = |c: usize, t: usize| c.abs_diff(t) <= tol;
            Ok(ChangePointOutcome {
                detected: st.change_point,
                correct: st.change_point.is_some_and(|c| near(c, truth)),
                outlier_reported: st.change_point.is_some_and(|c| outliers.iter().any(|&o| near(c, o))),
                anomalies: st.anomalies.len(),
            })
        })
        .collect();
    let outcomes = split_results(results)?;
    let n = outcomes.len();
    Ok(ChangePointSummary {
        accuracy: outcomes.iter().filter(|o| o.correct).count() as f64 / n as f64,
        runs: n,
        outlier_reports: outcomes.iter().filter(|o| o.outlier_reported).count(),
        misses: outcomes.iter().filter(|o| o.detected.is_none()).count(),
        outcomes,
    })
}

/// Machine-readable record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub spec: serde_json::Value,
    pub seed: u64,
    pub crate_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(kind: &str, spec: &T, seed: u64, outputs: Vec<String>) -> Result<Self> {
        let spec = serde_json::to_value(spec).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(RunManifest {
            kind: kind.into(),
            spec,
            seed,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            outputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_replications() {
        let spec = ExperimentSpec::new(ModelId::M1, 20, 0.5, 0.2, vec![4], 0, 1);
        assert!(run_size_power(&spec).is_err());
    }

    #[test]
    fn reproducible_tables() {
        let spec = ExperimentSpec::new(ModelId::M1, 20, 0.5, 0.2, vec![1, 4], 12, 7);
        let a = run_size_power(&spec).unwrap();
        let b = run_size_power(&spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.frequency));
            let se = (r.frequency * (1.0 - r.frequency) / r.replications as f64).sqrt();
            assert!((r.std_error - se).abs() < 1e-15);
        }
    }

    #[test]
    fn single_replication_histogram() {
        let spec = ExperimentSpec::new(ModelId::M1, 20, 0.5, 0.2, vec![4], 1, 3);
        let h = run_null_histogram(&spec).unwrap();
        assert_eq!(h.edges.len(), 41);
        assert!(h.counts.iter().sum::<usize>() <= 1);
    }

    #[test]
    fn model2_population() {
        let spec = ExperimentSpec::new(ModelId::M2, 20, 0.2, 0.5, vec![4], 1, 3);
        let h = spec.bulk_spectrum().unwrap();
        assert!((h.atoms()[0].1 - 10.0 / 16.0).abs() < 1e-15);
        assert!((h.atoms()[1].1 - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn regression_dimensions() {
        let spec = ExperimentSpec::new(ModelId::M3, 40, 0.5, 0.2, vec![5], 1, 3);
        assert_eq!(spec.regression_dims().unwrap(), (300, 100, 80));
    }

    #[test]
    fn model_ids_round_trip() {
        for k in 1..=6u8 {
            assert_eq!(u8::from(ModelId::try_from(k).unwrap()), k);
        }
        assert!(ModelId::try_from(7).is_err());
    }

    #[test]
    fn ks_of_perfect_quantiles_is_small() {
        let normal = Normal::standard();
        let n = 1000;
        let z: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        assert!((ks_normal(&z) - 0.5 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn short_sequence_is_infeasible() {
        let spec = ChangePointSpec::new(ModelId::M5, 20.0, 10, 30, 1, 1);
        assert!(run_changepoint_benchmark(&spec).is_err());
    }

    #[test]
    fn factor_sequence_has_spikes() {
        let spec = ChangePointSpec::new(ModelId::M6, 9.0, 50, 600, 1, 2);
        let x = spec.sample(0).unwrap();
        let pre = x.columns(0, 300).into_owned();
        let s = sample_covariance(&pre, true).unwrap();
        let ev = s.symmetric_eigenvalues();
        let edge = (1.0 + (50.0f64 / 299.0).sqrt()).powi(2);
        assert!(ev.iter().filter(|v| **v > edge).count() >= 5);
    }
}
