mod config;
mod io;

use clap::{Args, Parser, Subcommand};
use config::{parse_h2, SimConfig, SimKind};
use io::{emit_json, read_matrix, read_vector, write_text, CliError, CliResult, Orientation};
use serde::Serialize;
use spikefisher::changepoint::{calibrate_threshold, detect_change_point, WindowPlan};
use spikefisher::clt::CltMethod;
use spikefisher::model::{estimate_beta, fisher_eigenvalues, sample_covariance};
use spikefisher::regress::{count_significant_variables, RegressionDesign};
use spikefisher::simharness::{
    run_changepoint_benchmark, run_null_histogram, run_size_power, RunManifest,
};
use spikefisher::spiketest::{SpikeTester, TestReport};
use spikefisher::{FisherEigs, MomentProfile, RatioProfile, SpectralFn, SpectrumH, SpikeConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spikefisher", version, about = "Spike-count tests for generalized Fisher matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output file (JSON) or directory for `simulate`; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Axis of the CSV that holds observations.
    #[arg(long, value_enum, default_value_t = Orientation::Rows)]
    orientation: Orientation,
    /// Skip the first CSV line.
    #[arg(long)]
    header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a Fisher matrix has exactly M0 spikes.
    TestSpikes(TestSpikesArgs),
    /// Count significant regressor directions with the modified Wilks statistic.
    Regress(RegressArgs),
    /// Sliding-window change-point detection.
    Changepoint(ChangepointArgs),
    /// Monte-Carlo size/power tables, null histograms and change-point accuracy.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TestSpikesArgs {
    #[command(flatten)]
    common: Common,
    /// Sample X (numerator).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample Y (denominator).
    #[arg(long)]
    input2: Option<PathBuf>,
    /// Precomputed Fisher eigenvalues instead of samples; needs --n1 and --n2.
    #[arg(long, conflicts_with_all = ["input", "input2"])]
    eigenvalues: Option<PathBuf>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    m0: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Spectral function: x or log.
    #[arg(long, default_value = "log")]
    f: String,
    /// closed, contour or general; chosen from H when omitted.
    #[arg(long)]
    method: Option<String>,
    /// Non-spiked population spectrum as `t:w,t:w,...`.
    #[arg(long, default_value = "1:1")]
    h: String,
    /// Hypothesised spike values; estimated from the eigenvalues when omitted.
    #[arg(long, value_delimiter = ',')]
    spikes: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    beta_x: f64,
    #[arg(long, default_value_t = 0.0)]
    beta_y: f64,
    /// Estimate both fourth-moment parameters from the samples.
    #[arg(long)]
    estimate_beta: bool,
    /// Centre the samples (covariances then have n - 1 degrees of freedom).
    #[arg(long)]
    center: bool,
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    common: Common,
    /// Responses, n observations of p variables.
    #[arg(long)]
    input: PathBuf,
    /// Design, n observations of r regressors.
    #[arg(long)]
    design: PathBuf,
    /// Number of leading regressors under test.
    #[arg(long)]
    r1: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Largest count considered; defaults to the largest admissible value.
    #[arg(long)]
    m_max: Option<usize>,
}

#[derive(Args)]
struct ChangepointArgs {
    #[command(flatten)]
    common: Common,
    /// Sequence, T observations of p variables.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    q11: Option<usize>,
    #[arg(long)]
    q12: Option<usize>,
    #[arg(long, default_value_t = 20)]
    s: usize,
    #[arg(long, default_value_t = 0.0005)]
    alpha: f64,
    /// Anomaly-free reference sequence; flags windows by its 95% |z| quantile.
    #[arg(long)]
    calibrate: Option<PathBuf>,
    /// Composite-ratio form in the variance: derived or printed.
    #[arg(long, default_value = "derived")]
    h2: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Flat TOML experiment file.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in profile: fisher-small or regression-small.
    #[arg(long)]
    profile: Option<String>,
    /// Overrides the replication (or run) count.
    #[arg(long)]
    replications: Option<usize>,
}

fn parse_h(s: &str) -> CliResult<SpectrumH> {
    let atoms = s
        .split(',')
        .map(|part| {
            let (t, w) = part
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("spectrum atom '{part}' is not t:w")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("'{v}' in spectrum is not a number")))
            };
            Ok((num(t)?, num(w)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(SpectrumH::from_unsorted(atoms)?)
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

fn test_spikes(a: &TestSpikesArgs) -> CliResult<(TestReport, bool)> {
    let c = &a.common;
    let mut moments = MomentProfile::new(1, a.beta_x, a.beta_y)?;
    let eigs = if let Some(path) = &a.eigenvalues {
        if a.estimate_beta {
            return Err(CliError::Config("--estimate-beta needs sample input".into()));
        }
        let n1 = a.n1.ok_or_else(|| CliError::Config("--n1 is required with --eigenvalues".into()))?;
        let n2 = a.n2.ok_or_else(|| CliError::Config("--n2 is required with --eigenvalues".into()))?;
        FisherEigs::new(read_vector(path, c.header)?, n1, n2)?
    } else {
        let x = read_matrix(required(&a.input, "input")?, c.header, c.orientation)?;
        let y = read_matrix(required(&a.input2, "input2")?, c.header, c.orientation)?;
        if x.nrows() != y.nrows() {
            return Err(CliError::Config(format!(
                "samples have {} and {} variables",
                x.nrows(),
                y.nrows()
            )));
        }
        if a.estimate_beta {
            moments = MomentProfile::new(1, estimate_beta(&x, 1)?, estimate_beta(&y, 1)?)?;
        }
        let shift = usize::from(a.center);
        let (n1, n2) = (x.ncols() - shift, y.ncols() - shift);
        let s1 = sample_covariance(&x, a.center)?;
        let s2 = sample_covariance(&y, a.center)?;
        fisher_eigenvalues(&s1, &s2, n1, n2)?
    };
    let ratios: RatioProfile = eigs.ratios()?;
    let f: SpectralFn = a.f.parse()?;
    let h = parse_h(&a.h)?;
    let method = match &a.method {
        Some(m) => m.parse()?,
        None if h.is_delta1() => CltMethod::ClosedForm,
        None => CltMethod::ContourGeneral,
    };
    let tester = SpikeTester::new(f, h, moments, a.alpha, method, ratios)?;
    let spikes = if a.spikes.is_empty() {
        None
    } else {
        Some(SpikeConfig::from_values(&a.spikes)?)
    };
    let report = tester.test(&eigs, a.m0, spikes.as_ref())?;
    emit_json(&report, c.output.as_deref())?;
    let rejected = report.rejected();
    Ok((report, rejected))
}

#[derive(Serialize)]
struct RegressOutput {
    count: usize,
    found: bool,
    p: usize,
    n: usize,
    r: usize,
    r1: usize,
    trace: Vec<TraceRow>,
}

#[derive(Serialize)]
struct TraceRow {
    m0: usize,
    z_score: f64,
    p_value: f64,
    rejected: bool,
}

fn regress(a: &RegressArgs) -> CliResult<bool> {
    let c = &a.common;
    let z = read_matrix(&a.input, c.header, c.orientation)?;
    let w = read_matrix(&a.design, c.header, c.orientation)?;
    let design = RegressionDesign::new(z, w, a.r1)?;
    let limit = design.p().min(a.r1);
    let m_max = a.m_max.unwrap_or((limit.saturating_sub(1)) / 2);
    let count = count_significant_variables(&design, a.alpha, m_max)?;
    let out = RegressOutput {
        count: count.count,
        found: count.found,
        p: design.p(),
        n: design.n(),
        r: design.r(),
        r1: design.r1(),
        trace: count
            .reports
            .iter()
            .map(|r| TraceRow {
                m0: r.m0,
                z_score: r.z_score,
                p_value: r.p_value,
                rejected: r.rejected(),
            })
            .collect(),
    };
    emit_json(&out, c.output.as_deref())?;
    Ok(!count.found)
}

#[derive(Serialize)]
struct ChangepointOutput {
    change_point: Option<usize>,
    threshold: Option<f64>,
    plan: WindowPlan,
    #[serde(flatten)]
    state: spikefisher::changepoint::DetectionState,
}

fn changepoint(a: &ChangepointArgs) -> CliResult<bool> {
    let c = &a.common;
    let x = read_matrix(&a.input, c.header, c.orientation)?;
    let p = x.nrows();
    let plan = WindowPlan {
        q11: a.q11.unwrap_or(2 * p),
        q12: a.q12.unwrap_or(2 * p),
        s: a.s,
        alpha: a.alpha,
        h2_form: parse_h2(Some(&a.h2))?,
    };
    if plan.q11 <= p {
        return Err(CliError::Config(format!("q11 = {} must exceed p = {p}", plan.q11)));
    }
    let threshold = match &a.calibrate {
        Some(path) => {
            let r = read_matrix(path, c.header, c.orientation)?;
            if r.nrows() != p {
                return Err(CliError::Config(format!(
                    "reference has {} variables, sequence has {p}",
                    r.nrows()
                )));
            }
            Some(calibrate_threshold(&r, &plan, 1)?)
        }
        None => None,
    };
    let state = detect_change_point(&x, &plan, 1, threshold)?;
    let detected = state.change_point.is_some();
    emit_json(
        &ChangepointOutput {
            change_point: state.change_point,
            threshold,
            plan,
            state,
        },
        c.output.as_deref(),
    )?;
    Ok(detected)
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut cfg = match (&a.config, &a.profile) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            SimConfig::parse(&text)?
        }
        (None, Some(name)) => SimConfig::profile(name)?,
        (None, None) => return Err(CliError::Config("give --config or --profile".into())),
    };
    if let Some(n) = a.replications {
        cfg.replications = Some(n);
        cfg.runs = Some(n);
    }
    if a.common.seed != 0 {
        cfg.seed = a.common.seed;
    }
    let dir = a
        .common
        .output
        .clone()
        .ok_or_else(|| CliError::Config("--output directory is required".into()))?;
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let (manifest, name, csv) = match cfg.kind {
        SimKind::SizePower => {
            let spec = cfg.experiment()?;
            let table = run_size_power(&spec)?;
            let m = RunManifest::new("size-power", &spec, spec.seed, vec!["table.csv".into()])?;
            (m, "table.csv", table.to_csv())
        }
        SimKind::NullHistogram => {
            let spec = cfg.experiment()?;
            let hist = run_null_histogram(&spec)?;
            let m = RunManifest::new("null-histogram", &spec, spec.seed, vec!["histogram.csv".into()])?;
            (m, "histogram.csv", hist.to_csv())
        }
        SimKind::Changepoint => {
            let spec = cfg.changepoint()?;
            let summary = run_changepoint_benchmark(&spec)?;
            eprintln!("accuracy {}", summary.accuracy);
            let m = RunManifest::new("changepoint", &spec, spec.seed, vec!["runs.csv".into()])?;
            (m, "runs.csv", summary.to_csv())
        }
    };
    write_text(&dir.join(name), &csv)?;
    emit_json(&manifest, Some(&dir.join("manifest.json")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::TestSpikes(a) => test_spikes(a).map(|(_, rejected)| rejected),
        Command::Regress(a) => regress(a),
        Command::Changepoint(a) => changepoint(a),
        Command::Simulate(a) => simulate(a).map(|_| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
