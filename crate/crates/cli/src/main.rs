//! `ialpha` command-line front end.
//!
//! Exit codes: 0 success, 2 parse or usage error, 3 internal consistency
//! failure, 4 infeasible constraints, 5 domain violation, 6 non-convergence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ialpha::campaign::{self, CampaignConfig, ReportFloat, Suite};
use ialpha::io::{self, ProjectionReport};
use ialpha::maxent::{self, GeneralizedGaussianSpec, SpecInput};
use ialpha::measures::{renyi_entropy, shannon_entropy};
use ialpha::projection::{self, SolverOptions};
use ialpha::{AlphaParam, Density, Error};

#[derive(Parser)]
#[command(name = "ialpha", version, about = "α-relative entropies, projections and verification campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Order α of the divergence or entropy.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Named tolerance override, e.g. `--tol certificate=1e-7`.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the report (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Format of density files written by `project` and `maxent`.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Rényi and Shannon entropy of a distribution.
    Entropy {
        #[arg(long)]
        input: PathBuf,
    },
    /// I_α(P, Q) by both evaluation routes.
    Divergence {
        /// P.
        #[arg(long)]
        input: PathBuf,
        /// Q.
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// I_α-projection of a reference distribution onto a constraint set.
    Project {
        /// The reference distribution R.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// Feasible samples for the Pythagorean certificate.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Iteration cap per restart.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Also write the projection Q as a distribution file.
        #[arg(long)]
        q_output: Option<PathBuf>,
    },
    /// Discretized generalized Gaussian for `{"n", "alpha", "C"}`.
    Maxent {
        #[arg(long)]
        input: PathBuf,
        /// Cell width (defaults: 1e-3 for n = 1, 0.05 for n = 2, 0.2 above).
        #[arg(long)]
        grid_step: Option<f64>,
        /// Minimum half-width of the grid along every axis.
        #[arg(long, default_value_t = 0.0)]
        min_half_width: f64,
        /// Also write the grid density.
        #[arg(long)]
        density_output: Option<PathBuf>,
    },
    /// Seeded verification campaign.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        /// Samples per α (instances for the solver suites).
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    alpha: Option<f64>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    format: Option<Format>,
}

impl RunConfig {
    fn resolve(common: CommonArgs) -> Result<Self, Failure> {
        let mut cfg = match &common.config {
            Some(path) => io::read_json::<RunConfig>(path)?,
            None => RunConfig::default(),
        };
        for item in &common.tol {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("tolerance `{name}`: `{value}` is not a number")))?;
            cfg.tolerances.insert(name.trim().to_string(), v);
        }
        cfg.alpha = common.alpha.or(cfg.alpha);
        cfg.seed = common.seed.or(cfg.seed);
        cfg.output_path = common.output.or(cfg.output_path);
        cfg.format = common.format.or(cfg.format);
        Ok(cfg)
    }

    fn alpha(&self) -> Result<AlphaParam, Failure> {
        let a = self.alpha.ok_or_else(|| Failure::usage("--alpha is required"))?;
        Ok(AlphaParam::new(a)?)
    }

    /// Tolerances merged over `defaults`; unknown names are rejected.
    fn tolerances(&self, defaults: &[(&str, f64)]) -> Result<BTreeMap<String, f64>, Failure> {
        let mut out: BTreeMap<String, f64> = defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in &self.tolerances {
            if !out.contains_key(k) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(Failure::usage(format!("unknown tolerance `{k}` (known: {})", known.join(", "))));
            }
            out.insert(k.clone(), *v);
        }
        Ok(out)
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn consistency(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::LengthMismatch { .. }
            | Error::NegativeValue { .. }
            | Error::NonFinite { .. }
            | Error::AllZero
            | Error::NotNormalized { .. }
            | Error::EmptySpace
            | Error::NonPositiveWeight { .. }
            | Error::DuplicateLabel { .. }
            | Error::InvalidArgument(_) => 2,
            Error::Infeasible | Error::AllDivergencesInfinite => 4,
            Error::InvalidAlpha { .. }
            | Error::AlphaOutOfRange { .. }
            | Error::SpaceMismatch
            | Error::NonCountingMeasure
            | Error::SupportMismatch
            | Error::DeltaTooLarge { .. }
            | Error::InfiniteTerm
            | Error::InfiniteIntegral
            | Error::SupportTooLarge { .. }
            | Error::NotNested
            | Error::CoordinatesRequired
            | Error::InvalidCovariance
            | Error::InfiniteDivergence => 5,
            Error::CovarianceMismatch { .. } => 3,
            Error::GridTooCoarse(_) | Error::MomentDiverged { .. } => 6,
        };
        let message = match &e {
            Error::Infeasible => "infeasible: the constraint set is empty".to_string(),
            Error::AlphaOutOfRange { .. } => format!("alpha out of range: {e}"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

/// A report plus the exit code it warrants.
struct Outcome {
    json: String,
    code: u8,
    message: Option<String>,
}

impl Outcome {
    fn ok<T: Serialize>(report: &T) -> Self {
        Self { json: to_json(report), code: 0, message: None }
    }
}

fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write_density(path: &Path, d: &Density, format: Format) -> Result<(), Failure> {
    let text = match format {
        Format::Json => {
            let mut s = io::distribution_to_json(d);
            s.push('\n');
            s
        }
        Format::Csv => io::distribution_to_csv(d),
    };
    write_file(path, &text)
}

#[derive(Serialize)]
struct EntropyReport {
    alpha: ReportFloat,
    renyi_entropy: ReportFloat,
    shannon_entropy: ReportFloat,
    support_size: usize,
    n_points: usize,
}

fn cmd_entropy(cfg: &RunConfig, input: &Path) -> Result<Outcome, Failure> {
    cfg.tolerances(&[])?;
    let a = cfg.alpha()?;
    let p = io::read_distribution(input)?;
    Ok(Outcome::ok(&EntropyReport {
        alpha: ReportFloat(a.alpha()),
        renyi_entropy: ReportFloat(renyi_entropy(&p, a)?),
        shannon_entropy: ReportFloat(shannon_entropy(&p)),
        support_size: p.values().iter().filter(|&&v| v > 0.0).count(),
        n_points: p.len(),
    }))
}

#[derive(Serialize)]
struct DivergenceReport {
    alpha: ReportFloat,
    value: ReportFloat,
    via_f_divergence: ReportFloat,
    via_direct_formula: ReportFloat,
    path_delta: ReportFloat,
    path_agreement_tol: ReportFloat,
    finite: bool,
}

fn cmd_divergence(cfg: &RunConfig, input: &Path, reference: &Path) -> Result<Outcome, Failure> {
    let tol = cfg.tolerances(&[("path_agreement", 1e-9)])?["path_agreement"];
    let a = cfg.alpha()?;
    let p = io::read_distribution(input)?;
    let q = io::read_distribution(reference)?;
    let via_f = ialpha::alpha_relative_entropy(&p, &q, a)?.value;
    let direct = ialpha::alpha_relative_entropy_direct(&p, &q, a)?.value;
    let delta = if via_f.is_infinite() && direct.is_infinite() { 0.0 } else { (via_f - direct).abs() };
    let report = DivergenceReport {
        alpha: ReportFloat(a.alpha()),
        value: ReportFloat(direct),
        via_f_divergence: ReportFloat(via_f),
        via_direct_formula: ReportFloat(direct),
        path_delta: ReportFloat(delta),
        path_agreement_tol: ReportFloat(tol),
        finite: direct.is_finite(),
    };
    let mut out = Outcome::ok(&report);
    if !(delta <= tol) {
        out.code = 3;
        out.message = Some(format!("evaluation routes disagree by {delta:e} (tolerance {tol:e})"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ProjectReport {
    #[serde(flatten)]
    result: ProjectionReport,
    certificate_tol: ReportFloat,
    certificate_passed: bool,
}

fn cmd_project(
    cfg: &RunConfig,
    input: &Path,
    constraints: &Path,
    samples: Option<usize>,
    restarts: Option<usize>,
    max_iterations: Option<usize>,
    q_output: Option<&Path>,
) -> Result<Outcome, Failure> {
    let defaults = SolverOptions::default();
    let tol = cfg.tolerances(&[("solver", defaults.tol), ("certificate", 1e-6)])?;
    let a = cfg.alpha()?;
    let r = io::read_distribution(input)?;
    let e = io::read_constraints(constraints, std::sync::Arc::clone(r.space()))?;
    let opts = SolverOptions {
        tol: tol["solver"],
        n_cert: samples.unwrap_or(defaults.n_cert),
        n_restarts: restarts.unwrap_or(defaults.n_restarts).max(1),
        max_iterations: max_iterations.unwrap_or(defaults.max_iterations),
        seed: cfg.seed.unwrap_or(0),
        ..defaults
    };
    let res = projection::project(&r, &e, a, &opts)?;
    if let Some(path) = q_output {
        write_density(path, &res.q, cfg.format.unwrap_or(Format::Json))?;
    }
    let worst = res.worst_certificate();
    let cert_tol = tol["certificate"];
    let certificate_passed = worst >= -cert_tol;
    let report = ProjectReport {
        result: ProjectionReport::new(&res, a.alpha()),
        certificate_tol: ReportFloat(cert_tol),
        certificate_passed,
    };
    let mut out = Outcome::ok(&report);
    if !res.converged {
        out.code = 6;
        out.message = Some(format!("solver did not converge within {} iterations", opts.max_iterations));
    } else if !certificate_passed {
        out.code = 3;
        out.message = Some(format!("Pythagorean certificate failed: worst residual {worst:e}"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct GridReport {
    h: Vec<ReportFloat>,
    half_counts: Vec<usize>,
    cells: usize,
}

#[derive(Serialize)]
struct MaxentReport {
    n: usize,
    alpha: ReportFloat,
    b_alpha: ReportFloat,
    z: ReportFloat,
    support_half_widths: Option<Vec<ReportFloat>>,
    target_covariance: Vec<Vec<ReportFloat>>,
    covariance: Vec<Vec<ReportFloat>>,
    covariance_relative_deviation: ReportFloat,
    renyi_entropy: ReportFloat,
    grid: GridReport,
}

fn matrix_rows(n: usize, m: impl Fn(usize, usize) -> f64) -> Vec<Vec<ReportFloat>> {
    (0..n).map(|i| (0..n).map(|j| ReportFloat(m(i, j))).collect()).collect()
}

fn cmd_maxent(
    cfg: &RunConfig,
    input: &Path,
    grid_step: Option<f64>,
    min_half_width: f64,
    density_output: Option<&Path>,
) -> Result<Outcome, Failure> {
    cfg.tolerances(&[])?;
    let mut spec_in: SpecInput = io::read_json(input)?;
    if let Some(a) = cfg.alpha {
        spec_in.alpha = a;
    }
    let spec = GeneralizedGaussianSpec::from_input(&spec_in)?;
    let n = spec.n();
    let h = grid_step.unwrap_or(match n {
        1 => 1e-3,
        2 => 0.05,
        _ => 0.2,
    });
    if !(h > 0.0 && h.is_finite()) || !(min_half_width >= 0.0 && min_half_width.is_finite()) {
        return Err(Failure::usage("--grid-step must be positive and --min-half-width nonnegative"));
    }
    let gg = maxent::generalized_gaussian(&spec, h, &vec![min_half_width; n])?;
    if let Some(path) = density_output {
        write_density(path, &gg.density, cfg.format.unwrap_or(Format::Json))?;
    }
    let cov = maxent::covariance(&gg.density)?;
    let report = MaxentReport {
        n,
        alpha: ReportFloat(spec.alpha().alpha()),
        b_alpha: ReportFloat(spec.b_alpha()),
        z: ReportFloat(gg.z),
        support_half_widths: spec.support_half_widths().map(|v| v.into_iter().map(ReportFloat).collect()),
        target_covariance: matrix_rows(n, |i, j| spec.covariance()[(i, j)]),
        covariance: matrix_rows(n, |i, j| cov[(i, j)]),
        covariance_relative_deviation: ReportFloat(maxent::relative_deviation(&cov, spec.covariance())),
        renyi_entropy: ReportFloat(renyi_entropy(&gg.density, spec.alpha())?),
        grid: GridReport {
            h: gg.grid.h.iter().copied().map(ReportFloat).collect(),
            half_counts: gg.grid.half_counts.clone(),
            cells: gg.grid.n_cells(),
        },
    };
    Ok(Outcome::ok(&report))
}

fn cmd_verify(cfg: &RunConfig, suite: Suite, samples: Option<usize>) -> Result<Outcome, Failure> {
    let defaults: Vec<(&str, f64)> = suite.default_tolerances().into_iter().collect();
    let tolerances = cfg.tolerances(&defaults)?;
    let mut config = CampaignConfig::new(suite, samples.unwrap_or(suite.default_samples()), cfg.seed.unwrap_or(0));
    config.alphas = cfg.alpha.map(|a| vec![a]);
    config.tolerances = tolerances;
    let report = campaign::run(&config)?;
    let mut json = report.to_json();
    json.push('\n');
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let (code, message) = if failed.is_empty() {
        (0, None)
    } else {
        (3, Some(format!("suite {} failed checks: {}", suite.name(), failed.join(", "))))
    };
    Ok(Outcome { json, code, message })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("APT_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("APT_NUM_THREADS: `{value}` is not a nonnegative integer")))?;
    // rayon treats 0 as "pick for me"; here 0 means serial.
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| Failure::consistency(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.common)?;
    let outcome = match &cli.command {
        Command::Entropy { input } => cmd_entropy(&cfg, input),
        Command::Divergence { input, reference } => cmd_divergence(&cfg, input, reference),
        Command::Project { input, constraints, samples, restarts, max_iterations, q_output } => {
            cmd_project(&cfg, input, constraints, *samples, *restarts, *max_iterations, q_output.as_deref())
        }
        Command::Maxent { input, grid_step, min_half_width, density_output } => {
            cmd_maxent(&cfg, input, *grid_step, *min_half_width, density_output.as_deref())
        }
        Command::Verify { suite, samples } => cmd_verify(&cfg, *suite, *samples),
    }?;
    match &cfg.output_path {
        Some(path) => write_file(path, &outcome.json)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.json.as_bytes()).map_err(|e| Failure::consistency(format!("stdout: {e}")))?;
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if let Some(msg) = outcome.message {
                eprintln!("ialpha: {msg}");
            }
            ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("ialpha: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
