//! Command-line front end: per-period analysis, estimator comparison,
//! coverage simulations and design-based estimands on long-format panels.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! error. Errors print a single diagnostic line on stderr.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use panelcf_core::design::{design_estimand, placebo_fit_grid, RandomSource};
use panelcf_core::estimators::{
    fit_elastic_net, fit_lasso, fit_simplex, Direction, Method, SolverConfig,
};
use panelcf_core::inference::{analyze_period, CovKind};
use panelcf_core::panel::{load_panel, split_blocks, PanelSchema};
use panelcf_core::sim::{build_dgp, coverage_study};
use panelcf_core::spectral::{energy_rank, svd_decompose, DEFAULT_RTOL};
use panelcf_core::{Error, PanelData};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "panelcf", version, about = "panel counterfactual estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Point estimates and confidence intervals for every post-treatment period
    Analyze(AnalyzeArgs),
    /// Long-format table of all six estimators' HZ and VT points per period
    Compare(CompareArgs),
    /// Monte Carlo coverage study calibrated to the loaded panel
    Simulate(SimulateArgs),
    /// Placebo-grid design-based estimands
    Design(DesignArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV; bare names are also resolved against $PANELCF_DATA_DIR
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "unit")]
    unit_col: String,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "value")]
    value_col: String,
    /// Label of the treated unit
    #[arg(long)]
    treated: String,
    /// Number of pretreatment periods
    #[arg(long)]
    t0: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// ols | pcr | ridge | lasso | enet | simplex
    #[arg(long)]
    method: String,
    /// PCR rank; defaults to the 99.9%-energy rule
    #[arg(long)]
    k: Option<usize>,
    /// l2 penalty (ridge, enet)
    #[arg(long)]
    lambda2: Option<f64>,
    /// l1 penalty (lasso, enet)
    #[arg(long)]
    lambda1: Option<f64>,
    /// simplex ridge stabilizer
    #[arg(long)]
    lambda: Option<f64>,
    /// hz | vt | mixed | all
    #[arg(long, default_value = "all")]
    interval: String,
    /// homo | jack | hrk
    #[arg(long, default_value = "homo")]
    cov: String,
    /// interval level theta (coverage 1 - theta)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
    /// warn if the input digest differs from a previous run's
    #[arg(long)]
    expect_digest: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    lambda2: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// spectral energy threshold for the DGP rank
    #[arg(long, default_value_t = 0.999)]
    energy: f64,
    /// coverage table CSV; metadata goes to the same path with .json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    data: DataArgs,
    /// ols | pcr
    #[arg(long, default_value = "ols")]
    method: String,
    #[arg(long)]
    k: Option<usize>,
    /// optional CSV export of the full placebo grid
    #[arg(long)]
    grid_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Design(a) => cmd_design(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(e.1)
        }
    }
}

/// Diagnostic plus process exit code.
struct Failure(String, u8);

type CmdResult = std::result::Result<(), Failure>;

fn config_err(msg: impl Into<String>) -> Failure {
    Failure(msg.into(), 2)
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MissingCell { .. }
            | Error::DuplicateCell { .. }
            | Error::UnknownTreatedUnit(_)
            | Error::T0OutOfRange { .. }
            | Error::NonFiniteInput
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Parse(_) => 3,
            Error::KOutOfRange { .. }
            | Error::NonPositiveLambda(_)
            | Error::PeriodBeforeTreatment { .. }
            | Error::UnsupportedMethod
            | Error::DimensionMismatch(_) => 2,
            Error::NotConverged(_)
            | Error::DegenerateSide(_)
            | Error::HrkUndefined(_)
            | Error::NegativeVariance(_)
            | Error::EmptyAverage
            | Error::DegenerateDgp { .. } => 4,
        };
        Failure(e.to_string(), code)
    }
}

fn resolve_data(path: &Path) -> std::result::Result<PathBuf, Failure> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    if let Ok(dir) = std::env::var("PANELCF_DATA_DIR") {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return Ok(candidate);
        }
    }
    Err(Failure(format!("data file {} not found", path.display()), 3))
}

/// Raw bytes plus sha-256 hex digest, so outputs are traceable to inputs.
fn read_input(args: &DataArgs) -> std::result::Result<(PanelData, String), Failure> {
    let path = resolve_data(&args.data)?;
    let bytes = std::fs::read(&path).map_err(Error::from)?;
    let digest = hex(&Sha256::digest(&bytes));
    let schema = PanelSchema {
        unit_col: args.unit_col.clone(),
        time_col: args.time_col.clone(),
        value_col: args.value_col.clone(),
    };
    let panel = load_panel(bytes.as_slice(), &schema, &args.treated, args.t0)?;
    Ok((panel, digest))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write through a temp file in the destination directory so readers never
/// observe a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> std::result::Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(Error::from)?;
    tmp.write_all(contents).map_err(Error::from)?;
    tmp.persist(path)
        .map_err(|e| Failure(format!("cannot persist output {}: {}", path.display(), e.error), 3))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, contents: &str) -> CmdResult {
    match out {
        Some(path) => write_atomic(path, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho {
    dataset: String,
    treated: String,
    t0: usize,
    method: String,
    k: Option<usize>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda: Option<f64>,
    cov: String,
    interval: String,
    alpha: f64,
}

#[derive(Serialize)]
struct Provenance {
    version: String,
    schema_version: u32,
    input_sha256: String,
}

#[derive(Serialize)]
struct PeriodRecord {
    period: String,
    point_hz: Option<f64>,
    point_vt: Option<f64>,
    ci_hz: Option<(f64, f64)>,
    ci_vt: Option<(f64, f64)>,
    ci_mix: Option<(f64, f64)>,
    hz_degenerate: Option<bool>,
    vt_degenerate: Option<bool>,
    mix_fallback: Option<bool>,
    negative_variance: Option<bool>,
}

#[derive(Serialize)]
struct AnalysisRun {
    config: ConfigEcho,
    periods: Vec<PeriodRecord>,
    provenance: Provenance,
}

/// The 99.9%-energy default rank, computed on the pretreatment block.
fn default_k(panel: &PanelData) -> std::result::Result<usize, Failure> {
    let blocks = split_blocks(panel, panel.t0)?;
    let cache = svd_decompose(&blocks.y0, DEFAULT_RTOL)?;
    Ok(energy_rank(&cache, 0.999).max(1))
}

fn cmd_analyze(args: AnalyzeArgs) -> CmdResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(config_err(format!("--alpha must be in (0, 1), got {}", args.alpha)));
    }
    let cov_kind = match args.cov.as_str() {
        "homo" => CovKind::Homoskedastic,
        "jack" => CovKind::Jackknife,
        "hrk" => CovKind::Hrk,
        other => return Err(config_err(format!("unknown covariance kind {other:?}"))),
    };
    if !matches!(args.interval.as_str(), "hz" | "vt" | "mixed" | "all") {
        return Err(config_err(format!("unknown interval choice {:?}", args.interval)));
    }
    if !matches!(args.format.as_str(), "json" | "csv") {
        return Err(config_err(format!("unknown format {:?}", args.format)));
    }

    let (panel, digest) = read_input(&args.data)?;
    if let Some(expected) = &args.expect_digest {
        if expected != &digest {
            eprintln!("warning: input digest {digest} does not match expected {expected}");
        }
    }

    // symmetric methods get full inference; asymmetric methods report
    // direction-specific points only
    enum Plan {
        Symmetric(Method),
        Asymmetric(AsymMethod),
    }
    enum AsymMethod {
        Lasso(f64),
        ElasticNet(f64, f64),
        Simplex(f64),
    }
    let (plan, k_used, l1, l2, ls) = match args.method.as_str() {
        "ols" => (Plan::Symmetric(Method::OlsMinNorm), None, None, None, None),
        "pcr" => {
            let k = match args.k {
                Some(k) => k,
                None => default_k(&panel)?,
            };
            (Plan::Symmetric(Method::Pcr { k }), Some(k), None, None, None)
        }
        "ridge" => {
            let lambda2 = args.lambda2.unwrap_or(1.0);
            (Plan::Symmetric(Method::Ridge { lambda2 }), None, None, Some(lambda2), None)
        }
        "lasso" => {
            let lambda1 = args.lambda1.unwrap_or(1.0);
            (Plan::Asymmetric(AsymMethod::Lasso(lambda1)), None, Some(lambda1), None, None)
        }
        "enet" => {
            let lambda1 = args.lambda1.unwrap_or(1.0);
            let lambda2 = args.lambda2.unwrap_or(1.0);
            (
                Plan::Asymmetric(AsymMethod::ElasticNet(lambda1, lambda2)),
                None,
                Some(lambda1),
                Some(lambda2),
                None,
            )
        }
        "simplex" => {
            let lambda = args.lambda.unwrap_or(1e-6);
            (Plan::Asymmetric(AsymMethod::Simplex(lambda)), None, None, None, Some(lambda))
        }
        other => return Err(config_err(format!("unknown method {other:?}"))),
    };

    let cfg = SolverConfig::default();
    let mut periods = Vec::with_capacity(panel.n_post_periods());
    for period in panel.t0..panel.n_periods() {
        let blocks = split_blocks(&panel, period)?;
        let label = panel.time_labels[period].clone();
        let record = match &plan {
            Plan::Symmetric(method) => {
                let report = analyze_period(&blocks, *method, cov_kind, args.alpha, &cfg)?;
                let keep = |which: &str, ci: (f64, f64)| {
                    (args.interval == "all" || args.interval == which).then_some(ci)
                };
                PeriodRecord {
                    period: label,
                    point_hz: Some(report.point),
                    point_vt: Some(report.point),
                    ci_hz: keep("hz", report.ci_hz),
                    ci_vt: keep("vt", report.ci_vt),
                    ci_mix: keep("mixed", report.ci_mix),
                    hz_degenerate: Some(report.degeneracy.hz_degenerate),
                    vt_degenerate: Some(report.degeneracy.vt_degenerate),
                    mix_fallback: Some(report.mix_fallback_used),
                    negative_variance: Some(report.negative_variance_flagged),
                }
            }
            Plan::Asymmetric(method) => {
                let fit_dir = |direction: Direction| -> panelcf_core::Result<f64> {
                    let fit = match method {
                        AsymMethod::Lasso(l1) => fit_lasso(&blocks, direction, *l1, &cfg)?,
                        AsymMethod::ElasticNet(l1, l2) => {
                            fit_elastic_net(&blocks, direction, *l1, *l2, &cfg)?
                        }
                        AsymMethod::Simplex(l) => fit_simplex(&blocks, direction, *l, &cfg)?,
                    };
                    Ok(fit.point())
                };
                PeriodRecord {
                    period: label,
                    point_hz: Some(fit_dir(Direction::Hz)?),
                    point_vt: Some(fit_dir(Direction::Vt)?),
                    ci_hz: None,
                    ci_vt: None,
                    ci_mix: None,
                    hz_degenerate: None,
                    vt_degenerate: None,
                    mix_fallback: None,
                    negative_variance: None,
                }
            }
        };
        periods.push(record);
    }

    let run = AnalysisRun {
        config: ConfigEcho {
            dataset: args.data.data.display().to_string(),
            treated: args.data.treated.clone(),
            t0: args.data.t0,
            method: args.method.clone(),
            k: k_used,
            lambda1: l1,
            lambda2: l2,
            lambda: ls,
            cov: args.cov.clone(),
            interval: args.interval.clone(),
            alpha: args.alpha,
        },
        periods,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            input_sha256: digest,
        },
    };

    let contents = match args.format.as_str() {
        "json" => {
            let mut s = serde_json::to_string_pretty(&run)
                .map_err(|e| Failure(format!("serialization failed: {e}"), 4))?;
            s.push('\n');
            s
        }
        _ => analysis_csv(&run),
    };
    emit(&args.out, &contents)
}

fn analysis_csv(run: &AnalysisRun) -> String {
    let mut s = String::from(
        "period,point_hz,point_vt,ci_hz_lo,ci_hz_hi,ci_vt_lo,ci_vt_hi,ci_mix_lo,ci_mix_hi,hz_degenerate,vt_degenerate\n",
    );
    let cell = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
    let flag = |x: Option<bool>| x.map_or(String::new(), |v| v.to_string());
    for p in &run.periods {
        let (hlo, hhi) = p.ci_hz.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        let (vlo, vhi) = p.ci_vt.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        let (mlo, mhi) = p.ci_mix.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.period,
            cell(p.point_hz),
            cell(p.point_vt),
            cell(hlo),
            cell(hhi),
            cell(vlo),
            cell(vhi),
            cell(mlo),
            cell(mhi),
            flag(p.hz_degenerate),
            flag(p.vt_degenerate),
        ));
    }
    s
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let (panel, _digest) = read_input(&args.data)?;
    let k = match args.k {
        Some(k) => k,
        None => default_k(&panel)?,
    };
    let cfg = SolverConfig::default();

    let mut s = String::from("period,method,direction,point\n");
    for period in panel.t0..panel.n_periods() {
        let blocks = split_blocks(&panel, period)?;
        let cache = svd_decompose(&blocks.y0, DEFAULT_RTOL)?;
        let label = &panel.time_labels[period];

        let mut push = |method: &str, direction: &str, point: f64| {
            s.push_str(&format!("{label},{method},{direction},{point}\n"));
        };

        let ols = panelcf_core::estimators::fit_ols_minnorm(&blocks, &cache);
        push("ols", "hz", ols.point_hz.unwrap());
        push("ols", "vt", ols.point_vt.unwrap());
        let pcr = panelcf_core::estimators::fit_pcr(&blocks, &cache, k.min(cache.rank).max(1))?;
        push("pcr", "hz", pcr.point_hz.unwrap());
        push("pcr", "vt", pcr.point_vt.unwrap());
        let ridge = panelcf_core::estimators::fit_ridge(&blocks, &cache, args.lambda2)?;
        push("ridge", "hz", ridge.point_hz.unwrap());
        push("ridge", "vt", ridge.point_vt.unwrap());

        for direction in [Direction::Hz, Direction::Vt] {
            let name = match direction {
                Direction::Hz => "hz",
                Direction::Vt => "vt",
            };
            push("lasso", name, fit_lasso(&blocks, direction, args.lambda1, &cfg)?.point());
            push(
                "enet",
                name,
                fit_elastic_net(&blocks, direction, args.lambda1, args.lambda2, &cfg)?.point(),
            );
            push("simplex", name, fit_simplex(&blocks, direction, args.lambda, &cfg)?.point());
        }
    }
    emit(&args.out, &s)
}

#[derive(Serialize)]
struct SimulateMeta {
    dataset: String,
    treated: String,
    t0: usize,
    reps: usize,
    seed: u64,
    energy: f64,
    r: usize,
    sigma2_t: f64,
    sigma2_n: f64,
    version: String,
    input_sha256: String,
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    if args.reps == 0 {
        return Err(config_err("--reps must be positive"));
    }
    if !(args.energy > 0.0 && args.energy <= 1.0) {
        return Err(config_err(format!("--energy must be in (0, 1], got {}", args.energy)));
    }
    let (panel, digest) = read_input(&args.data)?;
    let dgp = build_dgp(&panel, args.energy)?;
    let table = coverage_study(&dgp, args.reps, args.seed)?;

    let mut csv = String::from("interval,cp_mu_hz,cp_mu_vt,cp_mu_mix,al\n");
    for (name, row, al) in [
        ("hz", table.cp[0], table.al[0]),
        ("vt", table.cp[1], table.al[1]),
        ("mixed", table.cp[2], table.al[2]),
    ] {
        csv.push_str(&format!("{name},{},{},{},{}\n", row[0], row[1], row[2], al));
    }
    write_atomic(&args.out, csv.as_bytes())?;

    let meta = SimulateMeta {
        dataset: args.data.data.display().to_string(),
        treated: args.data.treated.clone(),
        t0: args.data.t0,
        reps: args.reps,
        seed: args.seed,
        energy: args.energy,
        r: table.r,
        sigma2_t: table.sigma2_t,
        sigma2_n: table.sigma2_n,
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_sha256: digest,
    };
    let meta_path = args.out.with_extension("json");
    let mut meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Failure(format!("serialization failed: {e}"), 4))?;
    meta_json.push('\n');
    write_atomic(&meta_path, meta_json.as_bytes())
}

fn cmd_design(args: DesignArgs) -> CmdResult {
    let (panel, _digest) = read_input(&args.data)?;
    let method = match args.method.as_str() {
        "ols" => Method::OlsMinNorm,
        "pcr" => {
            let k = match args.k {
                Some(k) => k,
                None => default_k(&panel)?,
            };
            Method::Pcr { k }
        }
        other => return Err(config_err(format!("unknown design method {other:?}"))),
    };
    let grid = placebo_fit_grid(&panel, method)?;
    let time = design_estimand(&grid, RandomSource::Time, panel.treated_unit, panel.t0)?;
    let unit = design_estimand(&grid, RandomSource::Unit, panel.treated_unit, panel.t0)?;
    let both = design_estimand(&grid, RandomSource::Both, panel.treated_unit, panel.t0)?;
    println!("time {time}");
    println!("unit {unit}");
    println!("both {both}");

    if let Some(path) = &args.grid_out {
        let mut s = String::from("unit,period,fitted,valid\n");
        let (n, t) = grid.fitted.shape();
        for i in 0..n {
            for tt in 0..t {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    panel.unit_labels[i],
                    panel.time_labels[tt],
                    grid.fitted[(i, tt)],
                    grid.valid[(i, tt)],
                ));
            }
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(())
}
