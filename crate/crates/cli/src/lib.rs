//! Batch command line around the `seqdim` library.
//!
//! Standard output carries `key=value` lines; diagnostics and progress go to standard
//! error. Every file written embeds the resolved configuration and code version.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use serde::Serialize;

use seqdim::basis::{cache_path, classify, load_or_build, rank_oracle, BasisError, CODE_VERSION};
use seqdim::certify::{CertifyError, RobustnessProgram, Witness, WitnessJson};
use seqdim::experiments::{
    check_witness_on_samples, gyni_report, probability_curve, ququart_hunt, run_campaign,
    CampaignSpec, CampaignSummary, ExperimentError,
};
use seqdim::quantum::BehaviorJson;
use seqdim::sdp::InteriorPoint;
use seqdim::{Behavior, Scenario};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ORACLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOLVER: i32 = 70;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Solver(String),
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Oracle(_) => EXIT_ORACLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Solver(m) | CliError::Oracle(m) => m,
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::Solver { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::NoNormDrop { .. } => CliError::Solver(e.to_string()),
            BasisError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Basis(b) => b.into(),
            ExperimentError::Certify(c) => c.into(),
            ExperimentError::Quantum(q) => CliError::Data(q.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "seqdim", version = CODE_VERSION, about = "Dimension certification from sequential measurement statistics")]
struct Cli {
    /// TOML file whose entries override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sample-parallel commands.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    feasibility: Option<f64>,
    #[arg(long, global = true)]
    gap: Option<f64>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    #[arg(long, global = true)]
    drop_threshold: Option<f64>,
    #[arg(long, global = true)]
    stop_window: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build (or load) a basis and cross-check its cardinality with the rank oracle.
    Basis {
        #[arg(long)]
        scenario: Option<Scenario>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Basis cardinalities over scenarios and dimensions.
    Classify {
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<Scenario>>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        k: Option<usize>,
        /// Cross-check every cell with the rank oracle.
        #[arg(long)]
        with_oracle: bool,
    },
    /// Visibility of a behavior file against Q_d^k, writing the witness.
    Certify {
        #[arg(long)]
        behavior: Option<PathBuf>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Check a witness file against freshly sampled behaviors.
    WitnessCheck {
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Sampling dimension; defaults to the witness dimension.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "n")]
        n_samples: Option<usize>,
    },
    /// Certification probability of random behaviors.
    Sample(CampaignArgs),
    /// Certification probability and mean visibility across scenarios.
    Curve {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Explicit scenario list.
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<Scenario>>,
        /// Vary the number of settings of `--scenario`.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
        /// Vary the sequence length of `--scenario`.
        #[arg(long, value_delimiter = ',')]
        l_list: Option<Vec<usize>>,
    },
    /// Visibility histogram and moments of random behaviors.
    Distribution(CampaignArgs),
    /// Unrestricted and qubit level-1 maxima of the GYNI expression.
    Gyni,
    /// Search for a certified behavior above the tested dimension.
    QuquartHunt {
        #[arg(long)]
        scenario: Option<Scenario>,
        #[arg(long)]
        d_sample: Option<usize>,
        #[arg(long)]
        d_test: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct CampaignArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    d_sample: Option<usize>,
    #[arg(long)]
    d_test: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "n")]
    n_samples: Option<usize>,
}

impl CampaignArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.scenario = self.scenario;
        cfg.d_sample = self.d_sample;
        cfg.d_test = self.d_test;
        cfg.k = self.k;
        cfg.n_samples = self.n_samples;
    }
}

fn flags_config(cli: &Cli) -> RunConfig {
    let c = &cli.common;
    let mut cfg = RunConfig {
        seed: c.seed,
        threads: c.threads,
        cache_dir: c.cache_dir.clone(),
        out_dir: c.out_dir.clone(),
        feasibility: c.feasibility,
        gap: c.gap,
        max_iterations: c.max_iterations,
        drop_threshold: c.drop_threshold,
        stop_window: c.stop_window,
        ..RunConfig::default()
    };
    let name = match &cli.command {
        Command::Basis { scenario, d, k } => {
            cfg.scenario = *scenario;
            cfg.d = *d;
            cfg.k = *k;
            "basis"
        }
        Command::Classify {
            scenarios,
            dims,
            k,
            with_oracle,
        } => {
            cfg.scenarios = scenarios.clone();
            cfg.dims = dims.clone();
            cfg.k = *k;
            cfg.with_oracle = with_oracle.then_some(true);
            "classify"
        }
        Command::Certify { behavior, d, k } => {
            cfg.behavior = behavior.clone();
            cfg.d = *d;
            cfg.k = *k;
            "certify"
        }
        Command::WitnessCheck {
            witness,
            d,
            n_samples,
        } => {
            cfg.witness = witness.clone();
            cfg.d = *d;
            cfg.n_samples = *n_samples;
            "witness-check"
        }
        Command::Sample(a) => {
            a.apply(&mut cfg);
            "sample"
        }
        Command::Curve {
            campaign,
            scenarios,
            m_list,
            l_list,
        } => {
            campaign.apply(&mut cfg);
            cfg.scenarios = scenarios.clone();
            cfg.m_list = m_list.clone();
            cfg.l_list = l_list.clone();
            "curve"
        }
        Command::Distribution(a) => {
            a.apply(&mut cfg);
            "distribution"
        }
        Command::Gyni => "gyni",
        Command::QuquartHunt {
            scenario,
            d_sample,
            d_test,
            n_max,
        } => {
            cfg.scenario = *scenario;
            cfg.d_sample = *d_sample;
            cfg.d_test = *d_test;
            cfg.n_max = *n_max;
            "ququart-hunt"
        }
    };
    cfg.command = Some(name.to_string());
    cfg
}

/// Parses `args` (including the program name), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match resolve_config(&cli).and_then(|cfg| dispatch(&cfg, out, err)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let flags = flags_config(cli);
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            let file = RunConfig::from_toml(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            if let Some(cmd) = &file.command {
                if Some(cmd) != flags.command.as_ref() {
                    return Err(CliError::Usage(format!(
                        "config {} is for `{cmd}`",
                        path.display()
                    )));
                }
            }
            flags.overlay(file)
        }
        None => flags,
    };
    cfg.validate().map_err(CliError::Usage)?;
    if let Some(n) = cfg.threads {
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(cfg)
}

fn dispatch(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cfg.command.as_deref() {
        Some("basis") => cmd_basis(cfg, out),
        Some("classify") => cmd_classify(cfg, out),
        Some("certify") => cmd_certify(cfg, out),
        Some("witness-check") => cmd_witness_check(cfg, out),
        Some("sample") => cmd_campaign(cfg, out, err, false),
        Some("distribution") => cmd_campaign(cfg, out, err, true),
        Some("curve") => cmd_curve(cfg, out),
        Some("gyni") => cmd_gyni(cfg, out),
        Some("ququart-hunt") => cmd_hunt(cfg, out, err),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

fn require<T: Clone>(v: &Option<T>, field: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Usage(format!("missing `{field}`")))
}

#[derive(Serialize)]
struct Provenance<'a> {
    code_version: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    provenance: Provenance<'a>,
    result: &'a T,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Solver(format!("writing {}: {e}", path.display()))
}

fn write_json<T: Serialize>(cfg: &RunConfig, path: &Path, result: &T) -> Result<(), CliError> {
    let doc = Document {
        provenance: Provenance {
            code_version: CODE_VERSION,
            config: cfg,
        },
        result,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| io_error(path, e))?;
    write_file(path, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(path, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_csv(cfg: &RunConfig, path: &Path, body: &str) -> Result<(), CliError> {
    let config = serde_json::to_string(cfg).map_err(|e| io_error(path, e))?;
    let text = format!("# code_version={CODE_VERSION}\n# config={config}\n{body}");
    write_file(path, &text)
}

fn say(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{key}={value}").map_err(|e| CliError::Solver(format!("stdout: {e}")))
}

fn cmd_basis(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = require(&cfg.scenario, "scenario")?;
    let d = require(&cfg.d, "d")?;
    let k = cfg.level();
    let seed = cfg.seed();
    let basis = load_or_build(&cfg.cache_dir(), scenario, d, k, seed, &cfg.basis_config())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let oracle = rank_oracle(scenario, d, k, 2 * basis.cardinality() + 20, &mut rng)?;
    let file = cache_path(&cfg.out_dir(), scenario, d, k, seed);
    basis.save(&file)?;
    say(out, "scenario", scenario)?;
    say(out, "d", d)?;
    say(out, "k", k)?;
    say(out, "cardinality", basis.cardinality())?;
    say(out, "oracle_rank", oracle)?;
    say(out, "separation", format!("{:e}", basis.separation()))?;
    say(out, "basis_file", file.display())?;
    if oracle != basis.cardinality() {
        return Err(CliError::Oracle(format!(
            "basis cardinality {} differs from oracle rank {oracle}",
            basis.cardinality()
        )));
    }
    Ok(())
}

fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let scenarios = require(&cfg.scenarios, "scenarios")?;
    let dims = require(&cfg.dims, "dims")?;
    let with_oracle = cfg.with_oracle.unwrap_or(false);
    let table = classify(
        &scenarios,
        &dims,
        cfg.level(),
        cfg.seed(),
        &cfg.basis_config(),
        with_oracle,
    );
    let path = cfg
        .out_dir()
        .join(format!("classify_k{}.json", cfg.level()));
    write_json(cfg, &path, &table)?;
    let mut mismatch = false;
    for row in &table.rows {
        let cells: Vec<String> = row
            .cells
            .iter()
            .map(|c| {
                mismatch |= with_oracle && !c.oracle_agrees();
                match c.cardinality {
                    Some(n) => format!("d{}:{n}", c.d),
                    None => format!("d{}:error", c.d),
                }
            })
            .collect();
        let ratio = row.ratio_3_2.map_or("-".to_string(), |r| format!("{r:.4}"));
        let flags: Vec<String> = row
            .strict_increases
            .iter()
            .map(|(a, b)| format!("{a}<{b}"))
            .collect();
        say(
            out,
            &row.scenario.to_string(),
            format!(
                "{} ratio_3_2={ratio} increases={}",
                cells.join(" "),
                flags.join(",")
            ),
        )?;
    }
    say(out, "table_file", path.display())?;
    if mismatch {
        return Err(CliError::Oracle(
            "basis cardinality differs from oracle rank".into(),
        ));
    }
    Ok(())
}

fn read_behavior(path: &Path) -> Result<Behavior, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("behavior {}: {e}", path.display())))?;
    let json: BehaviorJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("behavior {}: {e}", path.display())))?;
    json.try_into().map_err(|e: seqdim::QuantumError| {
        CliError::Data(format!("behavior {}: {e}", path.display()))
    })
}

fn cmd_certify(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let path = require(&cfg.behavior, "behavior")?;
    let d = require(&cfg.d, "d")?;
    let behavior = read_behavior(&path)?;
    let scenario = behavior.scenario();
    let k = cfg.level();
    let basis = load_or_build(
        &cfg.cache_dir(),
        scenario,
        d,
        k,
        cfg.seed(),
        &cfg.basis_config(),
    )?;
    let program = RobustnessProgram::new(&basis)?;
    let result = program.solve(&behavior, &InteriorPoint::new(cfg.tolerances()))?;
    let stem = path
        .file_stem()
        .map_or("behavior".into(), |s| s.to_string_lossy().into_owned());
    let witness_path = cfg.out_dir().join(format!("witness_{stem}_d{d}_k{k}.json"));
    write_json(cfg, &witness_path, &WitnessJson::from(&result.witness))?;
    say(out, "scenario", scenario)?;
    say(out, "nu", format!("{:.9}", result.nu))?;
    say(
        out,
        "verdict",
        if result.certified() {
            format!("certified: no {d}-dimensional projective realization")
        } else {
            "not certified".to_string()
        },
    )?;
    say(out, "witness_file", witness_path.display())
}

fn read_witness(path: &Path) -> Result<Witness, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("witness {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("witness {}: {e}", path.display())))?;
    // Accept both bare witnesses and documents written by `certify`.
    let body = value.get("result").cloned().unwrap_or(value);
    let json: WitnessJson = serde_json::from_value(body)
        .map_err(|e| CliError::Data(format!("witness {}: {e}", path.display())))?;
    json.try_into()
        .map_err(|e: CertifyError| CliError::Data(e.to_string()))
}

fn cmd_witness_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let path = require(&cfg.witness, "witness")?;
    let witness = read_witness(&path)?;
    let d = cfg.d.unwrap_or(witness.d);
    let n = cfg.n_samples.unwrap_or(1000);
    let report = check_witness_on_samples(&witness, d, n, cfg.seed())
        .map_err(|e| CliError::Data(e.to_string()))?;
    say(out, "checked", report.checked)?;
    say(out, "violations", report.violations)?;
    say(out, "min_margin", format!("{:e}", report.min_margin))?;
    if report.violations > 0 {
        return Err(CliError::Oracle(format!(
            "{} of {} sampled {d}-dimensional behaviors violate the witness",
            report.violations, report.checked
        )));
    }
    Ok(())
}

fn campaign_spec(cfg: &RunConfig, scenario: Scenario) -> Result<CampaignSpec, CliError> {
    let d_sample = require(&cfg.d_sample, "d_sample")?;
    let d_test = require(&cfg.d_test, "d_test")?;
    let n = cfg.n_samples.unwrap_or(config::DEFAULT_SAMPLES);
    Ok(CampaignSpec::new(
        scenario,
        d_sample,
        d_test,
        cfg.level(),
        n,
        cfg.seed(),
    ))
}

fn cmd_campaign(
    cfg: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
    distribution: bool,
) -> Result<(), CliError> {
    let scenario = require(&cfg.scenario, "scenario")?;
    let spec = campaign_spec(cfg, scenario)?;
    let basis = load_or_build(
        &cfg.cache_dir(),
        scenario,
        spec.d_test,
        spec.k,
        cfg.seed(),
        &cfg.basis_config(),
    )?;
    let program = RobustnessProgram::new(&basis)?;
    let _ = writeln!(
        err,
        "{scenario}: {} samples from d={} against Q_{}^{} (basis cardinality {})",
        spec.n_samples,
        spec.d_sample,
        spec.d_test,
        spec.k,
        basis.cardinality()
    );
    let done = AtomicUsize::new(0);
    let step = (spec.n_samples / 10).max(1);
    let campaign = run_campaign(
        &spec,
        &program,
        &InteriorPoint::new(cfg.tolerances()),
        &|_| {
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n.is_multiple_of(step) {
                eprintln!("  {n}/{}", spec.n_samples);
            }
        },
    );
    let summary = CampaignSummary::new(&campaign, &basis);
    let stem = format!(
        "{}_{scenario}_ds{}_dt{}_k{}_s{}",
        if distribution {
            "distribution"
        } else {
            "sample"
        },
        spec.d_sample,
        spec.d_test,
        spec.k,
        spec.master_seed
    );
    let dir = cfg.out_dir();
    write_json(cfg, &dir.join(format!("{stem}.json")), &summary)?;
    write_csv(cfg, &dir.join(format!("{stem}.csv")), &campaign.to_csv())?;
    write_csv(
        cfg,
        &dir.join(format!("{stem}_histogram.csv")),
        &summary.distribution.histogram_csv(),
    )?;
    let est = &summary.estimate;
    say(out, "scenario", scenario)?;
    if distribution {
        say(out, "mean_nu", format!("{:.6}", summary.distribution.mean))?;
        say(
            out,
            "std_nu",
            format!("{:.6}", summary.distribution.std_dev),
        )?;
    } else {
        say(out, "p_hat", format!("{:.6}", est.p_hat))?;
        say(out, "ci95", format!("{:.6},{:.6}", est.lower, est.upper))?;
    }
    say(out, "certified", est.certified)?;
    say(out, "total", est.total)?;
    say(out, "failures", est.failures)?;
    say(
        out,
        "summary_file",
        dir.join(format!("{stem}.json")).display(),
    )?;
    if est.failure_rate > 0.01 {
        return Err(CliError::Solver(format!(
            "solver failure rate {:.2}% exceeds 1%",
            100.0 * est.failure_rate
        )));
    }
    Ok(())
}

fn curve_scenarios(cfg: &RunConfig) -> Result<Vec<Scenario>, CliError> {
    if let Some(list) = &cfg.scenarios {
        return Ok(list.clone());
    }
    let base = require(&cfg.scenario, "scenario")?;
    let build = |m: usize, l: usize| {
        Scenario::new(m, l, base.outcomes()).map_err(|e| CliError::Usage(e.to_string()))
    };
    match (&cfg.m_list, &cfg.l_list) {
        (Some(ms), None) => ms.iter().map(|&m| build(m, base.length())).collect(),
        (None, Some(ls)) => ls.iter().map(|&l| build(base.settings(), l)).collect(),
        _ => Err(CliError::Usage(
            "curve needs `scenarios`, or `scenario` with exactly one of `m_list`/`l_list`".into(),
        )),
    }
}

fn cmd_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let scenarios = curve_scenarios(cfg)?;
    let spec = campaign_spec(cfg, scenarios[0])?;
    let points = probability_curve(
        &scenarios,
        &spec,
        &cfg.basis_config(),
        &InteriorPoint::new(cfg.tolerances()),
    )?;
    let path = cfg.out_dir().join(format!(
        "curve_ds{}_dt{}_k{}_s{}.json",
        spec.d_sample, spec.d_test, spec.k, spec.master_seed
    ));
    write_json(cfg, &path, &points)?;
    let mut csv = String::from("scenario,p_hat,lower,upper,mean_nu,failures\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{}\n",
            p.scenario,
            p.estimate.p_hat,
            p.estimate.lower,
            p.estimate.upper,
            p.mean_nu,
            p.estimate.failures
        ));
        say(
            out,
            &p.scenario.to_string(),
            format!("p_hat={:.6} mean_nu={:.6}", p.estimate.p_hat, p.mean_nu),
        )?;
    }
    write_csv(cfg, &path.with_extension("csv"), &csv)?;
    say(out, "curve_file", path.display())?;
    if points.iter().any(|p| p.estimate.failure_rate > 0.01) {
        return Err(CliError::Solver("solver failure rate exceeds 1%".into()));
    }
    Ok(())
}

fn cmd_gyni(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let report = gyni_report(cfg.seed())?;
    let path = cfg.out_dir().join("gyni.json");
    write_json(cfg, &path, &report)?;
    say(out, "unrestricted", format!("{:.6}", report.unrestricted))?;
    say(out, "qubit_level1", format!("{:.6}", report.qubit_level1))?;
    say(out, "classical", format!("{:.6}", report.classical))?;
    say(out, "gyni_file", path.display())
}

fn cmd_hunt(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let scenario = cfg
        .scenario
        .unwrap_or(Scenario::new(2, 3, 3).expect("valid scenario"));
    let d_sample = cfg.d_sample.unwrap_or(4);
    let d_test = cfg.d_test.unwrap_or(3);
    let n_max = cfg.n_max.unwrap_or(config::DEFAULT_HUNT_BUDGET);
    let k = cfg.level();
    let basis = load_or_build(
        &cfg.cache_dir(),
        scenario,
        d_test,
        k,
        cfg.seed(),
        &cfg.basis_config(),
    )?;
    let program = RobustnessProgram::new(&basis)?;
    let _ = writeln!(
        err,
        "{scenario}: up to {n_max} samples from d={d_sample} against Q_{d_test}^{k}"
    );
    let outcome = ququart_hunt(
        &program,
        d_sample,
        n_max,
        cfg.seed(),
        &InteriorPoint::new(cfg.tolerances()),
    );
    let path = cfg.out_dir().join(format!(
        "hunt_{scenario}_ds{d_sample}_dt{d_test}_k{k}_s{}.json",
        cfg.seed()
    ));
    write_json(cfg, &path, &outcome)?;
    say(out, "tried", outcome.tried)?;
    say(out, "failures", outcome.failures)?;
    match &outcome.hit {
        Some(hit) => {
            say(out, "found", true)?;
            say(out, "index", hit.index)?;
            say(out, "nu", format!("{:.9}", hit.nu))?;
        }
        None => say(out, "found", false)?,
    }
    say(out, "hunt_file", path.display())
}
