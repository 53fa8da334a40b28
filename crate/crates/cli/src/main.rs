//! Deterministic command-line front end: config parsing, subcommand dispatch,
//! and result serialization. Every data output is byte-reproducible under the
//! same config and seed; the run manifest (timings, digests) is the only file
//! that varies between runs.
//!
//! Exit codes: 0 success, 1 domain/config errors, 2 solver failures.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::ExperimentConfig;
use momentcert::acceptance::{run_all, AcceptanceConfig};
use momentcert::certify::{
    certify_bounded, certify_hypercontractive, certify_subgaussian_profile, CertifyError,
    CertifyReport, DEFAULT_REPORT_TOL,
};
use momentcert::distributions::{contaminate, sample};
use momentcert::oracles::{injective_norm, resilience, InjectiveMethod};
use momentcert::pexp::read_pexp_json;
use momentcert::robust_mean::{
    error_sweep, mean_filter_deg2, mean_filter_deg4, plot_data_csv, SweepConfig,
};
use momentcert::tensor::{
    empirical_moment_tensor, read_samples_csv, read_tensor_json, samples_csv_string,
    write_samples_csv,
};

#[derive(Parser)]
#[command(
    name = "momentcert",
    version,
    about = "SoS certification of moment tensors, pseudoexpectation tooling, and robust mean filters"
)]
struct Cli {
    /// Worker threads for trial/profile parallelism (default: serial).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the minimal bound B for a moment tensor JSON file.
    Certify(CertifyArgs),
    /// Per-order certification profile of a configured distribution.
    Profile(ProfileArgs),
    /// Draw samples from a configured distribution into CSV.
    Sample(SampleArgs),
    /// Apply the configured contamination adversary to a sample CSV.
    Contaminate(ContaminateArgs),
    /// Lower-bound the injective norm of a moment tensor.
    InjectiveNorm(InjectiveArgs),
    /// Estimate the resilience of a sample set at a given epsilon.
    Resilience(ResilienceArgs),
    /// Run the robust mean filters on a sample CSV.
    RobustMean(RobustMeanArgs),
    /// Contamination error sweep across epsilons and trials.
    ErrorSweep(ErrorSweepArgs),
    /// Pseudoexpectation utilities.
    Pexp(PexpArgs),
    /// Run the full acceptance checklist, writing result artifacts.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// Moment tensor JSON (graded-lex entries).
    #[arg(long)]
    input: PathBuf,
    /// Optional covariance tensor JSON; switches to the hypercontractive
    /// (whitened) certification.
    #[arg(long)]
    covariance: Option<PathBuf>,
    /// Known subgaussian constant, reported as the ratio denominator.
    #[arg(long)]
    s_known: Option<f64>,
    /// Reported B tolerance.
    #[arg(long, default_value_t = DEFAULT_REPORT_TOL)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// TOML config with [distribution], [sample], [profile] blocks.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (m, b_min, ratio rows).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ContaminateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Clean sample CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct InjectiveArgs {
    #[arg(long)]
    input: PathBuf,
    /// grid2d (d = 2 only) or power.
    #[arg(long, default_value = "power")]
    method: String,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ResilienceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 8)]
    dirs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RobustMeanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// deg2, deg4, or both.
    #[arg(long, default_value = "both")]
    method: String,
    /// Known subgaussian constant of the inlier family.
    #[arg(long, default_value_t = 1.0)]
    s_known: f64,
    /// Optional TOML config with a [filter] block.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ErrorSweepArgs {
    /// TOML config with [distribution], [sweep] (and optional [filter]).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct PexpArgs {
    #[command(subcommand)]
    command: PexpCommand,
}

#[derive(Subcommand)]
enum PexpCommand {
    /// Validate a pseudoexpectation JSON dump.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Args)]
struct SelftestArgs {
    /// Directory for result artifacts.
    #[arg(long, default_value = "selftest-out")]
    output_dir: PathBuf,
}

enum CliError {
    Domain(String),
    Solver(String),
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::SolverFailure(msg) => CliError::Solver(msg),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

struct Manifest {
    config_hash: Option<String>,
    steps: Vec<(String, u128)>,
    outputs: Vec<(PathBuf, String)>,
}

impl Manifest {
    fn new() -> Self {
        Manifest {
            config_hash: None,
            steps: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn hash_config(&mut self, text: &str) {
        self.config_hash = Some(hex_digest(text.as_bytes()));
    }

    fn step<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.steps.push((name.to_string(), t0.elapsed().as_millis()));
        out
    }

    fn record_output(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        std::fs::write(path, contents).map_err(domain)?;
        self.outputs.push((path.to_path_buf(), hex_digest(contents.as_bytes())));
        Ok(())
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config_hash,
            "steps": self.steps.iter().map(|(n, ms)| serde_json::json!({"name": n, "millis": ms})).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|(p, h)| serde_json::json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
        });
        std::fs::write(path, serde_json::to_string_pretty(&json).map_err(domain)?)
            .map_err(domain)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(CliError::Domain)?;
    if let Ok(seed_text) = std::env::var("SOS_CERT_SEED") {
        let seed: u64 = seed_text
            .parse()
            .map_err(|e| CliError::Domain(format!("SOS_CERT_SEED: {e}")))?;
        cfg.override_seeds(seed);
    }
    Ok((cfg, text))
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, contents).map_err(domain),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify(args) => {
            let tensor = read_tensor_json(&args.input).map_err(domain)?;
            let result = match &args.covariance {
                Some(cov_path) => {
                    let t2 = read_tensor_json(cov_path).map_err(domain)?;
                    certify_hypercontractive(&t2, &tensor, args.tol)?
                }
                None => certify_bounded(&tensor, args.tol)?,
            };
            let report = CertifyReport::from_result(tensor.d, tensor.m, &result, args.s_known);
            let json = serde_json::to_string_pretty(&report).map_err(domain)?;
            emit(args.output.as_deref(), &json)
        }
        Command::Profile(args) => {
            let (cfg, text) = load_config(&args.config)?;
            let dist = cfg
                .distribution
                .as_ref()
                .ok_or(CliError::Domain("config needs [distribution]".into()))?
                .to_spec()
                .map_err(CliError::Domain)?;
            let sample_block = cfg
                .sample
                .as_ref()
                .ok_or(CliError::Domain("config needs [sample]".into()))?;
            let profile_block = cfg.profile.clone().unwrap_or(config::ProfileBlock {
                m_list: vec![2, 4, 6, 8],
                center: true,
                s_known: None,
            });
            let s_known = profile_block
                .s_known
                .or_else(|| dist.known_subgaussian_s())
                .ok_or(CliError::Domain(
                    "family has no known constant; set profile.s_known".into(),
                ))?;
            let mut manifest = Manifest::new();
            manifest.hash_config(&text);
            let data = manifest.step("sample", || sample(&dist, sample_block.n, sample_block.seed));
            let data = data.map_err(domain)?;
            let tensors = manifest.step("tensors", || {
                profile_block
                    .m_list
                    .iter()
                    .map(|&m| empirical_moment_tensor(&data, m, profile_block.center))
                    .collect::<Result<Vec<_>, _>>()
            });
            let tensors = tensors.map_err(domain)?;
            let rows = manifest.step("certify", || {
                certify_subgaussian_profile(&tensors, s_known, DEFAULT_REPORT_TOL)
            })?;
            let mut csv = String::from("m,b_min,ratio\n");
            for r in &rows {
                csv.push_str(&format!("{},{},{}\n", r.m, r.b_min, r.ratio));
            }
            manifest.record_output(&args.output, &csv)?;
            manifest.write(&args.output.with_extension("manifest.json"))?;
            Ok(())
        }
        Command::Sample(args) => {
            let (cfg, text) = load_config(&args.config)?;
            let dist = cfg
                .distribution
                .as_ref()
                .ok_or(CliError::Domain("config needs [distribution]".into()))?
                .to_spec()
                .map_err(CliError::Domain)?;
            let block = cfg
                .sample
                .as_ref()
                .ok_or(CliError::Domain("config needs [sample]".into()))?;
            let mut manifest = Manifest::new();
            manifest.hash_config(&text);
            let mut data = manifest
                .step("sample", || sample(&dist, block.n, block.seed))
                .map_err(domain)?;
            if let Some(cont) = &cfg.contamination {
                let spec = cont.to_spec().map_err(CliError::Domain)?;
                data = manifest
                    .step("contaminate", || contaminate(&data, &spec))
                    .map_err(domain)?;
            }
            manifest.record_output(&args.output, &samples_csv_string(&data))?;
            manifest.write(&args.output.with_extension("manifest.json"))?;
            Ok(())
        }
        Command::Contaminate(args) => {
            let (cfg, _) = load_config(&args.config)?;
            let cont = cfg
                .contamination
                .as_ref()
                .ok_or(CliError::Domain("config needs [contamination]".into()))?
                .to_spec()
                .map_err(CliError::Domain)?;
            let data = read_samples_csv(&args.input).map_err(domain)?;
            let out = contaminate(&data, &cont).map_err(domain)?;
            write_samples_csv(&out, &args.output).map_err(domain)?;
            Ok(())
        }
        Command::InjectiveNorm(args) => {
            let tensor = read_tensor_json(&args.input).map_err(domain)?;
            let method = match args.method.as_str() {
                "grid2d" => InjectiveMethod::Grid2D,
                "power" => InjectiveMethod::PowerIterationMultiStart,
                other => return Err(CliError::Domain(format!("unknown method `{other}`"))),
            };
            let est = injective_norm(&tensor, method, args.starts, args.seed).map_err(domain)?;
            let json = serde_json::to_string_pretty(&est).map_err(domain)?;
            emit(args.output.as_deref(), &json)
        }
        Command::Resilience(args) => {
            let data = read_samples_csv(&args.input).map_err(domain)?;
            let est = resilience(&data, args.epsilon, args.dirs, args.seed).map_err(domain)?;
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "epsilon": est.epsilon,
                "delta": est.delta,
                "witness_direction": est.witness_direction,
                "witness_subset_len": est.witness_subset.len(),
                "witness_subset": est.witness_subset,
                "centering": "empirical mean of the full set",
            }))
            .map_err(domain)?;
            emit(args.output.as_deref(), &json)
        }
        Command::RobustMean(args) => {
            let data = read_samples_csv(&args.input).map_err(domain)?;
            let filter_cfg = match &args.config {
                Some(path) => {
                    let (cfg, _) = load_config(path)?;
                    cfg.filter
                        .map(|f| f.to_config())
                        .unwrap_or_default()
                }
                None => Default::default(),
            };
            let mut out = serde_json::Map::new();
            if args.method == "deg2" || args.method == "both" {
                let (rep, _) = mean_filter_deg2(&data, args.epsilon, args.s_known, &filter_cfg)
                    .map_err(domain)?;
                out.insert("deg2".into(), serde_json::to_value(&rep).map_err(domain)?);
            }
            if args.method == "deg4" || args.method == "both" {
                let (rep, _) = mean_filter_deg4(&data, args.epsilon, args.s_known, &filter_cfg)
                    .map_err(domain)?;
                out.insert("deg4".into(), serde_json::to_value(&rep).map_err(domain)?);
            }
            if out.is_empty() {
                return Err(CliError::Domain(format!(
                    "unknown method `{}` (expected deg2, deg4, both)",
                    args.method
                )));
            }
            let json =
                serde_json::to_string_pretty(&serde_json::Value::Object(out)).map_err(domain)?;
            emit(args.output.as_deref(), &json)
        }
        Command::ErrorSweep(args) => {
            let (cfg, text) = load_config(&args.config)?;
            let dist = cfg
                .distribution
                .as_ref()
                .ok_or(CliError::Domain("config needs [distribution]".into()))?
                .to_spec()
                .map_err(CliError::Domain)?;
            let sweep = cfg
                .sweep
                .as_ref()
                .ok_or(CliError::Domain("config needs [sweep]".into()))?;
            let mut sweep_cfg = SweepConfig::new(
                dist,
                sweep.n,
                sweep.epsilon_list.clone(),
                sweep.trials,
                sweep.seed,
            );
            sweep_cfg.adversary = sweep.adversary();
            if let Some(f) = &cfg.filter {
                sweep_cfg.filter = f.to_config();
            }
            let mut manifest = Manifest::new();
            manifest.hash_config(&text);
            let table = manifest.step("sweep", || error_sweep(&sweep_cfg));
            let table = table.map_err(domain)?;
            std::fs::create_dir_all(&args.output_dir).map_err(domain)?;
            let mut rows_csv =
                String::from("epsilon,trial,method,error,iterations,removed_mass\n");
            for r in &table.rows {
                rows_csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.epsilon, r.trial, r.method, r.error, r.iterations, r.removed_mass
                ));
            }
            manifest.record_output(&args.output_dir.join("sweep_rows.csv"), &rows_csv)?;
            manifest.record_output(
                &args.output_dir.join("sweep_plot.csv"),
                &plot_data_csv(&table),
            )?;
            let summary = serde_json::to_string_pretty(&serde_json::json!({
                "medians": table.medians,
                "exponents": table.exponents,
                "resilience_scale": table.resilience_scale,
            }))
            .map_err(domain)?;
            manifest.record_output(&args.output_dir.join("sweep_summary.json"), &summary)?;
            manifest.write(&args.output_dir.join("manifest.json"))?;
            Ok(())
        }
        Command::Pexp(args) => match args.command {
            PexpCommand::Validate { input, tol } => {
                let pe = read_pexp_json(&input).map_err(domain)?;
                let verdict = pe.validate(tol);
                let json = serde_json::to_string_pretty(&verdict).map_err(domain)?;
                println!("{json}");
                Ok(())
            }
        },
        Command::Selftest(args) => {
            std::fs::create_dir_all(&args.output_dir).map_err(domain)?;
            let results = run_all(&AcceptanceConfig::default(), Some(&args.output_dir));
            let mut all_pass = true;
            for r in &results {
                println!(
                    "criterion {:2} [{}] {}: {}",
                    r.id,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.details
                );
                all_pass &= r.passed;
            }
            let json = serde_json::to_string_pretty(&results).map_err(domain)?;
            std::fs::write(args.output_dir.join("acceptance_results.json"), json)
                .map_err(domain)?;
            if all_pass {
                Ok(())
            } else {
                Err(CliError::Domain("selftest criteria failed".into()))
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let outcome = pool.install(|| run(cli));
    match outcome {
        Ok(()) => {}
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            std::process::exit(2);
        }
    }
}
