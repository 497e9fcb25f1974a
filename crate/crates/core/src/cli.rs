//! The `privpref` command line: one subcommand per experiment stage.
//!
//! Every output file carries the digest of the fully resolved run
//! configuration, either in its own body (JSON) or in a `<file>.meta.json`
//! sidecar (CSV). Exit codes: 0 success, 1 usage error, 2 data or
//! configuration error, 3 internal invariant failure. Failures print one
//! `error[<kind>]: <message>` line to standard error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{load_dataset, save_dataset, FeatureSchema, LabeledDataset};
use crate::datagen::generate;
use crate::digest_json;
use crate::error::{Error, Result};
use crate::eval::{
    common_digest, comparison_csv, evaluate_model, load_reports, model_comparison_csv, read_meta, reference_size,
    report_file_name, scale_curve_csv, scale_sweep, write_with_meta, OutputMeta, SweepConfig,
};
use crate::models::{fit_model, ModelKind};
use crate::preprocess::{run_pipeline, GeneralizationHierarchy};
use crate::rl::{train_q, PersonaEnv};

/// Resolved settings for any subcommand. Loaded from `--config`, then
/// overridden by flags.
pub type RunConfig = SweepConfig;

pub const SEED_ENV: &str = "PRIVPREF_SEED";

#[derive(Debug, Parser)]
#[command(name = "privpref", version, about = "Privacy-preference modeling experiments")]
pub struct Cli {
    /// Worker threads (default: 1, or all cores for `sweep`).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Master seed; falls back to $PRIVPREF_SEED, then the config file.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,

    /// Run configuration JSON; every field is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PrepFlags {
    #[arg(long)]
    pub dp_epsilon: Option<f64>,
    #[arg(long)]
    pub anonymity_k: Option<usize>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Skip differential-privacy perturbation.
    #[arg(long)]
    pub no_dp: bool,
}

#[derive(Debug, Args, Clone, Default)]
pub struct RlFlags {
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon_decay: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Record count (overrides the configured volume).
        #[arg(long)]
        volume: Option<usize>,
    },
    /// Deduplicate, impute, anonymize, perturb and optionally augment.
    Prep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dataset schema JSON (default: the built-in schema).
        #[arg(long)]
        schema: Option<PathBuf>,
        #[command(flatten)]
        prep: PrepFlags,
    },
    /// Fit one model on a dataset and save it.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Cross-validate one model and write its metrics report.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Train a Q-table against the persona environment.
    Rl {
        #[command(flatten)]
        common: Common,
        /// Output directory for `qtable.json` and `episodes.csv`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        rl: RlFlags,
    },
    /// Evaluate models across dataset sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated ascending sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Comma-separated model ids (nb, mlp, q, rule).
        #[arg(long, alias = "models", value_delimiter = ',')]
        model: Option<Vec<ModelKind>>,
        #[arg(long)]
        folds: Option<usize>,
        /// Also write per-fold rows to the comparison table.
        #[arg(long)]
        per_fold: bool,
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        prep: PrepFlags,
        #[command(flatten)]
        rl: RlFlags,
    },
    /// Turn sweep outputs into plot-data tables.
    Report {
        /// Sweep output directories; all must share one config digest.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {line}", e.kind());
            if e.is_internal() {
                3
            } else {
                2
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(match cli.command {
        Command::Sweep { .. } => 0,
        _ => 1,
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn parent_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

/// Config file, then environment/flag seed.
fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &common.config {
        Some(path) => read_json(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_prep(cfg: &mut RunConfig, flags: &PrepFlags) {
    if let Some(e) = flags.dp_epsilon {
        cfg.preprocess.dp_epsilon = e;
    }
    if let Some(k) = flags.anonymity_k {
        cfg.preprocess.anonymity_k = k;
    }
    if let Some(k) = flags.knn_k {
        cfg.preprocess.knn_k = k;
    }
    if flags.no_dp {
        cfg.preprocess.dp_enabled = false;
    }
}

fn apply_rl(cfg: &mut RunConfig, flags: &RlFlags) {
    if let Some(n) = flags.episodes {
        cfg.rl.episodes = n;
    }
    if let Some(a) = flags.alpha {
        cfg.rl.alpha = a;
    }
    if let Some(g) = flags.gamma {
        cfg.rl.gamma = g;
    }
    if let Some(d) = flags.epsilon_decay {
        cfg.rl.epsilon_decay = d;
    }
}

/// Resolved configuration echoed into outputs, with its digest.
#[derive(Debug, Serialize)]
struct Resolved<'a> {
    command: &'a str,
    config: &'a RunConfig,
    inputs: Vec<String>,
}

fn meta_for(command: &str, cfg: &RunConfig, inputs: &[&Path]) -> Result<OutputMeta> {
    let resolved = Resolved {
        command,
        config: cfg,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
    };
    Ok(OutputMeta {
        config_digest: digest_json(&resolved),
        config: serde_json::to_value(&resolved)?,
        details: None,
    })
}

fn load_input(data: &Path, schema: Option<&Path>) -> Result<LabeledDataset> {
    let schema = match schema {
        Some(p) => {
            let s: FeatureSchema = read_json(p)?;
            s.validate()?;
            s
        }
        None => FeatureSchema::default_privacy(),
    };
    load_dataset(data, &schema)
}

fn save_with_meta(ds: &LabeledDataset, path: &Path, meta: &OutputMeta) -> Result<()> {
    parent_dir(path)?;
    save_dataset(ds, path)?;
    let mp = crate::eval::meta_path(path);
    write_json(&mp, meta)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen { common, out, volume } => {
            let mut cfg = base_config(&common)?;
            if let Some(v) = volume {
                cfg.generator.volume = v;
            }
            cfg.generator.master_seed = cfg.seed;
            let ds = generate(&cfg.generator)?;
            save_with_meta(&ds, &out, &meta_for("gen", &cfg, &[])?)
        }
        Command::Prep { common, data, out, schema, prep } => {
            let mut cfg = base_config(&common)?;
            apply_prep(&mut cfg, &prep);
            cfg.preprocess.seed = cfg.seed;
            let ds = load_input(&data, schema.as_deref())?;
            let hierarchy = if cfg.hierarchy == GeneralizationHierarchy::default() {
                GeneralizationHierarchy::default_for(&ds.schema)
            } else {
                cfg.hierarchy.clone()
            };
            let (processed, report) = run_pipeline(&ds, &hierarchy, &cfg.preprocess)?;
            let mut meta = meta_for("prep", &cfg, &[&data])?;
            meta.details = Some(serde_json::json!({
                "pipeline": report,
                "hierarchy": hierarchy,
                "schema": processed.schema,
            }));
            save_with_meta(&processed, &out, &meta)
        }
        Command::Train { common, data, model, out, schema } => {
            let cfg = base_config(&common)?;
            let ds = load_input(&data, schema.as_deref())?;
            let trained = fit_model(model, &ds, &cfg.settings, cfg.seed)?;
            let mut doc = trained.to_document(&ds.schema);
            doc.config_digest = Some(meta_for("train", &cfg, &[&data])?.config_digest);
            parent_dir(&out)?;
            doc.save(&out)
        }
        Command::Eval { common, data, model, out, folds, schema, timing } => {
            let mut cfg = base_config(&common)?;
            if let Some(k) = folds {
                cfg.folds = k;
            }
            let ds = load_input(&data, schema.as_deref())?;
            let digest = meta_for("eval", &cfg, &[&data])?.config_digest;
            let mut report = evaluate_model(model, &ds, &cfg.settings, cfg.folds, cfg.seed, &digest)?;
            if !timing {
                report.wall_clock_seconds = None;
            }
            parent_dir(&out)?;
            report.save(&out)
        }
        Command::Rl { common, out, rl } => {
            let mut cfg = base_config(&common)?;
            apply_rl(&mut cfg, &rl);
            cfg.rl.seed = cfg.seed;
            let mut env = PersonaEnv::new(&cfg.generator)?;
            let (q, log) = train_q(&mut env, &cfg.rl)?;
            create_dir(&out)?;
            let meta = meta_for("rl", &cfg, &[])?;
            let doc = serde_json::json!({
                "config_digest": meta.config_digest,
                "table": q.to_document(env.space()),
            });
            write_json(&out.join("qtable.json"), &doc)?;
            write_with_meta(&out.join("episodes.csv"), &log.to_csv(), &meta)
        }
        Command::Sweep { common, out, sizes, model, folds, per_fold, timing, prep, rl } => {
            let mut cfg = base_config(&common)?;
            if let Some(s) = sizes {
                cfg.sizes = s;
            }
            if let Some(m) = model {
                cfg.models = m;
            }
            if let Some(k) = folds {
                cfg.folds = k;
            }
            apply_prep(&mut cfg, &prep);
            apply_rl(&mut cfg, &rl);
            run_sweep(&cfg, &out, per_fold, timing)
        }
        Command::Report { inputs, out } => run_report(&inputs, &out),
    }
}

pub const REPORTS_DIR: &str = "reports";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const RUN_CONFIG_FILE: &str = "run_config.json";

/// Runs a sweep and writes `run_config.json`, `comparison.csv`,
/// `episodes.csv` and `reports/<model>_<size>.json` under `out`.
pub fn run_sweep(cfg: &RunConfig, out: &Path, per_fold: bool, timing: bool) -> Result<()> {
    let result = scale_sweep(cfg)?;
    let meta = OutputMeta {
        config_digest: result.config_digest.clone(),
        config: serde_json::to_value(cfg)?,
        details: None,
    };
    let reports_dir = out.join(REPORTS_DIR);
    create_dir(&reports_dir)?;
    write_json(&out.join(RUN_CONFIG_FILE), &meta)?;
    write_with_meta(&out.join(COMPARISON_FILE), &comparison_csv(&result.reports, per_fold), &meta)?;
    write_with_meta(&out.join(EPISODES_FILE), &result.episode_log.to_csv(), &meta)?;
    for r in &result.reports {
        let mut r = r.clone();
        if !timing {
            r.wall_clock_seconds = None;
        }
        r.save(reports_dir.join(report_file_name(r.model, r.dataset_size)))?;
    }
    Ok(())
}

pub const FIG3_FILE: &str = "fig3_model_comparison.csv";
pub const FIG4_FILE: &str = "fig4_scale_curve.csv";
pub const FIG5_FILE: &str = "fig5_cumulative_reward.csv";

/// Reads sweep directories and writes the three plot-data tables. Inputs with
/// different config digests are refused.
pub fn run_report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let mut reports = Vec::new();
    let mut digests = Vec::new();
    let mut episodes: Option<String> = None;
    for dir in inputs {
        let rs = load_reports(&dir.join(REPORTS_DIR))?;
        digests.extend(rs.iter().map(|r| r.config_digest.clone()));
        reports.extend(rs);
        let ep = dir.join(EPISODES_FILE);
        if ep.exists() {
            digests.push(read_meta(&ep)?.config_digest);
            if episodes.is_none() {
                episodes = Some(fs::read_to_string(&ep).map_err(|e| Error::io(&ep, e))?);
            }
        }
    }
    let digest = common_digest(digests.iter().map(String::as_str))?;
    let meta = OutputMeta {
        config_digest: digest,
        config: serde_json::json!({ "inputs": inputs }),
        details: None,
    };
    create_dir(out)?;
    let size = reference_size(&reports).ok_or_else(|| Error::ConfigInvalid("no reports found".into()))?;
    write_with_meta(&out.join(FIG3_FILE), &model_comparison_csv(&reports, size), &meta)?;
    write_with_meta(&out.join(FIG4_FILE), &scale_curve_csv(&reports), &meta)?;
    if let Some(text) = episodes {
        let mut fig5 = String::from("episode,reward,cumulative_reward\n");
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for row in rdr.records() {
            let row = row?;
            fig5.push_str(&format!("{},{},{}\n", &row[0], &row[1], &row[2]));
        }
        write_with_meta(&out.join(FIG5_FILE), &fig5, &meta)?;
    }
    Ok(())
}
