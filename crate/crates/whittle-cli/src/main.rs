//! `whittle` — validate model and experiment files, compute exact Whittle
//! indices, run Q-learning experiments, compare policies against baselines,
//! and emit plot-ready CSV.
//!
//! Exit codes: 0 on success, 1 on validation/contract errors, 2 on solver
//! non-convergence (including learner divergence). Errors go to standard
//! error as `error[kind]: message` with kind one of `config`, `usage`,
//! `validate`, `solver`, `io`.

mod plotdata;

use clap::{Args, Parser, Subcommand};
use plotdata::{emit_plot_data, Figure};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::Value;
use whittle_core::checkpoint::CheckpointError;
use whittle_core::config::{
    apply_override, config_hash, BaselineKind, ConfigError, ExperimentConfig, ModelSpec,
};
use whittle_core::harness::{
    baseline_plan, build_plan, compare_rewards, exact_index_tables, quantile_sorted,
    run_experiment, write_run_csv, ExperimentPlan, HarnessError, RunRecord,
};
use whittle_core::oracle::{scan_indexability, subsidy_grid, whittle_indices};
use whittle_core::policy::PolicyMode;
use whittle_core::{OracleError, OracleOptions, StepSchedule};

#[derive(Parser)]
#[command(name = "whittle", version, about = "Restless-bandit toolkit: exact Whittle indices, Q-learning runs, plot data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model or experiment file against the format's invariants.
    Validate(ValidateArgs),
    /// Compute exact Whittle indices for every class in a model file.
    Oracle(ModelArgs),
    /// Run a learning experiment; writes manifest, per-seed metrics CSV,
    /// final checkpoints, and index plot data into a run directory.
    Learn(RunArgs),
    /// Run the experiment and its baselines, then summarize rewards.
    Compare(RunArgs),
    /// Verify that passive sets grow monotonically over a subsidy grid.
    ScanIndexability(ModelArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Model file to check.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Experiment file to check (also loads and checks its model).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override `key.path=value`, applied before validation (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Override `key.path=value`, applied after parsing (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output root (default: $WHITTLE_OUT_ROOT, else ./runs).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace the experiment's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the experiment horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Override the exploration rate.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override `key.path=value`, applied in order before the flags above
    /// (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validate(String),

    #[error("{0}")]
    Solver(#[from] OracleError),

    #[error("{0}")]
    Harness(#[from] HarnessError),

    #[error("{0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Io { .. }) => "io",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Validate(_) => "validate",
            CliError::Solver(_) => "solver",
            CliError::Harness(h) => match h {
                HarnessError::Diverged { .. } | HarnessError::Oracle(_) => "solver",
                HarnessError::Io { .. } | HarnessError::Csv(_) => "io",
                HarnessError::Config(ConfigError::Io { .. }) => "io",
                HarnessError::Config(_) => "config",
                _ => "validate",
            },
            CliError::Checkpoint(_) | CliError::Io { .. } => "io",
        }
    }

    fn exit_code(&self) -> i32 {
        if self.kind() == "solver" {
            2
        } else {
            1
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version print to stdout and exit 0; bad usage is a
            // contract error, so remap clap's default code 2 to 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Compare(a) => cmd_compare(a),
        Command::ScanIndexability(a) => cmd_scan(a),
    };
    if let Err(e) = result {
        eprintln!("error[{}]: {}", e.kind(), e);
        std::process::exit(e.exit_code());
    }
}

// ---------------------------------------------------------------- loading

fn load_tree(path: &Path, sets: &[String]) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut root: Value = toml::from_str(&text).map_err(ConfigError::from)?;
    for s in sets {
        apply_override(&mut root, s)?;
    }
    Ok(root)
}

fn load_model(path: &Path, sets: &[String]) -> Result<ModelSpec, CliError> {
    Ok(ModelSpec::from_value(&load_tree(path, sets)?)?)
}

struct LoadedExperiment {
    exp: ExperimentConfig,
    model: ModelSpec,
    hash: String,
    /// Effective override list: `--set` entries first, then flag-derived
    /// ones, in application order. Echoed into the manifest.
    overrides: Vec<String>,
}

fn load_experiment(
    path: &Path,
    sets: &[String],
    seed: Option<u64>,
    horizon: Option<u64>,
    epsilon: Option<f64>,
) -> Result<LoadedExperiment, CliError> {
    let mut overrides = sets.to_vec();
    if let Some(h) = horizon {
        overrides.push(format!("horizon={h}"));
    }
    if let Some(e) = epsilon {
        overrides.push(format!("policy.epsilon={e}"));
    }
    if let Some(s) = seed {
        overrides.push(format!("seeds=[{s}]"));
    }
    let tree = load_tree(path, &overrides)?;
    let exp = ExperimentConfig::from_value(&tree)?;
    let model_path = exp.resolve_model_path(path);
    let model_tree = load_tree(&model_path, &[])?;
    let model = ModelSpec::from_value(&model_tree)?;
    let hash = config_hash(&tree, &model_tree);
    Ok(LoadedExperiment {
        exp,
        model,
        hash,
        overrides,
    })
}

// ------------------------------------------------------------------ verbs

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    match (&a.model, &a.config) {
        (Some(_), Some(_)) | (None, None) => Err(CliError::Usage(
            "pass exactly one of --model or --config".into(),
        )),
        (Some(path), None) => {
            let spec = load_model(path, &a.set)?;
            // Building the instance exercises the arm-class mapping and the
            // budget bound when the file pins the shape.
            if spec.n_arms.is_some() && spec.budget.is_some() {
                spec.instance(None, None)?;
            }
            let dims: Vec<String> = spec.classes.iter().map(|c| c.d().to_string()).collect();
            println!(
                "ok: {} ({} class{} with {} states)",
                path.display(),
                spec.classes.len(),
                if spec.classes.len() == 1 { "" } else { "es" },
                dims.join("/"),
            );
            Ok(())
        }
        (None, Some(path)) => {
            let le = load_experiment(path, &a.set, None, None, None)?;
            let plan = build_plan(&le.exp, &le.model, le.hash.clone())?;
            println!(
                "ok: {} (model {}, {} arms, budget {}, horizon {}, {} seed{}, epsilon {})",
                path.display(),
                le.exp.model,
                plan.instance.n_arms(),
                plan.instance.budget(),
                plan.horizon,
                plan.seeds.len(),
                if plan.seeds.len() == 1 { "" } else { "s" },
                plan.epsilon,
            );
            Ok(())
        }
    }
}

fn cmd_oracle(a: ModelArgs) -> Result<(), CliError> {
    let spec = load_model(&a.model, &a.set)?;
    let opts = OracleOptions::default();
    let mut out = String::from("class,state,lambda_star,residual,bracket_width\n");
    for (ci, class) in spec.classes.iter().enumerate() {
        let table = whittle_indices(class, &opts)?;
        for k in 0..class.d() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                ci + 1,
                k + 1,
                table.lambda_star[k],
                table.residuals[k],
                table.bracket_width[k],
            );
        }
    }
    match &a.out {
        Some(p) => write_bytes(p, out.as_bytes()),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn cmd_scan(a: ModelArgs) -> Result<(), CliError> {
    let spec = load_model(&a.model, &a.set)?;
    let opts = OracleOptions::default();
    let mut table = String::from("class,lambda,passive_size,passive_states\n");
    for (ci, class) in spec.classes.iter().enumerate() {
        // Indices live in [-max|r|, max|r|]; pad by 1 so the grid's ends sit
        // strictly outside that range.
        let bound = class.max_abs_reward() + 1.0;
        let grid = subsidy_grid(-bound, bound, 0.05);
        let report = scan_indexability(class, &grid, &opts)?;
        for (lam, set) in &report.passive_sets {
            let states: Vec<String> = set.iter().map(|s| (s + 1).to_string()).collect();
            let _ = writeln!(table, "{},{},{},{}", ci + 1, lam, set.len(), states.join(" "));
        }
        if let Some((prev, lam, dropped)) = &report.first_violation {
            let states: Vec<String> = dropped.iter().map(|s| (s + 1).to_string()).collect();
            return Err(CliError::Validate(format!(
                "class {} is not indexable: state(s) {} left the passive set between subsidies {prev} and {lam}",
                ci + 1,
                states.join(" "),
            )));
        }
        println!(
            "class {}: indexable over [{}, {}] step 0.05 ({} grid points)",
            ci + 1,
            -bound,
            bound,
            grid.len(),
        );
    }
    if let Some(p) = &a.out {
        write_bytes(p, table.as_bytes())?;
    }
    Ok(())
}

fn cmd_learn(a: RunArgs) -> Result<(), CliError> {
    let le = load_experiment(&a.config, &a.set, a.seed, a.horizon, a.epsilon)?;
    let plan = build_plan(&le.exp, &le.model, le.hash.clone())?;
    let dir = make_run_dir(&a.out, &a.config, &le.hash, "")?;
    let records = run_experiment(&plan)?;

    write_bytes(
        &dir.join("manifest.toml"),
        manifest_toml(&a.config, &le, &plan).as_bytes(),
    )?;
    for rec in &records {
        write_run_csv(rec, &dir.join(format!("run-{}.csv", rec.seed)))?;
        if let Some(cp) = &rec.final_checkpoint {
            cp.save(&dir.join(format!("checkpoint-{}.bin", rec.seed)))?;
        }
    }

    // Reference series are a nicety; skip them if the oracle cannot solve
    // this model rather than failing the run.
    let exact = exact_index_tables(&plan.instance, &OracleOptions::default())
        .ok()
        .map(|t| t.concat());
    let mut buf = Vec::new();
    emit_plot_data(
        &[(mode_label(plan.mode), &records)],
        Figure::Indices,
        exact.as_deref(),
        &mut buf,
    )
    .map_err(|source| CliError::Io {
        path: dir.join("plot_indices.csv"),
        source,
    })?;
    write_bytes(&dir.join("plot_indices.csv"), &buf)?;

    println!("{}", dir.display());
    for rec in &records {
        let last = rec.rows.last().expect("runs record at least the final row");
        println!(
            "seed {}: avg_reward {:.6} over {} steps",
            rec.seed, last.avg_reward, last.step
        );
    }
    Ok(())
}

fn cmd_compare(a: RunArgs) -> Result<(), CliError> {
    let le = load_experiment(&a.config, &a.set, a.seed, a.horizon, a.epsilon)?;
    let plan = build_plan(&le.exp, &le.model, le.hash.clone())?;
    let dir = make_run_dir(&a.out, &a.config, &le.hash, "-compare")?;
    let baselines = if le.exp.baselines.is_empty() {
        vec![BaselineKind::ExactIndex]
    } else {
        le.exp.baselines.clone()
    };

    let mut groups: Vec<(String, Vec<RunRecord>)> =
        vec![(mode_label(plan.mode).to_string(), run_experiment(&plan)?)];
    for kind in &baselines {
        let recs = run_experiment(&baseline_plan(&plan, *kind))?;
        groups.push((kind.label().to_string(), recs));
    }

    write_bytes(
        &dir.join("manifest.toml"),
        manifest_toml(&a.config, &le, &plan).as_bytes(),
    )?;
    for (label, recs) in &groups {
        let sub = dir.join(label);
        std::fs::create_dir_all(&sub).map_err(|source| CliError::Io {
            path: sub.clone(),
            source,
        })?;
        for rec in recs {
            write_run_csv(rec, &sub.join(format!("run-{}.csv", rec.seed)))?;
        }
    }
    write_bytes(&dir.join("compare.csv"), compare_table(&groups)?.as_bytes())?;

    let refs: Vec<(&str, &[RunRecord])> = groups
        .iter()
        .map(|(l, r)| (l.as_str(), r.as_slice()))
        .collect();
    let mut buf = Vec::new();
    emit_plot_data(&refs, Figure::Rewards, None, &mut buf).map_err(|source| CliError::Io {
        path: dir.join("plot_rewards.csv"),
        source,
    })?;
    write_bytes(&dir.join("plot_rewards.csv"), &buf)?;

    println!("{}", dir.display());
    for (label, recs) in &groups[1..] {
        let summary = compare_rewards(&groups[0].1, recs)?;
        println!(
            "final avg_reward ratio {}/{}: {:.4}",
            groups[0].0, label, summary.final_ratio
        );
    }
    Ok(())
}

// ----------------------------------------------------------------- output

fn out_root(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("WHITTLE_OUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// `<root>/<config stem>-<hash prefix><suffix>`; reruns of the same
/// effective config land in the same directory and rewrite the same bytes.
fn make_run_dir(
    flag: &Option<PathBuf>,
    config: &Path,
    hash: &str,
    suffix: &str,
) -> Result<PathBuf, CliError> {
    let stem = config
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    let dir = out_root(flag).join(format!("{stem}-{}{suffix}", &hash[..8]));
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn mode_label(mode: PolicyMode) -> &'static str {
    match mode {
        PolicyMode::LearnedIndices => "learned",
        PolicyMode::ExactIndices => "exact",
        PolicyMode::UniformRandom => "uniform",
    }
}

/// Deterministic manifest: no timestamps, keys serialized in a fixed order,
/// so reruns produce identical bytes.
fn manifest_toml(config_path: &Path, le: &LoadedExperiment, plan: &ExperimentPlan) -> String {
    use toml::Value as V;
    let mut root = toml::Table::new();
    root.insert(
        "config".into(),
        V::String(config_path.display().to_string()),
    );
    root.insert("config_hash".into(), V::String(le.hash.clone()));
    root.insert("model".into(), V::String(le.exp.model.clone()));
    root.insert("n_arms".into(), V::Integer(plan.instance.n_arms() as i64));
    root.insert("budget".into(), V::Integer(plan.instance.budget() as i64));
    root.insert("horizon".into(), V::Integer(plan.horizon as i64));
    root.insert("cadence".into(), V::Integer(plan.cadence as i64));
    root.insert(
        "seeds".into(),
        V::Array(plan.seeds.iter().map(|&s| V::Integer(s as i64)).collect()),
    );
    root.insert("epsilon".into(), V::Float(plan.epsilon));
    root.insert("mode".into(), V::String(mode_label(plan.mode).into()));
    root.insert(
        "baselines".into(),
        V::Array(
            le.exp
                .baselines
                .iter()
                .map(|b| V::String(b.label().into()))
                .collect(),
        ),
    );
    root.insert(
        "overrides".into(),
        V::Array(le.overrides.iter().cloned().map(V::String).collect()),
    );

    let mut sched = toml::Table::new();
    match plan.schedule {
        StepSchedule::Decreasing {
            fast_gain,
            slow_gain,
            gate,
        } => {
            sched.insert("kind".into(), V::String("decreasing".into()));
            sched.insert("fast_gain".into(), V::Float(fast_gain));
            sched.insert("slow_gain".into(), V::Float(slow_gain));
            sched.insert("gate".into(), V::Integer(gate as i64));
        }
        StepSchedule::Constant { a, b } => {
            sched.insert("kind".into(), V::String("constant".into()));
            sched.insert("a".into(), V::Float(a));
            sched.insert("b".into(), V::Float(b));
        }
    }
    root.insert("schedule".into(), V::Table(sched));

    let mut vers = toml::Table::new();
    vers.insert("format".into(), V::Integer(1));
    vers.insert("whittle_core".into(), V::String(whittle_core::VERSION.into()));
    vers.insert(
        "whittle_cli".into(),
        V::String(env!("CARGO_PKG_VERSION").into()),
    );
    root.insert("versions".into(), V::Table(vers));

    toml::to_string_pretty(&V::Table(root)).expect("manifest serializes")
}

/// Wide summary table: per policy, running-average-reward quartiles over
/// seeds at each recorded step.
fn compare_table(groups: &[(String, Vec<RunRecord>)]) -> Result<String, CliError> {
    let steps: Vec<u64> = groups[0].1[0].rows.iter().map(|r| r.step).collect();
    for (label, recs) in groups {
        for rec in recs {
            if rec.rows.len() != steps.len() {
                return Err(CliError::Validate(format!(
                    "policy {label} seed {} recorded {} rows, expected {}",
                    rec.seed,
                    rec.rows.len(),
                    steps.len(),
                )));
            }
        }
    }
    let mut out = String::from("step");
    for (label, _) in groups {
        let _ = write!(out, ",{label}_median,{label}_q1,{label}_q3");
    }
    out.push('\n');
    for (i, &step) in steps.iter().enumerate() {
        let _ = write!(out, "{step}");
        for (_, recs) in groups {
            let mut vals: Vec<f64> = recs.iter().map(|r| r.rows[i].avg_reward).collect();
            vals.sort_by(f64::total_cmp);
            let _ = write!(
                out,
                ",{},{},{}",
                quantile_sorted(&vals, 0.5),
                quantile_sorted(&vals, 0.25),
                quantile_sorted(&vals, 0.75),
            );
        }
        out.push('\n');
    }
    Ok(out)
}
