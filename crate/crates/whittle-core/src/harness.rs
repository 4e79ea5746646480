//! Experiment orchestration: environment + learner + policy, replications,
//! metrics, and CSV persistence.

use crate::checkpoint::{Checkpoint, ClassState, RngSnapshot};
use crate::config::{BaselineKind, ConfigError, ExperimentConfig, ModelSpec};
use crate::learner::QwiLearner;
use crate::model::BanditInstance;
use crate::oracle::{whittle_indices, OracleError, OracleOptions};
use crate::policy::{select_actions, uniform_subset, PolicyMode};
use crate::sim::{step, SimError, SimState};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("learner diverged at step {step} (seed {seed}): non-finite {table} value")]
    Diverged {
        seed: u64,
        step: u64,
        table: &'static str,
        snapshot: Box<Checkpoint>,
    },

    #[error("record sets do not match: {0}")]
    ShapeMismatch(String),

    #[error("malformed run CSV: {0}")]
    MalformedCsv(String),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Fully resolved experiment: everything a replication needs.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub instance: BanditInstance,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub cadence: u64,
    pub epsilon: f64,
    pub mode: PolicyMode,
    pub schedule: crate::schedule::StepSchedule,
    pub config_hash: String,
}

/// Resolves a parsed experiment + model into a runnable plan. The slow
/// update's gate is the instance's arm count.
pub fn build_plan(
    exp: &ExperimentConfig,
    model: &ModelSpec,
    config_hash: String,
) -> Result<ExperimentPlan, ConfigError> {
    let instance = model.instance(exp.n_arms, exp.budget)?;
    let schedule = exp.schedule.with_gate(instance.n_arms() as u64);
    Ok(ExperimentPlan {
        instance,
        horizon: exp.horizon,
        seeds: exp.seeds.clone(),
        cadence: exp.cadence,
        epsilon: exp.epsilon,
        mode: exp.mode,
        schedule,
        config_hash,
    })
}

/// Same experiment shape, played by a comparison baseline. The exact-index
/// baseline is greedy (`epsilon = 0`): it represents play with the true
/// indices from the start, so the learned policy's exploration cost shows
/// up in the comparison.
pub fn baseline_plan(plan: &ExperimentPlan, kind: BaselineKind) -> ExperimentPlan {
    let mut p = plan.clone();
    p.epsilon = 0.0;
    p.mode = match kind {
        BaselineKind::ExactIndex => PolicyMode::ExactIndices,
        BaselineKind::UniformRandom => PolicyMode::UniformRandom,
    };
    p
}

/// One metrics row, written at the recording cadence. `step` counts
/// completed environment steps, so `avg_reward = cum_reward / (step * N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    /// Running average reward per arm per step.
    pub avg_reward: f64,
    /// Index estimates, classes concatenated.
    pub lambda: Vec<f64>,
    /// Min over (class, state, action) of visit count / step.
    pub min_visit_freq: f64,
    /// Raw reward total over all arms and steps so far.
    pub cum_reward: f64,
}

/// Result of one replication.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub config_hash: String,
    /// State count per class (determines the lambda column labels).
    pub class_dims: Vec<usize>,
    pub rows: Vec<MetricsRow>,
    /// Learner state at the horizon; absent for baseline policies.
    pub final_checkpoint: Option<Checkpoint>,
    /// Sup over the whole run of |Q| and |lambda| (learned mode only).
    pub max_abs_q: f64,
    pub max_abs_lambda: f64,
}

/// Exact per-class Whittle index tables for the instance.
pub fn exact_index_tables(
    instance: &BanditInstance,
    opts: &OracleOptions,
) -> Result<Vec<Vec<f64>>, OracleError> {
    instance
        .classes()
        .iter()
        .map(|m| Ok(whittle_indices(m, opts)?.lambda_star))
        .collect()
}

/// Runs every seed of the plan (in parallel, merged in seed order).
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RunRecord>, HarnessError> {
    let exact = if plan.mode == PolicyMode::ExactIndices {
        Some(exact_index_tables(&plan.instance, &OracleOptions::default())?)
    } else {
        None
    };
    plan.seeds
        .par_iter()
        .map(|&seed| run_one(plan, seed, exact.as_deref()))
        .collect()
}

fn run_one(
    plan: &ExperimentPlan,
    seed: u64,
    exact: Option<&[Vec<f64>]>,
) -> Result<RunRecord, HarnessError> {
    let instance = &plan.instance;
    let n_arms = instance.n_arms();
    let budget = instance.budget();
    let class_dims: Vec<usize> = instance.classes().iter().map(|m| m.d()).collect();

    let mut sim = SimState::new(instance, seed);
    let mut learners: Option<Vec<QwiLearner>> = match plan.mode {
        PolicyMode::LearnedIndices => Some(
            instance
                .classes()
                .iter()
                .map(|m| QwiLearner::new(m, plan.schedule))
                .collect(),
        ),
        _ => None,
    };

    // Visit counters per class, kept by the harness so baselines report
    // exploration stats too; for learned runs they mirror the local clocks.
    let mut visits: Vec<Vec<u64>> = class_dims.iter().map(|&d| vec![0; 2 * d]).collect();

    let mut indices = vec![0.0_f64; n_arms];
    let mut pre_states = vec![0usize; n_arms];
    let mut cum_reward = 0.0_f64;
    let mut max_abs_q = 0.0_f64;
    let mut max_abs_lambda = 0.0_f64;
    let mut rows = Vec::new();

    for n in 0..plan.horizon {
        let actions = match plan.mode {
            PolicyMode::UniformRandom => uniform_subset(n_arms, budget, sim.rng_mut()),
            PolicyMode::LearnedIndices => {
                let ls = learners.as_ref().expect("learned mode has learners");
                for (alpha, idx) in indices.iter_mut().enumerate() {
                    *idx = ls[instance.class_of(alpha)].lambda_at(sim.states()[alpha]);
                }
                select_actions(plan.epsilon, &indices, budget, sim.rng_mut())
            }
            PolicyMode::ExactIndices => {
                let tables = exact.expect("exact mode has index tables");
                for (alpha, idx) in indices.iter_mut().enumerate() {
                    *idx = tables[instance.class_of(alpha)][sim.states()[alpha]];
                }
                select_actions(plan.epsilon, &indices, budget, sim.rng_mut())
            }
        };

        pre_states.copy_from_slice(sim.states());
        let rewards = step(instance, &mut sim, &actions)?;
        cum_reward += rewards.iter().sum::<f64>();

        for alpha in 0..n_arms {
            let c = instance.class_of(alpha);
            visits[c][2 * pre_states[alpha] + usize::from(actions[alpha])] += 1;
        }

        if let Some(ls) = learners.as_mut() {
            for alpha in 0..n_arms {
                let c = instance.class_of(alpha);
                ls[c].async_update(pre_states[alpha], actions[alpha], sim.states()[alpha]);
            }
            for l in ls.iter_mut() {
                l.lambda_update(n);
                max_abs_q = max_abs_q.max(l.max_abs_q());
                max_abs_lambda = max_abs_lambda.max(l.max_abs_lambda());
            }
        }

        let completed = n + 1;
        if completed % plan.cadence == 0 || completed == plan.horizon {
            if let Some(ls) = learners.as_ref() {
                for l in ls {
                    if let Err(e) = l.check_finite(completed) {
                        let table = match e {
                            crate::learner::LearnerError::Diverged { table, .. } => table,
                            _ => "state",
                        };
                        return Err(HarnessError::Diverged {
                            seed,
                            step: completed,
                            table,
                            snapshot: Box::new(make_checkpoint(completed, &sim, ls)),
                        });
                    }
                }
            }
            let lambda: Vec<f64> = match (&learners, exact) {
                (Some(ls), _) => ls.iter().flat_map(|l| l.lambda().iter().copied()).collect(),
                (None, Some(tables)) => tables.iter().flatten().copied().collect(),
                (None, None) => class_dims.iter().flat_map(|&d| vec![0.0; d]).collect(),
            };
            let min_visit_freq = visits
                .iter()
                .flat_map(|v| v.iter())
                .map(|&c| c as f64 / completed as f64)
                .fold(f64::INFINITY, f64::min);
            rows.push(MetricsRow {
                step: completed,
                avg_reward: cum_reward / (completed as f64 * n_arms as f64),
                lambda,
                min_visit_freq,
                cum_reward,
            });
        }
    }

    let final_checkpoint = learners
        .as_ref()
        .map(|ls| make_checkpoint(plan.horizon, &sim, ls));
    Ok(RunRecord {
        seed,
        config_hash: plan.config_hash.clone(),
        class_dims,
        rows,
        final_checkpoint,
        max_abs_q,
        max_abs_lambda,
    })
}

fn make_checkpoint(step: u64, sim: &SimState, learners: &[QwiLearner]) -> Checkpoint {
    Checkpoint {
        global_step: step,
        rng: RngSnapshot::capture(sim.rng()),
        classes: learners.iter().map(ClassState::of).collect(),
    }
}

/// Per-step medians and interquartile ranges across seeds for two record
/// sets with matched horizons and cadences, plus the ratio of final median
/// running-average rewards (left / right).
#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub steps: Vec<u64>,
    pub left_median: Vec<f64>,
    pub left_q1: Vec<f64>,
    pub left_q3: Vec<f64>,
    pub right_median: Vec<f64>,
    pub right_q1: Vec<f64>,
    pub right_q3: Vec<f64>,
    pub final_ratio: f64,
}

pub fn compare_rewards(
    left: &[RunRecord],
    right: &[RunRecord],
) -> Result<CompareSummary, HarnessError> {
    if left.is_empty() || right.is_empty() {
        return Err(HarnessError::ShapeMismatch("empty record set".into()));
    }
    let steps: Vec<u64> = left[0].rows.iter().map(|r| r.step).collect();
    for rec in left.iter().chain(right) {
        let got: Vec<u64> = rec.rows.iter().map(|r| r.step).collect();
        if got != steps {
            return Err(HarnessError::ShapeMismatch(format!(
                "seed {} has {} recorded steps, expected {}",
                rec.seed,
                got.len(),
                steps.len()
            )));
        }
    }
    let stats = |recs: &[RunRecord]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut med = Vec::with_capacity(steps.len());
        let mut q1 = Vec::with_capacity(steps.len());
        let mut q3 = Vec::with_capacity(steps.len());
        for t in 0..steps.len() {
            let mut xs: Vec<f64> = recs.iter().map(|r| r.rows[t].avg_reward).collect();
            xs.sort_by(f64::total_cmp);
            med.push(quantile_sorted(&xs, 0.5));
            q1.push(quantile_sorted(&xs, 0.25));
            q3.push(quantile_sorted(&xs, 0.75));
        }
        (med, q1, q3)
    };
    let (left_median, left_q1, left_q3) = stats(left);
    let (right_median, right_q1, right_q3) = stats(right);
    let final_ratio = left_median[steps.len() - 1] / right_median[steps.len() - 1];
    Ok(CompareSummary {
        steps,
        left_median,
        left_q1,
        left_q3,
        right_median,
        right_q1,
        right_q3,
        final_ratio,
    })
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&p));
    if xs.len() == 1 {
        return xs[0];
    }
    let h = (xs.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (xs[hi] - xs[lo]) * (h - lo as f64)
}

/// Median over seeds of the per-state index error `|lambda_n(k) - target|`,
/// evaluated on the final recorded row. Helper for convergence checks.
pub fn median_final_index_error(records: &[RunRecord], targets: &[f64]) -> Vec<f64> {
    let d = targets.len();
    (0..d)
        .map(|k| {
            let mut errs: Vec<f64> = records
                .iter()
                .map(|r| (r.rows.last().expect("rows").lambda[k] - targets[k]).abs())
                .collect();
            errs.sort_by(f64::total_cmp);
            quantile_sorted(&errs, 0.5)
        })
        .collect()
}

/// Column labels for the lambda block: `lambda_1..lambda_d` for a single
/// class, `c{ci}_lambda_k` per class otherwise.
pub fn lambda_labels(class_dims: &[usize]) -> Vec<String> {
    if class_dims.len() == 1 {
        (1..=class_dims[0]).map(|k| format!("lambda_{k}")).collect()
    } else {
        class_dims
            .iter()
            .enumerate()
            .flat_map(|(ci, &d)| (1..=d).map(move |k| format!("c{}_lambda_{k}", ci + 1)))
            .collect()
    }
}

/// Writes one run's metrics as CSV
/// (`step,avg_reward,lambda_*,min_visit_freq,cum_reward`).
pub fn write_run_csv(record: &RunRecord, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_string(), "avg_reward".to_string()];
    header.extend(lambda_labels(&record.class_dims));
    header.push("min_visit_freq".to_string());
    header.push("cum_reward".to_string());
    w.write_record(&header)?;
    for row in &record.rows {
        let mut rec = vec![row.step.to_string(), row.avg_reward.to_string()];
        rec.extend(row.lambda.iter().map(|v| v.to_string()));
        rec.push(row.min_visit_freq.to_string());
        rec.push(row.cum_reward.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Parses a run CSV produced by [`write_run_csv`]; returns the lambda
/// column labels and the rows.
pub fn read_run_csv_bytes(bytes: &[u8]) -> Result<(Vec<String>, Vec<MetricsRow>), HarnessError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4
        || cols.first() != Some(&"step")
        || cols.get(1) != Some(&"avg_reward")
        || cols.get(cols.len() - 2) != Some(&"min_visit_freq")
        || cols.last() != Some(&"cum_reward")
    {
        return Err(HarnessError::MalformedCsv(format!(
            "unexpected header: {cols:?}"
        )));
    }
    let labels: Vec<String> = cols[2..cols.len() - 2].iter().map(|s| s.to_string()).collect();
    let f = |field: &str, what: &str| -> Result<f64, HarnessError> {
        field
            .parse::<f64>()
            .map_err(|_| HarnessError::MalformedCsv(format!("bad {what}: {field:?}")))
    };
    let mut rows = Vec::new();
    for result in r.records() {
        let rec = result?;
        if rec.len() != cols.len() {
            return Err(HarnessError::MalformedCsv(format!(
                "row has {} fields, header has {}",
                rec.len(),
                cols.len()
            )));
        }
        let step = rec[0]
            .parse::<u64>()
            .map_err(|_| HarnessError::MalformedCsv(format!("bad step: {:?}", &rec[0])))?;
        let avg_reward = f(&rec[1], "avg_reward")?;
        let lambda = (2..cols.len() - 2)
            .map(|i| f(&rec[i], "lambda"))
            .collect::<Result<Vec<_>, _>>()?;
        let min_visit_freq = f(&rec[cols.len() - 2], "min_visit_freq")?;
        let cum_reward = f(&rec[cols.len() - 1], "cum_reward")?;
        rows.push(MetricsRow {
            step,
            avg_reward,
            lambda,
            min_visit_freq,
            cum_reward,
        });
    }
    Ok((labels, rows))
}

pub fn read_run_csv(path: &Path) -> Result<(Vec<String>, Vec<MetricsRow>), HarnessError> {
    let bytes = std::fs::read(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_run_csv_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::circulant;
    use crate::schedule::StepSchedule;

    fn tiny_plan(mode: PolicyMode, horizon: u64, cadence: u64) -> ExperimentPlan {
        ExperimentPlan {
            instance: BanditInstance::homogeneous(circulant(), 10, 3).unwrap(),
            horizon,
            seeds: vec![1, 2, 3],
            cadence,
            epsilon: 0.1,
            mode,
            schedule: StepSchedule::Decreasing {
                fast_gain: 1.0,
                slow_gain: 1.0,
                gate: 10,
            },
            config_hash: "test".into(),
        }
    }

    #[test]
    fn horizon_one_yields_single_row() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 1, 100);
        let records = run_experiment(&plan).unwrap();
        assert_eq!(records.len(), 3);
        for rec in &records {
            assert_eq!(rec.rows.len(), 1);
            let row = &rec.rows[0];
            assert_eq!(row.step, 1);
            assert!((row.avg_reward - row.cum_reward / 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn running_average_recomputable_from_totals() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 500, 7);
        let records = run_experiment(&plan).unwrap();
        for rec in &records {
            for row in &rec.rows {
                let expected = row.cum_reward / (row.step as f64 * 10.0);
                assert!((row.avg_reward - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 300, 50);
        let a = run_experiment(&plan).unwrap();
        let b = run_experiment(&plan).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.rows, y.rows);
            assert_eq!(x.final_checkpoint, y.final_checkpoint);
        }
    }

    #[test]
    fn learned_visit_clocks_match_harness_counts() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 200, 200);
        let records = run_experiment(&plan).unwrap();
        for rec in &records {
            let ck = rec.final_checkpoint.as_ref().unwrap();
            let total: u64 = ck.classes[0].nu.iter().sum();
            assert_eq!(total, 200 * 10);
        }
    }

    #[test]
    fn baseline_records_skip_learner() {
        let plan = tiny_plan(PolicyMode::UniformRandom, 50, 10);
        let records = run_experiment(&plan).unwrap();
        for rec in &records {
            assert!(rec.final_checkpoint.is_none());
            assert_eq!(rec.rows.last().unwrap().lambda, vec![0.0; 4]);
        }
    }

    #[test]
    fn identical_record_sets_compare_to_ratio_one() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 100, 10);
        let records = run_experiment(&plan).unwrap();
        let summary = compare_rewards(&records, &records).unwrap();
        assert_eq!(summary.final_ratio, 1.0);
        assert_eq!(summary.left_median, summary.right_median);
    }

    #[test]
    fn mismatched_shapes_error() {
        let a = run_experiment(&tiny_plan(PolicyMode::LearnedIndices, 100, 10)).unwrap();
        let b = run_experiment(&tiny_plan(PolicyMode::LearnedIndices, 100, 20)).unwrap();
        assert!(matches!(
            compare_rewards(&a, &b),
            Err(HarnessError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let plan = tiny_plan(PolicyMode::LearnedIndices, 120, 30);
        let records = run_experiment(&plan).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_run_csv(&records[0], &path).unwrap();
        let (labels, rows) = read_run_csv(&path).unwrap();
        assert_eq!(
            labels,
            vec!["lambda_1", "lambda_2", "lambda_3", "lambda_4"]
        );
        assert_eq!(rows, records[0].rows);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.25), 1.75);
    }
}
