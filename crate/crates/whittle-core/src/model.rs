//! Arm and bandit model types.
//!
//! An [`ArmModel`] is one controlled Markov chain with two modes: passive
//! (`u = 0`, kernel `p0`, rewards `r0`) and active (`u = 1`, kernel `p1`,
//! rewards `r1`). A [`BanditInstance`] is a set of arms, each referencing a
//! shared statistical class, together with the per-step activation budget.
//!
//! States are labeled `1..d` in files, CLI output and error messages, and
//! `0..d-1` everywhere in the Rust API.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Tolerance on row sums of transition matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Number of stationary policies enumerated exactly before falling back to
/// random sampling in [`validate`].
pub const EXACT_POLICY_ENUM_LIMIT: usize = 12;

/// Policies sampled when the state space is too large to enumerate.
pub const SAMPLED_POLICY_COUNT: usize = 1000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("state count must be at least 1")]
    EmptyStateSpace,

    #[error("{matrix} must be {d}x{d}, row {row} has {got} entries")]
    RowLength {
        matrix: &'static str,
        d: usize,
        row: usize,
        got: usize,
    },

    #[error("{matrix} row {row}: entry {value} outside [0, 1]")]
    EntryRange {
        matrix: &'static str,
        row: usize,
        value: f64,
    },

    #[error("{matrix} row {row}: sum {sum} differs from 1 by more than {ROW_SUM_TOL}")]
    RowSum {
        matrix: &'static str,
        row: usize,
        sum: f64,
    },

    #[error("reward {table}[{state}] is not finite")]
    RewardNotFinite { table: &'static str, state: usize },

    #[error("reward vector {table} must have {d} entries, got {got}")]
    RewardLength {
        table: &'static str,
        d: usize,
        got: usize,
    },

    #[error("instance has no classes")]
    NoClasses,

    #[error("arm {arm} references class {class} but only {classes} classes are defined")]
    BadClassRef {
        arm: usize,
        class: usize,
        classes: usize,
    },

    #[error("budget must satisfy 1 <= M < N, got M={budget}, N={arms}")]
    BadBudget { budget: usize, arms: usize },
}

/// One arm class: controlled kernels `p(j|i,u)` and reward tables `r(i,u)`.
///
/// Construction validates shape and row-stochasticity, so a value of this
/// type always holds well-formed matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    d: usize,
    p0: Vec<Vec<f64>>,
    p1: Vec<Vec<f64>>,
    r0: Vec<f64>,
    r1: Vec<f64>,
}

impl ArmModel {
    pub fn new(
        p0: Vec<Vec<f64>>,
        p1: Vec<Vec<f64>>,
        r0: Vec<f64>,
        r1: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let d = p0.len();
        if d == 0 {
            return Err(ModelError::EmptyStateSpace);
        }
        check_kernel("p0", &p0, d)?;
        check_kernel("p1", &p1, d)?;
        check_rewards("r0", &r0, d)?;
        check_rewards("r1", &r1, d)?;
        Ok(Self { d, p0, p1, r0, r1 })
    }

    /// Number of states.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Kernel row `p(. | state, u)`.
    pub fn kernel_row(&self, active: bool, state: usize) -> &[f64] {
        if active {
            &self.p1[state]
        } else {
            &self.p0[state]
        }
    }

    pub fn transition_prob(&self, active: bool, from: usize, to: usize) -> f64 {
        self.kernel_row(active, from)[to]
    }

    /// Per-step reward `r(state, u)`.
    pub fn reward(&self, state: usize, active: bool) -> f64 {
        if active {
            self.r1[state]
        } else {
            self.r0[state]
        }
    }

    pub fn rewards(&self, active: bool) -> &[f64] {
        if active {
            &self.r1
        } else {
            &self.r0
        }
    }

    /// Largest reward magnitude over both tables.
    pub fn max_abs_reward(&self) -> f64 {
        self.r0
            .iter()
            .chain(self.r1.iter())
            .fold(0.0_f64, |m, &r| m.max(r.abs()))
    }
}

fn check_kernel(name: &'static str, rows: &[Vec<f64>], d: usize) -> Result<(), ModelError> {
    if rows.len() != d {
        return Err(ModelError::RowLength {
            matrix: name,
            d,
            row: rows.len().min(d) + 1,
            got: rows.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::RowLength {
                matrix: name,
                d,
                row: i + 1,
                got: row.len(),
            });
        }
        let mut sum = 0.0;
        for &p in row {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::EntryRange {
                    matrix: name,
                    row: i + 1,
                    value: p,
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ModelError::RowSum {
                matrix: name,
                row: i + 1,
                sum,
            });
        }
    }
    Ok(())
}

fn check_rewards(name: &'static str, r: &[f64], d: usize) -> Result<(), ModelError> {
    if r.len() != d {
        return Err(ModelError::RewardLength {
            table: name,
            d,
            got: r.len(),
        });
    }
    for (i, &x) in r.iter().enumerate() {
        if !x.is_finite() {
            return Err(ModelError::RewardNotFinite {
                table: name,
                state: i + 1,
            });
        }
    }
    Ok(())
}

/// `N` arms, budget `M`, and an arm-to-class map into shared [`ArmModel`]s.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    classes: Vec<ArmModel>,
    arm_class: Vec<usize>,
    budget: usize,
}

impl BanditInstance {
    pub fn new(
        classes: Vec<ArmModel>,
        arm_class: Vec<usize>,
        budget: usize,
    ) -> Result<Self, ModelError> {
        if classes.is_empty() {
            return Err(ModelError::NoClasses);
        }
        for (arm, &c) in arm_class.iter().enumerate() {
            if c >= classes.len() {
                return Err(ModelError::BadClassRef {
                    arm: arm + 1,
                    class: c + 1,
                    classes: classes.len(),
                });
            }
        }
        let n = arm_class.len();
        if budget == 0 || budget >= n {
            return Err(ModelError::BadBudget { budget, arms: n });
        }
        Ok(Self {
            classes,
            arm_class,
            budget,
        })
    }

    /// Homogeneous instance: all `n` arms share one class.
    pub fn homogeneous(model: ArmModel, n: usize, budget: usize) -> Result<Self, ModelError> {
        Self::new(vec![model], vec![0; n], budget)
    }

    pub fn n_arms(&self) -> usize {
        self.arm_class.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn classes(&self) -> &[ArmModel] {
        &self.classes
    }

    pub fn class_of(&self, arm: usize) -> usize {
        self.arm_class[arm]
    }

    pub fn model_of(&self, arm: usize) -> &ArmModel {
        &self.classes[self.arm_class[arm]]
    }
}

/// Chain-structure classification produced by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainClass {
    /// Some state is reachable from every state under every checked policy.
    Unichain,
    /// No common state across policies, but every state reaches every other
    /// under some control, so the average-reward problem is still well posed.
    WeaklyCommunicating,
    /// Neither property holds; average-reward dynamic programming may be
    /// ill posed for this model.
    Fail,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub stochastic_ok: bool,
    pub chain_class: ChainClass,
    /// States (1-based) reachable from everywhere under every checked policy.
    pub common_states: Vec<usize>,
    pub policies_checked: usize,
    /// True when all `2^d` stationary policies were enumerated.
    pub exhaustive: bool,
    /// A policy (action per state) admitting no common reachable state, if any.
    pub split_policy: Option<Vec<bool>>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_usable(&self) -> bool {
        self.chain_class != ChainClass::Fail
    }
}

/// Classifies the chain structure of an arm model.
///
/// Enumerates all `2^d` stationary policies for `d <= 12` (random sampled
/// policies beyond that, always including both pure policies) and intersects,
/// over policies, the sets of states reachable from every other state. A
/// non-empty intersection classifies the model as unichain. Otherwise, strong
/// connectivity of the union support graph (reachability under *some*
/// control) classifies it as weakly communicating, which is reported with a
/// warning rather than an error.
pub fn validate(model: &ArmModel) -> Result<ValidationReport, ModelError> {
    let d = model.d();
    // Re-run the construction checks so the report's pass/fail field is
    // grounded even if callers bypass `ArmModel::new` sometime later.
    check_kernel("p0", &model.p0, d)?;
    check_kernel("p1", &model.p1, d)?;
    check_rewards("r0", &model.r0, d)?;
    check_rewards("r1", &model.r1, d)?;

    let exhaustive = d <= EXACT_POLICY_ENUM_LIMIT;
    let policies: Vec<Vec<bool>> = if exhaustive {
        (0u64..(1u64 << d))
            .map(|mask| (0..d).map(|i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(0x57A7_10C5);
        let mut ps = vec![vec![false; d], vec![true; d]];
        while ps.len() < SAMPLED_POLICY_COUNT {
            ps.push((0..d).map(|_| rand::Rng::random::<bool>(&mut rng)).collect());
        }
        ps
    };

    let mut common = vec![true; d];
    let mut split_policy = None;
    for policy in &policies {
        let reach_all = states_reachable_from_all(model, policy);
        if split_policy.is_none() && reach_all.iter().all(|&ok| !ok) {
            split_policy = Some(policy.clone());
        }
        for (c, &ok) in common.iter_mut().zip(&reach_all) {
            *c &= ok;
        }
    }

    let common_states: Vec<usize> = common
        .iter()
        .enumerate()
        .filter_map(|(i, &ok)| ok.then_some(i + 1))
        .collect();

    let mut warnings = Vec::new();
    let chain_class = if !common_states.is_empty() {
        ChainClass::Unichain
    } else if union_strongly_connected(model) {
        warnings.push(
            "no state is reachable from everywhere under every stationary policy, \
             but every state is reachable under some control; treating the model \
             as weakly communicating"
                .to_string(),
        );
        ChainClass::WeaklyCommunicating
    } else {
        ChainClass::Fail
    };

    Ok(ValidationReport {
        stochastic_ok: true,
        chain_class,
        common_states,
        policies_checked: policies.len(),
        exhaustive,
        split_policy,
        warnings,
    })
}

/// For each state `t`, whether `t` is reachable (with positive probability)
/// from every state under the kernel induced by `policy`.
fn states_reachable_from_all(model: &ArmModel, policy: &[bool]) -> Vec<bool> {
    let d = model.d();
    // predecessors[j] = states i with p(j | i, policy[i]) > 0
    let mut preds = vec![Vec::new(); d];
    for i in 0..d {
        for (j, &p) in model.kernel_row(policy[i], i).iter().enumerate() {
            if p > 0.0 {
                preds[j].push(i);
            }
        }
    }
    (0..d)
        .map(|t| {
            // reverse BFS from t
            let mut seen = vec![false; d];
            let mut stack = vec![t];
            seen[t] = true;
            let mut count = 1;
            while let Some(j) = stack.pop() {
                for &i in &preds[j] {
                    if !seen[i] {
                        seen[i] = true;
                        count += 1;
                        stack.push(i);
                    }
                }
            }
            count == d
        })
        .collect()
}

/// Strong connectivity of the graph with an edge `i -> j` whenever
/// `p(j|i,u) > 0` for some control `u`.
fn union_strongly_connected(model: &ArmModel) -> bool {
    let d = model.d();
    let edge = |i: usize, j: usize| {
        model.transition_prob(false, i, j) > 0.0 || model.transition_prob(true, i, j) > 0.0
    };
    let bfs = |reverse: bool| {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for w in 0..d {
                let connected = if reverse { edge(w, v) } else { edge(v, w) };
                if connected && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == d
    };
    bfs(false) && bfs(true)
}
