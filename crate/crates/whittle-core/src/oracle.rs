//! Exact solver for the subsidized single-arm problem and Whittle indices.
//!
//! The subsidized problem pays `r(i,1)` for the active action and
//! `lambda + r(i,0)` for the passive one. Its optimal average reward `beta`
//! and Q-values satisfy
//!
//! ```text
//! Q(i,u) = u r(i,1) + (1-u)(lambda + r(i,0)) - beta + sum_j p(j|i,u) max_v Q(j,v)
//! ```
//!
//! [`rvi_solve`] finds the fixed point by relative value iteration with the
//! normalization `f(Q) = (1/2d) sum_i (Q(i,0)+Q(i,1))` standing in for the
//! unknown `beta`; at the fixed point `f(Q*) = beta`, the same gauge the
//! learner converges to, so oracle and learner tables are directly
//! comparable. The Whittle index of a state is the subsidy at which both
//! actions are equally preferred there; [`whittle_index`] finds it by
//! bisection on the monotone gap `g(lambda) = Q*(k,1) - Q*(k,0)`.
//!
//! Tolerances are interpreted relative to the problem's reward-plus-subsidy
//! magnitude, so solutions are meaningful under large reward rescaling.

use crate::model::ArmModel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "value iteration did not converge at subsidy {lambda}: \
         span {span:e} > tol {tol:e} after {iterations} iterations"
    )]
    NoConvergence {
        lambda: f64,
        span: f64,
        tol: f64,
        iterations: usize,
    },

    #[error(
        "no sign change of the action gap for state {state} on [{lo}, {hi}]; \
         the model may not be indexable there"
    )]
    NotBracketed { state: usize, lo: f64, hi: f64 },

    #[error(
        "bisection for state {state} stalled: bracket width {width:e} \
         with residual {residual:e} still above tolerance"
    )]
    BisectionStalled {
        state: usize,
        width: f64,
        residual: f64,
    },
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Span-seminorm stopping tolerance for value iteration.
    pub rvi_tol: f64,
    /// Stopping tolerance on `|Q(k,1) - Q(k,0)|` in the index bisection.
    pub bisect_tol: f64,
    /// Iteration cap for one value-iteration solve.
    pub max_iter: usize,
    /// Damping weight on the Bellman image: `Q <- (1-k)Q + k T(Q)`. Keeps
    /// the iteration convergent on periodic chains; fixed points unchanged.
    pub damping: f64,
    /// Initial bisection bracket; widened geometrically if it does not
    /// contain a sign change. `None` picks `[-R, R]`, `R = max|r| + 1`.
    pub bracket: Option<(f64, f64)>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            rvi_tol: 1e-10,
            bisect_tol: 1e-8,
            max_iter: 1_000_000,
            damping: 0.5,
            bracket: None,
        }
    }
}

/// Exact solution of the subsidized problem at one subsidy value.
///
/// `q` is laid out as `q[2*i + u]`; `v[i] = max_u Q(i,u)` shifted so that
/// `v[0] = 0`; `q` itself keeps the `f(Q*) = beta` gauge.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub lambda: f64,
    pub v: Vec<f64>,
    pub beta: f64,
    pub q: Vec<f64>,
    /// Optimal action per state; ties prefer passive.
    pub policy: Vec<bool>,
    /// States (0-based) where the optimal action is passive.
    pub passive_set: Vec<usize>,
    pub iterations: usize,
    pub span: f64,
}

impl OracleSolution {
    pub fn q_at(&self, state: usize, active: bool) -> f64 {
        self.q[2 * state + usize::from(active)]
    }

    /// Action-value gap `Q(state,1) - Q(state,0)`.
    pub fn gap(&self, state: usize) -> f64 {
        self.q_at(state, true) - self.q_at(state, false)
    }

    /// Sup-norm residual of the optimality equation with `beta = f(Q)`.
    pub fn bellman_residual(&self, model: &ArmModel) -> f64 {
        let image = bellman_image(model, self.lambda, &self.q);
        self.q
            .iter()
            .zip(&image)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Per-state Whittle indices with solver diagnostics.
#[derive(Debug, Clone)]
pub struct IndexTable {
    pub lambda_star: Vec<f64>,
    /// Achieved `|Q(k,1) - Q(k,0)|` at each returned index.
    pub residuals: Vec<f64>,
    /// Final bisection bracket width per state.
    pub bracket_width: Vec<f64>,
}

fn f_of(q: &[f64]) -> f64 {
    let mut s = 0.0;
    let d = q.len() / 2;
    for i in 0..d {
        s += q[2 * i] + q[2 * i + 1];
    }
    s / (2.0 * d as f64)
}

/// One application of the normalized Bellman operator
/// `T(Q)(i,u) = u r(i,1) + (1-u)(lambda + r(i,0)) + sum_j p(j|i,u) max_v Q(j,v) - f(Q)`.
pub(crate) fn bellman_image(model: &ArmModel, lambda: f64, q: &[f64]) -> Vec<f64> {
    let d = model.d();
    let f = f_of(q);
    let value: Vec<f64> = (0..d).map(|j| q[2 * j].max(q[2 * j + 1])).collect();
    let mut out = vec![0.0; 2 * d];
    for i in 0..d {
        for u in 0..2 {
            let mut exp = 0.0;
            for (j, &p) in model.kernel_row(u == 1, i).iter().enumerate() {
                if p > 0.0 {
                    exp += p * value[j];
                }
            }
            let reward = if u == 1 {
                model.reward(i, true)
            } else {
                lambda + model.reward(i, false)
            };
            out[2 * i + u] = reward + exp - f;
        }
    }
    out
}

/// Solves the subsidized problem at subsidy `lambda` by damped relative
/// value iteration, stopping when the span seminorm of successive iterates
/// falls below `opts.rvi_tol` (scaled by the reward-plus-subsidy magnitude).
pub fn rvi_solve(
    model: &ArmModel,
    lambda: f64,
    opts: &OracleOptions,
) -> Result<OracleSolution, OracleError> {
    let d = model.d();
    let scale = 1.0_f64.max(model.max_abs_reward() + lambda.abs());
    let tol = opts.rvi_tol * scale;
    let kappa = opts.damping;

    let mut q = vec![0.0; 2 * d];
    let mut iterations = 0;
    loop {
        let image = bellman_image(model, lambda, &q);
        let mut max_d = f64::NEG_INFINITY;
        let mut min_d = f64::INFINITY;
        for (cur, img) in q.iter_mut().zip(&image) {
            let next = (1.0 - kappa) * *cur + kappa * img;
            let diff = next - *cur;
            max_d = max_d.max(diff);
            min_d = min_d.min(diff);
            *cur = next;
        }
        iterations += 1;
        let sp = max_d - min_d;
        if sp <= tol {
            return Ok(finish_solution(model, lambda, q, iterations, sp));
        }
        if iterations >= opts.max_iter {
            return Err(OracleError::NoConvergence {
                lambda,
                span: sp,
                tol,
                iterations,
            });
        }
    }
}

fn finish_solution(
    model: &ArmModel,
    lambda: f64,
    q: Vec<f64>,
    iterations: usize,
    span: f64,
) -> OracleSolution {
    let d = model.d();
    let beta = f_of(&q);
    // Ties prefer passive, consistent with the subsidy's role.
    let policy: Vec<bool> = (0..d).map(|i| q[2 * i + 1] > q[2 * i]).collect();
    let passive_set = policy
        .iter()
        .enumerate()
        .filter_map(|(i, &active)| (!active).then_some(i))
        .collect();
    let ref_v = q[0].max(q[1]);
    let v = (0..d).map(|i| q[2 * i].max(q[2 * i + 1]) - ref_v).collect();
    OracleSolution {
        lambda,
        v,
        beta,
        q,
        policy,
        passive_set,
        iterations,
        span,
    }
}

const MAX_BRACKET_DOUBLINGS: usize = 60;
const MAX_BISECT_STEPS: usize = 200;

/// Whittle index of `k_hat` (0-based): the subsidy solving
/// `Q*(k_hat,1) - Q*(k_hat,0) = 0`, found by bisection. The gap is
/// non-increasing in the subsidy for indexable models; the initial bracket
/// is doubled outward until it straddles a sign change.
pub fn whittle_index(
    model: &ArmModel,
    k_hat: usize,
    opts: &OracleOptions,
) -> Result<(f64, f64, f64), OracleError> {
    let gap = |lam: f64| -> Result<f64, OracleError> {
        Ok(rvi_solve(model, lam, opts)?.gap(k_hat))
    };
    let r = model.max_abs_reward() + 1.0;
    let (mut lo, mut hi) = opts.bracket.unwrap_or((-r, r));

    let mut g_lo = gap(lo)?;
    let mut expansions = 0;
    while g_lo < 0.0 {
        expansions += 1;
        if expansions > MAX_BRACKET_DOUBLINGS {
            return Err(OracleError::NotBracketed {
                state: k_hat + 1,
                lo,
                hi,
            });
        }
        lo *= 2.0;
        g_lo = gap(lo)?;
    }
    let mut g_hi = gap(hi)?;
    expansions = 0;
    while g_hi > 0.0 {
        expansions += 1;
        if expansions > MAX_BRACKET_DOUBLINGS {
            return Err(OracleError::NotBracketed {
                state: k_hat + 1,
                lo,
                hi,
            });
        }
        hi *= 2.0;
        g_hi = gap(hi)?;
    }

    let gtol = opts.bisect_tol * 1.0_f64.max(model.max_abs_reward());
    if g_lo.abs() <= gtol {
        return Ok((lo, g_lo.abs(), hi - lo));
    }
    if g_hi.abs() <= gtol {
        return Ok((hi, g_hi.abs(), hi - lo));
    }
    for _ in 0..MAX_BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        let g_mid = gap(mid)?;
        if g_mid.abs() <= gtol {
            return Ok((mid, g_mid.abs(), hi - lo));
        }
        if g_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * 1.0_f64.max(lo.abs().max(hi.abs())) {
            return Err(OracleError::BisectionStalled {
                state: k_hat + 1,
                width: hi - lo,
                residual: g_mid.abs(),
            });
        }
    }
    Err(OracleError::BisectionStalled {
        state: k_hat + 1,
        width: hi - lo,
        residual: gap(0.5 * (lo + hi))?.abs(),
    })
}

/// Whittle indices for every state of the arm.
pub fn whittle_indices(model: &ArmModel, opts: &OracleOptions) -> Result<IndexTable, OracleError> {
    let d = model.d();
    let mut lambda_star = Vec::with_capacity(d);
    let mut residuals = Vec::with_capacity(d);
    let mut bracket_width = Vec::with_capacity(d);
    for k in 0..d {
        let (lam, res, width) = whittle_index(model, k, opts)?;
        lambda_star.push(lam);
        residuals.push(res);
        bracket_width.push(width);
    }
    Ok(IndexTable {
        lambda_star,
        residuals,
        bracket_width,
    })
}

/// Outcome of a passive-set monotonicity scan over a subsidy grid.
#[derive(Debug, Clone)]
pub struct IndexabilityReport {
    pub pass: bool,
    /// Passive set (0-based states) at each grid subsidy, in grid order.
    pub passive_sets: Vec<(f64, Vec<usize>)>,
    /// First `(lambda_prev, lambda, states that left the passive set)`.
    pub first_violation: Option<(f64, f64, Vec<usize>)>,
}

/// Checks Whittle indexability numerically: the passive set must grow
/// monotonically (by inclusion) along an ascending subsidy grid.
pub fn scan_indexability(
    model: &ArmModel,
    grid: &[f64],
    opts: &OracleOptions,
) -> Result<IndexabilityReport, OracleError> {
    let mut passive_sets = Vec::with_capacity(grid.len());
    let mut first_violation = None;
    for &lam in grid {
        let sol = rvi_solve(model, lam, opts)?;
        passive_sets.push((lam, sol.passive_set));
    }
    for w in passive_sets.windows(2) {
        let (prev_lam, ref prev) = w[0];
        let (lam, ref cur) = w[1];
        let dropped: Vec<usize> = prev.iter().copied().filter(|s| !cur.contains(s)).collect();
        if !dropped.is_empty() {
            first_violation = Some((prev_lam, lam, dropped));
            break;
        }
    }
    Ok(IndexabilityReport {
        pass: first_violation.is_none(),
        passive_sets,
        first_violation,
    })
}

/// Evenly spaced grid helper: `lo, lo+step, ...` up to and including `hi`
/// (within one step's rounding).
pub fn subsidy_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo);
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Mean over states of `(Q*_{c lambda}(k,1) - Q*_{c lambda}(k,0)) / c`.
///
/// As `c` grows the subsidy dominates the fixed rewards and the gap
/// approaches `-lambda` in every state; this is the scaling law the
/// boundedness argument for the learner rests on.
pub fn scaling_check(
    model: &ArmModel,
    lambda: f64,
    c: f64,
    opts: &OracleOptions,
) -> Result<f64, OracleError> {
    assert!(c >= 1.0);
    let sol = rvi_solve(model, c * lambda, opts)?;
    let d = model.d();
    let mean_gap = (0..d).map(|k| sol.gap(k)).sum::<f64>() / d as f64;
    Ok(mean_gap / c)
}
