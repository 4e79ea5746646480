//! Two-timescale Q-learning for Whittle indices.
//!
//! One [`QwiLearner`] serves one statistical class of arms. It maintains a
//! Q-table `Q(i,u;k)` per index-target state `k`, index estimates
//! `lambda(k)`, and local clocks `nu(i,u)` counting the updates applied to
//! each component. Every observed transition `(i,u) -> j` updates component
//! `(i,u)` of all `d` k-slices (fast timescale); the index estimates move
//! once per global step by `b(n) (Q(k,1;k) - Q(k,0;k))` (slow timescale,
//! normally gated to every N-th step by the schedule).
//!
//! Update arithmetic is pinned so that seeded traces are exactly
//! reproducible. For one observation `(i,u,j)` and slice `k`:
//!
//! 1. `reward = r(i,1)` if active, else `r(i,0) + lambda(k)` (one addition);
//! 2. `m = max(Q(j,0;k), Q(j,1;k))`;
//! 3. `f = s / 2d` where `s` accumulates `Q(i',0;k) + Q(i',1;k)` for
//!    `i' = 0..d` ascending, one paired addition per state;
//! 4. `delta = ((reward + m) - f) - Q(i,u;k)`;
//! 5. `Q(i,u;k) += a(nu(i,u)) * delta` (multiply, then add).
//!
//! Slices are updated in ascending `k` from the pre-observation table (they
//! do not interact within one observation), `nu(i,u)` increments after all
//! slices, and a gated-off slow step (`b = 0`) is skipped entirely rather
//! than applied as `+0`.

use crate::model::ArmModel;
use crate::oracle;
use crate::schedule::StepSchedule;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("learner diverged: non-finite {table} value at step {step}")]
    Diverged { table: &'static str, step: u64 },

    #[error("learner state shape mismatch: {what}")]
    ShapeMismatch { what: String },
}

/// `f(Q) = (1/2d) sum_i (Q(i,0) + Q(i,1))` over one `d x 2` slice laid out
/// as `q[2i + u]`. This is the normalization that replaces the unknown
/// average reward in the update; at the fixed point it equals the optimal
/// average reward, which ties the learner's gauge to the exact solver's.
pub fn f_norm(q_slice: &[f64]) -> f64 {
    let d = q_slice.len() / 2;
    let mut s = 0.0;
    for i in 0..d {
        s += q_slice[2 * i] + q_slice[2 * i + 1];
    }
    s / (2.0 * d as f64)
}

/// Expected-increment diagnostic `h(Q, lambda) - Q` per component, using the
/// exact kernels. Zero (to solver tolerance) exactly at the subsidized
/// problem's fixed point.
pub fn bellman_residual(model: &ArmModel, q_slice: &[f64], lambda: f64) -> Vec<f64> {
    let image = oracle::bellman_image(model, lambda, q_slice);
    image.iter().zip(q_slice).map(|(h, q)| h - q).collect()
}

#[derive(Debug, Clone)]
pub struct QwiLearner {
    d: usize,
    r0: Vec<f64>,
    r1: Vec<f64>,
    /// Layout: `q[(k * d + i) * 2 + u]` for slice `k`, state `i`, action `u`.
    q: Vec<f64>,
    lambda: Vec<f64>,
    /// Local clocks, `nu[2i + u]`.
    nu: Vec<u64>,
    schedule: StepSchedule,
}

impl QwiLearner {
    /// Fresh learner: `lambda = 0` and `Q(i,u;k) = r(i,u)` for every slice.
    pub fn new(model: &ArmModel, schedule: StepSchedule) -> Self {
        let d = model.d();
        let mut q = Vec::with_capacity(2 * d * d);
        for _k in 0..d {
            for i in 0..d {
                q.push(model.reward(i, false));
                q.push(model.reward(i, true));
            }
        }
        Self {
            d,
            r0: model.rewards(false).to_vec(),
            r1: model.rewards(true).to_vec(),
            q,
            lambda: vec![0.0; d],
            nu: vec![0; 2 * d],
            schedule,
        }
    }

    /// Rebuilds a learner from raw parts (checkpoint restore, tests).
    pub fn from_parts(
        model: &ArmModel,
        schedule: StepSchedule,
        q: Vec<f64>,
        lambda: Vec<f64>,
        nu: Vec<u64>,
    ) -> Result<Self, LearnerError> {
        let d = model.d();
        if q.len() != 2 * d * d {
            return Err(LearnerError::ShapeMismatch {
                what: format!("q has {} entries, expected {}", q.len(), 2 * d * d),
            });
        }
        if lambda.len() != d {
            return Err(LearnerError::ShapeMismatch {
                what: format!("lambda has {} entries, expected {d}", lambda.len()),
            });
        }
        if nu.len() != 2 * d {
            return Err(LearnerError::ShapeMismatch {
                what: format!("nu has {} entries, expected {}", nu.len(), 2 * d),
            });
        }
        Ok(Self {
            d,
            r0: model.rewards(false).to_vec(),
            r1: model.rewards(true).to_vec(),
            q,
            lambda,
            nu,
            schedule,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_at(&self, k_hat: usize) -> f64 {
        self.lambda[k_hat]
    }

    pub fn clocks(&self) -> &[u64] {
        &self.nu
    }

    pub fn nu_at(&self, state: usize, active: bool) -> u64 {
        self.nu[2 * state + usize::from(active)]
    }

    pub fn q_raw(&self) -> &[f64] {
        &self.q
    }

    /// One `d x 2` slice, laid out `[2i + u]`.
    pub fn q_slice(&self, k_hat: usize) -> &[f64] {
        let base = k_hat * self.d * 2;
        &self.q[base..base + 2 * self.d]
    }

    pub fn q_at(&self, k_hat: usize, state: usize, active: bool) -> f64 {
        self.q[(k_hat * self.d + state) * 2 + usize::from(active)]
    }

    /// Fast-timescale update for one observed transition of this class.
    pub fn async_update(&mut self, i: usize, active: bool, j: usize) {
        let d = self.d;
        let u = usize::from(active);
        let a = self.schedule.a(self.nu[2 * i + u]);
        for k_hat in 0..d {
            let base = k_hat * d * 2;
            let reward = if active {
                self.r1[i]
            } else {
                self.r0[i] + self.lambda[k_hat]
            };
            let qj0 = self.q[base + 2 * j];
            let qj1 = self.q[base + 2 * j + 1];
            let m = if qj1 > qj0 { qj1 } else { qj0 };
            let mut s = 0.0;
            for ii in 0..d {
                s += self.q[base + 2 * ii] + self.q[base + 2 * ii + 1];
            }
            let f = s / (2.0 * d as f64);
            let idx = base + 2 * i + u;
            let q_iu = self.q[idx];
            let delta = ((reward + m) - f) - q_iu;
            self.q[idx] = q_iu + a * delta;
        }
        self.nu[2 * i + u] += 1;
    }

    /// Slow-timescale update at global step `n`; a no-op whenever the
    /// schedule's gate zeroes `b(n)`.
    pub fn lambda_update(&mut self, n: u64) {
        let b = self.schedule.b(n);
        if b == 0.0 {
            return;
        }
        let d = self.d;
        for k_hat in 0..d {
            let base = k_hat * d * 2;
            let gap = self.q[base + 2 * k_hat + 1] - self.q[base + 2 * k_hat];
            self.lambda[k_hat] += b * gap;
        }
    }

    /// Synchronous off-policy sweep: every component `(i,u)` of every slice
    /// is updated once from the pre-sweep table, with one simulated next
    /// state drawn per `(i,u)` (shared across slices) and the global-clock
    /// stepsize `a(n)`. Draws happen in ascending `(i,u)` order. With
    /// `lambda_frozen` supplied the subsidy is held at that value for every
    /// slice and the slow update is skipped; otherwise the slow update runs
    /// after the sweep.
    pub fn sync_sweep(
        &mut self,
        model: &ArmModel,
        n: u64,
        lambda_frozen: Option<f64>,
        rng: &mut impl Rng,
    ) {
        let d = self.d;
        let mut next = vec![0usize; 2 * d];
        for i in 0..d {
            for u in 0..2 {
                next[2 * i + u] = crate::sim::sample_next(model, i, u == 1, rng);
            }
        }
        let snapshot = self.q.clone();
        let a = self.schedule.a(n);
        for k_hat in 0..d {
            let base = k_hat * d * 2;
            let slice = &snapshot[base..base + 2 * d];
            let f = f_norm(slice);
            let lam = lambda_frozen.unwrap_or(self.lambda[k_hat]);
            for i in 0..d {
                for u in 0..2 {
                    let reward = if u == 1 { self.r1[i] } else { self.r0[i] + lam };
                    let j = next[2 * i + u];
                    let qj0 = slice[2 * j];
                    let qj1 = slice[2 * j + 1];
                    let m = if qj1 > qj0 { qj1 } else { qj0 };
                    let q_iu = slice[2 * i + u];
                    let delta = ((reward + m) - f) - q_iu;
                    self.q[base + 2 * i + u] = q_iu + a * delta;
                }
            }
        }
        for c in &mut self.nu {
            *c += 1;
        }
        if lambda_frozen.is_none() {
            self.lambda_update(n);
        }
    }

    /// Errors if any table entry went non-finite (divergence guard).
    pub fn check_finite(&self, step: u64) -> Result<(), LearnerError> {
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::Diverged { table: "Q", step });
        }
        if self.lambda.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::Diverged {
                table: "lambda",
                step,
            });
        }
        Ok(())
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.lambda.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}
