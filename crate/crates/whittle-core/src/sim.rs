//! Exact stochastic simulation of the coupled N-arm process.

use crate::model::{ArmModel, BanditInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("actions vector has {got} entries for {expected} arms")]
    LengthMismatch { got: usize, expected: usize },

    #[error("expected exactly {expected} active arms, got {got}")]
    BudgetViolation { got: usize, expected: usize },
}

/// Mutable state of one replication: arm states, the step counter, and the
/// replication's RNG stream. The policy layer borrows the same stream via
/// [`SimState::rng_mut`], so a replication is a single deterministic
/// function of its seed.
#[derive(Debug, Clone)]
pub struct SimState {
    states: Vec<usize>,
    step: u64,
    rng: ChaCha12Rng,
}

impl SimState {
    /// All arms start in state 1 (index 0).
    pub fn new(instance: &BanditInstance, seed: u64) -> Self {
        Self {
            states: vec![0; instance.n_arms()],
            step: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn with_states(states: Vec<usize>, seed: u64) -> Self {
        Self {
            states,
            step: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Current arm states (0-based).
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }

    pub fn rng(&self) -> &ChaCha12Rng {
        &self.rng
    }

    pub fn restore_rng(&mut self, rng: ChaCha12Rng) {
        self.rng = rng;
    }
}

/// Draws the next state from `p(. | i, u)` by inverse-CDF walk over the
/// kernel row, consuming one uniform variate.
pub fn sample_next(model: &ArmModel, state: usize, active: bool, rng: &mut impl Rng) -> usize {
    let row = model.kernel_row(active, state);
    let x: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = state;
    for (j, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = j;
        if x < acc {
            return j;
        }
    }
    // Row sums to 1 within tolerance; land on the last reachable state if
    // rounding left acc slightly below x.
    last
}

/// Advances every arm one step under the given action vector (exactly
/// `budget` entries true), returning the rewards `r(X_n, U_n)` evaluated at
/// the pre-transition states. Arms are advanced in ascending index order,
/// each consuming one variate from the shared stream.
pub fn step(
    instance: &BanditInstance,
    state: &mut SimState,
    actions: &[bool],
) -> Result<Vec<f64>, SimError> {
    let n = instance.n_arms();
    if actions.len() != n {
        return Err(SimError::LengthMismatch {
            got: actions.len(),
            expected: n,
        });
    }
    let active = actions.iter().filter(|&&a| a).count();
    if active != instance.budget() {
        return Err(SimError::BudgetViolation {
            got: active,
            expected: instance.budget(),
        });
    }
    let mut rewards = Vec::with_capacity(n);
    for alpha in 0..n {
        let model = instance.model_of(alpha);
        let i = state.states[alpha];
        let u = actions[alpha];
        rewards.push(model.reward(i, u));
        state.states[alpha] = sample_next(model, i, u, &mut state.rng);
    }
    state.step += 1;
    Ok(rewards)
}
