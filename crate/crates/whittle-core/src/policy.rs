//! Index policy: top-M activation with epsilon-uniform exploration.

use rand::Rng;

/// Where the per-arm priority values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    /// Indices read from the learner as it runs.
    LearnedIndices,
    /// Indices precomputed by the exact solver (comparison baseline).
    ExactIndices,
    /// Ignore indices; activate a uniformly random subset every step.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    /// Exploration probability in `[0, 1)`.
    pub epsilon: f64,
    pub mode: PolicyMode,
}

/// Activates the top `budget` arms by index value. One Bernoulli(epsilon)
/// per step decides whole-step exploration: with probability epsilon the
/// active set is instead a uniformly random `budget`-subset. Ties in the
/// sort break toward the lower arm id.
pub fn select_actions(
    epsilon: f64,
    indices: &[f64],
    budget: usize,
    rng: &mut impl Rng,
) -> Vec<bool> {
    debug_assert!((0.0..1.0).contains(&epsilon));
    debug_assert!(budget < indices.len());
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return uniform_subset(indices.len(), budget, rng);
    }
    top_m(indices, budget)
}

/// Deterministic top-M selection: highest index first, ties by ascending
/// arm id.
pub fn top_m(indices: &[f64], budget: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_unstable_by(|&a, &b| indices[b].total_cmp(&indices[a]).then(a.cmp(&b)));
    let mut actions = vec![false; indices.len()];
    for &arm in order.iter().take(budget) {
        actions[arm] = true;
    }
    actions
}

/// Uniformly random `budget`-subset of `n` arms, sampled without
/// replacement.
pub fn uniform_subset(n: usize, budget: usize, rng: &mut impl Rng) -> Vec<bool> {
    let mut actions = vec![false; n];
    for arm in rand::seq::index::sample(rng, n, budget) {
        actions[arm] = true;
    }
    actions
}

/// Empirical visitation frequencies `nu(i,u) / (n+1)` for one class's local
/// clocks (layout `nu[2i+u]`). With several arms feeding one class the
/// frequencies sum to the class's arm count, not 1.
pub fn exploration_stats(clocks: &[u64], n: u64) -> Vec<f64> {
    let denom = (n + 1) as f64;
    clocks.iter().map(|&c| c as f64 / denom).collect()
}
