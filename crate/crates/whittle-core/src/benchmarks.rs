//! Built-in benchmark arm models.

use crate::model::ArmModel;

/// Four-state arm with circulant dynamics.
///
/// Passive transitions move down (or stay) around the cycle `1 -> 4 -> 3 ->
/// 2 -> 1` with probability 1/2 each; active transitions are the transpose,
/// moving up. Rewards depend only on the state: `(-1, 0, 0, 1)`.
pub fn circulant() -> ArmModel {
    let p0 = vec![
        vec![0.5, 0.0, 0.0, 0.5],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.0, 0.5, 0.5, 0.0],
        vec![0.0, 0.0, 0.5, 0.5],
    ];
    let p1 = transpose(&p0);
    let r = vec![-1.0, 0.0, 0.0, 1.0];
    ArmModel::new(p0, p1, r.clone(), r).expect("circulant model is well formed")
}

/// Five-state restart arm with decay factor `rho`.
///
/// Left passive, the state drifts upward: from state `k < 5` it moves to
/// `k + 1` with probability 9/10 and restarts at state 1 with probability
/// 1/10; from state 5 it restarts with probability 1/10 and stays otherwise.
/// Activation restarts the arm at state 1 deterministically. The passive
/// reward decays geometrically, `r0(k) = rho^k` for 1-based `k`, and
/// activation pays nothing.
pub fn restart(rho: f64) -> ArmModel {
    let d = 5;
    let mut p0 = vec![vec![0.0; d]; d];
    for k in 0..d {
        p0[k][0] = 0.1;
        let up = if k + 1 < d { k + 1 } else { k };
        p0[k][up] += 0.9;
    }
    let mut p1 = vec![vec![0.0; d]; d];
    for row in &mut p1 {
        row[0] = 1.0;
    }
    let r0 = (0..d).map(|k| rho.powi(k as i32 + 1)).collect();
    let r1 = vec![0.0; d];
    ArmModel::new(p0, p1, r0, r1).expect("restart model is well formed")
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    (0..d).map(|j| (0..d).map(|i| m[i][j]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circulant_kernels_are_transposes() {
        let m = circulant();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(
                    m.transition_prob(false, i, j),
                    m.transition_prob(true, j, i)
                );
            }
        }
    }

    #[test]
    fn restart_rewards_decay() {
        let m = restart(0.9);
        assert_eq!(m.reward(0, false), 0.9);
        assert!((m.reward(4, false) - 0.9f64.powi(5)).abs() < 1e-15);
        for k in 0..5 {
            assert_eq!(m.reward(k, true), 0.0);
            assert_eq!(m.transition_prob(true, k, 0), 1.0);
        }
        assert_eq!(m.transition_prob(false, 4, 0), 0.1);
        assert_eq!(m.transition_prob(false, 4, 4), 0.9);
    }
}
