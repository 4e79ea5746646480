//! Shared support for integration tests: an exhaustive-enumeration solver
//! for average-reward ground truth and a deliberately plain transliteration
//! of the learning update, both independent of the library's
//! implementations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use whittle_core::model::ArmModel;

/// Exact average-reward quantities by brute force over all `2^d`
/// stationary deterministic policies, with closed-class decomposition so
/// multichain policies are handled.
pub mod brute {
    use whittle_core::model::ArmModel;

    /// Stationary distribution of an irreducible kernel (rows sum to 1) by
    /// Gauss-Jordan elimination on `(P^T - I) mu = 0`, `sum mu = 1`.
    pub fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
        let d = p.len();
        let mut a = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..d {
            a[d - 1][j] = 1.0;
        }
        a[d - 1][d] = 1.0;
        for col in 0..d {
            let piv = (col..d)
                .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
                .unwrap();
            a.swap(col, piv);
            let pivot = a[col][col];
            for row in 0..d {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col] / pivot;
                    for k in col..=d {
                        a[row][k] -= factor * a[col][k];
                    }
                }
            }
        }
        (0..d).map(|i| a[i][d] / a[i][i]).collect()
    }

    fn reachable(p: &[Vec<f64>], from: usize) -> Vec<bool> {
        let d = p.len();
        let mut seen = vec![false; d];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for j in 0..d {
                if p[i][j] > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// The closed communicating classes of a kernel: mutually-reachable
    /// groups of recurrent states.
    pub fn closed_classes(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let d = p.len();
        let reach: Vec<Vec<bool>> = (0..d).map(|i| reachable(p, i)).collect();
        let mut assigned = vec![false; d];
        let mut classes = Vec::new();
        for i in 0..d {
            if assigned[i] {
                continue;
            }
            // i is recurrent iff everything it reaches reaches it back
            let recurrent = (0..d).all(|j| !reach[i][j] || reach[j][i]);
            if recurrent {
                let class: Vec<usize> = (0..d).filter(|&j| reach[i][j] && reach[j][i]).collect();
                for &j in &class {
                    assigned[j] = true;
                }
                classes.push(class);
            }
        }
        classes
    }

    fn policy_kernel(model: &ArmModel, policy: u32) -> Vec<Vec<f64>> {
        (0..model.d())
            .map(|i| model.kernel_row(policy >> i & 1 == 1, i).to_vec())
            .collect()
    }

    /// Long-run average rewards achievable by one policy in the subsidized
    /// problem: one gain per closed class of its chain.
    pub fn policy_gains(model: &ArmModel, policy: u32, lambda: f64) -> Vec<f64> {
        let p = policy_kernel(model, policy);
        closed_classes(&p)
            .into_iter()
            .map(|class| {
                let sub: Vec<Vec<f64>> = class
                    .iter()
                    .map(|&i| class.iter().map(|&j| p[i][j]).collect())
                    .collect();
                let mu = stationary(&sub);
                class
                    .iter()
                    .zip(&mu)
                    .map(|(&i, &w)| {
                        let active = policy >> i & 1 == 1;
                        let sub_r = if active { 0.0 } else { lambda };
                        w * (model.reward(i, active) + sub_r)
                    })
                    .sum()
            })
            .collect()
    }

    /// Optimal gain of the subsidized problem: max over all stationary
    /// deterministic policies and their closed classes. Constant over
    /// states for weakly communicating models.
    pub fn best_gain(model: &ArmModel, lambda: f64) -> f64 {
        let d = model.d();
        assert!(d <= 16, "enumeration limited to small models");
        (0..1u32 << d)
            .flat_map(|pi| policy_gains(model, pi, lambda))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn constrained_best_gain(model: &ArmModel, k: usize, active: bool, lambda: f64) -> f64 {
        let d = model.d();
        (0..1u32 << d)
            .filter(|pi| (pi >> k & 1 == 1) == active)
            .flat_map(|pi| policy_gains(model, pi, lambda))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whittle index by bisecting the indifference point between the best
    /// policy that activates `k` and the best that rests it. Requires every
    /// chain of the model to keep `k` reachable near the index (true for the
    /// unichain models used in tests); the advantage is weakly decreasing in
    /// the subsidy so the sign test keeps `h(lo) >= 0 > h(hi)`.
    pub fn whittle_index(model: &ArmModel, k: usize, lo0: f64, hi0: f64) -> f64 {
        let h = |lam: f64| {
            constrained_best_gain(model, k, true, lam) - constrained_best_gain(model, k, false, lam)
        };
        let (mut lo, mut hi) = (lo0, hi0);
        assert!(
            h(lo) >= 0.0 && h(hi) < 0.0,
            "index bracket invalid for state {k}"
        );
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if h(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Straight-line transliteration of the two-timescale update equations,
/// nested arrays and explicit loops, no shared code with the library. Used
/// to pin the library's arithmetic bit-for-bit.
pub mod reference {
    #[derive(Clone, Copy)]
    pub enum RefSched {
        Decreasing { c: f64, c_slow: f64, gate: u64 },
        Constant { a: f64, b: f64 },
    }

    pub struct ReferenceQwi {
        pub r0: Vec<f64>,
        pub r1: Vec<f64>,
        /// `q[k][i][u]`.
        pub q: Vec<Vec<[f64; 2]>>,
        pub lambda: Vec<f64>,
        /// `nu[i][u]`.
        pub nu: Vec<[u64; 2]>,
        pub sched: RefSched,
    }

    impl ReferenceQwi {
        pub fn new(r0: Vec<f64>, r1: Vec<f64>, sched: RefSched) -> Self {
            let d = r0.len();
            let slice: Vec<[f64; 2]> = (0..d).map(|i| [r0[i], r1[i]]).collect();
            ReferenceQwi {
                r0,
                r1,
                q: vec![slice; d],
                lambda: vec![0.0; d],
                nu: vec![[0, 0]; d],
                sched,
            }
        }

        fn a_of(&self, count: u64) -> f64 {
            match self.sched {
                RefSched::Decreasing { c, .. } => {
                    let m = if count == 0 { 1 } else { count };
                    c / (((m + 499) / 500) as f64)
                }
                RefSched::Constant { a, .. } => a,
            }
        }

        fn b_of(&self, n: u64) -> f64 {
            match self.sched {
                RefSched::Decreasing { c_slow, gate, .. } => {
                    if n % gate != 0 {
                        return 0.0;
                    }
                    let m = if n == 0 { 1.0 } else { n as f64 };
                    let ramp = (m * m.ln() / 500.0).ceil();
                    c_slow / (1.0 + ramp)
                }
                RefSched::Constant { b, .. } => b,
            }
        }

        pub fn observe(&mut self, i: usize, u: usize, j: usize) {
            let d = self.r0.len();
            let a = self.a_of(self.nu[i][u]);
            for k in 0..d {
                let reward = if u == 1 {
                    self.r1[i]
                } else {
                    self.r0[i] + self.lambda[k]
                };
                let qj0 = self.q[k][j][0];
                let qj1 = self.q[k][j][1];
                let m = if qj1 > qj0 { qj1 } else { qj0 };
                let mut s = 0.0;
                for ii in 0..d {
                    s += self.q[k][ii][0] + self.q[k][ii][1];
                }
                let f = s / (2.0 * d as f64);
                let q_iu = self.q[k][i][u];
                let delta = ((reward + m) - f) - q_iu;
                self.q[k][i][u] = q_iu + a * delta;
            }
            self.nu[i][u] += 1;
        }

        pub fn slow_step(&mut self, n: u64) {
            let b = self.b_of(n);
            if b == 0.0 {
                return;
            }
            let d = self.r0.len();
            for k in 0..d {
                let gap = self.q[k][k][1] - self.q[k][k][0];
                self.lambda[k] += b * gap;
            }
        }
    }
}

/// Seeded random arm with strictly positive kernels (every policy's chain
/// is then irreducible) and rewards in `[-1, 1]`.
pub fn random_model(seed: u64) -> ArmModel {
    fn kernel(rng: &mut ChaCha12Rng, d: usize) -> Vec<Vec<f64>> {
        (0..d)
            .map(|_| {
                let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|v| v / sum).collect()
            })
            .collect()
    }
    fn reward(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=4usize);
    let p0 = kernel(&mut rng, d);
    let p1 = kernel(&mut rng, d);
    let r0 = reward(&mut rng, d);
    let r1 = reward(&mut rng, d);
    ArmModel::new(p0, p1, r0, r1).expect("random model is well formed")
}
