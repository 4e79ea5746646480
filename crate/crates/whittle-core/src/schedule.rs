//! Two-timescale stepsize schedules.
//!
//! The fast (Q) and slow (index) iterations use stepsizes `a(n)` and `b(n)`
//! with `b(n) = o(a(n))`, so the index sees a quasi-converged Q-table. `n`
//! is the fast iteration's local clock for `a` and the global step for `b`.

/// Piecewise-constant window length in the decreasing schedules.
pub const STEP_WINDOW: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `a(n) = C / ceil(n/500)` and
    /// `b(n) = C' / (1 + ceil(n ln n / 500))` gated to fire only when
    /// `n mod gate == 0` (the gate is normally the arm count; `n = 0`
    /// satisfies it). Both formulas are evaluated 1-based: `n = 0` is
    /// treated as `n = 1`, with `1·ln 1 = 0`, so `a(0) = C` and `b(0) = C'`.
    Decreasing {
        fast_gain: f64,
        slow_gain: f64,
        gate: u64,
    },
    /// Fixed stepsizes; the slow update runs every step.
    Constant { a: f64, b: f64 },
}

impl StepSchedule {
    /// Decreasing schedule with the default gains.
    pub fn decreasing(gate: u64) -> Self {
        StepSchedule::Decreasing {
            fast_gain: 0.1,
            slow_gain: 0.05,
            gate,
        }
    }

    pub fn a(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::Decreasing { fast_gain, .. } => {
                let m = n.max(1);
                fast_gain / m.div_ceil(STEP_WINDOW) as f64
            }
            StepSchedule::Constant { a, .. } => a,
        }
    }

    pub fn b(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::Decreasing {
                slow_gain, gate, ..
            } => {
                if n % gate != 0 {
                    return 0.0;
                }
                let m = n.max(1) as f64;
                let ramp = (m * m.ln() / STEP_WINDOW as f64).ceil();
                slow_gain / (1.0 + ramp)
            }
            StepSchedule::Constant { b, .. } => b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decreasing(c: f64, c_slow: f64, gate: u64) -> StepSchedule {
        StepSchedule::Decreasing {
            fast_gain: c,
            slow_gain: c_slow,
            gate,
        }
    }

    #[test]
    fn fast_stepsize_windows() {
        let s = decreasing(1.0, 1.0, 100);
        assert_eq!(s.a(0), 1.0);
        assert_eq!(s.a(1), 1.0);
        assert_eq!(s.a(500), 1.0);
        assert_eq!(s.a(501), 0.5);
        assert!((s.a(1001) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn slow_stepsize_gate_and_ramp() {
        let s = decreasing(1.0, 1.0, 100);
        assert_eq!(s.b(57), 0.0);
        assert_eq!(s.b(0), 1.0);
        // n = 100: ceil(100 ln 100 / 500) = ceil(0.921) = 1.
        assert!((s.b(100) - 0.5).abs() < 1e-15);
        assert_eq!(s.b(101), 0.0);
    }

    #[test]
    fn fast_stepsize_non_increasing() {
        let s = decreasing(0.7, 0.1, 100);
        let mut prev = f64::INFINITY;
        for n in 0..5000 {
            let a = s.a(n);
            assert!(a <= prev + 1e-15);
            prev = a;
        }
    }

    #[test]
    fn timescale_ratio_decays() {
        // The b/a ratio at n = 10^6 falls below 1e-2 once the gain ratio is
        // at most ~0.138; the decay itself is gain-independent.
        let s = decreasing(1.0, 0.1, 100);
        let ratio = |n: u64| s.b(n) / s.a(n);
        assert!(ratio(1_000_000) < 1e-2);
        let decades: Vec<f64> = [100u64, 1_000, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&n| ratio(n))
            .collect();
        for w in decades.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn constant_schedule_is_flat_and_ungated() {
        let s = StepSchedule::Constant { a: 0.02, b: 0.005 };
        for n in [0u64, 1, 57, 100, 999_999] {
            assert_eq!(s.a(n), 0.02);
            assert_eq!(s.b(n), 0.005);
        }
    }
}
