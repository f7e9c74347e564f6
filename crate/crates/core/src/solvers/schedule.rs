//! Gradient refresh schedules with a bounded delay.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolverError;

/// Periodic refresh pattern: iteration `k ≥ 1` refreshes the component
/// indices in `pattern[(k − 1) mod len]`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    components: usize,
    delay_bound: usize,
    pattern: Vec<Vec<usize>>,
}

/// Outcome of [`validate_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleCheck {
    Ok,
    /// Component `i` had sample time `τ_i < k − K` at iteration `k`.
    Violation { k: usize, i: usize },
}

impl Schedule {
    /// Arbitrary periodic pattern. Only structural validity (nonempty sets,
    /// indices in range) is enforced; the delay bound is checked separately
    /// by [`validate_schedule`].
    pub fn periodic(
        components: usize,
        delay_bound: usize,
        pattern: Vec<Vec<usize>>,
    ) -> Result<Self, SolverError> {
        if components == 0 {
            return Err(SolverError::InvalidSchedule("no components".into()));
        }
        if pattern.is_empty() {
            return Err(SolverError::InvalidSchedule("empty pattern".into()));
        }
        for (slot, set) in pattern.iter().enumerate() {
            if set.is_empty() {
                return Err(SolverError::EmptyRefresh(slot + 1));
            }
            if let Some(&i) = set.iter().find(|&&i| i >= components) {
                return Err(SolverError::InvalidSchedule(format!(
                    "slot {slot}: index {i} out of range for {components} components"
                )));
            }
        }
        Ok(Self {
            components,
            delay_bound,
            pattern,
        })
    }

    /// Deterministic cyclic order: iteration `k` refreshes `(k − 1) mod m`,
    /// giving `K = m − 1`.
    pub fn cyclic(m: usize) -> Result<Self, SolverError> {
        Self::periodic(m, m.saturating_sub(1), (0..m).map(|i| vec![i]).collect())
    }

    /// Every component refreshed at every iteration (`K = 0`).
    pub fn full(m: usize) -> Result<Self, SolverError> {
        Self::periodic(m, 0, vec![(0..m).collect()])
    }

    /// Singleton refreshes with period `K + 1` placed to hold staleness at
    /// the bound: all but one seeded "filler" component own one random slot
    /// per period and so reach delay exactly `K`; the filler takes every
    /// remaining slot so no refresh set is empty.
    pub fn adversarial(m: usize, delay_bound: usize, seed: u64) -> Result<Self, SolverError> {
        if m == 0 {
            return Err(SolverError::InvalidSchedule("no components".into()));
        }
        if delay_bound + 1 < m {
            return Err(SolverError::InvalidSchedule(format!(
                "delay bound {delay_bound} cannot cover {m} components with singleton refreshes"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let period = delay_bound + 1;
        let filler = rng.gen_range(0..m);
        let mut slots: Vec<usize> = (0..period).collect();
        slots.shuffle(&mut rng);
        let mut pattern = vec![vec![filler]; period];
        for (slot, i) in slots.into_iter().zip((0..m).filter(|&i| i != filler)) {
            pattern[slot] = vec![i];
        }
        Self::periodic(m, delay_bound, pattern)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Delay bound `K`.
    pub fn delay_bound(&self) -> usize {
        self.delay_bound
    }

    pub fn pattern(&self) -> &[Vec<usize>] {
        &self.pattern
    }

    /// Refresh set of iteration `k ≥ 1`.
    pub fn refresh(&self, k: usize) -> &[usize] {
        debug_assert!(k >= 1);
        &self.pattern[(k.max(1) - 1) % self.pattern.len()]
    }
}

/// Replays sample times over `horizon` iterations starting from `τ_i = 0`
/// and reports the first `(k, i)` with `τ_i^k < k − K`.
pub fn validate_schedule(schedule: &Schedule, horizon: usize) -> ScheduleCheck {
    let mut tau = vec![0usize; schedule.components()];
    let k_bound = schedule.delay_bound();
    for k in 1..=horizon {
        for &i in schedule.refresh(k) {
            tau[i] = k;
        }
        if let Some(i) = tau.iter().position(|&t| t + k_bound < k) {
            return ScheduleCheck::Violation { k, i };
        }
    }
    ScheduleCheck::Ok
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_refresh_order() {
        let s = Schedule::cyclic(3).unwrap();
        assert_eq!(s.delay_bound(), 2);
        let order: Vec<_> = (1..=4).map(|k| s.refresh(k).to_vec()).collect();
        assert_eq!(order, vec![vec![0], vec![1], vec![2], vec![0]]);
        for start in 1..50 {
            let mut seen: Vec<usize> = (start..start + 3).flat_map(|k| s.refresh(k).to_vec()).collect();
            seen.sort_unstable();
            assert_eq!(seen, vec![0, 1, 2]);
        }
        assert_eq!(validate_schedule(&s, 1000), ScheduleCheck::Ok);
    }

    #[test]
    fn single_component_refreshes_every_step() {
        let s = Schedule::cyclic(1).unwrap();
        assert_eq!(s.delay_bound(), 0);
        assert!((1..20).all(|k| s.refresh(k) == [0]));
        assert_eq!(validate_schedule(&s, 100), ScheduleCheck::Ok);
        let a = Schedule::adversarial(1, 0, 9).unwrap();
        assert!((1..20).all(|k| a.refresh(k) == [0]));
    }

    #[test]
    fn long_wait_within_bound_is_accepted() {
        // index 1 is refreshed every fourth step: τ lags by at most 3
        let s = Schedule::periodic(2, 3, vec![vec![0], vec![1], vec![0], vec![0]]).unwrap();
        assert_eq!(validate_schedule(&s, 1000), ScheduleCheck::Ok);
        let tight = Schedule::periodic(2, 2, s.pattern().to_vec()).unwrap();
        // k = 1: τ = (1, 0); k = 2: (2, 2); k = 5: (5, 2) lags by 3 > 2
        assert_eq!(validate_schedule(&tight, 1000), ScheduleCheck::Violation { k: 5, i: 1 });
    }

    #[test]
    fn skipped_index_is_reported() {
        let s = Schedule::periodic(2, 1, vec![vec![0], vec![0], vec![1]]).unwrap();
        assert_eq!(validate_schedule(&s, 10), ScheduleCheck::Violation { k: 2, i: 1 });
    }

    #[test]
    fn adversarial_schedules_are_valid_and_stale() {
        for seed in 0..20 {
            for (m, k) in [(2, 3), (3, 2), (5, 9), (4, 4)] {
                let s = Schedule::adversarial(m, k, seed).unwrap();
                assert_eq!(validate_schedule(&s, 500), ScheduleCheck::Ok);
                let tight = Schedule::periodic(m, k - 1, s.pattern().to_vec()).unwrap();
                assert_ne!(validate_schedule(&tight, 500), ScheduleCheck::Ok);
            }
        }
    }

    #[test]
    fn adversarial_is_seed_stable() {
        let a = Schedule::adversarial(4, 7, 42).unwrap();
        let b = Schedule::adversarial(4, 7, 42).unwrap();
        assert!((1..=1000).all(|k| a.refresh(k) == b.refresh(k)));
    }

    #[test]
    fn adversarial_rejects_infeasible_bound() {
        assert!(Schedule::adversarial(4, 2, 0).is_err());
    }

    #[test]
    fn rejects_empty_refresh_sets() {
        assert!(matches!(
            Schedule::periodic(2, 1, vec![vec![0], vec![]]),
            Err(SolverError::EmptyRefresh(2))
        ));
        assert!(Schedule::periodic(2, 1, vec![vec![2]]).is_err());
    }
}
