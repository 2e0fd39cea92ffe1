//! The per-terrain difficulty ladder.
//!
//! Each (agent, terrain) pair holds a ladder position in 1..=10. Reaching
//! enough goals promotes, failing demotes, and middling results either stay
//! put or drop to a random earlier level so training keeps revisiting old
//! ground.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Promotion/demotion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    /// Promote when goals reached is at least this (8 * 0.8).
    pub g_promote: f64,
    /// Demote when goals reached is below this (8 * 0.4).
    pub g_demote: f64,
    /// Probability of staying put in the middle band.
    pub p_stay: f64,
    /// Number of ladder levels.
    pub levels: u32,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            g_promote: 8.0 * 0.8,
            g_demote: 8.0 * 0.4,
            p_stay: 0.75,
            levels: 10,
        }
    }
}

/// Ladder position and its update history for one (agent, terrain) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub level: u32,
    /// `(level, goals_reached)` per update, level as it was when measured.
    pub history: Vec<(u32, f64)>,
}

impl Default for CurriculumState {
    fn default() -> Self {
        CurriculumState {
            level: 1,
            history: Vec::new(),
        }
    }
}

impl CurriculumState {
    pub fn new() -> CurriculumState {
        Self::default()
    }

    /// Apply one training outcome.
    ///
    /// `goals_reached >= g_promote` moves up one level (capped); below
    /// `g_demote` moves down one (floored); otherwise stay with probability
    /// `p_stay`, else jump to a uniformly random strictly lower level.
    pub fn update(&mut self, goals_reached: f64, cfg: &LadderConfig, rng: &mut impl Rng) {
        self.history.push((self.level, goals_reached));
        if goals_reached >= cfg.g_promote {
            self.level = (self.level + 1).min(cfg.levels);
        } else if goals_reached < cfg.g_demote {
            self.level = self.level.saturating_sub(1).max(1);
        } else if rng.gen::<f64>() >= cfg.p_stay && self.level > 1 {
            self.level = rng.gen_range(1..self.level);
        }
    }

    /// Difficulty for the current level.
    pub fn difficulty(&self) -> f64 {
        level_to_difficulty(self.level)
    }
}

/// Map ladder level 1..=10 onto difficulty `(k - 1) / 9`.
pub fn level_to_difficulty(level: u32) -> f64 {
    debug_assert!((1..=10).contains(&level));
    (level - 1) as f64 / 9.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_rng;

    #[test]
    fn level_to_difficulty_endpoints() {
        assert_eq!(level_to_difficulty(1), 0.0);
        assert_eq!(level_to_difficulty(10), 1.0);
        assert_eq!(level_to_difficulty(5), 4.0 / 9.0);
    }

    #[test]
    fn seven_goals_promote_three_demote() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(0, &[1]);

        let mut st = CurriculumState { level: 5, history: vec![] };
        st.update(7.0, &cfg, &mut rng);
        assert_eq!(st.level, 6, "7 >= 6.4 must promote");

        let mut st = CurriculumState { level: 5, history: vec![] };
        st.update(3.0, &cfg, &mut rng);
        assert_eq!(st.level, 4, "3 < 3.2 must demote");

        let mut st = CurriculumState { level: 10, history: vec![] };
        st.update(8.0, &cfg, &mut rng);
        assert_eq!(st.level, 10, "promotion caps at 10");

        let mut st = CurriculumState { level: 1, history: vec![] };
        st.update(0.0, &cfg, &mut rng);
        assert_eq!(st.level, 1, "demotion floors at 1");
    }

    #[test]
    fn stay_probability_and_uniform_fallback() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(42, &[2]);
        let trials = 10_000;
        let mut stayed = 0;
        let mut lower_counts = [0u32; 4];
        for _ in 0..trials {
            let mut st = CurriculumState { level: 5, history: vec![] };
            st.update(5.0, &cfg, &mut rng);
            if st.level == 5 {
                stayed += 1;
            } else {
                assert!((1..=4).contains(&st.level));
                lower_counts[(st.level - 1) as usize] += 1;
            }
        }
        let stay_frac = stayed as f64 / trials as f64;
        assert!(
            (stay_frac - 0.75).abs() <= 0.02,
            "stay fraction {stay_frac} outside 0.75 +/- 0.02"
        );
        // The remainder splits uniformly over levels 1..=4.
        let moved: u32 = lower_counts.iter().sum();
        for (i, &c) in lower_counts.iter().enumerate() {
            let frac = c as f64 / moved as f64;
            assert!(
                (frac - 0.25).abs() < 0.05,
                "level {} fraction {frac} not near uniform",
                i + 1
            );
        }
    }

    #[test]
    fn perfect_agent_reaches_top_in_nine_updates() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(0, &[3]);
        let mut st = CurriculumState::new();
        for i in 0..9 {
            assert_eq!(st.level, i + 1);
            st.update(8.0, &cfg, &mut rng);
        }
        assert_eq!(st.level, 10);
        assert_eq!(st.history.len(), 9);
    }

    #[test]
    fn failing_agent_reaches_bottom_within_nine_updates() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(0, &[4]);
        for start in 1..=10u32 {
            let mut st = CurriculumState { level: start, history: vec![] };
            for _ in 0..9 {
                st.update(0.0, &cfg, &mut rng);
            }
            assert_eq!(st.level, 1, "start level {start}");
        }
    }

    #[test]
    fn level_bounds_hold_under_random_updates() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(7, &[5]);
        let mut st = CurriculumState::new();
        for _ in 0..5_000 {
            let goals = rng.gen_range(0..=8) as f64;
            st.update(goals, &cfg, &mut rng);
            assert!((1..=10).contains(&st.level));
        }
    }

    #[test]
    fn history_records_pre_update_level() {
        let cfg = LadderConfig::default();
        let mut rng = derive_rng(0, &[6]);
        let mut st = CurriculumState { level: 4, history: vec![] };
        st.update(7.5, &cfg, &mut rng);
        assert_eq!(st.history, vec![(4, 7.5)]);
        assert_eq!(st.level, 5);
    }
}
