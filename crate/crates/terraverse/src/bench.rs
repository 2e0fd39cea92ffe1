//! The held-out evaluation suite: twenty obstacle families, ten difficulty
//! levels each.
//!
//! Benchmark programs live as `.terrain` sources embedded in the binary and
//! are never shown to any environment generator; evaluation compiles them raw
//! (no automatic fixing) and rolls out the policy mean on all 200 instances.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{compile, CompileError, GridConfig};
use crate::curriculum::level_to_difficulty;
use crate::dsl::{parse_program, TerrainProgram};
use crate::sim::{SimConfig, Simulator};
use crate::train::SkillPolicy;

/// Number of obstacle families.
pub const FAMILY_COUNT: usize = 20;
/// Difficulty levels per family.
pub const LEVEL_COUNT: u32 = 10;

/// Which evaluated dimension grows with difficulty, for monotonicity checks.
#[derive(Debug, Clone, Copy)]
pub struct KeyDimension {
    /// Segment index within the program.
    pub segment: usize,
    /// Parameter name (`width` and `lateral_offset` included).
    pub param: &'static str,
    /// +1 when the raw value grows with level, -1 when it shrinks.
    pub direction: f64,
}

/// One obstacle family: a difficulty-parameterized program plus its
/// designated key dimension.
#[derive(Debug, Clone)]
pub struct BenchFamily {
    pub name: &'static str,
    pub program: TerrainProgram,
    pub key: KeyDimension,
}

/// The full suite.
#[derive(Debug, Clone)]
pub struct BenchmarkSuite {
    pub families: Vec<BenchFamily>,
}

const SOURCES: [(&str, &str, KeyDimension); FAMILY_COUNT] = [
    ("box_climb", include_str!("../assets/benchmark/box_climb.terrain"),
     KeyDimension { segment: 1, param: "height", direction: 1.0 }),
    ("forward_ramp", include_str!("../assets/benchmark/forward_ramp.terrain"),
     KeyDimension { segment: 1, param: "end_height", direction: 1.0 }),
    ("sideways_ramp", include_str!("../assets/benchmark/sideways_ramp.terrain"),
     KeyDimension { segment: 1, param: "end_height", direction: 1.0 }),
    ("a_frame", include_str!("../assets/benchmark/a_frame.terrain"),
     KeyDimension { segment: 1, param: "end_height", direction: 1.0 }),
    ("box_jump", include_str!("../assets/benchmark/box_jump.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("stepping_stones", include_str!("../assets/benchmark/stepping_stones.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("staircase_up", include_str!("../assets/benchmark/staircase_up.terrain"),
     KeyDimension { segment: 1, param: "step_height", direction: 1.0 }),
    ("staircase_down", include_str!("../assets/benchmark/staircase_down.terrain"),
     KeyDimension { segment: 1, param: "step_height", direction: -1.0 }),
    ("narrow_passage", include_str!("../assets/benchmark/narrow_passage.terrain"),
     KeyDimension { segment: 1, param: "width", direction: -1.0 }),
    ("agility_poles", include_str!("../assets/benchmark/agility_poles.terrain"),
     KeyDimension { segment: 1, param: "pole_width", direction: 1.0 }),
    ("balance_beam", include_str!("../assets/benchmark/balance_beam.terrain"),
     KeyDimension { segment: 1, param: "width", direction: -1.0 }),
    ("gap_cross", include_str!("../assets/benchmark/gap_cross.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("hurdle", include_str!("../assets/benchmark/hurdle.terrain"),
     KeyDimension { segment: 1, param: "height", direction: 1.0 }),
    ("platform_jump_down", include_str!("../assets/benchmark/platform_jump_down.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("platform_jump_up", include_str!("../assets/benchmark/platform_jump_up.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("slope_traverse", include_str!("../assets/benchmark/slope_traverse.terrain"),
     KeyDimension { segment: 1, param: "end_height", direction: 1.0 }),
    ("zigzag_walls", include_str!("../assets/benchmark/zigzag_walls.terrain"),
     KeyDimension { segment: 1, param: "width", direction: 1.0 }),
    ("mixed_ramp_box", include_str!("../assets/benchmark/mixed_ramp_box.terrain"),
     KeyDimension { segment: 2, param: "height", direction: 1.0 }),
    ("double_gap", include_str!("../assets/benchmark/double_gap.terrain"),
     KeyDimension { segment: 1, param: "length", direction: 1.0 }),
    ("beam_sequence", include_str!("../assets/benchmark/beam_sequence.terrain"),
     KeyDimension { segment: 1, param: "width", direction: -1.0 }),
];

/// Build the suite from the embedded sources. Deterministic.
pub fn build_benchmark() -> BenchmarkSuite {
    let families = SOURCES
        .iter()
        .map(|(name, src, key)| {
            let program = parse_program(src)
                .unwrap_or_else(|e| panic!("embedded benchmark {name} must parse: {e}"));
            debug_assert_eq!(program.name, *name);
            BenchFamily {
                name,
                program,
                key: *key,
            }
        })
        .collect();
    BenchmarkSuite { families }
}

/// One (family, level) evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub level: u32,
    pub goals: u32,
    pub steps: u32,
    pub edge_violations: u32,
}

/// Results over the full suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchRow>,
    /// Mean goals over all 200 instances, the headline metric.
    pub mean_goals: f64,
    /// Per-family area under the goals-vs-level curve (mean goals over
    /// levels).
    pub family_auc: Vec<(String, f64)>,
}

impl BenchmarkTable {
    /// `family,level,goals,steps,edge_violations` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,level,goals,steps,edge_violations\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.family, r.level, r.goals, r.steps, r.edge_violations
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean_goals": self.mean_goals,
            "family_auc": self.family_auc
                .iter()
                .map(|(f, a)| serde_json::json!({"family": f, "auc": a}))
                .collect::<Vec<_>>(),
        })
    }

    pub fn family_levels(&self, family: &str) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.goals)
            .collect()
    }
}

/// Suite compiled once; evaluates many policies cheaply.
pub struct BenchmarkEvaluator {
    sims: Vec<(String, u32, Arc<Simulator>)>,
}

impl BenchmarkEvaluator {
    pub fn new(grid: &GridConfig, sim_cfg: &SimConfig) -> Result<BenchmarkEvaluator, CompileError> {
        let suite = build_benchmark();
        let sims = suite
            .families
            .par_iter()
            .map(|fam| -> Result<Vec<(String, u32, Arc<Simulator>)>, CompileError> {
                let mut out = Vec::with_capacity(LEVEL_COUNT as usize);
                for level in 1..=LEVEL_COUNT {
                    let t = compile(&fam.program, level_to_difficulty(level), grid)?;
                    out.push((
                        fam.name.to_string(),
                        level,
                        Arc::new(Simulator::new(Arc::new(t), *sim_cfg)),
                    ));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(BenchmarkEvaluator { sims })
    }

    /// Evaluate a policy's mean skills over all 200 instances.
    pub fn evaluate(&self, policy: &SkillPolicy) -> BenchmarkTable {
        let mut rows: Vec<BenchRow> = self
            .sims
            .par_iter()
            .map(|(family, level, sim)| {
                let r = sim.rollout(&policy.mean);
                BenchRow {
                    family: family.clone(),
                    level: *level,
                    goals: r.goals_reached,
                    steps: r.steps,
                    edge_violations: r.edge_violations,
                }
            })
            .collect();
        rows.sort_by(|a, b| a.family.cmp(&b.family).then(a.level.cmp(&b.level)));

        let mean_goals =
            rows.iter().map(|r| r.goals as f64).sum::<f64>() / rows.len() as f64;
        let mut family_auc = Vec::new();
        for fam in SOURCES.iter().map(|(n, _, _)| *n) {
            let goals: Vec<f64> = rows
                .iter()
                .filter(|r| r.family == fam)
                .map(|r| r.goals as f64)
                .collect();
            family_auc.push((
                fam.to_string(),
                goals.iter().sum::<f64>() / goals.len() as f64,
            ));
        }
        BenchmarkTable {
            rows,
            mean_goals,
            family_auc,
        }
    }
}

/// Convenience one-shot evaluation.
pub fn evaluate_benchmark(
    policy: &SkillPolicy,
    grid: &GridConfig,
    sim_cfg: &SimConfig,
) -> Result<BenchmarkTable, CompileError> {
    Ok(BenchmarkEvaluator::new(grid, sim_cfg)?.evaluate(policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{SkillVector, SKILL_MAX};
    use crate::validate::{check_program, default_difficulty_samples, CheckLimits};

    fn grid() -> GridConfig {
        GridConfig::default()
    }

    #[test]
    fn suite_has_twenty_families_and_two_hundred_instances() {
        let suite = build_benchmark();
        assert_eq!(suite.families.len(), FAMILY_COUNT);
        let eval = BenchmarkEvaluator::new(&grid(), &SimConfig::default()).unwrap();
        assert_eq!(eval.sims.len(), 200);
    }

    #[test]
    fn every_instantiation_passes_the_raw_check() {
        let suite = build_benchmark();
        let limits = CheckLimits::default();
        let samples = default_difficulty_samples();
        for fam in &suite.families {
            let report = check_program(&fam.program, &limits, &grid(), &samples);
            assert!(
                report.passed,
                "{} fails the check: {:?}",
                fam.name, report.violations
            );
        }
    }

    #[test]
    fn key_dimensions_are_monotone_in_level() {
        let suite = build_benchmark();
        for fam in &suite.families {
            let seg = &fam.program.segments[fam.key.segment];
            let expr = match fam.key.param {
                "width" => fam.key_expr_width(seg),
                other => seg.params[other].clone(),
            };
            let mut prev = f64::NEG_INFINITY;
            for level in 1..=LEVEL_COUNT {
                let v = expr.eval(level_to_difficulty(level)).unwrap() * fam.key.direction;
                assert!(
                    v >= prev - 1e-12,
                    "{}: key dimension not monotone at level {level}",
                    fam.name
                );
                prev = v;
            }
        }
    }

    #[test]
    fn level_one_is_solvable_by_a_mid_range_skill_vector() {
        let mid = SkillVector {
            climb: 0.3,
            descend: 0.4,
            jump: 0.3,
            slope: 0.3,
            beam: 0.4,
        };
        let policy = SkillPolicy {
            mean: mid,
            ..SkillPolicy::default()
        };
        let table = evaluate_benchmark(&policy, &grid(), &SimConfig::default()).unwrap();
        for row in table.rows.iter().filter(|r| r.level == 1) {
            assert_eq!(
                row.goals, 8,
                "{} level 1 not solvable by the mid-range vector",
                row.family
            );
        }
    }

    #[test]
    fn balance_beam_narrows_to_point_two_meters() {
        let suite = build_benchmark();
        let fam = suite
            .families
            .iter()
            .find(|f| f.name == "balance_beam")
            .unwrap();
        let width = fam.program.segments[1]
            .width
            .as_ref()
            .unwrap()
            .eval(1.0)
            .unwrap();
        assert!((width - 0.2).abs() < 1e-12);
    }

    #[test]
    fn max_skill_scores_high_with_nonincreasing_family_curves() {
        let policy = SkillPolicy {
            mean: SKILL_MAX,
            ..SkillPolicy::default()
        };
        let table = evaluate_benchmark(&policy, &grid(), &SimConfig::default()).unwrap();
        assert!(
            table.mean_goals >= 6.0 && table.mean_goals <= 8.0,
            "max-skill mean {}",
            table.mean_goals
        );
        for (fam, _) in &table.family_auc {
            let goals = table.family_levels(fam);
            for pair in goals.windows(2) {
                assert!(
                    pair[1] <= pair[0],
                    "{fam} goals increase with level: {goals:?}"
                );
            }
        }
    }

    #[test]
    fn zero_skill_finds_level_ten_no_easier_than_level_one() {
        let policy = SkillPolicy {
            mean: SkillVector::ZERO,
            ..SkillPolicy::default()
        };
        let table = evaluate_benchmark(&policy, &grid(), &SimConfig::default()).unwrap();
        for (fam, _) in &table.family_auc {
            let goals = table.family_levels(fam);
            assert!(
                goals[9] <= goals[0],
                "{fam}: level 10 ({}) easier than level 1 ({})",
                goals[9],
                goals[0]
            );
        }
    }

    impl BenchFamily {
        fn key_expr_width(&self, seg: &crate::dsl::Segment) -> crate::dsl::Expr {
            seg.width.clone().expect("width key dimension present")
        }
    }
}
