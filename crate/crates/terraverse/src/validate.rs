//! Environment check and automatic fixing.
//!
//! Every generated terrain is gated here before it can enter a training
//! library. Thresholds are strict "below": a measured value equal to the
//! threshold fails.

use serde::{Deserialize, Serialize};

use crate::compile::{compile, terrain_stats, CompiledTerrain, GridConfig};
use crate::dsl::{TerrainProgram, DIFFICULTY_GRID};

/// Check thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckLimits {
    /// Maximum terrain height must stay below this, meters.
    pub max_height: f64,
    /// Height difference between consecutive goal cells must stay below this,
    /// meters.
    pub max_goal_step: f64,
}

impl Default for CheckLimits {
    fn default() -> Self {
        CheckLimits {
            max_height: 3.0,
            max_goal_step: 0.8,
        }
    }
}

/// Fixer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixConfig {
    /// Forward extent of the spawn area flattened to ground, meters.
    pub spawn_length: f64,
    /// Minimum footprint of a raised feature along each axis, in cells.
    pub min_feature: usize,
}

impl Default for FixConfig {
    fn default() -> Self {
        FixConfig {
            spawn_length: 1.5,
            min_feature: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    #[serde(rename = "MAX_HEIGHT")]
    MaxHeight,
    #[serde(rename = "GOAL_STEP")]
    GoalStep,
    #[serde(rename = "GOAL_OOB")]
    GoalOob,
    #[serde(rename = "GOAL_COUNT")]
    GoalCount,
    #[serde(rename = "NONFINITE")]
    NonFinite,
    #[serde(rename = "EXEC_FAIL")]
    ExecFail,
}

/// One failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    pub measured: f64,
    pub threshold: f64,
}

/// Outcome of checking a terrain or a program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub checked_difficulties: Vec<f64>,
}

impl ValidityReport {
    fn from_violations(violations: Vec<Violation>, difficulties: Vec<f64>) -> ValidityReport {
        ValidityReport {
            passed: violations.is_empty(),
            violations,
            checked_difficulties: difficulties,
        }
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Check a compiled terrain against the limits.
pub fn check(t: &CompiledTerrain, limits: &CheckLimits) -> ValidityReport {
    let mut violations = Vec::new();
    let stats = terrain_stats(t);

    if t.heights.cells().iter().any(|h| !h.is_finite()) {
        violations.push(Violation {
            code: ViolationCode::NonFinite,
            message: "height field contains non-finite cells".to_string(),
            measured: f64::NAN,
            threshold: 0.0,
        });
    }
    if stats.max_height >= limits.max_height {
        violations.push(Violation {
            code: ViolationCode::MaxHeight,
            message: format!(
                "max height {:.3} m is not below {} m",
                stats.max_height, limits.max_height
            ),
            measured: stats.max_height,
            threshold: limits.max_height,
        });
    }
    if stats.max_goal_step >= limits.max_goal_step {
        violations.push(Violation {
            code: ViolationCode::GoalStep,
            message: format!(
                "max goal step {:.3} m is not below {} m",
                stats.max_goal_step, limits.max_goal_step
            ),
            measured: stats.max_goal_step,
            threshold: limits.max_goal_step,
        });
    }
    for (i, &goal) in t.goals.iter().enumerate() {
        if !t.goal_in_bounds(goal) {
            violations.push(Violation {
                code: ViolationCode::GoalOob,
                message: format!("goal {} at ({:.2}, {:.2}) outside grid", i + 1, goal.0, goal.1),
                measured: goal.0.max(goal.1),
                threshold: t.heights.rows as f64 * t.cell_size,
            });
        }
    }
    if t.goals.len() != 8 {
        violations.push(Violation {
            code: ViolationCode::GoalCount,
            message: format!("expected 8 goals, found {}", t.goals.len()),
            measured: t.goals.len() as f64,
            threshold: 8.0,
        });
    }

    ValidityReport::from_violations(violations, vec![t.difficulty])
}

/// Compile a program at each sampled difficulty and aggregate checks.
/// A program passes only if every sampled difficulty passes; compile errors
/// surface as `EXEC_FAIL` violations.
pub fn check_program(
    p: &TerrainProgram,
    limits: &CheckLimits,
    grid: &GridConfig,
    d_samples: &[f64],
) -> ValidityReport {
    let mut violations = Vec::new();
    for &d in d_samples {
        match compile(p, d, grid) {
            Ok(t) => {
                for mut v in check(&t, limits).violations {
                    v.message = format!("d={d:.3}: {}", v.message);
                    violations.push(v);
                }
            }
            Err(e) => violations.push(Violation {
                code: ViolationCode::ExecFail,
                message: format!("d={d:.3}: {e}"),
                measured: d,
                threshold: 0.0,
            }),
        }
    }
    ValidityReport::from_violations(violations, d_samples.to_vec())
}

/// The standard ten-difficulty sample grid.
pub fn default_difficulty_samples() -> Vec<f64> {
    DIFFICULTY_GRID.to_vec()
}

/// Check a program through the same pipeline training uses: compile, apply
/// [`auto_fix`], then check the fixed terrain. This is the library admission
/// gate; [`check_program`] reports on the raw compiler output.
pub fn check_program_fixed(
    p: &TerrainProgram,
    limits: &CheckLimits,
    fix: &FixConfig,
    grid: &GridConfig,
    d_samples: &[f64],
) -> ValidityReport {
    let mut violations = Vec::new();
    for &d in d_samples {
        match compile(p, d, grid) {
            Ok(t) => {
                let (fixed, _) = auto_fix(&t, fix);
                for mut v in check(&fixed, limits).violations {
                    v.message = format!("d={d:.3}: {}", v.message);
                    violations.push(v);
                }
            }
            Err(e) => violations.push(Violation {
                code: ViolationCode::ExecFail,
                message: format!("d={d:.3}: {e}"),
                measured: d,
                threshold: 0.0,
            }),
        }
    }
    ValidityReport::from_violations(violations, d_samples.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixCode {
    ClampGoal,
    FlattenSpawn,
    WidenObstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixEntry {
    pub fix_code: FixCode,
    pub detail: String,
}

/// Record of fixes applied to one terrain. Empty iff nothing needed fixing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixLog {
    pub applied: Vec<FixEntry>,
}

impl FixLog {
    pub fn is_empty(&self) -> bool {
        self.applied.is_empty()
    }
}

/// Repair a compiled terrain: clamp out-of-bounds goals, flatten the spawn
/// area, widen skinny raised features. Idempotent; never raises the maximum
/// height.
pub fn auto_fix(t: &CompiledTerrain, cfg: &FixConfig) -> (CompiledTerrain, FixLog) {
    let mut out = t.clone();
    let mut log = FixLog::default();
    let cs = t.cell_size;
    let rows = t.heights.rows;
    let cols = t.heights.cols;
    let length_m = rows as f64 * cs;
    let width_m = cols as f64 * cs;

    // 1. Goals move to the nearest in-bounds position, one cell in from the
    //    border.
    for (i, goal) in out.goals.iter_mut().enumerate() {
        let clamped = (
            goal.0.clamp(cs, length_m - cs),
            goal.1.clamp(cs, width_m - cs),
        );
        if clamped != *goal {
            log.applied.push(FixEntry {
                fix_code: FixCode::ClampGoal,
                detail: format!(
                    "goal {} ({:.2}, {:.2}) -> ({:.2}, {:.2})",
                    i + 1,
                    goal.0,
                    goal.1,
                    clamped.0,
                    clamped.1
                ),
            });
            *goal = clamped;
        }
    }

    // 2. Spawn area becomes flat ground.
    let spawn_rows = (m_to_cells(cfg.spawn_length, cs)).min(rows);
    let mut flattened = 0usize;
    for r in 0..spawn_rows {
        for c in 0..cols {
            if out.heights.get(r, c) != 0.0 {
                out.heights.set(r, c, 0.0);
                flattened += 1;
            }
        }
    }
    if flattened > 0 {
        log.applied.push(FixEntry {
            fix_code: FixCode::FlattenSpawn,
            detail: format!("{flattened} cells zeroed in the first {spawn_rows} rows"),
        });
    }

    // 3. Raised regions thinner than min_feature cells along an axis dilate
    //    to min_feature at their own heights, never into the spawn rows.
    widen_thin_features(&mut out, cfg, spawn_rows, &mut log);

    (out, log)
}

fn m_to_cells(x: f64, cs: f64) -> usize {
    ((x / cs) + 1e-9).floor().max(0.0) as usize
}

fn widen_thin_features(
    t: &mut CompiledTerrain,
    cfg: &FixConfig,
    spawn_rows: usize,
    log: &mut FixLog,
) {
    let rows = t.heights.rows;
    let cols = t.heights.cols;
    let mf = cfg.min_feature;
    if mf <= 1 || rows < mf || cols < mf {
        return;
    }

    // Connected components (4-neighborhood) of strictly raised cells, found
    // on a snapshot so dilations do not chain within one pass.
    let snapshot = t.heights.clone();
    let raised = |r: usize, c: usize| snapshot.get(r, c) > 0.0;
    let mut seen = vec![false; rows * cols];
    let mut components: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if raised(r, c) && !seen[r * cols + c] {
                let mut stack = vec![(r, c)];
                let mut cells = Vec::new();
                seen[r * cols + c] = true;
                while let Some((cr, cc)) = stack.pop() {
                    cells.push((cr, cc));
                    let mut push = |nr: usize, nc: usize| {
                        if raised(nr, nc) && !seen[nr * cols + nc] {
                            seen[nr * cols + nc] = true;
                            stack.push((nr, nc));
                        }
                    };
                    if cr > 0 {
                        push(cr - 1, cc);
                    }
                    if cr + 1 < rows {
                        push(cr + 1, cc);
                    }
                    if cc > 0 {
                        push(cr, cc - 1);
                    }
                    if cc + 1 < cols {
                        push(cr, cc + 1);
                    }
                }
                components.push(cells);
            }
        }
    }

    for cells in components {
        let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0usize, usize::MAX, 0usize);
        for &(r, c) in &cells {
            r0 = r0.min(r);
            r1 = r1.max(r);
            c0 = c0.min(c);
            c1 = c1.max(c);
        }
        let extent_r = r1 - r0 + 1;
        let extent_c = c1 - c0 + 1;
        let mut widened = false;

        if extent_c < mf {
            // Dilate laterally: every row of the component fills the target
            // column range, copying its edge heights outward.
            let need = mf - extent_c;
            let target_c0 = (c0 as i64 - ((need as i64) + 1) / 2)
                .clamp(0, (cols - mf) as i64) as usize;
            let target_c1 = target_c0 + mf - 1;
            for r in rows_of(&cells) {
                let (rc0, rc1) = row_span(&cells, r);
                let left = snapshot.get(r, rc0);
                let right = snapshot.get(r, rc1);
                for c in target_c0..rc0 {
                    t.heights.set(r, c, left);
                }
                for c in (rc1 + 1)..=target_c1 {
                    t.heights.set(r, c, right);
                }
            }
            widened = true;
        }
        if extent_r < mf {
            // Dilate forward/backward, staying out of the spawn rows.
            let need = mf - extent_r;
            let lo = spawn_rows.min(rows - mf) as i64;
            let target_r0 = (r0 as i64 - ((need as i64) + 1) / 2)
                .clamp(lo, (rows - mf) as i64) as usize;
            let target_r1 = target_r0 + mf - 1;
            for c in cols_of(&cells) {
                let (cr0, cr1) = col_span(&cells, c);
                let front = snapshot.get(cr0, c);
                let back = snapshot.get(cr1, c);
                for r in target_r0..cr0 {
                    t.heights.set(r, c, front);
                }
                for r in (cr1 + 1)..=target_r1 {
                    t.heights.set(r, c, back);
                }
            }
            widened = true;
        }
        if widened {
            log.applied.push(FixEntry {
                fix_code: FixCode::WidenObstacle,
                detail: format!(
                    "region rows {r0}..{r1} cols {c0}..{c1} dilated to at least {mf} cells"
                ),
            });
        }
    }
}

fn rows_of(cells: &[(usize, usize)]) -> Vec<usize> {
    let mut rs: Vec<usize> = cells.iter().map(|&(r, _)| r).collect();
    rs.sort_unstable();
    rs.dedup();
    rs
}

fn cols_of(cells: &[(usize, usize)]) -> Vec<usize> {
    let mut cs: Vec<usize> = cells.iter().map(|&(_, c)| c).collect();
    cs.sort_unstable();
    cs.dedup();
    cs
}

fn row_span(cells: &[(usize, usize)], row: usize) -> (usize, usize) {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &(r, c) in cells {
        if r == row {
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    (lo, hi)
}

fn col_span(cells: &[(usize, usize)], col: usize) -> (usize, usize) {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &(r, c) in cells {
        if c == col {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}
