//! Instantiate terrain programs into quantized height fields with goals.
//!
//! Segments are laid out consecutively along the forward (x) axis starting at
//! x = 0. Cell `k` along an axis covers meters `[k*cell_size, (k+1)*cell_size)`
//! and x-dependent heights are sampled at the cell's left edge. Compilation is
//! a pure function: identical inputs give bit-identical grids.

use serde::{Deserialize, Serialize};

use crate::dsl::{EvalError, Expr, GoalSpec, SegmentKind, TerrainProgram};

/// Depth written beside a beam strip; deeper than any traversable drop.
pub const BEAM_FALL_DEPTH: f64 = -1.0;

/// Height of agility-pole columns; above any climbable step, below the
/// validity ceiling.
pub const POLE_HEIGHT: f64 = 2.0;

/// Grid geometry for compilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Meters per grid cell.
    pub cell_size: f64,
    /// Course extent along the forward axis, meters.
    pub course_length: f64,
    /// Course extent across, meters.
    pub course_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cell_size: 0.1,
            course_length: 18.0,
            course_width: 4.0,
        }
    }
}

impl GridConfig {
    pub fn rows(&self) -> usize {
        (self.course_length / self.cell_size).round() as usize
    }

    pub fn cols(&self) -> usize {
        (self.course_width / self.cell_size).round() as usize
    }

    pub fn centerline(&self) -> f64 {
        self.course_width / 2.0
    }
}

/// Convert a coordinate in meters to a grid index (floor semantics).
///
/// A small epsilon absorbs float error so exact multiples of the cell size
/// land in the cell they name: `m_to_idx(0.3, 0.1) == 3`.
pub fn m_to_idx(x: f64, cell_size: f64) -> i64 {
    (x / cell_size + 1e-9).floor() as i64
}

/// Row-major height grid, `rows` along x (forward) by `cols` along y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Grid {
        Grid {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn cells(&self) -> &[f64] {
        &self.data
    }

    pub fn cells_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// A compiled course: height field, goals, spawn, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledTerrain {
    pub heights: Grid,
    pub cell_size: f64,
    /// Exactly eight ordered `(x, y)` goal coordinates in meters. May land
    /// out of bounds; the fixer clamps them.
    pub goals: Vec<(f64, f64)>,
    /// Agent start position in meters.
    pub spawn: (f64, f64),
    pub source_name: String,
    pub difficulty: f64,
}

impl CompiledTerrain {
    /// Grid cell containing a point, clamped into bounds.
    pub fn cell_at(&self, x: f64, y: f64) -> (usize, usize) {
        let r = m_to_idx(x, self.cell_size).clamp(0, self.heights.rows as i64 - 1);
        let c = m_to_idx(y, self.cell_size).clamp(0, self.heights.cols as i64 - 1);
        (r as usize, c as usize)
    }

    /// Whether a goal lies within the grid.
    pub fn goal_in_bounds(&self, goal: (f64, f64)) -> bool {
        let r = m_to_idx(goal.0, self.cell_size);
        let c = m_to_idx(goal.1, self.cell_size);
        goal.0 >= 0.0
            && goal.1 >= 0.0
            && r >= 0
            && c >= 0
            && (r as usize) < self.heights.rows
            && (c as usize) < self.heights.cols
    }
}

/// Summary statistics reported back to generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainStats {
    /// Highest cell, floored at zero.
    pub max_height: f64,
    /// Largest height difference between grid-adjacent cells.
    pub max_consecutive_diff: f64,
    /// Population standard deviation over all cells.
    pub height_std: f64,
    /// Largest height difference between consecutive goal cells.
    pub max_goal_step: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("segments total {total:.3} m exceeds course length {course_length} m at d = {difficulty}")]
    CourseOverflow {
        total: f64,
        course_length: f64,
        difficulty: f64,
    },
    #[error("{kind} `{param}` must round to a positive integer, got {value}")]
    BadCount {
        kind: SegmentKind,
        param: &'static str,
        value: f64,
    },
    #[error("{kind} `{param}` = {value} is not usable: {reason}")]
    BadParam {
        kind: SegmentKind,
        param: String,
        value: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Evaluated segment geometry, resolved at a fixed difficulty.
struct Placed {
    kind: SegmentKind,
    x0: f64,
    x1: f64,
    /// Lateral strip in meters, already intersected with the course.
    y0: f64,
    y1: f64,
    /// Kind-specific values (heights, counts, spacings).
    a: f64,
    b: f64,
    c: f64,
    /// Lateral strip center (for poles).
    center: f64,
}

/// Compile a program at difficulty `d` into a height field with eight goals.
pub fn compile(
    p: &TerrainProgram,
    d: f64,
    grid: &GridConfig,
) -> Result<CompiledTerrain, CompileError> {
    let rows = grid.rows();
    let cols = grid.cols();
    let cs = grid.cell_size;
    let mut heights = Grid::zeros(rows, cols);

    let eval = |e: &Expr| -> Result<f64, CompileError> {
        let v = e.eval(d)?;
        if !v.is_finite() {
            return Err(CompileError::BadParam {
                kind: SegmentKind::Platform,
                param: "<expression>".to_string(),
                value: v,
                reason: "non-finite value",
            });
        }
        Ok(v)
    };

    // Resolve every segment's geometry first so layout errors surface before
    // any cell is written.
    let mut placed: Vec<Placed> = Vec::with_capacity(p.segments.len());
    let mut cursor = 0.0_f64;
    for seg in &p.segments {
        let get = |name: &str| -> Result<f64, CompileError> {
            let e = seg.params.get(name).expect("parser enforces arity");
            eval(e)
        };
        let (len, a, b, c) = match seg.kind {
            SegmentKind::Platform | SegmentKind::Box => {
                (get("length")?, get("height")?, 0.0, 0.0)
            }
            SegmentKind::Gap => (get("length")?, -get("depth")?, 0.0, 0.0),
            SegmentKind::Ramp => (
                get("length")?,
                get("start_height")?,
                get("end_height")?,
                0.0,
            ),
            SegmentKind::Stairs => {
                let steps = get("steps")?.round();
                if steps < 1.0 || !steps.is_finite() {
                    return Err(CompileError::BadCount {
                        kind: seg.kind,
                        param: "steps",
                        value: steps,
                    });
                }
                let step_length = get("step_length")?;
                let step_height = get("step_height")?;
                (steps * step_length, steps, step_length, step_height)
            }
            SegmentKind::Beam => (get("length")?, get("height")?, 0.0, 0.0),
            SegmentKind::Poles => {
                let count = get("count")?.round();
                if count < 1.0 || !count.is_finite() {
                    return Err(CompileError::BadCount {
                        kind: seg.kind,
                        param: "count",
                        value: count,
                    });
                }
                let spacing = get("spacing")?;
                let pole_width = get("pole_width")?;
                (count * spacing, count, spacing, pole_width)
            }
        };
        if len < 0.0 {
            return Err(CompileError::BadParam {
                kind: seg.kind,
                param: "length".to_string(),
                value: len,
                reason: "negative footprint",
            });
        }

        let width = match &seg.width {
            Some(e) => eval(e)?,
            None => grid.course_width,
        };
        if width < 0.0 {
            return Err(CompileError::BadParam {
                kind: seg.kind,
                param: "width".to_string(),
                value: width,
                reason: "negative width",
            });
        }
        let offset = match &seg.lateral_offset {
            Some(e) => eval(e)?,
            None => 0.0,
        };
        let center = grid.centerline() + offset;
        let y0 = (center - width / 2.0).max(0.0);
        let y1 = (center + width / 2.0).min(grid.course_width);

        placed.push(Placed {
            kind: seg.kind,
            x0: cursor,
            x1: cursor + len,
            y0,
            y1,
            a,
            b,
            c,
            center,
        });
        cursor += len;
    }
    if cursor > grid.course_length + 1e-9 {
        return Err(CompileError::CourseOverflow {
            total: cursor,
            course_length: grid.course_length,
            difficulty: d,
        });
    }

    let clamp_r = |i: i64| i.clamp(0, rows as i64) as usize;
    let clamp_c = |i: i64| i.clamp(0, cols as i64) as usize;

    for seg in &placed {
        let r0 = clamp_r(m_to_idx(seg.x0, cs));
        let r1 = clamp_r(m_to_idx(seg.x1, cs));
        let c0 = clamp_c(m_to_idx(seg.y0, cs));
        let c1 = clamp_c(m_to_idx(seg.y1, cs));
        match seg.kind {
            SegmentKind::Platform | SegmentKind::Box => {
                for r in r0..r1 {
                    for c in c0..c1 {
                        heights.set(r, c, seg.a);
                    }
                }
            }
            SegmentKind::Gap => {
                for r in r0..r1 {
                    for c in c0..c1 {
                        heights.set(r, c, seg.a);
                    }
                }
            }
            SegmentKind::Ramp => {
                let len = seg.x1 - seg.x0;
                for r in r0..r1 {
                    let t = if len > 0.0 {
                        ((r as f64 * cs - seg.x0) / len).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let h = seg.a + (seg.b - seg.a) * t;
                    for c in c0..c1 {
                        heights.set(r, c, h);
                    }
                }
            }
            SegmentKind::Stairs => {
                let steps = seg.a as i64;
                let step_length = seg.b;
                let step_height = seg.c;
                for r in r0..r1 {
                    let along = r as f64 * cs - seg.x0;
                    let idx = if step_length > 0.0 {
                        (along / step_length + 1e-9).floor() as i64
                    } else {
                        0
                    }
                    .clamp(0, steps - 1);
                    let h = (idx + 1) as f64 * step_height;
                    for c in c0..c1 {
                        heights.set(r, c, h);
                    }
                }
            }
            SegmentKind::Beam => {
                // Fall zone across the whole course width, walkable strip on top.
                for r in r0..r1 {
                    for c in 0..cols {
                        heights.set(r, c, BEAM_FALL_DEPTH);
                    }
                    for c in c0..c1 {
                        heights.set(r, c, seg.a);
                    }
                }
            }
            SegmentKind::Poles => {
                let count = seg.a as i64;
                let spacing = seg.b;
                let pole_width = seg.c;
                let offset = seg.center - grid.centerline();
                let half = pole_width / 2.0;
                for i in 0..count {
                    let cx = seg.x0 + (i as f64 + 0.5) * spacing;
                    let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let cy = grid.centerline() + side * offset;
                    let pr0 = clamp_r(m_to_idx(cx - half, cs));
                    let pr1 = clamp_r(m_to_idx(cx + half, cs));
                    let pc0 = clamp_c(m_to_idx(cy - half, cs));
                    let pc1 = clamp_c(m_to_idx(cy + half, cs));
                    for r in pr0..pr1 {
                        for c in pc0..pc1 {
                            heights.set(r, c, POLE_HEIGHT);
                        }
                    }
                }
            }
        }
    }

    let goals = match &p.goal_spec {
        GoalSpec::Auto => auto_goals(&placed, grid),
        GoalSpec::Explicit(exprs) => {
            let mut out = Vec::with_capacity(exprs.len());
            for (xe, ye) in exprs {
                out.push((eval(xe)?, eval(ye)?));
            }
            out
        }
    };

    let spawn = (
        (placed[0].x0 + placed[0].x1) / 2.0,
        grid.centerline(),
    );

    Ok(CompiledTerrain {
        heights,
        cell_size: cs,
        goals,
        spawn,
        source_name: p.name.clone(),
        difficulty: d,
    })
}

/// Goal i targets segment ceil(i*S/8); goals sharing a segment spread evenly
/// across its footprint, so a single-segment course still gets eight spaced
/// goals.
fn auto_goals(placed: &[Placed], grid: &GridConfig) -> Vec<(f64, f64)> {
    let s = placed.len();
    let mut seg_for_goal = [0usize; 8];
    for (i, slot) in seg_for_goal.iter_mut().enumerate() {
        let goal_no = i + 1;
        // ceil(goal_no * s / 8), 1-based segment index.
        let target = (goal_no * s).div_ceil(8);
        *slot = target - 1;
    }
    let mut goals = Vec::with_capacity(8);
    let mut i = 0;
    while i < 8 {
        let seg = seg_for_goal[i];
        let mut j = i;
        while j < 8 && seg_for_goal[j] == seg {
            j += 1;
        }
        let group = j - i;
        let span = &placed[seg];
        for g in 0..group {
            let frac = (g + 1) as f64 / (group + 1) as f64;
            goals.push((span.x0 + (span.x1 - span.x0) * frac, grid.centerline()));
        }
        i = j;
    }
    goals
}

/// Exact statistics over the full grid.
pub fn terrain_stats(t: &CompiledTerrain) -> TerrainStats {
    let g = &t.heights;
    let n = (g.rows * g.cols) as f64;

    let mut max_h = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &h in g.cells() {
        max_h = max_h.max(h);
        sum += h;
    }
    let mean = sum / n;
    let mut var = 0.0;
    for &h in g.cells() {
        var += (h - mean) * (h - mean);
    }
    let std = (var / n).sqrt();

    let mut max_diff = 0.0_f64;
    for r in 0..g.rows {
        for c in 0..g.cols {
            let h = g.get(r, c);
            if c + 1 < g.cols {
                max_diff = max_diff.max((h - g.get(r, c + 1)).abs());
            }
            if r + 1 < g.rows {
                max_diff = max_diff.max((h - g.get(r + 1, c)).abs());
            }
        }
    }

    let mut max_goal_step = 0.0_f64;
    for pair in t.goals.windows(2) {
        let (r0, c0) = t.cell_at(pair[0].0, pair[0].1);
        let (r1, c1) = t.cell_at(pair[1].0, pair[1].1);
        max_goal_step = max_goal_step.max((g.get(r1, c1) - g.get(r0, c0)).abs());
    }

    TerrainStats {
        max_height: max_h.max(0.0),
        max_consecutive_diff: max_diff,
        height_std: std,
        max_goal_step,
    }
}

/// Render the height field as a 16-bit P2 PGM; the header comment records the
/// affine map from pixel values back to meters.
pub fn to_pgm(t: &CompiledTerrain) -> String {
    let g = &t.heights;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &h in g.cells() {
        min = min.min(h);
        max = max.max(h);
    }
    let scale = if max > min { (max - min) / 65535.0 } else { 0.0 };
    let mut out = String::new();
    out.push_str("P2\n");
    out.push_str(&format!(
        "# h_m = {min} + v * {scale} (v in 0..65535)\n"
    ));
    out.push_str(&format!(
        "# source={} difficulty={} cell_size={}\n",
        t.source_name, t.difficulty, t.cell_size
    ));
    out.push_str(&format!("{} {}\n65535\n", g.cols, g.rows));
    for r in 0..g.rows {
        let row: Vec<String> = (0..g.cols)
            .map(|c| {
                let v = if scale > 0.0 {
                    ((g.get(r, c) - min) / scale).round() as u32
                } else {
                    0
                };
                v.min(65535).to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Row-major CSV of heights in meters, four decimal places.
pub fn to_csv(t: &CompiledTerrain) -> String {
    let g = &t.heights;
    let mut out = String::new();
    for r in 0..g.rows {
        let row: Vec<String> = (0..g.cols).map(|c| format!("{:.4}", g.get(r, c))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Goals as CSV: `idx,x_m,y_m`, eight rows.
pub fn goals_to_csv(t: &CompiledTerrain) -> String {
    let mut out = String::from("idx,x_m,y_m\n");
    for (i, (x, y)) in t.goals.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, x, y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    fn grid() -> GridConfig {
        GridConfig::default()
    }

    #[test]
    fn m_to_idx_examples() {
        assert_eq!(m_to_idx(1.5, 0.1), 15);
        assert_eq!(m_to_idx(0.0, 0.1), 0);
        assert_eq!(m_to_idx(1.57, 0.1), 15);
        assert_eq!(m_to_idx(0.3, 0.1), 3);
    }

    #[test]
    fn flat_course_is_all_zero_with_spaced_goals() {
        let p = parse_program(
            "terrain \"flat\" { platform { length: 18.0, height: 0.0 } goals auto }",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        assert!(t.heights.cells().iter().all(|&h| h == 0.0));
        assert_eq!(t.goals.len(), 8);
        for pair in t.goals.windows(2) {
            assert!(pair[1].0 > pair[0].0, "goals not increasing in x: {:?}", t.goals);
            assert_eq!(pair[0].1, 2.0);
        }
    }

    #[test]
    fn gap_writes_negative_depth_over_exact_cells() {
        let p = parse_program(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.5, depth: 0.8 }\n platform { length: 15.5, height: 0 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 1.0, &grid()).unwrap();
        for r in 0..t.heights.rows {
            for c in 0..t.heights.cols {
                let expected = if (20..=24).contains(&r) { -0.8 } else { 0.0 };
                assert_eq!(t.heights.get(r, c), expected, "cell ({r},{c})");
            }
        }
    }

    #[test]
    fn ramp_interpolates_from_cell_left_edge() {
        let p = parse_program(
            "terrain \"r\" {\n platform { length: 2, height: 0 }\n ramp { length: 4, start_height: 0, end_height: 1.0 }\n platform { length: 12, height: 1.0 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        for r in 20..60 {
            let expected = (r as f64 * 0.1 - 2.0) / 4.0;
            assert!(
                (t.heights.get(r, 20) - expected).abs() < 1e-12,
                "row {r}: {} vs {expected}",
                t.heights.get(r, 20)
            );
        }
    }

    #[test]
    fn stairs_step_function() {
        let p = parse_program(
            "terrain \"s\" {\n platform { length: 2, height: 0 }\n stairs { steps: 4, step_length: 0.3, step_height: 0.15 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        // Steps cover [2.0, 3.2); first step [2.0, 2.3) at 0.15.
        assert_eq!(t.heights.get(20, 20), 0.15);
        assert_eq!(t.heights.get(23, 20), 0.30);
        assert_eq!(t.heights.get(31, 20), 0.60);
        assert_eq!(t.heights.get(32, 20), 0.0);
    }

    #[test]
    fn beam_strip_with_fall_zone() {
        let p = parse_program(
            "terrain \"b\" {\n platform { length: 2, height: 0 }\n beam { length: 2, height: 0.5, width: 0.4 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        // Strip spans y in [1.8, 2.2) -> cols 18..21.
        assert_eq!(t.heights.get(25, 20), 0.5);
        assert_eq!(t.heights.get(25, 18), 0.5);
        assert_eq!(t.heights.get(25, 17), BEAM_FALL_DEPTH);
        assert_eq!(t.heights.get(25, 35), BEAM_FALL_DEPTH);
    }

    #[test]
    fn poles_alternate_sides_and_leave_centerline_clear() {
        let p = parse_program(
            "terrain \"p\" {\n platform { length: 2, height: 0 }\n poles { count: 4, spacing: 0.6, pole_width: 0.2, lateral_offset: 0.5 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        // First pole center x = 2.3, y = 2.5; second at x = 2.9, y = 1.5.
        assert_eq!(t.heights.get(23, 24), POLE_HEIGHT);
        assert_eq!(t.heights.get(29, 15), POLE_HEIGHT);
        // Centerline stays ground.
        for r in 20..44 {
            assert_eq!(t.heights.get(r, 20), 0.0, "row {r}");
        }
    }

    #[test]
    fn overflow_is_an_error() {
        let p = parse_program(
            "terrain \"o\" { platform { length: 19.0, height: 0 } goals auto }",
        )
        .unwrap();
        assert!(matches!(
            compile(&p, 0.0, &grid()),
            Err(CompileError::CourseOverflow { .. })
        ));
    }

    #[test]
    fn nonpositive_counts_are_errors() {
        let p = parse_program(
            "terrain \"c\" {\n platform { length: 2, height: 0 }\n stairs { steps: 0.2, step_length: 0.3, step_height: 0.1 }\n goals auto\n}",
        )
        .unwrap();
        assert!(matches!(
            compile(&p, 0.0, &grid()),
            Err(CompileError::BadCount { .. })
        ));
    }

    #[test]
    fn explicit_goals_evaluate_at_difficulty() {
        let p = parse_program(
            "terrain \"e\" {\n platform { length: 18, height: 0 }\n goals [(1 + d, 2), (3, 2), (5, 2), (7, 2), (9, 2), (11, 2), (13, 2), (15, 2)]\n}",
        )
        .unwrap();
        let t = compile(&p, 0.5, &grid()).unwrap();
        assert_eq!(t.goals[0], (1.5, 2.0));
        assert_eq!(t.difficulty, 0.5);
    }

    #[test]
    fn compile_is_deterministic() {
        let p = parse_program(
            "terrain \"det\" {\n platform { length: 2, height: 0 }\n ramp { length: 3.7, start_height: 0, end_height: 0.9*d }\n goals auto\n}",
        )
        .unwrap();
        let a = compile(&p, 0.73, &grid()).unwrap();
        let b = compile(&p, 0.73, &grid()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stats_flat_grid_is_all_zero() {
        let p = parse_program(
            "terrain \"flat\" { platform { length: 18.0, height: 0.0 } goals auto }",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        let s = terrain_stats(&t);
        assert_eq!(
            (s.max_height, s.max_consecutive_diff, s.height_std, s.max_goal_step),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn stats_box_edge() {
        let p = parse_program(
            "terrain \"box\" {\n platform { length: 4, height: 0 }\n box { length: 2, height: 0.5 }\n platform { length: 12, height: 0 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        let s = terrain_stats(&t);
        assert_eq!(s.max_height, 0.5);
        assert_eq!(s.max_consecutive_diff, 0.5);
        assert_eq!(s.max_goal_step, 0.5);
    }

    #[test]
    fn stats_match_naive_recomputation() {
        let p = parse_program(
            "terrain \"mix\" {\n platform { length: 2, height: 0 }\n stairs { steps: 3, step_length: 0.4, step_height: 0.2 }\n gap { length: 0.4, depth: 0.5 }\n ramp { length: 3, start_height: 0, end_height: 0.7 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 1.0, &grid()).unwrap();
        let s = terrain_stats(&t);

        // Naive double-loop oracle.
        let g = &t.heights;
        let mut max_h: f64 = 0.0;
        let mut max_diff: f64 = 0.0;
        for r in 0..g.rows {
            for c in 0..g.cols {
                max_h = max_h.max(g.get(r, c));
                for (dr, dc) in [(0i64, 1i64), (1, 0)] {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < g.rows as i64 && nc < g.cols as i64 {
                        max_diff =
                            max_diff.max((g.get(r, c) - g.get(nr as usize, nc as usize)).abs());
                    }
                }
            }
        }
        let mean = g.cells().iter().sum::<f64>() / g.cells().len() as f64;
        let var =
            g.cells().iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / g.cells().len() as f64;
        assert_eq!(s.max_height, max_h);
        assert_eq!(s.max_consecutive_diff, max_diff);
        assert_eq!(s.height_std, var.sqrt());
    }

    #[test]
    fn pgm_and_csv_exports_have_expected_shape() {
        let p = parse_program(
            "terrain \"x\" {\n platform { length: 2, height: 0 }\n box { length: 2, height: 1.0 }\n goals auto\n}",
        )
        .unwrap();
        let t = compile(&p, 0.0, &grid()).unwrap();
        let pgm = to_pgm(&t);
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert!(lines.next().unwrap().starts_with("# h_m = "));
        lines.next();
        assert_eq!(lines.next(), Some("40 180"));
        assert_eq!(lines.next(), Some("65535"));
        assert_eq!(pgm.lines().count(), 5 + 180);

        let csv = to_csv(&t);
        assert_eq!(csv.lines().count(), 180);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 40);
        assert!(csv.contains("1.0000"));

        let goals = goals_to_csv(&t);
        assert_eq!(goals.lines().count(), 9);
        assert!(goals.starts_with("idx,x_m,y_m"));
    }
}
