//! Deterministic mock environment generator.
//!
//! Samples structurally valid programs inside conservative bounds, mutates
//! parents by scaling one difficulty coefficient, and doubles as the random
//! baseline (randomly sized ramps and boxes, no difficulty grading). Same
//! seed, same programs — the offline backbone of every reproducibility test.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::compile::GridConfig;
use crate::dsl::{format_program, Expr, GoalSpec, Segment, SegmentKind, TerrainProgram};

use super::prompt::{build_prompt, ChatMessage, FeedbackBundle, GeneratorRequest, RequestKind};
use super::{EnvironmentGenerator, GeneratorError, GeneratorOutput};

/// Go1-scale bounding box used by the random baseline: obstacles are sized
/// uniformly between half and double these dimensions.
pub const BODY_LENGTH: f64 = 0.645;
pub const BODY_HEIGHT: f64 = 0.40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    /// Difficulty-graded courses within validity bounds.
    Standard,
    /// Randomly positioned, randomly sized ramps and boxes; no grading.
    Random,
}

pub struct MockGenerator {
    pub mode: MockMode,
    pub grid: GridConfig,
}

impl MockGenerator {
    pub fn new(mode: MockMode, grid: GridConfig) -> MockGenerator {
        MockGenerator { mode, grid }
    }


}

impl EnvironmentGenerator for MockGenerator {
    fn label(&self) -> &'static str {
        match self.mode {
            MockMode::Standard => "mock",
            MockMode::Random => "mock_random",
        }
    }

    fn generate(
        &self,
        req: &GeneratorRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<GeneratorOutput, GeneratorError> {
        let program = match (self.mode, req.kind) {
            (MockMode::Random, _) => random_program(&self.grid, rng),
            (MockMode::Standard, RequestKind::Initial) => {
                mock_generate_conditioned(&self.grid, &req.prior_docs, rng)
            }
            (MockMode::Standard, RequestKind::Evolve) => {
                let parent_text = req
                    .parent_program
                    .as_deref()
                    .ok_or_else(|| GeneratorError::BadResponse("evolve without parent".into()))?;
                let parent = crate::dsl::parse_program(parent_text)
                    .map_err(|e| GeneratorError::BadResponse(format!("unparseable parent: {e}")))?;
                mock_mutate(&parent, req.feedback.as_ref(), req.no_feedback, &self.grid, rng)
            }
        };
        let text = format_program(&program);
        let mut exchange = build_prompt(req);
        exchange.push(ChatMessage::assistant(format!("```terrain\n{text}```")));
        Ok(GeneratorOutput {
            text,
            exchange,
            attempts: 1,
        })
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Linear view of a difficulty-linear expression: value at d=0 and d=1.
fn endpoints(e: &Expr) -> (f64, f64) {
    (e.eval(0.0).unwrap_or(0.0), e.eval(1.0).unwrap_or(0.0))
}

fn footprint_endpoints(seg: &Segment) -> (f64, f64) {
    let p = |name: &str| endpoints(&seg.params[name]);
    match seg.kind {
        SegmentKind::Stairs => {
            let (s0, s1) = p("steps");
            let (l0, l1) = p("step_length");
            (s0.round() * l0, s1.round() * l1)
        }
        SegmentKind::Poles => {
            let (c0, c1) = p("count");
            let (s0, s1) = p("spacing");
            (c0.round() * s0, c1.round() * s1)
        }
        _ => p("length"),
    }
}

/// Place eight explicit goals on the non-gap segments, as difficulty-linear
/// coordinate expressions that track the segments as lengths scale with d.
/// Goals never land in pits, so jumping over a gap stays the only way past
/// it.
fn explicit_goals_for(segments: &[Segment], centerline: f64) -> GoalSpec {
    let carriers: Vec<usize> = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind != SegmentKind::Gap)
        .map(|(i, _)| i)
        .collect();
    if carriers.is_empty() {
        return GoalSpec::Auto;
    }

    // Cumulative footprint starts at both difficulty endpoints.
    let mut starts = Vec::with_capacity(segments.len());
    let (mut x0, mut x1) = (0.0f64, 0.0f64);
    for seg in segments {
        starts.push((x0, x1));
        let (l0, l1) = footprint_endpoints(seg);
        x0 += l0;
        x1 += l1;
    }

    // Distribute the eight goals over carriers the way the automatic rule
    // distributes them over all segments.
    let m = carriers.len();
    let mut goals = Vec::with_capacity(8);
    let mut i = 0;
    while i < 8 {
        let carrier_idx = ((i + 1) * m).div_ceil(8) - 1;
        let mut group_end = i;
        while group_end < 8 && ((group_end + 1) * m).div_ceil(8) - 1 == carrier_idx {
            group_end += 1;
        }
        let group = group_end - i;
        let seg_idx = carriers[carrier_idx];
        let (s0, s1) = starts[seg_idx];
        let (l0, l1) = footprint_endpoints(&segments[seg_idx]);
        for g in 0..group {
            let frac = (g + 1) as f64 / (group + 1) as f64;
            let g0 = round3(s0 + frac * l0);
            let g1 = round3(s1 + frac * l1);
            goals.push((Expr::linear(g0, round3(g1 - g0)), Expr::lit(centerline)));
        }
        i = group_end;
    }
    GoalSpec::Explicit(goals)
}

fn lin(rng: &mut impl Rng, base: (f64, f64), slope: (f64, f64)) -> Expr {
    Expr::linear(
        round3(rng.gen_range(base.0..base.1)),
        round3(rng.gen_range(slope.0..slope.1)),
    )
}

fn constant(rng: &mut impl Rng, range: (f64, f64)) -> Expr {
    Expr::lit(round3(rng.gen_range(range.0..range.1)))
}

fn segment(kind: SegmentKind, params: Vec<(&str, Expr)>) -> Segment {
    Segment {
        kind,
        params: params
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>(),
        width: None,
        lateral_offset: None,
    }
}

/// Maximum footprint length over d in [0, 1]; segment lengths here are
/// monotone in d, so the endpoints bound it.
fn max_length(seg: &Segment) -> f64 {
    let eval = |name: &str, d: f64| seg.params[name].eval(d).unwrap_or(f64::INFINITY);
    let at = |d: f64| match seg.kind {
        SegmentKind::Stairs => eval("steps", d).round() * eval("step_length", d),
        SegmentKind::Poles => eval("count", d).round() * eval("spacing", d),
        _ => eval("length", d),
    };
    at(0.0).max(at(1.0))
}

const OBSTACLE_KINDS: [SegmentKind; 6] = [
    SegmentKind::Gap,
    SegmentKind::Box,
    SegmentKind::Ramp,
    SegmentKind::Stairs,
    SegmentKind::Beam,
    SegmentKind::Poles,
];

fn sample_obstacle(kind: SegmentKind, rng: &mut impl Rng) -> Segment {
    match kind {
        SegmentKind::Gap => segment(
            SegmentKind::Gap,
            vec![
                ("length", lin(rng, (0.12, 0.25), (0.05, 0.15))),
                ("depth", lin(rng, (0.30, 0.45), (0.05, 0.20))),
            ],
        ),
        SegmentKind::Box => segment(
            SegmentKind::Box,
            vec![
                ("length", constant(rng, (0.8, 1.5))),
                ("height", lin(rng, (0.08, 0.18), (0.05, 0.15))),
            ],
        ),
        SegmentKind::Ramp => segment(
            SegmentKind::Ramp,
            vec![
                ("length", constant(rng, (1.5, 2.5))),
                ("start_height", Expr::lit(0.0)),
                ("end_height", lin(rng, (0.10, 0.20), (0.05, 0.20))),
            ],
        ),
        SegmentKind::Stairs => segment(
            SegmentKind::Stairs,
            vec![
                ("steps", Expr::lit(rng.gen_range(3..=5) as f64)),
                ("step_length", constant(rng, (0.25, 0.40))),
                ("step_height", lin(rng, (0.04, 0.08), (0.02, 0.06))),
            ],
        ),
        SegmentKind::Beam => {
            let mut seg = segment(
                SegmentKind::Beam,
                vec![
                    ("length", constant(rng, (1.0, 2.0))),
                    ("height", lin(rng, (0.10, 0.20), (0.0, 0.10))),
                ],
            );
            seg.width = Some(Expr::sub(
                Expr::lit(0.6),
                Expr::mul(Expr::lit(round3(rng.gen_range(0.02..0.12))), Expr::d()),
            ));
            seg
        }
        SegmentKind::Poles => {
            let mut seg = segment(
                SegmentKind::Poles,
                vec![
                    ("count", Expr::lit(rng.gen_range(3..=5) as f64)),
                    ("spacing", constant(rng, (0.5, 0.8))),
                    ("pole_width", constant(rng, (0.20, 0.30))),
                ],
            );
            seg.lateral_offset = Some(constant(rng, (0.45, 0.80)));
            seg
        }
        SegmentKind::Platform => unreachable!("platforms are sampled separately"),
    }
}

fn spawn_platform(rng: &mut impl Rng) -> Segment {
    segment(
        SegmentKind::Platform,
        vec![
            ("length", constant(rng, (1.8, 2.6))),
            ("height", Expr::lit(0.0)),
        ],
    )
}

fn spacer_platform(rng: &mut impl Rng) -> Segment {
    segment(
        SegmentKind::Platform,
        vec![
            ("length", constant(rng, (0.8, 1.6))),
            ("height", Expr::lit(0.0)),
        ],
    )
}

fn doc_for(segments: &[Segment], prefix: &str) -> String {
    let kinds: Vec<&str> = segments
        .iter()
        .filter(|s| s.kind != SegmentKind::Platform)
        .map(|s| s.kind.name())
        .collect();
    format!("{prefix} course with {}", kinds.join(", "))
}

fn name_suffix(rng: &mut impl Rng) -> String {
    format!("{:04x}", rng.gen::<u32>() & 0xffff)
}

/// Sample one difficulty-graded program: a spawn platform, then obstacles
/// separated by platform spacers, three to six segments total, everything
/// inside validity bounds.
pub fn mock_generate(grid: &GridConfig, rng: &mut impl Rng) -> TerrainProgram {
    mock_generate_conditioned(grid, &[], rng)
}

/// Like [`mock_generate`] but biased toward segment kinds under-represented
/// in the given docstrings (the sequential diversity mode).
pub fn mock_generate_conditioned(
    grid: &GridConfig,
    prior_docs: &[String],
    rng: &mut impl Rng,
) -> TerrainProgram {
    let budget = grid.course_length - 1.2;
    let n_segments = rng.gen_range(3..=6usize);
    let mut segments = vec![spawn_platform(rng)];
    let mut used: f64 = max_length(&segments[0]);

    // Kind weights fall with how often the kind already appears in prior
    // docs, so sequential generation spreads over the vocabulary.
    let weights: Vec<f64> = OBSTACLE_KINDS
        .iter()
        .map(|k| {
            let count = prior_docs
                .iter()
                .map(|d| d.matches(k.name()).count())
                .sum::<usize>();
            1.0 / (1.0 + count as f64)
        })
        .collect();

    let mut want_obstacle = true;
    while segments.len() < n_segments {
        let seg = if want_obstacle {
            let kind = weighted_kind(&weights, rng);
            sample_obstacle(kind, rng)
        } else {
            spacer_platform(rng)
        };
        let len = max_length(&seg);
        if used + len > budget {
            break;
        }
        used += len;
        segments.push(seg);
        want_obstacle = !want_obstacle;
    }

    let doc = doc_for(&segments, "graded");
    let goal_spec = explicit_goals_for(&segments, grid.centerline());
    TerrainProgram {
        name: format!("mock_{}", name_suffix(rng)),
        doc,
        segments,
        goal_spec,
    }
}

fn weighted_kind(weights: &[f64], rng: &mut impl Rng) -> SegmentKind {
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (k, &w) in OBSTACLE_KINDS.iter().zip(weights) {
        if draw < w {
            return *k;
        }
        draw -= w;
    }
    OBSTACLE_KINDS[OBSTACLE_KINDS.len() - 1]
}

/// The random baseline: randomly positioned ramps and boxes sized uniformly
/// between half and double the robot bounding box, no difficulty grading.
pub fn random_program(grid: &GridConfig, rng: &mut impl Rng) -> TerrainProgram {
    let budget = grid.course_length - 1.2;
    let mut segments = vec![segment(
        SegmentKind::Platform,
        vec![
            ("length", constant(rng, (1.8, 2.2))),
            ("height", Expr::lit(0.0)),
        ],
    )];
    let mut used = max_length(&segments[0]);
    let n_obstacles = rng.gen_range(3..=6usize);
    for _ in 0..n_obstacles {
        let spacer = spacer_random(rng);
        let obstacle = if rng.gen_bool(0.5) {
            segment(
                SegmentKind::Box,
                vec![
                    ("length", constant(rng, (0.5 * BODY_LENGTH, 2.0 * BODY_LENGTH))),
                    ("height", constant(rng, (0.5 * BODY_HEIGHT, 2.0 * BODY_HEIGHT))),
                ],
            )
        } else {
            segment(
                SegmentKind::Ramp,
                vec![
                    ("length", constant(rng, (0.5 * BODY_LENGTH, 2.0 * BODY_LENGTH))),
                    ("start_height", Expr::lit(0.0)),
                    ("end_height", constant(rng, (0.5 * BODY_HEIGHT, 2.0 * BODY_HEIGHT))),
                ],
            )
        };
        let len = max_length(&spacer) + max_length(&obstacle);
        if used + len > budget {
            break;
        }
        used += len;
        segments.push(spacer);
        segments.push(obstacle);
    }
    let doc = doc_for(&segments, "randomly sized");
    TerrainProgram {
        name: format!("random_{}", name_suffix(rng)),
        doc,
        segments,
        goal_spec: GoalSpec::Auto,
    }
}

fn spacer_random(rng: &mut impl Rng) -> Segment {
    segment(
        SegmentKind::Platform,
        vec![
            ("length", constant(rng, (0.5, 2.0))),
            ("height", Expr::lit(0.0)),
        ],
    )
}

// --- mutation --------------------------------------------------------------

/// Whether increasing this parameter makes the course harder (+1), easier
/// (-1), or neither (0).
fn harder_direction(kind: SegmentKind, param: &str) -> i8 {
    match (kind, param) {
        (SegmentKind::Gap, "length") | (SegmentKind::Gap, "depth") => 1,
        (SegmentKind::Box, "height") => 1,
        (SegmentKind::Box, "length") => 0,
        (SegmentKind::Ramp, "end_height") | (SegmentKind::Ramp, "start_height") => 1,
        (SegmentKind::Ramp, "length") => -1,
        (SegmentKind::Stairs, "steps") | (SegmentKind::Stairs, "step_height") => 1,
        (SegmentKind::Stairs, "step_length") => -1,
        (SegmentKind::Beam, "length") | (SegmentKind::Beam, "height") => 1,
        (SegmentKind::Poles, "count") => 1,
        (SegmentKind::Poles, "spacing") | (SegmentKind::Poles, "pole_width") => -1,
        (SegmentKind::Platform, "length") => -1,
        (_, "width") => -1,
        (_, "lateral_offset") => 1,
        _ => 0,
    }
}

/// Safety box for a parameter's value at any difficulty.
fn safe_range(kind: SegmentKind, param: &str) -> (f64, f64) {
    match (kind, param) {
        (SegmentKind::Gap, "length") => (0.10, 1.25),
        (SegmentKind::Gap, "depth") => (0.10, 0.75),
        (SegmentKind::Box, "length") => (0.30, 3.0),
        (SegmentKind::Box, "height") => (0.05, 0.75),
        (SegmentKind::Ramp, "length") => (0.50, 3.5),
        (SegmentKind::Ramp, _) => (0.0, 0.75),
        (SegmentKind::Stairs, "steps") => (2.0, 8.0),
        (SegmentKind::Stairs, "step_length") => (0.15, 0.50),
        (SegmentKind::Stairs, "step_height") => (0.02, 0.17),
        (SegmentKind::Beam, "length") => (0.50, 3.0),
        (SegmentKind::Beam, "height") => (0.05, 0.70),
        (SegmentKind::Poles, "count") => (2.0, 8.0),
        (SegmentKind::Poles, "spacing") => (0.35, 1.2),
        (SegmentKind::Poles, "pole_width") => (0.10, 0.45),
        (SegmentKind::Platform, "length") => (0.50, 4.0),
        (_, "width") => (0.15, 4.0),
        (_, "lateral_offset") => (-1.2, 1.2),
        _ => (0.0, 4.0),
    }
}

fn is_integer_param(param: &str) -> bool {
    param == "steps" || param == "count"
}

fn mutable_params(p: &TerrainProgram) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, seg) in p.segments.iter().enumerate() {
        for param in seg.kind.required_params() {
            // Platform heights stay at ground level.
            if seg.kind == SegmentKind::Platform && *param == "height" {
                continue;
            }
            out.push((i, param.to_string()));
        }
        if seg.width.is_some() {
            out.push((i, "width".to_string()));
        }
        if seg.lateral_offset.is_some() {
            out.push((i, "lateral_offset".to_string()));
        }
    }
    out
}

fn param_expr(seg: &Segment, param: &str) -> Expr {
    match param {
        "width" => seg.width.clone().expect("width present"),
        "lateral_offset" => seg.lateral_offset.clone().expect("offset present"),
        other => seg.params[other].clone(),
    }
}

fn set_param_expr(seg: &mut Segment, param: &str, e: Expr) {
    match param {
        "width" => seg.width = Some(e),
        "lateral_offset" => seg.lateral_offset = Some(e),
        other => {
            seg.params.insert(other.to_string(), e);
        }
    }
}

/// The dimension a "make it harder" instruction would reach for first.
fn primary_param(kind: SegmentKind) -> Option<&'static str> {
    match kind {
        SegmentKind::Gap => Some("length"),
        SegmentKind::Box => Some("height"),
        SegmentKind::Ramp => Some("end_height"),
        SegmentKind::Stairs => Some("step_height"),
        SegmentKind::Beam => Some("width"),
        SegmentKind::Poles => Some("spacing"),
        SegmentKind::Platform => None,
    }
}

/// Scale one coefficient of one parameter by twenty percent, in the wanted
/// direction, then clamp into the parameter's safety box and rewrite the
/// parameter in difficulty-linear form.
///
/// A directed mutation (clear feedback) targets a random obstacle's primary
/// difficulty parameter; an undirected one explores any parameter.
fn mutate_coefficient(
    p: &mut TerrainProgram,
    harder: bool,
    directed: bool,
    rng: &mut impl Rng,
) -> bool {
    // Undirected variation still leans toward the dimensions that matter:
    // a coin decides between a primary parameter and free exploration.
    let use_primary = directed || rng.gen_bool(0.5);
    let candidates: Vec<(usize, String)> = if use_primary {
        let primaries: Vec<(usize, String)> = p
            .segments
            .iter()
            .enumerate()
            .filter_map(|(i, s)| primary_param(s.kind).map(|q| (i, q.to_string())))
            .collect();
        if primaries.is_empty() {
            mutable_params(p)
        } else {
            primaries
        }
    } else {
        mutable_params(p)
    };
    if candidates.is_empty() {
        return false;
    }
    let (seg_idx, param) = candidates[rng.gen_range(0..candidates.len())].clone();
    let kind = p.segments[seg_idx].kind;
    let expr = param_expr(&p.segments[seg_idx], &param);
    let (Ok(v0), Ok(v1)) = (expr.eval(0.0), expr.eval(1.0)) else {
        return false;
    };
    let base = v0;
    let slope = v1 - v0;

    let mut dir = harder_direction(kind, &param) as f64;
    if dir == 0.0 {
        dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    if !harder {
        dir = -dir;
    }

    // A 20% scale of either the base or the slope coefficient, oriented so
    // the value at d moves in `dir`. Base scaling moves every difficulty, so
    // it gets the larger share.
    let scale_slope = slope.abs() > 1e-9 && rng.gen_bool(0.3);
    let (mut nb, mut ns) = (base, slope);
    if scale_slope {
        let amplify = (slope > 0.0) == (dir > 0.0);
        ns = slope * if amplify { 1.2 } else { 1.0 / 1.2 };
    } else {
        if base.abs() < 1e-9 {
            nb = 0.05 * dir;
        } else {
            let amplify = (base > 0.0) == (dir > 0.0);
            nb = base * if amplify { 1.2 } else { 1.0 / 1.2 };
        }
    }

    let (lo, hi) = safe_range(kind, &param);
    let c0 = round3(nb.clamp(lo, hi));
    let c1 = round3((nb + ns).clamp(lo, hi));
    let new_expr = if is_integer_param(&param) {
        Expr::lit(c0.round().clamp(lo, hi))
    } else {
        Expr::linear(c0, round3(c1 - c0))
    };
    set_param_expr(&mut p.segments[seg_idx], &param, new_expr);
    true
}

fn total_max_length(p: &TerrainProgram) -> f64 {
    p.segments.iter().map(max_length).sum()
}

/// Produce a variation of `parent`.
///
/// With probability 0.2 a segment is appended or removed; otherwise one
/// coefficient scales by twenty percent. Direction follows the feedback:
/// a mastered terrain (goals after training at or above the promote
/// threshold) gets harder, a failed one (below the demote threshold) gets
/// easier, anything between moves randomly. `force_harder` overrides this
/// for the no-feedback ablation.
pub fn mock_mutate(
    parent: &TerrainProgram,
    feedback: Option<&FeedbackBundle>,
    force_harder: bool,
    grid: &GridConfig,
    rng: &mut impl Rng,
) -> TerrainProgram {
    let budget = grid.course_length - 1.2;
    let mut child = parent.clone();

    let (harder, directed) = if force_harder {
        (true, true)
    } else {
        match feedback {
            Some(f) if f.train_after.goals >= 8.0 * 0.8 => (true, true),
            Some(f) if f.train_after.goals < 8.0 * 0.4 => (false, true),
            _ => (rng.gen_bool(0.5), false),
        }
    };

    let structural = rng.gen_bool(0.2);
    let mut changed = false;
    if structural {
        // Directed variations add when hardening and drop when easing;
        // undirected ones flip a coin.
        let append = if directed { harder } else { rng.gen_bool(0.5) };
        if append {
            let kind = OBSTACLE_KINDS[rng.gen_range(0..OBSTACLE_KINDS.len())];
            let seg = sample_obstacle(kind, rng);
            if total_max_length(&child) + max_length(&seg) <= budget {
                let pos = rng.gen_range(1..=child.segments.len());
                child.segments.insert(pos, seg);
                changed = true;
            }
        }
        if !changed && child.segments.len() >= 3 {
            let pos = rng.gen_range(1..child.segments.len());
            child.segments.remove(pos);
            changed = true;
        }
    }
    if !changed {
        for _ in 0..8 {
            let mut candidate = child.clone();
            if mutate_coefficient(&mut candidate, harder, directed, rng)
                && total_max_length(&candidate) <= budget
            {
                child = candidate;
                changed = true;
                break;
            }
        }
    }
    let _ = changed;

    if child.goal_spec != GoalSpec::Auto {
        child.goal_spec = explicit_goals_for(&child.segments, grid.centerline());
    }
    let base = child
        .name
        .split("_v")
        .next()
        .unwrap_or(&child.name)
        .to_string();
    child.name = format!("{base}_v{}", name_suffix(rng));
    child.doc = doc_for(&child.segments, "evolved");
    child
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::TerrainStats;
    use crate::derive_rng;
    use crate::dsl::parse_program;
    use crate::train::PerfTriple;
    use crate::validate::{check_program, default_difficulty_samples, CheckLimits};

    fn grid() -> GridConfig {
        GridConfig::default()
    }

    #[test]
    fn same_seed_gives_identical_programs() {
        let a = mock_generate(&grid(), &mut derive_rng(7, &[]));
        let b = mock_generate(&grid(), &mut derive_rng(7, &[]));
        assert_eq!(a, b);
        assert_eq!(format_program(&a), format_program(&b));
    }

    #[test]
    fn generated_programs_parse_back() {
        let mut rng = derive_rng(1, &[]);
        for _ in 0..50 {
            let p = mock_generate(&grid(), &mut rng);
            let text = format_program(&p);
            let back = parse_program(&text).unwrap();
            assert_eq!(p, back);
        }
    }

    #[test]
    fn thousand_mock_programs_all_pass_the_check() {
        let mut rng = derive_rng(2, &[]);
        let g = grid();
        let limits = CheckLimits::default();
        let samples = default_difficulty_samples();
        for i in 0..1000 {
            let p = mock_generate(&g, &mut rng);
            let report = check_program(&p, &limits, &g, &samples);
            assert!(
                report.passed,
                "program {i} failed: {:?}\n{}",
                report.violations,
                format_program(&p)
            );
        }
    }

    #[test]
    fn random_mode_respects_bounding_box_sizes() {
        let mut rng = derive_rng(3, &[]);
        for _ in 0..200 {
            let p = random_program(&grid(), &mut rng);
            for seg in p.segments.iter().skip(1) {
                match seg.kind {
                    SegmentKind::Platform => {}
                    SegmentKind::Box | SegmentKind::Ramp => {
                        let len = seg.params["length"].eval(0.0).unwrap();
                        assert!(len >= 0.5 * BODY_LENGTH - 1e-9 && len <= 2.0 * BODY_LENGTH + 1e-9);
                        let h = match seg.kind {
                            SegmentKind::Box => seg.params["height"].eval(0.0).unwrap(),
                            _ => seg.params["end_height"].eval(0.0).unwrap(),
                        };
                        assert!(h >= 0.5 * BODY_HEIGHT - 1e-9 && h <= 2.0 * BODY_HEIGHT + 1e-9);
                    }
                    other => panic!("random mode produced {other}"),
                }
            }
        }
    }

    #[test]
    fn random_mode_is_difficulty_independent() {
        let p = random_program(&grid(), &mut derive_rng(4, &[]));
        for seg in &p.segments {
            for e in crate::dsl::TerrainProgram::segment_exprs(seg) {
                assert_eq!(e.eval(0.0).unwrap(), e.eval(1.0).unwrap());
            }
        }
    }

    fn feedback(goals_after: f64) -> FeedbackBundle {
        FeedbackBundle {
            terrain_stats: TerrainStats {
                max_height: 0.4,
                max_consecutive_diff: 0.4,
                height_std: 0.1,
                max_goal_step: 0.2,
            },
            train_before: PerfTriple {
                goals: 2.0,
                steps: 150.0,
                edge_violations: 0.0,
            },
            train_after: PerfTriple {
                goals: goals_after,
                steps: 180.0,
                edge_violations: 2.0,
            },
            library_docs: vec![],
        }
    }

    /// Value of the single gap's length at d=1, a convenient hardness probe.
    fn gap_length_at_max(p: &TerrainProgram) -> f64 {
        p.segments
            .iter()
            .find(|s| s.kind == SegmentKind::Gap)
            .map(|s| s.params["length"].eval(1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn mastered_terrain_mutates_harder() {
        let parent = parse_program(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.3 + 0.2*d, depth: 0.4 }\n goals auto\n}",
        )
        .unwrap();
        let before = gap_length_at_max(&parent);
        // Coefficient mutations on the gap move some dimension harder; draw
        // until the mutation hits the gap's length, then check direction.
        let mut rng = derive_rng(5, &[]);
        let mut saw_longer = false;
        for _ in 0..200 {
            let child = mock_mutate(&parent, Some(&feedback(8.0)), false, &grid(), &mut rng);
            // Structural mutations can add a second (fresh) gap; direction
            // only applies to coefficient tweaks of the original.
            let gaps: Vec<_> = child
                .segments
                .iter()
                .filter(|s| s.kind == SegmentKind::Gap)
                .collect();
            if gaps.len() != 1 || child.segments.len() != parent.segments.len() {
                continue;
            }
            let len = gaps[0].params["length"].eval(1.0).unwrap();
            assert!(
                len >= before - 1e-9,
                "mastered terrain must never get easier: {len} < {before}"
            );
            if len > before + 1e-9 {
                saw_longer = true;
            }
        }
        assert!(saw_longer, "no mutation ever lengthened the gap");
    }

    #[test]
    fn failed_terrain_mutates_easier() {
        let parent = parse_program(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.5 + 0.3*d, depth: 0.5 }\n goals auto\n}",
        )
        .unwrap();
        let before = gap_length_at_max(&parent);
        let mut rng = derive_rng(6, &[]);
        for _ in 0..200 {
            let child = mock_mutate(&parent, Some(&feedback(0.0)), false, &grid(), &mut rng);
            let gaps: Vec<_> = child
                .segments
                .iter()
                .filter(|s| s.kind == SegmentKind::Gap)
                .collect();
            if gaps.len() != 1 || child.segments.len() != parent.segments.len() {
                continue;
            }
            let len = gaps[0].params["length"].eval(1.0).unwrap();
            assert!(len <= before + 1e-9, "failed terrain got harder: {len}");
        }
    }

    #[test]
    fn forced_harder_ignores_feedback() {
        let parent = parse_program(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.3, depth: 0.4 }\n goals auto\n}",
        )
        .unwrap();
        let mut rng = derive_rng(7, &[]);
        for _ in 0..100 {
            let child = mock_mutate(&parent, Some(&feedback(0.0)), true, &grid(), &mut rng);
            let gaps: Vec<_> = child
                .segments
                .iter()
                .filter(|s| s.kind == SegmentKind::Gap)
                .collect();
            if gaps.len() != 1 || child.segments.len() != parent.segments.len() {
                continue;
            }
            let len = gaps[0].params["length"].eval(1.0).unwrap();
            assert!(len >= 0.3 - 1e-9);
        }
    }

    #[test]
    fn mutations_preserve_structure_invariants() {
        let mut rng = derive_rng(8, &[]);
        let mut p = mock_generate(&grid(), &mut rng);
        for _ in 0..300 {
            p = mock_mutate(&p, Some(&feedback(rng.gen_range(0.0..8.0))), false, &grid(), &mut rng);
            assert!(!p.segments.is_empty());
            assert_eq!(p.segments[0].kind, SegmentKind::Platform);
            assert!(total_max_length(&p) <= grid().course_length - 1.2 + 1e-9);
            // Text stays parseable.
            let text = format_program(&p);
            assert_eq!(parse_program(&text).unwrap(), p);
        }
    }

    #[test]
    fn mutated_names_do_not_accumulate_suffixes() {
        let mut rng = derive_rng(9, &[]);
        let mut p = mock_generate(&grid(), &mut rng);
        let base = p.name.clone();
        for _ in 0..5 {
            p = mock_mutate(&p, None, true, &grid(), &mut rng);
        }
        assert!(p.name.starts_with(&format!("{base}_v")));
        assert_eq!(p.name.matches("_v").count(), 1);
    }

    #[test]
    fn diversity_conditioning_avoids_overused_kinds() {
        let mut rng = derive_rng(10, &[]);
        // Saturate docs with gaps; conditioned samples should lean elsewhere.
        let docs: Vec<String> = (0..30).map(|_| "graded course with gap, gap".to_string()).collect();
        let mut gap_count = 0;
        let mut other_count = 0;
        for _ in 0..100 {
            let p = mock_generate_conditioned(&grid(), &docs, &mut rng);
            for seg in &p.segments {
                match seg.kind {
                    SegmentKind::Gap => gap_count += 1,
                    SegmentKind::Platform => {}
                    _ => other_count += 1,
                }
            }
        }
        assert!(
            gap_count * 10 < other_count,
            "gap-heavy conditioning ignored: {gap_count} gaps vs {other_count} others"
        );
    }
}
