//! Typed representation of parsed terrain programs.
//!
//! A [`TerrainProgram`] is a named, documented sequence of [`Segment`]s plus a
//! goal placement directive. Segment parameters are arithmetic [`Expr`]s over
//! the reserved difficulty variable `d`, so one program instantiates a whole
//! family of courses as `d` sweeps `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt;

/// A complete terrain program: the unit of generation, evolution, and storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProgram {
    /// Program name, from the quoted string after the `terrain` keyword.
    pub name: String,
    /// Free-text description. Fed back to generators as library context.
    pub doc: String,
    /// Ordered course segments, laid out front to back. Never empty; the
    /// first segment is always a `platform` (the spawn area).
    pub segments: Vec<Segment>,
    /// Goal placement: automatic or exactly eight explicit coordinates.
    pub goal_spec: GoalSpec,
}

/// Goal placement directive.
#[derive(Debug, Clone, PartialEq)]
pub enum GoalSpec {
    /// Goals distributed over segment footprints along the centerline.
    Auto,
    /// Exactly eight `(x, y)` coordinate expressions in meters.
    Explicit(Vec<(Expr, Expr)>),
}

/// One course segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Required parameters for the kind, by name.
    pub params: BTreeMap<String, Expr>,
    /// Lateral footprint width in meters; defaults to the full course width.
    pub width: Option<Expr>,
    /// Offset of the footprint center from the course centerline, in meters.
    pub lateral_offset: Option<Expr>,
}

/// The fixed segment vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Platform,
    Gap,
    Ramp,
    Stairs,
    Box,
    Beam,
    Poles,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 7] = [
        SegmentKind::Platform,
        SegmentKind::Gap,
        SegmentKind::Ramp,
        SegmentKind::Stairs,
        SegmentKind::Box,
        SegmentKind::Beam,
        SegmentKind::Poles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Platform => "platform",
            SegmentKind::Gap => "gap",
            SegmentKind::Ramp => "ramp",
            SegmentKind::Stairs => "stairs",
            SegmentKind::Box => "box",
            SegmentKind::Beam => "beam",
            SegmentKind::Poles => "poles",
        }
    }

    pub fn from_name(name: &str) -> Option<SegmentKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Required parameter names, in canonical print order.
    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            SegmentKind::Platform => &["length", "height"],
            SegmentKind::Gap => &["length", "depth"],
            SegmentKind::Ramp => &["length", "start_height", "end_height"],
            SegmentKind::Stairs => &["steps", "step_length", "step_height"],
            SegmentKind::Box => &["length", "height"],
            SegmentKind::Beam => &["length", "height"],
            SegmentKind::Poles => &["count", "spacing", "pole_width"],
        }
    }

    /// Whether the `width` field must be present (beams have no default width).
    pub fn width_required(self) -> bool {
        matches!(self, SegmentKind::Beam)
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Arithmetic expression over numeric literals and the difficulty variable `d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    /// The reserved difficulty variable.
    Difficulty,
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Round(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

/// Raised when an expression divides by zero during evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("division by zero at d = {difficulty}")]
pub struct EvalError {
    pub difficulty: f64,
}

impl Expr {
    pub fn lit(v: f64) -> Expr {
        Expr::Literal(v)
    }

    pub fn d() -> Expr {
        Expr::Difficulty
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b))
    }

    /// `base + slope * d`, the workhorse difficulty-linear form.
    pub fn linear(base: f64, slope: f64) -> Expr {
        if slope == 0.0 {
            Expr::lit(base)
        } else {
            Expr::add(Expr::lit(base), Expr::mul(Expr::lit(slope), Expr::d()))
        }
    }

    /// Evaluate at difficulty `d`. Pure; identical inputs give bit-identical
    /// results.
    pub fn eval(&self, d: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Literal(v) => Ok(*v),
            Expr::Difficulty => Ok(d),
            Expr::Binary(op, a, b) => {
                let a = a.eval(d)?;
                let b = b.eval(d)?;
                match op {
                    BinaryOp::Add => Ok(a + b),
                    BinaryOp::Sub => Ok(a - b),
                    BinaryOp::Mul => Ok(a * b),
                    BinaryOp::Div => {
                        if b == 0.0 {
                            Err(EvalError { difficulty: d })
                        } else {
                            Ok(a / b)
                        }
                    }
                }
            }
            Expr::Min(a, b) => Ok(a.eval(d)?.min(b.eval(d)?)),
            Expr::Max(a, b) => Ok(a.eval(d)?.max(b.eval(d)?)),
            Expr::Round(a) => Ok(a.eval(d)?.round()),
        }
    }

    /// Visit every literal in the expression tree, mutably.
    pub fn visit_literals_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        match self {
            Expr::Literal(v) => f(v),
            Expr::Difficulty => {}
            Expr::Binary(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                a.visit_literals_mut(f);
                b.visit_literals_mut(f);
            }
            Expr::Round(a) => a.visit_literals_mut(f),
        }
    }

    /// Count literal nodes.
    pub fn literal_count(&self) -> usize {
        let mut n = 0;
        let mut probe = self.clone();
        probe.visit_literals_mut(&mut |_| n += 1);
        n
    }
}

/// Evaluate an expression at a difficulty; standalone form of [`Expr::eval`].
pub fn eval_expr(e: &Expr, d: f64) -> Result<f64, EvalError> {
    e.eval(d)
}

impl TerrainProgram {
    /// All parameter expressions of a segment, including width and offset,
    /// in a stable order.
    pub fn segment_exprs(seg: &Segment) -> Vec<&Expr> {
        let mut out: Vec<&Expr> = seg
            .kind
            .required_params()
            .iter()
            .filter_map(|p| seg.params.get(*p))
            .collect();
        if let Some(w) = &seg.width {
            out.push(w);
        }
        if let Some(o) = &seg.lateral_offset {
            out.push(o);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_eval_matches_endpoints() {
        let e = Expr::linear(0.2, 0.6);
        assert_eq!(e.eval(0.0).unwrap(), 0.2);
        assert_eq!(e.eval(1.0).unwrap(), 0.2 + 0.6);
        assert_eq!(e.eval(0.5).unwrap(), 0.2 + 0.6 * 0.5);
    }

    #[test]
    fn min_clamps() {
        let e = Expr::Min(
            Box::new(Expr::lit(3.0)),
            Box::new(Expr::mul(Expr::lit(4.0), Expr::d())),
        );
        assert_eq!(e.eval(0.9).unwrap(), 3.0);
        assert_eq!(e.eval(0.5).unwrap(), 2.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = Expr::Binary(
            BinaryOp::Div,
            Box::new(Expr::lit(1.0)),
            Box::new(Expr::d()),
        );
        assert_eq!(e.eval(0.0), Err(EvalError { difficulty: 0.0 }));
        assert!(e.eval(0.5).is_ok());
    }

    #[test]
    fn round_is_half_away_from_zero() {
        let e = Expr::Round(Box::new(Expr::lit(2.5)));
        assert_eq!(e.eval(0.0).unwrap(), 3.0);
    }
}
