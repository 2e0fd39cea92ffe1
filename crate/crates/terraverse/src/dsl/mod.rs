//! The terrain-program DSL: AST, parser, and canonical printer.

pub mod ast;
pub mod parser;
pub mod printer;

pub use ast::{eval_expr, BinaryOp, EvalError, Expr, GoalSpec, Segment, SegmentKind, TerrainProgram};
pub use parser::{parse_program, parse_program_with_warnings, ParseError, ParseWarning, DIFFICULTY_GRID, GOAL_COUNT};
pub use printer::{format_expr, format_program};
