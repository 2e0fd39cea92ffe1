//! Canonical text form for terrain programs.
//!
//! `parse(format(p))` is structurally equal to `p` for every valid program;
//! the printer is how programs travel into prompts, run stores, and files.

use std::fmt::Write;

use super::ast::{BinaryOp, Expr, GoalSpec, Segment, TerrainProgram};

/// Render a program in canonical form.
pub fn format_program(p: &TerrainProgram) -> String {
    let mut out = String::new();
    let _ = write!(out, "terrain \"{}\" {{\n", escape(&p.name));
    if !p.doc.is_empty() {
        let _ = write!(out, "  doc \"{}\"\n", escape(&p.doc));
    }
    for seg in &p.segments {
        let _ = write!(out, "  {}\n", format_segment(seg));
    }
    match &p.goal_spec {
        GoalSpec::Auto => out.push_str("  goals auto\n"),
        GoalSpec::Explicit(goals) => {
            let rendered: Vec<String> = goals
                .iter()
                .map(|(x, y)| format!("({}, {})", format_expr(x), format_expr(y)))
                .collect();
            let _ = write!(out, "  goals [{}]\n", rendered.join(", "));
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn format_segment(seg: &Segment) -> String {
    let mut fields: Vec<String> = seg
        .kind
        .required_params()
        .iter()
        .map(|p| format!("{p}: {}", format_expr(&seg.params[*p])))
        .collect();
    if let Some(w) = &seg.width {
        fields.push(format!("width: {}", format_expr(w)));
    }
    if let Some(o) = &seg.lateral_offset {
        fields.push(format!("lateral_offset: {}", format_expr(o)));
    }
    format!("{} {{ {} }}", seg.kind.name(), fields.join(", "))
}

/// Render an expression with minimal parentheses.
pub fn format_expr(e: &Expr) -> String {
    render(e, 0)
}

// Precedence levels: 0 additive, 1 multiplicative, 2 atoms.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 0,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => 1,
        _ => 2,
    }
}

fn render(e: &Expr, min_prec: u8) -> String {
    let prec = precedence(e);
    let body = match e {
        Expr::Literal(v) => format_number(*v),
        Expr::Difficulty => "d".to_string(),
        Expr::Binary(op, a, b) => {
            // Left-associative grammar: the right operand of `-` and `/`
            // needs parens when it is at the same precedence level.
            let rhs_min = match op {
                BinaryOp::Sub => 1,
                BinaryOp::Div => 2,
                BinaryOp::Add => 0,
                BinaryOp::Mul => 1,
            };
            format!(
                "{} {} {}",
                render(a, prec),
                op.symbol(),
                render(b, rhs_min.max(prec))
            )
        }
        Expr::Min(a, b) => format!("min({}, {})", render(a, 0), render(b, 0)),
        Expr::Max(a, b) => format!("max({}, {})", render(a, 0), render(b, 0)),
        Expr::Round(a) => format!("round({})", render(a, 0)),
    };
    if prec < min_prec {
        format!("({body})")
    } else {
        body
    }
}

fn format_number(v: f64) -> String {
    // f64 Display emits the shortest string that re-parses to the same bits.
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::super::ast::{Expr, GoalSpec};
    use super::super::parser::parse_program;
    use super::*;

    fn roundtrip(src: &str) {
        let p = parse_program(src).unwrap();
        let text = format_program(&p);
        let p2 = parse_program(&text).unwrap();
        assert_eq!(p, p2, "round trip changed structure for:\n{text}");
    }

    #[test]
    fn minimal_roundtrip() {
        roundtrip("terrain \"flat\" { platform { length: 10.0, height: 0.0 } goals auto }");
    }

    #[test]
    fn empty_doc_is_omitted() {
        let p = parse_program("terrain \"x\" { platform { length: 1, height: 0 } goals auto }")
            .unwrap();
        assert!(!format_program(&p).contains("doc"));
    }

    #[test]
    fn nested_arithmetic_keeps_structure() {
        roundtrip(
            "terrain \"e\" {\n platform { length: (0.2 + 0.6) * d + min(1, 2 - d / 4), height: round(2.5 * d) }\n goals auto\n}",
        );
    }

    #[test]
    fn subtraction_right_operand_parenthesized() {
        let e = Expr::sub(Expr::lit(1.0), Expr::sub(Expr::lit(2.0), Expr::d()));
        assert_eq!(format_expr(&e), "1 - (2 - d)");
        let left = Expr::sub(Expr::sub(Expr::lit(1.0), Expr::lit(2.0)), Expr::d());
        assert_eq!(format_expr(&left), "1 - 2 - d");
    }

    #[test]
    fn explicit_goals_roundtrip() {
        roundtrip(
            "terrain \"g\" {\n platform { length: 18, height: 0 }\n goals [(2, 2), (4, 2), (6, 2), (8, 2), (10, 2), (12, 2), (14, 2), (16, 2)]\n}",
        );
    }

    #[test]
    fn negative_literals_print_and_reparse() {
        let mut p =
            parse_program("terrain \"n\" { platform { length: 1, height: 0 } goals auto }")
                .unwrap();
        p.segments[0]
            .params
            .insert("height".to_string(), Expr::Literal(-0.25));
        let text = format_program(&p);
        let p2 = parse_program(&text).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn quotes_in_docs_survive() {
        let mut p =
            parse_program("terrain \"q\" { platform { length: 1, height: 0 } goals auto }")
                .unwrap();
        p.doc = "a \"quoted\" course \\ with backslash".to_string();
        let p2 = parse_program(&format_program(&p)).unwrap();
        assert_eq!(p, p2);
        assert_eq!(p2.goal_spec, GoalSpec::Auto);
    }
}
