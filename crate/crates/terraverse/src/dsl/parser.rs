//! Lexer and recursive-descent parser for the terrain DSL.
//!
//! Grammar (`#` starts a line comment; whitespace is free-form):
//!
//! ```text
//! program   := "terrain" STRING "{" doc? param? segment+ goals "}"
//! doc       := "doc" STRING
//! param     := "param" "d" ":" NUMBER ".." NUMBER     (informational)
//! segment   := KIND "{" field ("," field)* "}"
//! field     := IDENT ":" expr
//! goals     := "goals" ("auto" | "[" goal ("," goal)* "]")
//! goal      := "(" expr "," expr ")"
//! expr      := term (("+"|"-") term)*
//! term      := factor (("*"|"/") factor)*
//! factor    := NUMBER | "d" | "(" expr ")" | "-" factor
//!            | ("min"|"max") "(" expr "," expr ")" | "round" "(" expr ")"
//! ```
//!
//! Unary minus is accepted so that any printable expression re-parses; the
//! canonical printer only emits it for negative literals.

use std::collections::BTreeMap;

use super::ast::{BinaryOp, Expr, GoalSpec, Segment, SegmentKind, TerrainProgram};

/// Number of explicit goals a program must declare.
pub const GOAL_COUNT: usize = 8;

/// Difficulty samples used for parse-time division screening.
pub const DIFFICULTY_GRID: [f64; 10] = [
    0.0,
    1.0 / 9.0,
    2.0 / 9.0,
    3.0 / 9.0,
    4.0 / 9.0,
    5.0 / 9.0,
    6.0 / 9.0,
    7.0 / 9.0,
    8.0 / 9.0,
    1.0,
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("{line}:{col}: unknown segment kind `{name}`")]
    UnknownKind { line: u32, col: u32, name: String },
    #[error("{line}:{col}: {kind} parameters: {detail}")]
    Arity {
        line: u32,
        col: u32,
        kind: SegmentKind,
        detail: String,
    },
    #[error("{line}:{col}: first segment must be a platform, found `{found}`")]
    FirstSegmentNotPlatform { line: u32, col: u32, found: String },
    #[error("{line}:{col}: explicit goal list must have exactly {GOAL_COUNT} goals, found {found}")]
    GoalCount { line: u32, col: u32, found: usize },
}

/// Non-fatal issue found while parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseWarning {
    /// A division's denominator evaluates to zero at some sampled difficulty;
    /// evaluating the program there will fail.
    DivisionByZero { difficulty: f64 },
}

/// Parse a program, discarding warnings.
pub fn parse_program(text: &str) -> Result<TerrainProgram, ParseError> {
    parse_program_with_warnings(text).map(|(p, _)| p)
}

/// Parse a program and report non-fatal warnings (potential division by zero
/// at some difficulty on the standard ten-level grid).
pub fn parse_program_with_warnings(
    text: &str,
) -> Result<(TerrainProgram, Vec<ParseWarning>), ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let program = p.program()?;
    let warnings = division_warnings(&program);
    Ok((program, warnings))
}

fn division_warnings(program: &TerrainProgram) -> Vec<ParseWarning> {
    let mut out = Vec::new();
    let mut exprs: Vec<&Expr> = Vec::new();
    for seg in &program.segments {
        exprs.extend(TerrainProgram::segment_exprs(seg));
    }
    if let GoalSpec::Explicit(goals) = &program.goal_spec {
        for (x, y) in goals {
            exprs.push(x);
            exprs.push(y);
        }
    }
    for e in exprs {
        collect_division_warnings(e, &mut out);
    }
    out.dedup();
    out
}

fn collect_division_warnings(e: &Expr, out: &mut Vec<ParseWarning>) {
    match e {
        Expr::Literal(_) | Expr::Difficulty => {}
        Expr::Binary(op, a, b) => {
            collect_division_warnings(a, out);
            collect_division_warnings(b, out);
            if *op == BinaryOp::Div {
                for d in DIFFICULTY_GRID {
                    if b.eval(d) == Ok(0.0) {
                        out.push(ParseWarning::DivisionByZero { difficulty: d });
                    }
                }
            }
        }
        Expr::Min(a, b) | Expr::Max(a, b) => {
            collect_division_warnings(a, out);
            collect_division_warnings(b, out);
        }
        Expr::Round(a) => collect_division_warnings(a, out),
    }
}

// --- lexer ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    DotDot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::DotDot => "`..`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Spanned {
                tok: $tok,
                line: $line,
                col: $col,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' | ':' | '+' | '-' | '*' | '/' => {
                chars.next();
                col += 1;
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    _ => Tok::Slash,
                };
                push!(tok, tline, tcol);
            }
            '.' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'.') {
                    chars.next();
                    col += 1;
                    push!(Tok::DotDot, tline, tcol);
                } else {
                    return Err(ParseError::Syntax {
                        line: tline,
                        col: tcol,
                        message: "unexpected `.`".to_string(),
                    });
                }
            }
            '"' => {
                chars.next();
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => {
                            return Err(ParseError::Syntax {
                                line: tline,
                                col: tcol,
                                message: "unterminated string".to_string(),
                            });
                        }
                        Some('"') => {
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            col += 1;
                            match chars.next() {
                                Some('"') => {
                                    s.push('"');
                                    col += 1;
                                }
                                Some('\\') => {
                                    s.push('\\');
                                    col += 1;
                                }
                                other => {
                                    return Err(ParseError::Syntax {
                                        line,
                                        col,
                                        message: format!(
                                            "unsupported escape `\\{}`",
                                            other.map(String::from).unwrap_or_default()
                                        ),
                                    });
                                }
                            }
                        }
                        Some(c) => {
                            s.push(c);
                            col += 1;
                        }
                    }
                }
                push!(Tok::Str(s), tline, tcol);
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                // Fractional part; a bare `..` after digits is a range, not a
                // fraction.
                let mut look = chars.clone();
                if look.next() == Some('.') && look.peek().map_or(false, |c| c.is_ascii_digit()) {
                    s.push('.');
                    chars.next();
                    col += 1;
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                }
                if matches!(chars.peek(), Some('e') | Some('E')) {
                    let mut look = chars.clone();
                    look.next();
                    let ok = match look.peek() {
                        Some('+') | Some('-') => {
                            look.next();
                            look.peek().map_or(false, |c| c.is_ascii_digit())
                        }
                        Some(c) => c.is_ascii_digit(),
                        None => false,
                    };
                    if ok {
                        s.push(chars.next().unwrap());
                        col += 1;
                        if matches!(chars.peek(), Some('+') | Some('-')) {
                            s.push(chars.next().unwrap());
                            col += 1;
                        }
                        while let Some(&c) = chars.peek() {
                            if c.is_ascii_digit() {
                                s.push(c);
                                chars.next();
                                col += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                let value: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("bad number `{s}`"),
                })?;
                push!(Tok::Number(value), tline, tcol);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), tline, tcol);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    push!(Tok::Eof, line, col);
    Ok(out)
}

// --- parser ---------------------------------------------------------------

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned, ParseError> {
        if self.peek().tok == want {
            Ok(self.next())
        } else {
            Err(self.err_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().tok.describe()
            )))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Spanned, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.next()),
            other => {
                let msg = format!("expected `{kw}`, found {}", other.describe());
                Err(self.err_here(msg))
            }
        }
    }

    fn program(&mut self) -> Result<TerrainProgram, ParseError> {
        self.expect_keyword("terrain")?;
        let name = match self.next() {
            Spanned {
                tok: Tok::Str(s), ..
            } => s,
            t => {
                return Err(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    message: format!("expected terrain name string, found {}", t.tok.describe()),
                });
            }
        };
        self.expect(Tok::LBrace)?;

        let mut doc = String::new();
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "doc") {
            self.next();
            match self.next() {
                Spanned {
                    tok: Tok::Str(s), ..
                } => doc = s,
                t => {
                    return Err(ParseError::Syntax {
                        line: t.line,
                        col: t.col,
                        message: format!("expected doc string, found {}", t.tok.describe()),
                    });
                }
            }
        }
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "param") {
            // Informational difficulty range; accepted and discarded.
            self.next();
            self.expect_keyword("d")?;
            self.expect(Tok::Colon)?;
            self.number()?;
            self.expect(Tok::DotDot)?;
            self.number()?;
        }

        let mut segments = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Ident(s) if s == "goals" => break,
                Tok::Ident(_) => segments.push(self.segment(segments.is_empty())?),
                _ => {
                    return Err(self.err_here(format!(
                        "expected segment or `goals`, found {}",
                        self.peek().tok.describe()
                    )));
                }
            }
        }
        if segments.is_empty() {
            return Err(self.err_here("program must have at least one segment"));
        }

        let goal_spec = self.goals()?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Eof)?;

        Ok(TerrainProgram {
            name,
            doc,
            segments,
            goal_spec,
        })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.next() {
            Spanned {
                tok: Tok::Number(n),
                ..
            } => Ok(n),
            t => Err(ParseError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected number, found {}", t.tok.describe()),
            }),
        }
    }

    fn segment(&mut self, is_first: bool) -> Result<Segment, ParseError> {
        let head = self.next();
        let (name, line, col) = match head {
            Spanned {
                tok: Tok::Ident(s),
                line,
                col,
            } => (s, line, col),
            t => {
                return Err(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    message: format!("expected segment kind, found {}", t.tok.describe()),
                });
            }
        };
        let kind = SegmentKind::from_name(&name)
            .ok_or(ParseError::UnknownKind { line, col, name: name.clone() })?;
        if is_first && kind != SegmentKind::Platform {
            return Err(ParseError::FirstSegmentNotPlatform {
                line,
                col,
                found: name,
            });
        }

        self.expect(Tok::LBrace)?;
        let mut params: BTreeMap<String, Expr> = BTreeMap::new();
        let mut width = None;
        let mut lateral_offset = None;
        loop {
            let field = self.next();
            let (fname, fline, fcol) = match field {
                Spanned {
                    tok: Tok::Ident(s),
                    line,
                    col,
                } => (s, line, col),
                t => {
                    return Err(ParseError::Syntax {
                        line: t.line,
                        col: t.col,
                        message: format!("expected field name, found {}", t.tok.describe()),
                    });
                }
            };
            self.expect(Tok::Colon)?;
            let value = self.expr()?;
            match fname.as_str() {
                "width" => {
                    if width.replace(value).is_some() {
                        return Err(ParseError::Arity {
                            line: fline,
                            col: fcol,
                            kind,
                            detail: "duplicate field `width`".to_string(),
                        });
                    }
                }
                "lateral_offset" => {
                    if lateral_offset.replace(value).is_some() {
                        return Err(ParseError::Arity {
                            line: fline,
                            col: fcol,
                            kind,
                            detail: "duplicate field `lateral_offset`".to_string(),
                        });
                    }
                }
                other => {
                    if !kind.required_params().contains(&other) {
                        return Err(ParseError::Arity {
                            line: fline,
                            col: fcol,
                            kind,
                            detail: format!("unexpected parameter `{other}`"),
                        });
                    }
                    if params.insert(fname.clone(), value).is_some() {
                        return Err(ParseError::Arity {
                            line: fline,
                            col: fcol,
                            kind,
                            detail: format!("duplicate parameter `{fname}`"),
                        });
                    }
                }
            }
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                }
                Tok::RBrace => break,
                _ => {
                    return Err(self.err_here(format!(
                        "expected `,` or `}}`, found {}",
                        self.peek().tok.describe()
                    )));
                }
            }
        }
        self.expect(Tok::RBrace)?;

        let missing: Vec<&str> = kind
            .required_params()
            .iter()
            .copied()
            .filter(|p| !params.contains_key(*p))
            .collect();
        if !missing.is_empty() {
            return Err(ParseError::Arity {
                line,
                col,
                kind,
                detail: format!("missing {}", missing.join(", ")),
            });
        }
        if kind.width_required() && width.is_none() {
            return Err(ParseError::Arity {
                line,
                col,
                kind,
                detail: "missing width".to_string(),
            });
        }

        Ok(Segment {
            kind,
            params,
            width,
            lateral_offset,
        })
    }

    fn goals(&mut self) -> Result<GoalSpec, ParseError> {
        let kw = self.expect_keyword("goals")?;
        match &self.peek().tok {
            Tok::Ident(s) if s == "auto" => {
                self.next();
                Ok(GoalSpec::Auto)
            }
            Tok::LBracket => {
                self.next();
                let mut goals = Vec::new();
                loop {
                    self.expect(Tok::LParen)?;
                    let x = self.expr()?;
                    self.expect(Tok::Comma)?;
                    let y = self.expr()?;
                    self.expect(Tok::RParen)?;
                    goals.push((x, y));
                    match self.peek().tok {
                        Tok::Comma => {
                            self.next();
                        }
                        Tok::RBracket => break,
                        _ => {
                            return Err(self.err_here(format!(
                                "expected `,` or `]`, found {}",
                                self.peek().tok.describe()
                            )));
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                if goals.len() != GOAL_COUNT {
                    return Err(ParseError::GoalCount {
                        line: kw.line,
                        col: kw.col,
                        found: goals.len(),
                    });
                }
                Ok(GoalSpec::Explicit(goals))
            }
            other => {
                let msg = format!("expected `auto` or `[`, found {}", other.describe());
                Err(self.err_here(msg))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => break,
            };
            self.next();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Number(n) => {
                self.next();
                Ok(Expr::Literal(n))
            }
            Tok::Minus => {
                self.next();
                let inner = self.factor()?;
                Ok(match inner {
                    Expr::Literal(v) => Expr::Literal(-v),
                    other => Expr::Binary(
                        BinaryOp::Sub,
                        Box::new(Expr::Literal(0.0)),
                        Box::new(other),
                    ),
                })
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "d" => {
                    self.next();
                    Ok(Expr::Difficulty)
                }
                "min" | "max" => {
                    self.next();
                    self.expect(Tok::LParen)?;
                    let a = self.expr()?;
                    self.expect(Tok::Comma)?;
                    let b = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "min" {
                        Expr::Min(Box::new(a), Box::new(b))
                    } else {
                        Expr::Max(Box::new(a), Box::new(b))
                    })
                }
                "round" => {
                    self.next();
                    self.expect(Tok::LParen)?;
                    let a = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Round(Box::new(a)))
                }
                other => Err(self.err_here(format!(
                    "unknown name `{other}` in expression (only `d`, `min`, `max`, `round`)"
                ))),
            },
            other => Err(self.err_here(format!("expected expression, found {}", other.describe()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program_parses() {
        let p = parse_program(
            "terrain \"flat\" { platform { length: 10.0, height: 0.0 } goals auto }",
        )
        .unwrap();
        assert_eq!(p.name, "flat");
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.segments[0].kind, SegmentKind::Platform);
        assert_eq!(p.goal_spec, GoalSpec::Auto);
    }

    #[test]
    fn difficulty_expression_evaluates() {
        let p = parse_program(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.2 + 0.6*d, depth: 0.5 }\n goals auto\n}",
        )
        .unwrap();
        let len = &p.segments[1].params["length"];
        assert_eq!(len.eval(0.5).unwrap(), 0.5);
    }

    #[test]
    fn unknown_kind_reports_position() {
        let err = parse_program("terrain \"x\" { platform { length: 2, height: 0 } wall { length: 1 } goals auto }")
            .unwrap_err();
        match err {
            ParseError::UnknownKind { name, line, .. } => {
                assert_eq!(name, "wall");
                assert_eq!(line, 1);
            }
            other => panic!("expected UnknownKind, got {other:?}"),
        }
    }

    #[test]
    fn wrong_parameter_set_is_arity_error() {
        let err =
            parse_program("terrain \"x\" { platform { length: 2 } goals auto }").unwrap_err();
        assert!(matches!(err, ParseError::Arity { .. }), "{err:?}");
        let err = parse_program(
            "terrain \"x\" { platform { length: 2, height: 0, depth: 1 } goals auto }",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Arity { .. }), "{err:?}");
    }

    #[test]
    fn beam_requires_width() {
        let err = parse_program(
            "terrain \"x\" { platform { length: 2, height: 0 } beam { length: 2, height: 0.3 } goals auto }",
        )
        .unwrap_err();
        match err {
            ParseError::Arity { kind, detail, .. } => {
                assert_eq!(kind, SegmentKind::Beam);
                assert!(detail.contains("width"));
            }
            other => panic!("expected Arity, got {other:?}"),
        }
    }

    #[test]
    fn first_segment_must_be_platform() {
        let err = parse_program(
            "terrain \"x\" { gap { length: 1, depth: 0.5 } goals auto }",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::FirstSegmentNotPlatform { .. }));
    }

    #[test]
    fn explicit_goals_must_number_eight() {
        let err = parse_program(
            "terrain \"x\" { platform { length: 2, height: 0 } goals [(1, 2), (2, 2)] }",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::GoalCount { found: 2, .. }));
    }

    #[test]
    fn syntax_error_carries_line_and_column() {
        let err = parse_program("terrain \"x\" {\n  platform { length 2 }\n goals auto }")
            .unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("expected Syntax, got {other:?}"),
        }
    }

    #[test]
    fn division_by_difficulty_warns_at_zero() {
        let (_, warnings) = parse_program_with_warnings(
            "terrain \"x\" { platform { length: 2, height: 1.0/d } goals auto }",
        )
        .unwrap();
        assert_eq!(
            warnings,
            vec![ParseWarning::DivisionByZero { difficulty: 0.0 }]
        );
    }

    #[test]
    fn comments_and_param_line_are_accepted() {
        let src = "# a comment\nterrain \"c\" {\n  doc \"demo\"\n  param d: 0..1\n  platform { length: 2, height: 0 } # trailing\n  goals auto\n}";
        let p = parse_program(src).unwrap();
        assert_eq!(p.doc, "demo");
    }

    #[test]
    fn unary_minus_folds_into_literals() {
        let p = parse_program(
            "terrain \"x\" { platform { length: 2, height: -0.5 } goals auto }",
        )
        .unwrap();
        assert_eq!(p.segments[0].params["height"], Expr::Literal(-0.5));
    }
}
