//! Terrain and plot rendering: PGM with goal markers, top-down SVG, ASCII,
//! and a minimal SVG line chart for progress curves.

use std::fmt::Write as _;

use crate::compile::CompiledTerrain;

/// Ten-level ASCII ramp from low to high.
const RAMP: [char; 10] = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];

/// Render the course top-down as characters, forward axis horizontal.
/// Goals print as their digit, goal 1 included; the spawn prints as `S`.
pub fn to_ascii(t: &CompiledTerrain) -> String {
    let g = &t.heights;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &h in g.cells() {
        min = min.min(h);
        max = max.max(h);
    }
    let span = if max > min { max - min } else { 1.0 };

    // chars[col][row]: columns become lines so x runs left to right.
    let mut lines = vec![vec![' '; g.rows]; g.cols];
    for r in 0..g.rows {
        for c in 0..g.cols {
            let t = ((g.get(r, c) - min) / span * 9.0).round() as usize;
            lines[c][r] = RAMP[t.min(9)];
        }
    }
    let (sr, sc) = t.cell_at(t.spawn.0, t.spawn.1);
    lines[sc][sr] = 'S';
    for (i, &(x, y)) in t.goals.iter().enumerate() {
        let (r, c) = t.cell_at(x, y);
        lines[c][r] = char::from_digit((i + 1) as u32, 10).unwrap_or('?');
    }

    let mut out = String::with_capacity(g.cols * (g.rows + 1));
    for line in lines {
        out.extend(line);
        out.push('\n');
    }
    out
}

/// PGM height map with goal cells outlined in black and the first goal
/// (the current goal convention) filled white.
pub fn to_pgm_with_goals(t: &CompiledTerrain) -> String {
    let base = crate::compile::to_pgm(t);
    let mut lines: Vec<String> = base.lines().map(|l| l.to_string()).collect();
    // Header is 5 lines: P2, two comments, dims, maxval.
    let header = 5;
    let cols = t.heights.cols;
    let mut set_px = |r: usize, c: usize, v: u32| {
        if r < t.heights.rows && c < cols {
            let row: Vec<String> = lines[header + r]
                .split_whitespace()
                .map(|s| s.to_string())
                .collect();
            let mut row = row;
            row[c] = v.to_string();
            lines[header + r] = row.join(" ");
        }
    };
    for (i, &(x, y)) in t.goals.iter().enumerate() {
        let (r, c) = t.cell_at(x, y);
        // One-cell outline ring.
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 {
                    set_px(nr as usize, nc as usize, 0);
                }
            }
        }
        set_px(r, c, if i == 0 { 65535 } else { 0 });
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Top-down SVG, one rect per cell colored by height, goals as red circles
/// with the first goal in blue.
pub fn to_svg(t: &CompiledTerrain, px_per_cell: f64) -> String {
    let g = &t.heights;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &h in g.cells() {
        min = min.min(h);
        max = max.max(h);
    }
    let span = if max > min { max - min } else { 1.0 };
    let w = g.rows as f64 * px_per_cell;
    let h = g.cols as f64 * px_per_cell;

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    for r in 0..g.rows {
        for c in 0..g.cols {
            let v = ((g.get(r, c) - min) / span * 255.0).round() as u8;
            let _ = write!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{px_per_cell}\" height=\"{px_per_cell}\" fill=\"rgb({v},{v},{v})\"/>\n",
                r as f64 * px_per_cell,
                c as f64 * px_per_cell,
            );
        }
    }
    for (i, &(x, y)) in t.goals.iter().enumerate() {
        let (r, c) = t.cell_at(x, y);
        let color = if i == 0 { "#3060ff" } else { "#e03030" };
        let _ = write!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"{:.1}\" fill=\"{color}\"/>\n",
            (r as f64 + 0.5) * px_per_cell,
            (c as f64 + 0.5) * px_per_cell,
            px_per_cell * 1.2,
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A minimal line chart: points as (x, y), y clipped to [0, y_max].
pub fn line_chart_svg(title: &str, points: &[(f64, f64)], y_max: f64) -> String {
    let w = 480.0;
    let h = 300.0;
    let margin = 40.0;
    let plot_w = w - 2.0 * margin;
    let plot_h = h - 2.0 * margin;
    let x_min = points.first().map(|p| p.0).unwrap_or(0.0);
    let x_max = points.last().map(|p| p.0).unwrap_or(1.0).max(x_min + 1e-9);

    let px = |x: f64| margin + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| h - margin - (y.clamp(0.0, y_max) / y_max) * plot_h;

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"20\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    );
    let _ = write!(
        out,
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#888\"/>\n"
    );
    for tick in 0..=4 {
        let yv = y_max * tick as f64 / 4.0;
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{yv:.1}</text>\n",
            margin - 4.0,
            py(yv) + 3.0
        );
    }
    if !points.is_empty() {
        let path: Vec<String> = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                format!("{}{:.1},{:.1}", if i == 0 { "M" } else { "L" }, px(x), py(y))
            })
            .collect();
        let _ = write!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#3060ff\" stroke-width=\"2\"/>\n",
            path.join(" ")
        );
        for &(x, y) in points {
            let _ = write!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#3060ff\"/>\n",
                px(x),
                py(y)
            );
            let _ = write!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">{x:.0}</text>\n",
                px(x),
                h - margin + 14.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, GridConfig};
    use crate::dsl::parse_program;

    fn compiled(src: &str, d: f64) -> CompiledTerrain {
        compile(&parse_program(src).unwrap(), d, &GridConfig::default()).unwrap()
    }

    #[test]
    fn ascii_has_forty_lines_of_180_characters() {
        let t = compiled(
            "terrain \"flat\" { platform { length: 18, height: 0 } goals auto }",
            0.0,
        );
        let text = to_ascii(&t);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 40);
        assert!(lines.iter().all(|l| l.chars().count() == 180));
        for digit in '1'..='8' {
            assert!(text.contains(digit), "goal {digit} marker missing");
        }
        assert!(text.contains('S'));
    }

    #[test]
    fn gap_renders_as_dark_band_at_the_compiled_position() {
        let t = compiled(
            "terrain \"g\" {\n platform { length: 2, height: 0 }\n gap { length: 0.5, depth: 0.8 }\n platform { length: 15.5, height: 0 }\n goals auto\n}",
            1.0,
        );
        let text = to_ascii(&t);
        let lines: Vec<&str> = text.lines().collect();
        // Row 10 (off-centerline, no goal markers): pit cells are the lowest
        // ramp character at x indices 20..=24.
        let row: Vec<char> = lines[10].chars().collect();
        assert_eq!(row[19], '@', "ground maps to the top ramp character");
        for x in 20..=24 {
            assert_eq!(row[x], ' ', "pit cell {x} should render lowest");
        }
        assert_eq!(row[25], '@');
    }

    #[test]
    fn svg_contains_cells_and_goal_markers() {
        let t = compiled(
            "terrain \"flat\" { platform { length: 18, height: 0 } goals auto }",
            0.0,
        );
        let svg = to_svg(&t, 2.0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 8);
        assert!(svg.contains("#3060ff"));
        assert!(svg.contains("#e03030"));
    }

    #[test]
    fn pgm_goal_overlay_keeps_dimensions() {
        let t = compiled(
            "terrain \"b\" {\n platform { length: 2, height: 0 }\n box { length: 2, height: 1 }\n platform { length: 6, height: 0 }\n goals auto\n}",
            0.0,
        );
        let pgm = to_pgm_with_goals(&t);
        let lines: Vec<&str> = pgm.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines.len(), 5 + 180);
        assert!(lines[5..].iter().all(|l| l.split_whitespace().count() == 40));
        // Goal 1 filled white.
        assert!(pgm.contains("65535"));
    }

    #[test]
    fn line_chart_renders_points() {
        let svg = line_chart_svg("demo", &[(1.0, 2.0), (2.0, 3.5), (3.0, 4.0)], 8.0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("demo"));
    }
}
