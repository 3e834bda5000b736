//! Minimal deterministic SVG plotter: line plots (linear or log y) and stem
//! plots. No timestamps, no randomness, so identical data yields identical
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CappaError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YScale {
    Linear,
    Log,
}

fn fmt(v: f64) -> String {
    // fixed short representation keeps files small and deterministic
    format!("{v:.3}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        format!("{v:.4}")
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    scale: YScale,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_L + (x - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn ty(&self, y: f64) -> f64 {
        let (y, lo, hi) = match self.scale {
            YScale::Linear => (y, self.y_min, self.y_max),
            YScale::Log => (y.log10(), self.y_min, self.y_max),
        };
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_B - (y - lo) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    // 5 ticks per axis
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = frame.x_min + f * (frame.x_max - frame.x_min);
        let xp = frame.tx(xv);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(xp),
            fmt(xp),
            fmt(y0 + 5.0)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            fmt(xp),
            fmt(y0 + 20.0),
            tick_label(xv)
        );
        let yv = frame.y_min + f * (frame.y_max - frame.y_min);
        let yp = HEIGHT - MARGIN_B - f * (HEIGHT - MARGIN_T - MARGIN_B);
        let shown = match frame.scale {
            YScale::Linear => yv,
            YScale::Log => 10f64.powf(yv),
        };
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(x0 - 5.0),
            fmt(yp),
            fmt(yp)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            fmt(x0 - 8.0),
            fmt(yp + 4.0),
            tick_label(shown)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

/// Line plot of one or more series. Log scale drops nonpositive points.
pub fn line_plot(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
    scale: YScale,
) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.x.is_empty()) {
        return Err(CappaError::InvalidArgument(
            "line plot needs at least one nonempty series".into(),
        ));
    }
    for sr in series {
        if sr.x.len() != sr.y.len() {
            return Err(CappaError::DimensionMismatch(format!(
                "series '{}' has {} x values and {} y values",
                sr.label,
                sr.x.len(),
                sr.y.len()
            )));
        }
    }
    let usable = |y: f64| y.is_finite() && (scale == YScale::Linear || y > 0.0);
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for sr in series {
        for (&x, &y) in sr.x.iter().zip(&sr.y) {
            if !x.is_finite() || !usable(y) {
                continue;
            }
            let yv = match scale {
                YScale::Linear => y,
                YScale::Log => y.log10(),
            };
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(yv);
            y_max = y_max.max(yv);
        }
    }
    if !(x_min.is_finite() && y_min.is_finite()) {
        return Err(CappaError::InvalidArgument(
            "no plottable points (all nonpositive on a log axis?)".into(),
        ));
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    if x_min == x_max {
        x_max += 1.0;
    }
    let frame = Frame {
        x_min,
        x_max,
        y_min,
        y_max,
        scale,
    };
    let mut s = open_svg(title);
    axes(&mut s, &frame, x_label, y_label);
    for (i, sr) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (&x, &y) in sr.x.iter().zip(&sr.y) {
            if !x.is_finite() || !usable(y) {
                continue;
            }
            let _ = write!(points, "{},{} ", fmt(frame.tx(x)), fmt(frame.ty(y)));
        }
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let ly = MARGIN_T + 15.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            WIDTH - 180.0,
            WIDTH - 160.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            WIDTH - 155.0,
            ly + 4.0,
            escape(&sr.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Stem plot: one vertical line per index from the zero baseline, one glyph
/// per series at the value.
pub fn stem_plot(series: &[Series], title: &str, x_label: &str, y_label: &str) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.x.is_empty()) {
        return Err(CappaError::InvalidArgument(
            "stem plot needs at least one nonempty series".into(),
        ));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for sr in series {
        for (&x, &y) in sr.x.iter().zip(&sr.y) {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    if x_min == x_max {
        x_max += 1.0;
    }
    let frame = Frame {
        x_min,
        x_max,
        y_min,
        y_max,
        scale: YScale::Linear,
    };
    let mut s = open_svg(title);
    axes(&mut s, &frame, x_label, y_label);
    let base = frame.ty(0.0);
    let _ = writeln!(
        s,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>",
        fmt(MARGIN_L),
        fmt(base),
        fmt(WIDTH - MARGIN_R),
        fmt(base)
    );
    for (i, sr) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for (&x, &y) in sr.x.iter().zip(&sr.y) {
            if !(x.is_finite() && y.is_finite()) || y == 0.0 {
                continue;
            }
            let xp = frame.tx(x);
            let yp = frame.ty(y);
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1\"/>",
                fmt(xp),
                fmt(base),
                fmt(xp),
                fmt(yp)
            );
            let _ = writeln!(
                s,
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>",
                fmt(xp),
                fmt(yp)
            );
        }
        let ly = MARGIN_T + 15.0 * i as f64;
        let _ = writeln!(
            s,
            "<circle cx=\"{}\" cy=\"{ly}\" r=\"3\" fill=\"{color}\"/>",
            WIDTH - 175.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            WIDTH - 165.0,
            ly + 4.0,
            escape(&sr.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(content: &str, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> Vec<Series> {
        vec![
            Series {
                label: "a".into(),
                x: vec![0.0, 1.0, 2.0],
                y: vec![1.0, 0.1, 0.01],
            },
            Series {
                label: "b".into(),
                x: vec![0.0, 1.0, 2.0],
                y: vec![2.0, 1.0, 0.5],
            },
        ]
    }

    #[test]
    fn line_plot_is_deterministic_valid_svg() {
        let a = line_plot(&demo(), "t<est>", "t", "err", YScale::Log).unwrap();
        let b = line_plot(&demo(), "t<est>", "t", "err", YScale::Log).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("polyline"));
        assert!(a.contains("t&lt;est&gt;"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn log_plot_drops_nonpositive_points() {
        let s = vec![Series {
            label: "a".into(),
            x: vec![0.0, 1.0, 2.0],
            y: vec![1.0, 0.0, 0.1],
        }];
        let svg = line_plot(&s, "t", "x", "y", YScale::Log).unwrap();
        // two plottable points remain
        let poly = svg.split("points=\"").nth(1).unwrap();
        let coords = poly.split('"').next().unwrap();
        assert_eq!(coords.split_whitespace().count(), 2);
        let all_zero = vec![Series {
            label: "z".into(),
            x: vec![0.0],
            y: vec![0.0],
        }];
        assert!(line_plot(&all_zero, "t", "x", "y", YScale::Log).is_err());
    }

    #[test]
    fn stem_plot_draws_one_stem_per_nonzero() {
        let s = vec![Series {
            label: "x".into(),
            x: vec![0.0, 1.0, 2.0, 3.0],
            y: vec![0.5, 0.0, -1.0, 0.0],
        }];
        let svg = stem_plot(&s, "stems", "index", "value").unwrap();
        assert_eq!(svg.matches("<circle").count(), 2 + 1); // 2 stems + legend
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(line_plot(&[], "t", "x", "y", YScale::Linear).is_err());
        assert!(stem_plot(&[], "t", "x", "y").is_err());
    }
}
