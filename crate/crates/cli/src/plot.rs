//! Self-contained SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// Lowest decade shown below the largest value on a log axis.
const MAX_DECADES: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
    DotDashed,
}

impl LineStyle {
    /// Solid, dashed, dot-dashed, repeating.
    pub fn cycle(k: usize) -> Self {
        [Self::Solid, Self::Dashed, Self::DotDashed][k % 3]
    }

    pub fn dasharray(self) -> Option<&'static str> {
        match self {
            Self::Solid => None,
            Self::Dashed => Some("8,4"),
            Self::DotDashed => Some("8,3,2,3"),
        }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: LineStyle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("plot has no finite data points")]
    Empty,
    #[error("series `{0}` has mismatched x and y lengths")]
    Length(String),
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn value(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    /// Fraction along the axis, clamped to the plotted range.
    fn fraction(&self, v: f64) -> f64 {
        ((self.value(v) - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn plottable(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }
}

fn expand(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Ticks at multiples of 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    fn axes(&self) -> Result<(Axis, Axis), PlotError> {
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return Err(PlotError::Length(s.label.clone()));
            }
        }
        let points = || {
            self.series
                .iter()
                .flat_map(|s| s.x.iter().copied().zip(s.y.iter().copied()))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
        };
        let (x_lo, x_hi) = finite_range(points().map(|p| p.0)).ok_or(PlotError::Empty)?;
        let (x_lo, x_hi) = expand(x_lo, x_hi);
        let x_axis = Axis {
            lo: x_lo,
            hi: x_hi,
            log: false,
        };

        let positive = finite_range(points().map(|p| p.1).filter(|y| *y > 0.0));
        let y_axis = match positive {
            Some((lo, hi)) if self.log_y => {
                let top = hi.log10().ceil();
                let bottom = lo.log10().floor().max(top - MAX_DECADES);
                let bottom = if bottom < top { bottom } else { top - 1.0 };
                Axis {
                    lo: bottom,
                    hi: top,
                    log: true,
                }
            }
            _ => {
                if self.log_y {
                    log::info!("no positive ordinate values; falling back to a linear axis");
                }
                let (lo, hi) = finite_range(points().map(|p| p.1)).ok_or(PlotError::Empty)?;
                let (lo, hi) = expand(lo, hi);
                Axis { lo, hi, log: false }
            }
        };
        Ok((x_axis, y_axis))
    }

    pub fn render(&self) -> Result<String, PlotError> {
        let (xa, ya) = self.axes()?;
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + xa.fraction(x) * pw;
        let py = |y: f64| TOP + (1.0 - ya.fraction(y)) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // Frame and ticks.
        let _ = writeln!(
            svg,
            r#"<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let (xticks, xdec) = linear_ticks(xa.lo, xa.hi);
        for t in xticks {
            let x = LEFT + (t - xa.lo) / (xa.hi - xa.lo) * pw;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xdec$}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        let yticks: Vec<(f64, String)> = if ya.log {
            let span = (ya.hi - ya.lo).round() as i64;
            let stride = (span / 8).max(1);
            (0..=span)
                .filter(|k| k % stride == 0)
                .map(|k| {
                    let e = ya.lo + k as f64;
                    (e, format!("1e{}", e as i64))
                })
                .collect()
        } else {
            let (ticks, dec) = linear_ticks(ya.lo, ya.hi);
            ticks.into_iter().map(|t| (t, format!("{t:.dec$}"))).collect()
        };
        for (t, label) in yticks {
            let y = TOP + (1.0 - (t - ya.lo) / (ya.hi - ya.lo)) * ph;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text class="y-label" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        // Curves: a polyline per run of plottable points.
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let dash = s
                .style
                .dasharray()
                .map(|d| format!(r#" stroke-dasharray="{d}""#))
                .unwrap_or_default();
            let mut runs: Vec<Vec<String>> = vec![Vec::new()];
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if x.is_finite() && ya.plottable(y) {
                    runs.last_mut().expect("nonempty").push(format!("{:.2},{:.2}", px(x), py(y)));
                } else if !runs.last().expect("nonempty").is_empty() {
                    runs.push(Vec::new());
                }
            }
            for run in runs.iter().filter(|r| !r.is_empty()) {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                    run.join(" ")
                );
            }
            let ly = TOP + 10.0 + 20.0 * k as f64;
            let lx = LEFT + pw + 15.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 30.0,
                lx + 36.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        Ok(svg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(y: Vec<f64>, log_y: bool) -> Plot {
        Plot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y,
            series: vec![Series {
                label: "a".into(),
                x: (0..y.len()).map(|k| k as f64).collect(),
                y,
                style: LineStyle::Solid,
            }],
        }
    }

    #[test]
    fn ticks_cover_range() {
        let (t, dec) = linear_ticks(0.0, 1.0);
        assert_eq!(t.first().copied(), Some(0.0));
        assert!((t.last().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dec, 1);
    }

    #[test]
    fn gaps_split_polylines() {
        let svg = plot(vec![1.0, f64::NAN, 2.0, 3.0], false).render().unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn log_axis_skips_nonpositive_points() {
        let svg = plot(vec![1.0, 0.1, 0.0, 0.01], true).render().unwrap();
        assert!(svg.contains(">1e-2<"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_plot_is_an_error() {
        assert_eq!(plot(vec![], false).render(), Err(PlotError::Empty));
    }
}
