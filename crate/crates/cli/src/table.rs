//! CSV tables: header row, 15 significant digits, `\n` line endings.

use bosonic_lindblad::qubitspeed::{SpeedTrace, SurfacePoint};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Self::Int(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Self::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Self::Text(x.to_owned())
    }
}

/// Scientific notation with 15 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.14e}")
}

fn escape(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.header.iter().map(|h| escape(h)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_number(*x),
                    Cell::Int(k) => k.to_string(),
                    Cell::Text(s) => escape(s),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// One row per time sample of a speed trace.
pub fn trace_table(trace: &SpeedTrace) -> Table {
    let mut table = Table::new(["t", "v0", "v", "fidelity", "t_F"]);
    for k in 0..trace.times.len() {
        table.push(vec![
            trace.times[k].into(),
            trace.v0[k].into(),
            trace.v[k].into(),
            trace.fidelity[k].into(),
            trace.t_f[k].into(),
        ]);
    }
    table
}

/// Long format `(t, theta, v)`.
pub fn surface_table(points: &[SurfacePoint]) -> Table {
    let mut table = Table::new(["t", "theta", "v"]);
    for p in points {
        table.push(vec![p.t.into(), p.theta.into(), p.v.into()]);
    }
    table
}

/// Writes a trace as CSV.
pub fn export_trace(trace: &SpeedTrace, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, trace_table(trace).to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_fifteen_significant_digits() {
        assert_eq!(format_number(1.0), "1.00000000000000e0");
        assert_eq!(format_number(-0.000_123_456_789_012_345_7), "-1.23456789012346e-4");
        assert_eq!(format_number(0.0), "0.00000000000000e0");
    }

    #[test]
    fn text_cells_are_quoted_when_needed() {
        let mut t = Table::new(["a", "b,c"]);
        t.push(vec!["x\"y".into(), 3usize.into()]);
        assert_eq!(t.to_csv(), "a,\"b,c\"\n\"x\"\"y\",3\n");
    }
}
