//! Plot-ready CSV output.
//!
//! Reals are written with 17 significant digits so that output is stable
//! under diffing and round-trips to the same `f64`.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Bool(bool),
    Text(&'static str),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            Cell::Real(v) => out.push_str(&format_real(*v)),
            Cell::Bool(v) => write!(out, "{v}").unwrap(),
            Cell::Text(s) => out.push_str(s),
            Cell::Empty => {}
        }
    }
}

/// A CSV document: `# key: value` comment lines, a header row, data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.comments.push((key.into(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(format_real(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(format_real(0.0), "0.0000000000000000e0");
        let v = 0.1 + 0.2;
        assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn renders_comments_header_and_rows() {
        let mut t = Table::new(&["id", "x", "ok", "gap"]);
        t.comment("config-sha256", "abc");
        t.push(vec![3usize.into(), 0.5.into(), true.into(), None.into()]);
        assert_eq!(
            t.render(),
            "# config-sha256: abc\nid,x,ok,gap\n3,5.0000000000000000e-1,true,\n"
        );
    }
}
