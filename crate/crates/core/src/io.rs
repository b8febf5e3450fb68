//! Plain-text table output: `#`-prefixed metadata lines, a comma-separated
//! header, then rows with shortest round-trip float formatting.

use std::io::{self, Write};

/// Shortest representation of `x` that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        CsvTable {
            metadata: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_f64(*x));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table output is UTF-8")
    }

    /// Parses text produced by [`CsvTable::write_to`].
    pub fn parse(text: &str) -> Option<CsvTable> {
        let mut table = CsvTable::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(": ")?;
                table.metadata.push((k.to_string(), v.to_string()));
            } else {
                table.columns = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        for line in lines {
            let row = line
                .split(',')
                .map(|s| s.parse::<f64>().ok())
                .collect::<Option<Vec<_>>>()?;
            table.rows.push(row);
        }
        Some(table)
    }
}
