//! CSV and JSON emission. Floats carry 17 significant digits so that runs
//! are reproducible bit-for-bit from the files.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

/// 17 significant digits, scientific.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rectangular table with one header per column.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Trailing `# key=value` comment lines (CSV only).
    pub comments: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn comment(&mut self, key: &str, value: String) {
        self.comments.push((key.to_string(), value));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (key, value) in &self.comments {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("    {");
            for (j, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("\"{name}\": {}", json_scalar(cell)));
            }
            out.push('}');
            out.push_str(if i + 1 < self.rows.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]");
        for (key, value) in &self.comments {
            out.push_str(&format!(",\n  \"{key}\": {}", json_scalar(value)));
        }
        out.push_str("\n}\n");
        out
    }
}

/// Cells are numbers unless they fail to parse as one.
fn json_scalar(cell: &str) -> String {
    if cell.parse::<f64>().is_ok() {
        cell.to_string()
    } else {
        format!("\"{cell}\"")
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
