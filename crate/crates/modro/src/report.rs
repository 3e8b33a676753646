//! Lossless markdown rendering of result CSVs.

use std::path::Path;

use crate::error::Result;

fn escape_cell(cell: &str) -> String {
    cell.replace('|', "\\|")
}

/// Renders CSV text as a GitHub-flavored markdown table.
///
/// Lines starting with `#` are configuration stamps and are skipped; cells
/// pass through verbatim (pipes escaped), so parsing the rendered numbers
/// back recovers the CSV values exactly. Empty input renders as empty
/// output; a header-only CSV renders a header-only table.
pub fn render_markdown(csv_text: &str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(|c| escape_cell(c)).collect());
    }
    if rows.is_empty() {
        return Ok(String::new());
    }
    let mut out = String::new();
    let header = &rows[0];
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!(
        "|{}\n",
        " --- |".repeat(header.len())
    ));
    for row in &rows[1..] {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    Ok(out)
}

/// Renders a CSV file as a markdown table.
pub fn render_markdown_file(path: &Path) -> Result<String> {
    render_markdown(&std::fs::read_to_string(path)?)
}
