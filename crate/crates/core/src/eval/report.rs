use serde::{Deserialize, Serialize};

use super::{Difficulty, EvalReport, ReportRow};

pub const TABLE_CAPTION: &str = "Average F1 scores.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TableText,
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Renders a report.
///
/// `TableText` has one line per model and threshold with `mean(±std)`
/// cells to three decimals, `-` where a difficulty has no questions. `Csv`
/// has a header and one line per row, values at full precision. `Json`
/// holds rows and the per-question breakdown.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::TableText => render_table(&report.rows),
        ReportFormat::Csv => render_csv(&report.rows),
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report is serializable") + "\n",
    }
}

fn cell(row: Option<&ReportRow>) -> String {
    match row.and_then(|r| r.mean_f1.zip(r.std_f1)) {
        Some((mean, std)) => format!("{mean:.3}(±{std:.3})"),
        None => "-".into(),
    }
}

fn render_table(rows: &[ReportRow]) -> String {
    // (model, threshold) in order of first appearance
    let mut keys: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if !keys
            .iter()
            .any(|(m, t)| *m == r.model && t.to_bits() == r.threshold.to_bits())
        {
            keys.push((&r.model, r.threshold));
        }
    }
    let mut lines: Vec<Vec<String>> = vec![vec![
        "Model".into(),
        "Threshold".into(),
        "Easy".into(),
        "Medium".into(),
        "Hard".into(),
    ]];
    for (model, threshold) in keys {
        let mut line = vec![model.to_string(), format!("{threshold:.3}")];
        for d in Difficulty::ALL {
            let row = rows
                .iter()
                .find(|r| r.model == model && r.threshold.to_bits() == threshold.to_bits() && r.difficulty == d);
            line.push(cell(row));
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("{TABLE_CAPTION}\n");
    for line in lines {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(text, w)| format!("{text:<w$}", w = *w))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn render_csv(rows: &[ReportRow]) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer
        .write_record(["model", "threshold", "difficulty", "mean_f1", "std_f1", "runs"])
        .expect("in-memory write");
    for row in rows {
        writer.serialize(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Reads rows back from [`ReportFormat::Csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(ReportError::from)
}
