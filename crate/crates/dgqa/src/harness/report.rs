//! Human-readable and machine-readable run reports.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::gds::GdsReportFile;
use super::manifest::{read_json, write_json};
use super::pipeline::{PipelineSummary, SelectionReportFile};
use super::RunRecordFile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// N.o.S.: number of selected source domains.
    pub n_selected: usize,
    pub selection: SelectionReportFile,
    pub summary: PipelineSummary,
    pub gds: Option<GdsReportFile>,
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn render_markdown(report: &ReportFile, metrics_csv: &str) -> String {
    let mut md = String::new();
    md.push_str("# Run report\n\n");
    md.push_str(&format!("- command: {}\n", report.command));
    md.push_str(&format!("- config hash: `{}`\n", report.config_hash));
    md.push_str(&format!("- base seed: {}\n", report.seed));
    md.push_str(&format!("- repeats: {}\n", report.summary.n_repeats));
    md.push_str(&format!("- target images: {}\n", report.summary.n_target));
    md.push_str(&format!(
        "- N.o.S. (number of selected source domains): {}\n",
        report.n_selected
    ));
    md.push_str(&format!(
        "- training data fraction (median, selected/all): {}\n\n",
        fmt(report.summary.median_data_fraction)
    ));

    md.push_str(&format!(
        "## Source-domain selection (tau = {})\n\n",
        fmt(report.selection.tau)
    ));
    md.push_str("| domain | family | sim | selected |\n|---|---|---|---|\n");
    for e in &report.selection.entries {
        md.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            e.domain_id,
            e.family_name,
            fmt(e.sim),
            if e.selected { "yes" } else { "no" }
        ));
    }

    md.push_str("\n## Metrics\n\n");
    let mut lines = metrics_csv.lines();
    if let Some(header) = lines.next() {
        md.push_str(&format!("| {} |\n", header.replace(',', " | ")));
        md.push_str(&format!(
            "|{}\n",
            "---|".repeat(header.split(',').count())
        ));
        let mut any = false;
        for line in lines {
            md.push_str(&format!("| {} |\n", line.replace(',', " | ")));
            any = true;
        }
        if !any {
            md.push_str("\n(no labeled target; metrics skipped)\n");
        }
    }

    md.push_str("\n## Medians\n\n| setting | srcc | plcc |\n|---|---|---|\n");
    for (name, m) in [
        ("dgqa", &report.summary.dgqa_median),
        ("baseline", &report.summary.baseline_median),
    ] {
        match m {
            Some(m) => md.push_str(&format!(
                "| {name} | {} | {} |\n",
                fmt(m.srcc),
                fmt(m.plcc)
            )),
            None => md.push_str(&format!("| {name} | - | - |\n")),
        }
    }

    if let Some(gds) = &report.gds {
        md.push_str("\n## Greedy selection cross-check\n\n");
        md.push_str("| round | added | family | srcc |\n|---|---|---|---|\n");
        for (i, r) in gds.rounds.iter().enumerate() {
            md.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                i + 1,
                r.added,
                r.family_name,
                fmt(r.srcc)
            ));
        }
        md.push_str(&format!(
            "\nJaccard overlap with the unsupervised selection: {}\n",
            fmt(gds.jaccard)
        ));
    }
    md
}

/// Regenerate `report.md` + `report.json` from a completed run directory.
/// Regeneration from unchanged artifacts is byte-identical.
pub fn cmd_report(run_dir: &Path, out_dir: Option<&Path>) -> Result<ReportFile> {
    let required = [
        run_dir.join("run.json"),
        run_dir.join("summary.json"),
        run_dir.join("selection_report.json"),
        run_dir.join("metrics.csv"),
    ];
    let missing: Vec<PathBuf> = required.iter().filter(|p| !p.is_file()).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let run: RunRecordFile = read_json(&required[0])?;
    let summary: PipelineSummary = read_json(&required[1])?;
    let selection: SelectionReportFile = read_json(&required[2])?;
    let metrics_csv =
        std::fs::read_to_string(&required[3]).map_err(|e| Error::io(&required[3], e))?;
    let gds_path = run_dir.join("gds_report.json");
    let gds: Option<GdsReportFile> = if gds_path.is_file() {
        Some(read_json(&gds_path)?)
    } else {
        None
    };

    let report = ReportFile {
        command: run.command,
        config_hash: run.config_hash,
        seed: run.seed,
        n_selected: selection.selected_ids().len(),
        selection,
        summary,
        gds,
    };
    let out = out_dir.unwrap_or(run_dir);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("report.json"), &report)?;
    std::fs::write(out.join("report.md"), render_markdown(&report, &metrics_csv))
        .map_err(|e| Error::io(out.join("report.md"), e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::DomainId;
    use crate::harness::pipeline::SelectionEntry;

    #[test]
    fn markdown_selection_table_has_one_row_per_domain() {
        let selection = SelectionReportFile {
            tau: 0.5,
            n_target: 3,
            entries: vec![
                SelectionEntry {
                    domain_id: DomainId(11),
                    family_name: "white_noise".into(),
                    sim: 0.7,
                    selected: true,
                },
                SelectionEntry {
                    domain_id: DomainId(1),
                    family_name: "gaussian_blur".into(),
                    sim: 0.3,
                    selected: false,
                },
            ],
        };
        let report = ReportFile {
            command: "pipeline".into(),
            config_hash: "abc".into(),
            seed: 0,
            n_selected: 1,
            selection,
            summary: PipelineSummary {
                config_hash: "abc".into(),
                seed: 0,
                n_repeats: 1,
                k: 2,
                tau: 0.5,
                n_target: 3,
                labels_present: false,
                runs: vec![],
                dgqa_median: None,
                baseline_median: None,
                median_data_fraction: 0.5,
            },
            gds: None,
        };
        let md = render_markdown(&report, "run,seed,setting,n,srcc,plcc,plcc_mode\n");
        let table_rows = md
            .lines()
            .filter(|l| l.starts_with("| #"))
            .count();
        assert_eq!(table_rows, 2);
        assert!(md.contains("N.o.S. (number of selected source domains): 1"));
        assert!(md.contains("(no labeled target; metrics skipped)"));
    }
}
