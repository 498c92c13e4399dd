//! Merged summary tables: rows are ranker × metric, columns are
//! representations, cells read `mean±std`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{EvalReport, Metric, Protocol};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub mean: f64,
    pub std: f64,
    pub topic_std: f64,
    /// Best value across rankers for this metric and representation.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub ranker: String,
    pub metric: Metric,
    pub cells: Vec<Option<TableCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub protocol: Protocol,
    pub k: usize,
    pub representations: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn rep_order(rep: &str) -> (usize, String) {
    let pos = ["tf", "tfidf", "lsi"].iter().position(|r| *r == rep).unwrap_or(3);
    (pos, rep.to_string())
}

fn ranker_order(label: &str) -> (usize, String) {
    let family = ["panoptic", "vote", "propagation"]
        .iter()
        .position(|f| label.starts_with(f))
        .unwrap_or(3);
    (family, label.to_string())
}

/// Merges reports of one protocol into a table. Reports must agree on the
/// protocol and on `k`, and each (ranker, representation) pair may appear
/// once.
pub fn merge_reports(reports: &[EvalReport]) -> Result<SummaryTable> {
    let first = reports
        .first()
        .ok_or_else(|| Error::ReportMerge("no reports given".into()))?;
    let mut cells: BTreeMap<(String, String), &EvalReport> = BTreeMap::new();
    for r in reports {
        if r.protocol != first.protocol {
            return Err(Error::ReportMerge(format!(
                "mixed protocols: {} and {}",
                first.protocol, r.protocol
            )));
        }
        if r.k != first.k {
            return Err(Error::ReportMerge(format!("mixed k: {} and {}", first.k, r.k)));
        }
        if cells
            .insert((r.ranker.clone(), r.representation.clone()), r)
            .is_some()
        {
            return Err(Error::ReportMerge(format!(
                "duplicate cell for ranker `{}` and representation `{}`",
                r.ranker, r.representation
            )));
        }
    }

    let mut reps: Vec<String> = reports
        .iter()
        .map(|r| r.representation.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    reps.sort_by_key(|r| rep_order(r));
    let mut rankers: Vec<String> = reports
        .iter()
        .map(|r| r.ranker.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    rankers.sort_by_key(|r| ranker_order(r));

    let mut rows = Vec::new();
    for ranker in &rankers {
        for metric in Metric::ALL {
            let row_cells = reps
                .iter()
                .map(|rep| {
                    let report = cells.get(&(ranker.clone(), rep.clone()))?;
                    let s = report.summary.get(&metric)?;
                    Some(TableCell {
                        mean: s.mean,
                        std: s.std,
                        topic_std: s.topic_std,
                        best: false,
                    })
                })
                .collect();
            rows.push(TableRow {
                ranker: ranker.clone(),
                metric,
                cells: row_cells,
            });
        }
    }

    for metric in Metric::ALL {
        for col in 0..reps.len() {
            let means = rows
                .iter()
                .filter(|r| r.metric == metric)
                .filter_map(|r| r.cells[col].as_ref().map(|c| c.mean));
            let best = if metric.higher_is_better() {
                means.fold(f64::NEG_INFINITY, f64::max)
            } else {
                means.fold(f64::INFINITY, f64::min)
            };
            for row in rows.iter_mut().filter(|r| r.metric == metric) {
                if let Some(c) = row.cells[col].as_mut() {
                    c.best = c.mean == best;
                }
            }
        }
    }

    Ok(SummaryTable {
        protocol: first.protocol,
        k: first.k,
        representations: reps,
        rows,
    })
}

impl SummaryTable {
    /// `ranker,metric,<rep>,<rep>_best,<rep>_topic_std,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ranker,metric");
        for rep in &self.representations {
            out.push_str(&format!(",{rep},{rep}_best,{rep}_topic_std"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.ranker, row.metric.display_name(self.k)));
            for cell in &row.cells {
                match cell {
                    Some(c) => out.push_str(&format!(
                        ",{:.3}±{:.3},{},{:.3}",
                        c.mean, c.std, c.best, c.topic_std
                    )),
                    None => out.push_str(",,,"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Markdown rendering; best cells are bold. Document-query tables get a
    /// topic-STD column per representation.
    pub fn to_markdown(&self) -> String {
        let with_topic = self.protocol == Protocol::Document;
        let mut header = String::from("| ranker | metric |");
        let mut rule = String::from("|---|---|");
        for rep in &self.representations {
            header.push_str(&format!(" {rep} |"));
            rule.push_str("---|");
            if with_topic {
                header.push_str(&format!(" {rep} topic STD |"));
                rule.push_str("---|");
            }
        }
        let mut out = format!("{header}\n{rule}\n");
        for row in &self.rows {
            out.push_str(&format!("| {} | {} |", row.ranker, row.metric.display_name(self.k)));
            for cell in &row.cells {
                match cell {
                    Some(c) if c.best => out.push_str(&format!(" **{:.3}**±{:.3} |", c.mean, c.std)),
                    Some(c) => out.push_str(&format!(" {:.3}±{:.3} |", c.mean, c.std)),
                    None => out.push_str(" |"),
                }
                if with_topic {
                    match cell {
                        Some(c) => out.push_str(&format!(" {:.3} |", c.topic_std)),
                        None => out.push_str(" |"),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
