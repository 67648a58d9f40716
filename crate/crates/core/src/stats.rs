//! Per-split error distribution tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ReportRecord, SentenceDatasetRow, Split};
use crate::exec::Execution;
use crate::taxonomy::{Category, ErrorClass};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("split {0} has no reports")]
    EmptySplit(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub class: ErrorClass,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub split: String,
    pub reports: usize,
    /// Injectable classes in taxonomy order.
    pub rows: Vec<DistributionRow>,
}

impl DistributionReport {
    pub fn percentage(&self, class: ErrorClass) -> f64 {
        self.rows.iter().find(|r| r.class == class).map_or(0.0, |r| r.percentage)
    }

    pub fn count(&self, class: ErrorClass) -> usize {
        self.rows.iter().find(|r| r.class == class).map_or(0, |r| r.count)
    }
}

/// Percentage of reports whose class set contains each class.
pub fn distribution_from_sets(split: &str, sets: &[BTreeSet<ErrorClass>]) -> Result<DistributionReport, StatsError> {
    if sets.is_empty() {
        return Err(StatsError::EmptySplit(split.to_string()));
    }
    let mut counts: BTreeMap<ErrorClass, usize> = BTreeMap::new();
    for set in sets {
        for c in set {
            *counts.entry(*c).or_default() += 1;
        }
    }
    let rows = ErrorClass::INJECTABLE
        .iter()
        .map(|&class| {
            let count = counts.get(&class).copied().unwrap_or(0);
            DistributionRow { class, count, percentage: 100.0 * count as f64 / sets.len() as f64 }
        })
        .collect();
    Ok(DistributionReport { split: split.to_string(), reports: sets.len(), rows })
}

/// Distribution over the planned categories of the split's records.
pub fn compute_distribution(
    records: &[ReportRecord],
    split: Option<Split>,
    exec: Execution,
) -> Result<DistributionReport, StatsError> {
    let selected: Vec<&ReportRecord> = records.iter().filter(|r| split.map_or(true, |s| r.split == s)).collect();
    let sets = exec.map(&selected, |r| r.error_categories.iter().copied().collect::<BTreeSet<_>>());
    distribution_from_sets(split.map_or("all", Split::as_str), &sets)
}

/// Distribution recovered from labeled sentence rows, for cross-checking
/// against the plans.
pub fn distribution_from_rows(
    split: &str,
    rows: &[SentenceDatasetRow],
    exec: Execution,
) -> Result<DistributionReport, StatsError> {
    let mut by_report: BTreeMap<&str, Vec<&SentenceDatasetRow>> = BTreeMap::new();
    for r in rows {
        by_report.entry(r.report_id.as_str()).or_default().push(r);
    }
    let groups: Vec<Vec<&SentenceDatasetRow>> = by_report.into_values().collect();
    let sets = exec.map(&groups, |g| {
        g.iter().map(|r| r.error_class).filter(|c| *c != ErrorClass::NotApplicable).collect::<BTreeSet<_>>()
    });
    distribution_from_sets(split, &sets)
}

fn category_title(c: Category) -> &'static str {
    match c {
        Category::ContentAddition => "Content Addition",
        Category::ContextDependent => "Context Dependent",
        Category::LinguisticQuality => "Linguistic Quality",
    }
}

/// Text table: one column per split, classes grouped by category,
/// percentages to two decimals.
pub fn render_table(reports: &[DistributionReport]) -> String {
    const NAME: usize = 28;
    const COL: usize = 10;
    let mut out = String::new();
    let _ = write!(out, "{:<NAME$}", "Error");
    for r in reports {
        let _ = write!(out, "{:>COL$}", r.split);
    }
    out.push('\n');
    let _ = write!(out, "{:<NAME$}", "Reports");
    for r in reports {
        let _ = write!(out, "{:>COL$}", r.reports);
    }
    out.push('\n');
    for category in [Category::ContentAddition, Category::ContextDependent, Category::LinguisticQuality] {
        let _ = writeln!(out, "{}", category_title(category));
        for class in ErrorClass::INJECTABLE.iter().filter(|c| c.category() == Some(category)) {
            let _ = write!(out, "  {:<w$}", class.display_name(), w = NAME - 2);
            for r in reports {
                let _ = write!(out, "{:>COL$.2}", r.percentage(*class));
            }
            out.push('\n');
        }
    }
    out
}

pub fn export_distribution_csv(reports: &[DistributionReport], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["split", "category", "error_class", "count", "percentage"])?;
    for r in reports {
        for row in &r.rows {
            let category = row.class.category().map_or("", category_title);
            w.write_record([
                r.split.as_str(),
                category,
                row.class.display_name(),
                &row.count.to_string(),
                &format!("{:.2}", row.percentage),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
