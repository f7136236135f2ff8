//! AUC and experiment reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tgraph::{Label, NodeTable, Split};

/// Mann-Whitney AUC as an exact ratio `(2U, 2 * pos * neg)`.
///
/// Ties between a positive and a negative count half, which the doubled
/// numerator keeps integral.
pub fn auc_ratio(scores: &[f64], labels: &[bool]) -> Result<(u128, u128)> {
    if scores.len() != labels.len() {
        return Err(Error::contract(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::contract(format!("score {bad} is not comparable")));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {pos} positive and {neg} negative"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the 1-based tie-averaged rank of every positive.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let s = scores[order[start]];
        let end = start + order[start..].iter().take_while(|&&k| scores[k] == s).count();
        let doubled_rank = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&k| labels[k]).count() as u128;
        doubled_rank_sum += positives * doubled_rank;
        start = end;
    }
    let doubled_u = doubled_rank_sum - pos * (pos + 1);
    Ok((doubled_u, 2 * pos * neg))
}

pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (num, den) = auc_ratio(scores, labels)?;
    Ok(num as f64 / den as f64)
}

/// Scores, labels and split tags of the labeled nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredNodeSet {
    pub nodes: Vec<usize>,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub splits: Vec<Split>,
}

impl ScoredNodeSet {
    /// `scores` has one entry per node of `table`; unlabeled nodes are dropped.
    pub fn from_scores(scores: &[f64], table: &NodeTable) -> Result<Self> {
        if scores.len() != table.len() {
            return Err(Error::contract(format!(
                "{} scores for {} nodes",
                scores.len(),
                table.len()
            )));
        }
        let mut set = Self::default();
        for (i, &s) in scores.iter().enumerate() {
            if table.label(i) == Label::Unlabeled {
                continue;
            }
            set.nodes.push(i);
            set.scores.push(s);
            set.labels.push(table.label(i) == Label::Fraud);
            set.splits.push(table.split(i));
        }
        Ok(set)
    }

    pub fn auc_on(&self, split: Split) -> Result<f64> {
        let (s, l): (Vec<f64>, Vec<bool>) = (0..self.nodes.len())
            .filter(|&k| self.splits[k] == split)
            .map(|k| (self.scores[k], self.labels[k]))
            .unzip();
        auc(&s, &l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub model: String,
    pub valid_auc: f64,
    pub test_auc: f64,
}

impl AucReport {
    pub fn tsv_line(&self) -> String {
        format!("{}\t{:.4}\t{:.4}", self.model, self.valid_auc, self.test_auc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Valid and test AUC of per-node scores over labeled nodes.
pub fn evaluate(model: &str, scores: &[f64], table: &NodeTable) -> Result<AucReport> {
    let set = ScoredNodeSet::from_scores(scores, table)?;
    Ok(AucReport {
        model: model.to_string(),
        valid_auc: set.auc_on(Split::Valid)?,
        test_auc: set.auc_on(Split::Test)?,
    })
}

/// Temporal and static model results side by side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonTable {
    pub temporal: Vec<AucReport>,
    pub baselines: Vec<AucReport>,
}

fn best(rows: &[AucReport], pick: impl Fn(&AucReport) -> f64) -> Option<f64> {
    rows.iter().map(pick).fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

impl ComparisonTable {
    /// `(best temporal - best baseline) / best baseline` for valid and test AUC.
    pub fn improvement(&self) -> Option<(f64, f64)> {
        let rel = |pick: fn(&AucReport) -> f64| {
            let t = best(&self.temporal, pick)?;
            let b = best(&self.baselines, pick)?;
            Some((t - b) / b)
        };
        Some((rel(|r| r.valid_auc)?, rel(|r| r.test_auc)?))
    }

    /// All rows sorted by descending test AUC.
    pub fn sorted_rows(&self) -> Vec<&AucReport> {
        let mut rows: Vec<&AucReport> = self.temporal.iter().chain(&self.baselines).collect();
        rows.sort_by(|a, b| b.test_auc.total_cmp(&a.test_auc).then_with(|| a.model.cmp(&b.model)));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tvalid_auc\ttest_auc\n");
        for row in self.sorted_rows() {
            out.push_str(&row.tsv_line());
            out.push('\n');
        }
        if let Some((v, t)) = self.improvement() {
            writeln!(out, "improv.\t{:.2}%\t{:.2}%", v * 100.0, t * 100.0).unwrap();
        }
        out
    }
}
