//! Classification metrics, rank-based AUC, one-way ANOVA and comparison
//! reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, NUM_LEVELS};

/// Rows are true levels, columns predicted levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_LEVELS]; NUM_LEVELS],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_LEVELS).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    /// Micro accuracy; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            self.trace() as f64 / n as f64
        }
    }
}

fn check_level(v: usize, what: &str, i: usize) -> Result<usize> {
    if v < NUM_LEVELS {
        Ok(v)
    } else {
        Err(Error::Range(format!("{what} {i} is {v}, expected 0..{NUM_LEVELS}")))
    }
}

pub fn confusion(preds: &[usize], labels: &[usize]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Range(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &y)) in preds.iter().zip(labels).enumerate() {
        let p = check_level(p, "prediction", i)?;
        let y = check_level(y, "label", i)?;
        cm.counts[y][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: [f64; NUM_LEVELS],
    pub recall: [f64; NUM_LEVELS],
    pub f1: [f64; NUM_LEVELS],
    /// Class never predicted: precision has a zero denominator.
    pub precision_undefined: [bool; NUM_LEVELS],
    /// Class absent from the labels: recall undefined, excluded from macro means.
    pub absent: [bool; NUM_LEVELS],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn class_metrics(cm: &ConfusionMatrix) -> ClassMetrics {
    let mut m = ClassMetrics {
        precision: [0.0; NUM_LEVELS],
        recall: [0.0; NUM_LEVELS],
        f1: [0.0; NUM_LEVELS],
        precision_undefined: [false; NUM_LEVELS],
        absent: [false; NUM_LEVELS],
        macro_precision: 0.0,
        macro_recall: 0.0,
        macro_f1: 0.0,
    };
    for k in 0..NUM_LEVELS {
        let tp = cm.counts[k][k] as f64;
        let (col, row) = (cm.col_sum(k), cm.row_sum(k));
        m.precision_undefined[k] = col == 0;
        m.absent[k] = row == 0;
        if col > 0 {
            m.precision[k] = tp / col as f64;
        }
        if row > 0 {
            m.recall[k] = tp / row as f64;
        }
        let (p, r) = (m.precision[k], m.recall[k]);
        if p + r > 0.0 {
            m.f1[k] = 2.0 * p * r / (p + r);
        }
    }
    let present: Vec<usize> = (0..NUM_LEVELS).filter(|&k| !m.absent[k]).collect();
    if !present.is_empty() {
        let n = present.len() as f64;
        m.macro_precision = present.iter().map(|&k| m.precision[k]).sum::<f64>() / n;
        m.macro_recall = present.iter().map(|&k| m.recall[k]).sum::<f64>() / n;
        m.macro_f1 = present.iter().map(|&k| m.f1[k]).sum::<f64>() / n;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub macro_auc: f64,
    /// `None` where the class has no positives or no negatives.
    pub per_class: [Option<f64>; NUM_LEVELS],
}

/// 1-based ranks with ties sharing their average rank.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Area under the ROC curve of `scores` for `positive` vs the rest
/// (Mann–Whitney statistic, ties count one half).
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let r_pos: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Some((r_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Macro one-vs-rest AUC over the classes that have both positives and negatives.
pub fn macro_ovr_auc(probs: &[[f64; NUM_LEVELS]], labels: &[usize]) -> Result<AucResult> {
    if probs.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} probability rows for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.len() < 2 {
        return Err(Error::Data(format!("AUC needs at least 2 samples, got {}", probs.len())));
    }
    for (i, row) in probs.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if !(s - 1.0).abs().le(&1e-6) {
            return Err(Error::Data(format!("probability row {i} sums to {s}")));
        }
        check_level(labels[i], "label", i)?;
    }
    let mut per_class = [None; NUM_LEVELS];
    for (k, slot) in per_class.iter_mut().enumerate() {
        let scores: Vec<f64> = probs.iter().map(|r| r[k]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == k).collect();
        *slot = binary_auc(&scores, &pos);
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Data("every class lacks positives or negatives; AUC undefined".into()));
    }
    Ok(AucResult {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub feature: String,
    /// Between-group sum of squares.
    pub sumsq: f64,
    pub ss_within: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub f_stat: f64,
    pub p_value: f64,
    /// All values identical (or no within-group spread): F and p are conventional.
    pub degenerate: bool,
}

/// Upper tail `P(X > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    statrs::function::beta::beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// One-way ANOVA of `values` grouped by `groups`. Empty groups are ignored.
pub fn anova_oneway(feature: &str, values: &[f64], groups: &[usize]) -> Result<AnovaRow> {
    if values.len() != groups.len() {
        return Err(Error::Data(format!(
            "{} values for {} group labels",
            values.len(),
            groups.len()
        )));
    }
    let mut by_group: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (&v, &g) in values.iter().zip(groups) {
        let e = by_group.entry(g).or_default();
        e.0 += v;
        e.1 += 1;
    }
    let n = values.len();
    let k = by_group.len();
    if k < 2 || n < 3 || n <= k {
        return Err(Error::Data(format!(
            "ANOVA needs >= 2 groups and more samples than groups, got {k} groups and {n} samples"
        )));
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: BTreeMap<usize, f64> = by_group.iter().map(|(&g, &(s, c))| (g, s / c as f64)).collect();
    let sumsq: f64 = by_group
        .iter()
        .map(|(g, &(_, c))| c as f64 * (means[g] - grand).powi(2))
        .sum();
    let ss_within: f64 = values.iter().zip(groups).map(|(v, g)| (v - means[g]).powi(2)).sum();
    let (d1, d2) = (k - 1, n - k);
    let mut row = AnovaRow {
        feature: feature.to_string(),
        sumsq,
        ss_within,
        df_between: d1,
        df_within: d2,
        f_stat: 0.0,
        p_value: 1.0,
        degenerate: false,
    };
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if ss_within <= 1e-24 * scale * scale * n as f64 {
        row.degenerate = true;
        if sumsq > 1e-24 * scale * scale * n as f64 {
            row.f_stat = f64::INFINITY;
            row.p_value = 0.0;
        }
        return Ok(row);
    }
    row.f_stat = (sumsq / d1 as f64) / (ss_within / d2 as f64);
    row.p_value = f_upper_tail(row.f_stat, d1 as f64, d2 as f64);
    Ok(row)
}

/// Text table with the column names Features, Sumsq, F, P.
pub fn anova_table(rows: &[AnovaRow]) -> String {
    let width = rows.iter().map(|r| r.feature.len()).max().unwrap_or(0).max(8);
    let mut s = format!("{:<width$}  {:>14}  {:>12}  {:>10}\n", "Features", "Sumsq", "F", "P");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>14.4}  {:>12.4}  {:>10.4e}{}",
            r.feature,
            r.sumsq,
            r.f_stat,
            r.p_value,
            if r.degenerate { "  (degenerate)" } else { "" }
        );
    }
    s
}

/// Evaluation of one model on one rater group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub model: String,
    pub group: String,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassMetrics,
}

impl RunResult {
    pub fn new(model: &str, group: &str, auc: f64, confusion: ConfusionMatrix) -> Self {
        let metrics = class_metrics(&confusion);
        RunResult {
            model: model.to_string(),
            group: group.to_string(),
            auc,
            confusion,
            metrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub model: String,
    pub group: String,
    pub auc: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Group name of the pooled (uncategorized) model.
pub const POOLED_GROUP: &str = "All";

/// Models × groups AUC table with an average row.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Models in column order: average AUC descending, ties by name.
    pub models: Vec<String>,
    pub groups: Vec<String>,
    pub auc: BTreeMap<(String, String), f64>,
    /// Mean AUC per model over the non-pooled groups (all groups if only pooled).
    pub average: BTreeMap<String, f64>,
    pub lines: Vec<ReportLine>,
}

fn group_order(a: &str, b: &str) -> std::cmp::Ordering {
    (a != POOLED_GROUP).cmp(&(b != POOLED_GROUP)).then_with(|| a.cmp(b))
}

pub fn compare_report(runs: &[RunResult]) -> Result<Report> {
    if runs.is_empty() {
        return Err(Error::Data("report needs at least one run".into()));
    }
    let mut groups: Vec<String> = runs
        .iter()
        .map(|r| r.group.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    groups.sort_by(|a, b| group_order(a, b));
    let auc: BTreeMap<(String, String), f64> = runs
        .iter()
        .map(|r| ((r.model.clone(), r.group.clone()), r.auc))
        .collect();
    let models: BTreeSet<String> = runs.iter().map(|r| r.model.clone()).collect();
    let mut average = BTreeMap::new();
    for m in &models {
        let own: Vec<(&String, f64)> = runs.iter().filter(|r| &r.model == m).map(|r| (&r.group, r.auc)).collect();
        let cat: Vec<f64> = own.iter().filter(|(g, _)| *g != POOLED_GROUP).map(|(_, a)| *a).collect();
        let vals = if cat.is_empty() {
            own.iter().map(|(_, a)| *a).collect()
        } else {
            cat
        };
        average.insert(m.clone(), vals.iter().sum::<f64>() / vals.len() as f64);
    }
    let mut models: Vec<String> = models.into_iter().collect();
    models.sort_by(|a, b| average[b].total_cmp(&average[a]).then_with(|| a.cmp(b)));
    let mut lines: Vec<ReportLine> = runs
        .iter()
        .map(|r| ReportLine {
            model: r.model.clone(),
            group: r.group.clone(),
            auc: r.auc,
            accuracy: r.confusion.accuracy(),
            macro_f1: r.metrics.macro_f1,
        })
        .collect();
    let pos = |m: &str| models.iter().position(|x| x == m).unwrap_or(usize::MAX);
    lines.sort_by(|a, b| {
        pos(&a.model)
            .cmp(&pos(&b.model))
            .then_with(|| group_order(&a.group, &b.group))
    });
    Ok(Report {
        models,
        groups,
        auc,
        average,
        lines,
    })
}

impl Report {
    pub fn to_text(&self) -> String {
        let gw = self.groups.iter().map(|g| g.len()).max().unwrap_or(0).max(7);
        let cw = self.models.iter().map(|m| m.len()).max().unwrap_or(0).max(6);
        let mut s = String::from("AUC (macro one-vs-rest)\n");
        let _ = write!(s, "{:<gw$}", "Group");
        for m in &self.models {
            let _ = write!(s, "  {m:>cw$}");
        }
        s.push('\n');
        for g in &self.groups {
            let _ = write!(s, "{g:<gw$}");
            for m in &self.models {
                match self.auc.get(&(m.clone(), g.clone())) {
                    Some(a) => {
                        let _ = write!(s, "  {a:>cw$.3}");
                    }
                    None => {
                        let _ = write!(s, "  {:>cw$}", "-");
                    }
                }
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<gw$}", "Average");
        for m in &self.models {
            let _ = write!(s, "  {:>cw$.3}", self.average[m]);
        }
        s.push('\n');
        s
    }

    pub fn to_jsonl(&self) -> String {
        self.lines
            .iter()
            .map(|l| serde_json::to_string(l).expect("report line serializes") + "\n")
            .collect()
    }
}
