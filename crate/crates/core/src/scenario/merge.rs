use std::collections::BTreeMap;

use super::{Level, RatingTrace, ScenarioLog};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelRow<'a> {
    pub frame: usize,
    pub rater_id: &'a str,
    pub level: Level,
}

/// Dense per-frame labels, one column per rater.
///
/// A column entry is `None` for frames before that rater's first keystroke.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub scenario_name: String,
    pub frame_count: usize,
    pub columns: BTreeMap<String, Vec<Option<Level>>>,
}

impl LabeledDataset {
    /// Labeled rows in (rater, frame) order; unlabeled frames are skipped.
    pub fn rows(&self) -> impl Iterator<Item = LabelRow<'_>> {
        self.columns.iter().flat_map(|(rater, col)| {
            col.iter().enumerate().filter_map(move |(frame, level)| {
                level.map(|level| LabelRow {
                    frame,
                    rater_id: rater.as_str(),
                    level,
                })
            })
        })
    }

    pub fn column(&self, rater_id: &str) -> Option<&[Option<Level>]> {
        self.columns.get(rater_id).map(Vec::as_slice)
    }
}

/// Densifies sparse keystroke ratings: each rating holds until the rater's
/// next rating.
pub fn merge_ratings(log: &ScenarioLog, traces: &[RatingTrace]) -> Result<LabeledDataset> {
    let mut columns = BTreeMap::new();
    for trace in traces {
        trace.check_against(log)?;
        let mut col = vec![None; log.len()];
        let ratings = trace.ratings();
        for (i, r) in ratings.iter().enumerate() {
            let end = ratings.get(i + 1).map_or(log.len(), |next| next.frame);
            col[r.frame..end].fill(Some(r.level));
        }
        if columns.insert(trace.rater_id().to_string(), col).is_some() {
            return Err(Error::Mismatch(format!(
                "rater {} has more than one trace for scenario {}",
                trace.rater_id(),
                log.name()
            )));
        }
    }
    Ok(LabeledDataset {
        scenario_name: log.name().to_string(),
        frame_count: log.len(),
        columns,
    })
}
