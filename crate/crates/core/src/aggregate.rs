//! Group-level mean importances, per-band group rankings and model deltas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::importance::PairExplanation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFilter {
    #[default]
    All,
    Genuine,
    Imposter,
}

impl LabelFilter {
    pub fn accepts(self, label: Label) -> bool {
        match self {
            LabelFilter::All => true,
            LabelFilter::Genuine => label == Label::Genuine,
            LabelFilter::Imposter => label == Label::Imposter,
        }
    }
}

impl fmt::Display for LabelFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelFilter::All => "all",
            LabelFilter::Genuine => "genuine",
            LabelFilter::Imposter => "imposter",
        })
    }
}

impl FromStr for LabelFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(LabelFilter::All),
            "genuine" => Ok(LabelFilter::Genuine),
            "imposter" => Ok(LabelFilter::Imposter),
            other => Err(format!("unknown label filter {other:?}, expected all, genuine or imposter")),
        }
    }
}

/// Mean normalized importance per group and band, with population standard
/// deviation and sample counts. Rows follow `groups`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupImportanceMatrix {
    pub groups: Vec<String>,
    pub num_bands: usize,
    pub mean: Vec<Vec<f64>>,
    pub stddev: Vec<Vec<f64>>,
    pub count: Vec<usize>,
}

impl GroupImportanceMatrix {
    pub fn row(&self, group: &str) -> Option<&[f64]> {
        self.groups.iter().position(|g| g == group).map(|i| self.mean[i].as_slice())
    }

    fn check_same_shape(&self, other: &GroupImportanceMatrix) -> Result<()> {
        if self.groups != other.groups {
            return Err(Error::IncompatibleReport(format!(
                "groups differ: {:?} vs {:?}",
                self.groups, other.groups
            )));
        }
        if self.num_bands != other.num_bands {
            return Err(Error::IncompatibleReport(format!(
                "band counts differ: {} vs {}",
                self.num_bands, other.num_bands
            )));
        }
        Ok(())
    }
}

/// `ranks[e][b]` is the 1-based position of group `e` in band `b` when groups
/// are ordered by descending mean importance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub groups: Vec<String>,
    pub num_bands: usize,
    pub ranks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceDelta {
    pub groups: Vec<String>,
    pub num_bands: usize,
    pub delta: Vec<Vec<f64>>,
}

/// Per-group mean of normalized importances over explanations passing
/// `filter`.
///
/// Inputs are reduced in ascending `pair_id` order, so any permutation of the
/// same explanations gives bitwise-identical output. Groups appear in order of
/// their first pair id.
pub fn mean_importance(explanations: &[PairExplanation], filter: LabelFilter) -> Result<GroupImportanceMatrix> {
    let mut selected: Vec<&PairExplanation> = explanations.iter().filter(|e| filter.accepts(e.label)).collect();
    if selected.is_empty() {
        return Err(Error::EmptyInput(format!("no explanations pass label filter {filter}")));
    }
    selected.sort_by_key(|e| e.pair_id);
    if let Some(w) = selected.windows(2).find(|w| w[0].pair_id == w[1].pair_id) {
        return Err(Error::InvalidInput(format!("duplicate pair id {}", w[0].pair_id)));
    }
    let num_bands = selected[0].importance.num_bands();
    if let Some(e) = selected.iter().find(|e| e.importance.num_bands() != num_bands) {
        return Err(Error::InvalidInput(format!(
            "pair {} has {} bands, expected {num_bands}",
            e.pair_id,
            e.importance.num_bands()
        )));
    }

    let mut groups: Vec<String> = Vec::new();
    let mut members: Vec<Vec<&[f64]>> = Vec::new();
    for e in &selected {
        let idx = match groups.iter().position(|g| *g == e.group) {
            Some(i) => i,
            None => {
                groups.push(e.group.clone());
                members.push(Vec::new());
                groups.len() - 1
            }
        };
        members[idx].push(e.importance.normalized());
    }

    let mut mean = Vec::with_capacity(groups.len());
    let mut stddev = Vec::with_capacity(groups.len());
    let mut count = Vec::with_capacity(groups.len());
    for rows in &members {
        let n = rows.len() as f64;
        let mut m = vec![0.0; num_bands];
        for r in rows {
            for (acc, v) in m.iter_mut().zip(r.iter()) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|x| *x /= n);
        let mut var = vec![0.0; num_bands];
        for r in rows {
            for ((acc, v), mu) in var.iter_mut().zip(r.iter()).zip(&m) {
                *acc += (v - mu) * (v - mu);
            }
        }
        stddev.push(var.into_iter().map(|s| (s / n).sqrt()).collect());
        mean.push(m);
        count.push(rows.len());
    }
    Ok(GroupImportanceMatrix {
        groups,
        num_bands,
        mean,
        stddev,
        count,
    })
}

/// Ranks groups within each band by descending mean; ties keep group order.
pub fn rank_groups(matrix: &GroupImportanceMatrix) -> Result<RankTable> {
    let e = matrix.groups.len();
    if e < 2 {
        return Err(Error::InvalidInput(format!("ranking needs at least 2 groups, got {e}")));
    }
    let mut ranks = vec![vec![0usize; matrix.num_bands]; e];
    #[allow(clippy::needless_range_loop)]
    for b in 0..matrix.num_bands {
        let mut order: Vec<usize> = (0..e).collect();
        // Stable sort keeps matrix.groups order among equal means.
        order.sort_by(|&x, &y| matrix.mean[y][b].total_cmp(&matrix.mean[x][b]));
        for (pos, &g) in order.iter().enumerate() {
            ranks[g][b] = pos + 1;
        }
    }
    Ok(RankTable {
        groups: matrix.groups.clone(),
        num_bands: matrix.num_bands,
        ranks,
    })
}

/// `subject.mean - baseline.mean`, elementwise.
///
/// Only group labels and band counts must match; the two matrices need not
/// come from the same pairs.
pub fn importance_delta(subject: &GroupImportanceMatrix, baseline: &GroupImportanceMatrix) -> Result<ImportanceDelta> {
    subject.check_same_shape(baseline)?;
    let delta = subject
        .mean
        .iter()
        .zip(&baseline.mean)
        .map(|(s, b)| s.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    Ok(ImportanceDelta {
        groups: subject.groups.clone(),
        num_bands: subject.num_bands,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::importance::ImportanceVector;

    fn ex(pair_id: u64, group: &str, label: Label, v: &[f64]) -> PairExplanation {
        PairExplanation {
            pair_id,
            group: group.into(),
            label,
            base_similarity: 0.5,
            importance: ImportanceVector::from_raw(v.to_vec()).unwrap(),
        }
    }

    fn matrix(groups: &[&str], mean: Vec<Vec<f64>>) -> GroupImportanceMatrix {
        let num_bands = mean[0].len();
        GroupImportanceMatrix {
            groups: groups.iter().map(|g| g.to_string()).collect(),
            num_bands,
            stddev: vec![vec![0.0; num_bands]; groups.len()],
            count: vec![1; groups.len()],
            mean,
        }
    }

    #[test]
    fn mean_of_two_vectors() {
        let m = mean_importance(
            &[ex(0, "A", Label::Genuine, &[0.2, 0.8]), ex(1, "A", Label::Imposter, &[0.4, 0.6])],
            LabelFilter::All,
        )
        .unwrap();
        assert!((m.mean[0][0] - 0.3).abs() < 1e-15);
        assert!((m.mean[0][1] - 0.7).abs() < 1e-15);
        assert!((m.stddev[0][0] - 0.1).abs() < 1e-15);
        assert_eq!(m.count, vec![2]);
    }

    #[test]
    fn single_explanation_has_zero_spread() {
        let m = mean_importance(&[ex(0, "A", Label::Genuine, &[1.0, 3.0])], LabelFilter::Genuine).unwrap();
        assert_eq!(m.mean[0], vec![0.25, 0.75]);
        assert_eq!(m.stddev[0], vec![0.0, 0.0]);
    }

    #[test]
    fn filter_and_errors() {
        let xs = [ex(0, "A", Label::Imposter, &[1.0, 1.0])];
        assert!(matches!(mean_importance(&xs, LabelFilter::Genuine), Err(Error::EmptyInput(_))));
        let mixed = [ex(0, "A", Label::Genuine, &[1.0, 1.0]), ex(1, "A", Label::Genuine, &[1.0, 1.0, 1.0])];
        assert!(matches!(mean_importance(&mixed, LabelFilter::All), Err(Error::InvalidInput(_))));
        let dup = [ex(0, "A", Label::Genuine, &[1.0]), ex(0, "B", Label::Genuine, &[1.0])];
        assert!(mean_importance(&dup, LabelFilter::All).is_err());
    }

    #[test]
    fn groups_follow_first_pair_id() {
        let xs = [
            ex(5, "B", Label::Genuine, &[1.0]),
            ex(2, "C", Label::Genuine, &[1.0]),
            ex(9, "A", Label::Genuine, &[1.0]),
        ];
        assert_eq!(mean_importance(&xs, LabelFilter::All).unwrap().groups, ["C", "B", "A"]);
    }

    #[test]
    fn ranking_examples() {
        let t = rank_groups(&matrix(&["A", "B", "C"], vec![vec![0.5], vec![0.3], vec![0.2]])).unwrap();
        assert_eq!(t.ranks, vec![vec![1], vec![2], vec![3]]);
        let tie = rank_groups(&matrix(&["A", "B"], vec![vec![0.4], vec![0.4]])).unwrap();
        assert_eq!(tie.ranks, vec![vec![1], vec![2]]);
        assert!(rank_groups(&matrix(&["A"], vec![vec![1.0]])).is_err());
    }

    #[test]
    fn delta_examples() {
        let a = matrix(&["A"], vec![vec![0.6, 0.4]]);
        let b = matrix(&["A"], vec![vec![0.5, 0.5]]);
        let d = importance_delta(&a, &b).unwrap();
        assert!((d.delta[0][0] - 0.1).abs() < 1e-15 && (d.delta[0][1] + 0.1).abs() < 1e-15);
        assert!(importance_delta(&a, &a).unwrap().delta[0].iter().all(|&x| x == 0.0));
        let other = matrix(&["B"], vec![vec![0.5, 0.5]]);
        assert!(matches!(importance_delta(&a, &other), Err(Error::IncompatibleReport(_))));
        let wider = matrix(&["A"], vec![vec![0.5, 0.25, 0.25]]);
        assert!(matches!(importance_delta(&a, &wider), Err(Error::IncompatibleReport(_))));
    }

    #[test]
    fn label_filter_text() {
        for f in [LabelFilter::All, LabelFilter::Genuine, LabelFilter::Imposter] {
            assert_eq!(f.to_string().parse::<LabelFilter>().unwrap(), f);
        }
        assert!("both".parse::<LabelFilter>().is_err());
    }
}
