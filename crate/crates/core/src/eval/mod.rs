//! Frame-by-frame and event-based scoring of a prediction stream against
//! ground truth, with Table-style reports.
//!
//! The timeline is cut at every boundary of either stream into maximal
//! segments with a constant (gt, pred) pair. Idle is the NULL class:
//! segments where ground truth is non-idle score on the positive side
//! (TP / underfill / fragmentation / deletion), segments where ground truth
//! is idle score on the negative side (TN / overfill / insertion / merge).
//! A predicted event's negative-side category depends on the distinct
//! ground-truth events it overlaps: two or more make its idle segments
//! merges, exactly one makes them overfills, none makes them insertions.

use crate::action::ActionClass;
use crate::labels::{extract_events, Event, LabelStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Tp,
    Tn,
    Insertion,
    Deletion,
    Merge,
    Fragmentation,
    OverfillStart,
    OverfillEnd,
    UnderfillStart,
    UnderfillEnd,
}

impl Category {
    /// Categories legal where ground truth is non-idle.
    pub fn is_positive_side(self) -> bool {
        matches!(
            self,
            Category::Tp
                | Category::UnderfillStart
                | Category::UnderfillEnd
                | Category::Fragmentation
                | Category::Deletion
        )
    }
}

/// One scored timeline segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub start_us: u64,
    pub end_us: u64,
    pub gt: ActionClass,
    pub pred: ActionClass,
    pub category: Category,
}

impl SegmentScore {
    pub fn duration_us(&self) -> u64 {
        self.end_us - self.start_us
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("label streams not on the same grid: {details}")]
    GridMismatch { details: String },
    #[error("invalid label stream: {0}")]
    Labels(#[from] crate::labels::LabelStreamError),
}

/// Frame accuracy: matching frames over total, globally and per ground-truth
/// class (classes absent from the ground truth report no value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAccuracy {
    pub global: f64,
    pub per_class: Vec<(ActionClass, Option<f64>)>,
    pub total_frames: usize,
}

/// Require identical evaluation grids (timestamps and stream end).
pub fn ensure_same_grid(gt: &LabelStream, pred: &LabelStream) -> Result<(), EvalError> {
    gt.validate()?;
    pred.validate()?;
    if gt.end_us != pred.end_us {
        return Err(EvalError::GridMismatch {
            details: format!("stream ends differ: {} vs {}", gt.end_us, pred.end_us),
        });
    }
    if gt.entries.len() != pred.entries.len()
        || gt
            .timestamps()
            .zip(pred.timestamps())
            .any(|(a, b)| a != b)
    {
        let gt_ts: std::collections::BTreeSet<u64> = gt.timestamps().collect();
        let pred_ts: std::collections::BTreeSet<u64> = pred.timestamps().collect();
        let missing_in_pred: Vec<u64> = gt_ts.difference(&pred_ts).copied().take(8).collect();
        let missing_in_gt: Vec<u64> = pred_ts.difference(&gt_ts).copied().take(8).collect();
        return Err(EvalError::GridMismatch {
            details: format!(
                "missing in prediction: {missing_in_pred:?}; missing in ground truth: {missing_in_gt:?}"
            ),
        });
    }
    Ok(())
}

/// Global and per-class frame accuracy over a shared grid.
pub fn frame_accuracy(gt: &LabelStream, pred: &LabelStream) -> Result<FrameAccuracy, EvalError> {
    ensure_same_grid(gt, pred)?;
    let total = gt.entries.len();
    let mut global_hits = 0usize;
    let mut class_total = [0usize; ActionClass::COUNT];
    let mut class_hits = [0usize; ActionClass::COUNT];
    for ((_, g), (_, p)) in gt.entries.iter().zip(&pred.entries) {
        class_total[g.index()] += 1;
        if g == p {
            global_hits += 1;
            class_hits[g.index()] += 1;
        }
    }
    Ok(FrameAccuracy {
        global: global_hits as f64 / total as f64,
        per_class: ActionClass::ALL
            .iter()
            .map(|&c| {
                let n = class_total[c.index()];
                let acc = (n > 0).then(|| class_hits[c.index()] as f64 / n as f64);
                (c, acc)
            })
            .collect(),
        total_frames: total,
    })
}

fn overlaps(event: &Event, start: u64, end: u64) -> bool {
    event.start_us < end && start < event.end_us
}

/// Cut the timeline into segments and categorize each one.
pub fn score_segments(
    gt: &LabelStream,
    pred: &LabelStream,
) -> Result<Vec<SegmentScore>, EvalError> {
    ensure_same_grid(gt, pred)?;
    let end_us = gt.end_us;

    // Maximal constant (gt, pred) segments.
    let mut segments: Vec<(u64, u64, ActionClass, ActionClass)> = Vec::new();
    for (i, ((t, g), (_, p))) in gt.entries.iter().zip(&pred.entries).enumerate() {
        let next = gt
            .entries
            .get(i + 1)
            .map(|(t, _)| *t)
            .unwrap_or(end_us);
        match segments.last_mut() {
            Some((_, seg_end, sg, sp)) if *sg == *g && *sp == *p => *seg_end = next,
            _ => segments.push((*t, next, *g, *p)),
        }
    }

    let gt_events = extract_events(gt)?;
    let pred_events = extract_events(pred)?;

    // TP extents per gt event: first and last TP time inside the event.
    let tp_extent: Vec<Option<(u64, u64)>> = gt_events
        .iter()
        .map(|e| {
            let mut extent: Option<(u64, u64)> = None;
            for &(s, t, g, p) in &segments {
                if g == p && !g.is_idle() && overlaps(e, s, t) {
                    extent = Some(match extent {
                        None => (s, t),
                        Some((lo, hi)) => (lo.min(s), hi.max(t)),
                    });
                }
            }
            extent
        })
        .collect();

    // Ground-truth events overlapped by each predicted event.
    let related_count: Vec<usize> = pred_events
        .iter()
        .map(|p| {
            gt_events
                .iter()
                .filter(|g| overlaps(g, p.start_us, p.end_us))
                .count()
        })
        .collect();

    let gt_event_at = |t: u64| gt_events.iter().position(|e| e.start_us <= t && t < e.end_us);
    let pred_event_at =
        |t: u64| pred_events.iter().position(|e| e.start_us <= t && t < e.end_us);

    let mut out = Vec::with_capacity(segments.len());
    for &(start, end, g, p) in &segments {
        let category = if !g.is_idle() {
            if p == g {
                Category::Tp
            } else {
                let e = gt_event_at(start).expect("non-idle segment lies in a gt event");
                match tp_extent[e] {
                    None => Category::Deletion,
                    Some((first_tp, last_tp)) => {
                        if end <= first_tp {
                            Category::UnderfillStart
                        } else if start >= last_tp {
                            Category::UnderfillEnd
                        } else {
                            Category::Fragmentation
                        }
                    }
                }
            }
        } else if p.is_idle() {
            Category::Tn
        } else {
            let pe = pred_event_at(start).expect("non-idle prediction lies in a pred event");
            match related_count[pe] {
                0 => Category::Insertion,
                1 => {
                    let related = gt_events
                        .iter()
                        .find(|gev| overlaps(gev, pred_events[pe].start_us, pred_events[pe].end_us))
                        .expect("counted above");
                    if end <= related.start_us {
                        Category::OverfillStart
                    } else {
                        Category::OverfillEnd
                    }
                }
                _ => Category::Merge,
            }
        };
        out.push(SegmentScore {
            start_us: start,
            end_us: end,
            gt: g,
            pred: p,
            category,
        });
    }
    Ok(out)
}

/// Duration-weighted percentages for one side of the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveSide {
    pub tp: f64,
    pub underfill_start: f64,
    pub underfill_end: f64,
    pub fragmentation: f64,
    pub deletion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeSide {
    pub tn: f64,
    pub overfill_start: f64,
    pub overfill_end: f64,
    pub insertion: f64,
    pub merge: f64,
}

/// Event-based report: both sides (absent when that side has zero duration)
/// plus frame accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub positive: Option<PositiveSide>,
    pub negative: Option<NegativeSide>,
    pub frame: FrameAccuracy,
}

/// Aggregate segment scores into duration-weighted percentages. The positive
/// side is normalized by total non-idle ground-truth duration, the negative
/// side by total idle duration.
pub fn summarize(scores: &[SegmentScore], gt: &LabelStream, pred: &LabelStream) -> Result<EventReport, EvalError> {
    let frame = frame_accuracy(gt, pred)?;
    let mut pos_total = 0u64;
    let mut neg_total = 0u64;
    let mut by_category = std::collections::HashMap::new();
    for s in scores {
        let d = s.duration_us();
        if s.gt.is_idle() {
            neg_total += d;
        } else {
            pos_total += d;
        }
        *by_category.entry(s.category).or_insert(0u64) += d;
    }
    let pct = |cat: Category, total: u64| {
        100.0 * by_category.get(&cat).copied().unwrap_or(0) as f64 / total as f64
    };
    let positive = (pos_total > 0).then(|| PositiveSide {
        tp: pct(Category::Tp, pos_total),
        underfill_start: pct(Category::UnderfillStart, pos_total),
        underfill_end: pct(Category::UnderfillEnd, pos_total),
        fragmentation: pct(Category::Fragmentation, pos_total),
        deletion: pct(Category::Deletion, pos_total),
    });
    let negative = (neg_total > 0).then(|| NegativeSide {
        tn: pct(Category::Tn, neg_total),
        overfill_start: pct(Category::OverfillStart, neg_total),
        overfill_end: pct(Category::OverfillEnd, neg_total),
        insertion: pct(Category::Insertion, neg_total),
        merge: pct(Category::Merge, neg_total),
    });
    Ok(EventReport {
        positive,
        negative,
        frame,
    })
}

/// CSV report with the standard column names, two stacked sections.
pub fn report_csv(report: &EventReport, model: &str) -> String {
    let mut out = String::new();
    out.push_str("Model,True Pos. (%),Underfill Start,Underfill End,Fragmentation,Deletion\n");
    if let Some(p) = &report.positive {
        out.push_str(&format!(
            "{model},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
            p.tp, p.underfill_start, p.underfill_end, p.fragmentation, p.deletion
        ));
    } else {
        out.push_str(&format!("{model},,,,,\n"));
    }
    out.push_str("Model,True Neg. (%),Overfill Start,Overfill End,Insertion,Merge\n");
    if let Some(n) = &report.negative {
        out.push_str(&format!(
            "{model},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
            n.tn, n.overfill_start, n.overfill_end, n.insertion, n.merge
        ));
    } else {
        out.push_str(&format!("{model},,,,,\n"));
    }
    out
}

/// Fixed-width text rendering of the same table.
pub fn report_text(report: &EventReport, model: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>14} {:>16} {:>14} {:>14} {:>10}\n",
        "Model", "True Pos. (%)", "Underfill Start", "Underfill End", "Fragmentation", "Deletion"
    ));
    if let Some(p) = &report.positive {
        out.push_str(&format!(
            "{:<12} {:>14.2} {:>16.2} {:>14.2} {:>14.2} {:>10.2}\n",
            model, p.tp, p.underfill_start, p.underfill_end, p.fragmentation, p.deletion
        ));
    }
    out.push_str(&format!(
        "{:<12} {:>14} {:>16} {:>14} {:>14} {:>10}\n",
        "Model", "True Neg. (%)", "Overfill Start", "Overfill End", "Insertion", "Merge"
    ));
    if let Some(n) = &report.negative {
        out.push_str(&format!(
            "{:<12} {:>14.2} {:>16.2} {:>14.2} {:>14.2} {:>10.2}\n",
            model, n.tn, n.overfill_start, n.overfill_end, n.insertion, n.merge
        ));
    }
    out.push_str(&format!(
        "frame accuracy: {:.4} over {} frames\n",
        report.frame.global, report.frame.total_frames
    ));
    out
}

/// Per-segment JSONL lines for timeline plots.
pub fn segments_jsonl(scores: &[SegmentScore]) -> String {
    let mut out = String::new();
    for s in scores {
        out.push_str(&serde_json::to_string(s).expect("segment serializes"));
        out.push('\n');
    }
    out
}

/// Window-level confusion matrix: `counts[gt][pred]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; ActionClass::COUNT]; ActionClass::COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ActionClass, ActionClass)>) -> Self {
        let mut counts = [[0usize; ActionClass::COUNT]; ActionClass::COUNT];
        for (gt, pred) in pairs {
            counts[gt.index()][pred.index()] += 1;
        }
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let hits: usize = (0..ActionClass::COUNT).map(|i| self.counts[i][i]).sum();
        hits as f64 / self.total().max(1) as f64
    }

    /// Macro F1 over classes with ground-truth support.
    pub fn macro_f1(&self) -> f64 {
        let mut f1s = Vec::new();
        for c in 0..ActionClass::COUNT {
            let support: usize = self.counts[c].iter().sum();
            if support == 0 {
                continue;
            }
            let tp = self.counts[c][c];
            let predicted: usize = (0..ActionClass::COUNT).map(|g| self.counts[g][c]).sum();
            let precision = if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 };
            let recall = tp as f64 / support as f64;
            f1s.push(if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            });
        }
        if f1s.is_empty() {
            0.0
        } else {
            f1s.iter().sum::<f64>() / f1s.len() as f64
        }
    }

    /// CSV with a header row of predicted classes and one row per gt class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gt\\pred");
        for c in ActionClass::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for g in ActionClass::ALL {
            out.push_str(g.name());
            for p in ActionClass::ALL {
                out.push_str(&format!(",{}", self.counts[g.index()][p.index()]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionClass::{Idle, Pinching as A, Pulling as B};

    /// Uniform 10-us grid stream from per-frame labels.
    fn stream(labels: &[ActionClass]) -> LabelStream {
        LabelStream::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as u64 * 10, c))
                .collect(),
            labels.len() as u64 * 10,
        )
        .unwrap()
    }

    /// Labels from compact run-length notation.
    fn runs(spec: &[(ActionClass, usize)]) -> Vec<ActionClass> {
        spec.iter()
            .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
            .collect()
    }

    fn cat_at(scores: &[SegmentScore], t: u64) -> Category {
        scores
            .iter()
            .find(|s| s.start_us <= t && t < s.end_us)
            .unwrap()
            .category
    }

    #[test]
    fn perfect_prediction_scores_only_tp_tn() {
        let gt = stream(&runs(&[(Idle, 3), (A, 4), (Idle, 3)]));
        let scores = score_segments(&gt, &gt).unwrap();
        assert!(scores
            .iter()
            .all(|s| matches!(s.category, Category::Tp | Category::Tn)));
        let report = summarize(&scores, &gt, &gt).unwrap();
        let p = report.positive.unwrap();
        let n = report.negative.unwrap();
        assert_eq!(p.tp, 100.0);
        assert_eq!(n.tn, 100.0);
        assert_eq!(report.frame.global, 1.0);
    }

    #[test]
    fn worked_example_underfill_start_overfill_end() {
        // gt: Idle[0,10) A[10,30) Idle[30,50)
        // pred: Idle[0,12) A[12,35) Idle[35,50)
        let gt = LabelStream::new(vec![(0, Idle), (10, A), (30, Idle)], 50).unwrap();
        // Shared grid requires identical timestamps; refine both onto the cut
        // points {0, 10, 12, 30, 35}.
        let grid = [0u64, 10, 12, 30, 35];
        let gt = LabelStream::new(
            grid.iter().map(|&t| (t, gt.label_at(t).unwrap())).collect(),
            50,
        )
        .unwrap();
        let pred_labels = [Idle, Idle, A, A, Idle];
        let pred = LabelStream::new(
            grid.iter().copied().zip(pred_labels).collect(),
            50,
        )
        .unwrap();
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(cat_at(&scores, 0), Category::Tn);
        assert_eq!(cat_at(&scores, 10), Category::UnderfillStart);
        assert_eq!(cat_at(&scores, 12), Category::Tp);
        assert_eq!(cat_at(&scores, 30), Category::OverfillEnd);
        assert_eq!(cat_at(&scores, 35), Category::Tn);
        // Exact intervals.
        let uf = scores.iter().find(|s| s.category == Category::UnderfillStart).unwrap();
        assert_eq!((uf.start_us, uf.end_us), (10, 12));
        let of = scores.iter().find(|s| s.category == Category::OverfillEnd).unwrap();
        assert_eq!((of.start_us, of.end_us), (30, 35));
    }

    #[test]
    fn worked_example_fragmentation() {
        // gt: A[10,30); pred: A[10,18) Idle[18,22) A[22,30).
        let grid = [0u64, 10, 18, 22, 30];
        let gt_labels = [Idle, A, A, A, Idle];
        let pred_labels = [Idle, A, Idle, A, Idle];
        let gt = LabelStream::new(grid.iter().copied().zip(gt_labels).collect(), 40).unwrap();
        let pred = LabelStream::new(grid.iter().copied().zip(pred_labels).collect(), 40).unwrap();
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(cat_at(&scores, 10), Category::Tp);
        assert_eq!(cat_at(&scores, 18), Category::Fragmentation);
        assert_eq!(cat_at(&scores, 22), Category::Tp);
    }

    #[test]
    fn worked_example_merge_and_deletion_side() {
        // gt: A[10,20) Idle[20,25) B[25,35); pred: A[10,35).
        let grid = [0u64, 10, 20, 25, 35];
        let gt_labels = [Idle, A, Idle, B, Idle];
        let pred_labels = [Idle, A, A, A, Idle];
        let gt = LabelStream::new(grid.iter().copied().zip(gt_labels).collect(), 45).unwrap();
        let pred = LabelStream::new(grid.iter().copied().zip(pred_labels).collect(), 45).unwrap();
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(cat_at(&scores, 10), Category::Tp);
        assert_eq!(cat_at(&scores, 20), Category::Merge);
        // gt B with pred A: B's event has no TP anywhere, so deletion.
        assert_eq!(cat_at(&scores, 25), Category::Deletion);
    }

    #[test]
    fn all_idle_prediction_scores_deletions() {
        let gt = stream(&runs(&[(Idle, 2), (A, 5), (Idle, 3)]));
        let pred = stream(&runs(&[(Idle, 10)]));
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(cat_at(&scores, 20), Category::Deletion);
        let report = summarize(&scores, &gt, &pred).unwrap();
        assert_eq!(report.positive.unwrap().deletion, 100.0);
        assert_eq!(report.negative.unwrap().tn, 100.0);
    }

    #[test]
    fn isolated_false_positive_is_insertion() {
        let gt = stream(&runs(&[(Idle, 10)]));
        let pred = stream(&runs(&[(Idle, 3), (B, 4), (Idle, 3)]));
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(cat_at(&scores, 40), Category::Insertion);
        // Positive side absent: no non-idle ground truth.
        let report = summarize(&scores, &gt, &pred).unwrap();
        assert!(report.positive.is_none());
    }

    #[test]
    fn segments_partition_the_interval() {
        let gt = stream(&runs(&[(Idle, 3), (A, 4), (Idle, 2), (B, 5), (Idle, 1)]));
        let pred = stream(&runs(&[(Idle, 2), (A, 3), (Idle, 4), (B, 4), (Idle, 2)]));
        let scores = score_segments(&gt, &pred).unwrap();
        assert_eq!(scores.first().unwrap().start_us, 0);
        assert_eq!(scores.last().unwrap().end_us, gt.end_us);
        for pair in scores.windows(2) {
            assert_eq!(pair[0].end_us, pair[1].start_us);
        }
        // Side constraints hold segment by segment.
        for s in &scores {
            assert_eq!(s.category.is_positive_side(), !s.gt.is_idle());
        }
    }

    #[test]
    fn sides_sum_to_one_hundred() {
        let gt = stream(&runs(&[(Idle, 4), (A, 6), (Idle, 3), (B, 2), (Idle, 5)]));
        let pred = stream(&runs(&[(A, 2), (Idle, 3), (A, 8), (B, 1), (Idle, 6)]));
        let scores = score_segments(&gt, &pred).unwrap();
        let report = summarize(&scores, &gt, &pred).unwrap();
        let p = report.positive.unwrap();
        let n = report.negative.unwrap();
        let pos_sum = p.tp + p.underfill_start + p.underfill_end + p.fragmentation + p.deletion;
        let neg_sum = n.tn + n.overfill_start + n.overfill_end + n.insertion + n.merge;
        assert!((pos_sum - 100.0).abs() < 0.01, "positive side sums to {pos_sum}");
        assert!((neg_sum - 100.0).abs() < 0.01, "negative side sums to {neg_sum}");
    }

    #[test]
    fn constructed_deletion_share_is_exact() {
        // One tenth of positive duration deleted: gt A over 10 frames in two
        // events (9 TP-covered, 1 missed entirely).
        let gt = stream(&runs(&[(A, 9), (Idle, 5), (B, 1), (Idle, 5)]));
        let pred = stream(&runs(&[(A, 9), (Idle, 11)]));
        let scores = score_segments(&gt, &pred).unwrap();
        let report = summarize(&scores, &gt, &pred).unwrap();
        let p = report.positive.unwrap();
        assert!((p.deletion - 10.0).abs() < 1e-9, "deletion {}", p.deletion);
        assert!((p.tp - 90.0).abs() < 1e-9);
    }

    #[test]
    fn frame_accuracy_counting_oracle() {
        // Prediction all idle, ground truth 40% idle.
        let gt = stream(&runs(&[(A, 6), (Idle, 4)]));
        let pred = stream(&runs(&[(Idle, 10)]));
        let acc = frame_accuracy(&gt, &pred).unwrap();
        assert!((acc.global - 0.4).abs() < 1e-12);
        let idle_acc = acc.per_class.iter().find(|(c, _)| c.is_idle()).unwrap().1;
        assert_eq!(idle_acc, Some(1.0));
        let a_acc = acc.per_class.iter().find(|(c, _)| *c == A).unwrap().1;
        assert_eq!(a_acc, Some(0.0));

        // One mismatch in a hundred.
        let mut labels = runs(&[(A, 100)]);
        let gt = stream(&labels);
        labels[57] = B;
        let pred = stream(&labels);
        let acc = frame_accuracy(&gt, &pred).unwrap();
        assert!((acc.global - 0.99).abs() < 1e-12);
    }

    #[test]
    fn frame_accuracy_matches_tp_tn_share_on_uniform_grid() {
        let gt = stream(&runs(&[(Idle, 7), (A, 13), (Idle, 4), (B, 6), (Idle, 10)]));
        let pred = stream(&runs(&[(Idle, 9), (A, 9), (B, 3), (Idle, 8), (B, 7), (Idle, 4)]));
        let scores = score_segments(&gt, &pred).unwrap();
        let acc = frame_accuracy(&gt, &pred).unwrap();
        let match_duration: u64 = scores
            .iter()
            .filter(|s| matches!(s.category, Category::Tp | Category::Tn))
            .map(|s| s.duration_us())
            .sum();
        let share = match_duration as f64 / gt.end_us as f64;
        assert!((acc.global - share).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_lists_missing_timestamps() {
        let gt = stream(&runs(&[(A, 5)]));
        let pred = LabelStream::new(vec![(0, A), (10, A), (25, A)], 50).unwrap();
        let err = frame_accuracy(&gt, &pred).unwrap_err();
        match err {
            EvalError::GridMismatch { details } => {
                assert!(details.contains("20"), "{details}");
                assert!(details.contains("25"), "{details}");
            }
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }

    #[test]
    fn macro_f1_closed_form_three_class() {
        // gt: 4xA, 4xB, 2xIdle; predictions chosen for a hand-computable F1.
        use ActionClass::Idle as I;
        let pairs = vec![
            (A, A),
            (A, A),
            (A, B),
            (A, I),
            (B, B),
            (B, B),
            (B, B),
            (B, A),
            (I, I),
            (I, A),
        ];
        let m = ConfusionMatrix::from_pairs(pairs);
        // Per class: A: tp=2, pred=4, support=4 -> p=0.5, r=0.5, f1=0.5
        //            B: tp=3, pred=4, support=4 -> p=0.75, r=0.75, f1=0.75
        //            I: tp=1, pred=2, support=2 -> p=0.5, r=0.5, f1=0.5
        let expected = (0.5 + 0.75 + 0.5) / 3.0;
        assert!((m.macro_f1() - expected).abs() < 1e-12);
        assert!((m.accuracy() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let pairs = vec![(A, A), (A, B), (A, A), (B, B), (B, B)];
        let m = ConfusionMatrix::from_pairs(pairs);
        let row_sum: usize = m.counts[A.index()].iter().sum();
        assert_eq!(row_sum, 3);
        let row_sum_b: usize = m.counts[B.index()].iter().sum();
        assert_eq!(row_sum_b, 2);
        assert_eq!(m.total(), 5);
        let csv = m.to_csv();
        assert!(csv.starts_with("gt\\pred,pinching,"));
        assert_eq!(csv.lines().count(), 16);
    }

    #[test]
    fn csv_report_has_table_column_names() {
        let gt = stream(&runs(&[(Idle, 3), (A, 4), (Idle, 3)]));
        let scores = score_segments(&gt, &gt).unwrap();
        let report = summarize(&scores, &gt, &gt).unwrap();
        let csv = report_csv(&report, "multimodal");
        assert!(csv.contains("True Pos. (%),Underfill Start,Underfill End,Fragmentation,Deletion"));
        assert!(csv.contains("True Neg. (%),Overfill Start,Overfill End,Insertion,Merge"));
        assert!(csv.contains("multimodal,100.00,0.00,0.00,0.00,0.00"));
    }
}
