//! Timestamped label sequences and the events they describe.
//!
//! A label holds from its timestamp until the next entry's timestamp; the
//! final entry holds until the stream's explicit `end_us`. Labels are
//! samples of a piecewise-constant function of time.

use crate::action::ActionClass;
use serde::{Deserialize, Serialize};

/// An ordered sequence of (timestamp, label) samples with an explicit end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStream {
    pub entries: Vec<(u64, ActionClass)>,
    /// Timestamp at which the final label stops holding.
    pub end_us: u64,
}

/// A complete instance of a non-idle action, delimited by start and end time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub label: ActionClass,
    pub start_us: u64,
    pub end_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelStreamError {
    #[error("empty label stream")]
    Empty,
    #[error("non-monotonic timestamp at entry {index}: {prev} followed by {next}")]
    NonMonotonic { index: usize, prev: u64, next: u64 },
    #[error("stream end {end} does not follow final entry at {last}")]
    EndBeforeLast { end: u64, last: u64 },
}

impl LabelStream {
    pub fn new(entries: Vec<(u64, ActionClass)>, end_us: u64) -> Result<Self, LabelStreamError> {
        let stream = LabelStream { entries, end_us };
        stream.validate()?;
        Ok(stream)
    }

    /// Check strictly increasing timestamps and `end_us` past the last entry.
    pub fn validate(&self) -> Result<(), LabelStreamError> {
        if self.entries.is_empty() {
            return Err(LabelStreamError::Empty);
        }
        for (i, pair) in self.entries.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(LabelStreamError::NonMonotonic {
                    index: i + 1,
                    prev: pair[0].0,
                    next: pair[1].0,
                });
            }
        }
        let last = self.entries.last().unwrap().0;
        if self.end_us <= last {
            return Err(LabelStreamError::EndBeforeLast {
                end: self.end_us,
                last,
            });
        }
        Ok(())
    }

    /// The label holding at time `t_us`, or `None` outside the stream span.
    pub fn label_at(&self, t_us: u64) -> Option<ActionClass> {
        if t_us >= self.end_us || t_us < self.entries.first()?.0 {
            return None;
        }
        let idx = match self.entries.binary_search_by_key(&t_us, |e| e.0) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        Some(self.entries[idx].1)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn labels(&self) -> impl Iterator<Item = ActionClass> + '_ {
        self.entries.iter().map(|e| e.1)
    }
}

/// Extract maximal constant-label non-idle runs as events, in temporal order.
/// Idle runs produce no event.
pub fn extract_events(stream: &LabelStream) -> Result<Vec<Event>, LabelStreamError> {
    stream.validate()?;
    let mut events = Vec::new();
    let mut run_start: Option<(u64, ActionClass)> = None;
    for &(t, label) in &stream.entries {
        match run_start {
            Some((_, current)) if current == label => continue,
            Some((start, current)) => {
                if !current.is_idle() {
                    events.push(Event {
                        label: current,
                        start_us: start,
                        end_us: t,
                    });
                }
                run_start = Some((t, label));
            }
            None => run_start = Some((t, label)),
        }
    }
    if let Some((start, current)) = run_start {
        if !current.is_idle() {
            events.push(Event {
                label: current,
                start_us: start,
                end_us: stream.end_us,
            });
        }
    }
    Ok(events)
}

/// Rasterize a set of events back onto a timestamp grid: each timestamp gets
/// the label of the event containing it, idle elsewhere.
pub fn rasterize_events(events: &[Event], timestamps: &[u64], end_us: u64) -> LabelStream {
    let mut entries = Vec::with_capacity(timestamps.len());
    let mut cursor = 0usize;
    for &t in timestamps {
        while cursor < events.len() && events[cursor].end_us <= t {
            cursor += 1;
        }
        let label = match events.get(cursor) {
            Some(e) if e.start_us <= t && t < e.end_us => e.label,
            _ => ActionClass::Idle,
        };
        entries.push((t, label));
    }
    LabelStream { entries, end_us }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionClass::*;

    fn stream(pairs: &[(u64, ActionClass)], end: u64) -> LabelStream {
        LabelStream::new(pairs.to_vec(), end).unwrap()
    }

    #[test]
    fn all_idle_stream_has_no_events() {
        let s = stream(&[(0, Idle), (10, Idle), (20, Idle)], 30);
        assert!(extract_events(&s).unwrap().is_empty());
    }

    #[test]
    fn run_length_reading() {
        let s = stream(
            &[(0, Idle), (10, Tapping), (40, Idle), (60, Poking), (90, Idle)],
            100,
        );
        let events = extract_events(&s).unwrap();
        assert_eq!(
            events,
            vec![
                Event { label: Tapping, start_us: 10, end_us: 40 },
                Event { label: Poking, start_us: 60, end_us: 90 },
            ]
        );
    }

    #[test]
    fn same_label_runs_split_by_idle_stay_distinct() {
        let s = stream(
            &[(0, Tapping), (10, Tapping), (20, Idle), (30, Tapping)],
            40,
        );
        let events = extract_events(&s).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].end_us, 20);
        assert_eq!(events[1].start_us, 30);
        assert_eq!(events[1].end_us, 40);
    }

    #[test]
    fn final_run_extends_to_stream_end() {
        let s = stream(&[(0, Idle), (5, Rubbing)], 50);
        let events = extract_events(&s).unwrap();
        assert_eq!(events, vec![Event { label: Rubbing, start_us: 5, end_us: 50 }]);
    }

    #[test]
    fn non_monotonic_rejected_with_position() {
        let err = LabelStream::new(vec![(0, Idle), (10, Idle), (10, Tapping)], 20).unwrap_err();
        assert_eq!(
            err,
            LabelStreamError::NonMonotonic { index: 2, prev: 10, next: 10 }
        );
    }

    #[test]
    fn label_at_piecewise_constant_semantics() {
        let s = stream(&[(0, Idle), (10, Tapping)], 20);
        assert_eq!(s.label_at(0), Some(Idle));
        assert_eq!(s.label_at(9), Some(Idle));
        assert_eq!(s.label_at(10), Some(Tapping));
        assert_eq!(s.label_at(19), Some(Tapping));
        assert_eq!(s.label_at(20), None);
    }

    #[test]
    fn extract_then_rasterize_round_trips() {
        let s = stream(
            &[
                (0, Idle),
                (3, Pinching),
                (7, Pinching),
                (11, Idle),
                (15, Shaking),
                (22, Idle),
                (29, Idle),
            ],
            35,
        );
        let events = extract_events(&s).unwrap();
        let ts: Vec<u64> = s.timestamps().collect();
        let back = rasterize_events(&events, &ts, s.end_us);
        assert_eq!(back, s);
    }

    proptest::proptest! {
        #[test]
        fn random_streams_round_trip(
            labels in proptest::collection::vec(0usize..15, 1..60),
            gaps in proptest::collection::vec(1u64..5000, 60),
        ) {
            let mut t = 0u64;
            let entries: Vec<(u64, ActionClass)> = labels
                .iter()
                .zip(&gaps)
                .map(|(&l, &gap)| {
                    let e = (t, ActionClass::from_index(l).unwrap());
                    t += gap;
                    e
                })
                .collect();
            let s = LabelStream::new(entries, t + 1).unwrap();
            let events = extract_events(&s).unwrap();

            // Events are sorted, disjoint, non-idle, and re-rasterizing them
            // onto the original timestamps reproduces the stream.
            for pair in events.windows(2) {
                proptest::prop_assert!(pair[0].end_us <= pair[1].start_us);
            }
            for e in &events {
                proptest::prop_assert!(e.start_us < e.end_us);
                proptest::prop_assert!(!e.label.is_idle());
            }
            let ts: Vec<u64> = s.timestamps().collect();
            let back = rasterize_events(&events, &ts, s.end_us);
            proptest::prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn events_sorted_and_disjoint() {
        let s = stream(
            &[(0, Patting), (8, Idle), (9, Patting), (30, Rubbing), (31, Idle)],
            40,
        );
        let events = extract_events(&s).unwrap();
        for pair in events.windows(2) {
            assert!(pair[0].end_us <= pair[1].start_us);
        }
        for e in &events {
            assert!(e.start_us < e.end_us);
            assert!(!e.label.is_idle());
        }
    }
}
