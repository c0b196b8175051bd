//! The 15-way hand-activity taxonomy and its contact attributes.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The action classes recognized by the system. `Idle` is the designated
/// NULL class: it carries no contact attributes and produces no events
/// in event-based scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionClass {
    Pinching,
    Pulling,
    Pushing,
    Rubbing,
    Patting,
    Tapping,
    Scratching,
    Lingering,
    Massaging,
    Squeezing,
    Trembling,
    Shaking,
    Stroking,
    Poking,
    Idle,
}

/// Qualitative contact area of an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactArea {
    Small,
    Medium,
    Large,
}

/// Qualitative level shared by pressure intensity and frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Low,
    Medium,
    High,
}

/// The (contact area, pressure intensity, frequency) triple attached to
/// every non-idle class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactAttributes {
    pub contact_area: ContactArea,
    pub pressure_intensity: Level,
    pub frequency: Level,
}

impl ActionClass {
    /// All 15 classes in taxonomy order; `Idle` last.
    pub const ALL: [ActionClass; 15] = [
        ActionClass::Pinching,
        ActionClass::Pulling,
        ActionClass::Pushing,
        ActionClass::Rubbing,
        ActionClass::Patting,
        ActionClass::Tapping,
        ActionClass::Scratching,
        ActionClass::Lingering,
        ActionClass::Massaging,
        ActionClass::Squeezing,
        ActionClass::Trembling,
        ActionClass::Shaking,
        ActionClass::Stroking,
        ActionClass::Poking,
        ActionClass::Idle,
    ];

    pub const COUNT: usize = 15;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ActionClass> {
        ActionClass::ALL.get(i).copied()
    }

    pub fn is_idle(self) -> bool {
        self == ActionClass::Idle
    }

    /// The lowercase serialized name used in every file format and report.
    pub fn name(self) -> &'static str {
        match self {
            ActionClass::Pinching => "pinching",
            ActionClass::Pulling => "pulling",
            ActionClass::Pushing => "pushing",
            ActionClass::Rubbing => "rubbing",
            ActionClass::Patting => "patting",
            ActionClass::Tapping => "tapping",
            ActionClass::Scratching => "scratching",
            ActionClass::Lingering => "lingering",
            ActionClass::Massaging => "massaging",
            ActionClass::Squeezing => "squeezing",
            ActionClass::Trembling => "trembling",
            ActionClass::Shaking => "shaking",
            ActionClass::Stroking => "stroking",
            ActionClass::Poking => "poking",
            ActionClass::Idle => "idle",
        }
    }
}

impl fmt::Display for ActionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action class `{0}`")]
pub struct UnknownActionClass(pub String);

impl FromStr for ActionClass {
    type Err = UnknownActionClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionClass::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownActionClass(s.to_string()))
    }
}

/// The attribute triple for a class, or `None` for `Idle` (no contact occurs).
pub fn action_attributes(class: ActionClass) -> Option<ContactAttributes> {
    use ActionClass::*;
    use ContactArea::{Large as L, Medium as M, Small as S};
    use Level::{High, Low, Medium as Mid};

    let triple = |a, p, f| {
        Some(ContactAttributes {
            contact_area: a,
            pressure_intensity: p,
            frequency: f,
        })
    };
    match class {
        Pinching => triple(S, High, Mid),
        Pulling => triple(L, High, Low),
        Pushing => triple(L, High, Low),
        Rubbing => triple(M, Mid, High),
        Patting => triple(L, Mid, High),
        Tapping => triple(M, Mid, High),
        Scratching => triple(S, Low, High),
        Lingering => triple(M, Low, Low),
        Massaging => triple(L, Mid, Mid),
        Squeezing => triple(L, High, Low),
        Trembling => triple(S, Low, Mid),
        Shaking => triple(L, Mid, High),
        Stroking => triple(M, Low, Mid),
        Poking => triple(S, Mid, Mid),
        Idle => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_distinct_classes() {
        let mut names: Vec<_> = ActionClass::ALL.iter().map(|c| c.name()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 15);
    }

    #[test]
    fn pinching_attributes() {
        let a = action_attributes(ActionClass::Pinching).unwrap();
        assert_eq!(a.contact_area, ContactArea::Small);
        assert_eq!(a.pressure_intensity, Level::High);
        assert_eq!(a.frequency, Level::Medium);
    }

    #[test]
    fn squeezing_attributes() {
        let a = action_attributes(ActionClass::Squeezing).unwrap();
        assert_eq!(a.contact_area, ContactArea::Large);
        assert_eq!(a.pressure_intensity, Level::High);
        assert_eq!(a.frequency, Level::Low);
    }

    #[test]
    fn idle_has_no_attributes() {
        assert!(action_attributes(ActionClass::Idle).is_none());
    }

    #[test]
    fn attributes_total_for_non_idle() {
        for c in ActionClass::ALL {
            assert_eq!(action_attributes(c).is_some(), !c.is_idle());
        }
    }

    #[test]
    fn name_round_trip() {
        for c in ActionClass::ALL {
            assert_eq!(c.name().parse::<ActionClass>().unwrap(), c);
        }
        assert!("grabbing".parse::<ActionClass>().is_err());
    }

    #[test]
    fn serde_uses_lowercase_names() {
        let json = serde_json::to_string(&ActionClass::Pinching).unwrap();
        assert_eq!(json, "\"pinching\"");
        let back: ActionClass = serde_json::from_str("\"idle\"").unwrap();
        assert_eq!(back, ActionClass::Idle);
    }

    #[test]
    fn index_round_trip() {
        for (i, c) in ActionClass::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(ActionClass::from_index(i), Some(*c));
        }
        assert_eq!(ActionClass::from_index(15), None);
    }
}
