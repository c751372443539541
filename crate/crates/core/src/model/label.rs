use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six WISDM activities. Ids follow alphabetical order of the names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityLabel {
    Downstairs,
    Jogging,
    Sitting,
    Standing,
    Upstairs,
    Walking,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 6] = [
        ActivityLabel::Downstairs,
        ActivityLabel::Jogging,
        ActivityLabel::Sitting,
        ActivityLabel::Standing,
        ActivityLabel::Upstairs,
        ActivityLabel::Walking,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Downstairs => "Downstairs",
            ActivityLabel::Jogging => "Jogging",
            ActivityLabel::Sitting => "Sitting",
            ActivityLabel::Standing => "Standing",
            ActivityLabel::Upstairs => "Upstairs",
            ActivityLabel::Walking => "Walking",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLabel {
    type Err = ();

    /// Case-insensitive match on the activity name.
    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_alphabetical_bijection() {
        let mut names: alloc::vec::Vec<_> = ActivityLabel::ALL.iter().map(|a| a.name()).collect();
        let sorted = {
            let mut s = names.clone();
            s.sort();
            s
        };
        assert_eq!(names, sorted);
        for (i, a) in ActivityLabel::ALL.iter().enumerate() {
            assert_eq!(a.id(), i);
            assert_eq!(ActivityLabel::from_id(i), Some(*a));
            assert_eq!(a.name().parse::<ActivityLabel>(), Ok(*a));
        }
        assert_eq!(ActivityLabel::from_id(6), None);
        assert_eq!(
            "walking".parse::<ActivityLabel>(),
            Ok(ActivityLabel::Walking)
        );
        assert!("Running".parse::<ActivityLabel>().is_err());
        names.dedup();
        assert_eq!(names.len(), 6);
    }
}
