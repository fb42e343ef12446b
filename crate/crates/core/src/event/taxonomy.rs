use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const TYPES: [&str; 5] = ["build", "transition", "interruption", "set_piece", "threat"];

const SUBTYPES: [&[&str]; 5] = [
    &["build"],
    &["ball_win", "progression"],
    &["stoppage"],
    &["corner", "free_kick", "penalty", "throw_in", "kick_off", "goal_kick"],
    &["goal", "shot_off_target", "shot_saved", "clearance", "defended"],
];

pub const NUM_TYPES: usize = 5;
pub const NUM_SUBTYPES: usize = 15;

/// Two-level event vocabulary. Subtypes are numbered globally `0..15`,
/// grouped by type in the order of [`TYPES`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Taxonomy;

impl Taxonomy {
    pub fn type_name(self, t: usize) -> &'static str {
        TYPES[t]
    }

    pub fn subtypes(self, t: usize) -> &'static [&'static str] {
        SUBTYPES[t]
    }

    pub fn subtype_count(self, t: usize) -> usize {
        SUBTYPES[t].len()
    }

    /// Global index of the first subtype of type `t`.
    pub fn offset(self, t: usize) -> usize {
        SUBTYPES[..t].iter().map(|s| s.len()).sum()
    }

    pub fn type_of(self, global: usize) -> usize {
        let mut acc = 0;
        for (t, s) in SUBTYPES.iter().enumerate() {
            acc += s.len();
            if global < acc {
                return t;
            }
        }
        panic!("subtype index {global} out of range")
    }

    pub fn subtype_name(self, global: usize) -> &'static str {
        let t = self.type_of(global);
        SUBTYPES[t][global - self.offset(t)]
    }

    pub fn all_subtypes(self) -> impl Iterator<Item = &'static str> {
        SUBTYPES.iter().flat_map(|s| s.iter().copied())
    }
}

/// A ground-truth label: type and subtype index within that type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventLabel {
    pub event_type: usize,
    pub subtype: usize,
}

impl EventLabel {
    pub fn new(event_type: usize, subtype: usize) -> Result<Self> {
        if event_type >= NUM_TYPES || subtype >= Taxonomy.subtype_count(event_type) {
            return Err(invalid(format!("no subtype {subtype} under type {event_type}")));
        }
        Ok(Self { event_type, subtype })
    }

    /// Looks a subtype up by name. Names are unique except `build`, which is
    /// both a type and its only subtype.
    pub fn from_subtype(name: &str) -> Result<Self> {
        for (t, subs) in SUBTYPES.iter().enumerate() {
            if let Some(s) = subs.iter().position(|s| *s == name) {
                return Ok(Self { event_type: t, subtype: s });
            }
        }
        Err(invalid(format!("unknown event subtype {name:?}")))
    }

    pub fn global(self) -> usize {
        Taxonomy.offset(self.event_type) + self.subtype
    }

    pub fn from_global(global: usize) -> Result<Self> {
        if global >= NUM_SUBTYPES {
            return Err(invalid(format!("subtype index {global} out of range")));
        }
        let t = Taxonomy.type_of(global);
        Ok(Self {
            event_type: t,
            subtype: global - Taxonomy.offset(t),
        })
    }

    pub fn name(self) -> &'static str {
        SUBTYPES[self.event_type][self.subtype]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(TYPES.len(), NUM_TYPES);
        assert_eq!(Taxonomy.all_subtypes().count(), NUM_SUBTYPES);
        let mut names: Vec<_> = Taxonomy.all_subtypes().collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), NUM_SUBTYPES);
    }

    #[test]
    fn each_subtype_has_one_parent() {
        for g in 0..NUM_SUBTYPES {
            let l = EventLabel::from_global(g).unwrap();
            assert_eq!(l.global(), g);
            assert_eq!(EventLabel::from_subtype(l.name()).unwrap(), l);
            let parents = (0..NUM_TYPES).filter(|&t| Taxonomy.subtypes(t).contains(&l.name())).count();
            assert_eq!(parents, 1);
        }
        assert_eq!(EventLabel::from_subtype("shot_saved").unwrap(), EventLabel::new(4, 2).unwrap());
        assert!(EventLabel::from_subtype("offside").is_err());
        assert!(EventLabel::new(0, 1).is_err());
    }
}
