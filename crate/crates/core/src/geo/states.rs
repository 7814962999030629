use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// The 50 states and the District of Columbia, in code order.
pub const STATES: [(&str, &str); 51] = [
    ("AK", "Alaska"),
    ("AL", "Alabama"),
    ("AR", "Arkansas"),
    ("AZ", "Arizona"),
    ("CA", "California"),
    ("CO", "Colorado"),
    ("CT", "Connecticut"),
    ("DC", "District of Columbia"),
    ("DE", "Delaware"),
    ("FL", "Florida"),
    ("GA", "Georgia"),
    ("HI", "Hawaii"),
    ("IA", "Iowa"),
    ("ID", "Idaho"),
    ("IL", "Illinois"),
    ("IN", "Indiana"),
    ("KS", "Kansas"),
    ("KY", "Kentucky"),
    ("LA", "Louisiana"),
    ("MA", "Massachusetts"),
    ("MD", "Maryland"),
    ("ME", "Maine"),
    ("MI", "Michigan"),
    ("MN", "Minnesota"),
    ("MO", "Missouri"),
    ("MS", "Mississippi"),
    ("MT", "Montana"),
    ("NC", "North Carolina"),
    ("ND", "North Dakota"),
    ("NE", "Nebraska"),
    ("NH", "New Hampshire"),
    ("NJ", "New Jersey"),
    ("NM", "New Mexico"),
    ("NV", "Nevada"),
    ("NY", "New York"),
    ("OH", "Ohio"),
    ("OK", "Oklahoma"),
    ("OR", "Oregon"),
    ("PA", "Pennsylvania"),
    ("RI", "Rhode Island"),
    ("SC", "South Carolina"),
    ("SD", "South Dakota"),
    ("TN", "Tennessee"),
    ("TX", "Texas"),
    ("UT", "Utah"),
    ("VA", "Virginia"),
    ("VT", "Vermont"),
    ("WA", "Washington"),
    ("WI", "Wisconsin"),
    ("WV", "West Virginia"),
    ("WY", "Wyoming"),
];

/// A US state or DC, stored as an index into [`STATES`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(u8);

impl State {
    pub fn all() -> impl Iterator<Item = State> {
        (0..STATES.len() as u8).map(State)
    }

    pub fn from_code(code: &str) -> Option<State> {
        let upper = code.trim().to_ascii_uppercase();
        STATES
            .binary_search_by(|(c, _)| (*c).cmp(upper.as_str()))
            .ok()
            .map(|i| State(i as u8))
    }

    pub fn from_name(name: &str) -> Option<State> {
        let name = name.trim();
        STATES
            .iter()
            .position(|(_, n)| n.eq_ignore_ascii_case(name))
            .map(|i| State(i as u8))
    }

    /// Accepts either a two-letter code or a full name.
    pub fn parse(s: &str) -> Option<State> {
        Self::from_code(s).or_else(|| Self::from_name(s))
    }

    pub fn code(self) -> &'static str {
        STATES[self.0 as usize].0
    }

    pub fn name(self) -> &'static str {
        STATES[self.0 as usize].1
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        State::from_code(s).ok_or_else(|| Error::UnknownState(s.to_string()))
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_sorted_and_complete() {
        assert!(STATES.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(State::all().count(), 51);
        for s in State::all() {
            assert_eq!(State::from_code(s.code()), Some(s));
            assert_eq!(State::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn lookups_are_case_insensitive() {
        assert_eq!(State::from_code("ca").map(State::code), Some("CA"));
        assert_eq!(State::from_name("new york").map(State::code), Some("NY"));
        assert_eq!(State::parse("District of Columbia").map(State::code), Some("DC"));
        assert!(State::from_code("XX").is_none());
        assert!("PR".parse::<State>().is_err());
    }
}
