//! Self-reported user profiles: party, religion and "big issue" stances.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Democratic,
    Republican,
    Libertarian,
    Green,
    Independent,
    Other(String),
}

impl Party {
    pub fn parse(s: &str) -> Self {
        let lower = s.trim().to_lowercase();
        match lower.as_str() {
            "democrat" | "democratic" | "democratic party" | "democrats" => Party::Democratic,
            "republican" | "republican party" | "republicans" | "gop" => Party::Republican,
            "libertarian" | "libertarian party" => Party::Libertarian,
            "green" | "green party" => Party::Green,
            "independent" | "none" => Party::Independent,
            _ => Party::Other(s.trim().to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Party::Democratic => "Democratic",
            Party::Republican => "Republican",
            Party::Libertarian => "Libertarian",
            Party::Green => "Green",
            Party::Independent => "Independent",
            Party::Other(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Religion {
    Christian,
    Atheist,
    Agnostic,
    Muslim,
    Jewish,
    Other(String),
}

impl Religion {
    pub fn parse(s: &str) -> Self {
        let lower = s.trim().to_lowercase();
        match lower.as_str() {
            "christian" | "christianity" | "catholic" | "protestant" => Religion::Christian,
            "atheist" | "atheism" => Religion::Atheist,
            "agnostic" | "agnosticism" => Religion::Agnostic,
            "muslim" | "islam" => Religion::Muslim,
            "jewish" | "judaism" => Religion::Jewish,
            _ => Religion::Other(s.trim().to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Religion::Christian => "Christian",
            Religion::Atheist => "Atheist",
            Religion::Agnostic => "Agnostic",
            Religion::Muslim => "Muslim",
            Religion::Jewish => "Jewish",
            Religion::Other(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IssueStance {
    Pro,
    Con,
    Other,
}

impl IssueStance {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PRO" => Some(IssueStance::Pro),
            "CON" => Some(IssueStance::Con),
            "OTHER" => Some(IssueStance::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IssueStance::Pro => "PRO",
            IssueStance::Con => "CON",
            IssueStance::Other => "OTHER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UserProfile {
    pub user_id: String,
    pub party: Option<Party>,
    pub religion: Option<Religion>,
    pub big_issues: BTreeMap<String, IssueStance>,
}

/// Profiles keyed by `user_id`.
pub type Profiles = BTreeMap<String, UserProfile>;

/// The two-group splits compared in the dissonance analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// Democratic vs Republican.
    Party,
    /// Christian vs Atheist.
    Religion,
}

impl Grouping {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Grouping::Party => ["Democratic", "Republican"],
            Grouping::Religion => ["Christian", "Atheist"],
        }
    }

    /// 0 or 1 for members of the two compared groups, `None` otherwise.
    pub fn side(self, profile: &UserProfile) -> Option<usize> {
        match self {
            Grouping::Party => match profile.party {
                Some(Party::Democratic) => Some(0),
                Some(Party::Republican) => Some(1),
                _ => None,
            },
            Grouping::Religion => match profile.religion {
                Some(Religion::Christian) => Some(0),
                Some(Religion::Atheist) => Some(1),
                _ => None,
            },
        }
    }
}
