use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How two bodies interact during a contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InteractionType {
    #[serde(rename = "impact")]
    Impact,
    #[serde(rename = "scrape")]
    Scrape,
    #[serde(rename = "sustained")]
    SustainedContact,
}

impl InteractionType {
    pub const ALL: [InteractionType; 3] = [Self::Impact, Self::Scrape, Self::SustainedContact];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Impact => "impact",
            Self::Scrape => "scrape",
            Self::SustainedContact => "sustained",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown interaction type {s:?}"))
    }
}

/// Ordered pair of material identifiers, gripper (or grasped object) side first.
///
/// `(rubber, wood)` and `(wood, rubber)` are distinct keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[String; 2]", into = "[String; 2]")]
pub struct MaterialPair {
    pub first: String,
    pub second: String,
}

impl MaterialPair {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        Self { first: first.into(), second: second.into() }
    }

    pub fn reversed(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone() }
    }
}

impl From<[String; 2]> for MaterialPair {
    fn from([first, second]: [String; 2]) -> Self {
        Self { first, second }
    }
}

impl From<MaterialPair> for [String; 2] {
    fn from(pair: MaterialPair) -> Self {
        [pair.first, pair.second]
    }
}

impl fmt::Display for MaterialPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}
