//! Built-in fixtures, embedded at compile time.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

const SOURCES: &[(&str, &str)] = &[
    ("scalar-p1", include_str!("../fixtures/scalar-p1.json")),
    ("heat-n32-p2", include_str!("../fixtures/heat-n32-p2.json")),
    ("bounded-mu", include_str!("../fixtures/bounded-mu.json")),
    ("large-d", include_str!("../fixtures/large-d.json")),
];

/// A reference value with its tolerance and where it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub provenance: String,
}

impl Expectation {
    pub fn holds(&self, measured: f64) -> bool {
        (measured - self.value).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub config: RunConfig,
    pub expected: Vec<Expectation>,
}

impl Fixture {
    pub fn expectation(&self, quantity: &str) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.quantity == quantity)
    }
}

pub fn list_fixtures() -> Vec<&'static str> {
    SOURCES.iter().map(|(name, _)| *name).collect()
}

pub fn load_fixture(name: &str) -> Result<Fixture, CliError> {
    let (_, text) = SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::UnknownFixture(name.to_owned()))?;
    let fixture: Fixture = serde_json::from_str(text).expect("embedded fixtures are valid");
    Ok(fixture)
}
