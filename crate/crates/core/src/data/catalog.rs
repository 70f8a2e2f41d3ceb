use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 18 SPR1 properties, in reporting order.
pub const SPR1_PROPERTIES: [&str; 18] = [
    "instigation",
    "volition",
    "awareness",
    "sentient",
    "physically existed",
    "existed before",
    "existed during",
    "existed after",
    "created",
    "destroyed",
    "changed",
    "changed state",
    "changed possession",
    "changed location",
    "stationary",
    "location",
    "physical contact",
    "manipulated",
];

/// The 14 SPR2 properties.
pub const SPR2_PROPERTIES: [&str; 14] = [
    "instigation",
    "volition",
    "awareness",
    "sentient",
    "existed before",
    "existed during",
    "existed after",
    "changed state",
    "changed possession",
    "change of location",
    "changed state continuous",
    "was for benefit",
    "was used",
    "partitive",
];

/// Ordered, duplicate-free list of property names. Decoder rows are indexed by it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PropertyCatalog(Vec<String>);

impl PropertyCatalog {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Config(format!("duplicate property {n:?} in catalog")));
            }
        }
        Ok(PropertyCatalog(names))
    }

    pub fn spr1() -> Self {
        PropertyCatalog(SPR1_PROPERTIES.iter().map(|s| s.to_string()).collect())
    }

    pub fn spr2() -> Self {
        PropertyCatalog(SPR2_PROPERTIES.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    /// True when both catalogs hold the same names, in any order.
    pub fn same_set(&self, other: &PropertyCatalog) -> bool {
        let mut a = self.0.clone();
        let mut b = other.0.clone();
        a.sort();
        b.sort();
        a == b
    }
}

impl TryFrom<Vec<String>> for PropertyCatalog {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        PropertyCatalog::new(names)
    }
}

impl From<PropertyCatalog> for Vec<String> {
    fn from(c: PropertyCatalog) -> Self {
        c.0
    }
}
