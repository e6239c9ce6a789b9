//! Raw log records and catalog metadata.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::geocode::GeoPoint;
use crate::{Error, ItemId, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    /// Behavior-rich auxiliary domain.
    Source,
    /// Recommendation domain.
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Impression,
    Click,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::Validation(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

text_enum!(Domain { Source => "source", Target => "target" });
text_enum!(Action { Impression => "impression", Click => "click" });

/// One timestamped user action on an item.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorEvent {
    pub user: UserId,
    pub item: ItemId,
    pub domain: Domain,
    pub action: Action,
    /// Seconds since the start of the log window.
    pub timestamp: u64,
    pub location: Option<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemCatalogEntry {
    pub item: ItemId,
    pub domain: Domain,
    pub category: String,
    /// Set for target-domain items.
    pub destination: Option<String>,
    pub topic: Option<String>,
    /// Meaningful for source-domain items; target items are always travel items.
    pub travel_related: bool,
    pub price: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: Vec<ItemCatalogEntry>,
    index: HashMap<ItemId, usize>,
}

impl Catalog {
    pub fn new(entries: Vec<ItemCatalogEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.domain == Domain::Target && (e.destination.is_none() || e.topic.is_none()) {
                return Err(Error::Data(format!("target item `{}` lacks a destination or topic", e.item)));
            }
            if index.insert(e.item.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate catalog item `{}`", e.item)));
            }
        }
        Ok(Catalog { entries, index })
    }

    pub fn entries(&self) -> &[ItemCatalogEntry] {
        &self.entries
    }

    pub fn get(&self, item: &ItemId) -> Option<&ItemCatalogEntry> {
        self.index.get(item).map(|&i| &self.entries[i])
    }

    pub fn topic_of(&self, item: &ItemId) -> Option<&str> {
        self.get(item).and_then(|e| e.topic.as_deref())
    }

    pub fn is_travel_related(&self, item: &ItemId) -> bool {
        self.get(item).is_some_and(|e| e.travel_related)
    }

    /// Target-domain items in ID order.
    pub fn target_items(&self) -> Vec<ItemId> {
        let mut items: Vec<ItemId> =
            self.entries.iter().filter(|e| e.domain == Domain::Target).map(|e| e.item.clone()).collect();
        items.sort();
        items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cohort {
    Warm,
    Cold,
}

text_enum!(Cohort { Warm => "warm", Cold => "cold" });

/// Basic user attributes plus the cohort the generator placed the user in.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user: UserId,
    pub age: f64,
    pub gender: String,
    pub cohort: Cohort,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(id: &str, topic: Option<&str>) -> ItemCatalogEntry {
        ItemCatalogEntry {
            item: ItemId::from(id),
            domain: Domain::Target,
            category: "C0".into(),
            destination: Some("D0".into()),
            topic: topic.map(str::to_owned),
            travel_related: true,
            price: 1.0,
        }
    }

    #[test]
    fn enums_round_trip_through_text() {
        for d in [Domain::Source, Domain::Target] {
            assert_eq!(d.to_string().parse::<Domain>().unwrap(), d);
        }
        assert!("clicks".parse::<Action>().is_err());
    }

    #[test]
    fn catalog_rejects_duplicates_and_topicless_targets() {
        assert!(Catalog::new(vec![target("T1", Some("a")), target("T1", Some("a"))]).is_err());
        assert!(Catalog::new(vec![target("T1", None)]).is_err());
        let c = Catalog::new(vec![target("T2", Some("b")), target("T1", Some("a"))]).unwrap();
        assert_eq!(c.topic_of(&"T2".into()), Some("b"));
        assert_eq!(c.target_items(), vec![ItemId::from("T1"), ItemId::from("T2")]);
    }
}
