//! Time-based split of warm users and the cold-start test cohort.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Action, BehaviorEvent, Catalog, Cohort, Domain, UserProfile};
use crate::eval::{EvalCase, ItemFacets};
use crate::{Error, ItemId, Result, UserId};

/// One target-domain event with its click label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabeledInteraction {
    pub user: UserId,
    pub item: ItemId,
    pub timestamp: u64,
    pub clicked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    /// Warm users' target events before the cutoff.
    pub train: Vec<LabeledInteraction>,
    /// Warm users' target events at or after the cutoff.
    pub validation: Vec<LabeledInteraction>,
    /// One case per cold user with post-cutoff clicks.
    pub test: Vec<EvalCase>,
    /// Cold-cohort users dropped because they have target events before the
    /// cutoff.
    pub excluded: Vec<UserId>,
}

impl DatasetSplit {
    /// Training clicks as (user, item) pairs, one per click event.
    pub fn train_clicks(&self) -> Vec<(UserId, ItemId)> {
        self.train.iter().filter(|x| x.clicked).map(|x| (x.user.clone(), x.item.clone())).collect()
    }
}

/// Destination and category of every target item.
pub fn target_facets(catalog: &Catalog) -> HashMap<ItemId, ItemFacets> {
    catalog
        .entries()
        .iter()
        .filter(|e| e.domain == Domain::Target)
        .filter_map(|e| {
            Some((e.item.clone(), ItemFacets { destination: e.destination.clone()?, category: e.category.clone() }))
        })
        .collect()
}

/// Splits target-domain events at `cutoff`. Source-domain events are not
/// part of the split; they feed pretraining for every user.
pub fn split_dataset(
    events: &[BehaviorEvent],
    catalog: &Catalog,
    users: &[UserProfile],
    cutoff: u64,
) -> Result<DatasetSplit> {
    let cohort: HashMap<&UserId, Cohort> = users.iter().map(|u| (&u.user, u.cohort)).collect();
    let facets = target_facets(catalog);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut cold_targets: BTreeMap<&UserId, BTreeSet<&ItemId>> = BTreeMap::new();
    let mut early_cold: BTreeSet<&UserId> = BTreeSet::new();

    for e in events.iter().filter(|e| e.domain == Domain::Target) {
        let c = *cohort.get(&e.user).ok_or_else(|| Error::Lookup { kind: "user profile", id: e.user.to_string() })?;
        if !facets.contains_key(&e.item) {
            return Err(Error::Lookup { kind: "target item", id: e.item.to_string() });
        }
        let row = || LabeledInteraction {
            user: e.user.clone(),
            item: e.item.clone(),
            timestamp: e.timestamp,
            clicked: e.action == Action::Click,
        };
        match (c, e.timestamp < cutoff) {
            (Cohort::Warm, true) => train.push(row()),
            (Cohort::Warm, false) => validation.push(row()),
            (Cohort::Cold, true) => {
                early_cold.insert(&e.user);
            }
            (Cohort::Cold, false) => {
                if e.action == Action::Click {
                    cold_targets.entry(&e.user).or_default().insert(&e.item);
                }
            }
        }
    }
    train.sort();
    validation.sort();

    if !early_cold.is_empty() {
        log::warn!("{} cold-cohort users have target events before the cutoff and are excluded", early_cold.len());
    }
    let test = cold_targets
        .into_iter()
        .filter(|(u, _)| !early_cold.contains(u))
        .map(|(u, items)| {
            let targets = items.into_iter().map(|i| (i.clone(), facets[i].clone())).collect();
            EvalCase::new(u.clone(), targets)
        })
        .collect::<Result<Vec<_>>>()?;
    if test.is_empty() {
        return Err(Error::Config("the cold cohort has no usable test users".into()));
    }
    Ok(DatasetSplit { train, validation, test, excluded: early_cold.into_iter().cloned().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{generate_synthetic, SynthConfig};
    use crate::pipeline::ItemCatalogEntry;

    fn catalog() -> Catalog {
        Catalog::new(
            ["T1", "T2"]
                .iter()
                .map(|i| ItemCatalogEntry {
                    item: ItemId::from(*i),
                    domain: Domain::Target,
                    category: "C0".into(),
                    destination: Some("D0".into()),
                    topic: Some("topic0".into()),
                    travel_related: true,
                    price: 1.0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn profile(u: &str, cohort: Cohort) -> UserProfile {
        UserProfile { user: u.into(), age: 30.0, gender: "f".into(), cohort }
    }

    fn ev(u: &str, i: &str, t: u64, action: Action) -> BehaviorEvent {
        BehaviorEvent { user: u.into(), item: i.into(), domain: Domain::Target, action, timestamp: t, location: None }
    }

    #[test]
    fn cold_user_with_early_target_event_is_excluded() {
        let users = [profile("w", Cohort::Warm), profile("c1", Cohort::Cold), profile("c2", Cohort::Cold)];
        let events = [
            ev("w", "T1", 5, Action::Click),
            ev("w", "T2", 15, Action::Impression),
            ev("c1", "T1", 3, Action::Impression),
            ev("c1", "T2", 12, Action::Click),
            ev("c2", "T2", 11, Action::Click),
            ev("c2", "T1", 13, Action::Impression),
        ];
        let s = split_dataset(&events, &catalog(), &users, 10).unwrap();
        assert_eq!(s.excluded, vec![UserId::from("c1")]);
        assert_eq!(s.test.len(), 1);
        assert_eq!(s.test[0].user, UserId::from("c2"));
        assert_eq!(s.test[0].targets.keys().collect::<Vec<_>>(), vec![&ItemId::from("T2")]);
        assert_eq!(s.train.len(), 1);
        assert_eq!(s.validation.len(), 1);
    }

    #[test]
    fn empty_cold_cohort_is_a_config_error() {
        let users = [profile("w", Cohort::Warm)];
        let events = [ev("w", "T1", 5, Action::Click)];
        assert!(matches!(split_dataset(&events, &catalog(), &users, 10), Err(Error::Config(_))));
    }

    #[test]
    fn hundred_user_fixture_is_disjoint_and_cold_clean() {
        let cfg = SynthConfig {
            n_users: 100,
            n_geo_cells: 5,
            n_source_items: 100,
            n_target_items: 40,
            n_topics: 4,
            n_destinations: 8,
            cold_fraction: 0.2,
            ..Default::default()
        };
        let cutoff = cfg.window_secs * 4 / 5;
        let data = generate_synthetic(&cfg, cutoff, 2).unwrap();
        let s = split_dataset(&data.events, &data.catalog, &data.users, cutoff).unwrap();
        let key = |x: &LabeledInteraction| (x.user.clone(), x.item.clone(), x.timestamp);
        let train: BTreeSet<_> = s.train.iter().map(key).collect();
        let valid: BTreeSet<_> = s.validation.iter().map(key).collect();
        let mut test = BTreeSet::new();
        for e in data.events.iter().filter(|e| e.domain == Domain::Target) {
            if s.test.iter().any(|c| c.user == e.user) {
                test.insert((e.user.clone(), e.item.clone(), e.timestamp));
            }
        }
        assert_eq!(train.intersection(&valid).count(), 0);
        assert_eq!(train.intersection(&test).count(), 0);
        assert_eq!(valid.intersection(&test).count(), 0);
        let test_users: BTreeSet<_> = s.test.iter().map(|c| &c.user).collect();
        assert!(s.train.iter().all(|x| !test_users.contains(&x.user)));
        assert_eq!(s.test.len(), 20);
    }

    #[test]
    fn time_split_follows_the_fraction() {
        let cfg = SynthConfig { n_users: 3000, target_clicks_per_user: 10.0, ..Default::default() };
        let cutoff = cfg.window_secs * 4 / 5;
        let data = generate_synthetic(&cfg, cutoff, 4).unwrap();
        let s = split_dataset(&data.events, &data.catalog, &data.users, cutoff).unwrap();
        let clicks = |v: &[LabeledInteraction]| v.iter().filter(|x| x.clicked).count() as f64;
        let share = clicks(&s.train) / (clicks(&s.train) + clicks(&s.validation));
        assert!((share - 0.8).abs() < 0.02, "train share {share}");
    }
}
