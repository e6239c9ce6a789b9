//! Synthetic two-domain logs with geo-correlated travel preferences.
//!
//! Users live in geographic cells and every cell has a preferred travel
//! topic. Source-domain clicks lean toward travel items of that topic and
//! carry the cell's coordinates; target-domain clicks pick the preferred
//! topic with probability `preference_strength` and otherwise follow global
//! popularity. A cold cohort gets source-domain behavior plus target clicks
//! only after the train cutoff.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Poisson};

use super::{Action, BehaviorEvent, Catalog, Cohort, Domain, ItemCatalogEntry, UserProfile};
use crate::geocode::{decode_bbox, encode_geohash, GeoPoint, LBS_PRECISION};
use crate::{Error, ItemId, Result, UserId};

/// Share of source-domain clicks that land on non-travel items.
const OFF_TOPIC_SOURCE_SHARE: f64 = 0.3;

/// Share of source-domain clicks that carry a location.
const LOCATED_SHARE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_geo_cells: usize,
    pub n_source_items: usize,
    pub n_target_items: usize,
    pub n_topics: usize,
    pub n_destinations: usize,
    pub n_categories: usize,
    /// Probability that a target click follows the cell's topic.
    pub preference_strength: f64,
    /// Probability that a travel-related source click follows the cell's topic.
    pub source_affinity: f64,
    /// Share of source items that are travel related.
    pub travel_share: f64,
    pub cold_fraction: f64,
    /// Mean source clicks per user (at least 3 each).
    pub source_events_per_user: f64,
    /// Mean target clicks per warm user over the whole window (at least 1).
    pub target_clicks_per_user: f64,
    /// Mean post-cutoff target clicks per cold user (at least 1).
    pub cold_clicks_per_user: f64,
    /// Zipf exponent of target item popularity.
    pub popularity_exponent: f64,
    /// Impressions without click per click, before and after the cutoff.
    pub train_neg_ratio: f64,
    pub valid_neg_ratio: f64,
    pub window_secs: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 5000,
            n_geo_cells: 50,
            n_source_items: 2000,
            n_target_items: 500,
            n_topics: 10,
            n_destinations: 50,
            n_categories: 5,
            preference_strength: 0.8,
            source_affinity: 0.8,
            travel_share: 0.6,
            cold_fraction: 0.1,
            source_events_per_user: 20.0,
            target_clicks_per_user: 5.0,
            cold_clicks_per_user: 4.0,
            popularity_exponent: 0.8,
            train_neg_ratio: 1.0,
            valid_neg_ratio: 3.0,
            window_secs: 30 * 24 * 3600,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let counts = [
            ("n_users", self.n_users),
            ("n_geo_cells", self.n_geo_cells),
            ("n_source_items", self.n_source_items),
            ("n_target_items", self.n_target_items),
            ("n_topics", self.n_topics),
            ("n_destinations", self.n_destinations),
            ("n_categories", self.n_categories),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return bad(format!("{name} must be at least 1"));
        }
        if self.n_destinations < self.n_topics || self.n_target_items < self.n_destinations {
            return bad("need n_target_items >= n_destinations >= n_topics".into());
        }
        let travel = (self.n_source_items as f64 * self.travel_share).round() as usize;
        if travel < self.n_topics {
            return bad(format!("{travel} travel items cannot cover {} topics", self.n_topics));
        }
        for (name, p) in [
            ("preference_strength", self.preference_strength),
            ("source_affinity", self.source_affinity),
            ("travel_share", self.travel_share),
            ("cold_fraction", self.cold_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, m, floor) in [
            ("source_events_per_user", self.source_events_per_user, 3.0),
            ("target_clicks_per_user", self.target_clicks_per_user, 1.0),
            ("cold_clicks_per_user", self.cold_clicks_per_user, 1.0),
        ] {
            if !(m.is_finite() && m >= floor) {
                return bad(format!("{name} must be at least {floor}"));
            }
        }
        if !(self.popularity_exponent.is_finite() && self.popularity_exponent >= 0.0) {
            return bad("popularity_exponent must be non-negative".into());
        }
        if !(self.train_neg_ratio >= 0.0 && self.valid_neg_ratio >= 0.0) {
            return bad("negative ratios must be non-negative".into());
        }
        if self.window_secs < 2 {
            return bad("window_secs must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Sorted by user, then timestamp.
    pub events: Vec<BehaviorEvent>,
    pub catalog: Catalog,
    pub users: Vec<UserProfile>,
}

fn id(prefix: char, i: usize, n: usize) -> String {
    let width = n.to_string().len().max(4);
    format!("{prefix}{:0width$}", i + 1)
}

pub fn topic_name(t: usize) -> String {
    format!("topic{t}")
}

/// `base + Poisson(mean - base)`
fn count(rng: &mut ChaCha8Rng, mean: f64, base: usize) -> usize {
    let extra = mean - base as f64;
    if extra <= 0.0 {
        return base;
    }
    base + Poisson::new(extra).expect("positive mean").sample(rng) as usize
}

struct Cell {
    lat: f64,
    lon: f64,
    half_lat: f64,
    half_lon: f64,
    topic: usize,
}

fn place_cells(n: usize, n_topics: usize, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    let mut seen = std::collections::BTreeSet::new();
    let mut cells = Vec::with_capacity(n);
    while cells.len() < n {
        let p = GeoPoint::new(rng.random_range(22.0..42.0), rng.random_range(100.0..122.0))
            .expect("inside the valid range");
        let code = encode_geohash(p, LBS_PRECISION).expect("valid precision");
        if !seen.insert(code.as_str().to_owned()) {
            continue;
        }
        let b = decode_bbox(code.as_str()).expect("just encoded");
        let (lat, lon) = b.center();
        cells.push(Cell {
            lat,
            lon,
            half_lat: (b.max_lat - b.min_lat) / 2.0,
            half_lon: (b.max_lon - b.min_lon) / 2.0,
            topic: rng.random_range(0..n_topics),
        });
    }
    cells
}

/// Generates a seeded synthetic dataset. Cold users' target clicks fall in
/// `[cutoff, window_secs)`.
pub fn generate_synthetic(cfg: &SynthConfig, cutoff: u64, seed: u64) -> Result<SyntheticData> {
    cfg.validate()?;
    if cutoff == 0 || cutoff >= cfg.window_secs {
        return Err(Error::Config(format!("cutoff {cutoff} outside the event window")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = place_cells(cfg.n_geo_cells, cfg.n_topics, &mut rng);

    // Source items: the first `n_travel` are travel related, topics round-robin.
    let n_travel = (cfg.n_source_items as f64 * cfg.travel_share).round() as usize;
    let source_ids: Vec<ItemId> = (0..cfg.n_source_items).map(|i| ItemId(id('S', i, cfg.n_source_items))).collect();
    let mut travel_by_topic = vec![Vec::new(); cfg.n_topics];
    for i in 0..n_travel {
        travel_by_topic[i % cfg.n_topics].push(i);
    }

    let price = LogNormal::<f64>::new(4.5, 0.5).expect("valid parameters");
    let mut entries = Vec::with_capacity(cfg.n_source_items + cfg.n_target_items);
    for (i, item) in source_ids.iter().enumerate() {
        let travel = i < n_travel;
        entries.push(ItemCatalogEntry {
            item: item.clone(),
            domain: Domain::Source,
            category: format!("C{}", rng.random_range(0..cfg.n_categories)),
            destination: None,
            topic: travel.then(|| topic_name(i % cfg.n_topics)),
            travel_related: travel,
            price: (price.sample(&mut rng) * 100.0).round() / 100.0,
        });
    }

    // Target items: destination round-robin, topic from the destination,
    // Zipf popularity over a random rank order.
    let target_ids: Vec<ItemId> = (0..cfg.n_target_items).map(|i| ItemId(id('T', i, cfg.n_target_items))).collect();
    let mut ranks: Vec<usize> = (0..cfg.n_target_items).collect();
    ranks.shuffle(&mut rng);
    let weight: Vec<f64> = ranks.iter().map(|&r| ((r + 1) as f64).powf(-cfg.popularity_exponent)).collect();
    let target_topic: Vec<usize> = (0..cfg.n_target_items).map(|i| (i % cfg.n_destinations) % cfg.n_topics).collect();
    for (i, item) in target_ids.iter().enumerate() {
        entries.push(ItemCatalogEntry {
            item: item.clone(),
            domain: Domain::Target,
            category: format!("C{}", rng.random_range(0..cfg.n_categories)),
            destination: Some(format!("D{:02}", i % cfg.n_destinations)),
            topic: Some(topic_name(target_topic[i])),
            travel_related: true,
            price: (price.sample(&mut rng) * 100.0).round() / 100.0,
        });
    }
    let global = WeightedIndex::new(&weight).expect("positive weights");
    let by_topic: Vec<(Vec<usize>, WeightedIndex<f64>)> = (0..cfg.n_topics)
        .map(|t| {
            let members: Vec<usize> = (0..cfg.n_target_items).filter(|&i| target_topic[i] == t).collect();
            let w = WeightedIndex::new(members.iter().map(|&i| weight[i])).expect("every topic has items");
            (members, w)
        })
        .collect();

    let n_cold = (cfg.n_users as f64 * cfg.cold_fraction).round() as usize;
    let mut cold = vec![false; cfg.n_users];
    for &u in (0..cfg.n_users).collect::<Vec<_>>().choose_multiple(&mut rng, n_cold) {
        cold[u] = true;
    }

    let mut users = Vec::with_capacity(cfg.n_users);
    let mut events = Vec::new();
    let window = cfg.window_secs;
    for (u, &is_cold) in cold.iter().enumerate() {
        let user = UserId(id('U', u, cfg.n_users));
        let cell = &cells[rng.random_range(0..cells.len())];
        users.push(UserProfile {
            user: user.clone(),
            age: rng.random_range(18..=70) as f64,
            gender: if rng.random_bool(0.5) { "f" } else { "m" }.into(),
            cohort: if is_cold { Cohort::Cold } else { Cohort::Warm },
        });

        let mut mine = Vec::new();
        for _ in 0..count(&mut rng, cfg.source_events_per_user, 3) {
            let item = if rng.random_bool(OFF_TOPIC_SOURCE_SHARE) && n_travel < cfg.n_source_items {
                rng.random_range(n_travel..cfg.n_source_items)
            } else if rng.random_bool(cfg.source_affinity) {
                *travel_by_topic[cell.topic].choose(&mut rng).expect("topics are covered")
            } else {
                rng.random_range(0..n_travel)
            };
            let location = rng.random_bool(LOCATED_SHARE).then(|| {
                let lat = cell.lat + rng.random_range(-0.8..0.8) * cell.half_lat;
                let lon = cell.lon + rng.random_range(-0.8..0.8) * cell.half_lon;
                GeoPoint::new(lat, lon).expect("jitter stays inside the cell")
            });
            mine.push(BehaviorEvent {
                user: user.clone(),
                item: source_ids[item].clone(),
                domain: Domain::Source,
                action: Action::Click,
                timestamp: rng.random_range(0..window),
                location,
            });
        }

        let target_event = |rng: &mut ChaCha8Rng, action: Action, from: u64, to: u64| {
            let item = match action {
                Action::Click if rng.random_bool(cfg.preference_strength) => {
                    let (members, w) = &by_topic[cell.topic];
                    members[w.sample(rng)]
                }
                _ => global.sample(rng),
            };
            BehaviorEvent {
                user: user.clone(),
                item: target_ids[item].clone(),
                domain: Domain::Target,
                action,
                timestamp: rng.random_range(from..to),
                location: None,
            }
        };
        if is_cold {
            for _ in 0..count(&mut rng, cfg.cold_clicks_per_user, 1) {
                mine.push(target_event(&mut rng, Action::Click, cutoff, window));
            }
        } else {
            let clicks: Vec<BehaviorEvent> = (0..count(&mut rng, cfg.target_clicks_per_user, 1))
                .map(|_| target_event(&mut rng, Action::Click, 0, window))
                .collect();
            let before = clicks.iter().filter(|e| e.timestamp < cutoff).count();
            let after = clicks.len() - before;
            let n_train = (before as f64 * cfg.train_neg_ratio).round() as usize;
            let n_valid = (after as f64 * cfg.valid_neg_ratio).round() as usize;
            mine.extend(clicks);
            for _ in 0..n_train {
                mine.push(target_event(&mut rng, Action::Impression, 0, cutoff));
            }
            for _ in 0..n_valid {
                mine.push(target_event(&mut rng, Action::Impression, cutoff, window));
            }
        }
        mine.sort_by_key(|e| e.timestamp);
        events.extend(mine);
    }

    Ok(SyntheticData { events, catalog: Catalog::new(entries)?, users })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocode::token_for_event;
    use std::collections::{BTreeMap, HashMap};

    fn small(strength: f64) -> SynthConfig {
        SynthConfig {
            n_users: 400,
            n_geo_cells: 8,
            n_source_items: 200,
            n_target_items: 60,
            n_topics: 4,
            n_destinations: 12,
            preference_strength: strength,
            ..Default::default()
        }
    }

    const WINDOW: u64 = 30 * 24 * 3600;
    const CUTOFF: u64 = WINDOW * 4 / 5;

    /// Each user's most frequent location token, read off the events.
    fn home_cells(events: &[BehaviorEvent]) -> HashMap<UserId, String> {
        let mut counts: HashMap<&UserId, BTreeMap<String, usize>> = HashMap::new();
        for e in events {
            if let Some(p) = e.location {
                *counts.entry(&e.user).or_default().entry(token_for_event(p).into_string()).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .map(|(u, c)| {
                let best = c.iter().max_by_key(|(t, n)| (**n, std::cmp::Reverse((*t).clone()))).unwrap();
                (u.clone(), best.0.clone())
            })
            .collect()
    }

    /// Mutual information (nats) between home cell and clicked target topic.
    fn cell_topic_mi(data: &SyntheticData) -> f64 {
        let home = home_cells(&data.events);
        let mut joint: HashMap<(String, String), f64> = HashMap::new();
        let mut n = 0.0;
        for e in data.events.iter().filter(|e| e.domain == Domain::Target && e.action == Action::Click) {
            let topic = data.catalog.topic_of(&e.item).unwrap().to_owned();
            *joint.entry((home[&e.user].clone(), topic)).or_default() += 1.0;
            n += 1.0;
        }
        let mut pc: HashMap<&str, f64> = HashMap::new();
        let mut pt: HashMap<&str, f64> = HashMap::new();
        for ((c, t), v) in &joint {
            *pc.entry(c).or_default() += v / n;
            *pt.entry(t).or_default() += v / n;
        }
        joint
            .iter()
            .map(|((c, t), v)| {
                let p = v / n;
                p * (p / (pc[c.as_str()] * pt[t.as_str()])).ln()
            })
            .sum()
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic(&small(0.8), CUTOFF, 3).unwrap();
        let b = generate_synthetic(&small(0.8), CUTOFF, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, generate_synthetic(&small(0.8), CUTOFF, 4).unwrap().events);
    }

    #[test]
    fn default_config_plants_cell_topic_dependence() {
        let strong = generate_synthetic(&SynthConfig::default(), CUTOFF, 1).unwrap();
        let none =
            generate_synthetic(&SynthConfig { preference_strength: 0.0, ..Default::default() }, CUTOFF, 1).unwrap();
        let (mi, mi0) = (cell_topic_mi(&strong), cell_topic_mi(&none));
        assert!(mi > 0.5, "planted MI {mi}");
        assert!(mi0 < 0.05, "unplanted MI {mi0}");
    }

    #[test]
    fn full_strength_puts_every_cold_target_in_the_cell_topic() {
        let cfg = SynthConfig { n_geo_cells: 2, n_topics: 2, n_destinations: 4, ..small(1.0) };
        let data = generate_synthetic(&cfg, CUTOFF, 5).unwrap();
        let home = home_cells(&data.events);
        // The cell's topic is the one its warm users' clicks all share.
        let mut cell_topics: HashMap<String, std::collections::BTreeSet<String>> = HashMap::new();
        for e in data.events.iter().filter(|e| e.domain == Domain::Target && e.action == Action::Click) {
            cell_topics
                .entry(home[&e.user].clone())
                .or_default()
                .insert(data.catalog.topic_of(&e.item).unwrap().to_owned());
        }
        assert!(cell_topics.values().all(|t| t.len() == 1));
    }

    #[test]
    fn cohorts_and_windows() {
        let data = generate_synthetic(&small(0.8), CUTOFF, 9).unwrap();
        let cohort: HashMap<&UserId, Cohort> = data.users.iter().map(|u| (&u.user, u.cohort)).collect();
        let n_cold = cohort.values().filter(|c| **c == Cohort::Cold).count();
        assert_eq!(n_cold, 40);
        for e in &data.events {
            assert!(e.timestamp < WINDOW);
            if e.domain == Domain::Target && cohort[&e.user] == Cohort::Cold {
                assert!(e.timestamp >= CUTOFF && e.action == Action::Click);
            }
            if e.domain == Domain::Source {
                assert_eq!(e.action, Action::Click);
            }
        }
        let located = data.events.iter().filter(|e| e.domain == Domain::Source && e.location.is_some()).count();
        let source = data.events.iter().filter(|e| e.domain == Domain::Source).count();
        assert!((located as f64 / source as f64 - LOCATED_SHARE).abs() < 0.03);
    }

    #[test]
    fn inconsistent_counts_are_config_errors() {
        for cfg in [
            SynthConfig { n_users: 0, ..small(0.5) },
            SynthConfig { n_destinations: 2, ..small(0.5) },
            SynthConfig { preference_strength: 1.5, ..small(0.5) },
        ] {
            assert!(matches!(generate_synthetic(&cfg, CUTOFF, 0), Err(Error::Config(_))));
        }
        assert!(generate_synthetic(&small(0.5), WINDOW, 0).is_err());
    }
}
