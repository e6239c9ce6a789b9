//! Non-personalized rankings: Hot (popularity) and MaxCov (greedy user
//! coverage). MaxCov is a greedy reconstruction of the coverage idea, not a
//! port of a published algorithm.

use std::collections::{BTreeMap, BTreeSet};

use super::RankedList;
use crate::{Error, ItemId, Result, UserId};

/// Click count per item over `clicks`, one entry per click record.
pub fn click_counts(clicks: &[(UserId, ItemId)]) -> BTreeMap<ItemId, u64> {
    let mut counts = BTreeMap::new();
    for (_, item) in clicks {
        *counts.entry(item.clone()).or_insert(0) += 1;
    }
    counts
}

fn hot_order(clicks: &[(UserId, ItemId)], catalog: &[ItemId]) -> Result<Vec<(ItemId, u64)>> {
    if clicks.is_empty() {
        return Err(Error::Data("no training clicks for a popularity ranking".into()));
    }
    let counts = click_counts(clicks);
    let pool: BTreeSet<&ItemId> = catalog.iter().collect();
    let mut ranked: Vec<(ItemId, u64)> =
        pool.into_iter().map(|i| (i.clone(), counts.get(i).copied().unwrap_or(0))).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Catalog items by descending click count, ties by ID; scores are counts
/// divided by the largest count.
pub fn baseline_hot(clicks: &[(UserId, ItemId)], catalog: &[ItemId], k: usize) -> Result<RankedList> {
    let mut ranked = hot_order(clicks, catalog)?;
    ranked.truncate(k);
    let max = ranked.first().map_or(1, |r| r.1.max(1)) as f64;
    let (items, scores) = ranked.into_iter().map(|(i, c)| (i, c as f64 / max)).unzip();
    RankedList::new(UserId::from("*"), items, scores)
}

/// Greedy maximum coverage: repeatedly take the catalog item clicked by the
/// most not-yet-covered users (ties by click count, then ID) until `k` items
/// are picked or every user is covered, then fill with the Hot order.
/// Scores are `(n - rank) / n`.
pub fn baseline_maxcov(clicks: &[(UserId, ItemId)], catalog: &[ItemId], k: usize) -> Result<RankedList> {
    let hot = hot_order(clicks, catalog)?;
    let mut clickers: BTreeMap<&ItemId, BTreeSet<&UserId>> = BTreeMap::new();
    for (u, i) in clicks {
        clickers.entry(i).or_default().insert(u);
    }
    let mut uncovered: BTreeSet<&UserId> = clickers.values().flatten().copied().collect();
    let mut picked: Vec<ItemId> = Vec::new();
    let mut taken: BTreeSet<&ItemId> = BTreeSet::new();

    while picked.len() < k && !uncovered.is_empty() {
        // `hot` is already in (count desc, ID asc) order, so the first item
        // with the best gain wins ties.
        let mut best: Option<(&ItemId, usize)> = None;
        for (item, _) in &hot {
            if taken.contains(item) {
                continue;
            }
            let gain = clickers.get(item).map_or(0, |us| us.iter().filter(|u| uncovered.contains(*u)).count());
            if gain > best.map_or(0, |b| b.1) {
                best = Some((item, gain));
            }
        }
        let Some((item, _)) = best else { break };
        for u in &clickers[item] {
            uncovered.remove(u);
        }
        taken.insert(item);
        picked.push(item.clone());
    }
    for (item, _) in &hot {
        if picked.len() >= k {
            break;
        }
        if !taken.contains(item) {
            picked.push(item.clone());
        }
    }
    let n = picked.len() as f64;
    let scores = (0..picked.len()).map(|r| (n - r as f64) / n).collect();
    RankedList::new(UserId::from("*"), picked, scores)
}
