//! Token sequences, skip-gram pretraining and average-pooled user vectors.

mod sgns;
mod table;

pub use sgns::{sgns_pair_gradients, sgns_pair_loss, train_skipgram, PairGradients, SkipGramConfig, SkipGramRun};
pub use table::EmbeddingTable;

use std::collections::BTreeMap;

use crate::geocode::{encode_geohash, LBS_PRECISION, MAX_PRECISION};
use crate::pipeline::{Action, BehaviorEvent, Domain};
use crate::{Error, ItemId, Result, UserId};

/// A user's time-ordered tokens in one domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub owner: UserId,
    pub domain: Domain,
    pub tokens: Vec<String>,
}

/// Builds one source-domain and one target-domain sequence per user from click
/// events.
///
/// Source-domain items failing `travel_filter` are dropped; every surviving
/// source event with a location is followed by its geohash-5 token.
/// Impressions are exposure records, not behavior, and are ignored. Empty
/// sequences are not emitted. Output is ordered by domain, then user.
pub fn build_sequences(events: &[BehaviorEvent], travel_filter: impl Fn(&ItemId) -> bool) -> Vec<TokenSequence> {
    build_sequences_at(events, travel_filter, LBS_PRECISION).expect("LBS_PRECISION is valid")
}

/// [`build_sequences`] with location tokens at an explicit geohash precision.
pub fn build_sequences_at(
    events: &[BehaviorEvent],
    travel_filter: impl Fn(&ItemId) -> bool,
    precision: usize,
) -> Result<Vec<TokenSequence>> {
    if !(1..=MAX_PRECISION).contains(&precision) {
        return Err(Error::Config(format!("geohash precision {precision} outside 1..={MAX_PRECISION}")));
    }
    let mut per_user: BTreeMap<(Domain, &UserId), Vec<&BehaviorEvent>> = BTreeMap::new();
    for event in events.iter().filter(|e| e.action == Action::Click) {
        if event.domain == Domain::Source && !travel_filter(&event.item) {
            continue;
        }
        per_user.entry((event.domain, &event.user)).or_default().push(event);
    }

    let sequences = per_user
        .into_iter()
        .map(|((domain, user), mut evs)| {
            evs.sort_by_key(|e| e.timestamp);
            let mut tokens = Vec::with_capacity(evs.len() * 2);
            for e in evs {
                tokens.push(e.item.0.clone());
                if domain == Domain::Source {
                    if let Some(point) = e.location {
                        let token = encode_geohash(point, precision).expect("precision checked above");
                        tokens.push(token.into_string());
                    }
                }
            }
            TokenSequence { owner: user.clone(), domain, tokens }
        })
        .filter(|s| !s.tokens.is_empty())
        .collect();
    Ok(sequences)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserVector {
    pub user: UserId,
    pub vec: Vec<f64>,
    /// False when none of the user's tokens were in the vocabulary; `vec` is
    /// then all zeros.
    pub embeddable: bool,
}

/// Mean of the embeddings of the in-vocabulary tokens of `seq`.
pub fn user_vector(seq: &TokenSequence, table: &EmbeddingTable) -> UserVector {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in seq.tokens.iter().filter_map(|t| table.get(t)) {
        crate::linalg::axpy(1.0, v, &mut sum);
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        sum.iter_mut().for_each(|x| *x *= inv);
    }
    UserVector { user: seq.owner.clone(), vec: sum, embeddable: n > 0 }
}
