//! Popularity-fused scoring and the cold-start recommendation path.

use std::collections::HashMap;
use std::sync::Arc;

use super::network::{score, tower_output};
use super::{AttributeVector, ModelParams};
use crate::embedding::{user_vector, EmbeddingTable, TokenSequence};
use crate::eval::RankedList;
use crate::relations::{user_group_in_cluster, ClusterModel, ItemGroup};
use crate::{Error, ItemId, Result, UserId};

/// `ŷ × pop`
pub fn fuse_popularity(y_hat: f64, pop: f64) -> Result<f64> {
    if !(pop >= 0.0 && pop.is_finite()) {
        return Err(Error::Validation(format!("popularity must be finite and non-negative, got {pop}")));
    }
    Ok(y_hat * pop)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub raw: f64,
    pub fused: f64,
}

impl Score {
    pub fn new(raw: f64, pop: f64) -> Result<Self> {
        if !(raw > 0.0 && raw < 1.0) {
            return Err(Error::Validation(format!("raw score {raw} outside (0,1)")));
        }
        Ok(Score { raw, fused: fuse_popularity(raw, pop)? })
    }
}

/// A recommendable item with everything its tower needs.
#[derive(Debug, Clone)]
pub struct CatalogItem {
    pub item: ItemId,
    pub group: Arc<ItemGroup>,
    pub attrs: Arc<AttributeVector>,
    /// Normalized popularity in `[0, 1]`.
    pub popularity: f64,
}

/// A user with no target-domain history.
#[derive(Debug, Clone)]
pub struct NewUser {
    pub user: UserId,
    /// Source-domain token sequence.
    pub sequence: TokenSequence,
    pub attrs: AttributeVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub list: RankedList,
    /// Set when the user could not be embedded and the popularity ranking
    /// was served instead.
    pub fallback: bool,
}

/// Scores new users against a fixed catalog. Item latent factors are
/// computed once up front.
pub struct ColdStartRecommender<'a> {
    params: &'a ModelParams,
    table: &'a EmbeddingTable,
    clusters: &'a ClusterModel,
    user_vectors: &'a HashMap<UserId, Vec<f64>>,
    group_len: usize,
    items: Vec<(ItemId, Vec<f64>, f64)>,
    fallback: Vec<(ItemId, f64)>,
}

impl<'a> ColdStartRecommender<'a> {
    /// `table` is the source-domain embedding table, `clusters` and
    /// `user_vectors` describe the warm users friends are drawn from, and
    /// `fallback` is the Hot ranking with its scores.
    pub fn new(
        params: &'a ModelParams,
        catalog: &[CatalogItem],
        table: &'a EmbeddingTable,
        clusters: &'a ClusterModel,
        user_vectors: &'a HashMap<UserId, Vec<f64>>,
        group_len: usize,
        fallback: &RankedList,
    ) -> Result<Self> {
        params.validate()?;
        if table.dim() != params.w_user.rows() || clusters.dim() != table.dim() {
            return Err(Error::Shape(format!(
                "embedding dim {}, cluster dim {}, model dim {}",
                table.dim(),
                clusters.dim(),
                params.w_user.rows()
            )));
        }
        let mut items = Vec::with_capacity(catalog.len());
        for c in catalog {
            if !(c.popularity >= 0.0 && c.popularity.is_finite()) {
                return Err(Error::Validation(format!("item `{}` has popularity {}", c.item, c.popularity)));
            }
            let s_i = tower_output(&c.group, &c.attrs, &params.w_item, &params.item_mlp)?;
            items.push((c.item.clone(), s_i, c.popularity));
        }
        let fallback = fallback.items().iter().cloned().zip(fallback.scores().iter().copied()).collect();
        Ok(ColdStartRecommender { params, table, clusters, user_vectors, group_len, items, fallback })
    }

    /// Latent factor of a new user, or `None` when none of its tokens are in
    /// the vocabulary.
    pub fn user_factor(&self, user: &NewUser) -> Result<Option<Vec<f64>>> {
        let uv = user_vector(&user.sequence, self.table);
        if !uv.embeddable {
            return Ok(None);
        }
        let cluster = self.clusters.nearest(&uv.vec);
        let group =
            user_group_in_cluster(&user.user, &uv.vec, cluster, self.clusters, self.user_vectors, self.group_len)?;
        tower_output(&group, &user.attrs, &self.params.w_user, &self.params.user_mlp).map(Some)
    }

    /// Top-`k` catalog items by fused score, ties by item ID.
    pub fn recommend(&self, user: &NewUser, k: usize) -> Result<Recommendation> {
        let Some(s_u) = self.user_factor(user)? else {
            let (items, scores) = self.fallback.iter().take(k).cloned().unzip();
            return Ok(Recommendation { list: RankedList::new(user.user.clone(), items, scores)?, fallback: true });
        };
        let mut scored: Vec<(f64, &ItemId)> = self
            .items
            .iter()
            .map(|(id, s_i, pop)| Ok((fuse_popularity(score(&s_u, s_i), *pop)?, id)))
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.truncate(k);
        let (scores, items) = scored.into_iter().map(|(s, id)| (s, id.clone())).unzip();
        Ok(Recommendation { list: RankedList::new(user.user.clone(), items, scores)?, fallback: false })
    }
}

/// One-shot form of [`ColdStartRecommender::recommend`].
#[allow(clippy::too_many_arguments)]
pub fn cold_start_recommend(
    new_user: &NewUser,
    catalog: &[CatalogItem],
    params: &ModelParams,
    table: &EmbeddingTable,
    clusters: &ClusterModel,
    user_vectors: &HashMap<UserId, Vec<f64>>,
    group_len: usize,
    fallback: &RankedList,
    k: usize,
) -> Result<Recommendation> {
    ColdStartRecommender::new(params, catalog, table, clusters, user_vectors, group_len, fallback)?
        .recommend(new_user, k)
}
