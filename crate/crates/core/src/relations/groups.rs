//! User groups, item groups and the interaction matrix that links them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{Display, Write as _};
use std::path::Path;

use super::ClusterModel;
use crate::embedding::EmbeddingTable;
use crate::linalg::{cosine, squared_distance};
use crate::{Error, ItemId, Result, UserId};

/// Group members ordered with the target last, front-padded to a fixed
/// length. Padding slots are zero vectors masked out of attention and are
/// stored only as a count.
#[derive(Debug, Clone, PartialEq)]
pub struct Group<I> {
    members: Vec<(I, Vec<f64>)>,
    padding: usize,
}

pub type UserGroup = Group<UserId>;
pub type ItemGroup = Group<ItemId>;

impl<I: Clone + PartialEq + Display> Group<I> {
    /// `others` are the non-target members; the target is appended last.
    pub fn new(target: (I, Vec<f64>), others: Vec<(I, Vec<f64>)>, max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::Config("group length must be at least 1".into()));
        }
        if others.len() >= max_len {
            return Err(Error::Validation(format!(
                "{} members do not fit a group of length {max_len} with its target",
                others.len()
            )));
        }
        let dim = target.1.len();
        if others.iter().any(|(_, v)| v.len() != dim) {
            return Err(Error::Shape("group members have mixed dimensions".into()));
        }
        if others.iter().any(|(id, _)| *id == target.0) {
            return Err(Error::Validation(format!("target `{}` listed twice", target.0)));
        }
        let padding = max_len - others.len() - 1;
        let mut members = others;
        members.push(target);
        Ok(Group { members, padding })
    }

    pub fn target(&self) -> &I {
        &self.members.last().expect("groups always hold their target").0
    }

    pub fn target_vector(&self) -> &[f64] {
        &self.members.last().expect("groups always hold their target").1
    }

    /// Non-padding members, target last.
    pub fn members(&self) -> &[(I, Vec<f64>)] {
        &self.members
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    /// Total slot count, padding included.
    pub fn len(&self) -> usize {
        self.padding + self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.target_vector().len()
    }

    /// All slots front to back; `None` marks padding.
    pub fn slots(&self) -> impl Iterator<Item = Option<&[f64]>> {
        std::iter::repeat_n(None, self.padding).chain(self.members.iter().map(|(_, v)| Some(v.as_slice())))
    }

    /// `<target_id>\t<member_id,...>\t<pad_count>`, members target last.
    pub fn to_line(&self) -> String {
        let mut line = format!("{}\t", self.target());
        for (i, (id, _)) in self.members.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{id}").unwrap();
        }
        write!(line, "\t{}", self.padding).unwrap();
        line
    }
}

pub fn groups_to_text<I: Clone + PartialEq + Display>(groups: &[Group<I>]) -> String {
    groups.iter().map(|g| g.to_line() + "\n").collect()
}

/// Parses group lines, resolving member vectors through `resolve`.
pub fn groups_from_text<I>(text: &str, path: &Path, resolve: impl Fn(&str) -> Option<Vec<f64>>) -> Result<Vec<Group<I>>>
where
    I: Clone + PartialEq + Display + From<String>,
{
    let mut groups = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let bad = |msg: String| Error::parse(path, no + 1, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        let [target, members, pad] = fields[..] else {
            return Err(bad(format!("expected 3 tab-separated fields, got `{line}`")));
        };
        let padding: usize = pad.parse().map_err(|_| bad(format!("bad pad count `{pad}`")))?;
        let mut resolved = Vec::new();
        for id in members.split(',') {
            let v = resolve(id).ok_or_else(|| bad(format!("no vector for member `{id}`")))?;
            resolved.push((I::from(id.to_owned()), v));
        }
        let last = resolved.pop().ok_or_else(|| bad("empty member list".into()))?;
        if last.0.to_string() != target {
            return Err(bad(format!("target `{target}` is not the last member")));
        }
        let len = resolved.len() + 1 + padding;
        groups.push(Group::new(last, resolved, len).map_err(|e| bad(e.to_string()))?);
    }
    Ok(groups)
}

/// Binary click labels; each (user, item) pair appears once and a click
/// anywhere wins over an impression.
#[derive(Debug, Clone, Default)]
pub struct InteractionMatrix {
    labels: BTreeMap<(UserId, ItemId), bool>,
    clicks: HashMap<UserId, BTreeSet<ItemId>>,
}

impl InteractionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: UserId, item: ItemId, clicked: bool) {
        if clicked {
            self.clicks.entry(user.clone()).or_default().insert(item.clone());
        }
        *self.labels.entry((user, item)).or_insert(false) |= clicked;
    }

    pub fn label(&self, user: &UserId, item: &ItemId) -> Option<bool> {
        self.labels.get(&(user.clone(), item.clone())).copied()
    }

    /// Items with label 1 for `user`, in ID order.
    pub fn clicked_by(&self, user: &UserId) -> impl Iterator<Item = &ItemId> {
        self.clicks.get(user).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, &ItemId, bool)> {
        self.labels.iter().map(|((u, i), &l)| (u, i, l))
    }
}

/// Group for a user whose vector is known but who may be absent from the
/// cluster model (a cold-start user): up to `max_len - 1` members of
/// `cluster` nearest to `target_vec`, ties by user ID.
pub fn user_group_in_cluster(
    target: &UserId,
    target_vec: &[f64],
    cluster: usize,
    model: &ClusterModel,
    vectors: &HashMap<UserId, Vec<f64>>,
    max_len: usize,
) -> Result<UserGroup> {
    let mut friends: Vec<(f64, &UserId, &Vec<f64>)> = model
        .members(cluster)
        .filter(|u| *u != target)
        .filter_map(|u| vectors.get(u).map(|v| (squared_distance(v, target_vec), u, v)))
        .collect();
    friends.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    friends.truncate(max_len.saturating_sub(1));
    let others = friends.into_iter().map(|(_, u, v)| (u.clone(), v.clone())).collect();
    Group::new((target.clone(), target_vec.to_vec()), others, max_len)
}

/// Group of `target` and its nearest co-clustered friends.
pub fn build_user_group(
    target: &UserId,
    model: &ClusterModel,
    vectors: &HashMap<UserId, Vec<f64>>,
    max_len: usize,
) -> Result<UserGroup> {
    let cluster =
        model.cluster_of(target).ok_or_else(|| Error::Lookup { kind: "clustered user", id: target.to_string() })?;
    let vec = vectors.get(target).ok_or_else(|| Error::Lookup { kind: "user vector", id: target.to_string() })?;
    user_group_in_cluster(target, vec, cluster, model, vectors, max_len)
}

/// The `n` items most cosine-similar to `target`, excluding itself; ties by
/// item ID.
pub fn i2i_recall(target: &ItemId, table: &EmbeddingTable, n: usize) -> Result<Vec<ItemId>> {
    let tv = table.get(target.as_str()).ok_or_else(|| Error::Lookup { kind: "item", id: target.to_string() })?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut scored: Vec<(f64, &str)> =
        table.iter().filter(|(t, _)| *t != target.as_str()).map(|(t, v)| (cosine(tv, v), t)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored.into_iter().take(n).map(|(_, t)| ItemId::from(t)).collect())
}

/// Item group from an explicit candidate pool: candidates sharing the
/// target's topic, ranked by cosine similarity to the target (ties by ID),
/// keeping up to `max_len - 1`. Duplicates, the target itself and candidates
/// without a vector are dropped.
pub fn item_group_from_candidates<'c, 't>(
    target: &ItemId,
    candidates: impl IntoIterator<Item = &'c ItemId>,
    table: &EmbeddingTable,
    topic_of: impl Fn(&ItemId) -> Option<&'t str>,
    max_len: usize,
) -> Result<ItemGroup> {
    let target_vec =
        table.get(target.as_str()).ok_or_else(|| Error::Data(format!("item `{target}` has no embedding")))?;
    let topic = topic_of(target).ok_or_else(|| Error::Data(format!("item `{target}` has no topic")))?;

    let pool: BTreeSet<&ItemId> = candidates.into_iter().filter(|c| *c != target).collect();
    let mut ranked: Vec<(f64, &ItemId, &[f64])> = pool
        .into_iter()
        .filter(|c| topic_of(c) == Some(topic))
        .filter_map(|c| table.get(c.as_str()).map(|v| (cosine(target_vec, v), c, v)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    ranked.truncate(max_len.saturating_sub(1));
    let others = ranked.into_iter().map(|(_, c, v)| (c.clone(), v.to_vec())).collect();
    Group::new((target.clone(), target_vec.to_vec()), others, max_len)
}

/// Item group over i2i recall plus the items clicked by members of `group`.
pub fn build_item_group<'t>(
    target: &ItemId,
    group: &UserGroup,
    interactions: &InteractionMatrix,
    table: &EmbeddingTable,
    topic_of: impl Fn(&ItemId) -> Option<&'t str>,
    max_len: usize,
    n_recall: usize,
) -> Result<ItemGroup> {
    if !table.contains(target.as_str()) {
        return Err(Error::Data(format!("item `{target}` has no embedding")));
    }
    let recalled = i2i_recall(target, table, n_recall)?;
    let clicked: Vec<&ItemId> = group.members().iter().flat_map(|(u, _)| interactions.clicked_by(u)).collect();
    item_group_from_candidates(target, recalled.iter().chain(clicked), table, topic_of, max_len)
}
