//! Heterogeneous user-user and item-item relations: k-means user clusters,
//! nearest-friend user groups and topic-filtered item groups.

mod groups;
mod kmeans;

pub use groups::{
    build_item_group, build_user_group, groups_from_text, groups_to_text, i2i_recall, item_group_from_candidates,
    user_group_in_cluster, Group, InteractionMatrix, ItemGroup, UserGroup,
};
pub use kmeans::{kmeans, ClusterModel};
