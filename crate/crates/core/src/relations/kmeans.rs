//! Lloyd's k-means with k-means++ seeding.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::embedding::UserVector;
use crate::linalg::{axpy, squared_distance};
use crate::{Error, Result, UserId};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Vec<Vec<f64>>,
    assignment: BTreeMap<UserId, usize>,
    /// Within-cluster sum of squares after each assignment step.
    wcss_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn assignment(&self) -> &BTreeMap<UserId, usize> {
        &self.assignment
    }

    pub fn cluster_of(&self, user: &UserId) -> Option<usize> {
        self.assignment.get(user).copied()
    }

    pub fn wcss_history(&self) -> &[f64] {
        &self.wcss_history
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, v: &[f64]) -> usize {
        nearest(&self.centroids, v).0
    }

    /// Users assigned to `cluster`, in ID order.
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = &UserId> {
        self.assignment.iter().filter(move |(_, &c)| c == cluster).map(|(u, _)| u)
    }

    /// Text form: `k=<k> dim=<d> users=<n>`, then one `centroid <v1> ... <vd>`
    /// line per cluster and one `<user> <cluster>` line per assignment.
    pub fn to_text(&self) -> String {
        let mut out = format!("k={} dim={} users={}\n", self.k(), self.dim(), self.assignment.len());
        for c in &self.centroids {
            out.push_str("centroid");
            for x in c {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        for (u, c) in &self.assignment {
            writeln!(out, "{u} {c}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::parse(path, line, msg);
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        let fields: Vec<usize> = header
            .split(' ')
            .zip(["k=", "dim=", "users="])
            .filter_map(|(f, key)| f.strip_prefix(key)?.parse().ok())
            .collect();
        let [k, dim, users] = fields[..] else {
            return Err(bad(1, format!("bad cluster header `{header}`")));
        };
        let mut centroids = Vec::with_capacity(k);
        let mut assignment = BTreeMap::new();
        for (no, line) in lines {
            let mut parts = line.split(' ');
            let head = parts.next().unwrap_or_default();
            if centroids.len() < k {
                if head != "centroid" {
                    return Err(bad(no + 1, "expected a centroid line".into()));
                }
                let v = parts
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| bad(no + 1, e.to_string()))?;
                if v.len() != dim {
                    return Err(bad(no + 1, format!("centroid has {} components", v.len())));
                }
                centroids.push(v);
            } else {
                let c: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .filter(|&c| c < k)
                    .ok_or_else(|| bad(no + 1, format!("bad assignment `{line}`")))?;
                assignment.insert(UserId::from(head), c);
            }
        }
        if centroids.len() != k || assignment.len() != users {
            return Err(bad(1, "cluster file is truncated".into()));
        }
        Ok(ClusterModel { centroids, assignment, wcss_history: Vec::new() })
    }
}

fn nearest(centroids: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut wcss = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (i, d) = nearest(centroids, p);
            wcss += d;
            i
        })
        .collect();
    (labels, wcss)
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        // At least k distinct points exist, so some point is still uncovered.
        let pick = WeightedIndex::new(&d2).expect("a point with positive distance remains").sample(rng);
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters user vectors into `k` groups.
///
/// Runs until assignments stop changing or `max_iters` centroid updates have
/// been made. The returned assignment is always the nearest-centroid
/// assignment for the returned centroids. An emptied cluster keeps its previous
/// centroid.
pub fn kmeans(vectors: &[UserVector], k: usize, max_iters: usize, seed: u64) -> Result<ClusterModel> {
    if k == 0 || max_iters == 0 {
        return Err(Error::Config("k-means needs k >= 1 and max_iters >= 1".into()));
    }
    let dim = vectors.first().map_or(0, |v| v.vec.len());
    if vectors.iter().any(|v| v.vec.len() != dim) {
        return Err(Error::Shape("user vectors have mixed dimensions".into()));
    }
    let distinct: HashSet<Vec<u64>> = vectors.iter().map(|v| v.vec.iter().map(|x| x.to_bits()).collect()).collect();
    if k > distinct.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} distinct user vectors", distinct.len())));
    }

    let points: Vec<&[f64]> = vectors.iter().map(|v| v.vec.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(&points, k, &mut rng);
    let (mut labels, wcss) = assign(&points, &centroids);
    let mut wcss_history = vec![wcss];

    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            axpy(1.0, p, &mut sums[l]);
            sizes[l] += 1;
        }
        for ((c, sum), &n) in centroids.iter_mut().zip(sums).zip(&sizes) {
            if n > 0 {
                *c = sum.into_iter().map(|x| x / n as f64).collect();
            }
        }
        let (next, wcss) = assign(&points, &centroids);
        wcss_history.push(wcss);
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }

    let assignment = vectors.iter().zip(labels).map(|(v, l)| (v.user.clone(), l)).collect();
    Ok(ClusterModel { centroids, assignment, wcss_history })
}
