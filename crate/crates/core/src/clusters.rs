//! Mode detection and per-cluster evidence/volume bookkeeping.
//!
//! Clusters are found by growing `k` in a symmetric k-nearest-neighbour graph
//! until the multiset of connected-component sizes stops changing. Each
//! cluster then carries expectations of its prior volume `X_p` and evidence
//! `Z_p` (plus second moments and cross terms) so new points can be spawned
//! in proportion to `X̄_p` and the evidence variance can be reported. All
//! moments are non-negative and stored as natural logarithms.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, log_sum_exp};

/// Upper bound on `k` in the stabilization scan.
pub const MAX_K: usize = 40;

/// Partitions `points` into mode-separated groups.
///
/// Coordinates are standardized per dimension first. Labels are `0..m` in
/// order of first appearance.
pub fn find_clusters(points: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return vec![0; n];
    }
    let dim = points[0].len();
    let standardized = standardize(points, dim);

    let kmax = (n - 1).clamp(2, MAX_K);
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut order: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&standardized[i], &standardized[j]), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.truncate(kmax);
            order.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut prev: Option<(Vec<usize>, Vec<usize>)> = None;
    for k in 2..=kmax {
        let labels = knn_components(&neighbours, k);
        let sizes = size_multiset(&labels);
        if let Some((prev_sizes, _)) = &prev {
            if *prev_sizes == sizes {
                return labels;
            }
        }
        prev = Some((sizes, labels));
    }
    prev.map(|(_, labels)| labels).unwrap_or_else(|| vec![0; n])
}

/// Gap a partition must show, in median nearest-neighbour distances, before
/// the engine splits a cluster along it.
pub const MIN_SPLIT_SEPARATION: f64 = 3.0;

/// Smallest gap between any component of `labels` and the rest of the
/// points, in units of the median nearest-neighbour distance (both measured
/// after per-dimension standardization). Infinite for a single component.
pub fn split_separation(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    if n < 2 || labels.iter().all(|&l| l == labels[0]) {
        return f64::INFINITY;
    }
    let z = standardize(points, points[0].len());
    let mut nearest = vec![f64::INFINITY; n];
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(&z[i], &z[j]);
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
            if labels[i] != labels[j] {
                gap = gap.min(d);
            }
        }
    }
    nearest.sort_by(f64::total_cmp);
    let median = nearest[n / 2];
    if median > 0.0 {
        (gap / median).sqrt()
    } else {
        f64::INFINITY
    }
}

fn standardize(points: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for p in points {
        for ((s, x), m) in sd.iter_mut().zip(p).zip(&mean) {
            *s += (x - m) * (x - m) / n;
        }
    }
    for s in sd.iter_mut() {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    points
        .iter()
        .map(|p| p.iter().zip(&mean).zip(&sd).map(|((x, m), s)| (x - m) / s).collect())
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Connected components of the graph joining each point to its `k` nearest.
fn knn_components(neighbours: &[Vec<usize>], k: usize) -> Vec<usize> {
    let n = neighbours.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, nb) in neighbours.iter().enumerate() {
        for &j in nb.iter().take(k) {
            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = root(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}

fn size_multiset(labels: &[usize]) -> Vec<usize> {
    let m = labels.iter().max().map_or(0, |l| l + 1);
    let mut sizes = vec![0; m];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes.sort_unstable();
    sizes
}

/// Moments of one cluster, all as natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    /// Stable identifier; survives removal of other clusters.
    pub id: usize,
    /// Live points currently in the cluster.
    pub n: usize,
    pub log_x: f64,
    pub log_x2: f64,
    /// `ln E[Z·X_p]`
    pub log_zx: f64,
    pub log_zp: f64,
    pub log_zp2: f64,
    /// `ln E[Z_p·X_p]`
    pub log_zpxp: f64,
}

/// Prior-volume bookkeeping for a single kill, as needed to place the dead
/// point on the volume axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillVolume {
    /// Cluster volume before the kill.
    pub log_x_before: f64,
    /// Live points in the cluster before the kill (the contraction uses n/(n+1)).
    pub n_before: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMoments {
    log_z: f64,
    log_z2: f64,
    clusters: Vec<ClusterStats>,
    /// `ln E[X_p X_q]` for `p ≠ q`, indexed by position in `clusters`.
    cross: Vec<Vec<f64>>,
    /// `(id, ln Z̄_p)` of clusters that ran out of live points.
    retired: Vec<(usize, f64)>,
    next_id: usize,
}

/// Consumption state for the final sweep over the remaining live points,
/// where all clusters are pooled into one volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledVolume {
    pub log_x: f64,
    log_x2: f64,
    log_zx: f64,
}

impl ClusterMoments {
    /// One cluster holding all `n_live` points: `Z̄ = 0`, `X̄ = X̄² = 1`.
    pub fn init(n_live: usize) -> Self {
        assert!(n_live >= 1, "need at least one live point");
        Self {
            log_z: f64::NEG_INFINITY,
            log_z2: f64::NEG_INFINITY,
            clusters: vec![ClusterStats {
                id: 0,
                n: n_live,
                log_x: 0.0,
                log_x2: 0.0,
                log_zx: f64::NEG_INFINITY,
                log_zp: f64::NEG_INFINITY,
                log_zp2: f64::NEG_INFINITY,
                log_zpxp: f64::NEG_INFINITY,
            }],
            cross: vec![vec![f64::NEG_INFINITY]],
            retired: Vec::new(),
            next_id: 1,
        }
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_z2(&self) -> f64 {
        self.log_z2
    }

    pub fn clusters(&self) -> &[ClusterStats] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.id == id)
    }

    pub fn log_cross(&self, p: usize, q: usize) -> f64 {
        self.cross[p][q]
    }

    /// `ln Σ_p X̄_p`.
    pub fn log_x_total(&self) -> f64 {
        let v: Vec<f64> = self.clusters.iter().map(|c| c.log_x).collect();
        log_sum_exp(&v)
    }

    /// `(id, ln Z̄_p)` over live and retired clusters.
    pub fn cluster_log_z(&self) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = self.clusters.iter().map(|c| (c.id, c.log_zp)).collect();
        all.extend_from_slice(&self.retired);
        all.sort_by_key(|(id, _)| *id);
        all
    }

    /// Relative spread `√(Z̄² − Z̄²)/Z̄`, i.e. σ(ln Z) by the delta method.
    pub fn log_z_sigma(&self) -> f64 {
        if self.log_z == f64::NEG_INFINITY {
            return 0.0;
        }
        let rel_var = (self.log_z2 - 2.0 * self.log_z).exp() - 1.0;
        rel_var.max(0.0).sqrt()
    }

    /// Records the removal of a point with log-likelihood `log_l` from
    /// cluster `p`. All right-hand sides use the pre-update moments.
    pub fn kill_update(&mut self, p: usize, log_l: f64) -> Result<KillVolume> {
        let c = self
            .clusters
            .get(p)
            .ok_or_else(|| Error::Contract(format!("no cluster at index {p}")))?
            .clone();
        if c.n == 0 {
            return Err(Error::Contract(format!("cluster {} has no live points to kill", c.id)));
        }
        if !log_l.is_finite() {
            return Err(Error::Contract(format!("kill with non-finite log-likelihood {log_l}")));
        }
        let n = c.n as f64;
        let ln_n = n.ln();
        let ln_n1 = (n + 1.0).ln();
        let ln_n2 = (n + 2.0).ln();
        let ln2 = std::f64::consts::LN_2;

        let gain = c.log_x + log_l - ln_n1;
        let second = ln2 + c.log_x2 + 2.0 * log_l - ln_n1 - ln_n2;
        let mixed = ln_n + c.log_x2 + log_l - ln_n1 - ln_n2;

        self.log_z = log_add_exp(self.log_z, gain);
        self.log_z2 = log_add_exp(log_add_exp(self.log_z2, ln2 + c.log_zx + log_l - ln_n1), second);

        for q in 0..self.clusters.len() {
            if q != p {
                let add = self.cross[p][q] + log_l - ln_n1;
                self.clusters[q].log_zx = log_add_exp(self.clusters[q].log_zx, add);
            }
        }
        for q in 0..self.clusters.len() {
            if q != p {
                let v = ln_n + self.cross[p][q] - ln_n1;
                self.cross[p][q] = v;
                self.cross[q][p] = v;
            }
        }

        let cp = &mut self.clusters[p];
        cp.log_zp = log_add_exp(c.log_zp, gain);
        cp.log_zp2 = log_add_exp(log_add_exp(c.log_zp2, ln2 + c.log_zpxp + log_l - ln_n1), second);
        cp.log_zx = log_add_exp(ln_n + c.log_zx - ln_n1, mixed);
        cp.log_zpxp = log_add_exp(ln_n + c.log_zpxp - ln_n1, mixed);
        cp.log_x = c.log_x + ln_n - ln_n1;
        cp.log_x2 = c.log_x2 + ln_n - ln_n2;
        cp.n -= 1;

        Ok(KillVolume {
            log_x_before: c.log_x,
            n_before: c.n,
        })
    }

    /// Registers `count` new live points in cluster `p`.
    pub fn add_points(&mut self, p: usize, count: usize) {
        self.clusters[p].n += count;
    }

    /// Drops clusters without live points. Their accumulated `Z̄_p` is kept
    /// for reporting; their remaining volume is not redistributed.
    pub fn remove_empty(&mut self) -> Vec<usize> {
        let mut removed = Vec::new();
        let mut p = 0;
        while p < self.clusters.len() {
            if self.clusters[p].n == 0 {
                let c = self.clusters.remove(p);
                self.cross.remove(p);
                for row in self.cross.iter_mut() {
                    row.remove(p);
                }
                self.retired.push((c.id, c.log_zp));
                removed.push(c.id);
            } else {
                p += 1;
            }
        }
        removed
    }

    /// Replaces cluster `p` by children of sizes `sizes` (summing to `n_p`).
    /// Returns the indices of the children, in the order of `sizes`.
    pub fn split(&mut self, p: usize, sizes: &[usize]) -> Result<Vec<usize>> {
        let parent = self
            .clusters
            .get(p)
            .ok_or_else(|| Error::Contract(format!("no cluster at index {p}")))?
            .clone();
        if sizes.is_empty() || sizes.contains(&0) || sizes.iter().sum::<usize>() != parent.n {
            return Err(Error::Contract(format!(
                "split sizes {sizes:?} do not partition the {} points of cluster {}",
                parent.n, parent.id
            )));
        }
        let n = parent.n as f64;
        let ln_n = n.ln();
        let ln_nn1 = ln_n + (n + 1.0).ln();
        let old_cross = self.cross[p].clone();

        let mut indices = Vec::with_capacity(sizes.len());
        for (k, &size) in sizes.iter().enumerate() {
            let ni = size as f64;
            let frac = ni.ln() - ln_n;
            let frac2 = ni.ln() + (ni + 1.0).ln() - ln_nn1;
            let child = ClusterStats {
                id: self.next_id,
                n: size,
                log_x: frac + parent.log_x,
                log_x2: frac2 + parent.log_x2,
                log_zx: frac + parent.log_zx,
                log_zp: frac + parent.log_zp,
                log_zp2: frac2 + parent.log_zp2,
                log_zpxp: frac2 + parent.log_zpxp,
            };
            self.next_id += 1;
            if k == 0 {
                self.clusters[p] = child;
                indices.push(p);
            } else {
                self.clusters.push(child);
                for row in self.cross.iter_mut() {
                    row.push(f64::NEG_INFINITY);
                }
                self.cross.push(vec![f64::NEG_INFINITY; self.clusters.len()]);
                indices.push(self.clusters.len() - 1);
            }
        }

        // Cross terms: children with outside clusters, then children pairwise.
        let outside: Vec<usize> = (0..old_cross.len()).filter(|&q| q != p).collect();
        for (k, &i) in indices.iter().enumerate() {
            let frac = (sizes[k] as f64).ln() - ln_n;
            for &q in &outside {
                let v = frac + old_cross[q];
                self.cross[i][q] = v;
                self.cross[q][i] = v;
            }
            for (l, &j) in indices.iter().enumerate() {
                if l != k {
                    self.cross[i][j] = (sizes[k] as f64).ln() + (sizes[l] as f64).ln() - ln_nn1 + parent.log_x2;
                }
            }
            self.cross[i][i] = f64::NEG_INFINITY;
        }
        Ok(indices)
    }

    /// Pools every live cluster into one volume for the final sweep.
    pub fn pool(&self) -> PooledVolume {
        let m = self.clusters.len();
        let mut x2_terms: Vec<f64> = self.clusters.iter().map(|c| c.log_x2).collect();
        for p in 0..m {
            for q in 0..m {
                if p != q {
                    x2_terms.push(self.cross[p][q]);
                }
            }
        }
        let zx: Vec<f64> = self.clusters.iter().map(|c| c.log_zx).collect();
        PooledVolume {
            log_x: self.log_x_total(),
            log_x2: log_sum_exp(&x2_terms),
            log_zx: log_sum_exp(&zx),
        }
    }

    /// Final-sweep kill at a fixed population `n`: `Z += X L/(n+1)`,
    /// `X *= n/(n+1)`, with the second moments carried along. The gain is
    /// credited to cluster `p`'s `Z̄_p`. Returns the pooled volume before the kill.
    pub fn final_kill(&mut self, pooled: &mut PooledVolume, p: usize, log_l: f64, n: usize) -> f64 {
        let n = n as f64;
        let ln_n = n.ln();
        let ln_n1 = (n + 1.0).ln();
        let ln_n2 = (n + 2.0).ln();
        let ln2 = std::f64::consts::LN_2;
        let before = *pooled;
        let gain = before.log_x + log_l - ln_n1;
        self.log_z = log_add_exp(self.log_z, gain);
        self.log_z2 = log_add_exp(
            log_add_exp(self.log_z2, ln2 + before.log_zx + log_l - ln_n1),
            ln2 + before.log_x2 + 2.0 * log_l - ln_n1 - ln_n2,
        );
        pooled.log_zx = log_add_exp(ln_n + before.log_zx - ln_n1, ln_n + before.log_x2 + log_l - ln_n1 - ln_n2);
        pooled.log_x2 = before.log_x2 + ln_n - ln_n2;
        pooled.log_x = before.log_x + ln_n - ln_n1;
        self.clusters[p].log_zp = log_add_exp(self.clusters[p].log_zp, gain);
        before.log_x
    }
}

/// Draws a cluster index for each of `n_spawn` new points with probability
/// proportional to `X̄_p`, among clusters that still hold a live point.
pub fn spawn_allocation<R: Rng + ?Sized>(m: &ClusterMoments, n_spawn: usize, rng: &mut R) -> Result<Vec<usize>> {
    let eligible: Vec<usize> = (0..m.clusters.len()).filter(|&p| m.clusters[p].n >= 1).collect();
    if eligible.is_empty() {
        return Err(Error::Contract("every cluster is empty; nothing to spawn from".into()));
    }
    if eligible.len() == 1 {
        return Ok(vec![eligible[0]; n_spawn]);
    }
    let max = eligible
        .iter()
        .map(|&p| m.clusters[p].log_x)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = eligible.iter().map(|&p| (m.clusters[p].log_x - max).exp()).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::Contract(format!("spawn weights: {e}")))?;
    Ok((0..n_spawn).map(|_| eligible[dist.sample(rng)]).collect())
}
