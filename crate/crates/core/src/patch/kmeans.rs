use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quat::QuaternionMatrix;

pub const KMEANS_MAX_ITER: usize = 50;

/// K-means assignment of patch columns to groups (0-based group ids).
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrouping {
    assignments: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Within-group sum of squares after each Lloyd iteration.
    pub objective_history: Vec<f64>,
}

impl PatchGrouping {
    /// Grouping from explicit labels; every group in `0..k` must be non-empty.
    pub fn from_assignments(assignments: Vec<usize>, k: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); k];
        for (p, &g) in assignments.iter().enumerate() {
            if g >= k {
                return Err(Error::InvalidParameter(format!(
                    "group id {g} out of range for k = {k}"
                )));
            }
            members[g].push(p);
        }
        if members.iter().any(Vec::is_empty) {
            return Err(Error::InvalidParameter("empty group".into()));
        }
        Ok(Self {
            assignments,
            members,
            objective_history: vec![],
        })
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Patch indices in group `k`, ascending.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

/// `max(1, ⌈P/100⌉)`.
pub fn default_group_count(patch_count: usize) -> usize {
    patch_count.div_ceil(100).max(1)
}

fn flatten(patches: &QuaternionMatrix) -> Vec<Vec<f64>> {
    (0..patches.cols())
        .map(|p| patches.col(p).iter().flat_map(|q| q.to_array()).collect())
        .collect()
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, the rest by D² sampling.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2
            .iter()
            .zip(&chosen)
            .filter(|(_, &c)| !c)
            .map(|(d, _)| d)
            .sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, (&d, &c)) in d2.iter().zip(&chosen).enumerate() {
                if c || d == 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            pick.expect("positive total weight")
        } else {
            // all remaining points coincide with a centre
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        let c = centroids.last().unwrap();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    centroids
}

fn recompute(points: &[Vec<f64>], assign: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &g) in points.iter().zip(assign) {
        counts[g] += 1;
        for (s, x) in sums[g].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

/// Moves the farthest member of the largest group into each empty group.
fn repair_empty(points: &[Vec<f64>], assign: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut repaired = false;
    loop {
        let mut counts = vec![0usize; k];
        assign.iter().for_each(|&g| counts[g] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let largest = (0..k)
            .max_by_key(|&g| (counts[g], std::cmp::Reverse(g)))
            .unwrap();
        let far = (0..points.len())
            .filter(|&i| assign[i] == largest)
            .max_by(|&a, &b| {
                dist2(&points[a], &centroids[largest])
                    .total_cmp(&dist2(&points[b], &centroids[largest]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        assign[far] = empty;
        centroids[empty] = points[far].clone();
        repaired = true;
    }
    repaired
}

fn objective(points: &[Vec<f64>], assign: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &g)| dist2(p, &centroids[g]))
        .sum()
}

/// Lloyd k-means on the real 4d-flattening of the patch columns.
pub fn kmeans_group(patches: &QuaternionMatrix, k: usize, seed: u64) -> Result<PatchGrouping> {
    let n = patches.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "group count {k} must be in 1..={n}"
        )));
    }
    let points = flatten(patches);
    let dim = 4 * patches.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(&points, k, &mut rng);
    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (g, _) = nearest(p, &centroids);
            if assign[i] != g {
                assign[i] = g;
                changed = true;
            }
        }
        changed |= repair_empty(&points, &mut assign, &mut centroids);
        centroids = recompute(&points, &assign, k, dim);
        history.push(objective(&points, &assign, &centroids));
        if !changed {
            break;
        }
    }
    let mut grouping = PatchGrouping::from_assignments(assign, k)?;
    grouping.objective_history = history;
    Ok(grouping)
}
