//! Seeded Lloyd's k-means with greedy farthest-point initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PresetError;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Inertia after each assignment step; non-increasing.
    pub inertia: Vec<f64>,
}

impl KMeansResult {
    pub fn final_inertia(&self) -> f64 {
        self.inertia.last().copied().unwrap_or(0.0)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Index of the centroid nearest `p`, ties to the lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Cluster `points` into `k` groups.
///
/// The first center is a seeded uniform pick; each further center is the
/// point farthest from the centers chosen so far (ties to the lowest index).
/// Iterates until assignments stop changing or `max_iters` is reached.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansResult, PresetError> {
    if k == 0 {
        return Err(PresetError::ZeroK);
    }
    if k > points.len() {
        return Err(PresetError::KTooLarge { k, n: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in closest.iter().enumerate() {
            if d > closest[far] {
                far = i;
            }
        }
        centroids.push(points[far].clone());
        for (c, p) in closest.iter_mut().zip(points) {
            *c = c.min(dist2(p, &points[far]));
        }
    }

    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut inertia = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut total = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            changed |= *a != j;
            *a = j;
            total += d;
        }
        if let Some(&prev) = inertia.last() {
            assert!(
                total <= prev * (1.0 + 1e-12) + 1e-12,
                "k-means inertia increased: {prev} -> {total}"
            );
        }
        inertia.push(total);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            // an emptied cluster keeps its previous center
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        inertia,
    })
}
