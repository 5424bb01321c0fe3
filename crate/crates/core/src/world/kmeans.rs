use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lower index.
pub fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Pool size over ten, at least one cluster.
pub fn default_k(pool_size: usize) -> usize {
    (pool_size / 10).max(1)
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::Input("k must be positive".into()));
    }
    if k > points.len() {
        return Err(Error::Input(format!(
            "k = {k} exceeds {} points",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut assignments: Vec<usize> = points
        .iter()
        .map(|p| nearest_centroid(p, &centroids))
        .collect();
    let dim = points[0].len();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, &centroids))
            .collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(Clustering {
        assignments,
        centroids,
        iterations,
    })
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    chosen = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            chosen.expect("positive total implies a positive distance")
        } else {
            // Every remaining point coincides with a centroid.
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_domain, AttributeSchema};

    #[test]
    fn k_equal_to_pool_gives_singletons() {
        let pool = generate_domain(&AttributeSchema::default(), 40, 1).unwrap();
        let c = kmeans(&pool.feature_table(), 40, 2).unwrap();
        let mut seen = c.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 40);
    }

    #[test]
    fn final_assignment_is_nearest_centroid() {
        let pool = generate_domain(&AttributeSchema::default(), 300, 4).unwrap();
        let points = pool.feature_table();
        for seed in 0..5 {
            let c = kmeans(&points, default_k(points.len()), seed).unwrap();
            for (p, &a) in points.iter().zip(&c.assignments) {
                // brute force with explicit tie handling
                let d: Vec<f64> = c.centroids.iter().map(|m| squared_distance(p, m)).collect();
                let min = d.iter().copied().fold(f64::INFINITY, f64::min);
                let first = d.iter().position(|&x| x == min).unwrap();
                assert_eq!(a, first);
            }
        }
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(kmeans(&[vec![0.0]], 0, 0).is_err());
        assert!(kmeans(&[vec![0.0]], 2, 0).is_err());
    }

    #[test]
    fn default_k_is_a_tenth_of_the_pool() {
        assert_eq!(default_k(1000), 100);
        assert_eq!(default_k(5), 1);
    }
}
