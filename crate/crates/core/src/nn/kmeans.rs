use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NnError;

pub const MAX_ITER: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Clusters {
    pub dim: usize,
    /// `k × dim`, row-major.
    pub centers: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub counts: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster squared distance after each assignment step.
    pub inertia: Vec<f64>,
    /// Largest center movement in the last update.
    pub last_shift: f64,
    pub converged: bool,
}

impl Clusters {
    pub fn k(&self) -> usize {
        self.sigmas.len()
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(dim).enumerate() {
        let d = dist2(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding: each new center is a data point drawn with probability
/// proportional to its squared distance from the closest center so far.
fn seed_centers(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers = point(rng.gen_range(0..n)).to_vec();
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(point(i), &centers)).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        let c = point(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(point(i), &c));
        }
        centers.extend(c);
    }
    centers
}

/// Lloyd iterations from a seeded k-means++ start until no center moves by
/// `tol` or more, followed by per-cluster spreads.
///
/// A cluster's sigma is the standard deviation of all its members'
/// coordinates pooled together, as `np.std` over the member rows would give.
/// This is wider than the RMS distance to the center whenever features sit
/// at different levels, which keeps the Gaussians overlapping. Clusters with zero or one member get the mean sigma of the others; if no
/// cluster has two members, every sigma is half the mean distance from a
/// center to its nearest neighbour center.
pub fn kmeans(data: &[f64], dim: usize, k: usize, tol: f64, seed: u64) -> Result<Clusters, NnError> {
    kmeans_with_limit(data, dim, k, tol, seed, MAX_ITER)
}

pub fn kmeans_with_limit(data: &[f64], dim: usize, k: usize, tol: f64, seed: u64, max_iter: usize) -> Result<Clusters, NnError> {
    if dim == 0 || data.is_empty() || data.len() % dim != 0 {
        return Err(NnError::EmptyInput("no samples to cluster".into()));
    }
    let n = data.len() / dim;
    if k == 0 || k > n {
        return Err(NnError::EmptyInput(format!("cannot form {k} clusters from {n} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(data, dim, k, &mut rng);
    let mut assign = vec![0usize; n];
    let mut inertia = Vec::new();
    let mut last_shift = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut total = 0.0;
        for (i, x) in data.chunks_exact(dim).enumerate() {
            let (j, d) = nearest(x, &centers, dim);
            assign[i] = j;
            total += d;
        }
        inertia.push(total);

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (x, &j) in data.chunks_exact(dim).zip(&assign) {
            counts[j] += 1;
            sums[j * dim..(j + 1) * dim].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        last_shift = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                continue; // an empty cluster keeps its center
            }
            let c = &mut centers[j * dim..(j + 1) * dim];
            let mut moved = 0.0;
            for (cv, s) in c.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                let nv = s / counts[j] as f64;
                moved += (nv - *cv) * (nv - *cv);
                *cv = nv;
            }
            last_shift = last_shift.max(moved.sqrt());
        }
        if last_shift < tol {
            converged = true;
            break;
        }
    }

    let mut counts = vec![0usize; k];
    let mut sum = vec![0.0; k];
    let owner: Vec<usize> = data.chunks_exact(dim).map(|x| nearest(x, &centers, dim).0).collect();
    for (x, &j) in data.chunks_exact(dim).zip(&owner) {
        counts[j] += 1;
        sum[j] += x.iter().sum::<f64>();
    }
    let mean: Vec<f64> = (0..k).map(|j| sum[j] / (counts[j] * dim).max(1) as f64).collect();
    let mut spread = vec![0.0; k];
    for (x, &j) in data.chunks_exact(dim).zip(&owner) {
        spread[j] += x.iter().map(|v| (v - mean[j]) * (v - mean[j])).sum::<f64>();
    }
    let pooled = |j: usize| (spread[j] / (counts[j] * dim) as f64).sqrt();
    let populated: Vec<f64> = (0..k).filter(|&j| counts[j] >= 2).map(pooled).collect();
    let fallback = if populated.is_empty() {
        let nn: f64 = (0..k)
            .map(|j| {
                let c = &centers[j * dim..(j + 1) * dim];
                (0..k).filter(|&o| o != j).map(|o| dist2(c, &centers[o * dim..(o + 1) * dim])).fold(f64::INFINITY, f64::min)
            })
            .filter(|d| d.is_finite())
            .map(f64::sqrt)
            .sum::<f64>();
        if k > 1 { 0.5 * nn / k as f64 } else { 0.0 }
    } else {
        populated.iter().sum::<f64>() / populated.len() as f64
    };
    let sigmas = (0..k).map(|j| if counts[j] >= 2 { pooled(j) } else { fallback }).collect();

    Ok(Clusters { dim, centers, sigmas, counts, iterations, inertia, last_shift, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separable_pairs() {
        let c = kmeans(&[0.0, 0.1, 10.0, 10.1], 1, 2, 1e-6, 1).unwrap();
        let mut got = c.centers.clone();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - 0.05).abs() < 1e-12 && (got[1] - 10.05).abs() < 1e-12);
        assert!(c.sigmas.iter().all(|s| (s - 0.05).abs() < 1e-12));
        assert!(c.converged && c.last_shift < 1e-6);
    }

    #[test]
    fn one_center_per_distinct_point() {
        let data = [0.0, 0.0, 0.0, 3.0, 4.0, 0.0];
        let c = kmeans(&data, 2, 3, 1e-6, 5).unwrap();
        assert_eq!(c.counts, vec![1, 1, 1]);
        let mut got: Vec<(f64, f64)> = (0..3).map(|j| (c.center(j)[0], c.center(j)[1])).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![(0.0, 0.0), (0.0, 3.0), (4.0, 0.0)]);
        // nearest-neighbour distances 3, 3, 4
        assert!(c.sigmas.iter().all(|s| (s - 0.5 * 10.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn singleton_gets_mean_sigma_of_populated() {
        let data = [0.0, 1.0, 10.0, 12.0, 100.0];
        let c = kmeans(&data, 1, 3, 1e-6, 2).unwrap();
        let lone = (0..3).find(|&j| c.counts[j] == 1).unwrap();
        assert_eq!(c.center(lone), &[100.0]);
        assert!((c.sigmas[lone] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sigma_pools_all_coordinates() {
        // flattened members 0, 10, 2, 12 have mean 6 and variance 26
        let c = kmeans(&[0.0, 10.0, 2.0, 12.0], 2, 1, 1e-6, 0).unwrap();
        assert!((c.sigmas[0] - 26f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(kmeans(&[], 2, 1, 1e-6, 0), Err(NnError::EmptyInput(_))));
        assert!(kmeans(&[1.0, 2.0], 1, 3, 1e-6, 0).is_err());
        assert!(kmeans(&[1.0, 2.0], 1, 0, 1e-6, 0).is_err());
    }

    #[test]
    fn seeded() {
        let data: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        assert_eq!(kmeans(&data, 2, 5, 1e-6, 9).unwrap(), kmeans(&data, 2, 5, 1e-6, 9).unwrap());
    }

    proptest! {
        #[test]
        fn inertia_never_increases(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 10..60), k in 1usize..6, seed in any::<u64>()) {
            let data: Vec<f64> = pts.iter().flat_map(|&(a, b)| [a, b]).collect();
            let c = kmeans(&data, 2, k, 1e-9, seed).unwrap();
            for w in c.inertia.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
