//! Spherical k-means with cosine similarity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::Sample;
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::sphere::{angle_from_dot, dot, normalize, UnitVector};

pub const RESTARTS: u64 = 10;
pub const MAX_ITER: usize = 100;
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labeling: Labeling,
    pub centroids: Vec<UnitVector>,
    /// `sum_i x_i . c_{label(i)}` at the final iteration.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each iteration of the winning restart.
    pub trace: Vec<f64>,
}

/// Best of [`RESTARTS`] runs, each seeded from `seed` on its own stream.
pub fn spherical_kmeans(sample: &Sample, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = sample.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let runs: Vec<KMeansResult> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            run(sample, k, &mut rng)
        })
        .collect::<Result<_>>()?;
    // first restart wins ties
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.objective > runs[best].objective {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

/// k-means++ seeding with squared geodesic distance weights.
fn seed_centroids(sample: &Sample, k: usize, rng: &mut ChaCha8Rng) -> Vec<UnitVector> {
    let n = sample.len();
    let mut centroids = vec![sample.get(rng.random_range(0..n)).clone()];
    let mut dist2: Vec<f64> = sample
        .iter()
        .map(|x| angle_from_dot(dot(x, &centroids[0])).powi(2))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in dist2.iter().enumerate() {
                acc += d;
                if acc > u {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = sample.get(pick).clone();
        for (d, x) in dist2.iter_mut().zip(sample.iter()) {
            *d = d.min(angle_from_dot(dot(x, &c)).powi(2));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest(x: &[f64], centroids: &[UnitVector]) -> (usize, f64) {
    let mut best = (0, dot(x, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let s = dot(x, c);
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

fn run(sample: &Sample, k: usize, rng: &mut ChaCha8Rng) -> Result<KMeansResult> {
    let d = sample.dim();
    let mut centroids = seed_centroids(sample, k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut next: Vec<usize> = sample.iter().map(|x| nearest(x, &centroids).0).collect();
        reseed_empty(sample, &mut next, &mut centroids);
        let mut sums = vec![vec![0.0; d]; k];
        for (x, &l) in sample.iter().zip(&next) {
            sums[l].iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
        }
        for (c, s) in centroids.iter_mut().zip(&sums) {
            // a zero resultant leaves the centroid where it was
            if let Ok(u) = normalize(s) {
                *c = u;
            }
        }
        let obj: f64 = sample.iter().zip(&next).map(|(x, &l)| dot(x, &centroids[l])).sum();
        if let Some(&prev) = trace.last() {
            assert!(obj >= prev - MONOTONE_TOL * sample.len() as f64, "k-means objective decreased");
        }
        trace.push(obj);
        let done = next == labels;
        labels = next;
        if done {
            break;
        }
    }
    Ok(KMeansResult {
        labeling: Labeling::with_groups(labels.iter().map(|l| l + 1).collect(), k)?,
        objective: *trace.last().expect("at least one iteration"),
        centroids,
        iterations,
        trace,
    })
}

/// Gives each empty cluster the point farthest from its own centroid.
fn reseed_empty(sample: &Sample, labels: &mut [usize], centroids: &mut [UnitVector]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    let mut moved = vec![false; labels.len()];
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| !moved[i] && counts[labels[i]] > 1)
            .min_by(|&a, &b| {
                dot(sample.get(a), &centroids[labels[a]]).total_cmp(&dot(sample.get(b), &centroids[labels[b]]))
            });
        if let Some(i) = far {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
            moved[i] = true;
            centroids[j] = sample.get(i).clone();
        }
    }
}
