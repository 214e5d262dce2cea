//! Checks shared by the acceptance runner and the integration tests. Every
//! reference value here is computed independently of the library code path
//! it is compared against.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use dirclust::bandwidth::{select, CvCriteria, SearchRange, Selector};
use dirclust::density::{sample_vmf_with, DensityModel, Sample, VmfParams};
use dirclust::hdr::{estimate_threshold, threshold_from_densities};
use dirclust::labeling::adjusted_rand_index;
use dirclust::sphere::{normalize, UnitVector};
use dirclust::tree::{build_merge_tree, Edge, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return normalize(&v).unwrap();
        }
    }
}

pub fn random_vmf_sample(rng: &mut ChaCha8Rng, d: usize, n: usize, kappa: (f64, f64)) -> Sample {
    let p = VmfParams::new(random_direction(rng, d), rng.random_range(kappa.0..kappa.1)).unwrap();
    sample_vmf_with(&p, n, rng)
}

/// Periodic trapezoid rule on the circle.
pub fn circle_integral(f: impl Fn(&UnitVector) -> f64, m: usize) -> f64 {
    let step = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let t = i as f64 * step;
            f(&normalize(&[t.cos(), t.sin()]).unwrap())
        })
        .sum::<f64>()
        * step
}

/// Midpoint rule in (z, longitude); the area element is exactly dz dlon.
pub fn sphere_integral(f: impl Fn(&UnitVector) -> f64, nz: usize, nlon: usize) -> f64 {
    let dz = 2.0 / nz as f64;
    let dl = 2.0 * PI / nlon as f64;
    let mut total = 0.0;
    for i in 0..nz {
        let z = -1.0 + (i as f64 + 0.5) * dz;
        let r = (1.0 - z * z).sqrt();
        for j in 0..nlon {
            let l = (j as f64 + 0.5) * dl;
            total += f(&normalize(&[r * l.cos(), r * l.sin(), z]).unwrap());
        }
    }
    total * dz * dl
}

/// Kernel estimates fitted by likelihood cross-validation integrate to one.
pub fn kde_normalization() -> Check {
    let mut r = rng(101);
    let mut worst2: f64 = 0.0;
    let mut worst3: f64 = 0.0;
    for _ in 0..20 {
        let n = r.random_range(20..80);
        let s = random_vmf_sample(&mut r, 2, n, (1.0, 20.0));
        let h = select(&s, Selector::Lcv, SearchRange::default()).map_err(|e| e.to_string())?.h;
        let m = DensityModel::kde(s, h).unwrap();
        let total = circle_integral(|x| m.density(x).unwrap(), 10_000);
        worst2 = worst2.max((total - 1.0).abs());
    }
    for _ in 0..20 {
        let n = r.random_range(20..60);
        let s = random_vmf_sample(&mut r, 3, n, (1.0, 20.0));
        let h = select(&s, Selector::Lcv, SearchRange::default()).map_err(|e| e.to_string())?.h;
        let m = DensityModel::kde(s, h).unwrap();
        let total = sphere_integral(|x| m.density(x).unwrap(), 400, 800);
        worst3 = worst3.max((total - 1.0).abs());
    }
    let detail = format!("max |integral - 1|: d=2 {worst2:.2e} (tol 1e-6), d=3 {worst3:.2e} (tol 1e-3)");
    if worst2 <= 1e-6 && worst3 <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Closed-form integral of the squared estimate against quadrature.
pub fn lscv_quadrature() -> Check {
    let mut r = rng(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = r.random_range(5..60);
        let s = random_vmf_sample(&mut r, 2, n, (0.5, 15.0));
        let h = r.random_range(0.1..1.0);
        let closed = CvCriteria::new(&s).unwrap().integrated_square(h).unwrap();
        let m = DensityModel::kde(s, h).unwrap();
        let quad = circle_integral(|x| m.density(x).unwrap().powi(2), 10_000);
        worst = worst.max((closed - quad).abs());
    }
    let detail = format!("max |closed form - quadrature| = {worst:.2e} (tol 1e-5)");
    if worst <= 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Components of `{v : f(v) >= k}` joined by edges of weight `>= k`, by depth-first search.
/// Zero-weight edges never join vertices.
pub fn dfs_components(density: &[f64], edges: &[Edge], k: f64) -> BTreeSet<Vec<usize>> {
    let n = density.len();
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        if e.weight >= k && e.weight > 0.0 {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
    }
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for start in 0..n {
        if seen[start] || density[start] < k {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &adj[v] {
                if !seen[w] && density[w] >= k {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.insert(comp);
    }
    out
}

/// Merge tree components against depth-first search on random weighted graphs.
pub fn merge_tree_vs_dfs() -> Check {
    let mut r = rng(303);
    let mut levels_checked = 0;
    for instance in 0..200 {
        let n = r.random_range(1..=100);
        let coarse = r.random_bool(0.5);
        let density: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = r.random_range(0.01..1.0);
                // coarse values force ties between vertices
                if coarse { (v * 8.0).ceil() / 8.0 } else { v }
            })
            .collect();
        let p = r.random_range(0.0..0.15);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if r.random_bool(p) {
                    let cap = density[i].min(density[j]);
                    let weight = match r.random_range(0..4) {
                        0 => 0.0,
                        1 => cap,
                        _ => cap * r.random_range(0.0..1.0),
                    };
                    edges.push(Edge { i, j, weight });
                }
            }
        }
        let g = WeightedGraph::from_parts(density.clone(), edges.clone()).map_err(|e| e.to_string())?;
        let tree = build_merge_tree(&g);
        let mut candidates: Vec<f64> = density.iter().copied().chain(edges.iter().map(|e| e.weight)).filter(|&w| w > 0.0).collect();
        for _ in 0..5 {
            candidates.push(r.random_range(0.001..1.0));
        }
        for _ in 0..20 {
            let k = candidates[r.random_range(0..candidates.len())];
            let expected = dfs_components(&density, &edges, k);
            let got: BTreeSet<Vec<usize>> = tree.components_at_level(k).into_iter().collect();
            if got != expected {
                return Err(format!("instance {instance}, n = {n}, level {k}: tree {got:?} vs dfs {expected:?}"));
            }
            if tree.count_at_level(k) != expected.len() {
                return Err(format!("instance {instance}, level {k}: count {} vs {}", tree.count_at_level(k), expected.len()));
            }
            levels_checked += 1;
        }
    }
    Ok(format!("200 instances, {levels_checked} levels, all equal"))
}

/// Probability mass of `{f >= t}` by independent quadrature.
fn superlevel_mass(model: &DensityModel, t: f64) -> f64 {
    let f = |x: &UnitVector| {
        let v = model.density(x).unwrap();
        if v >= t { v } else { 0.0 }
    };
    match model.dim() {
        2 => circle_integral(f, 200_000),
        _ => sphere_integral(f, 600, 1200),
    }
}

/// Sample coverage and nesting of estimated regions, and population coverage
/// of mixture regions.
pub fn hdr_coverage_nesting() -> Check {
    let mut r = rng(404);
    let mut worst_pop: f64 = 0.0;
    for draw in 0..50 {
        let d = if draw % 5 == 4 { 3 } else { 2 };
        let mut comps: Vec<(f64, VmfParams)> = (0..r.random_range(1..=3))
            .map(|_| (r.random_range(0.5..2.0), VmfParams::new(random_direction(&mut r, d), r.random_range(0.5..25.0)).unwrap()))
            .collect();
        let total: f64 = comps.iter().map(|c| c.0).sum();
        comps.iter_mut().for_each(|c| c.0 /= total);
        let mixture = DensityModel::mixture(comps).unwrap();
        let n = r.random_range(30..300);
        let parts: Vec<Sample> = match mixture.kind() {
            dirclust::density::ModelKind::Mixture(m) => m
                .components()
                .iter()
                .map(|(_, p)| sample_vmf_with(p, n, &mut r))
                .collect(),
            _ => unreachable!(),
        };
        let sample = Sample::concat(&parts).unwrap();
        let mut tau = [r.random_range(0.001..0.999), r.random_range(0.001..0.999)];
        tau.sort_by(f64::total_cmp);

        // sample version with a kernel estimate
        let kde = DensityModel::kde(sample.clone(), r.random_range(0.15..0.8)).unwrap();
        let dens = kde.densities(&sample).unwrap();
        let m = dens.len();
        let t: Vec<f64> = tau.iter().map(|&x| threshold_from_densities(&dens, x).unwrap()).collect();
        for (ti, taui) in t.iter().zip(tau) {
            let inside = dens.iter().filter(|&&v| v >= *ti).count();
            let strictly = dens.iter().filter(|&&v| v > *ti).count();
            let k = (taui * m as f64 + 1e-9).floor() as usize;
            if (inside as f64) < (1.0 - taui) * m as f64 - 1e-9 || strictly > m - k {
                return Err(format!("draw {draw}: tau {taui} covers {inside} (strictly {strictly}) of {m}"));
            }
        }
        if t[0] > t[1] || dens.iter().any(|&v| v >= t[1] && v < t[0]) {
            return Err(format!("draw {draw}: regions for tau {tau:?} are not nested"));
        }

        // population version for the mixture itself
        let specs: Vec<_> = tau.iter().map(|&x| estimate_threshold(&mixture, &sample, x).unwrap()).collect();
        if specs[0].threshold > specs[1].threshold {
            return Err(format!("draw {draw}: population thresholds decrease in tau"));
        }
        for s in &specs {
            let mass = superlevel_mass(&mixture, s.threshold);
            worst_pop = worst_pop.max((mass - (1.0 - s.tau)).abs());
        }
    }
    let detail = format!("50 draws; population coverage error max {worst_pop:.2e} (tol 2e-3)");
    if worst_pop <= 2e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Adjusted Rand index from pair counts: `2 (n00 n11 - n01 n10) / ((n00 + n01)(n01 + n11) + (n00 + n10)(n10 + n11))`.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (n00 * n11 - n01 * n10) / den
    }
}

pub fn ari_oracle() -> Check {
    let mut r = rng(505);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=12);
        let ka = r.random_range(1..=4);
        let kb = r.random_range(1..=4);
        let a: Vec<usize> = (0..n).map(|_| r.random_range(1..=ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| r.random_range(1..=kb)).collect();
        let got = adjusted_rand_index(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((got - ari_pairs(&a, &b)).abs());
    }
    let hand = adjusted_rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2]).map_err(|e| e.to_string())?;
    let detail = format!("100 pairs, max deviation {worst:.1e}; (1,1,2,2) vs (1,2,1,2) = {hand}");
    if worst <= 1e-12 && hand == -0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
