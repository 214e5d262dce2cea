//! Simulation scenarios: pooled vMF groups, replicated clustering runs and
//! ARI summaries.
//!
//! Catalog ids:
//! * `circ-k{3,5,10}-d{pi6,2pi6,3pi6,2pi3}-n{750,1000,1500}`: two circular
//!   groups, `mu1 = pi/2`, `mu2 = mu1 + offset`.
//! * `circ3-k3-d{pi6,2pi6,3pi6,2pi3}-n750`: three circular groups with the
//!   offset applied twice.
//! * `sph-k20-d{pi9,pi6,2pi9,5pi18}-n{1000,2000}`: two groups on S^2 with
//!   `mu1 = (theta, phi) = (pi/4, pi/2)` (azimuth, polar angle) and the offset
//!   added to the azimuth, so the means lie on the equator `offset` apart.
//!
//! `n` is the size of each group.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{BandwidthChoice, SearchRange, Selector};
use crate::density::{sample_vmf_with, Sample, VmfParams};
use crate::error::{Error, Result};
use crate::hdr::TauGrid;
use crate::kmeans::spherical_kmeans;
use crate::labeling::adjusted_rand_index;
use crate::pipeline::{cluster, GraphMode, PipelineConfig};
use crate::sphere::{circular_to_cartesian, normalize, spherical_to_cartesian};
use crate::tree::graph::DEFAULT_STEP;

pub const CIRCULAR_REPS: usize = 50;
pub const SPHERICAL_REPS: usize = 25;
pub const DEFAULT_SEED: u64 = 20240501;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// Mean direction in Cartesian coordinates; normalized before use.
    pub mu: Vec<f64>,
    pub kappa: f64,
}

fn default_true() -> bool {
    true
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_graph() -> GraphMode {
    GraphMode::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub groups: Vec<GroupSpec>,
    pub n_per_group: usize,
    pub replications: usize,
    pub bandwidth: BandwidthChoice,
    #[serde(default = "default_true")]
    pub density: bool,
    #[serde(default = "default_true")]
    pub kmeans: bool,
    pub seed: u64,
    #[serde(default = "default_graph")]
    pub graph: GraphMode,
    #[serde(default = "default_step")]
    pub step: f64,
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.groups.first().map_or(0, |g| g.mu.len())
    }

    fn params(&self) -> Result<Vec<VmfParams>> {
        if self.groups.len() < 2 {
            return Err(Error::InvalidArgument("a scenario needs at least two groups".into()));
        }
        if self.replications == 0 || self.n_per_group == 0 {
            return Err(Error::InvalidArgument("replications and group size must be positive".into()));
        }
        if !self.density && !self.kmeans {
            return Err(Error::InvalidArgument("no method selected".into()));
        }
        let d = self.dim();
        self.groups
            .iter()
            .map(|g| {
                if g.mu.len() != d {
                    return Err(Error::DimMismatch { expected: d, found: g.mu.len() });
                }
                VmfParams::new(normalize(&g.mu)?, g.kappa)
            })
            .collect()
    }
}

const CIRC_OFFSETS: [(&str, f64); 4] = [("pi6", PI / 6.0), ("2pi6", 2.0 * PI / 6.0), ("3pi6", 3.0 * PI / 6.0), ("2pi3", 2.0 * PI / 3.0)];
const SPH_OFFSETS: [(&str, f64); 4] = [("pi9", PI / 9.0), ("pi6", PI / 6.0), ("2pi9", 2.0 * PI / 9.0), ("5pi18", 5.0 * PI / 18.0)];

fn scenario_template(id: String, groups: Vec<GroupSpec>, n: usize, spherical: bool) -> ScenarioConfig {
    ScenarioConfig {
        id,
        groups,
        n_per_group: n,
        replications: if spherical { SPHERICAL_REPS } else { CIRCULAR_REPS },
        bandwidth: BandwidthChoice::Select(if spherical { Selector::Lcv } else { Selector::RotCircular }),
        density: true,
        kmeans: true,
        seed: DEFAULT_SEED,
        graph: GraphMode::Auto,
        step: DEFAULT_STEP,
    }
}

fn circ_group(theta: f64, kappa: f64) -> GroupSpec {
    GroupSpec { mu: circular_to_cartesian(theta).into_inner(), kappa }
}

/// Every scenario of the catalog with its default settings.
pub fn catalog() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    let mu1 = PI / 2.0;
    for kappa in [3.0, 5.0, 10.0] {
        for (tag, off) in CIRC_OFFSETS {
            for n in [750, 1000, 1500] {
                let groups = vec![circ_group(mu1, kappa), circ_group(mu1 + off, kappa)];
                out.push(scenario_template(format!("circ-k{kappa}-d{tag}-n{n}"), groups, n, false));
            }
        }
    }
    for (tag, off) in CIRC_OFFSETS {
        let groups = (0..3).map(|j| circ_group(mu1 + j as f64 * off, 3.0)).collect();
        out.push(scenario_template(format!("circ3-k3-d{tag}-n750"), groups, 750, false));
    }
    for (tag, off) in SPH_OFFSETS {
        for n in [1000, 2000] {
            let groups = [0.0, off]
                .iter()
                .map(|&o| GroupSpec {
                    mu: spherical_to_cartesian(&[PI / 4.0 + o, PI / 2.0]).expect("finite angles").into_inner(),
                    kappa: 20.0,
                })
                .collect();
            out.push(scenario_template(format!("sph-k20-d{tag}-n{n}"), groups, n, true));
        }
    }
    out
}

pub fn scenario(id: &str) -> Result<ScenarioConfig> {
    catalog()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario '{id}'")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scenario: String,
    pub method: String,
    /// Mean ARI over the successful replications.
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single replication.
    pub sd: f64,
    pub replications: usize,
    /// Replications that returned an error and were excluded.
    pub failed: usize,
    /// Replication time summed over replications.
    pub seconds: f64,
}

fn summarize(scenario: &str, method: String, results: &[(Result<f64>, f64)]) -> TableRow {
    let ok: Vec<f64> = results.iter().filter_map(|(r, _)| r.as_ref().ok().copied()).collect();
    let m = ok.len();
    let mean = if m > 0 { ok.iter().sum::<f64>() / m as f64 } else { f64::NAN };
    let sd = if m > 1 {
        (ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    TableRow {
        scenario: scenario.to_string(),
        method,
        mean,
        sd,
        replications: m,
        failed: results.len() - m,
        seconds: results.iter().map(|r| r.1).sum(),
    }
}

/// Pooled sample and generating labels (1-based) of one replication.
pub fn draw_replication(config: &ScenarioConfig, rep: usize) -> Result<(Sample, Vec<usize>, u64)> {
    let params = config.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64);
    let parts: Vec<Sample> = params.iter().map(|p| sample_vmf_with(p, config.n_per_group, &mut rng)).collect();
    let truth = (0..parts.len()).flat_map(|g| std::iter::repeat_n(g + 1, config.n_per_group)).collect();
    let kmeans_seed = rng.random::<u64>();
    Ok((Sample::concat(&parts)?, truth, kmeans_seed))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

/// ARI of the density-based method and of spherical k-means for one replication.
pub fn run_replication(config: &ScenarioConfig, rep: usize) -> Result<(Option<(Result<f64>, f64)>, Option<(Result<f64>, f64)>)> {
    let (sample, truth, kmeans_seed) = draw_replication(config, rep)?;
    let density = config.density.then(|| {
        timed(|| {
            let pc = PipelineConfig {
                bandwidth: config.bandwidth,
                range: SearchRange::default(),
                graph: config.graph,
                step: config.step,
                taus: TauGrid::default(),
            };
            let r = cluster(&sample, &pc)?;
            adjusted_rand_index(&truth, r.classification.labeling.labels())
        })
    });
    let kmeans = config.kmeans.then(|| {
        timed(|| {
            let r = spherical_kmeans(&sample, config.groups.len(), kmeans_seed)?;
            adjusted_rand_index(&truth, r.labeling.labels())
        })
    });
    Ok((density, kmeans))
}

/// Runs every replication and summarizes each method in one row.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TableRow>> {
    config.params()?;
    let per_rep: Vec<_> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    if config.density {
        let r: Vec<_> = per_rep.iter().map(|(d, _)| d.clone().expect("density enabled")).collect();
        rows.push(summarize(&config.id, config.bandwidth.to_string(), &r));
    }
    if config.kmeans {
        let r: Vec<_> = per_rep.iter().map(|(_, k)| k.clone().expect("kmeans enabled")).collect();
        rows.push(summarize(&config.id, format!("{}-means", config.groups.len()), &r));
    }
    Ok(rows)
}

/// CSV with a header; the timing column is included only on request so that
/// output is reproducible byte for byte.
pub fn write_rows<W: Write>(w: W, rows: &[TableRow], timing: bool) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["scenario", "method", "M", "SD", "R", "failed"];
    if timing {
        header.push("seconds");
    }
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.scenario.clone(),
            r.method.clone(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.sd),
            r.replications.to_string(),
            r.failed.to_string(),
        ];
        if timing {
            rec.push(format!("{:.3}", r.seconds));
        }
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_covers_all_ids() {
        let c = catalog();
        assert_eq!(c.len(), 36 + 4 + 8);
        let ids: std::collections::HashSet<_> = c.iter().map(|s| s.id.clone()).collect();
        assert_eq!(ids.len(), c.len());
        for id in ["circ-k3-d2pi3-n750", "circ-k10-dpi6-n1500", "circ3-k3-d3pi6-n750", "sph-k20-d2pi9-n1000"] {
            assert!(ids.contains(id), "{id}");
        }
        assert!(scenario("circ-k4-dpi6-n750").is_err());
    }

    #[test]
    fn scenario_geometry() {
        let s = scenario("circ-k3-d2pi3-n750").unwrap();
        let p = s.params().unwrap();
        assert!((p[0].mu.dot(&p[1].mu) - (2.0 * PI / 3.0).cos()).abs() < 1e-12);
        assert!((p[0].mu[1] - 1.0).abs() < 1e-15);
        let t = scenario("circ3-k3-dpi6-n750").unwrap().params().unwrap();
        assert!((t[0].mu.dot(&t[2].mu) - (PI / 3.0).cos()).abs() < 1e-12);
        let sp = scenario("sph-k20-d5pi18-n2000").unwrap();
        assert_eq!(sp.dim(), 3);
        let q = sp.params().unwrap();
        assert!((q[0].mu.dot(&q[1].mu) - (5.0 * PI / 18.0).cos()).abs() < 1e-12);
        assert!(q[0].mu[2].abs() < 1e-15);
    }

    #[test]
    fn replications_are_reproducible_and_distinct() {
        let s = scenario("circ-k10-d2pi3-n750").unwrap();
        let (a, ta, ka) = draw_replication(&s, 3).unwrap();
        let (b, _, kb) = draw_replication(&s, 3).unwrap();
        let (c, _, _) = draw_replication(&s, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(ka, kb);
        assert_ne!(a, c);
        assert_eq!(ta.len(), 1500);
        assert_eq!(ta[749], 1);
        assert_eq!(ta[750], 2);
    }

    #[test]
    fn identical_groups_score_near_zero() {
        let g = circ_group(1.0, 5.0);
        let config = ScenarioConfig {
            id: "same".into(),
            groups: vec![g.clone(), g],
            n_per_group: 60,
            replications: 4,
            bandwidth: BandwidthChoice::Select(Selector::RotCircular),
            density: true,
            kmeans: true,
            seed: 5,
            graph: GraphMode::Auto,
            step: DEFAULT_STEP,
        };
        let rows = run_scenario(&config).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.replications + r.failed, 4);
            assert!(r.mean.abs() < 0.1, "{r:?}");
            assert!(r.sd >= 0.0);
        }
        assert_eq!(rows[1].method, "2-means");
    }

    #[test]
    fn summary_statistics() {
        let r = summarize("x", "m".into(), &[(Ok(1.0), 0.5), (Ok(0.0), 0.5), (Err(Error::TooShort), 0.1)]);
        assert_eq!(r.mean, 0.5);
        assert!((r.sd - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!((r.replications, r.failed), (2, 1));
        assert!((r.seconds - 1.1).abs() < 1e-12);
    }

    #[test]
    fn csv_output() {
        let rows = vec![summarize("s", "rot-circ".into(), &[(Ok(0.5), 1.0)])];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows, false).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scenario,method,M,SD,R,failed\ns,rot-circ,0.500000,0.000000,1,0\n");
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("scenario,method,M,SD,R,failed,seconds\n"));
    }

    #[test]
    fn config_round_trips_through_json() {
        let s = scenario("sph-k20-dpi9-n1000").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"bandwidth\":\"lcv\""));
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
