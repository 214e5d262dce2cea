//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::Check;
use dirclust::bandwidth::{BandwidthChoice, Selector};
use dirclust::harness::scenario::{draw_replication, run_scenario, scenario, TableRow};
use dirclust::pipeline::{filtration, PipelineConfig};
use dirclust::tree::Neighborhood;

fn within(row: &TableRow, target: f64, tol: f64) -> Check {
    let detail = format!(
        "{} {}: M = {:.3} (SD {:.3}, R = {}, failed {}), target {target} +/- {tol}",
        row.scenario, row.method, row.mean, row.sd, row.replications, row.failed
    );
    if row.failed == 0 && (row.mean - target).abs() <= tol {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn at_most(row: &TableRow, bound: f64) -> Check {
    let detail = format!(
        "{} {}: M = {:.3} (SD {:.3}, R = {}, failed {}), bound <= {bound}",
        row.scenario, row.method, row.mean, row.sd, row.replications, row.failed
    );
    if row.failed == 0 && row.mean <= bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rows(id: &str, selector: Selector, reps: usize) -> Result<Vec<TableRow>, String> {
    let mut config = scenario(id).map_err(|e| e.to_string())?;
    config.bandwidth = BandwidthChoice::Select(selector);
    config.replications = reps;
    run_scenario(&config).map_err(|e| e.to_string())
}

fn mode_function_check() -> Check {
    let config = scenario("circ-k10-d2pi3-n750").map_err(|e| e.to_string())?;
    // same graph as `simulate` uses for this scenario (knn 30 at n = 1500)
    let pipeline = PipelineConfig::default();
    let mut two = 0;
    for rep in 0..20 {
        let (sample, _, _) = draw_replication(&config, rep).map_err(|e| e.to_string())?;
        let h = dirclust::bandwidth::select(&sample, Selector::RotCircular, pipeline.range).map_err(|e| e.to_string())?.h;
        let f = filtration(&sample, h, &pipeline).map_err(|e| e.to_string())?;
        let bp = f.mode_function.breakpoints();
        let (first, last) = (bp[0], bp[bp.len() - 1]);
        if (first.content, first.count) != (0.0, 0) || (last.content, last.count) != (1.0, 0) {
            return Err(format!("run {rep}: endpoints {first:?} {last:?}"));
        }
        if f.mode_function.max() == 2 {
            two += 1;
        }
    }
    let detail = format!("endpoints zero on all 20 runs; max = 2 in {two}/20 (need >= 18)");
    if two >= 18 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism_check() -> Check {
    let bin = env!("CARGO_BIN_EXE_dirclust");
    let run = || {
        Command::new(bin)
            .args(["simulate", "--scenario", "circ-k3-d2pi3-n750", "--reps", "3", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() || !b.status.success() {
        return Err(format!("simulate failed: {}", String::from_utf8_lossy(&a.stderr)));
    }
    if a.stdout.is_empty() || a.stdout != b.stdout {
        return Err("outputs differ".into());
    }
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, start: Instant, check: Check| {
        let secs = start.elapsed().as_secs_f64();
        match check {
            Ok(d) => println!("PASS  {name}: {d} [{secs:.0}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{secs:.0}s]");
            }
        }
    };

    let t = Instant::now();
    match rows("circ-k3-d2pi3-n750", Selector::RotCircular, 50) {
        Ok(r) => {
            report("circ-k3-d2pi3-n750 rot-circ", t, within(&r[0], 0.787, 0.03));
            report("circ-k3-d2pi3-n750 2-means", t, within(&r[1], 0.789, 0.03));
        }
        Err(e) => {
            report("circ-k3-d2pi3-n750 rot-circ", t, Err(e.clone()));
            report("circ-k3-d2pi3-n750 2-means", t, Err(e));
        }
    }

    let t = Instant::now();
    let check = rows("circ-k10-d2pi3-n750", Selector::RotCircular, 50).and_then(|r| within(&r[0], 0.996, 0.01));
    report("circ-k10-d2pi3-n750 rot-circ", t, check);

    let t = Instant::now();
    match rows("circ-k3-dpi6-n750", Selector::RotCircular, 50) {
        Ok(r) => {
            report("circ-k3-dpi6-n750 rot-circ", t, at_most(&r[0], 0.02));
            report("circ-k3-dpi6-n750 2-means", t, within(&r[1], 0.108, 0.02));
        }
        Err(e) => {
            report("circ-k3-dpi6-n750 rot-circ", t, Err(e.clone()));
            report("circ-k3-dpi6-n750 2-means", t, Err(e));
        }
    }

    let t = Instant::now();
    let id = "sph-k20-d2pi9-n1000";
    let knn = scenario(id).map(|c| c.graph.neighborhood(2 * c.n_per_group));
    match (knn, rows(id, Selector::Lcv, 25)) {
        (Ok(Neighborhood::Knn(30)), Ok(r)) => {
            report("sph-k20-d2pi9-n1000 lcv (knn 30)", t, within(&r[0], 0.759, 0.04));
            report("sph-k20-d2pi9-n1000 2-means", t, within(&r[1], 0.761, 0.03));
        }
        (nb, r) => {
            let e = format!("graph {nb:?}, run {:?}", r.map(|_| ()));
            report("sph-k20-d2pi9-n1000 lcv (knn 30)", t, Err(e.clone()));
            report("sph-k20-d2pi9-n1000 2-means", t, Err(e));
        }
    }

    let suites: [(&str, fn() -> Check); 7] = [
        ("kde normalization", common::kde_normalization),
        ("lscv closed form vs quadrature", common::lscv_quadrature),
        ("merge tree vs dfs components", common::merge_tree_vs_dfs),
        ("hdr coverage and nesting", common::hdr_coverage_nesting),
        ("ari pair-counting oracle", common::ari_oracle),
        ("mode function endpoints and two-group maximum", mode_function_check),
        ("simulate determinism", determinism_check),
    ];
    for (name, check) in suites {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        report(name, t, outcome);
    }

    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
