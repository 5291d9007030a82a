//! Replays the checked-in fuzz corpus through the parsers on stable, with the
//! same postconditions the fuzz targets assert.

use std::fs;
use std::path::PathBuf;

use cdma_paging::config::{parse_grid, parse_populations, MAX_GRID_POINTS};
use cdma_paging::search::location_distribution;
use cdma_paging::{CarrierSystem, RunConfig};

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter_map(|p| {
            let bytes = fs::read(&p).unwrap();
            String::from_utf8(bytes).ok().map(|s| (p, s))
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn config_corpus() {
    let mut accepted = 0;
    for (path, text) in corpus("config") {
        if let Ok(cfg) = RunConfig::from_str_any(&text) {
            accepted += 1;
            let system = cfg.system();
            assert_eq!(
                system.carrier_count(),
                cfg.populations.len(),
                "{}",
                path.display()
            );
            assert_eq!(system.total_channels(), cfg.total_channels());
            assert!(cfg.warmup() < cfg.horizon);
        }
    }
    assert!(accepted > 0);
}

#[test]
fn lambda_grid_corpus() {
    for (path, text) in corpus("lambda_grid") {
        if let Ok(grid) = parse_grid(&text) {
            assert!(
                !grid.is_empty() && grid.len() <= MAX_GRID_POINTS,
                "{}",
                path.display()
            );
            assert!(grid.iter().all(|l| l.is_finite() && *l > 0.0));
            assert!(grid.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn populations_corpus() {
    for (_, text) in corpus("populations") {
        if let Ok(pops) = parse_populations(&text) {
            if let Ok(system) = CarrierSystem::from_populations(&pops) {
                let dist = location_distribution(&system).unwrap();
                let sum: f64 = dist.probs().iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }
}
