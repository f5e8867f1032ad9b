//! Scene-level behavior of the default scenario: radio-map structure and
//! noiseless online estimation quality.

use fpbeam::config::ScenarioConfig;
use fpbeam::harness::run_offline;
use fpbeam::protocol::{estimate_best_beams, OnlineRss};

/// Standing exactly on a learning point with zero measurement noise, the
/// offline best sector should almost always appear in the top 5.
#[test]
fn top5_hit_rate_at_zero_noise_on_lps() {
    let config = ScenarioConfig::default();
    let art = run_offline(&config).unwrap();
    let psi = &art.maps.psi;
    let phi = &art.maps.phi;
    let mut hits = 0usize;
    let mut total = 0usize;
    for l in 0..psi.values.len() {
        let rss = OnlineRss {
            values: psi.values[l].clone(),
            noise_sigma_db: 0.0,
            position: art.grid.points[l],
        };
        for (m, best) in phi.values[l].iter().enumerate() {
            let Some(best) = best else { continue };
            let est = estimate_best_beams(&rss, &art.maps.exemplars, m, 5).unwrap();
            total += 1;
            if est.ranked.iter().any(|(id, _)| id == best) {
                hits += 1;
            }
        }
    }
    assert!(total > 0);
    let rate = hits as f64 / total as f64;
    assert!(rate >= 0.95, "top-5 hit rate {rate:.3} over {total} pairs");
}

/// Each covered sector compresses its fingerprints into a small exemplar
/// set: at least one, never more than the member count.
#[test]
fn exemplar_counts_stay_within_group_sizes() {
    let config = ScenarioConfig::default();
    let art = run_offline(&config).unwrap();
    assert!(!art.maps.exemplars.entries.is_empty());
    for e in &art.maps.exemplars.entries {
        let c = e.exemplar_vectors.len();
        assert!(c >= 1);
        assert!(c <= e.member_lps.len());
    }
}

/// Best-sector maps are irregular but not salt-and-pepper: most LPs share
/// their sector with at least one grid neighbor.
#[test]
fn same_sector_lps_form_connected_patches() {
    let config = ScenarioConfig::default();
    let art = run_offline(&config).unwrap();
    let phi = &art.maps.phi;
    let (cx, cy) = (art.grid.layout.counts_x, art.grid.layout.counts_y);
    let mut matched = 0usize;
    let mut total = 0usize;
    for m in 0..phi.ap_count() {
        for iy in 0..cy {
            for ix in 0..cx {
                let l = iy * cx + ix;
                let Some(sector) = phi.values[l][m] else { continue };
                total += 1;
                let mut neighbors = Vec::new();
                if ix > 0 {
                    neighbors.push(l - 1);
                }
                if ix + 1 < cx {
                    neighbors.push(l + 1);
                }
                if iy > 0 {
                    neighbors.push(l - cx);
                }
                if iy + 1 < cy {
                    neighbors.push(l + cx);
                }
                if neighbors.iter().any(|&n| phi.values[n][m] == Some(sector)) {
                    matched += 1;
                }
            }
        }
    }
    assert!(total > 0);
    let fraction = matched as f64 / total as f64;
    assert!(
        fraction >= 0.5,
        "only {fraction:.3} of {total} covered LPs touch a same-sector neighbor"
    );
}
