//! Experiment engine: offline pipeline, Monte Carlo sweeps and result
//! emission.
//!
//! A trial fixes one UE position, one WiFi noise draw and one blockage
//! realization, shared by the proposed, nearest-neighbor and exhaustive
//! schemes, so the received-power ratio isolates estimation quality.
//! Per-trial seeds are derived from (master seed, axis, value, trial), so
//! a sweep is reproducible bit-for-bit from the config alone.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clustering::{build_exemplar_set, ClusteringError};
use crate::config::{ConfigError, ScenarioConfig};
use crate::environment::{sample_blockage, Scene};
use crate::fingerprint::{
    build_databases, group_by_sector, FingerprintError, GridLayout, LearningGrid,
};
use crate::geometry::Vec3;
use crate::protocol::{
    beam_combining, estimate_best_beams, exhaustive_search, measure_online_rss,
    nearest_neighbor_baseline, rpr_db, setup_time, ProtocolError, Scheme, TimingBreakdown,
    TrainingOutcome,
};
use crate::radiomap::{codebook_hash, save_radio_maps, RadioMapError, RadioMaps};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("offline phase failed: {0}")]
    Fingerprint(#[from] FingerprintError),
    #[error("offline clustering failed: {0}")]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    RadioMap(#[from] RadioMapError),
    #[error("online phase failed: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("radio map missing at {0}: run the `offline` subcommand first")]
    MissingRadioMap(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// The swept parameter of a sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "camelCase")]
pub enum SweepAxis {
    /// Learning-point count (offline rebuilt per value).
    Lps,
    /// WiFi AP count (offline rebuilt per value).
    WifiAps,
    /// Candidate beam count X (offline reused across values).
    Beams,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Lps => "lps",
            SweepAxis::WifiAps => "wifiAps",
            SweepAxis::Beams => "beams",
        }
    }
}

/// Aggregated outcome of one axis point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub value: usize,
    pub avg_rpr_db: f64,
    pub nn_rpr_db: f64,
    pub outage_rate: f64,
    pub trials: usize,
    pub seed: u64,
    /// Sample statistics kept for significance tests; not part of the
    /// CSV schema.
    #[serde(skip)]
    pub stats: AxisStats,
}

/// Per-point sample statistics and bookkeeping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisStats {
    pub rpr_mean: f64,
    pub rpr_std: f64,
    pub rpr_n: usize,
    pub nn_mean: f64,
    pub nn_std: f64,
    pub nn_n: usize,
    pub nn_outage_rate: f64,
    /// Largest single-trial RPR observed at this point; never above zero.
    pub rpr_max_db: f64,
    /// (AP, trial) pairs skipped because the AP covered no LPs or the
    /// exhaustive reference itself was in outage.
    pub skipped_pairs: usize,
    pub per_ap_rpr_db: Vec<f64>,
}

/// Derives a per-trial seed stream from the master seed.
pub fn derive_seed(master: u64, axis: &str, value: usize, trial: usize, stream: u8) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(axis.as_bytes());
    h.update((value as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    h.update([stream]);
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Output of the offline statistical-learning phase.
#[derive(Debug, Clone)]
pub struct OfflineArtifacts {
    pub scene: Scene,
    pub grid: LearningGrid,
    pub maps: RadioMaps,
    /// (mm-w AP id, group count, total cluster count).
    pub summary: Vec<(String, usize, usize)>,
    pub warnings: Vec<String>,
}

/// Runs the full offline pipeline: grid generation, database
/// construction, grouping and clustering.
pub fn run_offline(config: &ScenarioConfig) -> Result<OfflineArtifacts, HarnessError> {
    let scene = config.build_scene()?;
    run_offline_on(config, scene, config.grid_layout())
}

fn run_offline_on(
    config: &ScenarioConfig,
    scene: Scene,
    layout: GridLayout,
) -> Result<OfflineArtifacts, HarnessError> {
    let grid = LearningGrid::uniform(&scene, layout);
    let mut warnings = Vec::new();
    if grid.len() == 1 {
        warnings.push("single learning point: clustering is degenerate".to_string());
    }
    let order = config.propagation.max_reflection_order;
    let (psi, phi) = build_databases(&scene, &grid, config.online.sensitivity_dbm, order)?;
    let params = config.clustering.params();
    let mut all_groups = Vec::new();
    let mut summary = Vec::new();
    for m in 0..scene.mmw_aps.len() {
        let groups = group_by_sector(&psi, &phi, m);
        summary.push((phi.mmw_ap_ids[m].clone(), groups.len(), 0));
        all_groups.extend(groups);
    }
    let exemplars = build_exemplar_set(&all_groups, &params)?;
    for (m, entry) in summary.iter_mut().enumerate() {
        entry.2 = exemplars
            .sectors_for_ap(m)
            .map(|e| e.cluster_count())
            .sum();
    }
    Ok(OfflineArtifacts {
        scene,
        grid,
        maps: RadioMaps {
            psi,
            phi,
            exemplars,
        },
        summary,
        warnings,
    })
}

/// Runs the offline phase and persists the radio maps.
pub fn run_offline_to_file(
    config: &ScenarioConfig,
    path: &Path,
) -> Result<OfflineArtifacts, HarnessError> {
    let artifacts = run_offline(config)?;
    let hash = codebook_hash(&artifacts.scene);
    save_radio_maps(&artifacts.maps, &hash, path)?;
    Ok(artifacts)
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialTally {
    rpr_sum: f64,
    rpr_sq_sum: f64,
    rpr_n: usize,
    nn_sum: f64,
    nn_sq_sum: f64,
    nn_n: usize,
    proposed_outages: usize,
    nn_outages: usize,
    skipped: usize,
    evaluated: usize,
}

#[derive(Debug, Clone, Default)]
struct TrialOutcome {
    tally: TrialTally,
    per_ap_rpr: Vec<(usize, f64)>,
}

fn random_ue_position(scene: &Scene, height: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let b = &scene.bounds;
    let margin = 0.2;
    Vec3::new(
        rng.gen_range(b.min.x + margin..b.max.x - margin),
        rng.gen_range(b.min.y + margin..b.max.y - margin),
        height,
    )
}

fn run_trial(
    config: &ScenarioConfig,
    scene: &Scene,
    maps: &RadioMaps,
    beams: usize,
    axis: &str,
    value: usize,
    trial: usize,
) -> Result<TrialOutcome, HarnessError> {
    let master = config.sweep.master_seed;
    let mut pos_rng = ChaCha8Rng::seed_from_u64(derive_seed(master, axis, value, trial, 0));
    let ue = random_ue_position(scene, config.online.ue_height_m, &mut pos_rng);
    let blockage = sample_blockage(
        scene,
        &[ue],
        derive_seed(master, axis, value, trial, 1),
        config.online.p_max,
        config.online.blockage_attenuation_db,
    );
    let order = config.propagation.max_reflection_order;
    let rss = measure_online_rss(
        scene,
        ue,
        config.online.noise_sigma_db,
        derive_seed(master, axis, value, trial, 2),
        order,
    )?;

    let sensitivity = config.online.sensitivity_dbm;
    let mut out = TrialOutcome::default();
    let t = &mut out.tally;
    for m in 0..scene.mmw_aps.len() {
        let link = blockage.link(m, 0);
        let mut estimate = match estimate_best_beams(&rss, &maps.exemplars, m, beams) {
            Ok(e) => e,
            Err(ProtocolError::NoCoverage(_)) => {
                t.skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        // fill the candidate list up to X with never-best sectors so that
        // X = codebook size reduces beam combining to the exhaustive scan
        estimate.pad_with_codebook(&scene.mmw_aps[m].codebook);
        let exhaustive = exhaustive_search(scene, ue, m, link, sensitivity, order)?;
        let Some(exhaustive) = exhaustive.decision() else {
            // no reference signal at all; nothing to compare against
            t.skipped += 1;
            continue;
        };
        t.evaluated += 1;

        match beam_combining(scene, ue, &estimate, link, sensitivity, order)? {
            TrainingOutcome::Decision(d) => {
                let r = rpr_db(&d, exhaustive);
                t.rpr_sum += r;
                t.rpr_sq_sum += r * r;
                t.rpr_n += 1;
                out.per_ap_rpr.push((m, r));
            }
            TrainingOutcome::Outage => t.proposed_outages += 1,
        }

        match nearest_neighbor_baseline(&rss, &maps.psi, &maps.phi, m) {
            Some(id) => {
                let candidates = crate::protocol::BeamEstimate {
                    ap_index: m,
                    ranked: vec![(id, 0.0)],
                    requested: 1,
                };
                match beam_combining(scene, ue, &candidates, link, sensitivity, order)? {
                    TrainingOutcome::Decision(d) => {
                        let r = rpr_db(&d, exhaustive);
                        t.nn_sum += r;
                        t.nn_sq_sum += r * r;
                        t.nn_n += 1;
                    }
                    TrainingOutcome::Outage => t.nn_outages += 1,
                }
            }
            None => t.nn_outages += 1,
        }
    }
    Ok(out)
}

fn run_axis_point(
    config: &ScenarioConfig,
    scene: &Scene,
    maps: &RadioMaps,
    beams: usize,
    axis: &str,
    value: usize,
) -> Result<SweepResult, HarnessError> {
    let trials = config.sweep.trials;
    let outcomes: Vec<Result<TrialOutcome, HarnessError>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(config, scene, maps, beams, axis, value, trial))
        .collect();

    let mut tally = TrialTally::default();
    let mut per_ap_sum = vec![0.0; scene.mmw_aps.len()];
    let mut per_ap_n = vec![0usize; scene.mmw_aps.len()];
    let mut rpr_max = f64::NEG_INFINITY;
    for outcome in outcomes {
        let o = outcome?;
        let s = o.tally;
        tally.rpr_sum += s.rpr_sum;
        tally.rpr_sq_sum += s.rpr_sq_sum;
        tally.rpr_n += s.rpr_n;
        tally.nn_sum += s.nn_sum;
        tally.nn_sq_sum += s.nn_sq_sum;
        tally.nn_n += s.nn_n;
        tally.proposed_outages += s.proposed_outages;
        tally.nn_outages += s.nn_outages;
        tally.skipped += s.skipped;
        tally.evaluated += s.evaluated;
        for (m, r) in o.per_ap_rpr {
            per_ap_sum[m] += r;
            per_ap_n[m] += 1;
            rpr_max = rpr_max.max(r);
        }
    }

    let mean = |sum: f64, n: usize| if n > 0 { sum / n as f64 } else { f64::NAN };
    let std = |sum: f64, sq: f64, n: usize| {
        if n > 1 {
            ((sq - sum * sum / n as f64) / (n as f64 - 1.0)).max(0.0).sqrt()
        } else {
            0.0
        }
    };
    let avg_rpr = mean(tally.rpr_sum, tally.rpr_n);
    let nn_rpr = mean(tally.nn_sum, tally.nn_n);
    Ok(SweepResult {
        axis: axis.to_string(),
        value,
        avg_rpr_db: avg_rpr,
        nn_rpr_db: nn_rpr,
        outage_rate: if tally.evaluated > 0 {
            tally.proposed_outages as f64 / tally.evaluated as f64
        } else {
            0.0
        },
        trials,
        seed: config.sweep.master_seed,
        stats: AxisStats {
            rpr_mean: avg_rpr,
            rpr_std: std(tally.rpr_sum, tally.rpr_sq_sum, tally.rpr_n),
            rpr_n: tally.rpr_n,
            nn_mean: nn_rpr,
            nn_std: std(tally.nn_sum, tally.nn_sq_sum, tally.nn_n),
            nn_n: tally.nn_n,
            nn_outage_rate: if tally.evaluated > 0 {
                tally.nn_outages as f64 / tally.evaluated as f64
            } else {
                0.0
            },
            rpr_max_db: rpr_max,
            skipped_pairs: tally.skipped,
            per_ap_rpr_db: per_ap_sum
                .iter()
                .zip(&per_ap_n)
                .map(|(&s, &n)| mean(s, n))
                .collect(),
        },
    })
}

/// Runs a full sweep over the requested axis. Offline maps are rebuilt
/// for every LP-count or WiFi-AP-count value and reused across beam
/// counts; the full codebook size is appended to the beams axis.
pub fn run_sweep(config: &ScenarioConfig, axis: SweepAxis) -> Result<Vec<SweepResult>, HarnessError> {
    let label = axis.label();
    let mut results = Vec::new();
    match axis {
        SweepAxis::Lps => {
            for &[cx, cy] in &config.sweep.lp_axis {
                let scene = config.build_scene()?;
                let layout = GridLayout {
                    counts_x: cx,
                    counts_y: cy,
                    ue_height_m: config.grid.ue_height_m,
                };
                let artifacts = run_offline_on(config, scene, layout)?;
                results.push(run_axis_point(
                    config,
                    &artifacts.scene,
                    &artifacts.maps,
                    config.online.beams,
                    label,
                    cx * cy,
                )?);
            }
        }
        SweepAxis::WifiAps => {
            for &count in &config.sweep.wifi_ap_axis {
                let scene = config.build_scene_with_wifi_count(count)?;
                let artifacts = run_offline_on(config, scene, config.grid_layout())?;
                results.push(run_axis_point(
                    config,
                    &artifacts.scene,
                    &artifacts.maps,
                    config.online.beams,
                    label,
                    count,
                )?);
            }
        }
        SweepAxis::Beams => {
            let artifacts = run_offline(config)?;
            let mut values = config.sweep.beam_axis.clone();
            let full = config.codebook.sector_count;
            if !values.contains(&full) {
                values.push(full);
            }
            for beams in values {
                results.push(run_axis_point(
                    config,
                    &artifacts.scene,
                    &artifacts.maps,
                    beams,
                    label,
                    beams,
                )?);
            }
        }
    }
    results.sort_by_key(|r| r.value);
    Ok(results)
}

/// Emission format of the result table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct ResultRecord<'a> {
    axis: &'a str,
    value: usize,
    avg_rpr_db: f64,
    nn_rpr_db: f64,
    outage_rate: f64,
    trials: usize,
    seed: u64,
}

impl<'a> From<&'a SweepResult> for ResultRecord<'a> {
    fn from(r: &'a SweepResult) -> Self {
        ResultRecord {
            axis: &r.axis,
            value: r.value,
            avg_rpr_db: r.avg_rpr_db,
            nn_rpr_db: r.nn_rpr_db,
            outage_rate: r.outage_rate,
            trials: r.trials,
            seed: r.seed,
        }
    }
}

/// Writes the result table with the stable column schema
/// (axis, value, avg_rpr_db, nn_rpr_db, outage_rate, trials, seed).
pub fn emit_results(
    results: &[SweepResult],
    format: OutputFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(source),
                other => io_err(std::io::Error::other(format!("{other:?}"))),
            })?;
            for r in results {
                writer
                    .serialize(ResultRecord::from(r))
                    .map_err(|e| io_err(std::io::Error::other(e)))?;
            }
            writer.flush().map_err(io_err)?;
        }
        OutputFormat::Json => {
            let records: Vec<ResultRecord> = results.iter().map(ResultRecord::from).collect();
            let mut file = File::create(path).map_err(io_err)?;
            serde_json::to_writer_pretty(&mut file, &records)
                .map_err(|e| io_err(std::io::Error::other(e)))?;
            file.write_all(b"\n").map_err(io_err)?;
        }
    }
    Ok(())
}

/// One line of the setup-time comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub scheme: String,
    pub sectors: usize,
    pub bc_beams: usize,
    pub ap_count: usize,
    pub total_ms: f64,
    pub breakdown: TimingBreakdown,
}

/// MIDC-vs-proposed setup-time comparison for the configured counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub reduction_percent: f64,
}

pub fn report_timing(config: &ScenarioConfig) -> TimingReport {
    let model = config.timing.model();
    let sectors = config.codebook.sector_count;
    let beams = config.online.beams;
    let aps = if config.mmw_aps.is_empty() { 8 } else { config.mmw_aps.len() };
    let (midc_total, midc_bd) = setup_time(&model, Scheme::Midc, sectors, beams, aps);
    let (prop_total, prop_bd) = setup_time(&model, Scheme::Proposed, sectors, beams, aps);
    TimingReport {
        rows: vec![
            TimingRow {
                scheme: "midc".into(),
                sectors,
                bc_beams: beams,
                ap_count: aps,
                total_ms: midc_total * 1e3,
                breakdown: midc_bd,
            },
            TimingRow {
                scheme: "proposed".into(),
                sectors,
                bc_beams: beams,
                ap_count: aps,
                total_ms: prop_total * 1e3,
                breakdown: prop_bd,
            },
        ],
        reduction_percent: 100.0 * (midc_total - prop_total) / midc_total,
    }
}
