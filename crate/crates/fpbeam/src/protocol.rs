//! The online beam selection phase, its exhaustive-search and
//! nearest-neighbor baselines, the received-power-ratio metric, and the
//! setup-time model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{beam_gain, quasi_omni_gain_db, Codebook, SectorId};
use crate::clustering::ExemplarSet;
use crate::environment::{received_power, trace_paths, Band, EnvError, LinkBlockage, Scene};
use crate::fingerprint::{wifi_gain_vector, BestSectorDb, WifiRssDb};
use crate::geometry::Vec3;

/// One online WiFi RSS measurement (normalized, dB). The position is
/// ground truth carried for evaluation only; estimation never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRss {
    pub values: Vec<f64>,
    pub noise_sigma_db: f64,
    pub position: Vec3,
}

/// Ranked candidate sectors for one mm-w AP.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamEstimate {
    pub ap_index: usize,
    /// (sector id, squared match distance), ascending by distance.
    pub ranked: Vec<(SectorId, f64)>,
    pub requested: usize,
}

impl BeamEstimate {
    pub fn sector_ids(&self) -> Vec<SectorId> {
        self.ranked.iter().map(|(id, _)| *id).collect()
    }

    /// Appends the codebook sectors no learning point ever reported as
    /// best, in ascending id order, up to the requested count. With the
    /// request set to the codebook size this makes the candidate list the
    /// whole codebook, so beam combining degenerates to the exhaustive
    /// scan. Unseen sectors carry an infinite match distance.
    pub fn pad_with_codebook(&mut self, codebook: &Codebook) {
        for sector in &codebook.sectors {
            if self.ranked.len() >= self.requested {
                break;
            }
            if !self.ranked.iter().any(|(id, _)| *id == sector.id) {
                self.ranked.push((sector.id, f64::INFINITY));
            }
        }
    }
}

/// Result of training a set of candidate beams against the live channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDecision {
    pub ap_index: usize,
    pub best_sector: SectorId,
    pub best_power_dbm: f64,
    /// Every trained beam with its measured power.
    pub trained: Vec<(SectorId, f64)>,
    /// Trained ids sorted by power descending; first entry is the best
    /// sector, kept for fast beam switching on blockage.
    pub backup_order: Vec<SectorId>,
}

/// Outcome of a training round: a usable beam or a link outage.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingOutcome {
    Decision(BeamDecision),
    /// No trained beam reached the receive sensitivity.
    Outage,
}

impl TrainingOutcome {
    pub fn decision(&self) -> Option<&BeamDecision> {
        match self {
            TrainingOutcome::Decision(d) => Some(d),
            TrainingOutcome::Outage => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("UE position has no 5 GHz path to WiFi AP {0}")]
    WifiCoverage(usize),
    #[error("no exemplars exist for mm-w AP {0}: the AP covered no learning points")]
    NoCoverage(usize),
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Measures the online WiFi RSS vector: noiseless normalized gain plus
/// zero-mean Gaussian noise in dB, deterministic per seed.
pub fn measure_online_rss(
    scene: &Scene,
    ue_position: Vec3,
    noise_sigma_db: f64,
    rng_seed: u64,
    max_reflection_order: usize,
) -> Result<OnlineRss, ProtocolError> {
    let gains = wifi_gain_vector(scene, ue_position, max_reflection_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, noise_sigma_db.max(0.0)).expect("sigma must be finite");
    let mut values = Vec::with_capacity(gains.len());
    for (n, g) in gains.into_iter().enumerate() {
        let g = g.ok_or(ProtocolError::WifiCoverage(n))?;
        let noise = if noise_sigma_db > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        values.push(g + noise);
    }
    Ok(OnlineRss {
        values,
        noise_sigma_db,
        position: ue_position,
    })
}

/// Ranks the sectors of one mm-w AP by the smallest squared Euclidean
/// distance between the online RSS vector and any exemplar of the sector,
/// and keeps the first `x` (ties to the lower sector id).
pub fn estimate_best_beams(
    rss: &OnlineRss,
    exemplars: &ExemplarSet,
    ap_index: usize,
    x: usize,
) -> Result<BeamEstimate, ProtocolError> {
    assert!(x >= 1, "at least one beam must be requested");
    let mut ranked: Vec<(SectorId, f64)> = exemplars
        .sectors_for_ap(ap_index)
        .map(|e| {
            let d = e
                .exemplar_vectors
                .iter()
                .map(|v| squared_distance(&rss.values, v))
                .fold(f64::INFINITY, f64::min);
            (e.sector_id, d)
        })
        .collect();
    if ranked.is_empty() {
        return Err(ProtocolError::NoCoverage(ap_index));
    }
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(x);
    Ok(BeamEstimate {
        ap_index,
        ranked,
        requested: x,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn train_sectors(
    scene: &Scene,
    ue_position: Vec3,
    ap_index: usize,
    sector_ids: &[SectorId],
    blockage: LinkBlockage,
    sensitivity_dbm: f64,
    max_reflection_order: usize,
) -> Result<TrainingOutcome, ProtocolError> {
    let ap = &scene.mmw_aps[ap_index];
    let paths = trace_paths(scene, ap.position, ue_position, Band::Mmw60GHz, max_reflection_order)?;
    let mut trained = Vec::with_capacity(sector_ids.len());
    for &id in sector_ids {
        let sector = ap.codebook.sector(id).expect("candidate id must exist in the codebook");
        let g = received_power(
            &paths,
            ap.tx_power_dbm,
            |az, el| beam_gain(sector, az, el),
            quasi_omni_gain_db(),
            blockage,
        );
        trained.push((id, g.received_power_dbm));
    }
    let best = trained
        .iter()
        .copied()
        .fold(None::<(SectorId, f64)>, |acc, (id, p)| match acc {
            None => Some((id, p)),
            Some((bid, bp)) => {
                if p > bp || (p == bp && id < bid) {
                    Some((id, p))
                } else {
                    Some((bid, bp))
                }
            }
        })
        .expect("candidate list is nonempty");
    if !best.1.is_finite() || best.1 < sensitivity_dbm {
        return Ok(TrainingOutcome::Outage);
    }
    let mut backup = trained.clone();
    backup.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(TrainingOutcome::Decision(BeamDecision {
        ap_index,
        best_sector: best.0,
        best_power_dbm: best.1,
        backup_order: backup.into_iter().map(|(id, _)| id).collect(),
        trained,
    }))
}

/// Beam-combining: trains only the candidate sectors against the live
/// (possibly blocked) channel and picks the strongest.
pub fn beam_combining(
    scene: &Scene,
    ue_position: Vec3,
    candidates: &BeamEstimate,
    blockage: LinkBlockage,
    sensitivity_dbm: f64,
    max_reflection_order: usize,
) -> Result<TrainingOutcome, ProtocolError> {
    if candidates.ranked.is_empty() {
        return Err(ProtocolError::EmptyCandidates);
    }
    train_sectors(
        scene,
        ue_position,
        candidates.ap_index,
        &candidates.sector_ids(),
        blockage,
        sensitivity_dbm,
        max_reflection_order,
    )
}

/// The 802.11ad-style baseline: trains every sector of the codebook under
/// the same blockage realization.
pub fn exhaustive_search(
    scene: &Scene,
    ue_position: Vec3,
    ap_index: usize,
    blockage: LinkBlockage,
    sensitivity_dbm: f64,
    max_reflection_order: usize,
) -> Result<TrainingOutcome, ProtocolError> {
    let all: Vec<SectorId> = scene.mmw_aps[ap_index]
        .codebook
        .sectors
        .iter()
        .map(|s| s.id)
        .collect();
    train_sectors(
        scene,
        ue_position,
        ap_index,
        &all,
        blockage,
        sensitivity_dbm,
        max_reflection_order,
    )
}

/// Nearest-neighbor baseline: looks up the offline best sector of the LP
/// whose stored RSS vector is closest to the online reading. No beam
/// training. Returns `None` when that LP was not covered by the AP.
pub fn nearest_neighbor_baseline(
    rss: &OnlineRss,
    psi: &WifiRssDb,
    phi: &BestSectorDb,
    ap_index: usize,
) -> Option<SectorId> {
    assert!(psi.lp_count() > 0, "database must be nonempty");
    let mut best_l = 0usize;
    let mut best_d = f64::INFINITY;
    for (l, row) in psi.values.iter().enumerate() {
        let d = squared_distance(&rss.values, row);
        if d < best_d {
            best_d = d;
            best_l = l;
        }
    }
    phi.values[best_l][ap_index]
}

/// Per-packet timing constants of the setup-time model, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    /// SLS cost per scanned TX sector (one control preamble each).
    pub t_sls_per_sector_s: f64,
    /// MID cost per scanned RX sector.
    pub t_mid_per_sector_s: f64,
    /// BC cost per trained beam (one refinement packet).
    pub t_brp_per_beam_s: f64,
    /// 5 GHz probe-request airtime.
    pub t_rss_s: f64,
    /// Controller processing time for the distance matching.
    pub t_proc_s: f64,
    /// Whether the probe and processing overlap mm-w data slots and stay
    /// off the critical path.
    pub pipelined: bool,
}

impl Default for TimingModel {
    /// Calibrated so the exhaustive baseline at 32 sectors and 7 BC beams
    /// costs 1.80 ms with the sweep phase above 70 % of it.
    fn default() -> Self {
        TimingModel {
            t_sls_per_sector_s: 40e-6,
            t_mid_per_sector_s: 13e-6,
            t_brp_per_beam_s: 15e-6,
            t_rss_s: 100e-6,
            t_proc_s: 200e-6,
            pipelined: true,
        }
    }
}

/// Which protocol the setup time is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// SLS + MID + BC exhaustive baseline.
    Midc,
    /// Fingerprint estimation + BC only.
    Proposed,
    /// Proposed plus an RX-side MID scan (multi-sector UEs).
    ProposedWithMid { ue_sectors: usize },
}

/// Additive breakdown of a setup-time figure, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub sls_s: f64,
    pub mid_s: f64,
    pub bc_s: f64,
    pub rss_s: f64,
    pub proc_s: f64,
}

impl TimingBreakdown {
    pub fn total_s(&self) -> f64 {
        self.sls_s + self.mid_s + self.bc_s + self.rss_s + self.proc_s
    }
}

/// Total beamforming setup time across `ap_count` APs.
pub fn setup_time(
    model: &TimingModel,
    scheme: Scheme,
    sector_count: usize,
    bc_beams: usize,
    ap_count: usize,
) -> (f64, TimingBreakdown) {
    assert!(sector_count >= 1 && bc_beams >= 1 && ap_count >= 1);
    let n = ap_count as f64;
    let breakdown = match scheme {
        Scheme::Midc => TimingBreakdown {
            sls_s: n * sector_count as f64 * model.t_sls_per_sector_s,
            mid_s: n * sector_count as f64 * model.t_mid_per_sector_s,
            bc_s: n * bc_beams as f64 * model.t_brp_per_beam_s,
            ..TimingBreakdown::default()
        },
        Scheme::Proposed => TimingBreakdown {
            bc_s: n * bc_beams as f64 * model.t_brp_per_beam_s,
            rss_s: if model.pipelined { 0.0 } else { model.t_rss_s },
            proc_s: if model.pipelined { 0.0 } else { model.t_proc_s },
            ..TimingBreakdown::default()
        },
        Scheme::ProposedWithMid { ue_sectors } => TimingBreakdown {
            mid_s: n * ue_sectors as f64 * model.t_mid_per_sector_s,
            bc_s: n * bc_beams as f64 * model.t_brp_per_beam_s,
            rss_s: if model.pipelined { 0.0 } else { model.t_rss_s },
            proc_s: if model.pipelined { 0.0 } else { model.t_proc_s },
            ..TimingBreakdown::default()
        },
    };
    (breakdown.total_s(), breakdown)
}

/// Received power ratio of a trained decision against the exhaustive
/// reference, in dB. Non-positive whenever both come from the same trial.
pub fn rpr_db(proposed: &BeamDecision, exhaustive: &BeamDecision) -> f64 {
    proposed.best_power_dbm - exhaustive.best_power_dbm
}
