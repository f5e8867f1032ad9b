//! Indoor scene description and the dual-band propagation model.
//!
//! Paths are traced with the image method: the line-of-sight segment plus
//! specular reflections off axis-aligned surfaces up to a configurable
//! order. Path loss is free-space loss over the unfolded path length plus
//! the per-bounce material reflection loss. Received power combines paths
//! as a non-coherent power sum; human blockage is a fixed dB penalty drawn
//! per trial on the 60 GHz line-of-sight segment only.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::Codebook;
use crate::geometry::{segment_occluded, Aabb, Rect, Vec3};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Frequency band of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    /// 5 GHz WiFi band.
    Wifi5GHz,
    /// 60 GHz millimeter-wave band.
    Mmw60GHz,
}

impl Band {
    pub fn frequency_hz(self) -> f64 {
        match self {
            Band::Wifi5GHz => 5.0e9,
            Band::Mmw60GHz => 60.0e9,
        }
    }
}

/// Per-band reflection loss of a surface material, in dB per bounce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub reflection_loss_5ghz_db: f64,
    pub reflection_loss_60ghz_db: f64,
}

impl Material {
    pub fn reflection_loss_db(&self, band: Band) -> f64 {
        match band {
            Band::Wifi5GHz => self.reflection_loss_5ghz_db,
            Band::Mmw60GHz => self.reflection_loss_60ghz_db,
        }
    }
}

/// A 5 GHz access point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WifiAp {
    pub position: Vec3,
    pub tx_power_dbm: f64,
}

/// A 60 GHz access point with its sector codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmwAp {
    pub position: Vec3,
    pub tx_power_dbm: f64,
    pub codebook: Codebook,
}

/// The indoor scene: bounds, reflecting surfaces and both AP tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bounds: Aabb,
    pub surfaces: Vec<Rect>,
    pub materials: HashMap<String, Material>,
    pub wifi_aps: Vec<WifiAp>,
    pub mmw_aps: Vec<MmwAp>,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("transmitter and receiver coincide")]
    DegenerateGeometry,
    #[error("position ({0}, {1}, {2}) outside scene bounds")]
    OutOfBounds(f64, f64, f64),
    #[error("reflection order {0} not supported (max 2)")]
    BadReflectionOrder(usize),
    #[error("scene invalid: {0}")]
    InvalidScene(String),
}

impl Scene {
    /// Checks the structural invariants; returns every violation found.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.wifi_aps.is_empty() {
            errs.push("scene needs at least one WiFi AP".to_string());
        }
        if self.mmw_aps.is_empty() {
            errs.push("scene needs at least one mm-w AP".to_string());
        }
        for (i, ap) in self.wifi_aps.iter().enumerate() {
            if !self.bounds.contains(ap.position) {
                errs.push(format!("WiFi AP {i} outside scene bounds"));
            }
        }
        for (i, ap) in self.mmw_aps.iter().enumerate() {
            if !self.bounds.contains(ap.position) {
                errs.push(format!("mm-w AP {i} outside scene bounds"));
            }
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            match self.materials.get(&s.material) {
                None => errs.push(format!("surface {i}: unknown material '{}'", s.material)),
                Some(m) => {
                    if m.reflection_loss_5ghz_db < 0.0 || m.reflection_loss_60ghz_db < 0.0 {
                        errs.push(format!(
                            "material '{}' has negative reflection loss",
                            s.material
                        ));
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn reflection_loss(&self, surface: &Rect, band: Band) -> f64 {
        self.materials
            .get(&surface.material)
            .map(|m| m.reflection_loss_db(band))
            .unwrap_or(0.0)
    }
}

/// Kind of a traced path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    Reflected { order: u8 },
}

/// One propagation path between a transmitter and a receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationPath {
    pub kind: PathKind,
    /// Unfolded geometric length in meters.
    pub length_m: f64,
    /// Departure azimuth at the transmitter, [0, 2pi).
    pub departure_azimuth: f64,
    /// Departure elevation at the transmitter from zenith, [0, pi].
    pub departure_elevation: f64,
    /// Free-space loss plus accumulated reflection losses, dB.
    pub path_loss_db: f64,
    pub band: Band,
}

/// Free-space path loss in dB at distance `d` meters.
pub fn fspl_db(d: f64, band: Band) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d * band.frequency_hz() / SPEED_OF_LIGHT).log10()
}

/// Traces the LOS path and image-method specular reflections up to
/// `max_reflection_order` (0..=2). An empty result means a fully occluded
/// link, not an error.
pub fn trace_paths(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    band: Band,
    max_reflection_order: usize,
) -> Result<Vec<PropagationPath>, EnvError> {
    if tx.distance(rx) < 1e-12 {
        return Err(EnvError::DegenerateGeometry);
    }
    for p in [tx, rx] {
        if !scene.bounds.contains(p) {
            return Err(EnvError::OutOfBounds(p.x, p.y, p.z));
        }
    }
    if max_reflection_order > 2 {
        return Err(EnvError::BadReflectionOrder(max_reflection_order));
    }

    let mut paths = Vec::new();
    let surfaces = &scene.surfaces;

    if !segment_occluded(surfaces, tx, rx, &[]) {
        let dir = rx.sub(tx);
        paths.push(make_path(PathKind::Los, tx.distance(rx), dir, 0.0, band));
    }

    if max_reflection_order >= 1 {
        for (i, s) in surfaces.iter().enumerate() {
            let image = s.mirror(rx);
            let Some(p) = s.segment_hit(tx, image) else {
                continue;
            };
            if p.distance(tx) < 1e-9 || p.distance(rx) < 1e-9 {
                continue;
            }
            if segment_occluded(surfaces, tx, p, &[i]) || segment_occluded(surfaces, p, rx, &[i]) {
                continue;
            }
            let length = tx.distance(p) + p.distance(rx);
            let loss = scene.reflection_loss(s, band);
            paths.push(make_path(
                PathKind::Reflected { order: 1 },
                length,
                p.sub(tx),
                loss,
                band,
            ));
        }
    }

    if max_reflection_order >= 2 {
        for (i, si) in surfaces.iter().enumerate() {
            for (j, sj) in surfaces.iter().enumerate() {
                if i == j {
                    continue;
                }
                let rx1 = sj.mirror(rx);
                let rx2 = si.mirror(rx1);
                let Some(p1) = si.segment_hit(tx, rx2) else {
                    continue;
                };
                let Some(p2) = sj.segment_hit(p1, rx1) else {
                    continue;
                };
                if p1.distance(tx) < 1e-9 || p2.distance(p1) < 1e-9 || p2.distance(rx) < 1e-9 {
                    continue;
                }
                if segment_occluded(surfaces, tx, p1, &[i])
                    || segment_occluded(surfaces, p1, p2, &[i, j])
                    || segment_occluded(surfaces, p2, rx, &[j])
                {
                    continue;
                }
                let length = tx.distance(p1) + p1.distance(p2) + p2.distance(rx);
                let loss = scene.reflection_loss(si, band) + scene.reflection_loss(sj, band);
                paths.push(make_path(
                    PathKind::Reflected { order: 2 },
                    length,
                    p1.sub(tx),
                    loss,
                    band,
                ));
            }
        }
    }

    Ok(paths)
}

fn make_path(kind: PathKind, length: f64, departure: Vec3, extra_loss_db: f64, band: Band) -> PropagationPath {
    PropagationPath {
        kind,
        length_m: length,
        departure_azimuth: departure.azimuth(),
        departure_elevation: departure.elevation(),
        path_loss_db: fspl_db(length, band) + extra_loss_db,
        band,
    }
}

/// Blockage as seen by one (mm-w AP, receiver position) link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBlockage {
    pub los_blocked: bool,
    pub attenuation_db: f64,
}

impl LinkBlockage {
    pub const CLEAR: LinkBlockage = LinkBlockage {
        los_blocked: false,
        attenuation_db: 0.0,
    };
}

/// One trial's blockage realization over (mm-w AP, position) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockageState {
    /// `blocked[ap][position]`.
    pub blocked: Vec<Vec<bool>>,
    pub attenuation_db: f64,
    /// The probability drawn for this trial, in [0, p_max].
    pub block_probability: f64,
}

impl BlockageState {
    pub fn link(&self, ap_index: usize, position_index: usize) -> LinkBlockage {
        LinkBlockage {
            los_blocked: self.blocked[ap_index][position_index],
            attenuation_db: self.attenuation_db,
        }
    }
}

/// Draws the trial blockage: p ~ U(0, p_max), then each (mm-w AP, position)
/// LOS is independently blocked with probability p. Deterministic per seed.
pub fn sample_blockage(
    scene: &Scene,
    positions: &[Vec3],
    rng_seed: u64,
    p_max: f64,
    attenuation_db: f64,
) -> BlockageState {
    assert!((0.0..=1.0).contains(&p_max), "p_max must be in [0, 1]");
    assert!(attenuation_db >= 0.0, "attenuation must be >= 0 dB");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let p = if p_max == 0.0 { 0.0 } else { rng.gen_range(0.0..=p_max) };
    let blocked = scene
        .mmw_aps
        .iter()
        .map(|_| positions.iter().map(|_| rng.gen_bool(p)).collect())
        .collect();
    BlockageState {
        blocked,
        attenuation_db,
        block_probability: p,
    }
}

/// Per-path contribution and the combined link budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGain {
    /// Each traced path with the TX beam gain applied to it, dB.
    pub per_path: Vec<(PropagationPath, f64)>,
    /// Combined channel gain including antenna gains, dB.
    pub total_gain_db: f64,
    /// `tx_power_dbm + total_gain_db`; `-inf` when no path exists.
    pub received_power_dbm: f64,
}

/// Non-coherent power sum over the traced paths. The blockage penalty
/// applies to LOS paths only. An empty path list yields `-inf` received
/// power ("no signal"), never an error.
pub fn received_power(
    paths: &[PropagationPath],
    tx_power_dbm: f64,
    tx_gain_db: impl Fn(f64, f64) -> f64,
    rx_gain_db: f64,
    blockage: LinkBlockage,
) -> ChannelGain {
    let mut per_path = Vec::with_capacity(paths.len());
    let mut linear_sum = 0.0f64;
    for path in paths {
        let beam_gain = tx_gain_db(path.departure_azimuth, path.departure_elevation);
        let penalty = if blockage.los_blocked && path.kind == PathKind::Los {
            blockage.attenuation_db
        } else {
            0.0
        };
        let gain_db = beam_gain + rx_gain_db - path.path_loss_db - penalty;
        linear_sum += 10f64.powf(gain_db / 10.0);
        per_path.push((path.clone(), beam_gain));
    }
    let total_gain_db = if linear_sum > 0.0 {
        10.0 * linear_sum.log10()
    } else {
        f64::NEG_INFINITY
    };
    ChannelGain {
        per_path,
        total_gain_db,
        received_power_dbm: tx_power_dbm + total_gain_db,
    }
}
