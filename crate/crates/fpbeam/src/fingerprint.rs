//! Offline radio maps: the WiFi RSS database, the best-sector database and
//! the per-sector grouping of fingerprints.
//!
//! Offline scans are noiseless and blockage-free; the stored WiFi entries
//! are channel gains (RSS normalized by the UE transmit power), so they do
//! not depend on the UE power setting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{beam_gain, quasi_omni_gain_db, SectorId};
use crate::environment::{received_power, trace_paths, Band, EnvError, LinkBlockage, Scene};
use crate::geometry::Vec3;

/// Uniform-grid descriptor of the learning points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub counts_x: usize,
    pub counts_y: usize,
    pub ue_height_m: f64,
}

/// The surveyed learning points.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningGrid {
    pub points: Vec<Vec3>,
    pub layout: GridLayout,
}

impl LearningGrid {
    /// Lays `counts_x * counts_y` points uniformly over the scene floor at
    /// the UE height, inset by half a cell from the walls.
    pub fn uniform(scene: &Scene, layout: GridLayout) -> LearningGrid {
        let b = &scene.bounds;
        let dx = (b.max.x - b.min.x) / layout.counts_x as f64;
        let dy = (b.max.y - b.min.y) / layout.counts_y as f64;
        let mut points = Vec::with_capacity(layout.counts_x * layout.counts_y);
        for iy in 0..layout.counts_y {
            for ix in 0..layout.counts_x {
                points.push(Vec3::new(
                    b.min.x + (ix as f64 + 0.5) * dx,
                    b.min.y + (iy as f64 + 0.5) * dy,
                    layout.ue_height_m,
                ));
            }
        }
        LearningGrid { points, layout }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// L x N matrix of normalized WiFi RSS (channel gain, dB).
#[derive(Debug, Clone, PartialEq)]
pub struct WifiRssDb {
    /// `values[lp][wifi_ap]`.
    pub values: Vec<Vec<f64>>,
    pub wifi_ap_ids: Vec<String>,
}

impl WifiRssDb {
    pub fn lp_count(&self) -> usize {
        self.values.len()
    }

    pub fn ap_count(&self) -> usize {
        self.wifi_ap_ids.len()
    }
}

/// L x M matrix of best sector ids; `None` marks an uncovered LP.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSectorDb {
    /// `values[lp][mmw_ap]`.
    pub values: Vec<Vec<Option<SectorId>>>,
    pub mmw_ap_ids: Vec<String>,
}

impl BestSectorDb {
    pub fn lp_count(&self) -> usize {
        self.values.len()
    }

    pub fn ap_count(&self) -> usize {
        self.mmw_ap_ids.len()
    }
}

/// The learning points sharing one best sector id, with their WiFi RSS
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorGroup {
    pub ap_index: usize,
    pub sector_id: SectorId,
    /// (global LP index, WiFi RSS vector of length N).
    pub members: Vec<(usize, Vec<f64>)>,
}

impl SectorGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("LP {lp} has no 5 GHz path to WiFi AP {ap}: learning grid violates the coverage requirement")]
    Coverage { lp: usize, ap: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Offline best-sector scan for one (mm-w AP, learning point) pair.
///
/// Evaluates every sector with quasi-omni reception and no blockage;
/// returns the id with the maximum power (ties to the lowest id), or
/// `None` when the link is fully occluded or the best power falls below
/// the receive sensitivity.
pub fn scan_best_sector(
    scene: &Scene,
    mmw_ap_index: usize,
    lp: Vec3,
    sensitivity_dbm: f64,
    max_reflection_order: usize,
) -> Result<Option<SectorId>, FingerprintError> {
    let ap = &scene.mmw_aps[mmw_ap_index];
    let paths = trace_paths(scene, ap.position, lp, Band::Mmw60GHz, max_reflection_order)?;
    if paths.is_empty() {
        return Ok(None);
    }
    let mut best: Option<(SectorId, f64)> = None;
    for sector in &ap.codebook.sectors {
        let g = received_power(
            &paths,
            ap.tx_power_dbm,
            |az, el| beam_gain(sector, az, el),
            quasi_omni_gain_db(),
            LinkBlockage::CLEAR,
        );
        let better = match best {
            None => true,
            Some((_, p)) => g.received_power_dbm > p,
        };
        if better {
            best = Some((sector.id, g.received_power_dbm));
        }
    }
    match best {
        Some((id, p)) if p >= sensitivity_dbm => Ok(Some(id)),
        _ => Ok(None),
    }
}

/// Noiseless normalized 5 GHz RSS vector at every WiFi AP for a UE at
/// `position`. Entries are channel gains in dB.
pub fn wifi_gain_vector(
    scene: &Scene,
    position: Vec3,
    max_reflection_order: usize,
) -> Result<Vec<Option<f64>>, EnvError> {
    scene
        .wifi_aps
        .iter()
        .map(|ap| {
            let paths = trace_paths(scene, position, ap.position, Band::Wifi5GHz, max_reflection_order)?;
            let g = received_power(&paths, 0.0, |_, _| 0.0, 0.0, LinkBlockage::CLEAR);
            Ok(if g.received_power_dbm.is_finite() {
                Some(g.received_power_dbm)
            } else {
                None
            })
        })
        .collect()
}

/// Builds both offline databases over the learning grid. Deterministic;
/// LPs are evaluated in parallel.
type DbRow = (Vec<f64>, Vec<Option<SectorId>>);

pub fn build_databases(
    scene: &Scene,
    grid: &LearningGrid,
    sensitivity_dbm: f64,
    max_reflection_order: usize,
) -> Result<(WifiRssDb, BestSectorDb), FingerprintError> {
    let rows: Vec<Result<DbRow, FingerprintError>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(l, &lp)| {
            let gains = wifi_gain_vector(scene, lp, max_reflection_order)?;
            let mut psi = Vec::with_capacity(gains.len());
            for (n, g) in gains.into_iter().enumerate() {
                psi.push(g.ok_or(FingerprintError::Coverage { lp: l, ap: n })?);
            }
            let mut phi = Vec::with_capacity(scene.mmw_aps.len());
            for m in 0..scene.mmw_aps.len() {
                phi.push(scan_best_sector(scene, m, lp, sensitivity_dbm, max_reflection_order)?);
            }
            Ok((psi, phi))
        })
        .collect();

    let mut psi_rows = Vec::with_capacity(rows.len());
    let mut phi_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let (psi, phi) = row?;
        psi_rows.push(psi);
        phi_rows.push(phi);
    }
    Ok((
        WifiRssDb {
            values: psi_rows,
            wifi_ap_ids: (0..scene.wifi_aps.len()).map(|n| format!("wifi-{n}")).collect(),
        },
        BestSectorDb {
            values: phi_rows,
            mmw_ap_ids: (0..scene.mmw_aps.len()).map(|m| format!("mmw-{m}")).collect(),
        },
    ))
}

/// Partitions the non-null LPs of one mm-w AP column into per-sector
/// groups, carrying each LP's WiFi RSS vector. Groups come out sorted by
/// sector id.
pub fn group_by_sector(psi: &WifiRssDb, phi: &BestSectorDb, ap_index: usize) -> Vec<SectorGroup> {
    assert_eq!(psi.lp_count(), phi.lp_count(), "databases must share the LP ordering");
    let mut groups: std::collections::BTreeMap<SectorId, Vec<(usize, Vec<f64>)>> =
        std::collections::BTreeMap::new();
    for (l, row) in phi.values.iter().enumerate() {
        if let Some(id) = row[ap_index] {
            groups.entry(id).or_default().push((l, psi.values[l].clone()));
        }
    }
    groups
        .into_iter()
        .map(|(sector_id, members)| SectorGroup {
            ap_index,
            sector_id,
            members,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{build_codebook, Codebook, CodebookLayout};
    use crate::environment::{Material, MmwAp, WifiAp};
    use crate::geometry::{Aabb, Axis, Rect};
    use approx::assert_abs_diff_eq;
    use std::collections::HashMap;

    fn room(codebook: Codebook) -> Scene {
        let mut materials = HashMap::new();
        materials.insert(
            "concrete".into(),
            Material {
                reflection_loss_5ghz_db: 5.0,
                reflection_loss_60ghz_db: 10.0,
            },
        );
        Scene {
            bounds: Aabb {
                min: Vec3::new(0.0, 0.0, 0.0),
                max: Vec3::new(20.0, 10.0, 3.0),
            },
            surfaces: vec![],
            materials,
            wifi_aps: vec![WifiAp {
                position: Vec3::new(0.5, 0.5, 2.5),
                tx_power_dbm: 20.0,
            }],
            mmw_aps: vec![MmwAp {
                position: Vec3::new(10.0, 5.0, 2.9),
                tx_power_dbm: 10.0,
                codebook,
            }],
        }
    }

    #[test]
    fn scan_picks_boresight_sector() {
        let cb = build_codebook(&CodebookLayout::default_92()).unwrap();
        let scene = room(cb.clone());
        let ap = scene.mmw_aps[0].position;
        // place the LP exactly on sector 7's boresight direction
        let target = &cb.sectors[6];
        let r = 4.0;
        let lp = Vec3::new(
            ap.x + r * target.beam_tilt.sin() * target.beam_azimuth.cos(),
            ap.y + r * target.beam_tilt.sin() * target.beam_azimuth.sin(),
            ap.z + r * target.beam_tilt.cos(),
        );
        let got = scan_best_sector(&scene, 0, lp, -78.0, 0).unwrap();
        assert_eq!(got, Some(7));
    }

    #[test]
    fn scan_returns_null_when_occluded() {
        let cb = Codebook::single_sector();
        let mut scene = room(cb);
        scene.surfaces.push(Rect {
            axis: Axis::X,
            at: 12.0,
            u: (0.0, 10.0),
            v: (0.0, 3.0),
            material: "concrete".into(),
        });
        let got = scan_best_sector(&scene, 0, Vec3::new(18.0, 5.0, 1.5), -78.0, 0).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn scan_returns_null_below_sensitivity() {
        let cb = Codebook::single_sector();
        let scene = room(cb);
        // a very strict sensitivity forces the null branch
        let got = scan_best_sector(&scene, 0, Vec3::new(18.0, 5.0, 1.5), 10.0, 0).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn degenerate_databases_shape() {
        let scene = room(Codebook::single_sector());
        let grid = LearningGrid {
            points: vec![Vec3::new(5.0, 5.0, 1.5)],
            layout: GridLayout {
                counts_x: 1,
                counts_y: 1,
                ue_height_m: 1.5,
            },
        };
        // permissive sensitivity: the lone sector points away from the LP
        let (psi, phi) = build_databases(&scene, &grid, -120.0, 0).unwrap();
        assert_eq!(psi.values.len(), 1);
        assert_eq!(psi.values[0].len(), 1);
        assert_eq!(phi.values, vec![vec![Some(1)]]);
        // the stored value is the plain channel gain at 5 GHz
        let d = grid.points[0].distance(scene.wifi_aps[0].position);
        assert_abs_diff_eq!(
            psi.values[0][0],
            -crate::environment::fspl_db(d, Band::Wifi5GHz),
            epsilon = 1e-9
        );
    }

    #[test]
    fn databases_deterministic() {
        let scene = room(build_codebook(&CodebookLayout::default_92()).unwrap());
        let grid = LearningGrid::uniform(
            &scene,
            GridLayout {
                counts_x: 6,
                counts_y: 3,
                ue_height_m: 1.5,
            },
        );
        let a = build_databases(&scene, &grid, -78.0, 1).unwrap();
        let b = build_databases(&scene, &grid, -78.0, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grouping_partitions_non_null_lps() {
        let psi = WifiRssDb {
            values: vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            wifi_ap_ids: vec!["wifi-0".into()],
        };
        let phi = BestSectorDb {
            values: vec![vec![Some(15)], vec![Some(15)], vec![None], vec![Some(7)]],
            mmw_ap_ids: vec!["mmw-0".into()],
        };
        let groups = group_by_sector(&psi, &phi, 0);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].sector_id, 7);
        assert_eq!(groups[0].members, vec![(3, vec![4.0])]);
        assert_eq!(groups[1].sector_id, 15);
        assert_eq!(groups[1].members.len(), 2);
        let covered: usize = groups.iter().map(|g| g.len()).sum();
        assert_eq!(covered, 3);
    }

    #[test]
    fn grouping_all_null_is_empty() {
        let psi = WifiRssDb {
            values: vec![vec![1.0]],
            wifi_ap_ids: vec!["wifi-0".into()],
        };
        let phi = BestSectorDb {
            values: vec![vec![None]],
            mmw_ap_ids: vec!["mmw-0".into()],
        };
        assert!(group_by_sector(&psi, &phi, 0).is_empty());
    }

    #[test]
    fn psi_independent_of_ue_tx_power() {
        // wifi_gain_vector normalizes by construction: the UE power never
        // enters the computation, so two scenes differing only in WiFi AP
        // tx power still yield the same psi entries.
        let scene = room(Codebook::single_sector());
        let mut scene2 = scene.clone();
        scene2.wifi_aps[0].tx_power_dbm = 26.0;
        let p = Vec3::new(7.0, 3.0, 1.5);
        assert_eq!(
            wifi_gain_vector(&scene, p, 1).unwrap(),
            wifi_gain_vector(&scene2, p, 1).unwrap()
        );
    }
}
