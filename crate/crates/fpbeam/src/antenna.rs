//! IEEE 802.11ad style steering-antenna gain model and sector codebooks.
//!
//! Sector gain follows the parabolic main-lobe model with a front-to-back
//! floor 12 dB below isotropic. The receive side is an ideal quasi-omni
//! pattern (0 dB at all angles).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based sector identifier within a codebook.
pub type SectorId = u32;

/// One switched-antenna sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub id: SectorId,
    /// Boresight azimuth, radians in [0, 2pi).
    pub beam_azimuth: f64,
    /// Boresight elevation from zenith, radians in [0, pi].
    pub beam_tilt: f64,
    /// Half-power beamwidth in azimuth, radians.
    pub azimuth_hpbw: f64,
    /// Half-power beamwidth in elevation, radians.
    pub elevation_hpbw: f64,
    /// Boresight gain, dB. Fixed by the elevation beamwidth.
    pub boresight_gain_db: f64,
    /// Front-to-back attenuation, dB. Always 12 + boresight gain.
    pub front_to_back_db: f64,
}

impl Sector {
    pub fn new(
        id: SectorId,
        beam_azimuth: f64,
        beam_tilt: f64,
        azimuth_hpbw: f64,
        elevation_hpbw: f64,
    ) -> Self {
        assert!(azimuth_hpbw > 0.0 && azimuth_hpbw < PI);
        assert!(elevation_hpbw > 0.0 && elevation_hpbw < PI);
        let g0 = boresight_gain_db(elevation_hpbw);
        Sector {
            id,
            beam_azimuth,
            beam_tilt,
            azimuth_hpbw,
            elevation_hpbw,
            boresight_gain_db: g0,
            front_to_back_db: 12.0 + g0,
        }
    }
}

/// Boresight gain G0 as a function of the elevation half-power beamwidth.
pub fn boresight_gain_db(elevation_hpbw: f64) -> f64 {
    20.0 * (1.6162 / (elevation_hpbw / 2.0).sin()).log10()
}

/// Wraps an angle difference to (-pi, pi].
fn wrap_angle(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d <= -PI {
        d += 2.0 * PI;
    } else if d > PI {
        d -= 2.0 * PI;
    }
    d
}

/// Sector gain in dB at departure angles (azimuth, elevation-from-zenith).
pub fn beam_gain(sector: &Sector, azimuth: f64, elevation: f64) -> f64 {
    let am = sector.front_to_back_db;
    let dphi = wrap_angle(azimuth - sector.beam_azimuth);
    let dtheta = elevation - sector.beam_tilt;
    let gh = -(12.0 * (dphi / sector.azimuth_hpbw).powi(2)).min(am);
    let gv = -(12.0 * (dtheta / sector.elevation_hpbw).powi(2)).min(am);
    // G0 - min(-(gh + gv), Am), written so the -12 dB floor is exact
    (sector.boresight_gain_db + gh + gv).max(-12.0)
}

/// Ideal quasi-omni receive gain.
pub fn quasi_omni_gain_db() -> f64 {
    0.0
}

/// An ordered sector codebook; ids run 1..=len with no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub sectors: Vec<Sector>,
}

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("azimuth_steps ({0}) * elevation_steps ({1}) != sector count {2}")]
    GridMismatch(usize, usize, usize),
    #[error("grid steps must be >= 1")]
    EmptyGrid,
}

/// Parameters of the regular codebook grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodebookLayout {
    pub sector_count: usize,
    pub azimuth_steps: usize,
    pub elevation_steps: usize,
    /// Half-power beamwidths, radians.
    pub azimuth_hpbw: f64,
    pub elevation_hpbw: f64,
    /// Tilt range from zenith, radians; sectors are spread over it
    /// inclusively (midpoint when elevation_steps == 1).
    pub tilt_min: f64,
    pub tilt_max: f64,
}

impl CodebookLayout {
    /// The stock layout: 92 sectors as 23 azimuth x 4 elevation,
    /// 20 deg beamwidths, downtilt range 90..150 deg from zenith.
    pub fn default_92() -> Self {
        CodebookLayout {
            sector_count: 92,
            azimuth_steps: 23,
            elevation_steps: 4,
            azimuth_hpbw: 20f64.to_radians(),
            elevation_hpbw: 20f64.to_radians(),
            tilt_min: 90f64.to_radians(),
            tilt_max: 150f64.to_radians(),
        }
    }
}

/// Builds a codebook on a regular grid: azimuths evenly spaced over
/// [0, 2pi), tilts spread over the tilt range. Ids are assigned
/// elevation-major, then azimuth.
pub fn build_codebook(layout: &CodebookLayout) -> Result<Codebook, CodebookError> {
    if layout.azimuth_steps == 0 || layout.elevation_steps == 0 {
        return Err(CodebookError::EmptyGrid);
    }
    if layout.azimuth_steps * layout.elevation_steps != layout.sector_count {
        return Err(CodebookError::GridMismatch(
            layout.azimuth_steps,
            layout.elevation_steps,
            layout.sector_count,
        ));
    }
    let mut sectors = Vec::with_capacity(layout.sector_count);
    let mut id: SectorId = 1;
    for e in 0..layout.elevation_steps {
        let tilt = if layout.elevation_steps == 1 {
            0.5 * (layout.tilt_min + layout.tilt_max)
        } else {
            layout.tilt_min
                + e as f64 * (layout.tilt_max - layout.tilt_min)
                    / (layout.elevation_steps - 1) as f64
        };
        for a in 0..layout.azimuth_steps {
            let az = 2.0 * PI * a as f64 / layout.azimuth_steps as f64;
            sectors.push(Sector::new(
                id,
                az,
                tilt,
                layout.azimuth_hpbw,
                layout.elevation_hpbw,
            ));
            id += 1;
        }
    }
    Ok(Codebook { sectors })
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn sector(&self, id: SectorId) -> Option<&Sector> {
        self.sectors.get(id as usize - 1)
    }

    /// A degenerate one-sector codebook, pointing at the tilt-range
    /// midpoint. Handy for tests and single-beam APs.
    pub fn single_sector() -> Codebook {
        build_codebook(&CodebookLayout {
            sector_count: 1,
            azimuth_steps: 1,
            elevation_steps: 1,
            ..CodebookLayout::default_92()
        })
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sector_20deg() -> Sector {
        Sector::new(1, 1.0, 2.0, 20f64.to_radians(), 20f64.to_radians())
    }

    #[test]
    fn boresight_gain_20deg() {
        let s = sector_20deg();
        assert_abs_diff_eq!(s.boresight_gain_db, 19.38, epsilon = 0.01);
        assert_abs_diff_eq!(beam_gain(&s, 1.0, 2.0), s.boresight_gain_db, epsilon = 1e-12);
        assert_abs_diff_eq!(s.front_to_back_db, 12.0 + s.boresight_gain_db, epsilon = 1e-12);
    }

    #[test]
    fn half_power_offset_is_minus_3db() {
        let s = sector_20deg();
        let g = beam_gain(&s, 1.0 + s.azimuth_hpbw / 2.0, 2.0);
        assert_abs_diff_eq!(g, s.boresight_gain_db - 3.0, epsilon = 1e-12);
        let g = beam_gain(&s, 1.0, 2.0 + s.elevation_hpbw / 2.0);
        assert_abs_diff_eq!(g, s.boresight_gain_db - 3.0, epsilon = 1e-12);
    }

    #[test]
    fn far_off_boresight_floors_at_minus_12db() {
        for hpbw_deg in [10.0f64, 20.0, 45.0] {
            let s = Sector::new(1, 0.0, 1.5, hpbw_deg.to_radians(), hpbw_deg.to_radians());
            let g = beam_gain(&s, std::f64::consts::PI, 0.05);
            assert_abs_diff_eq!(g, -12.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn codebook_92_layout() {
        let cb = build_codebook(&CodebookLayout::default_92()).unwrap();
        assert_eq!(cb.len(), 92);
        let ids: Vec<_> = cb.sectors.iter().map(|s| s.id).collect();
        assert_eq!(ids, (1..=92).collect::<Vec<_>>());
        // azimuth spacing of the 23-wide ring
        let spacing = cb.sectors[1].beam_azimuth - cb.sectors[0].beam_azimuth;
        assert_abs_diff_eq!(spacing.to_degrees(), 360.0 / 23.0, epsilon = 1e-9);
    }

    #[test]
    fn codebook_2x2_structure() {
        let layout = CodebookLayout {
            sector_count: 4,
            azimuth_steps: 2,
            elevation_steps: 2,
            ..CodebookLayout::default_92()
        };
        let cb = build_codebook(&layout).unwrap();
        assert_eq!(cb.sectors[0].beam_tilt, cb.sectors[1].beam_tilt);
        assert_abs_diff_eq!(
            (cb.sectors[1].beam_azimuth - cb.sectors[0].beam_azimuth).to_degrees(),
            180.0,
            epsilon = 1e-9
        );
        assert!(cb.sectors[2].beam_tilt > cb.sectors[0].beam_tilt);
    }

    #[test]
    fn codebook_grid_mismatch_rejected() {
        let layout = CodebookLayout {
            sector_count: 92,
            azimuth_steps: 10,
            elevation_steps: 4,
            ..CodebookLayout::default_92()
        };
        assert!(build_codebook(&layout).is_err());
    }

    #[test]
    fn single_sector_points_at_midrange() {
        let cb = Codebook::single_sector();
        assert_eq!(cb.len(), 1);
        assert_abs_diff_eq!(cb.sectors[0].beam_tilt.to_degrees(), 120.0, epsilon = 1e-9);
    }

    #[test]
    fn quasi_omni_is_zero() {
        assert_eq!(quasi_omni_gain_db(), 0.0);
    }

    #[test]
    fn azimuth_ring_covers_all_directions_within_3db() {
        let cb = build_codebook(&CodebookLayout::default_92()).unwrap();
        let tilt = 110f64.to_radians();
        for i in 0..720 {
            let az = 2.0 * PI * i as f64 / 720.0;
            let best = cb
                .sectors
                .iter()
                .map(|s| beam_gain(s, az, tilt))
                .fold(f64::NEG_INFINITY, f64::max);
            let boresight = cb
                .sectors
                .iter()
                .find(|s| (s.beam_tilt - tilt).abs() < 1e-9)
                .unwrap()
                .boresight_gain_db;
            assert!(best >= boresight - 3.0, "gap at azimuth {az}");
        }
    }

    proptest! {
        #[test]
        fn gain_bounded(az in 0.0..(2.0 * PI), el in 0.0..PI,
                        baz in 0.0..(2.0 * PI), btilt in 0.0..PI,
                        hp in 0.05..2.0f64) {
            let s = Sector::new(1, baz, btilt, hp, hp);
            let g = beam_gain(&s, az, el);
            prop_assert!(g <= s.boresight_gain_db + 1e-12);
            prop_assert!(g >= -12.0 - 1e-12);
        }

        #[test]
        fn gain_symmetric_per_axis(off in -1.0..1.0f64, baz in 0.0..(2.0 * PI)) {
            let s = Sector::new(1, baz, 1.5, 0.35, 0.35);
            let gp = beam_gain(&s, baz + off, 1.5);
            let gm = beam_gain(&s, baz - off, 1.5);
            prop_assert!((gp - gm).abs() < 1e-9);
            let gp = beam_gain(&s, baz, 1.5 + off.min(1.4));
            let gm = beam_gain(&s, baz, 1.5 - off.min(1.4));
            prop_assert!((gp - gm).abs() < 1e-9);
        }

        #[test]
        fn gain_wraps_in_azimuth(eps in -3.0..3.0f64, baz in 0.0..(2.0 * PI)) {
            let s = Sector::new(1, baz, 1.5, 0.35, 0.35);
            let a = beam_gain(&s, baz + eps, 1.5);
            let b = beam_gain(&s, baz + eps - 2.0 * PI, 1.5);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
