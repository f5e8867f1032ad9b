//! Scenario configuration: the TOML schema, defaults, validation and the
//! scene builder.
//!
//! An empty config file yields the default scenario: a 20 x 10 x 3 m
//! concrete room with two wooden desks, 4 WiFi APs (20 dBm), 8 mm-w APs
//! (10 dBm) near the ceiling, a 92-sector codebook with 20 deg beamwidths
//! and a 15 x 6 learning grid at 1.5 m UE height.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{build_codebook, Codebook, CodebookLayout};
use crate::clustering::ClusteringParams;
use crate::environment::{Material, MmwAp, Scene, WifiAp};
use crate::fingerprint::GridLayout;
use crate::geometry::{Aabb, Axis, Rect, Vec3};
use crate::protocol::TimingModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Config schema version.
    pub version: u32,
    pub room: RoomConfig,
    pub materials: BTreeMap<String, MaterialConfig>,
    /// Explicit WiFi AP placements; empty means "first `wifi_ap_count`
    /// slots of the deterministic placement order".
    pub wifi_aps: Vec<ApConfig>,
    pub wifi_ap_count: usize,
    pub mmw_aps: Vec<ApConfig>,
    pub codebook: CodebookConfig,
    pub grid: GridConfig,
    pub clustering: ClusteringConfig,
    pub online: OnlineConfig,
    pub propagation: PropagationConfig,
    pub sweep: SweepConfig,
    pub timing: TimingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoomConfig {
    pub width_m: f64,
    pub depth_m: f64,
    pub height_m: f64,
    pub wall_material: String,
    pub desks: Vec<DeskConfig>,
}

impl Default for RoomConfig {
    fn default() -> Self {
        RoomConfig {
            width_m: 20.0,
            depth_m: 10.0,
            height_m: 3.0,
            wall_material: "concrete".into(),
            desks: vec![
                DeskConfig {
                    x_m: 4.0,
                    y_m: 2.0,
                    width_m: 2.0,
                    depth_m: 1.6,
                    top_height_m: 0.75,
                    material: "wood".into(),
                },
                DeskConfig {
                    x_m: 13.0,
                    y_m: 6.0,
                    width_m: 2.0,
                    depth_m: 1.6,
                    top_height_m: 0.75,
                    material: "wood".into(),
                },
            ],
        }
    }
}

/// A desk modeled as its horizontal tabletop rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskConfig {
    pub x_m: f64,
    pub y_m: f64,
    pub width_m: f64,
    pub depth_m: f64,
    pub top_height_m: f64,
    pub material: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub reflection_loss_5ghz_db: f64,
    pub reflection_loss_60ghz_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApConfig {
    pub position: [f64; 3],
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookConfig {
    pub sector_count: usize,
    pub azimuth_steps: usize,
    pub elevation_steps: usize,
    pub azimuth_hpbw_deg: f64,
    pub elevation_hpbw_deg: f64,
    pub tilt_min_deg: f64,
    pub tilt_max_deg: f64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            sector_count: 92,
            azimuth_steps: 23,
            elevation_steps: 4,
            azimuth_hpbw_deg: 20.0,
            elevation_hpbw_deg: 20.0,
            tilt_min_deg: 90.0,
            tilt_max_deg: 150.0,
        }
    }
}

impl CodebookConfig {
    pub fn layout(&self) -> CodebookLayout {
        CodebookLayout {
            sector_count: self.sector_count,
            azimuth_steps: self.azimuth_steps,
            elevation_steps: self.elevation_steps,
            azimuth_hpbw: self.azimuth_hpbw_deg.to_radians(),
            elevation_hpbw: self.elevation_hpbw_deg.to_radians(),
            tilt_min: self.tilt_min_deg.to_radians(),
            tilt_max: self.tilt_max_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub counts_x: usize,
    pub counts_y: usize,
    pub ue_height_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        // 90 learning points
        GridConfig {
            counts_x: 15,
            counts_y: 6,
            ue_height_m: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub chi: f64,
    pub damping: f64,
    pub max_iterations: usize,
    pub stable_window: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let p = ClusteringParams::default();
        ClusteringConfig {
            chi: p.chi,
            damping: p.damping,
            max_iterations: p.max_iterations,
            stable_window: p.stable_window,
        }
    }
}

impl ClusteringConfig {
    pub fn params(&self) -> ClusteringParams {
        ClusteringParams {
            chi: self.chi,
            damping: self.damping,
            max_iterations: self.max_iterations,
            stable_window: self.stable_window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineConfig {
    pub noise_sigma_db: f64,
    /// Candidate beams X handed to the BC subphase.
    pub beams: usize,
    pub p_max: f64,
    pub blockage_attenuation_db: f64,
    pub sensitivity_dbm: f64,
    /// UE evaluation height for random online positions.
    pub ue_height_m: f64,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            noise_sigma_db: 1.0,
            beams: 5,
            p_max: 0.4,
            blockage_attenuation_db: 25.0,
            sensitivity_dbm: -78.0,
            ue_height_m: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub max_reflection_order: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            max_reflection_order: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Learning-grid sizes for the LP-count axis, as (x, y) cell counts.
    pub lp_axis: Vec<[usize; 2]>,
    /// WiFi AP counts for the AP axis; placements follow the
    /// deterministic order.
    pub wifi_ap_axis: Vec<usize>,
    /// Candidate beam counts for the beams axis; the full codebook size
    /// is appended by the sweep runner.
    pub beam_axis: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lp_axis: vec![[5, 2], [9, 5], [15, 6]],
            wifi_ap_axis: vec![1, 2, 3, 4],
            beam_axis: vec![1, 3, 5, 10],
            trials: 500,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub t_sls_per_sector_us: f64,
    pub t_mid_per_sector_us: f64,
    pub t_brp_per_beam_us: f64,
    pub t_rss_us: f64,
    pub t_proc_us: f64,
    pub pipelined: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        let m = TimingModel::default();
        TimingConfig {
            t_sls_per_sector_us: m.t_sls_per_sector_s * 1e6,
            t_mid_per_sector_us: m.t_mid_per_sector_s * 1e6,
            t_brp_per_beam_us: m.t_brp_per_beam_s * 1e6,
            t_rss_us: m.t_rss_s * 1e6,
            t_proc_us: m.t_proc_s * 1e6,
            pipelined: m.pipelined,
        }
    }
}

impl TimingConfig {
    pub fn model(&self) -> TimingModel {
        TimingModel {
            t_sls_per_sector_s: self.t_sls_per_sector_us * 1e-6,
            t_mid_per_sector_s: self.t_mid_per_sector_us * 1e-6,
            t_brp_per_beam_s: self.t_brp_per_beam_us * 1e-6,
            t_rss_s: self.t_rss_us * 1e-6,
            t_proc_s: self.t_proc_us * 1e-6,
            pipelined: self.pipelined,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut materials = BTreeMap::new();
        materials.insert(
            "concrete".to_string(),
            MaterialConfig {
                reflection_loss_5ghz_db: 5.0,
                reflection_loss_60ghz_db: 10.0,
            },
        );
        materials.insert(
            "wood".to_string(),
            MaterialConfig {
                reflection_loss_5ghz_db: 3.0,
                reflection_loss_60ghz_db: 6.0,
            },
        );
        ScenarioConfig {
            version: 1,
            room: RoomConfig::default(),
            materials,
            wifi_aps: Vec::new(),
            wifi_ap_count: 4,
            mmw_aps: Vec::new(),
            codebook: CodebookConfig::default(),
            grid: GridConfig::default(),
            clustering: ClusteringConfig::default(),
            online: OnlineConfig::default(),
            propagation: PropagationConfig::default(),
            sweep: SweepConfig::default(),
            timing: TimingConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Parses and fully validates a TOML scenario config. Unknown keys are
/// rejected; every semantic violation found is reported, not just the
/// first.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate().map_err(ConfigError::Invalid)?;
    Ok(config)
}

pub fn serialize_config(config: &ScenarioConfig) -> String {
    toml::to_string_pretty(config).expect("config serializes")
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.version != 1 {
            errs.push(format!("unsupported config version {}", self.version));
        }
        if self.room.width_m <= 0.0 || self.room.depth_m <= 0.0 || self.room.height_m <= 0.0 {
            errs.push("room dimensions must be positive".into());
        }
        let cb = &self.codebook;
        if cb.azimuth_steps * cb.elevation_steps != cb.sector_count {
            errs.push(format!(
                "codebook grid {} x {} does not multiply to sector_count {}",
                cb.azimuth_steps, cb.elevation_steps, cb.sector_count
            ));
        }
        if !(0.0..180.0).contains(&cb.azimuth_hpbw_deg) || cb.azimuth_hpbw_deg <= 0.0 {
            errs.push("azimuth beamwidth must be in (0, 180) degrees".into());
        }
        if !(0.0..180.0).contains(&cb.elevation_hpbw_deg) || cb.elevation_hpbw_deg <= 0.0 {
            errs.push("elevation beamwidth must be in (0, 180) degrees".into());
        }
        if self.grid.counts_x == 0 || self.grid.counts_y == 0 {
            errs.push("learning grid counts must be >= 1".into());
        }
        if self.clustering.chi <= 0.0 {
            errs.push("clustering chi must be positive".into());
        }
        if !(0.0..1.0).contains(&self.clustering.damping) || self.clustering.damping <= 0.0 {
            errs.push("clustering damping must be in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.online.p_max) {
            errs.push("p_max must be in [0, 1]".into());
        }
        if self.online.blockage_attenuation_db < 0.0 {
            errs.push("blockage attenuation must be >= 0 dB".into());
        }
        if self.online.noise_sigma_db < 0.0 {
            errs.push("noise sigma must be >= 0 dB".into());
        }
        if self.online.beams == 0 {
            errs.push("online beams must be >= 1".into());
        }
        if self.propagation.max_reflection_order > 2 {
            errs.push("max_reflection_order must be 0, 1 or 2".into());
        }
        if self.sweep.trials == 0 {
            errs.push("trial count must be >= 1".into());
        }
        for (name, empty) in [
            ("lp_axis", self.sweep.lp_axis.is_empty()),
            ("wifi_ap_axis", self.sweep.wifi_ap_axis.is_empty()),
            ("beam_axis", self.sweep.beam_axis.is_empty()),
        ] {
            if empty {
                errs.push(format!("sweep {name} must be nonempty"));
            }
        }
        if self.wifi_aps.is_empty() && self.wifi_ap_count == 0 {
            errs.push("at least one WiFi AP is required".into());
        }
        for (k, m) in &self.materials {
            if m.reflection_loss_5ghz_db < 0.0 || m.reflection_loss_60ghz_db < 0.0 {
                errs.push(format!("material '{k}' has negative reflection loss"));
            }
        }
        if !self.materials.contains_key(&self.room.wall_material) {
            errs.push(format!("wall material '{}' is not defined", self.room.wall_material));
        }
        for d in &self.room.desks {
            if !self.materials.contains_key(&d.material) {
                errs.push(format!("desk material '{}' is not defined", d.material));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Deterministic WiFi AP placement order: corners first (opposite
    /// pairs), then the room center, then wall midpoints.
    pub fn wifi_placement_order(&self) -> Vec<Vec3> {
        let w = self.room.width_m;
        let d = self.room.depth_m;
        let h = (self.room.height_m - 0.5).max(0.5);
        let inset = 0.5;
        vec![
            Vec3::new(inset, inset, h),
            Vec3::new(w - inset, d - inset, h),
            Vec3::new(w / 2.0, d / 2.0, h),
            Vec3::new(w - inset, inset, h),
            Vec3::new(inset, d - inset, h),
            Vec3::new(w / 2.0, inset, h),
            Vec3::new(w / 2.0, d - inset, h),
            Vec3::new(inset, d / 2.0, h),
            Vec3::new(w - inset, d / 2.0, h),
        ]
    }

    fn wifi_aps_for_count(&self, count: usize) -> Vec<WifiAp> {
        if !self.wifi_aps.is_empty() {
            return self
                .wifi_aps
                .iter()
                .take(count)
                .map(|a| WifiAp {
                    position: Vec3::new(a.position[0], a.position[1], a.position[2]),
                    tx_power_dbm: a.tx_power_dbm,
                })
                .collect();
        }
        self.wifi_placement_order()
            .into_iter()
            .take(count)
            .map(|position| WifiAp {
                position,
                tx_power_dbm: 20.0,
            })
            .collect()
    }

    fn default_mmw_positions(&self) -> Vec<Vec3> {
        let w = self.room.width_m;
        let d = self.room.depth_m;
        let z = (self.room.height_m - 0.1).max(0.1);
        let mut out = Vec::with_capacity(8);
        for j in 0..2 {
            for i in 0..4 {
                out.push(Vec3::new(
                    w * (i as f64 + 0.5) / 4.0,
                    d * (j as f64 + 0.5) / 2.0,
                    z,
                ));
            }
        }
        out
    }

    pub fn build_codebook(&self) -> Result<Codebook, crate::antenna::CodebookError> {
        build_codebook(&self.codebook.layout())
    }

    /// Builds the scene with `wifi_count` WiFi APs (clamped to the
    /// placement order length).
    pub fn build_scene_with_wifi_count(&self, wifi_count: usize) -> Result<Scene, ConfigError> {
        let codebook = self
            .build_codebook()
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        let w = self.room.width_m;
        let d = self.room.depth_m;
        let h = self.room.height_m;
        let wall = self.room.wall_material.clone();
        let mut surfaces = vec![
            Rect { axis: Axis::X, at: 0.0, u: (0.0, d), v: (0.0, h), material: wall.clone() },
            Rect { axis: Axis::X, at: w, u: (0.0, d), v: (0.0, h), material: wall.clone() },
            Rect { axis: Axis::Y, at: 0.0, u: (0.0, w), v: (0.0, h), material: wall.clone() },
            Rect { axis: Axis::Y, at: d, u: (0.0, w), v: (0.0, h), material: wall.clone() },
            Rect { axis: Axis::Z, at: 0.0, u: (0.0, w), v: (0.0, d), material: wall.clone() },
            Rect { axis: Axis::Z, at: h, u: (0.0, w), v: (0.0, d), material: wall },
        ];
        for desk in &self.room.desks {
            surfaces.push(Rect {
                axis: Axis::Z,
                at: desk.top_height_m,
                u: (desk.x_m, desk.x_m + desk.width_m),
                v: (desk.y_m, desk.y_m + desk.depth_m),
                material: desk.material.clone(),
            });
        }
        let materials: HashMap<String, Material> = self
            .materials
            .iter()
            .map(|(k, m)| {
                (
                    k.clone(),
                    Material {
                        reflection_loss_5ghz_db: m.reflection_loss_5ghz_db,
                        reflection_loss_60ghz_db: m.reflection_loss_60ghz_db,
                    },
                )
            })
            .collect();
        let mmw_aps = if self.mmw_aps.is_empty() {
            self.default_mmw_positions()
                .into_iter()
                .map(|position| MmwAp {
                    position,
                    tx_power_dbm: 10.0,
                    codebook: codebook.clone(),
                })
                .collect()
        } else {
            self.mmw_aps
                .iter()
                .map(|a| MmwAp {
                    position: Vec3::new(a.position[0], a.position[1], a.position[2]),
                    tx_power_dbm: a.tx_power_dbm,
                    codebook: codebook.clone(),
                })
                .collect()
        };
        let scene = Scene {
            bounds: Aabb {
                min: Vec3::new(0.0, 0.0, 0.0),
                max: Vec3::new(w, d, h),
            },
            surfaces,
            materials,
            wifi_aps: self.wifi_aps_for_count(wifi_count),
            mmw_aps,
        };
        scene.validate().map_err(ConfigError::Invalid)?;
        Ok(scene)
    }

    pub fn build_scene(&self) -> Result<Scene, ConfigError> {
        let count = if self.wifi_aps.is_empty() {
            self.wifi_ap_count
        } else {
            self.wifi_aps.len()
        };
        self.build_scene_with_wifi_count(count)
    }

    pub fn grid_layout(&self) -> GridLayout {
        GridLayout {
            counts_x: self.grid.counts_x,
            counts_y: self.grid.counts_y,
            ue_height_m: self.grid.ue_height_m,
        }
    }
}
