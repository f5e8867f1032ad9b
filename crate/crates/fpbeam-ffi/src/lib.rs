//! C ABI over the fpbeam core: opaque handles, integer error codes and
//! caller-owned output buffers. The header is generated into
//! `include/fpbeam.h` at build time.
//!
//! Safety contract for every exported function: pointers must be valid
//! for the documented length (or null where stated, yielding
//! `NullArgument`), handles must come from the matching constructor, and
//! strings must be NUL-terminated.
#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use fpbeam::config::{parse_config, ScenarioConfig};
use fpbeam::harness::{report_timing, run_offline_to_file};
use fpbeam::protocol::{estimate_best_beams, setup_time, OnlineRss, Scheme, TimingModel};
use fpbeam::radiomap::{codebook_hash, load_radio_maps, RadioMaps};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpbStatus {
    FpbOk = 0,
    FpbErrNullArgument = 1,
    FpbErrInvalidUtf8 = 2,
    FpbErrConfig = 3,
    FpbErrOffline = 4,
    FpbErrRadioMap = 5,
    FpbErrNoCoverage = 6,
    FpbErrBufferTooSmall = 7,
}

/// Opaque scenario configuration handle.
pub struct FpbConfig {
    inner: ScenarioConfig,
}

/// Opaque radio-map handle (databases plus exemplars).
pub struct FpbRadioMap {
    maps: RadioMaps,
    wifi_ap_count: usize,
    mmw_ap_count: usize,
}

unsafe fn cstr_to_str<'a>(s: *const c_char) -> Result<&'a str, FpbStatus> {
    if s.is_null() {
        return Err(FpbStatus::FpbErrNullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| FpbStatus::FpbErrInvalidUtf8)
}

/// Parses a TOML scenario config. Pass an empty string for the defaults.
/// On success `*out` owns a new handle; release it with
/// `fpb_config_free`.
#[no_mangle]
pub unsafe extern "C" fn fpb_config_parse(
    toml_text: *const c_char,
    out: *mut *mut FpbConfig,
) -> FpbStatus {
    if out.is_null() {
        return FpbStatus::FpbErrNullArgument;
    }
    *out = ptr::null_mut();
    let text = match cstr_to_str(toml_text) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match parse_config(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FpbConfig { inner }));
            FpbStatus::FpbOk
        }
        Err(_) => FpbStatus::FpbErrConfig,
    }
}

#[no_mangle]
pub unsafe extern "C" fn fpb_config_free(config: *mut FpbConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the offline learning phase and writes the radio-map file.
#[no_mangle]
pub unsafe extern "C" fn fpb_offline_run(
    config: *const FpbConfig,
    radio_map_path: *const c_char,
) -> FpbStatus {
    if config.is_null() {
        return FpbStatus::FpbErrNullArgument;
    }
    let path = match cstr_to_str(radio_map_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match run_offline_to_file(&(*config).inner, Path::new(path)) {
        Ok(_) => FpbStatus::FpbOk,
        Err(_) => FpbStatus::FpbErrOffline,
    }
}

/// Loads a radio-map file produced by `fpb_offline_run`, verifying it
/// against the codebooks of the given config.
#[no_mangle]
pub unsafe extern "C" fn fpb_radio_map_load(
    config: *const FpbConfig,
    radio_map_path: *const c_char,
    out: *mut *mut FpbRadioMap,
) -> FpbStatus {
    if config.is_null() || out.is_null() {
        return FpbStatus::FpbErrNullArgument;
    }
    *out = ptr::null_mut();
    let path = match cstr_to_str(radio_map_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let scene = match (*config).inner.build_scene() {
        Ok(s) => s,
        Err(_) => return FpbStatus::FpbErrConfig,
    };
    let hash = codebook_hash(&scene);
    match load_radio_maps(Path::new(path), &hash) {
        Ok(maps) => {
            let handle = FpbRadioMap {
                wifi_ap_count: maps.psi.ap_count(),
                mmw_ap_count: maps.phi.ap_count(),
                maps,
            };
            *out = Box::into_raw(Box::new(handle));
            FpbStatus::FpbOk
        }
        Err(_) => FpbStatus::FpbErrRadioMap,
    }
}

#[no_mangle]
pub unsafe extern "C" fn fpb_radio_map_free(map: *mut FpbRadioMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Number of WiFi APs the loaded radio map was built with (the length of
/// the RSS vectors expected by `fpb_estimate_best_beams`).
#[no_mangle]
pub unsafe extern "C" fn fpb_radio_map_wifi_ap_count(map: *const FpbRadioMap) -> usize {
    if map.is_null() {
        return 0;
    }
    (*map).wifi_ap_count
}

/// Number of mm-w APs covered by the loaded radio map.
#[no_mangle]
pub unsafe extern "C" fn fpb_radio_map_mmw_ap_count(map: *const FpbRadioMap) -> usize {
    if map.is_null() {
        return 0;
    }
    (*map).mmw_ap_count
}

/// Ranks candidate sectors for one mm-w AP from a live normalized WiFi
/// RSS vector (dB, length = WiFi AP count).
///
/// `sector_ids` and `distances` must each hold `max_beams` entries; the
/// number written is stored in `*written`.
#[no_mangle]
pub unsafe extern "C" fn fpb_estimate_best_beams(
    map: *const FpbRadioMap,
    rss_db: *const f64,
    rss_len: usize,
    mmw_ap_index: usize,
    max_beams: usize,
    sector_ids: *mut u32,
    distances: *mut f64,
    written: *mut usize,
) -> FpbStatus {
    if map.is_null() || rss_db.is_null() || sector_ids.is_null() || distances.is_null() || written.is_null()
    {
        return FpbStatus::FpbErrNullArgument;
    }
    let map = &*map;
    if rss_len != map.wifi_ap_count || max_beams == 0 {
        return FpbStatus::FpbErrBufferTooSmall;
    }
    let rss = OnlineRss {
        values: std::slice::from_raw_parts(rss_db, rss_len).to_vec(),
        noise_sigma_db: 0.0,
        position: fpbeam::geometry::Vec3::new(0.0, 0.0, 0.0),
    };
    match estimate_best_beams(&rss, &map.maps.exemplars, mmw_ap_index, max_beams) {
        Ok(estimate) => {
            let n = estimate.ranked.len().min(max_beams);
            for (i, (id, d)) in estimate.ranked.iter().take(n).enumerate() {
                *sector_ids.add(i) = *id;
                *distances.add(i) = *d;
            }
            *written = n;
            FpbStatus::FpbOk
        }
        Err(_) => FpbStatus::FpbErrNoCoverage,
    }
}

/// Beamforming setup time in seconds. `scheme` is 0 for the exhaustive
/// MIDC baseline and 1 for the proposed fingerprint protocol.
#[no_mangle]
pub unsafe extern "C" fn fpb_setup_time_s(
    config: *const FpbConfig,
    scheme: u32,
    sector_count: usize,
    bc_beams: usize,
    ap_count: usize,
    out_seconds: *mut f64,
) -> FpbStatus {
    if config.is_null() || out_seconds.is_null() {
        return FpbStatus::FpbErrNullArgument;
    }
    if sector_count == 0 || bc_beams == 0 || ap_count == 0 {
        return FpbStatus::FpbErrBufferTooSmall;
    }
    let model: TimingModel = (*config).inner.timing.model();
    let scheme = match scheme {
        0 => Scheme::Midc,
        _ => Scheme::Proposed,
    };
    let (total, _) = setup_time(&model, scheme, sector_count, bc_beams, ap_count);
    *out_seconds = total;
    FpbStatus::FpbOk
}

/// Serializes the MIDC-vs-proposed timing comparison as JSON. The
/// returned string must be released with `fpb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn fpb_timing_report_json(
    config: *const FpbConfig,
    out: *mut *mut c_char,
) -> FpbStatus {
    if config.is_null() || out.is_null() {
        return FpbStatus::FpbErrNullArgument;
    }
    *out = ptr::null_mut();
    let report = report_timing(&(*config).inner);
    let json = serde_json_string(&report);
    match CString::new(json) {
        Ok(s) => {
            *out = s.into_raw();
            FpbStatus::FpbOk
        }
        Err(_) => FpbStatus::FpbErrConfig,
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|_| "{}".to_string())
}

#[no_mangle]
pub unsafe extern "C" fn fpb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn parse(text: &str) -> *mut FpbConfig {
        let c = CString::new(text).unwrap();
        let mut out = ptr::null_mut();
        let status = unsafe { fpb_config_parse(c.as_ptr(), &mut out) };
        assert_eq!(status, FpbStatus::FpbOk);
        out
    }

    #[test]
    fn parse_and_free_default_config() {
        let config = parse("");
        unsafe { fpb_config_free(config) };
    }

    #[test]
    fn bad_config_reports_error_code() {
        let c = CString::new("not valid = = toml").unwrap();
        let mut out = ptr::null_mut();
        let status = unsafe { fpb_config_parse(c.as_ptr(), &mut out) };
        assert_eq!(status, FpbStatus::FpbErrConfig);
        assert!(out.is_null());
    }

    #[test]
    fn null_arguments_rejected() {
        let status = unsafe { fpb_config_parse(ptr::null(), ptr::null_mut()) };
        assert_eq!(status, FpbStatus::FpbErrNullArgument);
    }

    #[test]
    fn offline_load_estimate_round_trip() {
        // a small scenario keeps the offline phase fast
        let config = parse(
            "[grid]\ncounts_x = 4\ncounts_y = 2\n\n[online]\nnoise_sigma_db = 0.0\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.fprm").to_str().unwrap()).unwrap();
        unsafe {
            assert_eq!(fpb_offline_run(config, path.as_ptr()), FpbStatus::FpbOk);
            let mut map = ptr::null_mut();
            assert_eq!(fpb_radio_map_load(config, path.as_ptr(), &mut map), FpbStatus::FpbOk);
            let n = fpb_radio_map_wifi_ap_count(map);
            assert_eq!(n, 4);
            assert_eq!(fpb_radio_map_mmw_ap_count(map), 8);

            // use a stored fingerprint itself: its own sector must rank first
            let maps = &(*map).maps;
            let entry = &maps.exemplars.entries[0];
            let rss = entry.exemplar_vectors[0].clone();
            let mut ids = vec![0u32; 5];
            let mut dists = vec![0f64; 5];
            let mut written = 0usize;
            let status = fpb_estimate_best_beams(
                map,
                rss.as_ptr(),
                rss.len(),
                entry.ap_index,
                5,
                ids.as_mut_ptr(),
                dists.as_mut_ptr(),
                &mut written,
            );
            assert_eq!(status, FpbStatus::FpbOk);
            assert!(written >= 1);
            assert_eq!(ids[0], entry.sector_id);
            assert_eq!(dists[0], 0.0);

            fpb_radio_map_free(map);
        }

        // a config with a different codebook must refuse the stored map
        let other = parse(
            "[grid]\ncounts_x = 4\ncounts_y = 2\n\n[codebook]\nsector_count = 46\nazimuth_steps = 23\nelevation_steps = 2\n",
        );
        unsafe {
            let mut map = ptr::null_mut();
            assert_eq!(
                fpb_radio_map_load(other, path.as_ptr(), &mut map),
                FpbStatus::FpbErrRadioMap
            );
            fpb_config_free(other);
        }

        unsafe { fpb_config_free(config) };
    }

    #[test]
    fn setup_time_matches_core() {
        let config = parse("");
        let mut midc = 0.0;
        let mut proposed = 0.0;
        unsafe {
            assert_eq!(fpb_setup_time_s(config, 0, 32, 7, 1, &mut midc), FpbStatus::FpbOk);
            assert_eq!(fpb_setup_time_s(config, 1, 92, 10, 1, &mut proposed), FpbStatus::FpbOk);
            fpb_config_free(config);
        }
        assert!((midc - 1.8e-3).abs() / 1.8e-3 < 0.05);
        assert!((proposed - 150e-6).abs() < 1e-12);
    }

    #[test]
    fn timing_report_json_is_well_formed() {
        let config = parse("");
        let mut s = ptr::null_mut();
        unsafe {
            assert_eq!(fpb_timing_report_json(config, &mut s), FpbStatus::FpbOk);
            let text = CStr::from_ptr(s).to_str().unwrap().to_string();
            assert!(text.contains("reduction_percent"));
            fpb_string_free(s);
            fpb_config_free(config);
        }
    }
}
