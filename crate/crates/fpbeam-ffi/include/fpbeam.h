#ifndef FPBEAM_H
#define FPBEAM_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum FpbStatus {
  FpbOk = 0,
  FpbErrNullArgument = 1,
  FpbErrInvalidUtf8 = 2,
  FpbErrConfig = 3,
  FpbErrOffline = 4,
  FpbErrRadioMap = 5,
  FpbErrNoCoverage = 6,
  FpbErrBufferTooSmall = 7,
} FpbStatus;

/**
 * Opaque scenario configuration handle.
 */
typedef struct FpbConfig FpbConfig;

/**
 * Opaque radio-map handle (databases plus exemplars).
 */
typedef struct FpbRadioMap FpbRadioMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a TOML scenario config. Pass an empty string for the defaults.
 * On success `*out` owns a new handle; release it with
 * `fpb_config_free`.
 */
enum FpbStatus fpb_config_parse(const char *toml_text, struct FpbConfig **out);

void fpb_config_free(struct FpbConfig *config);

/**
 * Runs the offline learning phase and writes the radio-map file.
 */
enum FpbStatus fpb_offline_run(const struct FpbConfig *config, const char *radio_map_path);

/**
 * Loads a radio-map file produced by `fpb_offline_run`, verifying it
 * against the codebooks of the given config.
 */
enum FpbStatus fpb_radio_map_load(const struct FpbConfig *config,
                                  const char *radio_map_path,
                                  struct FpbRadioMap **out);

void fpb_radio_map_free(struct FpbRadioMap *map);

/**
 * Number of WiFi APs the loaded radio map was built with (the length of
 * the RSS vectors expected by `fpb_estimate_best_beams`).
 */
uintptr_t fpb_radio_map_wifi_ap_count(const struct FpbRadioMap *map);

/**
 * Number of mm-w APs covered by the loaded radio map.
 */
uintptr_t fpb_radio_map_mmw_ap_count(const struct FpbRadioMap *map);

/**
 * Ranks candidate sectors for one mm-w AP from a live normalized WiFi
 * RSS vector (dB, length = WiFi AP count).
 *
 * `sector_ids` and `distances` must each hold `max_beams` entries; the
 * number written is stored in `*written`.
 */
enum FpbStatus fpb_estimate_best_beams(const struct FpbRadioMap *map,
                                       const double *rss_db,
                                       uintptr_t rss_len,
                                       uintptr_t mmw_ap_index,
                                       uintptr_t max_beams,
                                       uint32_t *sector_ids,
                                       double *distances,
                                       uintptr_t *written);

/**
 * Beamforming setup time in seconds. `scheme` is 0 for the exhaustive
 * MIDC baseline and 1 for the proposed fingerprint protocol.
 */
enum FpbStatus fpb_setup_time_s(const struct FpbConfig *config,
                                uint32_t scheme,
                                uintptr_t sector_count,
                                uintptr_t bc_beams,
                                uintptr_t ap_count,
                                double *out_seconds);

/**
 * Serializes the MIDC-vs-proposed timing comparison as JSON. The
 * returned string must be released with `fpb_string_free`.
 */
enum FpbStatus fpb_timing_report_json(const struct FpbConfig *config, char **out);

void fpb_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FPBEAM_H */
