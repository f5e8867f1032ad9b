//! Dual-band indoor simulator for WiFi-fingerprint-assisted millimeter-wave
//! beam selection.
//!
//! The offline phase surveys a learning grid, stores the WiFi RSS and
//! best-sector radio maps, and clusters each best-sector group of WiFi
//! fingerprints into exemplars with affinity propagation. The online phase
//! matches a live WiFi RSS vector against the exemplars to shortlist
//! candidate beams, trains only those, and is scored against exhaustive
//! beam search through the received-power ratio and a setup-time model.

pub mod antenna;
pub mod clustering;
pub mod config;
pub mod environment;
pub mod fingerprint;
pub mod geometry;
pub mod harness;
pub mod protocol;
pub mod radiomap;
