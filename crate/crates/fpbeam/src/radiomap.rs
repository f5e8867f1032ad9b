//! Versioned binary container for the offline radio maps.
//!
//! Layout (little-endian):
//!   magic "FPRM", format version u32,
//!   codebook hash (32 bytes, SHA-256 over the serialized codebooks),
//!   L, N, M as u32, WiFi AP ids, mm-w AP ids (length-prefixed UTF-8),
//!   the WiFi RSS matrix row-major f64, the best-sector matrix row-major
//!   u32 with 0 as the null code, then the exemplar entries.
//!
//! A load fails on version, dimension or codebook-hash mismatch so a
//! changed codebook invalidates stored maps.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clustering::{ExemplarSet, SectorExemplars};
use crate::environment::Scene;
use crate::fingerprint::{BestSectorDb, WifiRssDb};

const MAGIC: &[u8; 4] = b"FPRM";
const FORMAT_VERSION: u32 = 1;
const NULL_SECTOR: u32 = 0;

#[derive(Debug, Error)]
pub enum RadioMapError {
    #[error("i/o error on radio map file: {0}")]
    Io(#[from] io::Error),
    #[error("not a radio map file (bad magic)")]
    BadMagic,
    #[error("unsupported radio map version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("radio map was built for a different codebook (stale map); rerun the offline phase")]
    StaleCodebook,
    #[error("radio map dimensions are inconsistent")]
    DimensionMismatch,
    #[error("radio map file is truncated or corrupt: {0}")]
    Corrupt(String),
}

/// SHA-256 over every mm-w AP codebook, pinned into the file header.
pub fn codebook_hash(scene: &Scene) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for ap in &scene.mmw_aps {
        let bytes = serde_json::to_vec(&ap.codebook).expect("codebook serializes");
        hasher.update(&bytes);
    }
    hasher.finalize().into()
}

/// Everything the online phase needs from the offline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMaps {
    pub psi: WifiRssDb,
    pub phi: BestSectorDb,
    pub exemplars: ExemplarSet,
}

pub fn save_radio_maps(maps: &RadioMaps, hash: &[u8; 32], path: &Path) -> Result<(), RadioMapError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_all(hash)?;

    let l = maps.psi.lp_count();
    let n = maps.psi.ap_count();
    let m = maps.phi.ap_count();
    if maps.phi.lp_count() != l {
        return Err(RadioMapError::DimensionMismatch);
    }
    w.write_u32::<LittleEndian>(l as u32)?;
    w.write_u32::<LittleEndian>(n as u32)?;
    w.write_u32::<LittleEndian>(m as u32)?;
    for id in maps.psi.wifi_ap_ids.iter().chain(&maps.phi.mmw_ap_ids) {
        write_string(&mut w, id)?;
    }
    for row in &maps.psi.values {
        if row.len() != n {
            return Err(RadioMapError::DimensionMismatch);
        }
        for &v in row {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    for row in &maps.phi.values {
        if row.len() != m {
            return Err(RadioMapError::DimensionMismatch);
        }
        for &v in row {
            w.write_u32::<LittleEndian>(v.unwrap_or(NULL_SECTOR))?;
        }
    }

    w.write_u32::<LittleEndian>(maps.exemplars.entries.len() as u32)?;
    for e in &maps.exemplars.entries {
        w.write_u32::<LittleEndian>(e.ap_index as u32)?;
        w.write_u32::<LittleEndian>(e.sector_id)?;
        w.write_u32::<LittleEndian>(e.member_lps.len() as u32)?;
        w.write_u32::<LittleEndian>(e.exemplar_vectors.len() as u32)?;
        for &lp in &e.member_lps {
            w.write_u32::<LittleEndian>(lp as u32)?;
        }
        for &idx in &e.exemplar_members {
            w.write_u32::<LittleEndian>(idx as u32)?;
        }
        for vec in &e.exemplar_vectors {
            if vec.len() != n {
                return Err(RadioMapError::DimensionMismatch);
            }
            for &v in vec {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        for &a in &e.assignment {
            w.write_u32::<LittleEndian>(a as u32)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_radio_maps(path: &Path, expected_hash: &[u8; 32]) -> Result<RadioMaps, RadioMapError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(RadioMapError::BadMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(RadioMapError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    if &hash != expected_hash {
        return Err(RadioMapError::StaleCodebook);
    }

    let l = r.read_u32::<LittleEndian>()? as usize;
    let n = r.read_u32::<LittleEndian>()? as usize;
    let m = r.read_u32::<LittleEndian>()? as usize;
    let wifi_ap_ids = (0..n).map(|_| read_string(&mut r)).collect::<Result<Vec<_>, _>>()?;
    let mmw_ap_ids = (0..m).map(|_| read_string(&mut r)).collect::<Result<Vec<_>, _>>()?;

    let mut psi = Vec::with_capacity(l);
    for _ in 0..l {
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            row.push(r.read_f64::<LittleEndian>()?);
        }
        psi.push(row);
    }
    let mut phi = Vec::with_capacity(l);
    for _ in 0..l {
        let mut row = Vec::with_capacity(m);
        for _ in 0..m {
            let v = r.read_u32::<LittleEndian>()?;
            row.push(if v == NULL_SECTOR { None } else { Some(v) });
        }
        phi.push(row);
    }

    let entry_count = r.read_u32::<LittleEndian>()? as usize;
    let mut entries = Vec::with_capacity(entry_count);
    for _ in 0..entry_count {
        let ap_index = r.read_u32::<LittleEndian>()? as usize;
        let sector_id = r.read_u32::<LittleEndian>()?;
        let k = r.read_u32::<LittleEndian>()? as usize;
        let c = r.read_u32::<LittleEndian>()? as usize;
        if c > k {
            return Err(RadioMapError::Corrupt(format!(
                "sector {sector_id}: {c} exemplars for {k} members"
            )));
        }
        let member_lps = (0..k)
            .map(|_| r.read_u32::<LittleEndian>().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let exemplar_members = (0..c)
            .map(|_| r.read_u32::<LittleEndian>().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let mut exemplar_vectors = Vec::with_capacity(c);
        for _ in 0..c {
            let mut vec = Vec::with_capacity(n);
            for _ in 0..n {
                vec.push(r.read_f64::<LittleEndian>()?);
            }
            exemplar_vectors.push(vec);
        }
        let assignment = (0..k)
            .map(|_| r.read_u32::<LittleEndian>().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if assignment.iter().any(|&a| a >= c.max(1)) {
            return Err(RadioMapError::Corrupt(format!(
                "sector {sector_id}: assignment out of range"
            )));
        }
        entries.push(SectorExemplars {
            ap_index,
            sector_id,
            member_lps,
            exemplar_members,
            exemplar_vectors,
            assignment,
        });
    }

    // trailing bytes mean a corrupt writer
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(RadioMapError::Corrupt("trailing data".into()));
    }

    Ok(RadioMaps {
        psi: WifiRssDb {
            values: psi,
            wifi_ap_ids,
        },
        phi: BestSectorDb {
            values: phi,
            mmw_ap_ids,
        },
        exemplars: ExemplarSet { entries },
    })
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<(), io::Error> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_string<R: Read>(r: &mut R) -> Result<String, RadioMapError> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    if len > 1 << 20 {
        return Err(RadioMapError::Corrupt("implausible string length".into()));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| RadioMapError::Corrupt("bad UTF-8 in AP id".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_maps() -> RadioMaps {
        RadioMaps {
            psi: WifiRssDb {
                values: vec![vec![-60.0, -70.5], vec![-61.25, -69.0]],
                wifi_ap_ids: vec!["wifi-0".into(), "wifi-1".into()],
            },
            phi: BestSectorDb {
                values: vec![vec![Some(15), None], vec![Some(7), Some(2)]],
                mmw_ap_ids: vec!["mmw-0".into(), "mmw-1".into()],
            },
            exemplars: ExemplarSet {
                entries: vec![SectorExemplars {
                    ap_index: 0,
                    sector_id: 15,
                    member_lps: vec![0, 1],
                    exemplar_members: vec![0],
                    exemplar_vectors: vec![vec![-60.0, -70.5]],
                    assignment: vec![0, 0],
                }],
            },
        }
    }

    #[test]
    fn round_trip_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("maps.fprm");
        let maps = sample_maps();
        let hash = [7u8; 32];
        save_radio_maps(&maps, &hash, &path).unwrap();
        let loaded = load_radio_maps(&path, &hash).unwrap();
        assert_eq!(loaded, maps);
    }

    #[test]
    fn wrong_codebook_hash_is_stale() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("maps.fprm");
        save_radio_maps(&sample_maps(), &[7u8; 32], &path).unwrap();
        assert!(matches!(
            load_radio_maps(&path, &[8u8; 32]),
            Err(RadioMapError::StaleCodebook)
        ));
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("maps.fprm");
        let hash = [7u8; 32];
        save_radio_maps(&sample_maps(), &hash, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(load_radio_maps(&path, &hash).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("maps.fprm");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(
            load_radio_maps(&path, &[0u8; 32]),
            Err(RadioMapError::BadMagic)
        ));
    }
}
