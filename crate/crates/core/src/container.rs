//! Binary ensemble container.
//!
//! Layout: the 6 magic bytes `OSTF1\n`, a little-endian `u64` giving the
//! length of the JSON metadata that follows, then the sample arrays as
//! little-endian `f64`: member-major, then snapshot, then component (the
//! velocity components followed by pressure when present), then flat grid
//! index (row-major, last axis fastest).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::field::{validate_times, GridField};
use crate::grid::{Grid, EXTENT};

pub const MAGIC: &[u8; 6] = b"OSTF1\n";
pub const VERSION: u64 = 1;
const HEADER: usize = MAGIC.len() + 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerMeta {
    pub version: u64,
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub members: usize,
    pub snapshots: usize,
    pub times: Vec<f64>,
    pub has_pressure: bool,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Optional generator record stored alongside the arrays.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub generator: Option<String>,
    pub alpha: Option<f64>,
}

impl ContainerMeta {
    pub fn describe(ensemble: &Ensemble, provenance: &Provenance) -> Self {
        let grid = ensemble.grid();
        Self {
            version: VERSION,
            dim: grid.dim(),
            n: grid.n(),
            extent: grid.extent(),
            members: ensemble.len(),
            snapshots: ensemble.snapshots(),
            times: ensemble.times().to_vec(),
            has_pressure: ensemble.has_pressure(),
            weights: ensemble.weights().to_vec(),
            seed: provenance.seed,
            generator: provenance.generator.clone(),
            alpha: provenance.alpha,
        }
    }

    fn components(&self) -> usize {
        self.dim + usize::from(self.has_pressure)
    }

    fn member_bytes(&self, grid: &Grid) -> u64 {
        (self.snapshots * self.components() * grid.len() * 8) as u64
    }
}

pub fn write_container(ensemble: &Ensemble, path: &Path) -> Result<()> {
    write_container_with(ensemble, path, &Provenance::default())
}

pub fn write_container_with(
    ensemble: &Ensemble,
    path: &Path,
    provenance: &Provenance,
) -> Result<()> {
    let bytes = encode(ensemble, provenance);
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(&bytes).map_err(io)?;
    file.sync_all().map_err(io)
}

/// Serialized container bytes.
pub fn encode(ensemble: &Ensemble, provenance: &Provenance) -> Vec<u8> {
    let meta = serde_json::to_vec(&ContainerMeta::describe(ensemble, provenance))
        .expect("meta serializes");
    let mut out = Vec::with_capacity(HEADER + meta.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    let dim = ensemble.grid().dim();
    for m in ensemble.members() {
        for s in 0..m.snapshots() {
            for c in 0..dim {
                for v in m.component(s, c) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            if let Some(p) = m.pressure(s) {
                for v in p {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn read_container(path: &Path) -> Result<Ensemble> {
    Ok(read_container_with_meta(path)?.0)
}

pub fn read_container_with_meta(path: &Path) -> Result<(Ensemble, ContainerMeta)> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<(Ensemble, ContainerMeta)> {
    let probe = bytes.len().min(MAGIC.len());
    if bytes[..probe] != MAGIC[..probe] || bytes.is_empty() {
        return Err(Error::NotAContainer);
    }
    let total = bytes.len() as u64;
    if bytes.len() < HEADER {
        return Err(Error::CorruptContainer {
            offset: total,
            reason: "file ends inside the header".into(),
        });
    }
    let meta_len = u64::from_le_bytes(bytes[MAGIC.len()..HEADER].try_into().expect("8 bytes"));
    let data_start = (HEADER as u64)
        .checked_add(meta_len)
        .filter(|&e| e <= total)
        .ok_or_else(|| Error::CorruptContainer {
            offset: total,
            reason: format!("metadata of {meta_len} bytes runs past the end of the file"),
        })? as usize;
    let meta: ContainerMeta = serde_json::from_slice(&bytes[HEADER..data_start]).map_err(|e| {
        Error::CorruptContainer {
            offset: HEADER as u64 + e.column() as u64,
            reason: format!("unreadable metadata: {e}"),
        }
    })?;
    if meta.version != VERSION {
        return Err(Error::VersionMismatch(meta.version));
    }
    let grid = Grid::new(meta.dim, meta.n)?;
    if (meta.extent - EXTENT).abs() > 1e-12 {
        return Err(Error::ShapeMismatch(format!(
            "extent {} is not 2π",
            meta.extent
        )));
    }
    if meta.times.len() != meta.snapshots {
        return Err(Error::ShapeMismatch(format!(
            "{} times for {} snapshots",
            meta.times.len(),
            meta.snapshots
        )));
    }
    if validate_times(&meta.times).is_err() {
        return Err(Error::InvalidTimes);
    }
    if meta.members == 0 || meta.weights.len() != meta.members {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} members",
            meta.weights.len(),
            meta.members
        )));
    }

    let member_bytes = meta.member_bytes(&grid);
    let expected = member_bytes * meta.members as u64;
    let have = total - data_start as u64;
    if have != expected {
        if have > expected {
            return Err(Error::ShapeMismatch(format!(
                "{} trailing bytes after the declared arrays",
                have - expected
            )));
        }
        if member_bytes > 0 && have % member_bytes == 0 {
            return Err(Error::ShapeMismatch(format!(
                "meta declares {} members but the arrays hold {}",
                meta.members,
                have / member_bytes
            )));
        }
        return Err(Error::CorruptContainer {
            offset: total,
            reason: format!("arrays truncated: expected {expected} bytes after offset {data_start}, found {have}"),
        });
    }

    let mut cursor = data_start;
    let mut next = |count: usize| -> Vec<f64> {
        let out = bytes[cursor..cursor + 8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        cursor += 8 * count;
        out
    };
    let len = grid.len();
    let mut members = Vec::with_capacity(meta.members);
    for _ in 0..meta.members {
        let mut velocity = Vec::with_capacity(meta.snapshots * meta.dim * len);
        let mut pressure = meta
            .has_pressure
            .then(|| Vec::with_capacity(meta.snapshots * len));
        for _ in 0..meta.snapshots {
            velocity.extend(next(meta.dim * len));
            if let Some(p) = pressure.as_mut() {
                p.extend(next(len));
            }
        }
        members.push(GridField::new(
            grid,
            meta.times.clone(),
            velocity,
            pressure,
        )?);
    }
    let ensemble = Ensemble::from_normalized(members, meta.weights.clone())?;
    Ok((ensemble, meta))
}
