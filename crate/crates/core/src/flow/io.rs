//! Run history as CSV and field snapshots as raw little-endian binary.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FlowState, HistoryEntry};

/// Writes `time, calabi_energy, max_abs_R, total_area, dt` rows.
pub fn write_history_csv<W: Write>(out: W, history: &[HistoryEntry]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in history {
        w.serialize(e)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct SnapshotMeta {
    pub schema: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub time: f64,
    pub layout: String,
    pub conventions: String,
    pub phi: String,
    pub u: String,
}

pub const LAYOUT: &str =
    "row-major N*N float64 little-endian; index iy*N + ix, sample at (ix/N, iy/N)";
pub const CONVENTIONS: &str =
    "flat torus [0,1)^2, omega_0 = dx^dy, u = 1 + (1/2) Laplacian(phi), R = -Laplacian(log u)/u";

fn write_field(path: &Path, field: &[f64]) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(field.len() * 8);
    for x in field {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes)
}

/// Writes `<stem>_phi.bin`, `<stem>_u.bin` and the `<stem>.json` sidecar.
pub fn write_snapshot(dir: &Path, stem: &str, state: &FlowState) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let phi_name = format!("{stem}_phi.bin");
    let u_name = format!("{stem}_u.bin");
    write_field(&dir.join(&phi_name), &state.phi)?;
    write_field(&dir.join(&u_name), &state.u)?;
    let meta = SnapshotMeta {
        schema: 1,
        n: state.grid_size(),
        time: state.time,
        layout: LAYOUT.to_string(),
        conventions: CONVENTIONS.to_string(),
        phi: phi_name,
        u: u_name,
    };
    let sidecar = dir.join(format!("{stem}.json"));
    let mut f = fs::File::create(&sidecar)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    Ok(sidecar)
}

pub fn read_field(path: &Path) -> io::Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "length is not a multiple of 8",
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}
