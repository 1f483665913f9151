//! Flat binary field files with a human-readable text sidecar.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "CLF1"
//! kind    u8       0 = scalar, 1 = symmetric tensor
//! pad     3 bytes  zero
//! dims    3 x u32
//! spacing 3 x f64
//! flags   3 x u8   periodicity per axis (0/1)
//! pad     5 bytes  zero
//! values  f64 x n        (scalar)
//!         f64 x 6n       (tensor, point-major, components 11 12 13 22 23 33)
//! ```
//!
//! Flat point order is row-major with the last axis fastest:
//! index = (ix * ny + iy) * nz + iz. Saving also writes `<path>.txt`
//! describing the layout; loading reads the binary only.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use closure_core::grid::{GridChart, ScalarField, SymTensorField};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"CLF1";

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{path}: not a field file (bad magic)")]
    BadMagic { path: String },

    #[error("{path}: unknown field kind {kind}")]
    BadKind { path: String, kind: u8 },

    #[error("{path}: payload holds {got} values but the header implies {want}")]
    Shape { path: String, got: usize, want: usize },

    #[error("{path}: {source}")]
    Field {
        path: String,
        #[source]
        source: closure_core::CoreError,
    },
}

#[derive(Debug)]
pub enum FieldData {
    Scalar(ScalarField),
    Tensor(SymTensorField),
}

fn header_bytes(kind: u8, chart: &GridChart) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(MAGIC);
    out.push(kind);
    out.extend_from_slice(&[0u8; 3]);
    for d in chart.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in chart.spacing() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for p in chart.periodic() {
        out.push(u8::from(p));
    }
    out.extend_from_slice(&[0u8; 5]);
    out
}

fn sidecar(path: &Path, kind: &str, chart: &GridChart, count: usize) -> String {
    format!(
        "closure-lab field file: {}\nkind: {kind}\ndims: {} {} {}\nspacing: {} {} {}\nperiodic: {} {} {}\nvalues: {count} little-endian f64, row-major (last axis fastest)\ncomponent order (tensor): 11 12 13 22 23 33, point-major\n",
        path.display(),
        chart.dims()[0],
        chart.dims()[1],
        chart.dims()[2],
        chart.spacing()[0],
        chart.spacing()[1],
        chart.spacing()[2],
        chart.periodic()[0],
        chart.periodic()[1],
        chart.periodic()[2],
    )
}

fn io_err(path: &Path, source: io::Error) -> FieldIoError {
    FieldIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_scalar(path: &Path, field: &ScalarField) -> Result<(), FieldIoError> {
    let mut bytes = header_bytes(0, field.chart());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &bytes).map_err(|e| io_err(path, e))?;
    let sc = sidecar(path, "scalar", field.chart(), field.values().len());
    fs::write(path.with_extension("fld.txt"), sc).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn save_tensor(path: &Path, field: &SymTensorField) -> Result<(), FieldIoError> {
    let mut bytes = header_bytes(1, field.chart());
    for v in field.values() {
        for c in v {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(path, &bytes).map_err(|e| io_err(path, e))?;
    let sc = sidecar(path, "tensor", field.chart(), field.values().len() * 6);
    fs::write(path.with_extension("fld.txt"), sc).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<FieldData, FieldIoError> {
    let mut file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut header = [0u8; 52];
    file.read_exact(&mut header).map_err(|e| io_err(path, e))?;
    let display = path.display().to_string();
    if &header[0..4] != MAGIC {
        return Err(FieldIoError::BadMagic { path: display });
    }
    let kind = header[4];
    if kind > 1 {
        return Err(FieldIoError::BadKind {
            path: display,
            kind,
        });
    }
    let dims: [usize; 3] = core::array::from_fn(|i| {
        u32::from_le_bytes(header[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize
    });
    let spacing: [f64; 3] = core::array::from_fn(|i| {
        f64::from_le_bytes(header[20 + 8 * i..28 + 8 * i].try_into().unwrap())
    });
    let periodic: [bool; 3] = core::array::from_fn(|i| header[44 + i] != 0);
    let chart = GridChart::new(dims, spacing, periodic).map_err(|e| FieldIoError::Field {
        path: display.clone(),
        source: e,
    })?;

    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| io_err(path, e))?;
    if payload.len() % 8 != 0 {
        return Err(FieldIoError::Shape {
            path: display,
            got: payload.len(),
            want: chart.len() * if kind == 0 { 8 } else { 48 },
        });
    }
    let doubles: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let want = chart.len() * if kind == 0 { 1 } else { 6 };
    if doubles.len() != want {
        return Err(FieldIoError::Shape {
            path: display,
            got: doubles.len(),
            want,
        });
    }
    let map_field_err = |e: closure_core::CoreError| FieldIoError::Field {
        path: display.clone(),
        source: e,
    };
    if kind == 0 {
        Ok(FieldData::Scalar(
            ScalarField::new(chart, doubles).map_err(map_field_err)?,
        ))
    } else {
        let values = doubles
            .chunks_exact(6)
            .map(|c| core::array::from_fn(|i| c[i]))
            .collect();
        Ok(FieldData::Tensor(
            SymTensorField::new(chart, values).map_err(map_field_err)?,
        ))
    }
}

pub fn load_scalar(path: &Path) -> Result<ScalarField, FieldIoError> {
    match load(path)? {
        FieldData::Scalar(f) => Ok(f),
        FieldData::Tensor(_) => Err(FieldIoError::BadKind {
            path: path.display().to_string(),
            kind: 1,
        }),
    }
}

pub fn load_tensor(path: &Path) -> Result<SymTensorField, FieldIoError> {
    match load(path)? {
        FieldData::Tensor(f) => Ok(f),
        FieldData::Scalar(_) => Err(FieldIoError::BadKind {
            path: path.display().to_string(),
            kind: 0,
        }),
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("report")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
