//! Self-describing binary container for field data.
//!
//! Layout (all integers and floats little-endian):
//!   magic  "ACFD"            4 bytes
//!   version u16              currently 1
//!   kind    u8               0 scalar field, 1 tensor field, 2 coordinate map
//!   flags   u8               reserved, 0
//!   d       u32              complex dimension
//!   n       u32              samples per axis
//!   l       f64              period per axis
//!   contra  u8, cov u8       rank signature (tensor kind; 0 otherwise)
//!   reserved [u8; 6]
//!   payload                  row-major (re, im) f64 pairs:
//!     scalar: N^D values
//!     tensor: D^(contra+cov) components of N^D values each (component
//!             index row-major over the slots; imaginary parts zero)
//!     coordmap: d*d linear coefficients over z0, then d*d over conj(z0),
//!             then d periodic scalar fields of N^D values

use crate::chart::{ChartError, GridChart, ScalarField, TensorField};
use crate::coords::ComplexCoordinateMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::{Read, Write};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"ACFD";
const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes; not a field container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u16),
    #[error("unexpected container kind {got} (wanted {want})")]
    WrongKind { got: u8, want: u8 },
    #[error(transparent)]
    Chart(#[from] ChartError),
}

fn write_header(
    w: &mut impl Write,
    kind: u8,
    chart: &GridChart,
    contra: u8,
    cov: u8,
) -> Result<(), ContainerError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind, 0])?;
    w.write_all(&(chart.complex_dim() as u32).to_le_bytes())?;
    w.write_all(&(chart.samples() as u32).to_le_bytes())?;
    w.write_all(&chart.period().to_le_bytes())?;
    w.write_all(&[contra, cov, 0, 0, 0, 0, 0, 0])?;
    Ok(())
}

struct Header {
    kind: u8,
    chart: GridChart,
    contra: u8,
    cov: u8,
}

fn read_header(r: &mut impl Read) -> Result<Header, ContainerError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)?;
    let version = u16::from_le_bytes(buf2);
    if version != VERSION {
        return Err(ContainerError::BadVersion(version));
    }
    r.read_exact(&mut buf2)?;
    let kind = buf2[0];
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let d = u32::from_le_bytes(buf4) as usize;
    r.read_exact(&mut buf4)?;
    let n = u32::from_le_bytes(buf4) as usize;
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let l = f64::from_le_bytes(buf8);
    r.read_exact(&mut buf8)?;
    let contra = buf8[0];
    let cov = buf8[1];
    Ok(Header {
        kind,
        chart: GridChart::new(d, n, l)?,
        contra,
        cov,
    })
}

fn write_complex_slice(w: &mut impl Write, values: &[Complex64]) -> Result<(), ContainerError> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_complex_vec(r: &mut impl Read, count: usize) -> Result<Vec<Complex64>, ContainerError> {
    let mut raw = vec![0u8; count * 16];
    r.read_exact(&mut raw)?;
    Ok(raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect())
}

pub fn write_scalar(w: &mut impl Write, field: &ScalarField) -> Result<(), ContainerError> {
    write_header(w, 0, field.chart(), 0, 0)?;
    write_complex_slice(w, field.values())
}

pub fn read_scalar(r: &mut impl Read) -> Result<ScalarField, ContainerError> {
    let h = read_header(r)?;
    if h.kind != 0 {
        return Err(ContainerError::WrongKind { got: h.kind, want: 0 });
    }
    let values = read_complex_vec(r, h.chart.point_count())?;
    Ok(ScalarField::from_values(h.chart, values)?)
}

pub fn write_tensor(w: &mut impl Write, field: &TensorField) -> Result<(), ContainerError> {
    let (contra, cov) = field.rank();
    write_header(w, 1, field.chart(), contra as u8, cov as u8)?;
    for comp in field.components() {
        for v in comp {
            w.write_all(&v.to_le_bytes())?;
            w.write_all(&0f64.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<TensorField, ContainerError> {
    let h = read_header(r)?;
    if h.kind != 1 {
        return Err(ContainerError::WrongKind { got: h.kind, want: 1 });
    }
    let comp_count = h.chart.dims().pow((h.contra + h.cov) as u32);
    let mut comps = Vec::with_capacity(comp_count);
    for _ in 0..comp_count {
        let vals = read_complex_vec(r, h.chart.point_count())?;
        comps.push(vals.iter().map(|v| v.re).collect());
    }
    Ok(TensorField::from_components(
        h.chart,
        h.contra as usize,
        h.cov as usize,
        comps,
    )?)
}

pub fn write_coordinate_map(
    w: &mut impl Write,
    map: &ComplexCoordinateMap,
) -> Result<(), ContainerError> {
    write_header(w, 2, map.chart(), 0, 0)?;
    let (c, cb) = map.linear();
    let d = map.chart().complex_dim();
    for n in 0..d {
        for m in 0..d {
            write_complex_slice(w, &[c[(n, m)]])?;
        }
    }
    for n in 0..d {
        for m in 0..d {
            write_complex_slice(w, &[cb[(n, m)]])?;
        }
    }
    for field in map.periodic() {
        write_complex_slice(w, field.values())?;
    }
    Ok(())
}

pub fn read_coordinate_map(r: &mut impl Read) -> Result<ComplexCoordinateMap, ContainerError> {
    let h = read_header(r)?;
    if h.kind != 2 {
        return Err(ContainerError::WrongKind { got: h.kind, want: 2 });
    }
    let d = h.chart.complex_dim();
    let lin = read_complex_vec(r, d * d)?;
    let lin_bar = read_complex_vec(r, d * d)?;
    let c = DMatrix::from_fn(d, d, |n, m| lin[n * d + m]);
    let cb = DMatrix::from_fn(d, d, |n, m| lin_bar[n * d + m]);
    let mut periodic = Vec::with_capacity(d);
    for _ in 0..d {
        let vals = read_complex_vec(r, h.chart.point_count())?;
        periodic.push(ScalarField::from_values(h.chart, vals)?);
    }
    Ok(ComplexCoordinateMap::from_parts(
        h.chart,
        Some(c),
        Some(cb),
        periodic,
    ))
}
