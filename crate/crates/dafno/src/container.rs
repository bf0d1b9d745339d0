//! Self-describing binary container for named arrays ("DAFN1"): magic
//! `DAFN`, u32 version, u32 array count, then per array a u16-length UTF-8
//! name, dtype code, rank, u64 extents, and the row-major little-endian
//! payload. Fixed endianness, no padding, readable with no external schema.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: [u8; 4] = *b"DAFN";
const VERSION: u32 = 1;

pub const DTYPE_REAL32: u8 = 1;
pub const DTYPE_REAL64: u8 = 2;
pub const DTYPE_UINT8: u8 = 3;
pub const DTYPE_COMPLEX128: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    Real32(Vec<f32>),
    Real64(Vec<f64>),
    Uint8(Vec<u8>),
    Complex128(Vec<Complex64>),
}

impl ArrayData {
    pub fn dtype_code(&self) -> u8 {
        match self {
            ArrayData::Real32(_) => DTYPE_REAL32,
            ArrayData::Real64(_) => DTYPE_REAL64,
            ArrayData::Uint8(_) => DTYPE_UINT8,
            ArrayData::Complex128(_) => DTYPE_COMPLEX128,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ArrayData::Real32(v) => v.len(),
            ArrayData::Real64(v) => v.len(),
            ArrayData::Uint8(v) => v.len(),
            ArrayData::Complex128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

impl NamedArray {
    pub fn from_tensor(name: impl Into<String>, t: &Tensor) -> Self {
        let data = if t.is_complex() {
            ArrayData::Complex128(t.complex_values())
        } else {
            ArrayData::Real64(t.data().to_vec())
        };
        NamedArray {
            name: name.into(),
            shape: t.shape().to_vec(),
            data,
        }
    }

    pub fn from_json<T: serde::Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let bytes = serde_json::to_vec(value)?;
        Ok(NamedArray {
            name: name.into(),
            shape: vec![bytes.len()],
            data: ArrayData::Uint8(bytes),
        })
    }

    /// Real32 and Real64 widen to a real tensor; complex stays complex.
    pub fn to_tensor(&self) -> Result<Tensor> {
        match &self.data {
            ArrayData::Real64(v) => Ok(Tensor::from_vec(&self.shape, v.clone())),
            ArrayData::Real32(v) => Ok(Tensor::from_vec(
                &self.shape,
                v.iter().map(|&x| x as f64).collect(),
            )),
            ArrayData::Complex128(v) => Ok(Tensor::from_complex(&self.shape, v)),
            ArrayData::Uint8(_) => Err(Error::DtypeMismatch {
                expected: "real or complex",
                got: "uint8",
                context: "to_tensor",
            }),
        }
    }

    pub fn parse_json<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        match &self.data {
            ArrayData::Uint8(bytes) => Ok(serde_json::from_slice(bytes)?),
            _ => Err(Error::DtypeMismatch {
                expected: "uint8",
                got: "numeric",
                context: "parse_json",
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub arrays: Vec<NamedArray>,
}

impl Container {
    pub fn new() -> Self {
        Container { arrays: Vec::new() }
    }

    pub fn push(&mut self, array: NamedArray) {
        self.arrays.push(array);
    }

    pub fn get(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&NamedArray> {
        self.get(name)
            .ok_or_else(|| Error::Config(format!("container is missing array '{name}'")))
    }
}

pub fn write_container(path: impl AsRef<Path>, container: &Container) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    write_container_to(w, container)
}

/// Serialize to any writer (used by in-memory consumers).
pub fn write_container_to(mut w: impl Write, container: &Container) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(container.arrays.len() as u32).to_le_bytes())?;
    for a in &container.arrays {
        let name = a.name.as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&[a.data.dtype_code(), a.shape.len() as u8])?;
        for &e in &a.shape {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        let numel: usize = a.shape.iter().product();
        if numel != a.data.len() {
            return Err(Error::ShapeMismatch {
                left: a.shape.clone(),
                right: vec![a.data.len()],
                context: "container array extents vs payload",
            });
        }
        match &a.data {
            ArrayData::Real32(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            ArrayData::Real64(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            ArrayData::Uint8(v) => w.write_all(v)?,
            ArrayData::Complex128(v) => {
                for x in v {
                    w.write_all(&x.re.to_le_bytes())?;
                    w.write_all(&x.im.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::ContainerTruncated(what))
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container> {
    let r = BufReader::new(File::open(path)?);
    read_container_from(r)
}

/// Parse from any reader (used by embedded byte blobs).
pub fn read_container_from(mut r: impl Read) -> Result<Container> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::ContainerMagic);
    }
    let mut u32buf = [0u8; 4];
    read_exact(&mut r, &mut u32buf, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::Config(format!(
            "unsupported container version {version}"
        )));
    }
    read_exact(&mut r, &mut u32buf, "array count")?;
    let count = u32::from_le_bytes(u32buf) as usize;

    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        let mut u16buf = [0u8; 2];
        read_exact(&mut r, &mut u16buf, "name length")?;
        let name_len = u16::from_le_bytes(u16buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes, "name")?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Config("container array name is not UTF-8".into()))?;

        let mut head = [0u8; 2];
        read_exact(&mut r, &mut head, "dtype/rank")?;
        let (dtype, rank) = (head[0], head[1] as usize);
        let mut shape = Vec::with_capacity(rank);
        let mut u64buf = [0u8; 8];
        for _ in 0..rank {
            read_exact(&mut r, &mut u64buf, "extents")?;
            shape.push(u64::from_le_bytes(u64buf) as usize);
        }
        let numel: usize = shape.iter().product();
        let data = match dtype {
            DTYPE_REAL32 => {
                let mut v = Vec::with_capacity(numel);
                let mut b = [0u8; 4];
                for _ in 0..numel {
                    read_exact(&mut r, &mut b, "real32 payload")?;
                    v.push(f32::from_le_bytes(b));
                }
                ArrayData::Real32(v)
            }
            DTYPE_REAL64 => {
                let mut v = Vec::with_capacity(numel);
                let mut b = [0u8; 8];
                for _ in 0..numel {
                    read_exact(&mut r, &mut b, "real64 payload")?;
                    v.push(f64::from_le_bytes(b));
                }
                ArrayData::Real64(v)
            }
            DTYPE_UINT8 => {
                let mut v = vec![0u8; numel];
                read_exact(&mut r, &mut v, "uint8 payload")?;
                ArrayData::Uint8(v)
            }
            DTYPE_COMPLEX128 => {
                let mut v = Vec::with_capacity(numel);
                let mut b = [0u8; 8];
                for _ in 0..numel {
                    read_exact(&mut r, &mut b, "complex payload")?;
                    let re = f64::from_le_bytes(b);
                    read_exact(&mut r, &mut b, "complex payload")?;
                    let im = f64::from_le_bytes(b);
                    v.push(Complex64::new(re, im));
                }
                ArrayData::Complex128(v)
            }
            other => return Err(Error::ContainerUnknownDtype(other)),
        };
        arrays.push(NamedArray { name, shape, data });
    }
    Ok(Container { arrays })
}
